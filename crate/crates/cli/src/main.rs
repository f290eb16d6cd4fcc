use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::{json, Value};

use maxband::heuristic::{tsilp, write_trace, HeuristicConfig, HeuristicError, Variant};
use maxband::instance::{generate_instance, read_instance, write_instance, Instance};
use maxband::model::{audit_solution, build_model, write_mps};
use maxband::network::{build_grid, fundamental_cycle_basis, CycleBasis, GridNetwork};
use maxband::report::{emit, run_experiments, ExperimentSpec, Format};
use maxband::solver::{branch_and_bound, SolveLimits, SolveStatus};
use maxband::{Model, Solution};

const AUDIT_TOL: f64 = 1e-6;

/// Exit codes.
const OK: u8 = 0;
const FAILURE: u8 = 1;
const INFEASIBLE: u8 = 2;
const BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "maxband", version, about = "Maximal-bandwidth signal coordination on grid networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance.
    Gen(GenArgs),
    /// Run the tabu search on an instance.
    Solve(SolveArgs),
    /// Solve an instance exactly by branch-and-bound.
    Exact(ExactArgs),
    /// Run an experiment matrix and write summary and raw points.
    Bench(BenchArgs),
    /// Write the model of an instance in free MPS format.
    Export(ExportArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, required_unless_present = "signals")]
    rows: Option<usize>,
    #[arg(long, required_unless_present = "signals")]
    cols: Option<usize>,
    /// Single artery with this many signals instead of a grid.
    #[arg(long, conflicts_with_all = ["rows", "cols"])]
    signals: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the cycle basis as JSON (`-` for stdout).
    #[arg(long)]
    dump_basis: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Leave the integer variables without the derived bounds.
    #[arg(long)]
    no_tighten: bool,
    /// Write the cycle basis as JSON (`-` for stdout).
    #[arg(long)]
    dump_basis: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "lsvns")]
    variant: Variant,
    #[arg(long, default_value_t = 30)]
    iter: usize,
    #[arg(long, default_value_t = 10)]
    sl: usize,
    #[arg(long, default_value_t = 3)]
    maxtt: usize,
    #[arg(long, default_value_t = 10)]
    ils: usize,
    #[arg(long, default_value_t = 4)]
    rm: usize,
    #[arg(long, default_value_t = 4)]
    rd: usize,
    #[arg(long, default_value_t = 4)]
    rc: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seconds per candidate sub-solve.
    #[arg(long, default_value_t = 10.0)]
    candidate_seconds: f64,
    /// Seconds per release round of the local search.
    #[arg(long, default_value_t = 30.0)]
    release_seconds: f64,
    /// Seconds for the initial feasible search.
    #[arg(long)]
    first_seconds: Option<f64>,
    /// Evaluate candidates in parallel.
    #[arg(long)]
    parallel: bool,
    /// Write the per-iteration trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the solution as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
    /// Write the solution as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Output format; defaults to the extension of `--out`.
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Exact(a) => exact(a),
        Command::Bench(a) => bench(a),
        Command::Export(a) => export(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(FAILURE)
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if path == Path::new("-") {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())?;
        out.write_all(b"\n")?;
        return Ok(());
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn dump_basis(basis: &CycleBasis, path: &Option<PathBuf>) -> Result<()> {
    if let Some(p) = path {
        write_text(p, &basis.to_json())?;
    }
    Ok(())
}

fn gen(a: GenArgs) -> Result<u8> {
    let net = match (a.signals, a.rows, a.cols) {
        (Some(n), _, _) => GridNetwork::single_artery(n)?,
        (None, Some(r), Some(c)) => build_grid(r, c)?,
        _ => bail!("either --signals or both --rows and --cols are required"),
    };
    let inst = generate_instance(&net, a.seed);
    write_instance(&inst, &a.out)?;
    dump_basis(&fundamental_cycle_basis(&net), &a.dump_basis)?;
    info!("wrote {}", a.out.display());
    Ok(OK)
}

fn load_model(a: &ModelArgs) -> Result<(Instance, Model)> {
    let inst = read_instance(&a.instance)?;
    let basis = fundamental_cycle_basis(&inst.network);
    dump_basis(&basis, &a.dump_basis)?;
    let model = build_model::<f64>(&inst, &basis, !a.no_tighten)?;
    Ok((inst, model))
}

fn solution_json(model: &Model, sol: &Solution) -> Value {
    let values: serde_json::Map<String, Value> = model
        .variables
        .iter()
        .zip(&sol.values)
        .map(|(v, x)| (v.name.clone(), json!(x)))
        .collect();
    let audit = (!sol.values.is_empty()).then(|| audit_solution(model, sol, AUDIT_TOL));
    json!({
        "status": sol.status,
        "objective": sol.status.has_solution().then_some(sol.objective),
        "stats": sol.stats,
        "audit": audit,
        "values": values,
    })
}

fn report_solution(model: &Model, sol: &Solution, out: &Option<PathBuf>, extra: Value) -> Result<()> {
    let mut doc = solution_json(model, sol);
    if let (Value::Object(d), Value::Object(e)) = (&mut doc, extra) {
        d.extend(e);
    }
    if let Some(p) = out {
        write_text(p, &serde_json::to_string_pretty(&doc)?)?;
    }
    let audit = doc["audit"]["passed"].as_bool();
    let summary = json!({
        "status": doc["status"],
        "objective": doc["objective"],
        "first": doc.get("first").cloned().unwrap_or(Value::Null),
        "wall_time": doc.get("wall_time").cloned().unwrap_or(sol.stats.wall_time.into()),
        "nodes": sol.stats.nodes,
        "audit_passed": audit,
    });
    println!("{summary}");
    Ok(())
}

fn status_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Optimal => OK,
        SolveStatus::Feasible | SolveStatus::LimitReached => BUDGET,
        SolveStatus::Infeasible => INFEASIBLE,
        SolveStatus::Unbounded => FAILURE,
    }
}

fn solve(a: SolveArgs) -> Result<u8> {
    let (_, model) = load_model(&a.model)?;
    let mut cfg = HeuristicConfig::new(a.variant, [a.iter, a.sl, a.maxtt, a.ils, a.rm, a.rd, a.rc], a.seed);
    cfg.candidate_seconds = a.candidate_seconds;
    cfg.release_seconds = a.release_seconds;
    cfg.first_seconds = a.first_seconds;
    cfg.parallel = a.parallel;
    let res = match tsilp(&model, &cfg) {
        Ok(r) => r,
        Err(HeuristicError::NoFeasible(status)) => {
            eprintln!("no feasible starting solution ({status:?})");
            return Ok(match status {
                SolveStatus::Infeasible => INFEASIBLE,
                SolveStatus::Unbounded => FAILURE,
                _ => BUDGET,
            });
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(p) = &a.trace {
        let mut f = BufWriter::new(fs::File::create(p).with_context(|| format!("writing {}", p.display()))?);
        write_trace(&mut f, &res.trace)?;
        f.flush()?;
    }
    let extra = json!({
        "first": res.first.objective,
        "wall_time": res.wall_time,
        "config": cfg,
    });
    report_solution(&model, &res.best, &a.out, extra)?;
    Ok(OK)
}

fn exact(a: ExactArgs) -> Result<u8> {
    let (_, model) = load_model(&a.model)?;
    let mut limits = SolveLimits::none();
    if let Some(s) = a.time_limit {
        limits = limits.with_time_limit(Duration::from_secs_f64(s.max(0.0)));
    }
    if let Some(n) = a.node_limit {
        limits = limits.with_node_limit(n);
    }
    let sol = branch_and_bound(&model, &limits);
    report_solution(&model, &sol, &a.out, json!({}))?;
    Ok(status_code(sol.status))
}

fn bench(a: BenchArgs) -> Result<u8> {
    let text = fs::read_to_string(&a.spec).with_context(|| format!("reading {}", a.spec.display()))?;
    let spec: ExperimentSpec = serde_json::from_str(&text).context("parsing experiment spec")?;
    let format = match a.format {
        Some(f) => f,
        None => match a.out.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Csv,
        },
    };
    let results = run_experiments(&spec)?;
    for p in emit(&results, format, &a.out)? {
        println!("{}", p.display());
    }
    Ok(OK)
}

fn export(a: ExportArgs) -> Result<u8> {
    let (inst, model) = load_model(&a.model)?;
    let name = format!("maxband_{}x{}", inst.network.rows(), inst.network.cols());
    write_text(&a.out, &write_mps(&model, &name))?;
    Ok(OK)
}
