//! Seeded experiment matrices and their CSV/JSON output.
//!
//! Summary CSV columns, in order:
//!
//! `rows, cols, instance_seed, variant, iter, sl, maxtt, ils, rm, rd, rc,
//! runs, avg, worst, best, avg_time, exact_of, exact_status, exact_time,
//! build_time, error`
//!
//! Raw points CSV columns, in order:
//!
//! `rows, cols, instance_seed, variant, iter, sl, maxtt, ils, rm, rd, rc,
//! repetition, seed, objective, first, time, audit`
//!
//! Timing columns are `avg_time`, `exact_time`, `build_time` and `time`;
//! every other column is a function of the experiment spec alone.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heuristic::{tsilp, HeuristicConfig, TraceEntry, Variant};
use crate::instance::generate_instance;
use crate::model::{audit_solution, build_model, MilpModel};
use crate::network::{build_grid, fundamental_cycle_basis, GridNetwork};
use crate::solver::{branch_and_bound, SolveLimits};

/// Parameter settings of the small-instance experiments, as
/// `(iter, sl, maxtt, iLS, rm, rd, rC)`.
pub const TABLE_SETTINGS: [[usize; 7]; 4] = [
    [10, 5, 3, 5, 2, 2, 2],
    [10, 5, 3, 10, 2, 2, 2],
    [30, 10, 3, 10, 4, 4, 4],
    [50, 10, 3, 20, 4, 4, 4],
];

/// Audit tolerance applied to every heuristic run.
pub const AUDIT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// `(rows, cols)` grid sizes.
    pub sizes: Vec<(usize, usize)>,
    /// One generated instance per seed and size.
    pub instance_seeds: Vec<u64>,
    /// `(iter, sl, maxtt, iLS, rm, rd, rC)` settings.
    pub configs: Vec<[usize; 7]>,
    pub variants: Vec<Variant>,
    pub repetitions: usize,
    /// Repetition `k` runs with seed `run_seed + k`.
    #[serde(default)]
    pub run_seed: u64,
    #[serde(default)]
    pub exact: bool,
    /// Seconds; `None` is unlimited.
    #[serde(default)]
    pub exact_time_limit: Option<f64>,
    #[serde(default = "yes")]
    pub tighten: bool,
    #[serde(default)]
    pub candidate_seconds: Option<f64>,
    #[serde(default)]
    pub release_seconds: Option<f64>,
}

fn yes() -> bool {
    true
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ReportError> {
        if self.repetitions == 0 {
            return Err(ReportError::Spec("repetitions must be at least 1".into()));
        }
        for &(r, c) in &self.sizes {
            build_grid(r, c).map_err(|e| ReportError::Spec(e.to_string()))?;
        }
        let mut seeds = self.instance_seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.instance_seeds.len() {
            return Err(ReportError::Spec("instance seeds must be distinct".into()));
        }
        Ok(())
    }

    pub fn run_seeds(&self) -> Vec<u64> {
        (0..self.repetitions as u64).map(|k| self.run_seed.wrapping_add(k)).collect()
    }

    fn heuristic_config(&self, params: [usize; 7], variant: Variant, seed: u64) -> HeuristicConfig {
        let mut cfg = HeuristicConfig::new(variant, params, seed);
        if let Some(s) = self.candidate_seconds {
            cfg.candidate_seconds = s;
        }
        if let Some(s) = self.release_seconds {
            cfg.release_seconds = s;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub rows: usize,
    pub cols: usize,
    pub instance_seed: u64,
    pub variant: Variant,
    pub params: [usize; 7],
    /// Successful runs aggregated below.
    pub runs: usize,
    pub avg: Option<f64>,
    pub worst: Option<f64>,
    pub best: Option<f64>,
    /// Mean wall seconds per run, first feasible search included.
    pub avg_time: Option<f64>,
    pub exact_objective: Option<f64>,
    pub exact_status: Option<String>,
    pub exact_time: Option<f64>,
    /// Model construction seconds, kept out of the run times.
    pub build_time: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPoint {
    pub rows: usize,
    pub cols: usize,
    pub instance_seed: u64,
    pub variant: Variant,
    pub params: [usize; 7],
    pub repetition: usize,
    pub seed: u64,
    pub objective: f64,
    pub first: f64,
    pub time: f64,
    pub audit_passed: bool,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub rows: Vec<ResultRow>,
    pub points: Vec<RawPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

struct Exact {
    objective: Option<f64>,
    status: String,
    time: f64,
}

fn solve_exact(model: &MilpModel<f64>, limit: Option<f64>) -> Exact {
    let mut limits = SolveLimits::none();
    if let Some(s) = limit {
        limits = limits.with_time_limit(Duration::from_secs_f64(s.max(0.0)));
    }
    let sol = branch_and_bound(model, &limits);
    if sol.status.has_solution() && !audit_solution(model, &sol, AUDIT_TOL).passed {
        warn!("exact solution failed the audit");
    }
    Exact {
        objective: sol.status.has_solution().then(|| sol.objective),
        status: format!("{:?}", sol.status),
        time: sol.stats.wall_time,
    }
}

/// Runs every `(size, instance, config, variant)` cell in spec order.
pub fn run_experiments(spec: &ExperimentSpec) -> Result<ResultSet, ReportError> {
    spec.validate()?;
    let mut out = ResultSet::default();
    for &(r, c) in &spec.sizes {
        let net: GridNetwork = build_grid(r, c).map_err(|e| ReportError::Spec(e.to_string()))?;
        let basis = fundamental_cycle_basis(&net);
        for &iseed in &spec.instance_seeds {
            let inst = generate_instance(&net, iseed);
            let t0 = Instant::now();
            let built = build_model::<f64>(&inst, &basis, spec.tighten);
            let build_time = t0.elapsed().as_secs_f64();
            let model = match built {
                Ok(m) => m,
                Err(e) => {
                    for &params in &spec.configs {
                        for &variant in &spec.variants {
                            out.rows.push(failed_row(r, c, iseed, variant, params, build_time, e.to_string()));
                        }
                    }
                    continue;
                }
            };
            let exact = spec.exact.then(|| solve_exact(&model, spec.exact_time_limit));
            for &params in &spec.configs {
                for &variant in &spec.variants {
                    info!("{r}x{c} instance {iseed} {} {params:?}", variant.name());
                    let mut points = Vec::new();
                    let mut error = None;
                    for (k, seed) in spec.run_seeds().into_iter().enumerate() {
                        let cfg = spec.heuristic_config(params, variant, seed);
                        match tsilp(&model, &cfg) {
                            Ok(res) => points.push(RawPoint {
                                rows: r,
                                cols: c,
                                instance_seed: iseed,
                                variant,
                                params,
                                repetition: k,
                                seed,
                                objective: res.best.objective,
                                first: res.first.objective,
                                time: res.wall_time,
                                audit_passed: audit_solution(&model, &res.best, AUDIT_TOL).passed,
                                trace: res.trace,
                            }),
                            Err(e) => error = Some(e.to_string()),
                        }
                    }
                    let mut row = summarize(r, c, iseed, variant, params, &points);
                    row.build_time = build_time;
                    row.error = error;
                    if let Some(ex) = &exact {
                        row.exact_objective = ex.objective;
                        row.exact_status = Some(ex.status.clone());
                        row.exact_time = Some(ex.time);
                    }
                    out.rows.push(row);
                    out.points.extend(points);
                }
            }
        }
    }
    Ok(out)
}

fn failed_row(
    rows: usize,
    cols: usize,
    instance_seed: u64,
    variant: Variant,
    params: [usize; 7],
    build_time: f64,
    error: String,
) -> ResultRow {
    ResultRow {
        build_time,
        error: Some(error),
        ..summarize(rows, cols, instance_seed, variant, params, &[])
    }
}

/// Aggregates raw points into one row; exact and timing-of-build fields are
/// left for the caller.
pub fn summarize(
    rows: usize,
    cols: usize,
    instance_seed: u64,
    variant: Variant,
    params: [usize; 7],
    points: &[RawPoint],
) -> ResultRow {
    let n = points.len();
    let (avg, worst, best, avg_time) = if n == 0 {
        (None, None, None, None)
    } else {
        let of: Vec<f64> = points.iter().map(|p| p.objective).collect();
        (
            Some(of.iter().sum::<f64>() / n as f64),
            of.iter().copied().reduce(f64::min),
            of.iter().copied().reduce(f64::max),
            Some(points.iter().map(|p| p.time).sum::<f64>() / n as f64),
        )
    };
    ResultRow {
        rows,
        cols,
        instance_seed,
        variant,
        params,
        runs: n,
        avg,
        worst,
        best,
        avg_time,
        exact_objective: None,
        exact_status: None,
        exact_time: None,
        build_time: 0.0,
        error: None,
    }
}

#[derive(Serialize)]
struct SummaryRecord<'a> {
    rows: usize,
    cols: usize,
    instance_seed: u64,
    variant: &'static str,
    iter: usize,
    sl: usize,
    maxtt: usize,
    ils: usize,
    rm: usize,
    rd: usize,
    rc: usize,
    runs: usize,
    avg: Option<f64>,
    worst: Option<f64>,
    best: Option<f64>,
    avg_time: Option<f64>,
    exact_of: Option<f64>,
    exact_status: Option<&'a str>,
    exact_time: Option<f64>,
    build_time: f64,
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct PointRecord {
    rows: usize,
    cols: usize,
    instance_seed: u64,
    variant: &'static str,
    iter: usize,
    sl: usize,
    maxtt: usize,
    ils: usize,
    rm: usize,
    rd: usize,
    rc: usize,
    repetition: usize,
    seed: u64,
    objective: f64,
    first: f64,
    time: f64,
    audit: bool,
}

pub const SUMMARY_COLUMNS: [&str; 21] = [
    "rows", "cols", "instance_seed", "variant", "iter", "sl", "maxtt", "ils", "rm", "rd", "rc", "runs", "avg",
    "worst", "best", "avg_time", "exact_of", "exact_status", "exact_time", "build_time", "error",
];

pub const POINT_COLUMNS: [&str; 17] = [
    "rows", "cols", "instance_seed", "variant", "iter", "sl", "maxtt", "ils", "rm", "rd", "rc", "repetition",
    "seed", "objective", "first", "time", "audit",
];

/// Columns that hold wall-clock measurements.
pub const TIMING_COLUMNS: [&str; 4] = ["avg_time", "exact_time", "build_time", "time"];

fn csv_writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>, ReportError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

pub fn write_summary_csv<W: Write>(results: &ResultSet, out: W) -> Result<(), ReportError> {
    let mut w = csv_writer(out, &SUMMARY_COLUMNS)?;
    for r in &results.rows {
        let [iter, sl, maxtt, ils, rm, rd, rc] = r.params;
        w.serialize(SummaryRecord {
            rows: r.rows,
            cols: r.cols,
            instance_seed: r.instance_seed,
            variant: r.variant.name(),
            iter,
            sl,
            maxtt,
            ils,
            rm,
            rd,
            rc,
            runs: r.runs,
            avg: r.avg,
            worst: r.worst,
            best: r.best,
            avg_time: r.avg_time,
            exact_of: r.exact_objective,
            exact_status: r.exact_status.as_deref(),
            exact_time: r.exact_time,
            build_time: r.build_time,
            error: r.error.as_deref(),
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_points_csv<W: Write>(results: &ResultSet, out: W) -> Result<(), ReportError> {
    let mut w = csv_writer(out, &POINT_COLUMNS)?;
    for p in &results.points {
        let [iter, sl, maxtt, ils, rm, rd, rc] = p.params;
        w.serialize(PointRecord {
            rows: p.rows,
            cols: p.cols,
            instance_seed: p.instance_seed,
            variant: p.variant.name(),
            iter,
            sl,
            maxtt,
            ils,
            rm,
            rd,
            rc,
            repetition: p.repetition,
            seed: p.seed,
            objective: p.objective,
            first: p.first,
            time: p.time,
            audit: p.audit_passed,
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn to_json(results: &ResultSet) -> Result<String, ReportError> {
    Ok(serde_json::to_string_pretty(results)?)
}

pub fn from_json(text: &str) -> Result<ResultSet, ReportError> {
    Ok(serde_json::from_str(text)?)
}

/// Path of the raw points file written next to a summary CSV.
pub fn points_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    path.with_file_name(format!("{stem}.points.csv"))
}

fn create(path: &Path) -> Result<BufWriter<File>, ReportError> {
    File::create(path).map(BufWriter::new).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `results` to `path`. CSV output also writes the raw points to
/// [`points_path`]; JSON holds everything in one file. Returns the paths
/// written.
pub fn emit(results: &ResultSet, format: Format, path: &Path) -> Result<Vec<PathBuf>, ReportError> {
    match format {
        Format::Csv => {
            write_summary_csv(results, create(path)?)?;
            let points = points_path(path);
            write_points_csv(results, create(&points)?)?;
            Ok(vec![path.to_path_buf(), points])
        }
        Format::Json => {
            let mut f = create(path)?;
            let io = |source| ReportError::Io {
                path: path.to_path_buf(),
                source,
            };
            f.write_all(to_json(results)?.as_bytes()).map_err(io)?;
            f.flush().map_err(io)?;
            Ok(vec![path.to_path_buf()])
        }
    }
}

/// Drops timing columns from CSV text, for determinism checks.
pub fn strip_timing_columns(csv_text: &str) -> Result<String, ReportError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(csv_text.as_bytes());
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut keep: Vec<bool> = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        if k == 0 {
            keep = record.iter().map(|n| !TIMING_COLUMNS.contains(&n)).collect();
        }
        writer.write_record(record.iter().zip(&keep).filter(|(_, k)| **k).map(|(f, _)| f))?;
    }
    let bytes = writer.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(objective: f64, time: f64) -> RawPoint {
        RawPoint {
            rows: 2,
            cols: 2,
            instance_seed: 1,
            variant: Variant::Lsu,
            params: [1, 1, 1, 1, 1, 1, 1],
            repetition: 0,
            seed: 0,
            objective,
            first: objective,
            time,
            audit_passed: true,
            trace: Vec::new(),
        }
    }

    #[test]
    fn empty_result_set_gives_header_only_csv() {
        let mut buf = Vec::new();
        write_summary_csv(&ResultSet::default(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, format!("{}\n", SUMMARY_COLUMNS.join(",")));
        let mut buf = Vec::new();
        write_points_csv(&ResultSet::default(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn summary_orders_worst_avg_best() {
        let pts = [point(3.0, 1.0), point(1.0, 2.0), point(2.0, 3.0)];
        let row = summarize(2, 2, 1, Variant::Lsu, [1; 7], &pts);
        assert_eq!(row.runs, 3);
        assert_eq!((row.worst, row.avg, row.best), (Some(1.0), Some(2.0), Some(3.0)));
        assert_eq!(row.avg_time, Some(2.0));
    }

    #[test]
    fn single_run_collapses_aggregates() {
        let row = summarize(2, 2, 1, Variant::Lsu, [1; 7], &[point(1.5, 0.1)]);
        assert_eq!(row.avg, row.worst);
        assert_eq!(row.avg, row.best);
    }

    #[test]
    fn timing_columns_are_stripped() {
        let text = "a,time,b\n1,0.5,2\n3,0.7,4\n";
        assert_eq!(strip_timing_columns(text).unwrap(), "a,b\n1,2\n3,4\n");
    }

    #[test]
    fn spec_validation() {
        let spec = ExperimentSpec {
            sizes: vec![(2, 2)],
            instance_seeds: vec![1, 1],
            configs: vec![[1; 7]],
            variants: vec![Variant::Lsu],
            repetitions: 1,
            run_seed: 0,
            exact: false,
            exact_time_limit: None,
            tighten: true,
            candidate_seconds: None,
            release_seconds: None,
        };
        assert!(spec.validate().is_err());
        let spec = ExperimentSpec {
            instance_seeds: vec![1],
            repetitions: 0,
            ..spec
        };
        assert!(spec.validate().is_err());
        let spec = ExperimentSpec { repetitions: 3, ..spec };
        assert!(spec.validate().is_ok());
        assert_eq!(spec.run_seeds(), vec![0, 1, 2]);
    }

    #[test]
    fn points_file_sits_next_to_summary() {
        assert_eq!(points_path(Path::new("/tmp/out/res.csv")), PathBuf::from("/tmp/out/res.points.csv"));
    }
}
