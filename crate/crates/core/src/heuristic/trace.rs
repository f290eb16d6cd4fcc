use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

/// One line of the search trace. Iteration 0 is the starting solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Best objective so far.
    pub best: f64,
    /// Objective of the current solution after this iteration.
    pub current: f64,
    /// Seconds since the start of the run.
    pub time: f64,
    /// Integer variable ids whose value changed in the move to the new current.
    pub modified: Vec<usize>,
}

/// Writes one JSON object per line.
pub fn write_trace<W: Write>(out: &mut W, trace: &[TraceEntry]) -> std::io::Result<()> {
    for e in trace {
        serde_json::to_writer(&mut *out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(input: R) -> std::io::Result<Vec<TraceEntry>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(std::io::Error::other)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let trace = vec![
            TraceEntry {
                iteration: 0,
                best: 1.25,
                current: 1.25,
                time: 0.0,
                modified: vec![],
            },
            TraceEntry {
                iteration: 1,
                best: 1.5,
                current: 1.375,
                time: 0.01,
                modified: vec![3, 9],
            },
        ];
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        assert_eq!(String::from_utf8_lossy(&buf).lines().count(), 2);
        assert_eq!(read_trace(&buf[..]).unwrap(), trace);
    }
}
