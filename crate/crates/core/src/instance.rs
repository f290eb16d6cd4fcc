//! MAXBAND instance data, the seeded random generator, and the JSON instance
//! file.
//!
//! Times attached to signals (red, left-turn, advancement) are fractions of the
//! period; lengths are metres, speeds metres/second, reciprocal-speed change
//! limits seconds/metre, and the period bounds `T1`/`T2` seconds.

use std::fs;
use std::path::Path;

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{GridNetwork, NetworkError, NetworkShape, SignalId};

pub const FORMAT_NAME: &str = "maxband-instance";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("{field} absent (line {line}, column {column})")]
    MissingField {
        field: String,
        line: usize,
        column: usize,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid instance: {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Per-signal timing, outbound and inbound (`_in`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalTiming {
    /// `r`: red time.
    #[serde(rename = "r")]
    pub red: f64,
    #[serde(rename = "r_bar")]
    pub red_in: f64,
    /// `l`: left-turn phase length.
    #[serde(rename = "l")]
    pub left_turn: f64,
    #[serde(rename = "l_bar")]
    pub left_turn_in: f64,
    /// `tau`: advancement of the band on leaving the signal (queue clearance).
    #[serde(rename = "tau")]
    pub advance: f64,
    #[serde(rename = "tau_bar")]
    pub advance_in: f64,
}

/// Per-segment geometry and speed limits, outbound and inbound (`_in`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentData {
    #[serde(rename = "d")]
    pub length: f64,
    #[serde(rename = "d_bar")]
    pub length_in: f64,
    /// `e`: lower speed limit.
    #[serde(rename = "e")]
    pub speed_min: f64,
    /// `f`: upper speed limit.
    #[serde(rename = "f")]
    pub speed_max: f64,
    #[serde(rename = "e_bar")]
    pub speed_min_in: f64,
    #[serde(rename = "f_bar")]
    pub speed_max_in: f64,
    /// `1/h`: lower limit on the change of reciprocal speed into the next segment.
    #[serde(rename = "inv_h")]
    pub recip_change_min: f64,
    /// `1/g`: upper limit on the change of reciprocal speed.
    #[serde(rename = "inv_g")]
    pub recip_change_max: f64,
    #[serde(rename = "inv_h_bar")]
    pub recip_change_min_in: f64,
    #[serde(rename = "inv_g_bar")]
    pub recip_change_max_in: f64,
}

/// Objective weights `k_a`, `k̄_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArteryWeights {
    #[serde(rename = "k")]
    pub outbound: f64,
    #[serde(rename = "k_bar")]
    pub inbound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub network: GridNetwork,
    /// `T1`, seconds.
    pub period_min: f64,
    /// `T2`, seconds.
    pub period_max: f64,
    /// Indexed by global signal index.
    pub signals: Vec<SignalTiming>,
    /// Indexed by edge id.
    pub segments: Vec<SegmentData>,
    pub weights: Vec<ArteryWeights>,
}

impl Instance {
    pub fn signal(&self, artery: usize, index: usize) -> &SignalTiming {
        &self.signals[self.network.signal_index(artery, index)]
    }

    pub fn segment(&self, artery: usize, index: usize) -> &SegmentData {
        &self.segments[self.network.segment_index(artery, index)]
    }

    /// Checks every documented invariant.
    pub fn validate(&self) -> Result<(), InstanceError> {
        let invalid = |field: String, reason: &str| {
            Err(InstanceError::Invalid {
                field,
                reason: reason.to_string(),
            })
        };
        let net = &self.network;
        if self.signals.len() != net.num_signals() {
            return invalid(
                "signals".into(),
                &format!("expected {} entries, found {}", net.num_signals(), self.signals.len()),
            );
        }
        if self.segments.len() != net.num_edges() {
            return invalid(
                "segments".into(),
                &format!("expected {} entries, found {}", net.num_edges(), self.segments.len()),
            );
        }
        if self.weights.len() != net.arteries().len() {
            return invalid(
                "arteries".into(),
                &format!("expected {} entries, found {}", net.arteries().len(), self.weights.len()),
            );
        }
        if !(self.period_min.is_finite() && self.period_min > 0.0) {
            return invalid("T1".into(), "must be positive and finite");
        }
        if !(self.period_max.is_finite() && self.period_max >= self.period_min) {
            return invalid("T2".into(), "must be finite and at least T1");
        }
        for (s, sig) in self.signals.iter().enumerate() {
            for (name, red) in [("r", sig.red), ("r_bar", sig.red_in)] {
                if !(red > 0.0 && red < 1.0) {
                    return invalid(format!("signals[{s}].{name}"), "must lie in (0, 1)");
                }
            }
            for (name, v) in [("l", sig.left_turn), ("l_bar", sig.left_turn_in)] {
                if !(v.is_finite() && v >= 0.0) {
                    return invalid(format!("signals[{s}].{name}"), "must be non-negative");
                }
            }
            for (name, v) in [("tau", sig.advance), ("tau_bar", sig.advance_in)] {
                if !v.is_finite() {
                    return invalid(format!("signals[{s}].{name}"), "must be finite");
                }
            }
        }
        for (e, seg) in self.segments.iter().enumerate() {
            for (name, v) in [("d", seg.length), ("d_bar", seg.length_in)] {
                if !(v.is_finite() && v > 0.0) {
                    return invalid(format!("segments[{e}].{name}"), "must be positive");
                }
            }
            for (lo_name, lo, hi) in [
                ("e", seg.speed_min, seg.speed_max),
                ("e_bar", seg.speed_min_in, seg.speed_max_in),
            ] {
                if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                    return invalid(format!("segments[{e}].{lo_name}"), "need 0 < e <= f");
                }
            }
            for (name, lo, hi) in [
                ("inv_h", seg.recip_change_min, seg.recip_change_max),
                ("inv_h_bar", seg.recip_change_min_in, seg.recip_change_max_in),
            ] {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return invalid(
                        format!("segments[{e}].{name}"),
                        "need finite limits with 1/h <= 1/g",
                    );
                }
            }
        }
        for (a, w) in self.weights.iter().enumerate() {
            for (name, v) in [("k", w.outbound), ("k_bar", w.inbound)] {
                if !(v.is_finite() && v >= 0.0) {
                    return invalid(format!("arteries[{a}].{name}"), "must be non-negative");
                }
            }
        }
        Ok(())
    }
}

/// Uniform draws on top of xoshiro256++ seeded through SplitMix64
/// (`seed_from_u64`). A draw on `[lo, hi)` is `lo + (hi - lo) * u` with
/// `u = (next_u64 >> 11) * 2^-53`.
struct Draws(Xoshiro256PlusPlus);

impl Draws {
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        lo + (hi - lo) * u
    }
}

/// Change-of-reciprocal-speed window used by the generator, seconds/metre.
pub const GENERATED_RECIP_CHANGE: f64 = 0.012;

/// Draws a random instance on `net`.
///
/// Draw order: segment lengths (edge order), then red and left-turn time per
/// signal (signal order), then `T1`, `T2`, then lower and upper speed per
/// segment. Outbound and inbound values coincide; `tau = 0`; all weights 1.
pub fn generate_instance(net: &GridNetwork, seed: u64) -> Instance {
    let mut rng = Draws(Xoshiro256PlusPlus::seed_from_u64(seed));
    let lengths: Vec<f64> = (0..net.num_edges()).map(|_| rng.uniform(140.0, 600.0)).collect();
    let signals = (0..net.num_signals())
        .map(|_| {
            let red = rng.uniform(0.4, 0.6);
            let left_turn = rng.uniform(0.25 * red, 0.38 * red);
            SignalTiming {
                red,
                red_in: red,
                left_turn,
                left_turn_in: left_turn,
                advance: 0.0,
                advance_in: 0.0,
            }
        })
        .collect();
    let period_min = rng.uniform(40.0, 60.0);
    let period_max = rng.uniform(90.0, 110.0);
    let segments = lengths
        .iter()
        .map(|&length| {
            let speed_min = rng.uniform(12.0, 14.0);
            let speed_max = rng.uniform(15.0, 16.0);
            SegmentData {
                length,
                length_in: length,
                speed_min,
                speed_max,
                speed_min_in: speed_min,
                speed_max_in: speed_max,
                recip_change_min: -GENERATED_RECIP_CHANGE,
                recip_change_max: GENERATED_RECIP_CHANGE,
                recip_change_min_in: -GENERATED_RECIP_CHANGE,
                recip_change_max_in: GENERATED_RECIP_CHANGE,
            }
        })
        .collect();
    let weights = vec![
        ArteryWeights {
            outbound: 1.0,
            inbound: 1.0
        };
        net.arteries().len()
    ];
    Instance {
        network: net.clone(),
        period_min,
        period_max,
        signals,
        segments,
        weights,
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Units {
    time: String,
    signal_times: String,
    length: String,
    speed: String,
    recip_speed_change: String,
}

impl Default for Units {
    fn default() -> Self {
        Units {
            time: "s".into(),
            signal_times: "period".into(),
            length: "m".into(),
            speed: "m/s".into(),
            recip_speed_change: "s/m".into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SignalRecord {
    artery: usize,
    index: usize,
    #[serde(flatten)]
    timing: SignalTiming,
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentRecord {
    artery: usize,
    index: usize,
    #[serde(flatten)]
    data: SegmentData,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    format: String,
    version: u32,
    units: Units,
    network: NetworkShape,
    #[serde(rename = "T1")]
    t1: f64,
    #[serde(rename = "T2")]
    t2: f64,
    signals: Vec<SignalRecord>,
    segments: Vec<SegmentRecord>,
    arteries: Vec<ArteryWeights>,
}

fn map_serde_error(err: serde_json::Error) -> InstanceError {
    let message = err.to_string();
    let (line, column) = (err.line(), err.column());
    if let Some(rest) = message.strip_prefix("missing field `") {
        if let Some(end) = rest.find('`') {
            return InstanceError::MissingField {
                field: rest[..end].to_string(),
                line,
                column,
            };
        }
    }
    InstanceError::Parse {
        line,
        column,
        message,
    }
}

/// Serialises an instance to the canonical JSON document.
pub fn instance_to_json(inst: &Instance) -> String {
    let net = &inst.network;
    let signals = net
        .signals()
        .map(|SignalId { artery, index }| SignalRecord {
            artery,
            index,
            timing: *inst.signal(artery, index),
        })
        .collect();
    let segments = net
        .edges()
        .iter()
        .enumerate()
        .map(|(id, e)| SegmentRecord {
            artery: e.artery,
            index: e.segment,
            data: inst.segments[id],
        })
        .collect();
    let file = InstanceFile {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        units: Units::default(),
        network: net.shape(),
        t1: inst.period_min,
        t2: inst.period_max,
        signals,
        segments,
        arteries: inst.weights.clone(),
    };
    serde_json::to_string_pretty(&file).expect("instance serialises")
}

/// Parses and validates an instance document.
pub fn instance_from_json(text: &str) -> Result<Instance, InstanceError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(map_serde_error)?;
    if file.format != FORMAT_NAME {
        return Err(InstanceError::Invalid {
            field: "format".into(),
            reason: format!("expected \"{FORMAT_NAME}\", found \"{}\"", file.format),
        });
    }
    if file.version != FORMAT_VERSION {
        return Err(InstanceError::Invalid {
            field: "version".into(),
            reason: format!("unsupported version {}", file.version),
        });
    }
    let network = GridNetwork::from_shape(file.network)?;
    let mut signals = Vec::with_capacity(file.signals.len());
    for (pos, (rec, expected)) in file.signals.iter().zip(network.signals()).enumerate() {
        if (rec.artery, rec.index) != (expected.artery, expected.index) {
            return Err(InstanceError::Invalid {
                field: format!("signals[{pos}]"),
                reason: format!(
                    "expected signal ({}, {}), found ({}, {})",
                    expected.artery, expected.index, rec.artery, rec.index
                ),
            });
        }
        signals.push(rec.timing);
    }
    if file.signals.len() != network.num_signals() {
        return Err(InstanceError::Invalid {
            field: "signals".into(),
            reason: format!(
                "expected {} entries, found {}",
                network.num_signals(),
                file.signals.len()
            ),
        });
    }
    let mut segments = Vec::with_capacity(file.segments.len());
    for (pos, (rec, edge)) in file.segments.iter().zip(network.edges()).enumerate() {
        if (rec.artery, rec.index) != (edge.artery, edge.segment) {
            return Err(InstanceError::Invalid {
                field: format!("segments[{pos}]"),
                reason: format!(
                    "expected segment ({}, {}), found ({}, {})",
                    edge.artery, edge.segment, rec.artery, rec.index
                ),
            });
        }
        segments.push(rec.data);
    }
    if file.segments.len() != network.num_edges() {
        return Err(InstanceError::Invalid {
            field: "segments".into(),
            reason: format!(
                "expected {} entries, found {}",
                network.num_edges(),
                file.segments.len()
            ),
        });
    }
    let inst = Instance {
        network,
        period_min: file.t1,
        period_max: file.t2,
        signals,
        segments,
        weights: file.arteries,
    };
    inst.validate()?;
    Ok(inst)
}

pub fn write_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    let path = path.as_ref();
    fs::write(path, instance_to_json(inst) + "\n").map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    instance_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_grid;

    fn symmetric_two_by_two() -> Instance {
        let net = build_grid(2, 2).unwrap();
        let signal = SignalTiming {
            red: 0.5,
            red_in: 0.5,
            left_turn: 0.0,
            left_turn_in: 0.0,
            advance: 0.0,
            advance_in: 0.0,
        };
        let segment = SegmentData {
            length: 300.0,
            length_in: 300.0,
            speed_min: 12.0,
            speed_max: 15.0,
            speed_min_in: 12.0,
            speed_max_in: 15.0,
            recip_change_min: -0.01,
            recip_change_max: 0.01,
            recip_change_min_in: -0.01,
            recip_change_max_in: 0.01,
        };
        Instance {
            signals: vec![signal; net.num_signals()],
            segments: vec![segment; net.num_edges()],
            weights: vec![ArteryWeights { outbound: 1.0, inbound: 1.0 }; 4],
            network: net,
            period_min: 50.0,
            period_max: 100.0,
        }
    }

    #[test]
    fn generated_values_follow_the_distributions() {
        let net = build_grid(4, 5).unwrap();
        for seed in 0..20 {
            let inst = generate_instance(&net, seed);
            inst.validate().unwrap();
            assert!((40.0..60.0).contains(&inst.period_min));
            assert!((90.0..110.0).contains(&inst.period_max));
            for s in &inst.signals {
                assert!((0.4..=0.6).contains(&s.red));
                assert!(s.left_turn >= 0.25 * s.red && s.left_turn <= 0.38 * s.red);
                assert!(s.left_turn < s.red);
                assert_eq!((s.advance, s.advance_in), (0.0, 0.0));
                assert_eq!((s.red, s.left_turn), (s.red_in, s.left_turn_in));
            }
            for seg in &inst.segments {
                assert!((140.0..600.0).contains(&seg.length));
                assert!((12.0..14.0).contains(&seg.speed_min));
                assert!((15.0..16.0).contains(&seg.speed_max));
                assert_eq!(seg.length, seg.length_in);
            }
            assert!(inst.weights.iter().all(|w| w.outbound == 1.0 && w.inbound == 1.0));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let net = build_grid(3, 3).unwrap();
        assert_eq!(generate_instance(&net, 42), generate_instance(&net, 42));
        assert_ne!(generate_instance(&net, 42), generate_instance(&net, 43));
    }

    #[test]
    fn missing_t2_is_reported_by_name() {
        let inst = symmetric_two_by_two();
        let mut value: serde_json::Value = serde_json::from_str(&instance_to_json(&inst)).unwrap();
        value.as_object_mut().unwrap().remove("T2");
        let err = instance_from_json(&value.to_string()).unwrap_err();
        match &err {
            InstanceError::MissingField { field, .. } => assert_eq!(field, "T2"),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(err.to_string().starts_with("T2 absent"));
    }

    #[test]
    fn hand_written_symmetric_instance_is_accepted() {
        let inst = symmetric_two_by_two();
        inst.validate().unwrap();
        let back = instance_from_json(&instance_to_json(&inst)).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn invariant_violations_name_the_field() {
        let mut inst = symmetric_two_by_two();
        inst.signals[2].red = 1.2;
        let err = instance_from_json(&instance_to_json(&inst)).unwrap_err();
        assert!(err.to_string().contains("signals[2].r"), "{err}");

        let mut inst = symmetric_two_by_two();
        inst.period_max = 10.0;
        assert!(matches!(inst.validate(), Err(InstanceError::Invalid { field, .. }) if field == "T2"));

        let mut inst = symmetric_two_by_two();
        inst.segments[1].speed_min = 20.0;
        assert!(inst.validate().is_err());
    }

    #[test]
    fn malformed_json_reports_location() {
        let err = instance_from_json("{\"format\": \"maxband-instance\",\n \"version\": }").unwrap_err();
        match err {
            InstanceError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
