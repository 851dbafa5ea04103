//! Estimates with confidence intervals and optional pass/fail gates.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const REPORT_SCHEMA: u32 = 1;

/// How an estimate is compared with its target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Gate {
    /// `|value - target| / |target| < tolerance`.
    Relative { target: f64, tolerance: f64 },
    /// `|value - target| < tolerance`.
    Absolute { target: f64, tolerance: f64 },
    /// `lo ≤ value ≤ hi`.
    Range { lo: f64, hi: f64 },
    /// `value < bound`.
    Below { bound: f64 },
    /// `value > bound`.
    Above { bound: f64 },
}

impl Gate {
    pub fn check(&self, value: f64) -> bool {
        match *self {
            Gate::Relative { target, tolerance } => ((value - target) / target).abs() < tolerance,
            Gate::Absolute { target, tolerance } => (value - target).abs() < tolerance,
            Gate::Range { lo, hi } => value >= lo && value <= hi,
            Gate::Below { bound } => value < bound,
            Gate::Above { bound } => value > bound,
        }
    }

    /// Same gate with its tolerance replaced (range and bound gates are unchanged).
    pub fn with_tolerance(self, tol: f64) -> Gate {
        match self {
            Gate::Relative { target, .. } => Gate::Relative { target, tolerance: tol },
            Gate::Absolute { target, .. } => Gate::Absolute { target, tolerance: tol },
            g => g,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: u64,
    pub gate: Option<Gate>,
    pub pass: Option<bool>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Estimate {
    pub fn new(name: &str, value: f64, ci: (f64, f64), samples: u64) -> Self {
        Estimate { name: name.into(), value, ci_low: ci.0, ci_high: ci.1, samples, gate: None, pass: None, note: String::new() }
    }

    pub fn gated(mut self, gate: Gate) -> Self {
        self.pass = Some(gate.check(self.value));
        self.gate = Some(gate);
        self
    }

    pub fn note(mut self, note: &str) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub experiment: String,
    pub manifest_hash: String,
    pub estimates: Vec<Estimate>,
}

impl Report {
    pub fn new(experiment: &str, manifest_hash: &str) -> Self {
        Report { schema: REPORT_SCHEMA, experiment: experiment.into(), manifest_hash: manifest_hash.into(), estimates: Vec::new() }
    }

    pub fn push(&mut self, e: Estimate) {
        self.estimates.push(e);
    }

    /// False as soon as one gated estimate fails.
    pub fn pass(&self) -> bool {
        self.estimates.iter().all(|e| e.pass != Some(false))
    }

    /// Pretty JSON with a trailing newline. Field order is fixed by the struct layout.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gates() {
        assert!(Gate::Relative { target: 2.0, tolerance: 0.1 }.check(2.1));
        assert!(!Gate::Relative { target: 2.0, tolerance: 0.1 }.check(2.3));
        assert!(Gate::Range { lo: 0.95, hi: 1.05 }.check(1.0));
        assert!(Gate::Below { bound: 0.15 }.check(0.1));
    }

    #[test]
    fn report_pass_ignores_ungated() {
        let mut r = Report::new("x", "h");
        r.push(Estimate::new("a", 1.0, (0.9, 1.1), 10));
        r.push(Estimate::new("b", 1.0, (0.9, 1.1), 10).gated(Gate::Above { bound: 0.5 }));
        assert!(r.pass());
        r.push(Estimate::new("c", 1.0, (0.9, 1.1), 10).gated(Gate::Below { bound: 0.5 }));
        assert!(!r.pass());
    }
}
