use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write;

use cstarcat::{Check, Report};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &str, bytes: &[u8]) -> Self {
        InputDigest { path: path.to_string(), sha256: hex::encode(Sha256::digest(bytes)) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliReport {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    pub timing_seconds: f64,
}

impl CliReport {
    pub fn new(command: impl Into<String>, inputs: Vec<InputDigest>, report: Report, timing_seconds: f64) -> Self {
        let verdict = if report.passed() { Verdict::Pass } else { Verdict::Fail };
        CliReport { command: command.into(), inputs, verdict, checks: report.checks, timing_seconds }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{}: {verdict} ({:.3}s)", self.command, self.timing_seconds);
        for i in &self.inputs {
            let _ = writeln!(s, "  input {} sha256={}", i.path, i.sha256);
        }
        for c in &self.checks {
            let _ = writeln!(s, "  {c}");
        }
        s
    }
}
