use serde::{Deserialize, Serialize};
use std::fmt;

/// One numerical check: passes iff `residual <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        // NaN never passes
        let pass = residual <= threshold;
        Check { name: name.into(), residual, threshold, pass }
    }

    /// Exact (count-valued) comparison encoded as |a - b| <= 0.
    pub fn equal_counts(name: impl Into<String>, a: usize, b: usize) -> Self {
        Check::new(name, (a as f64 - b as f64).abs(), 0.0)
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check::new(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<40} residual={:.3e} threshold={:.3e}",
            if self.pass { "ok  " } else { "FAIL" },
            self.name,
            self.residual,
            self.threshold
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn check(&mut self, name: impl Into<String>, residual: f64, threshold: f64) -> bool {
        let c = Check::new(name, residual, threshold);
        let pass = c.pass;
        self.checks.push(c);
        pass
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    /// Prefixes every check name, for nesting sub-reports.
    pub fn prefixed(mut self, prefix: &str) -> Report {
        for c in &mut self.checks {
            c.name = format!("{prefix}.{}", c.name);
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Keeps the observation with the largest residual-to-threshold ratio.
#[derive(Debug, Clone, Copy, Default)]
pub struct Worst {
    residual: f64,
    threshold: f64,
    seen: bool,
}

impl Worst {
    pub fn new() -> Self {
        Worst::default()
    }

    pub fn observe(&mut self, residual: f64, threshold: f64) {
        let worse = !self.seen
            || residual.is_nan()
            || (residual - threshold) / threshold.max(f64::MIN_POSITIVE)
                > (self.residual - self.threshold) / self.threshold.max(f64::MIN_POSITIVE);
        if worse && !self.residual.is_nan() {
            self.residual = residual;
            self.threshold = threshold;
            self.seen = true;
        }
    }

    pub fn merge(&mut self, other: Worst) {
        if other.seen {
            self.observe(other.residual, other.threshold);
        }
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn check(&self, name: impl Into<String>) -> Check {
        Check::new(name, self.residual, self.threshold)
    }
}
