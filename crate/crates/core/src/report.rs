//! Check records shared by library-level verification reports and the CLI.

use serde::Serialize;

/// One verified assertion: its residual, the tolerance it was held to, and
/// whether it passed.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(check: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            residual,
            tolerance,
            pass: residual.is_finite() && residual <= tolerance,
        }
    }
}

/// A set of check records with an aggregate verdict.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
    pub worst_residual: f64,
}

impl CheckReport {
    pub fn from_checks(checks: Vec<CheckRecord>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        let worst_residual = checks.iter().map(|c| c.residual).fold(0.0_f64, |a, b| {
            if b.is_nan() {
                f64::NAN
            } else {
                a.max(b)
            }
        });
        Self {
            checks,
            pass,
            worst_residual,
        }
    }
}
