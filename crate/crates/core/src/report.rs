//! Check records and machine-diffable reports.

use serde::Serialize;

use crate::expr::display::{pretty, to_json};
use crate::expr::eval::OracleOutcome;
use crate::expr::Expr;
use crate::system::{Combination, DifferentialSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub note: String,
    pub verdict: Verdict,
    /// canonical text of the offending residual, when a check fails
    pub residual: Option<String>,
    /// certificate found or verified, as structured entries
    pub certificate: Option<serde_json::Value>,
    pub oracle: Option<OracleOutcome>,
}

impl CheckRecord {
    pub fn passing(name: impl Into<String>, note: impl Into<String>) -> CheckRecord {
        CheckRecord {
            name: name.into(),
            note: note.into(),
            verdict: Verdict::Pass,
            residual: None,
            certificate: None,
            oracle: None,
        }
    }

    pub fn failing(
        name: impl Into<String>,
        note: impl Into<String>,
        residual: Option<String>,
    ) -> CheckRecord {
        CheckRecord {
            name: name.into(),
            note: note.into(),
            verdict: Verdict::Fail,
            residual,
            certificate: None,
            oracle: None,
        }
    }

    pub fn skipped(name: impl Into<String>, note: impl Into<String>) -> CheckRecord {
        CheckRecord {
            name: name.into(),
            note: note.into(),
            verdict: Verdict::Skipped,
            residual: None,
            certificate: None,
            oracle: None,
        }
    }

    pub fn with_oracle(mut self, oracle: OracleOutcome) -> CheckRecord {
        self.oracle = Some(oracle);
        self
    }

    pub fn with_certificate(mut self, value: serde_json::Value) -> CheckRecord {
        self.certificate = Some(value);
        self
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub name: String,
    pub seed: u64,
    pub oracle_points: u32,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl Report {
    pub fn new(name: impl Into<String>, seed: u64, oracle_points: u32) -> Report {
        Report {
            name: name.into(),
            seed,
            oracle_points,
            checks: Vec::new(),
            summary: Summary::default(),
        }
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.summary.total += 1;
        match record.verdict {
            Verdict::Pass => self.summary.passed += 1,
            Verdict::Fail => self.summary.failed += 1,
            Verdict::Skipped => self.summary.skipped += 1,
        }
        self.checks.push(record);
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per check, human readable.
    pub fn render_text(&self, verbose: bool) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "== {} ==", self.name);
        for c in &self.checks {
            let mark = match c.verdict {
                Verdict::Pass => "PASS",
                Verdict::Fail => "FAIL",
                Verdict::Skipped => "SKIP",
            };
            let _ = writeln!(out, "[{mark}] {} — {}", c.name, c.note);
            if let Some(r) = &c.residual {
                let _ = writeln!(out, "       residual: {r}");
            }
            if verbose {
                if let Some(o) = &c.oracle {
                    let _ = writeln!(
                        out,
                        "       oracle: {} points, {} failures",
                        o.points, o.failures
                    );
                }
            }
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "{} checks: {} passed, {} failed, {} skipped",
            s.total, s.passed, s.failed, s.skipped
        );
        out
    }
}

/// Canonical text of an expression in a system's variable names.
pub fn render_expr(sys: &DifferentialSystem, e: &Expr) -> String {
    match e.normalized() {
        Ok(n) => pretty(&n, sys.ctx().indep_names()),
        Err(_) => format!("{e}"),
    }
}

/// Structured JSON for a combination (certificate or multiplier).
pub fn render_combination(sys: &DifferentialSystem, c: &Combination) -> serde_json::Value {
    let names = sys.ctx().indep_names();
    let entries: Vec<serde_json::Value> = c
        .entries
        .iter()
        .map(|((v, j), coeff)| {
            let dirs: Vec<String> = j
                .dirs()
                .iter()
                .map(|d| names[*d as usize].to_string())
                .collect();
            let canon = coeff.normalized().unwrap_or_else(|_| coeff.clone());
            serde_json::json!({
                "equation": sys.names()[*v],
                "index": dirs,
                "coefficient": pretty(&canon, names),
                "tree": to_json(&canon, names),
            })
        })
        .collect();
    serde_json::json!({ "entries": entries })
}
