//! Expected-order assertions for convergence studies.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::study::ConvergenceRow;
use crate::CliError;

/// Checks applied to the finest-K row of each `(alpha, N)` group.
/// Table-level thresholds apply to every entry that carries the matching
/// reference value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Targets {
    pub description: String,
    /// `|order - reference_order| ≤ order_tolerance`.
    #[serde(default)]
    pub order_tolerance: Option<f64>,
    /// `order ≥ N + min_order_above_degree`.
    #[serde(default)]
    pub min_order_above_degree: Option<f64>,
    /// `reference_error / f ≤ error ≤ reference_error · f`.
    #[serde(default)]
    pub error_factor: Option<f64>,
    pub entries: Vec<TargetEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub alpha: f64,
    #[serde(rename = "N")]
    pub degree: usize,
    /// 1-based equation index (coupled systems).
    #[serde(default = "first")]
    pub component: usize,
    #[serde(default)]
    pub reference_order: Option<f64>,
    #[serde(default)]
    pub reference_error: Option<f64>,
    #[serde(default)]
    pub min_order: Option<f64>,
}

fn first() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryResult {
    pub alpha: f64,
    #[serde(rename = "N")]
    pub degree: usize,
    pub component: usize,
    #[serde(rename = "K")]
    pub cells: Option<usize>,
    pub order: Option<f64>,
    pub error: Option<f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetReport {
    pub description: String,
    pub entries: Vec<EntryResult>,
    pub pass: bool,
}

impl Targets {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read targets {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("targets: {e}")))
    }

    pub fn evaluate(&self, rows: &[ConvergenceRow]) -> TargetReport {
        let entries: Vec<EntryResult> = self.entries.iter().map(|e| self.evaluate_entry(e, rows)).collect();
        TargetReport {
            description: self.description.clone(),
            pass: entries.iter().all(|e| e.pass),
            entries,
        }
    }

    fn evaluate_entry(&self, e: &TargetEntry, rows: &[ConvergenceRow]) -> EntryResult {
        let eq = e.component.saturating_sub(1);
        let finest = rows
            .iter()
            .filter(|r| (r.alpha - e.alpha).abs() < 1e-12 && r.degree == e.degree && eq < r.errors.len())
            .max_by_key(|r| r.cells);
        let mut checks = Vec::new();
        let (order, error) = match finest {
            Some(r) => (r.orders[eq], Some(r.errors[eq])),
            None => (None, None),
        };
        let mut check = |name: &str, pass: bool, detail: String| {
            checks.push(Check {
                name: name.into(),
                pass,
                detail,
            })
        };
        match order {
            None => check("data", false, "no finest-pair order available".into()),
            Some(o) => {
                if let Some(m) = e.min_order {
                    check("min_order", o >= m, format!("{o:.3} >= {m}"));
                }
                if let Some(d) = self.min_order_above_degree {
                    let m = e.degree as f64 + d;
                    check("min_order_above_degree", o >= m, format!("{o:.3} >= {m}"));
                }
                if let (Some(tol), Some(r)) = (self.order_tolerance, e.reference_order) {
                    check("order_tolerance", (o - r).abs() <= tol, format!("|{o:.3} - {r}| <= {tol}"));
                }
            }
        }
        if let (Some(f), Some(r), Some(err)) = (self.error_factor, e.reference_error, error) {
            let ratio = err / r;
            check(
                "error_factor",
                ratio >= 1.0 / f && ratio <= f,
                format!("{err:.3e} / {r:.3e} = {ratio:.3}"),
            );
        }
        EntryResult {
            alpha: e.alpha,
            degree: e.degree,
            component: e.component,
            cells: finest.map(|r| r.cells),
            order,
            error,
            pass: checks.iter().all(|c| c.pass),
            checks,
        }
    }
}

impl TargetReport {
    /// One line per entry.
    pub fn lines(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| {
                let checks: Vec<String> = e
                    .checks
                    .iter()
                    .map(|c| format!("{}[{}]: {}", c.name, if c.pass { "ok" } else { "FAIL" }, c.detail))
                    .collect();
                format!(
                    "{} alpha={} N={} u{}: {}",
                    if e.pass { "PASS" } else { "FAIL" },
                    e.alpha,
                    e.degree,
                    e.component,
                    checks.join("; ")
                )
            })
            .collect()
    }
}
