//! Batch driver: single runs, convergence studies, flux diagnostics.

pub mod config;
pub mod output;
pub mod study;
pub mod targets;

use fracddg::FracError;

pub use config::{AdmissibilityConfig, RunConfig};
pub use study::{admissibility, converge, run, ConvergenceRow, RunSummary};

/// Failure of a CLI operation, classified by exit code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    /// Schema violation, bad parameter, unknown name, unreadable input.
    #[error("configuration error: {0}")]
    Config(String),
    /// Non-finite state or other numerical breakdown.
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Output(_) => 2,
            Self::Numeric(_) => 3,
        }
    }
}

impl From<FracError> for CliError {
    fn from(e: FracError) -> Self {
        match e {
            FracError::Integration { .. } | FracError::Domain(_) => Self::Numeric(e.to_string()),
            FracError::Io(m) => Self::Output(m),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Output(e.to_string())
    }
}

/// `order_i = log(e_{i-1}/e_i) / log(h_{i-1}/h_i)` for `i ≥ 1`.
pub fn compute_order(errors: &[f64], h: &[f64]) -> Result<Vec<f64>, FracError> {
    if errors.len() != h.len() || errors.len() < 2 {
        return Err(FracError::Data(format!(
            "need equal-length lists of at least two entries, got {} errors and {} sizes",
            errors.len(),
            h.len()
        )));
    }
    if let Some(e) = errors.iter().chain(h).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(FracError::Data(format!("entries must be positive and finite, got {e}")));
    }
    errors
        .windows(2)
        .zip(h.windows(2))
        .map(|(e, h)| {
            if h[0] == h[1] {
                return Err(FracError::Data("consecutive mesh sizes are equal".into()));
            }
            Ok((e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        })
        .collect()
}

/// Fixed 17-significant-digit rendering used in every output file.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_examples() {
        assert_eq!(compute_order(&[8.0, 1.0], &[2.0, 1.0]).unwrap(), vec![3.0]);
        let o = compute_order(&[7.65e-4, 2.16e-4], &[1.0 / 32.0, 1.0 / 64.0]).unwrap();
        assert!((o[0] - 1.82).abs() < 5e-3, "{o:?}");
        assert_eq!(compute_order(&[1e-3, 1e-3], &[0.1, 0.05]).unwrap(), vec![0.0]);
        let o = compute_order(&[1e-2, 2.5e-3], &[1.0 / 16.0, 1.0 / 32.0]).unwrap();
        assert!((o[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn order_rejects_bad_data() {
        assert!(matches!(compute_order(&[1.0, 0.0], &[1.0, 0.5]), Err(FracError::Data(_))));
        assert!(compute_order(&[1.0], &[1.0]).is_err());
        assert!(compute_order(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn exit_codes() {
        let num: CliError = FracError::Integration { t: 0.1, reason: "nan".into() }.into();
        assert_eq!(num.exit_code(), 3);
        let cfg: CliError = FracError::UnknownName("x".into()).into();
        assert_eq!(cfg.exit_code(), 2);
    }
}
