//! JSON run configuration.

use std::path::{Path, PathBuf};

use fracddg::models::{BoundarySpec, Family, Nonlinearity, ProblemSpec};
use fracddg::FracError;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A named problem (or a bare family name) plus the study grid and
/// optional overrides of the problem's fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Output file stem; defaults to `problem`.
    #[serde(default)]
    pub name: Option<String>,
    pub problem: String,
    pub alpha_list: Vec<f64>,
    #[serde(rename = "N_list")]
    pub n_list: Vec<usize>,
    #[serde(rename = "K_list")]
    pub k_list: Vec<usize>,

    #[serde(default)]
    pub domain: Option<[f64; 2]>,
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub cfl: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub beta0: Option<f64>,
    #[serde(default)]
    pub beta1: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub eps1: Option<f64>,
    #[serde(default)]
    pub eps2: Option<f64>,
    #[serde(default)]
    pub eps3: Option<f64>,
    #[serde(default)]
    pub eps4: Option<f64>,
    #[serde(default)]
    pub varpi1: Option<f64>,
    #[serde(default)]
    pub varpi2: Option<f64>,
    #[serde(default)]
    pub f_nl: Option<[f64; 3]>,
    #[serde(default)]
    pub g_nl: Option<[f64; 3]>,
    #[serde(default)]
    pub ic: Option<String>,
    /// Forcing name; `"none"` removes the preset's forcing.
    #[serde(default)]
    pub forcing: Option<String>,
    /// Exact-solution name; `"none"` removes it.
    #[serde(default)]
    pub exact: Option<String>,
    /// `"homogeneous"` or `"exact"`.
    #[serde(default)]
    pub bc: Option<String>,

    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Directory of cached fractional matrices (relative to the config file).
    #[serde(default)]
    pub b_cache_dir: Option<PathBuf>,
    /// Expected-order assertions (relative to the config file).
    #[serde(default)]
    pub targets: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Record wall times; `false` writes 0 so the CSV is reproducible byte for byte.
    #[serde(default = "yes")]
    pub timing: bool,

    /// Directory the config was read from; resolves relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn yes() -> bool {
    true
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| bad(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.problem)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Schema checks beyond what deserialization enforces; each problem
    /// of the grid is also built once to catch invalid combinations early.
    pub fn validate(&self) -> Result<(), CliError> {
        for (key, len) in [
            ("alpha_list", self.alpha_list.len()),
            ("N_list", self.n_list.len()),
            ("K_list", self.k_list.len()),
        ] {
            if len == 0 {
                return Err(bad(format!("{key} must not be empty")));
            }
        }
        if let Some(&k) = self.k_list.iter().find(|&&k| k == 0) {
            return Err(bad(format!("K_list entries must be positive, got {k}")));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n > 8) {
            return Err(bad(format!("N_list entries must be at most 8, got {n}")));
        }
        let name = self.name();
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(bad(format!("name '{name}' is not a valid file stem")));
        }
        if let Some(c) = self.cfl {
            if self.dt.is_some() {
                return Err(bad(format!("give either cfl ({c}) or dt, not both")));
            }
        }
        for &a in &self.alpha_list {
            for &n in &self.n_list {
                let spec = self.spec(a, n, self.k_list[0])?;
                for &t in &self.snapshot_times {
                    if !(0.0..=spec.t_final).contains(&t) {
                        return Err(bad(format!("snapshot time {t} outside [0, {}]", spec.t_final)));
                    }
                }
            }
        }
        Ok(())
    }

    /// Problem at one grid point, with all overrides applied.
    pub fn spec(&self, alpha: f64, degree: usize, cells: usize) -> Result<ProblemSpec, CliError> {
        let mut s = match ProblemSpec::preset(&self.problem, alpha, cells, degree) {
            Ok(s) => s,
            Err(FracError::UnknownName(_)) => {
                let family = Family::parse(&self.problem)
                    .map_err(|_| bad(format!("unknown problem '{}'", self.problem)))?;
                let [a, b] = self
                    .domain
                    .ok_or_else(|| bad(format!("problem '{}' needs a domain", self.problem)))?;
                ProblemSpec::new(family, alpha, a, b, cells, degree)
            }
            Err(e) => return Err(e.into()),
        };
        if let Some([a, b]) = self.domain {
            s.a = a;
            s.b = b;
        }
        macro_rules! set {
            ($($f:ident),*) => {$( if let Some(v) = self.$f { s.$f = v; } )*};
        }
        set!(eps, eps1, eps2, eps3, eps4, varpi1, varpi2, t_final);
        if let Some(v) = self.beta0 {
            s.flux.beta0 = v;
        }
        if let Some(v) = self.beta1 {
            s.flux.beta1 = v;
        }
        if let Some(v) = self.f_nl {
            s.f_nl = Nonlinearity(v);
        }
        if let Some(v) = self.g_nl {
            s.g_nl = Nonlinearity(v);
        }
        if let Some(ic) = &self.ic {
            s.ic = ic.clone();
        }
        let none_or = |v: &str| if v == "none" { None } else { Some(v.to_string()) };
        if let Some(f) = &self.forcing {
            s.forcing = none_or(f);
        }
        if let Some(e) = &self.exact {
            s.exact = none_or(e);
        }
        if let Some(bc) = &self.bc {
            s.bc = match bc.as_str() {
                "homogeneous" => BoundarySpec::Homogeneous,
                "exact" => BoundarySpec::Exact,
                other => return Err(bad(format!("unknown boundary condition '{other}'"))),
            };
        }
        s.cfl = self.cfl;
        s.validate()?;
        Ok(s)
    }

    /// `(alpha, N, K)` in output order: alpha outermost, K innermost.
    pub fn grid(&self) -> Vec<(f64, usize, usize)> {
        let mut out = Vec::new();
        for &a in &self.alpha_list {
            for &n in &self.n_list {
                for &k in &self.k_list {
                    out.push((a, n, k));
                }
            }
        }
        out
    }
}

/// Parameters of the admissibility diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibilityConfig {
    #[serde(rename = "N")]
    pub degree: usize,
    pub beta0: f64,
    pub beta1: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub name: Option<String>,
}

fn default_samples() -> usize {
    100_000
}
fn default_gamma() -> f64 {
    0.5
}
fn default_mu() -> f64 {
    0.25
}

impl AdmissibilityConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| bad(format!("config: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"{"problem":"ex1","alpha_list":[1.5],"N_list":[1],"K_list":[4]}"#;

    #[test]
    fn minimal_config() {
        let c = RunConfig::from_json(MIN).unwrap();
        assert_eq!(c.name(), "ex1");
        assert!(c.timing);
        assert_eq!(c.grid(), vec![(1.5, 1, 4)]);
    }

    #[test]
    fn unknown_key_rejected() {
        let text = MIN.replace("\"problem\"", "\"colour\":1,\"problem\"");
        assert!(matches!(RunConfig::from_json(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn empty_k_list_rejected() {
        let text = MIN.replace("[4]", "[]");
        let e = RunConfig::from_json(&text).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("K_list"));
    }

    #[test]
    fn family_problem_needs_domain() {
        let text = MIN.replace("ex1", "diffusion");
        assert!(RunConfig::from_json(&text).is_err());
        let text = text.replace("\"alpha_list\"", "\"domain\":[0,1],\"ic\":\"random\",\"alpha_list\"");
        let c = RunConfig::from_json(&text).unwrap();
        let s = c.spec(1.5, 1, 4).unwrap();
        assert_eq!((s.a, s.b, s.ic.as_str()), (0.0, 1.0, "random"));
    }

    #[test]
    fn overrides_applied() {
        let text = MIN.replace(
            "\"alpha_list\"",
            "\"beta0\":7,\"f_nl\":[0,1,0.3],\"forcing\":\"none\",\"alpha_list\"",
        );
        let c = RunConfig::from_json(&text).unwrap();
        let s = c.spec(1.5, 1, 4).unwrap();
        assert_eq!(s.flux.beta0, 7.0);
        assert_eq!(s.f_nl.0, [0.0, 1.0, 0.3]);
        assert!(s.forcing.is_none());
    }

    #[test]
    fn bad_alpha_is_config_error() {
        let text = MIN.replace("1.5", "2.5");
        assert_eq!(RunConfig::from_json(&text).unwrap_err().exit_code(), 2);
    }
}
