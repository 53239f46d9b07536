//! Semi-discrete right-hand sides for fractional diffusion, fractional
//! convection–diffusion, the nonlinear fractional Schrödinger equation and
//! its coupled two-component version, plus the named initial data, forcing
//! terms and exact solutions used by the test problems.
//!
//! Complex fields are split as `u = p + i q` (and `u₂ = υ + i θ`). With
//! `L u ≈ -(-Δ)^{α/2} u` the diffusion operator, the equations solved are
//!
//! * diffusion: `u_t = ε L u - ∂ₓ f(u) + g`
//! * NLS: `i u_t + ε₁ L u + ε₂ f(|u|²) u = g`
//! * coupled: `i u₁_t + ε₁ L u₁ + ϖ₁ u₁ + ϖ₂ u₂ + ε₂ f u₁ = g₁` and
//!   `i u₂_t + ε₃ L u₂ + ϖ₂ u₁ + ϖ₁ u₂ + ε₄ g u₂ = g₂`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ddg_spatial::{
    assemble_q_operator, ConvectionFlux, ConvectionOperator, DiffusionOperator, FluxParams,
};
use crate::error::{FracError, Result};
use crate::fracops::{assemble_frac_operator, riesz_frac_deriv_poly, FracOperator};
use crate::meshbasis::{FieldVector, Space, SpaceTag};
use crate::specfun::{gamma_fn, gauss_legendre};

/// Equation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Diffusion,
    ConvectionDiffusion,
    Nls,
    CoupledNls,
}

impl Family {
    pub fn n_components(self) -> usize {
        match self {
            Self::Diffusion | Self::ConvectionDiffusion => 1,
            Self::Nls => 2,
            Self::CoupledNls => 4,
        }
    }

    /// Number of (possibly complex) unknown functions.
    pub fn n_equations(self) -> usize {
        match self {
            Self::CoupledNls => 2,
            _ => 1,
        }
    }

    pub fn roles(self) -> &'static [&'static str] {
        match self {
            Self::Diffusion | Self::ConvectionDiffusion => &["u"],
            Self::Nls => &["p", "q"],
            Self::CoupledNls => &["p", "q", "upsilon", "theta"],
        }
    }

    pub fn is_complex(self) -> bool {
        matches!(self, Self::Nls | Self::CoupledNls)
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "diffusion" => Ok(Self::Diffusion),
            "convection_diffusion" => Ok(Self::ConvectionDiffusion),
            "nls" => Ok(Self::Nls),
            "coupled_nls" => Ok(Self::CoupledNls),
            other => Err(FracError::UnknownName(format!("family '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Diffusion => "diffusion",
            Self::ConvectionDiffusion => "convection_diffusion",
            Self::Nls => "nls",
            Self::CoupledNls => "coupled_nls",
        }
    }
}

/// `f(ρ₁, ρ₂) = c[0] + c[1] ρ₁ + c[2] ρ₂` with `ρ_j = |u_j|²`; single NLS
/// uses `c[0] + c[1] ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonlinearity(pub [f64; 3]);

impl Nonlinearity {
    pub const CUBIC: Self = Self([0.0, 1.0, 0.0]);
    pub const LINEAR: Self = Self([1.0, 0.0, 0.0]);
    pub const NONE: Self = Self([0.0, 0.0, 0.0]);

    #[inline]
    pub fn eval(&self, rho1: f64, rho2: f64) -> f64 {
        self.0[0] + self.0[1] * rho1 + self.0[2] * rho2
    }
}

/// Source of Dirichlet data at `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySpec {
    Homogeneous,
    /// Traces of the named exact solution.
    Exact,
}

/// Complete description of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub family: Family,
    pub alpha: f64,
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub eps4: f64,
    pub varpi1: f64,
    pub varpi2: f64,
    pub convection: Option<ConvectionFlux>,
    pub f_nl: Nonlinearity,
    pub g_nl: Nonlinearity,
    pub a: f64,
    pub b: f64,
    pub cells: usize,
    pub degree: usize,
    pub flux: FluxParams,
    pub bc: BoundarySpec,
    pub ic: String,
    pub forcing: Option<String>,
    pub exact: Option<String>,
    pub t_final: f64,
    /// `None` selects the family default capped by the stability estimate.
    pub cfl: Option<f64>,
}

fn gamma_ratio_checked(a: f64, b: f64) -> Result<f64> {
    Ok(gamma_fn(a)? / gamma_fn(b)?)
}

impl ProblemSpec {
    /// Blank specification of a family on `[a, b]`; fill in the rest.
    pub fn new(family: Family, alpha: f64, a: f64, b: f64, cells: usize, degree: usize) -> Self {
        Self {
            family,
            alpha,
            eps: 1.0,
            eps1: 1.0,
            eps2: 1.0,
            eps3: 1.0,
            eps4: 1.0,
            varpi1: 0.0,
            varpi2: 0.0,
            convection: None,
            f_nl: Nonlinearity::CUBIC,
            g_nl: Nonlinearity::CUBIC,
            a,
            b,
            cells,
            degree,
            flux: match family {
                // β₁ = 0 keeps the DDG form symmetric and the spectrum of L real
                Family::Nls | Family::CoupledNls => {
                    FluxParams::new(((degree * (degree + 1)) as f64).max(1.0), 0.0)
                }
                _ => FluxParams::default_for_degree(degree),
            },
            bc: BoundarySpec::Homogeneous,
            ic: "zero".into(),
            forcing: None,
            exact: None,
            t_final: 1.0,
            cfl: None,
        }
    }

    /// Configuration of a named test problem at order `alpha`.
    pub fn preset(name: &str, alpha: f64, cells: usize, degree: usize) -> Result<Self> {
        use Family::*;
        let exact_setup = |mut s: Self, name: &str, t: f64| {
            s.ic = "exact".into();
            s.exact = Some(name.into());
            s.forcing = Some(name.into());
            s.t_final = t;
            s
        };
        let s = match name {
            "ex1" => {
                let mut s = exact_setup(Self::new(Diffusion, alpha, -1.0, 1.0, cells, degree), name, 0.5);
                s.eps = gamma_ratio_checked(9.0 - alpha, 9.0)?;
                s.flux.beta1 = 0.0;
                s
            }
            "ex2" => {
                let mut s = exact_setup(Self::new(Diffusion, alpha, 0.0, 1.0, cells, degree), name, 0.5);
                s.eps = gamma_ratio_checked(12.0 - alpha, 12.0)?;
                s.bc = BoundarySpec::Exact;
                s
            }
            "ex3" => {
                let mut s = exact_setup(
                    Self::new(ConvectionDiffusion, alpha, -1.0, 1.0, cells, degree),
                    name,
                    1.0,
                );
                s.eps = gamma_ratio_checked(9.0 - alpha, 9.0)?;
                s.convection = Some(ConvectionFlux::Burgers);
                s
            }
            "ex4" => {
                let mut s = exact_setup(
                    Self::new(ConvectionDiffusion, alpha, 0.0, 1.0, cells, degree),
                    name,
                    1.0,
                );
                s.eps = gamma_ratio_checked(5.0 - alpha, 5.0)?;
                s.convection = Some(ConvectionFlux::Burgers);
                s.bc = BoundarySpec::Exact;
                s
            }
            "ex5" | "ex6" => {
                let mut s = Self::new(ConvectionDiffusion, alpha, -10.0, 10.0, cells, degree);
                s.eps = 1.0;
                s.convection = Some(ConvectionFlux::Burgers);
                s.ic = if name == "ex5" { "ramp_step" } else { "gaussian" }.into();
                s.t_final = 3.0;
                s
            }
            "ex7" => {
                let mut s = exact_setup(Self::new(Nls, alpha, -1.0, 1.0, cells, degree), name, 0.5);
                s.eps1 = gamma_ratio_checked(11.0 - alpha, 11.0)?;
                s.eps2 = 1.0;
                s.f_nl = Nonlinearity::CUBIC;
                s
            }
            "ex8" => {
                let mut s = exact_setup(Self::new(CoupledNls, alpha, 0.0, 1.0, cells, degree), name, 0.5);
                let e = 0.5 * gamma_ratio_checked(6.0 - alpha, 6.0)?;
                s.eps1 = e;
                s.eps3 = e;
                s.eps2 = 1.0;
                s.eps4 = 1.0;
                s.varpi1 = 1.0;
                s.varpi2 = 1.0;
                s.f_nl = Nonlinearity([0.0, 1.0, 1.0]);
                s.g_nl = Nonlinearity([0.0, 1.0, 1.0]);
                s.bc = BoundarySpec::Exact;
                s
            }
            "single_soliton" => {
                let mut s = Self::new(Nls, alpha, -25.0, 25.0, cells, degree);
                s.eps1 = 2.0;
                s.eps2 = 2.0;
                s.ic = "single_soliton".into();
                s.t_final = 2.0;
                s
            }
            "two_soliton" => {
                let mut s = Self::new(Nls, alpha, -25.0, 25.0, cells, degree);
                s.eps1 = 1.0;
                s.eps2 = 2.0;
                s.ic = "two_soliton".into();
                s.t_final = 5.0;
                s
            }
            "coupled_soliton" => {
                let mut s = Self::new(CoupledNls, alpha, -40.0, 40.0, cells, degree);
                s.varpi1 = 1.0;
                s.varpi2 = 1.0;
                s.f_nl = Nonlinearity([0.0, 1.0, 1.0]);
                s.g_nl = Nonlinearity([0.0, 1.0, 1.0]);
                s.ic = "manakov".into();
                s.t_final = 25.0;
                s
            }
            "manakov" => {
                let mut s = Self::new(CoupledNls, alpha, -40.0, 40.0, cells, degree);
                s.f_nl = Nonlinearity([0.0, 1.0, 1.0]);
                s.g_nl = Nonlinearity([0.0, 1.0, 1.0]);
                s.ic = "manakov".into();
                s.exact = Some("manakov".into());
                s.t_final = 25.0;
                s
            }
            other => return Err(FracError::UnknownName(format!("problem '{other}'"))),
        };
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0 && self.alpha <= 2.0) {
            return Err(FracError::Parameter(format!(
                "alpha must lie in (1, 2], got {}",
                self.alpha
            )));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(FracError::Parameter(format!("T must be positive, got {}", self.t_final)));
        }
        if let Some(c) = self.cfl {
            if !(c > 0.0 && c < 1.0) {
                return Err(FracError::Parameter(format!("cfl must lie in (0, 1), got {c}")));
            }
        }
        let coeffs = [
            self.eps, self.eps1, self.eps2, self.eps3, self.eps4, self.varpi1, self.varpi2,
        ];
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(FracError::Parameter("non-finite coefficient".into()));
        }
        if self.family == Family::Diffusion && self.convection.is_some() {
            return Err(FracError::Parameter(
                "diffusion family takes no convection flux; use convection_diffusion".into(),
            ));
        }
        if self.bc == BoundarySpec::Exact && self.exact.is_none() {
            return Err(FracError::Parameter("exact boundary data need an exact solution".into()));
        }
        self.flux.validate()
    }

    /// Default CFL constant of the family.
    pub fn family_cfl(&self) -> f64 {
        match self.family {
            Family::Diffusion | Family::ConvectionDiffusion => 0.1,
            Family::Nls | Family::CoupledNls => 0.05,
        }
    }
}

/// Exact solution: component values (real parts, imaginary parts, ...) at `(x, t)`.
pub type ExactFn = Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>;
/// Spatial profile.
pub type ShapeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `e^{rate·t} e^{i·omega·t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeFactor {
    pub rate: f64,
    pub omega: f64,
}

impl TimeFactor {
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let m = (self.rate * t).exp();
        let ph = self.omega * t;
        (m * ph.cos(), m * ph.sin())
    }
}

/// One separable forcing term `time(t) · shape(x)` of equation `equation`.
#[derive(Clone)]
pub struct ForcingTerm {
    pub equation: usize,
    pub time: TimeFactor,
    pub shape: ShapeFn,
}

impl std::fmt::Debug for ForcingTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ForcingTerm")
            .field("equation", &self.equation)
            .field("time", &self.time)
            .finish()
    }
}

/// `(x²-1)^4` and friends as monomial coefficient lists.
fn poly_coeffs(name: &str) -> Vec<f64> {
    match name {
        "ex1" | "ex3" => vec![1.0, 0.0, -4.0, 0.0, 6.0, 0.0, -4.0, 0.0, 1.0],
        "ex2" => {
            let mut c = vec![0.0; 12];
            c[11] = 1.0;
            c
        }
        "ex4" => vec![0.0, 0.0, 0.0, 0.0, 1.0],
        "ex7" => vec![-1.0, 0.0, 5.0, 0.0, -10.0, 0.0, 10.0, 0.0, -5.0, 0.0, 1.0],
        "ex8" => vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        _ => Vec::new(),
    }
}

fn poly_scale(name: &str) -> f64 {
    match name {
        "ex3" | "ex4" => 0.01,
        _ => 1.0,
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

fn horner_deriv(c: &[f64], x: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (j, &v)| acc * x + j as f64 * v)
}

/// `√2 r sech(r x - 2 r v t + d) e^{i(v x + (r² - v²) t)}` as `(re, im)`.
fn moving_soliton(x: f64, t: f64, r: f64, v: f64, d: f64) -> (f64, f64) {
    let amp = 2f64.sqrt() * r / (r * x - 2.0 * r * v * t + d).cosh();
    let ph = v * x + (r * r - v * v) * t;
    (amp * ph.cos(), amp * ph.sin())
}

const MANAKOV_R: f64 = 1.0;
const MANAKOV_V: f64 = 0.4;
const MANAKOV_D: f64 = 10.0;

fn manakov_components(x: f64, t: f64) -> Vec<f64> {
    let (p, q) = moving_soliton(x, t, MANAKOV_R, MANAKOV_V, MANAKOV_D);
    let (u, th) = moving_soliton(x, t, MANAKOV_R, -MANAKOV_V, -MANAKOV_D);
    vec![p, q, u, th]
}

/// Exact solution of a named problem.
pub fn exact_solution_library(name: &str, spec: &ProblemSpec) -> Result<ExactFn> {
    let expected = match name {
        "ex1" | "ex2" => Family::Diffusion,
        "ex3" | "ex4" => Family::ConvectionDiffusion,
        "ex7" => Family::Nls,
        "ex8" | "manakov" => Family::CoupledNls,
        other => return Err(FracError::UnknownName(format!("exact solution '{other}'"))),
    };
    if spec.family != expected {
        return Err(FracError::Parameter(format!(
            "exact solution '{name}' belongs to the {} family",
            expected.name()
        )));
    }
    if name == "manakov" {
        return Ok(Arc::new(manakov_components));
    }
    let c = poly_coeffs(name);
    let scale = poly_scale(name);
    Ok(match expected {
        Family::Diffusion | Family::ConvectionDiffusion => {
            Arc::new(move |x, t| vec![scale * (-t).exp() * horner(&c, x)])
        }
        Family::Nls => Arc::new(move |x, t| {
            let u0 = horner(&c, x);
            vec![t.cos() * u0, -t.sin() * u0]
        }),
        Family::CoupledNls => Arc::new(move |x, t| {
            let u0 = horner(&c, x);
            let (re, im) = (t.cos() * u0, -t.sin() * u0);
            vec![re, im, re, im]
        }),
    })
}

/// Manufactured forcing of a named problem, as separable terms.
pub fn forcing_library(name: &str, spec: &ProblemSpec) -> Result<Vec<ForcingTerm>> {
    if !matches!(name, "ex1" | "ex2" | "ex3" | "ex4" | "ex7" | "ex8") {
        return Err(FracError::UnknownName(format!("forcing '{name}'")));
    }
    // family check shared with the exact solution
    exact_solution_library(name, spec)?;
    let c: Vec<f64> = poly_coeffs(name).iter().map(|v| v * poly_scale(name)).collect();
    let (a, b, alpha) = (spec.a, spec.b, spec.alpha);
    let frac = {
        let c = c.clone();
        move |x: f64| riesz_frac_deriv_poly(alpha, &c, a, b, x).unwrap_or(f64::NAN)
    };
    let decay = TimeFactor { rate: -1.0, omega: 0.0 };
    let mut terms = Vec::new();
    match spec.family {
        Family::Diffusion | Family::ConvectionDiffusion => {
            let eps = spec.eps;
            let c1 = c.clone();
            terms.push(ForcingTerm {
                equation: 0,
                time: decay,
                shape: Arc::new(move |x| -horner(&c1, x) + eps * frac(x)),
            });
            if let Some(conv) = spec.convection {
                if conv != ConvectionFlux::Burgers {
                    return Err(FracError::Parameter(format!(
                        "forcing '{name}' is manufactured for Burgers convection"
                    )));
                }
                let c2 = c.clone();
                terms.push(ForcingTerm {
                    equation: 0,
                    time: TimeFactor { rate: -2.0, omega: 0.0 },
                    shape: Arc::new(move |x| horner(&c2, x) * horner_deriv(&c2, x)),
                });
            }
        }
        Family::Nls => {
            let (e1, e2, f) = (spec.eps1, spec.eps2, spec.f_nl);
            terms.push(ForcingTerm {
                equation: 0,
                time: TimeFactor { rate: 0.0, omega: -1.0 },
                shape: Arc::new(move |x| {
                    let u0 = horner(&c, x);
                    u0 - e1 * frac(x) + e2 * f.eval(u0 * u0, 0.0) * u0
                }),
            });
        }
        Family::CoupledNls => {
            // identical components u₁ = u₂ = e^{-it} u₀
            for eq in 0..2 {
                let c = c.clone();
                let frac = frac.clone();
                let s = spec.clone();
                let (e_lin, e_nl, nl) = if eq == 0 {
                    (s.eps1, s.eps2, s.f_nl)
                } else {
                    (s.eps3, s.eps4, s.g_nl)
                };
                terms.push(ForcingTerm {
                    equation: eq,
                    time: TimeFactor { rate: 0.0, omega: -1.0 },
                    shape: Arc::new(move |x| {
                        let u0 = horner(&c, x);
                        let rho = u0 * u0;
                        u0 - e_lin * frac(x)
                            + (s.varpi1 + s.varpi2) * u0
                            + e_nl * nl.eval(rho, rho) * u0
                    }),
                });
            }
        }
    }
    Ok(terms)
}

/// Initial data of a named kind.
#[derive(Clone)]
pub enum InitialData {
    /// Component values at `x`.
    Function(Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>),
    /// Independent uniform nodal values in `[-1, 1]`.
    RandomNodal { seed: u64 },
}

/// Initial condition library: `exact`, `zero`, `random`, `ramp_step`,
/// `gaussian`, `single_soliton`, `two_soliton`, `manakov`.
pub fn initial_condition_library(name: &str, spec: &ProblemSpec, seed: u64) -> Result<InitialData> {
    let nc = spec.family.n_components();
    let need = |fam: &[Family]| -> Result<()> {
        if fam.contains(&spec.family) {
            Ok(())
        } else {
            Err(FracError::Parameter(format!(
                "initial condition '{name}' does not fit the {} family",
                spec.family.name()
            )))
        }
    };
    let f: Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync> = match name {
        "exact" => {
            let ex_name = spec.exact.as_deref().ok_or_else(|| {
                FracError::Parameter("initial condition 'exact' needs an exact solution".into())
            })?;
            let ex = exact_solution_library(ex_name, spec)?;
            Arc::new(move |x| ex(x, 0.0))
        }
        "zero" => Arc::new(move |_| vec![0.0; nc]),
        "random" => return Ok(InitialData::RandomNodal { seed }),
        "ramp_step" => {
            need(&[Family::Diffusion, Family::ConvectionDiffusion])?;
            Arc::new(|x| {
                vec![if (-1.0..0.0).contains(&x) {
                    x + 1.0
                } else if (0.0..=1.0).contains(&x) {
                    2.0 * x
                } else {
                    0.0
                }]
            })
        }
        "gaussian" => {
            need(&[Family::Diffusion, Family::ConvectionDiffusion])?;
            Arc::new(|x| vec![(-2.0 * x * x).exp()])
        }
        "single_soliton" => {
            need(&[Family::Nls])?;
            Arc::new(|x| {
                let s = 1.0 / x.cosh();
                vec![s * (2.0 * x).cos(), s * (2.0 * x).sin()]
            })
        }
        "two_soliton" => {
            need(&[Family::Nls])?;
            Arc::new(|x| {
                let mut out = vec![0.0, 0.0];
                for (c, x0) in [(4.0, -10.0), (-4.0, 10.0)] {
                    let s = 1.0 / (x - x0).cosh();
                    let ph = 0.5 * c * (x - x0);
                    out[0] += s * ph.cos();
                    out[1] += s * ph.sin();
                }
                out
            })
        }
        "manakov" => {
            need(&[Family::CoupledNls])?;
            Arc::new(|x| manakov_components(x, 0.0))
        }
        other => return Err(FracError::UnknownName(format!("initial condition '{other}'"))),
    };
    Ok(InitialData::Function(f))
}

/// Global DOF vectors of every component, with role labels.
#[derive(Debug, Clone, PartialEq)]
pub struct StateStack {
    pub roles: Vec<&'static str>,
    pub components: Vec<FieldVector>,
}

impl StateStack {
    pub fn from_flat(family: Family, tag: SpaceTag, flat: &[f64]) -> Result<Self> {
        let n = tag.cells * (tag.degree + 1);
        if flat.len() != n * family.n_components() {
            return Err(FracError::SpaceMismatch(format!(
                "state of length {} does not fit {} components of {n}",
                flat.len(),
                family.n_components()
            )));
        }
        let components = flat
            .chunks_exact(n)
            .map(|c| FieldVector::from_values(tag, c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            roles: family.roles().to_vec(),
            components,
        })
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.components.iter().flat_map(|c| c.values.iter().copied()).collect()
    }
}

/// Quadrature data for the nonlinear weak terms `(f(ρ) w, φ)`.
#[derive(Debug, Clone)]
struct NonlinearQuad {
    /// `interp[(q, j)] = φ_j(r_q)`
    interp: DMatrix<f64>,
    weights: Vec<f64>,
}

/// Scratch space for one right-hand-side evaluation.
#[derive(Debug, Clone)]
pub struct ModelWork {
    scratch: Vec<f64>,
    lin: Vec<Vec<f64>>,
    nl: Vec<Vec<f64>>,
    quad: Vec<Vec<f64>>,
}

/// A problem ready for time stepping.
pub struct Model {
    pub spec: ProblemSpec,
    pub space: Space,
    pub diffusion: DiffusionOperator,
    convection: Option<ConvectionOperator>,
    /// `(equation, time factor, projected shape)`
    forcing: Vec<(usize, TimeFactor, Vec<f64>)>,
    exact: Option<ExactFn>,
    nlq: NonlinearQuad,
}

impl Model {
    /// Builds all operators. `frac` may supply a precomputed (cached)
    /// fractional matrix; otherwise it is assembled when `alpha < 2`.
    pub fn build(spec: ProblemSpec, frac: Option<FracOperator>) -> Result<Self> {
        spec.validate()?;
        let space = Space::uniform(spec.a, spec.b, spec.cells, spec.degree)?;
        let ddg = assemble_q_operator(&space, spec.flux)?;
        let frac = if spec.alpha < 2.0 {
            match frac {
                Some(op) => {
                    if op.tag != space.tag() || op.alpha != spec.alpha {
                        return Err(FracError::SpaceMismatch(
                            "supplied fractional matrix does not match the problem".into(),
                        ));
                    }
                    Some(op)
                }
                None => Some(assemble_frac_operator(&space, spec.alpha)?),
            }
        } else {
            None
        };
        let diffusion = DiffusionOperator::new(ddg, frac);
        let convection = match (spec.family, spec.convection) {
            (Family::ConvectionDiffusion, Some(f)) => Some(ConvectionOperator::new(&space, f)),
            (Family::ConvectionDiffusion, None) => None,
            (_, Some(_)) => {
                return Err(FracError::Parameter(
                    "convection is only available in the convection_diffusion family".into(),
                ))
            }
            _ => None,
        };
        let forcing = match &spec.forcing {
            None => Vec::new(),
            Some(name) => forcing_library(name, &spec)?
                .into_iter()
                .map(|t| {
                    let shape = space.project_endpoint_singular(|x| (t.shape)(x));
                    if !shape.is_finite() {
                        return Err(FracError::Domain(format!("forcing '{name}' is not finite")));
                    }
                    Ok((t.equation, t.time, shape.values))
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let exact = match &spec.exact {
            None => None,
            Some(name) => Some(exact_solution_library(name, &spec)?),
        };
        let rule = gauss_legendre(2 * spec.degree + 2)?;
        let nlq = NonlinearQuad {
            interp: space.basis.interp_matrix(&rule.nodes),
            weights: rule.weights.clone(),
        };
        Ok(Self {
            spec,
            space,
            diffusion,
            convection,
            forcing,
            exact,
            nlq,
        })
    }

    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn n_dof(&self) -> usize {
        self.space.n_dof()
    }

    pub fn state_len(&self) -> usize {
        self.n_dof() * self.spec.family.n_components()
    }

    pub fn exact(&self) -> Option<&ExactFn> {
        self.exact.as_ref()
    }

    pub fn work(&self) -> ModelWork {
        let n = self.n_dof();
        let nc = self.spec.family.n_components();
        let nq = self.nlq.weights.len();
        ModelWork {
            scratch: vec![0.0; n],
            lin: vec![vec![0.0; n]; nc],
            nl: vec![vec![0.0; n]; nc],
            quad: vec![vec![0.0; nq]; nc],
        }
    }

    /// Initial state, flattened component after component.
    pub fn initial_state(&self, seed: u64) -> Result<Vec<f64>> {
        let nc = self.spec.family.n_components();
        let n = self.n_dof();
        match initial_condition_library(&self.spec.ic, &self.spec, seed)? {
            InitialData::RandomNodal { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok((0..n * nc).map(|_| rng.gen_range(-1.0..1.0)).collect())
            }
            InitialData::Function(f) => {
                let mut out = vec![0.0; n * nc];
                for c in 0..nc {
                    let fc = f.clone();
                    let proj = self.space.project(move |x| fc(x)[c]);
                    out[c * n..(c + 1) * n].copy_from_slice(&proj.values);
                }
                Ok(out)
            }
        }
    }

    /// Dirichlet data `(left, right)` of each component at time `t`.
    pub fn boundary_values(&self, t: f64) -> Vec<(f64, f64)> {
        let nc = self.spec.family.n_components();
        match (self.spec.bc, &self.exact) {
            (BoundarySpec::Exact, Some(ex)) => {
                let l = ex(self.spec.a, t);
                let r = ex(self.spec.b, t);
                (0..nc).map(|c| (l[c], r[c])).collect()
            }
            _ => vec![(0.0, 0.0); nc],
        }
    }

    fn add_forcing(&self, t: f64, dy: &mut [f64]) {
        let n = self.n_dof();
        for (eq, time, shape) in &self.forcing {
            let (re, im) = time.eval(t);
            match self.spec.family {
                Family::Diffusion | Family::ConvectionDiffusion => {
                    for (d, s) in dy[..n].iter_mut().zip(shape) {
                        *d += re * s;
                    }
                }
                Family::Nls | Family::CoupledNls => {
                    // p_t += Im g, q_t -= Re g
                    let base = 2 * eq * n;
                    for i in 0..n {
                        dy[base + i] += im * shape[i];
                        dy[base + n + i] -= re * shape[i];
                    }
                }
            }
        }
    }

    /// Nonlinear weak vectors `M⁻¹ (nl_c · w_c, φ)` for each target field
    /// `w_c`, with `nl_c` evaluated from the densities at quadrature points.
    fn nonlinear_terms(&self, y: &[f64], work: &mut ModelWork) {
        let n = self.n_dof();
        let np = self.space.n_local();
        let nc = self.spec.family.n_components();
        let half = 0.5 * self.space.mesh.h();
        let interp = &self.nlq.interp;
        let nq = self.nlq.weights.len();
        for k in 0..self.space.mesh.num_cells() {
            for c in 0..nc {
                let uk = &y[c * n + k * np..c * n + (k + 1) * np];
                let qv = &mut work.quad[c];
                for q in 0..nq {
                    qv[q] = (0..np).map(|j| interp[(q, j)] * uk[j]).sum();
                }
            }
            for c in 0..nc {
                work.nl[c][k * np..(k + 1) * np].iter_mut().for_each(|v| *v = 0.0);
            }
            for q in 0..nq {
                let w = half * self.nlq.weights[q];
                let (fa, fb) = match self.spec.family {
                    Family::Nls => {
                        let rho = work.quad[0][q].powi(2) + work.quad[1][q].powi(2);
                        (self.spec.f_nl.eval(rho, 0.0), 0.0)
                    }
                    _ => {
                        let r1 = work.quad[0][q].powi(2) + work.quad[1][q].powi(2);
                        let r2 = work.quad[2][q].powi(2) + work.quad[3][q].powi(2);
                        (self.spec.f_nl.eval(r1, r2), self.spec.g_nl.eval(r1, r2))
                    }
                };
                for c in 0..nc {
                    let coef = if c < 2 { fa } else { fb };
                    let v = w * coef * work.quad[c][q];
                    let dst = &mut work.nl[c][k * np..(k + 1) * np];
                    for i in 0..np {
                        dst[i] += v * interp[(q, i)];
                    }
                }
            }
        }
        for c in 0..nc {
            self.space.mass_solve_in_place(&mut work.nl[c]);
        }
    }

    /// Right-hand side `dy = F(t, y)` of the semi-discrete system.
    pub fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64], work: &mut ModelWork) -> Result<()> {
        let n = self.n_dof();
        let bcs = self.boundary_values(t);
        let nc = self.spec.family.n_components();
        for c in 0..nc {
            let (lin, scratch) = (&mut work.lin[c], &mut work.scratch);
            self.diffusion
                .apply_raw(&self.space, &y[c * n..(c + 1) * n], bcs[c], scratch, lin);
        }
        let s = &self.spec;
        match s.family {
            Family::Diffusion | Family::ConvectionDiffusion => {
                for i in 0..n {
                    dy[i] = s.eps * work.lin[0][i];
                }
                if let Some(conv) = &self.convection {
                    let (fbuf, out) = (&mut work.scratch, &mut work.nl[0]);
                    conv.apply_raw(&self.space, &y[..n], bcs[0], fbuf, out);
                    for i in 0..n {
                        dy[i] += work.nl[0][i];
                    }
                }
            }
            Family::Nls => {
                self.nonlinear_terms(y, work);
                let (lp, lq) = (&work.lin[0], &work.lin[1]);
                let (np_, nq_) = (&work.nl[0], &work.nl[1]);
                for i in 0..n {
                    dy[i] = -s.eps1 * lq[i] - s.eps2 * nq_[i];
                    dy[n + i] = s.eps1 * lp[i] + s.eps2 * np_[i];
                }
            }
            Family::CoupledNls => {
                self.nonlinear_terms(y, work);
                let (p, q, u, th) = (&y[..n], &y[n..2 * n], &y[2 * n..3 * n], &y[3 * n..]);
                let l = &work.lin;
                let w = &work.nl;
                for i in 0..n {
                    dy[i] = -(s.eps1 * l[1][i] + s.varpi1 * q[i] + s.varpi2 * th[i] + s.eps2 * w[1][i]);
                    dy[n + i] = s.eps1 * l[0][i] + s.varpi1 * p[i] + s.varpi2 * u[i] + s.eps2 * w[0][i];
                    dy[2 * n + i] =
                        -(s.eps3 * l[3][i] + s.varpi2 * q[i] + s.varpi1 * th[i] + s.eps4 * w[3][i]);
                    dy[3 * n + i] =
                        s.eps3 * l[2][i] + s.varpi2 * p[i] + s.varpi1 * u[i] + s.eps4 * w[2][i];
                }
            }
        }
        self.add_forcing(t, dy);
        Ok(())
    }

    /// L² error of each equation's unknown against the exact solution at
    /// time `t` (complex unknowns combine real and imaginary parts).
    pub fn errors(&self, y: &[f64], t: f64) -> Result<Vec<f64>> {
        let ex = self
            .exact
            .as_ref()
            .ok_or_else(|| FracError::Parameter("problem has no exact solution".into()))?;
        let n = self.n_dof();
        let tag = self.space.tag();
        let nc = self.spec.family.n_components();
        let per: Vec<f64> = (0..nc)
            .map(|c| {
                let u = FieldVector::from_values(tag, y[c * n..(c + 1) * n].to_vec())?;
                let ex = ex.clone();
                self.space.l2_error(&u, move |x| ex(x, t)[c])
            })
            .collect::<Result<_>>()?;
        Ok(if self.spec.family.is_complex() {
            per.chunks(2).map(|c| (c[0] * c[0] + c[1] * c[1]).sqrt()).collect()
        } else {
            per
        })
    }

    /// `Σ_c ‖y_c‖²` in the L² inner product.
    pub fn mass_norm_sq(&self, y: &[f64]) -> f64 {
        let n = self.n_dof();
        y.chunks_exact(n).map(|c| self.space.inner_raw(c, c)).sum()
    }

    /// `Σ_c (y_c, dy_c)`: half the rate of change of [`Self::mass_norm_sq`]
    /// along `dy`.
    pub fn mass_rate(&self, y: &[f64], dy: &[f64]) -> f64 {
        let n = self.n_dof();
        y.chunks_exact(n)
            .zip(dy.chunks_exact(n))
            .map(|(a, b)| self.space.inner_raw(a, b))
            .sum()
    }

    /// Power-iteration estimate of the spectral radius of the linearized
    /// right-hand side at the zero state (no forcing, homogeneous data),
    /// plus the convection wave-speed bound of `y0`.
    pub fn stiffness_estimate(&self, y0: &[f64]) -> f64 {
        let n = self.n_dof();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut out = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        let mut est = 0.0f64;
        for it in 0..80 {
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= nv);
            self.diffusion
                .apply_raw(&self.space, &v, (0.0, 0.0), &mut scratch, &mut out);
            let r = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            if it >= 60 {
                est = est.max(r);
            }
            std::mem::swap(&mut v, &mut out);
        }
        let s = &self.spec;
        let coef = match s.family {
            Family::Diffusion | Family::ConvectionDiffusion => s.eps.abs(),
            Family::Nls => s.eps1.abs(),
            Family::CoupledNls => s.eps1.abs().max(s.eps3.abs()),
        };
        let mut total = coef * est;
        if let Some(conv) = &self.convection {
            let vmax = y0[..n].iter().map(|u| conv.flux.df(*u).abs()).fold(0.0, f64::max);
            let nf = s.degree as f64;
            total += vmax * (2.0 * nf + 1.0) / self.space.mesh.h();
        }
        if s.family.is_complex() {
            let amp = y0.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let nl = s.f_nl.0.iter().chain(&s.g_nl.0).map(|c| c.abs()).sum::<f64>();
            total += s.varpi1.abs() + s.varpi2.abs() + (s.eps2.abs() + s.eps4.abs()) * nl * (1.0 + 4.0 * amp * amp);
        }
        total
    }

    /// CFL constant used for the run: the configured value, or the family
    /// default reduced so that `dt · ρ ≤ 2` for the stiffness estimate `ρ`.
    pub fn effective_cfl(&self, y0: &[f64]) -> f64 {
        if let Some(c) = self.spec.cfl {
            return c;
        }
        let dx_alpha = self.space.mesh.dx_min.powf(self.spec.alpha);
        let rho = self.stiffness_estimate(y0);
        let limit = if rho > 0.0 { 2.0 / (rho * dx_alpha) } else { f64::INFINITY };
        self.spec.family_cfl().min(limit)
    }
}

/// `u_t` of the diffusion and convection–diffusion families for a field.
pub fn rhs_diffusion(model: &Model, t: f64, u: &FieldVector) -> Result<FieldVector> {
    if !matches!(model.family(), Family::Diffusion | Family::ConvectionDiffusion) {
        return Err(FracError::Parameter("rhs_diffusion needs a diffusion-type model".into()));
    }
    model.space.check(u)?;
    let mut out = model.space.zeros();
    model.rhs(t, &u.values, &mut out.values, &mut model.work())?;
    Ok(out)
}

fn rhs_stack(model: &Model, t: f64, state: &StateStack, family: Family) -> Result<StateStack> {
    if model.family() != family {
        return Err(FracError::Parameter(format!("model is not of the {} family", family.name())));
    }
    for c in &state.components {
        model.space.check(c)?;
    }
    let y = state.flatten();
    if y.len() != model.state_len() {
        return Err(FracError::SpaceMismatch("wrong number of components".into()));
    }
    let mut dy = vec![0.0; y.len()];
    model.rhs(t, &y, &mut dy, &mut model.work())?;
    StateStack::from_flat(family, model.space.tag(), &dy)
}

/// `(p_t, q_t)` of the NLS family.
pub fn rhs_nls(model: &Model, t: f64, state: &StateStack) -> Result<StateStack> {
    rhs_stack(model, t, state, Family::Nls)
}

/// `(p_t, q_t, υ_t, θ_t)` of the coupled NLS family.
pub fn rhs_coupled_nls(model: &Model, t: f64, state: &StateStack) -> Result<StateStack> {
    rhs_stack(model, t, state, Family::CoupledNls)
}

/// Total variation of `u_h` sampled at `per_cell` points per cell.
pub fn total_variation(space: &Space, u: &[f64], per_cell: usize) -> f64 {
    let np = space.n_local();
    let mut prev: Option<f64> = None;
    let mut tv = 0.0;
    let mut phi = vec![0.0; np];
    for k in 0..space.mesh.num_cells() {
        let uk = &u[k * np..(k + 1) * np];
        for s in 0..per_cell {
            let r = -1.0 + 2.0 * (s as f64 + 0.5) / per_cell as f64;
            space.basis.eval_basis_into(r, &mut phi);
            let v: f64 = phi.iter().zip(uk).map(|(a, b)| a * b).sum();
            if let Some(p) = prev {
                tv += (v - p).abs();
            }
            prev = Some(v);
        }
    }
    tv
}

/// Time at which the two Manakov solitons collide.
pub fn manakov_collision_time() -> f64 {
    MANAKOV_D / (2.0 * MANAKOV_R * MANAKOV_V)
}
