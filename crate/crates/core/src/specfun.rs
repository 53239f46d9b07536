//! Special functions and quadrature rules: the Gamma function, Gauss–Legendre
//! and Gauss–Jacobi rules on `[-1, 1]`, and re-centering of polynomials written
//! in shifted monomials `(x - c)^j`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{FracError, Result};

/// Largest number of nodes accepted by the rule constructors.
pub const MAX_RULE_POINTS: usize = 64;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Euler Gamma function for positive real arguments.
///
/// Lanczos approximation with `g = 7`; arguments below `1/2` go through the
/// reflection formula.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(FracError::Domain(format!("gamma_fn requires x > 0, got {x}")));
    }
    Ok(gamma_unchecked(x))
}

/// Gamma without argument validation. Valid for `x > 0`.
pub(crate) fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_unchecked(1.0 - x));
    }
    if x == x.floor() && x <= 23.0 {
        // exact factorials for small integers
        return (1..x as u64).fold(1.0, |acc, k| acc * k as f64);
    }
    let z = x - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    // split the power so that t^(z+1/2) does not overflow before e^-t scales it
    let half = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * half * (half * (-t).exp()) * series
}

/// `Γ(a) / Γ(b)` for positive arguments.
pub(crate) fn gamma_ratio(a: f64, b: f64) -> f64 {
    gamma_unchecked(a) / gamma_unchecked(b)
}

/// Weight function a rule integrates against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadKind {
    Legendre,
    /// Weight `(1 - t)^a_exp (1 + t)^b_exp`.
    Jacobi { a_exp: f64, b_exp: f64 },
}

/// Quadrature rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: QuadKind,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(t_i)`, i.e. the weighted integral over `[-1, 1]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    /// Integral over `[lo, hi]` of `(hi - x)^a (x - lo)^b f(x)` (Jacobi) or of
    /// `f(x)` (Legendre), with the weight carried over by the affine map.
    pub fn integrate_on<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let scale = match self.kind {
            QuadKind::Legendre => half,
            QuadKind::Jacobi { a_exp, b_exp } => half.powf(1.0 + a_exp + b_exp),
        };
        scale * self.integrate(|t| f(mid + half * t))
    }

    /// Nodes mapped from `[-1, 1]` to `[lo, hi]`.
    pub fn mapped_nodes(&self, lo: f64, hi: f64) -> impl Iterator<Item = f64> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes.iter().map(move |&t| mid + half * t)
    }
}

fn check_points(n: usize) -> Result<()> {
    if n == 0 || n > MAX_RULE_POINTS {
        return Err(FracError::Parameter(format!(
            "rule size must be in 1..={MAX_RULE_POINTS}, got {n}"
        )));
    }
    Ok(())
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `n`-point Gauss–Legendre rule, exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Result<QuadRule> {
    check_points(n)?;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Newton from the Tricomi initial guess, largest root first
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadRule {
        nodes,
        weights,
        kind: QuadKind::Legendre,
    })
}

/// Integral of `(1 - t)^a (1 + t)^b` over `[-1, 1]`.
pub fn jacobi_moment0(a_exp: f64, b_exp: f64) -> f64 {
    2f64.powf(a_exp + b_exp + 1.0) * gamma_unchecked(a_exp + 1.0) * gamma_unchecked(b_exp + 1.0)
        / gamma_unchecked(a_exp + b_exp + 2.0)
}

/// `n`-point Gauss–Jacobi rule for the weight `(1 - t)^a_exp (1 + t)^b_exp`,
/// built by Golub–Welsch from the monic three-term recurrence.
pub fn gauss_jacobi(n: usize, a_exp: f64, b_exp: f64) -> Result<QuadRule> {
    check_points(n)?;
    if !(a_exp > -1.0) || !(b_exp > -1.0) {
        return Err(FracError::Parameter(format!(
            "Jacobi exponents must exceed -1, got ({a_exp}, {b_exp})"
        )));
    }
    let (a, b) = (a_exp, b_exp);
    let ab = a + b;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < n {
            let m = kf + 1.0;
            let beta = if k == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * m * (m + a) * (m + b) * (m + ab)
                    / ((2.0 * m + ab).powi(2) * (2.0 * m + ab + 1.0) * (2.0 * m + ab - 1.0))
            };
            let off = beta.sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let mu0 = jacobi_moment0(a, b);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(QuadRule {
        nodes: pairs.iter().map(|p| p.0.clamp(-1.0, 1.0)).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
        kind: QuadKind::Jacobi { a_exp, b_exp },
    })
}

/// Re-expands `Σ c_j (x - center)^j` about `new_center` (Taylor shift).
pub fn shifted_monomial_coeffs(coeffs: &[f64], center: f64, new_center: f64) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    let delta = new_center - center;
    if delta == 0.0 || c.len() < 2 {
        return c;
    }
    let n = c.len();
    for k in 0..n - 1 {
        for j in (k..n - 1).rev() {
            c[j] += delta * c[j + 1];
        }
    }
    c
}

/// Polynomial in shifted monomials `(x - center)^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedPoly {
    pub center: f64,
    pub coeffs: Vec<f64>,
}

impl ShiftedPoly {
    pub fn new(center: f64, coeffs: Vec<f64>) -> Self {
        Self { center, coeffs }
    }

    /// Polynomial given by ordinary monomial coefficients (center 0).
    pub fn from_monomials(coeffs: &[f64]) -> Self {
        Self::new(0.0, coeffs.to_vec())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let y = x - self.center;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * y + c)
    }

    pub fn recenter(&self, new_center: f64) -> Self {
        Self::new(new_center, shifted_monomial_coeffs(&self.coeffs, self.center, new_center))
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, &c)| j as f64 * c)
            .collect();
        Self::new(self.center, coeffs)
    }
}
