//! Direct DG weak second derivative, its composition with the fractional
//! integral, Lax–Friedrichs convection, and the flux admissibility check.
//!
//! Jumps and averages follow `[w] = w⁺ - w⁻`, `{w} = (w⁺ + w⁻)/2`, where `-`
//! is the left side of a face. Dirichlet data enter through ghost traces
//! `u_ext = 2 g - u_int` with derivatives copied from the interior.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FracError, Result};
use crate::fracops::FracOperator;
use crate::meshbasis::{FieldVector, Space, SpaceTag};

/// Coefficients of `(∂ₓu)* = β₀[u]/h + {∂ₓu} + β₁ h [∂ₓ²u]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxParams {
    pub beta0: f64,
    pub beta1: f64,
}

impl FluxParams {
    pub fn new(beta0: f64, beta1: f64) -> Self {
        Self { beta0, beta1 }
    }

    /// `β₁ = 1/(2N(N+1))` (0 at `N = 0`) and `β₀ = max(1, (N+1)²/2)`.
    pub fn default_for_degree(n: usize) -> Self {
        let nf = n as f64;
        let beta1 = if n == 0 { 0.0 } else { 1.0 / (2.0 * nf * (nf + 1.0)) };
        Self {
            beta0: (0.5 * (nf + 1.0) * (nf + 1.0)).max(1.0),
            beta1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta0 > 0.0) || !self.beta0.is_finite() || !self.beta1.is_finite() {
            return Err(FracError::Parameter(format!(
                "flux needs beta0 > 0 and finite beta1, got ({}, {})",
                self.beta0, self.beta1
            )));
        }
        Ok(())
    }
}

/// One-sided physical traces at a face: value, first and second derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideTraces {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// `(∂ₓu)*` from the traces on the left (`minus`) and right (`plus`) of a face.
pub fn numerical_flux_deriv(minus: SideTraces, plus: SideTraces, h: f64, flux: FluxParams) -> f64 {
    flux.beta0 * (plus.value - minus.value) / h
        + 0.5 * (plus.d1 + minus.d1)
        + flux.beta1 * h * (plus.d2 - minus.d2)
}

/// Physical-coordinate traces of every basis function at one end of a cell.
struct PhysTrace {
    v: Vec<f64>,
    d: Vec<f64>,
    s: Vec<f64>,
}

fn phys_trace(space: &Space, right_end: bool) -> PhysTrace {
    let t = if right_end {
        &space.basis.trace_right
    } else {
        &space.basis.trace_left
    };
    let h = space.mesh.h();
    PhysTrace {
        v: t.value.clone(),
        d: t.d1.iter().map(|x| 2.0 / h * x).collect(),
        s: t.d2.iter().map(|x| 4.0 / (h * h) * x).collect(),
    }
}

/// Block-tridiagonal matrix `A` with `(q_h, φ) = (A u + boundary terms)·φ`
/// plus the boundary-data coefficient vectors.
#[derive(Debug, Clone)]
pub struct DdgOperators {
    pub flux: FluxParams,
    pub tag: SpaceTag,
    np: usize,
    cells: usize,
    diag: Vec<DMatrix<f64>>,
    /// `lower[k]` couples row cell `k+1` to column cell `k`.
    lower: Vec<DMatrix<f64>>,
    /// `upper[k]` couples row cell `k` to column cell `k+1`.
    upper: Vec<DMatrix<f64>>,
    /// Multiplies the left Dirichlet value; acts on cell 0.
    pub bc_left: Vec<f64>,
    /// Multiplies the right Dirichlet value; acts on the last cell.
    pub bc_right: Vec<f64>,
}

/// Assembles the DDG weak second-derivative operator with weak Dirichlet
/// closure at both ends.
pub fn assemble_q_operator(space: &Space, flux: FluxParams) -> Result<DdgOperators> {
    flux.validate()?;
    let np = space.n_local();
    let k = space.mesh.num_cells();
    let h = space.mesh.h();
    let (b0, b1) = (flux.beta0, flux.beta1);
    let tl = phys_trace(space, false);
    let tr = phys_trace(space, true);

    let volume = -(2.0 / h) * &space.basis.stiffness;
    let mut diag = vec![volume; k];
    let mut lower = vec![DMatrix::zeros(np, np); k.saturating_sub(1)];
    let mut upper = vec![DMatrix::zeros(np, np); k.saturating_sub(1)];

    // (∂ₓu)* and [u] as linear functionals of the minus/plus cell DOFs
    let f_minus: Vec<f64> = (0..np)
        .map(|j| -b0 / h * tr.v[j] + 0.5 * tr.d[j] - b1 * h * tr.s[j])
        .collect();
    let f_plus: Vec<f64> = (0..np)
        .map(|j| b0 / h * tl.v[j] + 0.5 * tl.d[j] + b1 * h * tl.s[j])
        .collect();
    let j_minus: Vec<f64> = tr.v.iter().map(|v| -v).collect();
    let j_plus = tl.v.clone();
    // test-function side: [φ] and {φ'} for a minus-cell or plus-cell φ
    let phi_jump_minus: Vec<f64> = tr.v.iter().map(|v| -v).collect();
    let phi_avg_minus: Vec<f64> = tr.d.iter().map(|d| 0.5 * d).collect();
    let phi_jump_plus = tl.v.clone();
    let phi_avg_plus: Vec<f64> = tl.d.iter().map(|d| 0.5 * d).collect();

    let face_block = |pj: &[f64], pa: &[f64], f: &[f64], jv: &[f64]| {
        DMatrix::from_fn(np, np, |i, j| -(pj[i] * f[j] + pa[i] * jv[j]))
    };
    for face in 0..k.saturating_sub(1) {
        diag[face] += face_block(&phi_jump_minus, &phi_avg_minus, &f_minus, &j_minus);
        upper[face] += face_block(&phi_jump_minus, &phi_avg_minus, &f_plus, &j_plus);
        lower[face] += face_block(&phi_jump_plus, &phi_avg_plus, &f_minus, &j_minus);
        diag[face + 1] += face_block(&phi_jump_plus, &phi_avg_plus, &f_plus, &j_plus);
    }

    let pen = 2.0 * b0 / h;
    diag[0] += DMatrix::from_fn(np, np, |i, j| {
        -tl.v[i] * (pen * tl.v[j] + tl.d[j]) - tl.d[i] * tl.v[j]
    });
    diag[k - 1] += DMatrix::from_fn(np, np, |i, j| {
        tr.v[i] * (-pen * tr.v[j] + tr.d[j]) + tr.d[i] * tr.v[j]
    });
    let bc_left = (0..np).map(|i| pen * tl.v[i] + tl.d[i]).collect();
    let bc_right = (0..np).map(|i| pen * tr.v[i] - tr.d[i]).collect();

    Ok(DdgOperators {
        flux,
        tag: space.tag(),
        np,
        cells: k,
        diag,
        lower,
        upper,
        bc_left,
        bc_right,
    })
}

impl DdgOperators {
    /// `out = A u + g_left·bc_left + g_right·bc_right` (weak form, before
    /// the mass solve).
    pub fn apply_weak(&self, u: &[f64], g_left: f64, g_right: f64, out: &mut [f64]) {
        let np = self.np;
        let k = self.cells;
        for c in 0..k {
            let o = &mut out[c * np..(c + 1) * np];
            let add = |m: &DMatrix<f64>, src: &[f64], o: &mut [f64]| {
                for (i, oi) in o.iter_mut().enumerate() {
                    *oi += (0..np).map(|j| m[(i, j)] * src[j]).sum::<f64>();
                }
            };
            o.iter_mut().for_each(|v| *v = 0.0);
            add(&self.diag[c], &u[c * np..(c + 1) * np], o);
            if c > 0 {
                add(&self.lower[c - 1], &u[(c - 1) * np..c * np], o);
            }
            if c + 1 < k {
                add(&self.upper[c], &u[(c + 1) * np..(c + 2) * np], o);
            }
        }
        if g_left != 0.0 {
            for i in 0..np {
                out[i] += g_left * self.bc_left[i];
            }
        }
        if g_right != 0.0 {
            let off = (k - 1) * np;
            for i in 0..np {
                out[off + i] += g_right * self.bc_right[i];
            }
        }
    }

    /// `q = M⁻¹(A u + boundary terms)` on raw slices.
    pub fn q_raw(&self, space: &Space, u: &[f64], g_left: f64, g_right: f64, out: &mut [f64]) {
        self.apply_weak(u, g_left, g_right, out);
        space.mass_solve_in_place(out);
    }

    /// Weak second derivative of `u` with Dirichlet values `(g_left, g_right)`.
    pub fn q(&self, space: &Space, u: &FieldVector, bc: (f64, f64)) -> Result<FieldVector> {
        space.check(u)?;
        self.check(space)?;
        let mut out = space.zeros();
        self.q_raw(space, &u.values, bc.0, bc.1, &mut out.values);
        Ok(out)
    }

    fn check(&self, space: &Space) -> Result<()> {
        if self.tag != space.tag() {
            return Err(FracError::SpaceMismatch(
                "DDG operator assembled on a different space".into(),
            ));
        }
        Ok(())
    }

    /// Dense copy of `A`.
    pub fn dense(&self) -> DMatrix<f64> {
        let np = self.np;
        let n = np * self.cells;
        let mut m = DMatrix::zeros(n, n);
        for c in 0..self.cells {
            m.view_mut((c * np, c * np), (np, np)).copy_from(&self.diag[c]);
            if c + 1 < self.cells {
                m.view_mut((c * np, (c + 1) * np), (np, np)).copy_from(&self.upper[c]);
                m.view_mut(((c + 1) * np, c * np), (np, np)).copy_from(&self.lower[c]);
            }
        }
        m
    }
}

/// Linear diffusion operator `u ↦ p`: `p = q` when `frac` is `None`
/// (classical `α = 2`), otherwise `p = M⁻¹ B q`.
#[derive(Debug, Clone)]
pub struct DiffusionOperator {
    pub ddg: DdgOperators,
    pub frac: Option<FracOperator>,
}

impl DiffusionOperator {
    pub fn new(ddg: DdgOperators, frac: Option<FracOperator>) -> Self {
        Self { ddg, frac }
    }

    /// `out = p(u)`; `scratch` must have the DOF length.
    pub fn apply_raw(
        &self,
        space: &Space,
        u: &[f64],
        bc: (f64, f64),
        scratch: &mut [f64],
        out: &mut [f64],
    ) {
        match &self.frac {
            None => self.ddg.q_raw(space, u, bc.0, bc.1, out),
            Some(op) => {
                self.ddg.q_raw(space, u, bc.0, bc.1, scratch);
                op.apply_raw(space, scratch, out);
            }
        }
    }

    /// Dense matrix of the homogeneous map `u ↦ p`.
    pub fn dense(&self, space: &Space) -> DMatrix<f64> {
        let mut q = space.global_mass().try_inverse().expect("mass SPD") * self.ddg.dense();
        if let Some(op) = &self.frac {
            let minv = space.global_mass().try_inverse().expect("mass SPD");
            q = minv * &op.b * q;
        }
        q
    }
}

/// `ε · p` with `p = Δ_{-μ/2} q`, `q = M⁻¹(A u + boundary terms)`.
pub fn fractional_diffusion_rhs(
    space: &Space,
    ops: &DdgOperators,
    fop: Option<&FracOperator>,
    eps: f64,
    u: &FieldVector,
    bc: (f64, f64),
) -> Result<FieldVector> {
    let q = ops.q(space, u, bc)?;
    let mut p = match fop {
        Some(op) => op.apply(space, &q)?,
        None => q,
    };
    p.scale(eps);
    Ok(p)
}

/// Flux function of the convection term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvectionFlux {
    /// `f(u) = c u`
    Linear(f64),
    /// `f(u) = u² / 2`
    Burgers,
}

impl ConvectionFlux {
    pub fn f(&self, u: f64) -> f64 {
        match self {
            Self::Linear(c) => c * u,
            Self::Burgers => 0.5 * u * u,
        }
    }

    pub fn df(&self, u: f64) -> f64 {
        match self {
            Self::Linear(c) => *c,
            Self::Burgers => u,
        }
    }
}

/// Lax–Friedrichs flux `½(f(a)+f(b)) - (C/2)(b-a)`.
pub fn lax_friedrichs(flux: ConvectionFlux, a: f64, b: f64, c: f64) -> f64 {
    0.5 * (flux.f(a) + flux.f(b)) - 0.5 * c * (b - a)
}

/// Weak divergence `-M⁻¹[-(f(u_h), v') + f̂ v|_right - f̂ v|_left]` with the
/// flux interpolated at the nodes.
#[derive(Debug, Clone)]
pub struct ConvectionOperator {
    pub flux: ConvectionFlux,
    /// `weak[(i, j)] = ∫ φ_j φ_i' dr`
    weak: DMatrix<f64>,
    tl: Vec<f64>,
    tr: Vec<f64>,
}

impl ConvectionOperator {
    pub fn new(space: &Space, flux: ConvectionFlux) -> Self {
        let md = &space.basis.mass * &space.basis.diff;
        Self {
            flux,
            weak: md.transpose(),
            tl: space.basis.trace_left.value.clone(),
            tr: space.basis.trace_right.value.clone(),
        }
    }

    /// `out = -(∂ₓ f(u))_h` with Dirichlet exterior states `bc`.
    pub fn apply_raw(&self, space: &Space, u: &[f64], bc: (f64, f64), fbuf: &mut [f64], out: &mut [f64]) {
        let np = space.n_local();
        let k = space.mesh.num_cells();
        let trace = |t: &[f64], c: usize| -> f64 {
            t.iter().zip(&u[c * np..(c + 1) * np]).map(|(a, b)| a * b).sum()
        };
        let left: Vec<f64> = (0..k).map(|c| trace(&self.tl, c)).collect();
        let right: Vec<f64> = (0..k).map(|c| trace(&self.tr, c)).collect();
        let mut cmax = self.flux.df(bc.0).abs().max(self.flux.df(bc.1).abs());
        for v in left.iter().chain(&right) {
            cmax = cmax.max(self.flux.df(*v).abs());
        }
        // face fluxes, face f at x_{f}, f = 0..=k
        let faces: Vec<f64> = (0..=k)
            .map(|f| {
                let a = if f == 0 { bc.0 } else { right[f - 1] };
                let b = if f == k { bc.1 } else { left[f] };
                lax_friedrichs(self.flux, a, b, cmax)
            })
            .collect();
        for (fv, uv) in fbuf.iter_mut().zip(u) {
            *fv = self.flux.f(*uv);
        }
        for c in 0..k {
            let fc = &fbuf[c * np..(c + 1) * np];
            let o = &mut out[c * np..(c + 1) * np];
            for i in 0..np {
                let vol: f64 = (0..np).map(|j| self.weak[(i, j)] * fc[j]).sum();
                o[i] = vol - faces[c + 1] * self.tr[i] + faces[c] * self.tl[i];
            }
        }
        space.mass_solve_in_place(out);
    }
}

/// Convection right-hand side `-∂ₓ f(u)` for a field.
pub fn convection_rhs(
    space: &Space,
    flux: ConvectionFlux,
    u: &FieldVector,
    bc: (f64, f64),
) -> Result<FieldVector> {
    space.check(u)?;
    let op = ConvectionOperator::new(space, flux);
    let mut out = space.zeros();
    let mut fbuf = vec![0.0; space.n_dof()];
    op.apply_raw(space, &u.values, bc, &mut fbuf, &mut out.values);
    Ok(out)
}

/// Outcome of the sampled admissibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    /// Smallest Rayleigh quotient of the admissibility form found.
    pub min_ratio: f64,
    pub admissible: bool,
    /// Nodal values (left cell then right cell) of the minimizer found.
    pub witness: Vec<f64>,
}

/// Symmetric matrix of
/// `γ(∂ₓu, ∂ₓu) + (∂ₓu)*[u] + {∂ₓu}[u] - μ[u]²/h`
/// on the two-cell mesh `[-1, 0] ∪ [0, 1]` (`h = 1`), in nodal coordinates.
pub fn admissibility_form(flux: FluxParams, degree: usize, gamma: f64, mu_pen: f64) -> Result<DMatrix<f64>> {
    let space = Space::uniform(-1.0, 1.0, 2, degree)?;
    let np = space.n_local();
    let n = 2 * np;
    let tl = phys_trace(&space, false);
    let tr = phys_trace(&space, true);
    let mut jump = vec![0.0; n];
    let mut avg = vec![0.0; n];
    let mut jump2 = vec![0.0; n];
    for j in 0..np {
        jump[j] = -tr.v[j];
        jump[np + j] = tl.v[j];
        avg[j] = 0.5 * tr.d[j];
        avg[np + j] = 0.5 * tl.d[j];
        jump2[j] = -tr.s[j];
        jump2[np + j] = tl.s[j];
    }
    let s = 2.0 * &space.basis.stiffness;
    let mut q = DMatrix::zeros(n, n);
    q.view_mut((0, 0), (np, np)).copy_from(&(gamma * &s));
    q.view_mut((np, np), (np, np)).copy_from(&(gamma * &s));
    for i in 0..n {
        for j in 0..n {
            q[(i, j)] += (flux.beta0 - mu_pen) * jump[i] * jump[j]
                + (avg[i] * jump[j] + jump[i] * avg[j])
                + 0.5 * flux.beta1 * (jump2[i] * jump[j] + jump[i] * jump2[j]);
        }
    }
    Ok(q)
}

/// Sampled minimization of the admissibility form's Rayleigh quotient,
/// refined by gradient descent on the unit sphere from the best sample.
pub fn check_admissibility(
    flux: FluxParams,
    degree: usize,
    samples: usize,
    gamma: f64,
    mu_pen: f64,
    seed: u64,
) -> Result<AdmissibilityReport> {
    if !(gamma > 0.0 && gamma < 1.0) || !(mu_pen > 0.0 && mu_pen <= 1.0) {
        return Err(FracError::Parameter(format!(
            "need gamma in (0,1) and mu in (0,1], got ({gamma}, {mu_pen})"
        )));
    }
    if samples == 0 {
        return Err(FracError::Parameter("need at least one sample".into()));
    }
    let q = admissibility_form(flux, degree, gamma, mu_pen)?;
    let n = q.nrows();
    let rayleigh = |v: &[f64]| -> (f64, Vec<f64>) {
        let qv: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[(i, j)] * v[j]).sum()).collect();
        let num: f64 = qv.iter().zip(v).map(|(a, b)| a * b).sum();
        let den: f64 = v.iter().map(|x| x * x).sum();
        (num / den, qv)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (f64::INFINITY, vec![0.0; n]);
    for _ in 0..samples {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (r, _) = rayleigh(&v);
        if r < best.0 {
            best = (r, v);
        }
    }
    let norm = |v: &mut Vec<f64>| {
        let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= s);
    };
    let mut v = best.1;
    norm(&mut v);
    let bound: f64 = (0..n)
        .map(|i| (0..n).map(|j| q[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let step = 0.5 / bound.max(f64::MIN_POSITIVE);
    let mut rho = rayleigh(&v).0;
    for _ in 0..20_000 {
        let (r, qv) = rayleigh(&v);
        rho = r;
        let mut next: Vec<f64> = v
            .iter()
            .zip(&qv)
            .map(|(x, qx)| x - 2.0 * step * (qx - r * x))
            .collect();
        norm(&mut next);
        let moved: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if moved < 1e-15 {
            break;
        }
    }
    let min_ratio = rho.min(rayleigh(&v).0);
    Ok(AdmissibilityReport {
        min_ratio,
        admissible: min_ratio >= -1e-10,
        witness: v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ZERO: SideTraces = SideTraces { value: 0.0, d1: 0.0, d2: 0.0 };

    #[test]
    fn flux_examples() {
        let s = SideTraces { value: 1.3, d1: -0.4, d2: 2.0 };
        assert_eq!(numerical_flux_deriv(s, s, 0.1, FluxParams::new(1.0, 1.0 / 12.0)), -0.4);
        let plus = SideTraces { value: 1.0, ..ZERO };
        assert_eq!(numerical_flux_deriv(ZERO, plus, 0.5, FluxParams::new(1.0, 0.0)), 2.0);
        // u⁻ = x², u⁺ = 2x² near x = 0.5 with h = 0.25
        let m = SideTraces { value: 0.25, d1: 1.0, d2: 2.0 };
        let p = SideTraces { value: 0.5, d1: 2.0, d2: 4.0 };
        let want = 0.25 / 0.25 + 1.5 + (1.0 / 12.0) * 0.25 * 2.0;
        let got = numerical_flux_deriv(m, p, 0.25, FluxParams::new(1.0, 1.0 / 12.0));
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn flux_side_swap_identity() {
        let m = SideTraces { value: 0.3, d1: 1.7, d2: -2.0 };
        let p = SideTraces { value: -0.2, d1: 0.4, d2: 5.0 };
        let f = FluxParams::new(2.0, 0.1);
        let a = numerical_flux_deriv(m, p, 0.3, f);
        let b = numerical_flux_deriv(p, m, 0.3, f);
        let avg = 0.5 * (m.d1 + p.d1);
        assert!(((a - avg) + (b - avg)).abs() < 1e-14);
    }

    #[test]
    fn default_flux() {
        assert_eq!(FluxParams::default_for_degree(2).beta1, 1.0 / 12.0);
        assert_eq!(FluxParams::default_for_degree(3).beta0, 8.0);
        assert!(FluxParams::new(0.0, 0.0).validate().is_err());
    }

    #[test]
    fn quadratic_is_reproduced() {
        let space = Space::uniform(0.0, 1.0, 4, 2).unwrap();
        let ops = assemble_q_operator(&space, FluxParams::new(1.0, 1.0 / 12.0)).unwrap();
        let u = space.interpolate(|x| x * x);
        let q = ops.q(&space, &u, (0.0, 1.0)).unwrap();
        assert!(q.values.iter().all(|v| (v - 2.0).abs() < 1e-10), "{:?}", q.values);
        let lin = space.interpolate(|x| 3.0 * x - 1.0);
        let q = ops.q(&space, &lin, (-1.0, 2.0)).unwrap();
        assert!(q.values.iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn two_cell_linear_hand_assembly() {
        // K = 2 on [0, 2], N = 1, β₀ = 1, β₁ = 0; interior face only.
        let space = Space::uniform(0.0, 2.0, 2, 1).unwrap();
        let ops = assemble_q_operator(&space, FluxParams::new(1.0, 0.0)).unwrap();
        let a = ops.dense();
        // interior face couples (cell0 right node, cell1 left node); with
        // h = 1: d = [-1, 1] per cell, volume block [[-1, 1], [1, -1]].
        // Face block (row cell0 node1, col cell1 node0):
        //   -([φ]F + {φ'}J) = -(-1·(1 + 0.5·(-1)) + 0.5·1) = 0
        assert!((a[(1, 2)] - 0.0).abs() < 1e-14);
        // (row cell0 node1, col cell0 node1): -(-1·(-1 + 0.5) + 0.5·(-1)) - 1 = -1
        assert!((a[(1, 1)] + 1.0).abs() < 1e-14);
        // (row cell0 node0, col cell1 node0): -(0·F + (-0.5)·1) = 0.5
        assert!((a[(0, 2)] - 0.5).abs() < 1e-14);
        // symmetric interior coupling
        let n = a.nrows();
        for i in 0..n {
            for j in 0..n {
                assert!((a[(i, j)] - a[(j, i)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn lax_friedrichs_consistency() {
        assert_eq!(lax_friedrichs(ConvectionFlux::Burgers, 1.0, 1.0, 3.0), 0.5);
    }

    #[test]
    fn constant_state_has_no_convection() {
        let space = Space::uniform(-1.0, 1.0, 5, 3).unwrap();
        let u = space.interpolate(|_| 0.7);
        let r = convection_rhs(&space, ConvectionFlux::Burgers, &u, (0.7, 0.7)).unwrap();
        assert!(r.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn admissibility_penalty_only_at_degree_zero() {
        let r = check_admissibility(FluxParams::new(1.0, 0.0), 0, 1000, 0.5, 1.0, 7).unwrap();
        assert!(r.admissible);
        let r = check_admissibility(FluxParams::new(0.0, 0.0), 1, 1000, 0.5, 0.25, 7).unwrap();
        assert!(!r.admissible);
        assert!(r.min_ratio < -0.5);
    }
}
