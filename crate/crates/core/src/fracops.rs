//! Riemann–Liouville integrals of polynomials, the Galerkin matrix of the
//! two-sided Riesz fractional integral, and closed-form Riesz derivatives
//! of polynomials.
//!
//! All operators act on functions extended by zero outside `[a, b]`.

use std::f64::consts::PI;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::error::{FracError, Result};
use crate::meshbasis::{FieldVector, Space, SpaceTag};
use crate::specfun::{
    gamma_fn, gamma_ratio, gamma_unchecked, gauss_jacobi, gauss_legendre, shifted_monomial_coeffs, ShiftedPoly,
    MAX_RULE_POINTS,
};

/// Points of the tensor Gauss–Legendre rule for well-separated cell pairs.
const FAR_POINTS: usize = 14;
/// Points of the Gauss–Legendre rule for the smooth part of adjacent pairs.
const ADJACENT_POINTS: usize = 16;

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(FracError::Parameter(format!(
            "integral order must lie in (0, 1), got {mu}"
        )));
    }
    Ok(())
}

/// `1 / (2 cos(π μ / 2))`.
pub fn riesz_scale(mu: f64) -> f64 {
    1.0 / (2.0 * (0.5 * PI * mu).cos())
}

/// Left Riemann–Liouville integral of order `mu` of the polynomial `poly`
/// restricted to `cell = (c, d)`, evaluated at `x`:
/// `(1/Γ(μ)) ∫_{c}^{min(x, d)} (x - s)^{μ-1} p(s) ds`.
pub fn frac_integral_element(mu: f64, cell: (f64, f64), poly: &ShiftedPoly, x: f64) -> Result<f64> {
    check_mu(mu)?;
    let (c, d) = cell;
    if !(c < d) {
        return Err(FracError::Domain(format!("empty cell [{c}, {d}]")));
    }
    if x <= c {
        return Ok(0.0);
    }
    let deg = poly.degree();
    let singular = |lo: f64| -> Result<f64> {
        let rule = gauss_jacobi(deg / 2 + 1, mu - 1.0, 0.0)?;
        Ok(rule.integrate_on(lo, x, |s| poly.eval(s)))
    };
    let raw = if x <= d {
        singular(c)?
    } else if x - d < d - c {
        // kernel nearly singular at d: difference of two exact singular integrals
        singular(c)? - singular(d)?
    } else {
        let n = (deg + (1.0 / mu).ceil() as usize + 4).clamp(12, MAX_RULE_POINTS);
        let rule = gauss_legendre(n)?;
        rule.integrate_on(c, d, |s| (x - s).powf(mu - 1.0) * poly.eval(s))
    };
    Ok(raw / gamma_unchecked(mu))
}

/// Right Riemann–Liouville integral, `(1/Γ(μ)) ∫_{max(x, c)}^{d} (s - x)^{μ-1} p(s) ds`.
pub fn frac_integral_element_right(
    mu: f64,
    cell: (f64, f64),
    poly: &ShiftedPoly,
    x: f64,
) -> Result<f64> {
    let mirrored = ShiftedPoly::new(
        -poly.center,
        poly.coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| if j % 2 == 0 { c } else { -c })
            .collect(),
    );
    frac_integral_element(mu, (-cell.1, -cell.0), &mirrored, -x)
}

/// Assembled Galerkin matrix of `Δ_{-μ/2} = riesz_scale · (I_L^μ + I_R^μ)`.
#[derive(Debug, Clone)]
pub struct FracOperator {
    pub alpha: f64,
    pub mu: f64,
    pub riesz_scale: f64,
    /// `B[(k,i),(l,j)] = ∫_{D_k} φ_{k,i} Δ_{-μ/2} φ_{l,j} dx`
    pub b: DMatrix<f64>,
    pub tag: SpaceTag,
}

/// Reference interaction blocks for a uniform mesh, without the
/// `h^{1+μ}/Γ(μ)` factor:
/// `T_δ[i][j] = ∫₀¹ φ̂_i(y) ∫₀¹ (δ + y - z)^{μ-1} φ̂_j(z) [δ+y-z > 0] dz dy`.
struct InteractionBlocks {
    np: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl InteractionBlocks {
    fn new(space: &Space, mu: f64) -> Result<Self> {
        let basis = &space.basis;
        let np = basis.n_local();
        let k = space.mesh.num_cells();
        // φ̂ on [0, 1] via the reference coordinate r = 2y - 1; extrapolates.
        let phi = |y: f64, out: &mut [f64]| basis.eval_basis_into(2.0 * y - 1.0, out);
        let mut vi = vec![0.0; np];
        let mut vj = vec![0.0; np];

        let inner = gauss_jacobi(np, mu - 1.0, 0.0)?;
        let outer = gauss_jacobi(np, 0.0, mu)?;
        let outer_scale = 2f64.powf(-mu - 1.0);
        let inner_scale = 2f64.powf(-mu);

        // δ = 0: inner over [0, y] is (y/2)^μ Σ w φ̂_j(y(1+t)/2); the y^μ
        // factor joins the outer Jacobi weight.
        let mut t0 = DMatrix::zeros(np, np);
        for (&tau, &wo) in outer.nodes.iter().zip(&outer.weights) {
            let y = 0.5 * (1.0 + tau);
            phi(y, &mut vi);
            for (&t, &wi) in inner.nodes.iter().zip(&inner.weights) {
                phi(0.5 * y * (1.0 + t), &mut vj);
                let w = wo * outer_scale * wi * inner_scale;
                for i in 0..np {
                    for j in 0..np {
                        t0[(i, j)] += w * vi[i] * vj[j];
                    }
                }
            }
        }
        let mut blocks = vec![t0];

        if k >= 2 {
            // δ = 1: inner = G(y) - H(y) with the source polynomial extended
            // past z = 1. G is smooth on [0, 1]; H carries y^μ.
            let mut t1 = DMatrix::zeros(np, np);
            let gl = gauss_legendre(ADJACENT_POINTS)?;
            for (&tau, &wo) in gl.nodes.iter().zip(&gl.weights) {
                let y = 0.5 * (1.0 + tau);
                let len = 1.0 + y;
                phi(y, &mut vi);
                let pre = 0.5 * wo * (0.5 * len).powf(mu);
                for (&t, &wi) in inner.nodes.iter().zip(&inner.weights) {
                    phi(0.5 * len * (1.0 + t), &mut vj);
                    let w = pre * wi;
                    for i in 0..np {
                        for j in 0..np {
                            t1[(i, j)] += w * vi[i] * vj[j];
                        }
                    }
                }
            }
            for (&tau, &wo) in outer.nodes.iter().zip(&outer.weights) {
                let y = 0.5 * (1.0 + tau);
                phi(y, &mut vi);
                for (&t, &wi) in inner.nodes.iter().zip(&inner.weights) {
                    phi(1.0 + 0.5 * y * (1.0 + t), &mut vj);
                    let w = wo * outer_scale * wi * inner_scale;
                    for i in 0..np {
                        for j in 0..np {
                            t1[(i, j)] -= w * vi[i] * vj[j];
                        }
                    }
                }
            }
            blocks.push(t1);
        }

        if k >= 3 {
            let gl = gauss_legendre(FAR_POINTS)?;
            let ys: Vec<f64> = gl.mapped_nodes(0.0, 1.0).collect();
            let ws: Vec<f64> = gl.weights.iter().map(|w| 0.5 * w).collect();
            let vals: Vec<Vec<f64>> = ys
                .iter()
                .map(|&y| {
                    let mut v = vec![0.0; np];
                    phi(y, &mut v);
                    v
                })
                .collect();
            for delta in 2..k {
                let df = delta as f64;
                let mut tm = DMatrix::zeros(np, np);
                for (p, &y) in ys.iter().enumerate() {
                    for (q, &z) in ys.iter().enumerate() {
                        let w = ws[p] * ws[q] * (df + y - z).powf(mu - 1.0);
                        for i in 0..np {
                            for j in 0..np {
                                tm[(i, j)] += w * vals[p][i] * vals[q][j];
                            }
                        }
                    }
                }
                blocks.push(tm);
            }
        }
        Ok(Self { np, blocks })
    }
}

/// Assembles the dense fractional-integral matrix for `alpha ∈ (1, 2)`.
pub fn assemble_frac_operator(space: &Space, alpha: f64) -> Result<FracOperator> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(FracError::Parameter(format!(
            "fractional order must lie in (1, 2), got {alpha}"
        )));
    }
    let mu = 2.0 - alpha;
    let scale = riesz_scale(mu);
    let blocks = InteractionBlocks::new(space, mu)?;
    let np = blocks.np;
    let k = space.mesh.num_cells();
    let n = k * np;
    let factor = scale * space.mesh.h().powf(1.0 + mu) / gamma_fn(mu)?;
    let mut b = DMatrix::zeros(n, n);
    for kr in 0..k {
        for kc in 0..k {
            for i in 0..np {
                for j in 0..np {
                    let v = if kr == kc {
                        blocks.blocks[0][(i, j)] + blocks.blocks[0][(j, i)]
                    } else if kr > kc {
                        blocks.blocks[kr - kc][(i, j)]
                    } else {
                        blocks.blocks[kc - kr][(j, i)]
                    };
                    b[(kr * np + i, kc * np + j)] = factor * v;
                }
            }
        }
    }
    Ok(FracOperator {
        alpha,
        mu,
        riesz_scale: scale,
        b,
        tag: space.tag(),
    })
}

impl FracOperator {
    pub fn n_dof(&self) -> usize {
        self.b.nrows()
    }

    /// `out = B q`. Uses the symmetry of `B` so each entry is a contiguous
    /// column dot product.
    pub fn b_matvec(&self, q: &[f64], out: &mut [f64]) {
        let n = self.n_dof();
        let data = self.b.as_slice();
        for (i, o) in out.iter_mut().enumerate() {
            let col = &data[i * n..(i + 1) * n];
            *o = col.iter().zip(q).map(|(a, b)| a * b).sum();
        }
    }

    /// `p = M⁻¹ B q` on raw DOF slices.
    pub fn apply_raw(&self, space: &Space, q: &[f64], out: &mut [f64]) {
        self.b_matvec(q, out);
        space.mass_solve_in_place(out);
    }

    /// `p` with `M p = B q`.
    pub fn apply(&self, space: &Space, q: &FieldVector) -> Result<FieldVector> {
        space.check(q)?;
        if space.tag() != self.tag {
            return Err(FracError::SpaceMismatch(
                "fractional operator assembled on a different space".into(),
            ));
        }
        let mut out = space.zeros();
        self.apply_raw(space, &q.values, &mut out.values);
        Ok(out)
    }
}

/// Free-function form of [`FracOperator::apply`].
pub fn apply_frac(space: &Space, op: &FracOperator, q: &FieldVector) -> Result<FieldVector> {
    op.apply(space, q)
}

/// `(-Δ)^{α/2} p (x)` for a polynomial given by monomial coefficients
/// `coeffs[j]` of `x^j`, using left and right Caputo derivatives on `[a, b]`:
/// `(D_L^α p + D_R^α p) / (2 cos(π α / 2))`. At `α = 2` returns `-p''(x)`.
pub fn riesz_frac_deriv_poly(alpha: f64, coeffs: &[f64], a: f64, b: f64, x: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(FracError::Parameter(format!(
            "fractional order must lie in (1, 2], got {alpha}"
        )));
    }
    if !(a < b) {
        return Err(FracError::Domain(format!("need a < b, got [{a}, {b}]")));
    }
    if !(x >= a && x <= b) {
        return Err(FracError::Domain(format!("point {x} outside [{a}, {b}]")));
    }
    if alpha == 2.0 {
        let p2 = ShiftedPoly::from_monomials(coeffs).derivative().derivative();
        return Ok(-p2.eval(x));
    }
    let left = shifted_monomial_coeffs(coeffs, 0.0, a);
    let right = shifted_monomial_coeffs(coeffs, 0.0, b);
    let (xl, xr) = (x - a, b - x);
    let mut acc = 0.0;
    for j in 2..coeffs.len() {
        let jf = j as f64;
        let g = gamma_ratio(jf + 1.0, jf + 1.0 - alpha);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += g * (left[j] * xl.powf(jf - alpha) + sign * right[j] * xr.powf(jf - alpha));
    }
    Ok(acc / (2.0 * (0.5 * PI * alpha).cos()))
}

const CACHE_MAGIC: &[u8; 8] = b"FDDGBMAT";
const CACHE_VERSION: u32 = 1;

/// Identity of an assembled fractional matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheKey {
    pub a: f64,
    pub b: f64,
    pub cells: u64,
    pub degree: u64,
    pub alpha: f64,
}

impl CacheKey {
    pub fn new(tag: SpaceTag, alpha: f64) -> Self {
        Self {
            a: tag.a,
            b: tag.b,
            cells: tag.cells as u64,
            degree: tag.degree as u64,
            alpha,
        }
    }

    fn to_bytes(self) -> Vec<u8> {
        let mut out = Vec::with_capacity(40);
        out.extend(self.a.to_le_bytes());
        out.extend(self.b.to_le_bytes());
        out.extend(self.cells.to_le_bytes());
        out.extend(self.degree.to_le_bytes());
        out.extend(self.alpha.to_le_bytes());
        out
    }

    /// File name derived from a SHA-256 digest of the key.
    pub fn file_name(self) -> String {
        let digest = Sha256::digest(self.to_bytes());
        let hex: String = digest[..12].iter().map(|b| format!("{b:02x}")).collect();
        format!("bmat-{hex}.bin")
    }
}

/// Writes `op` in the cache format: magic, version, key, then the matrix
/// as row-major little-endian `f64`.
pub fn write_cache(path: &Path, op: &FracOperator) -> Result<()> {
    let key = CacheKey::new(op.tag, op.alpha);
    let n = op.n_dof();
    let mut buf = Vec::with_capacity(8 + 4 + 40 + n * n * 8);
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend(CACHE_VERSION.to_le_bytes());
    buf.extend(key.to_bytes());
    for i in 0..n {
        for j in 0..n {
            buf.extend(op.b[(i, j)].to_le_bytes());
        }
    }
    let tmp = path.with_extension("tmp");
    fs::File::create(&tmp)?.write_all(&buf)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads a cached matrix; returns `None` when the file holds a different key
/// or version.
pub fn read_cache(path: &Path, space: &Space, alpha: f64) -> Result<Option<FracOperator>> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    let header = 8 + 4 + 40;
    if buf.len() < header || &buf[..8] != CACHE_MAGIC {
        return Err(FracError::Data(format!("{} is not a matrix cache", path.display())));
    }
    let version = u32::from_le_bytes(buf[8..12].try_into().expect("4 bytes"));
    let tag = space.tag();
    let key = CacheKey::new(tag, alpha);
    if version != CACHE_VERSION || buf[12..header] != key.to_bytes()[..] {
        return Ok(None);
    }
    let n = space.n_dof();
    if buf.len() != header + n * n * 8 {
        return Err(FracError::Data(format!("{} is truncated", path.display())));
    }
    let vals = buf[header..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let b = DMatrix::from_row_iterator(n, n, vals);
    let mu = 2.0 - alpha;
    Ok(Some(FracOperator {
        alpha,
        mu,
        riesz_scale: riesz_scale(mu),
        b,
        tag,
    }))
}

/// Loads the matrix from `dir` when cached, otherwise assembles it and
/// stores it there.
pub fn assemble_cached(space: &Space, alpha: f64, dir: &Path) -> Result<FracOperator> {
    let path: PathBuf = dir.join(CacheKey::new(space.tag(), alpha).file_name());
    if path.exists() {
        if let Some(op) = read_cache(&path, space, alpha)? {
            return Ok(op);
        }
    }
    let op = assemble_frac_operator(space, alpha)?;
    fs::create_dir_all(dir)?;
    write_cache(&path, &op)?;
    Ok(op)
}
