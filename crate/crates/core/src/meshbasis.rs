//! Uniform 1D meshes, the nodal Lagrange basis on Gauss–Lobatto points, and
//! the broken polynomial space built from the two.
//!
//! Global vectors are element-major: cell `k` owns slots
//! `k(N+1) .. k(N+1)+N`, one value per reference node. Because the basis is
//! nodal, those slots are also the values of the field at the mapped nodes.

use nalgebra::DMatrix;

use crate::error::{FracError, Result};
use crate::specfun::{gauss_jacobi, gauss_legendre, QuadRule};

/// Highest polynomial degree supported by [`ElementBasis`].
pub const MAX_DEGREE: usize = 8;

/// Uniform partition of `[a, b]` into `cells` elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    pub a: f64,
    pub b: f64,
    pub boundaries: Vec<f64>,
    pub dx_min: f64,
}

/// Builds the uniform mesh of `[a, b]` with `cells` elements.
pub fn build_mesh(a: f64, b: f64, cells: usize) -> Result<Mesh1D> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(FracError::Domain(format!("mesh needs a < b, got [{a}, {b}]")));
    }
    if cells == 0 {
        return Err(FracError::Parameter("mesh needs at least one cell".into()));
    }
    let h = (b - a) / cells as f64;
    let mut boundaries: Vec<f64> = (0..=cells).map(|k| a + h * k as f64).collect();
    boundaries[cells] = b;
    Ok(Mesh1D {
        a,
        b,
        boundaries,
        dx_min: h,
    })
}

impl Mesh1D {
    pub fn num_cells(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Cell width (all cells share it).
    pub fn h(&self) -> f64 {
        self.dx_min
    }

    pub fn cell(&self, k: usize) -> (f64, f64) {
        (self.boundaries[k], self.boundaries[k + 1])
    }

    /// Physical coordinate of reference point `r ∈ [-1, 1]` in cell `k`.
    pub fn to_physical(&self, k: usize, r: f64) -> f64 {
        let (lo, hi) = self.cell(k);
        0.5 * (lo + hi) + 0.5 * (hi - lo) * r
    }

    pub fn to_reference(&self, k: usize, x: f64) -> f64 {
        let (lo, hi) = self.cell(k);
        (2.0 * x - lo - hi) / (hi - lo)
    }

    /// Cell owning `x`. Interior cell boundaries belong to the cell on their left.
    pub fn locate(&self, x: f64) -> Result<usize> {
        if !(x >= self.a && x <= self.b) {
            return Err(FracError::Domain(format!(
                "point {x} outside [{}, {}]",
                self.a, self.b
            )));
        }
        let i = self.boundaries.partition_point(|&bd| bd < x);
        Ok(i.max(1) - 1)
    }
}

/// Values and reference-coordinate derivatives of every basis function at
/// one end of the reference element.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTrace {
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

/// Degree-`N` nodal Lagrange basis on `[-1, 1]` with its reference operators.
#[derive(Debug, Clone)]
pub struct ElementBasis {
    pub degree: usize,
    pub ref_nodes: Vec<f64>,
    bary_weights: Vec<f64>,
    /// `∫ φ_i φ_j dr`
    pub mass: DMatrix<f64>,
    pub mass_inv: DMatrix<f64>,
    /// `diff[(i, j)] = φ_j'(r_i)`
    pub diff: DMatrix<f64>,
    /// `∫ φ_i' φ_j' dr`
    pub stiffness: DMatrix<f64>,
    pub trace_left: EdgeTrace,
    pub trace_right: EdgeTrace,
}

/// Legendre–Gauss–Lobatto points: `±1` plus the roots of `P_N'`.
fn lobatto_nodes(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(vec![0.0]);
    }
    let mut nodes = vec![-1.0];
    if n >= 2 {
        nodes.extend(gauss_jacobi(n - 1, 1.0, 1.0)?.nodes);
    }
    nodes.push(1.0);
    Ok(nodes)
}

/// Builds the nodal basis of degree `degree`.
pub fn build_basis(degree: usize) -> Result<ElementBasis> {
    if degree > MAX_DEGREE {
        return Err(FracError::Parameter(format!(
            "basis degree must be in 0..={MAX_DEGREE}, got {degree}"
        )));
    }
    let nodes = lobatto_nodes(degree)?;
    let np = nodes.len();
    let bary_weights: Vec<f64> = (0..np)
        .map(|j| {
            let prod: f64 = (0..np)
                .filter(|&m| m != j)
                .map(|m| nodes[j] - nodes[m])
                .product();
            1.0 / prod
        })
        .collect();

    let mut diff = DMatrix::zeros(np, np);
    for i in 0..np {
        let mut row_sum = 0.0;
        for j in 0..np {
            if i != j {
                let d = (bary_weights[j] / bary_weights[i]) / (nodes[i] - nodes[j]);
                diff[(i, j)] = d;
                row_sum += d;
            }
        }
        diff[(i, i)] = -row_sum;
    }

    let mut basis = ElementBasis {
        degree,
        ref_nodes: nodes,
        bary_weights,
        mass: DMatrix::zeros(np, np),
        mass_inv: DMatrix::zeros(np, np),
        diff,
        stiffness: DMatrix::zeros(np, np),
        trace_left: EdgeTrace {
            value: vec![],
            d1: vec![],
            d2: vec![],
        },
        trace_right: EdgeTrace {
            value: vec![],
            d1: vec![],
            d2: vec![],
        },
    };

    let rule = gauss_legendre(np)?;
    let phi = basis.interp_matrix(&rule.nodes);
    let dphi = &phi * &basis.diff;
    for i in 0..np {
        for j in 0..np {
            let mut m = 0.0;
            let mut s = 0.0;
            for (q, &w) in rule.weights.iter().enumerate() {
                m += w * phi[(q, i)] * phi[(q, j)];
                s += w * dphi[(q, i)] * dphi[(q, j)];
            }
            basis.mass[(i, j)] = m;
            basis.stiffness[(i, j)] = s;
        }
    }
    basis.mass_inv = basis
        .mass
        .clone()
        .try_inverse()
        .ok_or_else(|| FracError::Parameter("singular reference mass matrix".into()))?;
    basis.trace_left = basis.edge_trace(-1.0);
    basis.trace_right = basis.edge_trace(1.0);
    Ok(basis)
}

impl ElementBasis {
    /// Number of local degrees of freedom, `N + 1`.
    pub fn n_local(&self) -> usize {
        self.ref_nodes.len()
    }

    /// Second-derivative matrix, `diff · diff` (exact on degree-`N` data).
    pub fn diff2(&self) -> DMatrix<f64> {
        &self.diff * &self.diff
    }

    /// Values of all basis functions at `r` (any real `r`; extrapolates
    /// outside `[-1, 1]`).
    pub fn eval_basis_into(&self, r: f64, out: &mut [f64]) {
        let np = self.n_local();
        if np == 1 {
            out[0] = 1.0;
            return;
        }
        if let Some(j) = self.ref_nodes.iter().position(|&x| x == r) {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[j] = 1.0;
            return;
        }
        let ell: f64 = self.ref_nodes.iter().map(|&x| r - x).product();
        for j in 0..np {
            out[j] = ell * self.bary_weights[j] / (r - self.ref_nodes[j]);
        }
    }

    pub fn eval_basis(&self, r: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_local()];
        self.eval_basis_into(r, &mut out);
        out
    }

    /// `out[(p, j)] = φ_j(points[p])`.
    pub fn interp_matrix(&self, points: &[f64]) -> DMatrix<f64> {
        let np = self.n_local();
        let mut m = DMatrix::zeros(points.len(), np);
        let mut row = vec![0.0; np];
        for (p, &r) in points.iter().enumerate() {
            self.eval_basis_into(r, &mut row);
            for j in 0..np {
                m[(p, j)] = row[j];
            }
        }
        m
    }

    /// Evaluates the local polynomial with nodal values `local` at `r`.
    pub fn eval_local(&self, local: &[f64], r: f64) -> f64 {
        let mut row = vec![0.0; self.n_local()];
        self.eval_basis_into(r, &mut row);
        row.iter().zip(local).map(|(a, b)| a * b).sum()
    }

    fn edge_trace(&self, r: f64) -> EdgeTrace {
        let value = self.eval_basis(r);
        let np = self.n_local();
        let d1: Vec<f64> = (0..np)
            .map(|j| (0..np).map(|m| value[m] * self.diff[(m, j)]).sum())
            .collect();
        let d2m = self.diff2();
        let d2: Vec<f64> = (0..np)
            .map(|j| (0..np).map(|m| value[m] * d2m[(m, j)]).sum())
            .collect();
        EdgeTrace { value, d1, d2 }
    }
}

/// Identity of a broken polynomial space, carried by every global vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTag {
    pub a: f64,
    pub b: f64,
    pub cells: usize,
    pub degree: usize,
}

/// Mesh plus basis: the broken space `V_h^N`.
#[derive(Debug, Clone)]
pub struct Space {
    pub mesh: Mesh1D,
    pub basis: ElementBasis,
}

/// Global DOF vector of one scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector {
    pub values: Vec<f64>,
    pub tag: SpaceTag,
}

impl FieldVector {
    pub fn zeros(tag: SpaceTag) -> Self {
        Self {
            values: vec![0.0; tag.cells * (tag.degree + 1)],
            tag,
        }
    }

    pub fn from_values(tag: SpaceTag, values: Vec<f64>) -> Result<Self> {
        if values.len() != tag.cells * (tag.degree + 1) {
            return Err(FracError::SpaceMismatch(format!(
                "expected {} values, got {}",
                tag.cells * (tag.degree + 1),
                values.len()
            )));
        }
        Ok(Self { values, tag })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_same_space(&self, other: &FieldVector) -> Result<()> {
        if self.tag != other.tag {
            return Err(FracError::SpaceMismatch(format!(
                "{:?} vs {:?}",
                self.tag, other.tag
            )));
        }
        Ok(())
    }

    pub fn cell(&self, k: usize) -> &[f64] {
        let np = self.tag.degree + 1;
        &self.values[k * np..(k + 1) * np]
    }

    /// `self += s · other`
    pub fn axpy(&mut self, s: f64, other: &FieldVector) -> Result<()> {
        self.check_same_space(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Composite rule on `[-1, 1]` graded geometrically toward `-1`
/// (or `+1` when `toward_right`), for integrands singular at that end.
fn graded_rule(toward_right: bool) -> (Vec<f64>, Vec<f64>) {
    const RATIO: f64 = 0.15;
    const LEVELS: i32 = 22;
    let base = gauss_legendre(12).expect("size bounded");
    let mut cuts: Vec<f64> = (0..=LEVELS).map(|j| -1.0 + 2.0 * RATIO.powi(j)).collect();
    cuts.push(-1.0);
    cuts.reverse();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        for (&r, &wt) in base.nodes.iter().zip(&base.weights) {
            nodes.push(lo + half * (r + 1.0));
            weights.push(half * wt);
        }
    }
    if toward_right {
        nodes.iter_mut().for_each(|x| *x = -*x);
    }
    (nodes, weights)
}

impl Space {
    pub fn new(mesh: Mesh1D, basis: ElementBasis) -> Self {
        Self { mesh, basis }
    }

    /// Uniform mesh of `[a, b]` with `cells` elements and degree `degree`.
    pub fn uniform(a: f64, b: f64, cells: usize, degree: usize) -> Result<Self> {
        Ok(Self::new(build_mesh(a, b, cells)?, build_basis(degree)?))
    }

    pub fn tag(&self) -> SpaceTag {
        SpaceTag {
            a: self.mesh.a,
            b: self.mesh.b,
            cells: self.mesh.num_cells(),
            degree: self.basis.degree,
        }
    }

    pub fn n_local(&self) -> usize {
        self.basis.n_local()
    }

    pub fn n_dof(&self) -> usize {
        self.mesh.num_cells() * self.n_local()
    }

    pub fn zeros(&self) -> FieldVector {
        FieldVector::zeros(self.tag())
    }

    pub fn check(&self, u: &FieldVector) -> Result<()> {
        if u.tag != self.tag() {
            return Err(FracError::SpaceMismatch(format!(
                "field built on {:?}, space is {:?}",
                u.tag,
                self.tag()
            )));
        }
        Ok(())
    }

    /// Physical coordinates of every DOF, element-major.
    pub fn node_coordinates(&self) -> Vec<f64> {
        let mut xs = Vec::with_capacity(self.n_dof());
        for k in 0..self.mesh.num_cells() {
            for &r in &self.basis.ref_nodes {
                xs.push(self.mesh.to_physical(k, r));
            }
        }
        xs
    }

    /// Field whose nodal values are `f` sampled at the DOF coordinates.
    pub fn interpolate<F: Fn(f64) -> f64>(&self, f: F) -> FieldVector {
        let values = self.node_coordinates().into_iter().map(f).collect();
        FieldVector {
            values,
            tag: self.tag(),
        }
    }

    /// Element-wise L² projection with an `(N+2)`-point Gauss–Legendre rule.
    pub fn project<F: Fn(f64) -> f64>(&self, f: F) -> FieldVector {
        let rule = gauss_legendre(self.basis.degree + 2).expect("degree bounded");
        self.project_with(&rule, f)
    }

    /// L² projection of a function that may be weakly singular at `a` and
    /// `b`: the two end cells use geometrically graded composite rules
    /// toward the endpoint, their neighbours a 32-point rule.
    pub fn project_endpoint_singular<F: Fn(f64) -> f64>(&self, f: F) -> FieldVector {
        let k_last = self.mesh.num_cells() - 1;
        let plain = |n: usize| {
            let r = gauss_legendre(n).expect("size bounded");
            (r.nodes, r.weights)
        };
        let inner = plain((self.basis.degree + 2).max(16));
        let near = plain(32);
        let left = graded_rule(false);
        let right = graded_rule(true);
        self.project_per_cell(
            |k| match k {
                0 => &left,
                _ if k == k_last => &right,
                1 => &near,
                _ if k + 1 == k_last => &near,
                _ => &inner,
            },
            f,
        )
    }

    pub(crate) fn project_with<F: Fn(f64) -> f64>(&self, rule: &QuadRule, f: F) -> FieldVector {
        let pts = (rule.nodes.clone(), rule.weights.clone());
        self.project_per_cell(|_| &pts, f)
    }

    fn project_per_cell<'r, R, F>(&self, rule_for: R, f: F) -> FieldVector
    where
        R: Fn(usize) -> &'r (Vec<f64>, Vec<f64>),
        F: Fn(f64) -> f64,
    {
        let np = self.n_local();
        let mut out = self.zeros();
        let mut rhs = vec![0.0; np];
        let mut phi = vec![0.0; np];
        for k in 0..self.mesh.num_cells() {
            let (nodes, weights) = rule_for(k);
            rhs.iter_mut().for_each(|v| *v = 0.0);
            for (&r, &w) in nodes.iter().zip(weights) {
                let fx = w * f(self.mesh.to_physical(k, r));
                self.basis.eval_basis_into(r, &mut phi);
                for i in 0..np {
                    rhs[i] += fx * phi[i];
                }
            }
            let dst = &mut out.values[k * np..(k + 1) * np];
            for i in 0..np {
                dst[i] = (0..np).map(|j| self.basis.mass_inv[(i, j)] * rhs[j]).sum();
            }
        }
        out
    }

    /// Evaluates `u` at physical points; interior cell boundaries use the
    /// left cell's polynomial.
    pub fn eval_field(&self, u: &FieldVector, points: &[f64]) -> Result<Vec<f64>> {
        self.check(u)?;
        points
            .iter()
            .map(|&x| {
                let k = self.mesh.locate(x)?;
                let r = self.mesh.to_reference(k, x).clamp(-1.0, 1.0);
                Ok(self.basis.eval_local(u.cell(k), r))
            })
            .collect()
    }

    /// `√(Σ_k ∫_{D_k} (u_h - exact)² dx)` with an `(N+3)`-point rule per cell.
    pub fn l2_error<F: Fn(f64) -> f64>(&self, u: &FieldVector, exact: F) -> Result<f64> {
        self.check(u)?;
        let rule = gauss_legendre(self.basis.degree + 3)?;
        let phi = self.basis.interp_matrix(&rule.nodes);
        let half = 0.5 * self.mesh.h();
        let np = self.n_local();
        let mut acc = 0.0;
        for k in 0..self.mesh.num_cells() {
            let uk = u.cell(k);
            for (q, (&r, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
                let uh: f64 = (0..np).map(|j| phi[(q, j)] * uk[j]).sum();
                let e = uh - exact(self.mesh.to_physical(k, r));
                acc += half * w * e * e;
            }
        }
        Ok(acc.sqrt())
    }

    /// `(u, v)_{L²}` computed with the exact mass matrix.
    pub fn inner(&self, u: &FieldVector, v: &FieldVector) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.inner_raw(&u.values, &v.values))
    }

    /// `(u, v)` for raw nodal vectors of this space.
    pub fn inner_raw(&self, u: &[f64], v: &[f64]) -> f64 {
        let np = self.n_local();
        let half = 0.5 * self.mesh.h();
        let m = &self.basis.mass;
        let mut acc = 0.0;
        for (uk, vk) in u.chunks_exact(np).zip(v.chunks_exact(np)) {
            for i in 0..np {
                let mv: f64 = (0..np).map(|j| m[(i, j)] * vk[j]).sum();
                acc += uk[i] * mv;
            }
        }
        half * acc
    }

    pub fn norm(&self, u: &FieldVector) -> Result<f64> {
        Ok(self.inner(u, u)?.max(0.0).sqrt())
    }

    /// Applies the block-diagonal global mass matrix.
    pub fn mass_apply(&self, u: &[f64], out: &mut [f64]) {
        let np = self.n_local();
        let half = 0.5 * self.mesh.h();
        let m = &self.basis.mass;
        for (uk, ok) in u.chunks_exact(np).zip(out.chunks_exact_mut(np)) {
            for i in 0..np {
                ok[i] = half * (0..np).map(|j| m[(i, j)] * uk[j]).sum::<f64>();
            }
        }
    }

    /// Solves `M_global x = rhs` block by block, in place.
    pub fn mass_solve_in_place(&self, rhs: &mut [f64]) {
        let np = self.n_local();
        let inv_half = 2.0 / self.mesh.h();
        let minv = &self.basis.mass_inv;
        let mut tmp = vec![0.0; np];
        for block in rhs.chunks_exact_mut(np) {
            for i in 0..np {
                tmp[i] = inv_half * (0..np).map(|j| minv[(i, j)] * block[j]).sum::<f64>();
            }
            block.copy_from_slice(&tmp);
        }
    }

    /// Dense global mass matrix (tests and small problems).
    pub fn global_mass(&self) -> DMatrix<f64> {
        let np = self.n_local();
        let n = self.n_dof();
        let half = 0.5 * self.mesh.h();
        let mut m = DMatrix::zeros(n, n);
        for k in 0..self.mesh.num_cells() {
            for i in 0..np {
                for j in 0..np {
                    m[(k * np + i, k * np + j)] = half * self.basis.mass[(i, j)];
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mesh_examples() {
        let m = build_mesh(-1.0, 1.0, 2).unwrap();
        assert_eq!(m.boundaries, vec![-1.0, 0.0, 1.0]);
        let m = build_mesh(0.0, 1.0, 10).unwrap();
        assert_relative_eq!(m.dx_min, 0.1, epsilon = 1e-15);
        let m = build_mesh(-25.0, 25.0, 200).unwrap();
        assert_eq!(m.boundaries.len(), 201);
        assert_eq!(m.dx_min, 0.25);
        assert!(matches!(build_mesh(1.0, 1.0, 3), Err(FracError::Domain(_))));
        assert!(build_mesh(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn locate_uses_left_cell_on_interfaces() {
        let m = build_mesh(0.0, 1.0, 4).unwrap();
        assert_eq!(m.locate(0.0).unwrap(), 0);
        assert_eq!(m.locate(0.25).unwrap(), 0);
        assert_eq!(m.locate(0.2500001).unwrap(), 1);
        assert_eq!(m.locate(1.0).unwrap(), 3);
        assert!(m.locate(1.0 + 1e-12).is_err());
        assert!(m.locate(-0.1).is_err());
    }

    #[test]
    fn degree_zero_basis() {
        let b = build_basis(0).unwrap();
        assert_eq!(b.ref_nodes, vec![0.0]);
        assert_relative_eq!(b.mass[(0, 0)], 2.0, epsilon = 1e-15);
        assert_eq!(b.diff[(0, 0)], 0.0);
    }

    #[test]
    fn degree_one_basis_slope() {
        let b = build_basis(1).unwrap();
        assert_eq!(b.ref_nodes, vec![-1.0, 1.0]);
        let u = [3.0, 7.0];
        for i in 0..2 {
            let du: f64 = (0..2).map(|j| b.diff[(i, j)] * u[j]).sum();
            assert_relative_eq!(du, 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn degree_four_differentiates_quartic() {
        let b = build_basis(4).unwrap();
        let u: Vec<f64> = b.ref_nodes.iter().map(|r| r.powi(4)).collect();
        for (i, r) in b.ref_nodes.iter().enumerate() {
            let du: f64 = (0..5).map(|j| b.diff[(i, j)] * u[j]).sum();
            assert!((du - 4.0 * r.powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_operator_invariants() {
        for n in 0..=MAX_DEGREE {
            let b = build_basis(n).unwrap();
            let np = n + 1;
            for i in 0..np {
                let rs: f64 = (0..np).map(|j| b.diff[(i, j)]).sum();
                assert!(rs.abs() <= 1e-12, "N={n} row {i} sum {rs}");
                for j in 0..np {
                    assert!((b.mass[(i, j)] - b.mass[(j, i)]).abs() < 1e-14);
                }
            }
            assert!(b.mass.clone().cholesky().is_some(), "mass SPD at N={n}");
            // traces of r^N, exact up to the degree
            let u: Vec<f64> = b.ref_nodes.iter().map(|r| r.powi(n as i32)).collect();
            let dot = |v: &[f64]| v.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
            let nf = n as f64;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((dot(&b.trace_right.value) - 1.0).abs() < 1e-12);
            assert!((dot(&b.trace_left.value) - sign).abs() < 1e-12);
            if n >= 1 {
                assert!((dot(&b.trace_right.d1) - nf).abs() < 1e-10);
                assert!((dot(&b.trace_left.d1) + sign * nf).abs() < 1e-10);
            }
            if n >= 2 {
                assert!((dot(&b.trace_right.d2) - nf * (nf - 1.0)).abs() < 1e-9);
                assert!((dot(&b.trace_left.d2) - sign * nf * (nf - 1.0)).abs() < 1e-9);
            }
        }
        assert!(build_basis(9).is_err());
    }

    #[test]
    fn projection_reproduces_low_degree() {
        let s = Space::uniform(-1.0, 1.0, 5, 3).unwrap();
        assert!(s.project(|_| 0.0).values.iter().all(|&v| v == 0.0));
        let u = s.project(|x| x);
        for (v, x) in u.values.iter().zip(s.node_coordinates()) {
            assert!((v - x).abs() < 1e-13);
        }
    }

    #[test]
    fn eval_field_examples() {
        let s = Space::uniform(0.0, 1.0, 4, 2).unwrap();
        let c = s.interpolate(|_| 2.5);
        assert_relative_eq!(s.eval_field(&c, &[0.37]).unwrap()[0], 2.5, epsilon = 1e-15);
        let sq = s.interpolate(|x| x * x);
        assert!((s.eval_field(&sq, &[0.3]).unwrap()[0] - 0.09).abs() < 1e-14);
        assert!(s.eval_field(&sq, &[1.5]).is_err());
    }

    #[test]
    fn l2_error_examples() {
        let s = Space::uniform(0.0, 1.0, 3, 2).unwrap();
        let u = s.project(|x| x * x - x);
        assert!(s.l2_error(&u, |x| x * x - x).unwrap() < 1e-13);
        let z = s.zeros();
        assert_relative_eq!(s.l2_error(&z, |_| 1.0).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn tag_mismatch_rejected() {
        let s = Space::uniform(0.0, 1.0, 3, 2).unwrap();
        let t = Space::uniform(0.0, 1.0, 4, 2).unwrap();
        assert!(matches!(s.norm(&t.zeros()), Err(FracError::SpaceMismatch(_))));
        assert!(FieldVector::from_values(s.tag(), vec![0.0; 5]).is_err());
    }

    #[test]
    fn mass_solve_inverts_apply() {
        let s = Space::uniform(-2.0, 1.0, 4, 3).unwrap();
        let u = s.project(|x| (3.0 * x).sin());
        let mut mu = vec![0.0; s.n_dof()];
        s.mass_apply(&u.values, &mut mu);
        s.mass_solve_in_place(&mut mu);
        for (a, b) in mu.iter().zip(&u.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
