//! Library results checked against independently computed reference values.

use approx::assert_relative_eq;
use fracddg::ddg_spatial::{assemble_q_operator, DiffusionOperator, FluxParams};
use fracddg::fracops::{assemble_frac_operator, frac_integral_element, riesz_frac_deriv_poly, riesz_scale};
use fracddg::meshbasis::Space;
use fracddg::specfun::{gamma_fn, gauss_jacobi, gauss_legendre, ShiftedPoly};
use nalgebra::{DMatrix, DVector};

fn simpson_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[test]
fn gamma_reference_values() {
    assert_eq!(gamma_fn(5.0).unwrap(), 24.0);
    assert_relative_eq!(gamma_fn(0.5).unwrap(), 1.7724538509055160, max_relative = 1e-14);
    // mpmath: gamma(7.9)
    assert_relative_eq!(gamma_fn(7.9).unwrap(), 4122.70948428544, max_relative = 1e-13);
    assert!(gamma_fn(0.0).is_err());
}

#[test]
fn jacobi_rules_against_moments() {
    let r = gauss_jacobi(4, -0.5, 0.0).unwrap();
    assert_relative_eq!(r.integrate(|_| 1.0), 2.0 * 2f64.sqrt(), max_relative = 1e-13);
    let mu: f64 = 0.4;
    let r = gauss_jacobi(6, mu - 1.0, 0.0).unwrap();
    // (1-t)^{μ-1} t³ with the singularity removed by t = 1 - w^{1/μ}
    let oracle = simpson_adaptive(&|w: f64| (1.0 - w.powf(1.0 / mu)).powi(3) / mu, 0.0, 2f64.powf(mu), 1e-15);
    assert_relative_eq!(r.integrate(|t| t.powi(3)), oracle, max_relative = 1e-11);
    let gl = gauss_legendre(5).unwrap();
    assert!((gl.integrate(|x| x.powi(8)) - 2.0 / 9.0).abs() < 1e-14);
}

#[test]
fn element_integral_against_adaptive_quadrature() {
    let mu = 0.35;
    let p = ShiftedPoly::new(0.3, vec![0.7, -1.2, 0.4, 2.0]);
    let g = gamma_fn(mu).unwrap();
    for (cell, x) in [((0.0, 0.5), 0.31f64), ((0.0, 0.5), 0.5), ((0.0, 0.5), 0.55), ((0.0, 0.5), 2.3)] {
        let (c, d): (f64, f64) = cell;
        let hi = x.min(d);
        // ∫_c^{hi} (x-s)^{μ-1} p(s) ds with s = x - w^{1/μ}
        let lo_w = (x - hi).powf(mu);
        let hi_w = (x - c).powf(mu);
        let oracle = simpson_adaptive(&|w: f64| p.eval(x - w.powf(1.0 / mu)) / mu, lo_w, hi_w, 1e-15) / g;
        let got = frac_integral_element(mu, cell, &p, x).unwrap();
        assert!((got - oracle).abs() < 1e-11 * oracle.abs().max(1.0), "x={x}: {got} vs {oracle}");
    }
}

/// Monomial coefficients (in physical `x`) of every basis function of cell `k`.
fn basis_monomials(space: &Space, k: usize) -> Vec<Vec<f64>> {
    let np = space.n_local();
    let (c, d) = space.mesh.cell(k);
    let pts: Vec<f64> = (0..np).map(|i| c + (d - c) * (i as f64 + 0.5) / np as f64).collect();
    let v = DMatrix::from_fn(np, np, |i, j| pts[i].powi(j as i32));
    let lu = v.lu();
    (0..np)
        .map(|j| {
            let rhs = DVector::from_iterator(np, pts.iter().map(|&x| space.basis.eval_basis(space.mesh.to_reference(k, x))[j]));
            lu.solve(&rhs).unwrap().iter().copied().collect()
        })
        .collect()
}

/// Taylor coefficients of the monomial polynomial `p` about `x0`.
fn taylor(p: &[f64], x0: f64) -> Vec<f64> {
    let mut c = p.to_vec();
    let n = c.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            c[j] += x0 * c[j + 1];
        }
    }
    c
}

/// `∫_c^d p(y) |x - y|^{μ-1} dy` in closed form.
fn kernel_integral(p: &[f64], mu: f64, c: f64, d: f64, x: f64) -> f64 {
    let t = taylor(p, x);
    let mut acc = 0.0;
    for (m, &a) in t.iter().enumerate() {
        let e = m as f64 + mu;
        if d > x {
            let lo = (c - x).max(0.0);
            acc += a * ((d - x).powf(e) - lo.powf(e)) / e;
        }
        if c < x {
            let lo = (x - d).max(0.0);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * a * ((x - c).powf(e) - lo.powf(e)) / e;
        }
    }
    acc
}

fn graded_integral<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let rule = gauss_legendre(12).unwrap();
    let mid = 0.5 * (a + b);
    let mut cuts = vec![a];
    for j in (1..30).rev() {
        cuts.push(a + (mid - a) * 0.25f64.powi(j));
    }
    cuts.push(mid);
    for j in 1..30 {
        cuts.push(b - (b - mid) * 0.25f64.powi(j));
    }
    cuts.push(b);
    cuts.windows(2).map(|w| rule.integrate_on(w[0], w[1], &f)).sum()
}

#[test]
fn fractional_matrix_against_double_integral() {
    let alpha: f64 = 1.3;
    let mu = 2.0 - alpha;
    let space = Space::uniform(0.0, 1.5, 3, 2).unwrap();
    let op = assemble_frac_operator(&space, alpha).unwrap();
    let np = space.n_local();
    let scale = riesz_scale(mu) / gamma_fn(mu).unwrap();
    let polys: Vec<_> = (0..3).map(|k| basis_monomials(&space, k)).collect();
    let mut max_dev: f64 = 0.0;
    for k in 0..3 {
        for l in 0..3 {
            let (cl, dl) = space.mesh.cell(l);
            let (ck, dk) = space.mesh.cell(k);
            for i in 0..np {
                for j in 0..np {
                    let pi = &polys[k][i];
                    let pj = &polys[l][j];
                    let val = graded_integral(
                        |x| {
                            let phi: f64 = pi.iter().rev().fold(0.0, |a, v| a * x + v);
                            phi * kernel_integral(pj, mu, cl, dl, x)
                        },
                        ck,
                        dk,
                    );
                    let got = op.b[(k * np + i, l * np + j)];
                    max_dev = max_dev.max((got - scale * val).abs());
                }
            }
        }
    }
    let norm = op.b.amax();
    assert!(max_dev < 1e-10 * norm, "max deviation {max_dev:e} (|B| = {norm:e})");
}

#[test]
fn riesz_power_rule_at_interior_point() {
    // (-Δ)^{α/2} x² on [0,1] at x = 0.4 from the Caputo power rule
    let alpha: f64 = 1.5;
    let x: f64 = 0.4;
    let g = gamma_fn(3.0 - alpha).unwrap();
    let want = 2.0 * (x.powf(2.0 - alpha) + (1.0 - x).powf(2.0 - alpha)) / g / (2.0 * (std::f64::consts::PI * alpha / 2.0).cos());
    let got = riesz_frac_deriv_poly(alpha, &[0.0, 0.0, 1.0], 0.0, 1.0, x).unwrap();
    assert_relative_eq!(got, want, max_relative = 1e-13);
}

#[test]
fn heat_operator_lowest_eigenvalue() {
    let space = Space::uniform(0.0, 1.0, 32, 3).unwrap();
    let ddg = assemble_q_operator(&space, FluxParams::default_for_degree(3)).unwrap();
    let op = DiffusionOperator::new(ddg, None);
    let l = op.dense(&space);
    let ev = l.complex_eigenvalues();
    let lowest = ev
        .iter()
        .min_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap();
    let pi2 = std::f64::consts::PI.powi(2);
    assert!((lowest.re + pi2).abs() < 1e-6 * pi2, "{lowest}");
    assert!(lowest.im.abs() < 1e-8);
}

#[test]
fn l2_error_and_projection_examples() {
    let space = Space::uniform(0.0, 1.0, 5, 2).unwrap();
    let one = space.project(|_| 0.0);
    assert_relative_eq!(space.l2_error(&one, |_| 1.0).unwrap(), 1.0, max_relative = 1e-14);
    let sq = space.project(|x| x * x);
    assert!(space.l2_error(&sq, |x| x * x).unwrap() < 1e-13);
    let v = space.eval_field(&sq, &[0.3]).unwrap();
    assert!((v[0] - 0.09).abs() < 1e-14);
    // fine-quadrature oracle for a projection error
    let s4 = Space::uniform(-1.0, 1.0, 16, 4).unwrap();
    let f = |x: f64| (x * x - 1.0).powi(4);
    let p = s4.project(f);
    let mut oracle = 0.0;
    for k in 0..16 {
        let (c, d) = s4.mesh.cell(k);
        oracle += simpson_adaptive(
            &|x: f64| (s4.basis.eval_local(p.cell(k), s4.mesh.to_reference(k, x)) - f(x)).powi(2),
            c,
            d,
            1e-22,
        );
    }
    // the (N+3)-point rule is not exact for the degree-16 squared error
    assert_relative_eq!(s4.l2_error(&p, f).unwrap(), oracle.sqrt(), max_relative = 1e-6);
}
