use fracddg::fracops::assemble_frac_operator;
use fracddg::meshbasis::Space;
use fracddg::models::{Family, Model, ProblemSpec};
use fracddg::specfun::{gamma_fn, gauss_jacobi, gauss_legendre, shifted_monomial_coeffs};
use fracddg::timestep::{integrate, RunControl};
use proptest::prelude::*;

fn beta(a: f64, b: f64) -> f64 {
    gamma_fn(a).unwrap() * gamma_fn(b).unwrap() / gamma_fn(a + b).unwrap()
}

fn random_state(n: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn frac_matrix_symmetric_psd(k in 1usize..7, n in 0usize..4, alpha in 1.02f64..1.98) {
        let space = Space::uniform(-1.0, 1.0, k, n).unwrap();
        let op = assemble_frac_operator(&space, alpha).unwrap();
        let b = &op.b;
        let asym = (b - b.transpose()).amax();
        prop_assert!(asym <= 1e-10 * b.amax(), "asymmetry {asym:e}");
        let sym = (b + b.transpose()) * 0.5;
        let ev = sym.symmetric_eigenvalues();
        let norm2 = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(ev.min() >= -1e-10 * norm2, "min eigenvalue {:e}", ev.min());
    }

    #[test]
    fn recenter_round_trip(c in prop::collection::vec(-3.0f64..3.0, 1..7), x0 in -2.0f64..2.0, x1 in -2.0f64..2.0) {
        let there = shifted_monomial_coeffs(&c, x0, x1);
        let back = shifted_monomial_coeffs(&there, x1, x0);
        for (a, b) in c.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-11 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn legendre_exactness(n in 1usize..30) {
        let r = gauss_legendre(n).unwrap();
        for deg in 0..2 * n {
            let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let got = r.integrate(|x| x.powi(deg as i32));
            prop_assert!((got - want).abs() < 1e-12, "n={n} deg={deg}");
        }
    }

    #[test]
    fn jacobi_exactness(n in 1usize..20, a in -0.9f64..1.5, b in -0.9f64..1.5) {
        let r = gauss_jacobi(n, a, b).unwrap();
        for k in 0..2 * n {
            // ∫(1-t)^a (1+t)^{b+k} dt
            let want = 2f64.powf(a + b + k as f64 + 1.0) * beta(a + 1.0, b + k as f64 + 1.0);
            let got = r.integrate(|t| (1.0 + t).powi(k as i32));
            prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0), "n={n} k={k}: {got} vs {want}");
        }
    }

    #[test]
    fn projection_idempotent_and_parseval(k in 1usize..9, n in 0usize..5, seed in 0u64..1000) {
        let space = Space::uniform(-0.5, 2.0, k, n).unwrap();
        let mut u = space.zeros();
        u.values = random_state(space.n_dof(), seed);
        let again = space.project(|x| {
            let c = space.mesh.locate(x).unwrap();
            space.basis.eval_local(u.cell(c), space.mesh.to_reference(c, x))
        });
        for (a, b) in u.values.iter().zip(&again.values) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let norm = space.l2_error(&u, |_| 0.0).unwrap();
        let m = space.global_mass();
        let v = nalgebra::DVector::from_vec(u.values.clone());
        let quad = (v.transpose() * &m * &v)[(0, 0)].sqrt();
        prop_assert!((norm - quad).abs() < 1e-12 * quad.max(1.0));
    }

    #[test]
    fn nls_gauge_covariance(theta in 0.0f64..6.28, seed in 0u64..1000) {
        let spec = ProblemSpec::new(Family::Nls, 1.5, -3.0, 3.0, 6, 2);
        let m = Model::build(spec, None).unwrap();
        let n = m.n_dof();
        let y = random_state(2 * n, seed);
        let (c, s) = (theta.cos(), theta.sin());
        let mut rot = vec![0.0; 2 * n];
        for i in 0..n {
            rot[i] = c * y[i] - s * y[n + i];
            rot[n + i] = s * y[i] + c * y[n + i];
        }
        let mut w = m.work();
        let mut dy = vec![0.0; 2 * n];
        let mut dr = vec![0.0; 2 * n];
        m.rhs(0.0, &y, &mut dy, &mut w).unwrap();
        m.rhs(0.0, &rot, &mut dr, &mut w).unwrap();
        let scale = dy.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for i in 0..n {
            prop_assert!((dr[i] - (c * dy[i] - s * dy[n + i])).abs() < 1e-11 * scale);
            prop_assert!((dr[n + i] - (s * dy[i] + c * dy[n + i])).abs() < 1e-11 * scale);
        }
    }

    #[test]
    fn classical_nls_conserves_mass(seed in 0u64..1000, k in 2usize..12, n in 1usize..4) {
        let mut spec = ProblemSpec::new(Family::Nls, 2.0, -5.0, 5.0, k, n);
        spec.eps2 = 1.7;
        let m = Model::build(spec, None).unwrap();
        let y = random_state(m.state_len(), seed);
        let mut dy = vec![0.0; y.len()];
        m.rhs(0.0, &y, &mut dy, &mut m.work()).unwrap();
        let rate = m.mass_rate(&y, &dy);
        prop_assert!(rate.abs() <= 1e-8 * m.mass_norm_sq(&y), "rate {rate:e}");
    }

    #[test]
    fn linear_integration_is_homogeneous(scale in -5.0f64..5.0, seed in 0u64..1000) {
        let spec = ProblemSpec::new(Family::Diffusion, 1.4, 0.0, 1.0, 5, 2);
        let m = Model::build(spec, None).unwrap();
        let y0 = random_state(m.state_len(), seed);
        let rc = RunControl::new(0.0, 0.01, 0.1).unwrap();
        let dt = rc.step_size(m.space.mesh.dx_min, 1.4);
        let run = |y: Vec<f64>| {
            let mut w = m.work();
            let mut rhs = |t: f64, y: &[f64], dy: &mut [f64]| m.rhs(t, y, dy, &mut w);
            integrate(&mut rhs, y, &rc, dt, |_, _| Ok(())).unwrap().state
        };
        let a = run(y0.iter().map(|v| v * scale).collect());
        let b = run(y0);
        let mx = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - scale * y).abs() <= 1e-12 * mx * scale.abs().max(1.0));
        }
    }
}

#[test]
fn coupled_reduction_survives_integration() {
    let mut spec = ProblemSpec::new(Family::CoupledNls, 1.7, -2.0, 2.0, 20, 2);
    spec.f_nl = fracddg::models::Nonlinearity([0.3, 1.0, 1.0]);
    spec.g_nl = spec.f_nl;
    spec.varpi1 = 0.4;
    spec.varpi2 = 0.0;
    let m = Model::build(spec, None).unwrap();
    let n = m.n_dof();
    let half = random_state(2 * n, 11);
    let mut y0 = half.clone();
    y0.extend_from_slice(&half);
    let rc = RunControl::new(0.0, 0.05, 0.05).unwrap();
    let dt = rc.step_size(m.space.mesh.dx_min, 1.7);
    let mut w = m.work();
    let mut rhs = |t: f64, y: &[f64], dy: &mut [f64]| m.rhs(t, y, dy, &mut w);
    let r = integrate(&mut rhs, y0, &rc, dt, |_, _| Ok(())).unwrap();
    assert!(r.steps > 3);
    assert_eq!(r.state[..2 * n], r.state[2 * n..]);
}
