//! Classical four-stage Runge–Kutta integration of `y' = F(t, y)` with the
//! fractional CFL step `Δt = C · Δx_min^α`.

use crate::error::{FracError, Result};

/// Step-size and output schedule of one integration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunControl {
    pub t0: f64,
    pub t_final: f64,
    pub cfl: f64,
    pub dt_override: Option<f64>,
    /// Times at which the state is recorded; each is hit exactly.
    pub snapshot_times: Vec<f64>,
}

impl RunControl {
    pub fn new(t0: f64, t_final: f64, cfl: f64) -> Result<Self> {
        let rc = Self {
            t0,
            t_final,
            cfl,
            dt_override: None,
            snapshot_times: Vec::new(),
        };
        rc.validate()?;
        Ok(rc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > self.t0) {
            return Err(FracError::Parameter(format!(
                "final time {} must exceed start time {}",
                self.t_final, self.t0
            )));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(FracError::Parameter(format!(
                "CFL constant must lie in (0, 1), got {}",
                self.cfl
            )));
        }
        if let Some(dt) = self.dt_override {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(FracError::Parameter(format!("time step must be positive, got {dt}")));
            }
        }
        Ok(())
    }

    /// `dt_override`, or `cfl · dx_min^alpha`.
    pub fn step_size(&self, dx_min: f64, alpha: f64) -> f64 {
        self.dt_override.unwrap_or_else(|| cfl_dt(self.cfl, dx_min, alpha))
    }
}

/// `C · Δx^α`.
pub fn cfl_dt(cfl: f64, dx_min: f64, alpha: f64) -> f64 {
    cfl * dx_min.powf(alpha)
}

/// Stage storage reused across steps.
#[derive(Debug, Clone)]
pub struct Rk4Work {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Work {
    pub fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

fn check_finite(t: f64, stage: &str, v: &[f64]) -> Result<()> {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(FracError::Integration {
            t,
            reason: format!("non-finite value in {stage} at index {i}"),
        });
    }
    Ok(())
}

/// One RK4 step, in place:
/// `y ← y + dt (k₁ + 2k₂ + 2k₃ + k₄)/6` with stage times `t, t+dt/2, t+dt/2, t+dt`.
pub fn erk4_step<F>(rhs: &mut F, y: &mut [f64], t: f64, dt: f64, work: &mut Rk4Work) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if !(dt > 0.0) {
        return Err(FracError::Parameter(format!("time step must be positive, got {dt}")));
    }
    let Rk4Work { k1, k2, k3, k4, tmp } = work;
    let half = 0.5 * dt;
    rhs(t, y, k1)?;
    check_finite(t, "stage 1", k1)?;
    for ((o, a), k) in tmp.iter_mut().zip(y.iter()).zip(k1.iter()) {
        *o = a + half * k;
    }
    rhs(t + half, tmp, k2)?;
    check_finite(t, "stage 2", k2)?;
    for ((o, a), k) in tmp.iter_mut().zip(y.iter()).zip(k2.iter()) {
        *o = a + half * k;
    }
    rhs(t + half, tmp, k3)?;
    check_finite(t, "stage 3", k3)?;
    for ((o, a), k) in tmp.iter_mut().zip(y.iter()).zip(k3.iter()) {
        *o = a + dt * k;
    }
    rhs(t + dt, tmp, k4)?;
    check_finite(t, "stage 4", k4)?;
    let sixth = dt / 6.0;
    for i in 0..y.len() {
        y[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    check_finite(t + dt, "updated state", y)
}

/// Final state, step statistics and recorded snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct Integration {
    pub state: Vec<f64>,
    pub steps: usize,
    /// Nominal step (the last step of each segment may be shorter).
    pub dt: f64,
    pub snapshots: Vec<(f64, Vec<f64>)>,
}

/// Integrates from `control.t0` to `control.t_final` with nominal step `dt`,
/// shortening the step before each snapshot time and the final time.
/// `observer` sees the state after every accepted step.
pub fn integrate<F, O>(
    rhs: &mut F,
    state0: Vec<f64>,
    control: &RunControl,
    dt: f64,
    mut observer: O,
) -> Result<Integration>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(f64, &[f64]) -> Result<()>,
{
    control.validate()?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(FracError::Parameter(format!("time step must be positive, got {dt}")));
    }
    let mut stops: Vec<f64> = control
        .snapshot_times
        .iter()
        .copied()
        .filter(|&s| s > control.t0 && s < control.t_final)
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    stops.push(control.t_final);
    let mut snapshots = Vec::new();
    if control.snapshot_times.iter().any(|&s| s == control.t0) {
        snapshots.push((control.t0, state0.clone()));
    }

    let mut y = state0;
    let mut work = Rk4Work::new(y.len());
    let mut t = control.t0;
    let mut steps = 0usize;
    for stop in stops {
        loop {
            let remaining = stop - t;
            if remaining <= 1e-14 * stop.abs().max(1.0) {
                break;
            }
            // absorb a sliver below 1e-10·dt into the current step
            let h = if remaining <= dt * (1.0 + 1e-10) { remaining } else { dt };
            erk4_step(rhs, &mut y, t, h, &mut work)?;
            t = if h == remaining { stop } else { t + h };
            steps += 1;
            observer(t, &y)?;
        }
        t = stop;
        if control.snapshot_times.iter().any(|&s| s == stop) {
            snapshots.push((stop, y.clone()));
        }
    }
    Ok(Integration {
        state: y,
        steps,
        dt,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rhs_keeps_state() {
        let mut rhs = |_t: f64, _y: &[f64], out: &mut [f64]| {
            out.iter_mut().for_each(|v| *v = 0.0);
            Ok(())
        };
        let mut y = vec![1.0, -2.0];
        let mut w = Rk4Work::new(2);
        erk4_step(&mut rhs, &mut y, 0.0, 0.3, &mut w).unwrap();
        assert_eq!(y, vec![1.0, -2.0]);
    }

    #[test]
    fn stability_polynomial() {
        let lambda = -2.5;
        let dt = 0.3;
        let mut rhs = |_t: f64, y: &[f64], out: &mut [f64]| {
            out[0] = lambda * y[0];
            Ok(())
        };
        let mut y = vec![1.0];
        erk4_step(&mut rhs, &mut y, 0.0, dt, &mut Rk4Work::new(1)).unwrap();
        let z: f64 = lambda * dt;
        let want = 1.0 + z + z * z / 2.0 + z.powi(3) / 6.0 + z.powi(4) / 24.0;
        assert!((y[0] - want).abs() < 1e-15);
    }

    #[test]
    fn cosine_quadrature() {
        let mut rhs = |t: f64, _y: &[f64], out: &mut [f64]| {
            out[0] = t.cos();
            Ok(())
        };
        let rc = RunControl::new(0.0, 1.0, 0.5).unwrap();
        let r = integrate(&mut rhs, vec![0.0], &rc, 0.1, |_, _| Ok(())).unwrap();
        assert_eq!(r.steps, 10);
        assert!((r.state[0] - 1f64.sin()).abs() < 1e-5);
    }

    #[test]
    fn cfl_formula() {
        assert!((cfl_dt(0.1, 0.1, 1.5) - 3.1622776601683795e-3).abs() < 1e-15);
    }

    #[test]
    fn last_step_shortened() {
        let mut rhs = |_t: f64, _y: &[f64], out: &mut [f64]| {
            out[0] = 1.0;
            Ok(())
        };
        let rc = RunControl::new(0.0, 1.0, 0.5).unwrap();
        let mut last = 0.0;
        let r = integrate(&mut rhs, vec![0.0], &rc, 0.3, |t, _| {
            last = t;
            Ok(())
        })
        .unwrap();
        assert_eq!(r.steps, 4);
        assert_eq!(last, 1.0);
        assert!((r.state[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nan_is_reported() {
        let mut rhs = |_t: f64, _y: &[f64], out: &mut [f64]| {
            out[0] = f64::NAN;
            Ok(())
        };
        let mut y = vec![0.0];
        let e = erk4_step(&mut rhs, &mut y, 0.0, 0.1, &mut Rk4Work::new(1)).unwrap_err();
        assert!(matches!(e, FracError::Integration { .. }));
    }

    #[test]
    fn snapshots_hit_exactly() {
        let mut rhs = |_t: f64, _y: &[f64], out: &mut [f64]| {
            out[0] = 2.0;
            Ok(())
        };
        let mut rc = RunControl::new(0.0, 1.0, 0.5).unwrap();
        rc.snapshot_times = vec![0.0, 0.35, 1.0];
        let r = integrate(&mut rhs, vec![0.0], &rc, 0.1, |_, _| Ok(())).unwrap();
        let times: Vec<f64> = r.snapshots.iter().map(|s| s.0).collect();
        assert_eq!(times, vec![0.0, 0.35, 1.0]);
        assert!((r.snapshots[1].1[0] - 0.7).abs() < 1e-14);
    }

    #[test]
    fn invalid_control() {
        assert!(RunControl::new(1.0, 1.0, 0.1).is_err());
        assert!(RunControl::new(0.0, 1.0, 1.0).is_err());
    }
}
