//! Explicit Runge–Kutta integrators on flat `DVector<f64>` states.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// One classic fourth-order Runge–Kutta step.
pub fn rk4_step<F>(f: &F, t: f64, y: &DVector<f64>, h: f64) -> DVector<f64>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &(y + &k1 * (0.5 * h)));
    let k3 = f(t + 0.5 * h, &(y + &k2 * (0.5 * h)));
    let k4 = f(t + h, &(y + &k3 * h));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights are the last row of A; E = b5 − b4
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand–Prince 5(4) integrator. The step size persists between
/// calls to [`Dopri5::advance`], so a trajectory sampled on a grid reuses
/// the controller state.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    h: Option<f64>,
    pub accepted: usize,
    pub rejected: usize,
}

impl Dopri5 {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            max_steps: 2_000_000,
            h: None,
            accepted: 0,
            rejected: 0,
        }
    }

    fn error_norm(&self, y: &DVector<f64>, y_new: &DVector<f64>, err: &DVector<f64>) -> f64 {
        let n = y.len().max(1) as f64;
        // components that cancel down to zero while others grow cannot be
        // resolved below the roundoff of the largest entry
        let floor = 64.0 * f64::EPSILON * y.amax().max(y_new.amax());
        let s: f64 = err
            .iter()
            .zip(y.iter().zip(y_new.iter()))
            .map(|(e, (a, b))| {
                let sc = self.abs_tol + self.rel_tol * a.abs().max(b.abs()) + floor;
                (e / sc).powi(2)
            })
            .sum();
        (s / n).sqrt()
    }

    /// Integrates from `t0` to exactly `t1`.
    pub fn advance<F>(&mut self, f: &F, t0: f64, y0: DVector<f64>, t1: f64) -> Result<DVector<f64>>
    where
        F: Fn(f64, &DVector<f64>) -> DVector<f64>,
    {
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(y0);
        }
        let mut t = t0;
        let mut y = y0;
        let mut h = self.h.unwrap_or_else(|| (span * 0.01).min(1e-3)).min(span);
        let mut k1 = f(t, &y);
        let mut steps = 0usize;
        loop {
            let remaining = t1 - t;
            let last = h >= remaining * (1.0 - 1e-12);
            let h_try = if last { remaining } else { h };
            if h_try < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow(t));
            }

            let mut k: [DVector<f64>; 7] = std::array::from_fn(|_| DVector::zeros(0));
            k[0] = k1.clone();
            for s in 1..7 {
                let mut ys = y.clone();
                for (j, kj) in k.iter().enumerate().take(s) {
                    if A[s][j] != 0.0 {
                        ys.axpy(h_try * A[s][j], kj, 1.0);
                    }
                }
                k[s] = f(t + C[s] * h_try, &ys);
            }
            let mut y_new = y.clone();
            for (j, kj) in k.iter().enumerate().take(6) {
                if A[6][j] != 0.0 {
                    y_new.axpy(h_try * A[6][j], kj, 1.0);
                }
            }
            let mut err = DVector::zeros(y.len());
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    err.axpy(h_try * E[j], kj, 1.0);
                }
            }
            let en = self.error_norm(&y, &y_new, &err);
            let factor = if en == 0.0 {
                5.0
            } else if !en.is_finite() {
                0.2
            } else {
                (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
            };

            steps += 1;
            if steps > self.max_steps {
                return Err(Error::StepSizeUnderflow(t));
            }
            if en <= 1.0 {
                self.accepted += 1;
                t = if last { t1 } else { t + h_try };
                y = y_new;
                k1 = std::mem::take(&mut k[6]); // FSAL
                if !last {
                    h = h_try * factor;
                } else {
                    // keep the controller's proposal rather than the clipped step
                    self.h = Some(if h_try < h { h } else { h_try * factor });
                    return Ok(y);
                }
            } else {
                self.rejected += 1;
                h = h_try * factor.min(1.0);
            }
        }
    }
}
