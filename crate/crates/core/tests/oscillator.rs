use std::f64::consts::FRAC_1_SQRT_2;

use approx::assert_relative_eq;
use gaussdyn::evolution::propagator_1d;
use gaussdyn::hamiltonian::{constant_fn, oscillation_frequency};
use gaussdyn::*;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

const OMEGA: f64 = 2.0;
const NU: f64 = 1.0;

fn squeezed_state() -> GaussianState {
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 1.0]);
    GaussianState::new(DVector::from_vec(vec![0.0, 1.0]), cov).unwrap()
}

/// Closed-form `(σ_pp, σ_qq, σ_pq, ⟨p⟩, ⟨q⟩)` of the coupled oscillator.
fn closed_form(t: f64, s0: &GaussianState) -> [f64; 5] {
    let (w, v) = (OMEGA, NU);
    let w2 = w * w;
    let f = (4.0 * (w2 - v * v)).sqrt();
    let (x0, y0, z0) = (s0.cov()[(0, 0)], s0.cov()[(1, 1)], s0.cov()[(0, 1)]);
    let (p0, q0) = (s0.mean()[0], s0.mean()[1]);
    let (s, c) = (f * t).sin_cos();
    let f2 = f * f;
    let spp = -2.0
        * (f * s * (w2 * z0 + v * x0) + c * (w2 * w2 * y0 - w2 * (x0 - 2.0 * v * z0) + 2.0 * v * v * x0)
            - w2 * (w2 * y0 + x0 + 2.0 * v * z0))
        / f2;
    let sqq = 2.0 * (-c * (-w2 * y0 + x0 + 2.0 * v * (v * y0 + z0)) + f * s * (v * y0 + z0) + w2 * y0 + x0 + 2.0 * v * z0)
        / f2;
    let spq = (2.0 * c * (w2 * (v * y0 + 2.0 * z0) + v * x0) + f * s * (x0 - w2 * y0)
        - 2.0 * v * (w2 * y0 + x0 + 2.0 * v * z0))
        / f2;
    let (sh, ch) = (f * t / 2.0).sin_cos();
    let p = p0 * ch - (2.0 / f) * (w2 * q0 + v * p0) * sh;
    let q = q0 * ch + (2.0 / f) * (v * q0 + p0) * sh;
    [spp, sqq, spq, p, q]
}

fn max_closed_form_error(traj: &Trajectory, s0: &GaussianState) -> f64 {
    let mut err: f64 = 0.0;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let [spp, sqq, spq, p, q] = closed_form(*t, s0);
        let got = [s.cov()[(0, 0)], s.cov()[(1, 1)], s.cov()[(0, 1)], s.mean()[0], s.mean()[1]];
        for (a, b) in got.iter().zip([spp, sqq, spq, p, q]) {
            err = err.max((a - b).abs());
        }
    }
    err
}

#[test]
fn oscillator_matches_closed_form_rk4() {
    let s0 = squeezed_state();
    let h = build_coupled_oscillator(OMEGA, NU);
    let traj = evolve(&h, &s0, &IntegratorConfig::rk4(1e-3, 10.0, 10)).unwrap();
    assert_eq!(traj.len(), 1001);
    assert_eq!(*traj.times.last().unwrap(), 10.0);
    let err = max_closed_form_error(&traj, &s0);
    assert!(err <= 1e-8, "closed-form deviation {err:e}");
    let det_err = traj.dets().iter().map(|d| (d - 0.5).abs()).fold(0.0, f64::max);
    assert!(det_err <= 1e-9, "det drift {det_err:e}");
    let drift = traj.max_symplectic_drift().unwrap();
    assert!(drift <= 1e-8, "frame drift {drift:e}");
}

#[test]
fn oscillator_matches_closed_form_rk45() {
    let s0 = squeezed_state();
    let h = build_coupled_oscillator(OMEGA, NU);
    let traj = evolve(&h, &s0, &IntegratorConfig::rk45(0.05, 10.0)).unwrap();
    let err = max_closed_form_error(&traj, &s0);
    assert!(err <= 1e-7, "closed-form deviation {err:e}");
}

#[test]
fn closed_form_starts_at_initial_data() {
    let s0 = squeezed_state();
    let [spp, sqq, spq, p, q] = closed_form(0.0, &s0);
    assert_relative_eq!(spp, 1.0, epsilon = 1e-14);
    assert_relative_eq!(sqq, 1.0, epsilon = 1e-14);
    assert_relative_eq!(spq, FRAC_1_SQRT_2, epsilon = 1e-14);
    assert_eq!((p, q), (0.0, 1.0));
    assert_relative_eq!(oscillation_frequency(OMEGA, NU), 12f64.sqrt(), epsilon = 1e-15);
}

#[test]
fn apply_frame_equals_direct_integration() {
    let s0 = squeezed_state();
    let h = build_coupled_oscillator(OMEGA, NU);
    let traj = evolve(&h, &s0, &IntegratorConfig::rk4(1e-3, 10.0, 100)).unwrap();
    let frames = traj.frames.as_ref().unwrap();
    for (f, s) in frames.iter().zip(&traj.states) {
        let via = apply_frame(&s0, f).unwrap();
        assert!((via.cov() - s.cov()).amax() <= 1e-7);
        assert!((via.mean() - s.mean()).amax() <= 1e-7);
    }
}

#[test]
fn frame_rows_follow_hamilton_equations() {
    // Constant B, no drive: (λ₁, λ₂) behaves as (q, −p) of the classical flow.
    let (b11, b12, b22) = (0.7, -0.2, 1.3);
    let h = build_generic_1d(
        constant_fn(b11),
        constant_fn(b12),
        constant_fn(b22),
        constant_fn(0.0),
        constant_fn(0.0),
    );
    let cfg = IntegratorConfig::rk4(1e-3, 4.0, 50);
    let frames = evolve_frames(&h, &cfg).unwrap();

    let classical = |t_end: f64, p0: f64, q0: f64| {
        let f = |_t: f64, y: &DVector<f64>| {
            let (p, q) = (y[0], y[1]);
            DVector::from_vec(vec![-2.0 * b12 * p - 2.0 * b22 * q, 2.0 * b11 * p + 2.0 * b12 * q])
        };
        let mut d = gaussdyn::ode::Dopri5::new(1e-12, 1e-14);
        d.advance(&f, 0.0, DVector::from_vec(vec![p0, q0]), t_end).unwrap()
    };
    for fr in frames.iter().skip(1) {
        let [l1, l2, _, l4, l5, _] = fr.lambdas();
        let a = classical(fr.t, 0.0, 1.0);
        assert!((l1 - a[1]).abs() < 1e-9 && (l2 + a[0]).abs() < 1e-9, "t = {}", fr.t);
        let b = classical(fr.t, -1.0, 0.0);
        assert!((l4 - b[1]).abs() < 1e-9 && (l5 + b[0]).abs() < 1e-9, "t = {}", fr.t);
    }
}

#[test]
fn free_particle_propagator() {
    let h = build_generic_1d(
        constant_fn(0.5),
        constant_fn(0.0),
        constant_fn(0.0),
        constant_fn(0.0),
        constant_fn(0.0),
    );
    let frames = evolve_frames(&h, &IntegratorConfig::rk4(1e-3, 1.5, 500)).unwrap();
    for f in frames.iter().skip(1) {
        let t = f.t;
        assert_relative_eq!(f.lambdas()[3], -t, epsilon = 1e-12);
        for (x, xp) in [(0.0, 0.0), (0.4, -0.3), (1.2, 0.7)] {
            let g = propagator_1d(f, f.phase_integral, x, xp).unwrap();
            let free = (Complex64::new(0.0, 2.0 * std::f64::consts::PI * t)).sqrt().inv()
                * Complex64::new(0.0, (x - xp) * (x - xp) / (2.0 * t)).exp();
            assert_relative_eq!(g.norm_sqr(), 1.0 / (2.0 * std::f64::consts::PI * t), epsilon = 1e-10);
            let d = (g - free).norm();
            assert!(d < 1e-9, "t = {t}, x = {x}, x' = {xp}: {d:e}");
        }
        let a = propagator_1d(f, f.phase_integral, 0.3, -0.8).unwrap();
        let b = propagator_1d(f, f.phase_integral, -0.8, 0.3).unwrap();
        assert_relative_eq!(a.norm(), b.norm(), epsilon = 1e-12);
    }
}

#[test]
fn propagator_sandwich_reproduces_parameter_flow() {
    // ρ(t)(x, x') = ∬ G(x, x₁) ρ₀(x₁, x₂) G*(x', x₂) dx₁ dx₂ at t = 0.3
    let s0 = squeezed_state();
    let p0 = params_from_state_1d(&s0).unwrap();
    let h = build_coupled_oscillator(OMEGA, NU);
    let f = evolve_frames(&h, &IntegratorConfig::rk4(1e-3, 0.3, 300)).unwrap().pop().unwrap();
    assert_relative_eq!(f.t, 0.3, epsilon = 1e-12);
    let pt = gaussdyn::evolution::params_closed_form_1d(&p0, &f).unwrap();

    // trapezoid on a wide grid: spectrally accurate for the smooth,
    // Gaussian-damped chirp the kernels produce
    let c0 = s0.mean()[1];
    let (half, h) = (12.0, 0.02);
    let n = (2.0 * half / h) as usize + 1;
    let grid: Vec<f64> = (0..n).map(|k| c0 - half + k as f64 * h).collect();
    for (x, xp) in [(0.0, 0.0), (0.5, 0.9), (-0.4, 1.3), (1.1, 0.2)] {
        let g1: Vec<Complex64> = grid.iter().map(|&x1| propagator_1d(&f, f.phase_integral, x, x1).unwrap()).collect();
        let g2: Vec<Complex64> =
            grid.iter().map(|&x2| propagator_1d(&f, f.phase_integral, xp, x2).unwrap().conj()).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &x1) in grid.iter().enumerate() {
            for (j, &x2) in grid.iter().enumerate() {
                acc += g1[i] * density_eval_1d(&p0, x1, x2).unwrap() * g2[j];
            }
        }
        acc *= h * h;
        let expect = density_eval_1d(&pt, x, xp).unwrap();
        assert!((acc - expect).norm() <= 1e-5, "({x}, {xp}): {acc} vs {expect}");
    }
}

#[test]
fn parameter_closed_form_matches_parameter_flow() {
    let s0 = squeezed_state();
    let p0 = params_from_state_1d(&s0).unwrap();
    let h = build_coupled_oscillator(OMEGA, NU);
    let cfg = IntegratorConfig::rk4(1e-3, 5.0, 50);
    let traj = evolve_params_1d(&h, &p0, &cfg).unwrap();
    let frames = evolve_frames(&h, &cfg).unwrap();
    for (f, rec) in frames.iter().zip(traj.params.as_ref().unwrap()) {
        let gaussdyn::evolution::ParamsRecord::OneMode(p) = rec else {
            panic!("one-mode record expected")
        };
        let c = gaussdyn::evolution::params_closed_form_1d(&p0, f).unwrap();
        assert!((c.a1 - p.a1).norm() < 1e-8 && (c.a12 - p.a12).abs() < 1e-8 && (c.b - p.b).norm() < 1e-8);
    }
}
