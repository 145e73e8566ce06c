//! Symplectic and optical tomograms of Gaussian states, thermal and Fock
//! reference tomograms, and Fock-state overlaps.
//!
//! A quadrature frame `(μ, ν)` selects `X = μq̂ + νp̂`; the optical tomogram
//! is the slice `μ = cos θ`, `ν = sin θ`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::{try_map_with, Exec};
use crate::quadrature::{cached_rule, hermite_function, hermite_polys, GaussHermite};
use crate::state::{params_from_state_1d, require_physical, state_from_params_1d, DensityParams1D, GaussianState};

/// Agreement required between the two quadrature orders in [`fock_overlap`].
pub const OVERLAP_TOL: f64 = 1e-6;
/// Orders compared by [`fock_overlap`].
pub const OVERLAP_ORDERS: (usize, usize) = (64, 128);
/// Points used by [`normalization_residual`].
pub const NORMALIZATION_POINTS: usize = 200;

/// Normal-distribution tomogram of a one- or two-mode Gaussian state.
///
/// `mean_form` holds `(⟨q₁⟩, ⟨p₁⟩, …)`, the coefficients of `(μ₁, ν₁, …)`
/// in `X̄`; `dispersion_form` is the covariance in `(q₁, p₁, …)` order, so
/// `σ(μ, ν) = aᵀ D a` with `a = (μ, ν)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTomogram {
    mean_form: DVector<f64>,
    dispersion_form: DMatrix<f64>,
}

fn check_frame(mu: f64, nu: f64) -> Result<()> {
    if !(mu.is_finite() && nu.is_finite()) || (mu == 0.0 && nu == 0.0) {
        return Err(Error::DegenerateFrame);
    }
    Ok(())
}

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    (-d * d / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

impl GaussianTomogram {
    /// Reorders a `(p, q)` state into the `(q, p)` frame layout.
    fn from_state(s: &GaussianState) -> Self {
        let n = s.n_modes();
        let perm = |k: usize| k ^ 1;
        Self {
            mean_form: DVector::from_fn(2 * n, |k, _| s.mean()[perm(k)]),
            dispersion_form: DMatrix::from_fn(2 * n, 2 * n, |i, j| s.cov()[(perm(i), perm(j))]),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.mean_form.len() / 2
    }

    pub fn mean_form(&self) -> &DVector<f64> {
        &self.mean_form
    }

    pub fn dispersion_form(&self) -> &DMatrix<f64> {
        &self.dispersion_form
    }

    fn require_modes(&self, n: usize) -> Result<()> {
        if self.n_modes() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.n_modes(),
            });
        }
        Ok(())
    }

    /// `X̄(μ, ν) = μ⟨q̂⟩ + ν⟨p̂⟩` of a one-mode tomogram.
    pub fn mean(&self, mu: f64, nu: f64) -> Result<f64> {
        self.require_modes(1)?;
        Ok(mu * self.mean_form[0] + nu * self.mean_form[1])
    }

    /// `σ(μ, ν) = μ²σ_qq + ν²σ_pp + 2μνσ_pq` of a one-mode tomogram.
    pub fn dispersion(&self, mu: f64, nu: f64) -> Result<f64> {
        self.require_modes(1)?;
        let d = &self.dispersion_form;
        Ok(mu * mu * d[(0, 0)] + nu * nu * d[(1, 1)] + 2.0 * mu * nu * d[(0, 1)])
    }

    /// Optical dispersion `σ(θ) = cos²θ σ_qq + sin²θ σ_pp + sin 2θ σ_pq`.
    pub fn optical_dispersion(&self, theta: f64) -> Result<f64> {
        self.require_modes(1)?;
        let d = &self.dispersion_form;
        let (s, c) = theta.sin_cos();
        Ok(c * c * d[(0, 0)] + s * s * d[(1, 1)] + (2.0 * theta).sin() * d[(0, 1)])
    }

    /// `(X̄₁, X̄₂)` of a two-mode tomogram.
    pub fn x_mean(&self, frames: [(f64, f64); 2]) -> Result<Vector2<f64>> {
        self.require_modes(2)?;
        let m = &self.mean_form;
        let [(mu1, nu1), (mu2, nu2)] = frames;
        Ok(Vector2::new(mu1 * m[0] + nu1 * m[1], mu2 * m[2] + nu2 * m[3]))
    }

    /// The 2×2 quadrature covariance `[[⟨X₁²⟩, ⟨X₁X₂⟩], [⟨X₁X₂⟩, ⟨X₂²⟩]]`.
    pub fn x_covariance(&self, frames: [(f64, f64); 2]) -> Result<Matrix2<f64>> {
        self.require_modes(2)?;
        let d = &self.dispersion_form;
        let [(mu1, nu1), (mu2, nu2)] = frames;
        // indices: q₁ = 0, p₁ = 1, q₂ = 2, p₂ = 3
        let x11 = mu1 * mu1 * d[(0, 0)] + nu1 * nu1 * d[(1, 1)] + 2.0 * mu1 * nu1 * d[(0, 1)];
        let x22 = mu2 * mu2 * d[(2, 2)] + nu2 * nu2 * d[(3, 3)] + 2.0 * mu2 * nu2 * d[(2, 3)];
        // the cross term pairs q₁ with p₂, not q₁ with p₁
        let x12 = mu1 * mu2 * d[(0, 2)] + nu1 * nu2 * d[(1, 3)] + mu1 * nu2 * d[(0, 3)] + mu2 * nu1 * d[(2, 1)];
        Ok(Matrix2::new(x11, x12, x12, x22))
    }

    /// Joint density `w(X₁, X₂ | μ₁, ν₁, μ₂, ν₂)`.
    pub fn pdf2(&self, x: [f64; 2], frames: [(f64, f64); 2]) -> Result<f64> {
        for (mu, nu) in frames {
            check_frame(mu, nu)?;
        }
        let c = self.x_covariance(frames)?;
        let det = c.determinant();
        if !(det > 0.0) {
            return Err(Error::DegenerateFrame);
        }
        let inv = c.try_inverse().ok_or(Error::DegenerateFrame)?;
        let d = Vector2::new(x[0], x[1]) - self.x_mean(frames)?;
        Ok((-0.5 * d.dot(&(inv * d))).exp() / (2.0 * PI * det.sqrt()))
    }
}

/// One-mode tomogram of `mode` of `s`.
pub fn tomogram_of_state(s: &GaussianState, mode: usize) -> Result<GaussianTomogram> {
    require_physical(s)?;
    if mode >= s.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: s.n_modes(),
            found: mode + 1,
        });
    }
    let full = GaussianTomogram::from_state(s);
    let k = 2 * mode;
    Ok(GaussianTomogram {
        mean_form: full.mean_form.rows(k, 2).into_owned(),
        dispersion_form: full.dispersion_form.view((k, k), (2, 2)).into_owned(),
    })
}

/// `w(X | μ, ν)`, a normal density with the tomogram's mean and dispersion.
pub fn tomogram_pdf(tg: &GaussianTomogram, x: f64, mu: f64, nu: f64) -> Result<f64> {
    check_frame(mu, nu)?;
    let var = tg.dispersion(mu, nu)?;
    if !(var > 0.0) {
        return Err(Error::DegenerateFrame);
    }
    Ok(normal_pdf(x, tg.mean(mu, nu)?, var))
}

/// `∫ w(X | μ, ν) dX − 1` by a 200-point Gauss–Hermite rule.
pub fn normalization_residual(tg: &GaussianTomogram, mu: f64, nu: f64) -> Result<f64> {
    let var = tg.dispersion(mu, nu)?;
    check_frame(mu, nu)?;
    let mean = tg.mean(mu, nu)?;
    let rule = cached_rule(NORMALIZATION_POINTS);
    Ok(rule.integrate(mean, (2.0 * var).sqrt(), |x| normal_pdf(x, mean, var)) - 1.0)
}

/// Evaluates [`tomogram_pdf`] on a list of `(X, μ, ν)` points.
pub fn pdf_grid(tg: &GaussianTomogram, points: &[(f64, f64, f64)], exec: Exec) -> Result<Vec<f64>> {
    try_map_with(exec, points, |&(x, mu, nu)| tomogram_pdf(tg, x, mu, nu))
}

/// Two-mode tomogram; nonzero means enter through the linear mean form.
pub fn two_mode_tomogram(s: &GaussianState) -> Result<GaussianTomogram> {
    if s.n_modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: s.n_modes(),
        });
    }
    require_physical(s)?;
    Ok(GaussianTomogram::from_state(s))
}

/// Integrates out the other mode, leaving the kept diagonal entry of the
/// quadrature covariance.
pub fn marginal_tomogram(tg: &GaussianTomogram, keep_mode: usize) -> Result<GaussianTomogram> {
    tg.require_modes(2)?;
    if keep_mode > 1 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: keep_mode + 1,
        });
    }
    let k = 2 * keep_mode;
    Ok(GaussianTomogram {
        mean_form: tg.mean_form.rows(k, 2).into_owned(),
        dispersion_form: tg.dispersion_form.view((k, k), (2, 2)).into_owned(),
    })
}

/// Thermal oscillator `H = (p² + q²)/2` at inverse temperature `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalSpec {
    pub beta: f64,
    #[serde(default)]
    pub n_max: usize,
}

impl ThermalSpec {
    pub fn new(beta: f64, n_max: usize) -> Result<Self> {
        let s = Self { beta, n_max };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!("beta must be positive and finite, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }
}

/// `Z(β) = 1/(2 sinh(β/2))`.
pub fn partition_function(beta: f64) -> f64 {
    1.0 / (2.0 * (beta / 2.0).sinh())
}

/// `⟨q̂²⟩ = ⟨p̂²⟩ = coth(β/2)/2`, as the thermal density matrix maps
/// through the parameter-to-covariance relations.
pub fn thermal_variance(beta: f64) -> f64 {
    0.5 / (beta / 2.0).tanh()
}

/// The squared-coth value printed alongside the thermal tomogram. Kept
/// only so tests can show it disagrees with [`thermal_variance`].
pub fn thermal_variance_printed(beta: f64) -> f64 {
    0.5 / (beta / 2.0).tanh().powi(2)
}

/// `a₁ = coth β / 2`, `a₁₂ = 1/sinh β`, `b = 0`, and the mapped state.
pub fn thermal_state_1d(spec: &ThermalSpec) -> Result<(DensityParams1D, GaussianState)> {
    spec.validate()?;
    let b = spec.beta;
    let p = DensityParams1D::new(Complex64::new(0.5 / b.tanh(), 0.0), 1.0 / b.sinh(), Complex64::new(0.0, 0.0));
    let s = state_from_params_1d(&p)?;
    Ok((p, s))
}

/// Closed-form thermal tomogram, normal with `σ = (μ² + ν²)·coth(β/2)/2`.
pub fn thermal_tomogram(beta: f64, x: f64, mu: f64, nu: f64) -> Result<f64> {
    check_frame(mu, nu)?;
    Ok(normal_pdf(x, 0.0, (mu * mu + nu * nu) * thermal_variance(beta)))
}

/// `P_n = e^{−(n+½)β}/Z(β) = (1 − e^{−β}) e^{−nβ}` for `n = 0..=n_max`.
pub fn thermal_weights(beta: f64, n_max: usize) -> Vec<f64> {
    let first = -(-beta).exp_m1();
    (0..=n_max).map(|n| first * (-(n as f64) * beta).exp()).collect()
}

/// Fock-state tomogram `w_n(X | μ, ν) = φ_n(X/s)²/s`, `s = √(μ² + ν²)`.
pub fn fock_tomogram(n: usize, x: f64, mu: f64, nu: f64) -> Result<f64> {
    check_frame(mu, nu)?;
    let s = mu.hypot(nu);
    Ok(hermite_function(n, x / s).powi(2) / s)
}

/// `(Σ_{n ≤ n_max} P_n w_n(X | μ, ν), [P_0, …, P_{n_max}])`.
pub fn thermal_decomposition(spec: &ThermalSpec, x: f64, mu: f64, nu: f64) -> Result<(f64, Vec<f64>)> {
    spec.validate()?;
    check_frame(mu, nu)?;
    let weights = thermal_weights(spec.beta, spec.n_max);
    let s = mu.hypot(nu);
    let y = x / s;
    let gauss = (-y * y).exp() / s;
    let h = hermite_polys(spec.n_max, y);
    let sum = weights.iter().zip(&h).map(|(p, hn)| p * hn * hn).sum::<f64>() * gauss;
    Ok((sum, weights))
}

/// `⟨n|ρ|n⟩ = ∬ ρ(x, x') φ_n(x) φ_n(x') dx dx'` of a one-mode state.
pub fn fock_overlap(s: &GaussianState, n: usize) -> Result<f64> {
    fock_overlap_params(&params_from_state_1d(s)?, n)
}

pub fn fock_overlap_params(p: &DensityParams1D, n: usize) -> Result<f64> {
    Ok(fock_distribution_params(p, n)?[n])
}

/// `⟨k|ρ|k⟩` for `k = 0..=n_max`.
pub fn fock_distribution(s: &GaussianState, n_max: usize) -> Result<Vec<f64>> {
    fock_distribution_params(&params_from_state_1d(s)?, n_max)
}

pub fn fock_distribution_params(p: &DensityParams1D, n_max: usize) -> Result<Vec<f64>> {
    p.check_integrable()?;
    let (lo, hi) = OVERLAP_ORDERS;
    let coarse = overlaps_with_rule(p, n_max, &cached_rule(lo));
    let fine = overlaps_with_rule(p, n_max, &cached_rule(hi));
    let gap = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if !(gap <= OVERLAP_TOL) {
        return Err(Error::QuadratureNotConverged(gap));
    }
    Ok(fine)
}

/// Tensor Gauss–Hermite over the principal axes of the real Gaussian part
/// of `ρ(x, x') e^{−(x² + x'²)/2}`; the imaginary phase and the Hermite
/// polynomials ride along as the integrand.
fn overlaps_with_rule(p: &DensityParams1D, n_max: usize, rule: &GaussHermite) -> Vec<f64> {
    let alpha = p.a1.re + 0.5;
    let (lp, lm) = (alpha - p.a12 / 2.0, alpha + p.a12 / 2.0);
    let c0 = p.b.re / (2.0 * alpha - p.a12);
    let pre = p.normalization() * (p.b.re * c0).exp() / (lp * lm).sqrt();
    let (sp, sm) = ((2.0 * lp).sqrt().recip(), (2.0 * lm).sqrt().recip());
    let mut acc = vec![Complex64::new(0.0, 0.0); n_max + 1];
    for (&u, &wu) in rule.nodes.iter().zip(&rule.weights) {
        for (&v, &wv) in rule.nodes.iter().zip(&rule.weights) {
            let x = c0 + u * sp + v * sm;
            let xp = c0 + u * sp - v * sm;
            let phase = p.a1.im * (xp * xp - x * x) + p.b.im * (x - xp);
            let z = Complex64::from_polar(wu * wv, phase);
            let hx = hermite_polys(n_max, x);
            let hxp = hermite_polys(n_max, xp);
            for k in 0..=n_max {
                acc[k] += z * (hx[k] * hxp[k]);
            }
        }
    }
    acc.into_iter().map(|a| a.re * pre).collect()
}
