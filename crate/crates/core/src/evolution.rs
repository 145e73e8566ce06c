//! Flows of means, covariances, the symplectic frame `(Λ, Γ)` of the linear
//! invariants, and the density-matrix parameters.
//!
//! With `D = −iJ` the complex flows reduce to real ones:
//! `σ̇ = 2(σBJ − JBσ)`, `ṁ = −J(2Bm + Δ)`, `Λ̇ = 2ΛJB`, `Γ̇ = ΛJΔ`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hamiltonian::{energy_with, QuadraticHamiltonian, SymplecticForm};
use crate::ode::{rk4_step, Dopri5};
use crate::parallel::{try_map_with, Exec};
use crate::state::{
    covariances_from_bipartite_params, purity_unchecked, require_physical, state_from_params_1d, DensityParams1D,
    DensityParamsBipartite, GaussianState,
};

/// Drift bound above which [`apply_frame`] refuses a frame.
pub const FRAME_TOL: f64 = 1e-6;
/// `|λ₄|` below which the one-mode propagator is treated as singular.
pub const CAUSTIC_TOL: f64 = 1e-12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Frame of the linear invariants `R(t) = Λ(t) r + Γ(t)`. For one mode,
/// `Λ = [[λ₁, λ₂], [λ₄, λ₅]]` and `Γ = (λ₃, λ₆)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticFrame {
    pub t: f64,
    pub lambda: DMatrix<f64>,
    pub gamma: DVector<f64>,
    /// `∫₀ᵗ λ̇₃ λ₆ dτ` for the first mode, needed by the propagator phase.
    pub phase_integral: f64,
}

impl SymplecticFrame {
    pub fn identity(n_modes: usize) -> Self {
        let n = 2 * n_modes;
        Self {
            t: 0.0,
            lambda: DMatrix::identity(n, n),
            gamma: DVector::zeros(n),
            phase_integral: 0.0,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.gamma.len() / 2
    }

    /// `max |ΛDΛ̃ − D|`.
    pub fn symplectic_residual(&self) -> f64 {
        let j = SymplecticForm::new(self.n_modes()).real_form();
        (&self.lambda * &j * self.lambda.transpose() - j).amax()
    }

    /// `Λ⁻¹ = DΛ̃D = −JΛ̃J`.
    pub fn inverse_lambda(&self) -> DMatrix<f64> {
        let j = SymplecticForm::new(self.n_modes()).real_form();
        -(&j * self.lambda.transpose() * &j)
    }

    /// One-mode entries `(λ₁, …, λ₆)`.
    pub fn lambdas(&self) -> [f64; 6] {
        let l = &self.lambda;
        [l[(0, 0)], l[(0, 1)], self.gamma[0], l[(1, 0)], l[(1, 1)], self.gamma[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4Fixed,
    Rk45Adaptive,
}

/// Integrator settings. Samples are taken at `t_k = k · dt · sample_stride`;
/// in adaptive mode `dt` only sets the output grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_max: f64,
    pub sample_stride: usize,
    /// Co-integrate `(Λ, Γ)` and record them per sample.
    pub frames: bool,
    /// Fail with `NonSymplecticFrame` once the frame drift exceeds [`FRAME_TOL`].
    pub strict_symplectic: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4Fixed,
            dt: 1e-3,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            t_max: 10.0,
            sample_stride: 10,
            frames: true,
            strict_symplectic: false,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(dt: f64, t_max: f64, sample_stride: usize) -> Self {
        Self {
            dt,
            t_max,
            sample_stride,
            ..Self::default()
        }
    }

    pub fn rk45(dt_out: f64, t_max: f64) -> Self {
        Self {
            method: Method::Rk45Adaptive,
            dt: dt_out,
            t_max,
            sample_stride: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("dt must be positive");
        }
        if !(self.t_max >= 0.0) || !self.t_max.is_finite() {
            return bad("t_max must be non-negative");
        }
        if self.sample_stride == 0 {
            return bad("sample_stride must be positive");
        }
        if self.method == Method::Rk45Adaptive && !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        let n = (self.t_max / self.dt).round();
        if (n * self.dt - self.t_max).abs() > 1e-9 * self.t_max.max(1.0) {
            return bad("t_max must be an integer multiple of dt");
        }
        Ok(())
    }

    fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    /// Step indices at which samples are recorded (always including the last).
    fn sample_steps(&self) -> Vec<usize> {
        let n = self.n_steps();
        let mut v: Vec<usize> = (0..=n).step_by(self.sample_stride).collect();
        if *v.last().unwrap() != n {
            v.push(n);
        }
        v
    }
}

/// A density-parameter record of either arity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamsRecord {
    OneMode(DensityParams1D),
    Bipartite(DensityParamsBipartite),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GaussianState>,
    pub frames: Option<Vec<SymplecticFrame>>,
    pub params: Option<Vec<ParamsRecord>>,
    pub energy: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_modes(&self) -> usize {
        self.states.first().map_or(0, |s| s.n_modes())
    }

    pub fn dets(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.det()).collect()
    }

    pub fn purities(&self) -> Vec<f64> {
        self.states.iter().map(|s| purity_unchecked(s.cov())).collect()
    }

    /// Largest `max |ΛDΛ̃ − D|` over the recorded frames.
    pub fn max_symplectic_drift(&self) -> Option<f64> {
        self.frames
            .as_ref()
            .map(|fs| fs.iter().map(|f| f.symplectic_residual()).fold(0.0, f64::max))
    }
}

/// `2i(σBD − DBσ)`, evaluated as `X + X̃` with `X = 2σBJ` so the result is
/// symmetric to the last bit.
pub fn covariance_rhs(sigma: &DMatrix<f64>, b: &DMatrix<f64>, d: &SymplecticForm) -> Result<DMatrix<f64>> {
    let n = d.dim();
    check_dim(n, sigma.nrows())?;
    check_dim(n, sigma.ncols())?;
    check_dim(n, b.nrows())?;
    check_dim(n, b.ncols())?;
    Ok(cov_rhs_unchecked(sigma, b, &d.real_form()))
}

fn cov_rhs_unchecked(sigma: &DMatrix<f64>, b: &DMatrix<f64>, j: &DMatrix<f64>) -> DMatrix<f64> {
    let x = sigma * b * j * 2.0;
    let xt = x.transpose();
    x + xt
}

/// `−iD(2Bm + Δ)`.
pub fn mean_rhs(m: &DVector<f64>, b: &DMatrix<f64>, delta: &DVector<f64>, d: &SymplecticForm) -> Result<DVector<f64>> {
    let n = d.dim();
    check_dim(n, m.len())?;
    check_dim(n, b.nrows())?;
    check_dim(n, delta.len())?;
    Ok(-(d.real_form() * (b * m * 2.0 + delta)))
}

/// `(Λ̇, Γ̇) = (2iΛDB, iΛDΔ)`.
pub fn frame_rhs(
    f: &SymplecticFrame,
    b: &DMatrix<f64>,
    delta: &DVector<f64>,
    d: &SymplecticForm,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = d.dim();
    check_dim(n, f.lambda.nrows())?;
    check_dim(n, b.nrows())?;
    check_dim(n, delta.len())?;
    let lj = &f.lambda * d.real_form();
    Ok((&lj * b * 2.0, lj * delta))
}

/// Flat ODE state `[mean, σ, Λ, Γ, ∫λ̇₃λ₆]` (column-major blocks).
struct Layout {
    n: usize,
}

impl Layout {
    fn len(&self) -> usize {
        let n = self.n;
        n + 2 * n * n + n + 1
    }
    fn mean(&self) -> std::ops::Range<usize> {
        0..self.n
    }
    fn cov(&self) -> std::ops::Range<usize> {
        self.n..self.n + self.n * self.n
    }
    fn lambda(&self) -> std::ops::Range<usize> {
        let s = self.n + self.n * self.n;
        s..s + self.n * self.n
    }
    fn gamma(&self) -> std::ops::Range<usize> {
        let s = self.n + 2 * self.n * self.n;
        s..s + self.n
    }
    fn accum(&self) -> usize {
        self.len() - 1
    }

    fn pack(&self, s: &GaussianState, f: &SymplecticFrame) -> DVector<f64> {
        let mut y = DVector::zeros(self.len());
        y.rows_range_mut(self.mean()).copy_from(s.mean());
        y.rows_range_mut(self.cov()).copy_from_slice(s.cov().as_slice());
        y.rows_range_mut(self.lambda()).copy_from_slice(f.lambda.as_slice());
        y.rows_range_mut(self.gamma()).copy_from(&f.gamma);
        y[self.accum()] = f.phase_integral;
        y
    }

    fn matrix(&self, y: &DVector<f64>, r: std::ops::Range<usize>) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.n, self.n, &y.as_slice()[r])
    }

    fn vector(&self, y: &DVector<f64>, r: std::ops::Range<usize>) -> DVector<f64> {
        DVector::from_column_slice(&y.as_slice()[r])
    }

    fn state(&self, y: &DVector<f64>) -> GaussianState {
        GaussianState::new(self.vector(y, self.mean()), self.matrix(y, self.cov()))
            .expect("covariance flow preserves shape and symmetry")
    }

    fn frame(&self, t: f64, y: &DVector<f64>) -> SymplecticFrame {
        SymplecticFrame {
            t,
            lambda: self.matrix(y, self.lambda()),
            gamma: self.vector(y, self.gamma()),
            phase_integral: y[self.accum()],
        }
    }
}

/// Runs `rhs` over the configured grid, handing every sample to `on_sample`.
fn integrate_grid<F, S>(cfg: &IntegratorConfig, y0: DVector<f64>, rhs: F, mut on_sample: S) -> Result<()>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
    S: FnMut(f64, &DVector<f64>) -> Result<()>,
{
    cfg.validate()?;
    let samples = cfg.sample_steps();
    let mut y = y0;
    let mut step = 0usize;
    let mut dopri = Dopri5::new(cfg.rel_tol, cfg.abs_tol);
    for &target in &samples {
        match cfg.method {
            Method::Rk4Fixed => {
                while step < target {
                    y = rk4_step(&rhs, step as f64 * cfg.dt, &y, cfg.dt);
                    step += 1;
                }
            }
            Method::Rk45Adaptive => {
                if target > step {
                    y = dopri.advance(&rhs, step as f64 * cfg.dt, y, target as f64 * cfg.dt)?;
                    step = target;
                }
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepSizeUnderflow(step as f64 * cfg.dt));
        }
        on_sample(step as f64 * cfg.dt, &y)?;
    }
    Ok(())
}

/// Integrates means, covariance and (optionally) the frame under `h`.
pub fn evolve(h: &QuadraticHamiltonian, s0: &GaussianState, cfg: &IntegratorConfig) -> Result<Trajectory> {
    check_dim(h.n_modes(), s0.n_modes())?;
    require_physical(s0)?;
    let n = h.dim();
    let lay = Layout { n };
    let j = SymplecticForm::new(h.n_modes()).real_form();
    let with_frame = cfg.frames;
    let rhs = |t: f64, y: &DVector<f64>| {
        let (b, delta) = h.coefficients(t);
        let mut dy = DVector::zeros(lay.len());
        let m = lay.vector(y, lay.mean());
        let sigma = lay.matrix(y, lay.cov());
        dy.rows_range_mut(lay.mean()).copy_from(&-(&j * (&b * m * 2.0 + &delta)));
        dy.rows_range_mut(lay.cov())
            .copy_from_slice(cov_rhs_unchecked(&sigma, &b, &j).as_slice());
        if with_frame {
            let lam = lay.matrix(y, lay.lambda());
            let gam = lay.vector(y, lay.gamma());
            let lj = lam * &j;
            let dgam = &lj * &delta;
            dy.rows_range_mut(lay.lambda()).copy_from_slice((&lj * &b * 2.0).as_slice());
            dy[lay.accum()] = dgam[0] * gam[1];
            dy.rows_range_mut(lay.gamma()).copy_from(&dgam);
        }
        dy
    };

    let mut traj = Trajectory {
        frames: with_frame.then(Vec::new),
        energy: Some(Vec::new()),
        ..Trajectory::default()
    };
    let y0 = lay.pack(s0, &SymplecticFrame::identity(h.n_modes()));
    integrate_grid(cfg, y0, rhs, |t, y| {
        let s = lay.state(y);
        let (b, delta) = h.coefficients(t);
        traj.energy.as_mut().unwrap().push(energy_with(&b, &delta, &s));
        if let Some(frames) = traj.frames.as_mut() {
            let f = lay.frame(t, y);
            if cfg.strict_symplectic {
                let r = f.symplectic_residual();
                if r > FRAME_TOL {
                    return Err(Error::NonSymplecticFrame(r));
                }
            }
            frames.push(f);
        }
        traj.times.push(t);
        traj.states.push(s);
        Ok(())
    })?;
    Ok(traj)
}

/// Evolves many initial states under one Hamiltonian.
pub fn evolve_batch(
    h: &QuadraticHamiltonian,
    initial: &[GaussianState],
    cfg: &IntegratorConfig,
    exec: Exec,
) -> Result<Vec<Trajectory>> {
    try_map_with(exec, initial, |s0| evolve(h, s0, cfg))
}

/// Frames only, for propagator work.
pub fn evolve_frames(h: &QuadraticHamiltonian, cfg: &IntegratorConfig) -> Result<Vec<SymplecticFrame>> {
    let cfg = IntegratorConfig {
        frames: true,
        ..cfg.clone()
    };
    let traj = evolve(h, &GaussianState::vacuum(h.n_modes()), &cfg)?;
    Ok(traj.frames.unwrap_or_default())
}

/// `σ(t) = Λ⁻¹σ₀Λ̃⁻¹`, `⟨r⟩(t) = Λ⁻¹(⟨r⟩(0) − Γ)`.
pub fn apply_frame(s0: &GaussianState, f: &SymplecticFrame) -> Result<GaussianState> {
    check_dim(s0.n_modes(), f.n_modes())?;
    let r = f.symplectic_residual();
    if !(r <= FRAME_TOL) {
        return Err(Error::NonSymplecticFrame(r));
    }
    let inv = f.inverse_lambda();
    let cov = &inv * s0.cov() * inv.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    let mean = &inv * (s0.mean() - &f.gamma);
    GaussianState::new(mean, cov)
}

/// Time derivatives of the one-mode parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRates1D {
    pub a1: Complex64,
    pub a12: f64,
    pub b: Complex64,
}

/// Parameter flow for `H = ω₁p² + 2ω₂pq + ω₃q² + δ₁p + δ₂q`.
pub fn params_rhs_1d(p: &DensityParams1D, w1: f64, w2: f64, w3: f64, d1: f64, d2: f64) -> ParamRates1D {
    let (a1, a12, b) = (p.a1, p.a12, p.b);
    let da1 = I * (a12 * a12 - 4.0 * a1 * a1) * w1 - 4.0 * a1 * w2 + I * w3;
    let da12 = 4.0 * a12 * (2.0 * a1.im * w1 - w2);
    let db = (2.0 * a1 - a12) * d1 - I * d2 - 2.0 * I * a12 * b.conj() * w1 - 2.0 * b * (w2 + 2.0 * I * a1 * w1);
    ParamRates1D {
        a1: da1,
        a12: da12,
        b: db,
    }
}

/// Parameters at the time of `f`, in closed form from the initial ones.
pub fn params_closed_form_1d(p0: &DensityParams1D, f: &SymplecticFrame) -> Result<DensityParams1D> {
    check_dim(1, f.n_modes())?;
    let [l1, l2, l3, l4, l5, l6] = f.lambdas();
    let (a1, a12, b) = (p0.a1, p0.a12, p0.b);
    let d = 4.0 * a1.norm_sqr() - a12 * a12;
    let den = l1 * l1 + 4.0 * a1.im * l1 * l4 + d * l4 * l4;
    if !(den.abs() > f64::EPSILON) {
        return Err(Error::SingularDenominator);
    }
    let a1c = a1.conj();
    let a1_t = (2.0 * a1c + I * l1 * l2 + I * l5 * (4.0 * a1.im * l1 + d * l4)) / (2.0 * den);
    let a12_t = a12 / den;
    let b_t = (l1 * (b - I * l3 + (a12 - 2.0 * a1) * l6)
        + l4 * ((2.0 * a1c - a12) * l3 + I * (2.0 * a1c * b + a12 * b.conj() - d * l6)))
        / den;
    Ok(DensityParams1D {
        a1: a1_t,
        a12: a12_t,
        b: b_t,
    })
}

/// Time derivatives of the bipartite parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRatesBipartite {
    pub a11: Complex64,
    pub a22: Complex64,
    pub a12: Complex64,
    pub a14: Complex64,
    pub a13: f64,
    pub a24: f64,
}

/// Bipartite parameter flow with `ω_jk = B_jk` (indices over `(p₁, q₁, p₂, q₂)`).
pub fn params_rhs_bipartite(p: &DensityParamsBipartite, b: &DMatrix<f64>) -> Result<ParamRatesBipartite> {
    check_dim(4, b.nrows())?;
    check_dim(4, b.ncols())?;
    let w = |i: usize, j: usize| b[(i - 1, j - 1)];
    let (w11, w12, w13, w14) = (w(1, 1), w(1, 2), w(1, 3), w(1, 4));
    let (w22, w23, w24) = (w(2, 2), w(2, 3), w(2, 4));
    let (w33, w34, w44) = (w(3, 3), w(3, 4), w(4, 4));
    let (a11, a22, a12, a14) = (p.a11, p.a22, p.a12, p.a14);
    let a13 = Complex64::new(p.a13, 0.0);
    let a24 = Complex64::new(p.a24, 0.0);
    let c = |z: Complex64| z.conj();

    let d11 = I * w22 - 4.0 * w12 * a11 + 2.0 * w23 * a12 + I * w11 * (-4.0 * a11 * a11 + a13 * a13)
        + 2.0 * I * w13 * (2.0 * a11 * a12 + a13 * a14)
        - I * w33 * (a12 * a12 - a14 * a14);
    let d22 = I * w44 + 2.0 * w14 * a12 - I * w11 * (a12 * a12 - c(a14) * c(a14)) - 4.0 * w34 * a22
        + 2.0 * I * w13 * (2.0 * a12 * a22 + c(a14) * a24)
        + I * w33 * (-4.0 * a22 * a22 + a24 * a24);
    let d12 = -2.0 * I * w24 + 4.0 * w14 * a11 - 2.0 * w12 * a12 - 2.0 * w34 * a12
        - 2.0 * I * w11 * (2.0 * a11 * a12 + a13 * c(a14))
        + 4.0 * w23 * a22
        + 2.0 * I * w13 * (a12 * a12 - a14 * c(a14) + 4.0 * a11 * a22 - a13 * a24)
        - 2.0 * I * w33 * (2.0 * a12 * a22 + a14 * a24);
    let d13 = -4.0 * w12 * a13 - 4.0 * I * w11 * (a11 - c(a11)) * a13 - 2.0 * w23 * (a14 + c(a14))
        + 2.0 * I * w13 * ((a12 - c(a12)) * a13 + 2.0 * c(a11) * a14 - 2.0 * a11 * c(a14))
        + 2.0 * I * w33 * (-c(a12) * a14 + a12 * c(a14));
    let d14 = -2.0 * w14 * a13 - 2.0 * w12 * a14 - 2.0 * w34 * a14 - 2.0 * I * w11 * (c(a12) * a13 + 2.0 * a11 * a14)
        - 2.0 * w23 * a24
        + 2.0 * I * w13 * ((a12 - c(a12)) * a14 + 2.0 * a13 * c(a22) - 2.0 * a11 * a24)
        + 2.0 * I * w33 * (2.0 * a14 * c(a22) + a12 * a24);
    let d24 = -2.0 * w14 * (a14 + c(a14)) + 2.0 * I * w11 * (a12 * a14 - c(a12) * c(a14)) - 4.0 * w34 * a24
        + 4.0 * I * w33 * (-a22 + c(a22)) * a24
        + 2.0 * I * w13 * (-2.0 * a14 * a22 + 2.0 * c(a14) * c(a22) + (a12 - c(a12)) * a24);

    Ok(ParamRatesBipartite {
        a11: d11,
        a22: d22,
        a12: d12,
        a14: d14,
        a13: d13.re,
        a24: d24.re,
    })
}

fn pack_1d(p: &DensityParams1D) -> DVector<f64> {
    DVector::from_vec(vec![p.a1.re, p.a1.im, p.a12, p.b.re, p.b.im])
}

fn unpack_1d(y: &DVector<f64>) -> DensityParams1D {
    DensityParams1D {
        a1: Complex64::new(y[0], y[1]),
        a12: y[2],
        b: Complex64::new(y[3], y[4]),
    }
}

fn pack_bip(p: &DensityParamsBipartite) -> DVector<f64> {
    DVector::from_vec(vec![
        p.a11.re, p.a11.im, p.a22.re, p.a22.im, p.a12.re, p.a12.im, p.a14.re, p.a14.im, p.a13, p.a24,
    ])
}

fn unpack_bip(y: &DVector<f64>) -> DensityParamsBipartite {
    DensityParamsBipartite {
        a11: Complex64::new(y[0], y[1]),
        a22: Complex64::new(y[2], y[3]),
        a12: Complex64::new(y[4], y[5]),
        a14: Complex64::new(y[6], y[7]),
        a13: y[8],
        a24: y[9],
    }
}

/// Integrates the one-mode parameter flow; states are mapped per sample.
pub fn evolve_params_1d(h: &QuadraticHamiltonian, p0: &DensityParams1D, cfg: &IntegratorConfig) -> Result<Trajectory> {
    check_dim(1, h.n_modes())?;
    p0.check_integrable()?;
    let rhs = |t: f64, y: &DVector<f64>| {
        let (b, delta) = h.coefficients(t);
        let r = params_rhs_1d(&unpack_1d(y), b[(0, 0)], b[(0, 1)], b[(1, 1)], delta[0], delta[1]);
        DVector::from_vec(vec![r.a1.re, r.a1.im, r.a12, r.b.re, r.b.im])
    };
    let mut traj = Trajectory {
        params: Some(Vec::new()),
        energy: Some(Vec::new()),
        ..Trajectory::default()
    };
    integrate_grid(cfg, pack_1d(p0), rhs, |t, y| {
        let p = unpack_1d(y);
        let s = state_from_params_1d(&p)?;
        let (b, delta) = h.coefficients(t);
        traj.energy.as_mut().unwrap().push(energy_with(&b, &delta, &s));
        traj.params.as_mut().unwrap().push(ParamsRecord::OneMode(p));
        traj.times.push(t);
        traj.states.push(s);
        Ok(())
    })?;
    Ok(traj)
}

/// Integrates the bipartite parameter flow (zero drive only).
pub fn evolve_params_bipartite(
    h: &QuadraticHamiltonian,
    p0: &DensityParamsBipartite,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    check_dim(2, h.n_modes())?;
    p0.check_integrable()?;
    let rhs = |t: f64, y: &DVector<f64>| {
        let b = h.b(t);
        let r = params_rhs_bipartite(&unpack_bip(y), &b).expect("dimension checked above");
        DVector::from_vec(vec![
            r.a11.re, r.a11.im, r.a22.re, r.a22.im, r.a12.re, r.a12.im, r.a14.re, r.a14.im, r.a13, r.a24,
        ])
    };
    let mut traj = Trajectory {
        params: Some(Vec::new()),
        energy: Some(Vec::new()),
        ..Trajectory::default()
    };
    integrate_grid(cfg, pack_bip(p0), rhs, |t, y| {
        let (b, delta) = h.coefficients(t);
        if delta.iter().any(|&x| x != 0.0) {
            return Err(Error::NonZeroMeans);
        }
        let p = unpack_bip(y);
        let s = covariances_from_bipartite_params(&p)?;
        traj.energy.as_mut().unwrap().push(energy_with(&b, &delta, &s));
        traj.params.as_mut().unwrap().push(ParamsRecord::Bipartite(p));
        traj.times.push(t);
        traj.states.push(s);
        Ok(())
    })?;
    Ok(traj)
}

/// One-mode Gaussian propagator `G(x, x', t)` built from the frame at `t`,
/// with `accum = ∫₀ᵗ λ̇₃λ₆ dτ`. The prefactor uses the principal branch of
/// `√(−2πiλ₄)`.
pub fn propagator_1d(f: &SymplecticFrame, accum: f64, x: f64, xp: f64) -> Result<Complex64> {
    check_dim(1, f.n_modes())?;
    let [l1, _l2, l3, l4, l5, l6] = f.lambdas();
    if !(l4.abs() >= CAUSTIC_TOL) {
        return Err(Error::CausticSingularity(l4.abs()));
    }
    let pref = (Complex64::new(0.0, -2.0 * std::f64::consts::PI * l4)).sqrt().inv();
    let bracket = l5 * x * x - 2.0 * x * xp + l1 * xp * xp + 2.0 * x * l6 + 2.0 * xp * (l3 * l4 - l1 * l6) + l1 * l6 * l6
        - 2.0 * l4 * accum;
    Ok(pref * (-I / (2.0 * l4) * bracket).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_coupled_oscillator, build_generic_1d, constant_fn, symplectic_form};
    use approx::assert_relative_eq;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    #[test]
    fn covariance_rhs_matches_component_equations() {
        let (w1, w2, w3) = (0.7, -0.3, 1.9);
        let b = m2(w1, w2, w2, w3);
        let (spp, spq, sqq) = (1.3, 0.4, 0.8);
        let s = m2(spp, spq, spq, sqq);
        let r = covariance_rhs(&s, &b, &symplectic_form(1)).unwrap();
        assert_relative_eq!(r[(0, 0)], -4.0 * (w2 * spp + w3 * spq), epsilon = 1e-14);
        assert_relative_eq!(r[(1, 1)], 4.0 * (w2 * sqq + w1 * spq), epsilon = 1e-14);
        assert_relative_eq!(r[(0, 1)], 2.0 * (w1 * spp - w3 * sqq), epsilon = 1e-14);
        assert_eq!(r[(0, 1)], r[(1, 0)]);
    }

    #[test]
    fn covariance_rhs_complex_form() {
        let d = symplectic_form(2);
        let b = DMatrix::from_fn(4, 4, |i, j| ((i + 1) * (j + 1)) as f64 * 0.1 + if i == j { 1.0 } else { 0.0 });
        let s = DMatrix::from_fn(4, 4, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let c = |m: &DMatrix<f64>| m.map(|x| Complex64::new(x, 0.0));
        let dm = d.matrix();
        let expect = (c(&s) * c(&b) * &dm - &dm * c(&b) * c(&s)) * Complex64::new(0.0, 2.0);
        let got = covariance_rhs(&s, &b, &d).unwrap();
        assert!(expect.map(|z| z.im.abs()).amax() < 1e-14);
        assert!((expect.map(|z| z.re) - got).amax() < 1e-14);
    }

    #[test]
    fn rhs_dimension_errors() {
        let d = symplectic_form(1);
        let e = covariance_rhs(&DMatrix::zeros(4, 4), &DMatrix::zeros(2, 2), &d).unwrap_err();
        assert_eq!(e.name(), "DimensionMismatch");
        assert!(mean_rhs(&DVector::zeros(2), &DMatrix::zeros(2, 2), &DVector::zeros(4), &d).is_err());
    }

    #[test]
    fn mean_rhs_oscillator() {
        let h = build_coupled_oscillator(2.0, 1.0);
        let m = DVector::from_vec(vec![0.0, 1.0]);
        let r = mean_rhs(&m, &h.b(0.0), &h.delta(0.0), &symplectic_form(1)).unwrap();
        assert_relative_eq!(r[0], -4.0);
        assert_relative_eq!(r[1], 1.0);
    }

    #[test]
    fn mean_rhs_classical_equations() {
        let (w1, w2, w3, d1, d2) = (0.4, 0.2, 1.1, 0.3, -0.6);
        let b = m2(w1, w2, w2, w3);
        let m = DVector::from_vec(vec![0.5, -1.5]);
        let r = mean_rhs(&m, &b, &DVector::from_vec(vec![d1, d2]), &symplectic_form(1)).unwrap();
        assert_relative_eq!(r[0], -2.0 * (w2 * m[0] + w3 * m[1]) - d2, epsilon = 1e-14);
        assert_relative_eq!(r[1], 2.0 * (w2 * m[1] + w1 * m[0]) + d1, epsilon = 1e-14);
    }

    #[test]
    fn frame_rhs_components() {
        let (w1, w2, w3, d1, d2) = (0.4, 0.2, 1.1, 0.3, -0.6);
        let f = SymplecticFrame {
            t: 0.0,
            lambda: m2(1.2, 0.3, -0.4, 0.9),
            gamma: DVector::from_vec(vec![0.1, 0.2]),
            phase_integral: 0.0,
        };
        let (dl, dg) = frame_rhs(
            &f,
            &m2(w1, w2, w2, w3),
            &DVector::from_vec(vec![d1, d2]),
            &symplectic_form(1),
        )
        .unwrap();
        let (l1, l2) = (1.2, 0.3);
        assert_relative_eq!(dl[(0, 0)], 2.0 * (w2 * l1 - w1 * l2), epsilon = 1e-14);
        assert_relative_eq!(dl[(0, 1)], 2.0 * (w3 * l1 - w2 * l2), epsilon = 1e-14);
        assert_relative_eq!(dg[0], d2 * l1 - d1 * l2, epsilon = 1e-14);
    }

    #[test]
    fn zero_hamiltonian_keeps_state() {
        let z = constant_fn(0.0);
        let h = build_generic_1d(z.clone(), z.clone(), z.clone(), z.clone(), z);
        let s0 = GaussianState::new(DVector::from_vec(vec![0.3, -0.2]), m2(1.0, 0.2, 0.2, 0.5)).unwrap();
        let traj = evolve(&h, &s0, &IntegratorConfig::rk4(0.01, 1.0, 10)).unwrap();
        assert_eq!(traj.len(), 11);
        for s in &traj.states {
            assert_eq!(s, &s0);
        }
    }

    #[test]
    fn identity_frame_is_neutral() {
        let s0 = GaussianState::new(DVector::from_vec(vec![0.3, -0.2]), m2(1.0, 0.2, 0.2, 0.5)).unwrap();
        assert_eq!(apply_frame(&s0, &SymplecticFrame::identity(1)).unwrap(), s0);
        let p = DensityParams1D::new(Complex64::new(0.9, 0.2), 0.4, Complex64::new(0.1, 0.3));
        let q = params_closed_form_1d(&p, &SymplecticFrame::identity(1)).unwrap();
        assert_relative_eq!(q.a1.re, p.a1.re, epsilon = 1e-15);
        assert_relative_eq!(q.a1.im, p.a1.im, epsilon = 1e-15);
        assert_relative_eq!(q.a12, p.a12, epsilon = 1e-15);
        assert_relative_eq!(q.b.re, p.b.re, epsilon = 1e-15);
        assert_relative_eq!(q.b.im, p.b.im, epsilon = 1e-15);
    }

    #[test]
    fn apply_frame_rejects_non_symplectic() {
        let mut f = SymplecticFrame::identity(1);
        f.lambda[(0, 0)] = 2.0;
        let e = apply_frame(&GaussianState::vacuum(1), &f).unwrap_err();
        assert_eq!(e.name(), "NonSymplecticFrame");
    }

    #[test]
    fn invariant_params_are_stationary() {
        let p = DensityParams1D::new(Complex64::new(13.0 / 8.0, 0.5), 11.0 / 4.0, Complex64::new(0.0, 0.0));
        let r = params_rhs_1d(&p, 0.5, 0.5, 2.0, 0.0, 0.0);
        assert!(r.a1.norm() < 1e-14 && r.a12.abs() < 1e-14 && r.b.norm() == 0.0);
        let z = params_rhs_1d(&p, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!((z.a1.norm(), z.a12, z.b.norm()), (0.0, 0.0, 0.0));
    }

    #[test]
    fn caustic_detected() {
        let f = SymplecticFrame::identity(1);
        assert_eq!(propagator_1d(&f, 0.0, 0.0, 0.0).unwrap_err().name(), "CausticSingularity");
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::default().validate().is_ok());
        let bad = IntegratorConfig {
            dt: 0.0,
            ..IntegratorConfig::default()
        };
        assert!(bad.validate().is_err());
        let off_grid = IntegratorConfig::rk4(0.3, 1.0, 1);
        assert!(off_grid.validate().is_err());
        let cfg: IntegratorConfig = serde_json::from_str(r#"{"method": "rk45_adaptive", "t_max": 2}"#).unwrap();
        assert_eq!(cfg.method, Method::Rk45Adaptive);
        assert_eq!(cfg.dt, 1e-3);
    }

    #[test]
    fn sample_grid_includes_endpoint() {
        let cfg = IntegratorConfig::rk4(0.1, 1.0, 3);
        assert_eq!(cfg.sample_steps(), vec![0, 3, 6, 9, 10]);
    }
}
