//! Gaussian states: the mean/covariance representation and the
//! position-representation density-matrix parameters, with maps between them.
//!
//! Covariances are symmetrized, `σ_jk = ½⟨{r_j, r_k}⟩ − ⟨r_j⟩⟨r_k⟩`, over the
//! quadrature ordering `(p₁, q₁, p₂, q₂, …)`.
//!
//! One-mode density matrices have the form
//! `ρ(x, x') = N exp(−a₁x² + a₁₂xx' − a₁*x'² + bx + b*x')`; two-mode ones are
//! `N exp(−½ỹAy)` with `y = (x₁, x₂, x₁', x₂')` and
//! `A = [[u, −v], [−ṽ, u*]]`, `u = [[2a₁₁, −a₁₂], [−a₁₂, 2a₂₂]]`,
//! `v = [[a₁₃, a₁₄], [a₁₄*, a₂₄]]`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hamiltonian::SymplecticForm;

/// Absolute tolerance on the Robertson quantities used by [`purity`] and the
/// map functions.
pub const DEFAULT_PHYSICALITY_TOL: f64 = 1e-9;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state, rejecting shape errors. The covariance is symmetrized
    /// exactly; inputs that are visibly asymmetric are refused.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if n == 0 || n % 2 != 0 {
            return Err(Error::InvalidConfig(format!("mean vector must have even length 2N > 0, got {n}")));
        }
        if cov.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: cov.nrows().max(cov.ncols()),
            });
        }
        if cov.iter().chain(mean.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonPhysicalState("non-finite entries".into()));
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > 1e-12 * cov.amax().max(1.0) {
            return Err(Error::NonPhysicalState(format!("covariance not symmetric (asymmetry {asym:e})")));
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        Ok(Self { mean, cov })
    }

    /// Zero-mean state with the given covariance.
    pub fn centered(cov: DMatrix<f64>) -> Result<Self> {
        let n = cov.nrows();
        Self::new(DVector::zeros(n), cov)
    }

    /// `σ = S·diag(ν₁, ν₁, ν₂, ν₂, …)·S̃` with `S = exp(J·H)` for a symmetric
    /// generator `H`; every `νₖ ≥ ½` gives a physical state.
    pub fn from_symplectic_generator(generator: &DMatrix<f64>, nus: &[f64], mean: DVector<f64>) -> Result<Self> {
        let n = 2 * nus.len();
        check_dim(n, generator.nrows())?;
        check_dim(n, generator.ncols())?;
        let sym = (generator + generator.transpose()) * 0.5;
        let j = SymplecticForm::new(nus.len()).real_form();
        let s = (j * sym).exp();
        let d = DMatrix::from_fn(n, n, |i, k| if i == k { nus[i / 2] } else { 0.0 });
        let cov = &s * d * s.transpose();
        Self::new(mean, (&cov + cov.transpose()) * 0.5)
    }

    /// Product of `n_modes` vacua, `σ = ½I`.
    pub fn vacuum(n_modes: usize) -> Self {
        let n = 2 * n_modes;
        Self {
            mean: DVector::zeros(n),
            cov: DMatrix::identity(n, n) * 0.5,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn det(&self) -> f64 {
        self.cov.determinant()
    }

    /// 2×2 covariance block of mode `k` (ordering `(p_k, q_k)`).
    pub fn mode_cov(&self, k: usize) -> Matrix2<f64> {
        let o = 2 * k;
        Matrix2::new(
            self.cov[(o, o)],
            self.cov[(o, o + 1)],
            self.cov[(o + 1, o)],
            self.cov[(o + 1, o + 1)],
        )
    }

    /// `σ_pp σ_qq − σ_pq²` of mode `k`.
    pub fn robertson(&self, k: usize) -> f64 {
        let m = self.mode_cov(k);
        m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(0, 1)]
    }

    pub fn has_zero_mean(&self) -> bool {
        self.mean.iter().all(|&x| x == 0.0)
    }

    /// Upper triangle of σ in row-major order. For two modes this is the
    /// invariant-state vector `(σ_p₁p₁, σ_p₁q₁, σ_p₁p₂, …, σ_q₂q₂)`.
    pub fn cov_upper(&self) -> Vec<f64> {
        upper_triangle(&self.cov)
    }
}

pub(crate) fn upper_triangle(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Operational physicality test: per-mode Robertson bound
/// `σ_pp σ_qq − σ_pq² ≥ ¼ − tol`, the two-mode bound `det σ ≥ 1/16 − tol`,
/// and positive semidefiniteness of σ to `tol`. For large σ the tolerance is
/// widened to the roundoff of each quantity, `64ε·max|σ|^k`.
pub fn is_physical(s: &GaussianState, tol: f64) -> bool {
    physicality_violation(s, tol).is_none()
}

pub(crate) fn physicality_violation(s: &GaussianState, tol: f64) -> Option<String> {
    // each bound is a polynomial in σ; allow for its own roundoff at large scale
    let floor = |scale: f64, degree: i32| tol.max(64.0 * f64::EPSILON * scale.max(1.0).powi(degree));
    for k in 0..s.n_modes() {
        let r = s.robertson(k);
        let scale = s.cov.view((2 * k, 2 * k), (2, 2)).amax();
        if !(r >= 0.25 - floor(scale, 2)) {
            return Some(format!("mode {} violates the Robertson bound ({r} < 1/4)", k + 1));
        }
    }
    let scale = s.cov.amax();
    if s.n_modes() == 2 {
        let d = s.det();
        if !(d >= 1.0 / 16.0 - floor(scale, 4)) {
            return Some(format!("det sigma = {d} < 1/16"));
        }
    }
    let min_eig = s.cov.clone().symmetric_eigenvalues().min();
    if !(min_eig >= -floor(scale, 1)) {
        return Some(format!("covariance not positive semidefinite (eigenvalue {min_eig})"));
    }
    None
}

pub(crate) fn require_physical(s: &GaussianState) -> Result<()> {
    match physicality_violation(s, DEFAULT_PHYSICALITY_TOL) {
        None => Ok(()),
        Some(msg) => Err(Error::NonPhysicalState(msg)),
    }
}

/// `Tr ρ² = 1 / (2^N √det σ)`.
pub fn purity(s: &GaussianState) -> Result<f64> {
    require_physical(s)?;
    Ok(purity_unchecked(&s.cov))
}

pub(crate) fn purity_unchecked(cov: &DMatrix<f64>) -> f64 {
    let n = cov.nrows() / 2;
    1.0 / (2f64.powi(n as i32) * cov.determinant().sqrt())
}

/// One-mode density-matrix parameters `(a₁, a₁₂, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityParams1D {
    #[serde(with = "complex_pair")]
    pub a1: Complex64,
    pub a12: f64,
    #[serde(with = "complex_pair")]
    pub b: Complex64,
}

impl DensityParams1D {
    pub fn new(a1: Complex64, a12: f64, b: Complex64) -> Self {
        Self { a1, a12, b }
    }

    /// `a_{1R} > a₁₂/2 ≥ 0`.
    pub fn check_integrable(&self) -> Result<()> {
        if !(self.a12 >= 0.0) || !(self.a1.re > self.a12 / 2.0) {
            return Err(Error::NonIntegrableParams(format!(
                "need Re a1 > a12/2 >= 0 (Re a1 = {}, a12 = {})",
                self.a1.re, self.a12
            )));
        }
        Ok(())
    }

    /// `N = ((a₁ + a₁* − a₁₂)/π)^{1/2} exp(−(b + b*)² / (4(a₁ + a₁* − a₁₂)))`.
    pub fn normalization(&self) -> f64 {
        let k = 2.0 * self.a1.re - self.a12;
        let bb = 2.0 * self.b.re;
        (k / PI).sqrt() * (-(bb * bb) / (4.0 * k)).exp()
    }
}

pub fn state_from_params_1d(p: &DensityParams1D) -> Result<GaussianState> {
    p.check_integrable()?;
    let k = 2.0 * p.a1.re - p.a12;
    let mean_q = p.b.re / k;
    let mean_p = p.b.im - 2.0 * p.a1.im * p.b.re / k;
    let f = 1.0 / (2.0 * k);
    let spp = f * (4.0 * p.a1.norm_sqr() - p.a12 * p.a12);
    let spq = -f * 2.0 * p.a1.im;
    let sqq = f;
    Ok(GaussianState {
        mean: DVector::from_vec(vec![mean_p, mean_q]),
        cov: DMatrix::from_row_slice(2, 2, &[spp, spq, spq, sqq]),
    })
}

/// Inverse of [`state_from_params_1d`]:
/// `a₁ = (det σ + ¼)/(2σ_qq) − iσ_pq/(2σ_qq)`, `a₁₂ = (det σ − ¼)/σ_qq`,
/// `b = ⟨q⟩/(2σ_qq) + i(⟨p⟩ + 2 Im a₁ ⟨q⟩)`.
pub fn params_from_state_1d(s: &GaussianState) -> Result<DensityParams1D> {
    if s.n_modes() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: s.n_modes(),
        });
    }
    require_physical(s)?;
    let (spp, spq, sqq) = (s.cov[(0, 0)], s.cov[(0, 1)], s.cov[(1, 1)]);
    let det = spp * sqq - spq * spq;
    let a1 = Complex64::new((det + 0.25) / (2.0 * sqq), -spq / (2.0 * sqq));
    // Rounding can push a pure state a hair below zero.
    let a12 = ((det - 0.25) / sqq).max(0.0);
    let (mp, mq) = (s.mean[0], s.mean[1]);
    let b = Complex64::new(mq / (2.0 * sqq), mp + 2.0 * a1.im * mq);
    Ok(DensityParams1D { a1, a12, b })
}

/// `ρ(x, x')` of a one-mode Gaussian.
pub fn density_eval_1d(p: &DensityParams1D, x: f64, xp: f64) -> Result<Complex64> {
    p.check_integrable()?;
    Ok(density_1d_unchecked(p, x, xp))
}

pub(crate) fn density_1d_unchecked(p: &DensityParams1D, x: f64, xp: f64) -> Complex64 {
    let e = -p.a1 * x * x + p.a12 * x * xp - p.a1.conj() * xp * xp + p.b * x + p.b.conj() * xp;
    e.exp() * p.normalization()
}

/// Zero-mean two-mode density-matrix parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityParamsBipartite {
    #[serde(with = "complex_pair")]
    pub a11: Complex64,
    #[serde(with = "complex_pair")]
    pub a22: Complex64,
    #[serde(with = "complex_pair")]
    pub a12: Complex64,
    #[serde(with = "complex_pair")]
    pub a14: Complex64,
    pub a13: f64,
    pub a24: f64,
}

impl DensityParamsBipartite {
    /// Two uncorrelated one-mode states with zero means.
    pub fn product(m1: &DensityParams1D, m2: &DensityParams1D) -> Self {
        Self {
            a11: m1.a1,
            a22: m2.a1,
            a12: Complex64::new(0.0, 0.0),
            a14: Complex64::new(0.0, 0.0),
            a13: m1.a12,
            a24: m2.a12,
        }
    }

    /// `(u, v)` blocks of the exponent matrix `A`.
    pub fn blocks(&self) -> (nalgebra::Matrix2<Complex64>, nalgebra::Matrix2<Complex64>) {
        let two = Complex64::new(2.0, 0.0);
        let u = nalgebra::Matrix2::new(two * self.a11, -self.a12, -self.a12, two * self.a22);
        let v = nalgebra::Matrix2::new(
            Complex64::new(self.a13, 0.0),
            self.a14,
            self.a14.conj(),
            Complex64::new(self.a24, 0.0),
        );
        (u, v)
    }

    /// Position precision matrix `2(Re u − Re v)` of the diagonal `ρ(x, x)`.
    fn position_precision(&self) -> Matrix2<f64> {
        let (u, v) = self.blocks();
        (u.map(|z| z.re) - v.map(|z| z.re)) * 2.0
    }

    /// Boundedness and normalizability of `ρ(x, x')`: both `Re u − Re v`
    /// and `Re u + Re v` positive definite.
    pub fn check_integrable(&self) -> Result<()> {
        let (u, v) = self.blocks();
        let ru = u.map(|z| z.re);
        let rv = v.map(|z| z.re);
        for (label, m) in [("Re u - Re v", ru - rv), ("Re u + Re v", ru + rv)] {
            let pd = m[(0, 0)] > 0.0 && m.determinant() > 0.0;
            if !pd {
                return Err(Error::NonIntegrableParams(format!("{label} is not positive definite")));
            }
        }
        Ok(())
    }

    /// `N = √det P / 2π` with `P` the position precision matrix.
    pub fn normalization(&self) -> f64 {
        self.position_precision().determinant().sqrt() / (2.0 * PI)
    }
}

/// Covariances of a zero-mean two-mode Gaussian from its density-matrix
/// parameters: position covariances first, then the momentum and mixed ones.
pub fn covariances_from_bipartite_params(p: &DensityParamsBipartite) -> Result<GaussianState> {
    let (a11, a22, a12, a14) = (p.a11, p.a22, p.a12, p.a14);
    let (a13, a24) = (p.a13, p.a24);
    let r11 = 2.0 * a11.re - a13;
    let r22 = 2.0 * a22.re - a24;
    let r12 = 2.0 * (a12.re + a14.re);
    let den = 4.0 * r11 * r22 - r12 * r12;
    if !(den.abs() > 1e-300) || !den.is_finite() {
        return Err(Error::SingularParameterMap);
    }
    let sq11 = 2.0 * r22 / den;
    let sq12 = r12 / den;
    let sq22 = 2.0 * r11 / den;

    let c11 = 2.0 * a11 - a13;
    let c22 = 2.0 * a22 - a24;
    let e = a12 + a14;
    let ec = a12 + a14.conj();
    let half = Complex64::new(0.5, 0.0);

    let sp1p1 = 2.0 * a11 - c11 * c11 * sq11 - e * e * sq22 + 2.0 * c11 * e * sq12;
    let sp1q1 = I * (c11 * sq11 - e * sq12 - half);
    let sp1p2 = -a12 + c22 * e * sq22 + c11 * ec * sq11 - (c22 * c11 + ec * e) * sq12;
    let sp1q2 = I * (c11 * sq12 - e * sq22);
    let sq1p2 = I * (c22 * sq12 - ec * sq11);
    let sp2p2 = 2.0 * a22 - c22 * c22 * sq22 - ec * ec * sq11 + 2.0 * c22 * ec * sq12;
    let sp2q2 = I * (c22 * sq22 - ec * sq12 - half);

    let (p1, q1, p2, q2) = (0, 1, 2, 3);
    let mut cov = DMatrix::zeros(4, 4);
    let mut set = |i: usize, j: usize, v: f64| {
        cov[(i, j)] = v;
        cov[(j, i)] = v;
    };
    set(p1, p1, sp1p1.re);
    set(p1, q1, sp1q1.re);
    set(p1, p2, sp1p2.re);
    set(p1, q2, sp1q2.re);
    set(q1, q1, sq11);
    set(q1, p2, sq1p2.re);
    set(q1, q2, sq12);
    set(p2, p2, sp2p2.re);
    set(p2, q2, sp2q2.re);
    set(q2, q2, sq22);
    let s = GaussianState {
        mean: DVector::zeros(4),
        cov,
    };
    require_physical(&s)?;
    Ok(s)
}

/// Inverse of [`covariances_from_bipartite_params`]. With `Σ_q`, `Σ_p` the
/// position/momentum blocks and `C_jk = σ_{p_j q_k}`, the exponent blocks are
/// `M = (−½I + iC)Σ_q⁻¹`, `u = Σ_p + MΣ_qMᵀ`, `v = M + u`.
pub fn bipartite_params_from_covariances(s: &GaussianState) -> Result<DensityParamsBipartite> {
    if s.n_modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: s.n_modes(),
        });
    }
    if !s.has_zero_mean() {
        return Err(Error::NonZeroMeans);
    }
    require_physical(s)?;
    let sig = &s.cov;
    let (p, q) = ([0usize, 2], [1usize, 3]);
    let block = |rows: [usize; 2], cols: [usize; 2]| {
        Matrix2::new(
            sig[(rows[0], cols[0])],
            sig[(rows[0], cols[1])],
            sig[(rows[1], cols[0])],
            sig[(rows[1], cols[1])],
        )
    };
    let sq = block(q, q);
    let sp = block(p, p);
    let c = block(p, q);
    let sq_inv = sq.try_inverse().ok_or(Error::SingularParameterMap)?;
    let cplx = |m: Matrix2<f64>| m.map(|x| Complex64::new(x, 0.0));
    let m = (cplx(Matrix2::identity()) * Complex64::new(-0.5, 0.0) + c.map(|x| Complex64::new(0.0, x)))
        * cplx(sq_inv);
    let u = cplx(sp) + m * cplx(sq) * m.transpose();
    let v = m + u;
    Ok(DensityParamsBipartite {
        a11: u[(0, 0)] * 0.5,
        a22: u[(1, 1)] * 0.5,
        a12: -(u[(0, 1)] + u[(1, 0)]) * 0.5,
        a14: (v[(0, 1)] + v[(1, 0)].conj()) * 0.5,
        a13: v[(0, 0)].re,
        a24: v[(1, 1)].re,
    })
}

/// `ρ(x, x')` of a zero-mean two-mode Gaussian.
pub fn density_eval_bipartite(p: &DensityParamsBipartite, x: [f64; 2], xp: [f64; 2]) -> Result<Complex64> {
    p.check_integrable()?;
    let (u, v) = p.blocks();
    let xv = nalgebra::Vector2::new(Complex64::new(x[0], 0.0), Complex64::new(x[1], 0.0));
    let xpv = nalgebra::Vector2::new(Complex64::new(xp[0], 0.0), Complex64::new(xp[1], 0.0));
    // −½ỹAy = −½x̃ux + x̃vx' − ½x̃'u*x'
    let e = -(xv.transpose() * u * xv)[(0, 0)] * 0.5 + (xv.transpose() * v * xpv)[(0, 0)]
        - (xpv.transpose() * u.map(|z| z.conj()) * xpv)[(0, 0)] * 0.5;
    Ok(e.exp() * p.normalization())
}

/// JSON record for a state: `{"n_modes": N, "mean": [...], "cov": [[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub n_modes: usize,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl From<&GaussianState> for StateRecord {
    fn from(s: &GaussianState) -> Self {
        let n = s.cov.nrows();
        StateRecord {
            n_modes: s.n_modes(),
            mean: s.mean.iter().copied().collect(),
            cov: (0..n).map(|i| (0..n).map(|j| s.cov[(i, j)]).collect()).collect(),
        }
    }
}

impl TryFrom<StateRecord> for GaussianState {
    type Error = Error;

    fn try_from(r: StateRecord) -> Result<Self> {
        let n = 2 * r.n_modes;
        if r.mean.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: r.mean.len(),
            });
        }
        if r.cov.len() != n || r.cov.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: r.cov.len(),
            });
        }
        let cov = DMatrix::from_fn(n, n, |i, j| r.cov[i][j]);
        GaussianState::new(DVector::from_vec(r.mean), cov)
    }
}

/// Serializes a complex number as `{"re": .., "im": ..}`.
pub mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Pair {
        re: f64,
        #[serde(default)]
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        Pair { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let p = Pair::deserialize(d)?;
        Ok(Complex64::new(p.re, p.im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mat2(a: f64, b: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, b, d])
    }

    #[test]
    fn invariant_params_map_to_known_covariance() {
        let p = DensityParams1D::new(c(13.0 / 8.0, 0.5), 11.0 / 4.0, c(0.0, 0.0));
        let s = state_from_params_1d(&p).unwrap();
        assert_relative_eq!(s.cov().clone(), mat2(4.0, -1.0, 1.0), epsilon = 1e-14);
        assert_eq!(s.mean().amax(), 0.0);
    }

    #[test]
    fn vacuum_params() {
        let p = DensityParams1D::new(c(0.5, 0.0), 0.0, c(0.0, 0.0));
        let s = state_from_params_1d(&p).unwrap();
        assert_eq!(s, GaussianState::vacuum(1));
        let back = params_from_state_1d(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn means_from_b() {
        let p = DensityParams1D::new(c(0.5, 0.0), 0.0, c(1.0, 0.0));
        let s = state_from_params_1d(&p).unwrap();
        assert_relative_eq!(s.mean()[1], 1.0);
        assert_relative_eq!(s.mean()[0], 0.0);
    }

    #[test]
    fn inverse_of_known_state() {
        let s = GaussianState::centered(mat2(4.0, -1.0, 1.0)).unwrap();
        let p = params_from_state_1d(&s).unwrap();
        assert_relative_eq!(p.a1.re, 13.0 / 8.0, epsilon = 1e-15);
        assert_relative_eq!(p.a1.im, 0.5, epsilon = 1e-15);
        assert_relative_eq!(p.a12, 11.0 / 4.0, epsilon = 1e-15);
        assert_eq!(p.b, c(0.0, 0.0));
    }

    #[test]
    fn non_integrable_rejected() {
        for p in [
            DensityParams1D::new(c(0.5, 0.0), 1.0, c(0.0, 0.0)),
            DensityParams1D::new(c(0.5, 0.0), -0.1, c(0.0, 0.0)),
        ] {
            assert_eq!(state_from_params_1d(&p).unwrap_err().name(), "NonIntegrableParams");
            assert!(density_eval_1d(&p, 0.0, 0.0).is_err());
        }
    }

    #[test]
    fn nonphysical_inverse_rejected() {
        let s = GaussianState::centered(mat2(0.1, 0.0, 0.1)).unwrap();
        assert_eq!(params_from_state_1d(&s).unwrap_err().name(), "NonPhysicalState");
    }

    #[test]
    fn purity_values() {
        assert_relative_eq!(purity(&GaussianState::vacuum(1)).unwrap(), 1.0, epsilon = 1e-15);
        let s = GaussianState::centered(mat2(4.0, -1.0, 1.0)).unwrap();
        assert_relative_eq!(purity(&s).unwrap(), 1.0 / (2.0 * 3f64.sqrt()), epsilon = 1e-15);
        assert_relative_eq!(purity(&s).unwrap(), 0.288675, epsilon = 1e-6);
        let two = GaussianState::centered(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.25, 0.5, 0.5]))).unwrap();
        assert_relative_eq!(purity(&two).unwrap(), 1.0, epsilon = 1e-15);
        let bad = GaussianState::centered(mat2(0.1, 0.0, 0.1)).unwrap();
        assert!(purity(&bad).is_err());
    }

    #[test]
    fn physicality_of_null_vectors() {
        assert!(is_physical(&GaussianState::vacuum(1), DEFAULT_PHYSICALITY_TOL));
        // converter null vector with empty mode-2 block
        let mut conv = DMatrix::zeros(4, 4);
        conv[(0, 0)] = 2.0;
        conv[(1, 1)] = 0.5;
        conv[(0, 2)] = 2.0;
        conv[(2, 0)] = 2.0;
        conv[(1, 3)] = 1.0;
        conv[(3, 1)] = 1.0;
        let s = GaussianState::centered(conv).unwrap();
        assert!(!is_physical(&s, DEFAULT_PHYSICALITY_TOL));
        // amplifier null vector with sigma_p1p1 = -w1 w2
        let amp = DMatrix::from_diagonal(&DVector::from_vec(vec![-2.0, -0.5, 1.0, 1.0]));
        assert!(!is_physical(&GaussianState::centered(amp).unwrap(), DEFAULT_PHYSICALITY_TOL));
    }

    #[test]
    fn bipartite_product_of_vacua() {
        let vac = DensityParams1D::new(c(0.5, 0.0), 0.0, c(0.0, 0.0));
        let p = DensityParamsBipartite::product(&vac, &vac);
        let s = covariances_from_bipartite_params(&p).unwrap();
        assert_relative_eq!(s.cov().clone(), DMatrix::identity(4, 4) * 0.5, epsilon = 1e-15);
        let back = bipartite_params_from_covariances(&GaussianState::vacuum(2)).unwrap();
        assert_relative_eq!(back.a11.re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(back.a22.re, 0.5, epsilon = 1e-15);
        assert!(back.a12.norm() < 1e-15 && back.a14.norm() < 1e-15);
        assert!(back.a13.abs() < 1e-15 && back.a24.abs() < 1e-15);
    }

    #[test]
    fn bipartite_rejects_means_and_wrong_size() {
        let mut s = GaussianState::vacuum(2);
        s.mean[0] = 0.1;
        assert_eq!(bipartite_params_from_covariances(&s).unwrap_err(), Error::NonZeroMeans);
        assert!(matches!(
            bipartite_params_from_covariances(&GaussianState::vacuum(1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bipartite_singular_map() {
        let p = DensityParamsBipartite {
            a11: c(0.5, 0.0),
            a22: c(0.5, 0.0),
            a12: c(0.0, 0.0),
            a14: c(0.0, 0.0),
            a13: 1.0,
            a24: 0.0,
        };
        assert_eq!(covariances_from_bipartite_params(&p).unwrap_err(), Error::SingularParameterMap);
    }

    #[test]
    fn density_hermitian_diagonal_real() {
        let p = DensityParams1D::new(c(0.9, 0.4), 0.5, c(0.3, -0.7));
        let d = density_eval_1d(&p, 0.7, 0.7).unwrap();
        assert!(d.im.abs() < 1e-16 && d.re > 0.0);
        let a = density_eval_1d(&p, 0.2, -1.1).unwrap();
        let b = density_eval_1d(&p, -1.1, 0.2).unwrap();
        assert_eq!(a, b.conj());
    }

    #[test]
    fn asymmetric_covariance_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.1, 1.0]);
        assert!(GaussianState::centered(m).is_err());
        assert!(GaussianState::new(DVector::zeros(3), DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn state_record_json() {
        let json = r#"{"n_modes": 1, "mean": [0, 1], "cov": [[1, 0.5], [0.5, 1]]}"#;
        let r: StateRecord = serde_json::from_str(json).unwrap();
        let s = GaussianState::try_from(r.clone()).unwrap();
        assert_eq!(StateRecord::from(&s), r);
        let bad: StateRecord = serde_json::from_str(r#"{"n_modes": 2, "mean": [0, 1], "cov": [[1]]}"#).unwrap();
        assert!(GaussianState::try_from(bad).is_err());
        let p: DensityParams1D =
            serde_json::from_str(r#"{"a1": {"re": 1.625, "im": 0.5}, "a12": 2.75, "b": {"re": 0, "im": 0}}"#).unwrap();
        assert_eq!(p.a1, c(1.625, 0.5));
    }

    #[test]
    fn cov_upper_ordering() {
        let m = DMatrix::from_fn(4, 4, |i, j| (i.min(j) * 10 + i.max(j)) as f64);
        let s = GaussianState::centered(m).unwrap();
        assert_eq!(s.cov_upper(), vec![0.0, 1.0, 2.0, 3.0, 11.0, 12.0, 13.0, 22.0, 23.0, 33.0]);
    }
}
