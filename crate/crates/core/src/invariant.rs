//! Invariant states: the linear covariance-flow matrix `M` (`σ̇ = Mv`), its
//! null space, physicality of null directions, closed-form invariant states
//! and a quasi-invariance score.
//!
//! Vector layouts: one mode `v = (σ_pp, σ_pq, σ_qq)`; two modes the upper
//! triangle of σ in row-major order,
//! `(σ_p₁p₁, σ_p₁q₁, σ_p₁p₂, σ_p₁q₂, σ_q₁q₁, σ_q₁p₂, σ_q₁q₂, σ_p₂p₂, σ_p₂q₂, σ_q₂q₂)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};
use crate::evolution::{covariance_rhs, Trajectory};
use crate::hamiltonian::{energy_with, QuadraticHamiltonian, SymplecticForm};
use crate::parallel::par_map;
use crate::state::{upper_triangle, DensityParams1D, DensityParamsBipartite, GaussianState};

/// Singular values below `NULL_TOL · σ_max` count as zero.
pub const NULL_TOL: f64 = 1e-10;
/// Floor on `|d⟨H⟩/dt|` in [`quasi_invariance_score`].
pub const SCORE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VecLayout {
    OneMode,
    TwoMode,
}

impl VecLayout {
    pub fn len(self) -> usize {
        match self {
            VecLayout::OneMode => 3,
            VecLayout::TwoMode => 10,
        }
    }

    pub fn n_modes(self) -> usize {
        match self {
            VecLayout::OneMode => 1,
            VecLayout::TwoMode => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    pub m: DMatrix<f64>,
    pub t: f64,
    pub layout: VecLayout,
}

/// Independent covariances of σ in the layout order.
pub fn vectorize(sigma: &DMatrix<f64>) -> Result<DVector<f64>> {
    if sigma.nrows() != sigma.ncols() || !(sigma.nrows() == 2 || sigma.nrows() == 4) {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: sigma.nrows(),
        });
    }
    Ok(DVector::from_vec(upper_triangle(sigma)))
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = match v.len() {
        3 => 2,
        10 => 4,
        k => {
            return Err(Error::DimensionMismatch { expected: 10, found: k });
        }
    };
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = v[k];
            m[(j, i)] = v[k];
            k += 1;
        }
    }
    Ok(m)
}

pub fn build_flow_matrix_1d(w1: f64, w2: f64, w3: f64) -> FlowMatrix {
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(3, 3, &[
        -4.0 * w2, -4.0 * w3, 0.0,
        2.0 * w1, 0.0, -2.0 * w3,
        0.0, 4.0 * w1, 4.0 * w2,
    ]);
    FlowMatrix {
        m,
        t: 0.0,
        layout: VecLayout::OneMode,
    }
}

/// The 10×10 flow matrix for `B` frozen at time `t`, with `ω_jk = B_jk`.
pub fn build_flow_matrix_2mode(b: &DMatrix<f64>, t: f64) -> Result<FlowMatrix> {
    check_dim(4, b.nrows())?;
    check_dim(4, b.ncols())?;
    let asym = (b - b.transpose()).amax();
    if asym > 0.0 {
        return Err(Error::NonSymmetricB(asym));
    }
    let w = |i: usize, j: usize| b[(i - 1, j - 1)];
    let (w11, w12, w13, w14) = (w(1, 1), w(1, 2), w(1, 3), w(1, 4));
    let (w22, w23, w24) = (w(2, 2), w(2, 3), w(2, 4));
    let (w33, w34, w44) = (w(3, 3), w(3, 4), w(4, 4));
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(10, 10, &[
        -4.0*w12, -4.0*w22, -4.0*w23, -4.0*w24, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        2.0*w11, 0.0, 2.0*w13, 2.0*w14, -2.0*w22, -2.0*w23, -2.0*w24, 0.0, 0.0, 0.0,
        -2.0*w14, -2.0*w24, -2.0*(w12 + w34), -2.0*w44, 0.0, -2.0*w22, 0.0, -2.0*w23, -2.0*w24, 0.0,
        2.0*w13, 2.0*w23, 2.0*w33, 2.0*(w34 - w12), 0.0, 0.0, -2.0*w22, 0.0, -2.0*w23, -2.0*w24,
        0.0, 4.0*w11, 0.0, 0.0, 4.0*w12, 4.0*w13, 4.0*w14, 0.0, 0.0, 0.0,
        0.0, -2.0*w14, 2.0*w11, 0.0, -2.0*w24, 2.0*(w12 - w34), -2.0*w44, 2.0*w13, 2.0*w14, 0.0,
        0.0, 2.0*w13, 0.0, 2.0*w11, 2.0*w23, 2.0*w33, 2.0*(w12 + w34), 0.0, 2.0*w13, 2.0*w14,
        0.0, 0.0, -4.0*w14, 0.0, 0.0, -4.0*w24, 0.0, -4.0*w34, -4.0*w44, 0.0,
        0.0, 0.0, 2.0*w13, -2.0*w14, 0.0, 2.0*w23, -2.0*w24, 2.0*w33, 0.0, -2.0*w44,
        0.0, 0.0, 0.0, 4.0*w13, 0.0, 0.0, 4.0*w23, 0.0, 4.0*w33, 4.0*w34,
    ]);
    Ok(FlowMatrix {
        m,
        t,
        layout: VecLayout::TwoMode,
    })
}

/// Flow matrix of `h` at time `t`, in the layout matching its mode count.
pub fn flow_matrix_of(h: &QuadraticHamiltonian, t: f64) -> Result<FlowMatrix> {
    let b = h.b(t);
    match h.n_modes() {
        1 => {
            let mut f = build_flow_matrix_1d(b[(0, 0)], b[(0, 1)], b[(1, 1)]);
            f.t = t;
            Ok(f)
        }
        2 => build_flow_matrix_2mode(&b, t),
        n => Err(Error::DimensionMismatch { expected: 2, found: n }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullSpaceResult {
    /// Orthonormal null basis from the SVD.
    pub basis: Vec<DVector<f64>>,
    pub rank: usize,
    /// Singular values in descending order.
    pub singular_values: Vec<f64>,
    /// Reduced-echelon basis: each vector has a unit entry on one free
    /// coordinate and zeros on the others.
    pub canonical_basis: Vec<DVector<f64>>,
    /// Free coordinates of [`NullSpaceResult::canonical_basis`], ascending.
    pub free_columns: Vec<usize>,
}

impl NullSpaceResult {
    pub fn nullity(&self) -> usize {
        self.basis.len()
    }
}

pub fn null_space(f: &FlowMatrix, tol: f64) -> NullSpaceResult {
    let n = f.m.ncols();
    let svd = f.m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = singular_values.first().copied().unwrap_or(0.0);
    let rank = singular_values.iter().filter(|&&s| smax > 0.0 && s > tol * smax).count();
    let basis: Vec<DVector<f64>> = order[rank..]
        .iter()
        .map(|&i| v_t.row(i).transpose().into_owned())
        .collect();
    let (canonical_basis, free_columns) = canonicalize(&basis, n);
    NullSpaceResult {
        basis,
        rank,
        singular_values,
        canonical_basis,
        free_columns,
    }
}

/// Row-reduces the null basis with pivots taken from the right, which
/// reproduces the free-variable basis of the reduced echelon form of `M`.
fn canonicalize(basis: &[DVector<f64>], n: usize) -> (Vec<DVector<f64>>, Vec<usize>) {
    let k = basis.len();
    if k == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut rows: Vec<DVector<f64>> = basis.to_vec();
    let mut pivots = Vec::with_capacity(k);
    let mut r = 0;
    for col in (0..n).rev() {
        if r == k {
            break;
        }
        let (best, val) = (r..k)
            .map(|i| (i, rows[i][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if val < 1e-8 {
            continue;
        }
        rows.swap(r, best);
        let p = rows[r][col];
        rows[r] /= p;
        for i in 0..k {
            if i != r {
                let c = rows[i][col];
                if c != 0.0 {
                    let pr = rows[r].clone();
                    rows[i].axpy(-c, &pr, 1.0);
                }
            }
        }
        pivots.push((col, r));
        r += 1;
    }
    pivots.sort();
    let free = pivots.iter().map(|&(c, _)| c).collect();
    let vecs = pivots
        .iter()
        .map(|&(c, i)| {
            let mut v = rows[i].clone();
            // clean exact zeros on the other free coordinates
            for &(c2, _) in &pivots {
                v[c2] = if c2 == c { 1.0 } else { 0.0 };
            }
            v
        })
        .collect();
    (vecs, free)
}

fn positive_definite(m: &DMatrix<f64>) -> bool {
    let eig = m.clone().symmetric_eigenvalues();
    let scale = eig.amax();
    scale > 0.0 && eig.min() > 1e-12 * scale
}

/// Smallest signed factor `c` making `c · unvec(v)` satisfy every Robertson
/// bound, or `None` when neither `v` nor `−v` is a positive-definite
/// covariance.
pub fn physical_scale(v: &DVector<f64>) -> Option<f64> {
    let m = unvectorize(v).ok()?;
    let sign = if positive_definite(&m) {
        1.0
    } else if positive_definite(&(-&m)) {
        -1.0
    } else {
        return None;
    };
    let m = &m * sign;
    let n_modes = m.nrows() / 2;
    let mut c: f64 = 0.0;
    for k in 0..n_modes {
        let o = 2 * k;
        let det = m[(o, o)] * m[(o + 1, o + 1)] - m[(o, o + 1)] * m[(o + 1, o)];
        c = c.max(1.0 / (2.0 * det.sqrt()));
    }
    if n_modes == 2 {
        c = c.max(1.0 / (2.0 * m.determinant().powf(0.25)));
    }
    Some(sign * c)
}

/// Physicality flag per vector: `±v` is positive definite, so some
/// positive multiple of it is a quantum covariance.
pub fn physical_flags(basis: &[DVector<f64>]) -> Vec<bool> {
    basis.iter().map(|v| physical_scale(v).is_some()).collect()
}

/// `σ = C[[ω₃/ω₁, −ω₂/ω₁], [−ω₂/ω₁, 1]]` and its density parameters.
pub fn invariant_state_1d(c: f64, w1: f64, w2: f64, w3: f64) -> Result<(GaussianState, DensityParams1D)> {
    if w1 == 0.0 {
        return Err(Error::ZeroOmega1);
    }
    let s = c * c * (w3 / w1 - w2 * w2 / (w1 * w1));
    if !(c > 0.0) || !(s > 0.25) {
        return Err(Error::UnphysicalC(c));
    }
    let cov = DMatrix::from_row_slice(2, 2, &[c * w3 / w1, -c * w2 / w1, -c * w2 / w1, c]);
    let state = GaussianState::centered(cov)?;
    let z = Complex64::new(w1, 2.0 * c * w2);
    let a1 = (4.0 * c * c * w1 * w3 + z * z) / (8.0 * c * w1 * w1);
    let a12 = (4.0 * s - 1.0) / (4.0 * c);
    Ok((state, DensityParams1D::new(a1, a12, Complex64::new(0.0, 0.0))))
}

/// `σ = C · diag(ω₁ω₂, ω₂/ω₁, ω₂², 1)` with the density parameters read off
/// the matching exponent matrix `A`.
pub fn invariant_state_frequency_converter(
    c: f64,
    w1: f64,
    w2: f64,
) -> Result<(GaussianState, DensityParamsBipartite)> {
    for w in [w1, w2] {
        if !(w > 0.0) {
            return Err(Error::NonPositiveFrequency(w));
        }
    }
    // Both reduced determinants equal (Cω₂)² and det σ = (Cω₂)⁴.
    if !(c > 0.0) || !(c * w2 >= 0.5) {
        return Err(Error::UnphysicalC(c));
    }
    let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![c * w1 * w2, c * w2 / w1, c * w2 * w2, c]));
    let state = GaussianState::centered(cov)?;
    let r = |x: f64| Complex64::new(x, 0.0);
    let zero = r(0.0);
    let params = DensityParamsBipartite {
        a11: r((w1 / (4.0 * c * w2) + c * w1 * w2) / 2.0),
        a22: r((1.0 / (4.0 * c) + c * w2 * w2) / 2.0),
        a12: zero,
        a14: zero,
        a13: c * w1 * w2 - w1 / (4.0 * c * w2),
        a24: c * w2 * w2 - 1.0 / (4.0 * c),
    };
    Ok((state, params))
}

/// Per-sample `‖σ̇‖_F / max(ε, |d⟨H⟩/dt|)`, with `d⟨H⟩/dt` by centred
/// differences (one-sided at the ends). Energies are recomputed from `h`
/// when the trajectory has none.
pub fn quasi_invariance_score(traj: &Trajectory, h: &QuadraticHamiltonian) -> Vec<f64> {
    let n = traj.len();
    if n == 0 {
        return Vec::new();
    }
    let energy: Vec<f64> = match &traj.energy {
        Some(e) if e.len() == n => e.clone(),
        _ => traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(&t, s)| {
                let (b, d) = h.coefficients(t);
                energy_with(&b, &d, s)
            })
            .collect(),
    };
    let de = |k: usize| -> f64 {
        if n < 2 {
            return 0.0;
        }
        let (a, b) = if k == 0 {
            (0, 1)
        } else if k == n - 1 {
            (n - 2, n - 1)
        } else {
            (k - 1, k + 1)
        };
        (energy[b] - energy[a]) / (traj.times[b] - traj.times[a])
    };
    let form = SymplecticForm::new(h.n_modes());
    let idx: Vec<usize> = (0..n).collect();
    par_map(&idx, |&k| {
        let sdot = covariance_rhs(traj.states[k].cov(), &h.b(traj.times[k]), &form)
            .map(|m| m.norm())
            .unwrap_or(f64::NAN);
        sdot / SCORE_EPS.max(de(k).abs())
    })
}

fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Median of a score series, ignoring non-finite entries.
pub fn median_score(scores: &[f64]) -> f64 {
    median(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_frequency_converter, build_parametric_amplifier, symplectic_form};
    use approx::assert_relative_eq;

    #[test]
    fn one_mode_rank_and_direction() {
        let f = build_flow_matrix_1d(0.5, 0.5, 2.0);
        let ns = null_space(&f, NULL_TOL);
        assert_eq!(ns.rank, 2);
        assert_eq!(ns.free_columns, vec![2]);
        let v = &ns.canonical_basis[0];
        assert_relative_eq!(v[0], 4.0, epsilon = 1e-12);
        assert_relative_eq!(v[1], -1.0, epsilon = 1e-12);
        assert_eq!(v[2], 1.0);
        assert_eq!(physical_flags(&ns.canonical_basis), vec![true]);
    }

    #[test]
    fn zero_matrix_full_null_space() {
        let ns = null_space(&build_flow_matrix_1d(0.0, 0.0, 0.0), NULL_TOL);
        assert_eq!(ns.rank, 0);
        assert_eq!(ns.nullity(), 3);
        let z = build_flow_matrix_2mode(&DMatrix::zeros(4, 4), 0.0).unwrap();
        assert_eq!(z.m, DMatrix::zeros(10, 10));
    }

    #[test]
    fn converter_and_amplifier_rank_eight() {
        for t in [0.0, 0.3, 1.1] {
            for h in [
                build_frequency_converter(2.0, 1.0, 7.0, 10f64.sqrt()).unwrap(),
                build_parametric_amplifier(2.0, 1.0, 7.0, 10f64.sqrt()).unwrap(),
            ] {
                let ns = null_space(&flow_matrix_of(&h, t).unwrap(), NULL_TOL);
                assert_eq!(ns.rank, 8);
                assert_eq!(ns.free_columns, vec![6, 9]);
            }
        }
    }

    #[test]
    fn rejects_asymmetric_b() {
        let mut b = DMatrix::identity(4, 4);
        b[(0, 1)] = 0.1;
        assert_eq!(build_flow_matrix_2mode(&b, 0.0).unwrap_err().name(), "NonSymmetricB");
    }

    #[test]
    fn linearization_identity_fixed_case() {
        let b = DMatrix::from_fn(4, 4, |i, j| 0.3 * (i as f64 - j as f64).cos() + 0.1 * (i + j) as f64);
        let s = DMatrix::from_fn(4, 4, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs()) + 0.05 * (i * j) as f64);
        let f = build_flow_matrix_2mode(&b, 0.0).unwrap();
        let lhs = &f.m * vectorize(&s).unwrap();
        let rhs = vectorize(&covariance_rhs(&s, &b, &symplectic_form(2)).unwrap()).unwrap();
        assert!((lhs - rhs).amax() < 1e-13);
    }

    #[test]
    fn invariant_1d_examples() {
        let (s, p) = invariant_state_1d(1.0, 0.5, 0.5, 2.0).unwrap();
        assert_relative_eq!(p.a1.re, 13.0 / 8.0, epsilon = 1e-15);
        assert_relative_eq!(p.a1.im, 0.5, epsilon = 1e-15);
        assert_relative_eq!(p.a12, 11.0 / 4.0, epsilon = 1e-15);
        assert_eq!(s.cov_upper(), vec![4.0, -1.0, 1.0]);
        let (s, _) = invariant_state_1d(2.0, 1.0, 0.0, 3.0).unwrap();
        assert_eq!(s.cov_upper(), vec![6.0, 0.0, 2.0]);
        assert_eq!(invariant_state_1d(1.0, 0.0, 1.0, 1.0).unwrap_err(), Error::ZeroOmega1);
        assert_eq!(invariant_state_1d(0.1, 1.0, 0.0, 1.0).unwrap_err().name(), "UnphysicalC");
    }

    #[test]
    fn converter_state_examples() {
        let (s, _) = invariant_state_frequency_converter(1.0, 2.0, 1.0).unwrap();
        assert_eq!(s.cov_upper(), vec![2.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let (s, _) = invariant_state_frequency_converter(1.0, 1.5, 1.5).unwrap();
        assert_eq!(s.mode_cov(0), s.mode_cov(1));
        assert!(invariant_state_frequency_converter(0.4, 2.0, 1.0).is_err());
        assert!(invariant_state_frequency_converter(1.0, -2.0, 1.0).is_err());
    }

    #[test]
    fn physical_scale_minimal() {
        let v = DVector::from_vec(vec![4.0, -1.0, 1.0]);
        let c = physical_scale(&v).unwrap();
        assert_relative_eq!(c, 1.0 / (2.0 * 3f64.sqrt()), epsilon = 1e-15);
        assert_relative_eq!(physical_scale(&(-v)).unwrap(), -c, epsilon = 1e-15);
        assert!(physical_scale(&DVector::from_vec(vec![1.0, 0.0, -1.0])).is_none());
    }
}
