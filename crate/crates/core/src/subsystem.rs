//! Two-mode block structure: subsystem covariance rates split into the
//! local (unitary) and correlation-driven (nonunitary) parts, subsystem
//! purities, and logarithmic negativity.

use nalgebra::{DMatrix, Matrix2, Matrix4};

use crate::error::{check_dim, Error, Result};
use crate::evolution::Trajectory;
use crate::parallel::par_map;
use crate::state::{require_physical, GaussianState, DEFAULT_PHYSICALITY_TOL};

/// Single-mode symplectic block `Σ = [[0, 1], [−1, 0]]`.
fn sigma_form() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

fn block(m: &DMatrix<f64>, r: usize, c: usize) -> Matrix2<f64> {
    Matrix2::new(m[(r, c)], m[(r, c + 1)], m[(r + 1, c)], m[(r + 1, c + 1)])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipartiteBlocks {
    pub s1: Matrix2<f64>,
    pub s2: Matrix2<f64>,
    pub s12: Matrix2<f64>,
    pub b1: Matrix2<f64>,
    pub b2: Matrix2<f64>,
    pub b12: Matrix2<f64>,
}

impl BipartiteBlocks {
    /// Rebuilds the 4×4 `(σ, B)`.
    pub fn reassemble(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let join = |a: &Matrix2<f64>, ab: &Matrix2<f64>, b: &Matrix2<f64>| {
            let mut m = DMatrix::zeros(4, 4);
            m.view_mut((0, 0), (2, 2)).copy_from(a);
            m.view_mut((0, 2), (2, 2)).copy_from(ab);
            m.view_mut((2, 0), (2, 2)).copy_from(&ab.transpose());
            m.view_mut((2, 2), (2, 2)).copy_from(b);
            m
        };
        (join(&self.s1, &self.s12, &self.s2), join(&self.b1, &self.b12, &self.b2))
    }
}

/// Splits `σ` and `B` into `(p₁, q₁ | p₂, q₂)` blocks.
pub fn decompose(sigma: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<BipartiteBlocks> {
    for m in [sigma, b] {
        check_dim(4, m.nrows())?;
        check_dim(4, m.ncols())?;
    }
    Ok(BipartiteBlocks {
        s1: block(sigma, 0, 0),
        s2: block(sigma, 2, 2),
        s12: block(sigma, 0, 2),
        b1: block(b, 0, 0),
        b2: block(b, 2, 2),
        b12: block(b, 0, 2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsystemRates {
    pub ds1: Matrix2<f64>,
    pub ds2: Matrix2<f64>,
    pub ds12: Matrix2<f64>,
    pub unitary1: Matrix2<f64>,
    pub nonunitary1: Matrix2<f64>,
    pub unitary2: Matrix2<f64>,
    pub nonunitary2: Matrix2<f64>,
}

/// `σ̇₁ = 2((σ₁B₁ + σ₁₂B̃₁₂)Σ − Σ(B₁σ₁ + B₁₂σ̃₁₂))` and companions. The
/// totals are formed as unitary + nonunitary, so the split is exact.
pub fn subsystem_rates(b: &BipartiteBlocks) -> SubsystemRates {
    let s = sigma_form();
    let comm = |x: Matrix2<f64>, y: Matrix2<f64>| (x * s - s * y) * 2.0;
    let unitary1 = comm(b.s1 * b.b1, b.b1 * b.s1);
    let nonunitary1 = comm(b.s12 * b.b12.transpose(), b.b12 * b.s12.transpose());
    let unitary2 = comm(b.s2 * b.b2, b.b2 * b.s2);
    let nonunitary2 = comm(b.s12.transpose() * b.b12, b.b12.transpose() * b.s12);
    let ds12 = comm(b.s1 * b.b12 + b.s12 * b.b2, b.b1 * b.s12 + b.b12 * b.s2);
    SubsystemRates {
        ds1: unitary1 + nonunitary1,
        ds2: unitary2 + nonunitary2,
        ds12,
        unitary1,
        nonunitary1,
        unitary2,
        nonunitary2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsystemSample {
    pub t: f64,
    pub purity1: f64,
    pub purity2: f64,
    pub det1: f64,
    pub det2: f64,
}

/// Per-sample reduced purities `1/(2√det σ_j)`.
pub fn subsystem_purities(traj: &Trajectory) -> Result<Vec<SubsystemSample>> {
    if traj.n_modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: traj.n_modes(),
        });
    }
    let idx: Vec<usize> = (0..traj.len()).collect();
    let rows = par_map(&idx, |&k| {
        let s = &traj.states[k];
        let (det1, det2) = (s.robertson(0), s.robertson(1));
        if !(det1 >= 0.25 - DEFAULT_PHYSICALITY_TOL && det2 >= 0.25 - DEFAULT_PHYSICALITY_TOL) {
            return Err(Error::NonPhysicalState(format!("reduced state violates Robertson at t = {}", traj.times[k])));
        }
        Ok(SubsystemSample {
            t: traj.times[k],
            purity1: 1.0 / (2.0 * det1.sqrt()),
            purity2: 1.0 / (2.0 * det2.sqrt()),
            det1,
            det2,
        })
    });
    rows.into_iter().collect()
}

/// Smallest symplectic eigenvalue of the partially transposed covariance
/// (`p₂ → −p₂`), from the seralian `Δ̃ = det σ₁ + det σ₂ − 2 det σ₁₂`.
pub fn min_symplectic_eigenvalue_pt(sigma: &Matrix4<f64>) -> f64 {
    let s1 = sigma.fixed_view::<2, 2>(0, 0).determinant();
    let s2 = sigma.fixed_view::<2, 2>(2, 2).determinant();
    let s12 = sigma.fixed_view::<2, 2>(0, 2).determinant();
    let det = sigma.determinant();
    let delta = s1 + s2 - 2.0 * s12;
    let disc = (delta * delta - 4.0 * det).max(0.0);
    ((delta - disc.sqrt()) / 2.0).max(0.0).sqrt()
}

/// `E_N = max(0, −ln 2ν̃₋)` in natural-log units.
pub fn log_negativity(sigma: &DMatrix<f64>) -> Result<f64> {
    check_dim(4, sigma.nrows())?;
    check_dim(4, sigma.ncols())?;
    let s = GaussianState::centered(sigma.clone())?;
    require_physical(&s)?;
    let m = Matrix4::from_fn(|i, j| sigma[(i, j)]);
    let nu = min_symplectic_eigenvalue_pt(&m);
    Ok((-(2.0 * nu).ln()).max(0.0))
}
