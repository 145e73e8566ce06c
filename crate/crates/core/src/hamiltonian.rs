//! Time-dependent quadratic Hamiltonians `H = r̃ B(t) r + Δ̃(t) r` over the
//! quadrature vector `r = (p₁, q₁, …, p_N, q_N)` with ħ = m = 1.
//!
//! `B(t)` is the matrix of the quadratic form itself, so the one-mode
//! oscillator `½(p² + ω²q²) + ½ν(pq + qp)` has `B = ½[[1, ν], [ν, ω²]]`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::state::GaussianState;

/// Scalar coefficient as a function of time.
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

type CoeffFn = Arc<dyn Fn(f64) -> (DMatrix<f64>, DVector<f64>) + Send + Sync>;

/// Wraps a closure as a [`TimeFn`].
pub fn time_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> TimeFn {
    Arc::new(f)
}

/// Constant coefficient.
pub fn constant_fn(c: f64) -> TimeFn {
    Arc::new(move |_| c)
}

#[derive(Clone)]
pub struct QuadraticHamiltonian {
    n_modes: usize,
    coeffs: CoeffFn,
    spec: Option<HamiltonianSpec>,
}

impl fmt::Debug for QuadraticHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadraticHamiltonian")
            .field("n_modes", &self.n_modes)
            .field("spec", &self.spec)
            .finish()
    }
}

impl QuadraticHamiltonian {
    /// General constructor. The closure returns the upper triangle of `B`
    /// (lower entries are ignored and mirrored) together with `Δ`.
    pub fn from_fn(
        n_modes: usize,
        f: impl Fn(f64) -> (DMatrix<f64>, DVector<f64>) + Send + Sync + 'static,
    ) -> Self {
        assert!(n_modes >= 1, "a Hamiltonian needs at least one mode");
        let dim = 2 * n_modes;
        let coeffs: CoeffFn = Arc::new(move |t| {
            let (mut b, delta) = f(t);
            assert_eq!(b.shape(), (dim, dim), "coefficient matrix has wrong shape");
            assert_eq!(delta.len(), dim, "drive vector has wrong length");
            mirror_upper(&mut b);
            (b, delta)
        });
        Self {
            n_modes,
            coeffs,
            spec: None,
        }
    }

    /// Time-independent Hamiltonian. `b` must already be symmetric.
    pub fn constant(b: DMatrix<f64>, delta: DVector<f64>) -> Result<Self> {
        if !b.is_square() || b.nrows() % 2 != 0 || b.nrows() == 0 {
            return Err(Error::InvalidConfig(format!(
                "coefficient matrix must be 2N x 2N, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        check_dim(b.nrows(), delta.len())?;
        let asym = (&b - b.transpose()).amax();
        if asym > 0.0 {
            return Err(Error::NonSymmetricB(asym));
        }
        let n = b.nrows() / 2;
        Ok(Self::from_fn(n, move |_| (b.clone(), delta.clone())))
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Phase-space dimension `2N`.
    pub fn dim(&self) -> usize {
        2 * self.n_modes
    }

    /// `(B(t), Δ(t))`.
    pub fn coefficients(&self, t: f64) -> (DMatrix<f64>, DVector<f64>) {
        (self.coeffs)(t)
    }

    pub fn b(&self, t: f64) -> DMatrix<f64> {
        self.coefficients(t).0
    }

    pub fn delta(&self, t: f64) -> DVector<f64> {
        self.coefficients(t).1
    }

    /// The JSON-describable model this Hamiltonian was built from, if any.
    pub fn spec(&self) -> Option<&HamiltonianSpec> {
        self.spec.as_ref()
    }

    fn with_spec(mut self, spec: HamiltonianSpec) -> Self {
        self.spec = Some(spec);
        self
    }
}

fn mirror_upper(b: &mut DMatrix<f64>) {
    let n = b.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            b[(j, i)] = b[(i, j)];
        }
    }
}

/// One-mode Hamiltonian `ω₁p² + ω₂(pq + qp) + ω₃q² + δ₁p + δ₂q`.
pub fn build_generic_1d(
    omega1: TimeFn,
    omega2: TimeFn,
    omega3: TimeFn,
    delta1: TimeFn,
    delta2: TimeFn,
) -> QuadraticHamiltonian {
    QuadraticHamiltonian::from_fn(1, move |t| {
        let w2 = omega2(t);
        let b = DMatrix::from_row_slice(2, 2, &[omega1(t), w2, w2, omega3(t)]);
        let d = DVector::from_vec(vec![delta1(t), delta2(t)]);
        (b, d)
    })
}

/// `½(p² + ω²q²) + ½ν(pq + qp)`.
pub fn build_coupled_oscillator(omega: f64, nu: f64) -> QuadraticHamiltonian {
    let b = DMatrix::from_row_slice(2, 2, &[0.5, 0.5 * nu, 0.5 * nu, 0.5 * omega * omega]);
    QuadraticHamiltonian::from_fn(1, move |_| (b.clone(), DVector::zeros(2)))
        .with_spec(HamiltonianSpec::Oscillator { omega, nu })
}

/// Oscillation parameter `f = √(4(ω² − ν²))` of the coupled oscillator
/// (NaN when `ν² > ω²`, where the motion is not oscillatory).
pub fn oscillation_frequency(omega: f64, nu: f64) -> f64 {
    (4.0 * (omega * omega - nu * nu)).sqrt()
}

fn check_frequencies(omega1: f64, omega2: f64) -> Result<()> {
    for w in [omega1, omega2] {
        if w.is_nan() || w <= 0.0 {
            return Err(Error::NonPositiveFrequency(w));
        }
    }
    Ok(())
}

/// Coupling sign pattern distinguishing the two pumped two-mode models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pump {
    Converter,
    Amplifier,
}

fn two_mode_pumped(omega1: f64, omega2: f64, omega: f64, kappa: f64, pump: Pump) -> QuadraticHamiltonian {
    let s = match pump {
        Pump::Converter => -1.0,
        Pump::Amplifier => 1.0,
    };
    let root_prod = (omega1 * omega2).sqrt();
    let root_21 = (omega2 / omega1).sqrt();
    let root_12 = (omega1 / omega2).sqrt();
    QuadraticHamiltonian::from_fn(2, move |t| {
        let (sn, cs) = (omega * t).sin_cos();
        let mut b = DMatrix::zeros(4, 4);
        b[(0, 0)] = 0.5;
        b[(1, 1)] = 0.5 * omega1 * omega1;
        b[(2, 2)] = 0.5;
        b[(3, 3)] = 0.5 * omega2 * omega2;
        b[(0, 2)] = s * 0.5 * kappa * cs / root_prod;
        b[(0, 3)] = 0.5 * kappa * root_21 * sn;
        b[(1, 2)] = s * 0.5 * kappa * root_12 * sn;
        b[(1, 3)] = -0.5 * kappa * root_prod * cs;
        (b, DVector::zeros(4))
    })
}

/// Two-mode frequency converter pumped at frequency `omega` with coupling `kappa`.
pub fn build_frequency_converter(omega1: f64, omega2: f64, omega: f64, kappa: f64) -> Result<QuadraticHamiltonian> {
    check_frequencies(omega1, omega2)?;
    Ok(two_mode_pumped(omega1, omega2, omega, kappa, Pump::Converter).with_spec(
        HamiltonianSpec::FrequencyConverter {
            omega1,
            omega2,
            omega,
            kappa,
        },
    ))
}

/// Nondegenerate parametric amplifier. Differs from the converter in the
/// sign of the `B₁₃` and `B₂₃` couplings.
pub fn build_parametric_amplifier(omega1: f64, omega2: f64, omega: f64, kappa: f64) -> Result<QuadraticHamiltonian> {
    check_frequencies(omega1, omega2)?;
    Ok(two_mode_pumped(omega1, omega2, omega, kappa, Pump::Amplifier).with_spec(
        HamiltonianSpec::ParametricAmplifier {
            omega1,
            omega2,
            omega,
            kappa,
        },
    ))
}

/// Commutator matrix `D_jk = [r_j, r_k]`: block diagonal with `−iΣ`,
/// `Σ = [[0, 1], [−1, 0]]`, on every mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticForm {
    n_modes: usize,
}

pub fn symplectic_form(n_modes: usize) -> SymplecticForm {
    SymplecticForm::new(n_modes)
}

impl SymplecticForm {
    pub fn new(n_modes: usize) -> Self {
        assert!(n_modes >= 1, "symplectic form needs at least one mode");
        Self { n_modes }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        2 * self.n_modes
    }

    /// The real block matrix `J = iD` (per-mode `Σ`).
    pub fn real_form(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut j = DMatrix::zeros(n, n);
        for k in 0..self.n_modes {
            j[(2 * k, 2 * k + 1)] = 1.0;
            j[(2 * k + 1, 2 * k)] = -1.0;
        }
        j
    }

    /// `D` itself, with entries in `{0, ±i}`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        self.real_form().map(|x| Complex64::new(0.0, -x))
    }
}

/// Symmetrized expectation `tr(Bσ) + ⟨r̃⟩B⟨r⟩ + Δ̃⟨r⟩` at time `t`.
pub fn mean_energy(h: &QuadraticHamiltonian, s: &GaussianState, t: f64) -> Result<f64> {
    check_dim(h.n_modes(), s.n_modes())?;
    let (b, delta) = h.coefficients(t);
    Ok(energy_with(&b, &delta, s))
}

pub(crate) fn energy_with(b: &DMatrix<f64>, delta: &DVector<f64>, s: &GaussianState) -> f64 {
    let m = s.mean();
    (b * s.cov()).trace() + m.dot(&(b * m)) + delta.dot(m)
}

/// File-level description of a Hamiltonian:
/// `{"model": "...", "params": {...}}`. Arbitrary time dependence is only
/// available through the API; `generic1d` takes constant coefficients here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "snake_case")]
pub enum HamiltonianSpec {
    #[serde(rename = "generic1d")]
    Generic1d {
        omega1: f64,
        omega2: f64,
        omega3: f64,
        #[serde(default)]
        delta1: f64,
        #[serde(default)]
        delta2: f64,
    },
    Oscillator {
        omega: f64,
        nu: f64,
    },
    FrequencyConverter {
        omega1: f64,
        omega2: f64,
        omega: f64,
        kappa: f64,
    },
    ParametricAmplifier {
        omega1: f64,
        omega2: f64,
        omega: f64,
        kappa: f64,
    },
}

impl HamiltonianSpec {
    pub fn build(&self) -> Result<QuadraticHamiltonian> {
        match *self {
            HamiltonianSpec::Generic1d {
                omega1,
                omega2,
                omega3,
                delta1,
                delta2,
            } => Ok(build_generic_1d(
                constant_fn(omega1),
                constant_fn(omega2),
                constant_fn(omega3),
                constant_fn(delta1),
                constant_fn(delta2),
            )
            .with_spec(self.clone())),
            HamiltonianSpec::Oscillator { omega, nu } => Ok(build_coupled_oscillator(omega, nu)),
            HamiltonianSpec::FrequencyConverter {
                omega1,
                omega2,
                omega,
                kappa,
            } => build_frequency_converter(omega1, omega2, omega, kappa),
            HamiltonianSpec::ParametricAmplifier {
                omega1,
                omega2,
                omega,
                kappa,
            } => build_parametric_amplifier(omega1, omega2, omega, kappa),
        }
    }

    pub fn n_modes(&self) -> usize {
        match self {
            HamiltonianSpec::Generic1d { .. } | HamiltonianSpec::Oscillator { .. } => 1,
            _ => 2,
        }
    }
}
