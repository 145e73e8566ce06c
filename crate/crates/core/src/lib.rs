//! Gaussian-state dynamics under time-dependent quadratic Hamiltonians.
//!
//! Quadratures are ordered `r = (p₁, q₁, p₂, q₂, …)` everywhere, with
//! `ħ = m = k_B = 1`.

pub mod error;
pub mod evolution;
pub mod export;
pub mod hamiltonian;
pub mod invariant;
pub mod ode;
pub mod parallel;
pub mod quadrature;
pub mod state;
pub mod subsystem;
pub mod tomography;

pub use error::{Error, Result};
pub use evolution::{
    apply_frame, evolve, evolve_batch, evolve_frames, evolve_params_1d, evolve_params_bipartite, IntegratorConfig, Method,
    SymplecticFrame, Trajectory,
};
pub use invariant::{flow_matrix_of, null_space, FlowMatrix, NullSpaceResult};
pub use parallel::Exec;
pub use hamiltonian::{
    build_coupled_oscillator, build_frequency_converter, build_generic_1d, build_parametric_amplifier, mean_energy,
    symplectic_form, HamiltonianSpec, QuadraticHamiltonian, SymplecticForm,
};
pub use state::{
    bipartite_params_from_covariances, covariances_from_bipartite_params, density_eval_1d, density_eval_bipartite,
    is_physical, params_from_state_1d, purity, state_from_params_1d, DensityParams1D, DensityParamsBipartite,
    GaussianState, StateRecord,
};
pub use subsystem::{log_negativity, subsystem_purities};
pub use tomography::{
    fock_overlap, fock_tomogram, marginal_tomogram, thermal_decomposition, thermal_state_1d, tomogram_of_state,
    tomogram_pdf, two_mode_tomogram, GaussianTomogram, ThermalSpec,
};
