//! Scenario files: one Hamiltonian, one initial state, integrator settings
//! and the list of artifacts to produce.

use std::collections::HashSet;
use std::path::Path;

use gaussdyn::invariant::{invariant_state_1d, invariant_state_frequency_converter};
use gaussdyn::tomography::ThermalSpec;
use gaussdyn::{
    covariances_from_bipartite_params, state_from_params_1d, DensityParams1D, DensityParamsBipartite, GaussianState,
    HamiltonianSpec, IntegratorConfig, StateRecord,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub hamiltonian: HamiltonianSpec,
    pub initial_state: InitialState,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub outputs: Vec<Output>,
    #[serde(default)]
    pub tomogram: Option<TomogramGrid>,
    #[serde(default)]
    pub thermal: Option<ThermalSpec>,
    /// Seed for randomized fixtures; carried through to reports.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    State(StateRecord),
    Params1d(DensityParams1D),
    ParamsBipartite(DensityParamsBipartite),
    /// Invariant state of the scenario's Hamiltonian with scale `c`
    /// (one-mode models and the frequency converter).
    Invariant { c: f64 },
    Thermal { beta: f64 },
    Vacuum { n_modes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Trajectory,
    Subsystems,
    Energy,
    Tomogram,
    Invariants,
    Thermal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub kind: OutputKind,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Range {
    pub fn points(&self) -> Vec<f64> {
        match self.n {
            0 => Vec::new(),
            1 => vec![self.min],
            n => (0..n)
                .map(|k| self.min + (self.max - self.min) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

/// `(X, μ, ν)` grid. Frames come from `frames` or, for optical grids, from
/// `thetas` equally spaced angles on `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomogramGrid {
    #[serde(default)]
    pub t: f64,
    #[serde(default)]
    pub mode: usize,
    pub x: Range,
    #[serde(default)]
    pub frames: Vec<[f64; 2]>,
    #[serde(default)]
    pub thetas: usize,
}

impl TomogramGrid {
    pub fn frames(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.frames.iter().map(|f| (f[0], f[1])).collect();
        out.extend((0..self.thetas).map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / self.thetas as f64;
            (th.cos(), th.sin())
        }));
        out
    }
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::ScenarioParse(e.to_string()))
}

impl Scenario {
    pub fn initial(&self) -> Result<GaussianState, CliError> {
        let n = self.hamiltonian.n_modes();
        let s = match &self.initial_state {
            InitialState::State(r) => GaussianState::try_from(r.clone())?,
            InitialState::Params1d(p) => state_from_params_1d(p)?,
            InitialState::ParamsBipartite(p) => covariances_from_bipartite_params(p)?,
            InitialState::Invariant { c } => match self.hamiltonian {
                HamiltonianSpec::FrequencyConverter { omega1, omega2, .. } => {
                    invariant_state_frequency_converter(*c, omega1, omega2)?.0
                }
                HamiltonianSpec::ParametricAmplifier { .. } => {
                    return Err(CliError::InvalidScenario(
                        "the parametric amplifier has no physical invariant state".into(),
                    ))
                }
                _ => {
                    let b = self.hamiltonian.build()?.b(0.0);
                    invariant_state_1d(*c, b[(0, 0)], b[(0, 1)], b[(1, 1)])?.0
                }
            },
            InitialState::Thermal { beta } => {
                gaussdyn::thermal_state_1d(&ThermalSpec::new(*beta, 0)?)?.1
            }
            InitialState::Vacuum { n_modes } => GaussianState::vacuum(*n_modes),
        };
        if s.n_modes() != n {
            return Err(gaussdyn::Error::DimensionMismatch {
                expected: n,
                found: s.n_modes(),
            }
            .into());
        }
        // rejects nonphysical input with the library's message
        gaussdyn::purity(&s)?;
        Ok(s)
    }

    /// Checks everything that can be checked without integrating.
    pub fn validate(&self) -> Result<(), CliError> {
        self.hamiltonian.build()?;
        self.integrator.validate()?;
        self.initial()?;
        let mut seen = HashSet::new();
        for o in &self.outputs {
            if o.path.is_empty() || Path::new(&o.path).file_name().is_none() {
                return Err(CliError::InvalidScenario(format!("output path {:?} is not a file name", o.path)));
            }
            if !seen.insert(o.path.as_str()) {
                return Err(CliError::InvalidScenario(format!("output path {:?} used twice", o.path)));
            }
            match o.kind {
                OutputKind::Subsystems if self.hamiltonian.n_modes() != 2 => {
                    return Err(CliError::InvalidScenario("subsystems output needs a two-mode model".into()))
                }
                OutputKind::Tomogram if self.tomogram.is_none() => {
                    return Err(CliError::InvalidScenario("tomogram output needs a \"tomogram\" grid".into()))
                }
                OutputKind::Thermal if self.thermal.is_none() => {
                    return Err(CliError::InvalidScenario("thermal output needs a \"thermal\" block".into()))
                }
                _ => {}
            }
        }
        if let Some(g) = &self.tomogram {
            if g.mode >= self.hamiltonian.n_modes() {
                return Err(CliError::InvalidScenario(format!("tomogram mode {} out of range", g.mode)));
            }
            if g.frames().is_empty() || g.x.n == 0 {
                return Err(CliError::InvalidScenario("tomogram grid is empty".into()));
            }
            if !(g.t >= 0.0 && g.t.is_finite()) {
                return Err(CliError::InvalidScenario("tomogram time must be finite and non-negative".into()));
            }
        }
        if let Some(th) = &self.thermal {
            th.validate()?;
        }
        Ok(())
    }

    pub fn output(&self, kind: OutputKind) -> Option<&Output> {
        self.outputs.iter().find(|o| o.kind == kind)
    }
}
