use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gaussdyn::evolution::covariance_rhs;
use gaussdyn::export::{fmt_f64, subsystem_csv, thermal_csv, tomogram_csv, trajectory_csv};
use gaussdyn::invariant::{build_flow_matrix_1d, physical_scale, unvectorize, NULL_TOL};
use gaussdyn::tomography::{
    fock_distribution, normalization_residual, partition_function, pdf_grid, thermal_variance, thermal_weights,
};
use gaussdyn::{
    evolve, flow_matrix_of, null_space, subsystem_purities, symplectic_form, tomogram_of_state, Exec, GaussianState,
    IntegratorConfig, StateRecord, Trajectory,
};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::io::write_atomic;
use crate::scenario::{OutputKind, Scenario};

/// Runs the covariance/mean flow and writes trajectory, subsystem and
/// energy artifacts. Without declared outputs a `<name>_trajectory.csv`
/// (plus `<name>_subsystems.csv` for two modes) is written.
pub fn run_evolve(sc: &Scenario, out: &Path) -> Result<Value, CliError> {
    sc.validate()?;
    let h = sc.hamiltonian.build()?;
    let s0 = sc.initial()?;
    let traj = evolve(&h, &s0, &sc.integrator)?;

    let mut wanted: Vec<(OutputKind, String)> = sc
        .outputs
        .iter()
        .filter(|o| matches!(o.kind, OutputKind::Trajectory | OutputKind::Subsystems | OutputKind::Energy))
        .map(|o| (o.kind, o.path.clone()))
        .collect();
    if sc.outputs.is_empty() {
        wanted.push((OutputKind::Trajectory, format!("{}_trajectory.csv", sc.name)));
        if s0.n_modes() == 2 {
            wanted.push((OutputKind::Subsystems, format!("{}_subsystems.csv", sc.name)));
        }
    }

    let mut written = Vec::new();
    for (kind, name) in wanted {
        let body = match kind {
            OutputKind::Trajectory => trajectory_csv(&traj)?,
            OutputKind::Subsystems => subsystem_csv(&traj, &subsystem_purities(&traj)?)?,
            OutputKind::Energy => energy_csv(&traj),
            _ => unreachable!("filtered above"),
        };
        written.push(write_atomic(out, &name, &body)?);
    }
    Ok(json!({
        "scenario": sc.name,
        "samples": traj.len(),
        "max_symplectic_residual": traj.max_symplectic_drift(),
        "written": paths_json(&written),
    }))
}

fn energy_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,energy\n");
    let energy = traj.energy.as_deref().unwrap_or(&[]);
    for (t, e) in traj.times.iter().zip(energy) {
        let _ = writeln!(out, "{},{}", fmt_f64(*t), fmt_f64(*e));
    }
    out
}

fn paths_json(paths: &[PathBuf]) -> Value {
    Value::from(paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>())
}

fn vec_json(v: impl IntoIterator<Item = f64>) -> Value {
    Value::from(v.into_iter().collect::<Vec<f64>>())
}

/// Rank and null space of the covariance-flow matrix at `t = 0`, the
/// physicality of each null direction and the pure invariant state built
/// from every physical one.
pub fn run_invariants(sc: &Scenario, out: Option<&Path>) -> Result<Value, CliError> {
    sc.validate()?;
    let h = sc.hamiltonian.build()?;
    let f = if h.n_modes() == 1 {
        let b = h.b(0.0);
        build_flow_matrix_1d(b[(0, 0)], b[(0, 1)], b[(1, 1)])
    } else {
        flow_matrix_of(&h, 0.0)?
    };
    let ns = null_space(&f, NULL_TOL);
    let scales: Vec<Option<f64>> = ns.canonical_basis.iter().map(physical_scale).collect();
    let mut constructed = Vec::new();
    for (k, (v, scale)) in ns.canonical_basis.iter().zip(&scales).enumerate() {
        if let Some(c) = scale {
            let cov = unvectorize(&(v * *c))?;
            let state = GaussianState::centered(cov)?;
            constructed.push(json!({
                "basis_index": k,
                "scale": c,
                "purity": gaussdyn::purity(&state)?,
                "state": StateRecord::from(&state),
            }));
        }
    }
    let s0 = sc.initial()?;
    let rate = covariance_rhs(s0.cov(), &h.b(0.0), &symplectic_form(h.n_modes()))?;
    let report = json!({
        "scenario": sc.name,
        "t": 0.0,
        "dimension": f.m.nrows(),
        "rank": ns.rank,
        "nullity": ns.nullity(),
        "determinant": f.m.determinant(),
        "singular_values": ns.singular_values,
        "free_columns": ns.free_columns,
        "null_basis": ns.canonical_basis.iter().map(|v| vec_json(v.iter().copied())).collect::<Vec<_>>(),
        "orthonormal_basis": ns.basis.iter().map(|v| vec_json(v.iter().copied())).collect::<Vec<_>>(),
        "physical_flags": scales.iter().map(Option::is_some).collect::<Vec<_>>(),
        "physical_scales": scales,
        "constructed_states": constructed,
        "initial_rate_max": rate.amax(),
    });
    if let (Some(dir), Some(o)) = (out, sc.output(OutputKind::Invariants)) {
        let mut body = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
        body.push('\n');
        write_atomic(dir, &o.path, &body)?;
    }
    Ok(report)
}

fn state_at(sc: &Scenario, t: f64) -> Result<GaussianState, CliError> {
    let s0 = sc.initial()?;
    if t == 0.0 {
        return Ok(s0);
    }
    let cfg = IntegratorConfig {
        t_max: t,
        sample_stride: usize::MAX,
        frames: false,
        ..sc.integrator.clone()
    };
    let traj = evolve(&sc.hamiltonian.build()?, &s0, &cfg)?;
    Ok(traj.states.last().cloned().expect("trajectory has at least one sample"))
}

/// `X, μ, ν, pdf, normalization residual` over the scenario's grid.
pub fn run_tomogram(sc: &Scenario, out: &Path, exec: Exec) -> Result<Value, CliError> {
    sc.validate()?;
    let grid = sc
        .tomogram
        .as_ref()
        .ok_or_else(|| CliError::InvalidScenario("scenario has no \"tomogram\" grid".into()))?;
    let state = state_at(sc, grid.t)?;
    let tg = tomogram_of_state(&state, grid.mode)?;
    let xs = grid.x.points();
    let mut points = Vec::new();
    let mut residuals = Vec::new();
    for (mu, nu) in grid.frames() {
        let r = normalization_residual(&tg, mu, nu)?;
        for &x in &xs {
            points.push((x, mu, nu));
            residuals.push(r);
        }
    }
    let pdf = pdf_grid(&tg, &points, exec)?;
    let rows: Vec<_> = points
        .iter()
        .zip(&pdf)
        .zip(&residuals)
        .map(|((&(x, mu, nu), &p), &r)| (x, mu, nu, p, r))
        .collect();
    let name = sc
        .output(OutputKind::Tomogram)
        .map_or_else(|| format!("{}_tomogram.csv", sc.name), |o| o.path.clone());
    let path = write_atomic(out, &name, &tomogram_csv(&rows))?;
    let worst = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(json!({
        "scenario": sc.name,
        "t": grid.t,
        "rows": rows.len(),
        "max_norm_residual": worst,
        "written": paths_json(&[path]),
    }))
}

/// Thermal weights `P_n` with the residual `1 − Σ_{k≤n} P_k`, plus a
/// summary of the thermal state on stdout.
pub fn run_thermal(sc: &Scenario, out: &Path) -> Result<Value, CliError> {
    sc.validate()?;
    let spec = sc
        .thermal
        .ok_or_else(|| CliError::InvalidScenario("scenario has no \"thermal\" block".into()))?;
    let weights = thermal_weights(spec.beta, spec.n_max);
    let mut acc = 0.0;
    let residuals: Vec<f64> = weights
        .iter()
        .map(|p| {
            acc += p;
            1.0 - acc
        })
        .collect();
    let name = sc
        .output(OutputKind::Thermal)
        .map_or_else(|| format!("{}_thermal.csv", sc.name), |o| o.path.clone());
    let path = write_atomic(out, &name, &thermal_csv(&weights, &residuals))?;
    let (_, state) = gaussdyn::thermal_state_1d(&spec)?;
    let overlaps = fock_distribution(&state, spec.n_max.min(2))?;
    Ok(json!({
        "scenario": sc.name,
        "beta": spec.beta,
        "temperature": spec.temperature(),
        "partition_function": partition_function(spec.beta),
        "variance": thermal_variance(spec.beta),
        "fock_overlaps": overlaps,
        "written": paths_json(&[path]),
    }))
}
