//! Deterministic CSV rendering: 17 significant digits, `.` separator, LF
//! line endings, `-0` written as `0`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::subsystem::{log_negativity, SubsystemSample};

/// Formats with 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // also folds −0
        return "0.0000000000000000e0".to_string();
    }
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{x:.16e}")
}

fn push_row(out: &mut String, cells: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for c in cells {
        if !first {
            out.push(',');
        }
        first = false;
        out.push_str(&fmt_f64(c));
    }
    out.push('\n');
}

fn quadrature_label(k: usize) -> String {
    format!("{}{}", if k % 2 == 0 { 'p' } else { 'q' }, k / 2 + 1)
}

/// Header of [`trajectory_csv`] for `n_modes` modes.
pub fn trajectory_header(n_modes: usize, with_frames: bool) -> Vec<String> {
    let dim = 2 * n_modes;
    let mut h = vec!["t".to_string()];
    h.extend((0..dim).map(|k| format!("mean_{}", quadrature_label(k))));
    for i in 0..dim {
        for j in i..dim {
            h.push(format!("cov_{}{}", quadrature_label(i), quadrature_label(j)));
        }
    }
    h.extend(["det_cov", "purity", "energy"].map(String::from));
    if with_frames {
        h.push("symplectic_residual".into());
    }
    h
}

/// `t, means, upper-triangle covariances, det σ, purity, energy`, and the
/// frame residual when frames were recorded.
pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    let n = traj.n_modes();
    let with_frames = traj.frames.is_some();
    let mut out = trajectory_header(n, with_frames).join(",");
    out.push('\n');
    let purities = traj.purities();
    for (k, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
        let mut row = vec![*t];
        row.extend(s.mean().iter().copied());
        row.extend(s.cov_upper());
        row.push(s.det());
        row.push(purities[k]);
        row.push(traj.energy.as_ref().and_then(|e| e.get(k).copied()).unwrap_or(f64::NAN));
        if let Some(fs) = &traj.frames {
            let f = fs.get(k).ok_or_else(|| Error::InvalidConfig("frame count differs from sample count".into()))?;
            row.push(f.symplectic_residual());
        }
        push_row(&mut out, row);
    }
    Ok(out)
}

pub const SUBSYSTEM_HEADER: &str = "t,det_s1,det_s2,purity1,purity2,logneg";

/// `t, det σ₁, det σ₂, purity₁, purity₂, log-negativity`.
pub fn subsystem_csv(traj: &Trajectory, samples: &[SubsystemSample]) -> Result<String> {
    let mut out = String::from(SUBSYSTEM_HEADER);
    out.push('\n');
    for (s, state) in samples.iter().zip(&traj.states) {
        let ln = log_negativity(state.cov())?;
        push_row(&mut out, [s.t, s.det1, s.det2, s.purity1, s.purity2, ln]);
    }
    Ok(out)
}

pub const TOMOGRAM_HEADER: &str = "X,mu,nu,pdf,norm_residual";

/// One row per `(X, μ, ν, pdf, normalization residual of that frame)`.
pub fn tomogram_csv(rows: &[(f64, f64, f64, f64, f64)]) -> String {
    let mut out = String::from(TOMOGRAM_HEADER);
    out.push('\n');
    for &(x, mu, nu, p, r) in rows {
        push_row(&mut out, [x, mu, nu, p, r]);
    }
    out
}

pub const THERMAL_HEADER: &str = "n,P_n,partial_sum_residual";

/// `n, P_n, residual of the partial sum through n`.
pub fn thermal_csv(weights: &[f64], residuals: &[f64]) -> String {
    let mut out = String::from(THERMAL_HEADER);
    out.push('\n');
    for (n, (p, r)) in weights.iter().zip(residuals).enumerate() {
        let _ = write!(out, "{n},");
        push_row(&mut out, [*p, *r]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_and_signed_zero() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-0.0), fmt_f64(0.0));
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
        for x in [0.1, 1.0 / 3.0, 1e-300, -7.123456789e12, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn headers() {
        let h = trajectory_header(1, false).join(",");
        assert_eq!(h, "t,mean_p1,mean_q1,cov_p1p1,cov_p1q1,cov_q1q1,det_cov,purity,energy");
        assert_eq!(trajectory_header(2, true).len(), 1 + 4 + 10 + 3 + 1);
    }

    #[test]
    fn thermal_rows() {
        let s = thermal_csv(&[0.5, 0.25], &[0.1, -0.0]);
        assert_eq!(
            s,
            "n,P_n,partial_sum_residual\n0,5.0000000000000000e-1,1.0000000000000001e-1\n1,2.5000000000000000e-1,0.0000000000000000e0\n"
        );
    }
}
