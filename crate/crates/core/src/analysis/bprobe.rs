use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::body::SymmetricBody;
use crate::ellipsoid::Ellipsoid;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::measure::{intersection_volume, Method};

const EXACT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Every second difference and midpoint residual has the log-concave sign.
    Consistent,
    /// A violation beyond tolerance (exact method) or beyond four noise levels.
    Counterexample,
    /// A violation within Monte Carlo noise.
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MidpointResidual {
    pub t_lo: f64,
    pub t_hi: f64,
    /// `log φ((t_lo + t_hi)/2) - (log φ(t_lo) + log φ(t_hi)) / 2`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BProbeReport {
    pub lambda: Vec<f64>,
    pub t: Vec<f64>,
    /// `φ(t) = Vol(e^{tΛ}K ∩ B)`.
    pub phi: Vec<f64>,
    pub phi_std_error: Vec<f64>,
    pub log_phi: Vec<f64>,
    /// `log φ(t_{i-1}) - 2 log φ(t_i) + log φ(t_{i+1})` at interior grid points.
    pub second_differences: Vec<f64>,
    /// Negated second differences; log-concavity means all are non-negative.
    pub concavity_margins: Vec<f64>,
    pub min_concavity_margin: f64,
    pub midpoint_residuals: Vec<MidpointResidual>,
    pub min_midpoint_residual: f64,
    /// Grid points dropped because `φ` vanished.
    pub truncated: usize,
    pub verdict: Verdict,
    pub method: Method,
}

impl BProbeReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,phi,phi_std_error,log_phi,second_difference,concavity_margin\n");
        for i in 0..self.t.len() {
            let (sd, cm) = if i > 0 && i + 1 < self.t.len() {
                (
                    self.second_differences[i - 1].to_string(),
                    self.concavity_margins[i - 1].to_string(),
                )
            } else {
                (String::new(), String::new())
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.t[i], self.phi[i], self.phi_std_error[i], self.log_phi[i], sd, cm
            );
        }
        out
    }

    pub fn midpoints_csv(&self) -> String {
        let mut out = String::from("t_lo,t_hi,t_mid,residual\n");
        for m in &self.midpoint_residuals {
            let _ = writeln!(out, "{},{},{},{}", m.t_lo, m.t_hi, 0.5 * (m.t_lo + m.t_hi), m.residual);
        }
        out
    }
}

/// `lo, lo + step, …` up to `hi` inclusive (within a small slack).
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) {
        return Err(Error::InvalidArgument("grid needs step > 0 and hi >= lo".into()));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| lo + k as f64 * step).collect())
}

/// Evaluates `φ(t) = Vol(K ∩ e^{-tΛ}B)` on the grid and reports the
/// log-concavity diagnostics.
pub fn b_probe(body: &SymmetricBody, lambda: &[f64], t_grid: &[f64], method: Method) -> Result<BProbeReport> {
    let n = body.dim();
    if lambda.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: lambda.len(),
        });
    }
    let scale = lambda.iter().map(|x| x.abs()).fold(1.0, f64::max);
    if lambda.iter().sum::<f64>().abs() > 1e-12 * scale {
        return Err(Error::InvalidDirection("Λ must have zero trace".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("t grid must be strictly increasing".into()));
    }
    method.validate(n)?;
    let mut t = Vec::new();
    let mut phi = Vec::new();
    let mut se = Vec::new();
    for &ti in t_grid {
        let d = Matrix::from_diagonal(&Vector::from_iterator(n, lambda.iter().map(|l| (-ti * l).exp())));
        let est = intersection_volume(body, &Ellipsoid::new(d, 1.0)?, method)?;
        if !(est.value > 0.0) {
            break;
        }
        t.push(ti);
        phi.push(est.value);
        se.push(est.std_error);
    }
    let truncated = t_grid.len() - t.len();
    let log_phi: Vec<f64> = phi.iter().map(|p| p.ln()).collect();
    let second_differences: Vec<f64> = log_phi.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    let concavity_margins: Vec<f64> = second_differences.iter().map(|d| -d).collect();
    let mut midpoint_residuals = Vec::new();
    for i in 0..t.len() {
        for j in (i + 2..t.len()).step_by(2) {
            let mid = (i + j) / 2;
            let target = 0.5 * (t[i] + t[j]);
            if (t[mid] - target).abs() > 1e-12 * (1.0 + target.abs()) {
                continue;
            }
            midpoint_residuals.push(MidpointResidual {
                t_lo: t[i],
                t_hi: t[j],
                residual: log_phi[mid] - 0.5 * (log_phi[i] + log_phi[j]),
            });
        }
    }
    let min_margin = concavity_margins.iter().copied().fold(f64::INFINITY, f64::min);
    let min_mid = midpoint_residuals
        .iter()
        .map(|m| m.residual)
        .fold(f64::INFINITY, f64::min);
    let worst = min_margin.min(min_mid);
    let verdict = if worst >= -EXACT_TOL {
        Verdict::Consistent
    } else if method.is_exact() {
        Verdict::Counterexample
    } else {
        let noise = se.iter().zip(&phi).map(|(s, p)| s / p).fold(0.0, f64::max);
        if worst < -4.0 * 6f64.sqrt() * noise {
            Verdict::Counterexample
        } else {
            Verdict::Inconclusive
        }
    };
    Ok(BProbeReport {
        lambda: lambda.to_vec(),
        t,
        phi,
        phi_std_error: se,
        log_phi,
        second_differences,
        concavity_margins,
        min_concavity_margin: min_margin,
        midpoint_residuals,
        min_midpoint_residual: min_mid,
        truncated,
        verdict,
        method,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::body::presets::square;
    use crate::body::Exponent;

    #[test]
    fn square_is_log_concave_along_diagonal_flow() {
        let grid = uniform_grid(-0.6, 0.6, 0.05).unwrap();
        assert_eq!(grid.len(), 25);
        let rep = b_probe(&square(), &[1.0, -1.0], &grid, Method::Exact2d).unwrap();
        assert!(rep.second_differences.iter().all(|d| *d <= 1e-9));
        assert!(rep.min_midpoint_residual >= -1e-9);
        assert_eq!(rep.verdict, Verdict::Consistent);
    }

    #[test]
    fn zero_direction_is_constant() {
        let grid = uniform_grid(-0.2, 0.2, 0.1).unwrap();
        let rep = b_probe(&square(), &[0.0, 0.0], &grid, Method::Exact2d).unwrap();
        assert!(rep.second_differences.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn small_disc_stays_inside_ball() {
        // e^{tΛ}(0.5 B) ⊂ B while 0.5 e^{|t|} <= 1, so φ = area of the ellipse = π/4
        let k = SymmetricBody::lp_ball(2, Exponent::Finite(2.0), 0.5).unwrap();
        let grid = uniform_grid(-0.5, 0.5, 0.1).unwrap();
        let rep = b_probe(&k, &[1.0, -1.0], &grid, Method::Exact2d).unwrap();
        for p in &rep.phi {
            assert!((p - PI / 4.0).abs() < 1e-12);
        }
        assert_eq!(rep.verdict, Verdict::Consistent);
    }

    #[test]
    fn rejects_trace_and_grid_errors() {
        assert!(b_probe(&square(), &[1.0, 0.0], &[0.0, 1.0], Method::Exact2d).is_err());
        assert!(b_probe(&square(), &[1.0, -1.0], &[1.0, 0.0], Method::Exact2d).is_err());
        assert!(b_probe(&square(), &[1.0], &[0.0], Method::Exact2d).is_err());
    }
}
