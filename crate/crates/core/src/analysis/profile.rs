use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::body::SymmetricBody;
use crate::ellipsoid::Ellipsoid;
use crate::error::{Error, Result};
use crate::landmarks;
use crate::measure::Method;
use crate::solver::{solve, Regime, SolveOptions, Status};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub r: f64,
    pub m_value: f64,
    pub m_std_error: f64,
    pub grad_norm: f64,
    pub isotropy_residual: Option<f64>,
    pub regime: Regime,
    pub status: Status,
    pub iterations: usize,
    pub ellipsoid: Ellipsoid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandmarkRadii {
    pub r_j: f64,
    pub r_l: f64,
    pub r_m: f64,
    pub kappa_n: f64,
    pub vol_k: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    /// `m(t) <= m(s)` for `t <= s`.
    Monotone,
    /// Strict increase between radii inside `(r_J, r_L)`.
    StrictIncrease,
    /// `m(r) = rⁿ κ_n` for `r <= r_J`.
    BallBelowJohn,
    /// `m(r) = Vol K` for `r >= r_L`.
    BodyAboveLoewner,
    /// `m(s) <= (s/t)ⁿ m(t)` for `t <= s`.
    Scaling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawViolation {
    pub law: Law,
    pub r_a: f64,
    pub r_b: f64,
    /// Amount by which the inequality fails, beyond tolerance.
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusProfile {
    pub dim: usize,
    pub samples: Vec<ProfileSample>,
    pub landmarks: Option<LandmarkRadii>,
    pub method: Method,
    pub violations: Vec<LawViolation>,
}

impl RadiusProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,m_value,m_std_error,grad_norm,isotropy_residual,regime,status,iterations\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.r,
                s.m_value,
                s.m_std_error,
                s.grad_norm,
                s.isotropy_residual.map(|x| x.to_string()).unwrap_or_default(),
                label(&s.regime),
                label(&s.status),
                s.iterations
            );
        }
        out
    }

    pub fn any_failed(&self) -> bool {
        self.samples.iter().any(|s| s.status.is_failure())
    }
}

pub(crate) fn label<T: Serialize>(x: &T) -> String {
    serde_json::to_value(x)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

/// Solves at each radius in increasing order, warm-starting from the previous
/// position, then checks the monotonicity, endpoint and scaling laws of `m`.
pub fn sweep(body: &SymmetricBody, radii: &[f64], opts: &SolveOptions) -> Result<RadiusProfile> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("empty radius list".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "radii must be positive and strictly increasing".into(),
        ));
    }
    let n = body.dim();
    let lm = match landmarks::landmarks(body, opts.method.reseeded(7)) {
        Ok(l) => Some(LandmarkRadii {
            r_j: l.r_j,
            r_l: l.r_l,
            r_m: l.r_m,
            kappa_n: l.kappa_n,
            vol_k: l.vol_k,
        }),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let mut samples: Vec<ProfileSample> = Vec::with_capacity(radii.len());
    let mut start = opts.start.clone();
    for &r in radii {
        let o = SolveOptions {
            start: start.clone(),
            ..opts.clone()
        };
        let sol = solve(body, r, &o)?;
        start = Some(sol.ellipsoid.t().clone());
        samples.push(ProfileSample {
            r,
            m_value: sol.m_value,
            m_std_error: sol.m_std_error,
            grad_norm: sol.grad_norm,
            isotropy_residual: sol.isotropy_residual,
            regime: sol.regime,
            status: sol.status,
            iterations: sol.iterations,
            ellipsoid: sol.ellipsoid,
        });
    }
    let violations = check_laws(n, &samples, lm.as_ref(), opts.method.is_exact());
    Ok(RadiusProfile {
        dim: n,
        samples,
        landmarks: lm,
        method: opts.method,
        violations,
    })
}

const EXACT_TOL: f64 = 1e-9;

fn check_laws(n: usize, s: &[ProfileSample], lm: Option<&LandmarkRadii>, exact: bool) -> Vec<LawViolation> {
    let tol = |a: &ProfileSample, b: &ProfileSample| {
        if exact {
            EXACT_TOL
        } else {
            4.0 * a.m_std_error.hypot(b.m_std_error)
        }
    };
    let mut out = Vec::new();
    let mut push = |law, a: &ProfileSample, b: &ProfileSample, excess: f64| {
        out.push(LawViolation {
            law,
            r_a: a.r,
            r_b: b.r,
            excess,
        })
    };
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            let (a, b) = (&s[i], &s[j]);
            let t = tol(a, b);
            if a.m_value - b.m_value > t {
                push(Law::Monotone, a, b, a.m_value - b.m_value - t);
            }
            let bound = (b.r / a.r).powi(n as i32) * a.m_value;
            if b.m_value - bound > t {
                push(Law::Scaling, a, b, b.m_value - bound - t);
            }
        }
    }
    if let Some(lm) = lm {
        for a in s {
            if a.r <= lm.r_j {
                let ball = a.r.powi(n as i32) * lm.kappa_n;
                let t = tol(a, a);
                if (a.m_value - ball).abs() > t {
                    push(Law::BallBelowJohn, a, a, (a.m_value - ball).abs() - t);
                }
            }
            if a.r >= lm.r_l {
                let t = tol(a, a);
                if (a.m_value - lm.vol_k).abs() > t {
                    push(Law::BodyAboveLoewner, a, a, (a.m_value - lm.vol_k).abs() - t);
                }
            }
        }
        if exact {
            for w in s.windows(2) {
                let inside = |r: f64| r > lm.r_j && r < lm.r_l;
                if inside(w[0].r) && inside(w[1].r) && w[1].m_value <= w[0].m_value {
                    push(Law::StrictIncrease, &w[0], &w[1], w[0].m_value - w[1].m_value);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::body::presets::square;

    #[test]
    fn square_profile_obeys_laws() {
        let radii = [0.5, 0.8, 1.0, 1.1, 1.2, 1.3, 1.5, 2.0];
        let p = sweep(&square(), &radii, &SolveOptions::default()).unwrap();
        assert!(p.violations.is_empty(), "{:?}", p.violations);
        for s in &p.samples[..3] {
            assert!((s.m_value - PI * s.r * s.r).abs() < 1e-9);
        }
        for s in &p.samples[6..] {
            assert!((s.m_value - 4.0).abs() < 1e-9);
        }
        let csv = p.to_csv();
        assert!(csv.starts_with("r,m_value"));
        assert_eq!(csv.lines().count(), radii.len() + 1);
    }

    #[test]
    fn unsorted_radii_rejected() {
        assert!(sweep(&square(), &[1.2, 1.1], &SolveOptions::default()).is_err());
        assert!(sweep(&square(), &[], &SolveOptions::default()).is_err());
    }

    #[test]
    fn law_checker_catches_fabricated_violation() {
        let e = Ellipsoid::ball(2, 1.0);
        let mk = |r: f64, m: f64| ProfileSample {
            r,
            m_value: m,
            m_std_error: 0.0,
            grad_norm: 0.0,
            isotropy_residual: None,
            regime: Regime::Interior,
            status: Status::Converged,
            iterations: 0,
            ellipsoid: e.clone(),
        };
        let v = check_laws(2, &[mk(1.0, 3.0), mk(1.1, 2.9), mk(1.2, 10.0)], None, true);
        assert!(v.iter().any(|x| x.law == Law::Monotone));
        assert!(v.iter().any(|x| x.law == Law::Scaling));
    }
}
