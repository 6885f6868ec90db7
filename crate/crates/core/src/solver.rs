//! Ascent over volume-preserving positions of the ball.
//!
//! For a fixed radius `r` the objective is `T ↦ Vol(K ∩ T(rB))` over symmetric
//! positive definite `T` with `det T = 1`. Along a traceless symmetric `A`,
//! `d/dη Vol(K ∩ T e^{ηA}(rB))` at `η = 0` equals `⟨A, G⟩` with
//! `G = rⁿ (M - tr M / n · I)` and `M` the second-moment matrix of
//! `S^{n-1} ∩ (rT)^{-1}K`.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::body::SymmetricBody;
use crate::ellipsoid::{containment, unit_ball_volume, Ellipsoid, TracelessDirection};
use crate::error::{Error, Result};
use crate::landmarks;
use crate::linalg::{frobenius, rotation2, sym_exp, symmetrize, traceless_part, Matrix, Vector};
use crate::measure::{
    self, body_volume, intersection_volume, moment_report, restricted_measure_in_frame, sphere_area, Estimate, Method,
    MomentReport, Side,
};
use crate::rng::{self, streams};

/// How the sphere meets the scaled body in the ellipsoid frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cap {
    Partial,
    /// The whole sphere lies in the body; `M = (σ/n) I` and `G = 0`.
    Full,
    /// The sphere misses the body; the objective is locally constant.
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    /// Traceless symmetric gradient, already multiplied by `scale`.
    #[serde(
        rename = "G",
        serialize_with = "measure::ser_matrix",
        deserialize_with = "measure::de_matrix"
    )]
    pub g: Matrix,
    /// `rⁿ`.
    pub scale: f64,
    pub norm: f64,
    /// Frobenius standard error of `G` (zero for exact methods).
    pub std_error: f64,
    pub cap: Cap,
    pub moment: Option<MomentReport>,
    pub method: Method,
}

/// Gradient of `η ↦ Vol(K ∩ e.step(A, η))` in the Frobenius inner product.
pub fn gradient(body: &SymmetricBody, e: &Ellipsoid, method: Method) -> Result<GradientReport> {
    let n = e.dim();
    let scale = e.r().powi(n as i32);
    let measure = match restricted_measure_in_frame(body, e, Side::Inside, method) {
        Ok(m) => m,
        Err(Error::EmptyMeasure(_)) => {
            return Ok(GradientReport {
                g: Matrix::zeros(n, n),
                scale,
                norm: 0.0,
                std_error: 0.0,
                cap: Cap::Empty,
                moment: None,
                method,
            });
        }
        Err(err) => return Err(err),
    };
    let report = moment_report(&measure)?;
    let sigma = sphere_area(n);
    let full = (report.mass - sigma).abs() <= 1e-12 * sigma;
    let (g, std_error) = if full {
        (Matrix::zeros(n, n), 0.0)
    } else {
        let se = match &measure.support {
            measure::MeasureSupport::Samples(s) => s.traceless_moment_std_error() * scale,
            measure::MeasureSupport::Arcs { .. } => 0.0,
        };
        (traceless_part(&symmetrize(&report.moment)) * scale, se)
    };
    Ok(GradientReport {
        norm: frobenius(&g),
        g,
        scale,
        std_error,
        cap: if full { Cap::Full } else { Cap::Partial },
        moment: Some(report),
        method,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Interior,
    /// `r <= r_J`: some position of the ball lies inside the body.
    BelowJohn,
    /// `r >= r_L`: some position of the ball contains the body.
    AboveLoewner,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    MaxIter,
    /// Gradient below three standard errors, or no sampled ascent left.
    NoiseLimited,
    /// Line search could not find an ascent step above floating-point resolution.
    Stalled,
}

impl Status {
    pub fn is_failure(&self) -> bool {
        matches!(self, Status::MaxIter | Status::Stalled)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub grad_tol: f64,
    pub max_iter: usize,
    pub method: Method,
    /// Initial step along the normalized gradient.
    pub initial_step: f64,
    /// Armijo constant.
    pub armijo: f64,
    pub min_step: f64,
    #[serde(serialize_with = "ser_opt_matrix", deserialize_with = "de_opt_matrix", default)]
    pub start: Option<Matrix>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-7,
            max_iter: 2000,
            method: Method::Exact2d,
            initial_step: 0.1,
            armijo: 1e-4,
            min_step: 1e-12,
            start: None,
        }
    }
}

fn ser_opt_matrix<S: serde::Serializer>(m: &Option<Matrix>, s: S) -> std::result::Result<S::Ok, S::Error> {
    m.as_ref().map(crate::linalg::to_rows).serialize(s)
}

fn de_opt_matrix<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<Matrix>, D::Error> {
    let rows: Option<Vec<Vec<f64>>> = Option::deserialize(d)?;
    rows.map(|r| crate::linalg::from_rows(&r).map_err(serde::de::Error::custom))
        .transpose()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub m_value: f64,
    pub grad_norm: f64,
    /// Accepted step, zero on the final row.
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionSolution {
    pub ellipsoid: Ellipsoid,
    pub m_value: f64,
    pub m_std_error: f64,
    pub grad_norm: f64,
    pub grad_std_error: f64,
    /// `None` when the sphere misses the body.
    pub isotropy_residual: Option<f64>,
    pub regime: Regime,
    pub status: Status,
    pub cap: Cap,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
    pub moment: Option<MomentReport>,
    pub flags: Vec<String>,
}

impl PositionSolution {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,m_value,grad_norm,step\n");
        for row in &self.trace {
            let _ = writeln!(out, "{},{},{},{}", row.iteration, row.m_value, row.grad_norm, row.step);
        }
        out
    }

    /// Largest over smallest semi-axis, square-rooted: `s` in `R diag(s, 1/s) Rᵀ`.
    pub fn elongation(&self) -> f64 {
        elongation(self.ellipsoid.t())
    }
}

pub fn elongation(t: &Matrix) -> f64 {
    let ev = crate::linalg::sym_eigenvalues(t);
    (ev.max() / ev.min()).sqrt()
}

/// Maximizes `Vol(K ∩ T(rB))` over `det T = 1`.
pub fn solve(body: &SymmetricBody, r: f64, opts: &SolveOptions) -> Result<PositionSolution> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
    }
    opts.method.validate(body.dim())?;
    let n = body.dim();
    let start = match &opts.start {
        Some(t) => Ellipsoid::new(t.clone(), r)?,
        None => Ellipsoid::ball(n, r),
    };
    if let Some(sol) = extreme_regime(body, &start, opts)? {
        return Ok(sol);
    }

    let method = opts.method;
    let mut e = start;
    let mut m = intersection_volume(body, &e, method)?;
    let mut grad = gradient(body, &e, method)?;
    let mut trace = Vec::new();
    let mut step_hint = opts.initial_step;
    let mut status = Status::MaxIter;
    let mut iterations = 0;
    loop {
        let residual = residual_of(&grad);
        if grad.norm <= opts.grad_tol && residual.is_none_or(|x| x <= opts.grad_tol) {
            status = Status::Converged;
            break;
        }
        if !method.is_exact() && grad.norm < 3.0 * grad.std_error {
            status = Status::NoiseLimited;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        let dir = TracelessDirection::project(&grad.g).scaled(1.0 / grad.norm);
        let mut eta = step_hint.min(opts.initial_step);
        let mut accepted = None;
        while eta >= opts.min_step {
            let trial = e.step(&dir, eta)?;
            let mt = intersection_volume(body, &trial, method)?;
            if mt.value >= m.value + opts.armijo * eta * grad.norm && mt.value > m.value {
                accepted = Some((trial, mt));
                break;
            }
            eta *= 0.5;
        }
        let Some((next, mt)) = accepted else {
            status = if method.is_exact() {
                Status::Stalled
            } else {
                Status::NoiseLimited
            };
            break;
        };
        trace.push(TraceRow {
            iteration: iterations,
            m_value: m.value,
            grad_norm: grad.norm,
            step: eta,
        });
        iterations += 1;
        step_hint = 2.0 * eta;
        e = next;
        m = mt;
        grad = gradient(body, &e, method)?;
    }
    trace.push(TraceRow {
        iteration: iterations,
        m_value: m.value,
        grad_norm: grad.norm,
        step: 0.0,
    });

    let mut flags = Vec::new();
    match grad.cap {
        Cap::Full => flags.push("sphere lies inside the body: cap has full mass".to_string()),
        Cap::Empty => flags.push("sphere misses the body: cap has zero mass".to_string()),
        Cap::Partial => {}
    }
    if let Some(d) = grad.moment.as_ref().and_then(|m| m.degeneracy.as_ref()) {
        flags.push(d.message.clone());
    }
    match status {
        Status::MaxIter => flags.push(format!("not converged after {} iterations", opts.max_iter)),
        Status::Stalled => flags.push("line search stalled before reaching the gradient tolerance".into()),
        Status::NoiseLimited => flags.push("stopped at the Monte Carlo noise floor".into()),
        Status::Converged => {}
    }
    Ok(PositionSolution {
        isotropy_residual: residual_of(&grad),
        ellipsoid: e,
        m_value: m.value,
        m_std_error: m.std_error,
        grad_norm: grad.norm,
        grad_std_error: grad.std_error,
        regime: Regime::Interior,
        status,
        cap: grad.cap,
        iterations,
        trace,
        moment: grad.moment,
        flags,
    })
}

fn residual_of(grad: &GradientReport) -> Option<f64> {
    grad.moment.as_ref().map(|m| m.residual)
}

/// Radii strictly outside `[r_J, r_L]` have closed-form answers.
fn extreme_regime(body: &SymmetricBody, start: &Ellipsoid, opts: &SolveOptions) -> Result<Option<PositionSolution>> {
    let n = body.dim();
    let r = start.r();
    let rel = 1e-9;
    let (below, above) = match (landmarks::john(body), landmarks::loewner(body)) {
        (Ok(j), Ok(l)) => (
            (r < j.r() * (1.0 - rel)).then(|| j.with_radius(r)),
            (r > l.r() * (1.0 + rel)).then(|| l.with_radius(r)),
        ),
        (Err(Error::Unsupported(_)), _) | (_, Err(Error::Unsupported(_))) => {
            let c = containment(start, body)?;
            (
                (c.ellipsoid_in_body && c.exact).then(|| start.clone()),
                (c.body_in_ellipsoid && c.exact).then(|| start.clone()),
            )
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let (regime, e, m) = if let Some(e) = below {
        let m = Estimate::exact(r.powi(n as i32) * unit_ball_volume(n));
        (Regime::BelowJohn, e, m)
    } else if let Some(e) = above {
        let m = body_volume(body, opts.method)?;
        (Regime::AboveLoewner, e, m)
    } else {
        return Ok(None);
    };
    let grad = gradient(body, &e, opts.method)?;
    let flag = match regime {
        Regime::BelowJohn => "r below r_J: every position containing the ball in the body is maximal",
        _ => "r above r_L: every position whose ball contains the body is maximal",
    };
    Ok(Some(PositionSolution {
        isotropy_residual: residual_of(&grad),
        ellipsoid: e,
        m_value: m.value,
        m_std_error: m.std_error,
        grad_norm: 0.0,
        grad_std_error: 0.0,
        regime,
        status: Status::Converged,
        cap: grad.cap,
        iterations: 0,
        trace: vec![TraceRow {
            iteration: 0,
            m_value: m.value,
            grad_norm: 0.0,
            step: 0.0,
        }],
        moment: grad.moment,
        flags: vec![flag.into()],
    }))
}

/// Seeded random start `exp(A)` with `A` traceless symmetric of entry scale `spread`.
pub fn random_start(n: usize, seed: u64, index: u64, spread: f64) -> Matrix {
    let mut r = rng::batch_rng(seed, streams::START, index);
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let x: f64 = r.sample(StandardNormal);
            a[(i, j)] = spread * x;
            a[(j, i)] = spread * x;
        }
    }
    sym_exp(&traceless_part(&a))
}

/// Runs `solve` from the identity and `extra` seeded random starts, sorted by
/// decreasing `m_value` (ties keep start order).
pub fn solve_multistart(
    body: &SymmetricBody,
    r: f64,
    opts: &SolveOptions,
    extra: usize,
    seed: u64,
) -> Result<Vec<PositionSolution>> {
    let n = body.dim();
    let mut starts = vec![opts.start.clone()];
    starts.extend((0..extra as u64).map(|k| Some(random_start(n, seed, k, 0.3))));
    let mut out = Vec::with_capacity(starts.len());
    for start in starts {
        let o = SolveOptions { start, ..opts.clone() };
        out.push(solve(body, r, &o)?);
    }
    out.sort_by(|a, b| b.m_value.total_cmp(&a.m_value));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub s_max: f64,
    pub s_steps: usize,
    /// Rotation steps over `[0, π)`; unused in 3D.
    pub phi_steps: usize,
    pub method: Method,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            s_max: 2.0,
            s_steps: 60,
            phi_steps: 60,
            method: Method::Exact2d,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridBest {
    #[serde(
        rename = "T",
        serialize_with = "measure::ser_matrix",
        deserialize_with = "measure::de_matrix"
    )]
    pub t: Matrix,
    /// Stretch parameters: `[s]` in 2D, `[s1, s2]` in 3D.
    pub s: Vec<f64>,
    pub phi: f64,
    pub m_value: f64,
    /// Ratio between neighbouring `s` values.
    pub s_ratio: f64,
    pub phi_step: f64,
}

fn log_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..steps)
        .map(|k| (a + (b - a) * k as f64 / (steps - 1) as f64).exp())
        .collect()
}

/// Brute-force search over det-one positions. In 2D the grid is
/// `R_φ diag(s, 1/s) R_φᵀ` with `s ∈ [1, s_max]` log-spaced and `φ ∈ [0, π)`;
/// in 3D it is `diag(s1, s2, 1/(s1 s2))` with `s_i ∈ [1/s_max, s_max]`.
pub fn grid_oracle(body: &SymmetricBody, r: f64, spec: &GridSpec) -> Result<GridBest> {
    spec.method.validate(body.dim())?;
    if !(spec.s_max >= 1.0) || spec.s_steps == 0 {
        return Err(Error::InvalidArgument(
            "grid needs s_max >= 1 and at least one step".into(),
        ));
    }
    let mut best: Option<GridBest> = None;
    let mut consider = |t: Matrix, s: Vec<f64>, phi: f64, ratio: f64, phi_step: f64| -> Result<()> {
        let m = intersection_volume(body, &Ellipsoid::new(t.clone(), r)?, spec.method)?.value;
        if best.as_ref().is_none_or(|b| m > b.m_value) {
            best = Some(GridBest {
                t,
                s,
                phi,
                m_value: m,
                s_ratio: ratio,
                phi_step,
            });
        }
        Ok(())
    };
    match body.dim() {
        2 => {
            let ss = log_grid(1.0, spec.s_max, spec.s_steps);
            let ratio = ss.get(1).copied().unwrap_or(1.0);
            let phi_steps = spec.phi_steps.max(1);
            let dphi = std::f64::consts::PI / phi_steps as f64;
            for &s in &ss {
                for k in 0..phi_steps {
                    let phi = k as f64 * dphi;
                    let rot = rotation2(phi);
                    let d = Matrix::from_diagonal(&Vector::from_column_slice(&[s, 1.0 / s]));
                    consider(symmetrize(&(&rot * d * rot.transpose())), vec![s], phi, ratio, dphi)?;
                }
            }
        }
        3 => {
            let ss = log_grid(1.0 / spec.s_max, spec.s_max, spec.s_steps);
            let ratio = ss.get(1).map(|x| x / ss[0]).unwrap_or(1.0);
            for &s1 in &ss {
                for &s2 in &ss {
                    let d = Matrix::from_diagonal(&Vector::from_column_slice(&[s1, s2, 1.0 / (s1 * s2)]));
                    consider(d, vec![s1, s2], 0.0, ratio, 0.0)?;
                }
            }
        }
        n => {
            return Err(Error::Unsupported(format!("grid oracle in dimension {n}")));
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("empty grid".into()))
}
