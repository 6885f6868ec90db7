use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::profile::label;
use crate::body::SymmetricBody;
use crate::ellipsoid::Ellipsoid;
use crate::error::{Error, Result};
use crate::landmarks;
use crate::linalg::{inverse, Matrix};
use crate::measure::{
    self, moment_report, planar_contact_set, restricted_measure_in_frame, sphere_area, Arc, MeasureSupport,
    RestrictedSphereMeasure, Side,
};
use crate::solver::{solve, SolveOptions, Status};

pub const DEFAULT_CLUSTER_WINDOW_DEG: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitSide {
    /// Radii decrease to `r_J = 1`; the measure lives outside the scaled body.
    John,
    /// Radii increase to `r_L = 1`; the measure lives inside the scaled body.
    Loewner,
}

impl LimitSide {
    fn measure_side(self) -> Side {
        match self {
            LimitSide::John => Side::Outside,
            LimitSide::Loewner => Side::Inside,
        }
    }
}

/// Record of the linear map that put a body into John or Loewner position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub side: LimitSide,
    /// The applied map `(r E)^{-1}`, row-major.
    pub map: Vec<Vec<f64>>,
    /// Landmark radius before normalization.
    pub landmark_radius: f64,
    pub landmark: Ellipsoid,
}

/// Maps the body so that its John (or Loewner) ellipsoid becomes the unit ball.
pub fn normalize(body: &SymmetricBody, side: LimitSide) -> Result<(SymmetricBody, Normalization)> {
    let e = match side {
        LimitSide::John => landmarks::john(body)?,
        LimitSide::Loewner => landmarks::loewner(body)?,
    };
    let map = inverse(&e.map())?;
    let image = body.linear_image(&map)?;
    Ok((
        image,
        Normalization {
            side,
            map: crate::linalg::to_rows(&map),
            landmark_radius: e.r(),
            landmark: e,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub direction: Vec<f64>,
    /// Polar angle in `[0, 2π)`, planar measures only.
    pub angle: Option<f64>,
    /// Share of the probability measure.
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitStep {
    pub r: f64,
    pub ellipsoid: Ellipsoid,
    pub status: Status,
    /// `None` when the step was skipped.
    pub mass: Option<f64>,
    #[serde(serialize_with = "ser_opt", deserialize_with = "de_opt", default)]
    pub normalized_moment: Option<Matrix>,
    pub isotropy_residual: Option<f64>,
    pub clusters: Vec<Cluster>,
    pub support_distance: Option<f64>,
    pub skipped: Option<String>,
}

fn ser_opt<S: serde::Serializer>(m: &Option<Matrix>, s: S) -> std::result::Result<S::Ok, S::Error> {
    m.as_ref().map(crate::linalg::to_rows).serialize(s)
}

fn de_opt<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<Matrix>, D::Error> {
    let rows: Option<Vec<Vec<f64>>> = Option::deserialize(d)?;
    rows.map(|r| crate::linalg::from_rows(&r).map_err(serde::de::Error::custom))
        .transpose()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitMeasureReport {
    pub side: LimitSide,
    pub radii: Vec<f64>,
    pub window_deg: f64,
    pub steps: Vec<LimitStep>,
    /// Clusters, residual and support distance at the last usable radius.
    pub final_clusters: Vec<Cluster>,
    pub final_isotropy_residual: f64,
    pub final_support_distance: Option<f64>,
    pub flags: Vec<String>,
}

impl LimitMeasureReport {
    /// One row per cluster per radius.
    pub fn clusters_csv(&self) -> String {
        let dim = self.steps.first().map(|s| s.ellipsoid.dim()).unwrap_or(0);
        let coords: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        let mut out = format!("r,cluster,angle_deg,{},mass\n", coords.join(","));
        for s in &self.steps {
            for (k, c) in s.clusters.iter().enumerate() {
                let dir: Vec<String> = c.direction.iter().map(|x| x.to_string()).collect();
                let angle = c.angle.map(|a| a.to_degrees().to_string()).unwrap_or_default();
                let _ = writeln!(out, "{},{},{},{},{}", s.r, k, angle, dir.join(","), c.mass);
            }
        }
        out
    }

    /// One row per radius.
    pub fn steps_csv(&self) -> String {
        let mut out = String::from("r,status,mass,isotropy_residual,clusters,support_distance,skipped\n");
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for s in &self.steps {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.r,
                label(&s.status),
                opt(s.mass),
                opt(s.isotropy_residual),
                s.clusters.len(),
                opt(s.support_distance),
                s.skipped.as_deref().unwrap_or("")
            );
        }
        out
    }
}

/// Solves along the radius sequence (warm-started), forms the side's
/// restricted measure in each solved frame, and extracts clusters and
/// convergence diagnostics. The body should already be in John or Loewner
/// position (see [`normalize`]).
pub fn limit_measure(
    body: &SymmetricBody,
    side: LimitSide,
    radii: &[f64],
    opts: &SolveOptions,
    window_deg: f64,
) -> Result<LimitMeasureReport> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    if !(window_deg > 0.0 && window_deg < 180.0) {
        return Err(Error::InvalidArgument(format!(
            "cluster window {window_deg} out of range"
        )));
    }
    let n = body.dim();
    let window = window_deg.to_radians();
    let mut flags = Vec::new();
    let landmark = match side {
        LimitSide::John => landmarks::john(body),
        LimitSide::Loewner => landmarks::loewner(body),
    };
    match landmark {
        Ok(e) => {
            let off = (e.r() - 1.0).abs().max((e.t() - Matrix::identity(n, n)).norm());
            if off > 1e-6 {
                flags.push(format!("body is not in {} position (offset {off:.3e})", label(&side)));
            }
        }
        Err(Error::Unsupported(_)) => flags.push("position of the body could not be verified".into()),
        Err(e) => return Err(e),
    }
    let wrong_way = radii.iter().any(|&r| match side {
        LimitSide::John => r <= 1.0,
        LimitSide::Loewner => r >= 1.0,
    });
    if wrong_way {
        flags.push("some radii lie on the wrong side of 1 for this limit".into());
    }

    let contact = if n == 2 {
        planar_contact_set(body, &Ellipsoid::ball(2, 1.0)).ok()
    } else {
        None
    };

    let mut steps = Vec::with_capacity(radii.len());
    let mut start = opts.start.clone();
    for &r in radii {
        let o = SolveOptions {
            start: start.clone(),
            ..opts.clone()
        };
        let sol = solve(body, r, &o)?;
        start = Some(sol.ellipsoid.t().clone());
        let method = opts.method;
        let skip = |why: String| LimitStep {
            r,
            ellipsoid: sol.ellipsoid.clone(),
            status: sol.status,
            mass: None,
            normalized_moment: None,
            isotropy_residual: None,
            clusters: Vec::new(),
            support_distance: None,
            skipped: Some(why),
        };
        let m = match restricted_measure_in_frame(body, &sol.ellipsoid, side.measure_side(), method) {
            Ok(m) => m,
            Err(Error::EmptyMeasure(why)) => {
                steps.push(skip(format!("empty measure: {why}")));
                continue;
            }
            Err(e) => return Err(e),
        };
        let sigma = sphere_area(n);
        if m.mass.value >= sigma * (1.0 - 1e-12) {
            steps.push(skip("measure covers the whole sphere".into()));
            continue;
        }
        let report = moment_report(&m)?;
        let clusters = clusters_of(&m, window);
        let support_distance = match (&m.support, &contact) {
            (MeasureSupport::Arcs { arcs }, Some(c)) => planar_support_distance(arcs, &c.points, &c.arcs),
            (MeasureSupport::Samples(s), _) => Some(
                s.included_points()
                    .map(|x| (body.gauge(x).unwrap_or(f64::INFINITY) - 1.0).abs())
                    .fold(0.0, f64::max),
            ),
            _ => None,
        };
        steps.push(LimitStep {
            r,
            ellipsoid: sol.ellipsoid.clone(),
            status: sol.status,
            mass: Some(report.mass),
            normalized_moment: Some(&report.moment / report.mass),
            isotropy_residual: Some(report.residual),
            clusters,
            support_distance,
            skipped: None,
        });
    }

    let used: Vec<&LimitStep> = steps.iter().filter(|s| s.skipped.is_none()).collect();
    let Some(last) = used.last() else {
        return Err(Error::EmptyMeasure(
            "every radius gives an empty or full measure; the body coincides with its limiting ellipsoid".into(),
        ));
    };
    for w in used.windows(2) {
        if let (Some(a), Some(b)) = (w[0].isotropy_residual, w[1].isotropy_residual) {
            if b > a + 1e-9 {
                flags.push(format!(
                    "isotropy residual increased from r = {} to r = {}",
                    w[0].r, w[1].r
                ));
            }
        }
        if let (Some(a), Some(b)) = (w[0].support_distance, w[1].support_distance) {
            if b > a + 1e-12 {
                flags.push(format!(
                    "support distance increased from r = {} to r = {}",
                    w[0].r, w[1].r
                ));
            }
        }
    }
    if steps.iter().any(|s| s.status.is_failure()) {
        flags.push("some solves did not converge".into());
    }
    Ok(LimitMeasureReport {
        side,
        radii: radii.to_vec(),
        window_deg,
        final_clusters: last.clusters.clone(),
        final_isotropy_residual: last.isotropy_residual.unwrap_or(f64::NAN),
        final_support_distance: last.support_distance,
        steps,
        flags,
    })
}

fn circular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn clusters_of(m: &RestrictedSphereMeasure, window: f64) -> Vec<Cluster> {
    match &m.support {
        MeasureSupport::Arcs { arcs } => arc_clusters(arcs, window),
        MeasureSupport::Samples(s) => sample_clusters(s, window),
    }
}

/// Groups arcs whose midpoints lie within `window` of their neighbours.
fn arc_clusters(arcs: &[Arc], window: f64) -> Vec<Cluster> {
    let total: f64 = arcs.iter().map(|a| a.len()).sum();
    let mut items: Vec<(f64, f64)> = arcs
        .iter()
        .map(|a| (a.midpoint().rem_euclid(TAU), a.len() / total))
        .collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut groups: Vec<Vec<(f64, f64)>> = Vec::new();
    for it in items {
        match groups.last_mut() {
            Some(g) if circular_gap(g.last().expect("non-empty").0, it.0) <= window => g.push(it),
            _ => groups.push(vec![it]),
        }
    }
    if groups.len() > 1 {
        let last = groups.len() - 1;
        if circular_gap(groups[last].last().expect("non-empty").0, groups[0][0].0) <= window {
            let tail = groups.pop().expect("non-empty");
            groups[0].splice(0..0, tail);
        }
    }
    let mut out: Vec<Cluster> = groups
        .into_iter()
        .map(|g| {
            let (mut x, mut y, mut mass) = (0.0, 0.0, 0.0);
            for (th, w) in g {
                x += w * th.cos();
                y += w * th.sin();
                mass += w;
            }
            let angle = y.atan2(x).rem_euclid(TAU);
            Cluster {
                direction: vec![angle.cos(), angle.sin()],
                angle: Some(angle),
                mass,
            }
        })
        .collect();
    out.sort_by(|a, b| a.angle.unwrap_or(0.0).total_cmp(&b.angle.unwrap_or(0.0)));
    out
}

/// Greedy leader clustering in sample order.
fn sample_clusters(s: &measure::SphereSample, window: f64) -> Vec<Cluster> {
    let cos_w = window.cos();
    let n = s.dim;
    let mut leaders: Vec<Vec<f64>> = Vec::new();
    let mut sums: Vec<(Vec<f64>, usize)> = Vec::new();
    let mut total = 0usize;
    for x in s.included_points() {
        total += 1;
        let hit = leaders
            .iter()
            .position(|l| l.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() >= cos_w);
        match hit {
            Some(k) => {
                sums[k].0.iter_mut().zip(x).for_each(|(a, b)| *a += b);
                sums[k].1 += 1;
            }
            None => {
                leaders.push(x.to_vec());
                sums.push((x.to_vec(), 1));
            }
        }
    }
    sums.into_iter()
        .map(|(v, count)| {
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-300);
            let direction: Vec<f64> = v.iter().map(|a| a / norm).collect();
            let angle = (n == 2).then(|| direction[1].atan2(direction[0]).rem_euclid(TAU));
            Cluster {
                direction,
                angle,
                mass: count as f64 / total as f64,
            }
        })
        .collect()
}

/// Largest angular distance from the arcs (sampled densely) to the contact set.
fn planar_support_distance(arcs: &[Arc], points: &[f64], contact_arcs: &[Arc]) -> Option<f64> {
    if points.is_empty() && contact_arcs.is_empty() {
        return None;
    }
    let dist = |th: f64| {
        let p = points
            .iter()
            .map(|&q| circular_gap(th, q))
            .fold(f64::INFINITY, f64::min);
        let a = contact_arcs
            .iter()
            .map(|a| {
                let rel = (th - a.start).rem_euclid(TAU);
                if rel <= a.len() {
                    0.0
                } else {
                    circular_gap(th, a.start).min(circular_gap(th, a.end))
                }
            })
            .fold(f64::INFINITY, f64::min);
        p.min(a)
    };
    let samples = 64;
    let mut worst: f64 = 0.0;
    for arc in arcs {
        for k in 0..=samples {
            let th = arc.start + arc.len() * k as f64 / samples as f64;
            worst = worst.max(dist(th));
        }
    }
    Some(worst.min(PI))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;
    use crate::body::presets::{disc, square};

    fn near(angle: f64, target: f64, tol_deg: f64) -> bool {
        circular_gap(angle, target) <= tol_deg.to_radians()
    }

    #[test]
    fn square_john_side_has_four_axis_atoms() {
        let rep = limit_measure(
            &square(),
            LimitSide::John,
            &[1.2, 1.1, 1.05, 1.02],
            &SolveOptions::default(),
            DEFAULT_CLUSTER_WINDOW_DEG,
        )
        .unwrap();
        assert_eq!(rep.final_clusters.len(), 4);
        for (k, c) in rep.final_clusters.iter().enumerate() {
            assert!(near(c.angle.unwrap(), k as f64 * FRAC_PI_2, 5.0));
            assert!((c.mass - 0.25).abs() < 0.02);
        }
        assert!(rep.final_isotropy_residual < 1e-3);
        let d: Vec<f64> = rep.steps.iter().map(|s| s.support_distance.unwrap()).collect();
        assert!(d.windows(2).all(|w| w[1] <= w[0]));
        assert!(rep.flags.is_empty(), "{:?}", rep.flags);
    }

    #[test]
    fn normalized_square_loewner_side() {
        let (k, norm) = normalize(&square(), LimitSide::Loewner).unwrap();
        assert!((norm.landmark_radius - 2f64.sqrt()).abs() < 1e-8);
        let rep = limit_measure(
            &k,
            LimitSide::Loewner,
            &[0.9, 0.95, 0.98],
            &SolveOptions::default(),
            DEFAULT_CLUSTER_WINDOW_DEG,
        )
        .unwrap();
        assert_eq!(rep.final_clusters.len(), 4);
        for (k, c) in rep.final_clusters.iter().enumerate() {
            assert!(near(c.angle.unwrap(), FRAC_PI_2 * (k as f64 + 0.5), 5.0));
            assert!((c.mass - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn disc_limit_is_degenerate() {
        let r = limit_measure(&disc(), LimitSide::John, &[1.2, 1.1], &SolveOptions::default(), 5.0);
        assert!(matches!(r, Err(Error::EmptyMeasure(_))));
    }

    #[test]
    fn wrap_around_arcs_form_one_cluster() {
        let arcs = [Arc::new(6.25, 6.27), Arc::new(0.01, 0.03), Arc::new(3.0, 3.2)];
        let c = arc_clusters(&arcs, 5f64.to_radians());
        assert_eq!(c.len(), 2);
        let total: f64 = c.iter().map(|x| x.mass).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
