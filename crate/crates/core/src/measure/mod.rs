//! Intersection volumes and restricted spherical measures.
//!
//! `μ_A` is the surface measure of the unit sphere restricted to a region `A`.
//! The regions used here are `S^{n-1} ∩ r^{-1}K` (inside), its complement
//! (outside), and the part of the sphere lying on `∂(r^{-1}K)` (contact). All
//! regions are taken in the frame of an ellipsoid `T(rB)`, so `K` is replaced by
//! `T^{-1}K`. Planar polygons, discs and ball-point hulls are handled exactly;
//! everything else by seeded Monte Carlo.

mod montecarlo;
pub(crate) mod planar;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::body::SymmetricBody;
use crate::ellipsoid::{unit_ball_volume, Ellipsoid};
use crate::error::{Error, Result};
use crate::linalg::{frobenius, to_rows, Matrix};

pub use montecarlo::SphereSample;
pub(crate) use planar::PlanarBoundary;

/// Minimum number of Monte Carlo samples accepted anywhere.
pub const MIN_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Method {
    Exact2d,
    MonteCarlo { samples: usize, seed: u64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Exact2d => "exact-2d",
            Method::MonteCarlo { .. } => "monte-carlo",
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Method::Exact2d)
    }

    /// Same method with the seed replaced by a value derived from `salt`.
    pub fn reseeded(&self, salt: u64) -> Method {
        match *self {
            Method::MonteCarlo { samples, seed } => Method::MonteCarlo {
                samples,
                seed: seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15),
            },
            m => m,
        }
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            Method::Exact2d if dim != 2 => Err(Error::MethodMismatch {
                method: "exact-2d".into(),
                reason: format!("body has dimension {dim}"),
            }),
            Method::MonteCarlo { samples, .. } if samples < MIN_SAMPLES => Err(Error::InvalidArgument(format!(
                "Monte Carlo needs at least {MIN_SAMPLES} samples, got {samples}"
            ))),
            _ => Ok(()),
        }
    }
}

/// A value with its standard error (zero for exact computations).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0 }
    }
}

/// A closed angular interval `[start, end]` on the unit circle, with
/// `start ∈ [0, 2π)` after normalization and `end - start <= 2π`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: f64,
    pub end: f64,
}

impl Arc {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    /// `∫_arc u uᵀ dθ` as `(m11, m12, m22)`.
    pub fn moments(&self) -> (f64, f64, f64) {
        let (a, b) = (self.start, self.end);
        let half = 0.5 * (b - a);
        let s = 0.25 * ((2.0 * b).sin() - (2.0 * a).sin());
        let m12 = 0.25 * ((2.0 * a).cos() - (2.0 * b).cos());
        (half + s, m12, half - s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Inside,
    Outside,
    /// The part of the sphere lying on the boundary of the scaled body.
    Contact,
}

/// Raised when the sphere runs along `∂K` on a set of positive measure, where
/// the isotropy certificate no longer applies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangencyDegeneracy {
    pub contact_mass: f64,
    pub contact_arcs: Vec<Arc>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureSupport {
    Arcs { arcs: Vec<Arc> },
    Samples(SphereSample),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictedSphereMeasure {
    pub dim: usize,
    pub radius: f64,
    pub side: Side,
    pub support: MeasureSupport,
    /// `σ(A ∩ S^{n-1})`, unnormalized surface measure.
    pub mass: Estimate,
    pub degeneracy: Option<TangencyDegeneracy>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    /// `∫_A x xᵀ dS`.
    #[serde(serialize_with = "ser_matrix", deserialize_with = "de_matrix")]
    pub moment: Matrix,
    pub mass: f64,
    pub mass_std_error: f64,
    /// `‖M / mass - I / n‖_F`.
    pub residual: f64,
    pub method: Method,
    pub degeneracy: Option<TangencyDegeneracy>,
}

pub(crate) fn ser_matrix<S: serde::Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    to_rows(m).serialize(s)
}

pub(crate) fn de_matrix<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Matrix, D::Error> {
    let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
    crate::linalg::from_rows(&rows).map_err(serde::de::Error::custom)
}

/// Surface area of the unit sphere in `R^n`, `n κ_n`.
pub fn sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// `Vol_n(K ∩ T(rB))`.
pub fn intersection_volume(body: &SymmetricBody, e: &Ellipsoid, method: Method) -> Result<Estimate> {
    check_dims(body, e)?;
    method.validate(body.dim())?;
    match method {
        Method::Exact2d => {
            let pb = PlanarBoundary::new(body, e.t())?;
            Ok(Estimate::exact(pb.split(e.r()).area * e.t().determinant()))
        }
        Method::MonteCarlo { samples, seed } => Ok(montecarlo::intersection_volume(body, e, samples, seed)),
    }
}

/// `Vol_n(K)`: closed form when available, otherwise Monte Carlo (which then
/// requires a Monte Carlo method).
pub fn body_volume(body: &SymmetricBody, method: Method) -> Result<Estimate> {
    if let Some(v) = body.exact_volume() {
        return Ok(Estimate::exact(v));
    }
    match method {
        Method::MonteCarlo { samples, seed } => {
            method.validate(body.dim())?;
            let radius = body.circumradius_bound();
            let ball = Ellipsoid::ball(body.dim(), radius);
            Ok(montecarlo::intersection_volume(body, &ball, samples, seed))
        }
        Method::Exact2d => {
            method.validate(body.dim())?;
            let id = Matrix::identity(2, 2);
            Ok(Estimate::exact(planar::PlanarBoundary::new(body, &id)?.area()))
        }
    }
}

fn check_dims(body: &SymmetricBody, e: &Ellipsoid) -> Result<()> {
    if body.dim() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            got: e.dim(),
        });
    }
    Ok(())
}

/// `μ` on `S^{n-1} ∩ r^{-1}K` (or its complement, or its contact set).
pub fn restricted_measure(body: &SymmetricBody, r: f64, side: Side, method: Method) -> Result<RestrictedSphereMeasure> {
    restricted_measure_in_frame(body, &Ellipsoid::ball(body.dim(), r), side, method)
}

/// Same as [`restricted_measure`] for the body seen from the ellipsoid frame:
/// the region is `{u ∈ S^{n-1} : r T u ∈ K}` or its complement.
pub fn restricted_measure_in_frame(
    body: &SymmetricBody,
    e: &Ellipsoid,
    side: Side,
    method: Method,
) -> Result<RestrictedSphereMeasure> {
    check_dims(body, e)?;
    method.validate(body.dim())?;
    let measure = match method {
        Method::Exact2d => {
            let split = PlanarBoundary::new(body, e.t())?.split(e.r());
            let degeneracy = degeneracy_from_arcs(&split.contact_arcs);
            let arcs = match side {
                Side::Inside => split.inside,
                Side::Outside => split.outside,
                Side::Contact => split.contact_arcs,
            };
            let mass: f64 = arcs.iter().map(|a| a.len()).sum();
            RestrictedSphereMeasure {
                dim: 2,
                radius: e.r(),
                side,
                support: MeasureSupport::Arcs { arcs },
                mass: Estimate::exact(mass),
                degeneracy,
            }
        }
        Method::MonteCarlo { samples, seed } => {
            if side == Side::Contact {
                return Err(Error::MethodMismatch {
                    method: "monte-carlo".into(),
                    reason: "contact sets have zero sampling probability".into(),
                });
            }
            montecarlo::restricted_measure(body, e, side, samples, seed)
        }
    };
    if !(measure.mass.value > 0.0) {
        let what = match side {
            Side::Inside => "the sphere misses the body",
            Side::Outside => "the sphere lies inside the body",
            Side::Contact => "the sphere does not run along the boundary",
        };
        return Err(Error::EmptyMeasure(what.into()));
    }
    Ok(measure)
}

fn degeneracy_from_arcs(arcs: &[Arc]) -> Option<TangencyDegeneracy> {
    if arcs.is_empty() {
        return None;
    }
    let mass: f64 = arcs.iter().map(|a| a.len()).sum();
    Some(TangencyDegeneracy {
        contact_mass: mass,
        contact_arcs: arcs.to_vec(),
        message: format!(
            "tangency degeneracy: the circle runs along the boundary on {} arc(s) of total length {:.6}; \
             isotropy at a maximal position is not guaranteed",
            arcs.len(),
            mass
        ),
    })
}

/// Second-moment matrix, mass and isotropy residual of a restricted measure.
pub fn moment_report(m: &RestrictedSphereMeasure) -> Result<MomentReport> {
    let (moment, method) = match &m.support {
        MeasureSupport::Arcs { arcs } => {
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for arc in arcs {
                let (m11, m12, m22) = arc.moments();
                a += m11;
                b += m12;
                c += m22;
            }
            (Matrix::from_row_slice(2, 2, &[a, b, b, c]), Method::Exact2d)
        }
        MeasureSupport::Samples(s) => (
            s.moment(),
            Method::MonteCarlo {
                samples: s.samples,
                seed: s.seed,
            },
        ),
    };
    let mass = m.mass.value;
    if !(mass > 0.0) {
        return Err(Error::EmptyMeasure("zero mass".into()));
    }
    Ok(MomentReport {
        residual: isotropy_residual(&moment, mass),
        moment,
        mass,
        mass_std_error: m.mass.std_error,
        method,
        degeneracy: m.degeneracy.clone(),
    })
}

pub fn isotropy_residual(moment: &Matrix, mass: f64) -> f64 {
    let n = moment.nrows();
    let mut d = moment / mass;
    for i in 0..n {
        d[(i, i)] -= 1.0 / n as f64;
    }
    frobenius(&d)
}

impl RestrictedSphereMeasure {
    /// Columnar CSV: arcs in 2D (`start,end,length,midpoint`), the sample table otherwise.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.support {
            MeasureSupport::Arcs { arcs } => {
                out.push_str("start,end,length,midpoint\n");
                for a in arcs {
                    let _ = writeln!(out, "{},{},{},{}", a.start, a.end, a.len(), a.midpoint());
                }
            }
            MeasureSupport::Samples(s) => {
                let header: Vec<String> = (0..s.dim).map(|i| format!("x{i}")).collect();
                let _ = writeln!(out, "{},included", header.join(","));
                for (k, inc) in s.included.iter().enumerate() {
                    let row: Vec<String> = s.point(k).iter().map(|v| v.to_string()).collect();
                    let _ = writeln!(out, "{},{}", row.join(","), u8::from(*inc));
                }
            }
        }
        out
    }

    /// Arcs in the support (2D only).
    pub fn arcs(&self) -> Option<&[Arc]> {
        match &self.support {
            MeasureSupport::Arcs { arcs } => Some(arcs),
            MeasureSupport::Samples(_) => None,
        }
    }
}

/// Contact points and arcs of the circle `rS^1` with `∂(T^{-1}K)` (exact, planar).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactSet {
    pub points: Vec<f64>,
    pub arcs: Vec<Arc>,
}

pub fn planar_contact_set(body: &SymmetricBody, e: &Ellipsoid) -> Result<ContactSet> {
    check_dims(body, e)?;
    let split = PlanarBoundary::new(body, e.t())?.split(e.r());
    Ok(ContactSet {
        points: split.contact_points,
        arcs: split.contact_arcs,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{PI, TAU};

    use super::*;
    use crate::body::presets::{cube3, remark14, square};

    #[test]
    fn square_intersection_volumes() {
        let sq = square();
        let v = |r: f64| {
            intersection_volume(&sq, &Ellipsoid::ball(2, r), Method::Exact2d)
                .unwrap()
                .value
        };
        assert!((v(1.0) - PI).abs() < 1e-13);
        assert!((v(2.0) - 4.0).abs() < 1e-13);
        // oracle: r²(π − 4 arccos(1/r)) + 4√(r² − 1)
        let r: f64 = 1.2;
        let oracle = r * r * (PI - 4.0 * (1.0 / r).acos()) + 4.0 * (r * r - 1.0).sqrt();
        assert!((v(1.2) - oracle).abs() < 1e-13);
        assert!((oracle - 3.803_644_523_140_433).abs() < 1e-12);
    }

    #[test]
    fn method_and_sample_errors() {
        let sq = square();
        let e = Ellipsoid::ball(2, 1.0);
        assert!(matches!(
            intersection_volume(&cube3(), &Ellipsoid::ball(3, 1.0), Method::Exact2d),
            Err(Error::MethodMismatch { .. })
        ));
        assert!(intersection_volume(&sq, &e, Method::MonteCarlo { samples: 50, seed: 1 }).is_err());
        assert!(intersection_volume(
            &sq,
            &Ellipsoid::ball(3, 1.0),
            Method::MonteCarlo { samples: 500, seed: 1 }
        )
        .is_err());
    }

    #[test]
    fn square_restricted_measures() {
        let sq = square();
        let full = restricted_measure(&sq, 1.0, Side::Inside, Method::Exact2d).unwrap();
        assert!((full.mass.value - TAU).abs() < 1e-14);
        let rep = moment_report(&full).unwrap();
        assert!((rep.moment[(0, 0)] - PI).abs() < 1e-13 && rep.residual < 1e-14);

        let inside = restricted_measure(&sq, 1.2, Side::Inside, Method::Exact2d).unwrap();
        let beta = (1.0f64 / 1.2).acos();
        assert!((inside.mass.value - 8.0 * (PI / 4.0 - beta)).abs() < 1e-13);
        let rep = moment_report(&inside).unwrap();
        assert!((rep.moment[(0, 0)] - rep.moment[(1, 1)]).abs() < 1e-14);
        assert!(rep.moment[(0, 1)].abs() < 1e-14 && rep.residual < 1e-14);
        assert!((rep.moment.trace() - rep.mass).abs() < 1e-12);

        let outside = restricted_measure(&sq, 1.2, Side::Outside, Method::Exact2d).unwrap();
        assert_eq!(outside.arcs().unwrap().len(), 4);
        assert!((outside.mass.value + inside.mass.value - TAU).abs() < 1e-13);

        assert!(matches!(
            restricted_measure(&sq, 0.9, Side::Outside, Method::Exact2d),
            Err(Error::EmptyMeasure(_))
        ));
    }

    #[test]
    fn arc_moment_of_vertical_caps() {
        // arcs [45°, 135°] ∪ [225°, 315°]: closed form diag(π/2 − 1, π/2 + 1)
        let arcs = vec![
            Arc::new(PI / 4.0, 3.0 * PI / 4.0),
            Arc::new(5.0 * PI / 4.0, 7.0 * PI / 4.0),
        ];
        let m = RestrictedSphereMeasure {
            dim: 2,
            radius: 1.0,
            side: Side::Contact,
            mass: Estimate::exact(PI),
            support: MeasureSupport::Arcs { arcs },
            degeneracy: None,
        };
        let rep = moment_report(&m).unwrap();
        assert!((rep.moment[(0, 0)] - (PI / 2.0 - 1.0)).abs() < 1e-14);
        assert!((rep.moment[(1, 1)] - (PI / 2.0 + 1.0)).abs() < 1e-14);
        assert!(rep.moment[(0, 1)].abs() < 1e-14);
        assert!(rep.residual > 0.1);
    }

    #[test]
    fn remark_hull_reports_degeneracy() {
        let m = restricted_measure(&remark14(), 1.0, Side::Inside, Method::Exact2d).unwrap();
        let d = m.degeneracy.as_ref().expect("tangency degeneracy");
        assert!((d.contact_mass - PI).abs() < 1e-12);
        let contact = restricted_measure(&remark14(), 1.0, Side::Contact, Method::Exact2d).unwrap();
        let rep = moment_report(&contact).unwrap();
        assert!((rep.moment[(1, 1)] - (PI / 2.0 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let m = restricted_measure(&square(), 1.2, Side::Outside, Method::Exact2d).unwrap();
        let csv = m.to_csv();
        assert!(csv.starts_with("start,end,length,midpoint\n"));
        assert_eq!(csv.lines().count(), 5);
        let mc = restricted_measure(
            &cube3(),
            1.2,
            Side::Inside,
            Method::MonteCarlo { samples: 200, seed: 3 },
        )
        .unwrap();
        let csv = mc.to_csv();
        assert!(csv.starts_with("x0,x1,x2,included\n"));
        assert_eq!(csv.lines().count(), 201);
    }

    #[test]
    fn volumes() {
        assert_eq!(body_volume(&square(), Method::Exact2d).unwrap().value, 4.0);
        let hull3 =
            SymmetricBody::hull_ball_points(1.0, crate::linalg::Vector::from_column_slice(&[2.0, 0.0, 0.0])).unwrap();
        assert!(body_volume(&hull3, Method::Exact2d).is_err());
        let est = body_volume(
            &hull3,
            Method::MonteCarlo {
                samples: 100_000,
                seed: 9,
            },
        )
        .unwrap();
        // ball plus two cones of height 2 over the tangency cap: oracle by direct formula
        let alpha = (0.5f64).acos();
        let h_cap = 1.0 - alpha.cos();
        let cap = PI * h_cap * h_cap * (3.0 - h_cap) / 3.0;
        let cone_base = alpha.sin();
        let cone = PI * cone_base * cone_base * (2.0 - alpha.cos()) / 3.0;
        let oracle = 4.0 * PI / 3.0 + 2.0 * (cone - cap);
        assert!(
            (est.value - oracle).abs() < 4.0 * est.std_error,
            "{} vs {}",
            est.value,
            oracle
        );
    }
}
