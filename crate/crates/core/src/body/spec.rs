//! JSON body specification.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{PolytopeRep, Shape, SymmetricBody};
use crate::error::{Error, Result};
use crate::linalg::{from_rows, to_rows, Vector};

/// An `ℓ_p` exponent; serialized as a number or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(*p),
            Exponent::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ExpVisitor;
        impl Visitor<'_> for ExpVisitor {
            type Value = Exponent;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number >= 1 or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Exponent, E> {
                Ok(Exponent::Finite(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exponent, E> {
                Ok(Exponent::Finite(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exponent, E> {
                Ok(Exponent::Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exponent, E> {
                match v {
                    "inf" | "infinity" | "Infinity" => Ok(Exponent::Infinite),
                    other => other
                        .parse::<f64>()
                        .map(Exponent::Finite)
                        .map_err(|_| E::custom(format!("bad exponent `{other}`"))),
                }
            }
        }
        d.deserialize_any(ExpVisitor)
    }
}

/// `{"type": ..., "n": ..., "rows"|"vertices": [[...]], "p", "rho", "apex"}`.
///
/// Rows and vertices are unsigned representatives; the opposite point of each
/// is implicit. A `transform` (row-major) is emitted for linear images of
/// lp-balls and hulls, which keep their canonical parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    #[serde(rename = "type")]
    pub kind: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apex: Option<Vec<f64>>,
    /// Only the origin is accepted; any other center makes the body asymmetric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<Vec<Vec<f64>>>,
}

fn vectors(list: &[Vec<f64>], n: usize, what: &str) -> Result<Vec<Vector>> {
    if list.is_empty() {
        return Err(Error::InvalidBody(format!("`{what}` is empty")));
    }
    list.iter()
        .map(|r| {
            if r.len() != n {
                Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.len(),
                })
            } else {
                Ok(Vector::from_column_slice(r))
            }
        })
        .collect()
}

impl BodySpec {
    pub fn build(&self) -> Result<SymmetricBody> {
        let n = self.n;
        if n < 2 {
            return Err(Error::InvalidBody("n must be at least 2".into()));
        }
        if let Some(c) = &self.center {
            if c.len() != n || c.iter().any(|x| *x != 0.0) {
                return Err(Error::InvalidBody(
                    "body is not centrally symmetric about the origin".into(),
                ));
            }
        }
        let body = match self.kind.as_str() {
            "polytope-h" => {
                let rows = self
                    .rows
                    .as_ref()
                    .ok_or_else(|| Error::InvalidBody("polytope-h needs `rows`".into()))?;
                SymmetricBody::polytope_h(vectors(rows, n, "rows")?)?
            }
            "polytope-v" => {
                let verts = self
                    .vertices
                    .as_ref()
                    .ok_or_else(|| Error::InvalidBody("polytope-v needs `vertices`".into()))?;
                SymmetricBody::polytope_v(vectors(verts, n, "vertices")?)?
            }
            "lp-ball" => {
                let p = self.p.ok_or_else(|| Error::InvalidBody("lp-ball needs `p`".into()))?;
                SymmetricBody::lp_ball(n, p, self.rho.unwrap_or(1.0))?
            }
            "hull-ball-points" => {
                let apex = self
                    .apex
                    .as_ref()
                    .ok_or_else(|| Error::InvalidBody("hull-ball-points needs `apex`".into()))?;
                if apex.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: apex.len(),
                    });
                }
                SymmetricBody::hull_ball_points(self.rho.unwrap_or(1.0), Vector::from_column_slice(apex))?
            }
            other => return Err(Error::InvalidBody(format!("unknown body type `{other}`"))),
        };
        match &self.transform {
            None => Ok(body),
            Some(rows) => body.linear_image(&from_rows(rows)?),
        }
    }

    pub fn from_body(body: &SymmetricBody) -> Self {
        let rows_of = |v: &[Vector]| v.iter().map(|x| x.iter().copied().collect()).collect();
        let mut spec = BodySpec {
            kind: String::new(),
            n: body.dim(),
            rows: None,
            vertices: None,
            p: None,
            rho: None,
            apex: None,
            center: None,
            transform: body.frame().map(|f| to_rows(&f.forward)),
        };
        match body.shape() {
            Shape::Polytope(p) => match p.rep() {
                PolytopeRep::H => {
                    spec.kind = "polytope-h".into();
                    spec.rows = Some(rows_of(p.generators()));
                }
                PolytopeRep::V => {
                    spec.kind = "polytope-v".into();
                    spec.vertices = Some(rows_of(p.generators()));
                }
            },
            Shape::LpBall(b) => {
                spec.kind = "lp-ball".into();
                spec.p = Some(b.p);
                spec.rho = Some(b.rho);
            }
            Shape::HullBallPoints(h) => {
                spec.kind = "hull-ball-points".into();
                spec.rho = Some(h.rho);
                spec.apex = Some(h.apex.iter().copied().collect());
            }
        }
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_variants() {
        let h = SymmetricBody::from_json(r#"{"type":"polytope-h","n":2,"rows":[[1,0],[0,1]]}"#).unwrap();
        assert_eq!(h.gauge(&[0.5, -0.7]).unwrap(), 0.7);
        let v = SymmetricBody::from_json(r#"{"type":"polytope-v","n":2,"vertices":[[1,0],[0,1]]}"#).unwrap();
        assert!((v.gauge(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        let lp = SymmetricBody::from_json(r#"{"type":"lp-ball","n":3,"p":"inf","rho":2}"#).unwrap();
        assert!((lp.gauge(&[1.0, 0.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        let hull = SymmetricBody::from_json(r#"{"type":"hull-ball-points","n":2,"rho":1,"apex":[1.5,0]}"#).unwrap();
        assert!((hull.gauge(&[1.5, 0.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            r#"{"type":"polytope-h","n":2,"rows":[[1,0,0]]}"#,
            r#"{"type":"polytope-h","n":2,"rows":[[1,0]]}"#,
            r#"{"type":"polytope-h","n":2,"rows":[[1,0],[0,1]],"center":[0.1,0]}"#,
            r#"{"type":"lp-ball","n":2}"#,
            r#"{"type":"blob","n":2}"#,
            r#"{"type":"hull-ball-points","n":2,"rho":1,"apex":[0.5,0]}"#,
            r#"{"type":"polytope-h","n":2,"rows":[[1,0],[0,1]],"extra":1}"#,
        ] {
            assert!(SymmetricBody::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn spec_round_trip_keeps_gauge() {
        let t = crate::linalg::Matrix::from_row_slice(2, 2, &[1.2, 0.3, -0.1, 0.9]);
        let body = SymmetricBody::lp_ball(2, Exponent::Finite(3.0), 1.5)
            .unwrap()
            .linear_image(&t)
            .unwrap();
        let json = serde_json::to_string(&body.to_spec()).unwrap();
        let back = SymmetricBody::from_json(&json).unwrap();
        for x in [[0.3, 0.4], [-1.0, 0.2], [0.0, 2.0]] {
            assert!((body.gauge(&x).unwrap() - back.gauge(&x).unwrap()).abs() < 1e-12);
        }
    }
}
