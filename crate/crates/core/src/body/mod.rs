//! Centrally symmetric convex bodies with exact gauge, support and membership.

pub(crate) mod polytope;
pub mod presets;
mod spec;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use polytope::{Polytope, PolytopeRep};
pub use spec::{BodySpec, Exponent};

use crate::error::{Error, Result};
use crate::linalg::{inverse, Matrix, Vector};

/// Global tolerance on the gauge for boundary and membership decisions.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BodyKind {
    PolytopeH,
    PolytopeV,
    LpBall,
    HullBallPoints,
}

/// The `ℓ_p` ball `{x : (Σ |x_i / rho|^p)^{1/p} <= 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpBall {
    pub dim: usize,
    pub p: Exponent,
    pub rho: f64,
}

/// `conv(rho B ∪ {±apex})` with `|apex| > rho`.
#[derive(Clone, Debug, PartialEq)]
pub struct HullBallPoints {
    pub rho: f64,
    pub apex: Vector,
}

#[derive(Clone, Debug)]
pub enum Shape {
    Polytope(Polytope),
    LpBall(LpBall),
    HullBallPoints(HullBallPoints),
}

/// Linear map carried by non-polytope bodies: the body is `forward(base)`.
#[derive(Clone, Debug)]
pub struct Frame {
    pub forward: Matrix,
    pub inverse: Matrix,
}

#[derive(Clone, Debug)]
pub struct SymmetricBody {
    shape: Shape,
    frame: Option<Frame>,
}

impl LpBall {
    pub fn new(dim: usize, p: Exponent, rho: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidBody("dimension must be at least 2".into()));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidBody("lp-ball scale must be positive".into()));
        }
        if let Exponent::Finite(p) = p {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(Error::InvalidBody(format!("lp exponent {p} is outside [1, inf]")));
            }
        }
        Ok(Self { dim, p, rho })
    }

    fn gauge(&self, x: &[f64]) -> f64 {
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        match self.p {
            Exponent::Infinite => scale / self.rho,
            Exponent::Finite(p) => {
                let s: f64 = x.iter().map(|v| (v.abs() / scale).powf(p)).sum();
                scale * s.powf(1.0 / p) / self.rho
            }
        }
    }

    fn support(&self, u: &[f64]) -> f64 {
        let dual = match self.p {
            Exponent::Infinite => Exponent::Finite(1.0),
            Exponent::Finite(p) if p == 1.0 => Exponent::Infinite,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        };
        let unit = LpBall {
            dim: self.dim,
            p: dual,
            rho: 1.0,
        };
        self.rho * unit.gauge(u)
    }

    /// Closed-form volume `(2 Γ(1 + 1/p))^n / Γ(1 + n/p) · rho^n`.
    pub fn volume(&self) -> f64 {
        let n = self.dim as f64;
        let unit = match self.p {
            Exponent::Infinite => 2f64.powf(n),
            Exponent::Finite(p) => (2.0 * libm::tgamma(1.0 + 1.0 / p)).powf(n) / libm::tgamma(1.0 + n / p),
        };
        unit * self.rho.powf(n)
    }

    /// Extreme values of the Euclidean norm over the unit `ℓ_p` sphere of
    /// radius `rho`: `(min |x|, max |x|)` with `x` on the boundary.
    pub fn radial_extremes(&self) -> (f64, f64) {
        let n = self.dim as f64;
        // ‖u‖_p over the Euclidean sphere ranges between 1 and n^{1/p - 1/2}.
        let corner = match self.p {
            Exponent::Infinite => n.powf(-0.5),
            Exponent::Finite(p) => n.powf(1.0 / p - 0.5),
        };
        let (lo_norm, hi_norm) = if corner >= 1.0 { (1.0, corner) } else { (corner, 1.0) };
        (self.rho / hi_norm, self.rho / lo_norm)
    }
}

impl HullBallPoints {
    pub fn new(rho: f64, apex: Vector) -> Result<Self> {
        if apex.len() < 2 {
            return Err(Error::InvalidBody("dimension must be at least 2".into()));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidBody("ball radius must be positive".into()));
        }
        if apex.norm() <= rho {
            return Err(Error::InvalidBody(
                "apex must lie strictly outside the ball (|q| > rho)".into(),
            ));
        }
        Ok(Self { rho, apex })
    }

    /// Half-angle of the tangent cone from the apex, seen from the origin.
    pub fn cone_half_angle(&self) -> f64 {
        (self.rho / self.apex.norm()).acos()
    }

    fn gauge(&self, x: &[f64]) -> f64 {
        let d = self.apex.norm();
        let par: f64 = self.apex.iter().zip(x).map(|(q, v)| q * v).sum::<f64>() / d;
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        let perp = (norm2 - par * par).max(0.0).sqrt();
        let alpha = self.cone_half_angle();
        let psi = perp.atan2(par.abs());
        if psi < alpha {
            (par.abs() * alpha.cos() + perp * alpha.sin()) / self.rho
        } else {
            norm2.sqrt() / self.rho
        }
    }

    fn support(&self, u: &[f64]) -> f64 {
        let norm: f64 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        let along: f64 = self.apex.iter().zip(u).map(|(q, v)| q * v).sum::<f64>().abs();
        (self.rho * norm).max(along)
    }

    pub fn area_2d(&self) -> f64 {
        // two kites (apex, tangent point, origin, tangent point) plus two ball sectors
        let d = self.apex.norm();
        let alpha = self.cone_half_angle();
        let kites = 2.0 * d * self.rho * alpha.sin();
        let sectors = self.rho * self.rho * (PI - 2.0 * alpha);
        kites + sectors
    }
}

impl Shape {
    fn dim(&self) -> usize {
        match self {
            Shape::Polytope(p) => p.dim(),
            Shape::LpBall(b) => b.dim,
            Shape::HullBallPoints(h) => h.apex.len(),
        }
    }

    fn gauge(&self, x: &[f64]) -> f64 {
        match self {
            Shape::Polytope(p) => p.gauge(x),
            Shape::LpBall(b) => b.gauge(x),
            Shape::HullBallPoints(h) => h.gauge(x),
        }
    }

    fn support(&self, u: &[f64]) -> f64 {
        match self {
            Shape::Polytope(p) => p.support(u),
            Shape::LpBall(b) => b.support(u),
            Shape::HullBallPoints(h) => h.support(u),
        }
    }
}

impl SymmetricBody {
    pub fn polytope_h(rows: Vec<Vector>) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        Ok(Self::from_shape(Shape::Polytope(Polytope::new(
            PolytopeRep::H,
            dim,
            rows,
        )?)))
    }

    pub fn polytope_v(vertices: Vec<Vector>) -> Result<Self> {
        let dim = vertices.first().map(|r| r.len()).unwrap_or(0);
        Ok(Self::from_shape(Shape::Polytope(Polytope::new(
            PolytopeRep::V,
            dim,
            vertices,
        )?)))
    }

    pub fn lp_ball(dim: usize, p: Exponent, rho: f64) -> Result<Self> {
        Ok(Self::from_shape(Shape::LpBall(LpBall::new(dim, p, rho)?)))
    }

    pub fn hull_ball_points(rho: f64, apex: Vector) -> Result<Self> {
        Ok(Self::from_shape(Shape::HullBallPoints(HullBallPoints::new(rho, apex)?)))
    }

    pub fn from_shape(shape: Shape) -> Self {
        Self { shape, frame: None }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn frame(&self) -> Option<&Frame> {
        self.frame.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn kind(&self) -> BodyKind {
        match &self.shape {
            Shape::Polytope(p) => match p.rep() {
                PolytopeRep::H => BodyKind::PolytopeH,
                PolytopeRep::V => BodyKind::PolytopeV,
            },
            Shape::LpBall(_) => BodyKind::LpBall,
            Shape::HullBallPoints(_) => BodyKind::HullBallPoints,
        }
    }

    pub fn as_polytope(&self) -> Option<&Polytope> {
        match &self.shape {
            Shape::Polytope(p) => Some(p),
            _ => None,
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    /// Minkowski functional `min{λ >= 0 : x ∈ λK}`.
    pub fn gauge(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.gauge_unchecked(x))
    }

    pub(crate) fn gauge_unchecked(&self, x: &[f64]) -> f64 {
        match &self.frame {
            None => self.shape.gauge(x),
            Some(f) => {
                let y = &f.inverse * Vector::from_column_slice(x);
                self.shape.gauge(y.as_slice())
            }
        }
    }

    /// Support function `h_K(u) = max_{x ∈ K} <x, u>`; positively homogeneous in `u`.
    pub fn support(&self, u: &[f64]) -> Result<f64> {
        self.check_dim(u.len())?;
        Ok(match &self.frame {
            None => self.shape.support(u),
            Some(f) => {
                let y = f.forward.transpose() * Vector::from_column_slice(u);
                self.shape.support(y.as_slice())
            }
        })
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.gauge(x)? <= 1.0 + BOUNDARY_TOL)
    }

    /// The body `TK`, with `gauge_{TK}(x) = gauge_K(T^{-1} x)`.
    pub fn linear_image(&self, t: &Matrix) -> Result<Self> {
        let n = self.dim();
        if t.nrows() != n || t.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: t.nrows(),
            });
        }
        let t_inv = inverse(t)?;
        match &self.shape {
            Shape::Polytope(p) => Ok(Self::from_shape(Shape::Polytope(p.linear_image(t, &t_inv)))),
            other => {
                let frame = match &self.frame {
                    None => Frame {
                        forward: t.clone(),
                        inverse: t_inv,
                    },
                    Some(f) => Frame {
                        forward: t * &f.forward,
                        inverse: &f.inverse * t_inv,
                    },
                };
                Ok(Self {
                    shape: other.clone(),
                    frame: Some(frame),
                })
            }
        }
    }

    /// Polar body; polytopes only (H rows become V vertices and conversely).
    pub fn polar(&self) -> Result<Self> {
        match &self.shape {
            Shape::Polytope(p) => Ok(Self::from_shape(Shape::Polytope(p.polar()))),
            _ => Err(Error::Unsupported("polar is only implemented for polytopes".into())),
        }
    }

    /// Volume when a closed form exists (polytopes, lp-balls, planar hulls).
    pub fn exact_volume(&self) -> Option<f64> {
        let det = self
            .frame
            .as_ref()
            .map(|f| f.forward.determinant().abs())
            .unwrap_or(1.0);
        let base = match &self.shape {
            Shape::Polytope(p) => p.volume(),
            Shape::LpBall(b) => b.volume(),
            Shape::HullBallPoints(h) if h.apex.len() == 2 => h.area_2d(),
            Shape::HullBallPoints(_) => return None,
        };
        Some(base * det)
    }

    /// An `R` with `K ⊆ R·B`; exact for polytopes, lp-balls and hulls in the
    /// canonical frame.
    pub fn circumradius_bound(&self) -> f64 {
        let base = match &self.shape {
            Shape::Polytope(p) => p.vertices().iter().map(|v| v.norm()).fold(0.0, f64::max),
            Shape::LpBall(b) => b.radial_extremes().1,
            Shape::HullBallPoints(h) => h.apex.norm(),
        };
        match &self.frame {
            None => base,
            Some(f) => base * spectral_norm(&f.forward),
        }
    }

    pub fn to_spec(&self) -> BodySpec {
        BodySpec::from_body(self)
    }

    pub fn from_spec(spec: &BodySpec) -> Result<Self> {
        spec.build()
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let spec: BodySpec = serde_json::from_str(json)?;
        spec.build()
    }
}

pub(crate) fn spectral_norm(m: &Matrix) -> f64 {
    nalgebra::SVD::new(m.clone(), false, false).singular_values.max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rotation2;
    use presets::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn square_gauge_examples() {
        let sq = square();
        assert_eq!(sq.gauge(&[0.5, 0.5]).unwrap(), 0.5);
        assert_eq!(sq.gauge(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            sq.gauge(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn remark_hull_apex_is_on_boundary() {
        let k = remark14();
        let g = k.gauge(&[2f64.sqrt(), 0.0]).unwrap();
        assert!((g - 1.0).abs() < 1e-15);
        // tangent point at 45 degrees is on the boundary from both branches
        let t = [0.5f64.sqrt(), 0.5f64.sqrt()];
        assert!((k.gauge(&t).unwrap() - 1.0).abs() < 1e-14);
        assert!((k.gauge(&[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn support_examples() {
        let sq = square();
        assert!((sq.support(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let d = 0.5f64.sqrt();
        assert!((sq.support(&[d, d]).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        let k = remark14();
        assert!((k.support(&[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((k.support(&[1.0, 0.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn linear_image_examples() {
        let sq = square();
        let t = Matrix::from_diagonal(&v(&[2.0, 0.5]));
        let img = sq.linear_image(&t).unwrap();
        assert!((img.gauge(&[2.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);

        // rotating the cross-polytope by 45 degrees and scaling by sqrt(2) gives the square
        let cross = square().polar().unwrap();
        let m = rotation2(PI / 4.0) * 2f64.sqrt();
        let img = cross.linear_image(&m).unwrap();
        for &(x, y) in &[(0.3, -0.7), (1.2, 0.1), (-0.4, -0.9), (0.05, 2.0)] {
            let a = img.gauge(&[x, y]).unwrap();
            let b = sq.gauge(&[x, y]).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn singular_map_is_rejected() {
        let t = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(square().linear_image(&t), Err(Error::SingularMatrix)));
    }

    #[test]
    fn polar_of_square_is_cross_polytope() {
        let cross = square().polar().unwrap();
        assert_eq!(cross.kind(), BodyKind::PolytopeV);
        assert!((cross.gauge(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((cross.gauge(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        let back = cross.polar().unwrap();
        assert_eq!(back.kind(), BodyKind::PolytopeH);
        assert!((back.gauge(&[0.3, -0.8]).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn hexagon_polar_vertices_are_rows() {
        let rows = vec![v(&[1.0, 0.0]), v(&[0.5, 0.8]), v(&[-0.5, 0.8])];
        let hex = SymmetricBody::polytope_h(rows.clone()).unwrap();
        let polar = hex.polar().unwrap();
        // every row is on the polar's boundary, and <row, x> <= 1 on K's boundary
        for a in &rows {
            assert!((polar.gauge(a.as_slice()).unwrap() - 1.0).abs() < 1e-12);
        }
        for k in 0..64 {
            let th = k as f64 * 2.0 * PI / 64.0;
            let dir = [th.cos(), th.sin()];
            let g = hex.gauge(&dir).unwrap();
            let x = [dir[0] / g, dir[1] / g];
            for a in &rows {
                assert!(a[0] * x[0] + a[1] * x[1] <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn polar_of_lp_ball_is_unsupported() {
        let b = SymmetricBody::lp_ball(2, Exponent::Finite(3.0), 1.0).unwrap();
        assert!(matches!(b.polar(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn lp_ball_gauge_and_support() {
        let b = SymmetricBody::lp_ball(2, Exponent::Finite(1.0), 2.0).unwrap();
        assert!((b.gauge(&[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((b.support(&[1.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
        let inf = SymmetricBody::lp_ball(3, Exponent::Infinite, 1.0).unwrap();
        assert!((inf.gauge(&[0.2, -0.9, 0.4]).unwrap() - 0.9).abs() < 1e-15);
        assert!((inf.support(&[1.0, 1.0, 1.0]).unwrap() - 3.0).abs() < 1e-15);
        let p3 = SymmetricBody::lp_ball(2, Exponent::Finite(3.0), 1.0).unwrap();
        let g = p3.gauge(&[1.0, 1.0]).unwrap();
        assert!((g - 2f64.powf(1.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn exact_volumes() {
        assert!((square().exact_volume().unwrap() - 4.0).abs() < 1e-12);
        assert!((cube3().exact_volume().unwrap() - 8.0).abs() < 1e-10);
        let disc = SymmetricBody::lp_ball(2, Exponent::Finite(2.0), 1.0).unwrap();
        assert!((disc.exact_volume().unwrap() - PI).abs() < 1e-12);
        let l1 = SymmetricBody::lp_ball(3, Exponent::Finite(1.0), 1.0).unwrap();
        assert!((l1.exact_volume().unwrap() - 4.0 / 3.0).abs() < 1e-12);
        // remark hull: two kites of area sqrt(2)*sin(45°)*... plus half-discs
        let k = remark14();
        assert!((k.exact_volume().unwrap() - (2.0 + PI / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn invalid_bodies() {
        assert!(SymmetricBody::hull_ball_points(1.0, v(&[0.5, 0.0])).is_err());
        assert!(SymmetricBody::lp_ball(2, Exponent::Finite(0.5), 1.0).is_err());
        assert!(SymmetricBody::lp_ball(2, Exponent::Finite(2.0), -1.0).is_err());
        assert!(SymmetricBody::polytope_h(vec![v(&[1.0, 0.0])]).is_err());
    }
}
