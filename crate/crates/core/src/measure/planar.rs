//! Exact planar kernel.
//!
//! A planar body is described in polar form by angular sectors. On each sector
//! the gauge along the unit direction `u(θ)` is either linear, `<w, u>` (a
//! polygon edge or a tangent segment), or quadric, `sqrt(uᵀ P u)` (an
//! elliptical arc). Intersections with the circle of radius `r`, the arc lists
//! and the area of `K ∩ rB` all have closed forms on each sector.

use std::f64::consts::{PI, TAU};

use crate::body::{Exponent, PolytopeRep, Shape, SymmetricBody, BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{inverse, Matrix, Vector};

use super::Arc;

#[derive(Clone, Copy, Debug)]
enum Piece {
    Line([f64; 2]),
    /// `(a, b, c)` of the symmetric matrix `[[a, b], [b, c]]`.
    Quadric([f64; 3]),
}

#[derive(Clone, Copy, Debug)]
struct Sector {
    start: f64,
    end: f64,
    piece: Piece,
}

#[derive(Clone, Debug)]
pub(crate) struct PlanarBoundary {
    sectors: Vec<Sector>,
}

/// Result of intersecting the boundary with a circle of radius `r`.
#[derive(Clone, Debug, Default)]
pub(crate) struct CircleSplit {
    /// Arcs of the unit circle where `r u ∈ K`.
    pub inside: Vec<Arc>,
    /// Arcs where `r u ∉ K`.
    pub outside: Vec<Arc>,
    /// Arcs of positive length on which the circle runs along `∂K`.
    pub contact_arcs: Vec<Arc>,
    /// Isolated angles at which the circle meets `∂K`.
    pub contact_points: Vec<f64>,
    /// `Vol_2(K ∩ rB)`.
    pub area: f64,
}

impl Piece {
    fn gauge(&self, th: f64) -> f64 {
        let (s, c) = th.sin_cos();
        match *self {
            Piece::Line(w) => w[0] * c + w[1] * s,
            Piece::Quadric([a, b, cc]) => (a * c * c + 2.0 * b * c * s + cc * s * s).max(0.0).sqrt(),
        }
    }

    fn map(&self, l: &Matrix) -> Piece {
        match *self {
            Piece::Line(w) => {
                let v = l.transpose() * Vector::from_column_slice(&w);
                Piece::Line([v[0], v[1]])
            }
            Piece::Quadric([a, b, c]) => {
                let p = Matrix::from_row_slice(2, 2, &[a, b, b, c]);
                let q = l.transpose() * p * l;
                Piece::Quadric([q[(0, 0)], 0.5 * (q[(0, 1)] + q[(1, 0)]), q[(1, 1)]])
            }
        }
    }

    /// `∫_a^b ½ ρ(θ)² dθ`, where `ρ = 1 / gauge` is the radial function.
    fn radial_area(&self, a: f64, b: f64) -> f64 {
        match *self {
            Piece::Line(w) => {
                let phi = w[1].atan2(w[0]);
                let n2 = w[0] * w[0] + w[1] * w[1];
                ((b - phi).tan() - (a - phi).tan()) / (2.0 * n2)
            }
            Piece::Quadric(p) => 0.5 * quadric_reciprocal_integral(p, a, b),
        }
    }

    /// Angles where `gauge(u(θ)) = target`, not reduced to any range.
    fn crossings(&self, target: f64) -> Vec<f64> {
        match *self {
            Piece::Line(w) => {
                let norm = w[0].hypot(w[1]);
                let phi = w[1].atan2(w[0]);
                let c = target / norm;
                if c < 1.0 {
                    let beta = c.acos();
                    vec![phi - beta, phi + beta]
                } else {
                    Vec::new()
                }
            }
            Piece::Quadric([a, b, cc]) => {
                let m = 0.5 * (a + cc);
                let half = 0.5 * (a - cc);
                let radius = half.hypot(b);
                if radius <= 1e-14 * m.abs() {
                    return Vec::new();
                }
                let psi0 = 0.5 * b.atan2(half);
                let c = (target * target - m) / radius;
                if c.abs() < 1.0 {
                    let d = 0.5 * c.acos();
                    vec![psi0 - d, psi0 + d, psi0 - d + PI, psi0 + d + PI]
                } else {
                    Vec::new()
                }
            }
        }
    }

    /// Point of tangency with the circle `gauge = target`, if any.
    fn tangency(&self, target: f64) -> Vec<f64> {
        match *self {
            Piece::Line(w) => {
                let norm = w[0].hypot(w[1]);
                if (norm / target - 1.0).abs() <= BOUNDARY_TOL {
                    vec![w[1].atan2(w[0])]
                } else {
                    Vec::new()
                }
            }
            Piece::Quadric([a, b, cc]) => {
                let m = 0.5 * (a + cc);
                let half = 0.5 * (a - cc);
                let radius = half.hypot(b);
                if radius <= 1e-14 * m.abs() {
                    return Vec::new();
                }
                let psi0 = 0.5 * b.atan2(half);
                let t2 = target * target;
                let mut out = Vec::new();
                if ((m + radius) / t2 - 1.0).abs() <= BOUNDARY_TOL {
                    out.extend([psi0, psi0 + PI]);
                }
                if ((m - radius) / t2 - 1.0).abs() <= BOUNDARY_TOL {
                    out.extend([psi0 + 0.5 * PI, psi0 + 1.5 * PI]);
                }
                out
            }
        }
    }

    /// True when the piece coincides with the circle `gauge = target`.
    fn lies_on_circle(&self, target: f64) -> bool {
        match *self {
            Piece::Line(_) => false,
            Piece::Quadric([a, b, c]) => {
                let t2 = target * target;
                let m = 0.5 * (a + c);
                let radius = (0.5 * (a - c)).hypot(b);
                radius <= BOUNDARY_TOL * t2 && (m / t2 - 1.0).abs() <= BOUNDARY_TOL
            }
        }
    }
}

/// `∫_a^b dθ / (u(θ)ᵀ P u(θ))` in closed form.
fn quadric_reciprocal_integral(p: [f64; 3], a: f64, b: f64) -> f64 {
    let [pa, pb, pc] = p;
    let m = 0.5 * (pa + pc);
    let half = 0.5 * (pa - pc);
    let radius = half.hypot(pb);
    if radius <= 1e-15 * m {
        return (b - a) / m;
    }
    let psi0 = 0.5 * pb.atan2(half);
    let l1 = m + radius;
    let l2 = m - radius;
    let (s1, s2) = (l1.sqrt(), l2.sqrt());
    let g = |psi: f64| (s2 * psi.sin()).atan2(s1 * psi.cos());
    let span = b - a;
    let turns = (span / PI).floor();
    let mut rem = (g(b - psi0) - g(a - psi0) - turns * PI).rem_euclid(TAU);
    if rem > 1.5 * PI {
        rem -= TAU;
    }
    (turns * PI + rem) / (l1 * l2).sqrt()
}

fn convex_hull_ccw(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
    pts.dedup_by(|p, q| (p[0] - q[0]).abs() < 1e-14 && (p[1] - q[1]).abs() < 1e-14);
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 1e-15 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 1e-15 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Sectors of a polygon given its vertices in counter-clockwise order.
fn polygon_rays(vertices: &[[f64; 2]]) -> Vec<([f64; 2], [f64; 2], Piece)> {
    let k = vertices.len();
    (0..k)
        .map(|j| {
            let p = vertices[j];
            let q = vertices[(j + 1) % k];
            // w with <w, p> = <w, q> = 1
            let det = p[0] * q[1] - p[1] * q[0];
            let w = [(q[1] - p[1]) / det, (p[0] - q[0]) / det];
            (p, q, Piece::Line(w))
        })
        .collect()
}

fn dir(th: f64) -> [f64; 2] {
    [th.cos(), th.sin()]
}

impl PlanarBoundary {
    /// Polar description of `K' = {x : gauge_K(M x) <= 1}`, i.e. `M^{-1} K`.
    pub fn new(body: &SymmetricBody, m: &Matrix) -> Result<Self> {
        if body.dim() != 2 {
            return Err(Error::MethodMismatch {
                method: "exact-2d".into(),
                reason: format!("body has dimension {}", body.dim()),
            });
        }
        let l = match body.frame() {
            Some(f) => &f.inverse * m,
            None => m.clone(),
        };
        let l_inv = inverse(&l)?;

        // (start ray, end ray, piece) in the body's canonical frame, counter-clockwise
        let rays: Vec<([f64; 2], [f64; 2], Piece)> = match body.shape() {
            Shape::Polytope(p) => {
                let mut pts: Vec<[f64; 2]> = Vec::new();
                for v in p.hull_points() {
                    pts.push([v[0], v[1]]);
                    pts.push([-v[0], -v[1]]);
                }
                let verts = match p.rep() {
                    PolytopeRep::H => {
                        pts.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
                        pts
                    }
                    PolytopeRep::V => convex_hull_ccw(&pts),
                };
                polygon_rays(&verts)
            }
            Shape::LpBall(b) => match b.p {
                Exponent::Infinite => {
                    let r = b.rho;
                    polygon_rays(&[[r, -r], [r, r], [-r, r], [-r, -r]])
                }
                Exponent::Finite(p) if p == 1.0 => {
                    let r = b.rho;
                    polygon_rays(&[[r, 0.0], [0.0, r], [-r, 0.0], [0.0, -r]])
                }
                Exponent::Finite(p) if p == 2.0 => {
                    let k = 1.0 / (b.rho * b.rho);
                    let piece = Piece::Quadric([k, 0.0, k]).map(&l);
                    return Ok(Self {
                        sectors: vec![Sector {
                            start: 0.0,
                            end: TAU,
                            piece,
                        }],
                    });
                }
                Exponent::Finite(p) => {
                    return Err(Error::MethodMismatch {
                        method: "exact-2d".into(),
                        reason: format!("no closed form for the l_{p} ball"),
                    })
                }
            },
            Shape::HullBallPoints(h) => {
                let phi = h.apex[1].atan2(h.apex[0]);
                let alpha = h.cone_half_angle();
                let rho = h.rho;
                let k = 1.0 / (rho * rho);
                let ball = Piece::Quadric([k, 0.0, k]);
                let line = |th: f64| Piece::Line([th.cos() / rho, th.sin() / rho]);
                vec![
                    (dir(phi - alpha), dir(phi), line(phi - alpha)),
                    (dir(phi), dir(phi + alpha), line(phi + alpha)),
                    (dir(phi + alpha), dir(phi + PI - alpha), ball),
                    (dir(phi + PI - alpha), dir(phi + PI), line(phi + PI - alpha)),
                    (dir(phi + PI), dir(phi + PI + alpha), line(phi + PI + alpha)),
                    (dir(phi + PI + alpha), dir(phi - alpha), ball),
                ]
            }
        };

        let flip = l.determinant() < 0.0;
        let angle_of = |d: [f64; 2]| {
            let x = &l_inv * Vector::from_column_slice(&d);
            x[1].atan2(x[0])
        };
        let mut sectors = Vec::with_capacity(rays.len());
        for (s, e, piece) in rays {
            let (mut a, mut b) = (angle_of(s), angle_of(e));
            if flip {
                std::mem::swap(&mut a, &mut b);
            }
            let span = (b - a).rem_euclid(TAU);
            if span <= 0.0 {
                continue;
            }
            sectors.push(Sector {
                start: a,
                end: a + span,
                piece: piece.map(&l),
            });
        }
        Ok(Self { sectors })
    }

    /// `Vol_2(K')`.
    pub fn area(&self) -> f64 {
        self.sectors.iter().map(|s| s.piece.radial_area(s.start, s.end)).sum()
    }

    pub fn split(&self, r: f64) -> CircleSplit {
        let target = 1.0 / r;
        let mut inside = Vec::new();
        let mut outside = Vec::new();
        let mut contact_arcs = Vec::new();
        let mut contact_points = Vec::new();
        let mut area = 0.0;

        for s in &self.sectors {
            let (a, b) = (s.start, s.end);
            if s.piece.lies_on_circle(target) {
                contact_arcs.push(Arc::new(a, b));
                inside.push(Arc::new(a, b));
                area += 0.5 * r * r * (b - a);
                continue;
            }
            let eps = 1e-13;
            let mut cuts: Vec<f64> = Vec::new();
            for root in s.piece.crossings(target) {
                let mut x = root;
                // bring into [a, a + 2π)
                x = a + (x - a).rem_euclid(TAU);
                if x > a + eps && x < b - eps {
                    cuts.push(x);
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup_by(|x, y| (*x - *y).abs() <= eps);
            for x in &cuts {
                contact_points.push(*x);
            }
            for root in s.piece.tangency(target) {
                let x = a + (root - a).rem_euclid(TAU);
                if x >= a - eps && x <= b + eps {
                    contact_points.push(x);
                }
            }
            if (s.piece.gauge(a) / target - 1.0).abs() <= BOUNDARY_TOL {
                contact_points.push(a);
            }

            let mut lo = a;
            for hi in cuts.iter().copied().chain(std::iter::once(b)) {
                if hi > lo {
                    let mid = 0.5 * (lo + hi);
                    if s.piece.gauge(mid) * r <= 1.0 + BOUNDARY_TOL {
                        inside.push(Arc::new(lo, hi));
                        area += 0.5 * r * r * (hi - lo);
                    } else {
                        outside.push(Arc::new(lo, hi));
                        area += s.piece.radial_area(lo, hi);
                    }
                }
                lo = hi;
            }
        }

        let mut pts: Vec<f64> = contact_points.into_iter().map(|x| x.rem_euclid(TAU)).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-10);
        if pts.len() > 1 && (pts[0] + TAU - pts[pts.len() - 1]).abs() <= 1e-10 {
            pts.pop();
        }
        CircleSplit {
            inside: merge_arcs(inside),
            outside: merge_arcs(outside),
            contact_arcs: merge_arcs(contact_arcs),
            contact_points: pts,
            area,
        }
    }
}

/// Normalizes arcs to start in `[0, 2π)`, sorts and merges touching arcs,
/// including across the `2π` seam.
pub(crate) fn merge_arcs(arcs: Vec<Arc>) -> Vec<Arc> {
    let tol = 1e-12;
    let mut norm: Vec<Arc> = arcs
        .into_iter()
        .filter(|a| a.len() > 0.0)
        .map(|a| {
            let s = a.start.rem_euclid(TAU);
            Arc::new(s, s + a.len())
        })
        .collect();
    norm.sort_by(|x, y| x.start.total_cmp(&y.start));
    let total: f64 = norm.iter().map(|a| a.len()).sum();
    if total >= TAU - 1e-10 {
        return vec![Arc::new(0.0, TAU)];
    }
    let mut out: Vec<Arc> = Vec::new();
    for a in norm {
        match out.last_mut() {
            Some(last) if a.start <= last.end + tol => last.end = last.end.max(a.end),
            _ => out.push(a),
        }
    }
    if out.len() > 1 {
        let first = out[0];
        let last = out.len() - 1;
        if out[last].end >= first.start + TAU - tol {
            out[last].end = out[last].end.max(first.end + TAU);
            out.remove(0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::presets::{remark14, square};
    use crate::linalg::rotation2;

    fn identity() -> Matrix {
        Matrix::identity(2, 2)
    }

    /// Independent oracle: ½ ∫ min(r, ρ(θ))² dθ by composite Simpson on the gauge.
    fn polar_area_oracle(body: &SymmetricBody, m: &Matrix, r: f64, steps: usize) -> f64 {
        let f = |th: f64| {
            let u = m * Vector::from_column_slice(&[th.cos(), th.sin()]);
            let rho = 1.0 / body.gauge(u.as_slice()).unwrap();
            0.5 * rho.min(r).powi(2)
        };
        let h = TAU / steps as f64;
        let mut s = f(0.0) + f(TAU);
        for k in 1..steps {
            s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn square_disc_areas() {
        let b = PlanarBoundary::new(&square(), &identity()).unwrap();
        assert!((b.area() - 4.0).abs() < 1e-13);
        assert!((b.split(1.0).area - PI).abs() < 1e-13);
        assert!((b.split(2.0).area - 4.0).abs() < 1e-13);
        let r: f64 = 1.2;
        let closed = r * r * (PI - 4.0 * (1.0 / r).acos()) + 4.0 * (r * r - 1.0).sqrt();
        assert!((b.split(r).area - closed).abs() < 1e-13);
    }

    #[test]
    fn square_arcs_at_1_2() {
        let b = PlanarBoundary::new(&square(), &identity()).unwrap();
        let s = b.split(1.2);
        assert_eq!(s.inside.len(), 4);
        assert_eq!(s.outside.len(), 4);
        let beta = (1.0 / 1.2f64).acos();
        let inside_mass: f64 = s.inside.iter().map(|a| a.len()).sum();
        assert!((inside_mass - 8.0 * (PI / 4.0 - beta)).abs() < 1e-13);
        for a in &s.inside {
            let mid = 0.5 * (a.start + a.end);
            let off = (mid - PI / 4.0).rem_euclid(PI / 2.0);
            assert!(off.abs() < 1e-12 || (off - PI / 2.0).abs() < 1e-12);
        }
        for a in &s.outside {
            let mid = 0.5 * (a.start + a.end);
            let off = mid.rem_euclid(PI / 2.0);
            assert!(off.abs() < 1e-12 || (off - PI / 2.0).abs() < 1e-12, "{mid}");
        }
    }

    #[test]
    fn unit_circle_in_square_is_full_arc() {
        let b = PlanarBoundary::new(&square(), &identity()).unwrap();
        let s = b.split(1.0);
        assert_eq!(s.inside, vec![Arc::new(0.0, TAU)]);
        assert!(s.outside.is_empty());
        assert_eq!(s.contact_points.len(), 4);
    }

    #[test]
    fn areas_match_quadrature_under_frames() {
        let bodies = [
            square(),
            remark14(),
            crate::body::presets::hexagon(),
            crate::body::presets::disc(),
        ];
        let frames = [
            identity(),
            Matrix::from_row_slice(2, 2, &[1.3, 0.2, 0.2, 0.8]),
            rotation2(0.3) * Matrix::from_diagonal(&Vector::from_column_slice(&[1.4, 0.7])),
            Matrix::from_row_slice(2, 2, &[0.0, 1.1, 0.9, 0.0]),
        ];
        for body in &bodies {
            for m in &frames {
                let pb = PlanarBoundary::new(body, m).unwrap();
                for &r in &[0.6, 1.0, 1.15, 1.4, 3.0] {
                    let exact = pb.split(r).area;
                    let oracle = polar_area_oracle(body, m, r, 200_000);
                    assert!((exact - oracle).abs() < 2e-7, "r = {r}: {exact} vs {oracle}");
                }
                let total = polar_area_oracle(body, m, 1e6, 200_000);
                assert!((pb.area() - total).abs() < 2e-7);
            }
        }
    }

    #[test]
    fn remark_hull_touches_along_arcs() {
        let b = PlanarBoundary::new(&remark14(), &identity()).unwrap();
        let s = b.split(1.0);
        assert_eq!(s.contact_arcs.len(), 2);
        let a = s.contact_arcs[0];
        assert!((a.start - PI / 4.0).abs() < 1e-12 && (a.end - 3.0 * PI / 4.0).abs() < 1e-12);
        assert_eq!(s.inside, vec![Arc::new(0.0, TAU)]);
        assert!(b.split(1.1).contact_arcs.is_empty());
    }

    #[test]
    fn quadric_integral_matches_quadrature() {
        let p = [2.0, 0.3, 0.7];
        for &(a, b) in &[(0.0, 1.0), (-2.0, 3.5), (0.1, 0.1 + TAU), (1.0, 7.5)] {
            let n = 100_000;
            let h = (b - a) / n as f64;
            let f = |t: f64| {
                let (s, c) = f64::sin_cos(t);
                1.0 / (p[0] * c * c + 2.0 * p[1] * c * s + p[2] * s * s)
            };
            let mut acc = f(a) + f(b);
            for k in 1..n {
                acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            let oracle = acc * h / 3.0;
            assert!((quadric_reciprocal_integral(p, a, b) - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn seam_merging() {
        let arcs = vec![Arc::new(6.0, TAU), Arc::new(0.0, 0.5), Arc::new(2.0, 3.0)];
        let merged = merge_arcs(arcs);
        assert_eq!(merged.len(), 2);
        assert!((merged[1].start - 6.0).abs() < 1e-15 && (merged[1].end - (TAU + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn non_planar_or_unsupported_bodies_are_rejected() {
        assert!(PlanarBoundary::new(&crate::body::presets::cube3(), &Matrix::identity(3, 3)).is_err());
        let p3 = SymmetricBody::lp_ball(2, Exponent::Finite(3.0), 1.0).unwrap();
        assert!(PlanarBoundary::new(&p3, &identity()).is_err());
    }
}
