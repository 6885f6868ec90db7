//! John and Loewner ellipsoids, the landmark radii and the M-position certificate.

use serde::{Deserialize, Serialize};

use crate::body::polytope::rank;
use crate::body::{Shape, SymmetricBody};
use crate::ellipsoid::{unit_ball_volume, Ellipsoid};
use crate::error::{Error, Result};
use crate::linalg::{inverse, symmetrize, Matrix, Vector};
use crate::measure::{body_volume, intersection_volume, Method};

/// Relative optimality gap at which the MVEE iteration stops.
pub const MVEE_GAP: f64 = 1e-9;
pub const MVEE_MAX_ITER: usize = 100_000;

/// Minimum-volume centered ellipsoid `{x : xᵀ Q^{-1} x <= 1}` containing `±p_i`.
#[derive(Clone, Debug)]
pub struct Mvee {
    pub quadratic: Matrix,
    pub weights: Vec<f64>,
    pub iterations: usize,
    /// `max_i p_iᵀ (Σ w p pᵀ)^{-1} p_i / n - 1` at the last iterate.
    pub gap: f64,
}

impl Mvee {
    /// `p_iᵀ Q^{-1} p_i` for each point.
    pub fn levels(&self, points: &[Vector]) -> Result<Vec<f64>> {
        let qinv = inverse(&self.quadratic)?;
        Ok(points.iter().map(|p| p.dot(&(&qinv * p))).collect())
    }
}

/// Khachiyan's coordinate ascent with Todd–Yildirim away steps, on the
/// symmetric point set `±points`.
pub fn mvee(points: &[Vector]) -> Result<Mvee> {
    let n = points
        .first()
        .map(|p| p.len())
        .ok_or_else(|| Error::DegeneratePoints("no points".into()))?;
    if points.iter().any(|p| p.len() != n) {
        return Err(Error::DegeneratePoints("points of mixed dimension".into()));
    }
    if rank(points, n) < n {
        return Err(Error::DegeneratePoints("points do not span the space".into()));
    }
    let m = points.len();
    let nf = n as f64;
    let mut w = vec![1.0 / m as f64; m];
    let mut iterations = 0;
    loop {
        let mut q = Matrix::zeros(n, n);
        for (wi, p) in w.iter().zip(points) {
            if *wi > 0.0 {
                q += p * p.transpose() * *wi;
            }
        }
        let qinv = inverse(&symmetrize(&q))?;
        let g: Vec<f64> = points.iter().map(|p| p.dot(&(&qinv * p))).collect();
        let (jmax, kappa) = g
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        let (jmin, gmin) = g
            .iter()
            .copied()
            .enumerate()
            .filter(|(i, _)| w[*i] > 0.0)
            .fold((0, f64::MAX), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        let up = kappa - nf;
        let down = nf - gmin;
        if (up <= nf * MVEE_GAP && down <= nf * MVEE_GAP) || iterations >= MVEE_MAX_ITER {
            return Ok(Mvee {
                quadratic: symmetrize(&(q * kappa)),
                weights: w,
                iterations,
                gap: up / nf,
            });
        }
        iterations += 1;
        let (j, lambda) = if up >= down {
            (jmax, up / (nf * (kappa - 1.0)))
        } else {
            let floor = -w[jmin] / (1.0 - w[jmin]);
            let lam = if gmin > 1.0 {
                ((gmin - nf) / (nf * (gmin - 1.0))).max(floor)
            } else {
                floor
            };
            (jmin, lam)
        };
        for wi in w.iter_mut() {
            *wi *= 1.0 - lambda;
        }
        w[j] += lambda;
        if w[j] < 1e-15 {
            w[j] = 0.0;
        }
    }
}

/// Minimum-volume ellipsoid containing the body.
pub fn loewner(body: &SymmetricBody) -> Result<Ellipsoid> {
    match body.shape() {
        Shape::Polytope(p) => Ellipsoid::from_quadratic(&mvee(p.hull_points())?.quadratic),
        Shape::LpBall(b) => framed_ball(body, b.radial_extremes().1),
        Shape::HullBallPoints(_) => Err(unsupported()),
    }
}

/// Maximum-volume ellipsoid inside the body, as the polar of the Loewner
/// ellipsoid of the polar body.
pub fn john(body: &SymmetricBody) -> Result<Ellipsoid> {
    match body.shape() {
        Shape::Polytope(p) => {
            let q = mvee(p.facet_normals())?.quadratic;
            Ellipsoid::from_quadratic(&symmetrize(&inverse(&q)?))
        }
        Shape::LpBall(b) => framed_ball(body, b.radial_extremes().0),
        Shape::HullBallPoints(_) => Err(unsupported()),
    }
}

fn framed_ball(body: &SymmetricBody, radius: f64) -> Result<Ellipsoid> {
    match body.frame() {
        None => Ok(Ellipsoid::ball(body.dim(), radius)),
        Some(f) => Ellipsoid::from_linear_map(&(&f.forward * radius)),
    }
}

fn unsupported() -> Error {
    Error::Unsupported("John and Loewner ellipsoids of ball-point hulls".into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Landmarks {
    pub john: Ellipsoid,
    pub loewner: Ellipsoid,
    pub r_j: f64,
    pub r_l: f64,
    pub r_m: f64,
    pub vol_k: f64,
    pub vol_k_std_error: f64,
    pub kappa_n: f64,
}

pub fn landmarks(body: &SymmetricBody, method: Method) -> Result<Landmarks> {
    let john = john(body)?;
    let loewner = loewner(body)?;
    let vol = body_volume(body, method)?;
    let n = body.dim();
    let kappa = unit_ball_volume(n);
    Ok(Landmarks {
        r_j: john.r(),
        r_l: loewner.r(),
        r_m: (vol.value / kappa).powf(1.0 / n as f64),
        vol_k: vol.value,
        vol_k_std_error: vol.std_error,
        kappa_n: kappa,
        john,
        loewner,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MPositionCertificate {
    pub r_m: f64,
    /// `Vol(K ∩ r_M B) / Vol K`.
    pub rho: f64,
    pub rho_std_error: f64,
    /// `ρ^{-1/n}`.
    pub c: f64,
    pub vol_k: f64,
    pub method: Method,
}

/// Intersection ratio of the body with the Euclidean ball of its own volume,
/// in the body's current position.
pub fn m_position_certificate(body: &SymmetricBody, method: Method) -> Result<MPositionCertificate> {
    let n = body.dim();
    let vol = body_volume(body, method.reseeded(1))?;
    let r_m = (vol.value / unit_ball_volume(n)).powf(1.0 / n as f64);
    let cap = intersection_volume(body, &Ellipsoid::ball(n, r_m), method)?;
    // The ball has the same volume as K, so for sampled K the ratio is the hit
    // fraction and its error does not involve the volume estimate.
    let rho = (cap.value / vol.value).min(1.0);
    let rho_std_error = cap.std_error / vol.value;
    Ok(MPositionCertificate {
        r_m,
        rho,
        rho_std_error,
        c: rho.powf(-1.0 / n as f64),
        vol_k: vol.value,
        method,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::body::presets::{crosspoly3, cube3, disc, rect_2_1, square};
    use crate::body::Exponent;
    use crate::ellipsoid::containment;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn square_landmarks() {
        let l = landmarks(&square(), Method::Exact2d).unwrap();
        assert!((l.r_j - 1.0).abs() < 1e-8);
        assert!((l.r_l - 2f64.sqrt()).abs() < 1e-8);
        assert!((l.r_m - 2.0 / PI.sqrt()).abs() < 1e-12);
        assert!(l.r_j <= l.r_m && l.r_m <= l.r_l);
    }

    #[test]
    fn cross_polytope_2d_loewner_is_unit_disc() {
        let k = SymmetricBody::polytope_v(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        let e = loewner(&k).unwrap();
        assert!((e.r() - 1.0).abs() < 1e-8);
        assert!((e.t() - Matrix::identity(2, 2)).norm() < 1e-8);
    }

    #[test]
    fn rectangle_kkt() {
        // axis-aligned optimum: John semi-axes (2, 1), Loewner (2√2, √2)
        let k = rect_2_1();
        let j = john(&k).unwrap().quadratic();
        let l = loewner(&k).unwrap().quadratic();
        assert!((j - Matrix::from_diagonal(&v(&[4.0, 1.0]))).norm() < 1e-7);
        assert!((l - Matrix::from_diagonal(&v(&[8.0, 2.0]))).norm() < 1e-7);
    }

    #[test]
    fn cube_landmarks() {
        let l = landmarks(&cube3(), Method::Exact2d).unwrap();
        assert!((l.r_j - 1.0).abs() < 1e-8);
        assert!((l.r_l - 3f64.sqrt()).abs() < 1e-8);
        let c = containment(&l.john, &cube3()).unwrap();
        assert!(c.ellipsoid_in_body);
        assert!(containment(&l.loewner, &cube3()).unwrap().body_in_ellipsoid);
    }

    #[test]
    fn mvee_contains_and_touches() {
        let pts = vec![
            v(&[1.0, 0.2, 0.0]),
            v(&[0.3, 1.0, 0.1]),
            v(&[0.0, -0.4, 1.2]),
            v(&[0.7, 0.7, 0.7]),
        ];
        let m = mvee(&pts).unwrap();
        let lv = m.levels(&pts).unwrap();
        assert!(lv.iter().all(|g| *g <= 1.0 + 1e-8));
        assert!(lv.iter().filter(|g| **g >= 1.0 - 1e-6).count() >= 3);
    }

    #[test]
    fn john_loewner_duality() {
        let k = crosspoly3();
        let j_polar = john(&k.polar().unwrap()).unwrap();
        let l = loewner(&k).unwrap().polar().unwrap();
        assert!((j_polar.quadratic() - l.quadratic()).norm() < 1e-8);
    }

    #[test]
    fn lp_ball_closed_forms() {
        let k = SymmetricBody::lp_ball(3, Exponent::Finite(4.0), 2.0).unwrap();
        let l = landmarks(&k, Method::MonteCarlo { samples: 1000, seed: 1 }).unwrap();
        // p > 2: nearest boundary points on the axes, farthest on the diagonals
        assert!((l.r_j - 2.0).abs() < 1e-12);
        assert!((l.r_l - 2.0 * 3f64.powf(0.25)).abs() < 1e-12);
        assert!(l.r_j <= l.r_m && l.r_m <= l.r_l);
    }

    #[test]
    fn degenerate_points_rejected() {
        assert!(matches!(
            mvee(&[v(&[1.0, 0.0]), v(&[2.0, 0.0])]),
            Err(Error::DegeneratePoints(_))
        ));
    }

    #[test]
    fn disc_is_in_m_position_with_c_one() {
        let c = m_position_certificate(&disc(), Method::Exact2d).unwrap();
        assert!((c.rho - 1.0).abs() < 1e-12);
        assert!((c.c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_m_position_matches_closed_form() {
        let c = m_position_certificate(&square(), Method::Exact2d).unwrap();
        let r: f64 = 2.0 / PI.sqrt();
        let oracle = (r * r * (PI - 4.0 * (1.0 / r).acos()) + 4.0 * (r * r - 1.0).sqrt()) / 4.0;
        assert!((c.rho - oracle).abs() < 1e-12);
        assert!((oracle - 0.909_454_031_195_049_8).abs() < 1e-12);
    }
}
