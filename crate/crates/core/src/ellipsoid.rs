//! Centered ellipsoids `T(rB)` with `T` symmetric positive definite, `det T = 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::body::{Shape, SymmetricBody, BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{
    frobenius, from_rows, inverse, sym_apply, sym_eigenvalues, sym_exp, sym_sqrt, symmetrize, to_rows, Matrix, Vector,
};
use crate::rng;

/// `κ_n = π^{n/2} / Γ(n/2 + 1)`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    PI.powf(half) / libm::tgamma(half + 1.0)
}

/// A symmetric matrix with zero trace: a tangent direction of `det = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TracelessDirection {
    a: Matrix,
}

impl TracelessDirection {
    pub fn new(a: Matrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::InvalidDirection("matrix is not square".into()));
        }
        let scale = frobenius(&a).max(1.0);
        if frobenius(&(&a - a.transpose())) > 1e-12 * scale {
            return Err(Error::InvalidDirection("matrix is not symmetric".into()));
        }
        if a.trace().abs() > 1e-12 * scale {
            return Err(Error::InvalidDirection(format!("trace is {:e}", a.trace())));
        }
        Ok(Self { a: symmetrize(&a) })
    }

    /// Projects an arbitrary square matrix onto traceless symmetric matrices.
    pub fn project(m: &Matrix) -> Self {
        Self {
            a: crate::linalg::traceless_part(&symmetrize(m)),
        }
    }

    pub fn zero(n: usize) -> Self {
        Self { a: Matrix::zeros(n, n) }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn norm(&self) -> f64 {
        frobenius(&self.a)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { a: &self.a * s }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid {
    t: Matrix,
    r: f64,
}

#[derive(Serialize, Deserialize)]
struct EllipsoidRepr {
    #[serde(rename = "T")]
    t: Vec<Vec<f64>>,
    r: f64,
}

impl Serialize for Ellipsoid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EllipsoidRepr {
            t: to_rows(&self.t),
            r: self.r,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ellipsoid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = EllipsoidRepr::deserialize(d)?;
        let t = from_rows(&repr.t).map_err(serde::de::Error::custom)?;
        Ellipsoid::new(t, repr.r).map_err(serde::de::Error::custom)
    }
}

fn renormalize(t: &Matrix) -> Matrix {
    let n = t.nrows() as f64;
    let det = t.determinant();
    t / det.powf(1.0 / n)
}

impl Ellipsoid {
    /// Validates symmetry and positivity, then rescales `T` to determinant one.
    pub fn new(t: Matrix, r: f64) -> Result<Self> {
        if t.nrows() != t.ncols() || t.nrows() == 0 {
            return Err(Error::InvalidArgument("ellipsoid matrix must be square".into()));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
        }
        let scale = frobenius(&t).max(1.0);
        if frobenius(&(&t - t.transpose())) > 1e-10 * scale {
            return Err(Error::InvalidArgument("ellipsoid matrix must be symmetric".into()));
        }
        let t = symmetrize(&t);
        if sym_eigenvalues(&t).min() <= 0.0 {
            return Err(Error::InvalidArgument(
                "ellipsoid matrix must be positive definite".into(),
            ));
        }
        Ok(Self { t: renormalize(&t), r })
    }

    pub fn ball(n: usize, r: f64) -> Self {
        Self {
            t: Matrix::identity(n, n),
            r,
        }
    }

    /// The ellipsoid `{x : xᵀ Q^{-1} x <= 1} = Q^{1/2} B`.
    pub fn from_quadratic(q: &Matrix) -> Result<Self> {
        let n = q.nrows() as f64;
        let det = q.determinant();
        if !(det > 0.0) {
            return Err(Error::SingularMatrix);
        }
        let r = det.powf(0.5 / n);
        Self::new(sym_sqrt(q) / r, r)
    }

    /// The ellipsoid `X B` for any invertible `X`, as `sqrt(X Xᵀ) B`.
    pub fn from_linear_map(x: &Matrix) -> Result<Self> {
        Self::from_quadratic(&(x * x.transpose()))
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn t(&self) -> &Matrix {
        &self.t
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn with_radius(&self, r: f64) -> Self {
        Self { t: self.t.clone(), r }
    }

    /// The linear map `r T` taking the unit ball onto the ellipsoid.
    pub fn map(&self) -> Matrix {
        &self.t * self.r
    }

    /// `Q = r² T²`, so the ellipsoid is `{x : xᵀ Q^{-1} x <= 1}`.
    pub fn quadratic(&self) -> Matrix {
        &self.t * &self.t * (self.r * self.r)
    }

    pub fn volume(&self) -> f64 {
        let n = self.dim();
        self.t.determinant() * self.r.powi(n as i32) * unit_ball_volume(n)
    }

    pub fn gauge(&self, x: &[f64]) -> f64 {
        let tinv = sym_apply(&self.t, |l| 1.0 / l);
        (tinv * Vector::from_column_slice(x)).norm() / self.r
    }

    pub fn support(&self, u: &[f64]) -> f64 {
        (&self.t * Vector::from_column_slice(u)).norm() * self.r
    }

    /// Moves along the volume-preserving flow: `T' = sqrt(T exp(2ηA) T)`, so
    /// that `T'B = T e^{ηA} B` as sets.
    pub fn step(&self, dir: &TracelessDirection, eta: f64) -> Result<Self> {
        if dir.matrix().nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: dir.matrix().nrows(),
            });
        }
        let q = &self.t * sym_exp(&(dir.matrix() * (2.0 * eta))) * &self.t;
        let t = renormalize(&sym_sqrt(&symmetrize(&q)));
        Ok(Self { t, r: self.r })
    }

    /// `S E` for an invertible `S`; the radius absorbs `|det S|^{1/n}`.
    pub fn linear_image(&self, s: &Matrix) -> Result<Self> {
        Self::from_linear_map(&(s * self.map()))
    }

    /// Polar ellipsoid `(rT)^{-1} B`.
    pub fn polar(&self) -> Result<Self> {
        Self::from_linear_map(&inverse(&self.map())?)
    }

    /// Hausdorff distance `max_u |h_E(u) - h_F(u)|` between centered ellipsoids.
    pub fn hausdorff_distance(&self, other: &Ellipsoid) -> Result<f64> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let gap = |u: &[f64]| (self.support(u) - other.support(u)).abs();
        if self.dim() == 2 {
            let steps = 4096;
            let f = |th: f64| gap(&[th.cos(), th.sin()]);
            let h = PI / steps as f64;
            let (mut best, mut arg) = (0.0, 0.0);
            for k in 0..steps {
                let th = k as f64 * h;
                let val = f(th);
                if val > best {
                    best = val;
                    arg = th;
                }
            }
            // golden-section refinement around the best grid angle
            let (mut lo, mut hi) = (arg - h, arg + h);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let a = hi - g * (hi - lo);
                let b = lo + g * (hi - lo);
                if f(a) > f(b) {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            return Ok(best.max(f(0.5 * (lo + hi))));
        }
        let net = sphere_net(self.dim());
        Ok(net.iter().map(|u| gap(u.as_slice())).fold(0.0, f64::max))
    }
}

/// Deterministic directions: coordinate axes, all sign diagonals (for small n),
/// and a fixed-seed uniform sample.
pub(crate) fn sphere_net(n: usize) -> Vec<Vector> {
    let mut net = Vec::new();
    if n == 2 {
        let steps = 7200;
        for k in 0..steps {
            let th = k as f64 * 2.0 * PI / steps as f64;
            net.push(Vector::from_column_slice(&[th.cos(), th.sin()]));
        }
        return net;
    }
    for i in 0..n {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        net.push(e.clone());
        net.push(-e);
    }
    if n <= 10 {
        for mask in 0..(1u32 << n) {
            let d = Vector::from_fn(n, |i, _| if (mask >> i) & 1 == 1 { -1.0 } else { 1.0 });
            net.push(d / (n as f64).sqrt());
        }
    }
    let samples = 20_000;
    let chunks = rng::map_batches(samples, 0, rng::streams::NET, |r, len| {
        let mut buf = vec![0.0; n];
        (0..len)
            .map(|_| {
                rng::sphere_point(r, n, &mut buf);
                Vector::from_column_slice(&buf)
            })
            .collect::<Vec<_>>()
    });
    net.extend(chunks.into_iter().flatten());
    net
}

/// Inclusion relations between an ellipsoid and a body.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Containment {
    pub ellipsoid_in_body: bool,
    pub body_in_ellipsoid: bool,
    /// `false` when either answer came from a finite sphere net.
    pub exact: bool,
}

pub fn containment(e: &Ellipsoid, body: &SymmetricBody) -> Result<Containment> {
    if e.dim() != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            got: e.dim(),
        });
    }
    let tol = 1.0 + BOUNDARY_TOL;
    let map = e.map();
    let map_inv = inverse(&map)?;
    let (inside, inside_exact) = match body.shape() {
        Shape::Polytope(p) => (p.facet_normals().iter().all(|a| (&map * a).norm() <= tol), true),
        _ => {
            let ok = sphere_net(e.dim()).iter().all(|u| {
                let x = &map * u;
                body.gauge_unchecked(x.as_slice()) <= tol
            });
            (ok, false)
        }
    };
    let (outside, outside_exact) = match body.shape() {
        Shape::Polytope(p) => (p.hull_points().iter().all(|v| (&map_inv * v).norm() <= tol), true),
        Shape::HullBallPoints(h) => {
            let forward = body
                .frame()
                .map(|f| f.forward.clone())
                .unwrap_or_else(|| Matrix::identity(e.dim(), e.dim()));
            let m = &map_inv * &forward;
            let ball_ok = h.rho * crate::body::spectral_norm(&m) <= tol;
            let apex_ok = (&m * &h.apex).norm() <= tol;
            (ball_ok && apex_ok, true)
        }
        Shape::LpBall(_) => {
            let ok = sphere_net(e.dim()).iter().all(|u| {
                let g = body.gauge_unchecked(u.as_slice());
                (&map_inv * u).norm() / g <= tol
            });
            (ok, false)
        }
    };
    Ok(Containment {
        ellipsoid_in_body: inside,
        body_in_ellipsoid: outside,
        exact: inside_exact && outside_exact,
    })
}
