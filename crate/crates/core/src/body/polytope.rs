//! Centrally symmetric polytopes stored by unsigned representatives.
//!
//! An H-polytope `{x : |<a_i, x>| <= 1}` keeps its rows as generators and
//! lazily enumerates its vertices; a V-polytope `conv{±v_i}` keeps its vertices
//! and lazily enumerates facet normals. Both enumerations are the same routine
//! because the facet normals of `conv{±v_i}` are the vertices of
//! `{w : |<v_i, w>| <= 1}`. Polarity swaps the representation tag and keeps
//! both lists.

use std::sync::OnceLock;

use nalgebra::SVD;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolytopeRep {
    H,
    V,
}

#[derive(Clone, Debug)]
pub struct Polytope {
    rep: PolytopeRep,
    dim: usize,
    generators: Vec<Vector>,
    dual: OnceLock<Vec<Vector>>,
}

const DEDUP_TOL: f64 = 1e-10;
const FEASIBILITY_TOL: f64 = 1e-9;

impl Polytope {
    pub fn new(rep: PolytopeRep, dim: usize, generators: Vec<Vector>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidBody("dimension must be at least 2".into()));
        }
        for g in &generators {
            if g.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: g.len(),
                });
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidBody("non-finite coordinate".into()));
            }
        }
        let generators = dedup_antipodal(generators.into_iter().filter(|g| g.norm() > 0.0));
        if rank(&generators, dim) < dim {
            let what = match rep {
                PolytopeRep::H => "rows do not span R^n (body is unbounded)",
                PolytopeRep::V => "vertices do not span R^n (body has empty interior)",
            };
            return Err(Error::InvalidBody(what.into()));
        }
        Ok(Self {
            rep,
            dim,
            generators,
            dual: OnceLock::new(),
        })
    }

    fn with_dual(rep: PolytopeRep, dim: usize, generators: Vec<Vector>, dual: Option<Vec<Vector>>) -> Self {
        let cell = OnceLock::new();
        if let Some(d) = dual {
            let _ = cell.set(d);
        }
        Self {
            rep,
            dim,
            generators,
            dual: cell,
        }
    }

    pub fn rep(&self) -> PolytopeRep {
        self.rep
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Rows (H) or vertices (V) as given, one representative per ± pair.
    pub fn generators(&self) -> &[Vector] {
        &self.generators
    }

    /// Vertices (H) or facet normals (V), one representative per ± pair.
    pub fn dual(&self) -> &[Vector] {
        self.dual.get_or_init(|| enumerate_vertices(&self.generators, self.dim))
    }

    /// Normals `a` with `K = {x : |<a, x>| <= 1}`; may include redundant rows.
    pub fn facet_normals(&self) -> &[Vector] {
        match self.rep {
            PolytopeRep::H => &self.generators,
            PolytopeRep::V => self.dual(),
        }
    }

    /// Points whose symmetric hull is `K`; may include non-extreme points for V input.
    pub fn hull_points(&self) -> &[Vector] {
        match self.rep {
            PolytopeRep::H => self.dual(),
            PolytopeRep::V => &self.generators,
        }
    }

    pub fn gauge(&self, x: &[f64]) -> f64 {
        max_abs_dot(self.facet_normals(), x)
    }

    pub fn support(&self, u: &[f64]) -> f64 {
        max_abs_dot(self.hull_points(), u)
    }

    pub fn linear_image(&self, t: &Matrix, t_inv: &Matrix) -> Self {
        let normal_map = t_inv.transpose();
        let map_normals = |v: &[Vector]| v.iter().map(|a| &normal_map * a).collect::<Vec<_>>();
        let map_points = |v: &[Vector]| v.iter().map(|p| t * p).collect::<Vec<_>>();
        let dual = self.dual.get();
        match self.rep {
            PolytopeRep::H => Self::with_dual(
                PolytopeRep::H,
                self.dim,
                map_normals(&self.generators),
                dual.map(|d| map_points(d)),
            ),
            PolytopeRep::V => Self::with_dual(
                PolytopeRep::V,
                self.dim,
                map_points(&self.generators),
                dual.map(|d| map_normals(d)),
            ),
        }
    }

    pub fn polar(&self) -> Self {
        let rep = match self.rep {
            PolytopeRep::H => PolytopeRep::V,
            PolytopeRep::V => PolytopeRep::H,
        };
        Self::with_dual(rep, self.dim, self.generators.clone(), self.dual.get().cloned())
    }

    /// Extreme points of `K`, one per ± pair.
    pub fn vertices(&self) -> Vec<Vector> {
        match self.rep {
            PolytopeRep::H => self.dual().to_vec(),
            PolytopeRep::V => enumerate_vertices(self.dual(), self.dim),
        }
    }

    /// Exact volume by recursive pyramid decomposition over the face lattice.
    pub fn volume(&self) -> f64 {
        let half = self.vertices();
        let mut points: Vec<Vector> = half.to_vec();
        points.extend(half.iter().map(|v| -v));
        let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let tol = 1e-9 * scale.max(1.0);

        let mut facets: Vec<Vec<usize>> = Vec::new();
        for a in self.facet_normals() {
            for sign in [1.0, -1.0] {
                let set: Vec<usize> = (0..points.len())
                    .filter(|&i| (sign * a.dot(&points[i]) - 1.0).abs() <= 1e-9 * a.norm().max(1.0) * scale.max(1.0))
                    .collect();
                if affine_dim(&points, &set, tol) + 1 == self.dim && !facets.contains(&set) {
                    facets.push(set);
                }
            }
        }
        let all: Vec<usize> = (0..points.len()).collect();
        face_volume(&points, &all, self.dim, &facets, tol)
    }
}

fn max_abs_dot(vectors: &[Vector], x: &[f64]) -> f64 {
    vectors
        .iter()
        .map(|a| a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

fn dedup_antipodal(items: impl IntoIterator<Item = Vector>) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::new();
    for v in items {
        let scale = v.norm().max(1.0);
        let dup = out
            .iter()
            .any(|w| (w - &v).norm() <= DEDUP_TOL * scale || (w + &v).norm() <= DEDUP_TOL * scale);
        if !dup {
            out.push(v);
        }
    }
    out
}

pub(crate) fn rank(vectors: &[Vector], dim: usize) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = Matrix::from_fn(vectors.len(), dim, |i, j| vectors[i][j]);
    let svd = SVD::new(m, false, false);
    let smax = svd.singular_values.max();
    svd.singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax.max(1e-300))
        .count()
}

fn affine_dim(points: &[Vector], set: &[usize], tol: f64) -> usize {
    if set.len() <= 1 {
        return 0;
    }
    let base = &points[set[0]];
    let diffs: Vec<Vector> = set[1..].iter().map(|&i| &points[i] - base).collect();
    let dim = base.len();
    let m = Matrix::from_fn(diffs.len(), dim, |i, j| diffs[i][j]);
    let svd = SVD::new(m, false, false);
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}

/// Distance from `c` to the affine hull of the given points.
fn distance_to_affine_hull(c: &Vector, points: &[Vector], set: &[usize], tol: f64) -> f64 {
    let base = &points[set[0]];
    let dim = base.len();
    let diffs: Vec<Vector> = set[1..].iter().map(|&i| &points[i] - base).collect();
    let rel = c - base;
    if diffs.is_empty() {
        return rel.norm();
    }
    let m = Matrix::from_fn(dim, diffs.len(), |i, j| diffs[j][i]);
    let svd = SVD::new(m, true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut proj = Vector::zeros(dim);
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > tol {
            let col = u.column(k);
            proj += col * col.dot(&rel);
        }
    }
    (rel - proj).norm()
}

fn face_volume(points: &[Vector], face: &[usize], d: usize, facets: &[Vec<usize>], tol: f64) -> f64 {
    if d == 0 {
        return 1.0;
    }
    if d == 1 {
        let mut best: f64 = 0.0;
        for (k, &i) in face.iter().enumerate() {
            for &j in &face[k + 1..] {
                best = best.max((&points[i] - &points[j]).norm());
            }
        }
        return best;
    }
    let mut centroid = Vector::zeros(points[0].len());
    for &i in face {
        centroid += &points[i];
    }
    centroid /= face.len() as f64;

    let mut subfaces: Vec<Vec<usize>> = Vec::new();
    for f in facets {
        let inter: Vec<usize> = face.iter().copied().filter(|i| f.contains(i)).collect();
        if inter.len() >= d
            && inter.len() < face.len()
            && affine_dim(points, &inter, tol) == d - 1
            && !subfaces.contains(&inter)
        {
            subfaces.push(inter);
        }
    }
    subfaces
        .iter()
        .map(|g| {
            let h = distance_to_affine_hull(&centroid, points, g, tol);
            h * face_volume(points, g, d - 1, facets, tol) / d as f64
        })
        .sum()
}

/// Vertices of `{x : |<g_i, x>| <= 1}` by brute force over `n`-subsets of the
/// generators and sign patterns. Intended for desk-scale inputs.
pub(crate) fn enumerate_vertices(generators: &[Vector], dim: usize) -> Vec<Vector> {
    let mut found: Vec<Vector> = Vec::new();
    let mut combo: Vec<usize> = (0..dim).collect();
    let m = generators.len();
    if m < dim {
        return found;
    }
    loop {
        let a = Matrix::from_fn(dim, dim, |i, j| generators[combo[i]][j]);
        let scale: f64 = combo.iter().map(|&i| generators[i].norm()).product();
        let det = a.determinant();
        if det.abs() > 1e-12 * scale.max(1e-300) {
            let lu = a.lu();
            for pattern in 0..(1usize << (dim - 1)) {
                let rhs = Vector::from_fn(dim, |i, _| {
                    if i == 0 || (pattern >> (i - 1)) & 1 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                });
                if let Some(x) = lu.solve(&rhs) {
                    let feasible = generators.iter().all(|g| g.dot(&x).abs() <= 1.0 + FEASIBILITY_TOL);
                    if feasible {
                        let s = x.norm().max(1.0);
                        let dup = found
                            .iter()
                            .any(|w| (w - &x).norm() <= 1e-9 * s || (w + &x).norm() <= 1e-9 * s);
                        if !dup {
                            found.push(x);
                        }
                    }
                }
            }
        }
        // next combination
        let mut i = dim;
        loop {
            if i == 0 {
                return found;
            }
            i -= 1;
            if combo[i] != i + m - dim {
                break;
            }
            if i == 0 {
                return found;
            }
        }
        combo[i] += 1;
        for j in i + 1..dim {
            combo[j] = combo[j - 1] + 1;
        }
    }
}
