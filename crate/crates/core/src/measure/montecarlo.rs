use serde::{Deserialize, Serialize};

use super::{sphere_area, Estimate, MeasureSupport, RestrictedSphereMeasure, Side, TangencyDegeneracy};
use crate::body::{SymmetricBody, BOUNDARY_TOL};
use crate::ellipsoid::Ellipsoid;
use crate::linalg::Matrix;
use crate::rng::{self, streams};

/// Seeded uniform sample of the unit sphere with region flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereSample {
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    /// Row-major `samples × dim`.
    pub points: Vec<f64>,
    pub included: Vec<bool>,
    /// Samples whose scaled image lies on the boundary within the global tolerance.
    pub boundary_hits: usize,
}

impl SphereSample {
    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn included_points(&self) -> impl Iterator<Item = &[f64]> {
        self.included
            .iter()
            .enumerate()
            .filter(|(_, inc)| **inc)
            .map(move |(k, _)| self.point(k))
    }

    pub fn fraction(&self) -> f64 {
        self.included.iter().filter(|x| **x).count() as f64 / self.samples as f64
    }

    /// `σ(S^{n-1}) · mean(1_A x xᵀ)`, so that `tr M` equals the mass estimate.
    pub fn moment(&self) -> Matrix {
        let n = self.dim;
        let mut m = Matrix::zeros(n, n);
        for x in self.included_points() {
            for i in 0..n {
                for j in i..n {
                    m[(i, j)] += x[i] * x[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                m[(i, j)] = m[(j, i)];
            }
        }
        m * (sphere_area(n) / self.samples as f64)
    }

    /// Frobenius standard error of the traceless part of [`Self::moment`].
    pub fn traceless_moment_std_error(&self) -> f64 {
        let n = self.dim;
        let big_n = self.samples as f64;
        let inv_n = 1.0 / n as f64;
        let mut sum = Matrix::zeros(n, n);
        let mut sum_sq = Matrix::zeros(n, n);
        for x in self.included_points() {
            for i in 0..n {
                for j in 0..n {
                    let mut y = x[i] * x[j];
                    if i == j {
                        y -= inv_n;
                    }
                    sum[(i, j)] += y;
                    sum_sq[(i, j)] += y * y;
                }
            }
        }
        let sigma = sphere_area(n);
        let mut var = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mean = sum[(i, j)] / big_n;
                let second = sum_sq[(i, j)] / big_n;
                var += (second - mean * mean).max(0.0) / big_n;
            }
        }
        sigma * var.sqrt()
    }
}

/// `Vol(E) · hits / N` with ball samples mapped onto the ellipsoid.
pub(super) fn intersection_volume(body: &SymmetricBody, e: &Ellipsoid, samples: usize, seed: u64) -> Estimate {
    let n = body.dim();
    let map = e.map();
    let hits: usize = rng::map_batches(samples, seed, streams::BALL, |r, len| {
        let mut buf = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut count = 0usize;
        for _ in 0..len {
            rng::ball_point(r, n, &mut buf);
            mat_vec(&map, &buf, &mut y);
            if body.gauge_unchecked(&y) <= 1.0 {
                count += 1;
            }
        }
        count
    })
    .into_iter()
    .sum();
    let vol = e.volume();
    let p = hits as f64 / samples as f64;
    Estimate {
        value: vol * p,
        std_error: vol * (p * (1.0 - p) / samples as f64).sqrt(),
    }
}

pub(super) fn restricted_measure(
    body: &SymmetricBody,
    e: &Ellipsoid,
    side: Side,
    samples: usize,
    seed: u64,
) -> RestrictedSphereMeasure {
    let n = body.dim();
    let map = e.map();
    let batches = rng::map_batches(samples, seed, streams::SPHERE, |r, len| {
        let mut pts = vec![0.0; len * n];
        let mut flags = Vec::with_capacity(len);
        let mut boundary = 0usize;
        let mut y = vec![0.0; n];
        for k in 0..len {
            let x = &mut pts[k * n..(k + 1) * n];
            rng::sphere_point(r, n, x);
            mat_vec(&map, x, &mut y);
            let g = body.gauge_unchecked(&y);
            if (g - 1.0).abs() <= BOUNDARY_TOL {
                boundary += 1;
            }
            let inside = g <= 1.0 + BOUNDARY_TOL;
            flags.push(match side {
                Side::Inside => inside,
                _ => !inside,
            });
        }
        (pts, flags, boundary)
    });
    let mut points = Vec::with_capacity(samples * n);
    let mut included = Vec::with_capacity(samples);
    let mut boundary_hits = 0;
    for (p, f, b) in batches {
        points.extend(p);
        included.extend(f);
        boundary_hits += b;
    }
    let sample = SphereSample {
        dim: n,
        samples,
        seed,
        points,
        included,
        boundary_hits,
    };
    let frac = sample.fraction();
    let sigma = sphere_area(n);
    let degeneracy = (boundary_hits > 0).then(|| {
        let mass = sigma * boundary_hits as f64 / samples as f64;
        TangencyDegeneracy {
            contact_mass: mass,
            contact_arcs: Vec::new(),
            message: format!(
                "tangency degeneracy: {boundary_hits} of {samples} sphere samples lie on the boundary; \
                 isotropy at a maximal position is not guaranteed"
            ),
        }
    });
    RestrictedSphereMeasure {
        dim: n,
        radius: e.r(),
        side,
        mass: Estimate {
            value: sigma * frac,
            std_error: sigma * (frac * (1.0 - frac) / samples as f64).sqrt(),
        },
        support: MeasureSupport::Samples(sample),
        degeneracy,
    }
}

fn mat_vec(m: &Matrix, x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for (i, o) in out.iter_mut().enumerate().take(n) {
        let mut acc = 0.0;
        for (j, xj) in x.iter().enumerate() {
            acc += m[(i, j)] * xj;
        }
        *o = acc;
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::body::presets::{cube3, square};
    use crate::measure::{intersection_volume as volume, moment_report, restricted_measure as measure, Method};

    #[test]
    fn mc_volume_matches_exact_square() {
        let e = Ellipsoid::ball(2, 1.2);
        let exact = volume(&square(), &e, Method::Exact2d).unwrap().value;
        let mc = volume(
            &square(),
            &e,
            Method::MonteCarlo {
                samples: 200_000,
                seed: 11,
            },
        )
        .unwrap();
        assert!((mc.value - exact).abs() < 4.0 * mc.std_error);
    }

    #[test]
    fn trace_equals_mass() {
        let m = measure(
            &cube3(),
            1.3,
            Side::Inside,
            Method::MonteCarlo {
                samples: 50_000,
                seed: 5,
            },
        )
        .unwrap();
        let rep = moment_report(&m).unwrap();
        assert!((rep.moment.trace() - rep.mass).abs() < 1e-9 * rep.mass);
    }

    #[test]
    fn full_sphere_moment_is_isotropic_within_noise() {
        let m = measure(
            &cube3(),
            0.5,
            Side::Inside,
            Method::MonteCarlo {
                samples: 100_000,
                seed: 2,
            },
        )
        .unwrap();
        assert!((m.mass.value - 4.0 * PI).abs() < 1e-9);
        let rep = moment_report(&m).unwrap();
        assert!(rep.residual < 0.01);
    }

    #[test]
    fn same_seed_same_sample() {
        let a = measure(
            &cube3(),
            1.2,
            Side::Outside,
            Method::MonteCarlo {
                samples: 9000,
                seed: 77,
            },
        )
        .unwrap();
        let b = measure(
            &cube3(),
            1.2,
            Side::Outside,
            Method::MonteCarlo {
                samples: 9000,
                seed: 77,
            },
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
