//! Named bodies used by the CLI and the test suites.

use super::{Exponent, SymmetricBody};
use crate::error::{Error, Result};
use crate::linalg::Vector;

pub const PRESET_NAMES: &[&str] = &[
    "square",
    "cube3",
    "crosspoly3",
    "rect-2-1",
    "remark14",
    "hexagon",
    "disc",
];

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

/// `[-1, 1]^2`.
pub fn square() -> SymmetricBody {
    SymmetricBody::polytope_h(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]).expect("valid preset")
}

/// `[-1, 1]^3`.
pub fn cube3() -> SymmetricBody {
    SymmetricBody::polytope_h(vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0])])
        .expect("valid preset")
}

/// `conv{±e_1, ±e_2, ±e_3}`.
pub fn crosspoly3() -> SymmetricBody {
    SymmetricBody::polytope_v(vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0])])
        .expect("valid preset")
}

/// `[-2, 2] × [-1, 1]`.
pub fn rect_2_1() -> SymmetricBody {
    SymmetricBody::polytope_h(vec![v(&[0.5, 0.0]), v(&[0.0, 1.0])]).expect("valid preset")
}

/// `conv(B_2^2 ∪ {±(√2, 0)})`, which is in John position and touches the
/// unit circle along two arcs.
pub fn remark14() -> SymmetricBody {
    SymmetricBody::hull_ball_points(1.0, v(&[2f64.sqrt(), 0.0])).expect("valid preset")
}

/// Regular hexagon with inradius 1.
pub fn hexagon() -> SymmetricBody {
    let rows = (0..3)
        .map(|k| {
            let th = k as f64 * std::f64::consts::PI / 3.0;
            v(&[th.cos(), th.sin()])
        })
        .collect();
    SymmetricBody::polytope_h(rows).expect("valid preset")
}

/// Unit disc as the `ℓ_2` ball.
pub fn disc() -> SymmetricBody {
    SymmetricBody::lp_ball(2, Exponent::Finite(2.0), 1.0).expect("valid preset")
}

pub fn by_name(name: &str) -> Result<SymmetricBody> {
    Ok(match name {
        "square" => square(),
        "cube3" => cube3(),
        "crosspoly3" => crosspoly3(),
        "rect-2-1" => rect_2_1(),
        "remark14" => remark14(),
        "hexagon" => hexagon(),
        "disc" => disc(),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown preset `{other}` (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        for name in PRESET_NAMES {
            assert!(by_name(name).is_ok(), "{name}");
        }
        assert!(by_name("dodecahedron").is_err());
    }
}
