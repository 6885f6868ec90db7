//! Maximal intersection positions of symmetric convex bodies and Euclidean balls.

pub mod analysis;
pub mod body;
pub mod ellipsoid;
pub mod error;
pub mod landmarks;
pub mod linalg;
pub mod measure;
pub mod rng;
pub mod solver;

pub use body::{BodyKind, SymmetricBody};
pub use ellipsoid::{Ellipsoid, TracelessDirection};
pub use error::{Error, Result};
pub use measure::{Method, Side};
