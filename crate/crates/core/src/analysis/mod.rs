//! Radius profiles, limit measures at the John and Loewner ends, and the
//! log-concavity probe along diagonal flows.

mod bprobe;
mod limit;
mod profile;

pub use bprobe::{b_probe, uniform_grid, BProbeReport, MidpointResidual, Verdict};
pub use limit::{
    limit_measure, normalize, Cluster, LimitMeasureReport, LimitSide, LimitStep, Normalization,
    DEFAULT_CLUSTER_WINDOW_DEG,
};
pub use profile::{sweep, LandmarkRadii, Law, LawViolation, ProfileSample, RadiusProfile};
