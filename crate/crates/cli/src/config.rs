use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use maxint_core::analysis::{LimitSide, DEFAULT_CLUSTER_WINDOW_DEG};
use maxint_core::body::{presets, BodySpec};
use maxint_core::measure::{Side, MIN_SAMPLES};
use maxint_core::solver::SolveOptions;
use maxint_core::{Method, SymmetricBody};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "maxint",
    version,
    about = "Maximal intersection positions of symmetric convex bodies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Maximal intersection position at one radius.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        r: f64,
        /// Extra seeded random starts besides the identity.
        #[arg(long, default_value_t = 0)]
        multistart: usize,
    },
    /// The profile r ↦ m(r) over a list of radii.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
    },
    /// John and Loewner ellipsoids, landmark radii and the M-position certificate.
    Landmarks {
        #[command(flatten)]
        common: Common,
    },
    /// Limit measures as r approaches the John or Loewner radius.
    Limit {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        side: SideArg,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        /// Angular merge window for clusters, in degrees.
        #[arg(long, default_value_t = DEFAULT_CLUSTER_WINDOW_DEG)]
        cluster_window: f64,
    },
    /// Log-concavity probe of t ↦ Vol(e^{tΛ}K ∩ B).
    Bprobe {
        #[command(flatten)]
        common: Common,
        /// Diagonal of Λ, comma separated, zero sum.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        lambda: Vec<f64>,
        #[arg(long, default_value_t = -0.6, allow_hyphen_values = true)]
        t_min: f64,
        #[arg(long, default_value_t = 0.6, allow_hyphen_values = true)]
        t_max: f64,
        #[arg(long, default_value_t = 0.05)]
        t_step: f64,
    },
    /// Moment matrix and isotropy residual of the sphere restricted to r^{-1}K.
    Isotropy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        r: f64,
        #[arg(long, value_enum, default_value_t = RegionArg::Inside)]
        region: RegionArg,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Solve { common, .. }
            | Command::Sweep { common, .. }
            | Command::Landmarks { common }
            | Command::Limit { common, .. }
            | Command::Bprobe { common, .. }
            | Command::Isotropy { common, .. } => common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::Sweep { .. } => "sweep",
            Command::Landmarks { .. } => "landmarks",
            Command::Limit { .. } => "limit",
            Command::Bprobe { .. } => "bprobe",
            Command::Isotropy { .. } => "isotropy",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Named body: square, cube3, crosspoly3, rect-2-1, remark14, hexagon, disc.
    #[arg(long, conflicts_with = "body", required_unless_present = "body")]
    pub preset: Option<String>,
    /// Body JSON, inline or as a file path.
    #[arg(long)]
    pub body: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1e-7)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    #[arg(long, default_value = "maxint-out")]
    pub out_dir: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    #[value(name = "exact-2d")]
    Exact2d,
    Mc,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SideArg {
    John,
    Loewner,
}

impl From<SideArg> for LimitSide {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::John => LimitSide::John,
            SideArg::Loewner => LimitSide::Loewner,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionArg {
    Inside,
    Outside,
    Contact,
}

impl From<RegionArg> for Side {
    fn from(s: RegionArg) -> Self {
        match s {
            RegionArg::Inside => Side::Inside,
            RegionArg::Outside => Side::Outside,
            RegionArg::Contact => Side::Contact,
        }
    }
}

/// Where the body came from.
#[derive(Serialize, Debug, Clone)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum BodySource {
    Preset(String),
    Inline(String),
    File(String),
}

/// Fully resolved run configuration, embedded in every artifact.
#[derive(Serialize, Debug, Clone)]
pub struct RunConfig {
    pub command: String,
    pub body_source: BodySource,
    pub body: BodySpec,
    pub method: Option<Method>,
    pub solver: SolveOptions,
    pub out_dir: String,
    pub parameters: serde_json::Value,
}

pub fn load_body(common: &Common) -> Result<(SymmetricBody, BodySource)> {
    if let Some(name) = &common.preset {
        let body = presets::by_name(name)?;
        return Ok((body, BodySource::Preset(name.clone())));
    }
    let raw = common
        .body
        .as_deref()
        .context("either --preset or --body is required")?;
    if raw.trim_start().starts_with('{') {
        let body = SymmetricBody::from_json(raw).context("malformed body JSON")?;
        Ok((body, BodySource::Inline(raw.to_string())))
    } else {
        let text = std::fs::read_to_string(raw).with_context(|| format!("cannot read body file `{raw}`"))?;
        let body = SymmetricBody::from_json(&text).with_context(|| format!("malformed body JSON in `{raw}`"))?;
        Ok((body, BodySource::File(raw.to_string())))
    }
}

/// Exact-2d by default in the plane; Monte Carlo must be asked for and seeded.
pub fn resolve_method(common: &Common, dim: usize) -> Result<Option<Method>> {
    match common.method {
        Some(MethodArg::Exact2d) => {
            if dim != 2 {
                bail!("exact-2d needs a planar body, this one has dimension {dim}");
            }
            Ok(Some(Method::Exact2d))
        }
        Some(MethodArg::Mc) => {
            let seed = common.seed.context("--seed is mandatory with --method mc")?;
            if common.mc_samples < MIN_SAMPLES {
                bail!("--mc-samples must be at least {MIN_SAMPLES}");
            }
            Ok(Some(Method::MonteCarlo {
                samples: common.mc_samples,
                seed,
            }))
        }
        None if dim == 2 => Ok(Some(Method::Exact2d)),
        None => Ok(None),
    }
}

pub fn require_method(method: Option<Method>) -> Result<Method> {
    method.context("bodies of dimension 3 or more need --method mc --seed <S>")
}

pub fn solver_options(common: &Common, method: Option<Method>) -> Result<SolveOptions> {
    if !(common.grad_tol > 0.0) {
        bail!("--grad-tol must be positive");
    }
    Ok(SolveOptions {
        grad_tol: common.grad_tol,
        max_iter: common.max_iter,
        method: method.unwrap_or(Method::Exact2d),
        ..Default::default()
    })
}
