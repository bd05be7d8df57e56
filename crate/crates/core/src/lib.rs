//! Robust target localization under non-negative NLOS range bias.
//!
//! An agent carrying RTT ranging and AoA sensing searches for a static target.
//! Range measurements in non-line-of-sight conditions carry a positive bias;
//! the estimator models that with a one-sided Huber loss whose linear branch
//! only engages for positive residuals, and whose soft threshold recovers the
//! bias itself.
//!
//! Modules:
//!
//! - [`geometry`]: poses, measurement models and Jacobians
//! - [`robust_loss`]: one-sided and symmetric Huber losses, EM rate update
//! - [`filters`]: iterated robust EKF over position and systematic offsets
//! - [`ercm`]: effective robust curvature matrix and bilateral information
//! - [`planners`]: passive lawnmower, reactive crossing, FIM E-optimal
//! - [`sim_env`]: channel model, presets, obstacle shadowing
//! - [`experiment`]: Monte Carlo grids, sweeps, CSV output
//! - [`config`]: TOML experiment configuration
//!
//! Runnable walkthroughs live in `examples/`; `nlos-localize run|sweep` is the
//! command-line front end.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod ercm;
pub mod error;
pub mod experiment;
pub mod filters;
pub mod geometry;
pub mod planners;
pub mod robust_loss;
pub mod sim_env;

pub use config::{parse_config, ExperimentConfig};
pub use error::{Error, Result};
pub use experiment::{run_grid, run_single, sweep, GridSpec, RunMetrics, SimSettings};
pub use filters::{FilterConfig, FilterKind, RobustEkf};
pub use geometry::{Modality, Pose2, TargetPosition};
pub use planners::{PlannerConfig, PlannerKind};
pub use robust_loss::LossSpec;
pub use sim_env::Scenario;
