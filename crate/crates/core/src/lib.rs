//! Secure transmit beamforming for a monostatic ISAC base station.
//!
//! The base station serves `K` single-antenna users while illuminating a
//! target that may eavesdrop. Users receive the target's echo as a second
//! path, so they double as sensing receivers. The designer picks per-user
//! covariances and a dedicated sensing covariance to maximize the sum
//! secrecy rate under a sensing-SCNR floor, a sensing-security ceiling at
//! the users and a total power budget.
//!
//! * [`scenario`]: configuration, geometry, path loss and channel draws.
//! * [`metrics`]: SINR / SCNR / rate evaluation and beam patterns.
//! * [`conic`]: a small conic-program builder over a Clarabel backend.
//! * [`optimizer`]: the iterative convex-approximation design and baselines.
//! * [`experiments`]: Monte Carlo sweeps with CSV + manifest output.
//! * [`validate`]: self checks against independent evaluations.

// links the system BLAS/LAPACK used by the PSD cones
extern crate openblas_src;

pub mod conic;
pub mod experiments;
pub mod linalg;
pub mod metrics;
pub mod optimizer;
pub mod scenario;
pub mod validate;

pub use conic::{ConeProgram, ConeSolution, SolveStatus, SolverSettings};
pub use experiments::{ExperimentError, ResultRow, Scheme, SweepSpec};
pub use linalg::{CMat, CVec};
pub use metrics::{BeamPattern, BeamformingSolution, MetricsError, MetricsReport, TraceRecord};
pub use optimizer::{run_secure_design, DesignOptions, OptimizerError, SensingDesign};
pub use scenario::{ChannelRealization, ConfigError, ScenarioFile, SystemConfig};
