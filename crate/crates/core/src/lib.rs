//! Simulation library for planar Poisson last-passage percolation (LPP) and
//! the Hammersley interacting fluid system.
//!
//! The crate is organised around the objects of the model:
//!
//! * [`points`] — seeded sampling of compound Poisson point clouds and
//!   one-dimensional atomic measures (sources, sinks, fluid states).
//! * [`lpp`] — passage values, lowest geodesics, boundary variants with
//!   sources and sinks, exit points and the shape function.
//! * [`fluid`] — event-driven simulation of the interacting fluid system,
//!   including the sources-and-sinks box with entry/exit ledgers.
//! * [`busemann`] — Monte Carlo estimation of Busemann functions through
//!   geodesic coalescence, equilibrium intensity checks and multi-class
//!   ordered sampling.
//! * [`particles`] — second-class particle tracking and rarefaction-fan
//!   speed laws with closed-form evaluators.
//! * [`fluctuations`] — variance/covariance identities, CLT checks off the
//!   characteristic direction, cube-root exponent fits and shape-constant
//!   estimation.
//! * [`stats`] — the statistical testing primitives (KS, independence,
//!   chi-square, log-log fits) used by the experiment harness.
//!
//! Everything is deterministic: any sampled object is a pure function of its
//! parameters and a `u64` seed, and replicated experiments derive one
//! independent stream per replica index, so results do not depend on thread
//! count.

pub mod busemann;
mod error;
mod fenwick;
pub mod fluctuations;
pub mod fluid;
pub mod lpp;
pub mod particles;
pub mod points;
pub mod seeding;
pub mod stats;

pub use error::{Error, Result};
pub use points::{AtomicMeasure, Point, Rect, Side, WeightDistribution, WeightedPointSet};

pub use busemann::{BusemannEstimate, DirectionAngle};
pub use fluid::FluidState;
pub use lpp::{PassagePath, PassageResult, SourcesSinks};
pub use particles::{BoundaryLaw, RarefactionConfig, SpeedCdf};
pub use fluctuations::MomentSummary;
pub use stats::{ExponentFit, TestResult};
