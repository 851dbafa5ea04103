//! Monte-Carlo peeling of critical Boltzmann planar maps with Cauchy-type perimeter walks.

pub mod eden;
pub mod error;
pub mod estimators;
pub mod harmonic;
pub mod kernel;
pub mod layers;
pub mod peel;
pub mod perco;
pub mod quad;
pub mod replica;
pub mod report;
pub mod sampling;
pub mod step_law;
pub mod walk_lab;

pub use error::{Error, Result};
pub use harmonic::{h_up, HarmonicTable};
pub use kernel::{kernel_conditioned, kernel_finite, kernel_halfplane, FiniteEvent, PeelEvent};
pub use peel::{Engine, ExplorationState, FillResult, Mode, Trajectory};
pub use replica::{run_replica_range, run_replicas};
pub use report::{Estimate, Gate, Report};
pub use sampling::{sample_exponential, KernelSampler, NuSampler, RngStream};
pub use step_law::{calibrate, calibrate_bracket, validate, StepLaw, ValidationReport};
