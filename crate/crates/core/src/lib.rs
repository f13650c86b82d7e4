//! Coverage probability and area spectral efficiency of dense small cell
//! networks with probabilistic line-of-sight propagation.

pub mod analytic;
pub mod ase;
pub mod case3gpp;
pub mod cli;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod quad;

pub use analytic::{CoveragePoint, CoverageProvider, DistancePdfSample, GeneralEngine, Method, Tolerances};
pub use ase::AsePoint;
pub use case3gpp::Case1Params;
pub use montecarlo::{McConfig, McEstimate, MonteCarloEngine};
pub use error::{Error, Result};
pub use model::{Branch, LosProbability, NetworkParams, PathLossModel, PathLossSegment, PowerLaw, Preset, Scenario};
