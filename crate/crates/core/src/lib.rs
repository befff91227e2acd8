//! Covariance-matrix simulator for continuous-variable Gaussian states and
//! channels, built around an attenuation channel that becomes
//! entanglement-breaking when a squeezing filter is interposed between two
//! uses, but not otherwise.
//!
//! Quadratures are ordered `(q1, p1, q2, p2, ...)` and the vacuum has
//! variance 1/2, so the PPT entanglement threshold on the squared minimum
//! symplectic eigenvalue of the partially transposed state is 1/4.

pub mod channel;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod sampling;
pub mod symplectic;
pub mod uncertainty;
pub mod witness;

pub use channel::GaussianChannel;
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, GridSpec, PointResult, SweepResult, Variant};
pub use symplectic::{CovMatrix, SymplecticTransform};
pub use uncertainty::{Classification, ConfidenceVerdict, Propagation, UncertaintyModel};
pub use witness::WitnessValue;
