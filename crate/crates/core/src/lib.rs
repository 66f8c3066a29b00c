//! Probabilities of maxima threshold events `A_n = {M_n <= x_n}` and the
//! Borel-Cantelli type criteria that decide `P(A_n i.o.)`.
//!
//! The math is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`, with `*F32` variants for single
//! precision.
//!
//! ```
//! use maxima_bc::{Distribution, EventFamily, ThresholdSequence, TransformFamily};
//!
//! let fam = EventFamily::new(
//!     Distribution::uniform01(),
//!     ThresholdSequence::from_transform(TransformFamily::Power, 0.9).unwrap(),
//! );
//! // P(M_n^(n / ln n) <= 0.9) = 0.9^(ln n)
//! let p = fam.log_p_event(100).unwrap().exp();
//! assert!((p - 0.9f64.powf(100f64.ln())).abs() < 1e-12);
//! ```

pub mod criteria;
pub mod distributions;
pub mod error;
pub mod event_engine;
pub mod numerics;
pub mod rng;
mod scalar;
pub mod simulator;
pub mod transforms;

pub use error::{Error, Result};
pub use scalar::Real;

pub use distributions::{Family, RightEndpoint};
pub use event_engine::{prob_max_le, RunTerm, ThresholdSource};
pub use rng::RngStream;
pub use simulator::{OracleEstimate, QueryWindow};
pub use transforms::thresholds_from_transform;

pub type Distribution = distributions::Distribution<f64>;
pub type ThresholdSequence = event_engine::ThresholdSequence<f64>;
pub type TransformFamily = transforms::TransformFamily<f64>;
pub type IndexSequence = transforms::IndexSequence<f64>;
pub type EventFamily = event_engine::EventFamily<f64>;
pub type SimulationConfig = simulator::SimulationConfig<f64>;
pub type TrajectoryBatch = simulator::TrajectoryBatch<f64>;

pub type DistributionF32 = distributions::Distribution<f32>;
pub type ThresholdSequenceF32 = event_engine::ThresholdSequence<f32>;
pub type TransformFamilyF32 = transforms::TransformFamily<f32>;
pub type EventFamilyF32 = event_engine::EventFamily<f32>;
pub type SimulationConfigF32 = simulator::SimulationConfig<f32>;
pub type TrajectoryBatchF32 = simulator::TrajectoryBatch<f32>;
