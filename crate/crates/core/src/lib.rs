//! Codebook-based joint BS precoding and RIS phase design for multi-user
//! downlink over spatially correlated channels, with correlation-based
//! adaptive user grouping, a sub-surface refined-search baseline, and a
//! seeded Monte Carlo harness.
//!
//! The numerical core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`); the aliases below fix it to `f64`, which is what the
//! harness and the command-line tool use.

pub mod beamforming;
pub mod channel;
pub mod cmatrix;
pub mod codebook;
pub mod config;
pub mod error;
pub mod grouping;
pub mod harness;
pub mod output;
pub mod refine;
pub mod scalar;

pub use config::{LinkBudget, Overrides, ScenarioConfig};
pub use error::{Error, Result};
pub use grouping::GroupPartition;
pub use harness::{run_sweep, run_trial, Scheme, SweepParam, SweepRow, SweepSpec, SweepTable, TrialResult};
pub use scalar::Real;

pub type Complex = num_complex::Complex<f64>;
pub type Matrix = cmatrix::CMatrix<f64>;
pub type Channels = channel::ChannelRealization<f64>;
pub type Model = channel::ChannelModel<f64>;
pub type Candidate = codebook::ReflectionCandidate<f64>;
pub type Pair = beamforming::BeamformingPair<f64>;
pub type Correlation = grouping::CorrelationMatrix<f64>;
pub type Sim = harness::Simulator<f64>;

pub type Matrix32 = cmatrix::CMatrix<f32>;
pub type Sim32 = harness::Simulator<f32>;
