//! Closed-form and Monte Carlo models of binary concentration shift keying
//! (CSK) over a diffusive molecular channel, and of Zebra-CSK, which
//! alternates two messenger types and pairs each emission with inhibitors of
//! the other type to suppress inter-symbol interference.
//!
//! * [`physics`]: Einstein relation and first-passage-time statistics.
//! * [`analytic`]: Gaussian count model, joint detection table, error
//!   probability, mutual information and capacity.
//! * [`simulator`]: particle-level Monte Carlo of symbol streams.
//! * [`experiments`]: calibration, threshold and distance sweeps, config
//!   files and CSV output.
//!
//! The guide under `book/` walks through each of these; its code listings are
//! compiled and run as doc-tests of this crate.

pub mod analytic;
pub mod experiments;
pub mod physics;
pub mod quadrature;
pub mod simulator;
pub mod stats;

pub use analytic::{ChannelParams, JointDistribution};
pub use physics::{LinkGeometry, MediumParams};
pub use simulator::SimConfig;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/first-passage.md")]
    mod first_passage {}
    #[doc = include_str!("../../../book/src/channel-model.md")]
    mod channel_model {}
    #[doc = include_str!("../../../book/src/capacity.md")]
    mod capacity {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
