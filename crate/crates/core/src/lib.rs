//! Desk-scale simulator of annealing computation over reversible Boolean
//! networks whose wiring is enforced by particle-statistics projectors.
//!
//! Three regimes are implemented and contrasted:
//!
//! - [`classical`]: plain simulated annealing over the coin-flip energy
//!   landscape (the baseline),
//! - [`oneway`]: conventional forward propagation, where repeated
//!   projection after each infinitesimal rotation freezes the state (the
//!   watchdog effect) and relaxation only proceeds through lucky bath
//!   kicks — statistically no better than the classical baseline,
//! - [`twoway`]: propagation driven jointly by initial and final
//!   conditions, where each step produces the free normalized state that
//!   satisfies the wiring projectors at a prescribed energy with maximal
//!   overlap to its predecessor — so every element relaxes as if
//!   independent and frustration never appears.
//!
//! [`network`] holds the Boolean-network model and brute-force oracles,
//! [`netlang`] the text formats and the CNF compiler, [`hilbert`] the
//! dense state-vector kernel, and [`particle`] the two-fermion picture of
//! a single link that justifies the wiring projector.

pub mod classical;
pub mod config;
pub mod hilbert;
pub mod netlang;
pub mod network;
pub mod oneway;
pub mod particle;
pub mod trace;
pub mod twoway;

pub use config::EngineConfig;
pub use network::{Assignment, Network};
pub use trace::{EngineOutcome, RelaxationTrace, RunVerdict, TraceRow};
