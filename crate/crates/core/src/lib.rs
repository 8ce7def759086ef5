//! Data-driven iterative learning control for lifted MIMO systems.
//!
//! The plant is only reachable through [`plant::PlantOracle`], which counts
//! every experiment. On top of it the crate provides gradient estimators
//! built from time-reversed experiments ([`gradient`]), the stochastic and
//! deterministic conjugate-gradient and gradient-descent iterations
//! ([`solvers`]), and a benchmark harness that writes CSV traces and SVG
//! plots ([`bench`], [`plot`]).

pub mod bench;
pub mod error;
pub mod gradient;
pub mod lifted;
pub mod plant;
pub mod plot;
pub mod rng;
pub mod signal;
pub mod solvers;
pub mod sysgen;
pub mod trace;

pub use error::{IlcError, Result};
pub use lifted::{lift, LiftedSystem, StateSpace, SystemFile};
pub use plant::{NoiseKind, NoiseModel, PlantOracle};
pub use signal::{time_reverse, Signal, Space, TimeReversal};
pub use solvers::{SolverConfig, SolverKind, StepMode};
pub use trace::{IterationRecord, RunTrace, StopReason};
