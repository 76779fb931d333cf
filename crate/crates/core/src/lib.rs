//! Cooperative multi-agent gridworlds with quantitative control over the
//! coordination level (how many agents must act together to earn a reward)
//! and the heterogeneity level (how many distinct transition functions are
//! active, selected by the zone an agent stands in).
//!
//! The crate is organised bottom-up:
//!
//! * [`config`] and [`grid`] hold the world representation, procedural
//!   generation and zone-dependent movement.
//! * [`tasks`] implements the three collection rules and the shared reward.
//! * [`obs`] renders egocentric image observations.
//! * [`vecenv`] steps batches of independent environments in lockstep.
//! * [`verify`] contains executable oracles for the coordination and
//!   heterogeneity definitions, reward decomposition, and log replay.
//! * [`wire`] is the external boundary: frame protocol, server, client and
//!   episode-log files. [`ffi`] exposes the same batch API over a C ABI.

pub mod config;
pub mod error;
pub mod ffi;
pub mod grid;
pub mod obs;
pub mod policy;
pub mod seed;
pub mod tasks;
pub mod vecenv;
pub mod verify;
pub mod wire;

pub use config::{EnvConfig, Task};
pub use error::{Error, Result};
pub use grid::{Action, Orientation, Pos, TransitionTable, WorldState};
pub use vecenv::{Batch, Env, StepResult};
