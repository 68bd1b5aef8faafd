//! Federated-learning simulation core.
//!
//! This crate simulates parameter-server training with local SGD and three
//! aggregation rules:
//!
//! - `fedavg`: plain averaging of client model deltas,
//! - `drag`: divergence-based adaptive aggregation, which scores each client
//!   update by its angle against a momentum reference direction and drags it
//!   toward that direction before averaging,
//! - `drag_byzantine`: the robust variant, which derives the reference
//!   direction from a server-held root dataset and norm-normalizes every
//!   client update so that scaling or sign-flipping attackers cannot distort
//!   the aggregate.
//!
//! Everything is deterministic: every random draw comes from a ChaCha stream
//! keyed by `(seed, purpose, round, client)`, so a run is a pure function of
//! its [`simulator::ExperimentConfig`] regardless of thread scheduling.
//!
//! The crate is `no_std`-compatible (`alloc` required). Disable default
//! features and enable `libm` for builds without the standard library; the
//! `parallel` feature adds rayon-based client execution, and `serde` adds
//! serialization for config and record types.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("drag-core requires either the `std` feature or the `libm` feature");

pub mod aggregation;
pub mod attacks;
pub mod data;
mod error;
mod math;
pub mod models;
pub mod seeding;
pub mod simulator;
pub mod vecmath;

pub use error::{Error, Result};
pub use vecmath::ParamVector;
