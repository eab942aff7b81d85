//! Simulation core for round-robin differential-phase-shift (RRDPS) quantum
//! key distribution with an untrusted measurement device.
//!
//! The crate is `no_std` (it needs `alloc`) and contains no IO. Everything is
//! deterministic given an explicit random source or master seed; the
//! `rrdps-lab` crate wraps it with a CLI, file formats and a thread pool.
//!
//! Pulse indices are 1-based throughout the public API.

#![no_std]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod analysis;
pub mod attack1;
pub mod attack2;
mod error;
pub mod graph;
pub mod protocol;
pub mod security;
pub mod seeding;
pub mod stats;

pub use error::{Error, Result};
