//! Soft guessing under log-loss distortion with errors allowed.
//!
//! A guesser probes a source symbol with a sequence of soft reconstructions
//! (probability vectors); a probe succeeds once the true symbol's log-loss
//! under the current reconstruction is within a distortion budget `D`, and
//! before each probe the guesser may give up with a per-step stop
//! probability. This crate computes everything that setting needs at desk
//! scale:
//!
//! - [`dist`]: validated PMFs, joints, and type-class representations of
//!   i.i.d. products;
//! - [`entropy`]: Rényi and smooth Rényi entropies (closed form plus an
//!   independent vertex-enumeration oracle), source statistics, and the
//!   inverse Gaussian CDF;
//! - [`guessing`]: strategies, admissibility, exact evaluation, and a
//!   seeded Monte Carlo simulator;
//! - [`construct`]: the near-optimal block construction and a brute-force
//!   search for the exact optimum on small alphabets;
//! - [`bounds`]: one-shot lower/upper cost bounds in terms of smooth Rényi
//!   entropy, and second-order asymptotic evaluation for memoryless
//!   sources.
//!
//! Everything is pure and immutable after construction; all log/entropy
//! quantities are in bits.

pub mod bounds;
pub mod construct;
pub mod dist;
pub mod entropy;
mod error;
pub mod guessing;

pub use error::{Error, Result};
