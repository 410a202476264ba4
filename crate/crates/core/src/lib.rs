//! Degrees-of-freedom machinery for the K-user interference channel with
//! coordinated multi-point (CoMP) transmission and reception.
//!
//! Each message `k` is sent jointly by the transmitters `k, k+1, .., k+Mt-1`
//! and decoded jointly from the receivers `k, k+1, .., k+Mr-1` (indices wrap
//! modulo `K`). The crate provides:
//!
//! - [`channel`]: index arithmetic, cooperation sets, seeded channel sampling.
//! - [`bounds`]: exact rational DoF outer bounds and reference values.
//! - [`algebra`]: numeric Jacobians, rank oracles and algebraic-independence
//!   tests.
//! - [`smd`]: structural matrix decomposition and full-DoF beam design.
//! - [`closed_form`]: the closed-form alignment for `Mt = K-1`, `Mr = 2`.
//! - [`derived`]: zero-forcing transforms to derived cellular-uplink channels.
//! - [`cj`]: Cadambe-Jafar alignment subspaces and decodability checks.
//! - [`simulator`]: Monte-Carlo sum-rate sweeps and DoF slope estimation.
//!
//! User indices are 1-based at every public interface.

pub mod algebra;
pub mod bounds;
pub mod channel;
pub mod cj;
pub mod closed_form;
pub mod derived;
mod error;
pub mod linalg;
pub mod rational;
pub mod rng;
pub mod simulator;
pub mod smd;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use rational::Rational;
