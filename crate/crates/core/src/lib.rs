//! Weighted sum-rate maximization for MIMO interference networks with a
//! total power constraint.
//!
//! The crate provides:
//!
//! - [`dual_link`] — a fixed-point solver that alternates forward and reverse
//!   covariance updates through a closed-form transformation, with monotone
//!   convergence of the weighted sum-rate;
//! - [`baselines`] — the iterative polite water-filling and WMMSE solvers
//!   plus a projected-gradient oracle for multiaccess sum capacity;
//! - [`kkt`] — the Lagrangian of the equivalent problem, its gradients,
//!   multiplier extraction, scaling-invariance and saddle-point checks;
//! - [`whitening`] — colored-noise and weighted-power support by pre- and
//!   post-whitening;
//! - [`harness`] — deterministic random network generation, convergence
//!   traces, and a Monte-Carlo benchmark that reports mean iteration counts
//!   to reach a fraction of each run's converged value.
//!
//! All rates are in natural log (nats).

pub mod baselines;
pub mod dual_link;
pub mod error;
pub mod harness;
pub mod hermitian;
pub mod kkt;
pub mod network;
pub mod whitening;

pub use error::{Error, Result};
pub use hermitian::{CMat, HermitianPsd};
pub use network::{CovarianceSet, Direction, NetworkSpec};
