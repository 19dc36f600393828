//! Spectral-Galerkin simulation of the damped stochastic wave equation
//! `nu u_tt + u_t = u_xx + f(u) + nu^alpha dW/dt` on `(0, L)` with Dirichlet
//! boundaries, its three-part velocity splitting, and its small-`nu` limits:
//! the stochastic heat equation (`alpha < 1`) and the deterministic damped
//! wave equation (`alpha > 1`).

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod noise;
pub mod spectral;

pub use error::{Error, Result};
