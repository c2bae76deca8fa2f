//! Spectral simulator for the renormalized fractional parabolic Anderson model
//!
//! ```text
//! ∂_t u_ε = Λu_ε + (ξ_ε − C_ε)u_ε,   Λ = −(−Δ)^{1/2},
//! ```
//!
//! on a periodic one-dimensional grid, together with the exponential change of
//! variables `u_ε = e^{S_ε}v_ε` and the estimators used to check convergence
//! as the mollification scale ε goes to zero.

pub mod analysis;
pub mod coefficients;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod noise;
pub mod quad;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{GridFunction, GridSpec, SpectralFunction};
