//! Numerics for the parabolic Grushin equation on the sphere, written in the
//! latitude/longitude chart `(x, y) ∈ (-pi/2, pi/2) × [0, 2pi)` with measure
//! `cos x dx dy`.
//!
//! The longitude is always resolved analytically through Fourier modes `e^{iny}`;
//! each mode is a 1D degenerate parabolic problem on the latitude interval with
//! operator `L_n v = (1/cos x)(cos x v')' − n² tan² x v`, whose eigenfunctions are
//! normalized associated Legendre functions of `sin x`.

pub mod carleman;
pub mod error;
pub mod hardy;
pub mod hum;
pub mod legendre;
pub mod numerics;
pub mod observability;
pub mod spectral;
pub mod transforms;

pub use error::{Error, Result};
