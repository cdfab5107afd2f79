//! Spin-noise simulation for an unpolarized alkali vapor probed by a focused
//! Gaussian beam in buffer gas.
//!
//! The crate is organised bottom-up:
//!
//! * [`physcore`]: constants, beam geometry, gas diffusion, spin bookkeeping
//!   and the integrated rotation-noise variance.
//! * [`corrfn`]: the diffusion time-correlation function (double-integral
//!   oracle, closed form, collimated and focused limits) and regime reporting.
//! * [`specfun`]: the complex exponential integral needed by the collimated
//!   lineshape.
//! * [`spectrum`]: Wiener-Khinchin transforms, analytic lineshapes and
//!   lineshape metrology.
//! * [`fitkit`]: damped least-squares recovery of lineshape parameters.
//!
//! All quantities are SI internally (m, s, Hz, K, Pa).

pub mod constants;
pub mod corrfn;
pub mod error;
pub mod fitkit;
pub mod grid;
pub mod physcore;
pub mod quad;
pub mod specfun;
pub mod spectrum;

pub use error::{Error, Result};
