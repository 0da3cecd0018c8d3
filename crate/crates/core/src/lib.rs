//! Continued-fraction dynamics, Wilton's function and the moments of the
//! function `g(x) = Σ (1 - 2{lx})/l`.

pub mod cf_dynamics;
pub mod cotangent;
mod dd;
pub mod error;
pub mod moments;
pub mod special_fn;
pub mod summation;
pub mod tolerance;
pub mod verify;
pub mod wilton;

pub use error::{Error, Result};
pub use tolerance::{OrbitPrecision, ToleranceConfig};
