//! Numerical laboratory for weighted resolvent estimates on model
//! asymptotically hyperbolic manifolds `[r0, inf) x Y`.
//!
//! Everything is reduced to cross-section modes: each mode `k` carries a
//! radial operator `D_r^2 + mu_k e^{-2r} + (n-1)^2/4 + V_k(r)` that is
//! discretized on a uniform grid.

pub mod conjugate;
pub mod error;
pub mod jet;
pub mod laplab;
pub mod linops;
pub mod model;
pub mod mourre;
pub mod profiles;
pub mod quad;
pub mod testbed;
pub mod weights;

pub use error::{LabError, Result};
pub use num_complex::Complex64 as C64;
