//! Rotation/kick splitting integrators and their linear stability.
//!
//! For systems `M q'' = -A q + f(q)` a splitting integrator alternates the
//! exact flow of the oscillator `M q'' = -A q` (a rotation) with exact kicks
//! by `f`. On the model problem `q'' = -(1 + eps) q` every such scheme is a
//! unit-determinant 2x2 matrix, and its half trace `P(eps, h)` decides
//! stability.
//!
//! ```
//! use splitstab::{catalog_scheme, epsilon_polynomial, strang_boundaries};
//!
//! let krk = catalog_scheme("krk", None).unwrap();
//! let p = epsilon_polynomial(&krk, 2.0);
//! assert!((p.coeffs[0] - 2f64.cos()).abs() < 1e-15);
//! assert!((p.coeffs[1] + 2f64.sin()).abs() < 1e-15);
//!
//! // stable for eps in (-1, beta_1(h))
//! let b = strang_boundaries(1, 2.0).unwrap();
//! assert!((p.eval(b.beta_m) + 1.0).abs() < 1e-12);
//! ```

pub mod analysis;
pub mod dynamics;
mod error;
pub mod kernel;
pub mod output;
pub mod schemes;
pub mod stability;

pub use error::{Error, Result};
pub use kernel::{epsilon_polynomial, transfer_matrix, EpsilonPolynomial, TransferMatrix};
pub use schemes::{catalog_scheme, FirstFlow, SplittingScheme};
pub use stability::{
    chebyshev_semitrace, classify, critical_steplength, instability_witness, scan_region,
    strang_boundaries, StabilityKind, StabilityVerdict,
};
