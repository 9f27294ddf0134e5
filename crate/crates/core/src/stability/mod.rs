//! Stability of splitting schemes on the model problem.
//!
//! A unit-determinant step matrix is stable when its semitrace lies in
//! `(-1, 1)`, exponentially unstable when it lies outside `[-1, 1]`, and
//! linearly unstable on the boundary unless the matrix is `+I` or `-I`.

mod boundaries;
mod checks;
mod region;
mod witness;

pub use boundaries::{
    chebyshev_epsilon_polynomial, chebyshev_semitrace, critical_residual, critical_steplength,
    strang_boundaries, CriticalSteplength, StrangBoundaries,
};
pub use checks::{
    check_consistency_expansion, second_derivative_check, ConsistencyReport,
    SecondDerivativeReport, BOUND_TOL, EQUALITY_TOL, EXPANSION_TOL,
};
pub use region::{scan_region, Axis, RegionCell, RegionGrid};
pub use witness::{
    instability_witness, instability_witnesses, Witness, COINCIDENCE_TOL, MULTIPLE_OF_PI_TOL,
    WITNESS_SAMPLES,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::TransferMatrix;

/// Default tolerance for the entrywise comparison with `+-I`.
pub const DEFAULT_CASE2_TOL: f64 = 1e-9;

/// Band around `|semitrace| = 1` treated as the marginal case.
pub const MARGINAL_TOL: f64 = 1e-12;

/// Allowed `|det - 1|`, before scaling by the squared entry magnitude.
pub const DET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityKind {
    Stable,
    LinearlyUnstable,
    ExponentiallyUnstable,
}

impl StabilityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StabilityKind::Stable => "stable",
            StabilityKind::LinearlyUnstable => "linear",
            StabilityKind::ExponentiallyUnstable => "exponential",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub kind: StabilityKind,
    pub semitrace: f64,
    /// Spectral radius of the step matrix; 1 unless exponentially unstable.
    pub growth_rate: f64,
}

/// Spectral radius of a unit-determinant matrix with semitrace `p`, `|p| > 1`.
pub fn growth_rate(p: f64) -> f64 {
    p.abs() + (p * p - 1.0).sqrt()
}

/// Classifies a unit-determinant step matrix.
///
/// A semitrace within [`MARGINAL_TOL`] of `+-1` is the marginal case, resolved
/// as stable only if the matrix is within `tol` of `+-I` entrywise. The
/// determinant check is relative to the squared size of the entries, since
/// rounding in a product of unit-determinant factors grows with them.
pub fn classify(mat: &TransferMatrix, tol: f64) -> Result<StabilityVerdict> {
    let det = mat.det();
    let scale = mat.max_abs().max(1.0);
    if !det.is_finite() || (det - 1.0).abs() > DET_TOL * scale * scale {
        return Err(Error::NonUnitDeterminant(det));
    }
    let p = mat.semitrace();
    let verdict = |kind, growth_rate| StabilityVerdict {
        kind,
        semitrace: p,
        growth_rate,
    };
    if (p.abs() - 1.0).abs() <= MARGINAL_TOL {
        let sign = p.signum();
        let target = TransferMatrix::IDENTITY.scale(sign);
        let kind = if mat.approx_eq(&target, tol) {
            StabilityKind::Stable
        } else {
            StabilityKind::LinearlyUnstable
        };
        return Ok(verdict(kind, 1.0));
    }
    if p.abs() < 1.0 {
        Ok(verdict(StabilityKind::Stable, 1.0))
    } else {
        Ok(verdict(
            StabilityKind::ExponentiallyUnstable,
            growth_rate(p),
        ))
    }
}
