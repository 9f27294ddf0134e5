use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::epsilon_polynomial;
use crate::schemes::{Family, SplittingScheme};

/// Residual allowed on the constant and linear coefficients.
pub const EXPANSION_TOL: f64 = 1e-12;
/// Slack on the signed second-derivative bound.
pub const BOUND_TOL: f64 = 1e-10;
/// Tolerance for the equality that stability near `(0, n pi)` requires.
pub const EQUALITY_TOL: f64 = 1e-9;

fn require_rotation_kick(scheme: &SplittingScheme) -> Result<()> {
    match scheme.family() {
        Family::RotationKick => Ok(()),
        f => Err(Error::UnsupportedFamily(f.name())),
    }
}

/// Every consistent rotation/kick scheme has
/// `P(eps, h) = cos h - (h/2) sin(h) eps + O(eps^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub h: f64,
    pub c0_residual: f64,
    pub c1_residual: f64,
    pub passed: bool,
}

pub fn check_consistency_expansion(scheme: &SplittingScheme, h: f64) -> Result<ConsistencyReport> {
    require_rotation_kick(scheme)?;
    let p = epsilon_polynomial(scheme, h);
    let c0_residual = (p.coeff(0) - h.cos()).abs();
    let c1_residual = (p.coeff(1) + 0.5 * h * h.sin()).abs();
    Ok(ConsistencyReport {
        h,
        c0_residual,
        c1_residual,
        passed: c0_residual <= EXPANSION_TOL && c1_residual <= EXPANSION_TOL,
    })
}

/// Curvature of `P` in `eps` at `(0, n pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondDerivativeReport {
    pub n: u32,
    pub h: f64,
    /// `d^2 P / d eps^2 (0, n pi)`.
    pub second_derivative: f64,
    /// `(-1)^(n+1)` times the second derivative.
    pub signed_value: f64,
    /// `n^2 pi^2 / 4`.
    pub bound: f64,
    pub bound_satisfied: bool,
    /// Signed value equals the bound: necessary for stability near `(0, n pi)`.
    pub equality: bool,
}

pub fn second_derivative_check(scheme: &SplittingScheme, n: u32) -> Result<SecondDerivativeReport> {
    require_rotation_kick(scheme)?;
    if n == 0 {
        return Err(Error::OutOfRange("n must be at least 1".into()));
    }
    let h = n as f64 * PI;
    let second_derivative = epsilon_polynomial(scheme, h).second_derivative_at_zero();
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    let signed_value = sign * second_derivative;
    let bound = (n as f64 * PI).powi(2) / 4.0;
    Ok(SecondDerivativeReport {
        n,
        h,
        second_derivative,
        signed_value,
        bound,
        bound_satisfied: signed_value <= bound + BOUND_TOL,
        equality: (signed_value - bound).abs() <= EQUALITY_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{catalog_scheme, FirstFlow, ThreeStageParams};

    #[test]
    fn rkr_saturates_expansion() {
        let rkr = catalog_scheme("rkr", None).unwrap();
        for h in [0.3, 1.7, 2.9] {
            let r = check_consistency_expansion(&rkr, h).unwrap();
            assert!(r.passed);
            assert!(r.c0_residual < 1e-15 && r.c1_residual < 1e-15);
        }
    }

    #[test]
    fn four_stage_scheme_passes() {
        let s = SplittingScheme::new(
            FirstFlow::RotationFirst,
            vec![0.1, 0.35, -0.2, 0.5, 0.25],
            vec![0.3, 0.4, -0.1, 0.4],
            "four",
        )
        .unwrap();
        assert!(check_consistency_expansion(&s, 2.3).unwrap().passed);
    }

    #[test]
    fn inconsistent_scheme_fails() {
        let s = SplittingScheme::new_unchecked(
            FirstFlow::RotationFirst,
            vec![0.5, 0.6],
            vec![1.0],
            "bad",
        )
        .unwrap();
        assert!(!check_consistency_expansion(&s, 1.0).unwrap().passed);
        let s = SplittingScheme::new_unchecked(
            FirstFlow::RotationFirst,
            vec![0.5, 0.5],
            vec![1.1],
            "bad",
        )
        .unwrap();
        let r = check_consistency_expansion(&s, 1.0).unwrap();
        assert!(!r.passed && r.c0_residual < 1e-15);
    }

    #[test]
    fn drift_kick_rejected() {
        let v = catalog_scheme("verlet_pos", None).unwrap();
        assert!(matches!(
            check_consistency_expansion(&v, 1.0),
            Err(Error::UnsupportedFamily(_))
        ));
        assert!(second_derivative_check(&v, 1).is_err());
    }

    #[test]
    fn rkr_has_no_curvature() {
        let rkr = catalog_scheme("rkr", None).unwrap();
        let r = second_derivative_check(&rkr, 1).unwrap();
        assert_eq!(r.second_derivative, 0.0);
        assert!(r.bound_satisfied);
        assert!(!r.equality);
    }

    #[test]
    fn krk3_attains_bound_at_pi_and_2pi() {
        let krk3 = catalog_scheme("krkm", Some(3)).unwrap();
        for n in [1, 2] {
            let r = second_derivative_check(&krk3, n).unwrap();
            assert!(r.equality, "{r:?}");
            assert!(r.bound_satisfied);
        }
        let r = second_derivative_check(&krk3, 1).unwrap();
        assert!((r.second_derivative - PI * PI / 4.0).abs() < 1e-12);
        // stable near (0, 3 pi) is not expected for KRK3
        assert!(!second_derivative_check(&krk3, 3).unwrap().equality);
    }

    #[test]
    fn necessary_k_gives_equality() {
        for r in [0.22, 0.3, 0.41, 0.57] {
            let k = crate::schemes::three_stage_necessary_k(r).unwrap();
            let s = ThreeStageParams { r, k }.scheme();
            assert!(second_derivative_check(&s, 1).unwrap().equality, "r={r}");
            let off = ThreeStageParams { r, k: k + 0.05 }.scheme();
            assert!(!second_derivative_check(&off, 1).unwrap().equality);
        }
    }
}
