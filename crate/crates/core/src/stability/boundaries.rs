use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::EpsilonPolynomial;

/// Level sets of the `m`-substep Strang semitrace at a fixed `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrangBoundaries {
    pub m: usize,
    pub h: f64,
    /// `P = 1` edge, always below -1.
    pub alpha_m: f64,
    /// `P = -1` edge; the scheme is exponentially unstable above it.
    pub beta_m: f64,
    /// Image of `x = cos(pi/m)` under the Chebyshev change of variable; lower
    /// end of the interval where competitors must lose stability.
    pub gamma_m: f64,
}

/// `alpha_m`, `beta_m` and `gamma_m` for `0 < h < m pi`.
pub fn strang_boundaries(m: usize, h: f64) -> Result<StrangBoundaries> {
    if m == 0 {
        return Err(Error::OutOfRange("m must be at least 1".into()));
    }
    let mf = m as f64;
    if !(h > 0.0 && h < mf * PI) {
        return Err(Error::OutOfRange(format!("h = {h} outside (0, {m} pi)")));
    }
    let half = h / (2.0 * mf);
    let scale = 2.0 * mf / h;
    let (s, c) = (h / mf).sin_cos();
    Ok(StrangBoundaries {
        m,
        h,
        alpha_m: -scale * half.tan(),
        beta_m: scale / half.tan(),
        gamma_m: scale / s * (c - (PI / mf).cos()),
    })
}

/// Argument of `T_m` in the Strang semitrace.
fn chebyshev_argument(m: usize, h: f64) -> (f64, f64) {
    let mf = m as f64;
    let (s, c) = (h / mf).sin_cos();
    (c, -h / (2.0 * mf) * s)
}

/// `T_m(cos(h/m) - (h eps / 2m) sin(h/m))`, the semitrace of `m` Strang
/// substeps of length `h/m`, evaluated with the three-term recurrence.
pub fn chebyshev_semitrace(m: usize, eps: f64, h: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let (c0, c1) = chebyshev_argument(m, h);
    let x = c0 + c1 * eps;
    let (mut prev, mut cur) = (1.0, x);
    for _ in 1..m {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// The same Chebyshev semitrace expanded in powers of `eps`.
pub fn chebyshev_epsilon_polynomial(m: usize, h: f64) -> EpsilonPolynomial {
    if m == 0 {
        return EpsilonPolynomial::new(vec![1.0], h);
    }
    let (c0, c1) = chebyshev_argument(m, h);
    let mut prev = vec![1.0];
    let mut cur = vec![c0, c1];
    for _ in 1..m {
        let mut next = vec![0.0; cur.len() + 1];
        for (j, t) in cur.iter().enumerate() {
            next[j] += 2.0 * c0 * t;
            next[j + 1] += 2.0 * c1 * t;
        }
        for (j, t) in prev.iter().enumerate() {
            next[j] -= t;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    EpsilonPolynomial::new(cur, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalSteplength {
    pub m: usize,
    pub h_m: f64,
}

/// `(h/2m) sin(h/m) - cos(pi/m) + cos(h/m)`; its smallest positive zero is
/// `h_m`, where `gamma_m(h_m) = -1`.
pub fn critical_residual(m: usize, h: f64) -> f64 {
    let mf = m as f64;
    h / (2.0 * mf) * (h / mf).sin() - (PI / mf).cos() + (h / mf).cos()
}

const SCAN_PANELS: usize = 1000;

/// Largest steplength below which the optimality argument applies to
/// `m`-stage schemes. `h_1 = pi` exactly.
pub fn critical_steplength(m: usize) -> Result<CriticalSteplength> {
    if m == 0 {
        return Err(Error::OutOfRange("m must be at least 1".into()));
    }
    if m == 1 {
        return Ok(CriticalSteplength { m, h_m: PI });
    }
    let f = |h: f64| critical_residual(m, h);
    let upper = m as f64 * PI;
    let width = upper / SCAN_PANELS as f64;
    // f(0+) = 1 - cos(pi/m) > 0 and f(m pi) = -1 - cos(pi/m) < 0
    let mut lo = 0.0;
    let mut bracket = None;
    for i in 1..=SCAN_PANELS {
        let hi = width * i as f64;
        if f(hi) <= 0.0 {
            bracket = Some((lo, hi));
            break;
        }
        lo = hi;
    }
    let (mut lo, mut hi) = bracket.ok_or(Error::RootNotBracketed(m))?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalSteplength {
        m,
        h_m: 0.5 * (lo + hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m1_boundaries() {
        let b = strang_boundaries(1, PI / 2.0).unwrap();
        assert!((b.beta_m - 4.0 / PI).abs() < 1e-14);
        assert!((b.alpha_m + 4.0 / PI).abs() < 1e-14);
        let tiny = strang_boundaries(1, 1e-6).unwrap();
        assert!((tiny.alpha_m + 1.0).abs() < 1e-9);
    }

    #[test]
    fn reported_boundary_values() {
        assert!((strang_boundaries(3, 3.12).unwrap().beta_m - 3.36).abs() < 0.01);
        assert!((strang_boundaries(2, 3.12).unwrap().beta_m - 1.30).abs() < 0.01);
    }

    #[test]
    fn boundary_domain() {
        assert!(strang_boundaries(2, 0.0).is_err());
        assert!(strang_boundaries(2, 2.0 * PI).is_err());
        assert!(strang_boundaries(0, 1.0).is_err());
        assert!(strang_boundaries(2, 2.0 * PI - 1e-9).is_ok());
    }

    #[test]
    fn chebyshev_small_cases() {
        let (eps, h): (f64, f64) = (0.7, 2.1);
        let direct = h.cos() - 0.5 * h * eps * h.sin();
        assert!((chebyshev_semitrace(1, eps, h) - direct).abs() < 1e-15);
        for m in 1..9 {
            assert!((chebyshev_semitrace(m, 0.0, h) - h.cos()).abs() < 1e-13);
        }
        let x = (1f64 / 3.0).cos() - (1.0 / 6.0) * (1f64 / 3.0).sin();
        let t3 = 4.0 * x * x * x - 3.0 * x;
        assert!((chebyshev_semitrace(3, 1.0, 1.0) - t3).abs() < 1e-15);
        assert!((t3 - 0.152_639_361_716_313).abs() < 1e-12);
    }

    #[test]
    fn chebyshev_polynomial_matches_recurrence() {
        for m in 1..8 {
            let h = 0.9 * m as f64;
            let p = chebyshev_epsilon_polynomial(m, h);
            assert_eq!(p.degree(), m);
            for eps in [-0.8, 0.0, 0.5, 2.0] {
                let a = p.eval(eps);
                let b = chebyshev_semitrace(m, eps, h);
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn critical_steplength_known_values() {
        assert_eq!(critical_steplength(1).unwrap().h_m, PI);
        assert!((critical_steplength(2).unwrap().h_m - 4.92).abs() < 0.01);
        assert!((critical_steplength(10).unwrap().h_m - 10.61).abs() < 0.01);
        assert!(critical_steplength(0).is_err());
    }

    #[test]
    fn critical_steplength_asymptotics() {
        let m = 10_000;
        let hm = critical_steplength(m).unwrap().h_m;
        let lead = 12f64.powf(0.25) * PI.sqrt() * (m as f64).sqrt();
        let ratio = hm / lead;
        assert!((0.99..=1.01).contains(&ratio), "{ratio}");
    }

    #[test]
    fn gamma_crosses_minus_one_at_hm() {
        for m in 2..8 {
            let hm = critical_steplength(m).unwrap().h_m;
            assert!(hm < m as f64 * PI);
            let g = strang_boundaries(m, hm).unwrap().gamma_m;
            assert!((g + 1.0).abs() < 1e-9, "m={m} gamma={g}");
            assert!(strang_boundaries(m, 0.99 * hm).unwrap().gamma_m > -1.0);
        }
    }
}
