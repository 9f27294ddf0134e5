use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::boundaries::{chebyshev_epsilon_polynomial, critical_steplength, strang_boundaries};
use crate::error::{Error, Result};
use crate::kernel::{epsilon_polynomial, EpsilonPolynomial};
use crate::schemes::{Family, SplittingScheme};

/// Dense samples of `|P|` over `(gamma_m, beta_m)` before refinement.
pub const WITNESS_SAMPLES: usize = 10_000;
/// Coefficient-wise distance below which a polynomial counts as the
/// Chebyshev form.
pub const COINCIDENCE_TOL: f64 = 1e-10;
/// Steplengths this close to `pi, 2 pi, ..., (m-1) pi` are excluded.
pub const MULTIPLE_OF_PI_TOL: f64 = 1e-6;

const MAX_REFINEMENTS: usize = 64;

/// A perturbation `eps` at which a competitor is exponentially unstable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub eps: f64,
    pub semitrace: f64,
}

/// Maximizes `f` on `[a, b]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1e-300) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Validates the hypotheses and returns the scheme polynomial and the open
/// search interval.
fn prepare(scheme: &SplittingScheme, m: usize, h: f64) -> Result<(EpsilonPolynomial, f64, f64)> {
    if scheme.family() != Family::RotationKick {
        return Err(Error::UnsupportedFamily(scheme.family().name()));
    }
    let hm = critical_steplength(m)?.h_m;
    if !(h > 0.0 && h < hm) {
        return Err(Error::OutOfRange(format!(
            "h = {h} outside (0, h_{m} = {hm})"
        )));
    }
    for j in 1..m {
        if (h - j as f64 * PI).abs() <= MULTIPLE_OF_PI_TOL {
            return Err(Error::OutOfRange(format!(
                "h = {h} is within {MULTIPLE_OF_PI_TOL} of {j} pi"
            )));
        }
    }
    let poly = epsilon_polynomial(scheme, h);
    if poly.distance(&chebyshev_epsilon_polynomial(m, h)) <= COINCIDENCE_TOL {
        return Err(Error::PolynomialCoincides);
    }
    let b = strang_boundaries(m, h)?;
    Ok((poly, b.gamma_m, b.beta_m))
}

/// All refined local maxima of `|P|` on `(gamma_m(h), beta_m(h))` that exceed 1,
/// in increasing `eps`.
///
/// `|P|` is sampled at [`WITNESS_SAMPLES`] interior midpoints; every sampled
/// local maximum is refined by golden-section search between its neighbours.
pub fn instability_witnesses(scheme: &SplittingScheme, m: usize, h: f64) -> Result<Vec<Witness>> {
    let (poly, lo, hi) = prepare(scheme, m, h)?;
    let n = WITNESS_SAMPLES;
    let step = (hi - lo) / n as f64;
    let xs: Vec<f64> = (0..n).map(|i| lo + (i as f64 + 0.5) * step).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| poly.eval(x).abs()).collect();

    let mut peaks = Vec::new();
    for i in 0..n {
        let left = if i == 0 { f64::NEG_INFINITY } else { ys[i - 1] };
        let right = if i + 1 == n {
            f64::NEG_INFINITY
        } else {
            ys[i + 1]
        };
        if ys[i] >= left && ys[i] >= right && (ys[i] > left || ys[i] > right) {
            peaks.push(i);
        }
    }
    // keep the strongest peaks when a flat stretch produces many ties
    if peaks.len() > MAX_REFINEMENTS {
        peaks.sort_by(|&a, &b| ys[b].total_cmp(&ys[a]));
        peaks.truncate(MAX_REFINEMENTS);
        peaks.sort_unstable();
    }

    let mut out: Vec<Witness> = Vec::new();
    for i in peaks {
        let a = if i == 0 { lo } else { xs[i - 1] };
        let b = if i + 1 == n { hi } else { xs[i + 1] };
        let (mut x, mut y) = golden_max(|e| poly.eval(e).abs(), a, b);
        if ys[i] > y {
            x = xs[i];
            y = ys[i];
        }
        if y > 1.0 && x > lo && x < hi {
            out.push(Witness {
                eps: x,
                semitrace: poly.eval(x),
            });
        }
    }
    Ok(out)
}

/// A perturbation in `(gamma_m(h), beta_m(h))` where the scheme is
/// exponentially unstable although the `m`-substep Strang scheme is stable.
/// Returns the strongest witness (largest `|P|`), or `None` if the search
/// found nothing.
pub fn instability_witness(scheme: &SplittingScheme, m: usize, h: f64) -> Result<Option<f64>> {
    Ok(instability_witnesses(scheme, m, h)?
        .into_iter()
        .max_by(|a, b| a.semitrace.abs().total_cmp(&b.semitrace.abs()))
        .map(|w| w.eps))
}
