//! Scripted experiments: the critical-steplength table, the three-stage
//! family sweep and randomized checks of the optimality theorem.

use std::f64::consts::PI;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::epsilon_polynomial;
use crate::schemes::{three_stage_necessary_k, FirstFlow, SplittingScheme, ThreeStageParams};
use crate::stability::{critical_steplength, instability_witness, CriticalSteplength};

/// Steplength at which the three-stage family is examined.
pub const H_STAR: f64 = 3.12;
/// `|F + 1|` at or below which a three-stage scheme is flagged exceptional.
///
/// At `h = 3.12` the minimum of every member of the family lies within a
/// few `1e-9` of `-1`, so only a threshold near the rounding level of the
/// deficit separates the exceptional members.
pub const EXCEPTIONAL_TOL: f64 = 1e-16;
/// Bisection width for the critical point `eps*`.
pub const EPS_STAR_TOL: f64 = 1e-12;
/// Half-width of the bracket searched for `eps*`.
pub const EPS_STAR_BRACKET: f64 = 0.5;
const EPS_STAR_SAMPLES: usize = 2000;
/// Steplengths drawn by [`theorem_spotcheck`] avoid this neighbourhood of
/// multiples of `pi`.
pub const PI_EXCLUSION: f64 = 1e-3;
/// Lower end of the steplength range sampled by [`theorem_spotcheck`].
pub const SPOTCHECK_H_MIN: f64 = 0.1;

/// `h_m` for `m = 1..=m_max`.
pub fn hm_table(m_max: usize) -> Result<Vec<CriticalSteplength>> {
    if m_max == 0 {
        return Err(Error::OutOfRange("m_max must be at least 1".into()));
    }
    (1..=m_max).map(critical_steplength).collect()
}

/// One member of the three-stage family at `h*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig2Record {
    pub r: f64,
    pub k: f64,
    pub eps_star: f64,
    /// `P(eps*, h*)`.
    #[serde(rename = "F")]
    pub f: f64,
    /// `F + 1`, evaluated without cancellation.
    pub deficit: f64,
    pub exceptional: bool,
}

/// 401 uniform values on `[0.2, 0.6]` plus the exceptional candidates `1/4`,
/// `1/3`, `1/2`; nodes within `1e-12` of a candidate are replaced by it.
pub fn default_r_grid() -> Vec<f64> {
    let candidates = [0.25, 1.0 / 3.0, 0.5];
    let mut grid: Vec<f64> = (0..401)
        .map(|i| (0.2 + 0.4 * i as f64 / 400.0).min(0.6))
        .filter(|r| candidates.iter().all(|c| (r - c).abs() > 1e-12))
        .collect();
    grid.extend(candidates);
    grid.sort_by(f64::total_cmp);
    grid
}

/// The critical point of `p` nearest 0 in `[-bracket, bracket]`, located by
/// sign changes of `p'` on a uniform grid and refined by bisection.
fn nearest_critical_point(p: &crate::kernel::EpsilonPolynomial, r: f64) -> Result<f64> {
    let dp = p.derivative();
    let n = EPS_STAR_SAMPLES;
    let x = |i: usize| -EPS_STAR_BRACKET + 2.0 * EPS_STAR_BRACKET * i as f64 / n as f64;
    let mut best: Option<f64> = None;
    let mut consider = |e: f64| {
        if best.is_none_or(|b| e.abs() < b.abs()) {
            best = Some(e);
        }
    };
    let mut prev = dp.eval(x(0));
    for i in 1..=n {
        let (a, b) = (x(i - 1), x(i));
        let cur = dp.eval(b);
        if prev == 0.0 {
            consider(a);
        } else if prev.signum() != cur.signum() && cur != 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, prev);
            while hi - lo > EPS_STAR_TOL {
                let mid = 0.5 * (lo + hi);
                let fm = dp.eval(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            consider(0.5 * (lo + hi));
        }
        prev = cur;
    }
    if prev == 0.0 {
        consider(x(n));
    }
    best.ok_or(Error::NoCriticalPoint { r })
}

fn sweep_one(h_star: f64, r: f64) -> Result<Fig2Record> {
    if !(0.2..=0.6).contains(&r) {
        return Err(Error::OutOfRange(format!("r = {r} outside [0.2, 0.6]")));
    }
    let k = three_stage_necessary_k(r)?;
    let scheme = ThreeStageParams { r, k }.scheme();
    let p = epsilon_polynomial(&scheme, h_star);
    let eps_star = nearest_critical_point(&p, r)?;
    // consistency fixes c0 = cos h and c1 = -(h/2) sin h exactly, and
    // 1 + cos h = 2 cos^2(h/2) avoids cancelling against -1
    let c = (0.5 * h_star).cos();
    let mut tail = 0.0;
    for j in (2..=p.degree()).rev() {
        tail = (tail + p.coeff(j)) * eps_star;
    }
    let deficit = 2.0 * c * c - 0.5 * h_star * h_star.sin() * eps_star + tail * eps_star;
    Ok(Fig2Record {
        r,
        k,
        eps_star,
        f: -1.0 + deficit,
        deficit,
        exceptional: deficit.abs() <= EXCEPTIONAL_TOL,
    })
}

/// Evaluates the three-stage family at `h_star` for every `r` in `r_grid`.
/// Per-`r` failures (no critical point, singular `r`) are returned in place.
pub fn three_stage_sweep(h_star: f64, r_grid: &[f64]) -> Result<Vec<Result<Fig2Record>>> {
    if !(h_star > 0.0 && h_star < PI) {
        return Err(Error::OutOfRange(format!("h* = {h_star} outside (0, pi)")));
    }
    Ok(r_grid.par_iter().map(|&r| sweep_one(h_star, r)).collect())
}

/// Seeded SplitMix64 stream with uniform doubles built from the top 53 bits,
/// so draws are reproducible bit for bit.
#[derive(Debug, Clone)]
pub struct SampleRng(SplitMix64);

impl SampleRng {
    pub fn new(seed: u64) -> Self {
        SampleRng(SplitMix64::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, a: f64, b: f64) -> f64 {
        a + (b - a) * self.unit()
    }

    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.unit() * (hi - lo + 1) as f64) as usize
    }
}

/// `n` draws from `[-0.5, 1.5]` scaled to sum to 1; redrawn while the raw
/// sum is too small to normalize safely.
fn normalized(rng: &mut SampleRng, n: usize, mirror: bool) -> Vec<f64> {
    loop {
        let free = if mirror { n.div_ceil(2) } else { n };
        let half: Vec<f64> = (0..free).map(|_| rng.uniform(-0.5, 1.5)).collect();
        let v: Vec<f64> = if mirror {
            (0..n).map(|i| half[i.min(n - 1 - i)]).collect()
        } else {
            half
        };
        let sum: f64 = v.iter().sum();
        if sum.abs() >= 0.25 {
            let mut out: Vec<f64> = v.iter().map(|x| x / sum).collect();
            // the rounding residue is a few ulps, far below the palindrome tolerance
            let residue = 1.0 - out.iter().sum::<f64>();
            out[n / 2] += residue;
            if (out.iter().sum::<f64>() - 1.0).abs() <= 1e-14 {
                return out;
            }
        }
    }
}

fn random_scheme(rng: &mut SampleRng, m: usize, palindromic: bool) -> SplittingScheme {
    let first = if rng.coin() {
        FirstFlow::RotationFirst
    } else {
        FirstFlow::KickFirst
    };
    let (n_rot, n_kick) = match first {
        FirstFlow::RotationFirst => (m + 1, m),
        _ => (m, m + 1),
    };
    let r = normalized(rng, n_rot, palindromic);
    let k = normalized(rng, n_kick, palindromic);
    SplittingScheme::new(first, r, k, "random").expect("normalized coefficients are consistent")
}

/// A random consistent palindromic `m`-stage rotation/kick scheme, R-first or
/// K-first with equal probability.
pub fn random_palindromic_scheme(rng: &mut SampleRng, m: usize) -> SplittingScheme {
    random_scheme(rng, m, true)
}

/// A random consistent `m`-stage rotation/kick scheme without symmetry.
pub fn random_consistent_scheme(rng: &mut SampleRng, m: usize) -> SplittingScheme {
    random_scheme(rng, m, false)
}

/// Uniform in `(lo, hi)` avoiding [`PI_EXCLUSION`] around multiples of `pi`.
pub fn sample_steplength(rng: &mut SampleRng, lo: f64, hi: f64) -> f64 {
    loop {
        let h = rng.uniform(lo, hi);
        let j = (h / PI).round();
        if j == 0.0 || (h - j * PI).abs() > PI_EXCLUSION {
            return h;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum TrialOutcome {
    /// A witness was found at every sampled steplength.
    Witnessed,
    /// The polynomial is the Chebyshev form; the theorem does not apply.
    Coincident,
    /// No witness (or an error) at steplength `h`.
    Failed { h: f64, reason: String },
}

/// Runs the witness search for one competitor at each steplength; stops at
/// the first failure.
pub fn check_trial(scheme: &SplittingScheme, m: usize, hs: &[f64]) -> TrialOutcome {
    for &h in hs {
        match instability_witness(scheme, m, h) {
            Ok(Some(_)) => {}
            Ok(None) => {
                return TrialOutcome::Failed {
                    h,
                    reason: "no witness found".into(),
                }
            }
            Err(Error::PolynomialCoincides) => return TrialOutcome::Coincident,
            Err(e) => {
                return TrialOutcome::Failed {
                    h,
                    reason: e.to_string(),
                }
            }
        }
    }
    TrialOutcome::Witnessed
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotcheckFailure {
    pub trial: usize,
    pub scheme: SplittingScheme,
    pub h: f64,
    pub reason: String,
}

/// `witnesses_found + coincidence_skips + failures.len() == trials`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremSpotcheckReport {
    pub m: usize,
    pub trials: usize,
    pub h_samples: usize,
    pub seed: u64,
    pub h_m: f64,
    pub witnesses_found: usize,
    pub coincidence_skips: usize,
    pub failures: Vec<SpotcheckFailure>,
}

/// Draws `trials` random palindromic `m`-stage schemes and checks each for an
/// instability witness at `h_samples` steplengths in `(0.1, h_m)`.
///
/// All random draws happen up front in trial order; the checks then run in
/// parallel, so the report depends only on the arguments.
pub fn theorem_spotcheck(
    m: usize,
    trials: usize,
    h_samples: usize,
    seed: u64,
) -> Result<TheoremSpotcheckReport> {
    if m < 2 {
        return Err(Error::OutOfRange("spot-checks need m >= 2".into()));
    }
    if trials == 0 || h_samples == 0 {
        return Err(Error::OutOfRange(
            "trials and h_samples must be positive".into(),
        ));
    }
    let h_m = critical_steplength(m)?.h_m;
    let mut rng = SampleRng::new(seed);
    let draws: Vec<(SplittingScheme, Vec<f64>)> = (0..trials)
        .map(|_| {
            let s = random_palindromic_scheme(&mut rng, m);
            let hs = (0..h_samples)
                .map(|_| sample_steplength(&mut rng, SPOTCHECK_H_MIN, h_m))
                .collect();
            (s, hs)
        })
        .collect();
    let outcomes: Vec<TrialOutcome> = draws
        .par_iter()
        .map(|(s, hs)| check_trial(s, m, hs))
        .collect();

    let mut report = TheoremSpotcheckReport {
        m,
        trials,
        h_samples,
        seed,
        h_m,
        witnesses_found: 0,
        coincidence_skips: 0,
        failures: Vec::new(),
    };
    for (trial, ((scheme, _), outcome)) in draws.into_iter().zip(outcomes).enumerate() {
        match outcome {
            TrialOutcome::Witnessed => report.witnesses_found += 1,
            TrialOutcome::Coincident => report.coincidence_skips += 1,
            TrialOutcome::Failed { h, reason } => report.failures.push(SpotcheckFailure {
                trial,
                scheme,
                h,
                reason,
            }),
        }
    }
    Ok(report)
}
