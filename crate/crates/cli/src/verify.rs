use std::f64::consts::PI;

use serde::Serialize;
use splitstab::analysis::{random_consistent_scheme, random_palindromic_scheme, SampleRng};
use splitstab::stability::{check_consistency_expansion, second_derivative_check};
use splitstab::{catalog_scheme, chebyshev_semitrace, epsilon_polynomial, SplittingScheme};

/// Relative tolerance of the Chebyshev and conjugacy comparisons.
const IDENTITY_TOL: f64 = 1e-10;
const CONJUGACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Consistency,
    SecondDerivative,
    Chebyshev,
    Conjugacy,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Consistency,
        Suite::SecondDerivative,
        Suite::Chebyshev,
        Suite::Conjugacy,
    ];
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteSummary {
    pub suite: Suite,
    pub checks: usize,
    pub failures: usize,
    /// Largest residual seen, in the suite's own units.
    pub worst_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub seed: u64,
    pub cases: usize,
    pub suites: Vec<SuiteSummary>,
    pub total_failures: usize,
}

struct Tally {
    checks: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Tally {
            checks: 0,
            failures: 0,
            worst: 0.0,
        }
    }

    fn record(&mut self, residual: f64, ok: bool) {
        self.checks += 1;
        self.failures += usize::from(!ok);
        self.worst = self.worst.max(residual);
    }

    fn finish(self, suite: Suite) -> SuiteSummary {
        SuiteSummary {
            suite,
            checks: self.checks,
            failures: self.failures,
            worst_residual: self.worst,
        }
    }
}

fn strang_catalog() -> Vec<SplittingScheme> {
    let mut out = vec![
        catalog_scheme("rkr", None).unwrap(),
        catalog_scheme("krk", None).unwrap(),
    ];
    for m in 2..=6 {
        out.push(catalog_scheme("rkrm", Some(m)).unwrap());
        out.push(catalog_scheme("krkm", Some(m)).unwrap());
    }
    out
}

fn consistency(rng: &mut SampleRng, cases: usize) -> SuiteSummary {
    let mut schemes = strang_catalog();
    schemes.push(catalog_scheme("lt_rk", None).unwrap());
    schemes.push(catalog_scheme("lt_kr", None).unwrap());
    for _ in 0..cases {
        let m = rng.range(1, 6);
        schemes.push(random_consistent_scheme(rng, m));
    }
    let mut t = Tally::new();
    for s in &schemes {
        for _ in 0..10 {
            let h = rng.uniform(0.0, 2.0 * PI);
            let r = check_consistency_expansion(s, h).expect("rotation/kick scheme");
            t.record(r.c0_residual.max(r.c1_residual), r.passed);
        }
    }
    t.finish(Suite::Consistency)
}

fn second_derivative(rng: &mut SampleRng, cases: usize) -> SuiteSummary {
    let mut schemes = strang_catalog();
    for _ in 0..cases {
        let m = rng.range(1, 6);
        schemes.push(random_palindromic_scheme(rng, m));
    }
    let mut t = Tally::new();
    for s in &schemes {
        for n in 1..=3 {
            let r = second_derivative_check(s, n).expect("rotation/kick scheme");
            t.record((r.signed_value - r.bound).max(0.0), r.bound_satisfied);
        }
    }
    t.finish(Suite::SecondDerivative)
}

fn chebyshev(rng: &mut SampleRng, cases: usize) -> SuiteSummary {
    let mut t = Tally::new();
    let compare = |t: &mut Tally, m: usize, eps: f64, h: f64, s: &SplittingScheme| {
        let a = chebyshev_semitrace(m, eps, h);
        let b = epsilon_polynomial(s, h).eval(eps);
        let rel = (a - b).abs() / a.abs().max(1.0);
        t.record(rel, rel <= IDENTITY_TOL);
    };
    for m in 2..=8 {
        let schemes = [
            catalog_scheme("rkrm", Some(m)).unwrap(),
            catalog_scheme("krkm", Some(m)).unwrap(),
        ];
        for s in &schemes {
            for j in 0..20 {
                let h = (j as f64 + 0.5) / 20.0 * m as f64 * PI;
                for i in 0..20 {
                    let eps = -1.0 + 7.0 * (i as f64 + 0.5) / 20.0;
                    compare(&mut t, m, eps, h, s);
                }
            }
        }
    }
    for _ in 0..cases {
        let m = rng.range(1, 8);
        let s = catalog_scheme(if rng.coin() { "rkrm" } else { "krkm" }, Some(m)).unwrap();
        let h = rng.uniform(0.0, m as f64 * PI);
        let eps = rng.uniform(-1.0, 6.0);
        compare(&mut t, m, eps, h, &s);
    }
    t.finish(Suite::Chebyshev)
}

fn conjugacy(rng: &mut SampleRng, cases: usize) -> SuiteSummary {
    let mut t = Tally::new();
    let compare = |t: &mut Tally, a: &SplittingScheme, b: &SplittingScheme, h: f64| {
        let (pa, pb) = (epsilon_polynomial(a, h), epsilon_polynomial(b, h));
        let size = pa.coeffs.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
        let rel = pa.distance(&pb) / size;
        t.record(rel, rel <= CONJUGACY_TOL);
    };
    let rkr = catalog_scheme("rkr", None).unwrap();
    let krk = catalog_scheme("krk", None).unwrap();
    for _ in 0..cases {
        let h = rng.uniform(0.0, 2.0 * PI);
        compare(&mut t, &rkr, &krk, h);
        let m = rng.range(1, 6);
        let s = random_consistent_scheme(rng, m);
        let shifted = s.cyclic_shift().expect("shift keeps consistency");
        compare(&mut t, &s, &shifted, h);
    }
    t.finish(Suite::Conjugacy)
}

/// Runs the suites in order from one seeded stream.
pub fn run_suites(suites: &[Suite], seed: u64, cases: usize) -> VerifySummary {
    let mut rng = SampleRng::new(seed);
    let suites: Vec<SuiteSummary> = suites
        .iter()
        .map(|s| match s {
            Suite::Consistency => consistency(&mut rng, cases),
            Suite::SecondDerivative => second_derivative(&mut rng, cases),
            Suite::Chebyshev => chebyshev(&mut rng, cases),
            Suite::Conjugacy => conjugacy(&mut rng, cases),
        })
        .collect();
    let total_failures = suites.iter().map(|s| s.failures).sum();
    VerifySummary {
        seed,
        cases,
        suites,
        total_failures,
    }
}
