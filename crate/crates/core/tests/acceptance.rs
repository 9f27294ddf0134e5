//! Acceptance criteria, one line each. Runs without the libtest harness so
//! every line is printed; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use splitstab::analysis::{
    default_r_grid, hm_table, random_consistent_scheme, random_palindromic_scheme,
    theorem_spotcheck, three_stage_sweep, SampleRng, H_STAR,
};
use splitstab::dynamics::{integrate_model, ModelState};
use splitstab::stability::{
    check_consistency_expansion, second_derivative_check, DEFAULT_CASE2_TOL,
};
use splitstab::{
    catalog_scheme, chebyshev_semitrace, classify, epsilon_polynomial, strang_boundaries,
    transfer_matrix, StabilityKind,
};

// Pinned tolerances.
const TABLE_TOL: f64 = 0.01;
const TABLE_RUNTIME: Duration = Duration::from_secs(1);
const STRANG_COEFF_TOL: f64 = 1e-12;
/// Chebyshev identity, relative to `max(1, |P|)`: `|T_8|` reaches `1e8` on
/// the grid, where an absolute `1e-10` is below one ulp.
const CHEBYSHEV_TOL: f64 = 1e-10;
const CHEBYSHEV_RUNTIME: Duration = Duration::from_secs(10);
const BOUNDARY_TOL: f64 = 0.01;
const FIG2_EXCEPTIONAL_TOL: f64 = 1e-6;
const FIG2_R_TOL: f64 = 1e-9;
const FIG2_RUNTIME: Duration = Duration::from_secs(30);
const SPOTCHECK_RUNTIME: Duration = Duration::from_secs(120);
const GROWTH_TOL: f64 = 1e-4;
const NORM_RATIO_MAX: f64 = 1e3;
/// Structural identities, relative to `max(1, |M|)` (squared for the
/// determinant).
const DET_TOL: f64 = 1e-12;
const PALINDROME_TOL: f64 = 1e-12;
const REVERSIBILITY_TOL: f64 = 1e-12;
const COMPOSITION_TOL: f64 = 1e-13;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn c1_table() -> Outcome {
    let expected = [PI, 4.92, 5.98, 6.85, 7.61, 8.30, 8.93, 9.53, 10.08, 10.61];
    let start = Instant::now();
    let table = match hm_table(10) {
        Ok(t) => t,
        Err(e) => return outcome(false, e.to_string()),
    };
    let elapsed = start.elapsed();
    let worst = table
        .iter()
        .zip(expected)
        .map(|(row, e)| (row.h_m - e).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= TABLE_TOL && elapsed < TABLE_RUNTIME,
        format!("max |h_m - table| = {worst:.2e}, {elapsed:.2?}"),
    )
}

fn c2_strang_closed_form() -> Outcome {
    let mut rng = SampleRng::new(2);
    let rkr = catalog_scheme("rkr", None).unwrap();
    let krk = catalog_scheme("krk", None).unwrap();
    let mut worst: f64 = 0.0;
    let mut degree_ok = true;
    for _ in 0..100 {
        let h = rng.uniform(0.0, PI);
        let expected = [h.cos(), -0.5 * h * h.sin()];
        for s in [&rkr, &krk] {
            let p = epsilon_polynomial(s, h);
            degree_ok &= p.degree() <= 1;
            for (j, e) in expected.iter().enumerate() {
                worst = worst.max((p.coeff(j) - e).abs());
            }
        }
    }
    outcome(
        degree_ok && worst <= STRANG_COEFF_TOL,
        format!("max coefficient error {worst:.2e} over 100 h"),
    )
}

fn c3_chebyshev() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for m in 2..=8 {
        let s = catalog_scheme("rkrm", Some(m)).unwrap();
        for j in 0..50 {
            let h = (j as f64 + 0.5) / 50.0 * m as f64 * PI;
            let p = epsilon_polynomial(&s, h);
            for i in 0..50 {
                let eps = -1.0 + 7.0 * (i as f64 + 0.5) / 50.0;
                let a = chebyshev_semitrace(m, eps, h);
                let b = p.eval(eps);
                worst = worst.max((a - b).abs() / a.abs().max(1.0));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= CHEBYSHEV_TOL && elapsed < CHEBYSHEV_RUNTIME,
        format!("max relative gap {worst:.2e} for m = 2..8, {elapsed:.2?}"),
    )
}

fn c4_consistency() -> Outcome {
    let mut rng = SampleRng::new(4);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = rng.range(1, 6);
        let s = random_consistent_scheme(&mut rng, m);
        for _ in 0..10 {
            let h = rng.uniform(0.0, 2.0 * PI);
            let r = check_consistency_expansion(&s, h).unwrap();
            worst = worst.max(r.c0_residual).max(r.c1_residual);
            failures += usize::from(!r.passed);
        }
    }
    outcome(
        failures == 0,
        format!("{failures} failures in 10000 checks, max residual {worst:.2e}"),
    )
}

fn c5_second_derivative() -> Outcome {
    let mut rng = SampleRng::new(5);
    let mut violations = 0;
    for _ in 0..1000 {
        let m = rng.range(1, 6);
        let s = random_palindromic_scheme(&mut rng, m);
        for n in 1..=3 {
            violations += usize::from(!second_derivative_check(&s, n).unwrap().bound_satisfied);
        }
    }
    outcome(
        violations == 0,
        format!("{violations} bound violations in 3000 checks"),
    )
}

fn c6_boundaries() -> Outcome {
    let b3 = strang_boundaries(3, 3.12).unwrap().beta_m;
    let b2 = strang_boundaries(2, 3.12).unwrap().beta_m;
    outcome(
        (b3 - 3.36).abs() <= BOUNDARY_TOL && (b2 - 1.30).abs() <= BOUNDARY_TOL,
        format!("beta_3(3.12) = {b3:.4}, beta_2(3.12) = {b2:.4}"),
    )
}

fn c7_fig2() -> Outcome {
    let start = Instant::now();
    let grid = default_r_grid();
    let records = match three_stage_sweep(H_STAR, &grid) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let elapsed = start.elapsed();
    let mut errors = 0;
    let mut exceptional = Vec::new();
    let mut others_below = true;
    let mut exceptional_close = true;
    for rec in &records {
        let Ok(rec) = rec else {
            errors += 1;
            continue;
        };
        if rec.exceptional {
            exceptional.push(rec.r);
            exceptional_close &= (rec.f + 1.0).abs() <= FIG2_EXCEPTIONAL_TOL;
        } else {
            others_below &= rec.deficit < 0.0;
        }
    }
    let targets = [0.25, 1.0 / 3.0, 0.5];
    let matches = exceptional.len() == 3
        && exceptional
            .iter()
            .zip(targets)
            .all(|(r, t)| (r - t).abs() <= FIG2_R_TOL);
    outcome(
        errors == 0 && matches && exceptional_close && others_below && elapsed < FIG2_RUNTIME,
        format!(
            "{} r values, {errors} errors, exceptional {:?}, F < -1 elsewhere: {others_below}, {elapsed:.2?}",
            records.len(),
            exceptional
        ),
    )
}

fn c8_spotcheck() -> Outcome {
    let start = Instant::now();
    let mut detail = Vec::new();
    let mut pass = true;
    for m in [2, 3] {
        match theorem_spotcheck(m, 200, 5, 1) {
            Ok(r) => {
                pass &= r.failures.is_empty();
                detail.push(format!(
                    "m={m}: {} witnessed, {} skipped, {} failed",
                    r.witnesses_found,
                    r.coincidence_skips,
                    r.failures.len()
                ));
            }
            Err(e) => {
                pass = false;
                detail.push(format!("m={m}: {e}"));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        pass && elapsed < SPOTCHECK_RUNTIME,
        format!("{}, {elapsed:.2?}", detail.join("; ")),
    )
}

fn sample_model_case(rng: &mut SampleRng) -> (splitstab::SplittingScheme, f64, f64) {
    let s = if rng.coin() {
        let names = ["rkr", "krk", "lt_rk", "lt_kr", "rkrm", "krkm"];
        let name = names[rng.range(0, names.len() - 1)];
        catalog_scheme(name, Some(rng.range(2, 4))).unwrap()
    } else {
        let m = rng.range(1, 3);
        random_palindromic_scheme(rng, m)
    };
    (s, rng.uniform(-0.9, 4.0), rng.uniform(0.05, 3.0))
}

fn c9_dynamics() -> Outcome {
    let mut rng = SampleRng::new(9);
    let (mut unstable, mut stable) = (0, 0);
    let (mut worst_growth, mut worst_ratio): (f64, f64) = (0.0, 0.0);
    let mut errors = 0;
    while unstable < 50 || stable < 50 {
        let (s, eps, h) = sample_model_case(&mut rng);
        let m = transfer_matrix(&s, eps, h);
        let Ok(v) = classify(&m, DEFAULT_CASE2_TOL) else {
            continue;
        };
        let p = v.semitrace.abs();
        let z0 = ModelState::new(1.0, 0.3);
        if v.kind == StabilityKind::ExponentiallyUnstable
            && (1.05..=10.0).contains(&p)
            && unstable < 50
        {
            let steps = ((300.0 / v.growth_rate.ln()).ceil() as usize).min(100_000);
            match integrate_model(&s, eps, h, steps, z0) {
                Ok(r) => {
                    worst_growth = worst_growth.max((r.empirical_growth - v.growth_rate).abs())
                }
                Err(_) => errors += 1,
            }
            unstable += 1;
        } else if v.kind == StabilityKind::Stable && p <= 0.95 && stable < 50 {
            match integrate_model(&s, eps, h, 100_000, z0) {
                Ok(r) => worst_ratio = worst_ratio.max(r.max_norm / r.min_norm()),
                Err(_) => errors += 1,
            }
            stable += 1;
        }
    }
    outcome(
        errors == 0 && worst_growth <= GROWTH_TOL && worst_ratio < NORM_RATIO_MAX,
        format!("max growth error {worst_growth:.2e}, max norm ratio {worst_ratio:.2e}"),
    )
}

fn c10_structure() -> Outcome {
    let mut rng = SampleRng::new(10);
    let cases = 1000;
    let (mut det, mut pal, mut rev, mut comp) = (0usize, 0usize, 0usize, 0usize);
    for _ in 0..cases {
        let m = rng.range(1, 6);
        let s = random_palindromic_scheme(&mut rng, m);
        let g = random_consistent_scheme(&mut rng, m);
        let eps = rng.uniform(-1.0, 3.0);
        let h = rng.uniform(0.0, PI);

        let mg = transfer_matrix(&g, eps, h);
        let scale = mg.max_abs().max(1.0);
        det += usize::from((mg.det() - 1.0).abs() > DET_TOL * scale * scale);

        let ms = transfer_matrix(&s, eps, h);
        let scale = ms.max_abs().max(1.0);
        pal += usize::from((ms.a - ms.d).abs() > PALINDROME_TOL * scale);
        let back = transfer_matrix(&s, eps, -h) * ms;
        rev += usize::from(!back.approx_eq(
            &splitstab::kernel::TransferMatrix::IDENTITY,
            REVERSIBILITY_TOL * scale * scale,
        ));

        let k = rng.range(2, 5);
        let composed = transfer_matrix(&g.compose_substeps(k).unwrap(), eps, h);
        let powered = transfer_matrix(&g, eps, h / k as f64).pow(k as u32);
        let scale = powered.max_abs().max(1.0);
        comp += usize::from(!composed.approx_eq(&powered, COMPOSITION_TOL * scale));
    }
    outcome(
        det + pal + rev + comp == 0,
        format!("{cases} cases each; failures: det {det}, palindromic {pal}, reversibility {rev}, composition {comp}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("critical steplength table", c1_table),
        ("Strang semitrace closed form", c2_strang_closed_form),
        ("Chebyshev identity", c3_chebyshev),
        ("consistency expansion", c4_consistency),
        ("second-derivative bound", c5_second_derivative),
        ("boundary values at h = 3.12", c6_boundaries),
        ("three-stage family sweep", c7_fig2),
        ("theorem spot-check", c8_spotcheck),
        ("dynamics consistency", c9_dynamics),
        ("structural properties", c10_structure),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failed += usize::from(!o.pass);
        println!(
            "{} {:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
