//! Command-line front end for `splitstab`.
//!
//! Exit codes: 0 success, 1 usage or argument error, 2 verification
//! failure, 3 file error.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use splitstab::analysis::{self, Fig2Record};
use splitstab::dynamics::{self, ModelState, ProblemFile};
use splitstab::output;
use splitstab::stability::{Axis, DEFAULT_CASE2_TOL};
use splitstab::{catalog_scheme, classify, epsilon_polynomial, transfer_matrix, SplittingScheme};

mod verify;

pub use verify::{run_suites, Suite, SuiteSummary, VerifySummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_FILE: i32 = 3;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "SPLITSTAB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "splitstab",
    version,
    about = "Stability of rotation/kick splitting integrators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a scheme on an (eps, h) grid; writes CSV and optionally SVG.
    Region(RegionArgs),
    /// alpha_m, beta_m, gamma_m of the m-substep Strang scheme against h.
    Boundaries(BoundariesArgs),
    /// Critical steplengths h_m for m = 1..m_max.
    HmTable(HmTableArgs),
    /// Sweep the three-stage family at a fixed steplength.
    Fig2(Fig2Args),
    /// Run the property suites; exits 2 on any failure.
    Verify(VerifyArgs),
    /// Random competitors checked for instability witnesses; exits 2 on any failure.
    Spotcheck(SpotcheckArgs),
    /// Integrate the model problem, or a general problem from JSON.
    Integrate(IntegrateArgs),
    /// Per-mode eps of a linear problem from JSON.
    Reduce(ReduceArgs),
}

#[derive(Debug, Args)]
struct SchemeArgs {
    /// Catalog name or path to a JSON scheme file.
    #[arg(long)]
    scheme: String,
    /// Stage count for `rkrm` and `krkm`.
    #[arg(long)]
    m: Option<usize>,
}

/// `start:end` bounds.
#[derive(Debug, Clone, Copy)]
struct Range {
    start: f64,
    end: f64,
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let a: Axis = s.parse().map_err(|e: splitstab::Error| e.to_string())?;
        Ok(Range {
            start: a.start,
            end: a.end,
        })
    }
}

impl Range {
    fn axis(self, nodes: usize) -> Result<Axis, CliError> {
        Axis::new(self.start, self.end, nodes).map_err(CliError::from)
    }
}

/// `<eps nodes>x<h nodes>`.
#[derive(Debug, Clone, Copy)]
struct Grid {
    eps: usize,
    h: usize,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected NxM, got `{s}`"))?;
        let n = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| format!("not a count: `{t}`"))
        };
        let g = Grid {
            eps: n(a)?,
            h: n(b)?,
        };
        if g.eps == 0 || g.h == 0 {
            return Err("grid sizes must be positive".into());
        }
        Ok(g)
    }
}

#[derive(Debug, Args)]
struct RegionArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, allow_hyphen_values = true, default_value = "-1:6")]
    eps: Range,
    #[arg(long, allow_hyphen_values = true, default_value = "0:12.6")]
    h: Range,
    #[arg(long, default_value = "200x200")]
    grid: Grid,
    #[arg(short, long, default_value = "region.csv")]
    output: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundariesArgs {
    #[arg(long)]
    m: usize,
    /// Defaults to `0:m pi`.
    #[arg(long, allow_hyphen_values = true)]
    h: Option<Range>,
    #[arg(long, default_value_t = 400)]
    nodes: usize,
    #[arg(short, long, default_value = "boundaries.csv")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct HmTableArgs {
    #[arg(long, default_value_t = 10)]
    m_max: usize,
    /// Print to stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Fig2Args {
    #[arg(long, default_value_t = analysis::H_STAR)]
    h_star: f64,
    /// Uniform r values on [0.2, 0.6]; the candidates 1/4, 1/3, 1/2 are always added.
    #[arg(long, default_value_t = 401)]
    points: usize,
    #[arg(short, long, default_value = "fig2.csv")]
    output: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    All,
    Consistency,
    SecondDerivative,
    Chebyshev,
    Conjugacy,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    suite: SuiteArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Random schemes per suite.
    #[arg(long, default_value_t = 200)]
    cases: usize,
    /// Also write the summary JSON here.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SpotcheckArgs {
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 5)]
    h_samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Defaults to `theorem_m{m}.json`.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IntegrateArgs {
    /// Catalog name or JSON scheme file.
    #[arg(long)]
    scheme: String,
    #[arg(long)]
    m: Option<usize>,
    /// General problem JSON; the model problem is used when omitted.
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, allow_hyphen_values = true)]
    h: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    q0: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    p0: f64,
    /// Trajectory CSV.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Print the step matrix and its eps-polynomial as JSON (model problem).
    #[arg(long)]
    dump: bool,
}

#[derive(Debug, Args)]
struct ReduceArgs {
    #[arg(long)]
    problem: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Verification(String),
    File(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Verification(_) => EXIT_VERIFY,
            CliError::File(_) => EXIT_FILE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::File(m) => write!(f, "file error: {m}"),
        }
    }
}

impl From<splitstab::Error> for CliError {
    fn from(e: splitstab::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn file_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::File(format!("{}: {e}", path.display()))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| file_err(path, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| file_err(path, e))?;
    fs::write(path, buf).map_err(|e| file_err(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| file_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| file_err(path, e))
}

fn print_json(value: &impl Serialize) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report types serialize")
    );
}

/// A catalog name, or a path to a JSON scheme file.
fn load_scheme(name: &str, m: Option<usize>) -> Result<SplittingScheme, CliError> {
    let path = Path::new(name);
    if name.ends_with(".json") || path.is_file() {
        let text = read_file(path)?;
        return SplittingScheme::from_json(&text).map_err(|e| file_err(path, e));
    }
    Ok(catalog_scheme(name, m)?)
}

fn load_problem(path: &Path) -> Result<ProblemFile, CliError> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| file_err(path, e))
}

fn cmd_region(a: RegionArgs) -> Result<(), CliError> {
    let scheme = load_scheme(&a.scheme.scheme, a.scheme.m)?;
    let grid = splitstab::scan_region(&scheme, a.eps.axis(a.grid.eps)?, a.h.axis(a.grid.h)?)?;
    write_with(&a.output, |w| output::write_region_csv(&grid, w))?;
    if let Some(svg) = &a.svg {
        let text = output::region_svg(&grid, scheme.label());
        fs::write(svg, text).map_err(|e| file_err(svg, e))?;
    }
    Ok(())
}

fn cmd_boundaries(a: BoundariesArgs) -> Result<(), CliError> {
    if a.m == 0 {
        return Err(CliError::Usage("m must be at least 1".into()));
    }
    let range = a.h.unwrap_or(Range {
        start: 0.0,
        end: a.m as f64 * std::f64::consts::PI,
    });
    let axis = range.axis(a.nodes)?;
    let mut buf = Vec::new();
    output::write_boundaries_csv(a.m, &axis, &mut buf)?;
    fs::write(&a.output, buf).map_err(|e| file_err(&a.output, e))
}

fn cmd_hm_table(a: HmTableArgs) -> Result<(), CliError> {
    let rows = analysis::hm_table(a.m_max)?;
    match &a.output {
        Some(path) => write_with(path, |w| output::write_hm_table_csv(&rows, w)),
        None => output::write_hm_table_csv(&rows, io::stdout().lock())
            .map_err(|e| CliError::File(e.to_string())),
    }
}

fn cmd_fig2(a: Fig2Args) -> Result<(), CliError> {
    if a.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let grid = if a.points == 401 {
        analysis::default_r_grid()
    } else {
        let candidates = [0.25, 1.0 / 3.0, 0.5];
        let n = a.points - 1;
        let mut g: Vec<f64> = (0..=n)
            .map(|i| (0.2 + 0.4 * i as f64 / n as f64).min(0.6))
            .filter(|r| candidates.iter().all(|c| (r - c).abs() > 1e-12))
            .collect();
        g.extend(candidates);
        g.sort_by(f64::total_cmp);
        g
    };
    let results = analysis::three_stage_sweep(a.h_star, &grid)?;
    let mut records: Vec<Fig2Record> = Vec::with_capacity(results.len());
    for (r, res) in grid.iter().zip(results) {
        match res {
            Ok(rec) => records.push(rec),
            Err(e) => eprintln!("r = {r}: {e}"),
        }
    }
    write_with(&a.output, |w| output::write_fig2_csv(&records, w))?;
    if let Some(svg) = &a.svg {
        fs::write(svg, output::fig2_svg(&records, a.h_star)).map_err(|e| file_err(svg, e))?;
    }
    let exceptional: Vec<f64> = records
        .iter()
        .filter(|r| r.exceptional)
        .map(|r| r.r)
        .collect();
    eprintln!("{} records, exceptional r: {exceptional:?}", records.len());
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<(), CliError> {
    let suites: Vec<Suite> = match a.suite {
        SuiteArg::All => Suite::ALL.to_vec(),
        SuiteArg::Consistency => vec![Suite::Consistency],
        SuiteArg::SecondDerivative => vec![Suite::SecondDerivative],
        SuiteArg::Chebyshev => vec![Suite::Chebyshev],
        SuiteArg::Conjugacy => vec![Suite::Conjugacy],
    };
    let summary = run_suites(&suites, a.seed, a.cases);
    print_json(&summary);
    if let Some(path) = &a.output {
        write_json(path, &summary)?;
    }
    if summary.total_failures > 0 {
        return Err(CliError::Verification(format!(
            "{} failing cases",
            summary.total_failures
        )));
    }
    Ok(())
}

fn cmd_spotcheck(a: SpotcheckArgs) -> Result<(), CliError> {
    let report = analysis::theorem_spotcheck(a.m, a.trials, a.h_samples, a.seed)?;
    let path = a
        .output
        .unwrap_or_else(|| PathBuf::from(format!("theorem_m{}.json", a.m)));
    write_json(&path, &report)?;
    eprintln!(
        "m = {}: {} witnessed, {} coincident, {} failed",
        report.m,
        report.witnesses_found,
        report.coincidence_skips,
        report.failures.len()
    );
    if !report.failures.is_empty() {
        return Err(CliError::Verification(format!(
            "{} trials without a witness",
            report.failures.len()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct Dump {
    eps: f64,
    h: f64,
    matrix: splitstab::TransferMatrix,
    polynomial: splitstab::EpsilonPolynomial,
    verdict: splitstab::StabilityVerdict,
}

#[derive(Serialize)]
struct RunSummary {
    steps: usize,
    max_norm: f64,
    empirical_growth: f64,
}

fn cmd_integrate(a: IntegrateArgs) -> Result<(), CliError> {
    let scheme = load_scheme(&a.scheme, a.m)?;
    let report = match &a.problem {
        None => {
            if a.dump {
                let matrix = transfer_matrix(&scheme, a.eps, a.h);
                print_json(&Dump {
                    eps: a.eps,
                    h: a.h,
                    matrix,
                    polynomial: epsilon_polynomial(&scheme, a.h),
                    verdict: classify(&matrix, DEFAULT_CASE2_TOL)?,
                });
            }
            dynamics::integrate_model(&scheme, a.eps, a.h, a.steps, ModelState::new(a.q0, a.p0))?
        }
        Some(path) => {
            let file = load_problem(path)?;
            let problem = file.to_problem().map_err(|e| file_err(path, e))?;
            let z0 = file.initial_state().map_err(|e| file_err(path, e))?;
            dynamics::integrate_general(&scheme, &problem, a.h, a.steps, &z0)?
        }
    };
    if let Some(path) = &a.output {
        write_with(path, |w| output::write_trajectory_csv(&report, w))?;
    }
    if !a.dump {
        print_json(&RunSummary {
            steps: report.len() - 1,
            max_norm: report.max_norm,
            empirical_growth: report.empirical_growth,
        });
    }
    Ok(())
}

fn cmd_reduce(a: ReduceArgs) -> Result<(), CliError> {
    let file = load_problem(&a.problem)?;
    let problem = file.to_problem().map_err(|e| file_err(&a.problem, e))?;
    let reduction = dynamics::reduce_to_model(&problem)?;
    print_json(&reduction.modes);
    Ok(())
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Region(a) => cmd_region(a),
        Command::Boundaries(a) => cmd_boundaries(a),
        Command::HmTable(a) => cmd_hm_table(a),
        Command::Fig2(a) => cmd_fig2(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Spotcheck(a) => cmd_spotcheck(a),
        Command::Integrate(a) => cmd_integrate(a),
        Command::Reduce(a) => cmd_reduce(a),
    }
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>, CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| CliError::Usage(e.to_string()))
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = thread_pool().and_then(|pool| match pool {
        Some(pool) => pool.install(|| dispatch(cli.command)),
        None => dispatch(cli.command),
    });
    match result {
        Ok(()) => {
            let _ = io::stdout().flush();
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{e}");
            e.code()
        }
    }
}
