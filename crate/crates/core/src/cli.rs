//! Command-line front end.
//!
//! Exit codes: 0 success, 1 input error, 3 `analyze` found a non-constant
//! rank, 4 `counterexample` on an operator without a rank drop, 5 a numerical
//! check fell short of its threshold (blow-up factor, minimality).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::experiments::{
    self, assemble_report, estimate_ratio, frequency_ladder, l2_minimality, ratio_sweep, symbol_bound_ratio,
    witness_family, witness_w, EstimateReport, ExperimentError, ReportContext, ReportInputs, SweepConfig, TrialRecord,
    WitnessConfig, Window,
};
use crate::operator::Operator;
use crate::ranklab::{
    daggerbound_check, find_rank_drop_witness, rank_profile, DaggerBound, RankDropWitness, RankProfile, Verdict,
    DEFAULT_RANK_TOL,
};
use crate::spectral::{random_band_limited, Grid, SymbolTable};
use crate::zoo::{self, ZooListing};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NON_CONSTANT_RANK: i32 = 3;
pub const EXIT_NO_RANK_DROP: i32 = 4;
pub const EXIT_CHECK_FAILED: i32 = 5;

pub const SAMPLING_NOTE: &str = "rank verdicts come from finitely many sphere samples plus bisection refinement; \
     a rank drop confined to a set the sampling misses would go undetected";

#[derive(Debug, Parser)]
#[command(name = "constrank", version, about = "Constant-rank analysis of constant-coefficient differential operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the symbol rank over the unit sphere (exit 3 on non-constant rank).
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep estimate ratios over seeded random band-limited fields.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Grid size per axis; repeat for several grids.
        #[arg(long = "N", default_values_t = [16usize])]
        grid: Vec<usize>,
        /// Lebesgue exponent (>= 1, or `inf`).
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Random fields per grid.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Band limit of the random fields [default: N/4].
        #[arg(long)]
        max_freq: Option<usize>,
        /// Also write one CSV row per trial.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Build a witness family towards a rank-drop direction (exit 4 without one, 5 on weak blow-up).
    Counterexample {
        #[command(flatten)]
        common: Common,
        /// Grid size per axis.
        #[arg(long = "N", default_value_t = 64)]
        grid: usize,
        /// Lebesgue exponent (>= 1, or `inf`).
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Ladder length; rung r uses dominant frequency 2^r.
        #[arg(long, default_value_t = 4)]
        rungs: usize,
        /// Required last/first ratio.
        #[arg(long, default_value_t = 4.0)]
        factor: f64,
        /// Window the modes with a periodic bump of this radius in (0, pi].
        #[arg(long)]
        bump_radius: Option<f64>,
        /// Also write one CSV row per rung.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check that P_A phi minimizes ||D^k(phi - psi)||_2 over kernel fields psi (exit 5 on failure).
    Minimality {
        #[command(flatten)]
        common: Common,
        /// Grid size per axis.
        #[arg(long = "N", default_value_t = 16)]
        grid: usize,
        /// Number of random fields phi.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Kernel fields psi compared against each phi.
        #[arg(long, default_value_t = 20)]
        kernel_trials: usize,
    },
    /// List the built-in operators, or print one as an operator document.
    Zoo {
        name: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// `zoo:<name>` or a path to an operator document.
    pub source: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative singular-value tolerance for numerical rank.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    pub tol: f64,
    /// Random sphere directions on top of the axis and sign directions.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

pub fn load_operator(source: &str) -> Result<Operator, String> {
    if let Some(name) = source.strip_prefix("zoo:") {
        return zoo::get(name).map_err(|e| e.to_string());
    }
    let text = std::fs::read_to_string(source).map_err(|e| format!("cannot read `{source}`: {e}"))?;
    Operator::from_json(&text).map_err(|e| format!("{source}: {e}"))
}

#[derive(Debug, Serialize)]
struct RankSummary {
    operator: String,
    n: usize,
    k: usize,
    #[serde(rename = "dimV")]
    dim_v: usize,
    #[serde(rename = "dimW")]
    dim_w: usize,
    samples: usize,
    refined_samples: usize,
    seed: u64,
    tolerance: f64,
    verdict: Verdict,
    rank: Option<usize>,
    min_rank: usize,
    max_rank: usize,
    rank_counts: BTreeMap<usize, usize>,
    drop_directions: Vec<Vec<f64>>,
    witness: Option<RankDropWitness>,
    dagger_bound: Option<DaggerBound>,
    notes: Vec<String>,
}

#[derive(Debug, Serialize)]
struct CounterexampleReport {
    #[serde(flatten)]
    report: EstimateReport,
    witness: RankDropWitness,
    drop_direction: Vec<f64>,
    window: Window,
    blowup: f64,
    factor: f64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct MinimalityReport {
    operator: String,
    #[serde(rename = "N")]
    grid: usize,
    seed: u64,
    tolerance: f64,
    trials: usize,
    kernel_trials: usize,
    comparisons: usize,
    failures: usize,
    worst_margin: f64,
    max_equality_gap: f64,
    holds: bool,
    notes: Vec<String>,
}

fn profile(op: &Operator, common: &Common) -> Result<RankProfile, Failure> {
    Ok(rank_profile(op, common.samples, common.tol, common.seed)?)
}

fn emit<T: Serialize>(doc: &T, out: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    match out {
        Some(path) => write_file(path, &text),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure(format!("cannot write `{}`: {e}", path.display())))
}

fn analyze(common: &Common, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let op = load_operator(&common.source).map_err(Failure)?;
    let prof = profile(&op, common)?;
    let mut rank_counts = BTreeMap::new();
    for s in prof.samples.iter().chain(&prof.refined) {
        *rank_counts.entry(s.rank).or_insert(0) += 1;
    }
    let mut notes = vec![SAMPLING_NOTE.to_string()];
    let (witness, dagger_bound) = if prof.verdict == Verdict::NonConstantRank {
        match find_rank_drop_witness(&op, &prof, common.tol) {
            Ok(w) => {
                let bound = daggerbound_check(&op, &w)?;
                (Some(w), Some(bound))
            }
            Err(e) => {
                notes.push(format!("no witness pair: {e}"));
                (None, None)
            }
        }
    } else {
        (None, None)
    };
    let summary = RankSummary {
        operator: op.name().to_string(),
        n: op.n(),
        k: op.k(),
        dim_v: op.dim_v(),
        dim_w: op.dim_w(),
        samples: prof.samples.len(),
        refined_samples: prof.refined.len(),
        seed: prof.seed,
        tolerance: prof.tolerance,
        verdict: prof.verdict,
        rank: (prof.min_rank == prof.max_rank).then_some(prof.min_rank),
        min_rank: prof.min_rank,
        max_rank: prof.max_rank,
        rank_counts,
        drop_directions: prof.drop_directions.clone(),
        witness,
        dagger_bound,
        notes,
    };
    emit(&summary, &common.out, stdout)?;
    Ok(if prof.verdict == Verdict::NonConstantRank {
        EXIT_NON_CONSTANT_RANK
    } else {
        EXIT_OK
    })
}

fn verify(
    common: &Common,
    grid_sizes: &[usize],
    p: f64,
    trials: usize,
    max_freq: Option<usize>,
    csv: &Option<PathBuf>,
    stdout: &mut dyn Write,
) -> Result<i32, Failure> {
    let op = load_operator(&common.source).map_err(Failure)?;
    let verdict = profile(&op, common)?.verdict;
    let cfg = SweepConfig {
        p,
        trials,
        grid_sizes: grid_sizes.to_vec(),
        max_freq,
        seed: common.seed,
        tol: common.tol,
    };
    let mut report = ratio_sweep(&op, &cfg)?;
    report.verdict = Some(verdict);
    report.notes.push(SAMPLING_NOTE.to_string());
    if let Some(path) = csv {
        write_file(path, &report.to_csv())?;
    }
    emit(&report, &common.out, stdout)?;
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn counterexample(
    common: &Common,
    size: usize,
    p: f64,
    rungs: usize,
    factor: f64,
    bump_radius: Option<f64>,
    csv: &Option<PathBuf>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    if rungs < 2 {
        return Err(Failure("--rungs must be at least 2".into()));
    }
    let op = load_operator(&common.source).map_err(Failure)?;
    let prof = profile(&op, common)?;
    if prof.verdict != Verdict::NonConstantRank {
        writeln!(
            stderr,
            "no rank drop ({:?}) — no counterexample expected",
            prof.verdict
        )?;
        return Ok(EXIT_NO_RANK_DROP);
    }
    let witness = find_rank_drop_witness(&op, &prof, common.tol)?;
    let grid = Grid::new(op.n(), size)?;
    let window = match bump_radius {
        Some(radius) => Window::Bump { radius },
        None => Window::None,
    };
    let cfg = WitnessConfig {
        drop_direction: witness.xi_low.clone(),
        frequencies: frequency_ladder(&witness.xi_low, rungs),
        w: None,
        window,
    };
    let fields = witness_family(&op, &cfg, grid)?;
    let records = fields
        .iter()
        .zip(&cfg.frequencies)
        .enumerate()
        .map(|(index, (phi, freq))| {
            let xi: Vec<f64> = freq.iter().map(|&f| f as f64).collect();
            let w = witness_w(&op, &cfg, &xi)?;
            Ok(TrialRecord {
                index,
                grid: size,
                seed: None,
                frequency: Some(freq.clone()),
                ratio: estimate_ratio(&op, phi, p, common.tol)?,
                symbol_bound: Some(symbol_bound_ratio(&op, &xi, &w)?),
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let blowup = records[records.len() - 1].ratio / records[0].ratio;
    let passed = blowup >= factor;
    let report = assemble_report(ReportInputs {
        operator: op.name().to_string(),
        context: ReportContext::WitnessFamily,
        p,
        grid_sizes: vec![size],
        max_freq: None,
        seed: common.seed,
        tolerance: common.tol,
        excluded_kernel_trials: 0,
        verdict: Some(prof.verdict),
        records,
        notes: vec![experiments::TORUS_NOTE.to_string(), SAMPLING_NOTE.to_string()],
    })?;
    if let Some(path) = csv {
        write_file(path, &report.to_csv())?;
    }
    let doc = CounterexampleReport {
        drop_direction: witness.xi_low.clone(),
        report,
        witness,
        window,
        blowup,
        factor,
        passed,
    };
    emit(&doc, &common.out, stdout)?;
    Ok(if passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn minimality(common: &Common, size: usize, trials: usize, kernel_trials: usize, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let op = load_operator(&common.source).map_err(Failure)?;
    let grid = Grid::new(op.n(), size)?;
    let table = SymbolTable::new(&op, grid, common.tol)?;
    let (mut worst_margin, mut max_gap, mut failures) = (f64::INFINITY, 0.0_f64, 0);
    for t in 0..trials {
        let phi = random_band_limited(
            grid,
            op.dim_v(),
            size / 4,
            experiments::derive_seed(common.seed, &[size as u64, t as u64]),
        )?;
        let out = l2_minimality(&table, &phi, kernel_trials, experiments::derive_seed(common.seed, &[t as u64]))?;
        worst_margin = worst_margin.min(out.worst_margin);
        max_gap = max_gap.max(out.equality_gap);
        failures += usize::from(!out.holds);
    }
    let report = MinimalityReport {
        operator: op.name().to_string(),
        grid: size,
        seed: common.seed,
        tolerance: common.tol,
        trials,
        kernel_trials,
        comparisons: trials * kernel_trials,
        failures,
        worst_margin,
        max_equality_gap: max_gap,
        holds: failures == 0,
        notes: vec![experiments::TORUS_NOTE.to_string()],
    };
    emit(&report, &common.out, stdout)?;
    Ok(if failures == 0 { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn zoo_cmd(name: &Option<String>, stdout: &mut dyn Write) -> Result<i32, Failure> {
    match name {
        Some(name) => {
            let op = zoo::get(name)?;
            writeln!(stdout, "{}", op.to_json())?;
        }
        None => {
            let listing: Vec<ZooListing> = zoo::list().iter().map(ZooListing::from).collect();
            emit(&listing, &None, stdout)?;
        }
    }
    Ok(EXIT_OK)
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Analyze { common } => analyze(common, stdout),
        Command::Verify {
            common,
            grid,
            p,
            trials,
            max_freq,
            csv,
        } => verify(common, grid, *p, *trials, *max_freq, csv, stdout),
        Command::Counterexample {
            common,
            grid,
            p,
            rungs,
            factor,
            bump_radius,
            csv,
        } => counterexample(common, *grid, *p, *rungs, *factor, *bump_radius, csv, stdout, stderr),
        Command::Minimality {
            common,
            grid,
            trials,
            kernel_trials,
        } => minimality(common, *grid, *trials, *kernel_trials, stdout),
        Command::Zoo { name } => zoo_cmd(name, stdout),
    };
    match result {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_INPUT
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli, stdout, stderr),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            code
        }
    }
}
