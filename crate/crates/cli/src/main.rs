//! `hhl-lab`: batch experiments, bounds and problem inspection for the HHL variants.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hhl_core::analysis::{canonical_bound, enhanced_bound, enhanced_prefactor, BoundInputs, CanonicalBound};
use hhl_core::experiment::{describe_problem, emit_plot_data, run_experiment, ExperimentOutcome, ProblemSource};
use hhl_core::pipeline::resolve_t0;
use hhl_core::preprocess::preprocess;
use hhl_core::qlsp::{generate_n2, generate_n4, ProblemFile, Qlsp, N4_EIGENVALUES};
use hhl_core::HhlError;

use config::RunArgs;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or problem description (exit 2).
    Spec(String),
    /// Failure while running (exit 3).
    Runtime(String),
}

impl From<HhlError> for CliError {
    fn from(e: HhlError) -> Self {
        match e {
            HhlError::InvalidArgument(_) | HhlError::InvalidProblem(_) | HhlError::SingularProblem(_) => {
                CliError::Spec(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hhl-lab", version, about = "Canonical, hybrid and enhanced hybrid HHL on a statevector simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evenly spaced sweep over the two-eigenvalue family.
    Sweep {
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        low: Option<f64>,
        #[arg(long)]
        high: Option<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// An explicit list of λ values, or one problem file.
    Set {
        /// Comma-separated λ values (default 3/24, …, 11/24).
        #[arg(long, value_delimiter = ',', conflicts_with = "problem")]
        lambdas: Vec<f64>,
        /// JSON problem file.
        #[arg(long)]
        problem: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Four-dimensional problems on the fixed spectrum, one per eigenvector pair and seed.
    N4 {
        /// Comma-separated seeds (default 0..5).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Eigenvector pairs as i-j, comma-separated (default all six).
        #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
        pairs: Vec<(usize, usize)>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Analytic error bounds.
    Bounds {
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        t0: f64,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        l: usize,
        #[arg(long)]
        json: bool,
    },
    /// Spectrum, condition number, |b> weights and clock-grid placement of one problem.
    Describe {
        #[arg(long, group = "source")]
        lambda: Option<f64>,
        /// Eigenvector pair i-j of the four-dimensional spectrum.
        #[arg(long, group = "source", value_parser = parse_pair)]
        n4: Option<(usize, usize)>,
        #[arg(long, requires = "n4", default_value_t = 0)]
        n4_seed: u64,
        #[arg(long, group = "source")]
        problem: Option<PathBuf>,
        /// Also print the preprocessing estimate set as JSON.
        #[arg(long)]
        estimates: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Pivot a results CSV into λ, error_canonical, error_hybrid, error_enhanced.
    PlotData {
        csv: PathBuf,
        /// Output file (default: <csv stem>_plot.csv next to the input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once('-').ok_or_else(|| format!("expected i-j, got {s:?}"))?;
    let a: usize = a.parse().map_err(|_| format!("bad index in {s:?}"))?;
    let b: usize = b.parse().map_err(|_| format!("bad index in {s:?}"))?;
    if a >= 4 || b >= 4 || a == b {
        return Err(format!("pair {s:?} needs two distinct indices below 4"));
    }
    Ok((a, b))
}

/// The config file's problem source if it has the expected kind, else `fallback`.
fn pick_source(
    from_file: Option<ProblemSource>,
    accept: fn(&ProblemSource) -> bool,
    fallback: ProblemSource,
) -> Result<ProblemSource, CliError> {
    match from_file {
        Some(s) if accept(&s) => Ok(s),
        Some(s) => Err(CliError::Spec(format!("config problem_source {s:?} does not fit this subcommand"))),
        None => Ok(fallback),
    }
}

fn run_batch(default_name: &str, run: &RunArgs, source: impl FnOnce(Option<ProblemSource>) -> Result<ProblemSource, CliError>) -> Result<(), CliError> {
    let resolved = run.resolve()?;
    let source = source(resolved.problem_source.clone())?;
    let out = resolved.out.clone();
    let spec = resolved.into_spec(default_name, source);
    spec.validate()?;
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out.display())))?;
    let outcome = run_experiment(&spec)?;
    print_summary(&outcome);
    println!("rows: {}", spec.csv_path.display());
    if let Some(p) = &spec.summary_path {
        println!("summary: {}", p.display());
    }
    Ok(())
}

fn print_summary(o: &ExperimentOutcome) {
    println!("{}: {} runs", o.name, o.summary.count);
    println!("{:<10} {:>6} {:>11} {:>13} {:>10} {:>10}", "variant", "runs", "mean error", "mean fidelity", "gates", "rotations");
    for (v, s) in &o.summary.per_variant {
        println!(
            "{:<10} {:>6} {:>11.4} {:>13.4} {:>10.2} {:>10.2}",
            v.name(),
            s.count,
            s.mean_error,
            s.mean_fidelity,
            s.mean_gate_count,
            s.mean_rotations
        );
    }
}

fn describe(
    lambda: Option<f64>,
    n4: Option<(usize, usize)>,
    n4_seed: u64,
    problem: Option<PathBuf>,
    estimates: bool,
    run: &RunArgs,
) -> Result<(), CliError> {
    let qlsp: Qlsp = match (lambda, n4, problem) {
        (Some(l), _, _) => generate_n2(l)?,
        (_, Some(pair), _) => generate_n4(N4_EIGENVALUES, pair, n4_seed)?,
        (_, _, Some(path)) => ProblemFile::load(&path).map_err(|e| CliError::Spec(e.to_string()))?,
        _ => return Err(CliError::Spec("describe needs --lambda, --n4 or --problem".into())),
    };
    let resolved = run.resolve()?;
    let mut cfg = resolved.run_config;
    cfg.variant = resolved.variants[0];
    cfg.validate()?;
    let signed = cfg.signed_mode.unwrap_or_else(|| qlsp.has_negative_eigenvalues());
    let (t0, _) = resolve_t0(&qlsp, &cfg)?;
    print!("{}", describe_problem(&qlsp, cfg.clock_bits, t0, signed));
    if estimates {
        let (k, l) = (cfg.clock_bits, cfg.preprocess.bit_width);
        let t0_l = t0 * 2f64.powi(l as i32 - k as i32);
        let set = preprocess(&qlsp, l, t0_l, &cfg.preprocess, signed)?;
        println!("{}", serde_json::to_string_pretty(&set).map_err(|e| CliError::Runtime(e.to_string()))?);
    }
    Ok(())
}

fn bounds(kappa: f64, t0: f64, k: usize, l: usize, json: bool) -> Result<(), CliError> {
    let inputs = BoundInputs::new(kappa, t0, k, l)?;
    let enhanced = enhanced_bound(&inputs);
    let original = canonical_bound(&inputs, CanonicalBound::Original);
    let revised = canonical_bound(&inputs, CanonicalBound::Revised);
    let prefactor = enhanced_prefactor(l - k);
    if json {
        let doc = serde_json::json!({
            "inputs": inputs,
            "enhanced_prefactor": prefactor,
            "enhanced": enhanced,
            "canonical_original": original,
            "canonical_revised": revised,
        });
        println!("{}", serde_json::to_string_pretty(&doc).map_err(|e| CliError::Runtime(e.to_string()))?);
    } else {
        println!("kappa = {kappa}, t0 = {t0}, k = {k}, l = {l}");
        println!("enhanced prefactor   {prefactor:.6}");
        println!("enhanced bound       {enhanced:.6}");
        println!("canonical (original) {original:.6}");
        println!("canonical (revised)  {revised:.6}");
        println!("enhanced vs original {:.2}% tighter", 100.0 * (1.0 - enhanced / original));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep { count, low, high, run } => run_batch("sweep", &run, |file| {
            let flags = count.is_some() || low.is_some() || high.is_some();
            let default = match ProblemSource::default_sweep() {
                ProblemSource::N2Sweep { count: c, low: lo, high: hi } => (c, lo, hi),
                _ => unreachable!(),
            };
            if flags || file.is_none() {
                return Ok(ProblemSource::N2Sweep {
                    count: count.unwrap_or(default.0),
                    low: low.unwrap_or(default.1),
                    high: high.unwrap_or(default.2),
                });
            }
            pick_source(file, |s| matches!(s, ProblemSource::N2Sweep { .. }), ProblemSource::default_sweep())
        }),
        Command::Set { lambdas, problem, run } => run_batch("set", &run, |file| {
            if let Some(path) = problem {
                return Ok(ProblemSource::File { path });
            }
            if !lambdas.is_empty() {
                return Ok(ProblemSource::N2Set { lambdas });
            }
            pick_source(
                file,
                |s| matches!(s, ProblemSource::N2Set { .. } | ProblemSource::File { .. }),
                ProblemSource::reference_set(),
            )
        }),
        Command::N4 { seeds, pairs, run } => run_batch("n4", &run, |file| {
            if seeds.is_empty() && pairs.is_empty() && file.is_some() {
                return pick_source(file, |s| matches!(s, ProblemSource::N4Set { .. }), ProblemSource::reference_n4(vec![]));
            }
            let mut source = ProblemSource::reference_n4(if seeds.is_empty() { (0..5).collect() } else { seeds });
            if let ProblemSource::N4Set { pairs: p, .. } = &mut source {
                if !pairs.is_empty() {
                    *p = pairs;
                }
            }
            Ok(source)
        }),
        Command::Bounds { kappa, t0, k, l, json } => bounds(kappa, t0, k, l, json),
        Command::Describe { lambda, n4, n4_seed, problem, estimates, run } => {
            describe(lambda, n4, n4_seed, problem, estimates, &run)
        }
        Command::PlotData { csv, out } => {
            let out = out.unwrap_or_else(|| {
                let stem = csv.file_stem().map_or("results".into(), |s| s.to_string_lossy().into_owned());
                csv.with_file_name(format!("{stem}_plot.csv"))
            });
            let n = emit_plot_data(&csv, &out)?;
            println!("{n} rows written to {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Spec(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
