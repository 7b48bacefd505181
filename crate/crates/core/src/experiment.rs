//! Batch experiments: problem sets × variants → CSV rows and a JSON summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{aggregate, canonical_bound, enhanced_bound, Aggregate, BoundInputs, CanonicalBound, Sample};
use crate::error::{HhlError, Result};
use crate::pipeline::{run, run_scoring_degenerate, Readout, RunConfig, RunResult, Variant};
use crate::preprocess::{decode_grid, encode_grid, Sampling};
use crate::qlsp::{generate_n2, generate_n4, ProblemFile, Qlsp, N4_EIGENVALUES};

/// Where the problems of an experiment come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemSource {
    /// `count` evenly spaced `λ` values from `low` to `high` inclusive.
    N2Sweep { count: usize, low: f64, high: f64 },
    N2Set { lambdas: Vec<f64> },
    N4Set {
        eigenvalues: [f64; 4],
        pairs: Vec<(usize, usize)>,
        seeds: Vec<u64>,
    },
    File { path: PathBuf },
}

impl ProblemSource {
    /// 99 points from 0.005 to 0.495.
    pub fn default_sweep() -> Self {
        ProblemSource::N2Sweep {
            count: 99,
            low: 0.005,
            high: 0.495,
        }
    }

    /// `λ ∈ {3/24, …, 11/24}`.
    pub fn reference_set() -> Self {
        ProblemSource::N2Set {
            lambdas: (3..=11).map(|i| i as f64 / 24.0).collect(),
        }
    }

    /// The fixed four-eigenvalue spectrum with every eigenvector pair.
    pub fn reference_n4(seeds: Vec<u64>) -> Self {
        let mut pairs = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                pairs.push((i, j));
            }
        }
        ProblemSource::N4Set {
            eigenvalues: N4_EIGENVALUES,
            pairs,
            seeds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HhlError::InvalidArgument(m));
        match self {
            ProblemSource::N2Sweep { count, low, high } => {
                if *count < 1 {
                    return bad("sweep count must be >= 1".into());
                }
                if !(*low > 0.0 && *high < 0.5 && low <= high) {
                    return bad(format!("sweep range [{low}, {high}] must lie inside (0, 0.5)"));
                }
            }
            ProblemSource::N2Set { lambdas } => {
                if lambdas.is_empty() {
                    return bad("lambda set is empty".into());
                }
                if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0 && **l < 0.5)) {
                    return bad(format!("lambda {l} outside (0, 0.5)"));
                }
            }
            ProblemSource::N4Set { pairs, seeds, .. } => {
                if pairs.is_empty() || seeds.is_empty() {
                    return bad("n4 set needs at least one pair and one seed".into());
                }
            }
            ProblemSource::File { .. } => {}
        }
        Ok(())
    }

    pub fn problems(&self) -> Result<Vec<Problem>> {
        self.validate()?;
        match self {
            ProblemSource::N2Sweep { count, low, high } => (0..*count)
                .map(|i| {
                    let lambda = if *count == 1 {
                        *low
                    } else {
                        low + (high - low) * i as f64 / (*count - 1) as f64
                    };
                    Problem::n2(i, lambda)
                })
                .collect(),
            ProblemSource::N2Set { lambdas } => lambdas
                .iter()
                .enumerate()
                .map(|(i, &l)| Problem::n2(i, l))
                .collect(),
            ProblemSource::N4Set {
                eigenvalues,
                pairs,
                seeds,
            } => {
                let mut out = Vec::new();
                for &seed in seeds {
                    for &pair in pairs {
                        out.push(Problem {
                            id: format!("n4-s{seed}-p{}{}", pair.0, pair.1),
                            label: seed as f64,
                            qlsp: generate_n4(*eigenvalues, pair, seed)?,
                        });
                    }
                }
                Ok(out)
            }
            ProblemSource::File { path } => Ok(vec![Problem {
                id: path.display().to_string(),
                label: 0.0,
                qlsp: ProblemFile::load(path)?,
            }]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub id: String,
    /// `λ` for the two-eigenvalue family, the seed for generated four-dimensional problems.
    pub label: f64,
    pub qlsp: Qlsp,
}

impl Problem {
    fn n2(index: usize, lambda: f64) -> Result<Self> {
        Ok(Self {
            id: format!("n2-{index:03}"),
            label: lambda,
            qlsp: generate_n2(lambda)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub problem_source: ProblemSource,
    pub variants: Vec<Variant>,
    /// Shared settings; `variant` is overridden per row.
    pub run_config: RunConfig,
    pub csv_path: PathBuf,
    pub summary_path: Option<PathBuf>,
    /// Worker threads; `None` lets rayon decide.
    pub jobs: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(name: &str, problem_source: ProblemSource, csv_path: PathBuf) -> Self {
        Self {
            name: name.to_string(),
            problem_source,
            variants: Variant::ALL.to_vec(),
            run_config: RunConfig::new(Variant::Canonical),
            csv_path,
            summary_path: None,
            jobs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(HhlError::InvalidArgument("no variants selected".into()));
        }
        if self.jobs == Some(0) {
            return Err(HhlError::InvalidArgument("jobs must be >= 1".into()));
        }
        self.problem_source.validate()?;
        for &v in &self.variants {
            let mut cfg = self.run_config.clone();
            cfg.variant = v;
            cfg.validate()?;
        }
        Ok(())
    }
}

/// One CSV line per (problem, variant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub problem_id: String,
    pub lambda_or_seed: f64,
    pub variant: Variant,
    pub k: usize,
    pub l: usize,
    pub t0: f64,
    pub fidelity: f64,
    pub error: f64,
    pub success_prob: f64,
    pub gate_count: usize,
    pub two_qubit_count: usize,
    pub depth: usize,
    pub bound_enhanced: f64,
    pub bound_canonical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutcome {
    pub name: String,
    pub summary: Aggregate,
    #[serde(skip)]
    pub rows: Vec<Row>,
    #[serde(skip)]
    pub results: Vec<RunResult>,
}

/// Per-problem copy of `config` with every seed offset by the problem index.
fn seeded(config: &RunConfig, variant: Variant, index: usize) -> RunConfig {
    let mut cfg = config.clone();
    cfg.variant = variant;
    let off = index as u64;
    if let Sampling::Shots { seed, .. } = &mut cfg.preprocess.sampling {
        *seed = seed.wrapping_add(off);
    }
    match &mut cfg.readout {
        Readout::SwapTest { seed, .. } | Readout::DirectSample { seed, .. } => {
            *seed = seed.wrapping_add(off)
        }
        Readout::Exact => {}
    }
    if let Some(noise) = &mut cfg.noise {
        noise.rng_seed = noise.rng_seed.wrapping_add(off);
    }
    cfg
}

fn row_for(problem: &Problem, cfg: &RunConfig, r: &RunResult) -> Result<Row> {
    let k = cfg.clock_bits;
    let l = if cfg.variant == Variant::Enhanced { cfg.preprocess.bit_width } else { k };
    let inputs = BoundInputs::new(problem.qlsp.condition_number(), r.t0, k, l)?;
    Ok(Row {
        problem_id: problem.id.clone(),
        lambda_or_seed: problem.label,
        variant: r.variant,
        k,
        l,
        t0: r.t0,
        fidelity: r.fidelity,
        error: r.error,
        success_prob: r.success_probability,
        gate_count: r.gate_report.gate_count,
        two_qubit_count: r.gate_report.two_qubit_count,
        depth: r.gate_report.depth,
        bound_enhanced: enhanced_bound(&inputs),
        bound_canonical: canonical_bound(&inputs, CanonicalBound::Original),
    })
}

/// Runs every (problem, variant) pair without writing anything.
pub fn execute(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let problems = spec.problem_source.problems()?;
    let tasks: Vec<(usize, &Problem, Variant)> = problems
        .iter()
        .enumerate()
        .flat_map(|(i, p)| spec.variants.iter().map(move |&v| (i, p, v)))
        .collect();
    let work = || {
        tasks
            .par_iter()
            .map(|&(i, problem, variant)| {
                let cfg = seeded(&spec.run_config, variant, i);
                let wrap = |e: HhlError| HhlError::Experiment {
                    problem: format!("{} ({variant})", problem.id),
                    source: Box::new(e),
                };
                let result = if cfg.noise.is_some() {
                    run_scoring_degenerate(&problem.qlsp, &cfg)
                } else {
                    run(&problem.qlsp, &cfg)
                }
                .map_err(wrap)?;
                let row = row_for(problem, &cfg, &result).map_err(wrap)?;
                Ok((row, result))
            })
            .collect::<Result<Vec<_>>>()
    };
    let pairs = match spec.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| HhlError::InvalidArgument(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let (rows, results): (Vec<Row>, Vec<RunResult>) = pairs.into_iter().unzip();
    let samples: Vec<Sample> = results.iter().map(Sample::from).collect();
    Ok(ExperimentOutcome {
        name: spec.name.clone(),
        summary: aggregate(&samples)?,
        rows,
        results,
    })
}

/// Runs the experiment, then writes the CSV and (if requested) the JSON summary.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let outcome = execute(spec)?;
    write_rows(&spec.csv_path, &outcome.rows)?;
    if let Some(path) = &spec.summary_path {
        std::fs::write(path, serde_json::to_string_pretty(&outcome)? + "\n")?;
    }
    Ok(outcome)
}

pub fn write_rows(path: &Path, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(HhlError::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct PlotRow {
    lambda: f64,
    error_canonical: Option<f64>,
    error_hybrid: Option<f64>,
    error_enhanced: Option<f64>,
}

/// Pivots a results CSV into one line per problem with an error column per variant,
/// sorted by `λ` (or seed). Returns the number of data lines written.
pub fn emit_plot_data(csv_path: &Path, out_path: &Path) -> Result<usize> {
    let rows = read_rows(csv_path)?;
    if rows.is_empty() {
        return Err(HhlError::InvalidArgument(format!(
            "{} has no result rows",
            csv_path.display()
        )));
    }
    let mut by_problem: BTreeMap<String, PlotRow> = BTreeMap::new();
    for row in &rows {
        let entry = by_problem.entry(row.problem_id.clone()).or_insert(PlotRow {
            lambda: row.lambda_or_seed,
            error_canonical: None,
            error_hybrid: None,
            error_enhanced: None,
        });
        let slot = match row.variant {
            Variant::Canonical => &mut entry.error_canonical,
            Variant::Hybrid => &mut entry.error_hybrid,
            Variant::Enhanced => &mut entry.error_enhanced,
        };
        *slot = Some(row.error);
    }
    let mut lines: Vec<(String, PlotRow)> = by_problem.into_iter().collect();
    lines.sort_by(|a, b| a.1.lambda.total_cmp(&b.1.lambda).then_with(|| a.0.cmp(&b.0)));
    let mut w = csv::Writer::from_path(out_path)?;
    for (_, line) in &lines {
        w.serialize(line)?;
    }
    w.flush()?;
    Ok(lines.len())
}

/// Spectrum, condition number, `|b⟩` weights and clock-grid placement of each eigenvalue.
pub fn describe_problem(qlsp: &Qlsp, k: usize, t0: f64, signed: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dimension: {}", qlsp.dimension());
    if qlsp.scale() != 1.0 {
        let _ = writeln!(out, "matrix scaled by {:.6} to unit spectral norm", qlsp.scale());
    }
    let _ = writeln!(out, "condition number: {:.6}", qlsp.condition_number());
    let _ = writeln!(
        out,
        "clock: k = {k}, t0 = {t0:.6} ({:.6}π), grid step {:.6}, {}",
        t0 / std::f64::consts::PI,
        2.0 * std::f64::consts::PI / t0,
        if signed { "two's complement" } else { "unsigned" }
    );
    let _ = writeln!(out, "{:>12} {:>10} {:>8} {:>10} {:>10} {:>8}", "eigenvalue", "|beta|", "pattern", "grid", "delta", "overflow");
    for pair in qlsp.spectrum() {
        let position = pair.eigenvalue * t0 / (2.0 * std::f64::consts::PI);
        let g = position.round() as i64;
        let pattern = encode_grid(g, k, signed);
        let grid_value = pattern
            .map(|p| 2.0 * std::f64::consts::PI * decode_grid(p, k, signed) as f64 / t0)
            .unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{:>12.6} {:>10.6} {:>8} {:>10.6} {:>10.6} {:>8}",
            pair.eigenvalue,
            pair.projection.norm(),
            pattern.map_or("-".to_string(), |p| crate::sim::bitstring(p as usize, k)),
            grid_value,
            2.0 * std::f64::consts::PI * (position - g as f64).abs(),
            if pattern.is_none() { "yes" } else { "no" }
        );
    }
    out
}
