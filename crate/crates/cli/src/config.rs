//! Command-line flags, the optional JSON config file, and their merge into an `ExperimentSpec`.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use hhl_core::experiment::{ExperimentSpec, ProblemSource};
use hhl_core::inversion::{AlphaModel, AnglePolicy};
use hhl_core::pipeline::{Readout, RunConfig, Variant};
use hhl_core::preprocess::{Sampling, T0Mode};
use hhl_core::sim::NoiseSpec;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantArg {
    Canonical,
    Hybrid,
    Enhanced,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Canonical => Variant::Canonical,
            VariantArg::Hybrid => Variant::Hybrid,
            VariantArg::Enhanced => Variant::Enhanced,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadoutArg {
    Exact,
    Swap,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnglePolicyArg {
    Paper,
    LeastSquares,
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaArg {
    Linear,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignedArg {
    /// Two's complement only when the spectrum has negative eigenvalues.
    Auto,
    On,
    Off,
}

/// `fixed`, `iterative` or `explicit=<t0>`.
pub fn parse_t0_mode(s: &str) -> Result<T0Mode, String> {
    match s {
        "fixed" => Ok(T0Mode::Fixed),
        "iterative" => Ok(T0Mode::Iterative),
        _ => {
            let value = s
                .strip_prefix("explicit=")
                .ok_or_else(|| format!("expected fixed, iterative or explicit=<t0>, got {s:?}"))?;
            let t: f64 = value.parse().map_err(|_| format!("bad t0 value {value:?}"))?;
            if !(t > 0.0 && t.is_finite()) {
                return Err(format!("explicit t0 must be positive, got {t}"));
            }
            Ok(T0Mode::Explicit(t))
        }
    }
}

/// Settings shared by every run-type subcommand. Unset flags fall back to `--config`, then to defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON config file; flags given on the command line override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Experiment name, used for output file names.
    #[arg(long)]
    pub name: Option<String>,
    /// HHL clock width.
    #[arg(long)]
    pub k: Option<usize>,
    /// Preprocessing width for the enhanced variant.
    #[arg(long)]
    pub l: Option<usize>,
    /// Variants to run (repeat or comma-separate); all three by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub variant: Vec<VariantArg>,
    /// fixed, iterative or explicit=<t0>.
    #[arg(long, value_parser = parse_t0_mode)]
    pub t0_mode: Option<T0Mode>,
    #[arg(long, value_enum)]
    pub angle_policy: Option<AnglePolicyArg>,
    #[arg(long, value_enum)]
    pub alpha: Option<AlphaArg>,
    #[arg(long, value_enum)]
    pub readout: Option<ReadoutArg>,
    /// Shots for preprocessing QPE and sampled readouts.
    #[arg(long)]
    pub shots: Option<u64>,
    /// Base seed; each problem offsets it by its index.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-gate Pauli error probability; noiseless when absent.
    #[arg(long)]
    pub noise_p: Option<f64>,
    /// Use Born probabilities instead of sampled shots for preprocessing.
    #[arg(long)]
    pub exact_preprocessing: bool,
    /// Amplitude threshold for preprocessing estimates (default 2^(-n/2)).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Normalized relevance threshold for enhanced patterns (default 2^-k).
    #[arg(long)]
    pub filter_threshold: Option<f64>,
    /// Eigenvalue bound for the fixed t0 formula (default 1).
    #[arg(long)]
    pub lambda_bound: Option<f64>,
    #[arg(long, value_enum)]
    pub signed: Option<SignedArg>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Flat JSON config: the same keys as the flags (snake_case), plus `problem_source`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub name: Option<String>,
    pub problem_source: Option<ProblemSource>,
    pub variants: Option<Vec<VariantArg>>,
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub t0_mode: Option<String>,
    pub angle_policy: Option<AnglePolicyArg>,
    pub alpha: Option<AlphaArg>,
    pub readout: Option<ReadoutArg>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub noise_p: Option<f64>,
    pub exact_preprocessing: Option<bool>,
    pub threshold: Option<f64>,
    pub filter_threshold: Option<f64>,
    pub lambda_bound: Option<f64>,
    pub signed: Option<SignedArg>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Spec(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Spec(format!("config {}: {e}", path.display())))
    }
}

/// Flags merged over the config file.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub name: Option<String>,
    pub problem_source: Option<ProblemSource>,
    pub variants: Vec<Variant>,
    pub run_config: RunConfig,
    pub jobs: Option<usize>,
    pub out: PathBuf,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let t0_mode = match (self.t0_mode, &file.t0_mode) {
            (Some(m), _) => Some(m),
            (None, Some(s)) => Some(parse_t0_mode(s).map_err(CliError::Spec)?),
            (None, None) => None,
        };
        let variants: Vec<Variant> = if !self.variant.is_empty() {
            self.variant.iter().map(|&v| v.into()).collect()
        } else if let Some(vs) = &file.variants {
            vs.iter().map(|&v| v.into()).collect()
        } else {
            Variant::ALL.to_vec()
        };

        let mut cfg = RunConfig::new(variants.first().copied().unwrap_or(Variant::Canonical));
        if let Some(k) = self.k.or(file.k) {
            cfg.clock_bits = k;
        }
        if let Some(l) = self.l.or(file.l) {
            cfg.preprocess.bit_width = l;
        }
        if let Some(m) = t0_mode {
            cfg.preprocess.t0_mode = m;
        }
        let shots = self.shots.or(file.shots);
        let seed = self.seed.or(file.seed).unwrap_or(0);
        cfg.preprocess.sampling = if self.exact_preprocessing || file.exact_preprocessing == Some(true) {
            Sampling::Exact
        } else {
            Sampling::Shots {
                shots: shots.unwrap_or(4096),
                seed,
            }
        };
        cfg.preprocess.relevance_threshold = self.threshold.or(file.threshold);
        cfg.enhanced.filter_threshold = self.filter_threshold.or(file.filter_threshold);
        cfg.enhanced.angle_policy = match self.angle_policy.or(file.angle_policy) {
            Some(AnglePolicyArg::LeastSquares) => AnglePolicy::LeastSquares,
            Some(AnglePolicyArg::Printed) => AnglePolicy::Printed,
            _ => AnglePolicy::WeightedAverage,
        };
        cfg.enhanced.alpha_model = match self.alpha.or(file.alpha) {
            Some(AlphaArg::Exact) => AlphaModel::Exact,
            _ => AlphaModel::Linear,
        };
        let readout_shots = shots.unwrap_or(4096);
        cfg.readout = match self.readout.or(file.readout) {
            None | Some(ReadoutArg::Exact) => Readout::Exact,
            Some(ReadoutArg::Swap) => Readout::SwapTest { shots: readout_shots, seed },
            Some(ReadoutArg::Direct) => Readout::DirectSample { shots: readout_shots, seed },
        };
        if let Some(p) = self.noise_p.or(file.noise_p) {
            cfg.noise = Some(NoiseSpec::new(p, seed).map_err(|e| CliError::Spec(e.to_string()))?);
        }
        if let Some(b) = self.lambda_bound.or(file.lambda_bound) {
            cfg.lambda_bound = Some(b);
        }
        cfg.signed_mode = match self.signed.or(file.signed) {
            Some(SignedArg::Auto) => None,
            Some(SignedArg::Off) => Some(false),
            None | Some(SignedArg::On) => Some(true),
        };
        Ok(Resolved {
            name: self.name.clone().or(file.name),
            problem_source: file.problem_source,
            variants,
            run_config: cfg,
            jobs: self.jobs.or(file.jobs),
            out: self.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("results")),
        })
    }
}

impl Resolved {
    pub fn into_spec(self, default_name: &str, source: ProblemSource) -> ExperimentSpec {
        let name = self.name.unwrap_or_else(|| default_name.to_string());
        let mut spec = ExperimentSpec::new(&name, source, self.out.join(format!("{name}.csv")));
        spec.summary_path = Some(self.out.join(format!("{name}.json")));
        spec.variants = self.variants;
        spec.run_config = self.run_config;
        spec.jobs = self.jobs;
        spec
    }
}
