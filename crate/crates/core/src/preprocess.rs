//! QPE preprocessing: estimate which eigenvalues `|b⟩` actually touches, and how strongly.
//!
//! Grid convention: with `n` clock qubits and time scale `t0`, clock integer `g`
//! decodes to `λ̃ = 2π·g / t0`. In signed mode `g ≥ 2^{n-1}` is read in two's
//! complement, i.e. as `g - 2^n`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{HhlError, Result};
use crate::qlsp::{evolution_unitary, Qlsp};
use crate::sim::{
    apply_circuit, qft, sample_distribution, state_preparation_unitary, Circuit, Control, Gate,
    Histogram, StateVector,
};

/// Upper bound on QPE runs spent by the iterative `t0` search.
pub const MAX_ITERATIONS: usize = 12;

/// How the evolution time scale `t0` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum T0Mode {
    /// `2π(2^k - 1) / λ_max` (positive levels only in signed mode).
    Fixed,
    /// Caller supplies the HHL-circuit `t0` directly.
    Explicit(f64),
    /// Search with QPE runs until `λ_max` sits on the top non-overflowing grid value.
    Iterative,
}

/// Sampling used for QPE runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Born probabilities, no shot noise.
    Exact,
    Shots { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub bit_width: usize,
    pub sampling: Sampling,
    /// Amplitude threshold `√(count/shots)` an estimate must reach to count as relevant.
    /// `None` means `2^{-n/2}` for an `n`-bit run, i.e. a frequency of at least `2^{-n}`.
    pub relevance_threshold: Option<f64>,
    pub t0_mode: T0Mode,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            bit_width: 5,
            sampling: Sampling::Shots {
                shots: 4096,
                seed: 0,
            },
            relevance_threshold: None,
            t0_mode: T0Mode::Fixed,
        }
    }
}

impl PreprocessConfig {
    pub fn threshold_for(&self, bits: usize) -> f64 {
        self.relevance_threshold
            .unwrap_or_else(|| 2f64.powf(-(bits as f64) / 2.0))
    }

    pub fn validate(&self) -> Result<()> {
        if self.bit_width < 1 {
            return Err(HhlError::InvalidArgument("bit width must be >= 1".into()));
        }
        if let Some(t) = self.relevance_threshold {
            if !(t > 0.0 && t < 1.0) {
                return Err(HhlError::InvalidArgument(format!(
                    "relevance threshold {t} outside (0, 1)"
                )));
            }
        }
        if let Sampling::Shots { shots: 0, .. } = self.sampling {
            return Err(HhlError::InvalidArgument("shots must be at least 1".into()));
        }
        if let T0Mode::Explicit(t) = self.t0_mode {
            if !(t > 0.0 && t.is_finite()) {
                return Err(HhlError::InvalidArgument(format!("explicit t0 {t} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "(u64, f64, f64)", from = "(u64, f64, f64)")]
pub struct EigenEstimate {
    pub grid_int: u64,
    pub lambda_tilde: f64,
    /// `√(count/shots)`, an estimate of `|β|` for this grid value.
    pub weight: f64,
}

impl From<EigenEstimate> for (u64, f64, f64) {
    fn from(e: EigenEstimate) -> Self {
        (e.grid_int, e.lambda_tilde, e.weight)
    }
}

impl From<(u64, f64, f64)> for EigenEstimate {
    fn from((grid_int, lambda_tilde, weight): (u64, f64, f64)) -> Self {
        Self {
            grid_int,
            lambda_tilde,
            weight,
        }
    }
}

/// Relevant eigenvalue estimates, heaviest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenEstimateSet {
    #[serde(rename = "l")]
    pub bit_width: usize,
    #[serde(rename = "t0")]
    pub time_scale: f64,
    #[serde(rename = "signed")]
    pub signed_mode: bool,
    pub entries: Vec<EigenEstimate>,
}

impl EigenEstimateSet {
    /// Spacing of the estimate grid in eigenvalue units.
    pub fn grid_step(&self) -> f64 {
        2.0 * PI / self.time_scale
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Signed reading of a clock integer.
pub fn decode_grid(grid_int: u64, bits: usize, signed: bool) -> i64 {
    let size = 1i64 << bits;
    let g = grid_int as i64;
    if signed && g >= size / 2 {
        g - size
    } else {
        g
    }
}

/// Clock integer holding the signed grid value `g`, or `None` when it does not fit.
pub fn encode_grid(g: i64, bits: usize, signed: bool) -> Option<u64> {
    let size = 1i64 << bits;
    let (lo, hi) = if signed { (-size / 2, size / 2 - 1) } else { (0, size - 1) };
    if g < lo || g > hi {
        None
    } else {
        Some(g.rem_euclid(size) as u64)
    }
}

/// `H^{⊗n}` on the clock, controlled `U^{2^r}` from clock qubit `r`, then the inverse QFT.
///
/// `U^{2^r} = exp(i A t0 2^r / T)` with `T = 2^n`, so eigenvalue `λ` lands on clock integer `λ t0 / 2π`.
pub fn qpe_block(qlsp: &Qlsp, num_qubits: usize, clock: &[usize], b: &[usize], t0: f64) -> Circuit {
    let big_t = (1u64 << clock.len()) as f64;
    let mut c = Circuit::new(num_qubits);
    for &q in clock {
        c.push(Gate::h(q));
    }
    for (r, &q) in clock.iter().enumerate() {
        let u = evolution_unitary(qlsp, t0, 1u64 << r, big_t);
        c.push(Gate::unitary(u, b.to_vec()).controlled_by(Control::on_one(q)));
    }
    c.extend(&qft(num_qubits, clock).inverse());
    c
}

/// Stand-alone QPE circuit: registers `c` (clock, low qubits) then `b`.
pub fn build_qpe_circuit(qlsp: &Qlsp, bits: usize, t0: f64) -> Result<Circuit> {
    if bits < 1 {
        return Err(HhlError::InvalidArgument("QPE needs at least one clock qubit".into()));
    }
    let mut circuit = Circuit::new(0);
    let clock = circuit.add_register("c", bits);
    let b = circuit.add_register("b", qlsp.num_qubits());
    let clock_q: Vec<usize> = clock.qubits().collect();
    let b_q: Vec<usize> = b.qubits().collect();
    circuit.push(Gate::unitary(state_preparation_unitary(qlsp.vector_b())?, b_q.clone()));
    let block = qpe_block(qlsp, circuit.num_qubits, &clock_q, &b_q, t0);
    circuit.extend(&block);
    Ok(circuit)
}

/// Exact clock-register distribution after QPE.
pub fn qpe_distribution(qlsp: &Qlsp, bits: usize, t0: f64) -> Result<Vec<f64>> {
    let circuit = build_qpe_circuit(qlsp, bits, t0)?;
    let state = apply_circuit(&StateVector::zero(circuit.num_qubits)?, &circuit)?;
    let clock: Vec<usize> = (0..bits).collect();
    state.marginal_probabilities(&clock)
}

/// Runs QPE and returns clock-outcome frequencies (exact or sampled).
pub fn qpe_frequencies(qlsp: &Qlsp, bits: usize, t0: f64, sampling: Sampling) -> Result<Vec<f64>> {
    let probs = qpe_distribution(qlsp, bits, t0)?;
    match sampling {
        Sampling::Exact => Ok(probs),
        Sampling::Shots { shots, seed } => {
            let h = sample_distribution(&probs, bits, shots, seed)?;
            Ok(histogram_frequencies(&h, bits))
        }
    }
}

fn histogram_frequencies(h: &Histogram, bits: usize) -> Vec<f64> {
    let mut freqs = vec![0.0; 1usize << bits];
    for (g, count) in h.integer_counts() {
        if let Some(slot) = freqs.get_mut(g as usize) {
            *slot += count as f64 / h.shots as f64;
        }
    }
    freqs
}

/// Decodes a measured clock histogram into relevant eigenvalue estimates.
pub fn extract_estimates(
    histogram: &Histogram,
    bits: usize,
    t0: f64,
    threshold: f64,
    signed_mode: bool,
) -> Result<EigenEstimateSet> {
    if histogram.shots == 0 || histogram.counts.is_empty() {
        return Err(HhlError::InvalidArgument("empty histogram".into()));
    }
    estimates_from_frequencies(&histogram_frequencies(histogram, bits), bits, t0, threshold, signed_mode)
}

/// Same as [`extract_estimates`] but starting from outcome frequencies indexed by clock integer.
pub fn estimates_from_frequencies(
    freqs: &[f64],
    bits: usize,
    t0: f64,
    threshold: f64,
    signed_mode: bool,
) -> Result<EigenEstimateSet> {
    let mut entries: Vec<EigenEstimate> = freqs
        .iter()
        .enumerate()
        .filter_map(|(g, &f)| {
            let weight = f.max(0.0).sqrt();
            (weight >= threshold).then(|| EigenEstimate {
                grid_int: g as u64,
                lambda_tilde: 2.0 * PI * decode_grid(g as u64, bits, signed_mode) as f64 / t0,
                weight,
            })
        })
        .collect();
    if entries.is_empty() {
        return Err(HhlError::EmptyEstimates { threshold });
    }
    entries.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.grid_int.cmp(&b.grid_int)));
    Ok(EigenEstimateSet {
        bit_width: bits,
        time_scale: t0,
        signed_mode,
        entries,
    })
}

/// Runs preprocessing QPE and extracts the relevant estimates.
pub fn preprocess(
    qlsp: &Qlsp,
    bits: usize,
    t0: f64,
    config: &PreprocessConfig,
    signed_mode: bool,
) -> Result<EigenEstimateSet> {
    let freqs = qpe_frequencies(qlsp, bits, t0, config.sampling)?;
    estimates_from_frequencies(&freqs, bits, t0, config.threshold_for(bits), signed_mode)
}

/// Largest positive grid value that does not overflow `bits` clock qubits.
pub fn top_grid_value(bits: usize, signed: bool) -> u64 {
    if signed {
        (1u64 << (bits - 1)) - 1
    } else {
        (1u64 << bits) - 1
    }
}

/// `2π(2^k - 1) / λ_max`: puts `λ_max` exactly on the top unsigned `k`-bit grid value.
pub fn fixed_t0(lambda_max: f64, k: usize) -> Result<f64> {
    fixed_t0_for_levels(lambda_max, top_grid_value(k, false))
}

/// Signed counterpart of [`fixed_t0`]: `2π(2^{k-1} - 1) / λ_max`.
pub fn fixed_t0_signed(lambda_max: f64, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(HhlError::InvalidArgument("signed grid needs k >= 2".into()));
    }
    fixed_t0_for_levels(lambda_max, top_grid_value(k, true))
}

fn fixed_t0_for_levels(lambda_max: f64, levels: u64) -> Result<f64> {
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(HhlError::InvalidArgument(format!(
            "lambda_max {lambda_max} must be positive"
        )));
    }
    Ok(2.0 * PI * levels as f64 / lambda_max)
}

/// Result of the iterative time-scale search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterativeT0 {
    /// Time scale for the `l`-bit preprocessing grid.
    pub t0: f64,
    /// QPE runs spent, verification included.
    pub qpe_runs: usize,
}

/// Searches the `l`-bit time scale that places the largest relevant eigenvalue on the top
/// `k`-bit grid value (`(2^k - 1)·2^{l-k}` in `l`-bit units), without overflow.
///
/// Starts at `2π/2^l` (every estimate decodes to zero when `‖A‖ ≤ 1`), doubles while the
/// doubled peak would still fit, then rescales by the ratio of target to measured peak
/// position. A final run at `t0/2^l` puts every unaliased eigenvalue below one grid step, so
/// its dominant estimates must decode to `|g| ≤ 1`; otherwise the start was aliased and
/// [`HhlError::AliasingDetected`] is returned.
pub fn iterative_t0(
    qlsp: &Qlsp,
    config: &PreprocessConfig,
    target_bits: usize,
    signed_mode: bool,
) -> Result<IterativeT0> {
    let l = config.bit_width;
    if target_bits > l || (signed_mode && target_bits < 2) {
        return Err(HhlError::InvalidArgument(format!(
            "target width {target_bits} incompatible with {l}-bit preprocessing"
        )));
    }
    let target = (top_grid_value(target_bits, signed_mode) << (l - target_bits)) as f64;
    let mut t0 = 2.0 * PI / (1u64 << l) as f64;
    let mut runs = 0usize;

    // doubling phase
    let mut peak = peak_position(qlsp, t0, config, signed_mode)?;
    runs += 1;
    while 2.0 * peak <= target && runs < MAX_ITERATIONS {
        t0 *= 2.0;
        peak = peak_position(qlsp, t0, config, signed_mode)?;
        runs += 1;
    }
    if peak <= 0.0 {
        return Err(HhlError::InvalidArgument(format!(
            "no nonzero eigenvalue estimate after {runs} QPE runs"
        )));
    }
    // ratio refinement
    while runs + 1 < MAX_ITERATIONS {
        let next = t0 * target / peak;
        if (next / t0 - 1.0).abs() < 1e-9 {
            break;
        }
        let next_peak = peak_position(qlsp, next, config, signed_mode)?;
        runs += 1;
        if next_peak <= 0.0 || next_peak > target + 0.5 {
            break;
        }
        t0 = next;
        peak = next_peak;
        if (peak - target).abs() < 1e-6 {
            break;
        }
    }

    let check_t0 = t0 / (1u64 << l) as f64;
    let check = preprocess(qlsp, l, check_t0, config, signed_mode)?;
    runs += 1;
    let heaviest = check.entries[0].weight;
    if check
        .entries
        .iter()
        .any(|e| e.weight >= 0.5 * heaviest && decode_grid(e.grid_int, l, signed_mode).abs() > 1)
    {
        return Err(HhlError::AliasingDetected { t0: check_t0 });
    }
    Ok(IterativeT0 { t0, qpe_runs: runs })
}

/// Interpolated grid position of the largest-magnitude dominant eigenvalue peak.
///
/// Dominant bins carry at least half the heaviest weight. The position inside the bin
/// pair uses the Dirichlet-kernel ratio `√(P(g±1)/P(g)) ≈ f/(1-f)`.
fn peak_position(qlsp: &Qlsp, t0: f64, config: &PreprocessConfig, signed: bool) -> Result<f64> {
    let l = config.bit_width;
    let freqs = qpe_frequencies(qlsp, l, t0, config.sampling)?;
    let set = estimates_from_frequencies(&freqs, l, t0, config.threshold_for(l), signed)?;
    let heaviest = set.entries[0].weight;
    let top = set
        .entries
        .iter()
        .filter(|e| e.weight >= 0.5 * heaviest)
        .max_by_key(|e| decode_grid(e.grid_int, l, signed).abs())
        .copied()
        .expect("entries are nonempty");
    let g = decode_grid(top.grid_int, l, signed);
    if g == 0 {
        return Ok(0.0);
    }
    let prob = |v: i64| encode_grid(v, l, signed).map_or(0.0, |i| freqs[i as usize]);
    let p0 = prob(g);
    let (outer, inner) = (prob(g + g.signum()), prob(g - g.signum()));
    let magnitude = g.unsigned_abs() as f64;
    let shift = |p: f64| {
        let s = (p / p0).sqrt();
        s / (1.0 + s)
    };
    Ok(if outer >= inner {
        magnitude + shift(outer)
    } else {
        magnitude - shift(inner)
    })
}
