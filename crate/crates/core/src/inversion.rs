//! Eigenvalue inversion: which clock patterns get a controlled `RY`, and at what angle.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{HhlError, Result};
use crate::preprocess::{decode_grid, encode_grid, EigenEstimateSet};
use crate::sim::{Circuit, Control, Gate};

/// Rotation amplitudes within this distance of 1 are treated as exactly 1.
const CLAMP_SLACK: f64 = 1e-12;

/// Ordered list of pattern-controlled `RY(θ)` rotations onto the inversion ancilla.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionPlan {
    #[serde(rename = "k")]
    pub bit_width: usize,
    #[serde(rename = "C")]
    pub constant_c: f64,
    /// `(clock integer, θ)`; bit `r` of the integer fixes the polarity of clock qubit `r`.
    pub rotations: Vec<(u64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl InversionPlan {
    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn patterns(&self) -> Vec<u64> {
        self.rotations.iter().map(|r| r.0).collect()
    }

    pub fn angle(&self, pattern: u64) -> Option<f64> {
        self.rotations.iter().find(|r| r.0 == pattern).map(|r| r.1)
    }

    pub fn validate(&self) -> Result<()> {
        let size = 1u64 << self.bit_width;
        let mut seen = std::collections::BTreeSet::new();
        for &(pattern, theta) in &self.rotations {
            if pattern >= size {
                return Err(HhlError::InvalidArgument(format!(
                    "pattern {pattern} does not fit {} bits",
                    self.bit_width
                )));
            }
            if !seen.insert(pattern) {
                return Err(HhlError::InvalidArgument(format!("duplicate pattern {pattern}")));
            }
            if !(theta.abs() <= PI + CLAMP_SLACK) {
                return Err(HhlError::InvalidArgument(format!("angle {theta} outside [-π, π]")));
            }
        }
        Ok(())
    }
}

/// Overlap profile between a true phase and a clock basis state at phase distance `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaModel {
    /// `max(0, 1 - δ/2π)`.
    #[default]
    Linear,
    /// Closed form for a `T`-level clock, normalized so `α(0) = 1`.
    Exact,
}

/// How an enhanced pattern angle is formed from the estimates that touch it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnglePolicy {
    /// `x̄ = Σ αβ/λ̃ / Σ αβ`: average of `1/λ̃` weighted by `αβ`.
    #[default]
    #[serde(rename = "paper")]
    WeightedAverage,
    /// `x̄ = Σ (αβ)²/λ̃ / Σ (αβ)²`: minimizer of `Σ |αβ(1/λ̃ - x̄)|²`.
    LeastSquares,
    /// `θ = arcsin((2/r) Σ αβ/λ̃)` with `r` the number of contributing estimates, argument clamped.
    /// Kept for comparison; it does not reduce to the hybrid angles on grid-aligned input.
    Printed,
}

/// `h = C/λ̃`, or 0 when `|λ̃| < C` (also 0 for the zero estimate).
pub fn inversion_amplitude(lambda_tilde: f64, c: f64) -> f64 {
    if lambda_tilde.abs() < c * (1.0 - CLAMP_SLACK) || lambda_tilde == 0.0 {
        0.0
    } else {
        (c / lambda_tilde).clamp(-1.0, 1.0)
    }
}

/// `α(δ)` for a phase distance `δ ≥ 0` (adjacent clock states are `2π` apart).
pub fn alpha_overlap(delta: f64, model: AlphaModel, big_t: u64) -> f64 {
    let delta = delta.abs();
    match model {
        AlphaModel::Linear => (1.0 - delta / (2.0 * PI)).max(0.0),
        AlphaModel::Exact => {
            let t = big_t as f64;
            (alpha_exact_raw(delta, t) / alpha_exact_raw(0.0, t)).clamp(0.0, 1.0)
        }
    }
}

/// `(√2/T) sin(π/(2T)) |cos(δ/2T) cos(δ/2)| / |sin((δ+π)/2T) sin((δ-π)/2T)|`.
///
/// At `δ = π` numerator and denominator vanish together; the limit is `1/√2`.
fn alpha_exact_raw(delta: f64, t: f64) -> f64 {
    let num = (delta / (2.0 * t)).cos() * (delta / 2.0).cos();
    let den = ((delta + PI) / (2.0 * t)).sin() * ((delta - PI) / (2.0 * t)).sin();
    if (delta - PI).abs() < 1e-9 {
        return std::f64::consts::FRAC_1_SQRT_2;
    }
    (2f64.sqrt() / t) * (PI / (2.0 * t)).sin() * num.abs() / den.abs()
}

/// Mean squared deviation between the linear and exact models over `δ ∈ [0, 2π]`,
/// midpoint rule with `samples` points.
pub fn alpha_linear_msd(big_t: u64, samples: usize) -> f64 {
    let samples = samples.max(1);
    (0..samples)
        .map(|i| {
            let delta = 2.0 * PI * (i as f64 + 0.5) / samples as f64;
            (alpha_overlap(delta, AlphaModel::Linear, big_t) - alpha_overlap(delta, AlphaModel::Exact, big_t)).powi(2)
        })
        .sum::<f64>()
        / samples as f64
}

fn rotation_angle(amplitude: f64) -> f64 {
    2.0 * amplitude.clamp(-1.0, 1.0).asin()
}

/// Every nonzero `k`-bit pattern with `θ = 2 arcsin(C/λ̃)`; `C` defaults to the grid step `2π/t0`.
pub fn plan_canonical(k: usize, c: Option<f64>, t0: f64, signed_mode: bool) -> Result<InversionPlan> {
    if k < 1 || (signed_mode && k < 2) {
        return Err(HhlError::InvalidArgument(format!("clock width {k} too small")));
    }
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(HhlError::InvalidArgument(format!("t0 {t0} must be positive")));
    }
    let step = 2.0 * PI / t0;
    let c = c.unwrap_or(step);
    let rotations = (1..1u64 << k)
        .map(|pattern| {
            let lambda = step * decode_grid(pattern, k, signed_mode) as f64;
            (pattern, rotation_angle(inversion_amplitude(lambda, c)))
        })
        .collect();
    Ok(InversionPlan {
        bit_width: k,
        constant_c: c,
        rotations,
        warnings: Vec::new(),
    })
}

/// One rotation per relevant nonzero `k`-bit estimate; `C` is the smallest relevant `|λ̃|`.
pub fn plan_hybrid(estimates: &EigenEstimateSet) -> Result<InversionPlan> {
    let relevant: Vec<_> = estimates.entries.iter().filter(|e| e.lambda_tilde != 0.0).collect();
    if relevant.is_empty() {
        return Err(HhlError::EmptyPlan);
    }
    let c = relevant
        .iter()
        .map(|e| e.lambda_tilde.abs())
        .fold(f64::INFINITY, f64::min);
    let mut rotations: Vec<(u64, f64)> = relevant
        .iter()
        .map(|e| (e.grid_int, rotation_angle(inversion_amplitude(e.lambda_tilde, c))))
        .collect();
    rotations.sort_by_key(|r| r.0);
    Ok(InversionPlan {
        bit_width: estimates.bit_width,
        constant_c: c,
        rotations,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhancedOptions {
    /// Minimum normalized pattern relevance; `None` means `2^{-k}`.
    pub filter_threshold: Option<f64>,
    pub angle_policy: AnglePolicy,
    pub alpha_model: AlphaModel,
}

impl Default for EnhancedOptions {
    fn default() -> Self {
        Self {
            filter_threshold: None,
            angle_policy: AnglePolicy::WeightedAverage,
            alpha_model: AlphaModel::Linear,
        }
    }
}

/// Per-pattern bookkeeping behind an enhanced plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternContribution {
    pub pattern: u64,
    pub grid_value: i64,
    /// `(λ̃_l, β_l, α_{k|l})` for each estimate touching this pattern with `α > 0`.
    pub sources: Vec<(f64, f64, f64)>,
    /// `Σ βα/λ̃` divided by its L2 norm over all touched patterns.
    pub relevance: f64,
    pub kept: bool,
}

/// Maps high-precision estimates onto the `k`-bit grid of `t0_k`.
///
/// Each estimate at fractional grid position `p = λ̃ t0_k / 2π` touches `⌊p⌋` and `⌊p⌋+1`
/// with `α(2π|p - g|)`; an estimate exactly on the grid touches only its own point.
/// The zero pattern (and the most negative one in signed mode) has no inverse and is skipped.
pub fn enhanced_contributions(
    estimates: &EigenEstimateSet,
    k: usize,
    t0_k: f64,
    options: &EnhancedOptions,
) -> Result<Vec<PatternContribution>> {
    if estimates.bit_width <= k {
        return Err(HhlError::InvalidArgument(format!(
            "enhanced plans need l > k (l = {}, k = {k})",
            estimates.bit_width
        )));
    }
    let signed = estimates.signed_mode;
    let big_t = 1u64 << k;
    let forbidden = signed.then(|| -(1i64 << (k - 1)));
    let mut touched: BTreeMap<i64, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for e in &estimates.entries {
        if e.lambda_tilde == 0.0 {
            continue;
        }
        let p = e.lambda_tilde * t0_k / (2.0 * PI);
        let nearest = p.round();
        let neighbours: Vec<i64> = if (p - nearest).abs() < 1e-9 {
            vec![nearest as i64]
        } else {
            vec![p.floor() as i64, p.floor() as i64 + 1]
        };
        for g in neighbours {
            if g == 0 || Some(g) == forbidden || encode_grid(g, k, signed).is_none() {
                continue;
            }
            let alpha = alpha_overlap(2.0 * PI * (p - g as f64).abs(), options.alpha_model, big_t);
            if alpha > 0.0 {
                touched.entry(g).or_default().push((e.lambda_tilde, e.weight, alpha));
            }
        }
    }
    let raw: Vec<(i64, f64)> = touched
        .iter()
        .map(|(&g, src)| (g, src.iter().map(|(l, b, a)| b * a / l).sum::<f64>()))
        .collect();
    let norm = raw.iter().map(|(_, r)| r * r).sum::<f64>().sqrt();
    let threshold = options
        .filter_threshold
        .unwrap_or_else(|| 0.5f64.powi(k as i32));
    Ok(touched
        .into_iter()
        .zip(raw)
        .map(|((g, sources), (_, r))| {
            let relevance = if norm > 0.0 { r.abs() / norm } else { 0.0 };
            PatternContribution {
                pattern: encode_grid(g, k, signed).expect("checked above"),
                grid_value: g,
                sources,
                relevance,
                kept: relevance >= threshold,
            }
        })
        .collect())
}

/// Enhanced plan: `θ = 2 arcsin(C·x̄)` on every kept pattern, `C` the smallest contributing `|λ̃_l|`.
pub fn plan_enhanced(
    estimates: &EigenEstimateSet,
    k: usize,
    t0_k: f64,
    options: &EnhancedOptions,
) -> Result<InversionPlan> {
    let contributions = enhanced_contributions(estimates, k, t0_k, options)?;
    let kept: Vec<&PatternContribution> = contributions.iter().filter(|c| c.kept).collect();
    if kept.is_empty() {
        return Err(HhlError::EmptyPlan);
    }
    let c = kept
        .iter()
        .flat_map(|p| p.sources.iter().map(|s| s.0.abs()))
        .fold(f64::INFINITY, f64::min);
    let mut warnings = Vec::new();
    let rotations = kept
        .iter()
        .map(|p| {
            if options.angle_policy == AnglePolicy::Printed {
                let r = p.sources.len() as f64;
                let arg = 2.0 / r * p.sources.iter().map(|&(l, b, a)| a * b / l).sum::<f64>();
                if arg.abs() > 1.0 + CLAMP_SLACK {
                    warnings.push(format!("pattern {}: arcsin argument {arg} clamped", p.pattern));
                }
                return (p.pattern, arg.clamp(-1.0, 1.0).asin());
            }
            let weight = |beta: f64, alpha: f64| match options.angle_policy {
                AnglePolicy::LeastSquares => (beta * alpha).powi(2),
                _ => beta * alpha,
            };
            let total: f64 = p.sources.iter().map(|&(_, b, a)| weight(b, a)).sum();
            let x_bar = p.sources.iter().map(|&(l, b, a)| weight(b, a) / l).sum::<f64>() / total;
            let amplitude = c * x_bar;
            if amplitude.abs() > 1.0 + CLAMP_SLACK {
                warnings.push(format!(
                    "pattern {}: arcsin argument {amplitude} clamped",
                    p.pattern
                ));
            }
            (p.pattern, rotation_angle(amplitude))
        })
        .collect();
    Ok(InversionPlan {
        bit_width: k,
        constant_c: c,
        rotations,
        warnings,
    })
}

/// One multi-controlled `RY(θ)` on `ancilla` per rotation; pattern bit `r` selects the
/// polarity of `clock[r]`.
pub fn build_inversion_circuit(
    plan: &InversionPlan,
    num_qubits: usize,
    clock: &[usize],
    ancilla: usize,
) -> Result<Circuit> {
    if clock.len() != plan.bit_width {
        return Err(HhlError::DimensionMismatch {
            expected: plan.bit_width,
            found: clock.len(),
        });
    }
    plan.validate()?;
    let mut circuit = Circuit::new(num_qubits);
    for &(pattern, theta) in &plan.rotations {
        let controls = clock.iter().enumerate().map(|(r, &q)| {
            if pattern >> r & 1 == 1 {
                Control::on_one(q)
            } else {
                Control::on_zero(q)
            }
        });
        circuit.push(Gate::ry(theta, ancilla).with_controls(controls));
    }
    Ok(circuit)
}
