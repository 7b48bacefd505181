//! Full HHL runs: preprocessing, planning, circuit assembly, simulation and readout.
//!
//! Register layout: ancilla `a` on qubit 0, clock `c` on qubits `1..=k`, solution `b` above.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HhlError, Result};
use crate::inversion::{
    build_inversion_circuit, plan_canonical, plan_enhanced, plan_hybrid, EnhancedOptions,
    InversionPlan,
};
use crate::preprocess::{
    fixed_t0, fixed_t0_signed, iterative_t0, preprocess, EigenEstimateSet, PreprocessConfig, T0Mode,
};
use crate::qlsp::{classical_solution, Qlsp};
use crate::sim::{
    apply_circuit, inject_noise, postselect, sample, state_preparation_unitary, Circuit, Control,
    Gate, GateReport, Histogram, NoiseSpec, StateVector, MAX_QUBITS,
};

/// Post-selection probabilities below this are treated as a failed run.
const MIN_SUCCESS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Canonical,
    Hybrid,
    Enhanced,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Canonical, Variant::Hybrid, Variant::Enhanced];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Canonical => "canonical",
            Variant::Hybrid => "hybrid",
            Variant::Enhanced => "enhanced",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = HhlError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| HhlError::InvalidArgument(format!("unknown variant {s:?}")))
    }
}

/// How the solution register is compared against the classical solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum Readout {
    /// Projection onto ancilla = 1, then `√⟨x|ρ_b|x⟩`.
    Exact,
    SwapTest { shots: u64, seed: u64 },
    DirectSample { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub variant: Variant,
    pub clock_bits: usize,
    /// Preprocessing settings; `bit_width` is `l`. Hybrid runs always preprocess with `k` bits.
    pub preprocess: PreprocessConfig,
    pub enhanced: EnhancedOptions,
    pub readout: Readout,
    pub noise: Option<NoiseSpec>,
    /// Two's complement clock decoding; `None` enables it only when the spectrum has negative values.
    pub signed_mode: Option<bool>,
    /// Eigenvalue bound for the fixed `t0` formula; `None` uses the exact `max |λ|`.
    /// Problems are normalized to `‖A‖ ≤ 1`, so the default bound is 1.
    pub lambda_bound: Option<f64>,
}

impl RunConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            clock_bits: 3,
            preprocess: PreprocessConfig::default(),
            enhanced: EnhancedOptions::default(),
            readout: Readout::Exact,
            noise: None,
            signed_mode: Some(true),
            lambda_bound: Some(1.0),
        }
    }

    pub fn preprocess_bits(&self) -> usize {
        self.preprocess.bit_width
    }

    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        let k = self.clock_bits;
        if k < 1 {
            return Err(HhlError::InvalidArgument("clock width must be >= 1".into()));
        }
        if self.variant == Variant::Enhanced && self.preprocess.bit_width <= k {
            return Err(HhlError::InvalidArgument(format!(
                "enhanced runs need l > k (l = {}, k = {k})",
                self.preprocess.bit_width
            )));
        }
        if let Some(bound) = self.lambda_bound {
            if !(bound > 0.0 && bound.is_finite()) {
                return Err(HhlError::InvalidArgument(format!("lambda bound {bound} must be positive")));
            }
        }
        if let Some(t) = self.enhanced.filter_threshold {
            if !(0.0..1.0).contains(&t) {
                return Err(HhlError::InvalidArgument(format!("filter threshold {t} outside [0, 1)")));
            }
        }
        match self.readout {
            Readout::SwapTest { shots: 0, .. } | Readout::DirectSample { shots: 0, .. } => {
                return Err(HhlError::InvalidArgument("readout shots must be >= 1".into()))
            }
            _ => {}
        }
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        Ok(())
    }

    fn signed_for(&self, qlsp: &Qlsp) -> bool {
        self.signed_mode.unwrap_or_else(|| qlsp.has_negative_eigenvalues())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub variant: Variant,
    pub fidelity: f64,
    pub error: f64,
    pub success_probability: f64,
    pub gate_report: GateReport,
    pub plan_used: InversionPlan,
    /// Time scale of the `k`-bit HHL clock.
    pub t0: f64,
    pub signed_mode: bool,
    pub estimates: Option<EigenEstimateSet>,
    /// QPE executions spent choosing `t0`.
    pub t0_search_runs: usize,
    /// Solution register conditioned on ancilla = 1 and clock = 0, phase-aligned.
    pub solution_state: Option<Vec<Complex64>>,
}

/// `√(2(1 - f))`, the distance between unit vectors with real overlap `f`.
pub fn error_from_fidelity(f: f64) -> f64 {
    (2.0 * (1.0 - f)).max(0.0).sqrt()
}

/// Rotates the global phase so the largest-magnitude entry is real and nonnegative.
pub fn align_phase(v: &[Complex64]) -> Vec<Complex64> {
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap_or_default();
    if pivot.norm() == 0.0 {
        return v.to_vec();
    }
    let rot = pivot.conj() / pivot.norm();
    v.iter().map(|a| a * rot).collect()
}

/// The `k`-bit HHL time scale and the number of QPE runs spent finding it.
pub fn resolve_t0(qlsp: &Qlsp, config: &RunConfig) -> Result<(f64, usize)> {
    let k = config.clock_bits;
    let signed = config.signed_for(qlsp);
    let fixed = || {
        let bound = config.lambda_bound.unwrap_or_else(|| qlsp.max_abs_eigenvalue());
        if signed {
            fixed_t0_signed(bound, k)
        } else {
            fixed_t0(bound, k)
        }
    };
    match (config.preprocess.t0_mode, config.variant) {
        (T0Mode::Explicit(t), _) => Ok((t, 0)),
        (T0Mode::Fixed, _) | (T0Mode::Iterative, Variant::Canonical) => Ok((fixed()?, 0)),
        (T0Mode::Iterative, variant) => {
            let mut pre = config.preprocess.clone();
            if variant == Variant::Hybrid {
                pre.bit_width = k;
            }
            let found = iterative_t0(qlsp, &pre, k, signed)?;
            Ok((found.t0 / (1u64 << (pre.bit_width - k)) as f64, found.qpe_runs))
        }
    }
}

/// Preprocessing (if any) and the inversion plan for `config.variant` at clock time `t0_k`.
pub fn plan_for(
    qlsp: &Qlsp,
    config: &RunConfig,
    t0_k: f64,
) -> Result<(InversionPlan, Option<EigenEstimateSet>)> {
    let k = config.clock_bits;
    let signed = config.signed_for(qlsp);
    match config.variant {
        Variant::Canonical => Ok((plan_canonical(k, None, t0_k, signed)?, None)),
        Variant::Hybrid => {
            let est = preprocess(qlsp, k, t0_k, &config.preprocess, signed)?;
            Ok((plan_hybrid(&est)?, Some(est)))
        }
        Variant::Enhanced => {
            let l = config.preprocess.bit_width;
            let t0_l = t0_k * (1u64 << (l - k)) as f64;
            let est = preprocess(qlsp, l, t0_l, &config.preprocess, signed)?;
            Ok((plan_enhanced(&est, k, t0_k, &config.enhanced)?, Some(est)))
        }
    }
}

/// Prep `|b⟩`, QPE on `k` clock qubits, inversion, then the adjoint of the QPE block.
pub fn assemble_hhl(qlsp: &Qlsp, k: usize, t0: f64, plan: &InversionPlan) -> Result<Circuit> {
    if plan.bit_width != k {
        return Err(HhlError::DimensionMismatch {
            expected: k,
            found: plan.bit_width,
        });
    }
    let requested = 1 + k + qlsp.num_qubits();
    if requested > MAX_QUBITS {
        return Err(HhlError::Capacity {
            requested,
            limit: MAX_QUBITS,
        });
    }
    let mut circuit = Circuit::new(0);
    let a = circuit.add_register("a", 1).start;
    let clock: Vec<usize> = circuit.add_register("c", k).qubits().collect();
    let b: Vec<usize> = circuit.add_register("b", qlsp.num_qubits()).qubits().collect();
    let n = circuit.num_qubits;
    circuit.push(Gate::unitary(state_preparation_unitary(qlsp.vector_b())?, b.clone()));
    let qpe = crate::preprocess::qpe_block(qlsp, n, &clock, &b, t0);
    circuit.extend(&qpe);
    circuit.extend(&build_inversion_circuit(plan, n, &clock, a)?);
    circuit.extend(&qpe.inverse());
    circuit.validate()?;
    Ok(circuit)
}

/// Runs one HHL instance and scores it against the classical solution.
pub fn run(qlsp: &Qlsp, config: &RunConfig) -> Result<RunResult> {
    run_inner(qlsp, config, false)
}

/// Like [`run`], but an empty ancilla branch scores fidelity 0 (error `√2`) instead of failing.
/// Noisy batches use this so one unlucky trajectory does not abort the experiment.
pub fn run_scoring_degenerate(qlsp: &Qlsp, config: &RunConfig) -> Result<RunResult> {
    run_inner(qlsp, config, true)
}

fn run_inner(qlsp: &Qlsp, config: &RunConfig, lenient: bool) -> Result<RunResult> {
    config.validate()?;
    let k = config.clock_bits;
    let (t0, t0_search_runs) = resolve_t0(qlsp, config)?;
    let (plan, estimates) = plan_for(qlsp, config, t0)?;
    let circuit = assemble_hhl(qlsp, k, t0, &plan)?;
    let gate_report = circuit.gate_report();
    let executed = match &config.noise {
        Some(spec) => inject_noise(&circuit, spec),
        None => circuit,
    };
    let state = apply_circuit(&StateVector::zero(executed.num_qubits)?, &executed)?;

    let ancilla = 0;
    let b: Vec<usize> = (k + 1..k + 1 + qlsp.num_qubits()).collect();
    let success_probability = state.marginal_probabilities(&[ancilla])?[1];
    if success_probability < MIN_SUCCESS {
        if !lenient {
            return Err(HhlError::DegenerateRun(success_probability));
        }
        return Ok(RunResult {
            variant: config.variant,
            fidelity: 0.0,
            error: error_from_fidelity(0.0),
            success_probability,
            gate_report,
            plan_used: plan,
            t0,
            signed_mode: config.signed_for(qlsp),
            estimates,
            t0_search_runs,
            solution_state: None,
        });
    }
    let (post, _) = postselect(&state, ancilla, 1)?;
    let x = classical_solution(qlsp).state_x;

    let branch = post.register_slice(&b, 1 << ancilla)?;
    let branch_norm = branch.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let solution_state = (branch_norm > 1e-9)
        .then(|| align_phase(&branch.iter().map(|a| a / branch_norm).collect::<Vec<_>>()));

    let fidelity = match config.readout {
        Readout::Exact => post.register_overlap(&b, &x)?.clamp(0.0, 1.0).sqrt(),
        Readout::SwapTest { shots, seed } => {
            swap_test_fidelity(&state, ancilla, &b, &x, shots, seed)?.estimate
        }
        Readout::DirectSample { shots, seed } => {
            let hist = conditioned_histogram(&state, ancilla, &b, shots, seed)?;
            1.0 - direct_distribution_error(&hist, &x)?.powi(2) / 2.0
        }
    };
    Ok(RunResult {
        variant: config.variant,
        fidelity,
        error: error_from_fidelity(fidelity),
        success_probability,
        gate_report,
        plan_used: plan,
        t0,
        signed_mode: config.signed_for(qlsp),
        estimates,
        t0_search_runs,
        solution_state,
    })
}

/// Outcome of a sampled SWAP test conditioned on the HHL ancilla.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwapEstimate {
    /// Estimate of `|⟨x̃|x⟩|`, in `[0, 1]`.
    pub estimate: f64,
    /// Observed `P(st_a = 1 | a = 1)`.
    pub p_one: f64,
    pub conditioned_shots: u64,
}

/// Appends `|x⟩` on a fresh `st` register, runs `H · CSWAP · H` from an `st_a` qubit and
/// samples `(a, st_a)`; `P(st_a = 1 | a = 1) = (1 - |⟨x̃|x⟩|²)/2`.
pub fn swap_test_fidelity(
    state: &StateVector,
    ancilla: usize,
    b: &[usize],
    x: &[Complex64],
    shots: u64,
    seed: u64,
) -> Result<SwapEstimate> {
    if shots == 0 {
        return Err(HhlError::InsufficientShots);
    }
    if x.len() != 1usize << b.len() {
        return Err(HhlError::DimensionMismatch {
            expected: 1usize << b.len(),
            found: x.len(),
        });
    }
    let base = state.num_qubits();
    let requested = base + b.len() + 1;
    if requested > MAX_QUBITS {
        return Err(HhlError::Capacity {
            requested,
            limit: MAX_QUBITS,
        });
    }
    let extended = state.extend_with_zeros(b.len() + 1)?;
    let mut circuit = Circuit::new(base);
    let st: Vec<usize> = circuit.add_register("st", b.len()).qubits().collect();
    let st_a = circuit.add_register("st_a", 1).start;
    circuit.push(Gate::unitary(state_preparation_unitary(x)?, st.clone()));
    circuit.push(Gate::h(st_a));
    for (&p, &q) in b.iter().zip(&st) {
        circuit.push(Gate::swap(p, q).controlled_by(Control::on_one(st_a)));
    }
    circuit.push(Gate::h(st_a));
    let out = apply_circuit(&extended, &circuit)?;
    let hist = sample(&out, &[ancilla, st_a], shots, seed)?;
    let (zero, one) = (hist.count("01"), hist.count("11"));
    let kept = zero + one;
    if kept == 0 {
        return Err(HhlError::InsufficientShots);
    }
    let p_one = one as f64 / kept as f64;
    Ok(SwapEstimate {
        estimate: (1.0 - 2.0 * p_one).clamp(0.0, 1.0).sqrt(),
        p_one,
        conditioned_shots: kept,
    })
}

/// Samples `(a, b)` and keeps the `b` outcomes of shots with `a = 1`.
pub fn conditioned_histogram(
    state: &StateVector,
    ancilla: usize,
    b: &[usize],
    shots: u64,
    seed: u64,
) -> Result<Histogram> {
    let mut qubits = vec![ancilla];
    qubits.extend_from_slice(b);
    let joint = sample(state, &qubits, shots, seed)?;
    let mut out = Histogram {
        counts: Default::default(),
        shots: 0,
    };
    for (value, count) in joint.integer_counts() {
        if value & 1 == 1 {
            let key = crate::sim::bitstring((value >> 1) as usize, b.len());
            *out.counts.entry(key).or_insert(0) += count;
            out.shots += count;
        }
    }
    if out.shots == 0 {
        return Err(HhlError::InsufficientShots);
    }
    Ok(out)
}

/// Error of the state with amplitudes `√frequency` and the phases of `x`.
pub fn direct_distribution_error(histogram: &Histogram, x: &[Complex64]) -> Result<f64> {
    if histogram.shots == 0 || histogram.counts.is_empty() {
        return Err(HhlError::InvalidArgument("empty histogram".into()));
    }
    let mut overlap = 0.0;
    for (value, count) in histogram.integer_counts() {
        let xi = x.get(value as usize).ok_or(HhlError::DimensionMismatch {
            expected: x.len(),
            found: value as usize + 1,
        })?;
        overlap += (count as f64 / histogram.shots as f64).sqrt() * xi.norm();
    }
    Ok(error_from_fidelity(overlap.min(1.0)))
}

/// `Σ_j |β_j C/λ̃_j|²` for a canonical run whose spectrum lies on the clock grid.
pub fn grid_aligned_success_probability(qlsp: &Qlsp, t0: f64) -> f64 {
    let c = 2.0 * PI / t0;
    qlsp.spectrum()
        .iter()
        .map(|p| (p.projection.norm() * c / p.eigenvalue).powi(2))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::Sampling;
    use crate::qlsp::generate_n2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn fidelity_to_error() {
        assert_eq!(error_from_fidelity(1.0), 0.0);
        assert!((error_from_fidelity(0.5) - 1.0).abs() < 1e-15);
        assert!((error_from_fidelity(0.51) - 0.98995).abs() < 1e-5);
        assert_eq!(error_from_fidelity(1.0 + 1e-15), 0.0);
    }

    #[test]
    fn register_counts() {
        let q = generate_n2(1.0 / 3.0).unwrap();
        let plan = plan_canonical(3, None, 6.0 * PI, false).unwrap();
        let circuit = assemble_hhl(&q, 3, 6.0 * PI, &plan).unwrap();
        assert_eq!(circuit.num_qubits, 5);
        assert_eq!(circuit.register("c").unwrap().len, 3);
        assert_eq!(circuit.rotation_count(), 7);
    }

    #[test]
    fn on_grid_canonical_is_exact() {
        let q = generate_n2(1.0 / 3.0).unwrap();
        let mut cfg = RunConfig::new(Variant::Canonical);
        cfg.preprocess.t0_mode = T0Mode::Explicit(6.0 * PI);
        let r = run(&q, &cfg).unwrap();
        assert!(r.error < 1e-6, "error {}", r.error);
        let expected = grid_aligned_success_probability(&q, 6.0 * PI);
        assert!((r.success_probability - expected).abs() < 1e-9);
        let x = align_phase(&classical_solution(&q).state_x);
        for (a, b) in r.solution_state.unwrap().iter().zip(&x) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn on_grid_hybrid_and_enhanced_are_exact() {
        let q = generate_n2(1.0 / 3.0).unwrap();
        for variant in [Variant::Hybrid, Variant::Enhanced] {
            let mut cfg = RunConfig::new(variant);
            cfg.preprocess.t0_mode = T0Mode::Explicit(6.0 * PI);
            cfg.preprocess.sampling = Sampling::Exact;
            let r = run(&q, &cfg).unwrap();
            assert!(r.error < 1e-6, "{variant}: error {}", r.error);
            assert_eq!(r.plan_used.len(), 2);
        }
    }

    #[test]
    fn swap_identities() {
        // ancilla already 1, b register in |x⟩
        let x = vec![c(0.6), c(0.8)];
        let state = StateVector::from_amplitudes(vec![c(0.0), c(0.6), c(0.0), c(0.8)]).unwrap();
        let same = swap_test_fidelity(&state, 0, &[1], &x, 2048, 1).unwrap();
        assert_eq!(same.p_one, 0.0);
        assert_eq!(same.estimate, 1.0);
        let orth = vec![c(0.8), c(-0.6)];
        let est = swap_test_fidelity(&state, 0, &[1], &orth, 20000, 2).unwrap();
        assert!((est.p_one - 0.5).abs() < 0.02);
        // overlap 0.8 → P(1) = 0.18
        let y = vec![c(1.0), c(0.0)];
        let tilt = StateVector::from_amplitudes(vec![c(0.0), c(0.8), c(0.0), c(0.6)]).unwrap();
        let est = swap_test_fidelity(&tilt, 0, &[1], &y, 4096, 3).unwrap();
        let sigma = (0.18f64 * 0.82 / 4096.0).sqrt();
        assert!((est.p_one - 0.18).abs() < 3.0 * sigma);
    }

    #[test]
    fn swap_needs_conditioned_shots() {
        let state = StateVector::zero(2).unwrap();
        assert!(matches!(
            swap_test_fidelity(&state, 0, &[1], &[c(1.0), c(0.0)], 100, 0),
            Err(HhlError::InsufficientShots)
        ));
    }

    #[test]
    fn direct_error_cases() {
        let exact = Histogram {
            counts: [("0".to_string(), 36), ("1".to_string(), 64)].into_iter().collect(),
            shots: 100,
        };
        assert!(direct_distribution_error(&exact, &[c(0.6), c(-0.8)]).unwrap() < 1e-12);
        let uniform = Histogram {
            counts: [("0".to_string(), 50), ("1".to_string(), 50)].into_iter().collect(),
            shots: 100,
        };
        let e = direct_distribution_error(&uniform, &[c(1.0), c(0.0)]).unwrap();
        assert!((e - (2.0 * (1.0 - std::f64::consts::FRAC_1_SQRT_2)).sqrt()).abs() < 1e-12);
        let empty = Histogram { counts: Default::default(), shots: 0 };
        assert!(direct_distribution_error(&empty, &[c(1.0)]).is_err());
    }

    #[test]
    fn enhanced_requires_more_preprocessing_bits() {
        let mut cfg = RunConfig::new(Variant::Enhanced);
        cfg.preprocess.bit_width = 3;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("other".parse::<Variant>().is_err());
    }
}
