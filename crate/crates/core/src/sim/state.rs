use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::circuit::Circuit;
use super::gate::{Gate, Polarity};
use crate::error::{HhlError, Result};

/// Hard cap on simulated width; 2^20 amplitudes is 16 MiB.
pub const MAX_QUBITS: usize = 20;

const ZERO_BRANCH: f64 = 1e-15;

/// Dense statevector. Qubit 0 is the least significant bit of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// Measurement counts keyed by bitstring, most significant qubit first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Histogram {
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
}

impl Histogram {
    pub fn count(&self, bits: &str) -> u64 {
        self.counts.get(bits).copied().unwrap_or(0)
    }

    /// Counts keyed by the integer the bitstring encodes.
    pub fn integer_counts(&self) -> Vec<(u64, u64)> {
        self.counts
            .iter()
            .map(|(k, &v)| (u64::from_str_radix(k, 2).unwrap_or(0), v))
            .collect()
    }
}

/// Renders `value` as a `width`-character bitstring, most significant bit first.
pub fn bitstring(value: usize, width: usize) -> String {
    (0..width)
        .rev()
        .map(|b| if value >> b & 1 == 1 { '1' } else { '0' })
        .collect()
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(HhlError::Capacity {
                requested: num_qubits,
                limit: MAX_QUBITS,
            });
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(HhlError::InvalidArgument(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps and normalizes the given amplitudes.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(HhlError::InvalidArgument(format!(
                "amplitude count {dim} is not a power of two"
            )));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(HhlError::Capacity {
                requested: num_qubits,
                limit: MAX_QUBITS,
            });
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < ZERO_BRANCH {
            return Err(HhlError::InvalidArgument("zero state vector".into()));
        }
        Ok(Self {
            num_qubits,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::from_amplitudes(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `self ⊗ |0…0⟩` with the new qubits placed above the existing ones.
    pub fn extend_with_zeros(&self, extra: usize) -> Result<Self> {
        let n = self.num_qubits + extra;
        if n > MAX_QUBITS {
            return Err(HhlError::Capacity {
                requested: n,
                limit: MAX_QUBITS,
            });
        }
        let mut amplitudes = self.amplitudes.clone();
        amplitudes.resize(1usize << n, Complex64::new(0.0, 0.0));
        Ok(Self {
            num_qubits: n,
            amplitudes,
        })
    }

    /// Probability of each basis state of `qubits` (first listed qubit is least significant).
    pub fn marginal_probabilities(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        self.check_qubits(qubits)?;
        let mut probs = vec![0.0; 1usize << qubits.len()];
        for (index, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            probs[gather_bits(index, qubits)] += p;
        }
        Ok(probs)
    }

    /// `⟨x|ρ|x⟩` where `ρ` is the reduced state on `qubits` and `x` is a vector on that register.
    pub fn register_overlap(&self, qubits: &[usize], x: &[Complex64]) -> Result<f64> {
        self.check_qubits(qubits)?;
        if x.len() != 1usize << qubits.len() {
            return Err(HhlError::DimensionMismatch {
                expected: 1usize << qubits.len(),
                found: x.len(),
            });
        }
        let register_mask: usize = qubits.iter().map(|&q| 1usize << q).sum();
        let mut per_rest: BTreeMap<usize, Complex64> = BTreeMap::new();
        for (index, a) in self.amplitudes.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let local = gather_bits(index, qubits);
            *per_rest
                .entry(index & !register_mask)
                .or_insert(Complex64::new(0.0, 0.0)) += x[local].conj() * a;
        }
        let norm_sqr = self.norm().powi(2);
        Ok(per_rest.values().map(|v| v.norm_sqr()).sum::<f64>() / norm_sqr)
    }

    /// Amplitudes on `qubits` for the slice where every other qubit matches `rest`.
    pub fn register_slice(&self, qubits: &[usize], rest: usize) -> Result<Vec<Complex64>> {
        self.check_qubits(qubits)?;
        let offsets: Vec<usize> = (0..1usize << qubits.len())
            .map(|s| scatter_bits(s, qubits))
            .collect();
        Ok(offsets.iter().map(|o| self.amplitudes[rest | o]).collect())
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<()> {
        if let Some(&q) = qubits.iter().find(|&&q| q >= self.num_qubits) {
            return Err(HhlError::InvalidArgument(format!(
                "qubit {q} out of range for {} qubits",
                self.num_qubits
            )));
        }
        Ok(())
    }

    fn apply_gate(&mut self, gate: &Gate) {
        let matrix = gate.matrix();
        let target_mask: usize = gate.targets.iter().map(|&q| 1usize << q).sum();
        let control_mask: usize = gate.controls.iter().map(|c| 1usize << c.qubit).sum();
        let control_value: usize = gate
            .controls
            .iter()
            .filter(|c| c.polarity == Polarity::OnOne)
            .map(|c| 1usize << c.qubit)
            .sum();
        let dim = 1usize << gate.targets.len();
        let offsets: Vec<usize> = (0..dim).map(|s| scatter_bits(s, &gate.targets)).collect();
        let mut buffer = vec![Complex64::new(0.0, 0.0); dim];
        for base in 0..self.amplitudes.len() {
            if base & target_mask != 0 || base & control_mask != control_value {
                continue;
            }
            for (slot, off) in buffer.iter_mut().zip(&offsets) {
                *slot = self.amplitudes[base | off];
            }
            for (row, off) in offsets.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (col, v) in buffer.iter().enumerate() {
                    acc += matrix[(row, col)] * v;
                }
                self.amplitudes[base | off] = acc;
            }
        }
    }
}

fn gather_bits(index: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &q)| acc | ((index >> q & 1) << i))
}

fn scatter_bits(value: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &q)| acc | ((value >> i & 1) << q))
}

/// Applies every gate of `circuit` in order and returns the resulting state.
pub fn apply_circuit(state: &StateVector, circuit: &Circuit) -> Result<StateVector> {
    if state.num_qubits != circuit.num_qubits {
        return Err(HhlError::InvalidCircuit(format!(
            "state has {} qubits, circuit has {}",
            state.num_qubits, circuit.num_qubits
        )));
    }
    circuit.validate()?;
    let mut out = state.clone();
    for gate in &circuit.gates {
        out.apply_gate(gate);
    }
    Ok(out)
}

/// Projects `qubit` onto `outcome` and renormalizes. Returns the conditional state and its probability.
pub fn postselect(state: &StateVector, qubit: usize, outcome: u8) -> Result<(StateVector, f64)> {
    state.check_qubits(&[qubit])?;
    if outcome > 1 {
        return Err(HhlError::InvalidArgument(format!("outcome {outcome} is not a bit")));
    }
    let want = outcome as usize;
    let total = state.norm().powi(2);
    let mut amplitudes = state.amplitudes.clone();
    let mut kept = 0.0;
    for (index, a) in amplitudes.iter_mut().enumerate() {
        if index >> qubit & 1 == want {
            kept += a.norm_sqr();
        } else {
            *a = Complex64::new(0.0, 0.0);
        }
    }
    let probability = kept / total;
    if probability < ZERO_BRANCH {
        return Err(HhlError::ZeroProbabilityBranch {
            qubit,
            outcome,
            probability,
        });
    }
    let scale = kept.sqrt();
    for a in &mut amplitudes {
        *a /= scale;
    }
    Ok((
        StateVector {
            num_qubits: state.num_qubits,
            amplitudes,
        },
        probability.min(1.0),
    ))
}

/// Draws `shots` measurements of `qubits`. Deterministic for a given seed.
pub fn sample(state: &StateVector, qubits: &[usize], shots: u64, seed: u64) -> Result<Histogram> {
    if qubits.is_empty() {
        return Err(HhlError::InvalidArgument("no qubits to sample".into()));
    }
    if shots == 0 {
        return Err(HhlError::InvalidArgument("shots must be at least 1".into()));
    }
    let probs = state.marginal_probabilities(qubits)?;
    sample_distribution(&probs, qubits.len(), shots, seed)
}

/// Multinomial draw from an explicit distribution over `width`-bit outcomes.
pub fn sample_distribution(probs: &[f64], width: usize, shots: u64, seed: u64) -> Result<Histogram> {
    let dist = WeightedIndex::new(probs)
        .map_err(|e| HhlError::InvalidArgument(format!("bad distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = vec![0u64; probs.len()];
    for _ in 0..shots {
        tally[dist.sample(&mut rng)] += 1;
    }
    let counts = tally
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .map(|(i, c)| (bitstring(i, width), c))
        .collect();
    Ok(Histogram { counts, shots })
}

/// `⟨a|b⟩`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.num_qubits != b.num_qubits {
        return Err(HhlError::DimensionMismatch {
            expected: a.num_qubits,
            found: b.num_qubits,
        });
    }
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}
