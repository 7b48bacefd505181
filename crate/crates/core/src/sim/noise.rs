use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::circuit::Circuit;
use super::gate::Gate;
use crate::error::{HhlError, Result};

/// Stochastic Pauli noise: after every gate, with probability `per_gate_pauli_probability`,
/// a uniformly chosen X/Y/Z lands on one uniformly chosen qubit of that gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub per_gate_pauli_probability: f64,
    pub rng_seed: u64,
}

impl NoiseSpec {
    pub fn new(per_gate_pauli_probability: f64, rng_seed: u64) -> Result<Self> {
        let spec = Self {
            per_gate_pauli_probability,
            rng_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.per_gate_pauli_probability;
        if !(0.0..=1.0).contains(&p) {
            return Err(HhlError::InvalidArgument(format!(
                "noise probability {p} outside [0, 1]"
            )));
        }
        Ok(())
    }
}

/// One noisy trajectory of `circuit`.
pub fn inject_noise(circuit: &Circuit, spec: &NoiseSpec) -> Circuit {
    let p = spec.per_gate_pauli_probability;
    if p <= 0.0 {
        return circuit.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut out = Circuit {
        num_qubits: circuit.num_qubits,
        gates: Vec::with_capacity(circuit.gates.len()),
        registers: circuit.registers.clone(),
    };
    for gate in &circuit.gates {
        out.push(gate.clone());
        if rng.random::<f64>() < p {
            let support = gate.support();
            let q = support[rng.random_range(0..support.len())];
            let pauli = match rng.random_range(0..3) {
                0 => Gate::x(q),
                1 => Gate::y(q),
                _ => Gate::z(q),
            };
            out.push(pauli);
        }
    }
    out
}
