use std::ops::Range;

use serde::Serialize;

use super::gate::{Gate, GateKind};
use crate::error::{HhlError, Result};

/// Named contiguous qubit range, e.g. the clock register.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Register {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

impl Register {
    pub fn qubits(&self) -> Range<usize> {
        self.start..self.start + self.len
    }
}

/// Ordered gate list over a fixed number of qubits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
    pub registers: Vec<Register>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct GateReport {
    pub gate_count: usize,
    /// Gates touching two or more qubits (controls included).
    pub two_qubit_count: usize,
    pub depth: usize,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            gates: Vec::new(),
            registers: Vec::new(),
        }
    }

    /// Reserves the next `len` qubits under `name`, growing the circuit.
    pub fn add_register(&mut self, name: &str, len: usize) -> Register {
        let reg = Register {
            name: name.to_string(),
            start: self.num_qubits,
            len,
        };
        self.num_qubits += len;
        self.registers.push(reg.clone());
        reg
    }

    pub fn register(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    pub fn extend(&mut self, other: &Circuit) {
        self.gates.extend(other.gates.iter().cloned());
    }

    /// Gates reversed and individually inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            registers: self.registers.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.registers.iter().enumerate() {
            if r.start + r.len > self.num_qubits {
                return Err(HhlError::InvalidCircuit(format!(
                    "register {} exceeds {} qubits",
                    r.name, self.num_qubits
                )));
            }
            for other in &self.registers[i + 1..] {
                let disjoint = r.start + r.len <= other.start || other.start + other.len <= r.start;
                if !disjoint {
                    return Err(HhlError::InvalidCircuit(format!(
                        "registers {} and {} overlap",
                        r.name, other.name
                    )));
                }
            }
        }
        for (i, g) in self.gates.iter().enumerate() {
            if let Some(q) = g.max_qubit() {
                if q >= self.num_qubits {
                    return Err(HhlError::InvalidCircuit(format!(
                        "gate {i} references qubit {q} of {}",
                        self.num_qubits
                    )));
                }
            }
            g.validate()?;
        }
        Ok(())
    }

    /// Counts and greedy-layered depth on the logical gate list.
    pub fn gate_report(&self) -> GateReport {
        let mut frontier = vec![0usize; self.num_qubits];
        let mut report = GateReport::default();
        for g in &self.gates {
            let support = g.support();
            report.gate_count += 1;
            if support.len() >= 2 {
                report.two_qubit_count += 1;
            }
            let layer = support
                .iter()
                .filter_map(|&q| frontier.get(q))
                .max()
                .copied()
                .unwrap_or(0)
                + 1;
            for &q in &support {
                if let Some(f) = frontier.get_mut(q) {
                    *f = layer;
                }
            }
            report.depth = report.depth.max(layer);
        }
        report
    }

    /// Number of multi-controlled RY gates, i.e. inversion rotations.
    pub fn rotation_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g.kind, GateKind::RY(_)) && !g.controls.is_empty())
            .count()
    }
}

/// Standard QFT on `qubits` (index 0 least significant): `|y⟩ ↦ T^{-1/2} Σ_m e^{2πi·y·m/T}|m⟩`.
pub fn qft(num_qubits: usize, qubits: &[usize]) -> Circuit {
    use std::f64::consts::PI;
    let n = qubits.len();
    let mut c = Circuit::new(num_qubits);
    for a in (0..n).rev() {
        c.push(Gate::h(qubits[a]));
        for b in (0..a).rev() {
            let angle = PI / (1u64 << (a - b)) as f64;
            c.push(Gate::phase(angle, qubits[a]).controlled_by(super::gate::Control::on_one(qubits[b])));
        }
    }
    for i in 0..n / 2 {
        c.push(Gate::swap(qubits[i], qubits[n - 1 - i]));
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_circuit_report_is_zero() {
        assert_eq!(Circuit::new(3).gate_report(), GateReport::default());
    }

    #[test]
    fn disjoint_gates_share_a_layer() {
        let mut c = Circuit::new(2);
        c.push(Gate::h(0));
        c.push(Gate::h(1));
        let r = c.gate_report();
        assert_eq!((r.gate_count, r.two_qubit_count, r.depth), (2, 0, 1));
    }

    #[test]
    fn dependent_gates_stack() {
        let mut c = Circuit::new(2);
        c.push(Gate::h(0));
        c.push(Gate::cnot(0, 1));
        let r = c.gate_report();
        assert_eq!((r.gate_count, r.two_qubit_count, r.depth), (2, 1, 2));
    }

    #[test]
    fn out_of_range_gate_is_invalid() {
        let mut c = Circuit::new(1);
        c.push(Gate::h(3));
        assert!(matches!(c.validate(), Err(HhlError::InvalidCircuit(_))));
    }

    #[test]
    fn overlapping_registers_are_invalid() {
        let mut c = Circuit::new(3);
        c.registers.push(Register { name: "a".into(), start: 0, len: 2 });
        c.registers.push(Register { name: "b".into(), start: 1, len: 2 });
        assert!(c.validate().is_err());
    }
}
