use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{HhlError, Result};

pub type CMatrix = DMatrix<Complex64>;

const UNITARY_TOL: f64 = 1e-10;

/// Which basis state of a control qubit enables the gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    /// Filled dot: active when the control reads `|1⟩`.
    OnOne,
    /// Open dot: active when the control reads `|0⟩`.
    OnZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Control {
    pub qubit: usize,
    pub polarity: Polarity,
}

impl Control {
    pub fn on_one(qubit: usize) -> Self {
        Self {
            qubit,
            polarity: Polarity::OnOne,
        }
    }

    pub fn on_zero(qubit: usize) -> Self {
        Self {
            qubit,
            polarity: Polarity::OnZero,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    Hadamard,
    PauliX,
    PauliY,
    PauliZ,
    /// Rotation about Y by the given angle in radians: `RY(θ)|0⟩ = cos(θ/2)|0⟩ + sin(θ/2)|1⟩`.
    RY(f64),
    Swap,
    /// Dense unitary on the targets. Row/column bit `i` addresses `targets[i]`.
    UnitaryBlock(CMatrix),
}

/// A gate together with the qubits it acts on and the controls that enable it.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<Control>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>) -> Self {
        Self {
            kind,
            targets,
            controls: Vec::new(),
        }
    }

    pub fn h(q: usize) -> Self {
        Self::new(GateKind::Hadamard, vec![q])
    }

    pub fn x(q: usize) -> Self {
        Self::new(GateKind::PauliX, vec![q])
    }

    pub fn y(q: usize) -> Self {
        Self::new(GateKind::PauliY, vec![q])
    }

    pub fn z(q: usize) -> Self {
        Self::new(GateKind::PauliZ, vec![q])
    }

    pub fn ry(angle: f64, q: usize) -> Self {
        Self::new(GateKind::RY(angle), vec![q])
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Self::new(GateKind::Swap, vec![a, b])
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::x(target).controlled_by(Control::on_one(control))
    }

    /// `diag(1, e^{iφ})` on one qubit.
    pub fn phase(angle: f64, q: usize) -> Self {
        let mut m = CMatrix::identity(2, 2);
        m[(1, 1)] = Complex64::from_polar(1.0, angle);
        Self::new(GateKind::UnitaryBlock(m), vec![q])
    }

    pub fn unitary(matrix: CMatrix, targets: Vec<usize>) -> Self {
        Self::new(GateKind::UnitaryBlock(matrix), targets)
    }

    pub fn controlled_by(mut self, control: Control) -> Self {
        self.controls.push(control);
        self
    }

    pub fn with_controls(mut self, controls: impl IntoIterator<Item = Control>) -> Self {
        self.controls.extend(controls);
        self
    }

    /// All qubits the gate touches, targets first.
    pub fn support(&self) -> Vec<usize> {
        self.targets
            .iter()
            .copied()
            .chain(self.controls.iter().map(|c| c.qubit))
            .collect()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.support().into_iter().max()
    }

    /// The target-space matrix, ignoring controls.
    pub fn matrix(&self) -> CMatrix {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match &self.kind {
            GateKind::Hadamard => CMatrix::from_row_slice(
                2,
                2,
                &[
                    c(FRAC_1_SQRT_2, 0.0),
                    c(FRAC_1_SQRT_2, 0.0),
                    c(FRAC_1_SQRT_2, 0.0),
                    c(-FRAC_1_SQRT_2, 0.0),
                ],
            ),
            GateKind::PauliX => {
                CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
            }
            GateKind::PauliY => CMatrix::from_row_slice(
                2,
                2,
                &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
            ),
            GateKind::PauliZ => CMatrix::from_row_slice(
                2,
                2,
                &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
            ),
            GateKind::RY(theta) => {
                let (s, co) = (theta / 2.0).sin_cos();
                CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
            }
            GateKind::Swap => {
                let mut m = CMatrix::zeros(4, 4);
                m[(0, 0)] = c(1.0, 0.0);
                m[(1, 2)] = c(1.0, 0.0);
                m[(2, 1)] = c(1.0, 0.0);
                m[(3, 3)] = c(1.0, 0.0);
                m
            }
            GateKind::UnitaryBlock(m) => m.clone(),
        }
    }

    /// The exact inverse gate.
    pub fn inverse(&self) -> Self {
        let kind = match &self.kind {
            GateKind::RY(theta) => GateKind::RY(-theta),
            GateKind::UnitaryBlock(m) => GateKind::UnitaryBlock(m.adjoint()),
            other => other.clone(),
        };
        Self {
            kind,
            targets: self.targets.clone(),
            controls: self.controls.clone(),
        }
    }

    /// Checks the structural invariants: distinct qubits, finite angles and a unitary block.
    pub fn validate(&self) -> Result<()> {
        if self.targets.is_empty() {
            return Err(HhlError::InvalidGate("gate has no targets".into()));
        }
        let support = self.support();
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != support.len() {
            return Err(HhlError::InvalidGate(format!(
                "targets and controls overlap: {support:?}"
            )));
        }
        let expected_targets = match &self.kind {
            GateKind::Swap => Some(2),
            GateKind::UnitaryBlock(_) => None,
            _ => Some(1),
        };
        if let Some(n) = expected_targets {
            if self.targets.len() != n {
                return Err(HhlError::InvalidGate(format!(
                    "{:?} expects {n} target(s), got {}",
                    self.kind,
                    self.targets.len()
                )));
            }
        }
        match &self.kind {
            GateKind::RY(theta) if !theta.is_finite() => {
                Err(HhlError::InvalidGate(format!("RY angle {theta} is not finite")))
            }
            GateKind::UnitaryBlock(m) => {
                let dim = 1usize << self.targets.len();
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(HhlError::InvalidGate(format!(
                        "block is {}x{}, {} targets need {dim}x{dim}",
                        m.nrows(),
                        m.ncols(),
                        self.targets.len()
                    )));
                }
                let deviation = unitarity_deviation(m);
                if deviation > UNITARY_TOL {
                    return Err(HhlError::InvalidGate(format!(
                        "block deviates from unitary by {deviation:e}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Largest elementwise deviation of `M†M` from the identity.
pub fn unitarity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let product = m.adjoint() * m;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((product[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// A unitary whose first column is `v` (which must be a unit vector).
///
/// Built by Gram-Schmidt completion of `v` against the standard basis, so the
/// state-preparation block is deterministic for a given vector.
pub fn state_preparation_unitary(v: &[Complex64]) -> Result<CMatrix> {
    let dim = v.len();
    if dim == 0 || !dim.is_power_of_two() {
        return Err(HhlError::InvalidArgument(format!(
            "state preparation needs a power-of-two length, got {dim}"
        )));
    }
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(HhlError::InvalidArgument(format!(
            "state preparation needs a unit vector, norm is {norm}"
        )));
    }
    let mut columns: Vec<Vec<Complex64>> = vec![v.iter().map(|a| a / norm).collect()];
    for e in 0..dim {
        if columns.len() == dim {
            break;
        }
        let mut w = vec![Complex64::new(0.0, 0.0); dim];
        w[e] = Complex64::new(1.0, 0.0);
        for col in &columns {
            let proj: Complex64 = col.iter().zip(&w).map(|(c, x)| c.conj() * x).sum();
            for (wi, ci) in w.iter_mut().zip(col) {
                *wi -= proj * ci;
            }
        }
        let n = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            columns.push(w.into_iter().map(|a| a / n).collect());
        }
    }
    Ok(CMatrix::from_fn(dim, dim, |r, c| columns[c][r]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_ry_negates_angle() {
        let g = Gate::ry(0.7, 0).inverse();
        assert_eq!(g.kind, GateKind::RY(-0.7));
    }

    #[test]
    fn overlapping_control_is_rejected() {
        let g = Gate::x(1).controlled_by(Control::on_one(1));
        assert!(matches!(g.validate(), Err(HhlError::InvalidGate(_))));
    }

    #[test]
    fn non_unitary_block_is_rejected() {
        let m = CMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        assert!(Gate::unitary(m, vec![0]).validate().is_err());
    }

    #[test]
    fn nan_angle_is_rejected() {
        assert!(Gate::ry(f64::NAN, 0).validate().is_err());
    }

    #[test]
    fn state_preparation_first_column_matches() {
        let s = 0.5f64.sqrt();
        let v = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(0.0, s),
            Complex64::new(0.0, 0.0),
        ];
        let u = state_preparation_unitary(&v).unwrap();
        assert!(unitarity_deviation(&u) < 1e-12);
        for (i, a) in v.iter().enumerate() {
            assert!((u[(i, 0)] - a).norm() < 1e-12);
        }
    }
}
