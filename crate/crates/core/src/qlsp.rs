//! Problem instances: Hermitian `A`, unit `|b⟩`, and their eigendecomposition.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{HhlError, Result};
use crate::sim::CMatrix;

const HERMITIAN_TOL: f64 = 1e-10;
const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub eigenvalue: f64,
    pub eigenvector: Vec<Complex64>,
    /// `⟨u|b⟩`.
    pub projection: Complex64,
}

/// A quantum linear system problem `A|x⟩ ∝ |b⟩` with `A` Hermitian and `‖A‖ ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Qlsp {
    matrix: CMatrix,
    vector_b: Vec<Complex64>,
    spectrum: Vec<EigenPair>,
    condition_number: f64,
    scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalSolution {
    pub state_x: Vec<Complex64>,
    /// `‖A⁻¹b‖` for the (scaled) stored matrix.
    pub raw_norm: f64,
}

impl Qlsp {
    /// Validates a Hermitian system, normalizes `b` and rescales `A` so its spectral norm is at most one.
    pub fn new(matrix: CMatrix, vector_b: Vec<Complex64>) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() {
            return Err(HhlError::InvalidProblem(format!(
                "matrix is {}x{}, not square",
                n,
                matrix.ncols()
            )));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(HhlError::InvalidProblem(format!(
                "dimension {n} is not a power of two >= 2"
            )));
        }
        if vector_b.len() != n {
            return Err(HhlError::DimensionMismatch {
                expected: n,
                found: vector_b.len(),
            });
        }
        let asym = hermitian_deviation(&matrix);
        if asym > HERMITIAN_TOL {
            return Err(HhlError::InvalidProblem(format!(
                "matrix is not Hermitian (deviation {asym:e}); use hermitian_dilation"
            )));
        }
        let b_norm = vector_b.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if b_norm < 1e-15 {
            return Err(HhlError::InvalidProblem("vector b is zero".into()));
        }
        let vector_b: Vec<Complex64> = vector_b.into_iter().map(|a| a / b_norm).collect();

        let (mut spectrum, _) = eigendecompose(&matrix, &vector_b)?;
        let max_abs = spectrum.iter().map(|p| p.eigenvalue.abs()).fold(0.0, f64::max);
        let mut matrix = matrix;
        let mut scale = 1.0;
        if max_abs > 1.0 {
            scale = 1.0 / max_abs;
            matrix *= Complex64::new(scale, 0.0);
            for p in &mut spectrum {
                p.eigenvalue *= scale;
            }
        }
        let condition_number = condition_number(&spectrum)?;
        Ok(Self {
            matrix,
            vector_b,
            spectrum,
            condition_number,
            scale,
        })
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// Qubits needed for the `b` register.
    pub fn num_qubits(&self) -> usize {
        self.dimension().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn vector_b(&self) -> &[Complex64] {
        &self.vector_b
    }

    /// Eigenpairs in ascending eigenvalue order.
    pub fn spectrum(&self) -> &[EigenPair] {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectrum.iter().map(|p| p.eigenvalue).collect()
    }

    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    /// Factor already applied to the caller's matrix.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.spectrum.iter().map(|p| p.eigenvalue.abs()).fold(0.0, f64::max)
    }

    pub fn has_negative_eigenvalues(&self) -> bool {
        self.spectrum.iter().any(|p| p.eigenvalue < 0.0)
    }

    pub fn to_file(&self) -> ProblemFile {
        ProblemFile {
            matrix: (0..self.dimension())
                .map(|r| {
                    (0..self.dimension())
                        .map(|c| [self.matrix[(r, c)].re, self.matrix[(r, c)].im])
                        .collect()
                })
                .collect(),
            vector_b: self.vector_b.iter().map(|a| [a.re, a.im]).collect(),
            scale: self.scale,
        }
    }
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn condition_number(spectrum: &[EigenPair]) -> Result<f64> {
    let abs: Vec<f64> = spectrum.iter().map(|p| p.eigenvalue.abs()).collect();
    let min = abs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = abs.iter().copied().fold(0.0, f64::max);
    if min < SINGULAR_TOL {
        return Err(HhlError::SingularProblem(min));
    }
    Ok(max / min)
}

/// Full spectrum of a Hermitian matrix plus the projections of `b`, and `κ = max|λ| / min|λ|`.
///
/// Eigenvectors are phase-fixed so their largest component is real and positive.
pub fn eigendecompose(matrix: &CMatrix, b: &[Complex64]) -> Result<(Vec<EigenPair>, f64)> {
    let asym = hermitian_deviation(matrix);
    if asym > HERMITIAN_TOL {
        return Err(HhlError::InvalidProblem(format!(
            "matrix is not Hermitian (deviation {asym:e})"
        )));
    }
    let eig = matrix.clone().symmetric_eigen();
    let n = matrix.nrows();
    let mut spectrum: Vec<EigenPair> = (0..n)
        .map(|j| {
            let col = eig.eigenvectors.column(j);
            let mut v: Vec<Complex64> = col.iter().copied().collect();
            let lead = v
                .iter()
                .copied()
                .enumerate()
                .fold((0, 0.0), |best, (i, a)| {
                    if a.norm() > best.1 + 1e-12 {
                        (i, a.norm())
                    } else {
                        best
                    }
                })
                .0;
            let phase = v[lead].conj() / v[lead].norm();
            for a in &mut v {
                *a *= phase;
            }
            let projection = v.iter().zip(b).map(|(u, bi)| u.conj() * bi).sum();
            EigenPair {
                eigenvalue: eig.eigenvalues[j],
                eigenvector: v,
                projection,
            }
        })
        .collect();
    spectrum.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue));
    let kappa = condition_number(&spectrum)?;
    Ok((spectrum, kappa))
}

/// Embeds a general `N×N` system into the `2N` Hermitian system `[[0, A], [A†, 0]]`, `(b, 0)`.
pub fn hermitian_dilation(a: &CMatrix, b: &[Complex64]) -> Result<Qlsp> {
    let n = a.nrows();
    if n != a.ncols() || b.len() != n {
        return Err(HhlError::InvalidProblem(format!(
            "shape mismatch: {}x{} matrix with length-{} b",
            n,
            a.ncols(),
            b.len()
        )));
    }
    if b.iter().all(|x| x.norm() < 1e-15) {
        return Err(HhlError::InvalidProblem("vector b is zero".into()));
    }
    let adj = a.adjoint();
    let big = CMatrix::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
        (true, false) => a[(r, c - n)],
        (false, true) => adj[(r - n, c)],
        _ => Complex64::new(0.0, 0.0),
    });
    let mut big_b = b.to_vec();
    big_b.resize(2 * n, Complex64::new(0.0, 0.0));
    Qlsp::new(big, big_b)
}

/// `|x⟩ ∝ Σ_j λ_j⁻¹ β_j |u_j⟩`, normalized, along with `‖A⁻¹b‖`.
pub fn classical_solution(qlsp: &Qlsp) -> ClassicalSolution {
    let n = qlsp.dimension();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for pair in &qlsp.spectrum {
        let coeff = pair.projection / pair.eigenvalue;
        for (xi, ui) in x.iter_mut().zip(&pair.eigenvector) {
            *xi += coeff * ui;
        }
    }
    let raw_norm = x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    ClassicalSolution {
        state_x: x.into_iter().map(|a| a / raw_norm).collect(),
        raw_norm,
    }
}

/// The two-eigenvalue family `A = [[1/2, λ-1/2], [λ-1/2, 1/2]]`, `b = (1, 0)`; eigenvalues `λ` and `1-λ`.
pub fn generate_n2(lambda: f64) -> Result<Qlsp> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(HhlError::InvalidArgument(format!(
            "lambda {lambda} outside (0, 0.5)"
        )));
    }
    let r = |x: f64| Complex64::new(x, 0.0);
    let off = lambda - 0.5;
    let a = CMatrix::from_row_slice(2, 2, &[r(0.5), r(off), r(off), r(0.5)]);
    Qlsp::new(a, vec![r(1.0), r(0.0)])
}

/// The eigenvalues used for the four-dimensional test problems.
pub const N4_EIGENVALUES: [f64; 4] = [-21.0 / 24.0, -20.0 / 24.0, 5.0 / 24.0, 6.0 / 24.0];

/// `A = U diag(λ) U†` for a seeded random real orthonormal `U`, with `b` the equal
/// superposition of eigenvectors `pair.0` and `pair.1`.
pub fn generate_n4(eigenvalues: [f64; 4], pair: (usize, usize), seed: u64) -> Result<Qlsp> {
    if pair.0 == pair.1 || pair.0 > 3 || pair.1 > 3 {
        return Err(HhlError::InvalidArgument(format!(
            "eigenvector pair {pair:?} must be two distinct indices in 0..4"
        )));
    }
    for (i, &l) in eigenvalues.iter().enumerate() {
        if l == 0.0 || l.abs() > 1.0 {
            return Err(HhlError::InvalidArgument(format!(
                "eigenvalue {l} must be nonzero with |λ| <= 1"
            )));
        }
        if eigenvalues[..i].iter().any(|&m| (m - l).abs() < 1e-12) {
            return Err(HhlError::InvalidArgument(format!(
                "eigenvalue {l} is repeated"
            )));
        }
    }
    let basis = random_orthonormal(4, seed);
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&eigenvalues));
    let a = &basis * diag * basis.transpose();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let b: Vec<Complex64> = (0..4)
        .map(|r| Complex64::new(s * (basis[(r, pair.0)] + basis[(r, pair.1)]), 0.0))
        .collect();
    Qlsp::new(a.map(|x| Complex64::new(x, 0.0)), b)
}

/// Orthonormal columns from the QR factor of a seeded standard-normal matrix.
fn random_orthonormal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `Σ_j exp(i λ_j t0 power / T) |u_j⟩⟨u_j|`.
pub fn evolution_unitary(qlsp: &Qlsp, time: f64, power: u64, big_t: f64) -> CMatrix {
    let n = qlsp.dimension();
    let mut u = CMatrix::zeros(n, n);
    for pair in &qlsp.spectrum {
        let phase = Complex64::from_polar(1.0, pair.eigenvalue * time * power as f64 / big_t);
        for r in 0..n {
            for c in 0..n {
                u[(r, c)] += phase * pair.eigenvector[r] * pair.eigenvector[c].conj();
            }
        }
    }
    u
}

/// On-disk problem document: complex entries as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub matrix: Vec<Vec<[f64; 2]>>,
    pub vector_b: Vec<[f64; 2]>,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl ProblemFile {
    /// Builds the problem, dilating it first when the matrix is not Hermitian.
    pub fn into_qlsp(self) -> Result<Qlsp> {
        let n = self.matrix.len();
        if n == 0 || self.matrix.iter().any(|row| row.len() != n) {
            return Err(HhlError::InvalidProblem("matrix must be square".into()));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(HhlError::InvalidProblem(format!("scale {} is invalid", self.scale)));
        }
        let a = CMatrix::from_fn(n, n, |r, c| {
            let [re, im] = self.matrix[r][c];
            Complex64::new(re, im)
        });
        let b: Vec<Complex64> = self.vector_b.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        let mut q = if hermitian_deviation(&a) <= HERMITIAN_TOL {
            Qlsp::new(a, b)?
        } else {
            hermitian_dilation(&a, &b)?
        };
        q.scale *= self.scale;
        Ok(q)
    }

    pub fn load(path: &Path) -> Result<Qlsp> {
        let text = std::fs::read_to_string(path)?;
        let file: ProblemFile = serde_json::from_str(&text)?;
        file.into_qlsp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn n2_family_spectrum() {
        let q = generate_n2(1.0 / 3.0).unwrap();
        let ev = q.eigenvalues();
        assert!((ev[0] - 1.0 / 3.0).abs() < 1e-12 && (ev[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((q.condition_number() - 2.0).abs() < 1e-12);
        for p in q.spectrum() {
            assert!((p.projection.norm_sqr() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn n2_quarter_matrix() {
        let q = generate_n2(0.25).unwrap();
        assert!((q.matrix()[(0, 1)] - r(-0.25)).norm() < 1e-15);
        let ev = q.eigenvalues();
        assert!((ev[0] - 0.25).abs() < 1e-12 && (ev[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn ill_conditioned_member() {
        assert!((generate_n2(0.01).unwrap().condition_number() - 99.0).abs() < 1e-9);
    }

    #[test]
    fn n2_rejects_out_of_range() {
        for bad in [0.0, 0.5, -0.1, 0.7, f64::NAN] {
            assert!(generate_n2(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn identity_problem() {
        let q = Qlsp::new(CMatrix::identity(2, 2), vec![r(0.6), r(0.8)]).unwrap();
        assert!(q.eigenvalues().iter().all(|&l| (l - 1.0).abs() < 1e-12));
        assert!((q.condition_number() - 1.0).abs() < 1e-12);
        let x = classical_solution(&q);
        assert!((x.state_x[0] - r(0.6)).norm() < 1e-12);
        assert!((x.state_x[1] - r(0.8)).norm() < 1e-12);
    }

    #[test]
    fn n2_third_solution() {
        let x = classical_solution(&generate_n2(1.0 / 3.0).unwrap());
        let s = 10f64.sqrt();
        assert!((x.state_x[0] - r(3.0 / s)).norm() < 1e-12);
        assert!((x.state_x[1] - r(1.0 / s)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_solution() {
        let a = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![r(0.5), r(1.0)]));
        let x = classical_solution(&Qlsp::new(a, vec![r(1.0), r(1.0)]).unwrap());
        let s = 5f64.sqrt();
        assert!((x.state_x[0] - r(2.0 / s)).norm() < 1e-12);
        assert!((x.state_x[1] - r(1.0 / s)).norm() < 1e-12);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![r(1.0), r(0.0)]));
        assert!(matches!(Qlsp::new(a, vec![r(1.0), r(0.0)]), Err(HhlError::SingularProblem(_))));
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let a = CMatrix::from_row_slice(2, 2, &[r(1.0), r(2.0), r(3.0), r(4.0)]);
        assert!(Qlsp::new(a, vec![r(1.0), r(0.0)]).is_err());
    }

    #[test]
    fn dilation_layout() {
        let a = CMatrix::from_row_slice(2, 2, &[r(1.0), r(2.0), r(3.0), r(4.0)]);
        let q = hermitian_dilation(&a, &[r(1.0), r(0.0)]).unwrap();
        let s = q.scale();
        assert!(s < 1.0);
        let m = q.matrix();
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[(i, j + 2)] - a[(i, j)] * s).norm() < 1e-12);
                assert!((m[(i + 2, j)] - a[(j, i)] * s).norm() < 1e-12);
                assert_eq!(m[(i, j)], r(0.0));
            }
        }
        assert_eq!(q.vector_b(), &[r(1.0), r(0.0), r(0.0), r(0.0)]);
        assert!(q.max_abs_eigenvalue() <= 1.0 + 1e-12);
    }

    #[test]
    fn dilated_identity_has_unit_pairs() {
        let q = hermitian_dilation(&CMatrix::identity(2, 2), &[r(1.0), r(0.0)]).unwrap();
        let ev = q.eigenvalues();
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[3] - 1.0).abs() < 1e-12);
        assert!((ev[1] + 1.0).abs() < 1e-12 && (ev[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dilation_rejects_zero_b() {
        assert!(hermitian_dilation(&CMatrix::identity(2, 2), &[r(0.0), r(0.0)]).is_err());
    }

    #[test]
    fn n4_reference_problem() {
        let q = generate_n4(N4_EIGENVALUES, (0, 2), 7).unwrap();
        let ev = q.eigenvalues();
        for (a, b) in ev.iter().zip(N4_EIGENVALUES) {
            assert!((a - b).abs() < 1e-12);
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let betas: Vec<f64> = q.spectrum().iter().map(|p| p.projection.norm()).collect();
        assert!((betas[0] - s).abs() < 1e-10 && (betas[2] - s).abs() < 1e-10);
        assert!(betas[1] < 1e-10 && betas[3] < 1e-10);
        assert_eq!(q, generate_n4(N4_EIGENVALUES, (0, 2), 7).unwrap());
        assert!(generate_n4(N4_EIGENVALUES, (1, 1), 7).is_err());
    }

    #[test]
    fn evolution_at_zero_time_is_identity() {
        let q = generate_n2(0.2).unwrap();
        let u = evolution_unitary(&q, 0.0, 1, 8.0);
        assert!((u - CMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn evolution_of_diagonal_matrix() {
        let a = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![r(0.3), r(-0.7)]));
        let q = Qlsp::new(a, vec![r(1.0), r(1.0)]).unwrap();
        let u = evolution_unitary(&q, 2.0, 4, 8.0);
        assert!((u[(0, 0)] - Complex64::from_polar(1.0, 0.3)).norm() < 1e-12);
        assert!((u[(1, 1)] - Complex64::from_polar(1.0, -0.7)).norm() < 1e-12);
        assert!(u[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn problem_file_round_trip() {
        let q = generate_n4(N4_EIGENVALUES, (1, 3), 2).unwrap();
        let json = serde_json::to_string(&q.to_file()).unwrap();
        let back: ProblemFile = serde_json::from_str(&json).unwrap();
        let q2 = back.into_qlsp().unwrap();
        assert!((q.matrix() - q2.matrix()).norm() < 1e-12);
    }
}
