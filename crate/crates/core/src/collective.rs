//! Collective decoherence on a qubit register and its noiseless-subsystem
//! structure.
//!
//! Conventions: qubit 1 is the leftmost tensor factor (the leftmost character
//! of a ket string such as `|0100⟩`), `|0⟩` is spin up and `σ_z|0⟩ = |0⟩`.
//! The error operators are σ-normalized, `E_z = Σ σ_z` and `E_± = Σ σ^±`, so
//! `[E_z, E_±] = ±2 E_±`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    c, commutator, frobenius, identity, kron, kron_vec, ket_from_bits, partial_trace, pauli,
    CMatrix, CVector, DensityMatrix, HermitianSpectrum, STRUCTURAL_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

impl PauliAxis {
    pub fn matrix(self) -> CMatrix {
        match self {
            PauliAxis::X => pauli::x(),
            PauliAxis::Y => pauli::y(),
            PauliAxis::Z => pauli::z(),
            PauliAxis::Plus => pauli::plus(),
            PauliAxis::Minus => pauli::minus(),
        }
    }
}

/// `I ⊗ … ⊗ σ^axis ⊗ … ⊗ I` with the Pauli on qubit `p` (1-based) of `n`.
pub fn pauli_on_qubit(axis: PauliAxis, p: usize, n: usize) -> Result<CMatrix> {
    if p == 0 || p > n {
        return Err(Error::InvalidArgument(format!("qubit {p} outside 1..={n}")));
    }
    let left = identity(1 << (p - 1));
    let right = identity(1 << (n - p));
    Ok(kron(&kron(&left, &axis.matrix()), &right))
}

/// `Σ_p w_p σ_p^axis` over the register of size `weights.len()`.
pub fn weighted_pauli_sum(axis: PauliAxis, weights: &[f64]) -> CMatrix {
    let n = weights.len();
    let mut sum = CMatrix::zeros(1 << n, 1 << n);
    for (k, &w) in weights.iter().enumerate() {
        sum += pauli_on_qubit(axis, k + 1, n).expect("in range") * c(w, 0.0);
    }
    sum
}

#[derive(Clone, Debug)]
pub struct CollectiveErrorOps {
    pub n_qubits: usize,
    pub e_plus: CMatrix,
    pub e_minus: CMatrix,
    pub e_z: CMatrix,
}

impl CollectiveErrorOps {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("empty register".into()));
        }
        Ok(Self::weighted(&vec![1.0; n]))
    }

    /// Error operators with a per-qubit weight; unit weights give the
    /// collective case.
    pub fn weighted(weights: &[f64]) -> Self {
        Self {
            n_qubits: weights.len(),
            e_plus: weighted_pauli_sum(PauliAxis::Plus, weights),
            e_minus: weighted_pauli_sum(PauliAxis::Minus, weights),
            e_z: weighted_pauli_sum(PauliAxis::Z, weights),
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// `[(E_+, "+"), (E_−, "-"), (E_z, "z")]`.
    pub fn named(&self) -> [(&'static str, &CMatrix); 3] {
        [("+", &self.e_plus), ("-", &self.e_minus), ("z", &self.e_z)]
    }

    /// Total-spin Casimir `S² = S_z² + (S_+S_− + S_−S_+)/2` with `S_z = E_z/2`
    /// and `S_± = E_±`; eigenvalue `J(J+1)`.
    pub fn casimir(&self) -> CMatrix {
        let sz = self.e_z.scale(0.5);
        &sz * &sz + (&self.e_plus * &self.e_minus + &self.e_minus * &self.e_plus).scale(0.5)
    }
}

/// Multiplicity `n_J = (2J+1) N! / ((N/2+1+J)! (N/2−J)!)` of the spin-`J`
/// irrep in `N` qubits; this is the dimension of the noiseless factor.
pub fn multiplicity(n: usize, j: usize) -> Result<u64> {
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "odd register size {n} has half-integer sectors only"
        )));
    }
    if j > n / 2 {
        return Err(Error::InvalidArgument(format!("spin {j} exceeds N/2 = {}", n / 2)));
    }
    if n > 32 {
        return Err(Error::InvalidArgument(format!("register size {n} overflows u128 factorials")));
    }
    let fact = |k: usize| -> u128 { (1..=k as u128).product() };
    let numerator = (2 * j as u128 + 1) * fact(n);
    let denominator = fact(n / 2 + 1 + j) * fact(n / 2 - j);
    Ok((numerator / denominator) as u64)
}

/// One total-spin sector `ℂ^{n_J} ⊗ ℂ^{d_J}`. Column `k·d_J + m` of the
/// isometry is NS copy `k`, NF state `m` (ordered from `M = +J` down).
#[derive(Clone, Debug)]
pub struct IrrepSector {
    pub spin: usize,
    pub ns_dim: usize,
    pub nf_dim: usize,
    pub isometry: CMatrix,
}

impl IrrepSector {
    pub fn projector(&self) -> CMatrix {
        &self.isometry * self.isometry.adjoint()
    }
}

const EIGEN_TOL: f64 = 1e-8;

/// Brute-force decomposition of `(ℂ²)^{⊗n}` into total-spin sectors, for even
/// `n ≤ 8`. Sectors come back ordered by increasing `J`.
pub fn decompose_total_spin(n: usize) -> Result<Vec<IrrepSector>> {
    if n == 0 || !n.is_multiple_of(2) || n > 8 {
        return Err(Error::InvalidArgument(format!(
            "total-spin decomposition needs an even register of at most 8 qubits, got {n}"
        )));
    }
    let ops = CollectiveErrorOps::new(n)?;
    let dim = ops.dim();
    let casimir = HermitianSpectrum::of_hermitian_part(&ops.casimir());

    let mut sectors = Vec::new();
    for spin in 0..=n / 2 {
        let target = (spin * (spin + 1)) as f64;
        let mut projector = CMatrix::zeros(dim, dim);
        let mut rank = 0usize;
        for (k, &value) in casimir.values.iter().enumerate() {
            if (value - target).abs() < EIGEN_TOL {
                let v = casimir.vectors.column(k);
                projector += v * v.adjoint();
                rank += 1;
            }
        }
        let nf_dim = 2 * spin + 1;
        if !rank.is_multiple_of(nf_dim) {
            return Err(Error::Degeneracy(format!(
                "spin {spin} eigenspace has dimension {rank}, not a multiple of {nf_dim}"
            )));
        }
        let ns_dim = rank / nf_dim;
        if ns_dim == 0 {
            continue;
        }

        // Highest-weight vectors: the sector restricted to the E_z = 2J strings.
        let ones = n / 2 - spin;
        let strings: Vec<usize> = (0..dim).filter(|x| x.count_ones() as usize == ones).collect();
        let mut restricted = CMatrix::zeros(strings.len(), strings.len());
        for (a, &x) in strings.iter().enumerate() {
            for (b, &y) in strings.iter().enumerate() {
                restricted[(a, b)] = projector[(x, y)];
            }
        }
        let local = HermitianSpectrum::of_hermitian_part(&restricted);
        let mut highest = Vec::new();
        for (k, &value) in local.values.iter().enumerate() {
            if (value - 1.0).abs() < EIGEN_TOL {
                let mut v = CVector::zeros(dim);
                for (a, &x) in strings.iter().enumerate() {
                    v[x] = local.vectors[(a, k)];
                }
                highest.push(v);
            } else if value.abs() >= EIGEN_TOL {
                return Err(Error::Degeneracy(format!(
                    "spin {spin} highest-weight projector has eigenvalue {value}"
                )));
            }
        }
        if highest.len() != ns_dim {
            return Err(Error::Degeneracy(format!(
                "spin {spin}: found {} highest-weight vectors, expected {ns_dim}",
                highest.len()
            )));
        }

        let mut isometry = CMatrix::zeros(dim, ns_dim * nf_dim);
        for (k, top) in highest.into_iter().enumerate() {
            let mut v = top;
            for m in 0..nf_dim {
                if m > 0 {
                    let lowered = &ops.e_minus * &v;
                    let norm = lowered.norm();
                    if norm < EIGEN_TOL {
                        return Err(Error::Degeneracy(format!(
                            "lowering operator annihilated spin {spin} copy {k} at step {m}"
                        )));
                    }
                    v = lowered.unscale(norm);
                }
                isometry.set_column(k * nf_dim + m, &v);
            }
        }
        sectors.push(IrrepSector { spin, ns_dim, nf_dim, isometry });
    }
    Ok(sectors)
}

/// The nine `ℂ³ ⊗ ℂ³` code vectors `|i⟩|j⟩₄` of the four-qubit register,
/// stored as the columns of a 16×9 isometry in the order `3(i−1) + (j−1)`.
#[derive(Clone, Debug)]
pub struct CodeBasis {
    isometry: CMatrix,
}

impl CodeBasis {
    pub const NS_DIM: usize = 3;
    pub const NF_DIM: usize = 3;

    /// Wraps an arbitrary 16×9 matrix; no orthonormality is enforced, which is
    /// what lets the verification battery be pointed at a perturbed basis.
    pub fn from_isometry(isometry: CMatrix) -> Result<Self> {
        if isometry.shape() != (16, 9) {
            return Err(Error::DimensionMismatch(format!(
                "code basis must be 16x9, got {:?}",
                isometry.shape()
            )));
        }
        Ok(Self { isometry })
    }

    pub fn column(i: usize, j: usize) -> usize {
        assert!((1..=3).contains(&i) && (1..=3).contains(&j), "code index ({i}, {j})");
        3 * (i - 1) + (j - 1)
    }

    /// `|i⟩|j⟩₄`, 1-based.
    pub fn vector(&self, i: usize, j: usize) -> CVector {
        self.isometry.column(Self::column(i, j)).into_owned()
    }

    pub fn isometry(&self) -> &CMatrix {
        &self.isometry
    }

    pub fn isometry_mut(&mut self) -> &mut CMatrix {
        &mut self.isometry
    }

    pub fn projector(&self) -> CMatrix {
        &self.isometry * self.isometry.adjoint()
    }

    /// Register operator restricted to the code, `V† X V` (9×9, NS ⊗ NF order).
    pub fn restrict(&self, x: &CMatrix) -> CMatrix {
        self.isometry.adjoint() * x * &self.isometry
    }

    /// Register state `V (ns ⊗ nf)`.
    pub fn embed(&self, ns: &CVector, nf: &CVector) -> CVector {
        &self.isometry * kron_vec(ns, nf)
    }

    /// Largest entry of `V†V − I`.
    pub fn orthonormality_residual(&self) -> f64 {
        let gram = self.isometry.adjoint() * &self.isometry;
        crate::linalg::max_abs_diff(&gram, &identity(9))
    }
}

/// The code basis exactly as tabulated, e.g. `|1⟩|1⟩₄ = (2|0010⟩ − |0100⟩ − |1000⟩)/√6`.
pub fn four_qubit_code_basis() -> CodeBasis {
    let s2 = 2f64.sqrt();
    let s6 = 6f64.sqrt();
    let two_s3 = 2.0 * 3f64.sqrt();
    let ket = |terms: &[(&str, f64)], norm: f64| -> CVector {
        let mut v = CVector::zeros(16);
        for &(bits, coefficient) in terms {
            v += ket_from_bits(bits) * c(coefficient / norm, 0.0);
        }
        v
    };
    let table: [CVector; 9] = [
        ket(&[("0010", 2.0), ("0100", -1.0), ("1000", -1.0)], s6),
        ket(
            &[("0011", 2.0), ("0101", -1.0), ("1001", -1.0), ("0110", 1.0), ("1010", 1.0), ("1100", -2.0)],
            two_s3,
        ),
        ket(&[("0111", 1.0), ("1011", 1.0), ("1101", -2.0)], s6),
        ket(&[("0001", 3.0), ("0010", -1.0), ("0100", -1.0), ("1000", -1.0)], two_s3),
        ket(
            &[("0011", 1.0), ("0101", 1.0), ("1001", 1.0), ("0110", -1.0), ("1010", -1.0), ("1100", -1.0)],
            s6,
        ),
        ket(&[("0111", 1.0), ("1011", 1.0), ("1101", 1.0), ("1110", -3.0)], two_s3),
        ket(&[("0100", 1.0), ("1000", -1.0)], s2),
        ket(&[("0101", 1.0), ("1001", -1.0), ("0110", 1.0), ("1010", -1.0)], 2.0),
        ket(&[("0111", 1.0), ("1011", -1.0)], s2),
    ];
    CodeBasis { isometry: CMatrix::from_columns(&table) }
}

/// Outcome of checking `E_α = I_NS ⊗ S_α` on the code subspace.
#[derive(Clone, Debug, Serialize)]
pub struct NsStructureReport {
    /// Largest `|⟨i j|E_α|i′ j′⟩|` with `i ≠ i′`, over all α.
    pub off_block_residual: f64,
    /// Largest difference between the NF blocks of different NS labels.
    pub block_mismatch_residual: f64,
    /// `‖(I − P) E_α P‖_F`: amplitude pushed out of the code by an error.
    pub sector_leak_residual: f64,
    #[serde(skip)]
    pub s_plus: CMatrix,
    #[serde(skip)]
    pub s_minus: CMatrix,
    #[serde(skip)]
    pub s_z: CMatrix,
    /// First offending element `(operator, row, col, value)` if any.
    pub violation: Option<(String, usize, usize, f64)>,
}

impl NsStructureReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }

    pub fn max_residual(&self) -> f64 {
        self.off_block_residual
            .max(self.block_mismatch_residual)
            .max(self.sector_leak_residual)
    }
}

/// Computes the block structure of each error operator in the code basis and
/// extracts the 3×3 NF blocks `S_α` (taken from the `i = 1` block).
pub fn ns_structure(basis: &CodeBasis, ops: &CollectiveErrorOps) -> NsStructureReport {
    let projector = basis.projector();
    let outside = identity(16) - &projector;
    let mut off_block = 0.0f64;
    let mut mismatch = 0.0f64;
    let mut leak = 0.0f64;
    let mut violation = None;
    let mut blocks = Vec::new();
    for (name, op) in ops.named() {
        let restricted = basis.restrict(op);
        for row in 0..9 {
            for col in 0..9 {
                let value = restricted[(row, col)].norm();
                if row / 3 != col / 3 {
                    off_block = off_block.max(value);
                    if value > STRUCTURAL_TOL && violation.is_none() {
                        violation = Some((name.to_string(), row, col, value));
                    }
                }
            }
        }
        let block = |i: usize| restricted.view((3 * i, 3 * i), (3, 3)).into_owned();
        let first = block(0);
        for i in 1..3 {
            let diff = crate::linalg::max_abs_diff(&block(i), &first);
            mismatch = mismatch.max(diff);
            if diff > STRUCTURAL_TOL && violation.is_none() {
                violation = Some((format!("{name} block {}", i + 1), 3 * i, 3 * i, diff));
            }
        }
        let out = frobenius(&(&outside * op * &projector));
        leak = leak.max(out);
        if out > STRUCTURAL_TOL && violation.is_none() {
            violation = Some((format!("{name} leaves code"), 0, 0, out));
        }
        blocks.push(first);
    }
    let s_z = blocks.pop().expect("three operators");
    let s_minus = blocks.pop().expect("three operators");
    let s_plus = blocks.pop().expect("three operators");
    NsStructureReport {
        off_block_residual: off_block,
        block_mismatch_residual: mismatch,
        sector_leak_residual: leak,
        s_plus,
        s_minus,
        s_z,
        violation,
    }
}

/// Like [`ns_structure`] but fails with the offending element when the
/// factorization is violated beyond `1e−12`.
pub fn verify_ns_structure(basis: &CodeBasis, ops: &CollectiveErrorOps) -> Result<NsStructureReport> {
    if ops.n_qubits != 4 {
        return Err(Error::InvalidArgument("the code lives on four qubits".into()));
    }
    let report = ns_structure(basis, ops);
    match &report.violation {
        None => Ok(report),
        Some((op, row, col, value)) => Err(Error::Verification(format!(
            "E_{op}: element ({row}, {col}) = {value:.3e} breaks I_NS ⊗ S_α"
        ))),
    }
}

/// Projects a four-qubit state onto the code, then traces out the noiseful
/// factor. The trace of the result is the weight left inside the code.
pub fn ns_reduce(rho: &DensityMatrix, basis: &CodeBasis) -> Result<DensityMatrix> {
    if rho.dim() != 16 {
        return Err(Error::DimensionMismatch(format!("expected a 16-dim state, got {}", rho.dim())));
    }
    let restricted = DensityMatrix::from_matrix_unchecked(basis.restrict(rho.matrix()));
    partial_trace(&restricted, &[CodeBasis::NS_DIM, CodeBasis::NF_DIM], &[0])
}

/// `[E_α, X]` for every collective error, returning the largest Frobenius norm.
pub fn max_commutator_with_errors(ops: &CollectiveErrorOps, x: &CMatrix) -> f64 {
    ops.named()
        .iter()
        .map(|(_, e)| frobenius(&commutator(e, x)))
        .fold(0.0, f64::max)
}
