//! Qubit permutation operators and their realization of the Gell-Mann
//! matrices on the noiseless factor of the four-qubit code.

use std::fmt;

use serde::Serialize;

use crate::collective::CodeBasis;
use crate::error::{Error, Result};
use crate::linalg::{c, frobenius, identity, kron, CMatrix, C64, I, ONE};

/// Order in which a multi-index operator `P_{a1 a2 … ak}` is assembled from
/// transpositions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CycleConvention {
    /// `P_{a1 a2} P_{a2 a3} ⋯ P_{a(k−1) ak}`.
    LeftToRight,
    /// `P_{a(k−1) ak} ⋯ P_{a2 a3} P_{a1 a2}`.
    RightToLeft,
}

impl CycleConvention {
    pub const ALL: [CycleConvention; 2] = [CycleConvention::LeftToRight, CycleConvention::RightToLeft];
}

impl fmt::Display for CycleConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CycleConvention::LeftToRight => write!(f, "P_{{a1..ak}} = P_{{a1 a2}} P_{{a2 a3}} ... P_{{a(k-1) ak}}"),
            CycleConvention::RightToLeft => write!(f, "P_{{a1..ak}} = P_{{a(k-1) ak}} ... P_{{a2 a3}} P_{{a1 a2}}"),
        }
    }
}

/// A permutation of the qubits of an `n`-qubit register, as a 0/1 matrix.
#[derive(Clone, Debug)]
pub struct PermutationOp {
    pub indices: Vec<usize>,
    pub n: usize,
    pub matrix: CMatrix,
}

fn check_indices(indices: &[usize], n: usize) -> Result<()> {
    for (k, &p) in indices.iter().enumerate() {
        if p == 0 || p > n {
            return Err(Error::InvalidArgument(format!("qubit {p} outside 1..={n}")));
        }
        if indices[..k].contains(&p) {
            return Err(Error::InvalidArgument(format!("qubit {p} repeated in {indices:?}")));
        }
    }
    Ok(())
}

/// `P_pq`: exchanges the states of qubits `p` and `q`.
pub fn transposition(p: usize, q: usize, n: usize) -> Result<PermutationOp> {
    check_indices(&[p, q], n)?;
    let dim = 1usize << n;
    let bit = |k: usize| n - k;
    let mut matrix = CMatrix::zeros(dim, dim);
    for x in 0..dim {
        let bp = (x >> bit(p)) & 1;
        let bq = (x >> bit(q)) & 1;
        let mut y = x & !(1 << bit(p)) & !(1 << bit(q));
        y |= bq << bit(p);
        y |= bp << bit(q);
        matrix[(y, x)] = ONE;
    }
    Ok(PermutationOp { indices: vec![p, q], n, matrix })
}

/// Multi-qubit operator `P_{a1 … ak}` built from transpositions of neighbouring
/// indices under `convention`.
pub fn cycle(indices: &[usize], n: usize, convention: CycleConvention) -> Result<PermutationOp> {
    if indices.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a cycle needs at least three qubits, got {indices:?}"
        )));
    }
    check_indices(indices, n)?;
    let mut factors = indices
        .windows(2)
        .map(|w| transposition(w[0], w[1], n).map(|t| t.matrix))
        .collect::<Result<Vec<_>>>()?;
    if convention == CycleConvention::RightToLeft {
        factors.reverse();
    }
    let matrix = factors.iter().fold(identity(1 << n), |acc, t| acc * t);
    Ok(PermutationOp { indices: indices.to_vec(), n, matrix })
}

/// `½(I + σ_p·σ_q)`, the spin form of a transposition.
pub fn exchange_from_spins(p: usize, q: usize, n: usize) -> Result<CMatrix> {
    use crate::collective::{pauli_on_qubit, PauliAxis};
    let mut dot = CMatrix::zeros(1 << n, 1 << n);
    for axis in [PauliAxis::X, PauliAxis::Y, PauliAxis::Z] {
        dot += pauli_on_qubit(axis, p, n)? * pauli_on_qubit(axis, q, n)?;
    }
    Ok((identity(1 << n) + dot).scale(0.5))
}

/// One term of a permutation-operator polynomial on four qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PermTerm {
    Identity,
    /// `P_pq`.
    Swap(usize, usize),
    /// Ordered product `P_ab P_cd`.
    SwapProduct((usize, usize), (usize, usize)),
    /// Multi-index `P_{a1 … ak}`, whose meaning depends on the cycle convention.
    Cycle(Vec<usize>),
}

impl PermTerm {
    pub fn matrix(&self, n: usize, convention: CycleConvention) -> Result<CMatrix> {
        match self {
            PermTerm::Identity => Ok(identity(1 << n)),
            PermTerm::Swap(p, q) => Ok(transposition(*p, *q, n)?.matrix),
            PermTerm::SwapProduct((a, b), (p, q)) => {
                Ok(transposition(*a, *b, n)?.matrix * transposition(*p, *q, n)?.matrix)
            }
            PermTerm::Cycle(indices) => Ok(cycle(indices, n, convention)?.matrix),
        }
    }

    pub fn uses_cycles(&self) -> bool {
        matches!(self, PermTerm::Cycle(_))
    }
}

/// `prefactor · Σ weight · term`.
#[derive(Clone, Debug)]
pub struct PermPolynomial {
    pub prefactor: C64,
    pub terms: Vec<(f64, PermTerm)>,
}

impl PermPolynomial {
    pub fn matrix(&self, n: usize, convention: CycleConvention) -> Result<CMatrix> {
        let mut sum = CMatrix::zeros(1 << n, 1 << n);
        for (weight, term) in &self.terms {
            sum += term.matrix(n, convention)? * c(*weight, 0.0);
        }
        Ok(sum * self.prefactor)
    }

    pub fn uses_cycles(&self) -> bool {
        self.terms.iter().any(|(_, t)| t.uses_cycles())
    }
}

fn swap(p: usize, q: usize) -> PermTerm {
    PermTerm::Swap(p, q)
}

fn cyc(indices: &[usize]) -> PermTerm {
    PermTerm::Cycle(indices.to_vec())
}

/// Permutation-operator realization of `λ_i ⊗ I_NF`, coefficients exactly as
/// tabulated for the four-qubit code.
pub fn gellmann_polynomial(i: usize) -> Result<PermPolynomial> {
    let s2 = 2f64.sqrt();
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    let poly = |prefactor: C64, terms: Vec<(f64, PermTerm)>| PermPolynomial { prefactor, terms };
    Ok(match i {
        1 => poly(c(1.0 / s3, 0.0), vec![(1.0, swap(2, 3)), (-1.0, swap(1, 3))]),
        2 => poly(
            c(0.0, 1.0 / s3),
            vec![
                (1.0, PermTerm::SwapProduct((2, 3), (1, 3))),
                (-1.0, PermTerm::SwapProduct((1, 3), (2, 3))),
            ],
        ),
        3 => poly(c(1.0 / 3.0, 0.0), vec![(1.0, swap(1, 3)), (1.0, swap(2, 3)), (-2.0, swap(1, 2))]),
        4 => poly(
            c(1.0 / (2.0 * s6), 0.0),
            vec![(1.0, swap(1, 3)), (-1.0, swap(2, 3)), (-3.0, swap(1, 4)), (3.0, swap(2, 4))],
        ),
        5 => poly(
            c(0.0, 1.0 / (2.0 * s6)),
            vec![
                (2.0, cyc(&[3, 2, 1])),
                (-2.0, cyc(&[2, 3, 1])),
                (1.0, cyc(&[3, 4, 2])),
                (-1.0, cyc(&[4, 3, 2])),
                (-1.0, cyc(&[3, 4, 1])),
                (1.0, cyc(&[4, 3, 1])),
                (4.0, cyc(&[2, 4, 1])),
                (-4.0, cyc(&[4, 2, 1])),
            ],
        ),
        6 => poly(
            c(-1.0 / (6.0 * s2), 0.0),
            vec![
                (2.0, swap(1, 3)),
                (2.0, swap(2, 3)),
                (-4.0, swap(1, 2)),
                (3.0, cyc(&[2, 3, 4, 1])),
                (3.0, cyc(&[3, 4, 2, 1])),
                (3.0, cyc(&[4, 3, 2, 1])),
                (3.0, cyc(&[2, 4, 3, 1])),
                (-6.0, cyc(&[3, 2, 4, 1])),
                (-6.0, cyc(&[4, 2, 3, 1])),
            ],
        ),
        7 => poly(
            c(0.0, 1.0 / (2.0 * s2)),
            vec![
                (1.0, cyc(&[3, 4, 1])),
                (1.0, cyc(&[3, 4, 2])),
                (-1.0, cyc(&[4, 3, 2])),
                (-1.0, cyc(&[4, 3, 1])),
            ],
        ),
        8 => poly(
            c(1.0 / s3, 0.0),
            vec![(1.0, PermTerm::Identity), (-1.0, swap(1, 2)), (-1.0, swap(1, 3)), (-1.0, swap(2, 3))],
        ),
        _ => return Err(Error::InvalidArgument(format!("Gell-Mann index {i} outside 1..=8"))),
    })
}

/// `|a⟩⟨b|` on the three-level NS factor, 1-based.
fn ket_bra(a: usize, b: usize) -> CMatrix {
    let mut m = CMatrix::zeros(3, 3);
    m[(a - 1, b - 1)] = ONE;
    m
}

/// `λ_i` written in ket-bra form on the ordered NS basis `(|1⟩, |2⟩, |3⟩)`,
/// e.g. `λ₁ = |3⟩⟨1| + h.c.` and `λ₂ = −i|3⟩⟨1| + h.c.`.
pub fn gellmann_matrix(i: usize) -> Result<CMatrix> {
    let hc = |m: CMatrix| &m + m.adjoint();
    Ok(match i {
        1 => hc(ket_bra(3, 1)),
        2 => hc(ket_bra(3, 1) * -I),
        3 => ket_bra(3, 3) - ket_bra(1, 1),
        4 => hc(ket_bra(3, 2)),
        5 => hc(ket_bra(3, 2) * -I),
        6 => hc(ket_bra(1, 2)),
        7 => hc(ket_bra(1, 2) * -I),
        8 => (ket_bra(3, 3) + ket_bra(1, 1) - ket_bra(2, 2).scale(2.0)).unscale(3f64.sqrt()),
        _ => return Err(Error::InvalidArgument(format!("Gell-Mann index {i} outside 1..=8"))),
    })
}

/// Both sides of one Gell-Mann identity on the code subspace.
#[derive(Clone, Debug)]
pub struct GellMannRealization {
    pub index: usize,
    pub convention: CycleConvention,
    /// `λ_i ⊗ I_NF` in code coordinates (9×9).
    pub lhs: CMatrix,
    /// Permutation polynomial on the full register (16×16).
    pub rhs: CMatrix,
    /// `‖V† rhs V − lhs‖_F`.
    pub residual: f64,
    /// `‖V† rhs V + lhs‖_F`, i.e. the residual if the tabulated sign were flipped.
    pub sign_flipped_residual: f64,
}

impl GellMannRealization {
    pub fn holds(&self) -> bool {
        self.residual <= crate::linalg::STRUCTURAL_TOL
    }
}

pub fn gellmann_realization(
    i: usize,
    basis: &CodeBasis,
    convention: CycleConvention,
) -> Result<GellMannRealization> {
    let lhs = kron(&gellmann_matrix(i)?, &identity(CodeBasis::NF_DIM));
    let rhs = gellmann_polynomial(i)?.matrix(4, convention)?;
    let restricted = basis.restrict(&rhs);
    Ok(GellMannRealization {
        index: i,
        convention,
        residual: frobenius(&(&restricted - &lhs)),
        sign_flipped_residual: frobenius(&(&restricted + &lhs)),
        lhs,
        rhs,
    })
}

/// Residuals of the cycle-dependent identities under one convention.
#[derive(Clone, Debug, Serialize)]
pub struct ConventionTrial {
    pub convention: CycleConvention,
    /// `(i, residual)` for `i ∈ {5, 6, 7}`.
    pub residuals: Vec<(usize, f64)>,
    pub passing: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConventionResolution {
    pub chosen: CycleConvention,
    pub description: String,
    pub trials: Vec<ConventionTrial>,
}

/// Tries both transposition orders on the multi-index identities `λ₅, λ₆, λ₇`
/// and keeps the one under which more of them hold. The left-hand sides do
/// not depend on the convention, so they act as the oracle.
pub fn resolve_cycle_convention(basis: &CodeBasis) -> Result<ConventionResolution> {
    let mut trials = Vec::new();
    for convention in CycleConvention::ALL {
        let residuals = [5, 6, 7]
            .iter()
            .map(|&i| gellmann_realization(i, basis, convention).map(|r| (i, r.residual)))
            .collect::<Result<Vec<_>>>()?;
        let passing = residuals
            .iter()
            .filter(|(_, r)| *r <= crate::linalg::STRUCTURAL_TOL)
            .count();
        trials.push(ConventionTrial { convention, residuals, passing });
    }
    let best = trials.iter().map(|t| t.passing).max().unwrap_or(0);
    let winners: Vec<_> = trials.iter().filter(|t| t.passing == best).collect();
    if best == 0 || winners.len() != 1 {
        return Err(Error::Verification(format!(
            "cycle convention is ambiguous: {} convention(s) satisfy {best} of the multi-index identities",
            winners.len()
        )));
    }
    let chosen = winners[0].convention;
    Ok(ConventionResolution { chosen, description: chosen.to_string(), trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collective::{four_qubit_code_basis, max_commutator_with_errors, CollectiveErrorOps};
    use crate::linalg::{commutator, ket_from_bits, max_abs_diff, ZERO};

    #[test]
    fn transposition_swaps_and_squares_to_identity() {
        let p = transposition(1, 2, 2).unwrap();
        assert_eq!(&p.matrix * ket_from_bits("01"), ket_from_bits("10"));
        assert_eq!(&p.matrix * &p.matrix, identity(4));
        let spins = exchange_from_spins(1, 2, 2).unwrap();
        assert!(max_abs_diff(&spins, &p.matrix) < 1e-15);
        assert!(transposition(2, 2, 3).is_err());
    }

    #[test]
    fn transposition_acts_on_named_qubits() {
        let p = transposition(1, 3, 4).unwrap();
        assert_eq!(&p.matrix * ket_from_bits("1000"), ket_from_bits("0010"));
        assert_eq!(&p.matrix * ket_from_bits("0100"), ket_from_bits("0100"));
    }

    #[test]
    fn cycle_convention_left_to_right() {
        let c = cycle(&[3, 2, 1], 4, CycleConvention::LeftToRight).unwrap();
        let expected = transposition(3, 2, 4).unwrap().matrix * transposition(2, 1, 4).unwrap().matrix;
        assert_eq!(c.matrix, expected);
        let r = cycle(&[3, 2, 1], 4, CycleConvention::RightToLeft).unwrap();
        assert_eq!(r.matrix, c.matrix.transpose());
    }

    #[test]
    fn cycle_is_permutation_matrix_commuting_with_errors() {
        let c = cycle(&[2, 3, 4, 1], 4, CycleConvention::LeftToRight).unwrap();
        for row in c.matrix.row_iter() {
            assert_eq!(row.iter().filter(|x| **x == ONE).count(), 1);
            assert_eq!(row.iter().filter(|x| **x == ZERO).count(), 15);
        }
        let ops = CollectiveErrorOps::new(4).unwrap();
        assert!(max_commutator_with_errors(&ops, &c.matrix) < 1e-12);
    }

    #[test]
    fn cycle_rejects_repeats() {
        assert!(cycle(&[1, 2, 1], 4, CycleConvention::LeftToRight).is_err());
        assert!(cycle(&[1, 2], 4, CycleConvention::LeftToRight).is_err());
    }

    #[test]
    fn two_body_identities_hold() {
        let basis = four_qubit_code_basis();
        for i in [1, 2, 3, 4, 8] {
            let r = gellmann_realization(i, &basis, CycleConvention::LeftToRight).unwrap();
            assert!(r.residual < 1e-12, "lambda_{i}: {}", r.residual);
        }
    }

    #[test]
    fn convention_resolves_to_left_to_right() {
        let basis = four_qubit_code_basis();
        let resolution = resolve_cycle_convention(&basis).unwrap();
        assert_eq!(resolution.chosen, CycleConvention::LeftToRight);
        for i in [5, 7] {
            let r = gellmann_realization(i, &basis, resolution.chosen).unwrap();
            assert!(r.holds(), "lambda_{i}: {}", r.residual);
        }
    }

    #[test]
    fn lambda_six_matches_up_to_overall_sign() {
        let basis = four_qubit_code_basis();
        for convention in CycleConvention::ALL {
            let r = gellmann_realization(6, &basis, convention).unwrap();
            assert!(r.sign_flipped_residual < 1e-12);
        }
    }

    #[test]
    fn restricted_lambdas_follow_su3_pattern() {
        let basis = four_qubit_code_basis();
        let r = |i| basis.restrict(&gellmann_realization(i, &basis, CycleConvention::LeftToRight).unwrap().rhs);
        let lhs = commutator(&r(1), &r(2));
        assert!(max_abs_diff(&lhs, &(r(3) * c(0.0, 2.0))) < 1e-12);
    }
}
