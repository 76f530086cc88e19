//! Dense complex linear algebra on qubit registers.
//!
//! Matrices are plain `nalgebra` dense matrices of `Complex64`. Evolution
//! generators in this crate are all Hermitian, so matrix functions go
//! through a Hermitian eigendecomposition ([`HermitianSpectrum`]) rather than
//! a general-purpose exponential.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance for exact-algebra identities.
pub const STRUCTURAL_TOL: f64 = 1e-12;
/// Tolerance for quantities that went through an integrator.
pub const INTEGRATED_TOL: f64 = 1e-8;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Builds a complex matrix from real row-major entries.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols);
    CMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| c(x, 0.0)))
}

/// Computational basis ket `|index⟩` of dimension `dim`.
pub fn basis_ket(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = ONE;
    v
}

/// Ket from a bit string such as `"0100"`; the leftmost character is the most
/// significant bit, i.e. qubit 1.
pub fn ket_from_bits(bits: &str) -> CVector {
    let n = bits.len();
    let index = usize::from_str_radix(bits, 2).expect("bit string");
    basis_ket(1 << n, index)
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `‖M − M†‖_F / max(‖M‖_F, tiny)`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    let scale = frobenius(m).max(f64::MIN_POSITIVE);
    frobenius(&(m - m.adjoint())) / scale
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && hermiticity_residual(m) <= tol
}

/// `‖U†U − I‖_F`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    frobenius(&(u.adjoint() * u - identity(u.ncols())))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().sum()
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix, kept around so that several
/// functions of the same operator can be evaluated cheaply.
#[derive(Clone, Debug)]
pub struct HermitianSpectrum {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianSpectrum {
    /// Decomposes `m`, rejecting it if `‖m − m†‖_F > 1e−12·‖m‖_F`.
    pub fn new(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let residual = hermiticity_residual(m);
        if residual > STRUCTURAL_TOL {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self::of_hermitian_part(m))
    }

    /// Decomposes `(m + m†)/2` without checking how far `m` is from Hermitian.
    pub fn of_hermitian_part(m: &CMatrix) -> Self {
        let eig = hermitian_part(m).symmetric_eigen();
        Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `V f(Λ) V†` for a scalar function applied to the spectrum.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, &lambda) in self.values.iter().enumerate() {
            let mut column = scaled.column_mut(k);
            column *= f(lambda);
        }
        scaled * self.vectors.adjoint()
    }

    /// `exp(−i·angle·H)`.
    pub fn unitary(&self, angle: f64) -> CMatrix {
        self.map(|lambda| C64::from_polar(1.0, -angle * lambda))
    }
}

/// `exp(−i·angle·h)` for Hermitian `h`, via its eigendecomposition.
pub fn hermitian_expm(h: &CMatrix, angle: f64) -> Result<CMatrix> {
    Ok(HermitianSpectrum::new(h)?.unitary(angle))
}

/// Principal square root of a positive semidefinite matrix; eigenvalues at or
/// below the roundoff floor, including negative ones, are treated as zero.
pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    let spectrum = HermitianSpectrum::of_hermitian_part(m);
    // Eigenvalues within roundoff of zero are zero; rooting them would leave
    // √ε-sized components behind.
    let scale = spectrum.values.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let floor = 4.0 * spectrum.dim() as f64 * f64::EPSILON * scale;
    spectrum.map(|lambda| c(if lambda > floor { lambda.sqrt() } else { 0.0 }, 0.0))
}

/// Density operator. Subnormalized states (trace below one) are allowed, which
/// is what remains after projecting a leaked state onto a subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Hermiticity tolerance for a valid state.
    pub const HERMITIAN_TOL: f64 = 1e-10;
    /// Most negative eigenvalue still accepted as roundoff.
    pub const POSITIVITY_TOL: f64 = 1e-8;

    /// Validates Hermiticity, trace in `[0, 1]` and positivity before wrapping.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let residual = frobenius(&(&m - m.adjoint()));
        if residual > Self::HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let tr = trace(&m);
        if tr.re < -Self::HERMITIAN_TOL || tr.re > 1.0 + Self::HERMITIAN_TOL {
            return Err(Error::InvalidArgument(format!("trace {} outside [0, 1]", tr.re)));
        }
        let min_eigenvalue = HermitianSpectrum::of_hermitian_part(&m).min_value();
        if min_eigenvalue < -Self::POSITIVITY_TOL {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(Self(m))
    }

    /// Wraps without validation. Used for integrator output, whose
    /// diagnostics are reported separately.
    pub fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn pure(psi: &CVector) -> Self {
        Self(projector(psi))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(identity(dim).unscale(dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        trace(&self.0).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        HermitianSpectrum::of_hermitian_part(&self.0).min_value()
    }

    pub fn hermiticity_error(&self) -> f64 {
        frobenius(&(&self.0 - self.0.adjoint()))
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &CVector) -> f64 {
        (psi.adjoint() * &self.0 * psi)[(0, 0)].re
    }
}

/// Reduced state on the factors listed in `keep`. `dims` gives the size of each
/// tensor factor, leftmost first. An empty `keep` traces out everything and
/// returns the 1×1 matrix holding the trace.
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || total != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "factor dims {:?} do not multiply to {}",
            dims,
            rho.dim()
        )));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() || keep_sorted.iter().any(|&k| k >= dims.len()) {
        return Err(Error::InvalidArgument(format!(
            "keep {:?} is not a set of factor indices below {}",
            keep,
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep_sorted.contains(k)).collect();
    let kept_dims: Vec<usize> = keep_sorted.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let env_dim: usize = traced_dims.iter().product();

    // Row-major strides of the full register.
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let full_index = |kept: usize, env: usize| -> usize {
        let mut index = 0;
        let mut rem = kept;
        for (slot, &k) in keep_sorted.iter().enumerate().rev() {
            index += (rem % kept_dims[slot]) * strides[k];
            rem /= kept_dims[slot];
        }
        let mut rem = env;
        for (slot, &k) in traced.iter().enumerate().rev() {
            index += (rem % traced_dims[slot]) * strides[k];
            rem /= traced_dims[slot];
        }
        index
    };

    let m = rho.matrix();
    let mut out = CMatrix::zeros(out_dim, out_dim);
    for a in 0..out_dim {
        for b in 0..out_dim {
            let mut acc = ZERO;
            for e in 0..env_dim {
                acc += m[(full_index(a, e), full_index(b, e))];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(DensityMatrix(out))
}

/// Bures-Uhlmann fidelity `Tr √(√ρ_f ρ_id √ρ_f)`, not squared. Either state may
/// be subnormalized; no renormalization is applied.
pub fn bures_fidelity(rho_id: &DensityMatrix, rho_f: &DensityMatrix) -> Result<f64> {
    if rho_id.dim() != rho_f.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity between {}-dim and {}-dim states",
            rho_id.dim(),
            rho_f.dim()
        )));
    }
    for rho in [rho_id, rho_f] {
        let min_eigenvalue = rho.min_eigenvalue();
        if min_eigenvalue < -DensityMatrix::POSITIVITY_TOL {
            return Err(Error::NotPositive { min_eigenvalue });
        }
    }
    // Trace norm of √ρ_id √ρ_f: the same quantity, since the square of its
    // absolute value is √ρ_f ρ_id √ρ_f, but singular values carry absolute
    // error ~ε instead of the ~√ε left by rooting eigenvalues near zero.
    let product = sqrt_psd(rho_id.matrix()) * sqrt_psd(rho_f.matrix());
    Ok(product.singular_values().iter().sum())
}

/// Pauli matrices and single-qubit ladder operators. `|0⟩` is spin up, so
/// `σ⁺ = |0⟩⟨1|` raises.
pub mod pauli {
    use super::*;

    pub fn x() -> CMatrix {
        real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
    }

    pub fn z() -> CMatrix {
        real_matrix(2, 2, &[1.0, 0.0, 0.0, -1.0])
    }

    pub fn plus() -> CMatrix {
        real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0])
    }

    pub fn minus() -> CMatrix {
        real_matrix(2, 2, &[0.0, 0.0, 1.0, 0.0])
    }

    /// `n·σ` for a (not necessarily unit) vector `n`.
    pub fn dot(n: [f64; 3]) -> CMatrix {
        x() * c(n[0], 0.0) + y() * c(n[1], 0.0) + z() * c(n[2], 0.0)
    }
}
