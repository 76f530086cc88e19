//! Holonomic one- and two-qubit gates generated by permutation-operator
//! Hamiltonians on the four-qubit code.
//!
//! Every Hamiltonian here has the form `H(t) = Ω(t)·H₀` with a constant `H₀`,
//! so a pulse enters only through its area `∫Ω dt`. A loop closes when the
//! area is π.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::collective::CodeBasis;
use crate::error::{Error, Result};
use crate::linalg::{
    basis_ket, c, commutator, frobenius, hermitian_expm, identity, kron, max_abs_diff, pauli, projector,
    trace, unitarity_residual, CMatrix, CVector, HermitianSpectrum, C64, I, ONE, ZERO,
};
use crate::permutation::{gellmann_polynomial, transposition, CycleConvention};

/// Couplings `(J₁, J₂, J₄)` of the Λ-type Hamiltonian
/// `(J₁ − iJ₂)|3⟩⟨1| + J₄|3⟩⟨2| + h.c.`, normalized to unit length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaCouplings {
    pub j1: f64,
    pub j2: f64,
    pub j4: f64,
}

impl LambdaCouplings {
    pub fn new(j1: f64, j2: f64, j4: f64) -> Result<Self> {
        let norm = (j1 * j1 + j2 * j2 + j4 * j4).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidArgument(format!("couplings ({j1}, {j2}, {j4}) cannot be normalized")));
        }
        Ok(Self { j1: j1 / norm, j2: j2 / norm, j4: j4 / norm })
    }

    /// Couplings whose gate is `n·σ` with `n = (sinθ cosφ, sinθ sinφ, cosθ)`,
    /// from `(J₁ − iJ₂)/J₄ = −tan(θ/2) e^{iφ}`.
    pub fn from_axis(theta: f64, phi: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self { j1: -s * phi.cos(), j2: s * phi.sin(), j4: c }
    }

    pub fn from_unit_vector(n: [f64; 3]) -> Self {
        let (theta, phi) = polar_angles(n);
        Self::from_axis(theta, phi)
    }

    /// The state `(J₁ + iJ₂)|1⟩ + J₄|2⟩` coupled to `|3⟩`.
    fn bright_state(&self) -> [C64; 2] {
        [c(self.j1, self.j2), c(self.j4, 0.0)]
    }

    /// Unit vector `n` of the gate `n·σ = I − 2|b⟩⟨b|`, i.e. minus the Bloch
    /// vector of the bright state.
    pub fn axis_vector(&self) -> [f64; 3] {
        let [a, b] = self.bright_state();
        let cross = a.conj() * b;
        [-2.0 * cross.re, -2.0 * cross.im, -(a.norm_sqr() - b.norm_sqr())]
    }

    /// `(θ, φ)` with `θ ∈ [0, π]`, `φ ∈ [0, 2π)`.
    pub fn axis(&self) -> (f64, f64) {
        polar_angles(self.axis_vector())
    }
}

pub fn polar_angles(n: [f64; 3]) -> (f64, f64) {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    let theta = (n[2] / norm).clamp(-1.0, 1.0).acos();
    let phi = n[1].atan2(n[0]).rem_euclid(2.0 * PI);
    (theta, phi)
}

pub fn unit_vector(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseShape {
    Square,
    /// Gaussian cut at ±3σ around the pulse centre (σ = τ/6).
    TruncatedGaussian,
}

/// Rabi envelope `Ω(t)` on `[0, τ]`. `amplitude` is the constant value of a
/// square pulse and the peak value of a Gaussian one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub shape: PulseShape,
    pub amplitude: f64,
    pub duration: f64,
}

/// Tolerance on `|∫Ω dt − π|`.
pub const AREA_TOL: f64 = 1e-10;
const QUADRATURE_PANELS: usize = 4096;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels + panels % 2;
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for k in 1..panels {
        let weight = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += weight * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

impl PulseSpec {
    /// Square π pulse of height `amplitude` lasting `π / amplitude`.
    pub fn square(amplitude: f64) -> Self {
        Self { shape: PulseShape::Square, amplitude, duration: PI / amplitude }
    }

    /// Truncated Gaussian of length `duration` whose peak is scaled to give
    /// area π.
    pub fn truncated_gaussian(duration: f64) -> Self {
        let unit = Self { shape: PulseShape::TruncatedGaussian, amplitude: 1.0, duration };
        Self { amplitude: PI / unit.area(), ..unit }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(Error::InvalidArgument(format!("pulse amplitude {} must be positive", self.amplitude)));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidArgument(format!("pulse duration {} must be positive", self.duration)));
        }
        Ok(())
    }

    pub fn envelope(&self, t: f64) -> f64 {
        if !(0.0..=self.duration).contains(&t) {
            return 0.0;
        }
        match self.shape {
            PulseShape::Square => self.amplitude,
            PulseShape::TruncatedGaussian => {
                let sigma = self.duration / 6.0;
                let x = (t - self.duration / 2.0) / sigma;
                self.amplitude * (-0.5 * x * x).exp()
            }
        }
    }

    /// `∫_a^b Ω(t) dt` by composite Simpson quadrature.
    pub fn area_between(&self, a: f64, b: f64) -> f64 {
        match self.shape {
            PulseShape::Square => self.amplitude * (b.min(self.duration) - a.max(0.0)).max(0.0),
            PulseShape::TruncatedGaussian => {
                let panels = ((QUADRATURE_PANELS as f64 * (b - a) / self.duration).ceil() as usize).max(16);
                simpson(|t| self.envelope(t), a, b, panels)
            }
        }
    }

    pub fn area(&self) -> f64 {
        self.area_between(0.0, self.duration)
    }

    /// Fails unless the pulse is valid and closes a loop (area π).
    pub fn check_pi_area(&self) -> Result<f64> {
        self.validate()?;
        let area = self.area();
        let deviation = (area - PI).abs();
        if deviation > AREA_TOL {
            return Err(Error::PulseArea { area, deviation });
        }
        Ok(area)
    }
}

/// Logical content of an evolution on a computational subspace.
#[derive(Clone, Debug)]
pub struct GateResult {
    pub logical_block: CMatrix,
    /// Largest amplitude pushed out of the subspace, `‖(I − P) U V‖₂`; for
    /// unitary `U` this is `√(1 − σ_min²)` of the logical block.
    pub leakage: f64,
    /// `1 − |Tr(T† B)| / dim`, insensitive to global phase.
    pub target_distance: f64,
}

/// Phase-invariant distance `1 − |Tr(T†U)|/dim`.
pub fn phase_invariant_distance(target: &CMatrix, u: &CMatrix) -> f64 {
    (1.0 - trace(&(target.adjoint() * u)).norm() / target.nrows() as f64).max(0.0)
}

/// `logical_block[a][b] = ⟨basis_a|u|basis_b⟩`, with leakage and distance to
/// `target`.
pub fn extract_gate(u: &CMatrix, computational_basis: &[CVector], target: &CMatrix) -> Result<GateResult> {
    let k = computational_basis.len();
    if target.shape() != (k, k) {
        return Err(Error::DimensionMismatch(format!(
            "target is {:?} for a {k}-dim computational subspace",
            target.shape()
        )));
    }
    let frame = CMatrix::from_columns(computational_basis);
    if frame.nrows() != u.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "basis vectors of dim {} for a {}-dim evolution",
            frame.nrows(),
            u.nrows()
        )));
    }
    let evolved = u * &frame;
    let logical_block = frame.adjoint() * &evolved;
    // Measured on the out-of-subspace component itself; going through
    // `1 − σ_min²` would turn roundoff into √ε ≈ 1e−8.
    let outside = &evolved - &frame * &logical_block;
    let leakage = outside.singular_values().max();
    let target_distance = phase_invariant_distance(target, &logical_block);
    Ok(GateResult { logical_block, leakage, target_distance })
}

/// One-qubit holonomic Hamiltonian (Ω factored out) in permutation form,
/// `J₁λ₁ + J₂λ₂ + J₄λ₄` with each `λ` written through qubit exchanges.
pub fn one_qubit_hamiltonian(couplings: &LambdaCouplings) -> CMatrix {
    let term = |i: usize, weight: f64| -> CMatrix {
        gellmann_polynomial(i)
            .and_then(|p| p.matrix(4, CycleConvention::LeftToRight))
            .expect("two-body realization")
            * c(weight, 0.0)
    };
    term(1, couplings.j1) + term(2, couplings.j2) + term(4, couplings.j4)
}

/// `[(J₁ − iJ₂)|3⟩⟨1| + J₄|3⟩⟨2| + h.c.] ⊗ I_NF` in code coordinates (9×9).
pub fn lambda_form(couplings: &LambdaCouplings) -> CMatrix {
    let mut ns = CMatrix::zeros(3, 3);
    ns[(2, 0)] = c(couplings.j1, -couplings.j2);
    ns[(2, 1)] = c(couplings.j4, 0.0);
    let ns = &ns + ns.adjoint();
    kron(&ns, &identity(CodeBasis::NF_DIM))
}

/// `|1⟩|nf⟩₄, |2⟩|nf⟩₄`: the noiseless qubit with the noiseful factor fixed.
pub fn logical_qubit_basis(basis: &CodeBasis, nf: usize) -> [CVector; 2] {
    [basis.vector(1, nf), basis.vector(2, nf)]
}

/// Projector onto `span{|1⟩, |2⟩} ⊗ NF` on the register.
pub fn logical_subspace_projector(basis: &CodeBasis) -> CMatrix {
    let mut p = CMatrix::zeros(16, 16);
    for i in 1..=2 {
        for j in 1..=3 {
            p += projector(&basis.vector(i, j));
        }
    }
    p
}

/// `U = exp(−i ∫Ω dt · H₀)` for a π-area pulse.
pub fn evolve_pulse(h_normalized: &CMatrix, pulse: &PulseSpec) -> Result<CMatrix> {
    let area = pulse.check_pi_area()?;
    hermitian_expm(h_normalized, area)
}

/// Time-ordered product of slice propagators `exp(−i a_k H₀)` with
/// `a_k = ∫_{slice k} Ω dt`.
pub fn evolve_pulse_sliced(h_normalized: &CMatrix, pulse: &PulseSpec, slices: usize) -> Result<CMatrix> {
    pulse.check_pi_area()?;
    if slices == 0 {
        return Err(Error::InvalidArgument("at least one slice is needed".into()));
    }
    let spectrum = HermitianSpectrum::new(h_normalized)?;
    let dt = pulse.duration / slices as f64;
    let mut u = identity(h_normalized.nrows());
    for k in 0..slices {
        let area = pulse.area_between(k as f64 * dt, (k + 1) as f64 * dt);
        u = spectrum.unitary(area) * u;
    }
    Ok(u)
}

/// Largest `|⟨ψ_j(t)|H(t)|ψ_k(t)⟩|` over `samples` equally spaced times and
/// all pairs of evolved basis states. Zero certifies parallel transport.
pub fn dynamical_phase_along_path(
    h_normalized: &CMatrix,
    pulse: &PulseSpec,
    basis: &[CVector],
    samples: usize,
) -> Result<f64> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two sample times".into()));
    }
    pulse.validate()?;
    let spectrum = HermitianSpectrum::new(h_normalized)?;
    let frame = CMatrix::from_columns(basis);
    let mut worst = 0.0f64;
    for s in 0..samples {
        let t = pulse.duration * s as f64 / (samples - 1) as f64;
        let evolved = spectrum.unitary(pulse.area_between(0.0, t)) * &frame;
        let h_t = h_normalized * c(pulse.envelope(t), 0.0);
        let block = evolved.adjoint() * h_t * &evolved;
        worst = block.iter().map(|x| x.norm()).fold(worst, f64::max);
    }
    Ok(worst)
}

/// Two reflection axes with `(n₁·σ)(n₂·σ) = target` up to global phase; `n₂`
/// is applied first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Su2Synthesis {
    pub n1: [f64; 3],
    pub n2: [f64; 3],
}

impl Su2Synthesis {
    pub fn product(&self) -> CMatrix {
        pauli::dot(self.n1) * pauli::dot(self.n2)
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Matches `(n₁·σ)(n₂·σ) = (n₁·n₂) I + i (n₁×n₂)·σ` against the target
/// written as `cos α I − i sin α (m·σ)` after removing its determinant phase.
pub fn synthesize_su2(target: &CMatrix) -> Result<Su2Synthesis> {
    if target.shape() != (2, 2) {
        return Err(Error::DimensionMismatch(format!("SU(2) target must be 2x2, got {:?}", target.shape())));
    }
    let residual = unitarity_residual(target);
    if residual > 1e-8 {
        return Err(Error::InvalidArgument(format!("target is not unitary (residual {residual:.3e})")));
    }
    let det = target.determinant();
    let special = target * det.sqrt().inv();
    let a0 = trace(&special).re / 2.0;
    // special = a0 I − i a·σ, so Tr(σ_k special) = −2i a_k.
    let a = [pauli::x(), pauli::y(), pauli::z()].map(|s| (trace(&(s * &special)) * I / 2.0).re);
    let sin_alpha = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    if sin_alpha < 1e-12 {
        let z = [0.0, 0.0, 1.0];
        return Ok(Su2Synthesis { n1: z, n2: z });
    }
    let m = [a[0] / sin_alpha, a[1] / sin_alpha, a[2] / sin_alpha];
    let helper = if m[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let along = helper[0] * m[0] + helper[1] * m[1] + helper[2] * m[2];
    let n1 = normalize([helper[0] - along * m[0], helper[1] - along * m[1], helper[2] - along * m[2]]);
    let w = cross(n1, m);
    let n2 = [
        a0 * n1[0] + sin_alpha * w[0],
        a0 * n1[1] + sin_alpha * w[1],
        a0 * n1[2] + sin_alpha * w[2],
    ];
    Ok(Su2Synthesis { n1, n2: normalize(n2) })
}

/// `R_z(a) R_y(b) R_z(c)` with `R_k(x) = exp(−i x σ_k / 2)`.
pub fn euler_zyz(a: f64, b: f64, c_angle: f64) -> CMatrix {
    let rz = |x: f64| hermitian_expm(&pauli::z(), x / 2.0).expect("Hermitian");
    let ry = |x: f64| hermitian_expm(&pauli::y(), x / 2.0).expect("Hermitian");
    rz(a) * ry(b) * rz(c_angle)
}

/// Haar-distributed SU(2) targets from a seeded generator.
pub fn random_su2_targets(count: usize, seed: u64) -> Vec<CMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = rng.gen_range(0.0..2.0 * PI);
            let b = (1.0 - 2.0 * rng.gen::<f64>()).acos();
            let c_angle = rng.gen_range(0.0..2.0 * PI);
            euler_zyz(a, b, c_angle)
        })
        .collect()
}

/// Named single-qubit gates accepted by the command line.
pub fn named_gate(name: &str) -> Option<CMatrix> {
    let s = 0.5f64.sqrt();
    Some(match name {
        "identity" | "i" => identity(2),
        "pauli-x" | "x" => pauli::x(),
        "pauli-y" | "y" => pauli::y(),
        "pauli-z" | "z" => pauli::z(),
        "hadamard" | "h" => pauli::dot([s, 0.0, s]),
        "s" => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, I]),
        "t" => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, C64::from_polar(1.0, PI / 4.0)]),
        _ => return None,
    })
}

/// Simulated two-pulse realization of an SU(2) target on the noiseless qubit.
#[derive(Clone, Debug)]
pub struct Su2GateReport {
    pub synthesis: Su2Synthesis,
    pub couplings: [LambdaCouplings; 2],
    pub gate: GateResult,
}

/// Synthesizes `target`, evolves the two π pulses in sequence on the register
/// and extracts the logical gate with the NF factor fixed to `nf`.
pub fn realize_su2(target: &CMatrix, pulse: &PulseSpec, basis: &CodeBasis, nf: usize) -> Result<Su2GateReport> {
    let synthesis = synthesize_su2(target)?;
    let first = LambdaCouplings::from_unit_vector(synthesis.n2);
    let second = LambdaCouplings::from_unit_vector(synthesis.n1);
    let u = evolve_pulse(&one_qubit_hamiltonian(&second), pulse)? * evolve_pulse(&one_qubit_hamiltonian(&first), pulse)?;
    let gate = extract_gate(&u, &logical_qubit_basis(basis, nf), target)?;
    Ok(Su2GateReport { synthesis, couplings: [first, second], gate })
}

/// `P₁₃ − P₂₃ − 3P₁₄ + 3P₂₄` on one four-qubit block (`2√6 λ₄` on the code).
fn lambda4_block() -> CMatrix {
    let t = |p, q| transposition(p, q, 4).expect("valid").matrix;
    t(1, 3) - t(2, 3) - t(1, 4).scale(3.0) + t(2, 4).scale(3.0)
}

/// Eight-qubit entangling Hamiltonian (Ω factored out):
/// `(1/12) A_L ⊗ [P₂₃ − P₁₃ − A/(2√2)]_{L′}` with `A = P₁₃ − P₂₃ − 3P₁₄ + 3P₂₄`.
/// Qubits 1–4 form the control block `L`, qubits 5–8 the target block `L′`.
pub fn two_qubit_hamiltonian() -> CMatrix {
    let a = lambda4_block();
    let t = |p, q| transposition(p, q, 4).expect("valid").matrix;
    let b = t(2, 3) - t(1, 3) - a.unscale(2.0 * 2f64.sqrt());
    kron(&a, &b).unscale(12.0)
}

/// 256×81 isometry onto `(ℂ³⊗ℂ³)_L ⊗ (ℂ³⊗ℂ³)_{L′}`, columns ordered as
/// `(NS_L ⊗ NS_{L′}) ⊗ (NF_L ⊗ NF_{L′})`.
pub fn two_block_code_isometry(basis: &CodeBasis) -> CMatrix {
    let mut w = CMatrix::zeros(256, 81);
    for i in 1..=3 {
        for ip in 1..=3 {
            for j in 1..=3 {
                for jp in 1..=3 {
                    let col = ((i - 1) * 3 + (ip - 1)) * 9 + (j - 1) * 3 + (jp - 1);
                    let v = basis.vector(i, j).kronecker(&basis.vector(ip, jp));
                    w.set_column(col, &v);
                }
            }
        }
    }
    w
}

/// `|a b⟩⟨c d|` on `NS_L ⊗ NS_{L′}` (9×9), 1-based labels.
fn two_ket_bra(a: usize, b: usize, cc: usize, d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(9, 9);
    m[((a - 1) * 3 + (b - 1), (cc - 1) * 3 + (d - 1))] = ONE;
    m
}

/// `H₀ = (|33⟩⟨21| − |33⟩⟨22|)/√2 + h.c.`
pub fn two_qubit_h0() -> CMatrix {
    let m = (two_ket_bra(3, 3, 2, 1) - two_ket_bra(3, 3, 2, 2)).unscale(2f64.sqrt());
    &m + m.adjoint()
}

/// `H₁ = (|31⟩⟨23| − |32⟩⟨23|)/√2 + h.c.`
pub fn two_qubit_h1() -> CMatrix {
    let m = (two_ket_bra(3, 1, 2, 3) - two_ket_bra(3, 2, 2, 3)).unscale(2f64.sqrt());
    &m + m.adjoint()
}

/// CNOT on `|11⟩, |12⟩, |21⟩, |22⟩` with the first noiseless qubit as control.
pub fn cnot() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

const COMPUTATIONAL_PAIRS: [(usize, usize); 4] = [(1, 1), (1, 2), (2, 1), (2, 2)];

/// Everything checked about the entangling gate.
#[derive(Clone, Debug)]
pub struct TwoQubitReport {
    /// Logical block on `span{|11⟩,|12⟩,|21⟩,|22⟩}` with NF fixed to `|1⟩|1⟩`.
    pub gate: GateResult,
    /// Largest entry of `logical_block − CNOT`.
    pub cnot_residual: f64,
    /// `‖V† H V − (H₀ + H₁) ⊗ I_NF‖_F` on the 81-dim code.
    pub restriction_residual: f64,
    /// `‖[H₀, H₁]‖_F`.
    pub commutator_norm: f64,
    /// `P_M H P_M` for `H = H₀ + H₁`.
    pub computational_block_norm: f64,
    /// Largest entry of `P_M e^{−iπH₁} P_M − I_M`.
    pub h1_identity_residual: f64,
    /// `‖V† U V − (e^{−iπH₀} e^{−iπH₁}) ⊗ I_NF‖_F`.
    pub factorization_residual: f64,
    /// `e^{−iπH₀}` against `I − 2(|b⟩⟨b| + |33⟩⟨33|)`, `|b⟩ = (|21⟩ − |22⟩)/√2`.
    pub reflection_residual: f64,
    /// Unitarity of the full 256×256 propagator.
    pub unitarity_residual: f64,
}

impl TwoQubitReport {
    pub fn passed(&self) -> bool {
        self.cnot_residual <= 1e-8
            && self.gate.target_distance <= 1e-8
            && self.gate.leakage <= 1e-10
            && self.restriction_residual <= 1e-12
            && self.commutator_norm <= 1e-12
            && self.computational_block_norm <= 1e-12
            && self.h1_identity_residual <= 1e-10
            && self.factorization_residual <= 1e-8
    }
}

/// Computes every quantity in [`TwoQubitReport`] without judging it.
pub fn two_qubit_report(basis: &CodeBasis) -> Result<TwoQubitReport> {
    let h = two_qubit_hamiltonian();
    let w = two_block_code_isometry(basis);
    let h0 = two_qubit_h0();
    let h1 = two_qubit_h1();
    let nf_identity = identity(9);

    let restriction_residual = frobenius(&(w.adjoint() * &h * &w - kron(&(&h0 + &h1), &nf_identity)));
    let commutator_norm = frobenius(&commutator(&h0, &h1));

    let computational: Vec<usize> = COMPUTATIONAL_PAIRS.iter().map(|&(a, b)| (a - 1) * 3 + (b - 1)).collect();
    let compress = |m: &CMatrix| -> CMatrix {
        CMatrix::from_fn(4, 4, |r, col| m[(computational[r], computational[col])])
    };
    let computational_block_norm = frobenius(&compress(&(&h0 + &h1)));

    let u0 = hermitian_expm(&h0, PI)?;
    let u1 = hermitian_expm(&h1, PI)?;
    let h1_identity_residual = max_abs_diff(&compress(&u1), &identity(4));

    let b = (basis_ket(9, 3) - basis_ket(9, 4)).unscale(2f64.sqrt());
    let reflection = identity(9) - (projector(&b) + projector(&basis_ket(9, 8))).scale(2.0);
    let reflection_residual = max_abs_diff(&u0, &reflection);

    let pulse = PulseSpec::square(1.0);
    let u = evolve_pulse(&h, &pulse)?;
    let factorization_residual = frobenius(&(w.adjoint() * &u * &w - kron(&(&u0 * &u1), &nf_identity)));

    let logical: Vec<CVector> = COMPUTATIONAL_PAIRS
        .iter()
        .map(|&(a, bb)| basis.vector(a, 1).kronecker(&basis.vector(bb, 1)))
        .collect();
    let gate = extract_gate(&u, &logical, &cnot())?;
    let cnot_residual = max_abs_diff(&gate.logical_block, &cnot());

    Ok(TwoQubitReport {
        cnot_residual,
        restriction_residual,
        commutator_norm,
        computational_block_norm,
        h1_identity_residual,
        factorization_residual,
        reflection_residual,
        unitarity_residual: unitarity_residual(&u),
        gate,
    })
}

/// Evolves the entangling pulse and fails unless the logical block is CNOT.
pub fn verify_cnot() -> Result<TwoQubitReport> {
    let report = two_qubit_report(&crate::collective::four_qubit_code_basis())?;
    if !report.passed() {
        return Err(Error::Verification(format!(
            "entangling gate is not CNOT: distance {:.3e}, max deviation {:.3e}",
            report.gate.target_distance, report.cnot_residual
        )));
    }
    Ok(report)
}
