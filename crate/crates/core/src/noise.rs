//! Symmetry-broken collective decoherence acting during a holonomic pulse.
//!
//! The jump operators are `E′_α = Σ_p e^{−pg} σ_α^p` on four qubits and the
//! state obeys
//!
//! ```text
//! ρ̇ = −i[Ω(t)H₀, ρ] + Γ D[E′_z]ρ + γ(n̄+1) D[E′_−]ρ + γn̄ D[E′_+]ρ
//! D[L]ρ = LρL† − ½{L†L, ρ}
//! ```
//!
//! integrated with classical fixed-step RK4 over the pulse window `[0, τ]`.

use serde::{Deserialize, Serialize};

use crate::collective::CollectiveErrorOps;
use crate::error::{Error, Result};
use crate::holonomy::PulseSpec;
use crate::linalg::{c, frobenius, trace, CMatrix, DensityMatrix, C64, I};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Symmetry-breaking exponent; `g = 0` is fully collective noise.
    pub g: f64,
    /// Dephasing rate Γ in units of Ω.
    pub gamma_phi: f64,
    /// Dissipation rate γ in units of Ω.
    pub gamma: f64,
    /// Mean number of environmental quanta.
    pub nbar: f64,
}

impl NoiseParams {
    pub const NOISELESS: NoiseParams = NoiseParams { g: 0.0, gamma_phi: 0.0, gamma: 0.0, nbar: 0.0 };

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("g", self.g), ("gamma_phi", self.gamma_phi), ("gamma", self.gamma), ("nbar", self.nbar)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} = {value} must be finite and non-negative")));
            }
        }
        Ok(())
    }

    pub fn with_g(self, g: f64) -> Self {
        Self { g, ..self }
    }
}

/// `E′_α` share the layout of the collective operators.
pub type BrokenErrorOps = CollectiveErrorOps;

/// Weights `e^{−pg}` on qubits `p = 1..4`.
pub fn broken_error_ops(g: f64) -> Result<BrokenErrorOps> {
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::InvalidArgument(format!("g = {g} must be finite and non-negative")));
    }
    let weights: Vec<f64> = (1..=4).map(|p| (-(p as f64) * g).exp()).collect();
    Ok(CollectiveErrorOps::weighted(&weights))
}

/// Right-hand side of the master equation at time `t` with `H_s(t) = Ω(t)·h_s`.
/// Builds the jump operators on every call; [`Lindbladian`] caches them.
pub fn lindblad_rhs(rho: &CMatrix, t: f64, h_s: &CMatrix, pulse: &PulseSpec, params: &NoiseParams) -> Result<CMatrix> {
    params.validate()?;
    let ops = broken_error_ops(params.g)?;
    let hamiltonian = h_s * c(pulse.envelope(t), 0.0);
    let mut out = (&hamiltonian * rho - rho * &hamiltonian) * -I;
    let mut dissipate = |rate: f64, l: &CMatrix, l_dag: &CMatrix| {
        if rate != 0.0 {
            let ldl = l_dag * l;
            out += (l * rho * l_dag - (&ldl * rho + rho * &ldl).scale(0.5)).scale(rate);
        }
    };
    dissipate(params.gamma_phi, &ops.e_z, &ops.e_z);
    dissipate(params.gamma * (params.nbar + 1.0), &ops.e_minus, &ops.e_plus);
    dissipate(params.gamma * params.nbar, &ops.e_plus, &ops.e_minus);
    Ok(out)
}

/// Real sparse matrix as `(row, col, value)` triples.
#[derive(Clone, Debug)]
struct SparseReal {
    entries: Vec<(usize, usize, f64)>,
}

impl SparseReal {
    fn from_dense(m: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for col in 0..m.ncols() {
            for row in 0..m.nrows() {
                let x = m[(row, col)];
                debug_assert!(x.im == 0.0);
                if x.re != 0.0 {
                    entries.push((row, col, x.re));
                }
            }
        }
        Self { entries }
    }

    /// `out += rate · L ρ L†`.
    fn sandwich_into(&self, rho: &CMatrix, rate: f64, scratch: &mut CMatrix, out: &mut CMatrix) {
        let dim = rho.nrows();
        scratch.fill(C64::new(0.0, 0.0));
        for &(r, col, v) in &self.entries {
            for k in 0..dim {
                scratch[(r, k)] += rho[(col, k)] * v;
            }
        }
        // (scratch L†)[:, r'] = Σ_{c'} L[r', c'] scratch[:, c']
        for &(r, col, v) in &self.entries {
            let w = v * rate;
            for k in 0..dim {
                let x = scratch[(k, col)];
                out[(k, r)] += x * w;
            }
        }
    }
}

/// Cached generator for one `(H₀, pulse, noise)` combination.
#[derive(Clone, Debug)]
pub struct Lindbladian {
    h0: CMatrix,
    pulse: PulseSpec,
    /// `−(i/2) Σ rate L†L`, the anti-Hermitian part of the effective Hamiltonian.
    decay: CMatrix,
    jumps: Vec<(f64, SparseReal)>,
}

impl Lindbladian {
    pub fn new(h0: &CMatrix, pulse: &PulseSpec, params: &NoiseParams) -> Result<Self> {
        params.validate()?;
        pulse.validate()?;
        let ops = broken_error_ops(params.g)?;
        if h0.shape() != (ops.dim(), ops.dim()) {
            return Err(Error::DimensionMismatch(format!(
                "Hamiltonian is {:?}, register is {}",
                h0.shape(),
                ops.dim()
            )));
        }
        let channels = [
            (params.gamma_phi, ops.e_z.clone(), ops.e_z.clone()),
            (params.gamma * (params.nbar + 1.0), ops.e_minus.clone(), ops.e_plus.clone()),
            (params.gamma * params.nbar, ops.e_plus.clone(), ops.e_minus.clone()),
        ];
        let mut decay = CMatrix::zeros(ops.dim(), ops.dim());
        let mut jumps = Vec::new();
        for (rate, l, l_dag) in channels {
            if rate == 0.0 {
                continue;
            }
            decay += (l_dag * &l) * c(0.0, -0.5 * rate);
            jumps.push((rate, SparseReal::from_dense(&l)));
        }
        Ok(Self { h0: h0.clone(), pulse: *pulse, decay, jumps })
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    /// `ρ̇ = −i(Kρ − ρK†) + Σ rate LρL†` with `K = Ω(t)H₀ − (i/2)Σ rate L†L`.
    pub fn apply(&self, t: f64, rho: &CMatrix, scratch: &mut CMatrix, out: &mut CMatrix) {
        let k = &self.h0 * c(self.pulse.envelope(t), 0.0) + &self.decay;
        let k_rho = &k * rho;
        let rho_k_dag = rho * k.adjoint();
        *out = (k_rho - rho_k_dag) * -I;
        for (rate, l) in &self.jumps {
            l.sandwich_into(rho, *rate, scratch, out);
        }
    }

    pub fn rhs(&self, t: f64, rho: &CMatrix) -> CMatrix {
        let mut scratch = CMatrix::zeros(self.dim(), self.dim());
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        self.apply(t, rho, &mut scratch, &mut out);
        out
    }

    /// Classical RK4 over `[0, τ]` in `steps` equal steps.
    pub fn integrate(&self, rho0: &CMatrix, steps: usize) -> Result<DensityMatrix> {
        if steps < MIN_STEPS {
            return Err(Error::InvalidArgument(format!("{steps} steps; at least {MIN_STEPS} are required")));
        }
        if rho0.shape() != self.h0.shape() {
            return Err(Error::DimensionMismatch(format!("initial state is {:?}", rho0.shape())));
        }
        let dim = self.dim();
        let h = self.pulse.duration / steps as f64;
        let mut rho = rho0.clone();
        let mut scratch = CMatrix::zeros(dim, dim);
        let (mut k1, mut k2, mut k3, mut k4) =
            (CMatrix::zeros(dim, dim), CMatrix::zeros(dim, dim), CMatrix::zeros(dim, dim), CMatrix::zeros(dim, dim));
        // Stage times from the step index so the last stage lands on τ exactly
        // instead of just past it, where the envelope vanishes.
        let time = |n: usize| self.pulse.duration * n as f64 / steps as f64;
        for n in 0..steps {
            let (t, t_next) = (time(n), time(n + 1));
            let t_mid = 0.5 * (t + t_next);
            self.apply(t, &rho, &mut scratch, &mut k1);
            let stage = &rho + &k1 * c(h / 2.0, 0.0);
            self.apply(t_mid, &stage, &mut scratch, &mut k2);
            let stage = &rho + &k2 * c(h / 2.0, 0.0);
            self.apply(t_mid, &stage, &mut scratch, &mut k3);
            let stage = &rho + &k3 * c(h, 0.0);
            self.apply(t_next, &stage, &mut scratch, &mut k4);
            rho += (&k1 + (&k2 + &k3) * c(2.0, 0.0) + &k4) * c(h / 6.0, 0.0);
        }
        Ok(DensityMatrix::from_matrix_unchecked(rho))
    }
}

pub const MIN_STEPS: usize = 100;
/// Default number of RK4 steps over a π pulse.
pub const DEFAULT_STEPS: usize = 2000;

/// Evolves `rho0` under the master equation for the duration of `pulse`.
pub fn integrate(
    rho0: &DensityMatrix,
    h_normalized: &CMatrix,
    pulse: &PulseSpec,
    params: &NoiseParams,
    steps: usize,
) -> Result<DensityMatrix> {
    Lindbladian::new(h_normalized, pulse, params)?.integrate(rho0.matrix(), steps)
}

/// Integrates with `steps` and `2·steps` and fails if the end states differ by
/// more than `tolerance` in Frobenius norm. Returns the finer result.
pub fn integrate_checked(
    rho0: &DensityMatrix,
    h_normalized: &CMatrix,
    pulse: &PulseSpec,
    params: &NoiseParams,
    steps: usize,
    tolerance: f64,
) -> Result<DensityMatrix> {
    let generator = Lindbladian::new(h_normalized, pulse, params)?;
    let coarse = generator.integrate(rho0.matrix(), steps)?;
    let fine = generator.integrate(rho0.matrix(), 2 * steps)?;
    let delta = frobenius(&(coarse.matrix() - fine.matrix()));
    if delta > tolerance {
        return Err(Error::Convergence(format!(
            "end states at {steps} and {} steps differ by {delta:.3e}; increase steps",
            2 * steps
        )));
    }
    Ok(fine)
}

/// Errors of `steps` and `2·steps` integrations measured against a
/// `4·steps` reference. A fourth-order method gives a ratio near 17.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceOrder {
    pub steps: usize,
    pub coarse_error: f64,
    pub fine_error: f64,
}

impl ConvergenceOrder {
    pub fn ratio(&self) -> f64 {
        self.coarse_error / self.fine_error
    }

    /// Empirical order `log₂` of the error ratio.
    pub fn order(&self) -> f64 {
        self.ratio().log2()
    }
}

pub fn convergence_order(generator: &Lindbladian, rho0: &CMatrix, steps: usize) -> Result<ConvergenceOrder> {
    let reference = generator.integrate(rho0, 4 * steps)?;
    let error = |n: usize| -> Result<f64> {
        Ok(frobenius(&(generator.integrate(rho0, n)?.matrix() - reference.matrix())))
    };
    Ok(ConvergenceOrder { steps, coarse_error: error(steps)?, fine_error: error(2 * steps)? })
}

/// Soundness figures of an integrated state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StateDiagnostics {
    /// `|Tr ρ − 1|`.
    pub trace_drift: f64,
    /// `‖ρ − ρ†‖_F`.
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl StateDiagnostics {
    pub const TRACE_TOL: f64 = 1e-7;
    pub const HERMITIAN_TOL: f64 = 1e-9;
    pub const POSITIVITY_TOL: f64 = 1e-6;

    pub fn of(rho: &DensityMatrix) -> Self {
        Self {
            trace_drift: (trace(rho.matrix()) - c(1.0, 0.0)).norm(),
            hermiticity_error: rho.hermiticity_error(),
            min_eigenvalue: rho.min_eigenvalue(),
        }
    }

    /// Worst case of two diagnostics.
    pub fn merge(self, other: Self) -> Self {
        Self {
            trace_drift: self.trace_drift.max(other.trace_drift),
            hermiticity_error: self.hermiticity_error.max(other.hermiticity_error),
            min_eigenvalue: self.min_eigenvalue.min(other.min_eigenvalue),
        }
    }

    pub fn sound(&self) -> bool {
        self.trace_drift <= Self::TRACE_TOL
            && self.hermiticity_error <= Self::HERMITIAN_TOL
            && self.min_eigenvalue >= -Self::POSITIVITY_TOL
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collective::{four_qubit_code_basis, ns_reduce};
    use crate::holonomy::{one_qubit_hamiltonian, LambdaCouplings};
    use crate::linalg::{hermitian_expm, kron, max_abs_diff, projector, CVector};
    use std::f64::consts::PI;

    fn reference_rates(g: f64, nbar: f64) -> NoiseParams {
        NoiseParams { g, gamma_phi: 0.1, gamma: 0.1, nbar }
    }

    fn random_state(seed: u64) -> DensityMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = CMatrix::from_fn(16, 16, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let m = &a * a.adjoint();
        let t = trace(&m).re;
        DensityMatrix::new(m.unscale(t)).unwrap()
    }

    #[test]
    fn broken_ops_limits() {
        let collective = CollectiveErrorOps::new(4).unwrap();
        let at_zero = broken_error_ops(0.0).unwrap();
        assert_eq!(at_zero.e_z, collective.e_z);
        assert_eq!(at_zero.e_plus, collective.e_plus);
        let large = broken_error_ops(40.0).unwrap();
        assert!(frobenius(&large.e_z) < 1e-16);
        let half = broken_error_ops(2f64.ln()).unwrap();
        // ⟨0111| E′_z |0111⟩ = w₁ − w₂ − w₃ − w₄ with weights 2^{−p}.
        let expected = 0.5 - 0.25 - 0.125 - 0.0625;
        assert!((half.e_z[(7, 7)].re - expected).abs() < 1e-15);
        assert_eq!(half.e_minus, half.e_plus.adjoint());
        assert!(broken_error_ops(-1.0).is_err());
    }

    #[test]
    fn rhs_is_traceless_and_hermitian() {
        let h = one_qubit_hamiltonian(&LambdaCouplings::from_axis(0.7, 1.3));
        let pulse = PulseSpec::square(1.0);
        let rho = random_state(3);
        let out = lindblad_rhs(rho.matrix(), 0.5, &h, &pulse, &reference_rates(0.4, 1.0)).unwrap();
        assert!(trace(&out).norm() < 1e-13);
        assert!(frobenius(&(&out - out.adjoint())) < 1e-13);
    }

    #[test]
    fn cached_generator_matches_direct_formula() {
        let h = one_qubit_hamiltonian(&LambdaCouplings::from_axis(0.7, 1.3));
        let pulse = PulseSpec::square(1.0);
        let rho = random_state(5);
        let params = reference_rates(0.25, 1.0);
        let direct = lindblad_rhs(rho.matrix(), 1.0, &h, &pulse, &params).unwrap();
        let cached = Lindbladian::new(&h, &pulse, &params).unwrap().rhs(1.0, rho.matrix());
        assert!(max_abs_diff(&direct, &cached) < 1e-13);
    }

    #[test]
    fn closed_system_rhs_is_commutator() {
        let h = one_qubit_hamiltonian(&LambdaCouplings::from_axis(0.2, 0.0));
        let pulse = PulseSpec::square(1.0);
        let rho = random_state(7);
        let out = lindblad_rhs(rho.matrix(), 0.1, &h, &pulse, &NoiseParams::NOISELESS).unwrap();
        let expected = (&h * rho.matrix() - rho.matrix() * &h) * -I;
        assert!(max_abs_diff(&out, &expected) < 1e-15);
    }

    #[test]
    fn collective_dephasing_leaves_ns_stationary() {
        let basis = four_qubit_code_basis();
        let ns = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)]);
        let nf = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.5, 0.0), c(0.3, 0.0), c(0.2, 0.0)]));
        let code_state = kron(&projector(&ns), &nf);
        let rho = basis.isometry() * code_state * basis.isometry().adjoint();
        let off = PulseSpec { amplitude: 1e-300, ..PulseSpec::square(1.0) };
        let h = one_qubit_hamiltonian(&LambdaCouplings::from_axis(0.3, 0.3));
        let params = NoiseParams { g: 0.0, gamma_phi: 0.7, gamma: 0.0, nbar: 0.0 };
        let out = lindblad_rhs(&rho, 0.0, &h, &off, &params).unwrap();
        let reduced = ns_reduce(&DensityMatrix::from_matrix_unchecked(out), &basis).unwrap();
        assert!(reduced.matrix().norm() < 1e-14);
    }

    #[test]
    fn noiseless_integration_matches_unitary() {
        let h = one_qubit_hamiltonian(&LambdaCouplings::from_axis(1.0, 2.0));
        let pulse = PulseSpec::square(1.0);
        let rho0 = random_state(11);
        let rho = integrate(&rho0, &h, &pulse, &NoiseParams::NOISELESS, DEFAULT_STEPS).unwrap();
        let u = hermitian_expm(&h, PI).unwrap();
        let expected = &u * rho0.matrix() * u.adjoint();
        assert!(max_abs_diff(rho.matrix(), &expected) < 1e-8);
    }

    #[test]
    fn too_few_steps_rejected() {
        let h = one_qubit_hamiltonian(&LambdaCouplings::from_axis(1.0, 2.0));
        let rho0 = random_state(1);
        let err = integrate(&rho0, &h, &PulseSpec::square(1.0), &NoiseParams::NOISELESS, 10).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn halving_check_reports_nonconvergence() {
        let h = one_qubit_hamiltonian(&LambdaCouplings::from_axis(1.0, 2.0));
        let rho0 = random_state(2);
        let pulse = PulseSpec::square(1.0);
        let params = NoiseParams { g: 0.5, gamma_phi: 5.0, gamma: 5.0, nbar: 1.0 };
        let err = integrate_checked(&rho0, &h, &pulse, &params, 100, 1e-14).unwrap_err();
        assert!(matches!(err, Error::Convergence(_)));
        assert!(integrate_checked(&rho0, &h, &pulse, &reference_rates(0.3, 0.0), 2000, 1e-8).is_ok());
    }

    #[test]
    fn fourth_order_convergence() {
        let h = one_qubit_hamiltonian(&LambdaCouplings::from_axis(1.0, 2.0));
        let generator = Lindbladian::new(&h, &PulseSpec::square(1.0), &reference_rates(0.3, 1.0)).unwrap();
        let order = convergence_order(&generator, random_state(3).matrix(), 100).unwrap();
        assert!((14.0..=20.0).contains(&order.ratio()), "{order:?}");
    }
}
