//! Gate fidelity of the noiseless-subsystem holonomic gate under
//! symmetry-broken collective noise, swept over the breaking parameter `g`.

use std::io::{Read, Write};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collective::{four_qubit_code_basis, ns_reduce, CodeBasis};
use crate::error::{Error, Result};
use crate::holonomy::{named_gate, one_qubit_hamiltonian, unit_vector, LambdaCouplings, PulseSpec};
use crate::linalg::{basis_ket, bures_fidelity, c, pauli, trace, CMatrix, CVector, DensityMatrix};
use crate::noise::{Lindbladian, NoiseParams, StateDiagnostics, DEFAULT_STEPS, MIN_STEPS};

/// `n` logarithmically spaced points from `10^lo` to `10^hi`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![10f64.powf(lo)],
        _ => (0..n).map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (n - 1) as f64)).collect(),
    }
}

fn default_g_values() -> Vec<f64> {
    logspace(-3.0, 0.0, 30)
}

fn default_nbar_values() -> Vec<f64> {
    vec![0.0, 1.0]
}

fn default_gamma_ratio() -> f64 {
    0.1
}

fn default_pulse() -> PulseSpec {
    PulseSpec::square(1.0)
}

fn default_gate() -> String {
    "pauli-z".into()
}

fn default_nf_state() -> usize {
    1
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

fn default_seed() -> u64 {
    20130527
}

fn default_convergence_tol() -> f64 {
    1e-8
}

/// Sweep configuration; every field has a default, unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_g_values")]
    pub g_values: Vec<f64>,
    #[serde(default = "default_nbar_values")]
    pub nbar_values: Vec<f64>,
    /// Γ/Ω = γ/Ω.
    #[serde(default = "default_gamma_ratio")]
    pub gamma_ratio: f64,
    #[serde(default = "default_pulse")]
    pub pulse: PulseSpec,
    /// Logical target: `pauli-x|pauli-y|pauli-z|hadamard` or `axis:θ,φ`.
    #[serde(default = "default_gate")]
    pub gate: String,
    /// NF label `j ∈ {1, 2, 3}` of the spectator factor of every input.
    #[serde(default = "default_nf_state")]
    pub nf_state: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Largest tolerated `|F(steps) − F(2·steps)|`.
    #[serde(default = "default_convergence_tol")]
    pub convergence_tol: f64,
    /// Seed of the random SU(2) batch used by verification runs.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let config = |msg: String| Err(Error::Config(msg));
        if self.g_values.is_empty() {
            return config("g_values is empty".into());
        }
        if self.g_values.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return config("g_values must be finite and non-negative".into());
        }
        if self.g_values.windows(2).any(|w| w[1] <= w[0]) {
            return config("g_values must be strictly increasing".into());
        }
        if self.nbar_values.is_empty() || self.nbar_values.iter().any(|n| !n.is_finite() || *n < 0.0) {
            return config("nbar_values must be a non-empty list of finite non-negative numbers".into());
        }
        if !(self.gamma_ratio.is_finite() && self.gamma_ratio >= 0.0) {
            return config(format!("gamma_ratio {} must be finite and non-negative", self.gamma_ratio));
        }
        if !(1..=3).contains(&self.nf_state) {
            return config(format!("nf_state {} outside 1..=3", self.nf_state));
        }
        if self.steps < MIN_STEPS {
            return config(format!("steps {} below the minimum of {MIN_STEPS}", self.steps));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol > 0.0) {
            return config("convergence_tol must be positive".into());
        }
        self.pulse.check_pi_area().map_err(|e| Error::Config(e.to_string()))?;
        self.couplings()?;
        Ok(())
    }

    /// Couplings of the single π pulse realizing the configured gate.
    pub fn couplings(&self) -> Result<LambdaCouplings> {
        reflection_couplings(&self.gate)
    }

    pub fn noise(&self, g: f64, nbar: f64) -> NoiseParams {
        NoiseParams { g, gamma_phi: self.gamma_ratio, gamma: self.gamma_ratio, nbar }
    }
}

/// A single holonomic loop realizes `n·σ`; accepts a named gate of that form
/// or `axis:θ,φ`.
pub fn reflection_couplings(gate: &str) -> Result<LambdaCouplings> {
    if let Some(rest) = gate.strip_prefix("axis:") {
        let angles: Vec<f64> = rest
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("bad axis '{rest}': {e}")))?;
        if angles.len() != 2 {
            return Err(Error::Config(format!("axis needs θ,φ, got '{rest}'")));
        }
        return Ok(LambdaCouplings::from_unit_vector(unit_vector(angles[0], angles[1])));
    }
    let target = named_gate(gate).ok_or_else(|| Error::Config(format!("unknown gate '{gate}'")))?;
    let n = [pauli::x(), pauli::y(), pauli::z()].map(|s| trace(&(s * &target)).re / 2.0);
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if (norm - 1.0).abs() > 1e-12 || trace(&target).norm() > 1e-12 {
        return Err(Error::Config(format!("gate '{gate}' is not of the form n·σ; it needs two pulses")));
    }
    Ok(LambdaCouplings::from_unit_vector(n))
}

/// The six axial Bloch states `|1⟩, |2⟩, (|1⟩±|2⟩)/√2, (|1⟩±i|2⟩)/√2` of the
/// noiseless qubit, as 3-dim NS vectors.
pub fn axial_ns_states() -> [CVector; 6] {
    let s = 0.5f64.sqrt();
    let ns = |a: (f64, f64), b: (f64, f64)| CVector::from_vec(vec![c(a.0, a.1), c(b.0, b.1), c(0.0, 0.0)]);
    [
        ns((1.0, 0.0), (0.0, 0.0)),
        ns((0.0, 0.0), (1.0, 0.0)),
        ns((s, 0.0), (s, 0.0)),
        ns((s, 0.0), (-s, 0.0)),
        ns((s, 0.0), (0.0, s)),
        ns((s, 0.0), (0.0, -s)),
    ]
}

/// Axial states embedded in the register with NF factor `|nf⟩₄`.
pub fn axial_input_states(basis: &CodeBasis, nf: usize) -> [CVector; 6] {
    let nf_ket = basis_ket(CodeBasis::NF_DIM, nf - 1);
    axial_ns_states().map(|ns| basis.embed(&ns, &nf_ket))
}

/// One `(g, n̄)` point of the sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityRow {
    pub g: f64,
    pub nbar: f64,
    pub f_mean: f64,
    pub f_per_state: [f64; 6],
    /// Mean weight outside `span{|1⟩, |2⟩}` of the NS after the gate.
    pub leakage_mean: f64,
    /// Worst integrator soundness over the six runs (not written to CSV).
    pub diagnostics: StateDiagnostics,
    /// Largest `|F(steps) − F(2·steps)|` over the six runs (not written to CSV).
    pub halving_delta: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FidelityCurve {
    pub rows: Vec<FidelityRow>,
}

pub const CSV_HEADER: [&str; 10] = [
    "g", "nbar", "F_mean", "F_state1", "F_state2", "F_state3", "F_state4", "F_state5", "F_state6", "leakage_mean",
];

/// Twelve significant digits.
fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

impl FidelityCurve {
    /// `(g, F_mean)` for one value of n̄, in sweep order.
    pub fn series(&self, nbar: f64) -> Vec<(f64, f64)> {
        self.rows.iter().filter(|r| r.nbar == nbar).map(|r| (r.g, r.f_mean)).collect()
    }

    pub fn nbar_values(&self) -> Vec<f64> {
        let mut values: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !values.contains(&r.nbar) {
                values.push(r.nbar);
            }
        }
        values
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(CSV_HEADER)?;
        for r in &self.rows {
            let mut record = vec![fmt12(r.g), fmt12(r.nbar), fmt12(r.f_mean)];
            record.extend(r.f_per_state.iter().map(|&f| fmt12(f)));
            record.push(fmt12(r.leakage_mean));
            out.write_record(&record)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the CSV columns back; diagnostics are not part of the file.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut input = csv::Reader::from_reader(reader);
        let header: Vec<String> = input.headers()?.iter().map(str::to_owned).collect();
        if header != CSV_HEADER {
            return Err(Error::Config(format!("unexpected CSV header {header:?}")));
        }
        let mut rows = Vec::new();
        for record in input.records() {
            let record = record?;
            let values: Vec<f64> = record
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("bad CSV number: {e}")))?;
            let mut f_per_state = [0.0; 6];
            f_per_state.copy_from_slice(&values[3..9]);
            rows.push(FidelityRow {
                g: values[0],
                nbar: values[1],
                f_mean: values[2],
                f_per_state,
                leakage_mean: values[9],
                diagnostics: StateDiagnostics::default(),
                halving_delta: 0.0,
            });
        }
        Ok(Self { rows })
    }
}

struct InputRun {
    fidelity: f64,
    leakage: f64,
    diagnostics: StateDiagnostics,
    halving_delta: f64,
}

fn run_input(
    generator: &Lindbladian,
    rho0: &CMatrix,
    reference: &DensityMatrix,
    basis: &CodeBasis,
    steps: usize,
    tolerance: f64,
) -> Result<InputRun> {
    let fidelity_at = |n: usize| -> Result<(f64, DensityMatrix, DensityMatrix)> {
        let rho = generator.integrate(rho0, n)?;
        let ns = ns_reduce(&rho, basis)?;
        let fidelity = bures_fidelity(reference, &ns).map_err(|e| match e {
            Error::NotPositive { min_eigenvalue } => Error::Convergence(format!(
                "integrated state has eigenvalue {min_eigenvalue:.3e} after {n} steps; increase steps"
            )),
            other => other,
        })?;
        Ok((fidelity, rho, ns))
    };
    let (fidelity, rho, ns) = fidelity_at(steps)?;
    let (fine, _, _) = fidelity_at(2 * steps)?;
    let halving_delta = (fidelity - fine).abs();
    if halving_delta > tolerance {
        return Err(Error::Convergence(format!(
            "|F({steps}) − F({})| = {halving_delta:.3e} exceeds {tolerance:.1e}",
            2 * steps
        )));
    }
    let logical_weight = ns.matrix()[(0, 0)].re + ns.matrix()[(1, 1)].re;
    Ok(InputRun { fidelity, leakage: 1.0 - logical_weight, diagnostics: StateDiagnostics::of(&rho), halving_delta })
}

/// NS states reached under collective (`g = 0`) noise: the ideal references.
fn ideal_references(cfg: &ExperimentConfig, h0: &CMatrix, basis: &CodeBasis, nbar: f64) -> Result<Vec<DensityMatrix>> {
    let generator = Lindbladian::new(h0, &cfg.pulse, &cfg.noise(0.0, nbar))?;
    axial_input_states(basis, cfg.nf_state)
        .iter()
        .map(|psi| {
            let rho = generator.integrate(&crate::linalg::projector(psi), cfg.steps)?;
            ns_reduce(&rho, basis)
        })
        .collect()
}

/// Runs the fidelity sweep. Points are evaluated in parallel and returned
/// ordered by `(n̄, g)` as listed in the config.
pub fn gate_fidelity_experiment(cfg: &ExperimentConfig) -> Result<FidelityCurve> {
    cfg.validate()?;
    let basis = four_qubit_code_basis();
    let h0 = one_qubit_hamiltonian(&cfg.couplings()?);
    let inputs: Vec<CMatrix> = axial_input_states(&basis, cfg.nf_state).iter().map(crate::linalg::projector).collect();

    let references = cfg
        .nbar_values
        .par_iter()
        .map(|&nbar| ideal_references(cfg, &h0, &basis, nbar))
        .collect::<Result<Vec<_>>>()?;

    let points: Vec<(usize, f64)> = (0..cfg.nbar_values.len())
        .flat_map(|k| cfg.g_values.iter().map(move |&g| (k, g)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(k, g)| -> Result<FidelityRow> {
            let nbar = cfg.nbar_values[k];
            let generator = Lindbladian::new(&h0, &cfg.pulse, &cfg.noise(g, nbar))?;
            let runs = inputs
                .iter()
                .zip(&references[k])
                .map(|(rho0, reference)| run_input(&generator, rho0, reference, &basis, cfg.steps, cfg.convergence_tol))
                .collect::<Result<Vec<_>>>()?;
            let mut f_per_state = [0.0; 6];
            for (slot, run) in f_per_state.iter_mut().zip(&runs) {
                *slot = run.fidelity;
            }
            Ok(FidelityRow {
                g,
                nbar,
                f_mean: f_per_state.iter().sum::<f64>() / 6.0,
                f_per_state,
                leakage_mean: runs.iter().map(|r| r.leakage).sum::<f64>() / 6.0,
                diagnostics: runs.iter().map(|r| r.diagnostics).reduce(StateDiagnostics::merge).expect("six runs"),
                halving_delta: runs.iter().map(|r| r.halving_delta).fold(0.0, f64::max),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelityCurve { rows })
}

/// Least-squares fit of `log₁₀(1 − F)` against `log₁₀ g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

pub const DEFAULT_SLOPE_WINDOW: (f64, f64) = (0.003_162_277_660_168_379_5, 0.1);

/// Fits the small-`g` exponent `a` in `F ≈ 1 − c·g^a` over `lo ≤ g ≤ hi`.
/// Needs at least five points with `F < 1 − 1e−9`.
pub fn fit_small_g_slope(series: &[(f64, f64)], window: (f64, f64)) -> Result<SlopeFit> {
    let (lo, hi) = window;
    let in_window: Vec<(f64, f64)> = series.iter().copied().filter(|&(g, _)| g > 0.0 && g >= lo && g <= hi).collect();
    let usable: Vec<(f64, f64)> = in_window
        .iter()
        .filter(|&&(_, f)| f < 1.0 - 1e-9)
        .map(|&(g, f)| (g.log10(), (1.0 - f).log10()))
        .collect();
    if usable.len() < 5 {
        let plateau = in_window.len() - usable.len();
        return Err(Error::InvalidArgument(format!(
            "slope fit needs 5 points with F < 1 − 1e−9 in [{lo}, {hi}]; found {} ({plateau} on the F = 1 plateau)",
            usable.len()
        )));
    }
    let n = usable.len() as f64;
    let mean_x = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = usable.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let sxx: f64 = usable.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(SlopeFit { slope, intercept: mean_y - slope * mean_x, points: usable.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.g_values.len(), 30);
        assert!((cfg.g_values[0] - 1e-3).abs() < 1e-18 && (cfg.g_values[29] - 1.0).abs() < 1e-15);
        assert_eq!(cfg.steps, 2000);
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_values() {
        assert!(matches!(ExperimentConfig::from_json(r#"{"bogus": 1}"#), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_json(r#"{"g_values": [0.1, 0.1]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"nf_state": 4}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"gate": "t"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"steps": 10}"#).is_err());
        let cfg = ExperimentConfig::from_json(r#"{"g_values": [0.0, 0.5], "gate": "axis:1.0,2.0"}"#).unwrap();
        assert_eq!(cfg.g_values, vec![0.0, 0.5]);
    }

    #[test]
    fn pauli_z_needs_theta_zero() {
        let cpl = reflection_couplings("pauli-z").unwrap();
        assert!(cpl.j1.abs() < 1e-15 && cpl.j2.abs() < 1e-15 && (cpl.j4 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn axial_states_geometry() {
        let basis = four_qubit_code_basis();
        let states = axial_input_states(&basis, 1);
        assert!((&states[0] - basis.vector(1, 1)).norm() < 1e-15);
        let projector = basis.projector();
        for s in &states {
            assert!((s.norm() - 1.0).abs() < 1e-14);
            assert!((&projector * s - s).norm() < 1e-14);
        }
        let overlap = states[0].dotc(&states[2]).norm_sqr();
        assert!((overlap - 0.5).abs() < 1e-14);
        assert!(states[2].dotc(&states[3]).norm() < 1e-15);
        assert!(states[4].dotc(&states[5]).norm() < 1e-15);
    }

    #[test]
    fn slope_of_exact_power_laws() {
        let gs = logspace(-3.0, 0.0, 30);
        let quadratic: Vec<_> = gs.iter().map(|&g| (g, 1.0 - g * g)).collect();
        let fit = fit_small_g_slope(&quadratic, DEFAULT_SLOPE_WINDOW).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-6, "{}", fit.slope);
        let linear: Vec<_> = gs.iter().map(|&g| (g, 1.0 - g)).collect();
        let fit = fit_small_g_slope(&linear, DEFAULT_SLOPE_WINDOW).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-6);
    }

    #[test]
    fn slope_rejects_plateau() {
        let gs = logspace(-3.0, 0.0, 30);
        let flat: Vec<_> = gs.iter().map(|&g| (g, 1.0)).collect();
        assert!(fit_small_g_slope(&flat, DEFAULT_SLOPE_WINDOW).is_err());
    }

    #[test]
    fn csv_round_trip_keeps_columns() {
        let row = FidelityRow {
            g: 0.125,
            nbar: 1.0,
            f_mean: 0.987654321012345,
            f_per_state: [0.9, 0.91, 0.92, 0.93, 0.94, 0.95],
            leakage_mean: 1e-3,
            diagnostics: StateDiagnostics::default(),
            halving_delta: 0.0,
        };
        let curve = FidelityCurve { rows: vec![row] };
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("g,nbar,F_mean,F_state1,F_state2,F_state3,F_state4,F_state5,F_state6,leakage_mean\n"));
        assert!(text.contains("9.87654321012e-1"));
        let back = FidelityCurve::read_csv(buf.as_slice()).unwrap();
        assert!((back.rows[0].f_mean - 0.987654321012).abs() < 1e-12);
    }

    #[test]
    fn small_sweep_behaves() {
        let cfg = ExperimentConfig {
            g_values: vec![0.0, 0.1, 0.3],
            nbar_values: vec![0.0],
            ..ExperimentConfig::default()
        };
        let curve = gate_fidelity_experiment(&cfg).unwrap();
        let f: Vec<f64> = curve.rows.iter().map(|r| r.f_mean).collect();
        assert!((f[0] - 1.0).abs() < 1e-6);
        assert!(f[1] < f[0] && f[2] < f[1]);
        for r in &curve.rows {
            let mean = r.f_per_state.iter().sum::<f64>() / 6.0;
            assert!((mean - r.f_mean).abs() < 1e-15);
        }
    }
}
