//! Every structural check of the library, gathered into one machine-readable
//! report.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::collective::{decompose_total_spin, four_qubit_code_basis, multiplicity, ns_structure, CodeBasis, CollectiveErrorOps};
use crate::error::Result;
use crate::experiment::{gate_fidelity_experiment, ExperimentConfig};
use crate::holonomy::{
    dynamical_phase_along_path, evolve_pulse, evolve_pulse_sliced, extract_gate, lambda_form, logical_qubit_basis,
    one_qubit_hamiltonian, phase_invariant_distance, random_su2_targets, realize_su2, two_qubit_report, LambdaCouplings,
    PulseSpec,
};
use crate::linalg::{max_abs_diff, pauli, trace, STRUCTURAL_TOL};
use crate::permutation::{gellmann_realization, resolve_cycle_convention, CycleConvention};

/// One named check: passes when `value ≤ tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    fn measured(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), passed: value <= tolerance, value, tolerance, detail: None }
    }

    fn errored(name: &str, tolerance: f64, error: impl std::fmt::Display) -> Self {
        Self { name: name.into(), passed: false, value: f64::NAN, tolerance, detail: Some(error.to_string()) }
    }

    fn with_detail(mut self, detail: String) -> Self {
        self.detail = Some(detail);
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub cycle_convention: String,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Clone, Debug)]
pub struct BatteryOptions {
    pub seed: u64,
    pub su2_targets: usize,
    /// Points per axis of the `(θ, φ)` gate grid.
    pub grid: usize,
    pub transport_samples: usize,
    pub protection: ExperimentConfig,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self::from_config(&ExperimentConfig::default())
    }
}

impl BatteryOptions {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            seed: cfg.seed,
            su2_targets: 100,
            grid: 12,
            transport_samples: 50,
            protection: ExperimentConfig { g_values: vec![0.0], nbar_values: vec![0.0, 1.0], ..cfg.clone() },
        }
    }
}

fn record(checks: &mut Vec<CheckResult>, name: &str, tolerance: f64, value: Result<f64>) {
    checks.push(match value {
        Ok(v) => CheckResult::measured(name, v, tolerance),
        Err(e) => CheckResult::errored(name, tolerance, e),
    });
}

/// `(θ, φ)` grid with `θ` spanning `[0, π]` inclusive and `φ` spanning `[0, 2π)`.
pub fn axis_grid(points: usize) -> Vec<(f64, f64)> {
    let theta = |k: usize| if points > 1 { PI * k as f64 / (points - 1) as f64 } else { 0.0 };
    (0..points)
        .flat_map(|k| (0..points).map(move |l| (theta(k), 2.0 * PI * l as f64 / points as f64)))
        .collect()
}

/// Worst-case figures of merit of the one-qubit gate over an axis grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct GridSummary {
    pub max_distance: f64,
    pub max_trace: f64,
    pub max_leakage: f64,
    pub max_transport: f64,
}

pub fn one_qubit_grid(basis: &CodeBasis, points: usize, transport_samples: usize) -> Result<GridSummary> {
    let pulse = PulseSpec::square(1.0);
    let logical = logical_qubit_basis(basis, 1);
    let mut summary = GridSummary::default();
    for (theta, phi) in axis_grid(points) {
        let couplings = LambdaCouplings::from_axis(theta, phi);
        let h = one_qubit_hamiltonian(&couplings);
        let target = pauli::dot(couplings.axis_vector());
        let gate = extract_gate(&evolve_pulse(&h, &pulse)?, &logical, &target)?;
        summary.max_distance = summary.max_distance.max(gate.target_distance);
        summary.max_trace = summary.max_trace.max(trace(&gate.logical_block).norm());
        summary.max_leakage = summary.max_leakage.max(gate.leakage);
        let transport = dynamical_phase_along_path(&h, &pulse, &logical, transport_samples)?;
        summary.max_transport = summary.max_transport.max(transport);
    }
    Ok(summary)
}

/// Largest phase-invariant distance between the logical gates produced by a
/// square pulse and a sliced truncated-gaussian pulse of equal area.
pub fn pulse_shape_deviation(basis: &CodeBasis, axes: &[(f64, f64)]) -> Result<f64> {
    let square = PulseSpec::square(1.0);
    let gaussian = PulseSpec::truncated_gaussian(2.0 * PI);
    let logical = logical_qubit_basis(basis, 1);
    let mut worst = 0.0f64;
    for &(theta, phi) in axes {
        let couplings = LambdaCouplings::from_axis(theta, phi);
        let h = one_qubit_hamiltonian(&couplings);
        let target = pauli::dot(couplings.axis_vector());
        let a = extract_gate(&evolve_pulse(&h, &square)?, &logical, &target)?;
        let b = extract_gate(&evolve_pulse_sliced(&h, &gaussian, 256)?, &logical, &target)?;
        worst = worst.max(phase_invariant_distance(&a.logical_block, &b.logical_block));
    }
    Ok(worst)
}

/// Largest synthesis distance over `count` seeded Haar-random targets.
pub fn su2_batch(basis: &CodeBasis, count: usize, seed: u64) -> Result<f64> {
    let pulse = PulseSpec::square(1.0);
    let mut worst = 0.0f64;
    for target in random_su2_targets(count, seed) {
        worst = worst.max(realize_su2(&target, &pulse, basis, 1)?.gate.target_distance);
    }
    Ok(worst)
}

fn multiplicity_mismatches() -> Result<(f64, String)> {
    let mut mismatches = 0;
    let mut found = Vec::new();
    for n in [2, 4, 6] {
        for sector in decompose_total_spin(n)? {
            let formula = multiplicity(n, sector.spin)?;
            if formula != sector.ns_dim as u64 {
                mismatches += 1;
            }
            found.push(format!("N={n} J={}: {}", sector.spin, sector.ns_dim));
        }
    }
    Ok((mismatches as f64, found.join(", ")))
}

fn random_couplings(rng: &mut ChaCha8Rng) -> Result<LambdaCouplings> {
    LambdaCouplings::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Runs every check against the canonical code basis.
pub fn run_verification_battery() -> VerificationReport {
    run_verification_battery_with(&four_qubit_code_basis(), &BatteryOptions::default())
}

/// Runs every check against `basis`. The collective-protection check always
/// simulates the canonical code.
pub fn run_verification_battery_with(basis: &CodeBasis, options: &BatteryOptions) -> VerificationReport {
    let mut checks = Vec::new();
    let tol = STRUCTURAL_TOL;

    match multiplicity_mismatches() {
        Ok((value, detail)) => checks.push(CheckResult::measured("multiplicity_formula", value, 0.0).with_detail(detail)),
        Err(e) => checks.push(CheckResult::errored("multiplicity_formula", 0.0, e)),
    }

    checks.push(CheckResult::measured("code_basis_orthonormality", basis.orthonormality_residual(), tol));

    let structure = CollectiveErrorOps::new(4).map(|ops| ns_structure(basis, &ops));
    record(&mut checks, "error_factorization", tol, structure.map(|r| r.max_residual()));

    let resolution = resolve_cycle_convention(basis);
    let (convention, convention_name) = match &resolution {
        Ok(r) => (r.chosen, r.description.clone()),
        Err(_) => (CycleConvention::LeftToRight, "unresolved".to_string()),
    };
    checks.push(match &resolution {
        Ok(r) => CheckResult::measured("cycle_convention", 0.0, 0.0).with_detail(r.description.clone()),
        Err(e) => CheckResult::errored("cycle_convention", 0.0, e),
    });
    for i in 1..=8 {
        let name = format!("gellmann_{i}");
        checks.push(match gellmann_realization(i, basis, convention) {
            Ok(r) => CheckResult::measured(&name, r.residual, tol)
                .with_detail(format!("residual with opposite overall sign {:.3e}", r.sign_flipped_residual)),
            Err(e) => CheckResult::errored(&name, tol, e),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let restriction = (0..16).try_fold(0.0f64, |worst, _| {
        let couplings = random_couplings(&mut rng)?;
        let h = one_qubit_hamiltonian(&couplings);
        Ok(worst.max(max_abs_diff(&basis.restrict(&h), &lambda_form(&couplings))))
    });
    record(&mut checks, "one_qubit_restriction", tol, restriction);

    match one_qubit_grid(basis, options.grid, options.transport_samples) {
        Ok(s) => {
            checks.push(CheckResult::measured("parallel_transport", s.max_transport, tol));
            checks.push(CheckResult::measured("gate_grid_distance", s.max_distance, 1e-8));
            checks.push(CheckResult::measured("gate_grid_trace", s.max_trace, 1e-8));
            checks.push(CheckResult::measured("gate_grid_leakage", s.max_leakage, 1e-10));
        }
        Err(e) => {
            for (name, t) in [
                ("parallel_transport", tol),
                ("gate_grid_distance", 1e-8),
                ("gate_grid_trace", 1e-8),
                ("gate_grid_leakage", 1e-10),
            ] {
                checks.push(CheckResult::errored(name, t, &e));
            }
        }
    }

    let shape_axes: Vec<(f64, f64)> = (0..4).map(|_| (rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI))).collect();
    record(&mut checks, "pulse_shape_independence", 1e-10, pulse_shape_deviation(basis, &shape_axes));

    record(&mut checks, "su2_synthesis", 1e-7, su2_batch(basis, options.su2_targets, options.seed));

    match two_qubit_report(basis) {
        Ok(r) => {
            checks.push(CheckResult::measured("two_qubit_restriction", r.restriction_residual, tol));
            checks.push(CheckResult::measured("two_qubit_commutator", r.commutator_norm, tol));
            checks.push(CheckResult::measured("two_qubit_h1_identity", r.h1_identity_residual, 1e-10));
            checks.push(
                CheckResult::measured("cnot_extraction", r.cnot_residual.max(r.gate.target_distance), 1e-8)
                    .with_detail(format!("leakage {:.3e}, factorization {:.3e}", r.gate.leakage, r.factorization_residual)),
            );
        }
        Err(e) => {
            for (name, t) in [
                ("two_qubit_restriction", tol),
                ("two_qubit_commutator", tol),
                ("two_qubit_h1_identity", 1e-10),
                ("cnot_extraction", 1e-8),
            ] {
                checks.push(CheckResult::errored(name, t, &e));
            }
        }
    }

    let protection = gate_fidelity_experiment(&options.protection)
        .map(|curve| curve.rows.iter().map(|r| (1.0 - r.f_mean).abs()).fold(0.0, f64::max));
    record(&mut checks, "collective_protection", 1e-6, protection);

    VerificationReport { passed: checks.iter().all(|c| c.passed), cycle_convention: convention_name, checks }
}
