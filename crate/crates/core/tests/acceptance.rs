//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Two criteria cannot be met by a faithful implementation and are expected to
//! print FAIL: the sixth Gell-Mann identity carries the wrong overall sign as
//! stated, and the e^{−pg} noise model makes F(g) turn back up near g ≈ 0.5.
//! Both are still measured at their stated tolerances. The run fails if any
//! other criterion fails, or if an expected failure starts passing.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nshqc::battery::{axis_grid, one_qubit_grid, pulse_shape_deviation, su2_batch};
use nshqc::collective::{decompose_total_spin, four_qubit_code_basis, multiplicity, ns_structure, CollectiveErrorOps};
use nshqc::experiment::{
    axial_input_states, fit_small_g_slope, gate_fidelity_experiment, ExperimentConfig, FidelityCurve,
    DEFAULT_SLOPE_WINDOW,
};
use nshqc::holonomy::{one_qubit_hamiltonian, two_qubit_report};
use nshqc::linalg::{identity, projector};
use nshqc::noise::{convergence_order, Lindbladian, StateDiagnostics};
use nshqc::permutation::{gellmann_realization, resolve_cycle_convention};

const EXPECTED_FAILURES: [u32; 2] = [3, 9];

struct Outcome {
    passed: bool,
    summary: String,
}

fn outcome(passed: bool, summary: String) -> Outcome {
    Outcome { passed, summary }
}

fn within(elapsed: Duration, budget_secs: f64) -> bool {
    elapsed.as_secs_f64() < budget_secs
}

fn multiplicity_formula() -> Outcome {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for n in [2usize, 4, 6] {
        let sectors = decompose_total_spin(n).expect("decomposition");
        let spins: Vec<usize> = sectors.iter().map(|s| s.spin).collect();
        if spins != (0..=n / 2).collect::<Vec<_>>() {
            mismatches.push(format!("N={n} sectors {spins:?}"));
        }
        for s in &sectors {
            let formula = multiplicity(n, s.spin).expect("multiplicity");
            if formula != s.ns_dim as u64 {
                mismatches.push(format!("N={n} J={}: formula {formula}, brute force {}", s.spin, s.ns_dim));
            }
        }
    }
    let four: Vec<u64> = (0..=2).map(|j| multiplicity(4, j).unwrap()).collect();
    let elapsed = start.elapsed();
    let passed = mismatches.is_empty() && four == [2, 3, 1] && within(elapsed, 5.0);
    outcome(passed, format!("N=4 multiplicities {four:?}, mismatches {mismatches:?}, {elapsed:.2?} (< 5 s)"))
}

fn code_basis() -> Outcome {
    let start = Instant::now();
    let basis = four_qubit_code_basis();
    let gram = basis.isometry().adjoint() * basis.isometry();
    let worst_inner = (&gram - identity(9)).iter().map(|x| x.norm()).fold(0.0, f64::max);
    let report = ns_structure(&basis, &CollectiveErrorOps::new(4).unwrap());
    let elapsed = start.elapsed();
    let passed = worst_inner <= 1e-12 && report.max_residual() <= 1e-12 && within(elapsed, 1.0);
    outcome(
        passed,
        format!(
            "max |<a|b> - delta| {worst_inner:.2e}, factorization residual {:.2e} (tol 1e-12), {elapsed:.2?} (< 1 s)",
            report.max_residual()
        ),
    )
}

fn gellmann_identities() -> Outcome {
    let start = Instant::now();
    let basis = four_qubit_code_basis();
    let resolution = match resolve_cycle_convention(&basis) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("cycle convention unresolved: {e}")),
    };
    let realizations: Vec<_> = (1..=8).map(|i| gellmann_realization(i, &basis, resolution.chosen).unwrap()).collect();
    let elapsed = start.elapsed();
    let failing: Vec<String> = realizations
        .iter()
        .filter(|r| r.residual > 1e-12)
        .map(|r| format!("lambda{} residual {:.3e} (opposite sign {:.1e})", r.index, r.residual, r.sign_flipped_residual))
        .collect();
    let worst_passing = realizations.iter().filter(|r| r.residual <= 1e-12).map(|r| r.residual).fold(0.0, f64::max);
    let passed = failing.is_empty() && within(elapsed, 1.0);
    outcome(
        passed,
        format!(
            "convention '{}'; {} of 8 hold (worst {worst_passing:.1e}, tol 1e-12); failing: {failing:?}; {elapsed:.2?} (< 1 s)",
            resolution.description,
            8 - failing.len()
        ),
    )
}

fn one_qubit_gate() -> Outcome {
    let start = Instant::now();
    let s = one_qubit_grid(&four_qubit_code_basis(), 12, 50).expect("grid");
    let elapsed = start.elapsed();
    let passed = s.max_distance <= 1e-8
        && s.max_trace <= 1e-8
        && s.max_leakage <= 1e-10
        && s.max_transport <= 1e-12
        && within(elapsed, 30.0);
    outcome(
        passed,
        format!(
            "12x12 grid: distance {:.1e}, |trace| {:.1e} (tol 1e-8), leakage {:.1e} (tol 1e-10), transport {:.1e} (tol 1e-12), {elapsed:.2?} (< 30 s)",
            s.max_distance, s.max_trace, s.max_leakage, s.max_transport
        ),
    )
}

fn pulse_shape_independence() -> Outcome {
    let deviation = pulse_shape_deviation(&four_qubit_code_basis(), &axis_grid(12)).expect("pulses");
    outcome(deviation <= 1e-10, format!("square vs truncated gaussian over 144 axes: {deviation:.2e} (tol 1e-10)"))
}

fn two_qubit_gate() -> Outcome {
    let start = Instant::now();
    let r = two_qubit_report(&four_qubit_code_basis()).expect("two-qubit report");
    let elapsed = start.elapsed();
    let cnot = r.cnot_residual.max(r.gate.target_distance);
    let passed = r.commutator_norm <= 1e-12
        && r.h1_identity_residual <= 1e-10
        && cnot <= 1e-8
        && r.restriction_residual <= 1e-12
        && within(elapsed, 60.0);
    outcome(
        passed,
        format!(
            "[H0,H1] {:.1e} (tol 1e-12), exp(-i pi H1) - I {:.1e} (tol 1e-10), CNOT {cnot:.1e} (tol 1e-8), restriction {:.1e} (tol 1e-12), {elapsed:.2?} (< 60 s)",
            r.commutator_norm, r.h1_identity_residual, r.restriction_residual
        ),
    )
}

fn su2_synthesis() -> Outcome {
    let cfg = ExperimentConfig::default();
    let worst = su2_batch(&four_qubit_code_basis(), 100, cfg.seed).expect("synthesis");
    outcome(worst <= 1e-7, format!("100 targets (seed {}): worst distance {worst:.2e} (tol 1e-7)", cfg.seed))
}

fn collective_protection() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig { g_values: vec![0.0], nbar_values: vec![0.0, 1.0], ..ExperimentConfig::default() };
    let curve = gate_fidelity_experiment(&cfg).expect("protection sweep");
    let elapsed = start.elapsed();
    let worst = curve.rows.iter().map(|r| (1.0 - r.f_mean).abs()).fold(0.0, f64::max);
    outcome(
        worst <= 1e-6 && within(elapsed, 30.0),
        format!("g=0, nbar in {{0,1}}: max |1 - F_mean| {worst:.2e} (tol 1e-6), {elapsed:.2?} (< 30 s)"),
    )
}

fn strictly_decreasing_violation(series: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    series.windows(2).find(|w| w[1].1 >= w[0].1).map(|w| (w[1].0, w[0].1, w[1].1))
}

fn fidelity_curve(curve: &FidelityCurve, elapsed: Duration) -> Outcome {
    let mut passed = within(elapsed, 600.0);
    let mut parts = Vec::new();
    for nbar in [0.0, 1.0] {
        let series = curve.series(nbar);
        match strictly_decreasing_violation(&series) {
            None => parts.push(format!("nbar={nbar}: strictly decreasing")),
            Some((g, before, after)) => {
                passed = false;
                parts.push(format!("nbar={nbar}: F rises at g={g:.4} ({before:.6} -> {after:.6})"));
            }
        }
        match fit_small_g_slope(&series, DEFAULT_SLOPE_WINDOW) {
            Ok(fit) => {
                passed &= (1.7..=2.3).contains(&fit.slope);
                parts.push(format!("slope {:.3} in [1.7, 2.3]", fit.slope));
            }
            Err(e) => {
                passed = false;
                parts.push(format!("slope fit failed: {e}"));
            }
        }
    }
    let cold = curve.series(0.0);
    let warm = curve.series(1.0);
    let ordered = cold.len() == warm.len() && cold.iter().zip(&warm).all(|(c, w)| w.1 <= c.1);
    passed &= ordered;
    parts.push(format!("F(nbar=1) <= F(nbar=0) pointwise: {ordered}"));
    parts.push(format!("{elapsed:.1?} single-threaded (< 600 s)"));
    outcome(passed, parts.join("; "))
}

fn integrator_soundness(curve: &FidelityCurve) -> Outcome {
    let worst = curve.rows.iter().map(|r| r.diagnostics).reduce(StateDiagnostics::merge).expect("rows");
    let cfg = ExperimentConfig::default();
    let basis = four_qubit_code_basis();
    let h0 = one_qubit_hamiltonian(&cfg.couplings().unwrap());
    let generator = Lindbladian::new(&h0, &cfg.pulse, &cfg.noise(0.3, 1.0)).unwrap();
    let rho0 = projector(&axial_input_states(&basis, cfg.nf_state)[2]);
    let order = convergence_order(&generator, &rho0, 100).expect("order check");
    // With a quarter-step reference a fourth-order method gives
    // (1 − 4⁻⁴)/(2⁻⁴ − 4⁻⁴) = 17.
    let ratio_ok = (14.0..=20.0).contains(&order.ratio());
    outcome(
        worst.sound() && ratio_ok,
        format!(
            "trace drift {:.1e} (tol 1e-7), hermiticity {:.1e} (tol 1e-9), min eigenvalue {:.1e} (>= -1e-6); halving ratio {:.2} at g=0.3, nbar=1, 100 steps (order {:.2})",
            worst.trace_drift,
            worst.hermiticity_error,
            worst.min_eigenvalue,
            order.ratio(),
            order.order()
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut run = |id: u32, name: &'static str, f: &dyn Fn() -> Outcome| {
        let o = f();
        println!("{} [{id}] {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.summary);
        results.push((id, name, o));
    };
    run(1, "multiplicity formula", &multiplicity_formula);
    run(2, "code basis and error factorization", &code_basis);
    run(3, "Gell-Mann permutation identities", &gellmann_identities);
    run(4, "one-qubit holonomic gate grid", &one_qubit_gate);
    run(5, "pulse-shape independence", &pulse_shape_independence);
    run(6, "two-qubit CNOT", &two_qubit_gate);
    run(7, "SU(2) synthesis", &su2_synthesis);
    run(8, "collective protection at g = 0", &collective_protection);

    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("thread pool");
    let start = Instant::now();
    let curve = pool.install(|| gate_fidelity_experiment(&ExperimentConfig::default()));
    let elapsed = start.elapsed();
    match curve {
        Ok(curve) => {
            run(9, "fidelity versus symmetry breaking", &|| fidelity_curve(&curve, elapsed));
            run(10, "integrator soundness", &|| integrator_soundness(&curve));
        }
        Err(e) => {
            run(9, "fidelity versus symmetry breaking", &|| outcome(false, format!("sweep failed: {e}")));
            run(10, "integrator soundness", &|| outcome(false, format!("sweep failed: {e}")));
        }
    }

    let passed = results.iter().filter(|r| r.2.passed).count();
    println!("{passed}/{} criteria pass", results.len());
    let unexpected: Vec<u32> = results
        .iter()
        .filter(|(id, _, o)| o.passed == EXPECTED_FAILURES.contains(id))
        .map(|(id, _, _)| *id)
        .collect();
    if unexpected.is_empty() {
        println!("failures match the documented unattainable criteria {EXPECTED_FAILURES:?}");
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
