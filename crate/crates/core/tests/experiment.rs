use nshqc::experiment::{gate_fidelity_experiment, ExperimentConfig};
use nshqc::Error;

fn config(g_values: Vec<f64>, nbar_values: Vec<f64>) -> ExperimentConfig {
    ExperimentConfig { g_values, nbar_values, ..ExperimentConfig::default() }
}

#[test]
fn sweep_output_is_bit_identical_across_runs() {
    let cfg = config(vec![0.01, 0.2], vec![0.0, 1.0]);
    let csv = || {
        let mut buf = Vec::new();
        gate_fidelity_experiment(&cfg).unwrap().write_csv(&mut buf).unwrap();
        buf
    };
    assert_eq!(csv(), csv());
}

#[test]
fn rows_are_ordered_by_nbar_then_g() {
    let cfg = config(vec![0.05, 0.1], vec![1.0, 0.0]);
    let rows = gate_fidelity_experiment(&cfg).unwrap().rows;
    let keys: Vec<(f64, f64)> = rows.iter().map(|r| (r.nbar, r.g)).collect();
    assert_eq!(keys, vec![(1.0, 0.05), (1.0, 0.1), (0.0, 0.05), (0.0, 0.1)]);
    for r in &rows {
        assert!((0.0..=1.0).contains(&r.f_mean));
        assert!(r.leakage_mean >= 0.0);
        assert!(r.diagnostics.sound());
    }
}

#[test]
fn protection_at_zero_g_does_not_depend_on_the_spectator() {
    let fidelities: Vec<f64> = (1..=3)
        .map(|nf| {
            let cfg = ExperimentConfig { nf_state: nf, ..config(vec![0.0], vec![1.0]) };
            gate_fidelity_experiment(&cfg).unwrap().rows[0].f_mean
        })
        .collect();
    for f in &fidelities {
        assert!((f - 1.0).abs() <= 1e-6, "{fidelities:?}");
        assert!((f - fidelities[0]).abs() <= 1e-8, "{fidelities:?}");
    }
}

#[test]
fn fidelity_regression_and_turnaround() {
    let curve = gate_fidelity_experiment(&config(vec![0.3, 0.5, 1.0], vec![0.0, 1.0])).unwrap();
    let cold = curve.series(0.0);
    let warm = curve.series(1.0);
    assert!((cold[0].1 - 0.973529969136).abs() <= 1e-9, "{cold:?}");
    assert!((warm[0].1 - 0.955453425248).abs() <= 1e-9, "{warm:?}");
    for (c, w) in cold.iter().zip(&warm) {
        assert!(w.1 <= c.1);
    }
    // Every weight e^{−pg} decays, so the noise weakens faster than it loses
    // symmetry past g ≈ 0.5 and the fidelity recovers.
    for series in [&cold, &warm] {
        assert!(series[1].1 < series[0].1);
        assert!(series[2].1 > series[1].1);
    }
}

#[test]
fn coarse_steps_are_reported_as_nonconvergence() {
    let cfg = ExperimentConfig {
        steps: 100,
        gamma_ratio: 3.0,
        ..config(vec![0.5], vec![1.0])
    };
    assert!(matches!(gate_fidelity_experiment(&cfg), Err(Error::Convergence(_))));
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    let cfg = config(vec![0.2, 0.1], vec![0.0]);
    assert!(matches!(gate_fidelity_experiment(&cfg), Err(Error::Config(_))));
    let cfg = ExperimentConfig { gate: "s".into(), ..ExperimentConfig::default() };
    assert!(matches!(gate_fidelity_experiment(&cfg), Err(Error::Config(_))));
}
