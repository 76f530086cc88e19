use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use nshqc::battery::{run_verification_battery_with, BatteryOptions};
use nshqc::collective::four_qubit_code_basis;
use nshqc::experiment::{fit_small_g_slope, gate_fidelity_experiment, ExperimentConfig, FidelityCurve, DEFAULT_SLOPE_WINDOW};
use nshqc::holonomy::{euler_zyz, named_gate, realize_su2};
use nshqc::linalg::CMatrix;
use nshqc::Error;

/// Holonomic gates in the four-qubit noiseless subsystem.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every structural check and print a JSON report.
    Verify {
        /// Experiment config supplying the seed and integrator settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Synthesize a logical SU(2) target from two holonomic loops and simulate it.
    Gate {
        /// Named gate (identity, pauli-x, pauli-y, pauli-z, hadamard, s, t) or `euler:a,b,c` (ZYZ angles).
        #[arg(long)]
        target: String,
        /// Noiseful-factor label of the logical states.
        #[arg(long, default_value_t = 1)]
        nf: usize,
        /// Experiment config supplying the pulse.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Gate fidelity versus the symmetry-breaking parameter, written as CSV.
    Sweep {
        /// JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the small-g exponent of a sweep CSV.
    Slope {
        /// Sweep CSV to read.
        #[arg(long = "in")]
        input: PathBuf,
        /// Window `lo,hi` in g.
        #[arg(long)]
        window: Option<String>,
    },
}

#[derive(Debug)]
enum Failure {
    Verification(String),
    Config(String),
    Convergence(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Config(_) => 2,
            Failure::Convergence(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Config(m) | Failure::Convergence(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::PulseArea { .. } => {
                Failure::Config(e.to_string())
            }
            Error::Convergence(_) => Failure::Convergence(e.to_string()),
            _ => Failure::Verification(e.to_string()),
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig, Failure> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(ExperimentConfig::from_json(&text)?)
}

fn parse_numbers(text: &str, expected: usize, what: &str) -> Result<Vec<f64>, Failure> {
    let values: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Config(format!("bad {what} '{text}': {e}")))?;
    if values.len() != expected || values.iter().any(|v| !v.is_finite()) {
        return Err(Failure::Config(format!("{what} needs {expected} finite comma-separated numbers, got '{text}'")));
    }
    Ok(values)
}

fn parse_target(name: &str) -> Result<CMatrix, Failure> {
    if let Some(angles) = name.strip_prefix("euler:") {
        let v = parse_numbers(angles, 3, "euler angles")?;
        return Ok(euler_zyz(v[0], v[1], v[2]));
    }
    named_gate(name).ok_or_else(|| Failure::Config(format!("unknown gate '{name}'")))
}

fn matrix_json(m: &CMatrix) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|r| Value::Array((0..m.ncols()).map(|c| json!([m[(r, c)].re, m[(r, c)].im])).collect()))
        .collect();
    Value::Array(rows)
}

fn print(value: &Value) {
    // A closed pipe downstream is not an error of ours.
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(value).expect("JSON values serialize"));
}

fn verify(config: Option<&PathBuf>) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let report = run_verification_battery_with(&four_qubit_code_basis(), &BatteryOptions::from_config(&cfg));
    print(&serde_json::to_value(&report).expect("report serializes"));
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        Err(Failure::Verification(format!("failed checks: {}", failed.join(", "))))
    }
}

const GATE_TOL: f64 = 1e-7;
const LEAKAGE_TOL: f64 = 1e-10;

fn gate(target: &str, nf: usize, config: Option<&PathBuf>) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    if !(1..=3).contains(&nf) {
        return Err(Failure::Config(format!("nf {nf} outside 1..=3")));
    }
    let unitary = parse_target(target)?;
    let report = realize_su2(&unitary, &cfg.pulse, &four_qubit_code_basis(), nf)?;
    let passed = report.gate.target_distance <= GATE_TOL && report.gate.leakage <= LEAKAGE_TOL;
    print(&json!({
        "target": target,
        "target_matrix": matrix_json(&unitary),
        "axes": [report.synthesis.n2, report.synthesis.n1],
        "couplings": report.couplings,
        "logical_block": matrix_json(&report.gate.logical_block),
        "distance": report.gate.target_distance,
        "leakage": report.gate.leakage,
        "passed": passed,
    }));
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "gate distance {:.3e}, leakage {:.3e}",
            report.gate.target_distance, report.gate.leakage
        )))
    }
}

fn sweep(config: &PathBuf, out: Option<&PathBuf>) -> Result<(), Failure> {
    let cfg = load_config(Some(config))?;
    let out = out
        .or(cfg.output.as_ref())
        .ok_or_else(|| Failure::Config("no output path: pass --out or set `output`".into()))?;
    let curve = gate_fidelity_experiment(&cfg)?;
    let file = File::create(out).map_err(|e| Failure::Config(format!("{}: {e}", out.display())))?;
    curve.write_csv(BufWriter::new(file))?;

    let unsound: Vec<f64> = curve.rows.iter().filter(|r| !r.diagnostics.sound()).map(|r| r.g).collect();
    print(&json!({
        "output": out,
        "rows": curve.rows.len(),
        "max_halving_delta": curve.rows.iter().map(|r| r.halving_delta).fold(0.0, f64::max),
        "unsound_points": unsound,
    }));
    if unsound.is_empty() {
        Ok(())
    } else {
        Err(Failure::Convergence(format!("integrator diagnostics out of tolerance at g = {unsound:?}")))
    }
}

fn slope(input: &PathBuf, window: Option<&str>) -> Result<(), Failure> {
    let window = match window {
        Some(text) => {
            let v = parse_numbers(text, 2, "window")?;
            if !(v[0] > 0.0 && v[0] < v[1]) {
                return Err(Failure::Config(format!("window needs 0 < lo < hi, got '{text}'")));
            }
            (v[0], v[1])
        }
        None => DEFAULT_SLOPE_WINDOW,
    };
    let file = File::open(input).map_err(|e| Failure::Config(format!("{}: {e}", input.display())))?;
    let curve = FidelityCurve::read_csv(BufReader::new(file))?;
    let mut fits = Vec::new();
    for nbar in curve.nbar_values() {
        let fit = fit_small_g_slope(&curve.series(nbar), window)?;
        fits.push(json!({ "nbar": nbar, "slope": fit.slope, "intercept": fit.intercept, "points": fit.points }));
    }
    print(&json!({ "window": [window.0, window.1], "fits": fits }));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify { config } => verify(config.as_ref()),
        Command::Gate { target, nf, config } => gate(target, *nf, config.as_ref()),
        Command::Sweep { config, out } => sweep(config, out.as_ref()),
        Command::Slope { input, window } => slope(input, window.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}
