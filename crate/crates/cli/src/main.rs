//! `srq` — simulate, quantize and estimate weak sinusoids in Rayleigh
//! noise, and run scan pipelines that locate hidden objects from the
//! estimated amplitude profile.
//!
//! Exit codes: 0 success, 2 usage / invalid arguments, 3 file parse or
//! format errors, 4 numeric failures, 1 other I/O errors.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use srq_core::error::Error;
use srq_core::estimators::{estimate, Method};
use srq_core::noise_model::{fit_scale, norm_a};
use srq_core::scan_pipeline::{
    ingest, manifest_path, run_scan, write_dataset, Provenance, ScanDataset, ScanManifest,
    ScanOverrides,
};
use srq_core::signal_synth::{
    amplitude_to_snr_db, phase_from_seed, snr_db_to_amplitude, synthesize, Phantom, SignalSpec,
};
use srq_core::sr_theory::{
    optimal_threshold, theoretical_mu, threshold_sweep, SnrCurve, SweepConfig,
};

#[derive(Parser)]
#[command(
    name = "srq",
    version,
    about = "Weak-sinusoid amplitude estimation in Rayleigh noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset: a phantom scan or a single series.
    Simulate(SimulateArgs),
    /// Estimate the amplitude of one recorded series.
    Estimate(EstimateArgs),
    /// Emit the theoretical SNR curve and the optimal threshold.
    Theory(TheoryArgs),
    /// Monte Carlo sweep of the quantizer threshold.
    Sweep(SweepArgs),
    /// Run an estimator across a scan dataset and detect objects.
    Scan(ScanArgs),
    /// Fit the Rayleigh scale of a noise record.
    Fitnoise(FitnoiseArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Phantom preset (rod, rod-low, rod-high, flat); omit for one series.
    #[arg(long)]
    phantom: Option<String>,
    /// Normalized amplitude A (single-series mode).
    #[arg(long, conflicts_with = "snr_db")]
    amplitude: Option<f64>,
    /// Input SNR in dB, converted to A = sqrt(2·10^(dB/10)).
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Raw Rayleigh scale: write pure noise with this scale (no sinusoid).
    #[arg(long, conflicts_with_all = ["amplitude", "snr_db", "phantom"])]
    rayleigh_scale: Option<f64>,
    /// Number of scan positions (flat phantom only; rod geometry is fixed).
    #[arg(long)]
    positions: Option<usize>,
    /// Normalized frequency, cycles per sample.
    #[arg(long, default_value_t = 0.1)]
    f0: f64,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Samples per position.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// RNG seed; drawn randomly (and printed) when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (the manifest lands next to it).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// Input dataset CSV (single position).
    #[arg(long)]
    input: PathBuf,
    /// Estimation method.
    #[arg(long)]
    method: String,
    /// Override the manifest frequency (normalized).
    #[arg(long)]
    f0: Option<f64>,
    /// Physical rate in Hz when --f0 is given in Hz.
    #[arg(long)]
    rate_hz: Option<f64>,
    /// Quantizer threshold (defaults to the SNR-optimal value).
    #[arg(long)]
    gamma: Option<f64>,
    /// Relative offset applied to the assumed frequency (0.0005 = 0.05%).
    #[arg(long, default_value_t = 0.0)]
    freq_offset: f64,
    /// Output format: csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long, default_value_t = 0.1)]
    gamma_min: f64,
    #[arg(long, default_value_t = 3.0)]
    gamma_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    gamma_step: f64,
    /// Amplitude at which the curve is evaluated (peak location is
    /// amplitude-free).
    #[arg(long, default_value_t = 0.1)]
    amplitude: f64,
    /// Curve CSV output path; omit to only print the optimum.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, conflicts_with = "snr_db")]
    amplitude: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0.1)]
    f0: f64,
    #[arg(long, default_value_t = 0.2)]
    gamma_min: f64,
    #[arg(long, default_value_t = 3.0)]
    gamma_max: f64,
    #[arg(long, default_value_t = 0.05)]
    gamma_step: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Mean-curve CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-trial argmax list output path (one value per line).
    #[arg(long)]
    argmax_out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    method: String,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    freq_offset: f64,
    /// Profile CSV output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitnoiseArgs {
    /// Input dataset CSV; all positions are pooled.
    #[arg(long)]
    input: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Theory(a) => cmd_theory(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Fitnoise(a) => cmd_fitnoise(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::InvalidArgument(_) | Error::InvalidConfiguration(_) => 2,
                Error::Parse { .. } => 3,
                Error::NumericFailure(_) => 4,
                Error::Io(_) => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    match seed {
        Some(s) => s,
        None => {
            let s: u64 = rand::random();
            println!("seed={s}");
            s
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let seed = resolve_seed(args.seed);
    // raw-noise mode: Rayleigh(s) is the zero-amplitude signal at σ = s·a
    let (amplitude, sigma) = if let Some(s) = args.rayleigh_scale {
        if s <= 0.0 || s.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "rayleigh-scale must be > 0, got {s}"
            )));
        }
        (0.0, s * norm_a())
    } else {
        let amplitude = match (args.amplitude, args.snr_db) {
            (Some(a), _) => a,
            (None, Some(db)) => snr_db_to_amplitude(db),
            (None, None) => 0.0,
        };
        (amplitude, args.sigma)
    };
    let template = SignalSpec {
        amplitude,
        freq: args.f0,
        phase: phase_from_seed(seed),
        sigma,
        n_samples: args.samples,
        seed,
    };

    let (dataset, manifest_amplitude) = match &args.phantom {
        Some(name) => {
            let phantom = match (name.as_str(), args.positions) {
                ("flat", Some(n)) => Phantom::flat_null(n),
                (_, Some(n)) => {
                    let p = Phantom::by_name(name)?;
                    if p.positions.len() != n {
                        return Err(Error::InvalidArgument(format!(
                            "phantom '{name}' has fixed geometry ({} positions)",
                            p.positions.len()
                        )));
                    }
                    p
                }
                (_, None) => Phantom::by_name(name)?,
            };
            (ScanDataset::synthetic(&phantom, &template)?, None)
        }
        None => {
            let series = synthesize(&template)?;
            let dataset = ScanDataset {
                positions: vec![0.0],
                series: vec![series],
                f0: args.f0,
                rate_hz: None,
                provenance: Provenance::Synthetic {
                    phantom: "single".into(),
                    seed,
                },
            };
            (dataset, Some(amplitude))
        }
    };
    write_dataset(&dataset, &args.out)?;
    // echo the resolved configuration into the manifest
    if let Some(a) = manifest_amplitude {
        let manifest = ScanManifest {
            f0: args.f0,
            rate_hz: None,
            seed: Some(seed),
            phantom: args.phantom.clone(),
            amplitude: Some(a),
        };
        std::fs::write(manifest_path(&args.out), manifest.render())?;
    }
    println!(
        "wrote {} positions to {}",
        dataset.positions.len(),
        args.out.display()
    );
    if let Some(a) = manifest_amplitude {
        println!("amplitude={a}");
        if a > 0.0 {
            println!("snr_db={}", amplitude_to_snr_db(a));
        }
    }
    Ok(())
}

fn resolve_f0(dataset: &ScanDataset, f0: Option<f64>, rate_hz: Option<f64>) -> f64 {
    match (f0, rate_hz) {
        (Some(f), Some(rate)) => f / rate,
        (Some(f), None) => f,
        (None, _) => dataset.normalized_f0(),
    }
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), Error> {
    let method: Method = args.method.parse()?;
    let dataset = ingest(&args.input)?;
    if dataset.positions.len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "estimate expects a single-position dataset, got {} positions (use `scan`)",
            dataset.positions.len()
        )));
    }
    let f0 = resolve_f0(&dataset, args.f0, args.rate_hz) * (1.0 + args.freq_offset);
    let est = estimate(&dataset.series[0], method, f0, args.gamma)?;
    match args.format.as_str() {
        "csv" => {
            println!("method,amplitude_physical,amplitude_normalized,sigma_used,converged,iterations,clamped");
            println!(
                "{},{},{},{},{},{},{}",
                est.method,
                est.amplitude_physical,
                est.amplitude_normalized,
                est.sigma_used,
                est.converged,
                est.iterations,
                est.clamped
            );
        }
        "json" => println!(
            "{}",
            serde_json::to_string(&est).expect("estimate serializes")
        ),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown format '{other}' (expected csv or json)"
            )))
        }
    }
    Ok(())
}

fn cmd_theory(args: TheoryArgs) -> Result<(), Error> {
    if !(args.gamma_min > 0.0 && args.gamma_max > args.gamma_min && args.gamma_step > 0.0) {
        return Err(Error::InvalidArgument(
            "need 0 < gamma-min < gamma-max and gamma-step > 0".into(),
        ));
    }
    let g_opt = optimal_threshold()?;
    if let Some(out) = &args.out {
        let mut gammas = Vec::new();
        let mut mu_values = Vec::new();
        let mut g = args.gamma_min;
        while g <= args.gamma_max + 1e-12 {
            gammas.push(g);
            mu_values.push(theoretical_mu(g, args.amplitude)?);
            g += args.gamma_step;
        }
        let curve = SnrCurve { gammas, mu_values };
        std::fs::write(out, curve.to_csv())?;
        println!("wrote {} rows to {}", curve.gammas.len(), out.display());
    }
    println!("gamma_opt={g_opt}");
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Error> {
    let seed = resolve_seed(args.seed);
    let amplitude = match (args.amplitude, args.snr_db) {
        (Some(a), _) => a,
        (None, Some(db)) => snr_db_to_amplitude(db),
        (None, None) => snr_db_to_amplitude(-23.0),
    };
    if !(args.gamma_min > 0.0 && args.gamma_max > args.gamma_min && args.gamma_step > 0.0) {
        return Err(Error::InvalidArgument(
            "need 0 < gamma-min < gamma-max and gamma-step > 0".into(),
        ));
    }
    let mut gammas = Vec::new();
    let mut g = args.gamma_min;
    while g <= args.gamma_max + 1e-12 {
        gammas.push(g);
        g += args.gamma_step;
    }
    let cfg = SweepConfig {
        amplitude,
        sigma: args.sigma,
        n_trials: args.trials,
        n_samples: args.samples,
        f0: args.f0,
        gammas,
        seed,
    };
    let result = threshold_sweep(&cfg)?;
    if let Some(out) = &args.out {
        std::fs::write(out, result.curve.to_csv())?;
        println!("wrote curve to {}", out.display());
    }
    if let Some(out) = &args.argmax_out {
        let mut text = String::new();
        for g in &result.per_trial_argmax {
            text.push_str(&format!("{g}\n"));
        }
        std::fs::write(out, text)?;
    }
    let mean = result.mean_argmax();
    let var = result
        .per_trial_argmax
        .iter()
        .map(|g| (g - mean) * (g - mean))
        .sum::<f64>()
        / result.per_trial_argmax.len() as f64;
    println!("mean_argmax={mean}");
    println!("sd_argmax={}", var.sqrt());
    Ok(())
}

fn cmd_scan(args: ScanArgs) -> Result<(), Error> {
    let method: Method = args.method.parse()?;
    let dataset = ingest(&args.input)?;
    // reconstruct the true profile when the manifest names a known phantom
    let manifest = ScanManifest::parse(&std::fs::read_to_string(manifest_path(&args.input))?)?;
    let true_profile = manifest
        .phantom
        .as_deref()
        .and_then(|name| Phantom::by_name(name).ok())
        .filter(|p| p.positions.len() == dataset.positions.len())
        .map(|p| p.amplitudes);
    let overrides = ScanOverrides {
        gamma: args.gamma,
        freq_offset: args.freq_offset,
    };
    let profile = run_scan(&dataset, method, &overrides, true_profile.as_deref())?;
    std::fs::write(&args.out, profile.to_csv())?;
    println!("wrote profile to {}", args.out.display());
    println!("object_detected={}", profile.detection.object_detected);
    if let Some((l, r)) = profile.detection.edge_positions {
        println!("edges={l},{r}");
    }
    if let Some(c) = profile.detection.profile_correlation {
        println!("profile_correlation={c}");
    }
    Ok(())
}

fn cmd_fitnoise(args: FitnoiseArgs) -> Result<(), Error> {
    let dataset = ingest(&args.input)?;
    let pooled: Vec<f64> = dataset
        .series
        .iter()
        .flat_map(|s| s.samples.iter().copied())
        .collect();
    let s = fit_scale(&pooled)?;
    println!("n={}", pooled.len());
    println!("s_hat={s}");
    Ok(())
}
