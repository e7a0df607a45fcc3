//! Test-signal synthesis: a weak sinusoid buried in unit-variance Rayleigh
//! noise, `x_n = σ·(A·cos(2π f₀ n + φ) + w_n)`, plus phantom scans that
//! emulate a detector swept across a hidden object.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::noise_model::{norm_a, rayleigh_draw};
use crate::numeric::mix_seed;

/// Full description of a synthetic series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    /// Normalized amplitude `A` (relative to the noise std `σ`).
    pub amplitude: f64,
    /// Normalized frequency in cycles per sample, in `(0, 0.5)`.
    pub freq: f64,
    /// Phase `φ` in `[0, 2π)`.
    pub phase: f64,
    /// Noise standard deviation `σ` (physical units).
    pub sigma: f64,
    /// Number of samples.
    pub n_samples: usize,
    /// RNG seed.
    pub seed: u64,
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) {
            return Err(Error::invalid(format!(
                "amplitude must be >= 0, got {}",
                self.amplitude
            )));
        }
        if !(self.freq > 0.0 && self.freq < 0.5) {
            return Err(Error::invalid(format!(
                "freq must lie in (0, 0.5), got {}",
                self.freq
            )));
        }
        if !(self.phase >= 0.0 && self.phase < 2.0 * PI) {
            return Err(Error::invalid(format!(
                "phase must lie in [0, 2π), got {}",
                self.phase
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::invalid(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples must be >= 1"));
        }
        Ok(())
    }
}

/// A uniformly sampled intensity record.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub samples: Vec<f64>,
    /// Physical sampling rate when known (ingested data).
    pub sample_rate_hz: Option<f64>,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("time series must be nonempty"));
        }
        Ok(TimeSeries {
            samples,
            sample_rate_hz: None,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Synthesize `x_n = σ·(A·cos(2π f₀ n + φ) + w_n)` with `w_n` the
/// unit-variance Rayleigh sequence. Deterministic per seed.
pub fn synthesize(spec: &SignalSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let unit_scale = 1.0 / norm_a();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let omega = 2.0 * PI * spec.freq;
    let samples = (0..spec.n_samples)
        .map(|n| {
            let w = rayleigh_draw(&mut rng, unit_scale);
            spec.sigma * (spec.amplitude * (omega * n as f64 + spec.phase).cos() + w)
        })
        .collect();
    Ok(TimeSeries {
        samples,
        sample_rate_hz: None,
    })
}

/// Convert an input SNR in dB to the normalized amplitude,
/// `A = sqrt(2·10^(snr_db/10))` (sinusoid power over unit noise variance).
pub fn snr_db_to_amplitude(snr_db: f64) -> f64 {
    (2.0 * 10f64.powf(snr_db / 10.0)).sqrt()
}

/// Inverse of [`snr_db_to_amplitude`].
pub fn amplitude_to_snr_db(amplitude: f64) -> f64 {
    10.0 * (amplitude * amplitude / 2.0).log10()
}

/// A synthetic scan target: detector positions and the true amplitude at
/// each one. The turbidity label is metadata only.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub positions: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub turbidity_label: String,
    pub name: String,
}

/// Default rod geometry: 41 positions, background level outside the rod, a
/// raised plateau inside, a centered bump (the focusing of the rod) and
/// sharp notches at the two edges.
const ROD_POSITIONS: usize = 41;
const ROD_EDGE_LO: usize = 12;
const ROD_EDGE_HI: usize = 28;
const ROD_CENTER: f64 = 20.0;
const ROD_BUMP_WIDTH: f64 = 3.0;
const ROD_BACKGROUND: f64 = 0.02;
const ROD_PLATEAU: f64 = 0.06;
const ROD_PEAK: f64 = 0.10;
const ROD_NOTCH: f64 = 0.005;

impl Phantom {
    /// Rod phantom scaled so the central bump peaks at `peak`.
    fn rod_with_peak(peak: f64, name: &str, label: &str) -> Self {
        let scale = peak / ROD_PEAK;
        let positions: Vec<f64> = (0..ROD_POSITIONS).map(|i| i as f64).collect();
        let amplitudes = (0..ROD_POSITIONS)
            .map(|i| {
                let v = if i == ROD_EDGE_LO || i == ROD_EDGE_HI {
                    ROD_NOTCH
                } else if i > ROD_EDGE_LO && i < ROD_EDGE_HI {
                    let d = (i as f64 - ROD_CENTER) / ROD_BUMP_WIDTH;
                    ROD_PLATEAU + (ROD_PEAK - ROD_PLATEAU) * (-d * d).exp()
                } else {
                    ROD_BACKGROUND
                };
                v * scale
            })
            .collect();
        Phantom {
            positions,
            amplitudes,
            turbidity_label: label.to_string(),
            name: name.to_string(),
        }
    }

    /// High-turbidity rod: weak residual sinusoid (peak amplitude 0.10).
    pub fn rod_high_turbidity() -> Self {
        Self::rod_with_peak(0.10, "rod-high", "L/l* = 5.05")
    }

    /// Low-turbidity rod: stronger residual sinusoid (peak amplitude 0.30).
    pub fn rod_low_turbidity() -> Self {
        Self::rod_with_peak(0.30, "rod-low", "L/l* = 2.14")
    }

    /// Flat noise-only phantom (amplitude 0 everywhere).
    pub fn flat_null(n_positions: usize) -> Self {
        Phantom {
            positions: (0..n_positions).map(|i| i as f64).collect(),
            amplitudes: vec![0.0; n_positions],
            turbidity_label: "noise-only".to_string(),
            name: "flat".to_string(),
        }
    }

    /// Look a named preset up ("rod" is the high-turbidity rod).
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "rod" | "rod-high" => Ok(Self::rod_high_turbidity()),
            "rod-low" => Ok(Self::rod_low_turbidity()),
            "flat" => Ok(Self::flat_null(ROD_POSITIONS)),
            other => Err(Error::invalid(format!("unknown phantom '{other}'"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.len() != self.amplitudes.len() {
            return Err(Error::invalid(
                "phantom: positions/amplitudes length mismatch",
            ));
        }
        if self.positions.is_empty() {
            return Err(Error::invalid("phantom: empty"));
        }
        if self.amplitudes.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::invalid("phantom: amplitudes must be >= 0"));
        }
        Ok(())
    }
}

/// Synthesize one series per phantom position. The template's amplitude is
/// ignored; each position uses the phantom's amplitude and an independent
/// seed derived from `(template.seed, position index)`.
pub fn phantom_scan(phantom: &Phantom, template: &SignalSpec) -> Result<Vec<(f64, TimeSeries)>> {
    phantom.validate()?;
    phantom
        .positions
        .iter()
        .zip(&phantom.amplitudes)
        .enumerate()
        .map(|(idx, (&pos, &amp))| {
            let series = synthesize_position(template, amp, idx)?;
            Ok((pos, series))
        })
        .collect()
}

/// One position of a phantom scan (amplitude substituted, seed mixed).
/// Exposed so large scans can be generated position-by-position without
/// materializing the full dataset.
pub fn synthesize_position(
    template: &SignalSpec,
    amplitude: f64,
    index: usize,
) -> Result<TimeSeries> {
    let spec = SignalSpec {
        amplitude,
        seed: mix_seed(template.seed, index as u64),
        ..*template
    };
    synthesize(&spec)
}

/// Draw a phase in `[0, 2π)` from a seed, on a stream separated from the
/// noise stream.
pub fn phase_from_seed(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, u64::MAX));
    rng.gen::<f64>() * 2.0 * PI
}
