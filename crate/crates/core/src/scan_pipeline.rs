//! Scan pipeline: run an estimator across a multi-position dataset,
//! produce an amplitude-vs-position profile and an object-detection
//! verdict.
//!
//! Datasets are stored as a CSV of `position,sample_index,intensity` rows
//! grouped by position, with a key=value sidecar manifest carrying the
//! signal frequency and (for synthetic scans) the seed and phantom name.

use rayon::prelude::*;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::estimators::{
    crossover_estimate_closed, crossover_estimate_numeric, lockin_estimate, mle_linear_estimate,
    noise_scale_from_mean, power_estimate, qmle_closed, qmle_iterative, AmplitudeEstimate, Method,
};
use crate::quantizer::{quantize, QuantizerConfig};
use crate::signal_synth::{phantom_scan, Phantom, SignalSpec, TimeSeries};
use crate::sr_theory::optimal_threshold;

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Synthetic { phantom: String, seed: u64 },
    Ingested { path: PathBuf },
}

/// A multi-position scan dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanDataset {
    /// Strictly increasing detector positions.
    pub positions: Vec<f64>,
    /// One series per position.
    pub series: Vec<TimeSeries>,
    /// Signal frequency: Hz when `rate_hz` is set, cycles/sample otherwise.
    pub f0: f64,
    pub rate_hz: Option<f64>,
    pub provenance: Provenance,
}

impl ScanDataset {
    /// Signal frequency in cycles per sample.
    pub fn normalized_f0(&self) -> f64 {
        match self.rate_hz {
            Some(rate) => self.f0 / rate,
            None => self.f0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.is_empty() {
            return Err(Error::invalid("dataset has no positions"));
        }
        if self.positions.len() != self.series.len() {
            return Err(Error::invalid("positions/series length mismatch"));
        }
        if self.positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("positions must be strictly increasing"));
        }
        if self.series.iter().any(|s| s.is_empty()) {
            return Err(Error::invalid("every position needs a nonempty series"));
        }
        let f0 = self.normalized_f0();
        if !(f0 > 0.0 && f0 < 0.5) {
            return Err(Error::invalid(format!(
                "normalized frequency {f0} outside (0, 0.5); check f0/rate_hz"
            )));
        }
        Ok(())
    }

    /// Synthesize a dataset from a phantom. The template's amplitude is
    /// replaced per position; seeds derive from `template.seed`.
    pub fn synthetic(phantom: &Phantom, template: &SignalSpec) -> Result<Self> {
        let scan = phantom_scan(phantom, template)?;
        let (positions, series) = scan.into_iter().unzip();
        let ds = ScanDataset {
            positions,
            series,
            f0: template.freq,
            rate_hz: None,
            provenance: Provenance::Synthetic {
                phantom: phantom.name.clone(),
                seed: template.seed,
            },
        };
        ds.validate()?;
        Ok(ds)
    }
}

/// Manifest path for a dataset path: the extension replaced by `manifest`.
pub fn manifest_path(data_path: &Path) -> PathBuf {
    data_path.with_extension("manifest")
}

/// Sidecar metadata of a dataset file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanManifest {
    pub f0: f64,
    pub rate_hz: Option<f64>,
    pub seed: Option<u64>,
    pub phantom: Option<String>,
    pub amplitude: Option<f64>,
}

impl ScanManifest {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "f0={}", self.f0);
        if let Some(r) = self.rate_hz {
            let _ = writeln!(out, "rate_hz={r}");
        }
        if let Some(s) = self.seed {
            let _ = writeln!(out, "seed={s}");
        }
        if let Some(p) = &self.phantom {
            let _ = writeln!(out, "phantom={p}");
        }
        if let Some(a) = self.amplitude {
            let _ = writeln!(out, "amplitude={a}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = ScanManifest::default();
        let mut saw_f0 = false;
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("manifest line '{line}' is not key=value"),
            })?;
            let bad = |what: &str| Error::Parse {
                line: idx + 1,
                msg: format!("manifest {what} '{value}' is not numeric"),
            };
            match key.trim() {
                "f0" => {
                    m.f0 = value.trim().parse().map_err(|_| bad("f0"))?;
                    saw_f0 = true;
                }
                "rate_hz" => m.rate_hz = Some(value.trim().parse().map_err(|_| bad("rate_hz"))?),
                "seed" => m.seed = Some(value.trim().parse().map_err(|_| bad("seed"))?),
                "phantom" => m.phantom = Some(value.trim().to_string()),
                "amplitude" => {
                    m.amplitude = Some(value.trim().parse().map_err(|_| bad("amplitude"))?)
                }
                _ => {} // tolerated: forward-compatible keys
            }
        }
        if !saw_f0 {
            return Err(Error::Parse {
                line: 0,
                msg: "manifest is missing f0".into(),
            });
        }
        Ok(m)
    }
}

/// Write a dataset as CSV plus its sidecar manifest.
pub fn write_dataset(dataset: &ScanDataset, path: &Path) -> Result<()> {
    dataset.validate()?;
    let mut out = String::from("position,sample_index,intensity\n");
    for (pos, series) in dataset.positions.iter().zip(&dataset.series) {
        for (i, x) in series.samples.iter().enumerate() {
            let _ = writeln!(out, "{pos},{i},{x}");
        }
    }
    fs::write(path, out)?;
    let manifest = ScanManifest {
        f0: dataset.f0,
        rate_hz: dataset.rate_hz,
        seed: match &dataset.provenance {
            Provenance::Synthetic { seed, .. } => Some(*seed),
            _ => None,
        },
        phantom: match &dataset.provenance {
            Provenance::Synthetic { phantom, .. } => Some(phantom.clone()),
            _ => None,
        },
        amplitude: None,
    };
    fs::write(manifest_path(path), manifest.render())?;
    Ok(())
}

/// Read a dataset CSV and its sidecar manifest, validating the format.
/// Malformed rows are rejected with their 1-based line number.
pub fn ingest(path: &Path) -> Result<ScanDataset> {
    let text = fs::read_to_string(path)?;
    let manifest = ScanManifest::parse(&fs::read_to_string(manifest_path(path))?)?;

    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    if header.trim() != "position,sample_index,intensity" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header 'position,sample_index,intensity', got '{header}'"),
        });
    }

    let mut positions: Vec<f64> = Vec::new();
    let mut series: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (p, i, x) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(p), Some(i), Some(x), None) => (p, i, x),
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected 3 comma-separated fields, got '{line}'"),
                })
            }
        };
        let pos: f64 = p.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("position '{p}' is not numeric"),
        })?;
        let sample_index: usize = i.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("sample_index '{i}' is not a nonnegative integer"),
        })?;
        let value: f64 = x.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("intensity '{x}' is not numeric"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("intensity '{x}' is not finite"),
            });
        }

        let start_new_block = match positions.last() {
            None => true,
            Some(&last) if last == pos => false,
            Some(&last) if pos > last => true,
            Some(&last) => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("position {pos} is not increasing (previous block at {last})"),
                })
            }
        };
        if start_new_block {
            // a block without rows cannot appear in this grammar; the empty
            // cases reduce to "no data rows" or a non-dense sample_index
            if sample_index != 0 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("block at position {pos} must start at sample_index 0"),
                });
            }
            positions.push(pos);
            series.push(Vec::new());
        } else {
            let expected = series.last().map(|s| s.len()).unwrap_or(0);
            if sample_index != expected {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("sample_index {sample_index} not dense (expected {expected})"),
                });
            }
        }
        series.last_mut().expect("block exists").push(value);
    }
    if positions.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "no data rows".into(),
        });
    }

    let series = series
        .into_iter()
        .map(TimeSeries::new)
        .collect::<Result<Vec<_>>>()?;
    let ds = ScanDataset {
        positions,
        series,
        f0: manifest.f0,
        rate_hz: manifest.rate_hz,
        provenance: Provenance::Ingested {
            path: path.to_path_buf(),
        },
    };
    ds.validate()?;
    Ok(ds)
}

/// Detection verdict of a scan profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub object_detected: bool,
    /// Midpoints bracketing the detected run, when any.
    pub edge_positions: Option<(f64, f64)>,
    /// Pearson correlation with the true profile (synthetic scans only).
    pub profile_correlation: Option<f64>,
}

/// A per-position amplitude profile plus its detection verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanProfile {
    pub method: Method,
    pub positions: Vec<f64>,
    pub estimates: Vec<AmplitudeEstimate>,
    pub detection: Detection,
}

impl ScanProfile {
    /// Render as CSV with the standard profile columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "position,method,amplitude_physical,amplitude_normalized,converged,clamped\n",
        );
        for (pos, est) in self.positions.iter().zip(&self.estimates) {
            let _ = writeln!(
                out,
                "{pos},{},{},{},{},{}",
                self.method,
                est.amplitude_physical,
                est.amplitude_normalized,
                est.converged,
                est.clamped
            );
        }
        out
    }
}

/// Knobs of a scan run.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScanOverrides {
    /// Quantizer threshold (defaults to the SNR-optimal threshold).
    pub gamma: Option<f64>,
    /// Relative offset applied to the estimator's assumed frequency
    /// (e.g. 0.0005 = 0.05%), emulating imperfect frequency knowledge.
    pub freq_offset: f64,
}

/// Baseline-window configuration of the object detector.
#[derive(Debug, Clone, Copy)]
pub struct DetectionSpec {
    /// Fraction of positions on each side treated as baseline.
    pub baseline_fraction: f64,
    /// Detection threshold in baseline MAD units.
    pub mad_multiplier: f64,
    /// Minimum run length of above-threshold interior positions.
    pub min_run: usize,
}

impl Default for DetectionSpec {
    fn default() -> Self {
        DetectionSpec {
            baseline_fraction: 0.2,
            mad_multiplier: 4.0,
            min_run: 3,
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Flag an object when an interior contiguous run of at least `min_run`
/// positions exceeds `baseline + k·MAD`, with the baseline taken from the
/// outer windows. Scale-free: scaling the whole profile leaves the verdict
/// unchanged.
pub fn detect_object(
    values: &[f64],
    positions: &[f64],
    spec: &DetectionSpec,
    true_profile: Option<&[f64]>,
) -> Result<Detection> {
    let n = values.len();
    if n < 7 {
        return Err(Error::invalid(format!(
            "detect_object: need at least 7 positions, got {n}"
        )));
    }
    if positions.len() != n {
        return Err(Error::invalid(
            "detect_object: values/positions length mismatch",
        ));
    }
    if let Some(t) = true_profile {
        if t.len() != n {
            return Err(Error::invalid(
                "detect_object: true profile length mismatch",
            ));
        }
    }
    let w = ((spec.baseline_fraction * n as f64).floor() as usize).max(1);
    let mut baseline: Vec<f64> = values[..w]
        .iter()
        .chain(&values[n - w..])
        .copied()
        .collect();
    let level = median(&mut baseline);
    let mut devs: Vec<f64> = baseline.iter().map(|v| (v - level).abs()).collect();
    let mad = median(&mut devs);
    let threshold = level + spec.mad_multiplier * mad;

    // longest interior run above threshold
    let mut best: Option<(usize, usize)> = None;
    let mut run_start = None;
    for (i, &value) in values.iter().enumerate().take(n - w).skip(w) {
        if value > threshold {
            let start = *run_start.get_or_insert(i);
            let len = i - start + 1;
            if best.map(|(s, e)| e - s + 1).unwrap_or(0) < len {
                best = Some((start, i));
            }
        } else {
            run_start = None;
        }
    }

    let detected = best
        .map(|(s, e)| e - s + 1 >= spec.min_run)
        .unwrap_or(false);
    let edges = if detected {
        let (s, e) = best.unwrap();
        let left = if s == 0 {
            positions[0]
        } else {
            0.5 * (positions[s - 1] + positions[s])
        };
        let right = if e == n - 1 {
            positions[n - 1]
        } else {
            0.5 * (positions[e] + positions[e + 1])
        };
        Some((left, right))
    } else {
        None
    };

    let correlation = true_profile.map(|t| pearson(values, t));
    Ok(Detection {
        object_detected: detected,
        edge_positions: edges,
        profile_correlation: correlation,
    })
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Estimate one series with the given method, shared config and assumed
/// frequency. Estimator failures surface as a zero-amplitude estimate with
/// `converged = false` so a scan never aborts on one position.
fn estimate_position(
    series: &TimeSeries,
    method: Method,
    f0_assumed: f64,
    gamma: f64,
) -> AmplitudeEstimate {
    let attempt = (|| -> Result<AmplitudeEstimate> {
        match method {
            Method::Lockin => lockin_estimate(series, f0_assumed),
            Method::MleLinear => mle_linear_estimate(series, f0_assumed),
            quantized => {
                let sigma = noise_scale_from_mean(series)?;
                let cfg = QuantizerConfig::new(gamma, sigma)?;
                let (ternary, counts) = quantize(series, &cfg);
                match quantized {
                    Method::CrossoverNumeric => {
                        crossover_estimate_numeric(&counts, &cfg, f0_assumed)
                    }
                    Method::CrossoverClosed => crossover_estimate_closed(&counts, &cfg),
                    Method::QmleIterative => qmle_iterative(&ternary, &cfg, f0_assumed),
                    Method::QmleClosed => qmle_closed(&counts, &cfg),
                    Method::Power => power_estimate(&counts, &cfg, f0_assumed),
                    _ => unreachable!(),
                }
            }
        }
    })();
    attempt.unwrap_or_else(|_| AmplitudeEstimate::new(method, 0.0, 1.0).with_flags(false, 0, false))
}

/// Run one estimator across every dataset position. Positions are
/// processed concurrently; the result is deterministic and
/// order-independent. When `true_profile` is given (synthetic scans), the
/// detection carries the Pearson correlation against it.
pub fn run_scan(
    dataset: &ScanDataset,
    method: Method,
    overrides: &ScanOverrides,
    true_profile: Option<&[f64]>,
) -> Result<ScanProfile> {
    dataset.validate()?;
    let gamma = match overrides.gamma {
        Some(g) => g,
        None => optimal_threshold()?,
    };
    let f0_assumed = dataset.normalized_f0() * (1.0 + overrides.freq_offset);
    let estimates: Vec<AmplitudeEstimate> = dataset
        .series
        .par_iter()
        .map(|series| estimate_position(series, method, f0_assumed, gamma))
        .collect();
    let values: Vec<f64> = estimates.iter().map(|e| e.amplitude_physical).collect();
    let detection = detect_object(
        &values,
        &dataset.positions,
        &DetectionSpec::default(),
        true_profile,
    )?;
    Ok(ScanProfile {
        method,
        positions: dataset.positions.clone(),
        estimates,
        detection,
    })
}
