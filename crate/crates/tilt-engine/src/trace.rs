//! Accelerometer trace files and synthetic trace generation.
//!
//! A trace file is UTF-8 JSON Lines: one `{"t": <int ms>, "ax": <float>,
//! "ay": <float>, "az": <float>}` object per sample, in g units (gravity
//! = 1.0). Lines starting with `#` are comments. An optional header line
//! `{"rate_hz": <float>}` may appear as the first record; the nominal
//! rate defaults to 100 Hz when absent.
//!
//! [`synth_trace`] replaces the physical sensor: it produces a
//! deterministic, seeded stream holding a fixed gravity orientation with
//! optional per-axis Gaussian noise and an 8 Hz tremor sinusoid.

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vec3::{self, Vec3};

/// Nominal sample rate assumed when a trace file carries no header.
pub const DEFAULT_RATE_HZ: f64 = 100.0;

/// Frequency of the synthetic hand-tremor sinusoid.
pub const TREMOR_HZ: f64 = 8.0;

/// One timestamped 3-axis acceleration reading, in g units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccelSample {
    /// Milliseconds; non-decreasing within a trace.
    pub t: u64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl AccelSample {
    pub fn new(t: u64, ax: f64, ay: f64, az: f64) -> Self {
        Self { t, ax, ay, az }
    }

    pub fn from_axes(t: u64, a: Vec3) -> Self {
        Self::new(t, a[0], a[1], a[2])
    }

    pub fn axes(&self) -> Vec3 {
        [self.ax, self.ay, self.az]
    }

    pub fn magnitude(&self) -> f64 {
        vec3::norm(self.axes())
    }
}

/// An ordered, non-empty sample sequence plus its nominal rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub samples: Vec<AccelSample>,
    pub rate_hz: f64,
}

impl Trace {
    pub fn duration_ms(&self) -> u64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0,
        }
    }
}

/// Parameters for a synthetic constant-orientation trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    /// Target gravity orientation; must be a unit vector (within 1e-9).
    pub direction: Vec3,
    /// Per-axis Gaussian standard deviation, in g.
    pub noise_sigma: f64,
    pub duration_ms: u64,
    pub rate_hz: f64,
    /// Amplitude of the 8 Hz tremor sinusoid added to every axis, in g.
    pub tremor_amp: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            direction: [0.0, 0.0, 1.0],
            noise_sigma: 0.0,
            duration_ms: 1000,
            rate_hz: DEFAULT_RATE_HZ,
            tremor_amp: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("malformed record at line {0}")]
    MalformedRecord(usize),
    #[error("non-monotone timestamp at line {0}")]
    NonMonotoneTimestamp(usize),
    #[error("empty trace")]
    EmptyTrace,
    #[error("invalid synthesis spec: {field}: {reason}")]
    InvalidSpec { field: &'static str, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    rate_hz: f64,
}

/// Parses a JSON Lines trace. Any malformed record rejects the whole
/// input; silently dropping samples ahead of a recognition pipeline is
/// worse than a hard error.
pub fn parse_trace<R: BufRead>(reader: R) -> Result<Trace, TraceError> {
    let mut samples: Vec<AccelSample> = Vec::new();
    let mut rate_hz = DEFAULT_RATE_HZ;
    let mut first_record = true;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        if first_record {
            first_record = false;
            if let Ok(header) = serde_json::from_str::<Header>(text) {
                if !(header.rate_hz.is_finite() && header.rate_hz > 0.0) {
                    return Err(TraceError::MalformedRecord(line_no));
                }
                rate_hz = header.rate_hz;
                continue;
            }
        }
        let sample: AccelSample =
            serde_json::from_str(text).map_err(|_| TraceError::MalformedRecord(line_no))?;
        if !vec3::is_finite(sample.axes()) {
            return Err(TraceError::MalformedRecord(line_no));
        }
        if let Some(prev) = samples.last() {
            if sample.t < prev.t {
                return Err(TraceError::NonMonotoneTimestamp(line_no));
            }
        }
        samples.push(sample);
    }

    if samples.is_empty() {
        return Err(TraceError::EmptyTrace);
    }
    Ok(Trace { samples, rate_hz })
}

/// Writes a trace in the same JSON Lines format [`parse_trace`] reads.
/// The header line is always emitted, so serialize ∘ parse is the
/// identity on serializer output.
pub fn serialize_trace<W: Write>(trace: &Trace, mut writer: W) -> Result<(), TraceError> {
    writeln!(writer, "{{\"rate_hz\":{}}}", format_f64(trace.rate_hz))?;
    for s in &trace.samples {
        let line = serde_json::to_string(s).expect("sample serialization cannot fail");
        writeln!(writer, "{}", line)?;
    }
    Ok(())
}

fn format_f64(v: f64) -> String {
    serde_json::to_string(&v).expect("finite float")
}

fn validate_spec(spec: &SynthSpec) -> Result<(), TraceError> {
    let invalid = |field: &'static str, reason: &str| TraceError::InvalidSpec {
        field,
        reason: reason.to_string(),
    };
    if !vec3::is_finite(spec.direction) {
        return Err(invalid("direction", "components must be finite"));
    }
    if (vec3::norm(spec.direction) - 1.0).abs() > 1e-9 {
        return Err(invalid(
            "direction",
            "must be a unit vector (|v| = 1 ± 1e-9)",
        ));
    }
    if !(spec.noise_sigma.is_finite() && spec.noise_sigma >= 0.0) {
        return Err(invalid("noise_sigma", "must be finite and ≥ 0"));
    }
    if !(spec.tremor_amp.is_finite() && spec.tremor_amp >= 0.0) {
        return Err(invalid("tremor_amp", "must be finite and ≥ 0"));
    }
    if spec.duration_ms == 0 {
        return Err(invalid("duration_ms", "must be positive"));
    }
    if !(spec.rate_hz.is_finite() && spec.rate_hz > 0.0) {
        return Err(invalid("rate_hz", "must be finite and positive"));
    }
    Ok(())
}

/// Number of samples a spec yields: floor(duration_ms / 1000 × rate_hz).
pub fn sample_count(duration_ms: u64, rate_hz: f64) -> usize {
    (duration_ms as f64 / 1000.0 * rate_hz).floor() as usize
}

/// Synthesizes a constant-orientation trace. Deterministic for a fixed
/// seed; with zero noise and zero tremor every sample equals the
/// direction exactly.
pub fn synth_trace(spec: &SynthSpec) -> Result<Trace, TraceError> {
    validate_spec(spec)?;
    let count = sample_count(spec.duration_ms, spec.rate_hz);
    if count == 0 {
        return Err(TraceError::InvalidSpec {
            field: "duration_ms",
            reason: format!(
                "duration {} ms at {} Hz yields zero samples",
                spec.duration_ms, spec.rate_hz
            ),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let t = (i as f64 * 1000.0 / spec.rate_hz).round() as u64;
        let axes = perturb(
            spec.direction,
            t,
            spec.noise_sigma,
            spec.tremor_amp,
            &mut rng,
        );
        samples.push(AccelSample::from_axes(t, axes));
    }
    Ok(Trace {
        samples,
        rate_hz: spec.rate_hz,
    })
}

/// One noisy sample around `base` at time `t`: per-axis Gaussian noise
/// (drawn in ax, ay, az order) plus the shared tremor sinusoid. Skips
/// the RNG entirely at sigma = 0 so the noiseless case is bit-exact.
pub(crate) fn perturb(
    base: Vec3,
    t: u64,
    noise_sigma: f64,
    tremor_amp: f64,
    rng: &mut ChaCha8Rng,
) -> Vec3 {
    let mut axes = base;
    if noise_sigma > 0.0 {
        for axis in &mut axes {
            let g: f64 = StandardNormal.sample(rng);
            *axis += noise_sigma * g;
        }
    }
    if tremor_amp > 0.0 {
        let phase = 2.0 * std::f64::consts::PI * TREMOR_HZ * (t as f64 / 1000.0);
        let tremor = tremor_amp * phase.sin();
        for axis in &mut axes {
            *axis += tremor;
        }
    }
    axes
}
