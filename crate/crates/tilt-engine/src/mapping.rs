//! Gesture-to-event mapping: direct excursions, tilt sequences, pointer
//! displacement, and tap/shake clicks.
//!
//! Direction semantics of the device frame used throughout: a pose at
//! azimuth φ and tilt θ is (sin θ cos φ, sin θ sin φ, cos θ), so a right
//! tilt loads +x and an up tilt loads +y. On screen, right maps to +x
//! and up to −y (screen coordinates grow downward).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::DirectionLabel;
use crate::classify::Classification;
use crate::trace::AccelSample;
use crate::vec3::Vec3;

/// Default time allowed between the two excursions of a double tilt.
pub const DEFAULT_PAIR_WINDOW_MS: u64 = 1500;
/// Default cap on tilt-sequence length before an overflow reset.
pub const DEFAULT_MAX_SEQUENCE_LEN: usize = 8;
/// Screen width at which the pointer gain is calibrated; displacement
/// scales with the actual resolution relative to this.
pub const POINTER_REFERENCE_WIDTH_PX: f64 = 1024.0;
/// Degrees-per-g conversion for the threshold-speed pointer method, so
/// one gain setting serves both methods.
const SPEED_METHOD_DEG_PER_G: f64 = 90.0;

/// A classified output event, timestamped in trace milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureEvent {
    pub t: u64,
    #[serde(flatten)]
    pub kind: GestureKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GestureKind {
    /// One direction + level excursion.
    Direct {
        label: DirectionLabel,
        level: u8,
    },
    /// An ordered chain of directions terminated by the steady return.
    Sequence {
        labels: Vec<DirectionLabel>,
    },
    /// Cursor displacement for one tick, in pixels.
    Pointer {
        dx: f64,
        dy: f64,
    },
    Click {
        kind: ClickKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClickKind {
    Tap,
    Shake,
}

/// How a direct gesture triggers: on each excursion, or only when the
/// same direction is tilted twice in a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TriggerMode {
    SingleTilt,
    DoubleTilt,
}

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("invalid pointer config: {0}")]
    InvalidConfig(&'static str),
}

// ---------------------------------------------------------------------------
// Direct mapping

/// Emits one `Direct` event per steady-to-steady excursion (single tilt)
/// or per matched pair of excursions (double tilt). The stream must
/// start from a steady classification before anything can fire.
#[derive(Debug, Clone)]
pub struct DirectDispatcher {
    mode: TriggerMode,
    pair_window_ms: u64,
    armed: bool,
    excursion: Option<Excursion>,
    pending: Option<(DirectionLabel, u64)>,
}

#[derive(Debug, Clone, Copy)]
struct Excursion {
    label: DirectionLabel,
    started_at: u64,
    emitted: bool,
}

impl DirectDispatcher {
    pub fn new(mode: TriggerMode) -> Self {
        Self::with_pair_window(mode, DEFAULT_PAIR_WINDOW_MS)
    }

    pub fn with_pair_window(mode: TriggerMode, pair_window_ms: u64) -> Self {
        Self {
            mode,
            pair_window_ms,
            armed: false,
            excursion: None,
            pending: None,
        }
    }

    pub fn push(&mut self, t: u64, c: &Classification) -> Option<GestureEvent> {
        if c.label.is_steady() {
            if let Some(exc) = self.excursion.take() {
                if self.mode == TriggerMode::DoubleTilt && !exc.emitted {
                    // completed excursion becomes the first half of a pair
                    self.pending = Some((exc.label, exc.started_at));
                }
            }
            self.armed = true;
            return None;
        }

        if !self.armed {
            // mid-excursion classifications are ignored
            return None;
        }
        self.armed = false;

        let mut event = None;
        match self.mode {
            TriggerMode::SingleTilt => {
                event = Some(GestureEvent {
                    t,
                    kind: GestureKind::Direct {
                        label: c.label,
                        level: c.level,
                    },
                });
            }
            TriggerMode::DoubleTilt => {
                if let Some((label, started_at)) = self.pending.take() {
                    if label == c.label && t.saturating_sub(started_at) <= self.pair_window_ms {
                        event = Some(GestureEvent {
                            t,
                            kind: GestureKind::Direct {
                                label: c.label,
                                level: c.level,
                            },
                        });
                    }
                    // mismatch or expiry drops the pending half; this
                    // excursion can seed a new pair when it completes
                }
            }
        }
        self.excursion = Some(Excursion {
            label: c.label,
            started_at: t,
            emitted: event.is_some(),
        });
        event
    }
}

// ---------------------------------------------------------------------------
// Tilt sequences

/// Accumulates non-steady directions and emits the chain when the user
/// returns to steady. A held direction contributes one element.
#[derive(Debug, Clone)]
pub struct SequenceTracker {
    buffer: Vec<DirectionLabel>,
    max_len: usize,
}

/// Outcome of feeding one classification to the tracker.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceStep {
    None,
    Event(GestureEvent),
    /// The buffer exceeded the configured cap and was reset; surfaced as
    /// a diagnostic, not a gesture.
    Overflow {
        t: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequencePhase {
    Idle,
    Building,
}

impl Default for SequenceTracker {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_SEQUENCE_LEN)
    }
}

impl SequenceTracker {
    pub fn new(max_len: usize) -> Self {
        Self {
            buffer: Vec::new(),
            max_len: max_len.max(1),
        }
    }

    pub fn phase(&self) -> SequencePhase {
        if self.buffer.is_empty() {
            SequencePhase::Idle
        } else {
            SequencePhase::Building
        }
    }

    pub fn push(&mut self, t: u64, c: &Classification) -> SequenceStep {
        if c.label.is_steady() {
            if self.buffer.is_empty() {
                return SequenceStep::None;
            }
            let labels = std::mem::take(&mut self.buffer);
            return SequenceStep::Event(GestureEvent {
                t,
                kind: GestureKind::Sequence { labels },
            });
        }
        if self.buffer.last() != Some(&c.label) {
            self.buffer.push(c.label);
        }
        if self.buffer.len() > self.max_len {
            self.buffer.clear();
            return SequenceStep::Overflow { t };
        }
        SequenceStep::None
    }
}

// ---------------------------------------------------------------------------
// Pointer movement

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointerMethod {
    /// Displacement proportional to the per-axis tilt angle beyond the
    /// dead zone.
    AngleDisplacement,
    /// Displacement proportional to the static acceleration beyond a
    /// per-axis threshold (sin of the dead-zone angle).
    ThresholdSpeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerConfig {
    pub screen_w: u32,
    pub screen_h: u32,
    /// Pixels per degree per tick at the reference resolution.
    pub gain: f64,
    pub dead_zone_deg: f64,
    pub method: PointerMethod,
    pub tick_ms: u64,
}

impl Default for PointerConfig {
    fn default() -> Self {
        Self {
            screen_w: 1024,
            screen_h: 768,
            gain: 2.0,
            dead_zone_deg: 10.0,
            method: PointerMethod::AngleDisplacement,
            tick_ms: 20,
        }
    }
}

impl PointerConfig {
    pub fn validate(&self) -> Result<(), MappingError> {
        if self.screen_w == 0 || self.screen_h == 0 {
            return Err(MappingError::InvalidConfig(
                "screen dimensions must be positive",
            ));
        }
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(MappingError::InvalidConfig("gain must be positive"));
        }
        if !(self.dead_zone_deg.is_finite() && (0.0..90.0).contains(&self.dead_zone_deg)) {
            return Err(MappingError::InvalidConfig(
                "dead_zone_deg must be in [0, 90)",
            ));
        }
        if self.tick_ms == 0 {
            return Err(MappingError::InvalidConfig("tick_ms must be positive"));
        }
        Ok(())
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Unclamped per-tick displacement for a pose, in pixels. Odd in each
/// axis, zero for a flat pose, and strictly increasing in tilt beyond
/// the dead zone.
pub fn displacement(cfg: &PointerConfig, a: Vec3) -> (f64, f64) {
    let [ax, ay, az] = a;
    let scale_x = cfg.screen_w as f64 / POINTER_REFERENCE_WIDTH_PX;
    let scale_y = cfg.screen_h as f64 / POINTER_REFERENCE_WIDTH_PX;
    let (mag_x, mag_y) = match cfg.method {
        PointerMethod::AngleDisplacement => {
            let zmag = az.abs();
            let angle_x = ax.abs().atan2(zmag).to_degrees();
            let angle_y = ay.abs().atan2(zmag).to_degrees();
            (
                (angle_x - cfg.dead_zone_deg).max(0.0),
                (angle_y - cfg.dead_zone_deg).max(0.0),
            )
        }
        PointerMethod::ThresholdSpeed => {
            let threshold_g = cfg.dead_zone_deg.to_radians().sin();
            (
                (ax.abs() - threshold_g).max(0.0) * SPEED_METHOD_DEG_PER_G,
                (ay.abs() - threshold_g).max(0.0) * SPEED_METHOD_DEG_PER_G,
            )
        }
    };
    // right tilt advances x; up tilt (+y in g) reduces screen y
    let dx = cfg.gain * sign(ax) * mag_x * scale_x;
    let dy = -cfg.gain * sign(ay) * mag_y * scale_y;
    (dx, dy)
}

/// Accumulating cursor state. Starts at the screen centre and clamps
/// every step so the cursor never leaves [0, w−1] × [0, h−1]; emitted
/// events carry the post-clamp deltas.
#[derive(Debug, Clone)]
pub struct PointerTracker {
    cfg: PointerConfig,
    x: f64,
    y: f64,
}

impl PointerTracker {
    pub fn new(cfg: PointerConfig) -> Result<Self, MappingError> {
        cfg.validate()?;
        Ok(Self {
            x: cfg.screen_w as f64 / 2.0,
            y: cfg.screen_h as f64 / 2.0,
            cfg,
        })
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn config(&self) -> &PointerConfig {
        &self.cfg
    }

    pub fn step(&mut self, t: u64, a: Vec3) -> GestureEvent {
        let (dx, dy) = displacement(&self.cfg, a);
        let nx = (self.x + dx).clamp(0.0, (self.cfg.screen_w - 1) as f64);
        let ny = (self.y + dy).clamp(0.0, (self.cfg.screen_h - 1) as f64);
        let applied = (nx - self.x, ny - self.y);
        self.x = nx;
        self.y = ny;
        GestureEvent {
            t,
            kind: GestureKind::Pointer {
                dx: applied.0,
                dy: applied.1,
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Tap / shake clicks

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TapConfig {
    /// Magnitude-jerk size that counts as a spike, in g per sample step.
    pub spike_threshold_g: f64,
    /// A tap's magnitude must return to baseline within this window.
    pub tap_return_ms: u64,
    /// Window for collecting alternating spikes into a shake; also the
    /// quiet period a tap must survive before it is emitted.
    pub shake_window_ms: u64,
    /// Alternating-sign spikes needed for a shake.
    pub shake_min_spikes: usize,
}

impl Default for TapConfig {
    fn default() -> Self {
        Self {
            spike_threshold_g: 0.8,
            tap_return_ms: 100,
            shake_window_ms: 500,
            shake_min_spikes: 3,
        }
    }
}

/// Detects tap and shake clicks from raw (unsmoothed) samples.
///
/// A spike is a jump in the magnitude series larger than the threshold,
/// signed by its direction. A tap is an upward spike whose magnitude
/// returns below the spike elevation within the return window; it is
/// emitted only after the shake window passes without further spikes, so
/// a shake absorbs the taps it is made of. A shake is a trailing run of
/// alternating-sign spikes inside the shake window.
#[derive(Debug, Clone)]
pub struct TapDetector {
    cfg: TapConfig,
    prev_mag: Option<f64>,
    spikes: VecDeque<(u64, i8)>,
    candidate: Option<TapCandidate>,
    confirmed: Option<u64>,
}

#[derive(Debug, Clone, Copy)]
struct TapCandidate {
    spike_t: u64,
    baseline: f64,
}

impl Default for TapDetector {
    fn default() -> Self {
        Self::new(TapConfig::default())
    }
}

impl TapDetector {
    pub fn new(cfg: TapConfig) -> Self {
        Self {
            cfg,
            prev_mag: None,
            spikes: VecDeque::new(),
            candidate: None,
            confirmed: None,
        }
    }

    pub fn push(&mut self, s: &AccelSample) -> Vec<GestureEvent> {
        let mut out = Vec::new();
        let mag = s.magnitude();
        let t = s.t;
        let Some(prev) = self.prev_mag.replace(mag) else {
            return out;
        };
        let jerk = mag - prev;

        // a confirmed tap that survived its quiet window is due before
        // anything this sample does
        if let Some(spike_t) = self.confirmed {
            if t.saturating_sub(spike_t) >= self.cfg.shake_window_ms {
                self.confirmed = None;
                out.push(click(spike_t, ClickKind::Tap));
            }
        }

        if jerk.abs() > self.cfg.spike_threshold_g {
            // any further spike absorbs an unemitted tap
            self.confirmed = None;
            let sign: i8 = if jerk > 0.0 { 1 } else { -1 };
            while let Some(&(front_t, _)) = self.spikes.front() {
                if t.saturating_sub(front_t) > self.cfg.shake_window_ms {
                    self.spikes.pop_front();
                } else {
                    break;
                }
            }
            self.spikes.push_back((t, sign));
            if self.trailing_alternating_run() >= self.cfg.shake_min_spikes {
                self.spikes.clear();
                self.candidate = None;
                out.push(click(t, ClickKind::Shake));
                return out;
            }
            if sign > 0 && self.candidate.is_none() {
                self.candidate = Some(TapCandidate {
                    spike_t: t,
                    baseline: prev,
                });
            }
        }

        if let Some(c) = self.candidate {
            if t.saturating_sub(c.spike_t) > self.cfg.tap_return_ms {
                self.candidate = None;
            } else if mag - c.baseline < self.cfg.spike_threshold_g {
                // returned below the spike elevation: tap complete,
                // pending the quiet window
                self.candidate = None;
                self.confirmed = Some(c.spike_t);
            }
        }
        out
    }

    /// Flushes a completed tap at end of stream (end of input counts as
    /// quiet).
    pub fn finish(&mut self) -> Option<GestureEvent> {
        self.confirmed.take().map(|t| click(t, ClickKind::Tap))
    }

    fn trailing_alternating_run(&self) -> usize {
        let mut run = 0;
        let mut expected: Option<i8> = None;
        for &(_, sign) in self.spikes.iter().rev() {
            match expected {
                Some(e) if sign != e => break,
                _ => {}
            }
            run += 1;
            expected = Some(-sign);
        }
        run
    }
}

fn click(t: u64, kind: ClickKind) -> GestureEvent {
    GestureEvent {
        t,
        kind: GestureKind::Click { kind },
    }
}
