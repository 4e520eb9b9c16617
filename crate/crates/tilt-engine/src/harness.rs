//! Synthetic target-selection benchmark.
//!
//! A circular menu of 4, 8, 12 or 16 targets is modelled as evenly
//! spaced tilt poses. Each trial draws a target, generates a synthetic
//! excursion trace toward it (a noisy stand-in for a human subject),
//! and runs the full preprocess → classify → dispatch pipeline. A trial
//! is a hit when the first emitted direct gesture matches the target;
//! anything else (wrong gesture or no gesture) is an error.
//!
//! Excursion model (shared by every benchmark so results stay
//! comparable across engine configs): steady hold, linear ramp to the
//! aimed pose, target hold, ramp back, tail steady hold, at a fixed
//! sample rate. The subject's imprecision is modelled as a per-trial
//! aim error drawn with the same sigma as the sensor noise: with a
//! perfect aim the window average would cancel the sensor noise and
//! every session would saturate at 100%.
//!
//! 12- and 16-target sessions engage two tilt levels on the eight
//! azimuths by default; `pure_azimuth` switches to 12/16 evenly spaced
//! azimuths at a single tilt, calibrated as explicit per-level points.
//!
//! Trials are independent and seeded individually, so sessions run in
//! parallel with rayon (default `parallel` feature) and aggregate
//! deterministically in trial order; the sequential path is always
//! available for comparison.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{CalibrationError, CalibrationSet, DirectionLabel};
use crate::classify::{classify, classify_with_levels, ClassifyError, LevelBoundaries};
use crate::mapping::{DirectDispatcher, GestureKind, TriggerMode};
use crate::preprocess::{PreprocessConfig, PreprocessError, StableDetector};
use crate::trace::{self, AccelSample};
use crate::vec3::{self, Vec3};

pub const VALID_TARGET_COUNTS: [u32; 4] = [4, 8, 12, 16];

/// Bumped whenever the excursion model or its defaults change, since
/// that invalidates cross-run comparisons.
pub const EXCURSION_MODEL_VERSION: &str = "excursion-v1";

/// One benchmark block: a target count, a trial budget, and the noise
/// level of the synthetic subject.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSession {
    /// One of {4, 8, 12, 16}.
    pub n_targets: u32,
    pub trials: u32,
    /// Per-axis sensor noise sigma in g; also scales the aim error.
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Aggregate outcome of a session. Field order matches the CSV columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub n_targets: u32,
    pub sigma: f64,
    pub trials: u32,
    pub hits: u32,
    pub errors: u32,
    pub accuracy: f64,
    /// Mean trace time from steady departure to the hitting gesture,
    /// over hits; 0 when nothing hit.
    pub mean_time_ms: f64,
    pub seed: u64,
}

impl SessionResult {
    pub fn csv_header() -> &'static str {
        "n_targets,sigma,trials,hits,errors,accuracy,mean_time_ms,seed"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n_targets,
            self.sigma,
            self.trials,
            self.hits,
            self.errors,
            self.accuracy,
            self.mean_time_ms,
            self.seed
        )
    }
}

/// Engine and excursion-model parameters for a benchmark run.
///
/// The preprocessing threshold is looser than the replay default: the
/// benchmark sweeps noise levels an order of magnitude above what a
/// physical sensor at rest shows, and the stability filter has to pass
/// those streams while the episode drift rule still segments the ramp.
/// Level tilts sit inside the quantization bands with the second level
/// close to its upper boundary; imagining a deep tilt level without
/// visual feedback is exactly what degrades multi-level accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub preprocess: PreprocessConfig,
    pub boundaries: LevelBoundaries,
    pub max_g: f64,
    /// Use n evenly spaced azimuths at one tilt for 12/16 targets
    /// instead of two levels on eight azimuths.
    pub pure_azimuth: bool,
    pub rate_hz: f64,
    pub steady_hold_ms: u64,
    pub ramp_ms: u64,
    pub target_hold_ms: u64,
    pub tail_steady_ms: u64,
    /// Tilt of single-level targets (n ≤ 8 and pure-azimuth sessions).
    pub single_tilt_deg: f64,
    /// Tilts of the two engaged levels for 12/16-target sessions.
    pub level1_tilt_deg: f64,
    pub level2_tilt_deg: f64,
    /// Aim-error sigma as a multiple of the sensor noise sigma.
    pub aim_sigma_scale: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig {
                window_size: 6,
                stddev_threshold: 0.26,
                dwell_ms: 200,
            },
            boundaries: LevelBoundaries {
                dead_zone_deg: 15.0,
                l1_max_deg: 62.0,
                l2_max_deg: 78.0,
            },
            max_g: 1.0,
            pure_azimuth: false,
            rate_hz: 100.0,
            steady_hold_ms: 400,
            ramp_ms: 300,
            target_hold_ms: 400,
            tail_steady_ms: 200,
            single_tilt_deg: 55.0,
            level1_tilt_deg: 50.0,
            level2_tilt_deg: 77.0,
            aim_sigma_scale: 1.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("target count must be one of {VALID_TARGET_COUNTS:?}, got {0}")]
    InvalidTargetCount(u32),
    #[error("a session needs at least one trial")]
    NoTrials,
    #[error("invalid session: {0}")]
    InvalidSession(&'static str),
    #[error("calibration failed: {0}")]
    CalibrationFailed(CalibrationError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Trace(#[from] trace::TraceError),
}

/// Gravity direction of a pose at the given azimuth and tilt.
pub fn pose(azimuth_deg: f64, tilt_deg: f64) -> Vec3 {
    let az = azimuth_deg.to_radians();
    let tilt = tilt_deg.to_radians();
    [tilt.sin() * az.cos(), tilt.sin() * az.sin(), tilt.cos()]
}

const STEADY_POSE: Vec3 = [0.0, 0.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec {
    pub label: DirectionLabel,
    pub level: u8,
    pub pose: Vec3,
}

/// The target poses of one session, in a fixed deterministic order.
pub fn target_layout(n_targets: u32, cfg: &BenchConfig) -> Result<Vec<TargetSpec>, HarnessError> {
    if !VALID_TARGET_COUNTS.contains(&n_targets) {
        return Err(HarnessError::InvalidTargetCount(n_targets));
    }
    let dirs = DirectionLabel::TILT_DIRECTIONS;
    let mut targets = Vec::with_capacity(n_targets as usize);
    match (n_targets, cfg.pure_azimuth) {
        (4, _) => {
            for idx in [0usize, 2, 4, 6] {
                targets.push(TargetSpec {
                    label: dirs[idx],
                    level: 1,
                    pose: pose(idx as f64 * 45.0, cfg.single_tilt_deg),
                });
            }
        }
        (8, _) => {
            for (idx, &label) in dirs.iter().enumerate() {
                targets.push(TargetSpec {
                    label,
                    level: 1,
                    pose: pose(idx as f64 * 45.0, cfg.single_tilt_deg),
                });
            }
        }
        (n, true) => {
            let spacing = 360.0 / n as f64;
            for i in 0..n as usize {
                targets.push(TargetSpec {
                    label: dirs[i % 8],
                    level: 1 + (i / 8) as u8,
                    pose: pose(i as f64 * spacing, cfg.single_tilt_deg),
                });
            }
        }
        (n, false) => {
            for (idx, &label) in dirs.iter().enumerate() {
                targets.push(TargetSpec {
                    label,
                    level: 1,
                    pose: pose(idx as f64 * 45.0, cfg.level1_tilt_deg),
                });
            }
            // level 2 on the cardinals for 12, on every azimuth for 16
            let level2: &[usize] = if n == 12 {
                &[0, 2, 4, 6]
            } else {
                &[0, 1, 2, 3, 4, 5, 6, 7]
            };
            for &idx in level2 {
                targets.push(TargetSpec {
                    label: dirs[idx],
                    level: 2,
                    pose: pose(idx as f64 * 45.0, cfg.level2_tilt_deg),
                });
            }
        }
    }
    debug_assert_eq!(targets.len(), n_targets as usize);
    Ok(targets)
}

/// Whether a session quantizes levels from the tilt angle (two-level
/// sessions) or reads them from explicitly calibrated points.
pub fn levels_engaged(n_targets: u32, cfg: &BenchConfig) -> bool {
    n_targets > 8 && !cfg.pure_azimuth
}

/// Auto-calibration pass: noiseless holds at each calibration pose, run
/// through the same stability detector the trials use.
pub fn build_calibration(
    n_targets: u32,
    cfg: &BenchConfig,
) -> Result<CalibrationSet, HarnessError> {
    let targets = target_layout(n_targets, cfg)?;
    let quantized = levels_engaged(n_targets, cfg);

    let calibration_poses: Vec<(DirectionLabel, u8, Vec3)> = if quantized {
        DirectionLabel::TILT_DIRECTIONS
            .iter()
            .enumerate()
            .map(|(idx, &label)| (label, 1, pose(idx as f64 * 45.0, cfg.level1_tilt_deg)))
            .collect()
    } else {
        targets.iter().map(|t| (t.label, t.level, t.pose)).collect()
    };

    let mut set =
        CalibrationSet::new(cfg.max_g, n_targets).map_err(HarnessError::CalibrationFailed)?;

    let steady_point = first_stable_point(STEADY_POSE, cfg)?;
    set = set
        .calibrate_steady(&steady_point)
        .map_err(HarnessError::CalibrationFailed)?;
    for (label, level, p) in calibration_poses {
        let stable = first_stable_point(p, cfg)?;
        set = set
            .try_add_direction(label, level, &stable)
            .map_err(HarnessError::CalibrationFailed)?;
    }
    Ok(set)
}

fn first_stable_point(
    p: Vec3,
    cfg: &BenchConfig,
) -> Result<crate::preprocess::StablePoint, HarnessError> {
    let hold_ms = cfg.preprocess.dwell_ms + 400;
    let samples = PoseScript::new(STEADY_POSE, cfg.rate_hz) // starting pose irrelevant for a pure hold
        .jump_to(p)
        .hold(hold_ms)
        .build();
    crate::preprocess::detect_stable(samples, cfg.preprocess)?
        .into_iter()
        .next()
        .ok_or(HarnessError::InvalidSession(
            "calibration hold produced no stable point",
        ))
}

// ---------------------------------------------------------------------------
// Trace scripting

/// Builds piecewise pose trajectories sampled at a fixed rate: holds and
/// linear ramps. Used for the benchmark's excursions and handy for
/// scripting test traces.
#[derive(Debug, Clone)]
pub struct PoseScript {
    samples: Vec<AccelSample>,
    rate_hz: f64,
    current: Vec3,
    index: u64,
}

impl PoseScript {
    pub fn new(start: Vec3, rate_hz: f64) -> Self {
        Self {
            samples: Vec::new(),
            rate_hz,
            current: start,
            index: 0,
        }
    }

    fn push(&mut self, p: Vec3) {
        let t = (self.index as f64 * 1000.0 / self.rate_hz).round() as u64;
        self.samples.push(AccelSample::from_axes(t, p));
        self.index += 1;
    }

    fn steps(&self, ms: u64) -> u64 {
        ((ms as f64 / 1000.0 * self.rate_hz).round() as u64).max(1)
    }

    /// Teleports without emitting samples (for scripting the start pose).
    pub fn jump_to(mut self, p: Vec3) -> Self {
        self.current = p;
        self
    }

    pub fn hold(mut self, ms: u64) -> Self {
        for _ in 0..self.steps(ms) {
            let p = self.current;
            self.push(p);
        }
        self
    }

    /// Linear ramp from the current pose, ending exactly at `p`.
    pub fn ramp_to(mut self, p: Vec3, ms: u64) -> Self {
        let steps = self.steps(ms);
        let from = self.current;
        for i in 0..steps {
            let frac = (i + 1) as f64 / steps as f64;
            self.push(vec3::lerp(from, p, frac));
        }
        self.current = p;
        self
    }

    pub fn build(self) -> Vec<AccelSample> {
        self.samples
    }

    /// Adds per-axis Gaussian noise (ax, ay, az order per sample) and
    /// returns the samples.
    pub fn build_noisy(self, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<AccelSample> {
        let mut samples = self.samples;
        if sigma > 0.0 {
            for s in &mut samples {
                let noisy = trace::perturb(s.axes(), s.t, sigma, 0.0, rng);
                *s = AccelSample::from_axes(s.t, noisy);
            }
        }
        samples
    }
}

// ---------------------------------------------------------------------------
// Trials

#[derive(Debug, Clone, Copy, PartialEq)]
struct TrialOutcome {
    hit: bool,
    time_ms: Option<f64>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn trial_seed(session_seed: u64, trial: u32) -> u64 {
    splitmix64(session_seed ^ splitmix64(trial as u64 + 1))
}

fn run_trial(
    session: &TargetSession,
    cfg: &BenchConfig,
    calibration: &CalibrationSet,
    targets: &[TargetSpec],
    quantized: bool,
    trial: u32,
) -> Result<TrialOutcome, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(session.seed, trial));
    let target = targets[rng.random_range(0..targets.len())];

    // subject aim error: where the hand actually settles this trial
    let aim_sigma = session.noise_sigma * cfg.aim_sigma_scale;
    let aimed = if aim_sigma > 0.0 {
        let offset = trace::perturb(target.pose, 0, aim_sigma, 0.0, &mut rng);
        vec3::normalize(offset).unwrap_or(target.pose)
    } else {
        target.pose
    };

    let samples = PoseScript::new(STEADY_POSE, cfg.rate_hz)
        .hold(cfg.steady_hold_ms)
        .ramp_to(aimed, cfg.ramp_ms)
        .hold(cfg.target_hold_ms)
        .ramp_to(STEADY_POSE, cfg.ramp_ms)
        .hold(cfg.tail_steady_ms)
        .build_noisy(session.noise_sigma, &mut rng);

    let mut detector = StableDetector::new(cfg.preprocess)?;
    let mut dispatcher = DirectDispatcher::new(TriggerMode::SingleTilt);
    for s in samples {
        let Some(stable) = detector.push(s) else {
            continue;
        };
        let c = if quantized {
            classify_with_levels(calibration, &cfg.boundaries, &stable)?
        } else {
            classify(calibration, &stable)?
        };
        if let Some(event) = dispatcher.push(stable.t_end, &c) {
            let GestureKind::Direct { label, level } = event.kind else {
                continue;
            };
            let hit = label == target.label && level == target.level;
            let time_ms = event.t.saturating_sub(cfg.steady_hold_ms) as f64;
            return Ok(TrialOutcome {
                hit,
                time_ms: hit.then_some(time_ms),
            });
        }
    }
    Ok(TrialOutcome {
        hit: false,
        time_ms: None,
    })
}

fn validate_session(s: &TargetSession) -> Result<(), HarnessError> {
    if !VALID_TARGET_COUNTS.contains(&s.n_targets) {
        return Err(HarnessError::InvalidTargetCount(s.n_targets));
    }
    if s.trials == 0 {
        return Err(HarnessError::NoTrials);
    }
    if !(s.noise_sigma.is_finite() && s.noise_sigma >= 0.0) {
        return Err(HarnessError::InvalidSession(
            "noise_sigma must be finite and ≥ 0",
        ));
    }
    Ok(())
}

fn aggregate(session: &TargetSession, outcomes: Vec<TrialOutcome>) -> SessionResult {
    let hits = outcomes.iter().filter(|o| o.hit).count() as u32;
    let errors = session.trials - hits;
    let time_sum: f64 = outcomes.iter().filter_map(|o| o.time_ms).sum();
    let mean_time_ms = if hits > 0 {
        time_sum / hits as f64
    } else {
        0.0
    };
    SessionResult {
        n_targets: session.n_targets,
        sigma: session.noise_sigma,
        trials: session.trials,
        hits,
        errors,
        accuracy: hits as f64 / session.trials as f64,
        mean_time_ms,
        seed: session.seed,
    }
}

/// Runs a session; trials execute in parallel when the `parallel`
/// feature is enabled (default). Deterministic for a fixed seed either
/// way: per-trial seeds derive from the session seed and results
/// aggregate in trial order.
pub fn run_target_session(
    session: &TargetSession,
    cfg: &BenchConfig,
) -> Result<SessionResult, HarnessError> {
    validate_session(session)?;
    let calibration = build_calibration(session.n_targets, cfg)?;
    let targets = target_layout(session.n_targets, cfg)?;
    let quantized = levels_engaged(session.n_targets, cfg);

    #[cfg(feature = "parallel")]
    let outcomes: Result<Vec<TrialOutcome>, HarnessError> = (0..session.trials)
        .into_par_iter()
        .map(|trial| run_trial(session, cfg, &calibration, &targets, quantized, trial))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Result<Vec<TrialOutcome>, HarnessError> = (0..session.trials)
        .map(|trial| run_trial(session, cfg, &calibration, &targets, quantized, trial))
        .collect();

    Ok(aggregate(session, outcomes?))
}

/// Always-sequential twin of [`run_target_session`]; the criterion
/// suite benchmarks both, and tests cross-check their equality.
pub fn run_target_session_sequential(
    session: &TargetSession,
    cfg: &BenchConfig,
) -> Result<SessionResult, HarnessError> {
    validate_session(session)?;
    let calibration = build_calibration(session.n_targets, cfg)?;
    let targets = target_layout(session.n_targets, cfg)?;
    let quantized = levels_engaged(session.n_targets, cfg);
    let outcomes: Result<Vec<TrialOutcome>, HarnessError> = (0..session.trials)
        .map(|trial| run_trial(session, cfg, &calibration, &targets, quantized, trial))
        .collect();
    Ok(aggregate(session, outcomes?))
}
