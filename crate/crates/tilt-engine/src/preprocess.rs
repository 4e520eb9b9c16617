//! Sliding-window stability detection over raw accelerometer streams.
//!
//! A window of consecutive samples is "stable" when the Euclidean norm of
//! its per-axis population standard deviations falls at or below a
//! threshold. Once stability has persisted for the dwell period, the
//! window average is emitted as a [`StablePoint`], the classifier's
//! input. A continuous stable episode emits at most once; the episode
//! ends when a window fails the threshold or the window mean drifts more
//! than twice the threshold away from the episode's first mean, after
//! which a new episode (and a new emission) may begin.

use std::collections::VecDeque;

use thiserror::Error;

use crate::trace::AccelSample;
use crate::vec3::{self, Vec3};

pub const DEFAULT_WINDOW_SIZE: usize = 6;
pub const DEFAULT_STDDEV_THRESHOLD_G: f64 = 0.05;
pub const DEFAULT_DWELL_MS: u64 = 200;

/// Episode re-anchor distance, as a multiple of the stddev threshold.
const EPISODE_DRIFT_FACTOR: f64 = 2.0;

/// The averaged 3D point of a window that passed the stability test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StablePoint {
    /// Window average, in g.
    pub centroid: Vec3,
    /// Timestamp of the first sample of the emitting window.
    pub t_start: u64,
    /// Timestamp of the last sample of the emitting window.
    pub t_end: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessConfig {
    pub window_size: usize,
    /// Stability threshold on the window stddev norm, in g.
    pub stddev_threshold: f64,
    /// Minimum hold duration before a pose counts as intentional.
    pub dwell_ms: u64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            window_size: DEFAULT_WINDOW_SIZE,
            stddev_threshold: DEFAULT_STDDEV_THRESHOLD_G,
            dwell_ms: DEFAULT_DWELL_MS,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.window_size < 2 {
            return Err(PreprocessError::InvalidConfig("window_size must be ≥ 2"));
        }
        match self.stddev_threshold.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => {}
            _ => {
                return Err(PreprocessError::InvalidConfig(
                    "stddev_threshold must be > 0",
                ))
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("wrong window length: expected {expected}, got {got}")]
    WrongWindowLength { expected: usize, got: usize },
    #[error("invalid preprocessing config: {0}")]
    InvalidConfig(&'static str),
}

/// Euclidean norm of the per-axis population standard deviations.
/// Bit-identical samples give exactly 0 on each axis, so a held pose is
/// never misread as spread by float rounding of the mean.
pub fn window_stddev(window: &[AccelSample], window_size: usize) -> Result<f64, PreprocessError> {
    if window.len() != window_size {
        return Err(PreprocessError::WrongWindowLength {
            expected: window_size,
            got: window.len(),
        });
    }
    Ok(stddev_norm(window.iter().map(|s| s.axes())))
}

fn stddev_norm<I>(points: I) -> f64
where
    I: Iterator<Item = Vec3> + Clone,
{
    let n = points.clone().count();
    debug_assert!(n >= 1);
    let mut sum_sq = 0.0;
    for axis in 0..3 {
        let values = points.clone().map(|p| p[axis]);
        let first = values.clone().next().expect("non-empty window");
        if values.clone().all(|v| v == first) {
            continue;
        }
        let mean = values.clone().sum::<f64>() / n as f64;
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        sum_sq += var;
    }
    sum_sq.sqrt()
}

fn window_mean(window: &VecDeque<AccelSample>) -> Vec3 {
    let n = window.len() as f64;
    let mut sum = [0.0; 3];
    for s in window {
        sum = vec3::add(sum, s.axes());
    }
    vec3::scale(sum, 1.0 / n)
}

#[derive(Debug, Clone, Copy)]
struct Episode {
    anchor: Vec3,
    stable_since: u64,
    emitted: bool,
}

/// Streaming transducer from raw samples to [`StablePoint`]s.
///
/// One instance is single-consumer; distinct instances are independent.
#[derive(Debug, Clone)]
pub struct StableDetector {
    cfg: PreprocessConfig,
    window: VecDeque<AccelSample>,
    episode: Option<Episode>,
}

impl StableDetector {
    pub fn new(cfg: PreprocessConfig) -> Result<Self, PreprocessError> {
        cfg.validate()?;
        Ok(Self {
            window: VecDeque::with_capacity(cfg.window_size),
            cfg,
            episode: None,
        })
    }

    pub fn config(&self) -> &PreprocessConfig {
        &self.cfg
    }

    /// Feeds one sample; returns a stable point when a dwell-confirmed
    /// episode emits. Timestamps must be non-decreasing.
    pub fn push(&mut self, sample: AccelSample) -> Option<StablePoint> {
        self.window.push_back(sample);
        if self.window.len() > self.cfg.window_size {
            self.window.pop_front();
        }
        if self.window.len() < self.cfg.window_size {
            return None;
        }

        let sd = stddev_norm(self.window.iter().map(|s| s.axes()));
        if sd > self.cfg.stddev_threshold {
            self.episode = None;
            return None;
        }

        let mean = window_mean(&self.window);
        let drift_limit = EPISODE_DRIFT_FACTOR * self.cfg.stddev_threshold;
        match &self.episode {
            Some(ep) if vec3::dist(mean, ep.anchor) <= drift_limit => {}
            // first stable window, or the pose moved: re-anchor
            _ => {
                self.episode = Some(Episode {
                    anchor: mean,
                    stable_since: sample.t,
                    emitted: false,
                });
            }
        }

        let ep = self.episode.as_mut().expect("episode set above");
        if !ep.emitted && sample.t.saturating_sub(ep.stable_since) >= self.cfg.dwell_ms {
            ep.emitted = true;
            return Some(StablePoint {
                centroid: mean,
                t_start: self.window.front().expect("full window").t,
                t_end: sample.t,
            });
        }
        None
    }

    /// Drops buffered samples and the current episode.
    pub fn reset(&mut self) {
        self.window.clear();
        self.episode = None;
    }
}

/// Runs the detector over a whole sample sequence.
pub fn detect_stable<I>(
    samples: I,
    cfg: PreprocessConfig,
) -> Result<Vec<StablePoint>, PreprocessError>
where
    I: IntoIterator<Item = AccelSample>,
{
    let mut detector = StableDetector::new(cfg)?;
    Ok(samples
        .into_iter()
        .filter_map(|s| detector.push(s))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{synth_trace, SynthSpec};

    fn flat(n: usize, pose: Vec3) -> Vec<AccelSample> {
        (0..n)
            .map(|i| AccelSample::from_axes(i as u64 * 10, pose))
            .collect()
    }

    #[test]
    fn stddev_of_identical_points_is_zero() {
        let w = flat(6, [0.0, 0.0, 1.0]);
        assert_eq!(window_stddev(&w, 6).unwrap(), 0.0);
        // a value whose repeated mean rounds (0.1) must still read as zero spread
        let w = flat(6, [0.1, 0.1, 0.1]);
        assert_eq!(window_stddev(&w, 6).unwrap(), 0.0);
    }

    #[test]
    fn stddev_hand_computed_case() {
        // x = {1,1,1,-1,-1,-1}, y = z = 0: per-axis stddevs (1,0,0), norm 1
        let w: Vec<AccelSample> = [1.0, 1.0, 1.0, -1.0, -1.0, -1.0]
            .iter()
            .enumerate()
            .map(|(i, &x)| AccelSample::new(i as u64 * 10, x, 0.0, 0.0))
            .collect();
        assert_eq!(window_stddev(&w, 6).unwrap(), 1.0);
    }

    #[test]
    fn stddev_rejects_wrong_length() {
        let w = flat(5, [0.0, 0.0, 1.0]);
        assert!(matches!(
            window_stddev(&w, 6),
            Err(PreprocessError::WrongWindowLength {
                expected: 6,
                got: 5
            })
        ));
    }

    #[test]
    fn one_stable_episode_emits_once() {
        // 100 identical samples over 1000 ms, defaults: exactly one point
        let points =
            detect_stable(flat(100, [0.0, 0.0, 1.0]), PreprocessConfig::default()).unwrap();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].centroid, [0.0, 0.0, 1.0]);
        // window fills at t = 50, dwell 200 expires at t = 250
        assert_eq!(points[0].t_end, 250);
    }

    #[test]
    fn white_noise_yields_no_stable_points() {
        let spec = SynthSpec {
            noise_sigma: 0.5,
            duration_ms: 10_000,
            seed: 3,
            ..SynthSpec::default()
        };
        let trace = synth_trace(&spec).unwrap();
        let points = detect_stable(trace.samples, PreprocessConfig::default()).unwrap();
        assert!(
            points.is_empty(),
            "got {} points from white noise",
            points.len()
        );
    }

    #[test]
    fn two_poses_emit_two_points() {
        let mut samples = synth_trace(&SynthSpec {
            direction: [0.0, 0.0, 1.0],
            noise_sigma: 0.01,
            duration_ms: 500,
            seed: 1,
            ..SynthSpec::default()
        })
        .unwrap()
        .samples;
        let second = synth_trace(&SynthSpec {
            direction: [1.0, 0.0, 0.0],
            noise_sigma: 0.01,
            duration_ms: 500,
            seed: 2,
            ..SynthSpec::default()
        })
        .unwrap();
        samples.extend(
            second
                .samples
                .iter()
                .map(|s| AccelSample { t: s.t + 500, ..*s }),
        );

        let points = detect_stable(samples, PreprocessConfig::default()).unwrap();
        assert_eq!(
            points.len(),
            2,
            "expected one point per pose, got {:?}",
            points
        );
        assert!(vec3::dist(points[0].centroid, [0.0, 0.0, 1.0]) < 0.02);
        assert!(vec3::dist(points[1].centroid, [1.0, 0.0, 0.0]) < 0.02);
    }

    #[test]
    fn emission_count_is_translation_invariant() {
        let spec = SynthSpec {
            noise_sigma: 0.02,
            duration_ms: 2000,
            seed: 9,
            ..SynthSpec::default()
        };
        let base = synth_trace(&spec).unwrap().samples;
        let reference = detect_stable(base.clone(), PreprocessConfig::default())
            .unwrap()
            .len();
        for shift in [1u64, 13, 500, 100_000] {
            let shifted: Vec<AccelSample> = base
                .iter()
                .map(|s| AccelSample {
                    t: s.t + shift,
                    ..*s
                })
                .collect();
            let n = detect_stable(shifted, PreprocessConfig::default())
                .unwrap()
                .len();
            assert_eq!(n, reference, "shift {} changed emission count", shift);
        }
    }

    #[test]
    fn degenerate_config_emits_once_per_episode() {
        // dwell 0, threshold ∞: every full window is stable, one episode, one point
        let cfg = PreprocessConfig {
            dwell_ms: 0,
            stddev_threshold: f64::INFINITY,
            ..PreprocessConfig::default()
        };
        let points = detect_stable(flat(50, [0.0, 0.0, 1.0]), cfg).unwrap();
        assert_eq!(points.len(), 1);
    }

    #[test]
    fn emitted_centroid_matches_some_input_window() {
        let spec = SynthSpec {
            noise_sigma: 0.015,
            duration_ms: 3000,
            seed: 21,
            ..SynthSpec::default()
        };
        let samples = synth_trace(&spec).unwrap().samples;
        let cfg = PreprocessConfig::default();
        let points = detect_stable(samples.clone(), cfg).unwrap();
        assert!(!points.is_empty());
        for p in points {
            let found = samples.windows(cfg.window_size).any(|w| {
                let mean = {
                    let mut sum = [0.0; 3];
                    for s in w {
                        sum = vec3::add(sum, s.axes());
                    }
                    vec3::scale(sum, 1.0 / cfg.window_size as f64)
                };
                mean == p.centroid
                    && window_stddev(w, cfg.window_size).unwrap() <= cfg.stddev_threshold
            });
            assert!(
                found,
                "centroid {:?} is not the mean of any stable window",
                p
            );
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(StableDetector::new(PreprocessConfig {
            window_size: 1,
            ..PreprocessConfig::default()
        })
        .is_err());
        assert!(StableDetector::new(PreprocessConfig {
            stddev_threshold: 0.0,
            ..PreprocessConfig::default()
        })
        .is_err());
    }
}
