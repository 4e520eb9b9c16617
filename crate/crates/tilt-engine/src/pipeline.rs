//! End-to-end replay pipeline: raw samples in, gesture events out.
//!
//! Wires the stable-point detector, the classifier, the direct and
//! sequence dispatchers, the tap detector, and (when configured) the
//! pointer tracker into one single-consumer engine. Command resolution
//! against a profile stays outside; the engine only produces events.

use thiserror::Error;

use crate::calibration::CalibrationSet;
use crate::classify::{
    classify, classify_with_levels, Classification, ClassifyError, LevelBoundaries,
};
use crate::mapping::{
    DirectDispatcher, GestureEvent, MappingError, PointerConfig, PointerTracker, SequenceStep,
    SequenceTracker, TapConfig, TapDetector, TriggerMode, DEFAULT_MAX_SEQUENCE_LEN,
    DEFAULT_PAIR_WINDOW_MS,
};
use crate::preprocess::{PreprocessConfig, PreprocessError, StableDetector};
use crate::trace::AccelSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub preprocess: PreprocessConfig,
    pub boundaries: LevelBoundaries,
    pub levels_enabled: bool,
    pub pair_window_ms: u64,
    pub max_sequence_len: usize,
    pub tap: TapConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default(),
            boundaries: LevelBoundaries::default(),
            levels_enabled: false,
            pair_window_ms: DEFAULT_PAIR_WINDOW_MS,
            max_sequence_len: DEFAULT_MAX_SEQUENCE_LEN,
            tap: TapConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
}

/// One engine instance owns private dispatcher state; run one per
/// stream. Calibration is borrowed immutably and can be shared.
pub struct ReplayEngine<'a> {
    calibration: &'a CalibrationSet,
    cfg: EngineConfig,
    detector: StableDetector,
    direct: DirectDispatcher,
    sequence: SequenceTracker,
    tap: TapDetector,
    pointer: Option<(PointerTracker, u64)>,
    classifications: Vec<(u64, Classification)>,
    overflow_count: usize,
}

impl<'a> ReplayEngine<'a> {
    pub fn new(
        calibration: &'a CalibrationSet,
        cfg: EngineConfig,
        trigger: TriggerMode,
        pointer: Option<PointerConfig>,
    ) -> Result<Self, EngineError> {
        cfg.boundaries.validate()?;
        let pointer = match pointer {
            Some(p) => Some((PointerTracker::new(p)?, 0)),
            None => None,
        };
        Ok(Self {
            calibration,
            detector: StableDetector::new(cfg.preprocess)?,
            direct: DirectDispatcher::with_pair_window(trigger, cfg.pair_window_ms),
            sequence: SequenceTracker::new(cfg.max_sequence_len),
            tap: TapDetector::new(cfg.tap),
            pointer,
            cfg,
            classifications: Vec::new(),
            overflow_count: 0,
        })
    }

    /// Feeds one raw sample; returns the events it produced, in order:
    /// clicks, pointer tick, then any stable-pose events.
    pub fn push(&mut self, sample: AccelSample) -> Result<Vec<GestureEvent>, EngineError> {
        let mut out = self.tap.push(&sample);

        if let Some((tracker, next_tick)) = &mut self.pointer {
            if sample.t >= *next_tick {
                out.push(tracker.step(sample.t, sample.axes()));
                *next_tick = sample.t + tracker.config().tick_ms;
            }
        }

        if let Some(stable) = self.detector.push(sample) {
            let c = if self.cfg.levels_enabled {
                classify_with_levels(self.calibration, &self.cfg.boundaries, &stable)?
            } else {
                classify(self.calibration, &stable)?
            };
            let t = stable.t_end;
            self.classifications.push((t, c));
            if let Some(event) = self.direct.push(t, &c) {
                out.push(event);
            }
            match self.sequence.push(t, &c) {
                SequenceStep::Event(event) => out.push(event),
                SequenceStep::Overflow { .. } => self.overflow_count += 1,
                SequenceStep::None => {}
            }
        }
        Ok(out)
    }

    /// Flushes any pending tap at end of stream.
    pub fn finish(&mut self) -> Vec<GestureEvent> {
        self.tap.finish().into_iter().collect()
    }

    /// Runs a whole sample sequence and returns every event.
    pub fn run<I>(&mut self, samples: I) -> Result<Vec<GestureEvent>, EngineError>
    where
        I: IntoIterator<Item = AccelSample>,
    {
        let mut events = Vec::new();
        for s in samples {
            events.extend(self.push(s)?);
        }
        events.extend(self.finish());
        Ok(events)
    }

    /// Classifications seen so far, timestamped at their window end.
    pub fn classifications(&self) -> &[(u64, Classification)] {
        &self.classifications
    }

    /// Sequence-overflow diagnostics (reset events, not gestures).
    pub fn overflow_count(&self) -> usize {
        self.overflow_count
    }

    pub fn pointer_position(&self) -> Option<(f64, f64)> {
        self.pointer.as_ref().map(|(t, _)| t.position())
    }
}
