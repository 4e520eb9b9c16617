//! Tilt-gesture recognition engine.
//!
//! Turns 3D-accelerometer sample streams into application commands:
//! raw samples are filtered into stable tilt poses, classified against a
//! calibrated set of 3D direction points by minimum distance, and mapped
//! to commands through per-application profiles (direct gestures, tilt
//! sequences, or pointer movement with tap/shake clicks).
//!
//! The crate also ships a synthetic target-selection benchmark that stands
//! in for a human subject driving the physical sensor: parameterized
//! excursion traces are generated, pushed through the full pipeline, and
//! scored for accuracy and selection time.

pub mod calibration;
pub mod classify;
pub mod harness;
pub mod mapping;
pub mod pipeline;
pub mod preprocess;
pub mod profiles;
pub mod trace;
pub mod vec3;

pub use calibration::{CalibrationSet, DirectionLabel};
pub use classify::{classify, classify_with_levels, quantize_level, tilt_angle, Classification};
pub use harness::{
    run_target_session, run_target_session_sequential, SessionResult, TargetSession,
};
pub use mapping::{GestureEvent, GestureKind, TriggerMode};
pub use preprocess::{detect_stable, PreprocessConfig, StableDetector, StablePoint};
pub use profiles::{load_profile, MappingProfile};
pub use trace::{parse_trace, serialize_trace, synth_trace, AccelSample, SynthSpec, Trace};
