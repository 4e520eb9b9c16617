//! Per-application mapping profiles: gesture → command-string tables
//! with optional modes and mode transitions, loaded from JSON files.
//!
//! Schema:
//!
//! ```json
//! {
//!   "app": "photobrowser",
//!   "trigger": "single-tilt" | "double-tilt",
//!   "levels": false,
//!   "initial": "browsing",
//!   "modes": {
//!     "browsing": {
//!       "entries": [
//!         {"gesture": {"kind": "direct", "label": "right", "level": 1}, "command": "Move right"},
//!         {"gesture": {"kind": "sequence", "labels": ["up", "right"]}, "command": "..."},
//!         {"gesture": {"kind": "click", "click": "tap"}, "command": "..."}
//!       ],
//!       "transitions": [{"gesture": {"kind": "direct", "label": "down-right"}, "to": "editing"}]
//!     }
//!   },
//!   "pointer": {"screen_w": 1024, "screen_h": 768, "gain": 2.0,
//!               "dead_zone_deg": 10.0, "method": "angle-displacement", "tick_ms": 20}
//! }
//! ```
//!
//! `initial` may be omitted when a single mode exists. `level` defaults
//! to 1. `pointer` is optional; when present, replay also runs the
//! pointer tracker over the raw stream.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::DirectionLabel;
use crate::mapping::{ClickKind, GestureEvent, GestureKind, PointerConfig, TriggerMode};

/// A resolved application command, timestamped from its gesture event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Command {
    pub name: String,
    pub t: u64,
}

/// Lookup key derived from a gesture event. Pointer events are
/// continuous output, not commands, so they have no key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GestureKey {
    Direct { label: DirectionLabel, level: u8 },
    Sequence { labels: Vec<DirectionLabel> },
    Click { kind: ClickKind },
}

impl GestureKey {
    pub fn from_event(event: &GestureEvent) -> Option<GestureKey> {
        match &event.kind {
            GestureKind::Direct { label, level } => Some(GestureKey::Direct {
                label: *label,
                level: *level,
            }),
            GestureKind::Sequence { labels } => Some(GestureKey::Sequence {
                labels: labels.clone(),
            }),
            GestureKind::Click { kind } => Some(GestureKey::Click { kind: *kind }),
            GestureKind::Pointer { .. } => None,
        }
    }

    fn describe(&self) -> String {
        match self {
            GestureKey::Direct { label, level } => format!("direct {} level {}", label, level),
            GestureKey::Sequence { labels } => format!(
                "sequence [{}]",
                labels
                    .iter()
                    .map(|l| l.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            GestureKey::Click { kind } => format!("click {:?}", kind),
        }
    }
}

/// One mode's gesture table. Entries are kept in file order; tables are
/// small enough that linear lookup is the simplest correct thing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mode {
    pub entries: Vec<(GestureKey, String)>,
    pub transitions: Vec<(GestureKey, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingProfile {
    pub app_name: String,
    pub trigger: TriggerMode,
    pub levels_enabled: bool,
    pub initial_mode: String,
    pub modes: BTreeMap<String, Mode>,
    pub pointer: Option<PointerConfig>,
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("profile parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unknown direction name: {0:?}")]
    UnknownDirection(String),
    #[error("duplicate gesture key in mode {mode:?}: {key}")]
    DuplicateGestureKey { mode: String, key: String },
    #[error("unknown mode: {0:?}")]
    UnknownMode(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
}

// Raw serde mirror; labels stay strings until validation so bad names
// surface as UnknownDirection instead of a generic parse error.
#[derive(Serialize, Deserialize)]
struct RawProfile {
    app: String,
    trigger: TriggerMode,
    #[serde(default)]
    levels: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial: Option<String>,
    modes: BTreeMap<String, RawMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pointer: Option<PointerConfig>,
}

#[derive(Serialize, Deserialize, Default)]
struct RawMode {
    #[serde(default)]
    entries: Vec<RawEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    transitions: Vec<RawTransition>,
}

#[derive(Serialize, Deserialize)]
struct RawEntry {
    gesture: RawGesture,
    command: String,
}

#[derive(Serialize, Deserialize)]
struct RawTransition {
    gesture: RawGesture,
    to: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawGesture {
    Direct {
        label: String,
        #[serde(default = "default_level")]
        level: u8,
    },
    Sequence {
        labels: Vec<String>,
    },
    Click {
        click: ClickKind,
    },
}

fn default_level() -> u8 {
    1
}

fn parse_label(name: &str) -> Result<DirectionLabel, ProfileError> {
    name.parse::<DirectionLabel>()
        .map_err(|e| ProfileError::UnknownDirection(e.0))
}

fn convert_gesture(raw: &RawGesture) -> Result<GestureKey, ProfileError> {
    match raw {
        RawGesture::Direct { label, level } => {
            let label = parse_label(label)?;
            if label.is_steady() {
                return Err(ProfileError::InvalidProfile(
                    "a direct gesture cannot bind the steady pose".into(),
                ));
            }
            if !(1..=3).contains(level) {
                return Err(ProfileError::InvalidProfile(format!(
                    "level {} out of range for direct gesture {}",
                    level, label
                )));
            }
            Ok(GestureKey::Direct {
                label,
                level: *level,
            })
        }
        RawGesture::Sequence { labels } => {
            if labels.is_empty() {
                return Err(ProfileError::InvalidProfile(
                    "sequence gestures need at least one direction".into(),
                ));
            }
            let labels = labels
                .iter()
                .map(|l| parse_label(l))
                .collect::<Result<Vec<_>, _>>()?;
            if labels.iter().any(|l| l.is_steady()) {
                return Err(ProfileError::InvalidProfile(
                    "sequences cannot contain the steady pose".into(),
                ));
            }
            Ok(GestureKey::Sequence { labels })
        }
        RawGesture::Click { click } => Ok(GestureKey::Click { kind: *click }),
    }
}

fn unconvert_gesture(key: &GestureKey) -> RawGesture {
    match key {
        GestureKey::Direct { label, level } => RawGesture::Direct {
            label: label.as_str().to_string(),
            level: *level,
        },
        GestureKey::Sequence { labels } => RawGesture::Sequence {
            labels: labels.iter().map(|l| l.as_str().to_string()).collect(),
        },
        GestureKey::Click { kind } => RawGesture::Click { click: *kind },
    }
}

impl MappingProfile {
    pub fn from_json_str(text: &str) -> Result<Self, ProfileError> {
        let raw: RawProfile = serde_json::from_str(text)?;
        if raw.app.is_empty() {
            return Err(ProfileError::InvalidProfile("app must be non-empty".into()));
        }
        if raw.modes.is_empty() {
            return Err(ProfileError::InvalidProfile(
                "a profile needs at least one mode".into(),
            ));
        }
        let initial_mode = match raw.initial {
            Some(name) => {
                if !raw.modes.contains_key(&name) {
                    return Err(ProfileError::UnknownMode(name));
                }
                name
            }
            None if raw.modes.len() == 1 => raw.modes.keys().next().expect("one mode").clone(),
            None => {
                return Err(ProfileError::InvalidProfile(
                    "profiles with several modes must name the initial one".into(),
                ))
            }
        };

        let mut modes = BTreeMap::new();
        for (name, raw_mode) in &raw.modes {
            let mut mode = Mode::default();
            for entry in &raw_mode.entries {
                let key = convert_gesture(&entry.gesture)?;
                if entry.command.is_empty() {
                    return Err(ProfileError::InvalidProfile(format!(
                        "empty command for {} in mode {:?}",
                        key.describe(),
                        name
                    )));
                }
                if mode.entries.iter().any(|(k, _)| k == &key) {
                    return Err(ProfileError::DuplicateGestureKey {
                        mode: name.clone(),
                        key: key.describe(),
                    });
                }
                mode.entries.push((key, entry.command.clone()));
            }
            for transition in &raw_mode.transitions {
                let key = convert_gesture(&transition.gesture)?;
                if !raw.modes.contains_key(&transition.to) {
                    return Err(ProfileError::UnknownMode(transition.to.clone()));
                }
                if mode.transitions.iter().any(|(k, _)| k == &key) {
                    return Err(ProfileError::DuplicateGestureKey {
                        mode: name.clone(),
                        key: key.describe(),
                    });
                }
                mode.transitions.push((key, transition.to.clone()));
            }
            modes.insert(name.clone(), mode);
        }

        if let Some(pointer) = &raw.pointer {
            pointer
                .validate()
                .map_err(|e| ProfileError::InvalidProfile(e.to_string()))?;
        }

        Ok(Self {
            app_name: raw.app,
            trigger: raw.trigger,
            levels_enabled: raw.levels,
            initial_mode,
            modes,
            pointer: raw.pointer,
        })
    }

    pub fn to_json_string(&self) -> String {
        let raw = RawProfile {
            app: self.app_name.clone(),
            trigger: self.trigger,
            levels: self.levels_enabled,
            initial: Some(self.initial_mode.clone()),
            modes: self
                .modes
                .iter()
                .map(|(name, mode)| {
                    (
                        name.clone(),
                        RawMode {
                            entries: mode
                                .entries
                                .iter()
                                .map(|(key, command)| RawEntry {
                                    gesture: unconvert_gesture(key),
                                    command: command.clone(),
                                })
                                .collect(),
                            transitions: mode
                                .transitions
                                .iter()
                                .map(|(key, to)| RawTransition {
                                    gesture: unconvert_gesture(key),
                                    to: to.clone(),
                                })
                                .collect(),
                        },
                    )
                })
                .collect(),
            pointer: self.pointer,
        };
        serde_json::to_string_pretty(&raw).expect("profiles always serialize")
    }

    /// Exact-match lookup; events with no entry yield no command.
    pub fn resolve(
        &self,
        mode_name: &str,
        event: &GestureEvent,
    ) -> Result<Option<Command>, ProfileError> {
        let mode = self
            .modes
            .get(mode_name)
            .ok_or_else(|| ProfileError::UnknownMode(mode_name.to_string()))?;
        let Some(key) = GestureKey::from_event(event) else {
            return Ok(None);
        };
        Ok(mode
            .entries
            .iter()
            .find(|(k, _)| k == &key)
            .map(|(_, command)| Command {
                name: command.clone(),
                t: event.t,
            }))
    }

    /// Deterministic mode transition; unmatched events (and unknown
    /// modes) keep the current mode.
    pub fn mode_switch(&self, current_mode: &str, event: &GestureEvent) -> String {
        let Some(mode) = self.modes.get(current_mode) else {
            return current_mode.to_string();
        };
        let Some(key) = GestureKey::from_event(event) else {
            return current_mode.to_string();
        };
        mode.transitions
            .iter()
            .find(|(k, _)| k == &key)
            .map(|(_, to)| to.clone())
            .unwrap_or_else(|| current_mode.to_string())
    }
}

/// Loads and validates a profile file.
pub fn load_profile(path: &Path) -> Result<MappingProfile, ProfileError> {
    MappingProfile::from_json_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use DirectionLabel::{Down, DownRight, Left, Right, Up};

    fn direct(t: u64, label: DirectionLabel) -> GestureEvent {
        GestureEvent {
            t,
            kind: GestureKind::Direct { label, level: 1 },
        }
    }

    fn sequence(t: u64, labels: Vec<DirectionLabel>) -> GestureEvent {
        GestureEvent {
            t,
            kind: GestureKind::Sequence { labels },
        }
    }

    const MINIMAL: &str = r#"{
        "app": "demo",
        "trigger": "single-tilt",
        "modes": {
            "main": {
                "entries": [
                    {"gesture": {"kind": "direct", "label": "right"}, "command": "Next"},
                    {"gesture": {"kind": "sequence", "labels": ["up", "right"]}, "command": "Brighten"},
                    {"gesture": {"kind": "click", "click": "tap"}, "command": "Select"}
                ]
            }
        }
    }"#;

    #[test]
    fn loads_minimal_profile() {
        let p = MappingProfile::from_json_str(MINIMAL).unwrap();
        assert_eq!(p.app_name, "demo");
        assert_eq!(p.trigger, TriggerMode::SingleTilt);
        assert!(!p.levels_enabled);
        assert_eq!(p.initial_mode, "main");
        assert_eq!(p.modes["main"].entries.len(), 3);
    }

    #[test]
    fn resolve_matches_exactly_and_drops_unmatched() {
        let p = MappingProfile::from_json_str(MINIMAL).unwrap();
        let cmd = p.resolve("main", &direct(5, Right)).unwrap().unwrap();
        assert_eq!(
            cmd,
            Command {
                name: "Next".into(),
                t: 5
            }
        );
        assert!(p.resolve("main", &direct(5, Left)).unwrap().is_none());
        let cmd = p
            .resolve("main", &sequence(9, vec![Up, Right]))
            .unwrap()
            .unwrap();
        assert_eq!(cmd.name, "Brighten");
        // order matters for sequences
        assert!(p
            .resolve("main", &sequence(9, vec![Right, Up]))
            .unwrap()
            .is_none());
        assert!(matches!(
            p.resolve("nope", &direct(5, Right)),
            Err(ProfileError::UnknownMode(_))
        ));
    }

    #[test]
    fn unknown_direction_is_reported_by_name() {
        let text = MINIMAL.replace("\"right\"", "\"north\"");
        match MappingProfile::from_json_str(&text) {
            Err(ProfileError::UnknownDirection(name)) => assert_eq!(name, "north"),
            other => panic!("expected UnknownDirection, got {:?}", other),
        }
    }

    #[test]
    fn duplicate_gesture_keys_are_rejected() {
        let text = r#"{
            "app": "demo", "trigger": "single-tilt",
            "modes": {"main": {"entries": [
                {"gesture": {"kind": "direct", "label": "right"}, "command": "A"},
                {"gesture": {"kind": "direct", "label": "right", "level": 1}, "command": "B"}
            ]}}
        }"#;
        assert!(matches!(
            MappingProfile::from_json_str(text),
            Err(ProfileError::DuplicateGestureKey { .. })
        ));
    }

    #[test]
    fn multi_mode_requires_initial_and_valid_transitions() {
        let text = r#"{
            "app": "demo", "trigger": "single-tilt",
            "modes": {"a": {"entries": []}, "b": {"entries": []}}
        }"#;
        assert!(matches!(
            MappingProfile::from_json_str(text),
            Err(ProfileError::InvalidProfile(_))
        ));

        let text = r#"{
            "app": "demo", "trigger": "single-tilt", "initial": "a",
            "modes": {"a": {"entries": [], "transitions": [
                {"gesture": {"kind": "direct", "label": "up"}, "to": "missing"}
            ]}}
        }"#;
        assert!(matches!(
            MappingProfile::from_json_str(text),
            Err(ProfileError::UnknownMode(_))
        ));
    }

    #[test]
    fn mode_switch_follows_transitions_and_keeps_mode_otherwise() {
        let text = r#"{
            "app": "demo", "trigger": "single-tilt", "initial": "browsing",
            "modes": {
                "browsing": {
                    "entries": [{"gesture": {"kind": "direct", "label": "down-right"}, "command": "View"}],
                    "transitions": [{"gesture": {"kind": "direct", "label": "down-right"}, "to": "editing"}]
                },
                "editing": {
                    "entries": [{"gesture": {"kind": "direct", "label": "left"}, "command": "Close"}],
                    "transitions": [{"gesture": {"kind": "direct", "label": "left"}, "to": "browsing"}]
                }
            }
        }"#;
        let p = MappingProfile::from_json_str(text).unwrap();
        assert_eq!(p.mode_switch("browsing", &direct(0, DownRight)), "editing");
        assert_eq!(p.mode_switch("browsing", &direct(0, Up)), "browsing");
        assert_eq!(p.mode_switch("editing", &direct(0, Left)), "browsing");
        assert_eq!(p.mode_switch("editing", &direct(0, Down)), "editing");
    }

    #[test]
    fn round_trip_preserves_semantics() {
        let p = MappingProfile::from_json_str(MINIMAL).unwrap();
        let text = p.to_json_string();
        let reloaded = MappingProfile::from_json_str(&text).unwrap();
        assert_eq!(p, reloaded);
    }

    #[test]
    fn steady_is_not_a_bindable_gesture() {
        let text = MINIMAL.replace("\"right\"", "\"steady\"");
        assert!(matches!(
            MappingProfile::from_json_str(&text),
            Err(ProfileError::InvalidProfile(_))
        ));
    }
}
