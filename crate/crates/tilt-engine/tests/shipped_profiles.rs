//! Golden checks of the three profile files shipped in `profiles/`.

use std::path::PathBuf;

use tilt_engine::calibration::DirectionLabel::{self, Down, DownRight, Left, Right, Up};
use tilt_engine::mapping::{ClickKind, GestureEvent, GestureKind, PointerMethod, TriggerMode};
use tilt_engine::profiles::{load_profile, GestureKey, MappingProfile};

fn shipped(name: &str) -> MappingProfile {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../profiles")
        .join(name);
    load_profile(&path).unwrap_or_else(|e| panic!("loading {}: {}", name, e))
}

fn direct_command(profile: &MappingProfile, mode: &str, label: DirectionLabel) -> Option<String> {
    let event = GestureEvent {
        t: 0,
        kind: GestureKind::Direct { label, level: 1 },
    };
    profile.resolve(mode, &event).unwrap().map(|c| c.name)
}

fn sequence_command(
    profile: &MappingProfile,
    mode: &str,
    labels: Vec<DirectionLabel>,
) -> Option<String> {
    let event = GestureEvent {
        t: 0,
        kind: GestureKind::Sequence { labels },
    };
    profile.resolve(mode, &event).unwrap().map(|c| c.name)
}

#[test]
fn slideshow_profile_matches_its_table() {
    let p = shipped("slideshow.json");
    assert_eq!(p.trigger, TriggerMode::DoubleTilt);
    assert!(!p.levels_enabled);
    assert_eq!(p.modes.len(), 1);
    let mode = &p.modes["show"];
    assert_eq!(mode.entries.len(), 5);

    for (label, command) in [
        (Right, "Next"),
        (Left, "Previous"),
        (Up, "Home"),
        (Down, "End"),
        (DownRight, "Close"),
    ] {
        assert_eq!(
            direct_command(&p, "show", label).as_deref(),
            Some(command),
            "slideshow {} row",
            label
        );
    }
}

#[test]
fn photobrowser_profile_matches_its_table() {
    let p = shipped("photobrowser.json");
    assert_eq!(p.trigger, TriggerMode::SingleTilt);
    assert_eq!(p.initial_mode, "browsing");
    assert_eq!(p.modes.len(), 2);
    assert_eq!(p.modes["browsing"].entries.len(), 5);
    assert_eq!(p.modes["editing"].entries.len(), 4);

    for (label, command) in [
        (Right, "Move right"),
        (Left, "Move left"),
        (Up, "Move up"),
        (Down, "Move down"),
        (DownRight, "View picture"),
    ] {
        assert_eq!(
            direct_command(&p, "browsing", label).as_deref(),
            Some(command),
            "browsing {} row",
            label
        );
    }

    assert_eq!(
        sequence_command(&p, "editing", vec![Up, Right]).as_deref(),
        Some("Increase brightness")
    );
    assert_eq!(
        sequence_command(&p, "editing", vec![Up, Left]).as_deref(),
        Some("Decrease brightness")
    );
    assert_eq!(
        direct_command(&p, "editing", Down).as_deref(),
        Some("Black and white filter")
    );
    assert_eq!(
        direct_command(&p, "editing", Left).as_deref(),
        Some("Close")
    );

    // the mode split resolves the Left overload: browsing moves, editing closes
    assert_eq!(
        direct_command(&p, "browsing", Left).as_deref(),
        Some("Move left")
    );

    // opening a picture enters editing; closing it returns
    let view = GestureEvent {
        t: 0,
        kind: GestureKind::Direct {
            label: DownRight,
            level: 1,
        },
    };
    assert_eq!(p.mode_switch("browsing", &view), "editing");
    let close = GestureEvent {
        t: 0,
        kind: GestureKind::Direct {
            label: Left,
            level: 1,
        },
    };
    assert_eq!(p.mode_switch("editing", &close), "browsing");
}

#[test]
fn flightsim_profile_is_pointer_driven() {
    let p = shipped("flightsim.json");
    let pointer = p.pointer.expect("flightsim needs a pointer config");
    assert_eq!(pointer.method, PointerMethod::AngleDisplacement);
    assert!(pointer.screen_w > 0 && pointer.screen_h > 0);

    let mode = &p.modes["flight"];
    assert_eq!(mode.entries.len(), 2);
    let tap = GestureEvent {
        t: 0,
        kind: GestureKind::Click {
            kind: ClickKind::Tap,
        },
    };
    assert_eq!(
        p.resolve("flight", &tap).unwrap().unwrap().name,
        "Left click"
    );
    let shake = GestureEvent {
        t: 0,
        kind: GestureKind::Click {
            kind: ClickKind::Shake,
        },
    };
    assert_eq!(
        p.resolve("flight", &shake).unwrap().unwrap().name,
        "Right click"
    );
}

#[test]
fn shipped_profiles_round_trip() {
    for name in ["slideshow.json", "photobrowser.json", "flightsim.json"] {
        let p = shipped(name);
        let reloaded = MappingProfile::from_json_str(&p.to_json_string()).unwrap();
        assert_eq!(p, reloaded, "{} did not round-trip", name);
    }
}

#[test]
fn every_resolvable_command_is_a_table_command() {
    // no phantom commands: resolving any representable gesture key yields
    // either nothing or a string the profile declares
    for name in ["slideshow.json", "photobrowser.json", "flightsim.json"] {
        let p = shipped(name);
        let declared: std::collections::BTreeSet<&str> = p
            .modes
            .values()
            .flat_map(|m| m.entries.iter().map(|(_, c)| c.as_str()))
            .collect();
        for mode in p.modes.keys() {
            for label in DirectionLabel::TILT_DIRECTIONS {
                for level in 1..=3u8 {
                    let event = GestureEvent {
                        t: 0,
                        kind: GestureKind::Direct { label, level },
                    };
                    if let Some(cmd) = p.resolve(mode, &event).unwrap() {
                        assert!(declared.contains(cmd.name.as_str()));
                    }
                }
            }
        }
        let _ = GestureKey::from_event(&GestureEvent {
            t: 0,
            kind: GestureKind::Pointer { dx: 1.0, dy: 0.0 },
        });
    }
}
