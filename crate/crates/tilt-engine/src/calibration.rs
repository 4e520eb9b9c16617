//! Calibrated 3D tilt poses and the virtual-border admission rule.
//!
//! Tilt directions are stored as points in 3D acceleration space. A new
//! point is admitted only if its distance to the steady pose and to every
//! already-calibrated point exceeds the virtual border: the maximum
//! acceleration magnitude divided by the desired number of directions.
//! Sets are immutable values: operations return new sets, so a failed
//! admission never corrupts the current calibration.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::StablePoint;
use crate::vec3::{self, Vec3};

/// Default maximum acceleration magnitude for static tilts: gravity.
pub const DEFAULT_MAX_G: f64 = 1.0;

/// The eight tilt directions plus the steady rest pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionLabel {
    Steady,
    Up,
    Down,
    Left,
    Right,
    UpLeft,
    UpRight,
    DownLeft,
    DownRight,
}

impl DirectionLabel {
    /// The eight tilt directions in counter-clockwise azimuth order,
    /// starting at Right (azimuth 0°).
    pub const TILT_DIRECTIONS: [DirectionLabel; 8] = [
        DirectionLabel::Right,
        DirectionLabel::UpRight,
        DirectionLabel::Up,
        DirectionLabel::UpLeft,
        DirectionLabel::Left,
        DirectionLabel::DownLeft,
        DirectionLabel::Down,
        DirectionLabel::DownRight,
    ];

    /// Azimuth in degrees (Right = 0, Up = 90, ...); `None` for Steady.
    pub fn azimuth_deg(self) -> Option<f64> {
        let idx = Self::TILT_DIRECTIONS.iter().position(|&d| d == self)?;
        Some(idx as f64 * 45.0)
    }

    pub fn is_steady(self) -> bool {
        self == DirectionLabel::Steady
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DirectionLabel::Steady => "steady",
            DirectionLabel::Up => "up",
            DirectionLabel::Down => "down",
            DirectionLabel::Left => "left",
            DirectionLabel::Right => "right",
            DirectionLabel::UpLeft => "up-left",
            DirectionLabel::UpRight => "up-right",
            DirectionLabel::DownLeft => "down-left",
            DirectionLabel::DownRight => "down-right",
        }
    }
}

impl fmt::Display for DirectionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DirectionLabel {
    type Err = UnknownDirection;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "steady" => Ok(DirectionLabel::Steady),
            "up" => Ok(DirectionLabel::Up),
            "down" => Ok(DirectionLabel::Down),
            "left" => Ok(DirectionLabel::Left),
            "right" => Ok(DirectionLabel::Right),
            "up-left" | "upleft" => Ok(DirectionLabel::UpLeft),
            "up-right" | "upright" => Ok(DirectionLabel::UpRight),
            "down-left" | "downleft" => Ok(DirectionLabel::DownLeft),
            "down-right" | "downright" => Ok(DirectionLabel::DownRight),
            _ => Err(UnknownDirection(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown direction name: {0:?}")]
pub struct UnknownDirection(pub String);

/// One calibrated direction pose. `level` is 1 unless per-level centroids
/// are calibrated explicitly; (label, level) is unique within a set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedPoint {
    pub label: DirectionLabel,
    pub level: u8,
    pub centroid: Vec3,
}

/// Steady pose, calibrated direction points, and the border parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSet {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub steady: Option<Vec3>,
    pub max_g: f64,
    pub virtual_border: f64,
    pub points: Vec<CalibratedPoint>,
}

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("border violation: {distance:.4} g to {nearest} (level {level}) is within the virtual border {border:.4} g")]
    BorderViolation {
        nearest: DirectionLabel,
        level: u8,
        distance: f64,
        border: f64,
    },
    #[error("duplicate calibration for {label} level {level}")]
    DuplicateLabel { label: DirectionLabel, level: u8 },
    #[error("steady state is not calibrated yet")]
    SteadyMissing,
    #[error("level must be 1..=3, got {0}")]
    InvalidLevel(u8),
    #[error("invalid calibration set: {0}")]
    InvalidSet(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("calibration file parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Maximum acceleration magnitude divided by the desired number of
/// calibrated directions.
pub fn virtual_border(max_g: f64, n_directions: u32) -> Result<f64, CalibrationError> {
    if !(max_g.is_finite() && max_g > 0.0) {
        return Err(CalibrationError::InvalidArgument("max_g must be positive"));
    }
    if n_directions == 0 {
        return Err(CalibrationError::InvalidArgument(
            "n_directions must be at least 1",
        ));
    }
    Ok(max_g / n_directions as f64)
}

impl CalibrationSet {
    /// Empty set with the border fixed from the declared direction count.
    /// The border is fixed at creation; recomputing it as points arrive
    /// would retroactively invalidate earlier admissions.
    pub fn new(max_g: f64, n_directions: u32) -> Result<Self, CalibrationError> {
        Ok(Self {
            steady: None,
            max_g,
            virtual_border: virtual_border(max_g, n_directions)?,
            points: Vec::new(),
        })
    }

    /// Sets (or explicitly recalibrates) the steady pose. Every existing
    /// direction point is re-checked against the border rule.
    pub fn calibrate_steady(&self, p: &StablePoint) -> Result<Self, CalibrationError> {
        if let Some(conflict) = self.nearest_violation(p.centroid, &self.points) {
            return Err(conflict);
        }
        let mut next = self.clone();
        next.steady = Some(p.centroid);
        Ok(next)
    }

    /// Appends a direction point if it clears the border against the
    /// steady pose and every existing point. Never mutates on error.
    pub fn try_add_direction(
        &self,
        label: DirectionLabel,
        level: u8,
        p: &StablePoint,
    ) -> Result<Self, CalibrationError> {
        if label.is_steady() {
            return Err(CalibrationError::InvalidArgument(
                "use calibrate_steady for the steady pose",
            ));
        }
        if !(1..=3).contains(&level) {
            return Err(CalibrationError::InvalidLevel(level));
        }
        let steady = self.steady.ok_or(CalibrationError::SteadyMissing)?;
        if self
            .points
            .iter()
            .any(|q| q.label == label && q.level == level)
        {
            return Err(CalibrationError::DuplicateLabel { label, level });
        }

        let steady_dist = vec3::dist(p.centroid, steady);
        let mut nearest: (DirectionLabel, u8, f64) = (DirectionLabel::Steady, 1, steady_dist);
        for q in &self.points {
            let d = vec3::dist(p.centroid, q.centroid);
            if d < nearest.2 {
                nearest = (q.label, q.level, d);
            }
        }
        if nearest.2 <= self.virtual_border {
            return Err(CalibrationError::BorderViolation {
                nearest: nearest.0,
                level: nearest.1,
                distance: nearest.2,
                border: self.virtual_border,
            });
        }

        let mut next = self.clone();
        next.points.push(CalibratedPoint {
            label,
            level,
            centroid: p.centroid,
        });
        Ok(next)
    }

    fn nearest_violation(
        &self,
        candidate: Vec3,
        against: &[CalibratedPoint],
    ) -> Option<CalibrationError> {
        let mut worst: Option<(DirectionLabel, u8, f64)> = None;
        for q in against {
            let d = vec3::dist(candidate, q.centroid);
            if d <= self.virtual_border && worst.is_none_or(|w| d < w.2) {
                worst = Some((q.label, q.level, d));
            }
        }
        worst.map(
            |(nearest, level, distance)| CalibrationError::BorderViolation {
                nearest,
                level,
                distance,
                border: self.virtual_border,
            },
        )
    }

    pub fn get(&self, label: DirectionLabel, level: u8) -> Option<&CalibratedPoint> {
        self.points
            .iter()
            .find(|q| q.label == label && q.level == level)
    }

    pub fn is_ready(&self) -> bool {
        self.steady.is_some() && !self.points.is_empty()
    }

    /// Checks every invariant the construction path enforces; used when a
    /// set arrives from a file rather than from a calibration session.
    pub fn validate(&self) -> Result<(), CalibrationError> {
        if !(self.max_g.is_finite() && self.max_g > 0.0) {
            return Err(CalibrationError::InvalidSet(
                "max_g must be positive".into(),
            ));
        }
        if !(self.virtual_border.is_finite() && self.virtual_border > 0.0) {
            return Err(CalibrationError::InvalidSet(
                "virtual_border must be positive".into(),
            ));
        }
        let mut centroids: Vec<(String, Vec3)> = Vec::new();
        if let Some(s) = self.steady {
            if !vec3::is_finite(s) {
                return Err(CalibrationError::InvalidSet("steady must be finite".into()));
            }
            centroids.push(("steady".into(), s));
        }
        for q in &self.points {
            if q.label.is_steady() {
                return Err(CalibrationError::InvalidSet(
                    "steady cannot appear among direction points".into(),
                ));
            }
            if !(1..=3).contains(&q.level) {
                return Err(CalibrationError::InvalidSet(format!(
                    "level {} out of range for {}",
                    q.level, q.label
                )));
            }
            if !vec3::is_finite(q.centroid) {
                return Err(CalibrationError::InvalidSet(format!(
                    "non-finite centroid for {}",
                    q.label
                )));
            }
            if self
                .points
                .iter()
                .filter(|r| r.label == q.label && r.level == q.level)
                .count()
                > 1
            {
                return Err(CalibrationError::InvalidSet(format!(
                    "duplicate point for {} level {}",
                    q.label, q.level
                )));
            }
            centroids.push((format!("{} level {}", q.label, q.level), q.centroid));
        }
        for i in 0..centroids.len() {
            for j in (i + 1)..centroids.len() {
                let d = vec3::dist(centroids[i].1, centroids[j].1);
                if d <= self.virtual_border {
                    return Err(CalibrationError::InvalidSet(format!(
                        "{} and {} are {:.4} g apart, within the border {:.4} g",
                        centroids[i].0, centroids[j].0, d, self.virtual_border
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("calibration sets always serialize")
    }

    pub fn from_json_str(text: &str) -> Result<Self, CalibrationError> {
        let set: CalibrationSet = serde_json::from_str(text)?;
        set.validate()?;
        Ok(set)
    }

    pub fn save(&self, path: &Path) -> Result<(), CalibrationError> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CalibrationError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(centroid: Vec3) -> StablePoint {
        StablePoint {
            centroid,
            t_start: 0,
            t_end: 0,
        }
    }

    #[test]
    fn border_formula() {
        assert_eq!(virtual_border(1.0, 1).unwrap(), 1.0);
        assert_eq!(virtual_border(1.0, 4).unwrap(), 0.25);
        assert_eq!(virtual_border(2.0, 8).unwrap(), 0.25);
        assert!(virtual_border(0.0, 4).is_err());
        assert!(virtual_border(1.0, 0).is_err());
    }

    #[test]
    fn border_is_decreasing_in_direction_count() {
        let mut prev = f64::INFINITY;
        for n in 1..=32 {
            let b = virtual_border(1.0, n).unwrap();
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn first_steady_calibration() {
        let set = CalibrationSet::new(1.0, 4).unwrap();
        let set = set.calibrate_steady(&sp([0.0, 0.0, 1.0])).unwrap();
        assert_eq!(set.steady, Some([0.0, 0.0, 1.0]));
    }

    #[test]
    fn steady_recalibration_to_same_point_is_idempotent() {
        let set = CalibrationSet::new(1.0, 4)
            .unwrap()
            .calibrate_steady(&sp([0.0, 0.0, 1.0]))
            .unwrap();
        let again = set.calibrate_steady(&sp([0.0, 0.0, 1.0])).unwrap();
        assert_eq!(set, again);
    }

    #[test]
    fn steady_recalibration_respects_existing_points() {
        // Right at (1,0,0), border 0.25; new steady (0.9,0,0.1) is ~0.141 away
        let set = CalibrationSet::new(1.0, 4)
            .unwrap()
            .calibrate_steady(&sp([0.0, 0.0, 1.0]))
            .unwrap()
            .try_add_direction(DirectionLabel::Right, 1, &sp([1.0, 0.0, 0.0]))
            .unwrap();
        match set.calibrate_steady(&sp([0.9, 0.0, 0.1])) {
            Err(CalibrationError::BorderViolation { nearest, .. }) => {
                assert_eq!(nearest, DirectionLabel::Right);
            }
            other => panic!("expected BorderViolation(Right), got {:?}", other),
        }
    }

    #[test]
    fn add_direction_accepts_then_rejects_near_neighbor() {
        let set = CalibrationSet::new(1.0, 4)
            .unwrap()
            .calibrate_steady(&sp([0.0, 0.0, 1.0]))
            .unwrap();
        // distance to steady ≈ 1.28 > 0.25: accepted
        let set = set
            .try_add_direction(DirectionLabel::Right, 1, &sp([1.0, 0.0, 0.2]))
            .unwrap();
        // (0.9, 0, 0.2) is 0.1 from Right: rejected, nearest named
        match set.try_add_direction(DirectionLabel::Left, 1, &sp([0.9, 0.0, 0.2])) {
            Err(CalibrationError::BorderViolation {
                nearest, distance, ..
            }) => {
                assert_eq!(nearest, DirectionLabel::Right);
                assert!((distance - 0.1).abs() < 1e-12);
            }
            other => panic!("expected BorderViolation(Right), got {:?}", other),
        }
        // the failed admission left the set untouched
        assert_eq!(set.points.len(), 1);
        set.validate().unwrap();
    }

    #[test]
    fn duplicate_label_level_is_rejected() {
        let set = CalibrationSet::new(1.0, 4)
            .unwrap()
            .calibrate_steady(&sp([0.0, 0.0, 1.0]))
            .unwrap()
            .try_add_direction(DirectionLabel::Right, 1, &sp([1.0, 0.0, 0.0]))
            .unwrap();
        assert!(matches!(
            set.try_add_direction(DirectionLabel::Right, 1, &sp([0.0, 1.0, 0.0])),
            Err(CalibrationError::DuplicateLabel { .. })
        ));
    }

    #[test]
    fn direction_requires_steady() {
        let set = CalibrationSet::new(1.0, 4).unwrap();
        assert!(matches!(
            set.try_add_direction(DirectionLabel::Right, 1, &sp([1.0, 0.0, 0.0])),
            Err(CalibrationError::SteadyMissing)
        ));
    }

    #[test]
    fn level_out_of_range_is_rejected() {
        let set = CalibrationSet::new(1.0, 4)
            .unwrap()
            .calibrate_steady(&sp([0.0, 0.0, 1.0]))
            .unwrap();
        for level in [0u8, 4] {
            assert!(matches!(
                set.try_add_direction(DirectionLabel::Right, level, &sp([1.0, 0.0, 0.0])),
                Err(CalibrationError::InvalidLevel(_))
            ));
        }
    }

    #[test]
    fn persistence_round_trip() {
        let set = CalibrationSet::new(1.0, 8)
            .unwrap()
            .calibrate_steady(&sp([0.0, 0.0, 1.0]))
            .unwrap()
            .try_add_direction(DirectionLabel::Right, 1, &sp([0.7, 0.0, 0.7]))
            .unwrap()
            .try_add_direction(DirectionLabel::Left, 1, &sp([-0.7, 0.0, 0.7]))
            .unwrap();
        let text = set.to_json_string();
        let loaded = CalibrationSet::from_json_str(&text).unwrap();
        assert_eq!(set, loaded);
    }

    #[test]
    fn loading_a_set_violating_the_border_fails() {
        let text = r#"{
            "steady": [0.0, 0.0, 1.0],
            "max_g": 1.0,
            "virtual_border": 0.5,
            "points": [
                {"label": "right", "level": 1, "centroid": [1.0, 0.0, 0.0]},
                {"label": "left", "level": 1, "centroid": [0.9, 0.0, 0.1]}
            ]
        }"#;
        assert!(matches!(
            CalibrationSet::from_json_str(text),
            Err(CalibrationError::InvalidSet(_))
        ));
    }

    #[test]
    fn label_names_round_trip() {
        for label in DirectionLabel::TILT_DIRECTIONS {
            assert_eq!(label.as_str().parse::<DirectionLabel>().unwrap(), label);
        }
        assert_eq!(
            "Down-Right".parse::<DirectionLabel>().unwrap(),
            DirectionLabel::DownRight
        );
        assert!("north".parse::<DirectionLabel>().is_err());
        assert_eq!(
            serde_json::to_string(&DirectionLabel::UpLeft).unwrap(),
            "\"up-left\""
        );
    }
}
