//! Minimum-distance classification of stable poses and tilt-angle
//! quantization into levels.
//!
//! The tilt angle of an acceleration vector is atan(√(x²+y²)/z),
//! extended to [0°, 180°] by the sign of z so upside-down poses stay
//! representable. Classification picks the calibrated centroid (steady
//! included) nearest to the query in Euclidean distance; ties go to the
//! earliest-calibrated point, with steady ordered first.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{CalibrationSet, DirectionLabel};
use crate::preprocess::StablePoint;
use crate::vec3::{self, Vec3};

/// Tilt magnitude in degrees: 0 = flat (aligned with +z), 90 =
/// horizontal axis dominant, 180 = upside down.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TiltAngle(f64);

impl TiltAngle {
    pub fn new(degrees: f64) -> Option<Self> {
        if degrees.is_finite() && (0.0..=180.0).contains(&degrees) {
            Some(Self(degrees))
        } else {
            None
        }
    }

    pub fn degrees(self) -> f64 {
        self.0
    }
}

/// Angle bands for the three tilt levels; the dead zone below the first
/// boundary reads as steady.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelBoundaries {
    pub dead_zone_deg: f64,
    pub l1_max_deg: f64,
    pub l2_max_deg: f64,
}

impl Default for LevelBoundaries {
    fn default() -> Self {
        // thirds of the usable 15°–90° range
        Self {
            dead_zone_deg: 15.0,
            l1_max_deg: 40.0,
            l2_max_deg: 65.0,
        }
    }
}

impl LevelBoundaries {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let ok = 0.0 < self.dead_zone_deg
            && self.dead_zone_deg < self.l1_max_deg
            && self.l1_max_deg < self.l2_max_deg
            && self.l2_max_deg < 90.0;
        if ok {
            Ok(())
        } else {
            Err(ClassifyError::InvalidBoundaries)
        }
    }
}

/// Result of classifying one stable pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: DirectionLabel,
    pub level: u8,
    /// Euclidean distance to the winning centroid, in g.
    pub distance: f64,
    pub angle: TiltAngle,
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("cannot compute a tilt angle for the zero vector")]
    ZeroVector,
    #[error("calibration set needs a steady pose and at least one direction")]
    EmptySet,
    #[error("level boundaries must satisfy 0 < dead zone < l1 < l2 < 90")]
    InvalidBoundaries,
}

/// atan(√(x²+y²)/z) in degrees, quadrant-resolved by the sign of z.
/// Scale-invariant: `tilt_angle(k·p) = tilt_angle(p)` for any k > 0.
pub fn tilt_angle(p: Vec3) -> Result<TiltAngle, ClassifyError> {
    let [x, y, z] = p;
    if x == 0.0 && y == 0.0 && z == 0.0 {
        return Err(ClassifyError::ZeroVector);
    }
    let horizontal = (x * x + y * y).sqrt();
    Ok(TiltAngle(horizontal.atan2(z).to_degrees()))
}

/// Nearest-centroid classification over steady plus every calibrated
/// point. The returned level is the winning point's stored level; see
/// [`classify_with_levels`] for angle-quantized levels.
pub fn classify(set: &CalibrationSet, p: &StablePoint) -> Result<Classification, ClassifyError> {
    let steady = set.steady.ok_or(ClassifyError::EmptySet)?;
    if set.points.is_empty() {
        return Err(ClassifyError::EmptySet);
    }
    let angle = tilt_angle(p.centroid)?;

    let mut label = DirectionLabel::Steady;
    let mut level = 1u8;
    let mut distance = vec3::dist(p.centroid, steady);
    for q in &set.points {
        let d = vec3::dist(p.centroid, q.centroid);
        // strict comparison keeps the earliest-calibrated point on ties
        if d < distance {
            label = q.label;
            level = q.level;
            distance = d;
        }
    }
    Ok(Classification {
        label,
        level,
        distance,
        angle,
    })
}

/// Level of a tilt angle: 0 in the dead zone, then 1, 2, 3 in order.
/// Total and monotone non-decreasing in the angle.
pub fn quantize_level(angle: TiltAngle, b: &LevelBoundaries) -> u8 {
    let deg = angle.degrees();
    if deg <= b.dead_zone_deg {
        0
    } else if deg <= b.l1_max_deg {
        1
    } else if deg <= b.l2_max_deg {
        2
    } else {
        3
    }
}

/// Classification with the level taken from the query's tilt angle
/// instead of the winning centroid, so eight calibrated poses cover the
/// full direction × level gesture space. A dead-zone angle reads as
/// steady regardless of the nearest direction centroid.
pub fn classify_with_levels(
    set: &CalibrationSet,
    b: &LevelBoundaries,
    p: &StablePoint,
) -> Result<Classification, ClassifyError> {
    b.validate()?;
    let c = classify(set, p)?;
    if c.label.is_steady() {
        return Ok(c);
    }
    match quantize_level(c.angle, b) {
        0 => Ok(Classification {
            label: DirectionLabel::Steady,
            level: 1,
            ..c
        }),
        level => Ok(Classification { level, ..c }),
    }
}
