//! Surge exposure at infrastructure locations and the deterministic
//! inundation closure rules.
//!
//! All elevations share one vertical datum. A bridge is closed by inundation
//! when its relative surge elevation `deck - surge` is at or below the bridge
//! threshold; a road is closed when its inundation depth `surge - road` is at
//! or above the road threshold.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::geom::{nearest_index, Point};

/// Ratio of maximum to significant wave height.
pub const MAX_WAVE_FACTOR: f64 = 1.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurgeSample {
    pub location: Point,
    /// Storm surge elevation (m).
    pub h_st: f64,
    /// Significant wave height (m).
    pub h_s: f64,
}

/// Point samples of surge elevation and significant wave height.
#[derive(Debug, Clone, PartialEq)]
pub struct SurgeField {
    samples: Vec<SurgeSample>,
    datum_label: String,
    coverage_radius: f64,
}

/// Surge values at one location. `exposed` is false outside the field's
/// coverage, in which case both heights are the no-surge value 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurgeAt {
    pub h_st: f64,
    pub h_s: f64,
    pub exposed: bool,
}

impl SurgeAt {
    pub const DRY: SurgeAt = SurgeAt {
        h_st: 0.0,
        h_s: 0.0,
        exposed: false,
    };
}

impl SurgeField {
    pub fn new(samples: Vec<SurgeSample>, datum_label: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("surge field has no samples"));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, s) in samples.iter().enumerate() {
            if !s.location.is_finite() {
                return Err(Error::invalid(format!("surge sample {i} has a non-finite location")));
            }
            ensure_finite("h_st", s.h_st)?;
            ensure_finite("h_s", s.h_s)?;
            if s.h_s < 0.0 {
                return Err(Error::invalid(format!(
                    "surge sample {i} has negative wave height {}",
                    s.h_s
                )));
            }
            if !seen.insert((s.location.x.to_bits(), s.location.y.to_bits())) {
                return Err(Error::invalid(format!(
                    "surge sample {i} duplicates location ({}, {})",
                    s.location.x, s.location.y
                )));
            }
        }
        Ok(Self {
            samples,
            datum_label: datum_label.into(),
            coverage_radius: f64::INFINITY,
        })
    }

    /// Locations farther than `radius` meters from every sample are treated
    /// as unexposed.
    pub fn with_coverage_radius(mut self, radius: f64) -> Result<Self> {
        if radius.is_nan() || radius <= 0.0 {
            return Err(Error::invalid(format!("coverage radius must be > 0, got {radius}")));
        }
        self.coverage_radius = radius;
        Ok(self)
    }

    pub fn samples(&self) -> &[SurgeSample] {
        &self.samples
    }

    pub fn datum_label(&self) -> &str {
        &self.datum_label
    }

    pub fn coverage_radius(&self) -> f64 {
        self.coverage_radius
    }

    /// Nearest-sample lookup; equidistant samples resolve to the lower index.
    pub fn sample_at(&self, location: &Point) -> SurgeAt {
        let (idx, d2) = nearest_index(self.samples.iter().map(|s| &s.location), location)
            .expect("field is non-empty");
        if d2.sqrt() > self.coverage_radius {
            return SurgeAt::DRY;
        }
        let s = &self.samples[idx];
        SurgeAt {
            h_st: s.h_st,
            h_s: s.h_s,
            exposed: true,
        }
    }

    /// Worst-case surge along a polyline: the highest sampled surge among
    /// its vertices. Unexposed when no vertex is covered.
    pub fn sample_along(&self, vertices: &[Point]) -> SurgeAt {
        vertices
            .iter()
            .map(|p| self.sample_at(p))
            .filter(|s| s.exposed)
            .fold(SurgeAt::DRY, |acc, s| {
                if !acc.exposed || s.h_st > acc.h_st {
                    s
                } else {
                    acc
                }
            })
    }
}

/// Values at the nearest sample of `field` (no coverage cut-off applied
/// beyond the field's configured radius).
pub fn sample_field_at(field: &SurgeField, location: &Point) -> (f64, f64) {
    let s = field.sample_at(location);
    (s.h_st, s.h_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureThresholds {
    /// Bridges close when relative surge elevation is at or below this (m).
    pub bridge_close_zc: f64,
    /// Roads close when inundation depth is at or above this (m).
    pub road_close_din: f64,
}

impl Default for ExposureThresholds {
    fn default() -> Self {
        Self {
            bridge_close_zc: -0.6,
            road_close_din: 0.6,
        }
    }
}

impl ExposureThresholds {
    pub fn new(bridge_close_zc: f64, road_close_din: f64) -> Result<Self> {
        let t = Self {
            bridge_close_zc,
            road_close_din,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bridge_close_zc < 0.0) || !self.bridge_close_zc.is_finite() {
            return Err(Error::invalid(format!(
                "bridge closure threshold must be negative, got {}",
                self.bridge_close_zc
            )));
        }
        if !(self.road_close_din > 0.0) || !self.road_close_din.is_finite() {
            return Err(Error::invalid(format!(
                "road closure threshold must be positive, got {}",
                self.road_close_din
            )));
        }
        Ok(())
    }
}

/// Surge exposure of one bridge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeExposure {
    pub bridge_id: String,
    pub z_c: f64,
    pub h_max: f64,
    pub h_st: f64,
    pub h_s: f64,
    pub exposed: bool,
}

impl BridgeExposure {
    pub fn evaluate(bridge_id: &str, deck_elevation: f64, surge: SurgeAt) -> Result<Self> {
        Ok(Self {
            bridge_id: bridge_id.to_string(),
            z_c: relative_surge_elevation(deck_elevation, surge.h_st)?,
            h_max: max_wave_height(surge.h_s)?,
            h_st: surge.h_st,
            h_s: surge.h_s,
            exposed: surge.exposed,
        })
    }

    pub fn inundation_closed(&self, thresholds: &ExposureThresholds) -> bool {
        self.exposed && bridge_inundation_closed(self.z_c, thresholds)
    }
}

pub fn relative_surge_elevation(deck_elevation: f64, surge_elevation: f64) -> Result<f64> {
    ensure_finite("deck elevation", deck_elevation)?;
    ensure_finite("surge elevation", surge_elevation)?;
    Ok(deck_elevation - surge_elevation)
}

pub fn inundation_depth(road_elevation: f64, surge_elevation: f64) -> Result<f64> {
    ensure_finite("road elevation", road_elevation)?;
    ensure_finite("surge elevation", surge_elevation)?;
    Ok(surge_elevation - road_elevation)
}

pub fn bridge_inundation_closed(z_c: f64, thresholds: &ExposureThresholds) -> bool {
    z_c <= thresholds.bridge_close_zc
}

pub fn road_inundation_closed(d_in: f64, thresholds: &ExposureThresholds) -> bool {
    d_in >= thresholds.road_close_din
}

pub fn max_wave_height(significant_wave_height: f64) -> Result<f64> {
    ensure_finite("significant wave height", significant_wave_height)?;
    if significant_wave_height < 0.0 {
        return Err(Error::invalid(format!(
            "significant wave height must be >= 0, got {significant_wave_height}"
        )));
    }
    Ok(MAX_WAVE_FACTOR * significant_wave_height)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field(samples: &[(f64, f64, f64, f64)]) -> SurgeField {
        SurgeField::new(
            samples
                .iter()
                .map(|&(x, y, h_st, h_s)| SurgeSample {
                    location: Point::new(x, y),
                    h_st,
                    h_s,
                })
                .collect(),
            "NAVD88",
        )
        .unwrap()
    }

    #[test]
    fn relative_surge_elevation_examples() {
        assert_eq!(relative_surge_elevation(5.0, 3.0).unwrap(), 2.0);
        assert_eq!(relative_surge_elevation(3.0, 3.0).unwrap(), 0.0);
        assert_eq!(relative_surge_elevation(4.0, 6.5).unwrap(), -2.5);
        assert!(relative_surge_elevation(f64::NAN, 1.0).is_err());
        assert!(relative_surge_elevation(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn inundation_depth_examples() {
        assert_eq!(inundation_depth(2.0, 2.5).unwrap(), 0.5);
        assert_eq!(inundation_depth(2.0, 2.0).unwrap(), 0.0);
        assert_eq!(inundation_depth(5.0, 3.0).unwrap(), -2.0);
        assert!(inundation_depth(f64::NEG_INFINITY, 0.0).is_err());
    }

    #[test]
    fn closure_thresholds_are_inclusive() {
        let t = ExposureThresholds::default();
        assert!(bridge_inundation_closed(-0.60, &t));
        assert!(!bridge_inundation_closed(-0.59, &t));
        assert!(!bridge_inundation_closed(1.0, &t));
        assert!(road_inundation_closed(0.60, &t));
        assert!(!road_inundation_closed(0.59, &t));
        assert!(!road_inundation_closed(-1.0, &t));
    }

    #[test]
    fn threshold_validation() {
        assert!(ExposureThresholds::new(0.0, 0.6).is_err());
        assert!(ExposureThresholds::new(-0.6, 0.0).is_err());
        assert!(ExposureThresholds::new(f64::NAN, 0.6).is_err());
        assert!(ExposureThresholds::new(-0.3, 0.3).is_ok());
    }

    #[test]
    fn max_wave_height_examples() {
        assert_eq!(max_wave_height(0.0).unwrap(), 0.0);
        assert_eq!(max_wave_height(1.0).unwrap(), 1.8);
        assert_eq!(max_wave_height(2.5).unwrap(), 4.5);
        assert!(max_wave_height(-0.1).is_err());
    }

    #[test]
    fn field_validation() {
        assert!(SurgeField::new(vec![], "d").is_err());
        let dup = vec![
            SurgeSample { location: Point::new(0.0, 0.0), h_st: 1.0, h_s: 0.0 },
            SurgeSample { location: Point::new(0.0, 0.0), h_st: 2.0, h_s: 0.0 },
        ];
        assert!(SurgeField::new(dup, "d").is_err());
        let neg = vec![SurgeSample { location: Point::new(0.0, 0.0), h_st: 1.0, h_s: -1.0 }];
        assert!(SurgeField::new(neg, "d").is_err());
        let nan = vec![SurgeSample { location: Point::new(f64::NAN, 0.0), h_st: 1.0, h_s: 0.0 }];
        assert!(SurgeField::new(nan, "d").is_err());
    }

    #[test]
    fn single_sample_field_answers_everywhere() {
        let f = field(&[(10.0, 10.0, 3.0, 1.0)]);
        assert_eq!(sample_field_at(&f, &Point::new(-5000.0, 77.0)), (3.0, 1.0));
        assert_eq!(sample_field_at(&f, &Point::new(10.0, 10.0)), (3.0, 1.0));
    }

    #[test]
    fn exact_hit_returns_that_sample() {
        let f = field(&[(0.0, 0.0, 1.0, 0.1), (100.0, 0.0, 2.0, 0.2), (0.0, 100.0, 3.0, 0.3)]);
        assert_eq!(sample_field_at(&f, &Point::new(100.0, 0.0)), (2.0, 0.2));
        assert_eq!(sample_field_at(&f, &Point::new(0.0, 100.0)), (3.0, 0.3));
    }

    #[test]
    fn equidistant_tie_goes_to_lower_index() {
        // Symmetric two-sample case: the midpoint is equidistant.
        let f = field(&[(-50.0, 0.0, 1.0, 0.5), (50.0, 0.0, 2.0, 0.7)]);
        assert_eq!(sample_field_at(&f, &Point::new(0.0, 0.0)), (1.0, 0.5));
        assert_eq!(sample_field_at(&f, &Point::new(0.0, 123.0)), (1.0, 0.5));
        let g = field(&[(50.0, 0.0, 2.0, 0.7), (-50.0, 0.0, 1.0, 0.5)]);
        assert_eq!(sample_field_at(&g, &Point::new(0.0, 0.0)), (2.0, 0.7));
    }

    #[test]
    fn coverage_radius_marks_far_points_dry() {
        let f = field(&[(0.0, 0.0, 4.0, 1.0)]).with_coverage_radius(100.0).unwrap();
        assert!(f.sample_at(&Point::new(50.0, 0.0)).exposed);
        assert_eq!(f.sample_at(&Point::new(500.0, 0.0)), SurgeAt::DRY);
        assert!(field(&[(0.0, 0.0, 4.0, 1.0)]).with_coverage_radius(0.0).is_err());
    }

    #[test]
    fn sample_along_takes_highest_surge() {
        let f = field(&[(0.0, 0.0, 1.0, 0.1), (100.0, 0.0, 3.0, 0.2)]);
        let s = f.sample_along(&[Point::new(0.0, 0.0), Point::new(100.0, 0.0)]);
        assert_eq!((s.h_st, s.h_s), (3.0, 0.2));
        assert_eq!(f.sample_along(&[]), SurgeAt::DRY);
    }

    #[test]
    fn bridge_exposure_identities() {
        let e = BridgeExposure::evaluate(
            "B1",
            4.0,
            SurgeAt { h_st: 6.5, h_s: 2.0, exposed: true },
        )
        .unwrap();
        assert_eq!(e.z_c, 4.0 - 6.5);
        assert_eq!(e.h_max, 1.8 * 2.0);
        assert!(e.inundation_closed(&ExposureThresholds::default()));
        let dry = BridgeExposure::evaluate("B2", -4.0, SurgeAt::DRY).unwrap();
        assert!(!dry.inundation_closed(&ExposureThresholds::default()));
    }

    proptest! {
        #[test]
        fn rising_surge_never_reopens(
            h_b in -10.0f64..20.0,
            h_r in -10.0f64..20.0,
            h_st in -5.0f64..15.0,
            rise in 0.0f64..5.0,
        ) {
            let t = ExposureThresholds::default();
            let zc0 = relative_surge_elevation(h_b, h_st).unwrap();
            let zc1 = relative_surge_elevation(h_b, h_st + rise).unwrap();
            prop_assert!(zc1 <= zc0);
            if bridge_inundation_closed(zc0, &t) {
                prop_assert!(bridge_inundation_closed(zc1, &t));
            }
            let d0 = inundation_depth(h_r, h_st).unwrap();
            let d1 = inundation_depth(h_r, h_st + rise).unwrap();
            prop_assert!(d1 >= d0);
            if road_inundation_closed(d0, &t) {
                prop_assert!(road_inundation_closed(d1, &t));
            }
        }

        #[test]
        fn max_wave_height_is_linear(h_s in 0.0f64..50.0) {
            prop_assert_eq!(max_wave_height(h_s).unwrap(), 1.8 * h_s);
        }
    }
}
