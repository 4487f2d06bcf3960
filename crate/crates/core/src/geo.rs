//! Coordinates, great-circle distance and threshold accuracy.
//!
//! Distances are computed with the haversine formula on a sphere of radius
//! 6371 km. Every distance in the crate is in kilometers.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spherical Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Street / city / region / country / continent.
pub const DEFAULT_THRESHOLDS_KM: [f64; 5] = [1.0, 25.0, 200.0, 750.0, 2500.0];

/// A validated point on Earth, degrees latitude/longitude.
///
/// Out-of-range longitudes are rejected, not wrapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct GeoCoordinate {
    lat: f64,
    lon: f64,
}

impl GeoCoordinate {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        Self::validated(lat, lon, "")
    }

    /// Like [`GeoCoordinate::new`] but error messages name `prefix.lat` / `prefix.lon`.
    pub fn validated(lat: f64, lon: f64, prefix: &str) -> Result<Self> {
        let name = |f: &str| {
            if prefix.is_empty() {
                f.to_string()
            } else {
                format!("{prefix}.{f}")
            }
        };
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::invalid(
                name("lat"),
                format!("{lat} is outside [-90, 90]"),
            ));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::invalid(
                name("lon"),
                format!("{lon} is outside [-180, 180]"),
            ));
        }
        Ok(Self { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Point reached by travelling `distance` along the great circle leaving
    /// `self` at `bearing_rad` (clockwise from north).
    pub fn destination(&self, distance: DistanceKm, bearing_rad: f64) -> GeoCoordinate {
        let delta = distance.km() / EARTH_RADIUS_KM;
        let lat1 = self.lat.to_radians();
        let lon1 = self.lon.to_radians();
        let sin_lat2 = lat1.sin() * delta.cos() + lat1.cos() * delta.sin() * bearing_rad.cos();
        let lat2 = sin_lat2.clamp(-1.0, 1.0).asin();
        let lon2 = lon1
            + (bearing_rad.sin() * delta.sin() * lat1.cos())
                .atan2(delta.cos() - lat1.sin() * sin_lat2);
        let mut lon_deg = lon2.to_degrees();
        // wrap into [-180, 180]
        lon_deg = (lon_deg + 180.0).rem_euclid(360.0) - 180.0;
        GeoCoordinate {
            lat: lat2.to_degrees().clamp(-90.0, 90.0),
            lon: lon_deg.clamp(-180.0, 180.0),
        }
    }
}

impl TryFrom<[f64; 2]> for GeoCoordinate {
    type Error = Error;

    fn try_from([lat, lon]: [f64; 2]) -> Result<Self> {
        GeoCoordinate::new(lat, lon)
    }
}

impl From<GeoCoordinate> for [f64; 2] {
    fn from(c: GeoCoordinate) -> Self {
        [c.lat, c.lon]
    }
}

impl fmt::Display for GeoCoordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}, {:.6}", self.lat, self.lon)
    }
}

/// A non-negative, finite distance in kilometers.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DistanceKm(f64);

impl DistanceKm {
    pub const ZERO: DistanceKm = DistanceKm(0.0);

    pub fn new(km: f64) -> Result<Self> {
        if !km.is_finite() || km < 0.0 {
            return Err(Error::invalid(
                "distance",
                format!("{km} km is not a finite non-negative value"),
            ));
        }
        Ok(DistanceKm(km))
    }

    pub fn km(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for DistanceKm {
    type Error = Error;

    fn try_from(km: f64) -> Result<Self> {
        DistanceKm::new(km)
    }
}

impl From<DistanceKm> for f64 {
    fn from(d: DistanceKm) -> Self {
        d.0
    }
}

/// Haversine great-circle distance.
///
/// The formula is arranged so that swapping the arguments yields the
/// bit-identical result.
pub fn geodesic_distance(a: GeoCoordinate, b: GeoCoordinate) -> DistanceKm {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let half_dphi = ((b.lat - a.lat).to_radians() * 0.5).sin();
    let half_dlambda = ((b.lon - a.lon).to_radians() * 0.5).sin();
    // sin² is even, the cosine product commutes
    let h = half_dphi * half_dphi + (phi1.cos() * phi2.cos()) * (half_dlambda * half_dlambda);
    let c = 2.0 * h.sqrt().min(1.0).asin();
    DistanceKm(EARTH_RADIUS_KM * c)
}

/// Inclusive threshold test: `d <= t`.
pub fn within_threshold(d: DistanceKm, threshold_km: f64) -> Result<bool> {
    if !(threshold_km.is_finite() && threshold_km > 0.0) {
        return Err(Error::invalid(
            "threshold",
            format!("{threshold_km} km must be a positive finite value"),
        ));
    }
    Ok(d.0 <= threshold_km)
}

/// Strictly increasing, positive distance thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ThresholdSet(Vec<f64>);

impl ThresholdSet {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::invalid(
                "thresholds",
                "at least one threshold is required",
            ));
        }
        for (i, &t) in thresholds.iter().enumerate() {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::invalid(
                    "thresholds",
                    format!("{t} is not a positive finite value"),
                ));
            }
            if i > 0 && t <= thresholds[i - 1] {
                return Err(Error::invalid(
                    "thresholds",
                    "values must be strictly increasing",
                ));
            }
        }
        Ok(ThresholdSet(thresholds))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for ThresholdSet {
    fn default() -> Self {
        ThresholdSet(DEFAULT_THRESHOLDS_KM.to_vec())
    }
}

impl TryFrom<Vec<f64>> for ThresholdSet {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ThresholdSet::new(v)
    }
}

impl From<ThresholdSet> for Vec<f64> {
    fn from(t: ThresholdSet) -> Self {
        t.0
    }
}

/// Percentages of distances within each threshold, plus their unweighted mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdAccuracy {
    pub per_threshold: Vec<f64>,
    pub average: f64,
}

/// Counts of distances within each threshold.
pub fn counts_within(distances: &[DistanceKm], ts: &ThresholdSet) -> Vec<usize> {
    ts.as_slice()
        .iter()
        .map(|&t| distances.iter().filter(|d| d.0 <= t).count())
        .collect()
}

pub fn accuracy_at_thresholds(
    distances: &[DistanceKm],
    ts: &ThresholdSet,
) -> Result<ThresholdAccuracy> {
    if distances.is_empty() {
        return Err(Error::NoRecords);
    }
    let n = distances.len() as f64;
    let per_threshold: Vec<f64> = counts_within(distances, ts)
        .into_iter()
        .map(|c| 100.0 * c as f64 / n)
        .collect();
    let average = mean(&per_threshold);
    Ok(ThresholdAccuracy {
        per_threshold,
        average,
    })
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
