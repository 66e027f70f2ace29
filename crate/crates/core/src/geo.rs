//! Geospatial primitives and the travel-time model for drivers and walkers.
//!
//! Everything here is generic over the floating-point scalar so the same
//! code serves `f64` (the default used by the rest of the crate) and `f32`.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::Seconds;

/// Floating-point scalar accepted by the geo routines.
pub trait Real: Float + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static {
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }
}

impl<T> Real for T where T: Float + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static {}

/// IUGG mean Earth radius.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// WGS84 position in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint<T = f64> {
    pub lat: T,
    pub lon: T,
}

impl<T: Real> GeoPoint<T> {
    pub fn new(lat: T, lon: T) -> Self {
        GeoPoint { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        let (lat, lon) = (self.lat, self.lon);
        lat.is_finite()
            && lon.is_finite()
            && lat >= T::lit(-90.0)
            && lat <= T::lit(90.0)
            && lon >= T::lit(-180.0)
            && lon <= T::lit(180.0)
    }
}

/// Speeds and road circuity used to turn great-circle distances into
/// driving and walking times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TravelModel<T = f64> {
    /// km/h
    pub drive_speed: T,
    /// km/h
    pub walk_speed: T,
    /// road km per great-circle km, at least 1
    pub circuity: T,
}

impl<T: Real> Default for TravelModel<T> {
    fn default() -> Self {
        TravelModel {
            drive_speed: T::lit(40.0),
            walk_speed: T::lit(5.0),
            circuity: T::lit(1.3),
        }
    }
}

impl<T: Real> TravelModel<T> {
    pub fn is_valid(&self) -> bool {
        self.drive_speed > T::zero()
            && self.walk_speed > T::zero()
            && self.circuity >= T::one()
            && self.drive_speed.is_finite()
            && self.walk_speed.is_finite()
            && self.circuity.is_finite()
    }
}

/// Great-circle distance in km.
pub fn haversine_km<T: Real>(a: GeoPoint<T>, b: GeoPoint<T>) -> T {
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let half = T::lit(0.5);
    let h = (dlat * half).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon * half).sin().powi(2);
    // clamp guards asin against h drifting just above 1
    let h = h.min(T::one()).max(T::zero());
    T::lit(2.0 * EARTH_RADIUS_KM) * h.sqrt().asin()
}

pub fn road_km<T: Real>(a: GeoPoint<T>, b: GeoPoint<T>, model: &TravelModel<T>) -> T {
    model.circuity * haversine_km(a, b)
}

pub fn drive_seconds<T: Real>(a: GeoPoint<T>, b: GeoPoint<T>, model: &TravelModel<T>) -> Seconds {
    seconds_for(road_km(a, b, model), model.drive_speed)
}

pub fn walk_seconds<T: Real>(a: GeoPoint<T>, b: GeoPoint<T>, model: &TravelModel<T>) -> Seconds {
    seconds_for(road_km(a, b, model), model.walk_speed)
}

/// Travel time for `km` at `speed_kmh`, rounded up to whole seconds.
///
/// A microsecond of slack absorbs float noise so that exact quotients such as
/// 13 km at 40 km/h land on 1170 s rather than 1171 s.
pub fn seconds_for<T: Real>(km: T, speed_kmh: T) -> Seconds {
    let secs = km * T::lit(3600.0) / speed_kmh - T::lit(1e-6);
    let secs = secs.ceil().max(T::zero());
    secs.to_u32().unwrap_or(Seconds::MAX)
}
