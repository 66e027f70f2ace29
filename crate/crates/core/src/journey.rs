//! Driver journeys: direct trip plus at most one detour near each end,
//! through the nearest meeting point, bounded by a detour-ratio budget.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{drive_seconds, haversine_km, road_km};
use crate::gtfs::{RouteType, Timetable};
use crate::{GeoPoint, Seconds, TravelModel};

pub type DriverId = u64;

#[derive(Debug, Error, PartialEq)]
pub enum JourneyError {
    #[error("no stop is served by route types {0:?}; meeting point set is empty")]
    EmptyMeetingPointSet(Vec<u16>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Driver {
    pub id: DriverId,
    pub origin: GeoPoint,
    pub destination: GeoPoint,
    pub departure_time: Seconds,
    pub declaration_time: Seconds,
    pub seat_capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JourneyStopTime {
    pub location: GeoPoint,
    /// Set when the location is a meeting point.
    pub stop_ref: Option<String>,
    pub arrival: Seconds,
    pub departure: Seconds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverJourney {
    pub driver_id: DriverId,
    pub seat_capacity: u32,
    pub stoptimes: Vec<JourneyStopTime>,
    /// Road length of the direct origin-destination trip.
    pub baseline_km: f64,
    pub length_km: f64,
}

impl DriverJourney {
    pub fn detour_km(&self) -> f64 {
        (self.length_km - self.baseline_km).max(0.0)
    }

    /// Relative extra length; zero for a degenerate zero-length trip.
    pub fn detour_ratio(&self) -> f64 {
        if self.baseline_km > 0.0 {
            self.detour_km() / self.baseline_km
        } else {
            0.0
        }
    }

    pub fn intermediate_indices(&self) -> std::ops::Range<usize> {
        1..self.stoptimes.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeetingPoint {
    pub stop_id: String,
    pub position: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeetingPointSet {
    points: Vec<MeetingPoint>,
}

impl MeetingPointSet {
    pub fn new(mut points: Vec<MeetingPoint>) -> Self {
        points.sort_by(|a, b| a.stop_id.cmp(&b.stop_id));
        points.dedup_by(|a, b| a.stop_id == b.stop_id);
        MeetingPointSet { points }
    }

    pub fn points(&self) -> &[MeetingPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nearest meeting point by great-circle distance; ties go to the
    /// smaller stop id.
    pub fn nearest(&self, p: GeoPoint) -> Option<&MeetingPoint> {
        self.points
            .iter()
            .map(|m| (haversine_km(p, m.position), m))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, m)| m)
    }
}

/// Stops served by at least one route whose type is in `route_types`.
pub fn select_meeting_points(t: &Timetable, route_types: &[RouteType]) -> Result<MeetingPointSet, JourneyError> {
    let mut ids = BTreeSet::new();
    for trip in t.trips() {
        let served = t.route(&trip.route_id).is_some_and(|r| route_types.contains(&r.route_type));
        if served {
            ids.extend(t.stop_times(&trip.trip_id).iter().map(|st| st.stop_id.as_str()));
        }
    }
    let points: Vec<_> = ids
        .into_iter()
        .filter_map(|id| t.stop(id))
        .map(|s| MeetingPoint { stop_id: s.stop_id.clone(), position: s.position })
        .collect();
    if points.is_empty() {
        return Err(JourneyError::EmptyMeetingPointSet(route_types.iter().map(|r| r.code()).collect()));
    }
    Ok(MeetingPointSet::new(points))
}

/// Which end of the trip gets the first detour attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertionOrder {
    OriginFirst,
    DestinationFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetourParams {
    /// Maximum relative detour.
    pub tau: f64,
    /// Dwell at each meeting point.
    pub dwell: Seconds,
}

impl Default for DetourParams {
    fn default() -> Self {
        DetourParams { tau: 0.15, dwell: 60 }
    }
}

/// Builds `d`'s journey, flipping a fair coin for the insertion order.
pub fn compute_driver_journey<R: Rng + ?Sized>(
    d: &Driver,
    mps: &MeetingPointSet,
    model: &TravelModel,
    params: &DetourParams,
    rng: &mut R,
) -> DriverJourney {
    let order = if rng.gen_bool(0.5) {
        InsertionOrder::OriginFirst
    } else {
        InsertionOrder::DestinationFirst
    };
    compute_driver_journey_ordered(d, mps, model, params, order)
}

pub fn compute_driver_journey_ordered(
    d: &Driver,
    mps: &MeetingPointSet,
    model: &TravelModel,
    params: &DetourParams,
    order: InsertionOrder,
) -> DriverJourney {
    let baseline_km = road_km(d.origin, d.destination, model);
    let mut near_origin: Option<&MeetingPoint> = None;
    let mut near_dest: Option<&MeetingPoint> = None;

    let sides = match order {
        InsertionOrder::OriginFirst => [true, false],
        InsertionOrder::DestinationFirst => [false, true],
    };
    // detour ratio is undefined for a zero-length trip
    if baseline_km > 0.0 {
        for origin_side in sides {
            let anchor = if origin_side { d.origin } else { d.destination };
            let Some(m) = mps.nearest(anchor) else { continue };
            let other = if origin_side { near_dest } else { near_origin };
            if other.is_some_and(|o| o.stop_id == m.stop_id) {
                continue;
            }
            let (o, dd) = if origin_side { (Some(m), near_dest) } else { (near_origin, Some(m)) };
            let len = path_km(&waypoints(d, o, dd), model);
            if (len - baseline_km) / baseline_km <= params.tau {
                if origin_side {
                    near_origin = Some(m);
                } else {
                    near_dest = Some(m);
                }
            }
        }
    }

    let pts = waypoints(d, near_origin, near_dest);
    let stoptimes = timed_stoptimes(d.departure_time, &pts, model, params.dwell);
    DriverJourney {
        driver_id: d.id,
        seat_capacity: d.seat_capacity,
        length_km: path_km(&pts, model),
        stoptimes,
        baseline_km,
    }
}

/// Computes every driver's journey with an independent RNG stream per
/// driver, so the result does not depend on evaluation order.
pub fn compute_driver_journeys(
    drivers: &[Driver],
    mps: &MeetingPointSet,
    model: &TravelModel,
    params: &DetourParams,
    seed: u64,
) -> Vec<DriverJourney> {
    let mut ordered: Vec<&Driver> = drivers.iter().collect();
    ordered.sort_by_key(|d| (d.declaration_time, d.id));
    ordered
        .par_iter()
        .map(|d| {
            let mut rng = driver_rng(seed, d.id);
            compute_driver_journey(d, mps, model, params, &mut rng)
        })
        .collect()
}

pub fn driver_rng(seed: u64, driver_id: DriverId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(driver_id);
    rng
}

fn waypoints(d: &Driver, near_origin: Option<&MeetingPoint>, near_dest: Option<&MeetingPoint>) -> Vec<(GeoPoint, Option<String>)> {
    let mut pts = vec![(d.origin, None)];
    pts.extend(near_origin.map(|m| (m.position, Some(m.stop_id.clone()))));
    pts.extend(near_dest.map(|m| (m.position, Some(m.stop_id.clone()))));
    pts.push((d.destination, None));
    pts
}

fn path_km(pts: &[(GeoPoint, Option<String>)], model: &TravelModel) -> f64 {
    pts.windows(2).map(|w| road_km(w[0].0, w[1].0, model)).sum()
}

fn timed_stoptimes(
    start: Seconds,
    pts: &[(GeoPoint, Option<String>)],
    model: &TravelModel,
    dwell: Seconds,
) -> Vec<JourneyStopTime> {
    let mut out: Vec<JourneyStopTime> = Vec::with_capacity(pts.len());
    for (i, (location, stop_ref)) in pts.iter().enumerate() {
        let arrival = match out.last() {
            None => start,
            Some(prev) => prev.departure + drive_seconds(prev.location, *location, model),
        };
        let is_meeting_point = i > 0 && i + 1 < pts.len();
        out.push(JourneyStopTime {
            location: *location,
            stop_ref: stop_ref.clone(),
            arrival,
            departure: if is_meeting_point { arrival + dwell } else { arrival },
        });
    }
    out
}

/// Drops intermediate stoptimes not in `used`. Retained stoptimes keep
/// their times; the length is recomputed along the remaining sequence.
pub fn prune_journey(j: &DriverJourney, used: &BTreeSet<usize>, model: &TravelModel) -> DriverJourney {
    let last = j.stoptimes.len() - 1;
    let stoptimes: Vec<JourneyStopTime> = j
        .stoptimes
        .iter()
        .enumerate()
        .filter(|(i, _)| *i == 0 || *i == last || used.contains(i))
        .map(|(_, st)| st.clone())
        .collect();
    let length_km = stoptimes.windows(2).map(|w| road_km(w[0].location, w[1].location, model)).sum();
    DriverJourney { stoptimes, length_km, ..j.clone() }
}
