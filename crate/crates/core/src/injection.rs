//! Encodes driver journeys as single-trip GTFS lines ("PoolLines") and
//! merges them into a timetable.

use std::collections::HashSet;

use chrono::NaiveDate;
use thiserror::Error;

use crate::gtfs::{
    CalendarDate, ExceptionType, GtfsError, GtfsStopTime, Route, RouteType, Stop, Timetable, Trip,
};
use crate::journey::{DriverId, DriverJourney};

/// Literal prefix of every PoolLine trip id; the driver id is appended.
pub const POOLLINE_TRIP_PREFIX: &str = "1162238700";
/// `route_desc` marker distinguishing PoolLine routes from feed routes.
pub const POOLLINE_ROUTE_MARKER: &str = "PoolLine: single-trip carpool driver journey";
pub const POOLLINE_SERVICE_ID: &str = "POOLLINE";

#[derive(Debug, Error)]
pub enum InjectError {
    #[error("driver id {0} appears more than once")]
    DuplicateDriverId(DriverId),
    #[error("injected stop id {0:?} already exists in the feed")]
    StopIdCollision(String),
    #[error("injected route or trip id {0:?} already exists in the feed")]
    IdCollision(String),
    #[error("journey of driver {driver} references unknown meeting point {stop:?}")]
    UnknownMeetingPoint { driver: DriverId, stop: String },
    #[error(transparent)]
    Gtfs(#[from] GtfsError),
}

/// Route type given to PoolLines. Carpool legs are told apart by trip id
/// prefix and route marker, so the feed stays plain GTFS.
pub fn poolline_route_type() -> RouteType {
    RouteType::Bus
}

pub fn poolline_route_id(driver: DriverId) -> String {
    format!("POOLLINE_{driver}")
}

pub fn poolline_route_name(driver: DriverId) -> String {
    format!("route of carpooler number {driver}")
}

pub fn poolline_trip_id(driver: DriverId) -> String {
    format!("{POOLLINE_TRIP_PREFIX}{driver}")
}

pub fn driver_origin_stop_id(driver: DriverId) -> String {
    format!("DRIVER_origin_{driver}")
}

pub fn driver_destination_stop_id(driver: DriverId) -> String {
    format!("DRIVER_destination_{driver}")
}

/// Driver id encoded in a PoolLine trip id.
pub fn driver_id_of_trip(trip_id: &str) -> Option<DriverId> {
    trip_id.strip_prefix(POOLLINE_TRIP_PREFIX)?.parse().ok()
}

pub fn is_poolline(route: &Route, trip_id: &str) -> bool {
    route.description == POOLLINE_ROUTE_MARKER && driver_id_of_trip(trip_id).is_some()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolLine {
    pub route: Route,
    pub trip: Trip,
    pub new_stops: Vec<Stop>,
    pub stoptimes: Vec<GtfsStopTime>,
}

/// GTFS encoding of one journey. Intermediate stoptimes reuse the meeting
/// point's stop id.
pub fn build_poolline(j: &DriverJourney) -> PoolLine {
    let k = j.driver_id;
    let trip_id = poolline_trip_id(k);
    let origin = &j.stoptimes[0];
    let dest = j.stoptimes.last().expect("journey has at least two stoptimes");
    let new_stops = vec![
        Stop { stop_id: driver_origin_stop_id(k), name: format!("Driver {k} origin"), position: origin.location },
        Stop { stop_id: driver_destination_stop_id(k), name: format!("Driver {k} destination"), position: dest.location },
    ];
    let last = j.stoptimes.len() - 1;
    let stoptimes = j
        .stoptimes
        .iter()
        .enumerate()
        .map(|(i, st)| {
            let stop_id = match i {
                0 => driver_origin_stop_id(k),
                i if i == last => driver_destination_stop_id(k),
                _ => st.stop_ref.clone().expect("intermediate stoptime is a meeting point"),
            };
            GtfsStopTime {
                trip_id: trip_id.clone(),
                stop_id,
                arrival_time: st.arrival,
                departure_time: st.departure,
                stop_sequence: i as u32 + 1,
            }
        })
        .collect();
    PoolLine {
        route: Route {
            route_id: poolline_route_id(k),
            agency_id: None,
            short_name: String::new(),
            long_name: poolline_route_name(k),
            description: POOLLINE_ROUTE_MARKER.to_string(),
            route_type: poolline_route_type(),
        },
        trip: Trip { trip_id, route_id: poolline_route_id(k), service_id: POOLLINE_SERVICE_ID.to_string() },
        new_stops,
        stoptimes,
    }
}

/// Returns a new timetable with one PoolLine per journey added.
///
/// When the feed carries calendar data and `service_date` is given, the
/// PoolLine service is enabled on that date only.
pub fn inject_poollines(
    t: &Timetable,
    journeys: &[DriverJourney],
    service_date: Option<NaiveDate>,
) -> Result<Timetable, InjectError> {
    if journeys.is_empty() {
        return Ok(t.clone());
    }
    let mut seen = HashSet::new();
    for j in journeys {
        if !seen.insert(j.driver_id) {
            return Err(InjectError::DuplicateDriverId(j.driver_id));
        }
    }

    let mut parts = t.clone().into_parts();
    let has_calendar = !parts.calendars.is_empty() || !parts.calendar_dates.is_empty();
    if has_calendar {
        if let Some(date) = service_date {
            let taken = parts.calendars.iter().any(|c| c.service_id == POOLLINE_SERVICE_ID)
                || parts.calendar_dates.iter().any(|c| c.service_id == POOLLINE_SERVICE_ID);
            if taken {
                return Err(InjectError::IdCollision(POOLLINE_SERVICE_ID.to_string()));
            }
            parts.calendar_dates.push(CalendarDate {
                service_id: POOLLINE_SERVICE_ID.to_string(),
                date,
                exception: ExceptionType::Added,
            });
        }
    }

    for j in journeys {
        let line = build_poolline(j);
        for s in &line.new_stops {
            if t.stop(&s.stop_id).is_some() {
                return Err(InjectError::StopIdCollision(s.stop_id.clone()));
            }
        }
        if t.route(&line.route.route_id).is_some() {
            return Err(InjectError::IdCollision(line.route.route_id));
        }
        if t.trip(&line.trip.trip_id).is_some() {
            return Err(InjectError::IdCollision(line.trip.trip_id));
        }
        for st in &j.stoptimes[1..j.stoptimes.len() - 1] {
            let stop = st.stop_ref.as_deref().unwrap_or_default();
            if t.stop(stop).is_none() {
                return Err(InjectError::UnknownMeetingPoint { driver: j.driver_id, stop: stop.to_string() });
            }
        }
        parts.stops.extend(line.new_stops);
        parts.routes.push(line.route);
        parts.trips.push(line.trip);
        parts.stop_times.extend(line.stoptimes);
    }
    Ok(Timetable::from_parts(parts)?)
}
