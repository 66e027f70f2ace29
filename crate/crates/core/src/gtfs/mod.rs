//! In-memory GTFS model and its CSV reader/writer.
//!
//! Only the fields the simulator consumes are modelled: stops, routes, trips,
//! stop times and (optionally) the service calendar. Any other file found in
//! a feed is carried through verbatim so a written feed stays usable by
//! third-party tools.

mod read;
mod time;
mod write;

use std::collections::{BTreeMap, HashSet};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{GeoPoint, Seconds};

pub use read::{parse_gtfs, parse_gtfs_with, ParseOptions};
pub use time::{format_time, parse_time};
pub use write::write_gtfs;

/// The files whose content is modelled; everything else is passed through.
pub const CONSUMED_FILES: [&str; 6] = [
    "stops.txt",
    "routes.txt",
    "trips.txt",
    "stop_times.txt",
    "calendar.txt",
    "calendar_dates.txt",
];

#[derive(Debug, Error)]
pub enum GtfsError {
    #[error("missing required file {0}")]
    MissingFile(String),
    #[error("{file}:{line}: {reason}")]
    MalformedRow { file: String, line: u64, reason: String },
    #[error("{file}:{line}: unknown id {id:?}")]
    DanglingReference { file: String, line: u64, id: String },
    #[error("invalid timetable: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Archive(#[from] zip::result::ZipError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub stop_id: String,
    pub name: String,
    pub position: GeoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RouteType {
    Tram,
    Subway,
    Rail,
    Bus,
    Other(u16),
}

impl RouteType {
    pub fn from_code(code: u16) -> Self {
        match code {
            0 => RouteType::Tram,
            1 => RouteType::Subway,
            2 => RouteType::Rail,
            3 => RouteType::Bus,
            n => RouteType::Other(n),
        }
    }

    pub fn code(self) -> u16 {
        match self {
            RouteType::Tram => 0,
            RouteType::Subway => 1,
            RouteType::Rail => 2,
            RouteType::Bus => 3,
            RouteType::Other(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub route_id: String,
    pub agency_id: Option<String>,
    pub short_name: String,
    pub long_name: String,
    /// `route_desc`; PoolLines carry their marker here.
    pub description: String,
    pub route_type: RouteType,
}

impl Route {
    /// Long name when present, otherwise the short name.
    pub fn name(&self) -> &str {
        if self.long_name.is_empty() {
            &self.short_name
        } else {
            &self.long_name
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trip {
    pub trip_id: String,
    pub route_id: String,
    pub service_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtfsStopTime {
    pub trip_id: String,
    pub stop_id: String,
    pub arrival_time: Seconds,
    pub departure_time: Seconds,
    pub stop_sequence: u32,
}

/// A `calendar.txt` row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceCalendar {
    pub service_id: String,
    /// Monday first.
    pub weekdays: [bool; 7],
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExceptionType {
    Added,
    Removed,
}

/// A `calendar_dates.txt` row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarDate {
    pub service_id: String,
    pub date: NaiveDate,
    pub exception: ExceptionType,
}

/// Unvalidated timetable content; turn it into a [`Timetable`] with
/// [`Timetable::from_parts`].
#[derive(Debug, Clone, Default)]
pub struct TimetableParts {
    pub stops: Vec<Stop>,
    pub routes: Vec<Route>,
    pub trips: Vec<Trip>,
    pub stop_times: Vec<GtfsStopTime>,
    pub calendars: Vec<ServiceCalendar>,
    pub calendar_dates: Vec<CalendarDate>,
    pub extra_files: BTreeMap<String, Vec<u8>>,
}

/// Immutable, referentially consistent GTFS model.
///
/// Collections are kept sorted by id (stop times by trip, then sequence) so
/// two timetables built from the same rows in any order compare equal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Timetable {
    stops: Vec<Stop>,
    routes: Vec<Route>,
    trips: Vec<Trip>,
    stop_times: BTreeMap<String, Vec<GtfsStopTime>>,
    calendars: Vec<ServiceCalendar>,
    calendar_dates: Vec<CalendarDate>,
    extra_files: BTreeMap<String, Vec<u8>>,
}

impl Timetable {
    pub fn from_parts(parts: TimetableParts) -> Result<Self, GtfsError> {
        let TimetableParts {
            mut stops,
            mut routes,
            mut trips,
            stop_times,
            mut calendars,
            mut calendar_dates,
            extra_files,
        } = parts;

        stops.sort_by(|a, b| a.stop_id.cmp(&b.stop_id));
        routes.sort_by(|a, b| a.route_id.cmp(&b.route_id));
        trips.sort_by(|a, b| a.trip_id.cmp(&b.trip_id));
        calendars.sort_by(|a, b| a.service_id.cmp(&b.service_id));
        calendar_dates.sort_by(|a, b| (&a.service_id, a.date).cmp(&(&b.service_id, b.date)));

        if let Some(w) = stops.windows(2).find(|w| w[0].stop_id == w[1].stop_id) {
            return Err(GtfsError::Invalid(format!("duplicate stop_id {:?}", w[0].stop_id)));
        }
        if let Some(s) = stops.iter().find(|s| !s.position.is_valid()) {
            return Err(GtfsError::Invalid(format!("stop {:?} has invalid coordinates", s.stop_id)));
        }
        if let Some(w) = routes.windows(2).find(|w| w[0].route_id == w[1].route_id) {
            return Err(GtfsError::Invalid(format!("duplicate route_id {:?}", w[0].route_id)));
        }
        if let Some(w) = trips.windows(2).find(|w| w[0].trip_id == w[1].trip_id) {
            return Err(GtfsError::Invalid(format!("duplicate trip_id {:?}", w[0].trip_id)));
        }
        if let Some(w) = calendars.windows(2).find(|w| w[0].service_id == w[1].service_id) {
            return Err(GtfsError::Invalid(format!("duplicate calendar service_id {:?}", w[0].service_id)));
        }
        let route_ids: HashSet<&str> = routes.iter().map(|r| r.route_id.as_str()).collect();
        if let Some(t) = trips.iter().find(|t| !route_ids.contains(t.route_id.as_str())) {
            return Err(GtfsError::Invalid(format!("trip {:?} references unknown route {:?}", t.trip_id, t.route_id)));
        }

        let stop_ids: HashSet<&str> = stops.iter().map(|s| s.stop_id.as_str()).collect();
        let mut by_trip: BTreeMap<String, Vec<GtfsStopTime>> = BTreeMap::new();
        for st in stop_times {
            if trips.binary_search_by(|t| t.trip_id.as_str().cmp(&st.trip_id)).is_err() {
                return Err(GtfsError::Invalid(format!("stop time references unknown trip {:?}", st.trip_id)));
            }
            if !stop_ids.contains(st.stop_id.as_str()) {
                return Err(GtfsError::Invalid(format!("stop time references unknown stop {:?}", st.stop_id)));
            }
            by_trip.entry(st.trip_id.clone()).or_default().push(st);
        }
        for (trip_id, sts) in by_trip.iter_mut() {
            sts.sort_by_key(|s| s.stop_sequence);
            check_trip_times(trip_id, sts).map_err(GtfsError::Invalid)?;
        }

        Ok(Timetable {
            stops,
            routes,
            trips,
            stop_times: by_trip,
            calendars,
            calendar_dates,
            extra_files,
        })
    }

    pub fn into_parts(self) -> TimetableParts {
        TimetableParts {
            stops: self.stops,
            routes: self.routes,
            trips: self.trips,
            stop_times: self.stop_times.into_values().flatten().collect(),
            calendars: self.calendars,
            calendar_dates: self.calendar_dates,
            extra_files: self.extra_files,
        }
    }

    pub fn stops(&self) -> &[Stop] {
        &self.stops
    }

    pub fn stop(&self, stop_id: &str) -> Option<&Stop> {
        self.stops
            .binary_search_by(|s| s.stop_id.as_str().cmp(stop_id))
            .ok()
            .map(|i| &self.stops[i])
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn route(&self, route_id: &str) -> Option<&Route> {
        self.routes
            .binary_search_by(|r| r.route_id.as_str().cmp(route_id))
            .ok()
            .map(|i| &self.routes[i])
    }

    pub fn trips(&self) -> &[Trip] {
        &self.trips
    }

    pub fn trip(&self, trip_id: &str) -> Option<&Trip> {
        self.trips
            .binary_search_by(|t| t.trip_id.as_str().cmp(trip_id))
            .ok()
            .map(|i| &self.trips[i])
    }

    /// Stop times of a trip ordered by `stop_sequence`; empty for unknown trips.
    pub fn stop_times(&self, trip_id: &str) -> &[GtfsStopTime] {
        self.stop_times.get(trip_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn stop_times_by_trip(&self) -> impl Iterator<Item = (&str, &[GtfsStopTime])> {
        self.stop_times.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn stop_time_count(&self) -> usize {
        self.stop_times.values().map(Vec::len).sum()
    }

    pub fn calendars(&self) -> &[ServiceCalendar] {
        &self.calendars
    }

    pub fn calendar_dates(&self) -> &[CalendarDate] {
        &self.calendar_dates
    }

    pub fn extra_files(&self) -> &BTreeMap<String, Vec<u8>> {
        &self.extra_files
    }

    /// Whether `service_id` runs on `date`. Feeds without any calendar
    /// information run every service every day.
    pub fn is_service_active(&self, service_id: &str, date: NaiveDate) -> bool {
        service_active(&self.calendars, &self.calendar_dates, service_id, date)
    }
}

fn check_trip_times(trip_id: &str, sts: &[GtfsStopTime]) -> Result<(), String> {
    for st in sts {
        if st.departure_time < st.arrival_time {
            return Err(format!(
                "trip {trip_id:?} departs stop {:?} before arriving",
                st.stop_id
            ));
        }
    }
    for w in sts.windows(2) {
        if w[0].stop_sequence == w[1].stop_sequence {
            return Err(format!("trip {trip_id:?} repeats stop_sequence {}", w[0].stop_sequence));
        }
        if w[1].arrival_time < w[0].departure_time {
            return Err(format!(
                "trip {trip_id:?} arrives at sequence {} before leaving sequence {}",
                w[1].stop_sequence, w[0].stop_sequence
            ));
        }
    }
    Ok(())
}

pub(crate) fn service_active(
    calendars: &[ServiceCalendar],
    dates: &[CalendarDate],
    service_id: &str,
    date: NaiveDate,
) -> bool {
    if calendars.is_empty() && dates.is_empty() {
        return true;
    }
    if let Some(ex) = dates.iter().find(|d| d.service_id == service_id && d.date == date) {
        return ex.exception == ExceptionType::Added;
    }
    calendars.iter().any(|c| {
        c.service_id == service_id
            && c.start_date <= date
            && date <= c.end_date
            && c.weekdays[date.weekday().num_days_from_monday() as usize]
    })
}
