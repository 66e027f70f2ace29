use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use csv::{ReaderBuilder, StringRecord, Trim};

use super::{
    service_active, CalendarDate, ExceptionType, GtfsError, GtfsStopTime, Route, RouteType,
    ServiceCalendar, Stop, Timetable, TimetableParts, Trip, CONSUMED_FILES,
};
use crate::gtfs::parse_time;
use crate::GeoPoint;

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Drop trips whose service does not run on this date.
    pub service_date: Option<NaiveDate>,
}

/// Loads a feed from a directory or a `.zip` archive.
pub fn parse_gtfs(path: impl AsRef<Path>) -> Result<Timetable, GtfsError> {
    parse_gtfs_with(path, &ParseOptions::default())
}

pub fn parse_gtfs_with(path: impl AsRef<Path>, opts: &ParseOptions) -> Result<Timetable, GtfsError> {
    let files = load_files(path.as_ref())?;
    parse_files(files, opts)
}

fn load_files(path: &Path) -> Result<BTreeMap<String, Vec<u8>>, GtfsError> {
    let mut files = BTreeMap::new();
    if path.is_dir() {
        for entry in fs::read_dir(path)? {
            let entry = entry?;
            if entry.file_type()?.is_file() {
                let name = entry.file_name().to_string_lossy().into_owned();
                files.insert(name, fs::read(entry.path())?);
            }
        }
    } else {
        let mut archive = zip::ZipArchive::new(fs::File::open(path)?)?;
        for i in 0..archive.len() {
            let mut f = archive.by_index(i)?;
            if !f.is_file() {
                continue;
            }
            let name = f.name().rsplit('/').next().unwrap_or_default().to_string();
            let mut buf = Vec::with_capacity(f.size() as usize);
            f.read_to_end(&mut buf)?;
            files.insert(name, buf);
        }
    }
    Ok(files)
}

/// A CSV table with header-name lookup and 1-based source line numbers.
struct Table {
    file: &'static str,
    columns: HashMap<String, usize>,
    rows: Vec<(u64, StringRecord)>,
}

impl Table {
    fn parse(file: &'static str, bytes: &[u8]) -> Result<Self, GtfsError> {
        let mut rdr = ReaderBuilder::new().flexible(true).trim(Trim::All).from_reader(bytes);
        let columns = rdr
            .headers()?
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim_start_matches('\u{feff}').to_string(), i))
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.iter().all(str::is_empty) {
                continue;
            }
            rows.push((line, rec));
        }
        Ok(Table { file, columns, rows })
    }

    fn require_column(&self, name: &str) -> Result<usize, GtfsError> {
        self.columns.get(name).copied().ok_or_else(|| GtfsError::MalformedRow {
            file: self.file.to_string(),
            line: 1,
            reason: format!("missing column {name}"),
        })
    }

    fn malformed(&self, line: u64, reason: impl Into<String>) -> GtfsError {
        GtfsError::MalformedRow { file: self.file.to_string(), line, reason: reason.into() }
    }

    fn dangling(&self, line: u64, id: &str) -> GtfsError {
        GtfsError::DanglingReference { file: self.file.to_string(), line, id: id.to_string() }
    }
}

fn field(rec: &StringRecord, col: Option<usize>) -> &str {
    col.and_then(|c| rec.get(c)).unwrap_or("")
}

fn parse_files(mut files: BTreeMap<String, Vec<u8>>, opts: &ParseOptions) -> Result<Timetable, GtfsError> {
    let mut take = |name: &'static str| files.remove(name);
    let stops_raw = take("stops.txt").ok_or_else(|| GtfsError::MissingFile("stops.txt".into()))?;
    let routes_raw = take("routes.txt").ok_or_else(|| GtfsError::MissingFile("routes.txt".into()))?;
    let trips_raw = take("trips.txt").ok_or_else(|| GtfsError::MissingFile("trips.txt".into()))?;
    let st_raw = take("stop_times.txt").ok_or_else(|| GtfsError::MissingFile("stop_times.txt".into()))?;
    let cal_raw = take("calendar.txt");
    let cal_dates_raw = take("calendar_dates.txt");
    debug_assert!(CONSUMED_FILES.iter().all(|f| !files.contains_key(*f)));

    let stops = parse_stops(&Table::parse("stops.txt", &stops_raw)?)?;
    let routes = parse_routes(&Table::parse("routes.txt", &routes_raw)?)?;
    let calendars = match cal_raw {
        Some(raw) => parse_calendar(&Table::parse("calendar.txt", &raw)?)?,
        None => Vec::new(),
    };
    let calendar_dates = match cal_dates_raw {
        Some(raw) => parse_calendar_dates(&Table::parse("calendar_dates.txt", &raw)?)?,
        None => Vec::new(),
    };

    let route_ids: HashSet<&str> = routes.iter().map(|r| r.route_id.as_str()).collect();
    let all_trips = parse_trips(&Table::parse("trips.txt", &trips_raw)?, &route_ids)?;
    let all_trip_ids: HashSet<String> = all_trips.iter().map(|t| t.trip_id.clone()).collect();
    let trips: Vec<Trip> = match opts.service_date {
        Some(date) => all_trips
            .into_iter()
            .filter(|t| service_active(&calendars, &calendar_dates, &t.service_id, date))
            .collect(),
        None => all_trips,
    };
    let kept: HashSet<&str> = trips.iter().map(|t| t.trip_id.as_str()).collect();
    let stop_ids: HashSet<&str> = stops.iter().map(|s| s.stop_id.as_str()).collect();
    let stop_times = parse_stop_times(&Table::parse("stop_times.txt", &st_raw)?, &all_trip_ids, &kept, &stop_ids)?;

    Timetable::from_parts(TimetableParts {
        stops,
        routes,
        trips,
        stop_times,
        calendars,
        calendar_dates,
        extra_files: files,
    })
}

fn parse_stops(t: &Table) -> Result<Vec<Stop>, GtfsError> {
    let id = t.require_column("stop_id")?;
    let lat = t.require_column("stop_lat")?;
    let lon = t.require_column("stop_lon")?;
    let name = t.columns.get("stop_name").copied();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let stop_id = field(rec, Some(id));
        if stop_id.is_empty() {
            return Err(t.malformed(*line, "empty stop_id"));
        }
        if !seen.insert(stop_id.to_string()) {
            return Err(t.malformed(*line, format!("duplicate stop_id {stop_id:?}")));
        }
        let parse_coord = |col, what| {
            field(rec, Some(col))
                .parse::<f64>()
                .map_err(|_| t.malformed(*line, format!("bad {what}")))
        };
        let position = GeoPoint::new(parse_coord(lat, "stop_lat")?, parse_coord(lon, "stop_lon")?);
        if !position.is_valid() {
            return Err(t.malformed(*line, "coordinates out of range"));
        }
        out.push(Stop { stop_id: stop_id.to_string(), name: field(rec, name).to_string(), position });
    }
    Ok(out)
}

fn parse_routes(t: &Table) -> Result<Vec<Route>, GtfsError> {
    let id = t.require_column("route_id")?;
    let ty = t.require_column("route_type")?;
    let agency = t.columns.get("agency_id").copied();
    let short = t.columns.get("route_short_name").copied();
    let long = t.columns.get("route_long_name").copied();
    let desc = t.columns.get("route_desc").copied();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let route_id = field(rec, Some(id));
        if route_id.is_empty() {
            return Err(t.malformed(*line, "empty route_id"));
        }
        if !seen.insert(route_id.to_string()) {
            return Err(t.malformed(*line, format!("duplicate route_id {route_id:?}")));
        }
        let code: u16 = field(rec, Some(ty))
            .parse()
            .map_err(|_| t.malformed(*line, "bad route_type"))?;
        let agency_id = Some(field(rec, agency)).filter(|s| !s.is_empty()).map(str::to_string);
        out.push(Route {
            route_id: route_id.to_string(),
            agency_id,
            short_name: field(rec, short).to_string(),
            long_name: field(rec, long).to_string(),
            description: field(rec, desc).to_string(),
            route_type: RouteType::from_code(code),
        });
    }
    Ok(out)
}

fn parse_trips(t: &Table, route_ids: &HashSet<&str>) -> Result<Vec<Trip>, GtfsError> {
    let id = t.require_column("trip_id")?;
    let route = t.require_column("route_id")?;
    let service = t.require_column("service_id")?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let trip_id = field(rec, Some(id));
        let route_id = field(rec, Some(route));
        if trip_id.is_empty() {
            return Err(t.malformed(*line, "empty trip_id"));
        }
        if !seen.insert(trip_id.to_string()) {
            return Err(t.malformed(*line, format!("duplicate trip_id {trip_id:?}")));
        }
        if !route_ids.contains(route_id) {
            return Err(t.dangling(*line, route_id));
        }
        out.push(Trip {
            trip_id: trip_id.to_string(),
            route_id: route_id.to_string(),
            service_id: field(rec, Some(service)).to_string(),
        });
    }
    Ok(out)
}

fn parse_stop_times(
    t: &Table,
    all_trips: &HashSet<String>,
    kept_trips: &HashSet<&str>,
    stop_ids: &HashSet<&str>,
) -> Result<Vec<GtfsStopTime>, GtfsError> {
    let trip = t.require_column("trip_id")?;
    let stop = t.require_column("stop_id")?;
    let seq = t.require_column("stop_sequence")?;
    let arr = t.require_column("arrival_time")?;
    let dep = t.require_column("departure_time")?;
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let trip_id = field(rec, Some(trip));
        let stop_id = field(rec, Some(stop));
        if !all_trips.contains(trip_id) {
            return Err(t.dangling(*line, trip_id));
        }
        if !stop_ids.contains(stop_id) {
            return Err(t.dangling(*line, stop_id));
        }
        if !kept_trips.contains(trip_id) {
            continue;
        }
        let stop_sequence: u32 = field(rec, Some(seq))
            .parse()
            .map_err(|_| t.malformed(*line, "bad stop_sequence"))?;
        let a = field(rec, Some(arr));
        let d = field(rec, Some(dep));
        // a non-timepoint row may give only one of the two times
        let (a, d) = match (a.is_empty(), d.is_empty()) {
            (true, true) => return Err(t.malformed(*line, "stop time without arrival or departure")),
            (true, false) => (d, d),
            (false, true) => (a, a),
            (false, false) => (a, d),
        };
        let arrival_time = parse_time(a).ok_or_else(|| t.malformed(*line, format!("bad arrival_time {a:?}")))?;
        let departure_time = parse_time(d).ok_or_else(|| t.malformed(*line, format!("bad departure_time {d:?}")))?;
        if departure_time < arrival_time {
            return Err(t.malformed(*line, "departure_time before arrival_time"));
        }
        out.push(GtfsStopTime {
            trip_id: trip_id.to_string(),
            stop_id: stop_id.to_string(),
            arrival_time,
            departure_time,
            stop_sequence,
        });
    }
    Ok(out)
}

fn parse_date(t: &Table, line: u64, s: &str) -> Result<NaiveDate, GtfsError> {
    NaiveDate::parse_from_str(s, "%Y%m%d").map_err(|_| t.malformed(line, format!("bad date {s:?}")))
}

fn parse_calendar(t: &Table) -> Result<Vec<ServiceCalendar>, GtfsError> {
    const DAYS: [&str; 7] = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"];
    let service = t.require_column("service_id")?;
    let start = t.require_column("start_date")?;
    let end = t.require_column("end_date")?;
    let day_cols = DAYS.iter().map(|d| t.require_column(d)).collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let mut weekdays = [false; 7];
        for (w, &c) in weekdays.iter_mut().zip(&day_cols) {
            *w = match field(rec, Some(c)) {
                "1" => true,
                "0" => false,
                other => return Err(t.malformed(*line, format!("bad weekday flag {other:?}"))),
            };
        }
        out.push(ServiceCalendar {
            service_id: field(rec, Some(service)).to_string(),
            weekdays,
            start_date: parse_date(t, *line, field(rec, Some(start)))?,
            end_date: parse_date(t, *line, field(rec, Some(end)))?,
        });
    }
    Ok(out)
}

fn parse_calendar_dates(t: &Table) -> Result<Vec<CalendarDate>, GtfsError> {
    let service = t.require_column("service_id")?;
    let date = t.require_column("date")?;
    let ex = t.require_column("exception_type")?;
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let exception = match field(rec, Some(ex)) {
            "1" => ExceptionType::Added,
            "2" => ExceptionType::Removed,
            other => return Err(t.malformed(*line, format!("bad exception_type {other:?}"))),
        };
        out.push(CalendarDate {
            service_id: field(rec, Some(service)).to_string(),
            date: parse_date(t, *line, field(rec, Some(date)))?,
            exception,
        });
    }
    Ok(out)
}
