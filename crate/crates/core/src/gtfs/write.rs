use std::fs;
use std::path::Path;

use csv::Writer;

use super::{ExceptionType, GtfsError, Timetable};
use crate::gtfs::format_time;

/// Writes the feed into `dir` (created if needed).
///
/// The four core files are always written, header-only when empty. Calendar
/// files are written when the timetable has calendar rows; pass-through files
/// are copied verbatim.
pub fn write_gtfs(timetable: &Timetable, dir: impl AsRef<Path>) -> Result<(), GtfsError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let mut w = Writer::from_path(dir.join("stops.txt"))?;
    w.write_record(["stop_id", "stop_name", "stop_lat", "stop_lon"])?;
    for s in timetable.stops() {
        w.write_record([
            s.stop_id.as_str(),
            s.name.as_str(),
            &format_coord(s.position.lat),
            &format_coord(s.position.lon),
        ])?;
    }
    w.flush()?;

    let mut w = Writer::from_path(dir.join("routes.txt"))?;
    w.write_record(["route_id", "agency_id", "route_short_name", "route_long_name", "route_desc", "route_type"])?;
    for r in timetable.routes() {
        w.write_record([
            r.route_id.as_str(),
            r.agency_id.as_deref().unwrap_or(""),
            r.short_name.as_str(),
            r.long_name.as_str(),
            r.description.as_str(),
            &r.route_type.code().to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = Writer::from_path(dir.join("trips.txt"))?;
    w.write_record(["route_id", "service_id", "trip_id"])?;
    for t in timetable.trips() {
        w.write_record([t.route_id.as_str(), t.service_id.as_str(), t.trip_id.as_str()])?;
    }
    w.flush()?;

    let mut w = Writer::from_path(dir.join("stop_times.txt"))?;
    w.write_record(["trip_id", "arrival_time", "departure_time", "stop_id", "stop_sequence"])?;
    for (_, sts) in timetable.stop_times_by_trip() {
        for st in sts {
            w.write_record([
                st.trip_id.as_str(),
                &format_time(st.arrival_time),
                &format_time(st.departure_time),
                st.stop_id.as_str(),
                &st.stop_sequence.to_string(),
            ])?;
        }
    }
    w.flush()?;

    if !timetable.calendars().is_empty() {
        let mut w = Writer::from_path(dir.join("calendar.txt"))?;
        w.write_record([
            "service_id", "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
            "start_date", "end_date",
        ])?;
        for c in timetable.calendars() {
            let mut row = vec![c.service_id.clone()];
            row.extend(c.weekdays.iter().map(|&on| if on { "1" } else { "0" }.to_string()));
            row.push(c.start_date.format("%Y%m%d").to_string());
            row.push(c.end_date.format("%Y%m%d").to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
    }

    if !timetable.calendar_dates().is_empty() {
        let mut w = Writer::from_path(dir.join("calendar_dates.txt"))?;
        w.write_record(["service_id", "date", "exception_type"])?;
        for d in timetable.calendar_dates() {
            let ex = match d.exception {
                ExceptionType::Added => "1",
                ExceptionType::Removed => "2",
            };
            w.write_record([d.service_id.as_str(), &d.date.format("%Y%m%d").to_string(), ex])?;
        }
        w.flush()?;
    }

    for (name, bytes) in timetable.extra_files() {
        fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

/// Shortest representation that parses back to the same `f64`, padded to at
/// least six decimal places.
pub(crate) fn format_coord(v: f64) -> String {
    let mut s = format!("{v}");
    let decimals = match s.find('.') {
        Some(dot) => s.len() - dot - 1,
        None => {
            s.push('.');
            0
        }
    };
    for _ in decimals..6 {
        s.push('0');
    }
    s
}
