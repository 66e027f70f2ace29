//! A square synthetic city: two subway lines crossing at the centre and a
//! ring of four bus lines, with a weekday calendar. Small enough for tests,
//! large enough to exercise first/last-mile carpooling.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::geo::{haversine_km, seconds_for, EARTH_RADIUS_KM};
use crate::gtfs::{GtfsStopTime, Route, RouteType, ServiceCalendar, Stop, Timetable, TimetableParts, Trip};
use crate::scenario::{Rectangle, ScenarioConfig};
use crate::{GeoPoint, Seconds};

pub const SERVICE_ID: &str = "WEEKDAY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticCity {
    pub center: GeoPoint,
    pub size_km: f64,
    pub subway_spacing_km: f64,
    pub subway_speed_kmh: f64,
    pub subway_headway: Seconds,
    pub subway_dwell: Seconds,
    /// Bus lines run north-south and east-west at these offsets from the
    /// centre.
    pub bus_offsets_km: Vec<f64>,
    pub bus_spacing_km: f64,
    pub bus_speed_kmh: f64,
    pub bus_headway: Seconds,
    /// First and last terminal departure.
    pub service: (Seconds, Seconds),
    /// Side of the denser downtown rectangle.
    pub downtown_km: f64,
}

impl Default for SyntheticCity {
    fn default() -> Self {
        SyntheticCity {
            center: GeoPoint::new(45.52, -122.68),
            size_km: 20.0,
            subway_spacing_km: 1.6,
            subway_speed_kmh: 35.0,
            subway_headway: 360,
            subway_dwell: 20,
            bus_offsets_km: vec![-5.0, 5.0],
            bus_spacing_km: 0.6,
            bus_speed_kmh: 20.0,
            bus_headway: 900,
            service: (34_200, 45_000),
            downtown_km: 6.0,
        }
    }
}

struct Line {
    id: String,
    route_type: RouteType,
    stops: Vec<(String, GeoPoint)>,
    speed_kmh: f64,
    headway: Seconds,
    dwell: Seconds,
}

impl SyntheticCity {
    /// Point `x` km east and `y` km north of the centre.
    pub fn at(&self, x: f64, y: f64) -> GeoPoint {
        let lat = self.center.lat + (y / EARTH_RADIUS_KM).to_degrees();
        let lon = self.center.lon + (x / (EARTH_RADIUS_KM * self.center.lat.to_radians().cos())).to_degrees();
        GeoPoint::new(lat, lon)
    }

    fn positions(&self, spacing: f64) -> Vec<f64> {
        let half = self.size_km / 2.0;
        let n = (2.0 * half / spacing).floor() as i64;
        let start = -(n as f64) * spacing / 2.0;
        (0..=n).map(|i| start + i as f64 * spacing).collect()
    }

    fn lines(&self) -> Vec<Line> {
        let mut lines = Vec::new();
        let sub = self.positions(self.subway_spacing_km);
        let sub_stop = |axis: &str, i: usize, v: f64| {
            if v.abs() < 1e-9 {
                "SUB_CENTER".to_string()
            } else {
                format!("SUB_{axis}_{i:02}")
            }
        };
        lines.push(Line {
            id: "SUB_EW".into(),
            route_type: RouteType::Subway,
            stops: sub.iter().enumerate().map(|(i, &x)| (sub_stop("EW", i, x), self.at(x, 0.0))).collect(),
            speed_kmh: self.subway_speed_kmh,
            headway: self.subway_headway,
            dwell: self.subway_dwell,
        });
        lines.push(Line {
            id: "SUB_NS".into(),
            route_type: RouteType::Subway,
            stops: sub.iter().enumerate().map(|(i, &y)| (sub_stop("NS", i, y), self.at(0.0, y))).collect(),
            speed_kmh: self.subway_speed_kmh,
            headway: self.subway_headway,
            dwell: self.subway_dwell,
        });
        let bus = self.positions(self.bus_spacing_km);
        for (k, &off) in self.bus_offsets_km.iter().enumerate() {
            for (axis, horizontal) in [("EW", true), ("NS", false)] {
                let id = format!("BUS_{axis}{k}");
                let stops = bus
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let p = if horizontal { self.at(v, off) } else { self.at(off, v) };
                        (format!("{id}_{i:02}"), p)
                    })
                    .collect();
                lines.push(Line {
                    id,
                    route_type: RouteType::Bus,
                    stops,
                    speed_kmh: self.bus_speed_kmh,
                    headway: self.bus_headway,
                    dwell: 0,
                });
            }
        }
        lines
    }

    pub fn timetable(&self) -> Timetable {
        let mut parts = TimetableParts::default();
        for line in self.lines() {
            for (id, p) in &line.stops {
                if !parts.stops.iter().any(|s: &Stop| &s.stop_id == id) {
                    parts.stops.push(Stop { stop_id: id.clone(), name: id.replace('_', " "), position: *p });
                }
            }
            parts.routes.push(Route {
                route_id: line.id.clone(),
                agency_id: None,
                short_name: line.id.clone(),
                long_name: String::new(),
                description: String::new(),
                route_type: line.route_type,
            });
            for (dir, stops) in [("A", line.stops.clone()), ("B", line.stops.iter().rev().cloned().collect())] {
                let mut k = 0;
                let mut start = self.service.0;
                while start <= self.service.1 {
                    let trip_id = format!("{}_{dir}_{k:03}", line.id);
                    parts.trips.push(Trip { trip_id: trip_id.clone(), route_id: line.id.clone(), service_id: SERVICE_ID.into() });
                    let mut t = start;
                    for (i, (stop, p)) in stops.iter().enumerate() {
                        if i > 0 {
                            t += seconds_for(haversine_km(stops[i - 1].1, *p), line.speed_kmh);
                        }
                        let dwell = if i == 0 || i + 1 == stops.len() { 0 } else { line.dwell };
                        parts.stop_times.push(GtfsStopTime {
                            trip_id: trip_id.clone(),
                            stop_id: stop.clone(),
                            arrival_time: t,
                            departure_time: t + dwell,
                            stop_sequence: i as u32 + 1,
                        });
                        t += dwell;
                    }
                    k += 1;
                    start += line.headway;
                }
            }
        }
        parts.calendars.push(ServiceCalendar {
            service_id: SERVICE_ID.into(),
            weekdays: [true, true, true, true, true, false, false],
            start_date: NaiveDate::from_ymd_opt(2022, 1, 1).expect("valid date"),
            end_date: NaiveDate::from_ymd_opt(2022, 12, 31).expect("valid date"),
        });
        Timetable::from_parts(parts).expect("synthetic feed is consistent")
    }

    /// Whole city plus a downtown square, each weighted by its area, so
    /// downtown is twice as dense.
    pub fn rectangles(&self) -> Vec<Rectangle> {
        let square = |side: f64| {
            let (sw, ne) = (self.at(-side / 2.0, -side / 2.0), self.at(side / 2.0, side / 2.0));
            Rectangle::new(sw.lat, ne.lat, sw.lon, ne.lon)
        };
        vec![square(self.size_km), square(self.downtown_km)]
    }

    /// Demand at `scale` times 4.8 drivers and 8.3 riders per km² per hour
    /// over the city area, simulated 10:30-11:30 and measured 10:45-11:15.
    pub fn scenario_config(&self, scale: f64, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            rectangles: self.rectangles(),
            driver_density: 4.8 * scale,
            rider_density: 8.3 * scale,
            area_km2: Some(self.size_km * self.size_km),
            sim_window: (37_800, 41_400),
            stats_window: (38_700, 40_500),
            seed,
            driver_count: None,
            rider_count: None,
            seat_capacity: 4,
        }
    }
}
