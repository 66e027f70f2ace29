//! Test fixtures shared by the integration suites: a small feed builder,
//! a random timetable generator and an independent earliest-arrival oracle
//! over the fully expanded time-event graph.
#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use poolline_core::geo::{road_km, walk_seconds, EARTH_RADIUS_KM};
use poolline_core::gtfs::{GtfsStopTime, Route, RouteType, Stop, Timetable, TimetableParts, Trip};
use poolline_core::injection::{poolline_trip_id, POOLLINE_ROUTE_MARKER};
use poolline_core::planner::{Footpath, PlanRequest, PlannerConfig};
use poolline_core::{GeoPoint, Seconds};
use rand::Rng;

pub const CENTER: (f64, f64) = (45.5, -122.6);

/// Point at (`x_km` east, `y_km` north) of [`CENTER`].
pub fn km(x_km: f64, y_km: f64) -> GeoPoint {
    let lat = CENTER.0 + (y_km / EARTH_RADIUS_KM).to_degrees();
    let lon = CENTER.1 + (x_km / (EARTH_RADIUS_KM * CENTER.0.to_radians().cos())).to_degrees();
    GeoPoint::new(lat, lon)
}

#[derive(Default)]
pub struct FeedBuilder {
    parts: TimetableParts,
}

impl FeedBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stop(mut self, id: &str, p: GeoPoint) -> Self {
        self.parts.stops.push(Stop { stop_id: id.into(), name: id.into(), position: p });
        self
    }

    /// Adds a route with a single trip. `calls` are (stop, arrival, departure).
    pub fn trip(mut self, trip_id: &str, route_type: RouteType, calls: &[(&str, Seconds, Seconds)]) -> Self {
        let route_id = format!("R_{trip_id}");
        self.parts.routes.push(Route {
            route_id: route_id.clone(),
            agency_id: None,
            short_name: trip_id.into(),
            long_name: String::new(),
            description: String::new(),
            route_type,
        });
        self.push_trip(trip_id, &route_id, calls);
        self
    }

    /// Adds a PoolLine-style carpool trip for `driver`.
    pub fn carpool(mut self, driver: u64, calls: &[(&str, Seconds, Seconds)]) -> Self {
        let route_id = format!("POOLLINE_{driver}");
        self.parts.routes.push(Route {
            route_id: route_id.clone(),
            agency_id: None,
            short_name: String::new(),
            long_name: format!("route of carpooler number {driver}"),
            description: POOLLINE_ROUTE_MARKER.into(),
            route_type: RouteType::Bus,
        });
        self.push_trip(&poolline_trip_id(driver), &route_id, calls);
        self
    }

    fn push_trip(&mut self, trip_id: &str, route_id: &str, calls: &[(&str, Seconds, Seconds)]) {
        self.parts.trips.push(Trip { trip_id: trip_id.into(), route_id: route_id.into(), service_id: "S".into() });
        for (i, (stop, a, d)) in calls.iter().enumerate() {
            self.parts.stop_times.push(GtfsStopTime {
                trip_id: trip_id.into(),
                stop_id: stop.to_string(),
                arrival_time: *a,
                departure_time: *d,
                stop_sequence: i as u32 + 1,
            });
        }
    }

    pub fn build(self) -> Timetable {
        Timetable::from_parts(self.parts).expect("valid test feed")
    }
}

/// Random timetable: up to `max_stops` stops in a 6x6 km box, up to
/// `max_trips` trips (some of them PoolLines), up to `max_footpaths`
/// directed footpaths with arbitrary durations.
pub fn random_timetable<R: Rng>(
    rng: &mut R,
    max_stops: usize,
    max_trips: usize,
    max_footpaths: usize,
) -> (Timetable, Vec<Footpath>) {
    let n_stops = rng.gen_range(2..=max_stops);
    let mut b = FeedBuilder::new();
    let mut ids = Vec::new();
    for i in 0..n_stops {
        let id = format!("S{i:02}");
        b = b.stop(&id, km(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)));
        ids.push(id);
    }
    let n_trips = rng.gen_range(1..=max_trips);
    for k in 0..n_trips {
        let len = rng.gen_range(2..=n_stops.min(8));
        let mut pool: Vec<usize> = (0..n_stops).collect();
        let mut calls = Vec::new();
        let mut t: Seconds = rng.gen_range(36_000..39_600);
        for _ in 0..len {
            let s = pool.swap_remove(rng.gen_range(0..pool.len()));
            let dwell = if rng.gen_bool(0.3) { rng.gen_range(0..90) } else { 0 };
            calls.push((ids[s].clone(), t, t + dwell));
            t += dwell + rng.gen_range(1..600);
        }
        let calls: Vec<(&str, Seconds, Seconds)> = calls.iter().map(|(s, a, d)| (s.as_str(), *a, *d)).collect();
        if rng.gen_bool(0.3) {
            b = b.carpool(k as u64, &calls);
        } else {
            let rt = if rng.gen_bool(0.5) { RouteType::Bus } else { RouteType::Subway };
            b = b.trip(&format!("T{k:02}"), rt, &calls);
        }
    }
    let mut fps = Vec::new();
    while fps.len() + 2 <= max_footpaths && n_stops >= 2 && rng.gen_bool(0.8) {
        let a = rng.gen_range(0..n_stops);
        let c = rng.gen_range(0..n_stops);
        if a == c {
            continue;
        }
        let seconds = rng.gen_range(0..900);
        let km = seconds as f64 / 720.0;
        fps.push(Footpath { from: ids[a].clone(), to: ids[c].clone(), seconds, km });
        fps.push(Footpath { from: ids[c].clone(), to: ids[a].clone(), seconds, km });
    }
    (b.build(), fps)
}

pub fn random_request<R: Rng>(rng: &mut R) -> PlanRequest {
    PlanRequest::new(
        km(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)),
        km(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)),
        rng.gen_range(35_400..40_000),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Ev {
    Source,
    Dest,
    Ready(usize, Seconds),
    Dep(usize, usize),
    Arr(usize, usize),
}

/// Earliest arrival by Dijkstra over the explicit time-event graph:
/// per-stop waiting chains of "ready to board" events, departure and arrival
/// events of every allowed trip, and walking edges for access, footpaths,
/// same-stop transfers and egress.
pub fn teg_earliest_arrival(
    t: &Timetable,
    fps: &[Footpath],
    cfg: &PlannerConfig,
    req: &PlanRequest,
    allowed: impl Fn(&str) -> bool,
) -> Seconds {
    let model = &cfg.model;
    let stop_ix: HashMap<&str, usize> = t.stops().iter().enumerate().map(|(i, s)| (s.stop_id.as_str(), i)).collect();
    let trips: Vec<(Vec<usize>, Vec<(Seconds, Seconds)>)> = t
        .stop_times_by_trip()
        .filter(|(id, _)| allowed(id))
        .map(|(_, sts)| {
            (
                sts.iter().map(|s| stop_ix[s.stop_id.as_str()]).collect(),
                sts.iter().map(|s| (s.arrival_time, s.departure_time)).collect(),
            )
        })
        .collect();
    let walk_links: Vec<(usize, usize, Seconds)> = fps
        .iter()
        .map(|f| (stop_ix[f.from.as_str()], stop_ix[f.to.as_str()], f.seconds))
        .filter(|(a, b, _)| a != b)
        .collect();

    let mut edges: BTreeMap<Ev, Vec<(Ev, Seconds)>> = BTreeMap::new();
    let mut ready_times: Vec<BTreeSet<Seconds>> = vec![BTreeSet::new(); t.stops().len()];
    let mut add = |a: Ev, b: Ev, w: Seconds| edges.entry(a).or_default().push((b, w));

    add(Ev::Source, Ev::Dest, walk_seconds(req.from, req.to, model));
    for (i, s) in t.stops().iter().enumerate() {
        if road_km(req.from, s.position, model) <= cfg.access_walk_km {
            let w = walk_seconds(req.from, s.position, model);
            ready_times[i].insert(req.departure + w);
            add(Ev::Source, Ev::Ready(i, req.departure + w), w);
        }
    }
    for (k, (stops, times)) in trips.iter().enumerate() {
        for i in 0..stops.len() {
            let (arr, dep) = times[i];
            let s = stops[i];
            if i + 1 < stops.len() {
                ready_times[s].insert(dep);
                add(Ev::Ready(s, dep), Ev::Dep(k, i), 0);
                add(Ev::Dep(k, i), Ev::Arr(k, i + 1), times[i + 1].0 - dep);
            }
            if i > 0 {
                if i + 1 < stops.len() {
                    add(Ev::Arr(k, i), Ev::Dep(k, i), dep - arr);
                }
                ready_times[s].insert(arr + cfg.transfer_time);
                add(Ev::Arr(k, i), Ev::Ready(s, arr + cfg.transfer_time), cfg.transfer_time);
                for &(a, b, w) in &walk_links {
                    if a == s {
                        ready_times[b].insert(arr + w);
                        add(Ev::Arr(k, i), Ev::Ready(b, arr + w), w);
                    }
                }
                let p = t.stops()[s].position;
                if road_km(p, req.to, model) <= cfg.access_walk_km {
                    add(Ev::Arr(k, i), Ev::Dest, walk_seconds(p, req.to, model));
                }
            }
        }
    }
    for (s, times) in ready_times.iter().enumerate() {
        let v: Vec<Seconds> = times.iter().copied().collect();
        for w in v.windows(2) {
            add(Ev::Ready(s, w[0]), Ev::Ready(s, w[1]), w[1] - w[0]);
        }
    }

    let mut dist: HashMap<Ev, Seconds> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(Ev::Source, 0);
    heap.push(Reverse((0u32, Ev::Source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if dist.get(&v).is_some_and(|&best| best < d) {
            continue;
        }
        if v == Ev::Dest {
            return req.departure + d;
        }
        for &(u, w) in edges.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            let nd = d + w;
            if dist.get(&u).is_none_or(|&old| nd < old) {
                dist.insert(u, nd);
                heap.push(Reverse((nd, u)));
            }
        }
    }
    unreachable!("direct walk always reaches the destination")
}
