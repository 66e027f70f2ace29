use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::PlannerError;
use crate::geo::{haversine_km, road_km, seconds_for, walk_seconds, EARTH_RADIUS_KM};
use crate::gtfs::Timetable;
use crate::injection::is_poolline;
use crate::{GeoPoint, Seconds, TravelModel};

/// Directed stop-to-stop walking link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Footpath {
    pub from: String,
    pub to: String,
    pub seconds: Seconds,
    pub km: f64,
}

/// Walking links in both directions between every pair of distinct stops
/// within `max_walk_km` road distance.
pub fn build_footpaths(t: &Timetable, model: &TravelModel, max_walk_km: f64) -> Vec<Footpath> {
    let stops = t.stops();
    let mut order: Vec<usize> = (0..stops.len()).collect();
    order.sort_by(|&a, &b| stops[a].position.lat.total_cmp(&stops[b].position.lat));
    // great-circle distance is at least the latitude difference
    let max_dlat = (max_walk_km / model.circuity / EARTH_RADIUS_KM).to_degrees();

    let mut out = Vec::new();
    for (i, &a) in order.iter().enumerate() {
        let pa = stops[a].position;
        for &b in &order[i + 1..] {
            let pb = stops[b].position;
            if pb.lat - pa.lat > max_dlat {
                break;
            }
            let km = road_km(pa, pb, model);
            if km <= max_walk_km {
                let seconds = seconds_for(km, model.walk_speed);
                out.push(Footpath { from: stops[a].stop_id.clone(), to: stops[b].stop_id.clone(), seconds, km });
                out.push(Footpath { from: stops[b].stop_id.clone(), to: stops[a].stop_id.clone(), seconds, km });
            }
        }
    }
    out.sort_by(|x, y| (&x.from, &x.to).cmp(&(&y.from, &y.to)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub model: TravelModel,
    /// Largest road distance walked from the origin to a stop, or from a stop
    /// to the destination.
    pub access_walk_km: f64,
    /// Minimum time between alighting and boarding at the same stop.
    pub transfer_time: Seconds,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig { model: TravelModel::default(), access_walk_km: 2.5, transfer_time: 60 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RideKind {
    Transit,
    Carpool,
}

#[derive(Debug, Clone)]
pub(crate) struct NetStop {
    pub id: String,
    pub position: GeoPoint,
}

#[derive(Debug, Clone)]
pub(crate) struct NetTrip {
    pub id: String,
    pub kind: RideKind,
    /// Stop indices in visiting order.
    pub stops: Vec<u32>,
}

/// One hop of a trip between consecutive stop times.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Connection {
    pub dep_time: Seconds,
    pub arr_time: Seconds,
    pub dep_stop: u32,
    pub arr_stop: u32,
    pub trip: u32,
    /// Position of the departing stop time within the trip.
    pub index: u32,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Link {
    pub to: u32,
    pub seconds: Seconds,
    pub km: f64,
}

/// Timetable compiled for querying. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct Network {
    pub(crate) config: PlannerConfig,
    pub(crate) stops: Vec<NetStop>,
    by_lat: Vec<u32>,
    pub(crate) trips: Vec<NetTrip>,
    trip_index: HashMap<String, u32>,
    pub(crate) connections: Vec<Connection>,
    link_offsets: Vec<u32>,
    links: Vec<Link>,
}

impl Network {
    pub fn new(t: &Timetable, footpaths: &[Footpath], config: PlannerConfig) -> Result<Self, PlannerError> {
        let stops: Vec<NetStop> =
            t.stops().iter().map(|s| NetStop { id: s.stop_id.clone(), position: s.position }).collect();
        let index_of = |id: &str| -> Option<u32> {
            stops.binary_search_by(|s| s.id.as_str().cmp(id)).ok().map(|i| i as u32)
        };
        let mut by_lat: Vec<u32> = (0..stops.len() as u32).collect();
        by_lat.sort_by(|&a, &b| stops[a as usize].position.lat.total_cmp(&stops[b as usize].position.lat));

        let mut trips = Vec::with_capacity(t.trips().len());
        let mut trip_index = HashMap::with_capacity(t.trips().len());
        let mut connections = Vec::new();
        for trip in t.trips() {
            let sts = t.stop_times(&trip.trip_id);
            let kind = match t.route(&trip.route_id) {
                Some(r) if is_poolline(r, &trip.trip_id) => RideKind::Carpool,
                _ => RideKind::Transit,
            };
            let k = trips.len() as u32;
            let stop_idx: Vec<u32> = sts.iter().map(|s| index_of(&s.stop_id).expect("timetable is consistent")).collect();
            for (i, w) in sts.windows(2).enumerate() {
                connections.push(Connection {
                    dep_time: w[0].departure_time,
                    arr_time: w[1].arrival_time,
                    dep_stop: stop_idx[i],
                    arr_stop: stop_idx[i + 1],
                    trip: k,
                    index: i as u32,
                });
            }
            trip_index.insert(trip.trip_id.clone(), k);
            trips.push(NetTrip { id: trip.trip_id.clone(), kind, stops: stop_idx });
        }
        connections.sort_by_key(|c| (c.dep_time, c.arr_time, c.trip, c.index));

        let mut adjacency: Vec<Vec<Link>> = vec![Vec::new(); stops.len()];
        for fp in footpaths {
            let from = index_of(&fp.from).ok_or_else(|| PlannerError::UnknownStop(fp.from.clone()))?;
            let to = index_of(&fp.to).ok_or_else(|| PlannerError::UnknownStop(fp.to.clone()))?;
            if from != to {
                adjacency[from as usize].push(Link { to, seconds: fp.seconds, km: fp.km });
            }
        }
        let mut link_offsets = Vec::with_capacity(stops.len() + 1);
        let mut links = Vec::new();
        link_offsets.push(0);
        for mut adj in adjacency {
            adj.sort_by_key(|l| (l.to, l.seconds));
            links.extend(adj);
            link_offsets.push(links.len() as u32);
        }

        Ok(Network { config, stops, by_lat, trips, trip_index, connections, link_offsets, links })
    }

    /// Compiles `t` with footpaths between all stops within
    /// `transfer_walk_km`.
    pub fn build(t: &Timetable, config: PlannerConfig, transfer_walk_km: f64) -> Self {
        let fps = build_footpaths(t, &config.model, transfer_walk_km);
        Network::new(t, &fps, config).expect("footpaths built from the same timetable")
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn stop_count(&self) -> usize {
        self.stops.len()
    }

    pub fn trip_count(&self) -> usize {
        self.trips.len()
    }

    pub fn connection_count(&self) -> usize {
        self.connections.len()
    }

    pub fn footpath_count(&self) -> usize {
        self.links.len()
    }

    pub fn trip_kind(&self, trip_id: &str) -> Option<RideKind> {
        self.trip_index.get(trip_id).map(|&k| self.trips[k as usize].kind)
    }

    pub(crate) fn trip_idx(&self, trip_id: &str) -> Option<u32> {
        self.trip_index.get(trip_id).copied()
    }

    pub(crate) fn links(&self, stop: u32) -> &[Link] {
        let (a, b) = (self.link_offsets[stop as usize], self.link_offsets[stop as usize + 1]);
        &self.links[a as usize..b as usize]
    }

    /// Stops within `max_road_km` of `p`, with walking time and road km.
    pub(crate) fn stops_within(&self, p: GeoPoint, max_road_km: f64) -> Vec<(u32, Seconds, f64)> {
        let model = &self.config.model;
        let max_dlat = (max_road_km / model.circuity / EARTH_RADIUS_KM).to_degrees();
        let lo = self.by_lat.partition_point(|&s| self.stops[s as usize].position.lat < p.lat - max_dlat);
        let mut out = Vec::new();
        for &s in &self.by_lat[lo..] {
            let q = self.stops[s as usize].position;
            if q.lat > p.lat + max_dlat {
                break;
            }
            let km = model.circuity * haversine_km(p, q);
            if km <= max_road_km {
                out.push((s, walk_seconds(p, q, model), km));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gtfs::{Stop, TimetableParts};

    fn stops_feed(points: &[(&str, f64, f64)]) -> Timetable {
        Timetable::from_parts(TimetableParts {
            stops: points
                .iter()
                .map(|(id, lat, lon)| Stop { stop_id: id.to_string(), name: String::new(), position: GeoPoint::new(*lat, *lon) })
                .collect(),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn colocated_stops_get_zero_second_link() {
        let t = stops_feed(&[("A", 45.5, -122.6), ("B", 45.5, -122.6)]);
        let fps = build_footpaths(&t, &TravelModel::default(), 1.0);
        assert_eq!(fps.len(), 2);
        assert!(fps.iter().all(|f| f.seconds == 0 && f.km == 0.0));
    }

    #[test]
    fn distant_stops_are_not_linked() {
        let t = stops_feed(&[("A", 45.5, -122.6), ("B", 45.6, -122.6)]);
        assert!(build_footpaths(&t, &TravelModel::default(), 2.5).is_empty());
    }

    #[test]
    fn one_road_km_takes_720_seconds() {
        // 1 road km = 1/1.3 great-circle km due north
        let dlat = (1.0 / 1.3 / EARTH_RADIUS_KM).to_degrees();
        let t = stops_feed(&[("A", 45.5, -122.6), ("B", 45.5 + dlat, -122.6)]);
        let fps = build_footpaths(&t, &TravelModel::default(), 1.0 + 1e-9);
        assert_eq!(fps.len(), 2);
        assert!((fps[0].km - 1.0).abs() < 1e-9);
        assert_eq!(fps[0].seconds, 720);
    }

    #[test]
    fn matches_all_pairs_scan() {
        let pts: Vec<(String, f64, f64)> = (0..60)
            .map(|i| {
                let f = i as f64;
                (format!("S{i}"), 45.5 + (f * 0.37).sin() * 0.03, -122.6 + (f * 0.91).cos() * 0.04)
            })
            .collect();
        let refs: Vec<(&str, f64, f64)> = pts.iter().map(|(a, b, c)| (a.as_str(), *b, *c)).collect();
        let t = stops_feed(&refs);
        let model = TravelModel::default();
        let fps = build_footpaths(&t, &model, 1.5);
        let mut brute = 0;
        for a in t.stops() {
            for b in t.stops() {
                if a.stop_id != b.stop_id && road_km(a.position, b.position, &model) <= 1.5 {
                    brute += 1;
                }
            }
        }
        assert_eq!(fps.len(), brute);
        assert!(brute > 0);
    }

    #[test]
    fn unknown_footpath_stop() {
        let t = stops_feed(&[("A", 45.5, -122.6)]);
        let fp = Footpath { from: "A".into(), to: "Z".into(), seconds: 1, km: 0.0 };
        assert_eq!(Network::new(&t, &[fp], PlannerConfig::default()).unwrap_err(), PlannerError::UnknownStop("Z".into()));
    }
}
