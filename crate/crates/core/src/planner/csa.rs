use std::cmp::Ordering;

use super::network::{Connection, Network};
use super::{Itinerary, Leg, LegKind, Place, PlanRequest, RideKind};
use crate::geo::{road_km, walk_seconds};
use crate::Seconds;

/// Label key: arrival, then rides, then walked km.
#[derive(Debug, Clone, Copy)]
struct Key {
    time: Seconds,
    rides: u32,
    walk_km: f64,
}

impl Key {
    fn beats(&self, other: &Key) -> bool {
        (self.time, self.rides)
            .cmp(&(other.time, other.rides))
            .then(self.walk_km.total_cmp(&other.walk_km))
            == Ordering::Less
    }
}

/// Search-tree node; labels point into an append-only arena of these.
#[derive(Debug, Clone, Copy)]
enum Node {
    Access { stop: u32, seconds: Seconds, km: f64 },
    Ride { from: usize, board: usize, alight: usize },
    Transfer { ride: usize },
    Footpath { ride: usize, to: u32, seconds: Seconds, km: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Boarding {
    rides: u32,
    walk_km: f64,
    node: usize,
    conn: usize,
}

#[derive(Debug, Clone, Copy)]
enum Via {
    Direct,
    Egress { ride: usize, seconds: Seconds, km: f64 },
}

/// Earliest-arrival itinerary for `req`. Ties on arrival go to fewer rides,
/// then less walking.
pub fn earliest_arrival(net: &Network, req: &PlanRequest) -> Option<Itinerary> {
    Some(search(net, req, &[]))
}

/// Connection scan that skips every trip flagged in `banned` (indexed by
/// network trip; an empty slice bans nothing).
pub(crate) fn search(net: &Network, req: &PlanRequest, banned: &[bool]) -> Itinerary {
    let cfg = net.config();
    let model = &cfg.model;
    let direct_s = walk_seconds(req.from, req.to, model);
    let direct_km = road_km(req.from, req.to, model);
    let mut best = (Key { time: req.departure.saturating_add(direct_s), rides: 0, walk_km: direct_km }, Via::Direct);

    let mut arena: Vec<Node> = Vec::new();
    let mut ready: Vec<Option<(Key, usize)>> = vec![None; net.stop_count()];
    let mut egress: Vec<Option<(Seconds, f64)>> = vec![None; net.stop_count()];
    let mut boarded: Vec<Option<Boarding>> = vec![None; net.trip_count()];

    let rides_allowed = net.trips.iter().any(|t| req.mode.allows(t.kind));
    if rides_allowed {
        for (s, seconds, km) in net.stops_within(req.to, cfg.access_walk_km) {
            egress[s as usize] = Some((seconds, km));
        }
        for (s, seconds, km) in net.stops_within(req.from, cfg.access_walk_km) {
            let key = Key { time: req.departure + seconds, rides: 0, walk_km: km };
            arena.push(Node::Access { stop: s, seconds, km });
            ready[s as usize] = Some((key, arena.len() - 1));
        }
    }

    let start = net.connections.partition_point(|c| c.dep_time < req.departure);
    let end = if rides_allowed { net.connections.len() } else { start };
    for ci in start..end {
        let c: &Connection = &net.connections[ci];
        if c.dep_time > best.0.time {
            break;
        }
        let k = c.trip as usize;
        if !req.mode.allows(net.trips[k].kind) || banned.get(k).copied().unwrap_or(false) {
            continue;
        }
        if let Some((key, node)) = ready[c.dep_stop as usize] {
            if key.time <= c.dep_time {
                let better = match boarded[k] {
                    None => true,
                    Some(b) => (key.rides, key.walk_km) < (b.rides, b.walk_km),
                };
                if better {
                    boarded[k] = Some(Boarding { rides: key.rides, walk_km: key.walk_km, node, conn: ci });
                }
            }
        }
        let Some(b) = boarded[k] else { continue };

        let rides = b.rides + 1;
        let mut ride_node = None;
        let mut ride = |arena: &mut Vec<Node>| -> usize {
            *ride_node.get_or_insert_with(|| {
                arena.push(Node::Ride { from: b.node, board: b.conn, alight: ci });
                arena.len() - 1
            })
        };

        if let Some((seconds, km)) = egress[c.arr_stop as usize] {
            let key = Key { time: c.arr_time + seconds, rides, walk_km: b.walk_km + km };
            if key.beats(&best.0) {
                let r = ride(&mut arena);
                best = (key, Via::Egress { ride: r, seconds, km });
            }
        }

        let key = Key { time: c.arr_time + cfg.transfer_time, rides, walk_km: b.walk_km };
        if ready[c.arr_stop as usize].is_none_or(|(old, _)| key.beats(&old)) {
            let r = ride(&mut arena);
            arena.push(Node::Transfer { ride: r });
            ready[c.arr_stop as usize] = Some((key, arena.len() - 1));
        }

        for link in net.links(c.arr_stop) {
            let key = Key { time: c.arr_time + link.seconds, rides, walk_km: b.walk_km + link.km };
            if ready[link.to as usize].is_none_or(|(old, _)| key.beats(&old)) {
                let r = ride(&mut arena);
                arena.push(Node::Footpath { ride: r, to: link.to, seconds: link.seconds, km: link.km });
                ready[link.to as usize] = Some((key, arena.len() - 1));
            }
        }
    }

    let legs = match best.1 {
        Via::Direct => vec![walk_leg(req.from, None, req.to, None, req.departure, direct_s, direct_km)],
        Via::Egress { ride, seconds, km } => {
            let mut legs = unwind(net, req, &arena, ride);
            let last = legs.last().expect("ride chain has legs");
            let (at, stop) = (last.alight, last.to.clone());
            legs.push(walk_leg(stop.position, stop.stop_id, req.to, None, at, seconds, km));
            legs
        }
    };
    let it = Itinerary::from_legs(req.departure, legs);
    debug_assert_eq!(it.arrive, best.0.time);
    it
}

fn walk_leg(
    from: crate::GeoPoint,
    from_stop: Option<String>,
    to: crate::GeoPoint,
    to_stop: Option<String>,
    start: Seconds,
    seconds: Seconds,
    km: f64,
) -> Leg {
    Leg {
        kind: LegKind::Walk,
        from: Place { position: from, stop_id: from_stop },
        to: Place { position: to, stop_id: to_stop },
        board: start,
        alight: start + seconds,
        distance_km: km,
        trip_id: None,
        board_index: None,
        alight_index: None,
    }
}

/// Legs leading to and including the ride at `node`.
fn unwind(net: &Network, req: &PlanRequest, arena: &[Node], node: usize) -> Vec<Leg> {
    let mut chain = Vec::new();
    let mut cur = Some(node);
    while let Some(n) = cur {
        chain.push(n);
        cur = match arena[n] {
            Node::Access { .. } => None,
            Node::Ride { from, .. } => Some(from),
            Node::Transfer { ride } | Node::Footpath { ride, .. } => Some(ride),
        };
    }

    let place = |s: u32| {
        let st = &net.stops[s as usize];
        Place { position: st.position, stop_id: Some(st.id.clone()) }
    };
    let mut legs: Vec<Leg> = Vec::new();
    for &n in chain.iter().rev() {
        match arena[n] {
            Node::Access { stop, seconds, km } => {
                let to = place(stop);
                legs.push(walk_leg(req.from, None, to.position, to.stop_id, req.departure, seconds, km));
            }
            Node::Ride { board, alight, .. } => {
                let (b, a) = (&net.connections[board], &net.connections[alight]);
                let trip = &net.trips[b.trip as usize];
                let (i, j) = (b.index as usize, a.index as usize + 1);
                let distance_km = trip.stops[i..=j]
                    .windows(2)
                    .map(|w| road_km(net.stops[w[0] as usize].position, net.stops[w[1] as usize].position, &net.config.model))
                    .sum();
                legs.push(Leg {
                    kind: match trip.kind {
                        RideKind::Transit => LegKind::Transit,
                        RideKind::Carpool => LegKind::Carpool,
                    },
                    from: place(b.dep_stop),
                    to: place(a.arr_stop),
                    board: b.dep_time,
                    alight: a.arr_time,
                    distance_km,
                    trip_id: Some(trip.id.clone()),
                    board_index: Some(i),
                    alight_index: Some(j),
                });
            }
            Node::Transfer { .. } => {}
            Node::Footpath { to, seconds, km, .. } => {
                let last = legs.last().expect("footpath follows a ride");
                let (at, from) = (last.alight, last.to.clone());
                let to = place(to);
                legs.push(walk_leg(from.position, from.stop_id, to.position, to.stop_id, at, seconds, km));
            }
        }
    }
    legs
}
