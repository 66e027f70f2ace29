use super::csa::search;
use super::{Itinerary, Leg, LegKind, Network, Place, PlanMode, PlanRequest};
use crate::geo::{road_km, walk_seconds};

/// Walking straight from origin to destination.
pub fn walk_only(net: &Network, req: &PlanRequest) -> Itinerary {
    let model = &net.config().model;
    let seconds = walk_seconds(req.from, req.to, model);
    let leg = Leg {
        kind: LegKind::Walk,
        from: Place { position: req.from, stop_id: None },
        to: Place { position: req.to, stop_id: None },
        board: req.departure,
        alight: req.departure + seconds,
        distance_km: road_km(req.from, req.to, model),
        trip_id: None,
        board_index: None,
        alight_index: None,
    };
    Itinerary::from_legs(req.departure, vec![leg])
}

/// Up to `req.num_itineraries` options, earliest arrival first.
///
/// Each further option bans the first ride of every option found so far and
/// searches again. The walk-only itinerary closes the list when there is
/// room for it.
pub fn plan(net: &Network, req: &PlanRequest) -> Vec<Itinerary> {
    let limit = req.num_itineraries.max(1);
    let walk = walk_only(net, req);
    if req.mode == PlanMode::WalkOnly {
        return vec![walk];
    }
    let mut banned = vec![false; net.trip_count()];
    let mut out: Vec<Itinerary> = Vec::new();
    while out.len() < limit {
        let it = search(net, req, &banned);
        let Some(first) = it.first_ride_trip() else {
            break;
        };
        let k = net.trip_idx(first).expect("ride legs use network trips") as usize;
        if out.contains(&it) || banned[k] {
            break;
        }
        banned[k] = true;
        out.push(it);
    }
    if out.len() < limit && !out.contains(&walk) {
        out.push(walk);
    }
    out
}
