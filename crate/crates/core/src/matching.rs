//! Rider side: pick the earliest feasible itinerary among the planned
//! options, classify it, then enforce seat capacity on the drivers.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::geo::walk_seconds;
use crate::journey::{DriverId, DriverJourney};
use crate::planner::{plan, walk_only, Itinerary, LegKind, Network, PlanMode, PlanRequest};
use crate::{GeoPoint, Seconds, TravelModel};

pub type RiderId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rider {
    pub id: RiderId,
    pub origin: GeoPoint,
    pub destination: GeoPoint,
    pub departure_time: Seconds,
}

impl Rider {
    pub fn request(&self, mode: PlanMode, num_itineraries: usize) -> PlanRequest {
        PlanRequest::new(self.origin, self.destination, self.departure_time)
            .with_mode(mode)
            .with_num_itineraries(num_itineraries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Unserved,
    Foot,
    Carpooling,
    MultiCarpooling,
    Transit,
    Multimodal,
}

impl Mode {
    pub const ALL: [Mode; 6] =
        [Mode::Unserved, Mode::Foot, Mode::Carpooling, Mode::MultiCarpooling, Mode::Transit, Mode::Multimodal];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Unserved => "unserved",
            Mode::Foot => "foot",
            Mode::Carpooling => "carpooling",
            Mode::MultiCarpooling => "multi_carpooling",
            Mode::Transit => "transit",
            Mode::Multimodal => "multimodal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiderOutcome {
    pub rider_id: RiderId,
    pub mode: Mode,
    pub itinerary: Option<Itinerary>,
    /// Drivers whose PoolLines the itinerary rides, in leg order.
    pub drivers_used: Vec<DriverId>,
}

impl RiderOutcome {
    pub fn unserved(rider_id: RiderId) -> Self {
        RiderOutcome { rider_id, mode: Mode::Unserved, itinerary: None, drivers_used: Vec::new() }
    }

    pub fn served(rider_id: RiderId, it: Itinerary) -> Self {
        let mut drivers_used: Vec<DriverId> = Vec::new();
        for d in it.legs.iter().filter_map(|l| l.driver_id()) {
            if !drivers_used.contains(&d) {
                drivers_used.push(d);
            }
        }
        RiderOutcome { rider_id, mode: classify(&it), itinerary: Some(it), drivers_used }
    }

    pub fn is_served(&self) -> bool {
        self.mode != Mode::Unserved
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeasibilityRules {
    /// Total waiting, before the first boarding and at every transfer.
    pub max_wait: Seconds,
    pub max_walk_km: f64,
    /// Reject itineraries slower than walking the whole way.
    pub walk_time_bound: bool,
}

impl Default for FeasibilityRules {
    fn default() -> Self {
        FeasibilityRules { max_wait: 2700, max_walk_km: 2.5, walk_time_bound: true }
    }
}

impl FeasibilityRules {
    pub fn is_valid(&self) -> bool {
        self.max_wait > 0 && self.max_walk_km > 0.0
    }
}

pub fn is_feasible(it: &Itinerary, r: &Rider, rules: &FeasibilityRules, model: &TravelModel) -> bool {
    it.total_wait_s <= rules.max_wait
        && it.total_walk_km <= rules.max_walk_km
        && (!rules.walk_time_bound
            || it.arrive - r.departure_time <= walk_seconds(r.origin, r.destination, model))
}

pub fn classify(it: &Itinerary) -> Mode {
    match (it.count_kind(LegKind::Carpool), it.count_kind(LegKind::Transit)) {
        (0, 0) => Mode::Foot,
        (1, 0) => Mode::Carpooling,
        (_, 0) => Mode::MultiCarpooling,
        (0, _) => Mode::Transit,
        _ => Mode::Multimodal,
    }
}

/// Takes the shortest feasible candidate (earliest arrival, then fewer
/// rides, then less walking). Candidates may come from several plan calls.
pub fn choose<'a>(
    candidates: impl IntoIterator<Item = &'a Itinerary>,
    r: &Rider,
    rules: &FeasibilityRules,
    model: &TravelModel,
) -> RiderOutcome {
    candidates
        .into_iter()
        .filter(|it| is_feasible(it, r, rules, model))
        .min_by(|a, b| a.rank_cmp(b))
        .map(|it| RiderOutcome::served(r.id, it.clone()))
        .unwrap_or_else(|| RiderOutcome::unserved(r.id))
}

/// Plans `r` under every mode in `modes` and chooses among the union of the
/// results plus the walk-only itinerary.
pub fn resolve_rider(
    net: &Network,
    r: &Rider,
    modes: &[PlanMode],
    num_itineraries: usize,
    rules: &FeasibilityRules,
) -> RiderOutcome {
    let mut candidates: Vec<Itinerary> = modes.iter().flat_map(|&m| plan(net, &r.request(m, num_itineraries))).collect();
    candidates.push(walk_only(net, &r.request(PlanMode::WalkOnly, 1)));
    choose(&candidates, r, rules, &net.config().model)
}

/// Riders aboard each driver per journey segment (segment `i` runs from
/// stoptime `i` to `i + 1`).
pub fn segment_loads(outcomes: &[RiderOutcome], journeys: &[DriverJourney]) -> HashMap<DriverId, Vec<u32>> {
    let mut loads: HashMap<DriverId, Vec<u32>> =
        journeys.iter().map(|j| (j.driver_id, vec![0; j.stoptimes.len().saturating_sub(1)])).collect();
    for leg in outcomes.iter().filter_map(|o| o.itinerary.as_ref()).flat_map(|it| &it.legs) {
        let (Some(d), Some(i), Some(j)) = (leg.driver_id(), leg.board_index, leg.alight_index) else {
            continue;
        };
        if let Some(segs) = loads.get_mut(&d) {
            let end = j.min(segs.len());
            for s in &mut segs[i.min(end)..end] {
                *s += 1;
            }
        }
    }
    loads
}

/// Maximum simultaneous riders per driver.
pub fn occupancy(outcomes: &[RiderOutcome], journeys: &[DriverJourney]) -> BTreeMap<DriverId, u32> {
    segment_loads(outcomes, journeys)
        .into_iter()
        .map(|(d, segs)| (d, segs.into_iter().max().unwrap_or(0)))
        .collect()
}

/// Voids every driver whose load exceeds the seat capacity on some segment;
/// riders using a voided driver become unserved. Returns the voided drivers.
pub fn enforce_capacity(outcomes: &mut [RiderOutcome], journeys: &[DriverJourney]) -> BTreeSet<DriverId> {
    let capacity: HashMap<DriverId, u32> = journeys.iter().map(|j| (j.driver_id, j.seat_capacity)).collect();
    let voided: BTreeSet<DriverId> = occupancy(outcomes, journeys)
        .into_iter()
        .filter(|(d, max)| *max > capacity[d])
        .map(|(d, _)| d)
        .collect();
    if !voided.is_empty() {
        for o in outcomes.iter_mut() {
            if o.drivers_used.iter().any(|d| voided.contains(d)) {
                *o = RiderOutcome::unserved(o.rider_id);
            }
        }
    }
    voided
}

/// Intermediate journey stoptimes where some rider boards or alights, per
/// driver. Drivers without riders map to an empty set.
pub fn collect_used_stoptimes(
    outcomes: &[RiderOutcome],
    journeys: &[DriverJourney],
) -> BTreeMap<DriverId, BTreeSet<usize>> {
    let mut used: BTreeMap<DriverId, BTreeSet<usize>> =
        journeys.iter().map(|j| (j.driver_id, BTreeSet::new())).collect();
    let inner: HashMap<DriverId, std::ops::Range<usize>> =
        journeys.iter().map(|j| (j.driver_id, j.intermediate_indices())).collect();
    for leg in outcomes.iter().filter_map(|o| o.itinerary.as_ref()).flat_map(|it| &it.legs) {
        let Some(d) = leg.driver_id() else { continue };
        let (Some(set), Some(range)) = (used.get_mut(&d), inner.get(&d)) else { continue };
        for idx in [leg.board_index, leg.alight_index].into_iter().flatten() {
            if range.contains(&idx) {
                set.insert(idx);
            }
        }
    }
    used
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::injection::poolline_trip_id;
    use crate::journey::JourneyStopTime;
    use crate::planner::{Leg, Place};

    fn p(lat: f64) -> GeoPoint {
        GeoPoint::new(lat, -122.6)
    }

    fn leg(kind: LegKind, board: Seconds, alight: Seconds, km: f64, trip: Option<(&str, usize, usize)>) -> Leg {
        Leg {
            kind,
            from: Place { position: p(45.5), stop_id: None },
            to: Place { position: p(45.5), stop_id: None },
            board,
            alight,
            distance_km: km,
            trip_id: trip.map(|t| t.0.to_string()),
            board_index: trip.map(|t| t.1),
            alight_index: trip.map(|t| t.2),
        }
    }

    fn rider() -> Rider {
        // 0.1 degrees north: ~11.1 km, 14.5 road km, ~2.9 h on foot
        Rider { id: 1, origin: p(45.5), destination: p(45.6), departure_time: 36_000 }
    }

    fn carpool(driver: u64, board: Seconds, alight: Seconds, i: usize, j: usize) -> Leg {
        let id = poolline_trip_id(driver);
        let mut l = leg(LegKind::Carpool, board, alight, 5.0, None);
        l.trip_id = Some(id);
        l.board_index = Some(i);
        l.alight_index = Some(j);
        l
    }

    fn walk(board: Seconds, alight: Seconds, km: f64) -> Leg {
        leg(LegKind::Walk, board, alight, km, None)
    }

    #[test]
    fn wait_bound() {
        let rules = FeasibilityRules::default();
        let model = TravelModel::default();
        let ok = Itinerary::from_legs(36_000, vec![walk(36_000, 36_300, 0.4), carpool(1, 36_000 + 300 + 45 * 60, 40_000, 1, 2)]);
        assert_eq!(ok.total_wait_s, 2700);
        assert!(is_feasible(&ok, &rider(), &rules, &model));
        let late = Itinerary::from_legs(36_000, vec![walk(36_000, 36_300, 0.4), carpool(1, 36_000 + 300 + 46 * 60, 40_000, 1, 2)]);
        assert!(!is_feasible(&late, &rider(), &rules, &model));
    }

    #[test]
    fn walk_bound() {
        let rules = FeasibilityRules::default();
        let model = TravelModel::default();
        let it = |km: f64| {
            Itinerary::from_legs(36_000, vec![walk(36_000, 36_300, km), carpool(1, 36_400, 37_000, 1, 2), walk(37_000, 37_100, 0.1)])
        };
        assert!(is_feasible(&it(2.3), &rider(), &rules, &model));
        assert!(!is_feasible(&it(2.5), &rider(), &rules, &model));
    }

    #[test]
    fn slower_than_walking_is_infeasible() {
        let model = TravelModel::default();
        let r = rider();
        let walking = walk_seconds(r.origin, r.destination, &model);
        let slow = Itinerary::from_legs(36_000, vec![carpool(1, 36_000, 36_000 + walking + 1, 1, 2)]);
        assert!(!is_feasible(&slow, &r, &FeasibilityRules::default(), &model));
        let relaxed = FeasibilityRules { walk_time_bound: false, ..Default::default() };
        assert!(is_feasible(&slow, &r, &relaxed, &model));
    }

    #[test]
    fn pure_walk_feasible_only_within_walk_budget() {
        let model = TravelModel::default();
        let rules = FeasibilityRules::default();
        let mk = |dlat: f64| {
            let r = Rider { id: 0, origin: p(45.5), destination: p(45.5 + dlat), departure_time: 0 };
            let secs = walk_seconds(r.origin, r.destination, &model);
            let km = crate::geo::road_km(r.origin, r.destination, &model);
            (r.clone(), Itinerary::from_legs(0, vec![walk(0, secs, km)]))
        };
        let (r, it) = mk(0.01); // 1.45 road km
        assert!(is_feasible(&it, &r, &rules, &model));
        assert_eq!(choose([&it], &r, &rules, &model).mode, Mode::Foot);
        let (r, it) = mk(0.03); // 4.3 road km
        assert_eq!(choose([&it], &r, &rules, &model).mode, Mode::Unserved);
    }

    #[test]
    fn classification() {
        let w = || walk(0, 0, 0.0);
        let t = || leg(LegKind::Transit, 0, 0, 1.0, Some(("T", 0, 1)));
        let c = |d| carpool(d, 0, 0, 1, 2);
        let cls = |legs: Vec<Leg>| classify(&Itinerary::from_legs(0, legs));
        assert_eq!(cls(vec![w()]), Mode::Foot);
        assert_eq!(cls(vec![w(), c(1), w()]), Mode::Carpooling);
        assert_eq!(cls(vec![w(), c(1), w(), c(2), w()]), Mode::MultiCarpooling);
        assert_eq!(cls(vec![w(), t(), w()]), Mode::Transit);
        assert_eq!(cls(vec![w(), c(1), w(), t(), w()]), Mode::Multimodal);
        let o = RiderOutcome::served(3, Itinerary::from_legs(0, vec![w(), c(4), w(), c(2), w()]));
        assert_eq!(o.drivers_used, [4, 2]);
    }

    #[test]
    fn choose_prefers_earliest_feasible() {
        let model = TravelModel::default();
        let rules = FeasibilityRules::default();
        let r = rider();
        let fast_but_walky = Itinerary::from_legs(36_000, vec![walk(36_000, 36_100, 3.0), carpool(1, 36_200, 37_000, 1, 2)]);
        let slower = Itinerary::from_legs(36_000, vec![walk(36_000, 36_100, 0.5), carpool(2, 36_200, 37_500, 1, 2)]);
        let slowest = Itinerary::from_legs(36_000, vec![walk(36_000, 36_100, 0.5), carpool(3, 36_200, 38_000, 1, 2)]);
        let o = choose([&slowest, &fast_but_walky, &slower], &r, &rules, &model);
        assert_eq!(o.drivers_used, [2]);
        assert_eq!(o.mode, Mode::Carpooling);
    }

    fn journey(driver: DriverId, capacity: u32, n: usize) -> DriverJourney {
        DriverJourney {
            driver_id: driver,
            seat_capacity: capacity,
            stoptimes: (0..n)
                .map(|i| JourneyStopTime {
                    location: p(45.5 + i as f64 * 0.01),
                    stop_ref: (i > 0 && i + 1 < n).then(|| format!("MP{i}")),
                    arrival: 36_000 + i as Seconds * 100,
                    departure: 36_000 + i as Seconds * 100,
                })
                .collect(),
            baseline_km: 3.0,
            length_km: 3.3,
        }
    }

    fn carpool_rider(id: RiderId, driver: DriverId, i: usize, j: usize) -> RiderOutcome {
        RiderOutcome::served(id, Itinerary::from_legs(36_000, vec![walk(36_000, 36_000, 0.0), carpool(driver, 36_000 + 100 * i as u32, 36_000 + 100 * j as u32, i, j)]))
    }

    #[test]
    fn capacity_within_limit_is_unchanged() {
        let js = [journey(1, 4, 4)];
        let mut os: Vec<_> = (0..3).map(|r| carpool_rider(r, 1, 1, 2)).collect();
        let before = os.clone();
        assert!(enforce_capacity(&mut os, &js).is_empty());
        assert_eq!(os, before);
    }

    #[test]
    fn overloaded_driver_is_voided() {
        let js = [journey(1, 4, 4), journey(2, 4, 4)];
        let mut os: Vec<_> = (0..5).map(|r| carpool_rider(r, 1, 1, 2)).collect();
        os.push(carpool_rider(9, 2, 1, 2));
        let voided = enforce_capacity(&mut os, &js);
        assert_eq!(voided, BTreeSet::from([1]));
        assert!(os[..5].iter().all(|o| o.mode == Mode::Unserved && o.itinerary.is_none()));
        assert_eq!(os[5].mode, Mode::Carpooling);
    }

    #[test]
    fn no_carpool_riders_is_identity() {
        let js = [journey(1, 1, 4)];
        let mut os = vec![RiderOutcome::unserved(0), RiderOutcome::served(1, Itinerary::from_legs(0, vec![walk(0, 10, 0.1)]))];
        let before = os.clone();
        assert!(enforce_capacity(&mut os, &js).is_empty());
        assert_eq!(os, before);
    }

    #[test]
    fn occupancy_counts_overlap_only() {
        let js = [journey(1, 4, 4), journey(2, 4, 4), journey(3, 4, 4)];
        let os = vec![
            carpool_rider(0, 1, 0, 2),
            carpool_rider(1, 1, 1, 3),
            carpool_rider(2, 2, 0, 1),
            carpool_rider(3, 2, 1, 3),
        ];
        let occ = occupancy(&os, &js);
        assert_eq!(occ[&1], 2);
        assert_eq!(occ[&2], 1);
        assert_eq!(occ[&3], 0);
    }

    #[test]
    fn used_stoptimes() {
        let js = [journey(1, 4, 4), journey(2, 4, 4), journey(3, 4, 3)];
        let os = vec![carpool_rider(0, 1, 1, 2), carpool_rider(1, 2, 0, 1)];
        let used = collect_used_stoptimes(&os, &js);
        assert_eq!(used[&1], BTreeSet::from([1, 2]));
        assert_eq!(used[&2], BTreeSet::from([1]));
        assert!(used[&3].is_empty());
    }
}
