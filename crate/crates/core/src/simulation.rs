//! Runs one scenario under three systems and collects the comparison:
//! transit alone (`NoCarpooling`), carpooling beside transit with no mixing
//! (`Current`), and PoolLines integrated into the transit network
//! (`Integrated`).
//!
//! All riders in the simulation window are resolved and compete for seats;
//! statistics only count riders departing inside the stats window.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::road_km;
use crate::gtfs::{RouteType, Timetable};
use crate::injection::{inject_poollines, InjectError};
use crate::journey::{
    compute_driver_journeys, prune_journey, select_meeting_points, DetourParams, Driver, DriverId, DriverJourney,
    JourneyError,
};
use crate::matching::{
    choose, collect_used_stoptimes, enforce_capacity, occupancy, FeasibilityRules, Mode, Rider, RiderOutcome,
};
use crate::planner::{plan, walk_only, Itinerary, Network, PlanMode, PlannerConfig};
use crate::{Seconds, TravelModel};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Journey(#[from] JourneyError),
    #[error(transparent)]
    Inject(#[from] InjectError),
    #[error("invalid simulation config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemVariant {
    NoCarpooling,
    Current,
    Integrated,
}

impl SystemVariant {
    pub const ALL: [SystemVariant; 3] = [SystemVariant::NoCarpooling, SystemVariant::Current, SystemVariant::Integrated];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemVariant::NoCarpooling => "no_carpooling",
            SystemVariant::Current => "current",
            SystemVariant::Integrated => "integrated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.as_str() == s)
    }

    /// Plan calls whose results, plus walking, form the rider's options.
    /// Each variant's options contain the previous variant's, so a rider
    /// served by one is served by the next.
    pub fn plan_modes(self) -> &'static [PlanMode] {
        match self {
            SystemVariant::NoCarpooling => &[PlanMode::TransitNoPool],
            SystemVariant::Current => &[PlanMode::TransitNoPool, PlanMode::PoolOnly],
            SystemVariant::Integrated => &[PlanMode::TransitNoPool, PlanMode::PoolOnly, PlanMode::Transit],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionModel {
    pub grams_per_km: f64,
}

impl Default for EmissionModel {
    fn default() -> Self {
        EmissionModel { grams_per_km: 97.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub planner: PlannerConfig,
    /// Stop-to-stop transfer walking radius, road km.
    pub transfer_walk_km: f64,
    pub detour: DetourParams,
    pub rules: FeasibilityRules,
    pub emission: EmissionModel,
    /// GTFS route types whose stops serve as meeting points.
    pub meeting_point_route_types: Vec<u16>,
    pub num_itineraries: usize,
    pub enforce_capacity: bool,
    /// Service day for the PoolLines when the feed has calendars.
    pub service_date: Option<NaiveDate>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            planner: PlannerConfig::default(),
            transfer_walk_km: 1.0,
            detour: DetourParams::default(),
            rules: FeasibilityRules::default(),
            emission: EmissionModel::default(),
            meeting_point_route_types: vec![RouteType::Subway.code()],
            num_itineraries: 10,
            enforce_capacity: true,
            service_date: None,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Invalid(m.to_string()));
        if !(self.detour.tau >= 0.0) {
            return bad("tau must be non-negative");
        }
        if !self.planner.model.is_valid() {
            return bad("travel model speeds and circuity must be positive");
        }
        if !self.rules.is_valid() {
            return bad("feasibility bounds must be positive");
        }
        if !(self.emission.grams_per_km > 0.0) {
            return bad("emission factor must be positive");
        }
        if !(self.transfer_walk_km >= 0.0 && self.planner.access_walk_km >= 0.0) {
            return bad("walking radii must be non-negative");
        }
        if self.num_itineraries == 0 {
            return bad("num_itineraries must be at least 1");
        }
        if self.meeting_point_route_types.is_empty() {
            return bad("no meeting point route types");
        }
        Ok(())
    }

    pub fn model(&self) -> &TravelModel {
        &self.planner.model
    }
}

/// Driver journeys, the augmented timetable and its compiled network.
pub struct Prepared {
    pub journeys: Vec<DriverJourney>,
    pub timetable: Timetable,
    pub network: Network,
}

pub fn prepare(t: &Timetable, drivers: &[Driver], cfg: &SimulationConfig, seed: u64) -> Result<Prepared, SimError> {
    cfg.validate()?;
    let journeys = if drivers.is_empty() {
        Vec::new()
    } else {
        let types: Vec<RouteType> = cfg.meeting_point_route_types.iter().map(|&c| RouteType::from_code(c)).collect();
        let mps = select_meeting_points(t, &types)?;
        compute_driver_journeys(drivers, &mps, cfg.model(), &cfg.detour, seed)
    };
    let timetable = inject_poollines(t, &journeys, cfg.service_date)?;
    let network = Network::build(&timetable, cfg.planner, cfg.transfer_walk_km);
    Ok(Prepared { journeys, timetable, network })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeShare {
    pub mode: Mode,
    pub riders: usize,
    pub percent: f64,
}

/// A driver's detour as driven: intermediate stops nobody used are skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverDetour {
    pub driver_id: DriverId,
    pub baseline_km: f64,
    pub accepted_km: f64,
    pub km: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub variant: SystemVariant,
    /// Outcomes of riders departing in the stats window, by rider id.
    pub outcomes: Vec<RiderOutcome>,
    pub modal_split: Vec<ModeShare>,
    /// Drivers by maximum simultaneous riders, indexed by rider count.
    pub occupancy_hist: Vec<usize>,
    pub detours: Vec<DriverDetour>,
    pub voided_drivers: Vec<DriverId>,
}

impl SimulationReport {
    pub fn served(&self) -> usize {
        self.outcomes.iter().filter(|o| o.is_served()).count()
    }

    pub fn unserved_share(&self) -> f64 {
        share(self.outcomes.len() - self.served(), self.outcomes.len())
    }

    /// Share of drivers that carried two or more riders at once.
    pub fn shared_ride_share(&self) -> f64 {
        share(self.occupancy_hist.iter().skip(2).sum(), self.occupancy_hist.iter().sum())
    }
}

fn share(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        n as f64 / total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Savings {
    /// Riders served by Integrated but not by Current.
    pub riders_gained: usize,
    pub vkt_saved_km: f64,
    pub co2_saved_kg_per_hour: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reports: Vec<SimulationReport>,
    pub savings: Option<Savings>,
}

impl Comparison {
    pub fn report(&self, v: SystemVariant) -> Option<&SimulationReport> {
        self.reports.iter().find(|r| r.variant == v)
    }
}

/// Options planned for one rider, shared by all variants.
struct RiderPlans {
    by_mode: Vec<(PlanMode, Vec<Itinerary>)>,
    walk: Itinerary,
}

impl RiderPlans {
    fn candidates(&self, v: SystemVariant) -> impl Iterator<Item = &Itinerary> {
        self.by_mode
            .iter()
            .filter(move |(m, _)| v.plan_modes().contains(m))
            .flat_map(|(_, its)| its)
            .chain(std::iter::once(&self.walk))
    }
}

/// Runs every variant in `variants` (in the given order) over `riders`.
/// Savings are reported when both Current and Integrated are run.
pub fn run(
    riders: &[Rider],
    stats_window: (Seconds, Seconds),
    prepared: &Prepared,
    variants: &[SystemVariant],
    cfg: &SimulationConfig,
) -> Comparison {
    let mut modes: Vec<PlanMode> = Vec::new();
    for m in variants.iter().flat_map(|v| v.plan_modes()) {
        if !modes.contains(m) {
            modes.push(*m);
        }
    }
    let net = &prepared.network;
    let plans: Vec<RiderPlans> = riders
        .par_iter()
        .map(|r| RiderPlans {
            by_mode: modes.iter().map(|&m| (m, plan(net, &r.request(m, cfg.num_itineraries)))).collect(),
            walk: walk_only(net, &r.request(PlanMode::WalkOnly, 1)),
        })
        .collect();

    let reports: Vec<SimulationReport> = variants
        .iter()
        .map(|&v| {
            let outcomes: Vec<RiderOutcome> = riders
                .iter()
                .zip(&plans)
                .map(|(r, p)| choose(p.candidates(v), r, &cfg.rules, cfg.model()))
                .collect();
            summarize(v, riders, outcomes, stats_window, &prepared.journeys, cfg)
        })
        .collect();

    let savings = match (
        reports.iter().find(|r| r.variant == SystemVariant::Current),
        reports.iter().find(|r| r.variant == SystemVariant::Integrated),
    ) {
        (Some(c), Some(i)) => {
            let (vkt, co2) = vkt_and_co2(c, i, riders, cfg.model(), &cfg.emission, stats_window.1 - stats_window.0);
            let gained = gained_riders(c, i).len();
            Some(Savings { riders_gained: gained, vkt_saved_km: vkt, co2_saved_kg_per_hour: co2 })
        }
        _ => None,
    };
    Comparison { reports, savings }
}

fn summarize(
    variant: SystemVariant,
    riders: &[Rider],
    mut outcomes: Vec<RiderOutcome>,
    stats_window: (Seconds, Seconds),
    journeys: &[DriverJourney],
    cfg: &SimulationConfig,
) -> SimulationReport {
    let voided = if cfg.enforce_capacity { enforce_capacity(&mut outcomes, journeys) } else { BTreeSet::new() };
    let used = collect_used_stoptimes(&outcomes, journeys);
    let detours = journeys
        .iter()
        .map(|j| {
            let pruned = prune_journey(j, &used[&j.driver_id], cfg.model());
            DriverDetour {
                driver_id: j.driver_id,
                baseline_km: j.baseline_km,
                accepted_km: j.detour_km(),
                km: pruned.detour_km(),
                ratio: pruned.detour_ratio(),
            }
        })
        .collect();

    let mut occupancy_hist = Vec::new();
    for (_, max) in occupancy(&outcomes, journeys) {
        let max = max as usize;
        if occupancy_hist.len() <= max {
            occupancy_hist.resize(max + 1, 0);
        }
        occupancy_hist[max] += 1;
    }

    let in_window = |r: &Rider| (stats_window.0..=stats_window.1).contains(&r.departure_time);
    let mut stats: Vec<RiderOutcome> =
        riders.iter().zip(outcomes).filter(|(r, _)| in_window(r)).map(|(_, o)| o).collect();
    stats.sort_by_key(|o| o.rider_id);

    let mut counts: BTreeMap<Mode, usize> = Mode::ALL.iter().map(|&m| (m, 0)).collect();
    for o in &stats {
        *counts.get_mut(&o.mode).expect("all modes counted") += 1;
    }
    let modal_split = Mode::ALL
        .iter()
        .map(|&m| ModeShare { mode: m, riders: counts[&m], percent: 100.0 * share(counts[&m], stats.len()) })
        .collect();

    SimulationReport {
        variant,
        outcomes: stats,
        modal_split,
        occupancy_hist,
        detours,
        voided_drivers: voided.into_iter().collect(),
    }
}

/// Riders served in `integrated` but not in `current`, by id.
pub fn gained_riders(current: &SimulationReport, integrated: &SimulationReport) -> BTreeSet<u64> {
    let served_now: BTreeSet<u64> = current.outcomes.iter().filter(|o| o.is_served()).map(|o| o.rider_id).collect();
    integrated
        .outcomes
        .iter()
        .filter(|o| o.is_served() && !served_now.contains(&o.rider_id))
        .map(|o| o.rider_id)
        .collect()
}

/// Car kilometres avoided by riders newly served under Integrated, less the
/// detours driven for them, and the CO2 this saves per hour.
///
/// Each gained rider is counted as a trip that would otherwise have been
/// driven directly; each driver carrying a gained rider is charged its full
/// effective detour.
pub fn vkt_and_co2(
    current: &SimulationReport,
    integrated: &SimulationReport,
    riders: &[Rider],
    model: &TravelModel,
    em: &EmissionModel,
    stats_window_s: Seconds,
) -> (f64, f64) {
    let gained = gained_riders(current, integrated);
    if gained.is_empty() {
        return (0.0, 0.0);
    }
    let by_id: HashMap<u64, &Rider> = riders.iter().map(|r| (r.id, r)).collect();
    let avoided: f64 = gained.iter().map(|id| by_id[id]).map(|r| road_km(r.origin, r.destination, model)).sum();
    let carriers: BTreeSet<DriverId> = integrated
        .outcomes
        .iter()
        .filter(|o| gained.contains(&o.rider_id))
        .flat_map(|o| o.drivers_used.iter().copied())
        .collect();
    let detour: f64 = integrated.detours.iter().filter(|d| carriers.contains(&d.driver_id)).map(|d| d.km).sum();
    let vkt = avoided - detour;
    (vkt, co2_kg_per_hour(vkt, em, stats_window_s))
}

/// Kilograms of CO2 per hour for `vkt_km` accumulated over a window of
/// `window_s` seconds.
pub fn co2_kg_per_hour(vkt_km: f64, em: &EmissionModel, window_s: Seconds) -> f64 {
    if window_s == 0 {
        return 0.0;
    }
    vkt_km * em.grams_per_km / 1000.0 * (3600.0 / window_s as f64)
}
