//! Time-dependent multimodal earliest-arrival planning over a timetable
//! that may contain PoolLines.
//!
//! The search is a connection scan: every stop-to-stop hop of every trip is
//! sorted by departure and relaxed once. Riders reach the network by walking
//! from the request origin to nearby stops, change vehicles at the same stop
//! (after a minimum transfer time) or along a footpath, and finish with a walk
//! to the destination. Walking straight to the destination is always an
//! option, so a query never comes back empty.

mod csa;
mod network;
mod plan;
mod query;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::injection::driver_id_of_trip;
use crate::journey::DriverId;
use crate::{GeoPoint, Seconds};

pub use csa::earliest_arrival;
pub use network::{build_footpaths, Footpath, Network, PlannerConfig, RideKind};
pub use plan::{plan, walk_only};

#[derive(Debug, Error, PartialEq)]
pub enum PlannerError {
    #[error("footpath references unknown stop {0:?}")]
    UnknownStop(String),
    #[error("bad plan query: {0}")]
    BadQuery(String),
}

/// Which vehicles a query may ride.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlanMode {
    /// Walk, transit and PoolLines.
    Transit,
    WalkOnly,
    TransitNoPool,
    PoolOnly,
}

impl PlanMode {
    pub fn allows(self, kind: RideKind) -> bool {
        match self {
            PlanMode::Transit => true,
            PlanMode::WalkOnly => false,
            PlanMode::TransitNoPool => kind == RideKind::Transit,
            PlanMode::PoolOnly => kind == RideKind::Carpool,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PlanMode::Transit => "TRANSIT",
            PlanMode::WalkOnly => "WALK",
            PlanMode::TransitNoPool => "TRANSIT_NO_POOL",
            PlanMode::PoolOnly => "POOL_ONLY",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [PlanMode::Transit, PlanMode::WalkOnly, PlanMode::TransitNoPool, PlanMode::PoolOnly]
            .into_iter()
            .find(|m| m.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub from: GeoPoint,
    pub to: GeoPoint,
    pub departure: Seconds,
    pub date: Option<NaiveDate>,
    pub num_itineraries: usize,
    pub mode: PlanMode,
}

impl PlanRequest {
    pub fn new(from: GeoPoint, to: GeoPoint, departure: Seconds) -> Self {
        PlanRequest { from, to, departure, date: None, num_itineraries: 10, mode: PlanMode::Transit }
    }

    pub fn with_mode(mut self, mode: PlanMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_num_itineraries(mut self, n: usize) -> Self {
        self.num_itineraries = n.max(1);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LegKind {
    Walk,
    Transit,
    Carpool,
}

impl LegKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LegKind::Walk => "walk",
            LegKind::Transit => "transit",
            LegKind::Carpool => "carpool",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Place {
    pub position: GeoPoint,
    pub stop_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub kind: LegKind,
    pub from: Place,
    pub to: Place,
    pub board: Seconds,
    pub alight: Seconds,
    pub distance_km: f64,
    pub trip_id: Option<String>,
    /// Positions of the boarding and alighting stop times within the trip.
    pub board_index: Option<usize>,
    pub alight_index: Option<usize>,
}

impl Leg {
    pub fn is_ride(&self) -> bool {
        self.kind != LegKind::Walk
    }

    pub fn duration(&self) -> Seconds {
        self.alight - self.board
    }

    pub fn driver_id(&self) -> Option<DriverId> {
        match self.kind {
            LegKind::Carpool => self.trip_id.as_deref().and_then(driver_id_of_trip),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Itinerary {
    pub legs: Vec<Leg>,
    pub depart: Seconds,
    pub arrive: Seconds,
    pub total_walk_km: f64,
    pub total_wait_s: Seconds,
}

impl Itinerary {
    /// Assembles an itinerary leaving at `depart`; totals are derived from
    /// the legs.
    pub fn from_legs(depart: Seconds, legs: Vec<Leg>) -> Self {
        let total_walk_km = legs.iter().filter(|l| l.kind == LegKind::Walk).map(|l| l.distance_km).sum();
        let mut total_wait_s = 0;
        let mut clock = depart;
        for leg in &legs {
            total_wait_s += leg.board - clock;
            clock = leg.alight;
        }
        Itinerary { arrive: clock, legs, depart, total_walk_km, total_wait_s }
    }

    pub fn ride_count(&self) -> usize {
        self.legs.iter().filter(|l| l.is_ride()).count()
    }

    pub fn first_ride_trip(&self) -> Option<&str> {
        self.legs.iter().find(|l| l.is_ride()).and_then(|l| l.trip_id.as_deref())
    }

    pub fn duration(&self) -> Seconds {
        self.arrive - self.depart
    }

    pub fn count_kind(&self, kind: LegKind) -> usize {
        self.legs.iter().filter(|l| l.kind == kind).count()
    }

    /// Ordering used to pick the "shortest" option: earliest arrival, then
    /// fewer rides, then less walking.
    pub fn rank_cmp(&self, other: &Itinerary) -> std::cmp::Ordering {
        (self.arrive, self.ride_count())
            .cmp(&(other.arrive, other.ride_count()))
            .then(self.total_walk_km.total_cmp(&other.total_walk_km))
    }
}
