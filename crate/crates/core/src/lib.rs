//! Carpooling driver trips modelled as ephemeral single-trip transit lines
//! ("PoolLines") inside a GTFS timetable, a multimodal earliest-arrival
//! planner over the combined network, and a simulator comparing transit
//! alone, carpooling beside transit, and carpooling integrated with transit.

pub mod geo;
pub mod gtfs;
pub mod injection;
pub mod journey;
pub mod matching;
pub mod planner;
pub mod report;
pub mod scenario;
pub mod simulation;
pub mod synthetic;

/// Seconds since service-day midnight; may exceed 24 h.
pub type Seconds = u32;

pub type GeoPoint = geo::GeoPoint<f64>;
pub type TravelModel = geo::TravelModel<f64>;
