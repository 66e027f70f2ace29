//! Synthetic demand: drivers and riders with origins and destinations drawn
//! from a weighted mixture of lat/lon rectangles and departures uniform over
//! the simulation window.

use std::io::{Read, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::EARTH_RADIUS_KM;
use crate::journey::Driver;
use crate::matching::Rider;
use crate::{GeoPoint, Seconds};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario config: {0}")]
    Invalid(String),
    #[error("agents file line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
    /// Relative sampling weight; defaults to the rectangle's area.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

impl Rectangle {
    pub fn new(min_lat: f64, max_lat: f64, min_lon: f64, max_lon: f64) -> Self {
        Rectangle { min_lat, max_lat, min_lon, max_lon, weight: None }
    }

    pub fn with_weight(mut self, w: f64) -> Self {
        self.weight = Some(w);
        self
    }

    /// Area on the sphere, km².
    pub fn area_km2(&self) -> f64 {
        let dlon = (self.max_lon - self.min_lon).to_radians();
        EARTH_RADIUS_KM * EARTH_RADIUS_KM * (self.max_lat.to_radians().sin() - self.min_lat.to_radians().sin()) * dlon
    }

    pub fn effective_weight(&self) -> f64 {
        self.weight.unwrap_or_else(|| self.area_km2())
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        (self.min_lat..=self.max_lat).contains(&p.lat) && (self.min_lon..=self.max_lon).contains(&p.lon)
    }

    fn validate(&self) -> Result<(), String> {
        let ok_lat = (-90.0..=90.0).contains(&self.min_lat) && (-90.0..=90.0).contains(&self.max_lat);
        let ok_lon = (-180.0..=180.0).contains(&self.min_lon) && (-180.0..=180.0).contains(&self.max_lon);
        if !(ok_lat && ok_lon && self.min_lat < self.max_lat && self.min_lon < self.max_lon) {
            return Err(format!("bad rectangle bounds {self:?}"));
        }
        match self.weight {
            Some(w) if !(w >= 0.0 && w.is_finite()) => Err(format!("bad rectangle weight {w}")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub rectangles: Vec<Rectangle>,
    /// Drivers per km² per hour.
    pub driver_density: f64,
    /// Riders per km² per hour.
    pub rider_density: f64,
    /// Area the densities refer to; the rectangles' own area when absent.
    #[serde(default)]
    pub area_km2: Option<f64>,
    pub sim_window: (Seconds, Seconds),
    pub stats_window: (Seconds, Seconds),
    pub seed: u64,
    /// Exact counts, overriding the density formula.
    #[serde(default)]
    pub driver_count: Option<usize>,
    #[serde(default)]
    pub rider_count: Option<usize>,
    #[serde(default = "default_seat_capacity")]
    pub seat_capacity: u32,
}

fn default_seat_capacity() -> u32 {
    4
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if self.rectangles.is_empty() {
            return bad("no rectangles".into());
        }
        for r in &self.rectangles {
            r.validate().map_err(ScenarioError::Invalid)?;
        }
        if !(self.rectangles.iter().map(Rectangle::effective_weight).sum::<f64>() > 0.0) {
            return bad("rectangle weights sum to zero".into());
        }
        if !(self.driver_density >= 0.0 && self.rider_density >= 0.0) {
            return bad("densities must be non-negative".into());
        }
        if self.area_km2.is_some_and(|a| !(a >= 0.0)) {
            return bad("area must be non-negative".into());
        }
        let (s0, s1) = self.sim_window;
        let (w0, w1) = self.stats_window;
        if s0 > s1 {
            return bad(format!("simulation window {s0}..{s1} is reversed"));
        }
        if !(s0 <= w0 && w0 <= w1 && w1 <= s1) {
            return bad(format!("stats window {w0}..{w1} is not inside {s0}..{s1}"));
        }
        if self.seat_capacity == 0 {
            return bad("seat capacity must be at least 1".into());
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.area_km2.unwrap_or_else(|| self.rectangles.iter().map(Rectangle::area_km2).sum())
    }

    fn hours(&self) -> f64 {
        (self.sim_window.1 - self.sim_window.0) as f64 / 3600.0
    }

    pub fn driver_total(&self) -> usize {
        self.driver_count.unwrap_or_else(|| round_half_down(self.driver_density * self.area() * self.hours()))
    }

    pub fn rider_total(&self) -> usize {
        self.rider_count.unwrap_or_else(|| round_half_down(self.rider_density * self.area() * self.hours()))
    }
}

/// Nearest integer; exact halves go down.
pub fn round_half_down(x: f64) -> usize {
    (x - 0.5).ceil().max(0.0) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub drivers: Vec<Driver>,
    pub riders: Vec<Rider>,
    pub config: ScenarioConfig,
}

impl Scenario {
    pub fn in_stats_window(&self, r: &Rider) -> bool {
        (self.config.stats_window.0..=self.config.stats_window.1).contains(&r.departure_time)
    }
}

/// Picks a rectangle with probability proportional to its weight, then a
/// point uniformly (by area on the sphere) inside it.
pub fn sample_point<R: Rng + ?Sized>(rects: &[Rectangle], weights: &WeightedIndex<f64>, rng: &mut R) -> GeoPoint {
    let r = &rects[weights.sample(rng)];
    let (s0, s1) = (r.min_lat.to_radians().sin(), r.max_lat.to_radians().sin());
    let lat = rng.gen_range(s0..=s1).asin().to_degrees().clamp(r.min_lat, r.max_lat);
    let lon = rng.gen_range(r.min_lon..=r.max_lon);
    GeoPoint::new(lat, lon)
}

pub fn rectangle_weights(rects: &[Rectangle]) -> Result<WeightedIndex<f64>, ScenarioError> {
    WeightedIndex::new(rects.iter().map(Rectangle::effective_weight))
        .map_err(|e| ScenarioError::Invalid(format!("rectangle weights: {e}")))
}

/// Drivers are drawn first, then riders, from one seeded stream.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario, ScenarioError> {
    cfg.validate()?;
    let weights = rectangle_weights(&cfg.rectangles)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (s0, s1) = cfg.sim_window;
    let departure = |rng: &mut ChaCha8Rng| if s0 == s1 { s0 } else { rng.gen_range(s0..s1) };

    let mut drivers = Vec::with_capacity(cfg.driver_total());
    for id in 0..cfg.driver_total() as u64 {
        let origin = sample_point(&cfg.rectangles, &weights, &mut rng);
        let destination = sample_point(&cfg.rectangles, &weights, &mut rng);
        let departure_time = departure(&mut rng);
        drivers.push(Driver { id, origin, destination, departure_time, declaration_time: s0, seat_capacity: cfg.seat_capacity });
    }
    let mut riders = Vec::with_capacity(cfg.rider_total());
    for id in 0..cfg.rider_total() as u64 {
        let origin = sample_point(&cfg.rectangles, &weights, &mut rng);
        let destination = sample_point(&cfg.rectangles, &weights, &mut rng);
        let departure_time = departure(&mut rng);
        riders.push(Rider { id, origin, destination, departure_time });
    }
    Ok(Scenario { drivers, riders, config: cfg.clone() })
}

#[derive(Debug, Serialize, Deserialize)]
struct AgentRow {
    kind: String,
    id: u64,
    origin_lat: f64,
    origin_lon: f64,
    destination_lat: f64,
    destination_lon: f64,
    departure: Seconds,
}

/// Writes drivers then riders, one row each:
/// `kind,id,origin_lat,origin_lon,destination_lat,destination_lon,departure`.
pub fn write_agents<W: Write>(w: W, drivers: &[Driver], riders: &[Rider]) -> Result<(), ScenarioError> {
    let mut out = csv::Writer::from_writer(w);
    let row = |kind: &str, id, o: GeoPoint, d: GeoPoint, departure| AgentRow {
        kind: kind.into(),
        id,
        origin_lat: o.lat,
        origin_lon: o.lon,
        destination_lat: d.lat,
        destination_lon: d.lon,
        departure,
    };
    if drivers.is_empty() && riders.is_empty() {
        out.write_record(["kind", "id", "origin_lat", "origin_lon", "destination_lat", "destination_lon", "departure"])?;
    }
    for d in drivers {
        out.serialize(row("driver", d.id, d.origin, d.destination, d.departure_time))?;
    }
    for r in riders {
        out.serialize(row("rider", r.id, r.origin, r.destination, r.departure_time))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads an agents file. The file carries no seat capacity or declaration
/// time, so those are supplied.
pub fn read_agents<R: Read>(
    r: R,
    seat_capacity: u32,
    declaration_time: Seconds,
) -> Result<(Vec<Driver>, Vec<Rider>), ScenarioError> {
    let mut input = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let (mut drivers, mut riders) = (Vec::new(), Vec::new());
    for rec in input.deserialize::<AgentRow>() {
        let row = rec?;
        let origin = GeoPoint::new(row.origin_lat, row.origin_lon);
        let destination = GeoPoint::new(row.destination_lat, row.destination_lon);
        let line = (drivers.len() + riders.len() + 2) as u64;
        if !origin.is_valid() || !destination.is_valid() {
            return Err(ScenarioError::Malformed { line, reason: "coordinates out of range".into() });
        }
        match row.kind.as_str() {
            "driver" => drivers.push(Driver {
                id: row.id,
                origin,
                destination,
                departure_time: row.departure,
                declaration_time,
                seat_capacity,
            }),
            "rider" => riders.push(Rider { id: row.id, origin, destination, departure_time: row.departure }),
            other => return Err(ScenarioError::Malformed { line, reason: format!("unknown agent kind {other:?}") }),
        }
    }
    Ok((drivers, riders))
}
