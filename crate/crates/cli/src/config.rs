//! The TOML run configuration. Every key except the feed and the demand is
//! optional and falls back to the library defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use poolline_core::journey::DetourParams;
use poolline_core::matching::FeasibilityRules;
use poolline_core::scenario::{Rectangle, ScenarioConfig};
use poolline_core::simulation::{EmissionModel, SimulationConfig};
use poolline_core::synthetic::SyntheticCity;
use poolline_core::{Seconds, TravelModel};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub feed: FeedConfig,
    /// Either a scenario to generate or an agents file to read.
    #[serde(default)]
    pub scenario: Option<ScenarioSection>,
    #[serde(default)]
    pub agents: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub service_date: Option<NaiveDate>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub dwell: Option<Seconds>,
    #[serde(default)]
    pub meeting_point_route_types: Option<Vec<u16>>,
    #[serde(default)]
    pub transfer_walk_km: Option<f64>,
    #[serde(default)]
    pub num_itineraries: Option<usize>,
    #[serde(default)]
    pub enforce_capacity: Option<bool>,
    #[serde(default)]
    pub travel: Option<TravelModel>,
    #[serde(default)]
    pub planner: Option<PlannerSection>,
    #[serde(default)]
    pub feasibility: Option<FeasibilityRules>,
    #[serde(default)]
    pub emission: Option<EmissionModel>,
}

fn default_output() -> PathBuf {
    PathBuf::from("output")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedConfig {
    /// GTFS directory or zip archive.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Use the built-in synthetic city instead of a feed on disk.
    #[serde(default)]
    pub synthetic: Option<SyntheticCity>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSection {
    pub access_walk_km: Option<f64>,
    pub transfer_time: Option<Seconds>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// Falls back to the synthetic city's rectangles when the feed is
    /// synthetic.
    #[serde(default)]
    pub rectangles: Vec<Rectangle>,
    pub driver_density: f64,
    pub rider_density: f64,
    #[serde(default)]
    pub area_km2: Option<f64>,
    pub sim_window: (Seconds, Seconds),
    pub stats_window: (Seconds, Seconds),
    #[serde(default)]
    pub driver_count: Option<usize>,
    #[serde(default)]
    pub rider_count: Option<usize>,
    #[serde(default = "default_capacity")]
    pub seat_capacity: u32,
}

fn default_capacity() -> u32 {
    4
}

pub enum Feed<'a> {
    Path(PathBuf),
    Synthetic(&'a SyntheticCity),
}

impl RunConfig {
    /// Reads `path`; relative paths inside are resolved against its folder.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.feed.path.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.agents.as_mut() {
            rebase(p);
        }
        rebase(&mut cfg.output);
        cfg.simulation()?;
        if cfg.scenario.is_some() {
            cfg.scenario_config()?;
        }
        Ok(cfg)
    }

    pub fn feed(&self) -> Result<Feed<'_>> {
        match (&self.feed.path, &self.feed.synthetic) {
            (Some(p), None) => Ok(Feed::Path(p.clone())),
            (None, Some(city)) => Ok(Feed::Synthetic(city)),
            _ => bail!("[feed] needs exactly one of `path` or `synthetic`"),
        }
    }

    pub fn simulation(&self) -> Result<SimulationConfig> {
        let d = SimulationConfig::default();
        let mut planner = d.planner;
        if let Some(m) = self.travel {
            planner.model = m;
        }
        if let Some(p) = &self.planner {
            planner.access_walk_km = p.access_walk_km.unwrap_or(planner.access_walk_km);
            planner.transfer_time = p.transfer_time.unwrap_or(planner.transfer_time);
        }
        let cfg = SimulationConfig {
            planner,
            transfer_walk_km: self.transfer_walk_km.unwrap_or(d.transfer_walk_km),
            detour: DetourParams {
                tau: self.tau.unwrap_or(d.detour.tau),
                dwell: self.dwell.unwrap_or(d.detour.dwell),
            },
            rules: self.feasibility.unwrap_or(d.rules),
            emission: self.emission.unwrap_or(d.emission),
            meeting_point_route_types: self.meeting_point_route_types.clone().unwrap_or(d.meeting_point_route_types),
            num_itineraries: self.num_itineraries.unwrap_or(d.num_itineraries),
            enforce_capacity: self.enforce_capacity.unwrap_or(d.enforce_capacity),
            service_date: self.service_date,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn scenario_config(&self) -> Result<ScenarioConfig> {
        let Some(s) = &self.scenario else { bail!("no [scenario] section to generate agents from") };
        let mut rectangles = s.rectangles.clone();
        let mut area_km2 = s.area_km2;
        if rectangles.is_empty() {
            if let Some(city) = &self.feed.synthetic {
                rectangles = city.rectangles();
                area_km2 = area_km2.or(Some(city.size_km * city.size_km));
            }
        }
        let cfg = ScenarioConfig {
            rectangles,
            driver_density: s.driver_density,
            rider_density: s.rider_density,
            area_km2,
            sim_window: s.sim_window,
            stats_window: s.stats_window,
            seed: self.seed,
            driver_count: s.driver_count,
            rider_count: s.rider_count,
            seat_capacity: s.seat_capacity,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
