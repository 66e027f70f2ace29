//! Report files for a [`Comparison`]. Output is a pure function of the
//! comparison, so identical runs give byte-identical files.
//!
//! - `summary.json`: headline numbers per variant and the savings
//! - `modal_split.csv`: `variant,mode,riders,percent`
//! - `occupancy.csv`: `variant,max_riders,drivers`
//! - `detours.csv`: `variant,driver_id,baseline_km,accepted_km,km,ratio`
//! - `detour_hist.csv`: `variant,scale,bin,drivers`, ratio and km bins
//! - `outcomes_<variant>.csv`: `rider_id,mode,depart,arrive,walk_km,wait_s,drivers`
//! - `legs_<variant>.csv`: one row per itinerary leg

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::simulation::{Comparison, DriverDetour, ModeShare, Savings, SimulationReport, SystemVariant};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

const RATIO_BIN: f64 = 0.025;

#[derive(Serialize)]
struct VariantSummary<'a> {
    variant: SystemVariant,
    riders: usize,
    served: usize,
    unserved_share: f64,
    modal_split: &'a [ModeShare],
    occupancy_hist: &'a [usize],
    shared_ride_share: f64,
    voided_drivers: usize,
    mean_detour_ratio: f64,
    max_detour_ratio: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    variants: Vec<VariantSummary<'a>>,
    savings: Option<&'a Savings>,
}

fn summary(r: &SimulationReport) -> VariantSummary<'_> {
    let ratios: Vec<f64> = r.detours.iter().map(|d| d.ratio).collect();
    VariantSummary {
        variant: r.variant,
        riders: r.outcomes.len(),
        served: r.served(),
        unserved_share: r.unserved_share(),
        modal_split: &r.modal_split,
        occupancy_hist: &r.occupancy_hist,
        shared_ride_share: r.shared_ride_share(),
        voided_drivers: r.voided_drivers.len(),
        mean_detour_ratio: if ratios.is_empty() { 0.0 } else { ratios.iter().sum::<f64>() / ratios.len() as f64 },
        max_detour_ratio: ratios.iter().copied().fold(0.0, f64::max),
    }
}

fn f(x: f64) -> String {
    format!("{x:.6}")
}

/// Ratio bins of width 0.025 up to `tau`, with zero on its own.
pub fn ratio_bin(ratio: f64, tau: f64) -> String {
    if ratio <= 0.0 {
        return "0".into();
    }
    if ratio > tau + 1e-9 {
        return format!(">{tau:.3}");
    }
    let k = ((ratio / RATIO_BIN).ceil() as usize).max(1);
    format!("{:.3}-{:.3}", (k - 1) as f64 * RATIO_BIN, k as f64 * RATIO_BIN)
}

fn ratio_bins(tau: f64) -> Vec<String> {
    let n = (tau / RATIO_BIN - 1e-9).ceil().max(0.0) as usize;
    let mut bins = vec!["0".to_string()];
    bins.extend((1..=n).map(|k| format!("{:.3}-{:.3}", (k - 1) as f64 * RATIO_BIN, k as f64 * RATIO_BIN)));
    bins.push(format!(">{tau:.3}"));
    bins
}

pub const KM_BINS: [&str; 5] = ["0", "1-5", "6-10", "11-15", ">15"];

/// Detour km rounded to the nearest whole km, then binned.
pub fn km_bin(km: f64) -> &'static str {
    match km.round() as i64 {
        i64::MIN..=0 => KM_BINS[0],
        1..=5 => KM_BINS[1],
        6..=10 => KM_BINS[2],
        11..=15 => KM_BINS[3],
        _ => KM_BINS[4],
    }
}

fn detour_hist(detours: &[DriverDetour], tau: f64) -> Vec<(String, String, usize)> {
    let mut rows = Vec::new();
    for bin in ratio_bins(tau) {
        let n = detours.iter().filter(|d| ratio_bin(d.ratio, tau) == bin).count();
        rows.push(("ratio".to_string(), bin, n));
    }
    for bin in KM_BINS {
        let n = detours.iter().filter(|d| km_bin(d.km) == bin).count();
        rows.push(("km".to_string(), bin.to_string(), n));
    }
    rows
}

fn csv_file(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every report file into `dir` (created if missing) and returns
/// their paths.
pub fn write_reports(dir: &Path, c: &Comparison, tau: f64) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut path = |name: &str| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };

    let s = Summary { variants: c.reports.iter().map(summary).collect(), savings: c.savings.as_ref() };
    let mut json = serde_json::to_string_pretty(&s)?;
    json.push('\n');
    fs::write(path("summary.json"), json)?;

    csv_file(
        &path("modal_split.csv"),
        &["variant", "mode", "riders", "percent"],
        c.reports.iter().flat_map(|r| {
            r.modal_split
                .iter()
                .map(|m| vec![r.variant.as_str().into(), m.mode.as_str().into(), m.riders.to_string(), f(m.percent)])
        }),
    )?;
    csv_file(
        &path("occupancy.csv"),
        &["variant", "max_riders", "drivers"],
        c.reports.iter().flat_map(|r| {
            r.occupancy_hist.iter().enumerate().map(|(k, n)| vec![r.variant.as_str().into(), k.to_string(), n.to_string()])
        }),
    )?;
    csv_file(
        &path("detours.csv"),
        &["variant", "driver_id", "baseline_km", "accepted_km", "km", "ratio"],
        c.reports.iter().flat_map(|r| {
            r.detours.iter().map(|d| {
                vec![r.variant.as_str().into(), d.driver_id.to_string(), f(d.baseline_km), f(d.accepted_km), f(d.km), f(d.ratio)]
            })
        }),
    )?;
    csv_file(
        &path("detour_hist.csv"),
        &["variant", "scale", "bin", "drivers"],
        c.reports.iter().flat_map(|r| {
            detour_hist(&r.detours, tau)
                .into_iter()
                .map(|(scale, bin, n)| vec![r.variant.as_str().into(), scale, bin, n.to_string()])
        }),
    )?;

    for r in &c.reports {
        let v = r.variant.as_str();
        csv_file(
            &path(&format!("outcomes_{v}.csv")),
            &["rider_id", "mode", "depart", "arrive", "walk_km", "wait_s", "drivers"],
            r.outcomes.iter().map(|o| {
                let (depart, arrive, walk, wait) = match &o.itinerary {
                    Some(it) => (it.depart.to_string(), it.arrive.to_string(), f(it.total_walk_km), it.total_wait_s.to_string()),
                    None => Default::default(),
                };
                let drivers: Vec<String> = o.drivers_used.iter().map(|d| d.to_string()).collect();
                vec![o.rider_id.to_string(), o.mode.as_str().into(), depart, arrive, walk, wait, drivers.join(";")]
            }),
        )?;
        csv_file(
            &path(&format!("legs_{v}.csv")),
            &[
                "rider_id", "leg", "kind", "from_stop", "from_lat", "from_lon", "to_stop", "to_lat", "to_lon", "board",
                "alight", "distance_km", "trip_id",
            ],
            r.outcomes.iter().filter_map(|o| o.itinerary.as_ref().map(|it| (o.rider_id, it))).flat_map(|(id, it)| {
                it.legs.iter().enumerate().map(move |(i, l)| {
                    vec![
                        id.to_string(),
                        i.to_string(),
                        l.kind.as_str().into(),
                        l.from.stop_id.clone().unwrap_or_default(),
                        f(l.from.position.lat),
                        f(l.from.position.lon),
                        l.to.stop_id.clone().unwrap_or_default(),
                        f(l.to.position.lat),
                        f(l.to.position.lon),
                        l.board.to_string(),
                        l.alight.to_string(),
                        f(l.distance_km),
                        l.trip_id.clone().unwrap_or_default(),
                    ]
                })
            }),
        )?;
    }
    Ok(written)
}
