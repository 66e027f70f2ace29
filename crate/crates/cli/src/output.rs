//! Staged output: everything is written next to the target first and moved
//! into place only once complete, so a failed run leaves nothing behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

pub struct Staging {
    tmp: PathBuf,
    target: PathBuf,
    is_dir: bool,
}

impl Staging {
    pub fn dir(target: &Path) -> Result<Staging> {
        let s = Staging::new(target, true)?;
        fs::create_dir_all(&s.tmp).with_context(|| format!("creating {}", s.tmp.display()))?;
        Ok(s)
    }

    pub fn file(target: &Path) -> Result<Staging> {
        Staging::new(target, false)
    }

    fn new(target: &Path, is_dir: bool) -> Result<Staging> {
        let name = target.file_name().with_context(|| format!("{} has no file name", target.display()))?;
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).with_context(|| format!("creating {}", parent.display()))?;
        let tmp = parent.join(format!(".{}.partial-{}", name.to_string_lossy(), std::process::id()));
        Ok(Staging { tmp, target: target.to_path_buf(), is_dir })
    }

    pub fn path(&self) -> &Path {
        &self.tmp
    }

    /// Moves the staged output into place. Files already in a target
    /// directory are replaced one by one; unrelated files are left alone.
    pub fn commit(self) -> Result<()> {
        if !self.is_dir {
            fs::rename(&self.tmp, &self.target).with_context(|| format!("writing {}", self.target.display()))?;
            return Ok(());
        }
        if !self.target.exists() {
            fs::rename(&self.tmp, &self.target).with_context(|| format!("writing {}", self.target.display()))?;
            return Ok(());
        }
        for entry in fs::read_dir(&self.tmp)? {
            let entry = entry?;
            let dest = self.target.join(entry.file_name());
            fs::rename(entry.path(), &dest).with_context(|| format!("writing {}", dest.display()))?;
        }
        Ok(())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        // after a successful commit the staging path is gone or empty
        if self.is_dir {
            let _ = fs::remove_dir_all(&self.tmp);
        } else {
            let _ = fs::remove_file(&self.tmp);
        }
    }
}

#[derive(Deserialize)]
struct Summary {
    variants: Vec<Variant>,
    savings: Option<Savings>,
}

#[derive(Deserialize)]
struct Variant {
    variant: String,
    riders: usize,
    served: usize,
    unserved_share: f64,
    shared_ride_share: f64,
    modal_split: Vec<Share>,
    voided_drivers: usize,
    mean_detour_ratio: f64,
}

#[derive(Deserialize)]
struct Share {
    mode: String,
    percent: f64,
}

#[derive(Deserialize)]
struct Savings {
    riders_gained: usize,
    vkt_saved_km: f64,
    co2_saved_kg_per_hour: f64,
}

/// Renders `summary.json` from a report directory as a plain-text table.
pub fn metrics_table(dir: &Path) -> Result<String> {
    let path = dir.join("summary.json");
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let s: Summary = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;

    let mut out = String::new();
    let modes: Vec<&str> = s.variants.first().map_or(Vec::new(), |v| v.modal_split.iter().map(|m| m.mode.as_str()).collect());
    write!(out, "{:<14} {:>7} {:>7} {:>9} {:>8}", "variant", "riders", "served", "unserved", "shared")?;
    for m in &modes {
        write!(out, " {:>16}", m)?;
    }
    writeln!(out, " {:>7} {:>11}", "voided", "mean_detour")?;
    for v in &s.variants {
        write!(
            out,
            "{:<14} {:>7} {:>7} {:>8.2}% {:>7.2}%",
            v.variant,
            v.riders,
            v.served,
            100.0 * v.unserved_share,
            100.0 * v.shared_ride_share
        )?;
        for m in &v.modal_split {
            write!(out, " {:>15.2}%", m.percent)?;
        }
        writeln!(out, " {:>7} {:>11.4}", v.voided_drivers, v.mean_detour_ratio)?;
    }
    if let Some(sv) = &s.savings {
        writeln!(
            out,
            "integrated vs current: {} riders gained, {:.1} vehicle-km saved, {:.1} kg CO2/h",
            sv.riders_gained, sv.vkt_saved_km, sv.co2_saved_kg_per_hour
        )?;
    }
    Ok(out)
}
