mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use poolline_core::gtfs::{parse_gtfs_with, write_gtfs, ParseOptions, Timetable};
use poolline_core::journey::Driver;
use poolline_core::matching::Rider;
use poolline_core::report::write_reports;
use poolline_core::scenario::{generate_scenario, read_agents, write_agents};
use poolline_core::simulation::{prepare, run, SimulationConfig, SystemVariant};
use poolline_core::synthetic::SyntheticCity;
use poolline_core::Seconds;

use config::{Feed, RunConfig};
use output::Staging;

#[derive(Parser)]
#[command(name = "poolline", version, about = "Carpool-augmented transit simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `threads` from the config.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the maximum detour ratio.
    #[arg(long)]
    tau: Option<f64>,
    /// Overrides the meeting-point dwell, seconds.
    #[arg(long)]
    dwell: Option<Seconds>,
    /// Overrides the output directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample drivers and riders and write them as an agents file.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Defaults to `<output>/agents.csv`.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compute driver journeys and write the feed with PoolLines added.
    Inject {
        #[command(flatten)]
        common: Common,
        /// Defaults to `<output>/gtfs`.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Resolve every rider under the chosen variants and write reports.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Variant to run; repeat for several. Defaults to all three.
        #[arg(long = "variant", value_parser = parse_variant)]
        variants: Vec<SystemVariant>,
        /// Defaults to `<output>/reports`.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print the headline numbers of a report directory.
    Metrics {
        /// Directory written by `simulate`.
        reports: PathBuf,
    },
    /// Write the built-in synthetic city as a GTFS feed.
    SynthFeed {
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn parse_variant(s: &str) -> Result<SystemVariant, String> {
    SystemVariant::parse(s).ok_or_else(|| {
        let names: Vec<&str> = SystemVariant::ALL.iter().map(|v| v.as_str()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

/// Config problems exit with 1, data problems with 2.
enum Failure {
    Config(anyhow::Error),
    Data(anyhow::Error),
}

trait Classify<T> {
    fn config(self) -> Result<T, Failure>;
    fn data(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn config(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }
    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Generate { common, out } => {
            let cfg = load(&common)?;
            let (drivers, riders) = agents(&cfg)?;
            let out = out.unwrap_or_else(|| cfg.output.join("agents.csv"));
            let stage = Staging::file(&out).data()?;
            let file = std::fs::File::create(stage.path()).data()?;
            write_agents(std::io::BufWriter::new(file), &drivers, &riders).data()?;
            stage.commit().data()?;
            eprintln!("{} drivers, {} riders -> {}", drivers.len(), riders.len(), out.display());
        }
        Command::Inject { common, out } => {
            let cfg = load(&common)?;
            let sim = cfg.simulation().config()?;
            let t = timetable(&cfg, &sim)?;
            let (drivers, _) = agents(&cfg)?;
            let p = prepare(&t, &drivers, &sim, cfg.seed).data()?;
            let out = out.unwrap_or_else(|| cfg.output.join("gtfs"));
            let stage = Staging::dir(&out).data()?;
            write_gtfs(&p.timetable, stage.path()).data()?;
            stage.commit().data()?;
            eprintln!("{} PoolLines -> {}", p.journeys.len(), out.display());
        }
        Command::Simulate { common, variants, out } => {
            let cfg = load(&common)?;
            let sim = cfg.simulation().config()?;
            let variants = if variants.is_empty() { SystemVariant::ALL.to_vec() } else { dedup(variants) };
            let t = timetable(&cfg, &sim)?;
            let (drivers, riders) = agents(&cfg)?;
            let window = stats_window(&cfg, &riders)?;
            let p = prepare(&t, &drivers, &sim, cfg.seed).data()?;
            let c = run(&riders, window, &p, &variants, &sim);
            let out = out.unwrap_or_else(|| cfg.output.join("reports"));
            let stage = Staging::dir(&out).data()?;
            write_reports(stage.path(), &c, sim.detour.tau).data()?;
            stage.commit().data()?;
            for r in &c.reports {
                eprintln!(
                    "{:<14} served {:>6} of {:>6}  unserved {:>5.1}%",
                    r.variant.as_str(),
                    r.served(),
                    r.outcomes.len(),
                    100.0 * r.unserved_share()
                );
            }
            eprintln!("reports -> {}", out.display());
        }
        Command::Metrics { reports } => {
            let text = output::metrics_table(&reports).data()?;
            print!("{text}");
        }
        Command::SynthFeed { out } => {
            let stage = Staging::dir(&out).data()?;
            write_gtfs(&SyntheticCity::default().timetable(), stage.path()).data()?;
            stage.commit().data()?;
            eprintln!("synthetic feed -> {}", out.display());
        }
    }
    Ok(())
}

fn dedup(mut v: Vec<SystemVariant>) -> Vec<SystemVariant> {
    v.sort();
    v.dedup();
    v
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(&common.config).config()?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = common.threads {
        cfg.threads = n;
    }
    if common.tau.is_some() {
        cfg.tau = common.tau;
    }
    if common.dwell.is_some() {
        cfg.dwell = common.dwell;
    }
    if let Some(o) = &common.output {
        cfg.output = o.clone();
    }
    cfg.simulation().config()?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global().config()?;
    }
    Ok(cfg)
}

fn timetable(cfg: &RunConfig, sim: &SimulationConfig) -> Result<Timetable, Failure> {
    match cfg.feed().config()? {
        Feed::Synthetic(city) => Ok(city.timetable()),
        Feed::Path(p) => {
            let opts = ParseOptions { service_date: sim.service_date };
            parse_gtfs_with(&p, &opts).with_context(|| format!("loading feed {}", p.display())).data()
        }
    }
}

fn agents(cfg: &RunConfig) -> Result<(Vec<Driver>, Vec<Rider>), Failure> {
    match (&cfg.agents, &cfg.scenario) {
        (Some(path), scenario) => {
            let capacity = scenario.as_ref().map_or(4, |s| s.seat_capacity);
            let declared = scenario.as_ref().map_or(0, |s| s.sim_window.0);
            let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display())).data()?;
            read_agents(std::io::BufReader::new(file), capacity, declared)
                .with_context(|| format!("reading {}", path.display()))
                .data()
        }
        (None, Some(_)) => {
            let s = generate_scenario(&cfg.scenario_config().config()?).config()?;
            Ok((s.drivers, s.riders))
        }
        (None, None) => Err(Failure::Config(anyhow!("config needs an `agents` file or a [scenario] section"))),
    }
}

/// The configured stats window, or the span of rider departures when the
/// agents come from a file without a scenario.
fn stats_window(cfg: &RunConfig, riders: &[Rider]) -> Result<(Seconds, Seconds), Failure> {
    if let Some(s) = &cfg.scenario {
        return Ok(s.stats_window);
    }
    let lo = riders.iter().map(|r| r.departure_time).min();
    let hi = riders.iter().map(|r| r.departure_time).max();
    match (lo, hi) {
        (Some(lo), Some(hi)) if hi > lo => Ok((lo, hi)),
        _ => Err(Failure::Data(anyhow!("cannot infer a stats window from the agents file"))),
    }
}
