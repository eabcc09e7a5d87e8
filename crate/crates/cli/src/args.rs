//! Command-line flags. Every struct here is serialized into the JSON
//! outputs so a run can be repeated from its own artifacts.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "greenwave",
    version,
    about = "Traffic light control simulation and tuning"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// Seed for every random draw the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Simulation timestep, s.
    #[arg(long, global = true, default_value_t = 0.1)]
    pub dt: f64,
    /// Concurrent evaluations (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Generate networks, demand, demand perturbations or control files.
    #[command(subcommand)]
    Gen(Gen),
    /// Run one simulation and export per-car results.
    Simulate(SimulateArgs),
    /// Fit fixed-schedule lights to observed journey times.
    Calibrate(CalibrateArgs),
    /// Tune controller parameters for lower total travel time.
    Optimize(OptimizeArgs),
    /// Find the demand scale a controller carries at a target mean travel time.
    Capacity(CapacityArgs),
    /// Compare several control files on one demand.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Gen {
    /// Rectangular grid of lit intersections plus demand.
    Grid(GridArgs),
    /// Main road with lit cross streets plus demand.
    Arterial(ArterialArgs),
    /// Random fringe-to-fringe demand for an existing network.
    Demand(DemandArgs),
    /// Jittered variants of a demand file.
    Perturb(PerturbArgs),
    /// A control file for every light of a network.
    Control(ControlArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GridArgs {
    #[arg(long, default_value_t = 3)]
    pub rows: usize,
    #[arg(long, default_value_t = 3)]
    pub cols: usize,
    #[arg(long, default_value_t = 3200)]
    pub cars: usize,
    /// Release window, s.
    #[arg(long, default_value_t = 4000.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1)]
    pub min_lanes: usize,
    #[arg(long, default_value_t = 3)]
    pub max_lanes: usize,
    #[arg(long, default_value = "grid")]
    pub name: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ArterialArgs {
    #[arg(long, default_value_t = 4)]
    pub lights: usize,
    /// Intersection spacing on the main road, m.
    #[arg(long, default_value_t = 200.0)]
    pub spacing: f64,
    #[arg(long, default_value_t = 2)]
    pub main_lanes: usize,
    #[arg(long, default_value_t = 1)]
    pub cross_lanes: usize,
    #[arg(long, default_value_t = 2400)]
    pub cars: usize,
    /// Release window, s.
    #[arg(long, default_value_t = 3600.0)]
    pub horizon: f64,
    /// Fraction of trips running the whole main road.
    #[arg(long, default_value_t = 0.6)]
    pub main_share: f64,
    #[arg(long, default_value = "arterial")]
    pub name: String,
}

#[derive(Debug, Args, Serialize)]
pub struct DemandArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub cars: usize,
    /// Release window, s.
    #[arg(long)]
    pub horizon: f64,
    #[arg(long, default_value = "demand")]
    pub name: String,
}

#[derive(Debug, Args, Serialize)]
pub struct PerturbArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub demand: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub datasets: usize,
    /// Per-route count jitter fraction.
    #[arg(long, default_value_t = 0.1)]
    pub count_jitter: f64,
    /// Release-time jitter, s.
    #[arg(long, default_value_t = 60.0)]
    pub release_jitter: f64,
    #[arg(long, default_value = "perturbed")]
    pub name: String,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlKind {
    /// Equal greens, zero offsets.
    Static,
    /// Random greens and offsets (a calibration start or hidden target).
    RandomStatic,
    /// Auction with +1 weight on each phase's own detectors.
    Auction,
    /// Auction with all weights zero.
    Sensorless,
    Planning,
}

#[derive(Debug, Args, Serialize)]
pub struct ControlArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long, value_enum, default_value = "static")]
    pub kind: ControlKind,
    /// Green time for static lights; lower bound for random ones, s.
    #[arg(long, default_value_t = 30.0)]
    pub green: f64,
    /// Upper bound of random greens, s.
    #[arg(long, default_value_t = 60.0)]
    pub green_max: f64,
    #[arg(long, default_value_t = 5.0)]
    pub minimum: f64,
    #[arg(long, default_value_t = 10.0)]
    pub priority: f64,
    #[arg(long, default_value_t = 30.0)]
    pub release: f64,
    #[arg(long, default_value = "control")]
    pub name: String,
}

#[derive(Debug, Args, Serialize)]
pub struct SimArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub demand: PathBuf,
    /// Simulated time limit, s.
    #[arg(long, default_value_t = 7200.0)]
    pub horizon: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub control: PathBuf,
    /// Also write the demand with every car's exit time filled in.
    #[arg(long)]
    pub observe: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    /// `--demand` must carry observed exit times.
    #[command(flatten)]
    pub sim: SimArgs,
    /// Starting schedules; random ones when absent.
    #[arg(long)]
    pub start: Option<PathBuf>,
    #[arg(long, default_value_t = 5.0)]
    pub green_min: f64,
    #[arg(long, default_value_t = 60.0)]
    pub green_max: f64,
    #[arg(long, default_value_t = 2000)]
    pub budget: usize,
    /// Known settings behind the observations, for the robustness check.
    #[arg(long, requires = "fresh")]
    pub target: Option<PathBuf>,
    /// Unseen demand for the robustness check.
    #[arg(long, requires = "target")]
    pub fresh: Option<PathBuf>,
    /// Histogram bin width, s.
    #[arg(long, default_value_t = 10.0)]
    pub bin: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AcceptArg {
    Simple,
    Majority,
}

#[derive(Debug, Args, Serialize)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Starting controllers; their kinds are kept.
    #[arg(long)]
    pub control: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub budget: usize,
    /// Perturbed demand variants; 1 uses the demand as given.
    #[arg(long, default_value_t = 1)]
    pub datasets: usize,
    #[arg(long, value_enum, default_value = "simple")]
    pub accept: AcceptArg,
    /// Hold each static light's total green time.
    #[arg(long)]
    pub fixed_cycle: bool,
    #[arg(long, default_value_t = 0.1)]
    pub count_jitter: f64,
    #[arg(long, default_value_t = 60.0)]
    pub release_jitter: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub control: PathBuf,
    /// Mean travel time to match, s.
    #[arg(
        long,
        required_unless_present = "reference",
        conflicts_with = "reference"
    )]
    pub target_mtt: Option<f64>,
    /// Take the target from this controller's MTT on the base demand.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value_t = 0.02)]
    pub tol: f64,
    #[arg(long, default_value_t = 3)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.25)]
    pub min_scale: f64,
    #[arg(long, default_value_t = 4.0)]
    pub max_scale: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Control files to compare, in column order.
    #[arg(long, num_args = 1.., required = true)]
    pub control: Vec<PathBuf>,
}
