use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use unicirc::compiler::{DEFAULT_FINAL_TOL, DEFAULT_MID_TOL, DEFAULT_RESTARTS, DEFAULT_UNITY_TOL};
use unicirc::optimize::Mode;

const SEED_HELP: &str = "Command seed. Child seeds are splitmix64(splitmix64(seed ^ stream) ^ index) \
with one fixed stream per purpose: unity restarts, universality targets, bench targets, the --haar target";

#[derive(Debug, Parser)]
#[command(name = "unicirc", version, about = "Compile unitaries onto repeated CNOT + rotation circuits")]
pub struct Cli {
    /// Base directory for relative output paths.
    #[arg(long, global = true, env = "UNICIRC_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "verb")]
pub enum Command {
    /// Print CNOT and rotation budgets.
    Bounds(BoundsArgs),
    /// List the built-in circuit units.
    Presets(PresetsArgs),
    /// Step 1: find unit angles whose unitary is a non-trivial root of unity.
    FindUnity(FindUnityArgs),
    /// Check compiling universality by descending to random near-identity targets.
    CheckUniversal(CheckUniversalArgs),
    /// Step 2: compile a target unitary along the square-root schedule.
    Compile(CompileArgs),
    /// Compare compiling-time efficiency of several topologies on shared targets.
    Bench(BenchArgs),
    /// Re-run the command recorded in a manifest and byte-compare its outputs.
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn verb(&self) -> &'static str {
        match self {
            Command::Bounds(_) => "bounds",
            Command::Presets(_) => "presets",
            Command::FindUnity(_) => "find-unity",
            Command::CheckUniversal(_) => "check-universal",
            Command::Compile(_) => "compile",
            Command::Bench(_) => "bench",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BoundsArgs {
    /// Qubit count; omit for the whole table n = 2..7.
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=7))]
    pub n: Option<u8>,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PresetsArgs {
    /// Print the topology file of one preset instead of the catalog.
    #[arg(long, value_name = "NAME")]
    pub show: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[group(id = "topology_source", required = true, multiple = false)]
pub struct TopologySource {
    /// Built-in topology name (see `presets`).
    #[arg(long, group = "topology_source")]
    pub preset: Option<String>,
    /// Topology JSON file.
    #[arg(long, group = "topology_source", value_name = "FILE")]
    pub topology: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    /// Armijo gradient descent.
    Gd,
    /// Limited-memory quasi-Newton.
    Qn,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Gd => Mode::GradientDescent,
            ModeArg::Qn => Mode::QuasiNewton,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OptimizerArgs {
    /// Descent method (default: gd for find-unity, qn otherwise).
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Iteration cap per descent run.
    #[arg(long, value_name = "N")]
    pub max_iter: Option<usize>,
    #[arg(long, default_value_t = 0, help = SEED_HELP)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FindUnityArgs {
    #[command(flatten)]
    pub topology: TopologySource,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Restarts from fresh random angles before giving up.
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    /// Required residual of the unity cost.
    #[arg(long, default_value_t = DEFAULT_UNITY_TOL)]
    pub tol: f64,
    #[arg(long, default_value = "unity.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CheckUniversalArgs {
    #[command(flatten)]
    pub topology: TopologySource,
    /// Unity file written by `find-unity` for the same topology.
    #[arg(long, value_name = "FILE")]
    pub unity: PathBuf,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Number of near-identity targets.
    #[arg(long, default_value_t = 10)]
    pub targets: usize,
    /// Distance of the near-identity targets to the identity.
    #[arg(long, default_value_t = 0.1)]
    pub target_distance: f64,
    #[arg(long, default_value_t = 0.005)]
    pub gamma_min: f64,
    #[arg(long, default_value_t = 0.9)]
    pub r2_min: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub distance_max: f64,
    #[arg(long, default_value = "universality.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[group(id = "target_source", required = true, multiple = false)]
pub struct TargetSource {
    /// Named target: `id`, `qft` (all qubits) or `qftN`.
    #[arg(long, group = "target_source", value_name = "NAME")]
    pub target: Option<String>,
    /// Matrix file: dimension on the first line, then one `re im` line per entry.
    #[arg(long, group = "target_source", value_name = "FILE")]
    pub matrix: Option<PathBuf>,
    /// Haar-random target drawn from the command seed.
    #[arg(long, group = "target_source")]
    pub haar: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CompileArgs {
    #[command(flatten)]
    pub topology: TopologySource,
    /// Unity file written by `find-unity` for the same topology.
    #[arg(long, value_name = "FILE")]
    pub unity: PathBuf,
    #[command(flatten)]
    pub target: TargetSource,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Number of legs M (default max(10, ⌈20·D(target, I)⌉)).
    #[arg(long, value_name = "M")]
    pub steps: Option<usize>,
    /// Distance each intermediate leg must reach.
    #[arg(long, default_value_t = DEFAULT_MID_TOL)]
    pub mid_tol: f64,
    /// Distance the last leg must reach.
    #[arg(long, default_value_t = DEFAULT_FINAL_TOL)]
    pub final_tol: f64,
    /// Store the parameters reached after every leg.
    #[arg(long)]
    pub keep_intermediates: bool,
    /// Directory for per-leg CSV traces (`leg-01.csv`, ...).
    #[arg(long, value_name = "DIR")]
    pub traces: Option<PathBuf>,
    #[arg(long, default_value = "compilation.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    /// Built-in topologies to compare.
    #[arg(long = "preset", value_name = "NAME")]
    pub presets: Vec<String>,
    /// Topology files to compare (after the presets).
    #[arg(long = "topology", value_name = "FILE")]
    pub topologies: Vec<PathBuf>,
    /// Unity files to reuse; matched to topologies by hash.
    #[arg(long = "unity", value_name = "FILE")]
    pub unities: Vec<PathBuf>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Number of shared Haar-random targets.
    #[arg(long, default_value_t = 5)]
    pub targets: usize,
    /// Final distance each target must reach.
    #[arg(long, default_value_t = DEFAULT_FINAL_TOL)]
    pub tol: f64,
    #[arg(long, value_name = "M")]
    pub steps: Option<usize>,
    /// Unity-search restarts for topologies without a --unity file.
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    /// Benchmark without certifying universality first.
    #[arg(long)]
    pub skip_universality: bool,
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Manifest written beside an earlier output.
    pub manifest: PathBuf,
}
