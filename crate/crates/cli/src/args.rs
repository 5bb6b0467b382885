use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use num_traits::ToPrimitive;
use tipsy_core::analytics::cs2_mixing;
use tipsy_core::{GameParams, GridState, GridStrategy, Mode, TreeParams, TreeStrategy};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "tipsy", version, about = "Simulate and analyse the tipsy cop and robber game")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a batch of episodes and summarise captures.
    Simulate(SimulateArgs),
    /// Sweep a (t_r, t_c) grid on a tree for the RSA and RSB pairings.
    Phase(PhaseArgs),
    /// Print every closed-form quantity that applies to the parameters.
    Analyze(AnalyzeArgs),
    /// Solve truncated chains over a ladder of radii.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GameKind {
    Grid,
    Tree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Accepts a decimal or an exact fraction `p/q`.
pub fn parse_prob(s: &str) -> Result<f64, String> {
    let value = if s.contains('/') {
        let ratio = Ratio::<i64>::from_str(s.trim()).map_err(|e| format!("bad fraction {s:?}: {e}"))?;
        ratio.to_f64().ok_or_else(|| format!("fraction {s:?} is not representable"))?
    } else {
        s.trim().parse::<f64>().map_err(|e| format!("bad number {s:?}: {e}"))?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct GameArgs {
    #[arg(long, value_enum, default_value_t = GameKind::Grid)]
    pub game: GameKind,
    /// Probability of a sober cop move.
    #[arg(long, value_parser = parse_prob)]
    pub c: Option<f64>,
    /// Probability of a sober robber move.
    #[arg(long, value_parser = parse_prob)]
    pub r: Option<f64>,
    /// Probability of a tipsy cop move.
    #[arg(long, value_parser = parse_prob)]
    pub tc: Option<f64>,
    /// Probability of a tipsy robber move.
    #[arg(long, value_parser = parse_prob)]
    pub tr: Option<f64>,
    /// Combined tipsiness on the grid, split evenly between the players.
    #[arg(long, value_parser = parse_prob)]
    pub t: Option<f64>,
    /// Degree Δ of base-tree vertices.
    #[arg(long = "Delta")]
    pub big_delta: Option<u32>,
    /// Degree δ of small-tree vertices.
    #[arg(long = "delta")]
    pub small_delta: Option<u32>,
}

impl GameArgs {
    pub fn grid_params(&self) -> Result<GameParams, CliError> {
        let (Some(c), Some(r)) = (self.c, self.r) else {
            return Err(CliError::Config("grid games need --c and --r".into()));
        };
        let params = match (self.t, self.tc, self.tr) {
            (Some(t), None, None) => GameParams::grid_merged(c, r, t),
            (None, Some(tc), Some(tr)) => GameParams::grid(c, r, tc, tr),
            _ => return Err(CliError::Config("grid games need either --t or both --tc and --tr".into())),
        };
        params.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn tree_params(&self) -> Result<GameParams, CliError> {
        let (Some(tc), Some(tr)) = (self.tc, self.tr) else {
            return Err(CliError::Config("tree games need --tc and --tr".into()));
        };
        let params = match (self.c, self.r) {
            (None, None) => GameParams::tree(tc, tr),
            (c, r) => GameParams::new(c.unwrap_or(0.5 - tc), r.unwrap_or(0.5 - tr), tc, tr, Mode::Tree),
        };
        params.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn tree(&self) -> Result<TreeParams, CliError> {
        let (Some(big), Some(small)) = (self.big_delta, self.small_delta) else {
            return Err(CliError::Config("tree games need --Delta and --delta".into()));
        };
        TreeParams::new(big, small).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Rounds after which an episode is censored.
    #[arg(long, default_value_t = 100_000)]
    pub horizon: u64,
    /// Master seed; episode i uses stream i.
    #[arg(long, env = "TIPSY_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads. Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Leave out the timestamp and machine details.
    #[arg(long)]
    pub deterministic: bool,
    /// Write here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// Cop strategy: CS1, CS2:<p>, CS2:balanced or FoolishCop on the grid;
    /// CS or CSB on a tree.
    #[arg(long)]
    pub cop: Option<String>,
    /// Robber strategy: RS or RS-smaller on the grid; RSA or RSB on a tree.
    #[arg(long)]
    pub robber: Option<String>,
    /// Grid: `x,y` or a distance `n` meaning `0,n`. Tree: base distance.
    #[arg(long)]
    pub start: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub episodes: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    #[arg(long = "Delta")]
    pub big_delta: u32,
    #[arg(long = "delta")]
    pub small_delta: u32,
    #[arg(long, value_parser = parse_prob, default_value = "0")]
    pub tr_from: f64,
    /// Defaults to δ/(4δ-4).
    #[arg(long, value_parser = parse_prob)]
    pub tr_to: Option<f64>,
    #[arg(long, value_parser = parse_prob, default_value = "0.025")]
    pub tr_step: f64,
    #[arg(long, value_parser = parse_prob, default_value = "0")]
    pub tc_from: f64,
    /// Defaults to min(δ/(4δ-4), Δ/(4Δ-6)).
    #[arg(long, value_parser = parse_prob)]
    pub tc_to: Option<f64>,
    #[arg(long, value_parser = parse_prob, default_value = "0.025")]
    pub tc_step: f64,
    /// Base distance between the starting pieces.
    #[arg(long, default_value_t = 20)]
    pub start: usize,
    #[arg(long, default_value_t = 1000)]
    pub episodes: u64,
    /// Capture fraction separating the capture and escape bands.
    #[arg(long, value_parser = parse_prob, default_value = "0.5")]
    pub threshold: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChainKind {
    /// The folded grid walk.
    Grid,
    /// A walk on the integers with a constant up-probability.
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryChoice {
    Killing,
    Reflecting,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long, value_enum, default_value_t = ChainKind::Grid)]
    pub chain: ChainKind,
    /// Up-probability of the line chain.
    #[arg(long, value_parser = parse_prob)]
    pub up: Option<f64>,
    #[arg(long)]
    pub cop: Option<String>,
    #[arg(long)]
    pub robber: Option<String>,
    /// Grid: `x,y` or `n` meaning `0,n`. Line: a distance.
    #[arg(long)]
    pub start: Option<String>,
    /// Comma-separated truncation radii.
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,40")]
    pub radii: Vec<u64>,
    #[arg(long, value_enum, default_value_t = BoundaryChoice::Both)]
    pub boundary: BoundaryChoice,
    /// Episodes for the Monte Carlo cross-check; 0 skips it.
    #[arg(long, default_value_t = 10_000)]
    pub episodes: u64,
    #[command(flatten)]
    pub run: RunArgs,
}

pub fn grid_strategy(name: &str, params: &GameParams) -> Result<GridStrategy, CliError> {
    if name == "CS2:balanced" {
        let p = cs2_mixing(params).map_err(|e| CliError::Config(format!("CS2:balanced: {e}")))?;
        return Ok(GridStrategy::Cs2 { p });
    }
    GridStrategy::from_str(name).map_err(CliError::Config)
}

pub fn tree_strategy(name: &str) -> Result<TreeStrategy, CliError> {
    TreeStrategy::from_str(name).map_err(CliError::Config)
}

pub fn grid_start(s: Option<&str>) -> Result<GridState, CliError> {
    let s = s.unwrap_or("1");
    let bad = || CliError::Config(format!("--start {s:?} is neither `x,y` nor a distance"));
    let state = match s.split_once(',') {
        Some((x, y)) => GridState::new(x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?),
        None => GridState::new(0, s.trim().parse().map_err(|_| bad())?),
    };
    if state.is_capture() {
        return Err(CliError::Config("--start must not be the capture state".into()));
    }
    Ok(state)
}

pub fn distance_start(s: Option<&str>, default: u64) -> Result<u64, CliError> {
    match s {
        None => Ok(default),
        Some(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("--start {s:?} is not a distance"))),
    }
}
