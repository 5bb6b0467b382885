//! Batches of independent episodes, their summaries, phase sweeps and the
//! base-move gap estimator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{self, AnalyticsError, TreeRegime, Winner};
use crate::episode::EpisodeReport;
use crate::error::GameError;
use crate::grid::{run_grid_episode, GridState, GridStrategy};
use crate::spinner::{GameParams, RngStream};
use crate::tree::{run_tree_episode, TreeEpisodeStats, TreeGameState, TreeParams, TreeStrategy};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("a batch needs at least one episode")]
    NoEpisodes,
    #[error("could not start the worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "game", rename_all = "lowercase")]
pub enum GameSpec {
    Grid { params: GameParams, cop: GridStrategy, robber: GridStrategy, start: GridState },
    Tree { tree: TreeParams, params: GameParams, cop: TreeStrategy, robber: TreeStrategy, start: TreeGameState },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub horizon: u64,
    pub episodes: u64,
    pub master_seed: u64,
    /// Worker threads; `None` uses the global pool. Never affects results.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub horizon: u64,
    /// Reports in stream order.
    pub reports: Vec<EpisodeReport>,
    /// Per-episode base-move bookkeeping for tree games, in stream order.
    pub tree_stats: Option<Vec<TreeEpisodeStats>>,
}

fn run_one(spec: &GameSpec, horizon: u64, stream: &RngStream) -> Result<(EpisodeReport, Option<TreeEpisodeStats>), GameError> {
    match spec {
        GameSpec::Grid { params, cop, robber, start } => {
            run_grid_episode(params, cop, robber, *start, horizon, stream).map(|r| (r, None))
        }
        GameSpec::Tree { tree, params, cop, robber, start } => {
            run_tree_episode(tree, params, *cop, *robber, start, horizon, stream, false).map(|e| (e.report, Some(e.stats)))
        }
    }
}

fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, EngineError> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| EngineError::Pool(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

/// Runs episodes on streams `0..episodes` of the master seed. The output
/// order is the stream order whatever the number of threads.
pub fn run_batch(spec: &GameSpec, config: &BatchConfig) -> Result<BatchResult, EngineError> {
    if config.episodes == 0 {
        return Err(EngineError::NoEpisodes);
    }
    // fail fast on bad parameters before fanning out
    run_one(spec, 1, &RngStream::new(config.master_seed, 0))?;
    let outcomes = with_pool(config.threads, || {
        (0..config.episodes)
            .into_par_iter()
            .map(|i| run_one(spec, config.horizon, &RngStream::new(config.master_seed, i)))
            .collect::<Result<Vec<_>, _>>()
    })??;
    let is_tree = matches!(spec, GameSpec::Tree { .. });
    let (reports, stats): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    Ok(BatchResult {
        horizon: config.horizon,
        reports,
        tree_stats: is_tree.then(|| stats.into_iter().flatten().collect()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> Interval {
    if n == 0 {
        return Interval { low: 0.0, high: 1.0 };
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // clamp so the interval always contains p despite rounding
    Interval { low: (centre - half).clamp(0.0, 1.0).min(p), high: (centre + half).clamp(0.0, 1.0).max(p) }
}

/// Pooled base-move bookkeeping of a tree batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeAggregate {
    pub robber_gaps: u64,
    pub mean_robber_gap: Option<f64>,
    pub robber_gap_std_error: Option<f64>,
    pub cop_gaps: u64,
    pub mean_cop_gap: Option<f64>,
    pub robber_base_moves: u64,
    pub mean_robber_f_tilde: Option<f64>,
    pub cop_base_moves: u64,
    pub mean_cop_f_tilde: Option<f64>,
    pub dominance_violations: u64,
    /// Mean over episodes of Y at the end divided by the rounds played.
    pub y_slope: f64,
}

fn pooled_mean(count: u64, sum: u64, sumsq: u64) -> (Option<f64>, Option<f64>) {
    if count == 0 {
        return (None, None);
    }
    let n = count as f64;
    let mean = sum as f64 / n;
    let se = (count > 1).then(|| {
        let var = (sumsq as f64 - n * mean * mean) / (n - 1.0);
        (var.max(0.0) / n).sqrt()
    });
    (Some(mean), se)
}

pub fn aggregate_tree_stats(stats: &[TreeEpisodeStats], reports: &[EpisodeReport]) -> TreeAggregate {
    let sum = |f: fn(&TreeEpisodeStats) -> u64| stats.iter().map(f).sum::<u64>();
    let isum = |f: fn(&TreeEpisodeStats) -> i64| stats.iter().map(f).sum::<i64>();
    let (robber_gaps, cop_gaps) = (sum(|s| s.robber_gap_count), sum(|s| s.cop_gap_count));
    let (mean_robber_gap, robber_gap_std_error) =
        pooled_mean(robber_gaps, sum(|s| s.robber_gap_sum), sum(|s| s.robber_gap_sumsq));
    let (mean_cop_gap, _) = pooled_mean(cop_gaps, sum(|s| s.cop_gap_sum), sum(|s| s.cop_gap_sumsq));
    let (rb, cb) = (sum(|s| s.robber_base_moves), sum(|s| s.cop_base_moves));
    let ratio = |num: i64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let y_slope = if stats.is_empty() {
        0.0
    } else {
        stats
            .iter()
            .zip(reports)
            .map(|(s, r)| s.y_final as f64 / r.steps_run.max(1) as f64)
            .sum::<f64>()
            / stats.len() as f64
    };
    TreeAggregate {
        robber_gaps,
        mean_robber_gap,
        robber_gap_std_error,
        cop_gaps,
        mean_cop_gap,
        robber_base_moves: rb,
        mean_robber_f_tilde: ratio(isum(|s| s.robber_f_tilde_sum), rb),
        cop_base_moves: cb,
        mean_cop_f_tilde: ratio(isum(|s| s.cop_f_tilde_sum), cb),
        dominance_violations: sum(|s| s.dominance_violations),
        y_slope,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub n_episodes: u64,
    pub horizon: u64,
    pub captured: u64,
    pub capture_fraction: f64,
    pub capture_interval: Interval,
    pub mean_capture_time: Option<f64>,
    pub median_capture_time: Option<f64>,
    pub censored_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeAggregate>,
}

impl BatchResult {
    /// Fraction of episodes captured within `h <= horizon` rounds.
    pub fn capture_fraction_at(&self, h: u64) -> f64 {
        let hits = self.reports.iter().filter(|r| r.captured_by(h)).count();
        hits as f64 / self.reports.len() as f64
    }

    /// Summary of the batch as if it had been run with horizon `h`.
    pub fn summary_at(&self, h: u64) -> BatchSummary {
        let h = h.min(self.horizon);
        let n = self.reports.len() as u64;
        let mut times: Vec<u64> = self.reports.iter().filter_map(|r| r.capture_time.filter(|&t| t <= h)).collect();
        times.sort_unstable();
        let captured = times.len() as u64;
        let mean_capture_time = (!times.is_empty()).then(|| times.iter().map(|&t| t as f64).sum::<f64>() / times.len() as f64);
        let median_capture_time = (!times.is_empty()).then(|| {
            let m = times.len() / 2;
            if times.len() % 2 == 1 {
                times[m] as f64
            } else {
                0.5 * (times[m - 1] + times[m]) as f64
            }
        });
        let fraction = captured as f64 / n as f64;
        BatchSummary {
            n_episodes: n,
            horizon: h,
            captured,
            capture_fraction: fraction,
            capture_interval: wilson_interval(captured, n, Z95),
            mean_capture_time,
            median_capture_time,
            censored_fraction: 1.0 - fraction,
            tree: self.tree_stats.as_ref().map(|s| aggregate_tree_stats(s, &self.reports)),
        }
    }

    pub fn summary(&self) -> BatchSummary {
        self.summary_at(self.horizon)
    }
}

/// Reading of a capture interval against a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Capture,
    Escape,
    Boundary,
}

pub fn band(interval: Interval, threshold: f64) -> Band {
    if interval.low > threshold {
        Band::Capture
    } else if interval.high < threshold {
        Band::Escape
    } else {
        Band::Boundary
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    pub cop: TreeStrategy,
    pub robber: TreeStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseObservation {
    pub pairing: Pairing,
    pub capture_fraction: f64,
    pub interval: Interval,
    pub band: Band,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub t_r: f64,
    pub t_c: f64,
    pub analytic: Option<TreeRegime>,
    /// One entry per pairing that ran, in pairing order.
    pub observed: Vec<PhaseObservation>,
    /// Why part of this cell could not be computed.
    pub errors: Vec<String>,
}

impl PhasePoint {
    /// Analytic verdict for the robber strategy of `pairing`.
    pub fn analytic_for(&self, robber: TreeStrategy) -> Option<Winner> {
        let regime = self.analytic.as_ref()?;
        match robber {
            TreeStrategy::Rsa => Some(regime.rsa.winner),
            TreeStrategy::Rsb => Some(regime.rsb.winner),
            _ => None,
        }
    }

    pub fn observed_for(&self, robber: TreeStrategy) -> Option<&PhaseObservation> {
        self.observed.iter().find(|o| o.pairing.robber == robber)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub batch: BatchConfig,
    /// Base distance between the starting pieces.
    pub start_distance: usize,
    /// Capture fraction separating the capture and escape bands.
    pub threshold: f64,
}

/// Runs every pairing at every `(t_r, t_c)` cell with the same seeds, so
/// neighbouring cells share random numbers. Failures are recorded per cell.
pub fn sweep_phase(
    tree: &TreeParams,
    pairings: &[Pairing],
    t_r_values: &[f64],
    t_c_values: &[f64],
    config: &SweepConfig,
) -> Vec<PhasePoint> {
    let start = TreeGameState::base_pair(config.start_distance);
    let mut points = Vec::with_capacity(t_r_values.len() * t_c_values.len());
    for &t_c in t_c_values {
        for &t_r in t_r_values {
            let mut point = PhasePoint { t_r, t_c, analytic: None, observed: Vec::new(), errors: Vec::new() };
            match analytics::tree_regime(t_r, t_c, tree.small_degree, tree.base_degree) {
                Ok(regime) => point.analytic = Some(regime),
                Err(e) => point.errors.push(format!("analytic: {e}")),
            }
            match GameParams::tree(t_c, t_r) {
                Err(e) => point.errors.push(format!("parameters: {e}")),
                Ok(params) => {
                    for &pairing in pairings {
                        let spec = GameSpec::Tree {
                            tree: *tree,
                            params,
                            cop: pairing.cop,
                            robber: pairing.robber,
                            start: start.clone(),
                        };
                        match run_batch(&spec, &config.batch) {
                            Ok(result) => {
                                let s = result.summary();
                                point.observed.push(PhaseObservation {
                                    pairing,
                                    capture_fraction: s.capture_fraction,
                                    interval: s.capture_interval,
                                    band: band(s.capture_interval, config.threshold),
                                });
                            }
                            Err(e) => point.errors.push(format!("{} vs {}: {e}", pairing.cop.name(), pairing.robber.name())),
                        }
                    }
                }
            }
            points.push(point);
        }
    }
    points
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub gaps: u64,
    /// The closed form at the same parameters.
    pub analytic: f64,
}

/// Pooled mean gap between consecutive base moves of an RSB robber chased
/// by a CSB cop with tipsiness `t_c`, starting `start_distance` apart.
pub fn estimate_mu(
    tree: &TreeParams,
    t_r: f64,
    t_c: f64,
    start_distance: usize,
    config: &BatchConfig,
) -> Result<MuEstimate, EngineError> {
    let analytic = analytics::mu(t_r, tree.small_degree, tree.base_degree)?;
    let spec = GameSpec::Tree {
        tree: *tree,
        params: GameParams::tree(t_c, t_r).map_err(GameError::from)?,
        cop: TreeStrategy::Csb,
        robber: TreeStrategy::Rsb,
        start: TreeGameState::base_pair(start_distance),
    };
    let result = run_batch(&spec, config)?;
    let stats = result.tree_stats.as_deref().unwrap_or_default();
    let count: u64 = stats.iter().map(|s| s.robber_gap_count).sum();
    let (mean, se) = pooled_mean(
        count,
        stats.iter().map(|s| s.robber_gap_sum).sum(),
        stats.iter().map(|s| s.robber_gap_sumsq).sum(),
    );
    Ok(MuEstimate { mean: mean.unwrap_or(f64::NAN), std_error: se.unwrap_or(f64::NAN), gaps: count, analytic })
}
