//! Exact answers on finite truncations: absorbing Markov chains built from
//! the folded grid walk or from a walk on the integers, solved by
//! Gauss–Seidel iteration.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::GameError;
use crate::grid::{folded_step_distribution, GridState, GridStrategy};
use crate::spinner::GameParams;

pub const SOLVE_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("truncation radius must be at least 1")]
    ZeroRadius,
    #[error("iteration stopped after {sweeps} sweeps with residual {residual:e}")]
    NotConverged { sweeps: usize, residual: f64 },
}

/// What happens to moves that leave the truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryPolicy {
    /// They end the game as an escape.
    Killing,
    /// They are replaced by staying put.
    Reflecting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainLabel {
    /// A folded grid state with `y >= |x|`.
    Grid(GridState),
    /// A distance on the non-negative integers.
    Line(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    State(usize),
    Capture,
    Escape,
}

/// Transient states with sparse transition rows; `Capture` and `Escape` are
/// implicit absorbing states.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncatedChain {
    pub labels: Vec<ChainLabel>,
    pub rows: Vec<Vec<(Target, f64)>>,
    pub boundary: BoundaryPolicy,
    pub radius: u64,
}

impl TruncatedChain {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: ChainLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }
}

fn push_merged(row: &mut Vec<(Target, f64)>, target: Target, p: f64) {
    match row.iter_mut().find(|(t, _)| *t == target) {
        Some(entry) => entry.1 += p,
        None => row.push((target, p)),
    }
}

/// States of the wedge `y >= |x|` with `1 <= y <= radius`, ordered by height.
fn wedge_states(radius: u64) -> Vec<GridState> {
    let r = radius as i64;
    (1..=r).flat_map(|y| (-y..=y).map(move |x| GridState::new(x, y))).collect()
}

/// The folded grid walk restricted to heights `1..=radius`. Every row is
/// the folded one-step law of the unfolded game.
pub fn build_grid_chain(
    params: &GameParams,
    cop: &GridStrategy,
    robber: &GridStrategy,
    radius: u64,
    boundary: BoundaryPolicy,
) -> Result<TruncatedChain, OracleError> {
    if radius == 0 {
        return Err(OracleError::ZeroRadius);
    }
    crate::spinner::validate(params).map_err(GameError::from)?;
    let states = wedge_states(radius);
    let index: HashMap<GridState, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut rows = Vec::with_capacity(states.len());
    for (i, &s) in states.iter().enumerate() {
        let mut row = Vec::with_capacity(4);
        for (target, p) in folded_step_distribution(params, cop, robber, s)? {
            let t = if target.is_capture() {
                Target::Capture
            } else if let Some(&j) = index.get(&target) {
                Target::State(j)
            } else {
                match boundary {
                    BoundaryPolicy::Killing => Target::Escape,
                    BoundaryPolicy::Reflecting => Target::State(i),
                }
            };
            push_merged(&mut row, t, p);
        }
        rows.push(row);
    }
    Ok(TruncatedChain {
        labels: states.into_iter().map(ChainLabel::Grid).collect(),
        rows,
        boundary,
        radius,
    })
}

/// Birth–death chain on `1..=radius` stepping up with probability `up(i)`
/// and down otherwise; reaching 0 is capture.
pub fn build_line_chain(
    up: impl Fn(u64) -> f64,
    radius: u64,
    boundary: BoundaryPolicy,
) -> Result<TruncatedChain, OracleError> {
    if radius == 0 {
        return Err(OracleError::ZeroRadius);
    }
    let n = radius as usize;
    let rows = (1..=radius)
        .map(|i| {
            let p = up(i);
            let down = if i == 1 { Target::Capture } else { Target::State(i as usize - 2) };
            let upward = if i < radius {
                Target::State(i as usize)
            } else {
                match boundary {
                    BoundaryPolicy::Killing => Target::Escape,
                    BoundaryPolicy::Reflecting => Target::State(n - 1),
                }
            };
            let mut row = Vec::with_capacity(2);
            if p > 0.0 {
                push_merged(&mut row, upward, p);
            }
            if p < 1.0 {
                push_merged(&mut row, down, 1.0 - p);
            }
            row
        })
        .collect();
    Ok(TruncatedChain { labels: (1..=radius).map(ChainLabel::Line).collect(), rows, boundary, radius })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleSolution {
    pub labels: Vec<ChainLabel>,
    /// Probability of reaching capture before escape.
    pub capture_probability: Vec<f64>,
    /// Expected number of rounds to capture, given capture happens.
    pub expected_time: Vec<Option<f64>>,
    pub boundary: BoundaryPolicy,
    pub sweeps: usize,
}

impl OracleSolution {
    pub fn at(&self, label: ChainLabel) -> Option<(f64, Option<f64>)> {
        let i = self.labels.iter().position(|&l| l == label)?;
        Some((self.capture_probability[i], self.expected_time[i]))
    }
}

/// Solves `x = b + P x` over the transient states by symmetric Gauss–Seidel
/// sweeps until the residual is below [`SOLVE_TOL`] and the extrapolated
/// error is a hundredth of that, relative to the solution size.
fn gauss_seidel(chain: &TruncatedChain, b: &[f64]) -> Result<(Vec<f64>, usize), OracleError> {
    let n = chain.len();
    let mut x = vec![0.0; n];
    let diag: Vec<f64> = chain
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().filter(|(t, _)| *t == Target::State(i)).map(|e| e.1).sum())
        .collect();
    let update = |x: &mut [f64], i: usize| {
        let mut acc = b[i];
        for &(t, p) in &chain.rows[i] {
            if let Target::State(j) = t {
                if j != i {
                    acc += p * x[j];
                }
            }
        }
        x[i] = acc / (1.0 - diag[i]);
    };
    let mut residual = f64::INFINITY;
    let mut last_change = f64::INFINITY;
    for sweep in 1..=MAX_SWEEPS {
        let before = x.clone();
        for i in 0..n {
            update(&mut x, i);
        }
        for i in (0..n).rev() {
            update(&mut x, i);
        }
        let change = x.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        residual = (0..n)
            .map(|i| {
                let mut acc = b[i];
                for &(t, p) in &chain.rows[i] {
                    if let Target::State(j) = t {
                        acc += p * x[j];
                    }
                }
                (acc - x[i]).abs()
            })
            .fold(0.0, f64::max);
        if !residual.is_finite() {
            break;
        }
        // the remaining error is about change * rho / (1 - rho) for contraction rate rho
        let rho = (change / last_change).min(1.0 - 1e-15);
        last_change = change;
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let error = change * rho / (1.0 - rho);
        if residual <= SOLVE_TOL && (error <= SOLVE_TOL * scale * 1e-2 || change == 0.0) {
            return Ok((x, sweep));
        }
    }
    Err(OracleError::NotConverged { sweeps: MAX_SWEEPS, residual })
}

/// Capture probabilities and conditional expected capture times.
pub fn solve(chain: &TruncatedChain) -> Result<OracleSolution, OracleError> {
    let capture_step: Vec<f64> = chain
        .rows
        .iter()
        .map(|row| row.iter().filter(|(t, _)| *t == Target::Capture).map(|e| e.1).sum())
        .collect();
    let (h, sweeps_h) = gauss_seidel(chain, &capture_step)?;
    // g = E[T; capture] solves g = h + P g
    let (g, sweeps_g) = gauss_seidel(chain, &h)?;
    let expected_time = h
        .iter()
        .zip(&g)
        .map(|(&hi, &gi)| (hi > 0.0).then(|| gi / hi))
        .collect();
    Ok(OracleSolution {
        labels: chain.labels.clone(),
        capture_probability: h,
        expected_time,
        boundary: chain.boundary,
        sweeps: sweeps_h.max(sweeps_g),
    })
}

/// Stationary law of the reflecting folded walk when capture is replaced
/// by a forced step from `(0, 0)` back to `(0, 1)`.
pub fn grid_stationary_distribution(
    params: &GameParams,
    cop: &GridStrategy,
    robber: &GridStrategy,
    radius: u64,
) -> Result<Vec<(GridState, f64)>, OracleError> {
    let chain = build_grid_chain(params, cop, robber, radius, BoundaryPolicy::Reflecting)?;
    let n = chain.len();
    // index n stands for (0, 0)
    let restart = chain.index_of(ChainLabel::Grid(GridState::new(0, 1))).expect("radius is at least 1");
    let mut pi = vec![1.0 / (n + 1) as f64; n + 1];
    let mut next = vec![0.0; n + 1];
    for sweep in 0..MAX_SWEEPS {
        next.iter_mut().for_each(|v| *v = 0.0);
        next[restart] += pi[n];
        for (i, row) in chain.rows.iter().enumerate() {
            for &(t, p) in row {
                let j = match t {
                    Target::State(j) => j,
                    Target::Capture => n,
                    Target::Escape => unreachable!("reflecting chains never escape"),
                };
                next[j] += p * pi[i];
            }
        }
        let mut change: f64 = 0.0;
        for (a, b) in pi.iter_mut().zip(&next) {
            let lazy = 0.5 * (*a + b);
            change = change.max((lazy - *a).abs());
            *a = lazy;
        }
        if change < 1e-16 {
            break;
        }
        if sweep + 1 == MAX_SWEEPS {
            return Err(OracleError::NotConverged { sweeps: MAX_SWEEPS, residual: change });
        }
    }
    let total: f64 = pi.iter().sum();
    let mut out: Vec<(GridState, f64)> = chain
        .labels
        .iter()
        .zip(&pi)
        .map(|(l, &p)| match l {
            ChainLabel::Grid(s) => (*s, p / total),
            ChainLabel::Line(_) => unreachable!("grid chain"),
        })
        .collect();
    out.insert(0, (GridState::CAPTURE, pi[n] / total));
    Ok(out)
}
