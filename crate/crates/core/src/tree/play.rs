use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::address::{common_prefix, TreeGameState, TreeParams, TreeVertex};
use crate::episode::EpisodeReport;
use crate::error::GameError;
use crate::grid::Side;
use crate::spinner::{GameParams, Mode, RngStream, Spinner, SpinnerOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TreeStrategy {
    /// Cop: step along the unique path toward the robber.
    Cs,
    /// Cop: climb back to the base tree, walk the base tree to the robber's
    /// copy, then wait there.
    Csb,
    /// Robber: step to a uniformly chosen neighbor off the path to the cop,
    /// staying in the base tree while on it.
    Rsa,
    /// Robber: as RSA on the base tree, otherwise climb back toward it.
    Rsb,
}

impl TreeStrategy {
    pub fn side(&self) -> Side {
        match self {
            TreeStrategy::Cs | TreeStrategy::Csb => Side::Cop,
            TreeStrategy::Rsa | TreeStrategy::Rsb => Side::Robber,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TreeStrategy::Cs => "CS",
            TreeStrategy::Csb => "CSB",
            TreeStrategy::Rsa => "RSA",
            TreeStrategy::Rsb => "RSB",
        }
    }

    fn check(&self, side: Side) -> Result<(), GameError> {
        if self.side() != side {
            return Err(GameError::WrongSide { strategy: self.name().into(), side: side.name() });
        }
        Ok(())
    }
}

impl FromStr for TreeStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "CS" => Ok(TreeStrategy::Cs),
            "CSB" => Ok(TreeStrategy::Csb),
            "RSA" => Ok(TreeStrategy::Rsa),
            "RSB" => Ok(TreeStrategy::Rsb),
            _ => Err(format!("unknown tree strategy {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TreeStep {
    /// Along the base edge with this label.
    Base(u8),
    /// From a base vertex to the root of its small tree.
    Enter,
    /// One step closer to the base tree.
    Up,
    /// To the child with this label.
    Down(u8),
    Stay,
}

const COP: usize = 0;
const ROBBER: usize = 1;

fn index(side: Side) -> usize {
    match side {
        Side::Cop => COP,
        Side::Robber => ROBBER,
    }
}

#[inline]
fn push_tracked(word: &mut Vec<u8>, other: &[u8], lcp: &mut usize, label: u8) {
    let len = word.len();
    if *lcp == len && other.get(len) == Some(&label) {
        *lcp += 1;
    }
    word.push(label);
}

#[inline]
fn pop_tracked(word: &mut Vec<u8>, lcp: &mut usize) {
    word.pop();
    *lcp = (*lcp).min(word.len());
}

#[inline]
fn pick(u: f64, n: usize) -> usize {
    ((u * n as f64) as usize).min(n - 1)
}

/// Both positions plus the common-prefix lengths of their addresses, kept
/// current so every query and move is O(1).
#[derive(Debug, Clone)]
pub(crate) struct Board {
    pieces: [TreeVertex; 2],
    base_lcp: usize,
    small_lcp: usize,
}

impl Board {
    pub(crate) fn new(state: &TreeGameState) -> Self {
        Self {
            base_lcp: common_prefix(&state.cop.base, &state.robber.base),
            small_lcp: common_prefix(&state.cop.small, &state.robber.small),
            pieces: [state.cop.clone(), state.robber.clone()],
        }
    }

    pub(crate) fn state(&self) -> TreeGameState {
        TreeGameState { cop: self.pieces[COP].clone(), robber: self.pieces[ROBBER].clone() }
    }

    fn piece(&self, i: usize) -> &TreeVertex {
        &self.pieces[i]
    }

    /// Both pieces project to the same base vertex.
    #[inline]
    pub(crate) fn same_copy(&self) -> bool {
        self.base_lcp == self.pieces[COP].base.len() && self.base_lcp == self.pieces[ROBBER].base.len()
    }

    #[inline]
    pub(crate) fn captured(&self) -> bool {
        let (c, r) = (&self.pieces[COP], &self.pieces[ROBBER]);
        self.same_copy() && c.small.len() == r.small.len() && self.small_lcp == c.small.len()
    }

    /// d(C', R').
    #[inline]
    pub(crate) fn base_distance(&self) -> usize {
        self.pieces[COP].base.len() + self.pieces[ROBBER].base.len() - 2 * self.base_lcp
    }

    pub(crate) fn distance(&self) -> usize {
        let (c, r) = (&self.pieces[COP], &self.pieces[ROBBER]);
        if self.same_copy() {
            c.small.len() + r.small.len() - 2 * self.small_lcp
        } else {
            c.small.len() + r.small.len() + self.base_distance()
        }
    }

    /// Label of the base edge from the mover's projection toward the other
    /// projection; `None` when the projections coincide.
    #[inline]
    fn base_toward_label(&self, mover: usize) -> Option<u8> {
        if self.same_copy() {
            return None;
        }
        let v = &self.pieces[mover].base;
        let w = &self.pieces[1 - mover].base;
        Some(if self.base_lcp < v.len() { v[v.len() - 1] } else { w[v.len()] })
    }

    /// First step of the unique path from the mover to the other piece.
    #[inline]
    fn toward(&self, mover: usize) -> TreeStep {
        let v = &self.pieces[mover];
        let w = &self.pieces[1 - mover];
        if !v.on_base() {
            let k = v.small.len();
            if self.same_copy() && self.small_lcp == k && w.small.len() > k {
                TreeStep::Down(w.small[k])
            } else {
                TreeStep::Up
            }
        } else {
            match self.base_toward_label(mover) {
                None => TreeStep::Enter,
                Some(l) => TreeStep::Base(l),
            }
        }
    }

    pub(crate) fn apply(&mut self, mover: usize, step: TreeStep) {
        let [cop, robber] = &mut self.pieces;
        let (v, w) = if mover == COP { (cop, &*robber) } else { (robber, &*cop) };
        match step {
            TreeStep::Base(l) => {
                if v.base.last() == Some(&l) {
                    pop_tracked(&mut v.base, &mut self.base_lcp);
                } else {
                    push_tracked(&mut v.base, &w.base, &mut self.base_lcp, l);
                }
            }
            TreeStep::Enter => push_tracked(&mut v.small, &w.small, &mut self.small_lcp, 0),
            TreeStep::Down(j) => push_tracked(&mut v.small, &w.small, &mut self.small_lcp, j),
            TreeStep::Up => pop_tracked(&mut v.small, &mut self.small_lcp),
            TreeStep::Stay => {}
        }
    }
}

/// Uniform base label that does not lead toward the other piece.
fn flee_label(tree: &TreeParams, board: &Board, mover: usize, u: f64) -> u8 {
    let labels = tree.base_labels();
    match board.base_toward_label(mover) {
        None => pick(u, labels as usize) as u8,
        Some(e) => {
            let k = pick(u, labels as usize - 1) as u8;
            if k >= e {
                k + 1
            } else {
                k
            }
        }
    }
}

fn sober_step(tree: &TreeParams, board: &Board, mover: usize, strategy: TreeStrategy, u: f64) -> TreeStep {
    let on_base = board.piece(mover).on_base();
    match strategy {
        TreeStrategy::Cs => board.toward(mover),
        TreeStrategy::Csb => {
            if !on_base {
                TreeStep::Up
            } else {
                match board.base_toward_label(mover) {
                    None => TreeStep::Stay,
                    Some(l) => TreeStep::Base(l),
                }
            }
        }
        TreeStrategy::Rsa | TreeStrategy::Rsb if on_base => TreeStep::Base(flee_label(tree, board, mover, u)),
        TreeStrategy::Rsb => TreeStep::Up,
        TreeStrategy::Rsa => {
            // neighbors are Up, Down(0), ..., Down(δ-2); skip the one toward the cop
            let toward = board.toward(mover);
            let n = tree.child_labels() as usize;
            let mut k = pick(u, n);
            let all = std::iter::once(TreeStep::Up).chain((0..tree.child_labels()).map(TreeStep::Down));
            for step in all {
                if step == toward {
                    continue;
                }
                if k == 0 {
                    return step;
                }
                k -= 1;
            }
            unreachable!("δ - 1 off-path neighbors exist")
        }
    }
}

/// A uniformly random neighbor. On the base tree slot 0 enters the small
/// tree and slots 1..Δ are base edges, with the edge toward the other
/// projection (if any) in the last slot; the base slot is returned too.
fn tipsy_step(tree: &TreeParams, board: &Board, mover: usize, u: f64) -> (TreeStep, Option<usize>) {
    if board.piece(mover).on_base() {
        let k = pick(u, tree.base_degree as usize);
        if k == 0 {
            return (TreeStep::Enter, None);
        }
        let slot = k - 1;
        let last = tree.base_labels() - 1;
        let label = match board.base_toward_label(mover) {
            None => slot as u8,
            Some(e) if slot as u8 == last => e,
            Some(e) => {
                if slot as u8 >= e {
                    slot as u8 + 1
                } else {
                    slot as u8
                }
            }
        };
        (TreeStep::Base(label), Some(slot))
    } else {
        let k = pick(u, tree.small_degree as usize);
        let step = if k == 0 { TreeStep::Up } else { TreeStep::Down(k as u8 - 1) };
        (step, None)
    }
}

fn check_live(tree: &TreeParams, state: &TreeGameState) -> Result<(), GameError> {
    state.validate(tree)?;
    if state.is_capture() {
        return Err(GameError::AlreadyCaptured);
    }
    Ok(())
}

/// One sober move by whichever side `strategy` belongs to.
pub fn sober_move_tree(
    tree: &TreeParams,
    strategy: TreeStrategy,
    state: &TreeGameState,
    u: f64,
) -> Result<TreeGameState, GameError> {
    check_live(tree, state)?;
    let mover = index(strategy.side());
    let mut board = Board::new(state);
    let step = sober_step(tree, &board, mover, strategy, u);
    board.apply(mover, step);
    Ok(board.state())
}

/// One uniformly random move of `mover`.
pub fn tipsy_move_tree(
    tree: &TreeParams,
    state: &TreeGameState,
    mover: Side,
    u: f64,
) -> Result<TreeGameState, GameError> {
    check_live(tree, state)?;
    let mut board = Board::new(state);
    let (step, _) = tipsy_step(tree, &board, index(mover), u);
    board.apply(index(mover), step);
    Ok(board.state())
}

/// One move made along a base edge, or a CSB stay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseMoveEvent {
    pub step: u64,
    pub side: Side,
    pub sober: bool,
    /// +1 if d(C', R') went up (or stayed put), -1 if it went down.
    pub f: i8,
    /// The strategy-independent lower bound driven by the same spinner outcome.
    pub f_tilde: i8,
    pub projections_equal: bool,
}

/// Running totals of the base-move bookkeeping of one episode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TreeEpisodeStats {
    pub robber_base_moves: u64,
    pub cop_base_moves: u64,
    /// Gaps T(n) - T(n-1) between consecutive base moves.
    pub robber_gap_count: u64,
    pub robber_gap_sum: u64,
    pub robber_gap_sumsq: u64,
    pub cop_gap_count: u64,
    pub cop_gap_sum: u64,
    pub cop_gap_sumsq: u64,
    pub robber_f_sum: i64,
    pub robber_f_tilde_sum: i64,
    pub cop_f_sum: i64,
    pub cop_f_tilde_sum: i64,
    /// Events with F < F̃.
    pub dominance_violations: u64,
    /// Events with C' ≠ R' and F ≠ F̃.
    pub equality_violations: u64,
    pub csb_stays: u64,
    /// Y at the end of the episode: the sum of all recorded F.
    pub y_final: i64,
    pub start_base_distance: u64,
    pub final_base_distance: u64,
    /// Rounds after which both pieces sat in the same copy.
    pub same_copy_rounds: u64,
    pub first_same_copy: Option<u64>,
    pub cop_depth_sum: u64,
    pub robber_depth_sum: u64,
    pub cop_depth_max: u64,
    pub robber_depth_max: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEpisode {
    pub report: EpisodeReport,
    pub stats: TreeEpisodeStats,
    /// Every base move in order, when requested.
    pub events: Option<Vec<BaseMoveEvent>>,
}

/// Simulates one game on X(Δ, δ). Each round draws a spinner uniform and a
/// move uniform, like the grid game.
#[allow(clippy::too_many_arguments)]
pub fn run_tree_episode(
    tree: &TreeParams,
    params: &GameParams,
    cop: TreeStrategy,
    robber: TreeStrategy,
    start: &TreeGameState,
    horizon: u64,
    stream: &RngStream,
    record_events: bool,
) -> Result<TreeEpisode, GameError> {
    if params.mode != Mode::Tree {
        return Err(GameError::WrongMode { expected: "tree", found: params.mode.to_string() });
    }
    crate::spinner::validate(params)?;
    check_live(tree, start)?;
    if horizon == 0 {
        return Err(GameError::ZeroHorizon);
    }
    cop.check(Side::Cop)?;
    robber.check(Side::Robber)?;

    let spinner = Spinner::new(params);
    let mut draws = stream.draws();
    let mut board = Board::new(start);
    let mut stats = TreeEpisodeStats {
        start_base_distance: board.base_distance() as u64,
        ..Default::default()
    };
    let mut events = record_events.then(Vec::new);
    let mut last_base = [None::<u64>; 2];
    let last_slot = tree.base_labels() as usize - 1;

    for step in 1..=horizon {
        let u = draws.uniform();
        let v = draws.uniform();
        let outcome = spinner.spin(u);
        let (mover, sober) = match outcome {
            SpinnerOutcome::SoberCop => (COP, true),
            SpinnerOutcome::SoberRobber => (ROBBER, true),
            SpinnerOutcome::TipsyCop => (COP, false),
            SpinnerOutcome::TipsyRobber => (ROBBER, false),
        };
        let (mv, slot) = if sober {
            let strategy = if mover == COP { cop } else { robber };
            (sober_step(tree, &board, mover, strategy, v), None)
        } else {
            tipsy_step(tree, &board, mover, v)
        };
        let base_move = board.piece(mover).on_base() && matches!(mv, TreeStep::Base(_) | TreeStep::Stay);
        let before = board.base_distance();
        board.apply(mover, mv);

        if base_move {
            let after = board.base_distance();
            let f: i8 = if after >= before { 1 } else { -1 };
            let f_tilde: i8 = match (mover, slot) {
                (ROBBER, None) => 1,
                (_, None) => -1,
                (_, Some(s)) => {
                    if s < last_slot {
                        1
                    } else {
                        -1
                    }
                }
            };
            let projections_equal = before == 0;
            if f < f_tilde {
                stats.dominance_violations += 1;
            }
            if !projections_equal && f != f_tilde {
                stats.equality_violations += 1;
            }
            if mv == TreeStep::Stay {
                stats.csb_stays += 1;
            }
            let (moves, gap_count, gap_sum, gap_sumsq, f_sum, f_tilde_sum) = if mover == ROBBER {
                (
                    &mut stats.robber_base_moves,
                    &mut stats.robber_gap_count,
                    &mut stats.robber_gap_sum,
                    &mut stats.robber_gap_sumsq,
                    &mut stats.robber_f_sum,
                    &mut stats.robber_f_tilde_sum,
                )
            } else {
                (
                    &mut stats.cop_base_moves,
                    &mut stats.cop_gap_count,
                    &mut stats.cop_gap_sum,
                    &mut stats.cop_gap_sumsq,
                    &mut stats.cop_f_sum,
                    &mut stats.cop_f_tilde_sum,
                )
            };
            *moves += 1;
            if let Some(prev) = last_base[mover] {
                let gap = step - prev;
                *gap_count += 1;
                *gap_sum += gap;
                *gap_sumsq += gap * gap;
            }
            last_base[mover] = Some(step);
            *f_sum += f as i64;
            *f_tilde_sum += f_tilde as i64;
            stats.y_final += f as i64;
            if let Some(events) = events.as_mut() {
                events.push(BaseMoveEvent {
                    step,
                    side: if mover == COP { Side::Cop } else { Side::Robber },
                    sober,
                    f,
                    f_tilde,
                    projections_equal,
                });
            }
        }

        if board.same_copy() {
            stats.same_copy_rounds += 1;
            stats.first_same_copy.get_or_insert(step);
        }
        let cop_depth = board.piece(COP).depth() as u64;
        let robber_depth = board.piece(ROBBER).depth() as u64;
        stats.cop_depth_sum += cop_depth;
        stats.robber_depth_sum += robber_depth;
        stats.cop_depth_max = stats.cop_depth_max.max(cop_depth);
        stats.robber_depth_max = stats.robber_depth_max.max(robber_depth);

        if board.captured() {
            stats.final_base_distance = 0;
            return Ok(TreeEpisode { report: EpisodeReport::captured_at(step), stats, events });
        }
    }
    stats.final_base_distance = board.base_distance() as u64;
    Ok(TreeEpisode {
        report: EpisodeReport::censored(horizon, board.distance() as u64),
        stats,
        events,
    })
}
