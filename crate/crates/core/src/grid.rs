//! The game on Z² tracked through the difference vector `D = R - C`.
//!
//! Strategies are defined on the wedge `y >= |x|` and extended to the whole
//! plane by the coordinate reflections. Ties on `|x| = |y|` are broken toward
//! the y-coordinate for RS, CS1 and CS2, and toward the x-coordinate for the
//! foolish cop. Simulation always runs in the unfolded plane; [`GridState::fold`]
//! maps a state into the wedge when the folded law is wanted.

use std::fmt;
use std::str::FromStr;

use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};

use crate::episode::EpisodeReport;
use crate::error::GameError;
use crate::spinner::{GameParams, RngStream, Spinner, SpinnerOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Cop,
    Robber,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Cop => "cop",
            Side::Robber => "robber",
        }
    }
}

/// Unit move of the difference vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GridMove {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
}

impl GridMove {
    pub const ALL: [GridMove; 4] = [
        GridMove::PlusX,
        GridMove::MinusX,
        GridMove::PlusY,
        GridMove::MinusY,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn delta(self) -> (i64, i64) {
        match self {
            GridMove::PlusX => (1, 0),
            GridMove::MinusX => (-1, 0),
            GridMove::PlusY => (0, 1),
            GridMove::MinusY => (0, -1),
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            GridMove::PlusX => GridMove::MinusX,
            GridMove::MinusX => GridMove::PlusX,
            GridMove::PlusY => GridMove::MinusY,
            GridMove::MinusY => GridMove::PlusY,
        }
    }

    pub fn reflect(self, r: Reflection) -> Self {
        match (r, self) {
            (Reflection::NegateX, GridMove::PlusX | GridMove::MinusX) => self.opposite(),
            (Reflection::NegateY, GridMove::PlusY | GridMove::MinusY) => self.opposite(),
            (Reflection::Swap, GridMove::PlusX) => GridMove::PlusY,
            (Reflection::Swap, GridMove::MinusX) => GridMove::MinusY,
            (Reflection::Swap, GridMove::PlusY) => GridMove::PlusX,
            (Reflection::Swap, GridMove::MinusY) => GridMove::MinusX,
            _ => self,
        }
    }
}

/// Generators of the symmetry group the strategies respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reflection {
    NegateX,
    NegateY,
    Swap,
}

/// The difference vector `D = R - C`; `(0, 0)` means capture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridState {
    pub x: i64,
    pub y: i64,
}

impl GridState {
    pub const CAPTURE: GridState = GridState { x: 0, y: 0 };

    pub fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn is_capture(&self) -> bool {
        self.x == 0 && self.y == 0
    }

    /// Graph distance on Z² between the two pieces.
    pub fn distance(&self) -> u64 {
        self.x.unsigned_abs() + self.y.unsigned_abs()
    }

    /// The larger absolute coordinate.
    pub fn larger(&self) -> u64 {
        self.x.unsigned_abs().max(self.y.unsigned_abs())
    }

    #[inline]
    pub fn step(self, mv: GridMove) -> Self {
        let (dx, dy) = mv.delta();
        Self { x: self.x + dx, y: self.y + dy }
    }

    pub fn reflect(self, r: Reflection) -> Self {
        match r {
            Reflection::NegateX => Self { x: -self.x, y: self.y },
            Reflection::NegateY => Self { x: self.x, y: -self.y },
            Reflection::Swap => Self { x: self.y, y: self.x },
        }
    }

    /// Image in the wedge `y >= |x|` under the reflections across both diagonals.
    pub fn fold(self) -> Self {
        let (a, b) = (self.x, self.y);
        if b >= a.abs() {
            self
        } else if a >= b.abs() {
            Self { x: b, y: a }
        } else if -b >= a.abs() {
            Self { x: -a, y: -b }
        } else {
            Self { x: -b, y: -a }
        }
    }

    pub fn in_wedge(&self) -> bool {
        self.y >= self.x.abs()
    }
}

impl fmt::Display for GridState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GridStrategy {
    /// Robber: push the larger coordinate away from 0.
    Rs,
    /// Robber: push the smaller coordinate away from 0.
    RsSmaller,
    /// Cop: pull the larger coordinate toward 0.
    Cs1,
    /// Cop: CS1 off the diagonals; on `|x| = |y|` act as CS1 with probability
    /// `p`, otherwise push the larger coordinate away.
    Cs2 { p: f64 },
    /// Cop: pull the smaller nonzero coordinate toward 0.
    FoolishCop,
}

impl GridStrategy {
    pub fn side(&self) -> Side {
        match self {
            GridStrategy::Rs | GridStrategy::RsSmaller => Side::Robber,
            _ => Side::Cop,
        }
    }

    pub fn name(&self) -> String {
        match self {
            GridStrategy::Rs => "RS".into(),
            GridStrategy::RsSmaller => "RS-smaller".into(),
            GridStrategy::Cs1 => "CS1".into(),
            GridStrategy::Cs2 { p } => format!("CS2:{p}"),
            GridStrategy::FoolishCop => "FoolishCop".into(),
        }
    }

    fn check(&self, side: Side) -> Result<(), GameError> {
        if let GridStrategy::Cs2 { p } = self {
            if !(0.0..=1.0).contains(p) {
                return Err(GameError::BadMixing(*p));
            }
        }
        if self.side() != side {
            return Err(GameError::WrongSide { strategy: self.name(), side: side.name() });
        }
        Ok(())
    }
}

impl FromStr for GridStrategy {
    type Err = String;

    /// Accepts `RS`, `RS-smaller`, `CS1`, `CS2:<p>` and `FoolishCop`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "RS" => Ok(GridStrategy::Rs),
            "RS-smaller" => Ok(GridStrategy::RsSmaller),
            "CS1" => Ok(GridStrategy::Cs1),
            "FoolishCop" | "foolish" => Ok(GridStrategy::FoolishCop),
            _ => {
                if let Some(p) = s.strip_prefix("CS2:") {
                    let p: f64 = p.parse().map_err(|_| format!("bad CS2 mixing probability in {s:?}"))?;
                    if !(0.0..=1.0).contains(&p) {
                        return Err(format!("CS2 mixing probability {p} outside [0, 1]"));
                    }
                    Ok(GridStrategy::Cs2 { p })
                } else {
                    Err(format!("unknown grid strategy {s:?}"))
                }
            }
        }
    }
}

/// Law of one sober move as a change of `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SoberLaw {
    Det(GridMove),
    Mix { p: f64, first: GridMove, second: GridMove },
}

#[inline]
fn toward_zero_x(x: i64) -> GridMove {
    if x > 0 {
        GridMove::MinusX
    } else {
        GridMove::PlusX
    }
}

#[inline]
fn toward_zero_y(y: i64) -> GridMove {
    if y > 0 {
        GridMove::MinusY
    } else {
        GridMove::PlusY
    }
}

#[inline]
fn away_x(x: i64) -> GridMove {
    if x >= 0 {
        GridMove::PlusX
    } else {
        GridMove::MinusX
    }
}

#[inline]
fn away_y(y: i64) -> GridMove {
    if y >= 0 {
        GridMove::PlusY
    } else {
        GridMove::MinusY
    }
}

#[inline]
pub(crate) fn sober_law(strategy: &GridStrategy, s: GridState) -> SoberLaw {
    let (ax, ay) = (s.x.abs(), s.y.abs());
    let y_larger = ay >= ax;
    match *strategy {
        GridStrategy::Rs => SoberLaw::Det(if y_larger { away_y(s.y) } else { away_x(s.x) }),
        GridStrategy::RsSmaller => SoberLaw::Det(if ax <= ay { away_x(s.x) } else { away_y(s.y) }),
        GridStrategy::Cs1 => {
            SoberLaw::Det(if y_larger { toward_zero_y(s.y) } else { toward_zero_x(s.x) })
        }
        GridStrategy::Cs2 { p } => {
            if ax == ay {
                SoberLaw::Mix { p, first: toward_zero_y(s.y), second: away_y(s.y) }
            } else if y_larger {
                SoberLaw::Det(toward_zero_y(s.y))
            } else {
                SoberLaw::Det(toward_zero_x(s.x))
            }
        }
        GridStrategy::FoolishCop => {
            let x_smaller = ax <= ay;
            let mv = match (x_smaller, ax == 0, ay == 0) {
                (true, false, _) => toward_zero_x(s.x),
                (true, true, _) => toward_zero_y(s.y),
                (false, _, false) => toward_zero_y(s.y),
                (false, _, true) => toward_zero_x(s.x),
            };
            SoberLaw::Det(mv)
        }
    }
}

#[inline]
fn sober_unchecked(strategy: &GridStrategy, s: GridState, u: f64) -> GridState {
    match sober_law(strategy, s) {
        SoberLaw::Det(mv) => s.step(mv),
        SoberLaw::Mix { p, first, second } => s.step(if u < p { first } else { second }),
    }
}

#[inline]
fn tipsy_unchecked(s: GridState, mover: Side, u: f64) -> GridState {
    let k = ((u * 4.0) as usize).min(3);
    let mv = GridMove::ALL[k];
    match mover {
        Side::Robber => s.step(mv),
        Side::Cop => s.step(mv.opposite()),
    }
}

/// One sober move. `u` is consumed only by CS2 on a diagonal.
pub fn sober_move(strategy: &GridStrategy, state: GridState, u: f64) -> Result<GridState, GameError> {
    if state.is_capture() {
        return Err(GameError::AlreadyCaptured);
    }
    strategy.check(strategy.side())?;
    Ok(sober_unchecked(strategy, state, u))
}

/// One uniformly random move by `mover`; `u` picks among +x, -x, +y, -y of the mover.
pub fn tipsy_move(state: GridState, mover: Side, u: f64) -> Result<GridState, GameError> {
    if state.is_capture() {
        return Err(GameError::AlreadyCaptured);
    }
    Ok(tipsy_unchecked(state, mover, u))
}

/// Probabilities of the four unit moves of `D`, indexed by [`GridMove::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridStepDistribution {
    pub probs: [f64; 4],
}

impl GridStepDistribution {
    pub fn prob(&self, mv: GridMove) -> f64 {
        self.probs[mv.index()]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (GridMove, f64)> + '_ {
        GridMove::ALL.into_iter().map(|m| (m, self.probs[m.index()]))
    }
}

/// Exact one-step law in any number type (f64, or exact rationals in tests).
pub fn step_law<T>(
    c: &T,
    r: &T,
    t: &T,
    cop: &GridStrategy,
    robber: &GridStrategy,
    state: GridState,
) -> Result<[T; 4], GameError>
where
    T: Num + Clone + FromPrimitive,
{
    if state.is_capture() {
        return Err(GameError::AlreadyCaptured);
    }
    cop.check(Side::Cop)?;
    robber.check(Side::Robber)?;
    let quarter = t.clone() / T::from_u8(4).expect("4 is representable");
    let mut probs: [T; 4] = std::array::from_fn(|_| quarter.clone());
    for (weight, strategy) in [(c, cop), (r, robber)] {
        match sober_law(strategy, state) {
            SoberLaw::Det(mv) => {
                probs[mv.index()] = probs[mv.index()].clone() + weight.clone();
            }
            SoberLaw::Mix { p, first, second } => {
                let p = T::from_f64(p).ok_or(GameError::BadMixing(p))?;
                let q = T::one() - p.clone();
                probs[first.index()] = probs[first.index()].clone() + weight.clone() * p;
                probs[second.index()] = probs[second.index()].clone() + weight.clone() * q;
            }
        }
    }
    Ok(probs)
}

/// Exact law of one round of the unfolded game, integrating over the spinner.
pub fn step_distribution(
    params: &GameParams,
    cop: &GridStrategy,
    robber: &GridStrategy,
    state: GridState,
) -> Result<GridStepDistribution, GameError> {
    let probs = step_law(&params.c, &params.r, &params.t(), cop, robber, state)?;
    Ok(GridStepDistribution { probs })
}

/// One-round law of the folded walk on the wedge `y >= |x|`.
///
/// Targets are folded and merged, so on a diagonal the random moves that
/// leave the wedge are counted with their mirror images.
pub fn folded_step_distribution(
    params: &GameParams,
    cop: &GridStrategy,
    robber: &GridStrategy,
    state: GridState,
) -> Result<Vec<(GridState, f64)>, GameError> {
    let dist = step_distribution(params, cop, robber, state)?;
    let mut out: Vec<(GridState, f64)> = Vec::with_capacity(4);
    for (mv, p) in dist.iter() {
        if p == 0.0 {
            continue;
        }
        let target = state.step(mv).fold();
        match out.iter_mut().find(|(s, _)| *s == target) {
            Some(entry) => entry.1 += p,
            None => out.push((target, p)),
        }
    }
    Ok(out)
}

/// Expected change of the larger absolute coordinate over two rounds, by
/// exhaustive enumeration. Capture after the first round ends the game.
pub fn two_round_expectation_in<T>(
    c: &T,
    r: &T,
    t: &T,
    cop: &GridStrategy,
    robber: &GridStrategy,
    state: GridState,
) -> Result<T, GameError>
where
    T: Num + Clone + FromPrimitive,
{
    let start = T::from_u64(state.larger()).expect("coordinate fits");
    let first = step_law(c, r, t, cop, robber, state)?;
    let mut expected = T::zero();
    for (m1, p1) in GridMove::ALL.into_iter().zip(first) {
        let mid = state.step(m1);
        if mid.is_capture() {
            expected = expected + p1 * (T::zero() - start.clone());
            continue;
        }
        let second = step_law(c, r, t, cop, robber, mid)?;
        for (m2, p2) in GridMove::ALL.into_iter().zip(second) {
            let end = T::from_u64(mid.step(m2).larger()).expect("coordinate fits");
            expected = expected + p1.clone() * p2 * (end - start.clone());
        }
    }
    Ok(expected)
}

pub fn two_round_expectation(
    params: &GameParams,
    cop: &GridStrategy,
    robber: &GridStrategy,
    state: GridState,
) -> Result<f64, GameError> {
    two_round_expectation_in(&params.c, &params.r, &params.t(), cop, robber, state)
}

/// Simulates one game from `start` until capture or `horizon` rounds.
///
/// Each round consumes two uniforms from the stream: one for the spinner and
/// one for the move (direction of a tipsy move, or CS2's diagonal coin).
pub fn run_grid_episode(
    params: &GameParams,
    cop: &GridStrategy,
    robber: &GridStrategy,
    start: GridState,
    horizon: u64,
    stream: &RngStream,
) -> Result<EpisodeReport, GameError> {
    if start.is_capture() {
        return Err(GameError::AlreadyCaptured);
    }
    if horizon == 0 {
        return Err(GameError::ZeroHorizon);
    }
    crate::spinner::validate(params)?;
    cop.check(Side::Cop)?;
    robber.check(Side::Robber)?;

    let spinner = Spinner::new(params);
    let mut draws = stream.draws();
    let mut s = start;
    for step in 1..=horizon {
        let u = draws.uniform();
        let v = draws.uniform();
        s = match spinner.spin(u) {
            SpinnerOutcome::SoberCop => sober_unchecked(cop, s, v),
            SpinnerOutcome::SoberRobber => sober_unchecked(robber, s, v),
            SpinnerOutcome::TipsyCop => tipsy_unchecked(s, Side::Cop, v),
            SpinnerOutcome::TipsyRobber => tipsy_unchecked(s, Side::Robber, v),
        };
        if s.is_capture() {
            return Ok(EpisodeReport::captured_at(step));
        }
    }
    Ok(EpisodeReport::censored(horizon, s.distance()))
}
