//! Game parameters, the four-outcome spinner and deterministic random streams.
//!
//! Every round of the game one spinner outcome decides who moves and whether
//! the move is strategic (sober) or uniformly random (tipsy). The interval
//! order used by [`Spinner::spin`] is fixed as sober cop, sober robber, tipsy
//! cop, tipsy robber so that runs are reproducible across implementations.

use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for probability-sum checks on user-entered parameters.
pub const PROB_TOLERANCE: f64 = 1e-12;

/// Which board the parameters are meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Grid,
    Tree,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Grid => f.write_str("grid"),
            Mode::Tree => f.write_str("tree"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("probabilities sum to {} ≠ 1", fmt_prob(*sum))]
    SumNotOne { sum: f64 },
    #[error("tree mode needs {name} = 1/2 (got {})", fmt_prob(*value))]
    HalfSplit { name: &'static str, value: f64 },
}

/// Short decimal rendering that hides binary round-off (0.6 + 0.6 prints as 1.2).
pub(crate) fn fmt_prob(v: f64) -> String {
    let s = format!("{v:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_owned()
    } else {
        s.to_owned()
    }
}

/// The spinner probabilities `c`, `r`, `t_c`, `t_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    pub c: f64,
    pub r: f64,
    pub t_c: f64,
    pub t_r: f64,
    pub mode: Mode,
}

impl GameParams {
    pub fn new(c: f64, r: f64, t_c: f64, t_r: f64, mode: Mode) -> Result<Self, ParamError> {
        let params = Self { c, r, t_c, t_r, mode };
        validate(&params)?;
        Ok(params)
    }

    pub fn grid(c: f64, r: f64, t_c: f64, t_r: f64) -> Result<Self, ParamError> {
        Self::new(c, r, t_c, t_r, Mode::Grid)
    }

    /// Grid parameters given only the combined tipsiness `t`, split evenly.
    pub fn grid_merged(c: f64, r: f64, t: f64) -> Result<Self, ParamError> {
        Self::new(c, r, t / 2.0, t / 2.0, Mode::Grid)
    }

    /// Tree parameters from the two tipsiness values; `c = 1/2 - t_c`, `r = 1/2 - t_r`.
    pub fn tree(t_c: f64, t_r: f64) -> Result<Self, ParamError> {
        Self::new(0.5 - t_c, 0.5 - t_r, t_c, t_r, Mode::Tree)
    }

    /// Combined tipsiness `t = t_c + t_r`.
    pub fn t(&self) -> f64 {
        self.t_c + self.t_r
    }

    pub fn probability(&self, outcome: SpinnerOutcome) -> f64 {
        match outcome {
            SpinnerOutcome::SoberCop => self.c,
            SpinnerOutcome::SoberRobber => self.r,
            SpinnerOutcome::TipsyCop => self.t_c,
            SpinnerOutcome::TipsyRobber => self.t_r,
        }
    }
}

/// Checks ranges, the sum-to-one constraint and, in tree mode, the half split.
pub fn validate(params: &GameParams) -> Result<(), ParamError> {
    let fields = [
        ("c", params.c),
        ("r", params.r),
        ("t_c", params.t_c),
        ("t_r", params.t_r),
    ];
    for (name, value) in fields {
        if !(0.0..=1.0).contains(&value) {
            return Err(ParamError::OutOfRange { name, value });
        }
    }
    let sum = params.c + params.r + params.t_c + params.t_r;
    if (sum - 1.0).abs() > PROB_TOLERANCE {
        return Err(ParamError::SumNotOne { sum });
    }
    if params.mode == Mode::Tree {
        let cop = params.c + params.t_c;
        if (cop - 0.5).abs() > PROB_TOLERANCE {
            return Err(ParamError::HalfSplit { name: "c + t_c", value: cop });
        }
        let robber = params.r + params.t_r;
        if (robber - 0.5).abs() > PROB_TOLERANCE {
            return Err(ParamError::HalfSplit { name: "r + t_r", value: robber });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpinnerOutcome {
    SoberCop,
    SoberRobber,
    TipsyCop,
    TipsyRobber,
}

impl SpinnerOutcome {
    pub const ALL: [SpinnerOutcome; 4] = [
        SpinnerOutcome::SoberCop,
        SpinnerOutcome::SoberRobber,
        SpinnerOutcome::TipsyCop,
        SpinnerOutcome::TipsyRobber,
    ];

    pub fn is_sober(self) -> bool {
        matches!(self, SpinnerOutcome::SoberCop | SpinnerOutcome::SoberRobber)
    }

    pub fn is_cop(self) -> bool {
        matches!(self, SpinnerOutcome::SoberCop | SpinnerOutcome::TipsyCop)
    }
}

/// Precomputed cumulative thresholds for repeated spins with one parameter set.
#[derive(Debug, Clone, Copy)]
pub struct Spinner {
    cuts: [f64; 3],
    // outcome returned for u past the last cut; the last one with positive mass
    tail: SpinnerOutcome,
}

impl Spinner {
    pub fn new(params: &GameParams) -> Self {
        let c1 = params.c;
        let c2 = c1 + params.r;
        let c3 = c2 + params.t_c;
        let tail = SpinnerOutcome::ALL
            .into_iter()
            .rev()
            .find(|&o| params.probability(o) > 0.0)
            .unwrap_or(SpinnerOutcome::TipsyRobber);
        Self { cuts: [c1, c2, c3], tail }
    }

    #[inline]
    pub fn spin(&self, u: f64) -> SpinnerOutcome {
        if u < self.cuts[0] {
            SpinnerOutcome::SoberCop
        } else if u < self.cuts[1] {
            SpinnerOutcome::SoberRobber
        } else if u < self.cuts[2] {
            SpinnerOutcome::TipsyCop
        } else {
            self.tail
        }
    }
}

/// Maps a uniform draw in `[0, 1)` to a spinner outcome.
pub fn spin(params: &GameParams, u: f64) -> SpinnerOutcome {
    Spinner::new(params).spin(u)
}

/// Identifies one reproducible random stream: a master seed plus an episode index.
///
/// Streams with equal `(master_seed, stream_index)` yield identical draws;
/// distinct indices select disjoint ChaCha8 streams under the same key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    pub fn draws(&self) -> Draws {
        let mut inner = ChaCha8Rng::seed_from_u64(self.master_seed);
        inner.set_stream(self.stream_index);
        Draws { inner }
    }
}

/// Uniform draws for one stream.
pub struct Draws {
    inner: ChaCha8Rng,
}

impl Draws {
    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
