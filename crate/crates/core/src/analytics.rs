//! Closed-form quantities and winning-region classifiers.
//!
//! Everything here is plain f64 arithmetic. Comparisons that decide a
//! verdict treat values within [`EQ_TOL`] of each other as equal.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridState;
use crate::spinner::{validate, GameParams, ParamError};

pub const EQ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("{quantity} is undefined: {reason}")]
    Domain { quantity: &'static str, reason: String },
    #[error("{0}")]
    Unsupported(String),
}

fn domain(quantity: &'static str, reason: impl Into<String>) -> AnalyticsError {
    AnalyticsError::Domain { quantity, reason: reason.into() }
}

fn check_probability(quantity: &'static str, name: &str, p: f64) -> Result<(), AnalyticsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(quantity, format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WalkClass {
    Transient,
    NullRecurrent,
    PositiveRecurrent,
}

/// Class of the walk on the non-negative integers that steps up with
/// probability `p` and down otherwise.
pub fn gamblers_ruin_class(p: f64) -> Result<WalkClass, AnalyticsError> {
    check_probability("walk class", "p", p)?;
    Ok(if (p - 0.5).abs() <= EQ_TOL {
        WalkClass::NullRecurrent
    } else if p > 0.5 {
        WalkClass::Transient
    } else {
        WalkClass::PositiveRecurrent
    })
}

/// Expected time for the walk above to reach 0 from `n`, `n / (1 - 2p)`.
pub fn gamblers_ruin_mean_time(n: u64, p: f64) -> Result<f64, AnalyticsError> {
    check_probability("mean hitting time", "p", p)?;
    if p >= 0.5 - EQ_TOL {
        return Err(domain("mean hitting time", format!("p = {p} is not below 1/2")));
    }
    Ok(n as f64 / (1.0 - 2.0 * p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Mean and variance of the time to step from 1 down to 0 for a walk whose
/// up-probability is `overrides[i-1]` at state `i` and `p` beyond.
///
/// Works inward from the homogeneous tail with
/// `m_i (1 - p_i) = 1 + p_i m_{i+1}` and
/// `s_i (1 - p_i) = 1 + 2 p_i (m_i + m_{i+1}) + p_i (2 m_i m_{i+1} + s_{i+1})`,
/// where `m`, `s` are the first two moments of the time to move one level down.
pub fn hitting_time_moments(overrides: &[f64], p: f64) -> Result<HittingMoments, AnalyticsError> {
    check_probability("hitting time moments", "p", p)?;
    if p >= 0.5 - EQ_TOL {
        return Err(domain("hitting time moments", format!("tail up-probability {p} is not below 1/2")));
    }
    for &q in overrides {
        if !(0.0..1.0).contains(&q) {
            return Err(domain("hitting time moments", format!("up-probability {q} is not in [0, 1)")));
        }
    }
    let mut m = 1.0 / (1.0 - 2.0 * p);
    let mut s = (1.0 + 4.0 * p * m + 2.0 * p * m * m) / (1.0 - 2.0 * p);
    for &q in overrides.iter().rev() {
        let m_i = (1.0 + q * m) / (1.0 - q);
        let s_i = (1.0 + 2.0 * q * (m_i + m) + q * (2.0 * m_i * m + s)) / (1.0 - q);
        m = m_i;
        s = s_i;
    }
    Ok(HittingMoments { mean: m, variance: s - m * m })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winner {
    /// The cop captures almost surely.
    #[serde(rename = "CopAS")]
    CopAlmostSurely,
    /// The robber escapes forever with positive probability.
    RobberPositiveProb,
    /// The parameters sit exactly on a threshold.
    Boundary,
    /// No result covers these parameters.
    Undetermined,
}

impl Winner {
    /// Short name, matching the serialized form.
    pub fn name(self) -> &'static str {
        match self {
            Winner::CopAlmostSurely => "CopAS",
            Winner::RobberPositiveProb => "RobberPositiveProb",
            Winner::Boundary => "Boundary",
            Winner::Undetermined => "Undetermined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub winner: Winner,
    /// Short name of the criterion that produced the verdict.
    pub rationale: String,
    /// For cop wins on the grid: whether the expected capture time is finite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finite_expected_time: Option<bool>,
}

impl RegimeVerdict {
    fn new(winner: Winner, rationale: &str) -> Self {
        Self { winner, rationale: rationale.into(), finite_expected_time: None }
    }
}

/// Who wins on Z² when the cop plays CS1 and the robber pushes the distance up.
pub fn grid_regime(params: &GameParams) -> Result<RegimeVerdict, AnalyticsError> {
    validate(params)?;
    let (c, r) = (params.c, params.r);
    Ok(if r > c + EQ_TOL {
        RegimeVerdict::new(Winner::RobberPositiveProb, "grid-robber-faster")
    } else if c > r + EQ_TOL {
        RegimeVerdict {
            finite_expected_time: Some(true),
            ..RegimeVerdict::new(Winner::CopAlmostSurely, "grid-cop-faster")
        }
    } else {
        RegimeVerdict {
            finite_expected_time: Some(false),
            ..RegimeVerdict::new(Winner::CopAlmostSurely, "grid-equal-speeds-null-recurrent")
        }
    })
}

/// Mixing probability for CS2 that makes the folded walk reversible:
/// `t (c - r) / (2c (2r + t))`.
pub fn cs2_mixing(params: &GameParams) -> Result<f64, AnalyticsError> {
    validate(params)?;
    let (c, r, t) = (params.c, params.r, params.t());
    if c < r - EQ_TOL {
        return Err(domain("CS2 mixing probability", "needs c >= r"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok((t * (c - r) / (2.0 * c * (2.0 * r + t))).max(0.0))
}

/// Edge weights of the folded walk under CS2 with the reversible mixing
/// probability: `β^y` on the vertical edge above height `y`, `α β^(y-1)` on
/// horizontal edges at height `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightModel {
    pub beta: f64,
    pub alpha: f64,
    pub p_star: f64,
    /// Sum of all vertical edge weights, `(β + 1) / (β - 1)²`.
    pub vertical_sum: f64,
    /// Sum of all horizontal edge weights, `2α / (β - 1)²`.
    pub horizontal_sum: f64,
}

impl WeightModel {
    /// Weight of the edge between two adjacent states of the wedge `y >= |x|`.
    pub fn edge_weight(&self, a: GridState, b: GridState) -> Option<f64> {
        if !a.in_wedge() || !b.in_wedge() {
            return None;
        }
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        match (dx.abs(), dy.abs()) {
            (0, 1) => Some(self.beta.powi(a.y.min(b.y) as i32)),
            (1, 0) if a.y >= 1 => Some(self.alpha * self.beta.powi(a.y as i32 - 1)),
            _ => None,
        }
    }

    fn wedge_neighbors(a: GridState) -> impl Iterator<Item = GridState> {
        [(0, 1), (0, -1), (1, 0), (-1, 0)]
            .into_iter()
            .map(move |(dx, dy)| GridState::new(a.x + dx, a.y + dy))
            .filter(|b| b.in_wedge())
    }

    /// Total weight of the edges at `a`.
    pub fn vertex_weight(&self, a: GridState) -> f64 {
        Self::wedge_neighbors(a).filter_map(|b| self.edge_weight(a, b)).sum()
    }

    /// Transition probability of the walk driven by these weights.
    pub fn transition(&self, a: GridState, b: GridState) -> f64 {
        match self.edge_weight(a, b) {
            Some(w) => w / self.vertex_weight(a),
            None => 0.0,
        }
    }
}

pub fn grid_weight_model(params: &GameParams) -> Result<WeightModel, AnalyticsError> {
    validate(params)?;
    let (c, r, t) = (params.c, params.r, params.t());
    if c <= r + EQ_TOL {
        return Err(domain("edge weight sums", "they diverge unless c > r"));
    }
    let beta = (r + t / 4.0) / (c + t / 4.0);
    let alpha = (t / 4.0) / (c + t / 4.0);
    let gap = (beta - 1.0) * (beta - 1.0);
    Ok(WeightModel {
        beta,
        alpha,
        p_star: cs2_mixing(params)?,
        vertical_sum: (beta + 1.0) / gap,
        horizontal_sum: 2.0 * alpha / gap,
    })
}

/// Expected two-round change of the larger coordinate for the foolish cop
/// against RS from an axis state: `2r² + 2rt - 3ct/2 - 2c²`.
pub fn foolish_margin(params: &GameParams) -> Result<f64, AnalyticsError> {
    validate(params)?;
    let (c, r, t) = (params.c, params.r, params.t());
    Ok(2.0 * r * r + 2.0 * r * t - 1.5 * c * t - 2.0 * c * c)
}

fn check_tree_shape(quantity: &'static str, delta: u32, big_delta: u32) -> Result<(), AnalyticsError> {
    if delta < 2 {
        return Err(domain(quantity, format!("δ = {delta} must be at least 2")));
    }
    if big_delta < delta || big_delta < 3 {
        return Err(domain(quantity, format!("Δ = {big_delta} must be at least max(δ, 3)")));
    }
    Ok(())
}

fn check_tipsiness(quantity: &'static str, name: &str, t: f64) -> Result<(), AnalyticsError> {
    if !(0.0..=0.5 + EQ_TOL).contains(&t) {
        return Err(domain(quantity, format!("{name} = {t} is outside [0, 1/2]")));
    }
    Ok(())
}

/// Who wins on the δ-regular tree when the cop pursues and the robber flees.
pub fn regular_tree_regime(delta: u32, t_c: f64, t_r: f64) -> Result<RegimeVerdict, AnalyticsError> {
    if delta < 2 {
        return Err(domain("regular tree regime", format!("δ = {delta} must be at least 2")));
    }
    check_tipsiness("regular tree regime", "t_c", t_c)?;
    check_tipsiness("regular tree regime", "t_r", t_r)?;
    Ok(if t_r >= t_c * (delta - 1) as f64 - EQ_TOL {
        RegimeVerdict::new(Winner::CopAlmostSurely, "regular-tree-threshold")
    } else {
        RegimeVerdict::new(Winner::RobberPositiveProb, "regular-tree-threshold")
    })
}

/// δ / (4δ - 4): beyond this tipsiness a player drifts away from the base tree.
pub fn depth_limit(delta: u32) -> f64 {
    delta as f64 / (4.0 * delta as f64 - 4.0)
}

/// Δ / (4Δ - 6): beyond this cop tipsiness the cop drifts away on the base tree.
pub fn base_limit(big_delta: u32) -> f64 {
    big_delta as f64 / (4.0 * big_delta as f64 - 6.0)
}

/// Upper end of the cop tipsiness range, `min(δ/(4δ-4), Δ/(4Δ-6))`.
pub fn cop_box_limit(delta: u32, big_delta: u32) -> f64 {
    depth_limit(delta).min(base_limit(big_delta))
}

/// Expected number of rounds between consecutive base-tree moves of a player
/// with tipsiness `t` who returns to the base tree whenever sober.
pub fn mu(t: f64, delta: u32, big_delta: u32) -> Result<f64, AnalyticsError> {
    check_tree_shape("mean base-move gap", delta, big_delta)?;
    let limit = depth_limit(delta);
    if !(0.0..limit).contains(&t) {
        return Err(domain("mean base-move gap", format!("t = {t} is not in [0, {limit})")));
    }
    let a = (4.0 * delta as f64 - 4.0) / delta as f64;
    let k = a - 2.0 / big_delta as f64;
    Ok(2.0 * (1.0 - k * t) / ((1.0 - a * t) * (1.0 - 2.0 * t / big_delta as f64)))
}

fn ratio(x: f64, a: f64, b: f64, k: f64) -> f64 {
    (1.0 - a * x) * (1.0 - b * x) / (1.0 - k * x)
}

/// `F(x, y)`: rate of the robber's base-tree drift minus the cop's, up to a
/// factor 1/2. Positive means RSB escapes every cop, negative means CSB
/// catches RSB.
pub fn rsb_margin(t_r: f64, t_c: f64, delta: u32, big_delta: u32) -> Result<f64, AnalyticsError> {
    check_tree_shape("RSB margin", delta, big_delta)?;
    let x_max = depth_limit(delta);
    let y_max = cop_box_limit(delta, big_delta);
    if !(0.0..=x_max + EQ_TOL).contains(&t_r) {
        return Err(domain("RSB margin", format!("t_r = {t_r} is outside [0, {x_max}]")));
    }
    if !(0.0..=y_max + EQ_TOL).contains(&t_c) {
        return Err(domain("RSB margin", format!("t_c = {t_c} is outside [0, {y_max}]")));
    }
    Ok(margin_unchecked(t_r, t_c, delta, big_delta))
}

fn margin_unchecked(x: f64, y: f64, delta: u32, big_delta: u32) -> f64 {
    let dd = big_delta as f64;
    let a = (4.0 * delta as f64 - 4.0) / delta as f64;
    let k = a - 2.0 / dd;
    ratio(x, a, 6.0 / dd, k) - ratio(y, a, (4.0 * dd - 6.0) / dd, k)
}

/// The cop tipsiness `f(t_r)` at which the RSB margin vanishes, by bisection.
pub fn threshold_f(t_r: f64, delta: u32, big_delta: u32) -> Result<f64, AnalyticsError> {
    check_tree_shape("RSB threshold", delta, big_delta)?;
    if big_delta < 4 {
        return Err(AnalyticsError::Unsupported(format!(
            "the RSB threshold needs Δ >= 4, got Δ = {big_delta}"
        )));
    }
    let x_max = depth_limit(delta);
    if !(0.0..=x_max + EQ_TOL).contains(&t_r) {
        return Err(domain("RSB threshold", format!("t_r = {t_r} is outside [0, {x_max}]")));
    }
    let x = t_r.min(x_max);
    // the margin increases in t_c, from <= 0 at 0 to >= 0 at the box edge
    let (mut lo, mut hi) = (0.0, cop_box_limit(delta, big_delta));
    if margin_unchecked(x, lo, delta, big_delta) >= 0.0 {
        return Ok(lo);
    }
    if margin_unchecked(x, hi, delta, big_delta) <= 0.0 {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if margin_unchecked(x, mid, delta, big_delta) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Tipsiness `t_0` where the RSA line `t_c = t_r/(δ-1)` meets the RSB curve.
pub fn crossover_t0(delta: u32, big_delta: u32) -> Result<f64, AnalyticsError> {
    check_tree_shape("crossover", delta, big_delta)?;
    if big_delta < 4 {
        return Err(AnalyticsError::Unsupported(format!(
            "the crossover needs Δ >= 4, got Δ = {big_delta}"
        )));
    }
    if delta == 2 {
        return Ok(0.5);
    }
    if 2 * delta >= big_delta + 1 {
        return Ok(0.0);
    }
    let dd = big_delta as f64;
    let g = 1.0 / (delta as f64 - 1.0);
    let a = (4.0 * delta as f64 - 4.0) / delta as f64;
    let k = a - 2.0 / dd;
    // (1-ax)(1-bx)(1-kgx) = (1-agx)(1-egx)(1-kx), both sides cubics with
    // constant term 1; dividing the difference by x leaves a quadratic
    let sym = |u: f64, v: f64, w: f64| (u + v + w, u * v + u * w + v * w, u * v * w);
    let (p1, p2, p3) = sym(a, 6.0 / dd, k * g);
    let (q1, q2, q3) = sym(a * g, (4.0 * dd - 6.0) / dd * g, k);
    let (c0, c1, c2) = (-(p1 - q1), p2 - q2, -(p3 - q3));
    let x_max = depth_limit(delta);
    let inside = |x: f64| x > 0.0 && x <= x_max + EQ_TOL;
    let mut roots = Vec::new();
    if c2.abs() > 1e-15 {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // numerically stable pair of roots
            let qq = -0.5 * (c1 + c1.signum() * sq);
            if qq != 0.0 {
                roots.push(qq / c2);
                roots.push(c0 / qq);
            }
        }
    } else if c1.abs() > 1e-15 {
        roots.push(-c0 / c1);
    }
    let h = |x: f64| margin_unchecked(x, g * x, delta, big_delta);
    if let Some(root) = roots.into_iter().filter(|&x| inside(x)).find(|&x| h(x).abs() < 1e-9) {
        return Ok(root);
    }
    // fall back to bisection on the margin along the RSA line
    let (mut lo, mut hi) = (1e-9, x_max);
    let sign_lo = h(lo).signum();
    if sign_lo == h(hi).signum() {
        return Err(AnalyticsError::Unsupported("no crossover found in the tipsiness range".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid).signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeRegime {
    pub rsa: RegimeVerdict,
    pub rsb: RegimeVerdict,
}

/// Verdicts for the two robber strategies on X(Δ, δ).
pub fn tree_regime(t_r: f64, t_c: f64, delta: u32, big_delta: u32) -> Result<TreeRegime, AnalyticsError> {
    check_tree_shape("tree regime", delta, big_delta)?;
    check_tipsiness("tree regime", "t_r", t_r)?;
    check_tipsiness("tree regime", "t_c", t_c)?;
    use Winner::*;
    let v = RegimeVerdict::new;
    let depth = depth_limit(delta);
    let base = base_limit(big_delta);
    let line = t_r / (delta as f64 - 1.0);

    if t_c <= EQ_TOL {
        let cop = v(CopAlmostSurely, "cop-never-tipsy");
        return Ok(TreeRegime { rsa: cop.clone(), rsb: cop });
    }
    if t_r <= EQ_TOL {
        let robber = v(RobberPositiveProb, "robber-never-tipsy");
        return Ok(TreeRegime { rsa: robber.clone(), rsb: robber });
    }
    if t_c > depth + EQ_TOL || t_c > base + EQ_TOL {
        let robber = v(RobberPositiveProb, "cop-too-tipsy");
        return Ok(TreeRegime { rsa: robber.clone(), rsb: robber });
    }

    let rsa = if t_c > line + EQ_TOL {
        v(RobberPositiveProb, "rsa-threshold")
    } else if t_r < 0.5 - EQ_TOL {
        v(CopAlmostSurely, "rsa-threshold")
    } else {
        v(Undetermined, "robber-always-tipsy")
    };

    let rsb = if big_delta < 4 {
        v(Undetermined, "rsb-margin-needs-degree-4")
    } else if t_r > depth + EQ_TOL {
        if t_c <= line + EQ_TOL && t_r < 0.5 - EQ_TOL {
            v(CopAlmostSurely, "robber-too-tipsy-for-rsb")
        } else {
            v(Undetermined, "robber-too-tipsy-for-rsb")
        }
    } else {
        let corner = (t_r - depth).abs() <= EQ_TOL && (t_c - cop_box_limit(delta, big_delta)).abs() <= EQ_TOL;
        let margin = margin_unchecked(t_r.min(depth), t_c, delta, big_delta);
        if corner || margin.abs() <= EQ_TOL {
            v(Boundary, "rsb-margin")
        } else if margin > 0.0 {
            v(RobberPositiveProb, "rsb-margin")
        } else {
            v(CopAlmostSurely, "rsb-margin")
        }
    };
    Ok(TreeRegime { rsa, rsb })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{folded_step_distribution, GridStrategy};
    use proptest::prelude::*;

    fn grid(c: f64, r: f64, t: f64) -> GameParams {
        GameParams::grid_merged(c, r, t).unwrap()
    }

    #[test]
    fn walk_classes() {
        assert_eq!(gamblers_ruin_class(0.6).unwrap(), WalkClass::Transient);
        assert_eq!(gamblers_ruin_class(0.5).unwrap(), WalkClass::NullRecurrent);
        assert_eq!(gamblers_ruin_class(0.3).unwrap(), WalkClass::PositiveRecurrent);
        assert!((gamblers_ruin_mean_time(4, 0.3).unwrap() - 10.0).abs() < 1e-12);
        assert!(gamblers_ruin_mean_time(4, 0.5).is_err());
        assert!(gamblers_ruin_class(1.5).is_err());
    }

    #[test]
    fn hitting_moments_homogeneous() {
        let m = hitting_time_moments(&[], 0.25).unwrap();
        assert!((m.mean - 2.0).abs() < 1e-12);
        // variance of the first-passage time one level down: 4p(1-p)/(1-2p)^3
        assert!((m.variance - 4.0 * 0.25 * 0.75 / 0.125).abs() < 1e-12);
        let d = hitting_time_moments(&[], 0.0).unwrap();
        assert_eq!((d.mean, d.variance), (1.0, 0.0));
        assert!(hitting_time_moments(&[], 0.5).is_err());
        assert!(hitting_time_moments(&[1.0], 0.2).is_err());
    }

    #[test]
    fn hitting_moments_with_override_match_simulation() {
        use crate::spinner::RngStream;
        let exact = hitting_time_moments(&[0.4], 0.25).unwrap();
        let mut draws = RngStream::new(5, 0).draws();
        let n = 200_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..n {
            let (mut state, mut steps) = (1u64, 0u64);
            while state > 0 {
                let p = if state == 1 { 0.4 } else { 0.25 };
                state = if draws.uniform() < p { state + 1 } else { state - 1 };
                steps += 1;
            }
            sum += steps as f64;
            sumsq += (steps * steps) as f64;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!((mean / exact.mean - 1.0).abs() < 0.01, "{mean} vs {}", exact.mean);
        assert!((var / exact.variance - 1.0).abs() < 0.05, "{var} vs {}", exact.variance);
    }

    #[test]
    fn grid_regimes() {
        assert_eq!(grid_regime(&grid(0.2, 0.3, 0.5)).unwrap().winner, Winner::RobberPositiveProb);
        let cop = grid_regime(&grid(0.3, 0.2, 0.5)).unwrap();
        assert_eq!((cop.winner, cop.finite_expected_time), (Winner::CopAlmostSurely, Some(true)));
        let null = grid_regime(&grid(0.25, 0.25, 0.5)).unwrap();
        assert_eq!((null.winner, null.finite_expected_time), (Winner::CopAlmostSurely, Some(false)));
    }

    #[test]
    fn weight_model_values() {
        let w = grid_weight_model(&grid(0.3, 0.2, 0.5)).unwrap();
        assert!((w.beta - 0.325 / 0.425).abs() < 1e-15);
        assert!((w.p_star - 0.05 / 0.54).abs() < 1e-15);
        let sober = grid_weight_model(&grid(0.6, 0.4, 0.0)).unwrap();
        assert_eq!((sober.alpha, sober.p_star), (0.0, 0.0));
        assert!(grid_weight_model(&grid(0.25, 0.25, 0.5)).is_err());
    }

    #[test]
    fn weight_sums_match_partial_series() {
        for (c, r, t) in [(0.3, 0.2, 0.5), (0.5, 0.1, 0.4), (0.45, 0.3, 0.25)] {
            let w = grid_weight_model(&grid(c, r, t)).unwrap();
            assert!(w.beta <= 0.8);
            let vertical: f64 = (0..=200).map(|y| (2 * y + 1) as f64 * w.beta.powi(y)).sum();
            let horizontal: f64 = (1..=200).map(|y| 2.0 * y as f64 * w.alpha * w.beta.powi(y - 1)).sum();
            assert!((vertical - w.vertical_sum).abs() < 1e-9);
            assert!((horizontal - w.horizontal_sum).abs() < 1e-9);
        }
    }

    #[test]
    fn weights_reproduce_the_folded_walk() {
        let p = grid(0.3, 0.2, 0.5);
        let w = grid_weight_model(&p).unwrap();
        let cop = GridStrategy::Cs2 { p: w.p_star };
        for y in 1..8 {
            for x in -y..=y {
                let a = GridState::new(x, y);
                for (b, prob) in folded_step_distribution(&p, &cop, &GridStrategy::Rs, a).unwrap() {
                    let model = w.transition(a, b);
                    assert!((model - prob).abs() < 1e-12, "{a} -> {b}: {model} vs {prob}");
                }
            }
        }
        // the diagonal step toward the fold
        let (c, r, t) = (0.3, 0.2, 0.5);
        let diag = w.transition(GridState::new(3, 3), GridState::new(2, 3));
        assert!((diag - (w.p_star * c + t / 2.0)).abs() < 1e-12);
        assert!((diag - (t / 4.0) / (r + t / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn foolish_margin_cases() {
        let m = foolish_margin(&grid(0.25, 0.25, 0.5)).unwrap();
        assert!((m - 0.25 * 0.5 / 2.0).abs() < 1e-15);
        let sober = foolish_margin(&grid(0.6, 0.4, 0.0)).unwrap();
        assert!((sober - (2.0 * 0.16 - 2.0 * 0.36)).abs() < 1e-15);
        assert!(foolish_margin(&grid(0.26, 0.25, 0.49)).unwrap() > 0.0);
    }

    #[test]
    fn regular_tree_cases() {
        assert_eq!(regular_tree_regime(3, 0.1, 0.2).unwrap().winner, Winner::CopAlmostSurely);
        assert_eq!(regular_tree_regime(3, 0.1, 0.1).unwrap().winner, Winner::RobberPositiveProb);
        assert_eq!(regular_tree_regime(2, 0.2, 0.2).unwrap().winner, Winner::CopAlmostSurely);
        assert_eq!(regular_tree_regime(2, 0.2, 0.19).unwrap().winner, Winner::RobberPositiveProb);
    }

    #[test]
    fn mu_values() {
        assert_eq!(mu(0.0, 3, 7).unwrap(), 2.0);
        assert!((mu(0.1, 3, 7).unwrap() - 32.0 / 14.96).abs() < 1e-12);
        assert!(mu(0.375, 3, 7).is_err());
        let near = [0.3, 0.35, 0.37, 0.374, 0.3749].map(|t| mu(t, 3, 7).unwrap());
        assert!(near.windows(2).all(|w| w[1] > w[0]));
        assert!(near[4] > 100.0);
    }

    #[test]
    fn mu_matches_expanded_form() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let delta = rng.random_range(2..8u32);
            let big = rng.random_range(delta.max(3)..12);
            let t = rng.random_range(0.0..depth_limit(delta));
            let (d, dd) = (delta as f64, big as f64);
            let expanded = (2.0 * d * dd - (8.0 * d * dd - 4.0 * d - 8.0 * dd) * t) / ((d - 4.0 * (d - 1.0) * t) * (dd - 2.0 * t));
            let value = mu(t, delta, big).unwrap();
            assert!((value - expanded).abs() <= 1e-12 * value.max(1.0), "{value} vs {expanded}");
        }
    }

    #[test]
    fn margin_anchors() {
        for (delta, big) in [(2, 7), (3, 7), (4, 7), (3, 5), (5, 9)] {
            assert_eq!(rsb_margin(0.0, 0.0, delta, big).unwrap(), 0.0);
            let corner = rsb_margin(depth_limit(delta), cop_box_limit(delta, big), delta, big).unwrap();
            assert!(corner.abs() < 1e-12);
        }
        assert!(rsb_margin(0.6, 0.1, 2, 7).is_err());
        assert!(rsb_margin(0.1, 0.4, 2, 7).is_err());
        let f = threshold_f(0.3, 2, 7).unwrap();
        assert!(rsb_margin(0.3, 0.2, 2, 7).unwrap().signum() == (0.2 - f).signum());
    }

    fn radical_7_2(x: f64) -> f64 {
        (-21.0 + 24.0 * x + 18.0 * x * x
            + (441.0 - 2086.0 * x + 3285.0 * x * x - 1908.0 * x.powi(3) + 324.0 * x.powi(4)).sqrt())
            / (11.0 * (-7.0 + 12.0 * x))
    }

    fn radical_7_3(x: f64) -> f64 {
        3.0 * (-63.0 + 100.0 * x + 100.0 * x * x
            + (3969.0 - 25536.0 * x + 54072.0 * x * x - 41600.0 * x.powi(3) + 10000.0 * x.powi(4)).sqrt())
            / (44.0 * (-21.0 + 50.0 * x))
    }

    #[test]
    fn threshold_matches_plotted_curves() {
        for x in [0.1, 0.2, 0.3, 0.4] {
            assert!((threshold_f(x, 2, 7).unwrap() - radical_7_2(x)).abs() < 1e-9);
        }
        for x in [0.05, 0.1, 0.2, 0.3] {
            assert!((threshold_f(x, 3, 7).unwrap() - radical_7_3(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn threshold_endpoints_and_slope() {
        for (delta, big) in [(2, 7), (3, 7), (4, 7), (5, 7), (2, 4), (3, 9)] {
            assert_eq!(threshold_f(0.0, delta, big).unwrap(), 0.0);
            let end = threshold_f(depth_limit(delta), delta, big).unwrap();
            assert!((end - cop_box_limit(delta, big)).abs() < 1e-10);
            let h = 1e-5;
            let slope = threshold_f(h, delta, big).unwrap() / h;
            assert!((slope - 2.0 / (big as f64 - 1.0)).abs() < 1e-3);
        }
        assert!(threshold_f(0.1, 2, 3).is_err());
    }

    #[test]
    fn threshold_is_monotone_and_convex() {
        for (delta, big) in [(2, 7), (3, 7), (4, 7), (5, 7), (2, 5), (3, 4)] {
            let n = 100;
            let xs: Vec<f64> = (0..=n).map(|i| depth_limit(delta) * i as f64 / n as f64).collect();
            let fs: Vec<f64> = xs.iter().map(|&x| threshold_f(x, delta, big).unwrap()).collect();
            assert!(fs.windows(2).all(|w| w[1] >= w[0]));
            for w in fs.windows(3) {
                assert!(w[1] <= 0.5 * (w[0] + w[2]) + 1e-12);
            }
            for (&x, &f) in xs.iter().zip(&fs) {
                assert!(rsb_margin(x, f, delta, big).unwrap().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn crossover_values() {
        assert_eq!(crossover_t0(2, 7).unwrap(), 0.5);
        assert_eq!(crossover_t0(3, 5).unwrap(), 0.0);
        let t0 = crossover_t0(3, 7).unwrap();
        assert!(t0 > 0.0 && t0 < 0.375);
        assert!((threshold_f(t0, 3, 7).unwrap() - t0 / 2.0).abs() < 1e-10);
        assert!(crossover_t0(3, 3).is_err());
    }

    #[test]
    fn crossover_sign_patterns() {
        for big in 4..10u32 {
            for i in 1..50 {
                let x = 0.5 * i as f64 / 50.0;
                assert!(threshold_f(x, 2, big).unwrap() < x);
            }
        }
        for (delta, big) in [(3, 5), (3, 4), (4, 7), (5, 7)] {
            for i in 1..=50 {
                let x = depth_limit(delta) * i as f64 / 50.0;
                assert!(threshold_f(x, delta, big).unwrap() > x / (delta as f64 - 1.0));
            }
        }
    }

    #[test]
    fn tree_regime_cases() {
        let r = tree_regime(0.2, 0.0, 3, 7).unwrap();
        assert_eq!((r.rsa.winner, r.rsb.winner), (Winner::CopAlmostSurely, Winner::CopAlmostSurely));
        let r = tree_regime(0.0, 0.1, 3, 7).unwrap();
        assert_eq!((r.rsa.winner, r.rsb.winner), (Winner::RobberPositiveProb, Winner::RobberPositiveProb));
        let r = tree_regime(0.05, 0.04, 3, 7).unwrap();
        assert_eq!(r.rsa.winner, Winner::RobberPositiveProb);
        let f = threshold_f(0.05, 3, 7).unwrap();
        let expected = if 0.04 > f { Winner::RobberPositiveProb } else { Winner::CopAlmostSurely };
        assert_eq!(r.rsb.winner, expected);
        let r = tree_regime(0.2, 0.4, 3, 7).unwrap();
        assert_eq!(r.rsa.rationale, "cop-too-tipsy");
        let corner = tree_regime(0.375, 7.0 / 22.0, 3, 7).unwrap();
        assert_eq!(corner.rsb.winner, Winner::Boundary);
        let tipsy = tree_regime(0.45, 0.1, 3, 7).unwrap();
        assert_eq!(tipsy.rsb.winner, Winner::CopAlmostSurely);
        assert_eq!(tipsy.rsa.winner, Winner::CopAlmostSurely);
    }

    proptest! {
        #[test]
        fn margin_increases_in_cop_tipsiness(x in 0.0..0.375f64, y1 in 0.0..0.318f64, y2 in 0.0..0.318f64) {
            let (lo, hi) = if y1 < y2 { (y1, y2) } else { (y2, y1) };
            prop_assert!(rsb_margin(x, lo, 3, 7).unwrap() <= rsb_margin(x, hi, 3, 7).unwrap() + 1e-15);
        }

        #[test]
        fn gamblers_ruin_class_is_a_trichotomy(p in 0.0..=1.0f64) {
            let class = gamblers_ruin_class(p).unwrap();
            prop_assert_eq!(class == WalkClass::Transient, p > 0.5 + EQ_TOL);
        }
    }
}
