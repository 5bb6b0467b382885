use serde::{Deserialize, Serialize};

/// Outcome of one simulated game.
///
/// `capture_time` is the number of rounds played when the pieces met. An
/// uncaptured episode is censored at the horizon: `steps_run == horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub captured: bool,
    pub capture_time: Option<u64>,
    pub steps_run: u64,
    pub final_distance: u64,
}

impl EpisodeReport {
    pub(crate) fn captured_at(step: u64) -> Self {
        Self {
            captured: true,
            capture_time: Some(step),
            steps_run: step,
            final_distance: 0,
        }
    }

    pub(crate) fn censored(horizon: u64, final_distance: u64) -> Self {
        Self {
            captured: false,
            capture_time: None,
            steps_run: horizon,
            final_distance,
        }
    }

    /// Whether capture happened within the first `horizon` rounds.
    pub fn captured_by(&self, horizon: u64) -> bool {
        matches!(self.capture_time, Some(t) if t <= horizon)
    }
}
