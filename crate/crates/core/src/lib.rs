//! Simulation and analysis of the tipsy cop and robber game on Z² and on the
//! trees X(Δ, δ).

pub mod analytics;
pub mod engine;
pub mod episode;
pub mod error;
pub mod grid;
pub mod oracle;
pub mod spinner;
pub mod tree;

pub use episode::EpisodeReport;
pub use error::GameError;
pub use grid::{GridMove, GridState, GridStepDistribution, GridStrategy, Side};
pub use spinner::{GameParams, Mode, ParamError, RngStream, SpinnerOutcome};
pub use tree::{TreeGameState, TreeParams, TreeStrategy, TreeVertex};
