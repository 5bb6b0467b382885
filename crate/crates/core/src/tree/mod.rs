//! The game on the trees X(Δ, δ).

mod address;
mod play;

pub use address::{distance, neighbors, project_to_base, TreeGameState, TreeParams, TreeVertex};
pub use play::{
    run_tree_episode, sober_move_tree, tipsy_move_tree, BaseMoveEvent, TreeEpisode, TreeEpisodeStats,
    TreeStrategy,
};
