use thiserror::Error;

use crate::spinner::ParamError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("the game is already over: cop and robber share a vertex")]
    AlreadyCaptured,
    #[error("strategy {strategy} cannot be played by the {side}")]
    WrongSide { strategy: String, side: &'static str },
    #[error("mixing probability {0} is outside [0, 1]")]
    BadMixing(f64),
    #[error("parameters are for {found} mode but a {expected} game was requested")]
    WrongMode { expected: &'static str, found: String },
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("invalid vertex address: {0}")]
    InvalidAddress(String),
}
