use std::fmt;

use thiserror::Error;

/// Pipeline stage an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Prepare,
    TrainBase,
    Mitigate,
    Bench,
    Report,
    Ablate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Prepare => "prepare",
            Stage::TrainBase => "train-base",
            Stage::Mitigate => "mitigate",
            Stage::Bench => "bench",
            Stage::Report => "report",
            Stage::Ablate => "ablate",
        })
    }
}

/// Every error names the stage and the config key (or artifact) involved.
#[derive(Debug, Error)]
#[error("{stage} stage failed [{key}]: {message}")]
pub struct CliError {
    pub stage: Stage,
    pub key: String,
    pub message: String,
}

impl CliError {
    pub fn new(stage: Stage, key: impl Into<String>, message: impl fmt::Display) -> Self {
        Self { stage, key: key.into(), message: message.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches stage and key to any displayable error.
pub trait Context<T> {
    fn at(self, stage: Stage, key: &str) -> CliResult<T>;
}

impl<T, E: fmt::Display> Context<T> for Result<T, E> {
    fn at(self, stage: Stage, key: &str) -> CliResult<T> {
        self.map_err(|e| CliError::new(stage, key, e))
    }
}
