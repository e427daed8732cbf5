use thiserror::Error;

/// Pipeline stage, attached to errors surfaced from `build_network`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Expand,
    Pendants,
    Refine,
    Cover,
    Contract,
    Merge,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Expand => "expand",
            Stage::Pendants => "pendants",
            Stage::Refine => "refine",
            Stage::Cover => "cover",
            Stage::Contract => "contract",
            Stage::Merge => "merge",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// An exhaustive routine refused to run because the instance is above its size guard.
    #[error("guard refused: {0}")]
    Guard(String),

    #[error("randomized construction failed after {attempts} attempts (seed {seed}): {context}")]
    RandomizedFailure {
        seed: u64,
        attempts: usize,
        context: String,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    pub fn at(self, stage: Stage) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// The innermost error, with stage tags stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
