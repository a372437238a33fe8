use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pipeline stage an error is reported under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Extract,
    Train,
    Evaluate,
    Attribute,
    Report,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Extract => "extract",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Attribute => "attribute",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {msg}", path.display())]
    Config { path: PathBuf, msg: String },

    #[error("{what} not found: {}", path.display())]
    MissingPath {
        stage: Stage,
        what: &'static str,
        path: PathBuf,
    },

    #[error("{source}")]
    Core {
        stage: Stage,
        #[source]
        source: codeprobe::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        stage: Stage,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        stage: Stage,
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{msg}")]
    Invalid { stage: Stage, msg: String },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn stage(&self) -> Stage {
        match self {
            HarnessError::Config { .. } => Stage::Config,
            HarnessError::MissingPath { stage, .. }
            | HarnessError::Core { stage, .. }
            | HarnessError::Io { stage, .. }
            | HarnessError::Json { stage, .. }
            | HarnessError::Invalid { stage, .. } => *stage,
        }
    }

    pub(crate) fn config(path: &Path, msg: impl Into<String>) -> Self {
        HarnessError::Config {
            path: path.to_path_buf(),
            msg: msg.into(),
        }
    }

    pub(crate) fn invalid(stage: Stage, msg: impl Into<String>) -> Self {
        HarnessError::Invalid { stage, msg: msg.into() }
    }
}

/// Tags errors with the stage they happened in.
pub(crate) trait InStage<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> InStage<T> for codeprobe::Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|source| HarnessError::Core { stage, source })
    }
}

pub(crate) trait AtPath<T> {
    fn at(self, stage: Stage, path: &Path) -> Result<T>;
}

impl<T> AtPath<T> for std::io::Result<T> {
    fn at(self, stage: Stage, path: &Path) -> Result<T> {
        self.map_err(|source| HarnessError::Io {
            stage,
            path: path.to_path_buf(),
            source,
        })
    }
}

impl<T> AtPath<T> for serde_json::Result<T> {
    fn at(self, stage: Stage, path: &Path) -> Result<T> {
        self.map_err(|source| HarnessError::Json {
            stage,
            path: path.to_path_buf(),
            source,
        })
    }
}
