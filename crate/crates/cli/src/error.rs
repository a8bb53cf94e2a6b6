use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing input {what}: {}", path.display())]
    MissingInput { what: String, path: PathBuf },
    #[error("nothing to report in {}", .0.display())]
    NothingToReport(PathBuf),
    #[error("output directory {} is locked by another run (remove {} if stale)", dir.display(), lock.display())]
    Locked { dir: PathBuf, lock: PathBuf },
    #[error("{0}")]
    Runtime(String),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::MissingInput { .. } | CliError::NothingToReport(_) => EXIT_VALIDATION,
            CliError::Locked { .. } | CliError::Runtime(_) | CliError::Io { .. } => EXIT_RUNTIME,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

/// Library errors surface as runtime failures.
macro_rules! runtime_from {
    ($($t:ty),* $(,)?) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Runtime(e.to_string())
            }
        })*
    };
}

runtime_from!(
    earnings_distill::corpus::CorpusError,
    earnings_distill::teacher::TeacherError,
    earnings_distill::topics::TopicError,
    earnings_distill::embedding::EmbeddingError,
    earnings_distill::nn::NnError,
    earnings_distill::distill::DistillError,
    earnings_distill::features::FeatureError,
    earnings_distill::analytics::AnalyticsError,
    serde_json::Error,
    csv::Error,
);
