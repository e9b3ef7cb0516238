use primal_svm::corpus::CorpusError;
use primal_svm::eval::EvalError;
use primal_svm::optim::TrainError;
use primal_svm::svm::{ModelFileError, SvmError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Train(String),
    /// The reader closed stdout; not reported.
    #[error("broken pipe")]
    BrokenPipe,
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Train(_) => 3,
            CliError::BrokenPipe => 0,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl CliError {
    pub fn model(path: &std::path::Path, e: ModelFileError) -> Self {
        match e {
            ModelFileError::Io(io) => CliError::io(path, io),
            other => CliError::Data(format!("{}: {other}", path.display())),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::InvalidConfig(_) | TrainError::SubsetTooLarge { .. } => {
                CliError::Usage(e.to_string())
            }
            TrainError::BadLabel(_) | TrainError::BadFeature { .. } | TrainError::EmptyData => {
                CliError::Data(e.to_string())
            }
            TrainError::TooLarge { .. } => {
                CliError::Train(format!("{e}; pass --force to train anyway"))
            }
            _ => CliError::Train(e.to_string()),
        }
    }
}

impl From<SvmError> for CliError {
    fn from(e: SvmError) -> Self {
        match e {
            SvmError::Train(t) => t.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Corpus(c) => c.into(),
            EvalError::Train(t) => t.into(),
            EvalError::Svm(s) => s.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}
