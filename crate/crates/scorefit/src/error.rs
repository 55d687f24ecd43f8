use std::path::PathBuf;

/// Crate-wide error type.
///
/// `exit_code` groups errors into the CLI's contract: 1 for usage problems,
/// 2 for data problems, 3 for numerical failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{context}: expected {expected} entries, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("score tensor has no votes")]
    EmptyTensor,

    #[error("subject {index} has no votes")]
    VotelessSubject { index: usize },

    #[error("stimulus {index} has no votes")]
    VotelessStimulus { index: usize },

    #[error(
        "non-finite score for subject `{subject}`, stimulus `{stimulus}`, repetition {repetition}"
    )]
    NonFiniteScore {
        subject: String,
        stimulus: String,
        repetition: usize,
    },

    #[error(
        "duplicate vote for subject `{subject}`, stimulus `{stimulus}`, repetition {repetition}"
    )]
    DuplicateVote {
        subject: String,
        stimulus: String,
        repetition: usize,
    },

    #[error("subject {subject} has inconsistency {upsilon} but votes; a strictly positive value is required")]
    DegenerateVariance { subject: usize, upsilon: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("every subject was rejected; nothing left to fit")]
    AllSubjectsRejected,

    #[error("{what} has zero variance; correlation is undefined")]
    ZeroVariance { what: &'static str },

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("{path}: line {line}: {message}")]
    DatasetParse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed report: {0}")]
    ReportParse(String),

    #[error("reports are not comparable: {0}")]
    ReportMismatch(String),
}

impl Error {
    /// Exit code for the CLI: 1 usage, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 1,
            Error::DimensionMismatch { .. }
            | Error::EmptyTensor
            | Error::VotelessSubject { .. }
            | Error::VotelessStimulus { .. }
            | Error::NonFiniteScore { .. }
            | Error::DuplicateVote { .. }
            | Error::DatasetParse { .. }
            | Error::Io { .. }
            | Error::ReportParse(_)
            | Error::ReportMismatch(_) => 2,
            Error::DegenerateVariance { .. }
            | Error::AllSubjectsRejected
            | Error::ZeroVariance { .. }
            | Error::Domain(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
