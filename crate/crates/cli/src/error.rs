use std::fmt;

use metacost::data::{DataError, SynthError};
use metacost::deep::DeepError;
use metacost::metrics::MetricError;
use metacost::models::ModelError;
use metacost::quasiopt::QuasiOptError;
use metacost::sensitivity::SamplingError;

/// Command failure, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments (exit 1).
    Config(String),
    /// Dataset invariant violations, one line each (exit 1).
    Invalid(Vec<String>),
    /// Unreadable input or unwritable output (exit 2).
    Io(String),
    /// Numerical failure during evaluation or training (exit 3).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Invalid(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Invalid(lines) => {
                writeln!(f, "dataset failed validation ({} violations):", lines.len())?;
                for l in lines {
                    writeln!(f, "  {l}")?;
                }
                Ok(())
            }
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Invalid(v) => CliError::Invalid(v.iter().map(|x| x.to_string()).collect()),
            DataError::Empty => CliError::Invalid(vec![e.to_string()]),
            DataError::Io { .. } | DataError::Manifest { .. } => CliError::Io(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::UnknownModel(_) | ModelError::Arity { .. } => CliError::Config(e.to_string()),
            ModelError::Pole { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<SamplingError> for CliError {
    fn from(e: SamplingError) -> Self {
        match e {
            SamplingError::Model(m) => m.into(),
            SamplingError::Range { .. } | SamplingError::RangeCount { .. } | SamplingError::EmptyBehavioural => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<QuasiOptError> for CliError {
    fn from(e: QuasiOptError) -> Self {
        match e {
            QuasiOptError::Model(m) => m.into(),
            QuasiOptError::TooFewSubjects(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<DeepError> for CliError {
    fn from(e: DeepError) -> Self {
        match e {
            DeepError::Spec(_) | DeepError::FeatureSet(_) | DeepError::TooFewSubjects(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidSpec(_) => CliError::Config(e.to_string()),
            SynthError::Model(m) => m.into(),
        }
    }
}
