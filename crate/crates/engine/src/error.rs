use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("grid dimensions {width}x{height} outside 1..={max}")]
    DimensionOutOfRange { width: usize, height: usize, max: usize },

    #[error("parameter `{name}` = {value} outside {expected}")]
    ParameterOutOfRange {
        name: &'static str,
        value: String,
        expected: String,
    },

    #[error("maze dimensions must be odd and >= 3, got {width}x{height}")]
    EvenDimension { width: usize, height: usize },

    #[error("grid dimensions differ: {expected} vs {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid artifact: {0}")]
    InvalidArtifact(String),
}

impl EngineError {
    pub(crate) fn param(name: &'static str, value: impl ToString, expected: impl Into<String>) -> Self {
        EngineError::ParameterOutOfRange {
            name,
            value: value.to_string(),
            expected: expected.into(),
        }
    }
}
