//! Command implementations, experiment harness, and report rendering for
//! the `wattrace` binary.

pub mod chart;
pub mod commands;
pub mod config;
pub mod experiment;
pub mod manifest;
pub mod pipeline;

use std::fmt;

/// Process exit taxonomy: 0 success, 1 usage/config, 2 data, 3 internal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Internal,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Usage, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Data, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Internal, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Internal => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(format!("i/o: {e}"))
    }
}

impl From<wattrace::trace::TraceError> for CliError {
    fn from(e: wattrace::trace::TraceError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<wattrace::sim::SimError> for CliError {
    fn from(e: wattrace::sim::SimError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<wattrace::segment::SegmentError> for CliError {
    fn from(e: wattrace::segment::SegmentError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<wattrace::preprocess::PreprocessError> for CliError {
    fn from(e: wattrace::preprocess::PreprocessError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<wattrace::regress::RegressError> for CliError {
    fn from(e: wattrace::regress::RegressError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<wattrace::attribution::AttributionError> for CliError {
    fn from(e: wattrace::attribution::AttributionError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<wattrace::inference::InferenceError> for CliError {
    fn from(e: wattrace::inference::InferenceError) -> Self {
        CliError::data(e.to_string())
    }
}
