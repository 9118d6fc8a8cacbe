//! File formats and command implementations behind the `qswitch` binary.

pub mod commands;
pub mod output;
pub mod scenario;

pub use scenario::{Loaded, ScenarioFile};

use qswitch_core::design::Violation;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed scenario at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Schema(String),
    #[error("io: {0}")]
    Io(String),
    #[error("design: {0}")]
    Design(String),
    #[error("infeasible design: {0}")]
    Infeasible(Violation),
    #[error("simulation: {0}")]
    Simulation(String),
    #[error("trajectory diverged at t = {t} (|z| = {norm:e})")]
    Diverged { t: f64, norm: f64 },
    #[error("invariant monitors failed: {}", failing.join(", "))]
    MonitorFailed { failing: Vec<String> },
}

impl Error {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Schema(_) | Error::Io(_) | Error::Design(_) => 1,
            Error::Simulation(_) => 1,
            Error::Infeasible(_) => 2,
            Error::Diverged { .. } => 3,
            Error::MonitorFailed { .. } => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Schema(_) => "schema",
            Error::Io(_) => "io",
            Error::Design(_) => "design",
            Error::Infeasible(_) => "infeasible",
            Error::Simulation(_) => "simulation",
            Error::Diverged { .. } => "diverged",
            Error::MonitorFailed { .. } => "monitor",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "status": "error",
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let Error::Infeasible(violation) = self {
            v["violation"] = output::violation_json(violation);
        }
        v
    }
}

impl From<qswitch_core::DesignError> for Error {
    fn from(e: qswitch_core::DesignError) -> Self {
        match e {
            qswitch_core::DesignError::Infeasible(v) => Error::Infeasible(v),
            other => Error::Design(other.to_string()),
        }
    }
}
