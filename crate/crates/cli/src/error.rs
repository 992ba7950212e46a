use serde::Serialize;
use thiserror::Error;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExitCode {
    Ok = 0,
    Config = 2,
    Io = 3,
    Numeric = 4,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Input {
        path: String,
        #[source]
        source: ipcw::Error,
    },

    #[error("{path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] ipcw::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::Config,
            CliError::Input { .. } | CliError::Output { .. } => ExitCode::Io,
            CliError::Core(e) => core_exit_code(e),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            ExitCode::Config => "config",
            ExitCode::Io => "io",
            ExitCode::Numeric => "numeric",
            ExitCode::Ok => "ok",
        }
    }

    /// Machine-readable error report.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code() as i32,
        })
        .to_string()
    }
}

fn core_exit_code(e: &ipcw::Error) -> ExitCode {
    use ipcw::Error as E;
    match e {
        E::Io(_) | E::Parse { .. } | E::InvalidDataset(_) => ExitCode::Io,
        E::DimensionMismatch { .. } | E::InvalidParameter(_) => ExitCode::Config,
        E::EmptyDataset
        | E::EmptyWindow { .. }
        | E::DegenerateDenominator { .. }
        | E::ZeroDensity(_)
        | E::AllMissing => ExitCode::Numeric,
    }
}
