use bellscope::corrgeom::CorrError;
use bellscope::lpcert::LpError;
use bellscope::optima::OptimaError;
use bellscope::qstrategy::StrategyError;
use bellscope::sdprelax::SdpError;
use std::process::ExitCode;
use thiserror::Error;

/// Failure of a subcommand, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input: exit 2.
    #[error("{0}")]
    Usage(String),
    /// Well-formed input that the domain rejects: exit 3.
    #[error("{0}")]
    Domain(String),
    /// A solver or certificate check did not succeed: exit 4.
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Solver(_) => 4,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Usage(format!("{}: {e}", path.display()))
    }
}

impl From<CorrError> for CliError {
    fn from(e: CorrError) -> Self {
        match e {
            CorrError::BadTolerance(_) | CorrError::UnknownLabel(_) => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<StrategyError> for CliError {
    fn from(e: StrategyError) -> Self {
        match e {
            StrategyError::UnknownName(_) => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<OptimaError> for CliError {
    fn from(e: OptimaError) -> Self {
        match e {
            OptimaError::ScanExceeded { .. } | OptimaError::DegenerateCubic(_) => CliError::Solver(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<LpError> for CliError {
    fn from(e: LpError) -> Self {
        match e {
            LpError::IterationLimit(_) | LpError::CertificateFailure { .. } => CliError::Solver(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<SdpError> for CliError {
    fn from(e: SdpError) -> Self {
        match e {
            SdpError::Solver { .. } | SdpError::Numerical(_) => CliError::Solver(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(format!("csv: {e}"))
    }
}
