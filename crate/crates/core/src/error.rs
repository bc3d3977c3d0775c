use std::fmt;

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// A CSV or JSONL record could not be parsed.
    Parse { line: u64, msg: String },
    /// Invalid configuration (slot grid, profile weights, ...).
    Config(String),
    /// More EVs connected than the fleet has stations.
    Capacity { connected: u32, n_max: u32 },
    /// A session that cannot complete before departure reached the binner.
    InfeasibleSession { charge_slots: u32, depart_slots: u32 },
    /// A caller-supplied argument violates an operation's contract.
    InvalidArgument(String),
    /// The decision tree exceeded the caller's node budget.
    NodeBudget { limit: u64 },
    /// The function approximator produced a non-finite loss.
    RegressorDiverged { iteration: u32, loss: f64 },
    /// A persisted tuple failed its cost-recomputation check on load.
    CorruptRecord { line: u64, msg: String },
    /// An operation that needs data received none.
    EmptyInput(String),
    Io(std::io::Error),
    Json(serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { line, msg } => write!(f, "parse error at line {line}: {msg}"),
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Capacity { connected, n_max } => {
                write!(f, "{connected} EVs connected but only {n_max} stations")
            }
            Error::InfeasibleSession {
                charge_slots,
                depart_slots,
            } => write!(
                f,
                "infeasible session: needs {charge_slots} charge slots but departs in {depart_slots}"
            ),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NodeBudget { limit } => {
                write!(f, "decision tree exceeded the node budget of {limit}")
            }
            Error::RegressorDiverged { iteration, loss } => {
                write!(f, "regressor diverged at iteration {iteration} (loss {loss})")
            }
            Error::CorruptRecord { line, msg } => {
                write!(f, "corrupt record at line {line}: {msg}")
            }
            Error::EmptyInput(msg) => write!(f, "empty input: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Json(e) => write!(f, "json error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            Error::Json(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}
