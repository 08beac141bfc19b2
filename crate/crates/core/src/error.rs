use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("malformed scenario document: {0}")]
    Parse(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The clone would need more than its capacity limit to meet the cloud deadline.
    #[error("cloud side infeasible for UE {ue}: needs {required:.6e} cycles/s, limit {limit:.6e}")]
    CloudInfeasible {
        ue: usize,
        required: f64,
        limit: f64,
    },

    /// Executing at full clone capacity already exhausts the end-to-end deadline.
    #[error("deadline infeasible for UE {ue}: {cloud_time:.6e} s of execution at full capacity vs deadline {deadline:.6e} s")]
    DeadlineInfeasible {
        ue: usize,
        cloud_time: f64,
        deadline: f64,
    },

    #[error("rate floors infeasible at iteration {iteration}{}", offending_ue(*ue))]
    RanInfeasible { ue: Option<usize>, iteration: usize },

    #[error("fronthaul of RRH {rrh} cannot carry the rate floors of its cluster ({demand:.6e} > {limit:.6e} bit/s)")]
    FronthaulInfeasible { rrh: usize, demand: f64, limit: f64 },

    #[error("conic solve failed at iteration {iteration}: {status}")]
    Solver { iteration: usize, status: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn offending_ue(ue: Option<usize>) -> String {
    match ue {
        Some(i) => format!(" (floor of UE {i} cannot be met alone)"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Short machine-readable tag used in result records.
    pub fn status_tag(&self) -> &'static str {
        match self {
            Error::CloudInfeasible { .. } => "infeasible-cloud",
            Error::DeadlineInfeasible { .. } => "infeasible-deadline",
            Error::RanInfeasible { .. } => "infeasible-ran",
            Error::FronthaulInfeasible { .. } => "infeasible-fronthaul",
            Error::Solver { .. } => "solver-failure",
            Error::Config { .. } | Error::Parse(_) => "config-error",
            Error::Domain(_) | Error::Dimension(_) => "domain-error",
            Error::Io(_) => "io-error",
        }
    }
}
