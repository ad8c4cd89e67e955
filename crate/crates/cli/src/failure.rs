//! Run failures, their exit codes and the JSON error report.

use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    /// Invalid flags, config file or unreadable input paths.
    Config,
    /// Malformed or degenerate input records.
    Data,
    /// The metric adapter was unreachable or broke protocol.
    Adapter,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Config => 2,
            FailureKind::Data => 3,
            FailureKind::Adapter => 4,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(kind: FailureKind, error: impl Into<anyhow::Error>) -> Failure {
        Failure {
            kind,
            error: error.into(),
        }
    }

    pub fn config(msg: impl fmt::Display) -> Failure {
        Failure::new(FailureKind::Config, anyhow::anyhow!("{msg}"))
    }

    pub fn data(msg: impl fmt::Display) -> Failure {
        Failure::new(FailureKind::Data, anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// One-line JSON report for stderr.
    pub fn report(&self) -> String {
        #[derive(Serialize)]
        struct Body {
            kind: FailureKind,
            exit_code: i32,
            message: String,
            causes: Vec<String>,
        }
        #[derive(Serialize)]
        struct Report {
            error: Body,
        }
        let report = Report {
            error: Body {
                kind: self.kind,
                exit_code: self.exit_code(),
                message: self.error.to_string(),
                causes: self.error.chain().skip(1).map(|c| c.to_string()).collect(),
            },
        };
        serde_json::to_string(&report).expect("report serializes")
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} error: {:#}", self.kind, self.error)
    }
}

/// Engine errors are classified by their root cause.
impl From<mbr_ot::Error> for Failure {
    fn from(e: mbr_ot::Error) -> Failure {
        let kind = if e.is_adapter() {
            FailureKind::Adapter
        } else {
            match e.root() {
                mbr_ot::Error::InvalidParams(_) | mbr_ot::Error::InvalidRange { .. } => FailureKind::Config,
                _ => FailureKind::Data,
            }
        };
        Failure::new(kind, e)
    }
}

/// Attaches a failure kind and a context line to any std error.
pub trait ResultExt<T> {
    fn or_config(self, context: impl fmt::Display) -> Result<T, Failure>;
    fn or_data(self, context: impl fmt::Display) -> Result<T, Failure>;
}

impl<T, E> ResultExt<T> for Result<T, E>
where
    E: std::error::Error + Send + Sync + 'static,
{
    fn or_config(self, context: impl fmt::Display) -> Result<T, Failure> {
        self.map_err(|e| Failure::new(FailureKind::Config, anyhow::Error::new(e).context(context.to_string())))
    }

    fn or_data(self, context: impl fmt::Display) -> Result<T, Failure> {
        self.map_err(|e| Failure::new(FailureKind::Data, anyhow::Error::new(e).context(context.to_string())))
    }
}
