use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    Invalid { what: String, reason: String },

    #[error("workflow `{workflow}` contains a cycle through edge {from} -> {to}")]
    Cycle {
        workflow: String,
        from: String,
        to: String,
    },

    #[error("workflow `{workflow}`: edge {from} -> {to} references unknown task `{missing}`")]
    DanglingEdge {
        workflow: String,
        from: String,
        to: String,
        missing: String,
    },

    #[error("need at least 2 enabled nodes to profile, got {0}")]
    TooFewNodes(usize),

    #[error("empty k range [{lo}, {hi}]")]
    EmptyKRange { lo: usize, hi: usize },

    #[error("no traces recorded for workflow `{0}`")]
    NoTraces(String),

    #[error("label arity mismatch: group has {group} features, task has {task}")]
    ArityMismatch { group: usize, task: usize },

    #[error("deadlock at t={time}: instance `{instance}` {reason}")]
    Deadlock {
        instance: String,
        time: f64,
        reason: String,
    },

    #[error("over-commit on node `{node}`: {reason}")]
    OverCommit { node: String, reason: String },

    #[error("cannot parse benchmark output: {0}")]
    BenchParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn invalid(what: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what: what.into(),
            reason: reason.into(),
        }
    }
}
