use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),

    #[error("no connected placement found after {attempts} attempts ({devices} devices, radius {radius})")]
    Disconnected {
        attempts: usize,
        devices: usize,
        radius: f64,
    },

    #[error("cannot route device {0} to itself")]
    SelfRoute(usize),

    #[error("no route from device {src} to device {dst}")]
    NoRoute { src: usize, dst: usize },

    #[error("unknown device {0}")]
    UnknownDevice(usize),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("order graph contains a cycle ({processed} of {total} vertices ordered)")]
    Cycle { processed: usize, total: usize },

    #[error("unknown scheduler `{0}`")]
    UnknownScheduler(String),

    #[error("sweep failed at {axis}={value}, iteration {iteration}: {source}")]
    Sweep {
        axis: String,
        value: f64,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid sweep spec: {0}")]
    InvalidSweep(String),

    #[error("cannot compare results: {0}")]
    Compare(String),

    #[error("unsupported {kind} format version {found} (expected {expected})")]
    FormatVersion {
        kind: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("expected a {expected} file, found `{found}`")]
    FileKind { expected: &'static str, found: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
