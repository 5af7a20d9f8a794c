use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A neuron state blew up to NaN or infinity. Usually means a parameter
    /// or input current is out of any sensible range.
    #[error("simulation fault: non-finite state in population `{population}` neuron {neuron} at t={t_ms} ms")]
    NonFinite {
        population: String,
        neuron: usize,
        t_ms: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what} = {value} is outside the configured range [{min}, {max}]")]
    OutOfRange {
        what: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    #[error("target outside the reachable workspace: {0}")]
    Unreachable(String),

    #[error("no records to compute metrics from")]
    EmptyRecords,

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
