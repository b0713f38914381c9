use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Shapes, mode lists or photon numbers are inconsistent.
    #[error("structural error: {0}")]
    Structure(String),

    #[error("heater fuse: drive of {volts} V reaches the fuse voltage {fuse_v} V")]
    Fuse { volts: f64, fuse_v: f64 },

    #[error("config syntax error at line {line}, column {column}: {message}")]
    ConfigSyntax {
        line: usize,
        column: usize,
        message: String,
    },

    /// Semantically invalid configuration; the message names the offending item.
    #[error("config error: {0}")]
    Config(String),

    #[error("no SFWM region: circuit has no source segment")]
    NoSource,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}
