use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate magnitude in power rotation (scale = {0:e})")]
    DegenerateScale(f64),

    #[error("current magnitude {mag:e} pu below floor {floor:e} pu")]
    CurrentFloor { mag: f64, floor: f64 },

    #[error("voltage magnitude {0:e} pu is degenerate")]
    DegenerateVoltage(f64),

    #[error("no equilibrium: i_ref^2 (Rg + jLg) equals p_ref + j q_ref (|difference| = {0:e})")]
    NoEquilibrium(f64),

    #[error("singular boundary-layer equilibrium: a^2 + (b+x)^2 = {0:e}")]
    SingularBoundaryLayer(f64),

    #[error("zero reference power")]
    ZeroReference,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trajectory has {0} samples, need at least 2")]
    ShortTrajectory(usize),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
