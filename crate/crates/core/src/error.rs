use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors shared by the solver modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("material `{0}` not found")]
    MaterialNotFound(String),

    #[error("material `{name}` has no dielectric model (it is a conductor)")]
    NotDielectric { name: String },

    #[error("frequency {f_ghz} GHz outside the model validity range [{lo}, {hi}] GHz")]
    FrequencyOutOfRange { f_ghz: f64, lo: f64, hi: f64 },

    #[error("incidence angle {0}° must lie in [0, 90)")]
    InvalidAngle(f64),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("FDTD instability at step {step}: field norm {norm:.3e} (courant factor {courant}); reduce the CFL safety factor")]
    FdtdUnstable { step: usize, norm: f64, courant: f64 },

    #[error("FDTD run did not decay below -80 dB of peak within {0} steps")]
    FdtdNotDecayed(usize),

    #[error("frequency grids differ ({0}); enable interpolation to normalise across grids")]
    GridMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
