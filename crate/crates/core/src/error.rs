use thiserror::Error;

/// Errors raised by bodies, maps, tables, dynamics and experiments.
///
/// The `Display` form starts with a stable kebab-case tag so that command-line
/// diagnostics can be matched by scripts.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid-dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid-parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid-input: {0}")]
    InvalidInput(String),

    #[error("degenerate-direction: zero vector has no direction")]
    DegenerateDirection,

    #[error("not-unit-momentum: dual gauge is {dual_gauge}, expected 1")]
    NotUnitMomentum { dual_gauge: f64 },

    #[error("numeric-failure: {what} (residual {residual:e})")]
    NumericFailure { what: String, residual: f64 },

    #[error("outside-chart: projective denominator {denominator} is not positive")]
    OutsideChart { denominator: f64 },

    #[error("degenerate-image: validity margin {margin} is not positive")]
    DegenerateImage { margin: f64 },

    #[error("ray-escapes: no wall hit within the bounding radius")]
    RayEscapes,

    #[error("singular-surface: level gradient norm {norm:e} is too small")]
    SingularSurface { norm: f64 },

    #[error("grazing-incidence: |n(u)| = {margin:e} is below the grazing tolerance")]
    GrazingIncidence { margin: f64 },

    #[error("ambiguous-oracle: competing minima {first} and {second}")]
    AmbiguousOracle { first: f64, second: f64 },

    #[error("fit-failure: {0}")]
    FitFailure(String),

    #[error("not-an-ellipse: eccentricity {eccentricity} is not below 1")]
    NotAnEllipse { eccentricity: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn numeric_failure(what: impl Into<String>, residual: f64) -> Error {
    Error::NumericFailure {
        what: what.into(),
        residual,
    }
}
