use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong in the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("delta-midpoint barrier has no pointwise value; use the jump rule")]
    NoPointwiseValue,

    #[error("invalid barrier table: {0}")]
    InvalidTable(&'static str),

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: &'static str, reason: &'static str },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: &'static str },

    #[error("degenerate base: |{element}| = {value:e} is below {threshold:e}")]
    DegenerateBase { element: &'static str, value: f64, threshold: f64 },

    #[error("cos(phi) = {cos_phi:e} is near zero (lambda near (k+1/2)^2); use j_factor's L'Hopital branch")]
    NearDegenerate { cos_phi: f64 },

    #[error("generalized small-q radicand is negative ({value:e})")]
    NegativeRadicand { value: f64 },

    #[error("singular map: |g| = {g:e}")]
    SingularMap { g: f64 },

    #[error("matrix is not elliptic: |h| = {h}")]
    NotElliptic { h: f64 },

    #[error("product overflowed at cycle {cycle}; lower renorm_every")]
    Overflow { cycle: u64 },

    #[error("cycle {cycle}: lambda + ell = {value} is not positive")]
    NonPositiveDraw { cycle: u64, value: f64 },

    #[error("noise grid with {path} intervals does not divide the base grid of {base} intervals")]
    GridMismatch { path: usize, base: usize },

    #[error("degenerate moments: I1*J2 - I2*J1 = {det:e}")]
    DegenerateMoments { det: f64 },

    #[error("additive noise has no transfer matrix; use the equivalence route")]
    UnsupportedForm,

    #[error("determinant drift {drift:e} exceeds tolerance")]
    Accuracy { drift: f64 },

    #[error("Omega_y^2 is singular at the origin")]
    OriginSingularity,

    #[error("invalid orbit trace: {0}")]
    InvalidTrace(&'static str),

    #[error("orbit trace has {turning_points} turning point(s); need at least 2")]
    InsufficientTrace { turning_points: usize },
}
