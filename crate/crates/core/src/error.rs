use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit reports. Each variant carries a stable
/// machine-readable kind (see [`Error::kind`]) used in CLI error records.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid range: r_max = {r_max} must exceed r0 = {r0} > 0")]
    InvalidRange { r0: f64, r_max: f64 },
    #[error("grid too coarse: {count} nodes, need at least {min}")]
    TooCoarse { count: usize, min: usize },
    #[error("degenerate metric at r = {r}: {detail}")]
    DegenerateMetric { r: f64, detail: String },
    #[error("conformal factor must be positive, found {value} at r = {r}")]
    NonpositiveConformalFactor { r: f64, value: f64 },
    #[error("radius {r} lies outside the grid [{r0}, {r_max}]")]
    OutOfGrid { r: f64, r0: f64, r_max: f64 },
    #[error("invalid parameter {name}: {detail}")]
    InvalidParameter { name: &'static str, detail: String },
    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("need at least {need} radii, got {got}")]
    InsufficientRadii { need: usize, got: usize },
    #[error("extrapolation does not converge: {detail}")]
    NonConvergent { detail: String },
    #[error("zero vector has no normal form")]
    ZeroVector,
    #[error("boost angle {gamma} is degenerate (sin = 0)")]
    DegenerateAngle { gamma: f64 },
    #[error("constant barriers 1 +- {tau} fail at r = {r}: {detail}")]
    BarrierViolation { tau: f64, r: f64, detail: String },
    #[error("region distance is zero ({which})")]
    ZeroDistance { which: &'static str },
    #[error("shield does not fit: blow-up distance {blowup} exceeds available depth {depth}")]
    ShieldDoesNotFit { blowup: f64, depth: f64 },
    #[error("kappa = {kappa} outside (0, {limit}); the largeness certificate applies directly")]
    KappaOutOfRange { kappa: f64, limit: f64 },
    #[error("not applicable: {detail}")]
    NotApplicable { detail: String },
    #[error("regions not nested: need r_U0 < r_U1 < r_U2, got {r_u0}, {r_u1}, {r_u2}")]
    RegionNesting { r_u0: f64, r_u1: f64, r_u2: f64 },
    #[error("unsupported: {detail}")]
    Unsupported { detail: String },
    #[error("dimension n = {n} not allowed here (need n >= {min})")]
    Dimension { n: usize, min: usize },
    #[error("i/o: {0}")]
    Io(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidRange { .. } => "invalid-range",
            Error::TooCoarse { .. } => "too-coarse",
            Error::DegenerateMetric { .. } => "degenerate-metric",
            Error::NonpositiveConformalFactor { .. } => "nonpositive-conformal-factor",
            Error::OutOfGrid { .. } => "out-of-grid",
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::IndexOutOfRange { .. } => "index-out-of-range",
            Error::InsufficientRadii { .. } => "insufficient-radii",
            Error::NonConvergent { .. } => "non-convergent",
            Error::ZeroVector => "zero-vector",
            Error::DegenerateAngle { .. } => "degenerate-angle",
            Error::BarrierViolation { .. } => "barrier-violation",
            Error::ZeroDistance { .. } => "zero-distance",
            Error::ShieldDoesNotFit { .. } => "shield-does-not-fit",
            Error::KappaOutOfRange { .. } => "kappa-out-of-range",
            Error::NotApplicable { .. } => "not-applicable",
            Error::RegionNesting { .. } => "region-nesting",
            Error::Unsupported { .. } => "unsupported",
            Error::Dimension { .. } => "dimension",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }

    /// Errors caused by a numerical method failing rather than by bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::DegenerateMetric { .. }
                | Error::NonpositiveConformalFactor { .. }
                | Error::NonConvergent { .. }
                | Error::BarrierViolation { .. }
                | Error::ShieldDoesNotFit { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
