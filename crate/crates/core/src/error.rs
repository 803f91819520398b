use thiserror::Error;

/// Every failure the library can report.
///
/// Variants are grouped by the kind of problem they signal; [`Error::code`]
/// gives a stable machine-readable name and [`Error::exit_code`] maps the
/// variant onto the CLI's exit-code contract.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix with |trace| = {trace} is not hyperbolic")]
    NotHyperbolic { trace: f64 },

    #[error("cutoff L_max = {l_max} outside the supported range (0, {max}]")]
    CutoffOutOfRange { l_max: f64, max: f64 },

    #[error("cutoff L_max = {l_max} needs about {projected:.3e} group elements, budget is {budget}")]
    CutoffTooLarge { l_max: f64, projected: f64, budget: usize },

    #[error("relator residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    RelatorViolation { residual: f64, tol: f64 },

    #[error("singular or ill-conditioned matrix: {0}")]
    SingularImage(String),

    #[error("argument {re} + {im}i lies outside the strip |Im| <= {bound}")]
    ArgumentOutOfStrip { re: f64, im: f64, bound: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("length spectrum only known up to {have}, need {need}")]
    IncompleteLengthSpectrum { have: f64, need: f64 },

    #[error("mesh quality check failed: {0}")]
    MeshQualityFailure(String),

    #[error("corner cycle of the gluing deviates from the identity by {deviation:.3e}")]
    ConstraintCycleInconsistent { deviation: f64 },

    #[error("eigensolver did not converge: {0}")]
    SolverNotConverged(String),

    #[error("shift {re} + {im}i is too close to an eigenvalue")]
    ShiftTooCloseToEigenvalue { re: f64, im: f64 },

    #[error("spectral sum truncation not justified: tail {tail:.3e} vs partial sum {partial:.3e}")]
    TruncationNotJustified { tail: f64, partial: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("cache rejected: {0}")]
    StaleCache(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotHyperbolic { .. } => "NotHyperbolic",
            Error::CutoffOutOfRange { .. } => "CutoffOutOfRange",
            Error::CutoffTooLarge { .. } => "CutoffTooLarge",
            Error::RelatorViolation { .. } => "RelatorViolation",
            Error::SingularImage(_) => "SingularImage",
            Error::ArgumentOutOfStrip { .. } => "ArgumentOutOfStrip",
            Error::QuadratureNotConverged(_) => "QuadratureNotConverged",
            Error::IncompleteLengthSpectrum { .. } => "IncompleteLengthSpectrum",
            Error::MeshQualityFailure(_) => "MeshQualityFailure",
            Error::ConstraintCycleInconsistent { .. } => "ConstraintCycleInconsistent",
            Error::SolverNotConverged(_) => "SolverNotConverged",
            Error::ShiftTooCloseToEigenvalue { .. } => "ShiftTooCloseToEigenvalue",
            Error::TruncationNotJustified { .. } => "TruncationNotJustified",
            Error::Invalid(_) => "Invalid",
            Error::StaleCache(_) => "StaleCache",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }

    /// 2 for validation problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotHyperbolic { .. }
            | Error::QuadratureNotConverged(_)
            | Error::MeshQualityFailure(_)
            | Error::SolverNotConverged(_)
            | Error::ShiftTooCloseToEigenvalue { .. }
            | Error::TruncationNotJustified { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
