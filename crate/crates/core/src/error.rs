use thiserror::Error;

#[derive(Debug, Error)]
pub enum CrError {
    #[error("truncation degree {l} is below the minimum of 2")]
    InvalidTruncation { l: usize },
    #[error("UNDER_RESOLVED: truncation {l} is below the required {min}")]
    UnderResolved { l: usize, min: usize },
    #[error("kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },
    #[error("grid or truncation mismatch: {0}")]
    GridMismatch(String),
    #[error("FRAME_DEGENERATE at node {node}: normalized sigma {sigma:.3e}")]
    FrameDegenerate { node: usize, sigma: f64 },
    #[error("NEAR_SINGULAR: sigma_min {sigma:.3e} at {location}")]
    NearSingular { sigma: f64, location: String },
    #[error("LIFT_OBSTRUCTED: monodromy defect {defect:.3e} on loop edge {edge:?}")]
    LiftObstructed { defect: f64, edge: (usize, usize) },
    #[error("UNSTABLE_DEGREE: coarse {coarse}, refined {refined}")]
    UnstableDegree { coarse: f64, refined: f64 },
    #[error("RESIDUAL_FAIL: {what} = {value:.3e} exceeds {tol:.1e}")]
    ResidualFail { what: String, value: f64, tol: f64 },
    #[error("NOT_NORMALIZABLE: best violation {violation:.3e}")]
    NotNormalizable { violation: f64 },
    #[error("INDETERMINATE: best spectral gap {gap:.3e} below 1e3")]
    Indeterminate { gap: f64 },
    #[error("SURJECTIVITY_FAIL at s = {s}: sigma_min {sigma:.3e}")]
    SurjectivityFail { s: f64, sigma: f64 },
    #[error("PATCH_DEGENERATE at s = {s}, node {node}")]
    PatchDegenerate { s: f64, node: usize },
    #[error("NOT_CONTRACTIVE: |t| c = {tc:.4} is not below 1/2")]
    NotContractive { tc: f64 },
    #[error("NOT_APPLICABLE: {0}")]
    NotApplicable(String),
    #[error("DEGREE_MISMATCH: reparametrization has degree {degree}")]
    DegreeMismatch { degree: i64 },
    #[error("GAP_FAIL at twist {twist}: {detail}")]
    GapFail { twist: i32, detail: String },
    #[error("NOT_IMMERSED at node {node}: sigma {sigma:.3e}")]
    NotImmersed { node: usize, sigma: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CrError {
    /// Stable certificate name used in reports and exit diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            CrError::InvalidTruncation { .. } => "INVALID_TRUNCATION",
            CrError::UnderResolved { .. } => "UNDER_RESOLVED",
            CrError::KindMismatch { .. } => "KIND_MISMATCH",
            CrError::GridMismatch(_) => "GRID_MISMATCH",
            CrError::FrameDegenerate { .. } => "FRAME_DEGENERATE",
            CrError::NearSingular { .. } => "NEAR_SINGULAR",
            CrError::LiftObstructed { .. } => "LIFT_OBSTRUCTED",
            CrError::UnstableDegree { .. } => "UNSTABLE_DEGREE",
            CrError::ResidualFail { .. } => "RESIDUAL_FAIL",
            CrError::NotNormalizable { .. } => "NOT_NORMALIZABLE",
            CrError::Indeterminate { .. } => "INDETERMINATE",
            CrError::SurjectivityFail { .. } => "SURJECTIVITY_FAIL",
            CrError::PatchDegenerate { .. } => "PATCH_DEGENERATE",
            CrError::NotContractive { .. } => "NOT_CONTRACTIVE",
            CrError::NotApplicable(_) => "NOT_APPLICABLE",
            CrError::DegreeMismatch { .. } => "DEGREE_MISMATCH",
            CrError::GapFail { .. } => "GAP_FAIL",
            CrError::NotImmersed { .. } => "NOT_IMMERSED",
            CrError::Config(_) => "CONFIG",
            CrError::Linalg(_) => "LINALG",
            CrError::Io(_) => "IO",
            CrError::Json(_) => "JSON",
            CrError::Csv(_) => "CSV",
        }
    }
}

pub type Result<T> = std::result::Result<T, CrError>;
