use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spin quantum number: 2s = {0}")]
    InvalidSpin(u32),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("site {site} is outside 1..={sites}")]
    InvalidSite { site: usize, sites: usize },

    #[error("operator is not Hermitian (max defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("eigensolver did not converge")]
    NoConvergence,

    #[error("invalid quantum numbers S_T = {s_total}, S_T^z = {s_total_z}")]
    InvalidQuantumNumbers { s_total: String, s_total_z: String },

    #[error("no level crossing above S_T = {0}")]
    NoHigherSector(String),

    #[error("eigenvalue {0} K matches no total-spin sector")]
    Unassignable(f64),

    #[error("temperature must be positive, got {0} K")]
    InvalidTemperature(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid subsystem: {0}")]
    InvalidSubsystem(String),

    #[error("temperature bracket [{lo}, {hi}] K does not straddle the threshold")]
    BracketDoesNotStraddle { lo: f64, hi: f64 },

    #[error("Dicke index {0} outside 0..=15")]
    InvalidDickeIndex(u32),

    #[error("normalization mismatch: expected {expected}, computed {computed}")]
    NormalizationMismatch { expected: f64, computed: f64 },

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("trajectory budget exceeded: {leaves} leaves > budget {budget}")]
    BudgetExceeded { leaves: u64, budget: u64 },

    #[error("pruned probability mass {0:e} exceeds 1e-6; Fisher information is not trustworthy")]
    UntrustedFisher(f64),

    #[error("invalid fit input: {0}")]
    InvalidFitInput(String),

    #[error("inconsistent computation: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
