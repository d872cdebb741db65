use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid precision context: {0}")]
    BadContext(String),
    #[error("character value {0} is not a p-adic unit")]
    NonUnitChi(String),
    #[error("element is not a unit")]
    NotAUnit,
    #[error("element lacks a filtration witness for this frame")]
    NotInFil,
    #[error("axiom violation: {0}")]
    AxiomViolation(String),
    #[error("bad levels: {0}")]
    BadLevels(String),
    #[error("homomorphism not supported here: {0}")]
    BadHom(String),
    #[error("pair is not in D1: {0}")]
    NotInD1(String),
    #[error("action is not strict")]
    NotStrict,
    #[error("no generator with chi = 1 + p^r * unit")]
    NoSmallGenerator,
    #[error("divided Frobenius on differentials is not nilpotent for this lift")]
    NotNilpotent,
    #[error("no equivariant extension for the requested class")]
    NoEquivariantExtension,
    #[error("prime budget exceeded")]
    BudgetExceeded,
    #[error("lattices have different bases")]
    IncompatibleBases,
    #[error("module is not of rank 1")]
    NotRank1,
    #[error("precision loss: {0}")]
    PrecisionLoss(String),
    #[error("not divisible: {0}")]
    NotDivisible(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
