use thiserror::Error;

use crate::histories::ConsistencyVerdict;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("entry buffer has {len} values, expected {expected}")]
    BadShape { len: usize, expected: usize },

    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("subsystem label `{0}` appears more than once")]
    DuplicateLabel(String),

    #[error("subsystem `{0}` has dimension 0")]
    ZeroDimension(String),

    #[error("space has no subsystems")]
    EmptySpace,

    #[error("state is not normalized: norm^2 = {0}")]
    NotNormalized(f64),

    #[error("operator is not hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("operator is not idempotent (max deviation {0:e})")]
    NotIdempotent(f64),

    #[error("operator is not positive semidefinite (residual pivot {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("history chain `{0}` has no projectors")]
    EmptyChain(String),

    #[error("history family has no slots")]
    EmptyFamily,

    #[error("slot {slot} does not sum to the identity (max deviation {deviation:e})")]
    SlotNotExhaustive { slot: usize, deviation: f64 },

    #[error("slot {slot}: projectors {first} and {second} overlap (tr(PQ) = {overlap:e})")]
    SlotNotExclusive {
        slot: usize,
        first: usize,
        second: usize,
        overlap: f64,
    },

    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },

    #[error("tr[rho_i rho_f] = {0:e}: initial and final states are incompatible")]
    ZeroNormalization(f64),

    #[error(
        "ABL denominator {0:e} vanishes: the post-selection is impossible given the measurement"
    )]
    ZeroDenominator(f64),

    #[error("outcome {outcome} has negative weight {weight:e}")]
    NegativeWeight { outcome: usize, weight: f64 },

    #[error("decoherence functional is not diagonal (max violation {:e})", .0.max_violation)]
    NotConsistent(ConsistencyVerdict),

    #[error("dimension d = {0} is degenerate, need d >= 2")]
    DegenerateDimension(usize),

    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
}
