use thiserror::Error;

/// Errors raised by the signal, encoding and recovery routines.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("period mismatch: {left} vs {right}")]
    PeriodMismatch { left: f64, right: f64 },

    #[error("reversed interval: [{a}, {b}]")]
    ReversedInterval { a: f64, b: f64 },

    #[error("bias {beta} does not exceed the input bound sum_k |c_k| = {bound}; the integrator would not be monotone")]
    BiasTooSmall { beta: f64, bound: f64 },

    #[error("initial integrator state {state} outside [-{delta}, {delta}]")]
    InvalidInitialState { state: f64, delta: f64 },

    #[error("spike times not strictly increasing at index {index}")]
    NotIncreasing { index: usize },

    #[error("spike timing noise reorders spikes (snr {snr_db} dB)")]
    OrderingCollapsed { snr_db: f64 },

    #[error("{have} spikes, need at least {need} (more than 2K+2 with K = {bandwidth})")]
    TooFewSpikes {
        have: usize,
        need: usize,
        bandwidth: usize,
    },

    #[error("rank-deficient system: condition number {condition:e}")]
    RankDeficient { condition: f64 },

    #[error("annihilation needs {need} rows, have {have}")]
    InsufficientRows { have: usize, need: usize },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("ill-conditioned Vandermonde system (condition {condition:e}, minimum separation {min_separation:e})")]
    IllConditioned { condition: f64, min_separation: f64 },

    #[error("empty constraint system")]
    EmptySystem,

    #[error("neuron {neuron} has no inter-spike intervals in any example")]
    NoIntervals { neuron: usize },

    #[error("example {example}, output {neuron}: {have} spikes, spike budget requires {need}")]
    SpikeBudget {
        example: usize,
        neuron: usize,
        have: usize,
        need: usize,
    },

    #[error("k = {k} exceeds the number of points ({points})")]
    TooFewPoints { k: usize, points: usize },

    #[error("k-means cluster collapse: {0}")]
    ClusterCollapse(String),

    #[error("degenerate instance: hidden spikes {separation:e} apart (threshold {threshold:e})")]
    CoincidentSpikes { separation: f64, threshold: f64 },

    #[error("degenerate instance: annihilating filter for {expected} Diracs is not unique, so some hidden spikes coincide")]
    UnresolvedDiracs { expected: usize },

    #[error("exhaustive permutation search limited to {max} hidden units, got {n}; an assignment solver would be needed")]
    PermutationSearchTooLarge { n: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Coincident hidden spikes: the instance itself is degenerate, not the data.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::CoincidentSpikes { .. } | Error::UnresolvedDiracs { .. }
        )
    }
}
