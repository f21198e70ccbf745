use thiserror::Error;

/// Errors raised by the spider-walk library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("leg index {index} is outside 1..={n_legs}")]
    InvalidLeg { index: u32, n_legs: u32 },

    #[error("invalid leg weights: {0}")]
    InvalidWeights(String),

    #[error("states at steps {step} and {} are not adjacent", step + 1)]
    NotAdjacent { step: usize },

    #[error("walk path must start at 0 and move by +-1 (violation at step {step})")]
    InvalidWalk { step: usize },

    #[error("requested step {requested} exceeds path length {len}")]
    BeyondPath { requested: u64, len: u64 },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("enumeration oracle limited to {max} steps, got {requested}")]
    TooManySteps { requested: u64, max: u64 },

    #[error("series did not reach tolerance within {cap} terms")]
    SeriesCap { cap: u64 },

    #[error("embedded value {value} at tau index {index} is {deviation} from the lattice (guard {guard})")]
    SnapGuard {
        index: usize,
        value: f64,
        deviation: f64,
        guard: f64,
    },

    #[error("coupling needs {needed} embedded steps but the record holds {available}")]
    ShortEmbedding { needed: u64, available: u64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("excursion straddling step {step} is not resolved within the path")]
    Undetermined { step: u64 },

    #[error("growing-legs results require uniform weights")]
    NonUniformWeights,

    #[error("height {height} exceeds N/log N = {bound:.3} (regime override not set)")]
    OutsideRegime { height: u64, bound: f64 },

    #[error("empty sample")]
    EmptySample,
}

pub type Result<T> = std::result::Result<T, Error>;
