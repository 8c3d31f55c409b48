use thiserror::Error;

/// Errors produced by the guessrisk library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("distribution is empty or has zero total mass")]
    EmptyDistribution,

    #[error("negative mass {value} at index {index}")]
    NegativeMass { index: usize, value: f64 },

    #[error("masses sum to {sum}, expected 1 within {tol}")]
    NotNormalized { sum: f64, tol: f64 },

    #[error("joint table is empty or ragged")]
    BadTable,

    #[error("column {y} of the joint table has zero mass")]
    ZeroColumnMass { y: usize },

    #[error("entropy order must be positive and != 1, got {0}")]
    InvalidOrder(f64),

    #[error("smoothing is only defined for orders in (0,1), got {0}")]
    OrderNotSmoothable(f64),

    #[error("epsilon must be in [0,1), got {0}")]
    InvalidEpsilon(f64),

    #[error("argument must be strictly inside (0,1), got {0}")]
    InvalidProbability(f64),

    #[error("rho must be > 0, got {0}")]
    InvalidRho(f64),

    #[error("distortion level must be >= 0, got {0}")]
    InvalidDistortion(f64),

    #[error("blocklength must be >= 1")]
    InvalidBlocklength,

    #[error("invalid guessing strategy: {0}")]
    InvalidStrategy(String),

    #[error("strategy has {strategy} symbols per reconstruction, distribution has {dist}")]
    DimensionMismatch { strategy: usize, dist: usize },

    #[error("strategy is not admissible at D={d_level}: symbol index {witness} is uncovered")]
    Inadmissible { witness: usize, d_level: f64 },

    #[error("trial count must be >= 1")]
    NoTrials,

    #[error("product expansion needs {needed} atoms, exceeding the cap {cap}")]
    AtomCapExceeded { needed: u64, cap: u64 },

    #[error("alphabet size {m} exceeds the enumeration cap {cap}")]
    AlphabetTooLarge { m: usize, cap: usize },

    #[error("the source has zero varentropy; the expansion requires V(X) > 0")]
    ZeroVarentropy,

    #[error("survival schedule infeasible: available mass {total} < required {required}")]
    InfeasibleMass { total: f64, required: f64 },
}

impl Error {
    /// True for errors caused by hitting a configured resource cap rather
    /// than by invalid input.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            Error::AtomCapExceeded { .. } | Error::AlphabetTooLarge { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
