use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter or combination of parameters cannot produce a valid model.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input data (density grid, distributions, matrices).
    #[error("input error: {0}")]
    Input(String),

    #[error("no tile reaches the minimum population of {min_population}")]
    NoTilesRetained { min_population: u32 },

    #[error("mean acquaintance degree {requested} is infeasible; at most {max_achievable} can be reached")]
    InfeasibleDegree { requested: f64, max_achievable: f64 },

    #[error("rejection sampling gave up after {attempts} attempts")]
    RejectionLimit { attempts: u64 },

    /// An internal invariant did not hold; indicates a bug.
    #[error("invariant violated: {0}")]
    Invariant(String),
}
