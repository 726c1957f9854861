//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised while parsing the network DSL.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("{line}:{col}: duplicate reaction")]
    DuplicateReaction { line: usize, col: usize },
    #[error("{line}:{col}: reactant equals product (null reaction)")]
    NullReaction { line: usize, col: usize },
    #[error("{line}:{col}: rate constant must be positive")]
    NonpositiveRate { line: usize, col: usize },
    #[error("empty network: no reactions")]
    EmptyNetwork,
}

/// Errors raised when constructing a network directly.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum NetworkError {
    #[error("species name `{0}` is not unique")]
    DuplicateSpecies(String),
    #[error("species name `{0}` is not a valid identifier")]
    BadSpeciesName(String),
    #[error("reaction {0} has identical reactant and product")]
    NullReaction(usize),
    #[error("reactions {0} and {1} have identical reactant and product complexes")]
    DuplicateReaction(usize, usize),
    #[error("reaction {0} has nonpositive rate constant")]
    NonpositiveRate(usize),
    #[error("network has no reactions")]
    Empty,
    #[error("species index {0} out of range")]
    SpeciesIndex(usize),
}

/// Errors from numerical analysis: Newton solves, bifurcation location,
/// Lyapunov coefficients and integration.
#[derive(Debug, Clone, Error)]
pub enum AnalysisError {
    #[error("Newton iteration diverged after {iters} steps (|F| = {residual:.3e})")]
    NewtonDiverged { iters: usize, residual: f64 },
    #[error("singular Jacobian at a non-equilibrium (|F| = {residual:.3e})")]
    SingularJacobian { residual: f64 },
    #[error("iterate left the positive orthant")]
    LeftPositiveOrthant,
    #[error("neutral saddle, not Hopf: zero-sum eigenvalue pair is real")]
    NeutralSaddle,
    #[error("no near-imaginary eigenvalue pair (|Re| <= {re_tol:.1e}, Im >= {im_tol:.1e})")]
    NoImaginaryPair { re_tol: f64, im_tol: f64 },
    #[error("eigenvalue pair is not simple")]
    NonSimplePair,
    #[error("Hopf frequency below tolerance (omega = {omega:.3e})")]
    OmegaTooSmall { omega: f64 },
    #[error("network has rank 0: no dynamics on stoichiometric classes")]
    RankZero,
    #[error("chart base point must be strictly positive")]
    NonpositiveBasePoint,
    #[error("cusp test functions require a rank-1 reduced system")]
    CuspRequiresRankOne,
    #[error("expected {expected} free parameters for codimension {codim}, got {got}")]
    WrongFreeParamCount {
        expected: usize,
        codim: usize,
        got: usize,
    },
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e}); system too stiff")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("state dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no sign change bracketed in the sweep range")]
    NoBracket,
    #[error("{0}")]
    Other(String),
}

/// Errors from the enlargement operators E1-E6.
#[derive(Debug, Clone, Error)]
pub enum EnlargeError {
    #[error("reaction vector not in stoichiometric subspace (E1 inapplicable; consider E4)")]
    NotInStoichiometricSubspace,
    #[error("enlargement would change the network rank")]
    RankChanged,
    #[error("new species must enter a nonempty subset of reactions")]
    EmptySubset,
    #[error("added-species stoichiometry block has rank {got}, need {need}")]
    BetaRankDeficient { got: usize, need: usize },
    #[error("reaction index {0} not present in the network")]
    MissingReaction(usize),
    #[error("species `{0}` already exists in the network")]
    SpeciesExists(String),
    #[error("new reversible reaction {0} involves no new species")]
    NoNewSpecies(usize),
    #[error("step {index} invalid: {source}")]
    ComposeStep {
        index: usize,
        #[source]
        source: Box<EnlargeError>,
    },
    #[error(
        "E2 after a step with epsilon-dependent or vanishing base-point lift is not supported"
    )]
    UnsupportedComposition,
    #[error("network error during enlargement: {0}")]
    Network(#[from] crate::error::NetworkError),
}
