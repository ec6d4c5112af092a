use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("gyromagnetic ratio must be finite and non-zero")]
    ZeroGamma,
    #[error("field region [{y_start}, {y_end}) is empty")]
    EmptyRegion { y_start: f64, y_end: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("finite-difference stencil at y = {y} with h = {h} crosses a region boundary")]
    NearBoundary { y: f64, h: f64 },
    #[error("stencil width must be positive, got {0}")]
    BadStep(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
    #[error("ensemble must contain at least one particle")]
    EmptyEnsemble,
    #[error("particle {particle_id} did not leave the magnet within {budget} steps")]
    NoExit { particle_id: u64, budget: u64 },
    #[error("spin alignment needs a non-zero field")]
    ZeroField,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PauliError {
    #[error("grid must have a power-of-two number of points >= 64 per axis, got {0}")]
    GridSize(usize),
    #[error("grid half-width must be positive, got {0}")]
    HalfWidth(f64),
    #[error("initial width sigma = {sigma} is not resolved by mesh {delta} (need sigma >= 3 mesh)")]
    Unresolved { sigma: f64, delta: f64 },
    #[error("grid criterion 2*a*mesh = {value:.3} exceeds {limit}: the potential a(x^2+z^2) is not representable on this grid")]
    GridCriterion { value: f64, limit: f64 },
    #[error("propagation time must be non-negative and finite, got {0}")]
    BadTime(f64),
    #[error("Hamiltonian coefficients must be finite")]
    NonFiniteCoeffs,
    #[error("Chebyshev expansion did not converge within {0} terms")]
    NoConvergence(usize),
    #[error("operands live on different grids")]
    GridMismatch,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("need at least 2 bins per axis, got {0}")]
    TooFewBins(usize),
    #[error("histogram range must be positive and finite, got {0}")]
    BadRange(f64),
    #[error("window half-width must be positive, got {0}")]
    BadWindow(f64),
    #[error("velocity unit must be positive and finite, got {0}")]
    BadUnit(f64),
}
