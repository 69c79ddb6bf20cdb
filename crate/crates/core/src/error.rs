use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GasError {
    #[error("invalid closure constants gamma={gamma}, kappa={kappa}, c_v={cv}")]
    Closure { gamma: f64, kappa: f64, cv: f64 },
    #[error("non-positive or non-finite state: p={p}, rho={rho}")]
    NonPositive { p: f64, rho: f64 },
    #[error("subsonic state: |q|={speed} <= c={c}")]
    Subsonic { speed: f64, c: f64 },
    #[error("x is not time-like: u={u} <= c={c}")]
    NotHyperbolic { u: f64, c: f64 },
    #[error("degenerate renormalisation, r . grad(lambda) = {dot}")]
    Degenerate { dot: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error(transparent)]
    Gas(#[from] GasError),
    #[error("strength {strength} leaves the admissible range of the wave curve")]
    OutOfRange { strength: f64 },
    #[error("{0} is not a nonlinear discontinuity")]
    NotAShock(&'static str),
    #[error("{0} has no single-parameter wave curve")]
    NoCurve(&'static str),
    #[error("rarefaction integration did not settle (entropy drift {drift:e})")]
    Integration { drift: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("input outside the trust region (distance {distance} > {radius})")]
    TrustRegion { distance: f64, radius: f64 },
    #[error("wall turning {angle} rad is beyond the attached-shock range")]
    Detached { angle: f64 },
    #[error("singular jacobian")]
    Singular,
}

impl From<GasError> for SolverError {
    fn from(e: GasError) -> Self {
        SolverError::Curve(CurveError::Gas(e))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoefficientError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("background invalid: {0}")]
    Background(String),
    #[error("finite difference produced a non-finite value for {0}")]
    NonFinite(&'static str),
    #[error("weight selection infeasible: {0}")]
    Infeasible(String),
}

impl From<GasError> for CoefficientError {
    fn from(e: GasError) -> Self {
        CoefficientError::Solver(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("wall vertices must start at (0, 0)")]
    Origin,
    #[error("wall abscissae must increase strictly (vertex {index})")]
    NonMonotone { index: usize },
    #[error("TV(g') = {tv} exceeds the configured bound {bound}")]
    WallVariation { tv: f64, bound: f64 },
    #[error("perturbation TV = {tv} exceeds the configured bound {bound}")]
    InflowVariation { tv: f64, bound: f64 },
    #[error("inflow state at y={y} is {distance} from its background (trust radius {radius})")]
    TrustRegion { y: f64, distance: f64, radius: f64 },
    #[error("invalid inflow: {0}")]
    Inflow(String),
    #[error(transparent)]
    Gas(#[from] GasError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackerError {
    #[error("initialisation failed at y={y}: {source}")]
    Init { y: f64, source: SolverError },
    #[error("{kind} at x={x}: {source}")]
    Event { x: f64, kind: &'static str, source: SolverError },
    #[error("event budget {budget} exhausted at x={x}")]
    Budget { budget: usize, x: f64 },
    #[error("x={x} outside the window [0, {window}]")]
    Window { x: f64, window: f64 },
    #[error(transparent)]
    Coefficient(#[from] CoefficientError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalError {
    #[error("hugoniot decomposition failed: {0}")]
    Decomposition(#[from] SolverError),
    #[error("slices are inconsistent: {0}")]
    Slices(String),
    #[error("states not tangent to the wall (residual {residual:e})")]
    NotTangent { residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("scenario schema: {0}")]
    Schema(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Coefficient(#[from] CoefficientError),
}
