use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("potential is singular at r = {r}; need r > 0")]
    Domain { r: f64 },
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("repulsive inverse-square power law (g = {g}, n = {n}) has no origin class")]
    Unclassifiable { g: f64, n: f64 },
    #[error("potential spec, position {position}, token `{token}`: {message}")]
    Parse {
        position: usize,
        token: String,
        message: String,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndicialError {
    #[error("strongly singular origin (n = {n}, g = {g}) has no two-term indicial equation")]
    StronglySingularUnsupported { n: f64, g: f64 },
    #[error("fall to center: 2 m v0 = {coupling} exceeds (l + 1/2)^2 = {threshold}")]
    FallToCenter { coupling: f64, threshold: f64 },
    #[error("invalid boundary policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid mass {0}; need a finite m > 0")]
    InvalidMass(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("probe radius {a} is below 4 grid spacings (h = {h})")]
    GridTooCoarse { a: f64, h: f64 },
    #[error("probe radius {a} is not inside the sampled grid")]
    ProbeOutsideGrid { a: f64 },
    #[error("sample count {got} does not match grid size {expected}")]
    SampleCount { expected: usize, got: usize },
    #[error("logarithmic case: {0}")]
    LogCase(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("no bound state in energy window [{lo}, {hi}]")]
    WindowEmpty { lo: f64, hi: f64 },
    #[error("Klein-Gordon fall to center: alpha = {alpha} >= l + 1/2 = {limit}")]
    KgFallToCenter { alpha: f64, limit: f64 },
    #[error("tail is not classically forbidden at r_max for E = {energy}; no decaying start")]
    NonDecayingTail { energy: f64 },
    #[error("samples change sign or vanish inside the fit window")]
    NonPositiveSamples,
    #[error(
        "branch with exponent {exponent} is not admissible under the Dirichlet origin condition"
    )]
    InadmissibleBranch { exponent: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Indicial(#[from] IndicialError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Oracle3dError {
    #[error("invalid Cartesian grid: {0}")]
    InvalidGrid(String),
    #[error(
        "eigensolver did not converge in {iterations} iterations (worst residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
}
