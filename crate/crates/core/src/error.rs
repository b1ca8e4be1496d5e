use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// How a failure should be surfaced to a caller such as the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input: malformed config, parameters out of range, impossible requests.
    Validation,
    /// An inequality or invariant that was asserted turned out false.
    CheckFailed,
    /// Numerical or I/O breakdown inside the library.
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("graph is disconnected: vertex {vertex} unreachable from 0")]
    DisconnectedGraph { vertex: usize },
    #[error("parameter {name} = {value} outside {range}")]
    ParameterOutOfRange {
        name: String,
        value: f64,
        range: String,
    },
    #[error("vertex conductance decreases at x={vertex} between t={t0} and t={t1}")]
    NotMonotone { vertex: usize, t0: f64, t1: f64 },
    #[error("perturbation exponent not bounded on horizon: {quantity} = {value} > {bound}")]
    UnboundedPerturbation {
        quantity: String,
        value: f64,
        bound: f64,
    },
    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("backward ODE did not converge after {halvings} step halvings (last change {change:e})")]
    OdeNotConverged { halvings: usize, change: f64 },
    #[error("row sums drifted by {drift:e}")]
    StochasticityDrift { drift: f64 },
    #[error("walk support touched the truncation boundary at vertex {vertex}")]
    BoundaryTouched { vertex: usize },
    #[error("exponential weight overflow guard: |theta| max|rho| = {value} > 300")]
    Overflow { value: f64 },
    #[error("unsupported exponent pair {p_in} -> {q_out}")]
    UnsupportedExponentPair { p_in: String, q_out: String },
    #[error("measure vanishes at vertex {vertex}")]
    DegenerateMeasure { vertex: usize },
    #[error("radius {radius} exceeds the guard ({reason})")]
    RadiusExceedsGuard { radius: f64, reason: String },
    #[error("energy form is singular on the ball around {center}")]
    SingularEnergyForm { center: usize },
    #[error("exact subset enumeration too large: {detail}")]
    ExactModeTooLarge { detail: String },
    #[error("regularity N(C s)/N(s) >= 2 fails at s = {s} (ratio {ratio})")]
    RegularityFailed { s: f64, ratio: f64 },
    #[error("integrand not finite at s = {s}")]
    IntegrandNotFinite { s: f64 },
    #[error("F stays below target {target} up to u = {window:e}")]
    TargetUnreachable { target: f64, window: f64 },
    #[error("Poisson series truncation failed for mean {mean}")]
    SeriesTruncationFailed { mean: f64 },
    #[error("gamma condition fails at n = {n}")]
    GammaConditionFailed { n: usize },
    #[error("nonlocal hypothesis violated at ({x}, {y}) at time {t}: ratio {ratio}")]
    HypothesisViolated {
        t: usize,
        x: usize,
        y: usize,
        ratio: f64,
    },
    #[error("negative boundary data {value} at vertex {vertex}")]
    NegativeBoundaryData { vertex: usize, value: f64 },
    #[error("cylinder around {center} with radius {radius} reaches the truncation boundary")]
    CylinderExceedsGraph { center: usize, radius: usize },
    #[error("lower Gaussian envelope infeasible: C_lower = {c_lower} exceeds cap {cap}")]
    InfeasibleLowerEnvelope { c_lower: f64, cap: f64 },
    #[error("no family member meets the density hypothesis delta = {delta}")]
    EmptyFamily { delta: f64 },
    #[error("not a sub-solution at s = {s}, x = {x} (excess {excess:e})")]
    NotASubsolution { s: f64, x: usize, excess: f64 },
    #[error("rescaled conductance decreases at x={vertex} between u={u0} and u={u1}")]
    MonotonizationFailed { vertex: usize, u0: usize, u1: usize },
    #[error("truncation guard: {0}")]
    TruncationGuard(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            EmptyGraph
            | DisconnectedGraph { .. }
            | ParameterOutOfRange { .. }
            | UnboundedPerturbation { .. }
            | TimeOutOfRange { .. }
            | UnsupportedExponentPair { .. }
            | RadiusExceedsGuard { .. }
            | ExactModeTooLarge { .. }
            | CylinderExceedsGraph { .. }
            | NegativeBoundaryData { .. }
            | TruncationGuard(_)
            | InvalidConfig(_)
            | Json(_)
            | Overflow { .. }
            | DegenerateMeasure { .. } => ErrorClass::Validation,
            NotMonotone { .. }
            | RegularityFailed { .. }
            | GammaConditionFailed { .. }
            | HypothesisViolated { .. }
            | InfeasibleLowerEnvelope { .. }
            | EmptyFamily { .. }
            | NotASubsolution { .. }
            | MonotonizationFailed { .. }
            | BoundaryTouched { .. } => ErrorClass::CheckFailed,
            OdeNotConverged { .. }
            | StochasticityDrift { .. }
            | SingularEnergyForm { .. }
            | IntegrandNotFinite { .. }
            | TargetUnreachable { .. }
            | SeriesTruncationFailed { .. }
            | Io(_) => ErrorClass::Internal,
        }
    }

    /// Stable machine-readable tag, used in the CLI's stderr JSON line.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            EmptyGraph => "EmptyGraph",
            DisconnectedGraph { .. } => "DisconnectedGraph",
            ParameterOutOfRange { .. } => "ParameterOutOfRange",
            NotMonotone { .. } => "NotMonotone",
            UnboundedPerturbation { .. } => "UnboundedPerturbation",
            TimeOutOfRange { .. } => "TimeOutOfRange",
            OdeNotConverged { .. } => "OdeNotConverged",
            StochasticityDrift { .. } => "StochasticityDrift",
            BoundaryTouched { .. } => "BoundaryTouched",
            Overflow { .. } => "Overflow",
            UnsupportedExponentPair { .. } => "UnsupportedExponentPair",
            DegenerateMeasure { .. } => "DegenerateMeasure",
            RadiusExceedsGuard { .. } => "RadiusExceedsGuard",
            SingularEnergyForm { .. } => "SingularEnergyForm",
            ExactModeTooLarge { .. } => "ExactModeTooLarge",
            RegularityFailed { .. } => "RegularityFailed",
            IntegrandNotFinite { .. } => "IntegrandNotFinite",
            TargetUnreachable { .. } => "TargetUnreachable",
            SeriesTruncationFailed { .. } => "SeriesTruncationFailed",
            GammaConditionFailed { .. } => "GammaConditionFailed",
            HypothesisViolated { .. } => "HypothesisViolated",
            NegativeBoundaryData { .. } => "NegativeBoundaryData",
            CylinderExceedsGraph { .. } => "CylinderExceedsGraph",
            InfeasibleLowerEnvelope { .. } => "InfeasibleLowerEnvelope",
            EmptyFamily { .. } => "EmptyFamily",
            NotASubsolution { .. } => "NotASubsolution",
            MonotonizationFailed { .. } => "MonotonizationFailed",
            TruncationGuard(_) => "TruncationGuard",
            InvalidConfig(_) => "InvalidConfig",
            Io(_) => "Io",
            Json(_) => "Json",
        }
    }
}

pub(crate) fn out_of_range(name: &str, value: f64, range: &str) -> Error {
    Error::ParameterOutOfRange {
        name: name.to_string(),
        value,
        range: range.to_string(),
    }
}
