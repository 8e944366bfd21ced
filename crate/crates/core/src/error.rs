use thiserror::Error;

/// Invalid input to one of the constitutive laws or the contact solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter `{name}` = {value} is out of range: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("sinkage must be non-negative, got {0} m")]
    NegativeSinkage(f64),
    #[error("shear displacement must be non-negative, got {0} m")]
    NegativeShearDisplacement(f64),
    #[error("carriage speed must be positive, got {0} m/s")]
    NonPositiveCarriageSpeed(f64),
    #[error("slip ratio {0} is outside the supported domain (s > -1)")]
    SlipOutOfDomain(f64),
    #[error("sinkage {sinkage} m reaches the outer radius {limit} m")]
    SinkageBeyondAxle { sinkage: f64, limit: f64 },
    #[error("patch needs at least {min} nodes, got {got}")]
    TooFewNodes { got: usize, min: usize },
    #[error("load {load} N is not bracketed: the soil carries at most {capacity} N before the wheel is buried")]
    NotBracketed { load: f64, capacity: f64 },
    #[error("equilibrium bisection did not reach tolerance {tolerance} N (residual {residual} N)")]
    NoConvergence { residual: f64, tolerance: f64 },
}

/// Failure of a time-domain rig simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RigError {
    #[error("invalid rig configuration: {0}")]
    Config(String),
    #[error("simulation diverged at t = {time} s (sinkage {sinkage} m left [0, {limit}))")]
    Divergence { time: f64, sinkage: f64, limit: f64 },
    #[error("contact model failed at t = {time} s: {source}")]
    Model {
        time: f64,
        #[source]
        source: ModelError,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("invalid calibration problem: {0}")]
    Problem(String),
    #[error("simulation of target `{target}` failed: {source}")]
    Simulation {
        target: String,
        #[source]
        source: RigError,
    },
    #[error("every one of the {0} objective evaluations failed")]
    AllEvaluationsFailed(usize),
    #[error("budget {budget} is below the minimum {min} for {free} free parameters")]
    BudgetTooSmall { budget: usize, min: usize, free: usize },
}
