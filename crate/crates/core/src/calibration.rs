//! Soil-parameter fitting against steady-state rig measurements.
//!
//! Free parameters are searched in the unit box `[0, 1]^d` mapped linearly
//! onto their bounds. Failed simulations are recorded and ranked worse than
//! any successful evaluation.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::CalibrationError;
use crate::rig::{run_experiment, RigConfig};
use crate::soil::SoilParameters;

/// A soil constant that calibration may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SoilParameter {
    FrictionAngle,
    N0,
    N1,
    UnitWeight,
    Kg,
    Ka,
    Kc,
    Kphi,
    ShearModulus,
    ResidualRatio,
    Cohesion,
    Damping,
}

impl SoilParameter {
    pub const ALL: [SoilParameter; 12] = [
        SoilParameter::FrictionAngle,
        SoilParameter::N0,
        SoilParameter::N1,
        SoilParameter::UnitWeight,
        SoilParameter::Kg,
        SoilParameter::Ka,
        SoilParameter::Kc,
        SoilParameter::Kphi,
        SoilParameter::ShearModulus,
        SoilParameter::ResidualRatio,
        SoilParameter::Cohesion,
        SoilParameter::Damping,
    ];

    /// Configuration key.
    pub fn key(self) -> &'static str {
        match self {
            SoilParameter::FrictionAngle => "phi",
            SoilParameter::N0 => "n_o",
            SoilParameter::N1 => "n_1",
            SoilParameter::UnitWeight => "gamma",
            SoilParameter::Kg => "k_g",
            SoilParameter::Ka => "k_a",
            SoilParameter::Kc => "k_c",
            SoilParameter::Kphi => "k_phi",
            SoilParameter::ShearModulus => "k_w",
            SoilParameter::ResidualRatio => "k_r",
            SoilParameter::Cohesion => "cohesion",
            SoilParameter::Damping => "c_f",
        }
    }

    /// Value in internal units (radians for the friction angle).
    pub fn get(self, soil: &SoilParameters) -> f64 {
        match self {
            SoilParameter::FrictionAngle => soil.friction_angle,
            SoilParameter::N0 => soil.n0,
            SoilParameter::N1 => soil.n1,
            SoilParameter::UnitWeight => soil.unit_weight,
            SoilParameter::Kg => soil.k_g,
            SoilParameter::Ka => soil.k_a,
            SoilParameter::Kc => soil.k_c,
            SoilParameter::Kphi => soil.k_phi,
            SoilParameter::ShearModulus => soil.shear_modulus,
            SoilParameter::ResidualRatio => soil.residual_ratio,
            SoilParameter::Cohesion => soil.cohesion,
            SoilParameter::Damping => soil.damping,
        }
    }

    pub fn set(self, soil: &mut SoilParameters, value: f64) {
        let slot = match self {
            SoilParameter::FrictionAngle => &mut soil.friction_angle,
            SoilParameter::N0 => &mut soil.n0,
            SoilParameter::N1 => &mut soil.n1,
            SoilParameter::UnitWeight => &mut soil.unit_weight,
            SoilParameter::Kg => &mut soil.k_g,
            SoilParameter::Ka => &mut soil.k_a,
            SoilParameter::Kc => &mut soil.k_c,
            SoilParameter::Kphi => &mut soil.k_phi,
            SoilParameter::ShearModulus => &mut soil.shear_modulus,
            SoilParameter::ResidualRatio => &mut soil.residual_ratio,
            SoilParameter::Cohesion => &mut soil.cohesion,
            SoilParameter::Damping => &mut soil.damping,
        };
        *slot = value;
    }
}

impl fmt::Display for SoilParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for SoilParameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SoilParameter::ALL.into_iter().find(|p| p.key() == s).ok_or_else(|| {
            let keys: Vec<_> = SoilParameter::ALL.iter().map(|p| p.key()).collect();
            format!("unknown soil parameter `{s}` (expected one of {})", keys.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeParameter {
    pub parameter: SoilParameter,
    pub lower: f64,
    pub upper: f64,
}

impl FreeParameter {
    /// Default bounds: +-50 % of the base value, except `phi` in
    /// [10, 45] deg and `n_o` in [0.5, 2].
    pub fn around(parameter: SoilParameter, base: &SoilParameters) -> Self {
        let value = parameter.get(base);
        let (lower, upper) = match parameter {
            SoilParameter::FrictionAngle => (10f64.to_radians(), 45f64.to_radians()),
            SoilParameter::N0 => (0.5, 2.0),
            _ => {
                let a = 0.5 * value;
                let b = 1.5 * value;
                (a.min(b), a.max(b))
            }
        };
        Self {
            parameter,
            lower,
            upper,
        }
    }

    fn value_at(&self, u: f64) -> f64 {
        self.lower + u.clamp(0.0, 1.0) * (self.upper - self.lower)
    }

    fn unit_of(&self, value: f64) -> f64 {
        let span = self.upper - self.lower;
        if span > 0.0 {
            ((value - self.lower) / span).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    fn contains(&self, value: f64) -> bool {
        value >= self.lower && value <= self.upper
    }
}

/// Parameters that differ between the initial and tuned soil tables and
/// actually enter the cohesionless model.
pub const DEFAULT_FREE: [SoilParameter; 5] = [
    SoilParameter::FrictionAngle,
    SoilParameter::N0,
    SoilParameter::UnitWeight,
    SoilParameter::Kg,
    SoilParameter::Ka,
];

/// Measured steady-state means for one slip setting.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub label: String,
    pub slip: f64,
    pub drawbar_pull: f64,
    pub normal_force: f64,
    pub sinkage: f64,
}

/// Per-observable weights on squared relative errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub drawbar_pull: f64,
    pub normal_force: f64,
    pub sinkage: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            drawbar_pull: 1.0,
            normal_force: 0.0,
            sinkage: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationProblem {
    pub base: SoilParameters,
    pub free: Vec<FreeParameter>,
    pub targets: Vec<Target>,
    pub weights: Weights,
    /// Rig settings shared by every target; soil, slip and label are replaced.
    pub rig: RigConfig,
}

impl CalibrationProblem {
    pub fn new(base: SoilParameters, targets: Vec<Target>, rig: RigConfig) -> Self {
        let free = DEFAULT_FREE.iter().map(|&p| FreeParameter::around(p, &base)).collect();
        Self {
            base,
            free,
            targets,
            weights: Weights::default(),
            rig,
        }
    }

    pub fn with_free(mut self, parameters: &[SoilParameter]) -> Self {
        self.free = parameters
            .iter()
            .map(|&p| FreeParameter::around(p, &self.base))
            .collect();
        self
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        let problem = |msg: String| Err(CalibrationError::Problem(msg));
        if self.targets.is_empty() {
            return problem("at least one target is required".into());
        }
        self.base
            .validate()
            .map_err(|e| CalibrationError::Problem(format!("base soil: {e}")))?;
        for free in &self.free {
            let base = free.parameter.get(&self.base);
            if !(free.lower.is_finite() && free.upper.is_finite() && free.lower <= free.upper) {
                return problem(format!(
                    "bounds of `{}` must be finite with lower <= upper, got [{}, {}]",
                    free.parameter, free.lower, free.upper
                ));
            }
            if !free.contains(base) {
                return problem(format!(
                    "base value {base} of `{}` lies outside [{}, {}]",
                    free.parameter, free.lower, free.upper
                ));
            }
        }
        for (i, free) in self.free.iter().enumerate() {
            if self.free[..i].iter().any(|f| f.parameter == free.parameter) {
                return problem(format!("`{}` is listed twice", free.parameter));
            }
        }
        let w = self.weights;
        for (name, value) in [
            ("drawbar_pull", w.drawbar_pull),
            ("normal_force", w.normal_force),
            ("sinkage", w.sinkage),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return problem(format!("weight `{name}` must be >= 0, got {value}"));
            }
        }
        for target in &self.targets {
            for (name, value) in [
                ("drawbar_pull", target.drawbar_pull),
                ("normal_force", target.normal_force),
                ("sinkage", target.sinkage),
            ] {
                if value == 0.0 || !value.is_finite() {
                    return problem(format!(
                        "target `{}` needs a finite non-zero {name}, got {value}",
                        target.label
                    ));
                }
            }
        }
        Ok(())
    }

    /// Rig configuration for one target under `soil`.
    pub fn rig_for(&self, soil: &SoilParameters, target: &Target) -> RigConfig {
        RigConfig {
            label: target.label.clone(),
            soil: *soil,
            slip: target.slip,
            ..self.rig.clone()
        }
    }

    fn soil_at(&self, unit: &[f64]) -> SoilParameters {
        let mut soil = self.base;
        for (free, &u) in self.free.iter().zip(unit) {
            free.parameter.set(&mut soil, free.value_at(u));
        }
        soil
    }

    fn unit_of(&self, soil: &SoilParameters) -> Vec<f64> {
        self.free.iter().map(|f| f.unit_of(f.parameter.get(soil))).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetResidual {
    pub label: String,
    pub simulated_drawbar_pull: f64,
    pub simulated_normal_force: f64,
    pub simulated_sinkage: f64,
    /// `(simulated - target) / target`.
    pub drawbar_pull: f64,
    pub normal_force: f64,
    pub sinkage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    pub residuals: Vec<TargetResidual>,
}

/// Weighted sum over targets of squared relative errors of the steady means.
pub fn objective(params: &SoilParameters, problem: &CalibrationProblem) -> Result<ObjectiveValue, CalibrationError> {
    for free in &problem.free {
        let value = free.parameter.get(params);
        if !free.contains(value) {
            return Err(CalibrationError::Problem(format!(
                "`{}` = {value} lies outside [{}, {}]",
                free.parameter, free.lower, free.upper
            )));
        }
    }
    evaluate(params, problem)
}

fn evaluate(params: &SoilParameters, problem: &CalibrationProblem) -> Result<ObjectiveValue, CalibrationError> {
    let residuals = problem
        .targets
        .par_iter()
        .map(|target| {
            let outcome =
                run_experiment(&problem.rig_for(params, target)).map_err(|source| CalibrationError::Simulation {
                    target: target.label.clone(),
                    source,
                })?;
            let s = &outcome.steady;
            Ok(TargetResidual::new(
                target,
                s.drawbar_pull.mean,
                s.normal_force.mean,
                s.sinkage.mean,
            ))
        })
        .collect::<Result<Vec<_>, CalibrationError>>()?;
    let value = weighted_sum(&residuals, &problem.weights);
    Ok(ObjectiveValue { value, residuals })
}

impl TargetResidual {
    /// Relative errors of simulated means against `target`.
    pub fn new(target: &Target, drawbar_pull: f64, normal_force: f64, sinkage: f64) -> Self {
        let rel = |sim: f64, exp: f64| (sim - exp) / exp;
        Self {
            label: target.label.clone(),
            simulated_drawbar_pull: drawbar_pull,
            simulated_normal_force: normal_force,
            simulated_sinkage: sinkage,
            drawbar_pull: rel(drawbar_pull, target.drawbar_pull),
            normal_force: rel(normal_force, target.normal_force),
            sinkage: rel(sinkage, target.sinkage),
        }
    }
}

/// Weighted sum of squared relative errors.
pub fn weighted_sum(residuals: &[TargetResidual], weights: &Weights) -> f64 {
    residuals
        .iter()
        .map(|r| {
            weights.drawbar_pull * r.drawbar_pull * r.drawbar_pull
                + weights.normal_force * r.normal_force * r.normal_force
                + weights.sinkage * r.sinkage * r.sinkage
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Method {
    #[default]
    CoordinateDescent,
    NelderMead,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coordinate-descent" => Ok(Method::CoordinateDescent),
            "nelder-mead" => Ok(Method::NelderMead),
            other => Err(format!(
                "unknown method `{other}` (expected coordinate-descent or nelder-mead)"
            )),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::CoordinateDescent => "coordinate-descent",
            Method::NelderMead => "nelder-mead",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSettings {
    pub method: Method,
    /// Maximum number of objective evaluations, including the base point.
    pub budget: usize,
    pub seed: u64,
    /// Relative step of the sensitivity table in the report; `None` skips it.
    pub sensitivity_step: Option<f64>,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            method: Method::CoordinateDescent,
            budget: 500,
            seed: 0,
            sensitivity_step: Some(0.05),
        }
    }
}

/// One objective evaluation as seen by the optimiser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub evaluation: usize,
    /// `None` when the simulation failed.
    pub objective: Option<f64>,
    /// Best objective seen so far.
    pub best: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sensitivity {
    pub parameter: SoilParameter,
    pub value: f64,
    /// Central-difference estimate of d objective / d ln(parameter).
    pub derivative: Result<f64, CalibrationError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub method: Method,
    pub free: Vec<FreeParameter>,
    pub base: SoilParameters,
    pub tuned: SoilParameters,
    /// `None` when the base parameters do not simulate.
    pub initial_objective: Option<f64>,
    pub final_objective: f64,
    pub residuals: Vec<TargetResidual>,
    pub trace: Vec<TraceEntry>,
    pub evaluations: usize,
    pub failed_evaluations: usize,
    pub sensitivity: Vec<Sensitivity>,
}

/// Result of a box-constrained minimisation in unit coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: Option<f64>,
    pub trace: Vec<TraceEntry>,
}

/// Fits the free parameters of `problem`.
pub fn calibrate(
    problem: &CalibrationProblem,
    settings: &CalibrationSettings,
) -> Result<CalibrationReport, CalibrationError> {
    problem.validate()?;
    let dims = problem.free.len();
    let min = 10 * dims;
    if settings.budget < min.max(1) {
        return Err(CalibrationError::BudgetTooSmall {
            budget: settings.budget,
            min: min.max(1),
            free: dims,
        });
    }
    let evaluate_unit = |u: &[f64]| evaluate(&problem.soil_at(u), problem).ok().map(|v| v.value);
    let start = problem.unit_of(&problem.base);
    let found = minimize_box(settings.method, &start, settings.budget, settings.seed, &evaluate_unit);

    let evaluations = found.trace.len();
    let failed_evaluations = found.trace.iter().filter(|t| t.objective.is_none()).count();
    let Some(final_objective) = found.value else {
        return Err(CalibrationError::AllEvaluationsFailed(evaluations));
    };
    let tuned = if found.point == start {
        problem.base
    } else {
        problem.soil_at(&found.point)
    };
    let residuals = evaluate(&tuned, problem)?.residuals;
    let sensitivity = match settings.sensitivity_step {
        Some(step) => sensitivity_scan(&tuned, problem, step)?,
        None => Vec::new(),
    };
    Ok(CalibrationReport {
        method: settings.method,
        free: problem.free.clone(),
        base: problem.base,
        tuned,
        initial_objective: found.trace.first().and_then(|t| t.objective),
        final_objective,
        residuals,
        trace: found.trace,
        evaluations,
        failed_evaluations,
        sensitivity,
    })
}

/// Central-difference sensitivities in log-parameter space, ranked by
/// decreasing magnitude. Failed parameters sort last.
pub fn sensitivity_scan(
    params: &SoilParameters,
    problem: &CalibrationProblem,
    relative_step: f64,
) -> Result<Vec<Sensitivity>, CalibrationError> {
    if !(relative_step > 0.0 && relative_step.is_finite()) {
        return Err(CalibrationError::Problem(format!(
            "sensitivity step must be > 0, got {relative_step}"
        )));
    }
    let probes: Vec<(SoilParameter, SoilParameters, SoilParameters)> = problem
        .free
        .iter()
        .map(|free| {
            let p = free.parameter;
            let value = p.get(params);
            let (mut up, mut down) = (*params, *params);
            p.set(&mut up, value * relative_step.exp());
            p.set(&mut down, value * (-relative_step).exp());
            (p, up, down)
        })
        .collect();
    let mut table: Vec<Sensitivity> = probes
        .par_iter()
        .map(|(p, up, down)| {
            let value = p.get(params);
            let derivative = if value == 0.0 {
                Ok(0.0)
            } else {
                evaluate(up, problem)
                    .and_then(|hi| evaluate(down, problem).map(|lo| (hi.value - lo.value) / (2.0 * relative_step)))
            };
            Sensitivity {
                parameter: *p,
                value,
                derivative,
            }
        })
        .collect();
    let magnitude = |s: &Sensitivity| s.derivative.as_ref().map(|d| d.abs()).unwrap_or(-1.0);
    table.sort_by(|a, b| magnitude(b).total_cmp(&magnitude(a)));
    Ok(table)
}

/// Minimises `f` over `[0, 1]^d` from `start` with at most `budget`
/// evaluations. `f` returns `None` for failed evaluations.
pub fn minimize_box<F>(method: Method, start: &[f64], budget: usize, seed: u64, f: &F) -> Minimum
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let mut ev = Evaluator::new(f, budget);
    let x0: Vec<f64> = start.iter().map(|u| u.clamp(0.0, 1.0)).collect();
    let f0 = ev.batch(std::slice::from_ref(&x0)).pop().flatten();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if !x0.is_empty() {
        match method {
            Method::CoordinateDescent => coordinate_descent(&mut ev, x0, f0, &mut rng),
            Method::NelderMead => nelder_mead(&mut ev, x0, f0, &mut rng),
        }
    }
    let (point, value) = match ev.best.take() {
        Some((x, v)) => (x, Some(v)),
        None => (start.to_vec(), None),
    };
    Minimum {
        point,
        value,
        trace: ev.trace,
    }
}

struct Evaluator<'a, F> {
    f: &'a F,
    budget: usize,
    trace: Vec<TraceEntry>,
    best: Option<(Vec<f64>, f64)>,
}

impl<'a, F> Evaluator<'a, F>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    fn new(f: &'a F, budget: usize) -> Self {
        Self {
            f,
            budget,
            trace: Vec::new(),
            best: None,
        }
    }

    fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.trace.len())
    }

    /// Evaluates as many of `points` as the budget allows, in parallel,
    /// and records them in input order.
    fn batch(&mut self, points: &[Vec<f64>]) -> Vec<Option<f64>> {
        let take = points.len().min(self.remaining());
        let f = self.f;
        let values: Vec<Option<f64>> = points[..take]
            .par_iter()
            .map(|x| f(x).filter(|v| v.is_finite()))
            .collect();
        for (x, &v) in points.iter().zip(&values) {
            if let Some(v) = v {
                if self.best.as_ref().is_none_or(|(_, b)| v < *b) {
                    self.best = Some((x.clone(), v));
                }
            }
            self.trace.push(TraceEntry {
                evaluation: self.trace.len() + 1,
                objective: v,
                best: self.best.as_ref().map(|(_, b)| *b),
            });
        }
        values
    }
}

fn score(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::INFINITY)
}

fn coordinate_descent<F>(ev: &mut Evaluator<'_, F>, mut x: Vec<f64>, fx: Option<f64>, rng: &mut ChaCha8Rng)
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let mut fx = score(fx);
    let mut step = 0.25;
    let mut order: Vec<usize> = (0..x.len()).collect();
    while ev.remaining() > 0 && step > 1e-7 {
        let mut improved = false;
        order.shuffle(rng);
        for &i in &order {
            let mut candidates = Vec::with_capacity(2);
            for sign in [1.0, -1.0] {
                let mut c = x.clone();
                c[i] = (x[i] + sign * step).clamp(0.0, 1.0);
                if c[i] != x[i] && !candidates.contains(&c) {
                    candidates.push(c);
                }
            }
            if candidates.is_empty() {
                continue;
            }
            let values = ev.batch(&candidates);
            let best = values
                .iter()
                .enumerate()
                .map(|(k, v)| (k, score(*v)))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((k, v)) = best {
                if v < fx {
                    x = candidates[k].clone();
                    fx = v;
                    improved = true;
                }
            }
            if ev.remaining() == 0 {
                return;
            }
        }
        if !improved {
            if fx.is_finite() {
                step *= 0.5;
            } else {
                // No feasible point yet: restart from a random one.
                let probe: Vec<f64> = (0..x.len()).map(|_| rng.random::<f64>()).collect();
                if let Some(Some(v)) = ev.batch(std::slice::from_ref(&probe)).pop() {
                    x = probe;
                    fx = v;
                }
            }
        }
    }
}

fn nelder_mead<F>(ev: &mut Evaluator<'_, F>, x0: Vec<f64>, f0: Option<f64>, rng: &mut ChaCha8Rng)
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    const EDGE: f64 = 0.2;
    let d = x0.len();
    let mut vertices = vec![x0.clone()];
    for i in 0..d {
        let mut v = x0.clone();
        let up = x0[i] + EDGE <= 1.0;
        let down = x0[i] - EDGE >= 0.0;
        let sign = match (up, down) {
            (true, true) => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            (true, false) => 1.0,
            (false, true) => -1.0,
            (false, false) => {
                if x0[i] < 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        v[i] = (x0[i] + sign * EDGE).clamp(0.0, 1.0);
        vertices.push(v);
    }
    let mut values = vec![score(f0)];
    values.extend(ev.batch(&vertices[1..]).into_iter().map(score));
    if values.len() < vertices.len() {
        return;
    }
    let project = |p: Vec<f64>| -> Vec<f64> { p.into_iter().map(|u| u.clamp(0.0, 1.0)).collect() };
    let along = |from: &[f64], to: &[f64], t: f64| -> Vec<f64> {
        project(from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect())
    };

    while ev.remaining() > 0 {
        let mut idx: Vec<usize> = (0..=d).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        vertices = idx.iter().map(|&k| vertices[k].clone()).collect();
        values = idx.iter().map(|&k| values[k]).collect();

        if !values[0].is_finite() {
            let fresh: Vec<Vec<f64>> = (0..=d).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
            let fresh_values = ev.batch(&fresh);
            if fresh_values.len() < fresh.len() {
                break;
            }
            vertices = fresh;
            values = fresh_values.into_iter().map(score).collect();
            continue;
        }

        let diameter = vertices[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&vertices[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < 1e-9 {
            break;
        }

        let mut centroid = vec![0.0; d];
        for v in &vertices[..d] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / d as f64;
            }
        }
        let worst = vertices[d].clone();
        let reflected = along(&worst, &centroid, 2.0);
        let Some(fr) = ev.batch(std::slice::from_ref(&reflected)).pop() else {
            break;
        };
        let fr = score(fr);
        if fr < values[0] {
            let expanded = along(&worst, &centroid, 3.0);
            let Some(fe) = ev.batch(std::slice::from_ref(&expanded)).pop() else {
                vertices[d] = reflected;
                values[d] = fr;
                break;
            };
            let fe = score(fe);
            if fe < fr {
                vertices[d] = expanded;
                values[d] = fe;
            } else {
                vertices[d] = reflected;
                values[d] = fr;
            }
        } else if fr < values[d - 1] {
            vertices[d] = reflected;
            values[d] = fr;
        } else {
            let (base, fb) = if fr < values[d] {
                (&reflected, fr)
            } else {
                (&worst, values[d])
            };
            let contracted = along(base, &centroid, 0.5);
            let Some(fc) = ev.batch(std::slice::from_ref(&contracted)).pop() else {
                break;
            };
            let fc = score(fc);
            if fc < fb {
                vertices[d] = contracted;
                values[d] = fc;
            } else {
                let best = vertices[0].clone();
                let shrunk: Vec<Vec<f64>> = vertices[1..].iter().map(|v| along(&best, v, 0.5)).collect();
                let shrunk_values = ev.batch(&shrunk);
                for (k, (v, f)) in shrunk.into_iter().zip(shrunk_values).enumerate() {
                    vertices[k + 1] = v;
                    values[k + 1] = score(f);
                }
            }
        }
    }
}
