//! Time-domain single-wheel test rig: slip-controlled carriage, vertical
//! wheel dynamics with contact damping, and steady-state statistics.

use std::f64::consts::TAU;

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::contact::{loads_at, solve_equilibrium_sinkage, ModelOptions, WheelLoads};
use crate::error::{ModelError, RigError};
use crate::soil::{grouser_frequency, SlipState, SoilParameters, WheelGeometry};

pub use crate::soil::carriage_speed;

pub const GRAVITY: f64 = 9.81;
/// Minimum number of grouser periods inside the steady-state window.
pub const MIN_STEADY_PERIODS: f64 = 10.0;

/// Which radius turns wheel rate into rim speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum KinematicRadius {
    Rim,
    /// Grouser tips, `R + h_b`.
    #[default]
    Outer,
}

/// The speed the rig holds fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpeedSetting {
    /// Rim speed `omega_w R_ref` (m/s); the carriage follows the slip.
    Rim(f64),
    /// Carriage speed `V` (m/s); the wheel follows the slip.
    Carriage(f64),
}

impl Default for SpeedSetting {
    fn default() -> Self {
        SpeedSetting::Rim(0.03)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigConfig {
    pub label: String,
    pub soil: SoilParameters,
    pub wheel: WheelGeometry,
    /// Target slip, paper convention.
    pub slip: f64,
    pub speed: SpeedSetting,
    pub kinematic_radius: KinematicRadius,
    /// Applied vertical load (N).
    pub load: f64,
    /// Overrides the deadweight mass `load / g` (kg).
    pub effective_mass: Option<f64>,
    pub timestep: f64,
    pub duration: f64,
    /// Trailing fraction of the run used for statistics.
    pub steady_fraction: f64,
    /// Grouser phase shift `Phi` (rad).
    pub phase_shift: f64,
    pub model: ModelOptions,
}

impl RigConfig {
    pub const DEFAULT_DURATION: f64 = 24.0;

    pub fn new(soil: SoilParameters, slip: f64) -> Self {
        Self {
            label: "run".to_string(),
            soil,
            wheel: WheelGeometry::rashid(),
            slip,
            speed: SpeedSetting::default(),
            kinematic_radius: KinematicRadius::Outer,
            load: 60.0,
            effective_mass: None,
            timestep: 1e-3,
            duration: Self::DEFAULT_DURATION,
            steady_fraction: 0.5,
            phase_shift: 0.0,
            model: ModelOptions::default(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn reference_radius(&self) -> f64 {
        match self.kinematic_radius {
            KinematicRadius::Rim => self.wheel.radius,
            KinematicRadius::Outer => self.wheel.outer_radius(),
        }
    }

    pub fn rim_speed(&self) -> f64 {
        match self.speed {
            SpeedSetting::Rim(v) => v,
            SpeedSetting::Carriage(v) => v * (1.0 + self.slip),
        }
    }

    pub fn wheel_rate(&self) -> f64 {
        self.rim_speed() / self.reference_radius()
    }

    pub fn slip_state(&self) -> Result<SlipState, ModelError> {
        SlipState::from_slip(self.slip, self.wheel_rate(), self.reference_radius())
    }

    /// Grouser excitation frequency (rad/s).
    pub fn grouser_frequency(&self) -> f64 {
        grouser_frequency(
            self.wheel_rate(),
            self.wheel.grouser_count,
            self.model.grouser_frequency,
        )
    }

    pub fn mass(&self) -> f64 {
        self.effective_mass.unwrap_or(self.load / GRAVITY)
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.timestep).round() as usize
    }

    /// First sample index of the steady-state window.
    pub fn steady_start(&self) -> usize {
        let n = self.steps();
        n - ((n as f64) * self.steady_fraction).round() as usize
    }

    pub fn validate(&self) -> Result<(), RigError> {
        let cfg = |msg: String| Err(RigError::Config(msg));
        self.soil.validate().map_err(|e| RigError::Config(e.to_string()))?;
        self.wheel.validate().map_err(|e| RigError::Config(e.to_string()))?;
        self.model.validate().map_err(|e| RigError::Config(e.to_string()))?;
        if !(self.timestep > 0.0 && self.timestep.is_finite()) {
            return cfg(format!("timestep must be > 0, got {}", self.timestep));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return cfg(format!("duration must be > 0, got {}", self.duration));
        }
        if self.steps() == 0 {
            return cfg("duration is shorter than one timestep".into());
        }
        if !(self.steady_fraction > 0.0 && self.steady_fraction <= 1.0) {
            return cfg(format!(
                "steady_fraction must lie in (0, 1], got {}",
                self.steady_fraction
            ));
        }
        if !(self.load > 0.0 && self.load.is_finite()) {
            return cfg(format!("load must be > 0, got {}", self.load));
        }
        if let Some(m) = self.effective_mass {
            if !(m > 0.0 && m.is_finite()) {
                return cfg(format!("effective_mass must be > 0, got {m}"));
            }
        }
        if !(self.slip >= 0.0 && self.slip.is_finite()) {
            return cfg(format!("slip must be >= 0 for a driven wheel, got {}", self.slip));
        }
        let (name, speed) = match self.speed {
            SpeedSetting::Rim(v) => ("rim_speed", v),
            SpeedSetting::Carriage(v) => ("carriage_speed", v),
        };
        if !(speed > 0.0 && speed.is_finite()) {
            return cfg(format!("{name} must be > 0, got {speed}"));
        }
        let period = TAU / self.grouser_frequency();
        let window = self.duration * self.steady_fraction;
        if window < MIN_STEADY_PERIODS * period {
            return cfg(format!(
                "steady-state window {window} s holds fewer than {MIN_STEADY_PERIODS} grouser periods of {period:.6} s"
            ));
        }
        Ok(())
    }
}

/// Vertical state of the wheel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigState {
    pub time: f64,
    pub sinkage: f64,
    pub sinkage_rate: f64,
    /// Grouser phase `omega t + Phi` (rad).
    pub phase: f64,
}

/// One row of the experiment time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub sinkage: f64,
    pub sinkage_rate: f64,
    pub normal_force: f64,
    pub drawbar_pull: f64,
    pub torque: f64,
    pub phase: f64,
}

/// Advances the vertical dynamics `m z'' = load - W(z, phase) - C_f z'` by `dt`.
///
/// Velocity first, with the damping term taken at the new velocity, then
/// position from the new velocity. Returns the new state together with the
/// loads sampled at the incoming state.
pub fn step(state: &RigState, config: &RigConfig, dt: f64) -> Result<(RigState, Sample), RigError> {
    let slip = config.slip_state().map_err(|source| RigError::Model {
        time: state.time,
        source,
    })?;
    let loads = loads_at(
        &config.soil,
        &config.wheel,
        state.sinkage,
        &slip,
        state.phase,
        &config.model,
    )
    .map_err(|source| RigError::Model {
        time: state.time,
        source,
    })?;
    let next = advance(state, config, loads.normal_force, config.grouser_frequency(), dt)?;
    Ok((next, sample(state, &loads)))
}

fn advance(state: &RigState, config: &RigConfig, normal_force: f64, omega: f64, dt: f64) -> Result<RigState, RigError> {
    let mass = config.mass();
    let damping = config.soil.damping;
    let rate = (state.sinkage_rate + dt * (config.load - normal_force) / mass) / (1.0 + dt * damping / mass);
    let sinkage = state.sinkage + dt * rate;
    let time = state.time + dt;
    let limit = config.wheel.outer_radius();
    if !(sinkage >= 0.0 && sinkage < limit) {
        return Err(RigError::Divergence { time, sinkage, limit });
    }
    Ok(RigState {
        time,
        sinkage,
        sinkage_rate: rate,
        phase: state.phase + omega * dt,
    })
}

fn sample(state: &RigState, loads: &WheelLoads) -> Sample {
    Sample {
        time: state.time,
        sinkage: state.sinkage,
        sinkage_rate: state.sinkage_rate,
        normal_force: loads.normal_force,
        drawbar_pull: loads.drawbar_pull,
        torque: loads.torque,
        phase: state.phase,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
        if n == 0 {
            return Self::default();
        }
        let mean = sum / n as f64;
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        Self { mean, sd: var.sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SteadyState {
    pub start_time: f64,
    pub samples: usize,
    pub drawbar_pull: Stat,
    pub normal_force: Stat,
    pub sinkage: Stat,
    pub torque: Stat,
}

impl SteadyState {
    pub fn of(series: &[Sample]) -> Self {
        let Some(first) = series.first() else {
            return Self::default();
        };
        Self {
            start_time: first.time,
            samples: series.len(),
            drawbar_pull: Stat::of(series.iter().map(|s| s.drawbar_pull)),
            normal_force: Stat::of(series.iter().map(|s| s.normal_force)),
            sinkage: Stat::of(series.iter().map(|s| s.sinkage)),
            torque: Stat::of(series.iter().map(|s| s.torque)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub config: RigConfig,
    pub initial_sinkage: f64,
    pub series: Vec<Sample>,
    pub steady: SteadyState,
}

impl ExperimentOutcome {
    pub fn label(&self) -> &str {
        &self.config.label
    }

    pub fn steady_series(&self) -> &[Sample] {
        let start = self.config.steady_start().min(self.series.len());
        &self.series[start..]
    }
}

/// Settles the wheel at its zero-slip static equilibrium, then drives it at
/// the configured slip for the configured duration.
pub fn run_experiment(config: &RigConfig) -> Result<ExperimentOutcome, RigError> {
    config.validate()?;
    let model_err = |time: f64| move |source: ModelError| RigError::Model { time, source };
    let radius = config.reference_radius();
    let rest = SlipState::from_slip(0.0, config.wheel_rate(), radius).map_err(model_err(0.0))?;
    config.slip_state().map_err(model_err(0.0))?;
    let initial = solve_equilibrium_sinkage(
        &config.soil,
        &config.wheel,
        &rest,
        config.load,
        config.phase_shift,
        &config.model,
    )
    .map_err(model_err(0.0))?;

    let steps = config.steps();
    let dt = config.timestep;
    let mut series = Vec::with_capacity(steps);
    let mut state = RigState {
        time: 0.0,
        sinkage: initial.sinkage,
        sinkage_rate: 0.0,
        phase: config.phase_shift,
    };
    let omega = config.grouser_frequency();
    for k in 0..steps {
        // Time and phase from the step index so long runs do not accumulate drift.
        state.time = k as f64 * dt;
        state.phase = config.phase_shift + omega * state.time;
        let (next, row) = step(&state, config, dt)?;
        series.push(row);
        state = next;
    }
    let steady = SteadyState::of(&series[config.steady_start()..]);
    Ok(ExperimentOutcome {
        config: config.clone(),
        initial_sinkage: initial.sinkage,
        series,
        steady,
    })
}

/// Runs independent experiments; outcomes keep the order of `configs`.
pub fn sweep(configs: &[RigConfig]) -> Vec<Result<ExperimentOutcome, RigError>> {
    configs.par_iter().map(run_experiment).collect()
}

/// Angular frequency (rad/s) of the largest non-DC spectral bin of a
/// uniformly sampled series, and the bin width (rad/s).
pub fn dominant_frequency(values: &[f64], dt: f64) -> Option<(f64, f64)> {
    let n = values.len();
    if n < 4 || !(dt > 0.0) {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut buffer: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);
    let (bin, _) = buffer[1..=n / 2]
        .iter()
        .enumerate()
        .map(|(k, c)| (k + 1, c.norm_sqr()))
        .fold(
            (0, f64::NEG_INFINITY),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        );
    let width = TAU / (n as f64 * dt);
    Some((bin as f64 * width, width))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuned() -> SoilParameters {
        SoilParameters {
            cohesion: 0.0,
            k_c: 0.63,
            k_phi: 80.0,
            shear_modulus: 0.036,
            residual_ratio: 1.0,
            n0: 1.1,
            n1: 0.0,
            unit_weight: 15620.0,
            unit_weight_variation: None,
            friction_angle: 23f64.to_radians(),
            k_g: 0.07,
            k_a: 0.035,
            damping: 800.0,
            eta: 1.15,
        }
    }

    fn light(slip: f64) -> RigConfig {
        RigConfig {
            load: 9.81,
            ..RigConfig::new(tuned(), slip)
        }
    }

    #[test]
    fn speeds_follow_slip() {
        let config = light(0.25);
        assert!((config.wheel_rate() - 0.5).abs() < 1e-15);
        let v = config.slip_state().unwrap().carriage_speed;
        assert!((v - 0.024).abs() < 1e-15);
        let pinned = RigConfig {
            speed: SpeedSetting::Carriage(0.024),
            ..light(0.25)
        };
        assert!((pinned.rim_speed() - 0.03).abs() < 1e-15);
        assert!((pinned.slip_state().unwrap().carriage_speed - 0.024).abs() < 1e-15);
    }

    #[test]
    fn default_window_holds_ten_grouser_periods() {
        assert!(light(0.0).validate().is_ok());
        let printed = RigConfig {
            model: ModelOptions {
                grouser_frequency: crate::soil::GrouserFrequency::AsPrinted,
                ..ModelOptions::default()
            },
            ..light(0.0)
        };
        assert!(matches!(printed.validate(), Err(RigError::Config(_))));
    }

    #[test]
    fn degenerate_configs_are_rejected() {
        for config in [
            RigConfig {
                duration: 0.0,
                ..light(0.0)
            },
            RigConfig {
                timestep: 0.0,
                ..light(0.0)
            },
            RigConfig {
                load: -1.0,
                ..light(0.0)
            },
            RigConfig {
                slip: -0.1,
                ..light(0.0)
            },
            RigConfig {
                speed: SpeedSetting::Rim(0.0),
                ..light(0.0)
            },
            RigConfig {
                steady_fraction: 0.0,
                ..light(0.0)
            },
        ] {
            assert!(run_experiment(&config).is_err(), "{config:?}");
        }
    }

    #[test]
    fn series_length_matches_duration() {
        let outcome = run_experiment(&light(0.25)).unwrap();
        assert_eq!(outcome.series.len(), 24_000);
        assert_eq!(outcome.steady.samples, 12_000);
        assert!((outcome.steady.start_time - 12.0).abs() < 1e-9);
        assert_eq!(outcome.steady_series().len(), 12_000);
    }

    #[test]
    fn divergence_is_reported_with_time() {
        let soil = SoilParameters {
            damping: 0.0,
            ..tuned()
        };
        let config = RigConfig { soil, ..light(0.0) };
        // Dropped from high above with no damping the wheel punches through.
        let state = RigState {
            time: 1.5,
            sinkage: 0.001,
            sinkage_rate: 60.0,
            phase: 0.0,
        };
        let err = step(&state, &config, 1e-3).unwrap_err();
        assert!(matches!(err, RigError::Divergence { time, .. } if (time - 1.501).abs() < 1e-12));
    }

    #[test]
    fn dominant_frequency_of_sinusoid() {
        let dt = 0.01;
        let omega = 2.0;
        let values: Vec<f64> = (0..10_000).map(|k| 3.0 + (omega * k as f64 * dt).sin()).collect();
        let (found, width) = dominant_frequency(&values, dt).unwrap();
        assert!((found - omega).abs() <= width);
        assert!(dominant_frequency(&[1.0, 2.0], dt).is_none());
    }

    #[test]
    fn empty_sweep() {
        assert!(sweep(&[]).is_empty());
    }
}
