//! TOML run configuration.
//!
//! ```toml
//! soil = "table2"          # or a [soil] table with `preset` and overrides
//! slip = 0.25
//! rim_speed = 0.03         # m/s; or carriage_speed
//! load = 60                # N
//!
//! [model]
//! shear_form = "complete"  # or "as-printed"
//! phase_shift = 0          # degrees
//!
//! [[experiment]]
//! label = "C3"
//! slip = 0.5
//! ```
//!
//! Units: metres, newtons, seconds, N/m^3, and degrees for every angle.
//! Unknown keys are rejected.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::ops::Range;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

use crate::calibration::{
    CalibrationProblem, CalibrationSettings, FreeParameter, Method, SoilParameter, Target, Weights,
};
use crate::contact::ModelOptions;
use crate::error::{ModelError, RigError};
use crate::io::reference::{Column, ReferenceDataset};
use crate::rig::{KinematicRadius, RigConfig, SpeedSetting};
use crate::soil::{GrouserFrequency, ShearForm, SlipConvention, SoilParameters, WheelGeometry};

/// A configuration error anchored at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Command-line switches that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub shear_form: Option<ShearForm>,
    pub grouser_frequency: Option<GrouserFrequency>,
    pub slip_convention: Option<SlipConvention>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSpec {
    pub problem: CalibrationProblem,
    pub settings: CalibrationSettings,
}

/// A parsed and validated configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    /// The top-level run; also the template of every experiment.
    pub base: RigConfig,
    pub experiments: Vec<RigConfig>,
    pub calibration: Option<CalibrationSpec>,
}

impl Config {
    /// The experiments, or the base run when none are listed.
    pub fn runs(&self) -> Vec<RigConfig> {
        if self.experiments.is_empty() {
            vec![self.base.clone()]
        } else {
            self.experiments.clone()
        }
    }

    /// Serializes the base run and experiment list.
    ///
    /// Experiments are written as label, slip, load and speed; other rig
    /// fields come from the base run.
    pub fn to_toml(&self) -> String {
        let mut out = format!("seed = {}\n", self.seed);
        out.push_str(&write_rig_config(&self.base));
        for e in &self.experiments {
            out.push_str("\n[[experiment]]\n");
            let _ = writeln!(out, "label = {}", quote(&e.label));
            let _ = writeln!(out, "slip = {}", num(e.slip));
            let _ = writeln!(out, "load = {}", num(e.load));
            write_speed(&mut out, e.speed);
        }
        out
    }
}

pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    parse_config_with(text, &Overrides::default())
}

/// Parses a configuration that describes a single run.
pub fn parse_rig_config(text: &str) -> Result<RigConfig, ConfigError> {
    Ok(parse_config(text)?.base)
}

pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<Config, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let offset = e.span().map_or(0, |s| s.start);
        locate(text, offset, e.message().to_string())
    })?;
    Builder {
        text,
        overrides,
        spans: HashMap::new(),
    }
    .build(raw)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    label: Option<Spanned<String>>,
    seed: Option<u64>,
    soil: Option<Spanned<RawSoil>>,
    slip: Option<Spanned<f64>>,
    rim_speed: Option<Spanned<f64>>,
    carriage_speed: Option<Spanned<f64>>,
    kinematic_radius: Option<RawKinematicRadius>,
    load: Option<Spanned<f64>>,
    effective_mass: Option<Spanned<f64>>,
    timestep: Option<Spanned<f64>>,
    duration: Option<Spanned<f64>>,
    steady_fraction: Option<Spanned<f64>>,
    wheel: Option<RawWheel>,
    model: Option<RawModel>,
    #[serde(default, rename = "experiment")]
    experiments: Vec<RawExperiment>,
    calibration: Option<RawCalibration>,
}

enum RawSoil {
    Preset(String),
    Table(Box<RawSoilTable>),
}

impl<'de> Deserialize<'de> for RawSoil {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct SoilVisitor;

        impl<'de> Visitor<'de> for SoilVisitor {
            type Value = RawSoil;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a preset name (\"table1\" or \"table2\") or a soil table")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<RawSoil, E> {
                Ok(RawSoil::Preset(v.to_owned()))
            }

            fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<RawSoil, A::Error> {
                RawSoilTable::deserialize(de::value::MapAccessDeserializer::new(map))
                    .map(|t| RawSoil::Table(Box::new(t)))
            }
        }

        deserializer.deserialize_any(SoilVisitor)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSoilTable {
    preset: Option<Spanned<String>>,
    cohesion: Option<Spanned<f64>>,
    k_c: Option<Spanned<f64>>,
    k_phi: Option<Spanned<f64>>,
    k_w: Option<Spanned<f64>>,
    k_r: Option<Spanned<f64>>,
    n_o: Option<Spanned<f64>>,
    n_1: Option<Spanned<f64>>,
    gamma: Option<Spanned<f64>>,
    d_gamma: Option<Spanned<f64>>,
    phi: Option<Spanned<f64>>,
    k_g: Option<Spanned<f64>>,
    #[serde(alias = "k_0")]
    k_a: Option<Spanned<f64>>,
    c_f: Option<Spanned<f64>>,
    eta: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWheel {
    radius: Option<Spanned<f64>>,
    width: Option<Spanned<f64>>,
    grouser_height: Option<Spanned<f64>>,
    grouser_width: Option<Spanned<f64>>,
    grouser_count: Option<Spanned<u32>>,
    mass: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    shear_form: Option<RawShearForm>,
    grouser_frequency: Option<RawGrouserFrequency>,
    slip_convention: Option<RawSlipConvention>,
    exit_angle: Option<Spanned<f64>>,
    phase_shift: Option<Spanned<f64>>,
    nodes: Option<Spanned<usize>>,
    coupling_iterations: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    label: Option<String>,
    slip: Spanned<f64>,
    load: Option<Spanned<f64>>,
    rim_speed: Option<Spanned<f64>>,
    carriage_speed: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCalibration {
    method: Option<RawMethod>,
    budget: Option<Spanned<usize>>,
    seed: Option<u64>,
    free: Option<Vec<Spanned<String>>>,
    targets: Option<RawColumn>,
    experiments: Option<Vec<Spanned<String>>>,
    weights: Option<RawWeights>,
    bounds: Option<BTreeMap<Spanned<String>, Spanned<[f64; 2]>>>,
    sensitivity_step: Option<Spanned<f64>>,
    #[serde(default, rename = "target")]
    custom_targets: Vec<RawTarget>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    drawbar_pull: Option<f64>,
    normal_force: Option<f64>,
    sinkage: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    label: String,
    slip: f64,
    drawbar_pull: f64,
    normal_force: f64,
    sinkage: f64,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "kebab-case")]
enum RawShearForm {
    Complete,
    AsPrinted,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "kebab-case")]
enum RawGrouserFrequency {
    Passing,
    AsPrinted,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "kebab-case")]
enum RawSlipConvention {
    Paper,
    Conventional,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "kebab-case")]
enum RawKinematicRadius {
    Rim,
    Outer,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "kebab-case")]
enum RawMethod {
    CoordinateDescent,
    NelderMead,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "kebab-case")]
enum RawColumn {
    Sim,
    Exp,
}

struct Builder<'a> {
    text: &'a str,
    overrides: &'a Overrides,
    /// Spans of the keys that domain validation messages refer to.
    spans: HashMap<&'static str, Range<usize>>,
}

impl Builder<'_> {
    fn err(&self, span: Range<usize>, message: impl Into<String>) -> ConfigError {
        locate(self.text, span.start, message.into())
    }

    fn note(&mut self, key: &'static str, value: &Option<Spanned<impl Sized>>) {
        if let Some(v) = value {
            self.spans.insert(key, v.span());
        }
    }

    /// Anchors a domain validation message at the key it names.
    fn anchored(&self, key: &str, message: String) -> ConfigError {
        let span = self.spans.get(key).cloned().unwrap_or(0..0);
        self.err(span, message)
    }

    fn model_error(&self, e: ModelError) -> ConfigError {
        let key = match &e {
            ModelError::InvalidParameter { name, .. } => name,
            ModelError::TooFewNodes { .. } => "nodes",
            _ => "",
        };
        self.anchored(key, e.to_string())
    }

    fn rig_error(&self, e: RigError) -> ConfigError {
        let message = e.to_string();
        let detail = match &e {
            RigError::Config(m) => m.as_str(),
            _ => "",
        };
        let key = detail
            .split(|c: char| !(c.is_alphanumeric() || c == '_'))
            .next()
            .unwrap_or("");
        let key = if detail.starts_with("steady-state window") {
            "duration"
        } else {
            key
        };
        self.anchored(key, message)
    }

    fn build(mut self, raw: RawConfig) -> Result<Config, ConfigError> {
        let reference = ReferenceDataset::bundled();
        let model = self.model(raw.model.as_ref())?;
        let (options, convention, phase_shift) = model;
        let soil = self.soil(raw.soil.as_ref())?;
        let wheel = self.wheel(raw.wheel.as_ref())?;

        let slip = match &raw.slip {
            Some(s) => self.slip(s, convention)?,
            None => 0.0,
        };
        let mut base = RigConfig::new(soil, slip);
        base.wheel = wheel;
        base.model = options;
        base.phase_shift = phase_shift;
        base.label = match &raw.label {
            Some(l) => l.get_ref().clone(),
            None => default_label(reference, slip),
        };
        if let Some(speed) = self.speed(&raw.rim_speed, &raw.carriage_speed)? {
            base.speed = speed;
        }
        if let Some(k) = raw.kinematic_radius {
            base.kinematic_radius = match k {
                RawKinematicRadius::Rim => KinematicRadius::Rim,
                RawKinematicRadius::Outer => KinematicRadius::Outer,
            };
        }
        for (key, slot, value) in [
            ("load", &mut base.load, &raw.load),
            ("timestep", &mut base.timestep, &raw.timestep),
            ("duration", &mut base.duration, &raw.duration),
            ("steady_fraction", &mut base.steady_fraction, &raw.steady_fraction),
        ] {
            if let Some(v) = value {
                self.spans.insert(key, v.span());
                *slot = *v.get_ref();
            }
        }
        self.note("slip", &raw.slip);
        self.note("effective_mass", &raw.effective_mass);
        base.effective_mass = raw.effective_mass.as_ref().map(|m| *m.get_ref());
        base.validate().map_err(|e| self.rig_error(e))?;

        let mut experiments = Vec::with_capacity(raw.experiments.len());
        for e in &raw.experiments {
            let slip = self.slip(&e.slip, convention)?;
            let mut run = base.clone();
            run.slip = slip;
            run.label = e.label.clone().unwrap_or_else(|| default_label(reference, slip));
            if let Some(load) = &e.load {
                self.spans.insert("load", load.span());
                run.load = *load.get_ref();
            }
            if let Some(speed) = self.speed(&e.rim_speed, &e.carriage_speed)? {
                run.speed = speed;
            }
            self.spans.insert("slip", e.slip.span());
            run.validate().map_err(|err| self.rig_error(err))?;
            experiments.push(run);
        }
        for (i, e) in experiments.iter().enumerate() {
            if experiments[..i].iter().any(|o| o.label == e.label) {
                return Err(self.err(
                    raw.experiments[i].slip.span(),
                    format!("duplicate experiment label `{}`", e.label),
                ));
            }
        }

        let seed = raw.seed.unwrap_or(0);
        let calibration = match &raw.calibration {
            Some(c) => Some(self.calibration(c, &base, seed, convention)?),
            None => None,
        };
        Ok(Config {
            seed,
            base,
            experiments,
            calibration,
        })
    }

    fn model(&mut self, raw: Option<&RawModel>) -> Result<(ModelOptions, SlipConvention, f64), ConfigError> {
        let mut options = ModelOptions::default();
        let mut convention = SlipConvention::default();
        let mut phase_shift = 0.0;
        if let Some(m) = raw {
            if let Some(f) = m.shear_form {
                options.shear_form = match f {
                    RawShearForm::Complete => ShearForm::Complete,
                    RawShearForm::AsPrinted => ShearForm::AsPrinted,
                };
            }
            if let Some(f) = m.grouser_frequency {
                options.grouser_frequency = match f {
                    RawGrouserFrequency::Passing => GrouserFrequency::Passing,
                    RawGrouserFrequency::AsPrinted => GrouserFrequency::AsPrinted,
                };
            }
            if let Some(c) = m.slip_convention {
                convention = match c {
                    RawSlipConvention::Paper => SlipConvention::Paper,
                    RawSlipConvention::Conventional => SlipConvention::Conventional,
                };
            }
            if let Some(a) = &m.exit_angle {
                let deg = *a.get_ref();
                if !(deg <= 0.0 && deg > -90.0) {
                    return Err(self.err(a.span(), format!("exit_angle = {deg} deg is out of range (-90, 0]")));
                }
                options.exit_angle = deg.to_radians();
            }
            if let Some(p) = &m.phase_shift {
                let deg = *p.get_ref();
                if !deg.is_finite() {
                    return Err(self.err(p.span(), "phase_shift must be finite"));
                }
                phase_shift = deg.to_radians();
            }
            self.note("nodes", &m.nodes);
            if let Some(n) = &m.nodes {
                options.nodes = *n.get_ref();
            }
            if let Some(k) = m.coupling_iterations {
                options.coupling_iterations = k;
            }
        }
        let o = self.overrides;
        options.shear_form = o.shear_form.unwrap_or(options.shear_form);
        options.grouser_frequency = o.grouser_frequency.unwrap_or(options.grouser_frequency);
        let convention = o.slip_convention.unwrap_or(convention);
        options.validate().map_err(|e| self.model_error(e))?;
        Ok((options, convention, phase_shift))
    }

    fn preset(&self, name: &str, span: Range<usize>) -> Result<SoilParameters, ConfigError> {
        let data = ReferenceDataset::bundled();
        match name {
            "table1" | "initial" => Ok(data.soil_initial.soil_parameters()),
            "table2" | "tuned" => Ok(data.soil_tuned.soil_parameters()),
            other => Err(self.err(
                span,
                format!("unknown soil preset `{other}` (expected \"table1\" or \"table2\")"),
            )),
        }
    }

    fn soil(&mut self, raw: Option<&Spanned<RawSoil>>) -> Result<SoilParameters, ConfigError> {
        let Some(raw) = raw else {
            return self.preset("table2", 0..0);
        };
        let table = match raw.get_ref() {
            RawSoil::Preset(name) => return self.preset(name, raw.span()),
            RawSoil::Table(t) => t,
        };
        self.spans.insert("soil", raw.span());
        let mut soil = match &table.preset {
            Some(p) => self.preset(p.get_ref(), p.span())?,
            None => self.preset("table2", 0..0)?,
        };
        if let Some(phi) = &table.phi {
            let deg = *phi.get_ref();
            if !(0.0..90.0).contains(&deg) {
                return Err(self.err(phi.span(), format!("phi = {deg} deg is out of range [0, 90)")));
            }
            self.spans.insert("phi", phi.span());
            soil.friction_angle = deg.to_radians();
        }
        let fields: [(&'static str, &Option<Spanned<f64>>, &mut f64); 12] = [
            ("cohesion", &table.cohesion, &mut soil.cohesion),
            ("k_c", &table.k_c, &mut soil.k_c),
            ("k_phi", &table.k_phi, &mut soil.k_phi),
            ("k_w", &table.k_w, &mut soil.shear_modulus),
            ("k_r", &table.k_r, &mut soil.residual_ratio),
            ("n_o", &table.n_o, &mut soil.n0),
            ("n_1", &table.n_1, &mut soil.n1),
            ("gamma", &table.gamma, &mut soil.unit_weight),
            ("k_g", &table.k_g, &mut soil.k_g),
            ("k_a", &table.k_a, &mut soil.k_a),
            ("c_f", &table.c_f, &mut soil.damping),
            ("eta", &table.eta, &mut soil.eta),
        ];
        for (key, value, slot) in fields {
            if let Some(v) = value {
                self.spans.insert(key, v.span());
                *slot = *v.get_ref();
            }
        }
        if let Some(d) = &table.d_gamma {
            self.spans.insert("d_gamma", d.span());
            soil.unit_weight_variation = Some(*d.get_ref());
        }
        soil.validate().map_err(|e| self.model_error(e))?;
        Ok(soil)
    }

    fn wheel(&mut self, raw: Option<&RawWheel>) -> Result<WheelGeometry, ConfigError> {
        let mut wheel = ReferenceDataset::bundled().wheel();
        if let Some(w) = raw {
            for (key, value, slot) in [
                ("radius", &w.radius, &mut wheel.radius),
                ("width", &w.width, &mut wheel.width),
                ("grouser_height", &w.grouser_height, &mut wheel.grouser_height),
                ("grouser_width", &w.grouser_width, &mut wheel.grouser_width),
                ("mass", &w.mass, &mut wheel.mass),
            ] {
                if let Some(v) = value {
                    self.spans.insert(key, v.span());
                    *slot = *v.get_ref();
                }
            }
            self.note("grouser_count", &w.grouser_count);
            if let Some(n) = &w.grouser_count {
                wheel.grouser_count = *n.get_ref();
            }
        }
        wheel.validate().map_err(|e| self.model_error(e))?;
        Ok(wheel)
    }

    fn slip(&self, value: &Spanned<f64>, convention: SlipConvention) -> Result<f64, ConfigError> {
        let v = *value.get_ref();
        if !(v >= 0.0 && v.is_finite()) {
            return Err(self.err(value.span(), format!("slip = {v} must be >= 0")));
        }
        convention
            .to_paper(v)
            .map_err(|e| self.err(value.span(), format!("slip = {v}: {e}")))
    }

    fn speed(
        &mut self,
        rim: &Option<Spanned<f64>>,
        carriage: &Option<Spanned<f64>>,
    ) -> Result<Option<SpeedSetting>, ConfigError> {
        match (rim, carriage) {
            (Some(_), Some(c)) => Err(self.err(c.span(), "set either rim_speed or carriage_speed, not both")),
            (Some(r), None) => {
                self.spans.insert("rim_speed", r.span());
                Ok(Some(SpeedSetting::Rim(*r.get_ref())))
            }
            (None, Some(c)) => {
                self.spans.insert("carriage_speed", c.span());
                Ok(Some(SpeedSetting::Carriage(*c.get_ref())))
            }
            (None, None) => Ok(None),
        }
    }

    fn calibration(
        &self,
        raw: &RawCalibration,
        base: &RigConfig,
        seed: u64,
        convention: SlipConvention,
    ) -> Result<CalibrationSpec, ConfigError> {
        let reference = ReferenceDataset::bundled();
        let mut settings = CalibrationSettings {
            seed: raw.seed.unwrap_or(seed),
            ..CalibrationSettings::default()
        };
        if let Some(m) = raw.method {
            settings.method = match m {
                RawMethod::CoordinateDescent => Method::CoordinateDescent,
                RawMethod::NelderMead => Method::NelderMead,
            };
        }
        if let Some(b) = &raw.budget {
            settings.budget = *b.get_ref();
        }
        if let Some(s) = &raw.sensitivity_step {
            let step = *s.get_ref();
            if !(step > 0.0 && step.is_finite()) {
                return Err(self.err(s.span(), format!("sensitivity_step = {step} must be > 0")));
            }
            settings.sensitivity_step = Some(step);
        }

        let column = match raw.targets.unwrap_or(RawColumn::Exp) {
            RawColumn::Sim => Column::Sim,
            RawColumn::Exp => Column::Exp,
        };
        let targets = if raw.custom_targets.is_empty() {
            match &raw.experiments {
                None => reference.targets(column),
                Some(ids) => ids
                    .iter()
                    .map(|id| {
                        reference
                            .experiment(id.get_ref())
                            .map(|e| e.target(column))
                            .ok_or_else(|| self.err(id.span(), format!("unknown experiment `{}`", id.get_ref())))
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            }
        } else {
            raw.custom_targets
                .iter()
                .map(|t| {
                    Ok(Target {
                        label: t.label.clone(),
                        slip: convention
                            .to_paper(t.slip)
                            .map_err(|e| self.err(0..0, format!("target `{}`: {e}", t.label)))?,
                        drawbar_pull: t.drawbar_pull,
                        normal_force: t.normal_force,
                        sinkage: t.sinkage,
                    })
                })
                .collect::<Result<Vec<_>, ConfigError>>()?
        };
        let mut problem = CalibrationProblem::new(base.soil, targets, base.clone());
        if let Some(free) = &raw.free {
            let mut params = Vec::with_capacity(free.len());
            for name in free {
                let p: SoilParameter = name.get_ref().parse().map_err(|e: String| self.err(name.span(), e))?;
                params.push(p);
            }
            problem = problem.with_free(&params);
        }
        if let Some(bounds) = &raw.bounds {
            for (name, range) in bounds {
                let p: SoilParameter = name.get_ref().parse().map_err(|e: String| self.err(name.span(), e))?;
                let [mut lo, mut hi] = *range.get_ref();
                if p == SoilParameter::FrictionAngle {
                    lo = lo.to_radians();
                    hi = hi.to_radians();
                }
                let Some(slot) = problem.free.iter_mut().find(|f| f.parameter == p) else {
                    return Err(self.err(name.span(), format!("bounds given for `{p}`, which is not free")));
                };
                *slot = FreeParameter {
                    parameter: p,
                    lower: lo,
                    upper: hi,
                };
            }
        }
        if let Some(w) = &raw.weights {
            let d = Weights::default();
            problem.weights = Weights {
                drawbar_pull: w.drawbar_pull.unwrap_or(d.drawbar_pull),
                normal_force: w.normal_force.unwrap_or(d.normal_force),
                sinkage: w.sinkage.unwrap_or(d.sinkage),
            };
        }
        problem
            .validate()
            .map_err(|e| self.err(0..0, format!("[calibration]: {e}")))?;
        Ok(CalibrationSpec { problem, settings })
    }
}

fn default_label(reference: &ReferenceDataset, slip: f64) -> String {
    reference
        .experiment_at_slip(slip)
        .map(|e| e.id.clone())
        .unwrap_or_else(|| "run".to_string())
}

fn locate(text: &str, offset: usize, message: String) -> ConfigError {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    ConfigError { line, column, message }
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn quote(s: &str) -> String {
    toml::Value::String(s.to_owned()).to_string()
}

fn write_speed(out: &mut String, speed: SpeedSetting) {
    let _ = match speed {
        SpeedSetting::Rim(v) => writeln!(out, "rim_speed = {}", num(v)),
        SpeedSetting::Carriage(v) => writeln!(out, "carriage_speed = {}", num(v)),
    };
}

/// Serializes a run so that [`parse_rig_config`] reproduces it. Slip is
/// written in the paper convention.
pub fn write_rig_config(config: &RigConfig) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "label = {}", quote(&config.label));
    let _ = writeln!(w, "slip = {}", num(config.slip));
    write_speed(w, config.speed);
    let radius = match config.kinematic_radius {
        KinematicRadius::Rim => "rim",
        KinematicRadius::Outer => "outer",
    };
    let _ = writeln!(w, "kinematic_radius = \"{radius}\"");
    let _ = writeln!(w, "load = {}", num(config.load));
    if let Some(m) = config.effective_mass {
        let _ = writeln!(w, "effective_mass = {}", num(m));
    }
    let _ = writeln!(w, "timestep = {}", num(config.timestep));
    let _ = writeln!(w, "duration = {}", num(config.duration));
    let _ = writeln!(w, "steady_fraction = {}", num(config.steady_fraction));

    let s = &config.soil;
    let _ = writeln!(w, "\n[soil]");
    for (key, value) in [
        ("cohesion", s.cohesion),
        ("k_c", s.k_c),
        ("k_phi", s.k_phi),
        ("k_w", s.shear_modulus),
        ("k_r", s.residual_ratio),
        ("n_o", s.n0),
        ("n_1", s.n1),
        ("gamma", s.unit_weight),
    ] {
        let _ = writeln!(w, "{key} = {}", num(value));
    }
    if let Some(d) = s.unit_weight_variation {
        let _ = writeln!(w, "d_gamma = {}", num(d));
    }
    for (key, value) in [
        ("phi", s.friction_angle.to_degrees()),
        ("k_g", s.k_g),
        ("k_a", s.k_a),
        ("c_f", s.damping),
        ("eta", s.eta),
    ] {
        let _ = writeln!(w, "{key} = {}", num(value));
    }

    let g = &config.wheel;
    let _ = writeln!(w, "\n[wheel]");
    for (key, value) in [
        ("radius", g.radius),
        ("width", g.width),
        ("grouser_height", g.grouser_height),
        ("grouser_width", g.grouser_width),
    ] {
        let _ = writeln!(w, "{key} = {}", num(value));
    }
    let _ = writeln!(w, "grouser_count = {}", g.grouser_count);
    let _ = writeln!(w, "mass = {}", num(g.mass));

    let m = &config.model;
    let _ = writeln!(w, "\n[model]");
    let shear = match m.shear_form {
        ShearForm::Complete => "complete",
        ShearForm::AsPrinted => "as-printed",
    };
    let freq = match m.grouser_frequency {
        GrouserFrequency::Passing => "passing",
        GrouserFrequency::AsPrinted => "as-printed",
    };
    let _ = writeln!(w, "shear_form = \"{shear}\"");
    let _ = writeln!(w, "grouser_frequency = \"{freq}\"");
    let _ = writeln!(w, "slip_convention = \"paper\"");
    let _ = writeln!(w, "exit_angle = {}", num(m.exit_angle.to_degrees()));
    let _ = writeln!(w, "phase_shift = {}", num(config.phase_shift.to_degrees()));
    let _ = writeln!(w, "nodes = {}", m.nodes);
    let _ = writeln!(w, "coupling_iterations = {}", m.coupling_iterations);
    out
}
