use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use terrasim::calibration::calibrate as calibrate_problem;
use terrasim::contact::{self, ModelOptions};
use terrasim::io::compare::{self, Observation};
use terrasim::io::config::{parse_config, write_rig_config};
use terrasim::io::emit::{calibration_json, emit_summary, emit_timeseries};
use terrasim::io::reference::{render, ReferenceDataset};
use terrasim::rig::{self, SpeedSetting};
use terrasim::soil::{GrouserFrequency, ShearForm};
use terrasim::{ModelError, RigError, SlipState, WheelLoads};

create_exception!(terrasim, SimulationError, PyRuntimeError);

fn model_err(e: ModelError) -> PyErr {
    match e {
        ModelError::NotBracketed { .. } | ModelError::NoConvergence { .. } => SimulationError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn rig_err(e: RigError) -> PyErr {
    match e {
        RigError::Config(_) => PyValueError::new_err(e.to_string()),
        _ => SimulationError::new_err(e.to_string()),
    }
}

const SOIL_FIELDS: [&str; 13] = [
    "cohesion",
    "k_c",
    "k_phi",
    "shear_modulus",
    "residual_ratio",
    "n0",
    "n1",
    "unit_weight",
    "friction_angle",
    "k_g",
    "k_a",
    "damping",
    "eta",
];

fn soil_field<'a>(soil: &'a mut terrasim::SoilParameters, name: &str) -> Option<&'a mut f64> {
    Some(match name {
        "cohesion" => &mut soil.cohesion,
        "k_c" => &mut soil.k_c,
        "k_phi" => &mut soil.k_phi,
        "shear_modulus" => &mut soil.shear_modulus,
        "residual_ratio" => &mut soil.residual_ratio,
        "n0" => &mut soil.n0,
        "n1" => &mut soil.n1,
        "unit_weight" => &mut soil.unit_weight,
        "friction_angle" => &mut soil.friction_angle,
        "k_g" => &mut soil.k_g,
        "k_a" => &mut soil.k_a,
        "damping" => &mut soil.damping,
        "eta" => &mut soil.eta,
        _ => return None,
    })
}

/// Soil constants in SI units; angles in radians.
#[pyclass(name = "SoilParameters", module = "terrasim", skip_from_py_object)]
#[derive(Clone)]
struct PySoil {
    inner: terrasim::SoilParameters,
}

#[pymethods]
impl PySoil {
    /// Tuned soil table.
    #[staticmethod]
    fn tuned() -> Self {
        Self {
            inner: ReferenceDataset::bundled().soil_tuned.soil_parameters(),
        }
    }

    /// Initial soil table.
    #[staticmethod]
    fn initial() -> Self {
        Self {
            inner: ReferenceDataset::bundled().soil_initial.soil_parameters(),
        }
    }

    /// Copy with the named fields replaced.
    #[pyo3(signature = (**changes))]
    fn replace(&self, changes: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut soil = self.inner;
        if let Some(changes) = changes {
            for (key, value) in changes.iter() {
                let key: String = key.extract()?;
                let value: f64 = value.extract()?;
                let slot = soil_field(&mut soil, &key)
                    .ok_or_else(|| PyValueError::new_err(format!("unknown soil field `{key}`")))?;
                *slot = value;
            }
        }
        soil.validate().map_err(model_err)?;
        Ok(Self { inner: soil })
    }

    fn __getattr__(&self, name: &str) -> PyResult<f64> {
        let mut soil = self.inner;
        soil_field(&mut soil, name)
            .map(|v| *v)
            .ok_or_else(|| pyo3::exceptions::PyAttributeError::new_err(name.to_string()))
    }

    /// All fields as `{name: value}`.
    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        let mut soil = self.inner;
        for name in SOIL_FIELDS {
            d.set_item(name, *soil_field(&mut soil, name).expect("listed field"))?;
        }
        Ok(d)
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!(
            "SoilParameters(phi={:.3} deg, n0={}, gamma={}, k_g={}, k_a={})",
            s.friction_angle.to_degrees(),
            s.n0,
            s.unit_weight,
            s.k_g,
            s.k_a
        )
    }
}

/// Configuration of one rig experiment.
#[pyclass(name = "RigConfig", module = "terrasim", skip_from_py_object)]
#[derive(Clone)]
struct PyRigConfig {
    inner: rig::RigConfig,
}

fn shear_form(name: &str) -> PyResult<ShearForm> {
    match name {
        "complete" => Ok(ShearForm::Complete),
        "as-printed" => Ok(ShearForm::AsPrinted),
        other => Err(PyValueError::new_err(format!(
            "shear_form must be \"complete\" or \"as-printed\", got {other:?}"
        ))),
    }
}

fn grouser_frequency(name: &str) -> PyResult<GrouserFrequency> {
    match name {
        "passing" => Ok(GrouserFrequency::Passing),
        "as-printed" => Ok(GrouserFrequency::AsPrinted),
        other => Err(PyValueError::new_err(format!(
            "grouser_frequency must be \"passing\" or \"as-printed\", got {other:?}"
        ))),
    }
}

#[pymethods]
impl PyRigConfig {
    #[new]
    #[pyo3(signature = (
        soil, slip, *, load = None, label = None, rim_speed = None, carriage_speed = None,
        timestep = None, duration = None, shear_form = "complete", grouser_frequency = "passing", nodes = None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        soil: PyRef<'_, PySoil>,
        slip: f64,
        load: Option<f64>,
        label: Option<String>,
        rim_speed: Option<f64>,
        carriage_speed: Option<f64>,
        timestep: Option<f64>,
        duration: Option<f64>,
        shear_form: &str,
        grouser_frequency: &str,
        nodes: Option<usize>,
    ) -> PyResult<Self> {
        let mut config = rig::RigConfig::new(soil.inner, slip);
        if let Some(label) = label {
            config.label = label;
        }
        config.speed = match (rim_speed, carriage_speed) {
            (Some(_), Some(_)) => {
                return Err(PyValueError::new_err(
                    "set either rim_speed or carriage_speed, not both",
                ));
            }
            (Some(v), None) => SpeedSetting::Rim(v),
            (None, Some(v)) => SpeedSetting::Carriage(v),
            (None, None) => config.speed,
        };
        config.load = load.unwrap_or(config.load);
        config.timestep = timestep.unwrap_or(config.timestep);
        config.duration = duration.unwrap_or(config.duration);
        config.model = ModelOptions {
            shear_form: self::shear_form(shear_form)?,
            grouser_frequency: self::grouser_frequency(grouser_frequency)?,
            nodes: nodes.unwrap_or(config.model.nodes),
            ..config.model
        };
        config.validate().map_err(rig_err)?;
        Ok(Self { inner: config })
    }

    /// Runs parsed from TOML text: the `[[experiment]]` entries, or the
    /// top-level run when there are none.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Vec<Self>> {
        let config = parse_config(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(config.runs().into_iter().map(|inner| Self { inner }).collect())
    }

    fn to_toml(&self) -> String {
        write_rig_config(&self.inner)
    }

    #[getter]
    fn label(&self) -> &str {
        &self.inner.label
    }

    #[getter]
    fn slip(&self) -> f64 {
        self.inner.slip
    }

    #[getter]
    fn load(&self) -> f64 {
        self.inner.load
    }

    #[getter]
    fn timestep(&self) -> f64 {
        self.inner.timestep
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.duration
    }

    #[getter]
    fn soil(&self) -> PySoil {
        PySoil { inner: self.inner.soil }
    }

    /// Grouser excitation frequency (rad/s).
    #[getter]
    fn grouser_frequency_rad_s(&self) -> f64 {
        self.inner.grouser_frequency()
    }

    fn __repr__(&self) -> String {
        format!(
            "RigConfig(label={:?}, slip={}, load={} N)",
            self.inner.label, self.inner.slip, self.inner.load
        )
    }
}

/// Result of one experiment: the full time series and steady-state statistics.
#[pyclass(name = "ExperimentOutcome", module = "terrasim", frozen, skip_from_py_object)]
struct PyOutcome {
    inner: rig::ExperimentOutcome,
}

#[pymethods]
impl PyOutcome {
    #[getter]
    fn label(&self) -> &str {
        self.inner.label()
    }

    #[getter]
    fn initial_sinkage(&self) -> f64 {
        self.inner.initial_sinkage
    }

    /// Steady-state `{quantity: (mean, sd)}`.
    #[getter]
    fn steady<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = &self.inner.steady;
        let d = PyDict::new(py);
        d.set_item("drawbar_pull", (s.drawbar_pull.mean, s.drawbar_pull.sd))?;
        d.set_item("normal_force", (s.normal_force.mean, s.normal_force.sd))?;
        d.set_item("sinkage", (s.sinkage.mean, s.sinkage.sd))?;
        d.set_item("torque", (s.torque.mean, s.torque.sd))?;
        Ok(d)
    }

    /// Time series as `{column: list}`.
    #[getter]
    fn series<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let series = &self.inner.series;
        let column = |f: fn(&rig::Sample) -> f64| series.iter().map(f).collect::<Vec<f64>>();
        let d = PyDict::new(py);
        d.set_item("t", column(|s| s.time))?;
        d.set_item("sinkage", column(|s| s.sinkage))?;
        d.set_item("sinkage_rate", column(|s| s.sinkage_rate))?;
        d.set_item("normal_force", column(|s| s.normal_force))?;
        d.set_item("drawbar_pull", column(|s| s.drawbar_pull))?;
        d.set_item("torque", column(|s| s.torque))?;
        d.set_item("phase", column(|s| s.phase))?;
        Ok(d)
    }

    fn timeseries_csv(&self) -> String {
        emit_timeseries(&self.inner)
    }

    fn summary_json(&self) -> String {
        emit_summary(std::slice::from_ref(&self.inner))
    }

    fn __len__(&self) -> usize {
        self.inner.series.len()
    }

    fn __repr__(&self) -> String {
        let s = &self.inner.steady;
        format!(
            "ExperimentOutcome(label={:?}, drawbar_pull={:.4} N, sinkage={:.5} m)",
            self.inner.label(),
            s.drawbar_pull.mean,
            s.sinkage.mean
        )
    }
}

fn loads_dict<'py>(py: Python<'py>, loads: &WheelLoads) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("normal_force", loads.normal_force)?;
    d.set_item("drawbar_pull", loads.drawbar_pull)?;
    d.set_item("torque", loads.torque)?;
    Ok(d)
}

/// Default wheel at the default rim speed, at slip `s`.
fn default_slip(slip: f64) -> PyResult<(terrasim::WheelGeometry, SlipState)> {
    let reference = rig::RigConfig::new(ReferenceDataset::bundled().soil_tuned.soil_parameters(), slip);
    let state = reference.slip_state().map_err(model_err)?;
    Ok((reference.wheel, state))
}

/// Wheel loads at a prescribed sinkage on the default wheel.
#[pyfunction]
#[pyo3(signature = (soil, sinkage, slip, phase = 0.0))]
fn loads_at<'py>(
    py: Python<'py>,
    soil: PyRef<'_, PySoil>,
    sinkage: f64,
    slip: f64,
    phase: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let (wheel, state) = default_slip(slip)?;
    let loads =
        contact::loads_at(&soil.inner, &wheel, sinkage, &state, phase, &ModelOptions::default()).map_err(model_err)?;
    loads_dict(py, &loads)
}

/// Sinkage at which the default wheel carries `load`; returns `(sinkage, loads)`.
#[pyfunction]
#[pyo3(signature = (soil, slip, load, phase = 0.0))]
fn solve_equilibrium<'py>(
    py: Python<'py>,
    soil: PyRef<'_, PySoil>,
    slip: f64,
    load: f64,
    phase: f64,
) -> PyResult<(f64, Bound<'py, PyDict>)> {
    let (wheel, state) = default_slip(slip)?;
    let eq = contact::solve_equilibrium_sinkage(&soil.inner, &wheel, &state, load, phase, &ModelOptions::default())
        .map_err(model_err)?;
    Ok((eq.sinkage, loads_dict(py, &eq.loads)?))
}

#[pyfunction]
fn run_experiment(py: Python<'_>, config: PyRef<'_, PyRigConfig>) -> PyResult<PyOutcome> {
    let config = config.inner.clone();
    let inner = py.detach(|| rig::run_experiment(&config)).map_err(rig_err)?;
    Ok(PyOutcome { inner })
}

/// Runs the configs in parallel; raises on the first failure.
#[pyfunction]
fn sweep(py: Python<'_>, configs: Vec<PyRef<'_, PyRigConfig>>) -> PyResult<Vec<PyOutcome>> {
    let configs: Vec<rig::RigConfig> = configs.iter().map(|c| c.inner.clone()).collect();
    let results = py.detach(|| rig::sweep(&configs));
    results
        .into_iter()
        .map(|r| r.map(|inner| PyOutcome { inner }).map_err(rig_err))
        .collect()
}

/// Compares outcomes, matched by label, against the bundled table.
/// Returns `(passed, report_text)`.
#[pyfunction]
#[pyo3(signature = (outcomes, tolerance = 0.15))]
fn compare_reference(outcomes: Vec<PyRef<'_, PyOutcome>>, tolerance: f64) -> (bool, String) {
    let observations: Vec<Observation> = outcomes.iter().map(|o| Observation::from(&o.inner)).collect();
    let report = compare::compare(&observations, ReferenceDataset::bundled(), tolerance);
    (report.passed(), report.to_text())
}

/// Runs the `[calibration]` section of a TOML configuration and returns
/// the report as JSON text.
#[pyfunction]
fn calibrate(py: Python<'_>, config_toml: &str) -> PyResult<String> {
    let config = parse_config(config_toml).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let spec = config
        .calibration
        .ok_or_else(|| PyValueError::new_err("configuration has no [calibration] section"))?;
    let report = py
        .detach(|| calibrate_problem(&spec.problem, &spec.settings))
        .map_err(|e| SimulationError::new_err(e.to_string()))?;
    Ok(calibration_json(&report))
}

/// The bundled reference tables as text.
#[pyfunction]
fn reference_tables() -> String {
    render(ReferenceDataset::bundled())
}

#[pymodule]
#[pyo3(name = "terrasim")]
fn terrasim_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySoil>()?;
    m.add_class::<PyRigConfig>()?;
    m.add_class::<PyOutcome>()?;
    m.add("SimulationError", m.py().get_type::<SimulationError>())?;
    m.add_function(wrap_pyfunction!(loads_at, m)?)?;
    m.add_function(wrap_pyfunction!(solve_equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(compare_reference, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(reference_tables, m)?)?;
    Ok(())
}
