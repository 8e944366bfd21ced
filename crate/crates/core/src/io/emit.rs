//! CSV and JSON writers for experiment outcomes.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::calibration::{CalibrationReport, SoilParameter, TraceEntry};
use crate::io::format::{fmt_g, round_significant};
use crate::io::manifest::FORMAT_VERSION;
use crate::io::reference::ReferenceDataset;
use crate::rig::{ExperimentOutcome, KinematicRadius, RigConfig, Sample, SpeedSetting, Stat};
use crate::soil::{GrouserFrequency, ShearForm, SoilParameters};

pub const TIMESERIES_COLUMNS: [&str; 7] = [
    "t_s",
    "sinkage_m",
    "sinkage_rate_m_s",
    "normal_force_N",
    "drawbar_pull_N",
    "torque_Nm",
    "grouser_phase_rad",
];

pub const SLIP_CURVE_COLUMNS: [&str; 10] = [
    "label",
    "slip",
    "drawbar_pull_mean_N",
    "drawbar_pull_sd_N",
    "normal_force_mean_N",
    "normal_force_sd_N",
    "sinkage_mean_m",
    "sinkage_sd_m",
    "torque_mean_Nm",
    "torque_sd_Nm",
];

pub const TRACE_COLUMNS: [&str; 3] = ["evaluation", "objective", "best"];

pub const REFERENCE_CURVE_COLUMNS: [&str; 8] = [
    "id",
    "slip",
    "drawbar_pull_sim_N",
    "drawbar_pull_exp_N",
    "normal_force_sim_N",
    "normal_force_exp_N",
    "sinkage_sim_m",
    "sinkage_exp_m",
];

/// Full time series of one run.
pub fn emit_timeseries(outcome: &ExperimentOutcome) -> String {
    timeseries_csv(&outcome.series)
}

pub fn timeseries_csv(series: &[Sample]) -> String {
    let mut out = TIMESERIES_COLUMNS.join(",");
    out.push('\n');
    for s in series {
        let row = [
            s.time,
            s.sinkage,
            s.sinkage_rate,
            s.normal_force,
            s.drawbar_pull,
            s.torque,
            s.phase,
        ];
        push_row(&mut out, row.iter().map(|&v| fmt_g(v)));
    }
    out
}

/// Steady-state means against slip, one row per outcome in slip order.
pub fn slip_curve_csv(outcomes: &[ExperimentOutcome]) -> String {
    let mut sorted: Vec<&ExperimentOutcome> = outcomes.iter().collect();
    sorted.sort_by(|a, b| a.config.slip.total_cmp(&b.config.slip));
    let mut out = SLIP_CURVE_COLUMNS.join(",");
    out.push('\n');
    for o in sorted {
        let s = &o.steady;
        let mut cells = vec![csv_text(o.label()), fmt_g(o.config.slip)];
        for stat in [s.drawbar_pull, s.normal_force, s.sinkage, s.torque] {
            cells.push(fmt_g(stat.mean));
            cells.push(fmt_g(stat.sd));
        }
        push_row(&mut out, cells.into_iter());
    }
    out
}

/// Steady-state statistics and the full configuration of every outcome.
pub fn emit_summary(outcomes: &[ExperimentOutcome]) -> String {
    let experiments: Vec<Value> = outcomes.iter().map(outcome_json).collect();
    let doc = json!({
        "format": FORMAT_VERSION,
        "experiments": experiments,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("summary serializes");
    text.push('\n');
    text
}

pub fn outcome_json(outcome: &ExperimentOutcome) -> Value {
    let s = &outcome.steady;
    json!({
        "label": outcome.label(),
        "slip": number(outcome.config.slip),
        "initial_sinkage_m": number(outcome.initial_sinkage),
        "samples": outcome.series.len(),
        "steady": {
            "start_time_s": number(s.start_time),
            "samples": s.samples,
            "drawbar_pull_N": stat(s.drawbar_pull),
            "normal_force_N": stat(s.normal_force),
            "sinkage_m": stat(s.sinkage),
            "torque_Nm": stat(s.torque),
        },
        "config": config_json(&outcome.config),
    })
}

/// Configuration echo in boundary units (degrees for angles).
pub fn config_json(config: &RigConfig) -> Value {
    let soil = &config.soil;
    let wheel = &config.wheel;
    let model = &config.model;
    let mut speed = Map::new();
    match config.speed {
        SpeedSetting::Rim(v) => speed.insert("rim_speed".into(), number(v)),
        SpeedSetting::Carriage(v) => speed.insert("carriage_speed".into(), number(v)),
    };
    json!({
        "label": config.label,
        "slip": number(config.slip),
        "speed": speed,
        "kinematic_radius": match config.kinematic_radius {
            KinematicRadius::Rim => "rim",
            KinematicRadius::Outer => "outer",
        },
        "load": number(config.load),
        "mass": number(config.mass()),
        "timestep": number(config.timestep),
        "duration": number(config.duration),
        "steady_fraction": number(config.steady_fraction),
        "phase_shift_deg": number(config.phase_shift.to_degrees()),
        "grouser_frequency_rad_s": number(config.grouser_frequency()),
        "soil": soil_json(soil),
        "wheel": {
            "radius": number(wheel.radius),
            "width": number(wheel.width),
            "grouser_height": number(wheel.grouser_height),
            "grouser_width": number(wheel.grouser_width),
            "grouser_count": wheel.grouser_count,
            "mass": number(wheel.mass),
        },
        "model": {
            "shear_form": match model.shear_form {
                ShearForm::Complete => "complete",
                ShearForm::AsPrinted => "as-printed",
            },
            "grouser_frequency": match model.grouser_frequency {
                GrouserFrequency::Passing => "passing",
                GrouserFrequency::AsPrinted => "as-printed",
            },
            "exit_angle_deg": number(model.exit_angle.to_degrees()),
            "nodes": model.nodes,
            "coupling_iterations": model.coupling_iterations,
        },
    })
}

pub fn soil_json(soil: &SoilParameters) -> Value {
    json!({
        "cohesion": number(soil.cohesion),
        "k_c": number(soil.k_c),
        "k_phi": number(soil.k_phi),
        "k_w": number(soil.shear_modulus),
        "k_r": number(soil.residual_ratio),
        "n_o": number(soil.n0),
        "n_1": number(soil.n1),
        "gamma": number(soil.unit_weight),
        "d_gamma": number(soil.density_variation()),
        "phi_deg": number(soil.friction_angle.to_degrees()),
        "k_g": number(soil.k_g),
        "k_a": number(soil.k_a),
        "c_f": number(soil.damping),
        "eta": number(soil.eta),
    })
}

/// Parameter value in boundary units (degrees for the friction angle).
fn boundary_value(parameter: SoilParameter, value: f64) -> f64 {
    match parameter {
        SoilParameter::FrictionAngle => value.to_degrees(),
        _ => value,
    }
}

/// Objective history; failed evaluations leave the objective cell empty.
pub fn trace_csv(trace: &[TraceEntry]) -> String {
    let mut out = TRACE_COLUMNS.join(",");
    out.push('\n');
    let cell = |v: Option<f64>| v.map(fmt_g).unwrap_or_default();
    for t in trace {
        push_row(
            &mut out,
            [t.evaluation.to_string(), cell(t.objective), cell(t.best)].into_iter(),
        );
    }
    out
}

pub fn calibration_json(report: &CalibrationReport) -> String {
    let free: Vec<Value> = report
        .free
        .iter()
        .map(|f| {
            let p = f.parameter;
            json!({
                "parameter": p.key(),
                "lower": number(boundary_value(p, f.lower)),
                "upper": number(boundary_value(p, f.upper)),
                "initial": number(boundary_value(p, p.get(&report.base))),
                "tuned": number(boundary_value(p, p.get(&report.tuned))),
            })
        })
        .collect();
    let residuals: Vec<Value> = report
        .residuals
        .iter()
        .map(|r| {
            json!({
                "label": r.label,
                "drawbar_pull_N": number(r.simulated_drawbar_pull),
                "normal_force_N": number(r.simulated_normal_force),
                "sinkage_m": number(r.simulated_sinkage),
                "relative_error": {
                    "drawbar_pull": number(r.drawbar_pull),
                    "normal_force": number(r.normal_force),
                    "sinkage": number(r.sinkage),
                },
            })
        })
        .collect();
    let sensitivity: Vec<Value> = report
        .sensitivity
        .iter()
        .map(|s| match &s.derivative {
            Ok(d) => json!({ "parameter": s.parameter.key(), "d_objective_d_log": number(*d) }),
            Err(e) => json!({ "parameter": s.parameter.key(), "error": e.to_string() }),
        })
        .collect();
    let doc = json!({
        "format": FORMAT_VERSION,
        "method": report.method.to_string(),
        "evaluations": report.evaluations,
        "failed_evaluations": report.failed_evaluations,
        "initial_objective": report.initial_objective.map(number),
        "final_objective": number(report.final_objective),
        "free": free,
        "residuals": residuals,
        "sensitivity": sensitivity,
        "base_soil": soil_json(&report.base),
        "tuned_soil": soil_json(&report.tuned),
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    text
}

/// Bundled Sim and Exp means against slip, for overlay on a slip curve.
pub fn reference_curve_csv(data: &ReferenceDataset) -> String {
    let mut out = REFERENCE_CURVE_COLUMNS.join(",");
    out.push('\n');
    for e in &data.experiments {
        let mut cells = vec![csv_text(&e.id), fmt_g(e.slip)];
        for v in [e.drawbar_pull, e.normal_force, e.sinkage] {
            cells.push(fmt_g(v.sim));
            cells.push(fmt_g(v.exp));
        }
        push_row(&mut out, cells.into_iter());
    }
    out
}

/// A JSON number rounded to the emitted precision; non-finite values
/// become `null`.
pub fn number(v: f64) -> Value {
    serde_json::Number::from_f64(round_significant(v)).map_or(Value::Null, Value::Number)
}

fn stat(s: Stat) -> Value {
    json!({ "mean": number(s.mean), "sd": number(s.sd) })
}

fn push_row(out: &mut String, cells: impl Iterator<Item = String>) {
    for (i, cell) in cells.enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{cell}");
    }
    out.push('\n');
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
