mod common;

use terrasim::calibration::{
    calibrate, objective, sensitivity_scan, weighted_sum, CalibrationProblem, CalibrationSettings, Method,
    SoilParameter, Target, Weights,
};
use terrasim::rig::{run_experiment, sweep};
use terrasim::{RigConfig, SoilParameters};

use common::{initial, light_rig, rel, tuned};

const SLIPS: [f64; 4] = [0.0, 0.25, 0.5, 0.75];

/// A coarser step keeps each objective evaluation cheap.
fn fast_rig() -> RigConfig {
    RigConfig {
        timestep: 4e-3,
        ..light_rig(0.0)
    }
}

fn synthetic_targets(soil: &SoilParameters) -> Vec<Target> {
    let configs: Vec<RigConfig> = SLIPS
        .iter()
        .enumerate()
        .map(|(i, &s)| RigConfig {
            label: format!("S{i}"),
            soil: *soil,
            slip: s,
            ..fast_rig()
        })
        .collect();
    sweep(&configs)
        .into_iter()
        .map(|o| {
            let o = o.unwrap();
            Target {
                label: o.config.label.clone(),
                slip: o.config.slip,
                drawbar_pull: o.steady.drawbar_pull.mean,
                normal_force: o.steady.normal_force.mean,
                sinkage: o.steady.sinkage.mean,
            }
        })
        .collect()
}

fn problem(base: SoilParameters) -> CalibrationProblem {
    CalibrationProblem::new(base, synthetic_targets(&tuned()), fast_rig())
}

#[test]
fn generating_soil_has_zero_objective() {
    let p = problem(tuned());
    let value = objective(&tuned(), &p).unwrap();
    assert_eq!(value.value, 0.0);
    assert!(value
        .residuals
        .iter()
        .all(|r| r.drawbar_pull == 0.0 && r.sinkage == 0.0));
    assert!(objective(&initial(), &p).unwrap().value > 0.0);
}

#[test]
fn objective_is_linear_in_weights() {
    let p = problem(initial());
    let base = objective(&initial(), &p).unwrap();
    let w = p.weights;
    let doubled = Weights {
        drawbar_pull: 2.0 * w.drawbar_pull,
        normal_force: 2.0 * w.normal_force,
        sinkage: 2.0 * w.sinkage,
    };
    assert!(rel(weighted_sum(&base.residuals, &doubled), 2.0 * base.value) < 1e-12);
    let split = |dp: f64, z: f64| {
        weighted_sum(
            &base.residuals,
            &Weights {
                drawbar_pull: dp,
                normal_force: 0.0,
                sinkage: z,
            },
        )
    };
    assert!(rel(split(1.0, 0.0) + split(0.0, 1.0), base.value) < 1e-12);
    let reweighted = CalibrationProblem {
        weights: doubled,
        ..p.clone()
    };
    assert!(rel(objective(&initial(), &reweighted).unwrap().value, 2.0 * base.value) < 1e-12);
}

#[test]
fn no_free_parameters_echoes_base() {
    let p = problem(initial()).with_free(&[]);
    let settings = CalibrationSettings {
        budget: 3,
        sensitivity_step: None,
        ..CalibrationSettings::default()
    };
    let report = calibrate(&p, &settings).unwrap();
    assert_eq!(report.tuned, initial());
    assert_eq!(Some(report.final_objective), report.initial_objective);
}

#[test]
fn recovers_toward_generating_soil() {
    let p = problem(initial());
    for method in [Method::CoordinateDescent, Method::NelderMead] {
        let settings = CalibrationSettings {
            method,
            budget: 80,
            sensitivity_step: None,
            ..CalibrationSettings::default()
        };
        let report = calibrate(&p, &settings).unwrap();
        let start = report.initial_objective.unwrap();
        assert!(
            report.final_objective < 0.5 * start,
            "{method}: {start} -> {}",
            report.final_objective
        );
        assert!(report.tuned.friction_angle < initial().friction_angle, "{method}");
        assert!(report.evaluations <= 80);
        let best: Vec<f64> = report.trace.iter().filter_map(|t| t.best).collect();
        assert!(best.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn sensitivity_of_inactive_and_active_parameters() {
    let p = problem(initial()).with_free(&[
        SoilParameter::Kc,
        SoilParameter::FrictionAngle,
        SoilParameter::UnitWeight,
        SoilParameter::N0,
    ]);
    let coarse = sensitivity_scan(&initial(), &p, 0.05).unwrap();
    let fine = sensitivity_scan(&initial(), &p, 0.025).unwrap();
    let find = |table: &[terrasim::calibration::Sensitivity], q: SoilParameter| {
        *table
            .iter()
            .find(|s| s.parameter == q)
            .unwrap()
            .derivative
            .as_ref()
            .unwrap()
    };
    // Cohesion is zero, so k_c never enters the pressure.
    assert_eq!(find(&coarse, SoilParameter::Kc), 0.0);
    assert_eq!(coarse.last().unwrap().parameter, SoilParameter::Kc);
    for q in [
        SoilParameter::FrictionAngle,
        SoilParameter::UnitWeight,
        SoilParameter::N0,
    ] {
        let (a, b) = (find(&coarse, q), find(&fine, q));
        assert!(a != 0.0);
        assert!(rel(a, b) < 0.1, "{q}: {a} vs {b}");
    }
}

fn steady(soil: SoilParameters, slip: f64) -> (f64, f64) {
    let out = run_experiment(&RigConfig {
        soil,
        slip,
        ..fast_rig()
    })
    .unwrap();
    (out.steady.drawbar_pull.mean, out.steady.sinkage.mean)
}

#[test]
fn drawbar_pull_follows_friction_angle() {
    for s in [0.25, 0.75] {
        let low = SoilParameters {
            friction_angle: 23f64.to_radians(),
            ..initial()
        };
        assert!(steady(low, s).0 < steady(initial(), s).0);
    }
}

#[test]
fn sinkage_falls_with_unit_weight() {
    let heavy = SoilParameters {
        unit_weight: 1.2 * tuned().unit_weight,
        ..tuned()
    };
    assert!(steady(heavy, 0.5).1 < steady(tuned(), 0.5).1);
}
