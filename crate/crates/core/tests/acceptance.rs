//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use terrasim::calibration::{calibrate, CalibrationProblem, CalibrationSettings};
use terrasim::contact::{loads_at, solve_equilibrium_sinkage, ModelOptions};
use terrasim::io::emit::emit_timeseries;
use terrasim::io::reference::{Column, ReferenceDataset};
use terrasim::rig::{dominant_frequency, run_experiment, sweep};
use terrasim::soil::{
    carriage_speed, grouser_amplitude, shear_ratio, slip_ratio, static_pressure, GrouserFrequency, ShearForm,
};
use terrasim::{ExperimentOutcome, RigConfig, RigError, SoilParameters, WheelGeometry};

use common::{initial, light_rig, rel, tuned, WHEEL_WEIGHT};

const TABLE_TOLERANCE: f64 = 0.15;
const LOAD_TOLERANCE: f64 = 0.02;
const TABLE_BUDGET: Duration = Duration::from_secs(30);
const PRE_TUNING_SOFT: f64 = 0.35;
const OBJECTIVE_REDUCTION: f64 = 0.60;
const CALIBRATION_EVALUATIONS: usize = 500;
const CALIBRATION_BUDGET: Duration = Duration::from_secs(600);
const QUADRATURE_TOLERANCE: f64 = 0.005;
const TIMESTEP_TOLERANCE: f64 = 0.001;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

/// Checks that share a criterion; the criterion passes when all of them do.
#[derive(Default)]
struct Checks(Vec<(bool, String)>);

impl Checks {
    fn check(&mut self, passed: bool, what: impl Into<String>) {
        self.0.push((passed, what.into()));
    }

    fn verdict(self) -> Verdict {
        let passed = self.0.iter().all(|(ok, _)| *ok);
        let failed: Vec<&str> = self.0.iter().filter(|(ok, _)| !ok).map(|(_, s)| s.as_str()).collect();
        let detail = if passed {
            format!("{} checks", self.0.len())
        } else {
            failed.join("; ")
        };
        Verdict::new(passed, detail)
    }
}

fn table_runs() -> (Result<Vec<ExperimentOutcome>, RigError>, Duration) {
    let data = ReferenceDataset::bundled();
    let configs = data.rig_configs(&tuned());
    let start = Instant::now();
    let outcomes: Result<Vec<_>, _> = sweep(&configs).into_iter().collect();
    (outcomes, start.elapsed())
}

fn criterion_1(runs: &(Result<Vec<ExperimentOutcome>, RigError>, Duration)) -> Verdict {
    let (outcomes, elapsed) = runs;
    let outcomes = match outcomes {
        Ok(o) => o,
        Err(e) => return Verdict::new(false, format!("run failed: {e}")),
    };
    let data = ReferenceDataset::bundled();
    let mut checks = Checks::default();
    checks.check(*elapsed < TABLE_BUDGET, format!("runtime {elapsed:.1?}"));
    for o in outcomes {
        let e = data.experiment(o.label()).expect("reference label");
        let s = &o.steady;
        let dp = rel(s.drawbar_pull.mean, e.drawbar_pull.sim);
        let z = rel(s.sinkage.mean, e.sinkage.sim);
        let w = rel(s.normal_force.mean, o.config.load);
        checks.check(
            dp <= TABLE_TOLERANCE,
            format!("{} DP {:.3} N off by {:.1}%", e.id, s.drawbar_pull.mean, 100.0 * dp),
        );
        checks.check(
            z <= TABLE_TOLERANCE,
            format!("{} z {:.5} m off by {:.1}%", e.id, s.sinkage.mean, 100.0 * z),
        );
        checks.check(w <= LOAD_TOLERANCE, format!("{} W off load by {:.2}%", e.id, 100.0 * w));
    }
    checks.verdict()
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn criterion_2(runs: &(Result<Vec<ExperimentOutcome>, RigError>, Duration)) -> Verdict {
    let outcomes = match &runs.0 {
        Ok(o) => o,
        Err(e) => return Verdict::new(false, format!("run failed: {e}")),
    };
    trend_verdict(outcomes)
}

fn trend_verdict(outcomes: &[ExperimentOutcome]) -> Verdict {
    let mut sorted: Vec<&ExperimentOutcome> = outcomes.iter().collect();
    sorted.sort_by(|a, b| a.config.slip.total_cmp(&b.config.slip));
    let dp: Vec<f64> = sorted.iter().map(|o| o.steady.drawbar_pull.mean).collect();
    let z: Vec<f64> = sorted.iter().map(|o| o.steady.sinkage.mean).collect();
    let w: Vec<f64> = sorted.iter().map(|o| o.steady.normal_force.mean).collect();
    let (lo, hi) = w
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let spread = (hi - lo) / lo;
    let mut checks = Checks::default();
    checks.check(strictly_increasing(&dp), format!("DP not increasing {dp:.4?}"));
    checks.check(strictly_increasing(&z), format!("sinkage not increasing {z:.6?}"));
    checks.check(spread < LOAD_TOLERANCE, format!("W spread {:.2}%", 100.0 * spread));
    checks.verdict()
}

fn criterion_3() -> Verdict {
    let pre = &ReferenceDataset::bundled().pre_tuning;
    let config = RigConfig::new(initial(), 0.25).with_label(pre.experiment.clone());
    let outcome = match run_experiment(&config) {
        Ok(o) => o,
        Err(e) => return Verdict::new(false, format!("run failed: {e}")),
    };
    let dp = outcome.steady.drawbar_pull.mean;
    let z = outcome.steady.sinkage.mean;
    let mut checks = Checks::default();
    checks.check(
        dp < pre.drawbar_pull.exp,
        format!("DP {dp:.3} N not below {}", pre.drawbar_pull.exp),
    );
    checks.check(z < pre.sinkage.exp, format!("z {z:.5} m not below {}", pre.sinkage.exp));
    let soft_dp = rel(dp, pre.drawbar_pull.sim) <= PRE_TUNING_SOFT;
    let soft_z = rel(z, pre.sinkage.sim) <= PRE_TUNING_SOFT;
    let mut verdict = checks.verdict();
    verdict.detail.push_str(&format!(
        " (DP {dp:.3} N vs {} soft {}, z {z:.5} m vs {} soft {})",
        pre.drawbar_pull.sim,
        if soft_dp { "ok" } else { "off" },
        pre.sinkage.sim,
        if soft_z { "ok" } else { "off" },
    ));
    verdict
}

fn criterion_4() -> Verdict {
    let data = ReferenceDataset::bundled();
    let problem = CalibrationProblem::new(initial(), data.targets(Column::Exp), RigConfig::new(initial(), 0.0));
    let settings = CalibrationSettings {
        budget: CALIBRATION_EVALUATIONS,
        sensitivity_step: None,
        ..CalibrationSettings::default()
    };
    let start = Instant::now();
    let report = match calibrate(&problem, &settings) {
        Ok(r) => r,
        Err(e) => return Verdict::new(false, format!("calibration failed: {e}")),
    };
    let elapsed = start.elapsed();
    let mut checks = Checks::default();
    match report.initial_objective {
        Some(j0) => {
            let reduction = 1.0 - report.final_objective / j0;
            checks.check(
                reduction >= OBJECTIVE_REDUCTION,
                format!("objective {j0:.4} -> {:.4} ({:.0}% reduction)", report.final_objective, 100.0 * reduction),
            );
        }
        None => checks.check(
            false,
            format!(
                "starting soil failed to evaluate; best objective {:.4}, {} of {} evaluations failed, tuned n_o {:.3}, gamma {:.0}",
                report.final_objective,
                report.failed_evaluations,
                report.evaluations,
                report.tuned.n0,
                report.tuned.unit_weight
            ),
        ),
    }
    checks.check(
        report.evaluations <= CALIBRATION_EVALUATIONS,
        format!("{} evaluations", report.evaluations),
    );
    checks.check(
        report.tuned.friction_angle < initial().friction_angle,
        format!(
            "phi {:.2} deg did not decrease",
            report.tuned.friction_angle.to_degrees()
        ),
    );
    checks.check(elapsed < CALIBRATION_BUDGET, format!("runtime {elapsed:.1?}"));
    checks.verdict()
}

fn criterion_5() -> Verdict {
    let mut checks = Checks::default();
    for kr in [1.0, 0.6] {
        let soil = SoilParameters {
            residual_ratio: kr,
            ..tuned()
        };
        let kw = soil.shear_modulus;
        let at = |j: f64| shear_ratio(&soil, j, ShearForm::Complete).unwrap();
        checks.check(
            (at(kw) - 1.0).abs() <= 1e-12,
            format!("ratio at K_w is {} for K_r {kr}", at(kw)),
        );
        checks.check(at(0.0) == 0.0, format!("ratio at 0 is {}", at(0.0)));
        checks.check(
            (at(50.0 * kw) - kr).abs() <= 1e-9,
            format!("ratio at 50 K_w is {}", at(50.0 * kw)),
        );
    }

    let wheel = WheelGeometry::rashid();
    for soil in [initial(), tuned()] {
        let p: Vec<f64> = (0..=200)
            .map(|k| static_pressure(&soil, &wheel, 0.05 * k as f64 / 200.0, 0.3))
            .collect();
        checks.check(p.windows(2).all(|w| w[1] > w[0]), "static pressure not monotone in z");
    }

    let mut worst: f64 = 0.0;
    for s in [-0.5, 0.0, 0.25, 0.5, 0.75, 1.5] {
        for (rate, radius) in [(0.5, 0.06), (2.0, 0.07)] {
            let v = carriage_speed(s, rate, radius).unwrap();
            worst = worst.max((slip_ratio(rate, radius, v).unwrap() - s).abs());
        }
    }
    checks.check(worst <= 1e-12, format!("slip round trip error {worst:e}"));

    let soil = tuned();
    let a = grouser_amplitude(&soil, 3000.0, 0.02).total();
    let stress_doubled = grouser_amplitude(&soil, 6000.0, 0.02);
    let length_doubled = grouser_amplitude(&soil, 3000.0, 0.04);
    let base = grouser_amplitude(&soil, 3000.0, 0.02);
    checks.check(
        rel(stress_doubled.stress, 2.0 * base.stress) < 1e-12 && stress_doubled.density == base.density,
        "amplitude not linear in stress",
    );
    checks.check(
        rel(length_doubled.density, 2.0 * base.density) < 1e-12 && length_doubled.stress == base.stress,
        "amplitude not linear in contact length",
    );
    let scaled = SoilParameters {
        k_g: 3.0 * soil.k_g,
        k_a: 3.0 * soil.k_a,
        ..soil
    };
    checks.check(
        rel(grouser_amplitude(&scaled, 3000.0, 0.02).total(), 3.0 * a) < 1e-12,
        "amplitude not linear in coefficients",
    );
    checks.verdict()
}

fn steady_means(config: &RigConfig) -> Result<[f64; 4], RigError> {
    let s = run_experiment(config)?.steady;
    Ok([s.drawbar_pull.mean, s.normal_force.mean, s.sinkage.mean, s.torque.mean])
}

fn criterion_6() -> Verdict {
    let mut checks = Checks::default();
    let wheel = WheelGeometry::rashid();
    let mut worst_quadrature: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for soil in [initial(), tuned()] {
        for s in [0.0, 0.25, 0.5, 0.75] {
            let config = RigConfig { soil, ..light_rig(s) };
            let slip = config.slip_state().unwrap();
            let eq = solve_equilibrium_sinkage(&soil, &wheel, &slip, WHEEL_WEIGHT, 0.0, &config.model).unwrap();
            let allowed = config.model.tolerance.for_load(WHEEL_WEIGHT);
            let residual = (eq.loads.normal_force - WHEEL_WEIGHT).abs();
            worst_residual = worst_residual.max(residual / allowed);
            checks.check(residual <= allowed, format!("residual {residual:e} N at s {s}"));
            let fine = ModelOptions {
                nodes: 2 * config.model.nodes,
                ..config.model
            };
            let a = loads_at(&soil, &wheel, eq.sinkage, &slip, 0.0, &config.model).unwrap();
            let b = loads_at(&soil, &wheel, eq.sinkage, &slip, 0.0, &fine).unwrap();
            for (x, y) in [
                (a.normal_force, b.normal_force),
                (a.drawbar_pull, b.drawbar_pull),
                (a.torque, b.torque),
            ] {
                worst_quadrature = worst_quadrature.max(rel(x, y));
            }
        }
    }
    checks.check(
        worst_quadrature < QUADRATURE_TOLERANCE,
        format!("quadrature change {:.3}%", 100.0 * worst_quadrature),
    );

    let mut worst_dt: f64 = 0.0;
    for s in [0.0, 0.5] {
        let base = light_rig(s);
        let halved = RigConfig {
            timestep: 0.5 * base.timestep,
            ..base.clone()
        };
        match (steady_means(&base), steady_means(&halved)) {
            (Ok(a), Ok(b)) => {
                for (x, y) in a.iter().zip(&b) {
                    worst_dt = worst_dt.max(rel(*x, *y));
                }
            }
            (Err(e), _) | (_, Err(e)) => checks.check(false, format!("run failed: {e}")),
        }
    }
    checks.check(
        worst_dt < TIMESTEP_TOLERANCE,
        format!("timestep halving change {:.4}%", 100.0 * worst_dt),
    );

    let config = light_rig(0.25).with_label("C2");
    let csv = |c: &RigConfig| run_experiment(c).map(|o| emit_timeseries(&o));
    match (csv(&config), csv(&config.clone())) {
        (Ok(a), Ok(b)) => checks.check(a == b, "time series CSV differs between identical runs"),
        (Err(e), _) | (_, Err(e)) => checks.check(false, format!("run failed: {e}")),
    }
    let mut verdict = checks.verdict();
    if verdict.passed {
        verdict.detail = format!(
            "quadrature {:.3}%, timestep {:.4}%, residual {:.2} of tolerance",
            100.0 * worst_quadrature,
            100.0 * worst_dt,
            worst_residual
        );
    }
    verdict
}

fn spectral_check(convention: GrouserFrequency) -> Result<(f64, f64, f64), RigError> {
    let mut config = light_rig(0.25);
    config.model.grouser_frequency = convention;
    let period = std::f64::consts::TAU / config.grouser_frequency();
    // Twenty periods in the run, so the steady half holds ten.
    config.duration = config.duration.max(20.0 * period);
    let outcome = run_experiment(&config)?;
    let dp: Vec<f64> = outcome.steady_series().iter().map(|s| s.drawbar_pull).collect();
    let (found, width) = dominant_frequency(&dp, config.timestep).expect("series long enough");
    Ok((config.grouser_frequency(), found, width))
}

fn criterion_7() -> Verdict {
    let mut checks = Checks::default();
    let mut details = Vec::new();
    for convention in [GrouserFrequency::Passing, GrouserFrequency::AsPrinted] {
        match spectral_check(convention) {
            Ok((expected, found, width)) => {
                details.push(format!("{convention:?} {found:.4} vs {expected:.4} rad/s"));
                checks.check(
                    (found - expected).abs() <= width,
                    format!("{convention:?}: peak {found:.4} rad/s, expected {expected:.4} (bin {width:.4})"),
                );
            }
            Err(e) => checks.check(false, format!("{convention:?}: run failed: {e}")),
        }
    }
    let mut verdict = checks.verdict();
    if verdict.passed {
        verdict.detail = details.join(", ");
    }
    verdict
}

type Criterion<'a> = Box<dyn Fn() -> Verdict + 'a>;

fn main() -> ExitCode {
    let runs = table_runs();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("table regression", Box::new(|| criterion_1(&runs))),
        ("slip trends", Box::new(|| criterion_2(&runs))),
        ("pre-tuning gap", Box::new(criterion_3)),
        ("calibration improvement", Box::new(criterion_4)),
        ("constitutive properties", Box::new(criterion_5)),
        ("numerical hygiene", Box::new(criterion_6)),
        ("spectral check", Box::new(criterion_7)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = run();
        let status = if verdict.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {} {name}: {status}: {} [{:.1?}]",
            i + 1,
            verdict.detail,
            start.elapsed()
        );
        failed += usize::from(!verdict.passed);
    }

    // Same trend checks at a load the soil can carry.
    let light: Result<Vec<_>, _> = sweep(&[0.0, 0.25, 0.5, 0.75].map(light_rig)).into_iter().collect();
    if let Ok(light) = light {
        let v = trend_verdict(&light);
        println!(
            "note: slip trends at {WHEEL_WEIGHT} N load: {}: {}",
            if v.passed { "pass" } else { "fail" },
            v.detail
        );
    }

    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
