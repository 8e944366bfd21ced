//! Rigid-wheel contact patch: discretised normal and shear stress profiles,
//! their resolution into wheel loads, and the static sinkage equilibrium.
//!
//! Angles are measured from the downward vertical through the axle,
//! positive towards the direction of travel. The patch spans
//! `[theta_r, theta_f]` on the grouser-tip circle `R_o = R + h_b`.

use crate::error::ModelError;
use crate::soil::{
    grouser_amplitude, grouser_wavenumber, shear_ratio_unchecked, sinkage_exponent, GrouserFrequency, ShearForm,
    SlipState, SoilParameters, WheelGeometry,
};

pub const MIN_NODES: usize = 16;
pub const DEFAULT_NODES: usize = 128;

/// Upper end of the bisection bracket, as a fraction of `R_o`.
const BRACKET_FRACTION: f64 = 1.0 - 1e-6;
const MAX_BISECTIONS: usize = 200;

/// Stopping rule for the equilibrium solve: `|W - load| <= max(abs, rel * load)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceTolerance {
    pub absolute: f64,
    pub relative: f64,
}

impl ForceTolerance {
    pub fn for_load(&self, load: f64) -> f64 {
        self.absolute.max(self.relative * load)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            absolute: self.absolute * factor,
            relative: self.relative * factor,
        }
    }
}

impl Default for ForceTolerance {
    fn default() -> Self {
        Self {
            absolute: 1e-6,
            relative: 1e-6,
        }
    }
}

/// Model switches shared by the contact solver and the rig.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    pub shear_form: ShearForm,
    pub grouser_frequency: GrouserFrequency,
    /// Exit angle `theta_r` (rad, <= 0).
    pub exit_angle: f64,
    pub nodes: usize,
    /// Extra fixed-point passes of the amplitude coupling; 0 is one-pass.
    pub coupling_iterations: usize,
    pub tolerance: ForceTolerance,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            shear_form: ShearForm::Complete,
            grouser_frequency: GrouserFrequency::Passing,
            exit_angle: 0.0,
            nodes: DEFAULT_NODES,
            coupling_iterations: 0,
            tolerance: ForceTolerance::default(),
        }
    }
}

impl ModelOptions {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.nodes < MIN_NODES {
            return Err(ModelError::TooFewNodes {
                got: self.nodes,
                min: MIN_NODES,
            });
        }
        if !(self.exit_angle <= 0.0 && self.exit_angle > -std::f64::consts::FRAC_PI_2) {
            return Err(ModelError::InvalidParameter {
                name: "exit_angle",
                value: self.exit_angle,
                reason: "must lie in (-pi/2, 0]",
            });
        }
        if !(self.tolerance.absolute > 0.0 && self.tolerance.relative >= 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "tolerance",
                value: self.tolerance.absolute,
                reason: "absolute tolerance must be > 0",
            });
        }
        Ok(())
    }
}

/// Discretised wheel-soil contact.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContactPatch {
    /// Sinkage of the grouser tips below the undisturbed surface (m).
    pub sinkage: f64,
    pub entry_angle: f64,
    pub exit_angle: f64,
    /// Grouser tip radius used for geometry and moment arms (m).
    pub radius: f64,
    /// Grouser oscillation amplitude applied to the profile (Pa).
    pub amplitude: f64,
    pub angles: Vec<f64>,
    pub node_sinkage: Vec<f64>,
    pub normal_stress: Vec<f64>,
    pub shear_displacement: Vec<f64>,
    pub shear_stress: Vec<f64>,
    pub mean_peak_stress: f64,
    pub contact_length: f64,
}

impl ContactPatch {
    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Normal force, drawbar pull and driving torque on the wheel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelLoads {
    pub normal_force: f64,
    pub drawbar_pull: f64,
    pub torque: f64,
}

/// Mean of the nodal normal stress; zero for an empty patch.
pub fn mean_peak_stress(patch: &ContactPatch) -> f64 {
    mean(&patch.normal_stress)
}

/// Contact arc length `R_o (theta_f - theta_r)`; zero for an empty patch.
pub fn contact_length(patch: &ContactPatch) -> f64 {
    if patch.is_empty() {
        0.0
    } else {
        patch.radius * (patch.entry_angle - patch.exit_angle)
    }
}

/// Entry angle on a circle of radius `r` for sinkage `z < r`.
pub fn entry_angle(sinkage: f64, radius: f64) -> f64 {
    (1.0 - sinkage / radius).clamp(-1.0, 1.0).acos()
}

/// Builds the stress profile at sinkage `z0` with a given grouser amplitude.
///
/// Node `theta` sees the grouser excitation at `phase + k theta`, with `k`
/// the grouser phase advance per radian of wheel rotation.
pub fn build_patch(
    soil: &SoilParameters,
    wheel: &WheelGeometry,
    sinkage: f64,
    slip: &SlipState,
    phase: f64,
    amplitude: f64,
    options: &ModelOptions,
) -> Result<ContactPatch, ModelError> {
    let geometry = PatchGeometry::new(wheel, sinkage, options)?;
    let Some(geometry) = geometry else {
        return Ok(empty_patch(wheel, sinkage));
    };
    let statics = geometry.static_stress(soil, wheel, slip.slip);
    Ok(geometry.finish(soil, wheel, slip, phase, amplitude, statics, options))
}

/// Builds the patch with the grouser amplitude taken from a provisional
/// `A = 0` patch (plus `coupling_iterations` fixed-point refinements).
pub fn coupled_patch(
    soil: &SoilParameters,
    wheel: &WheelGeometry,
    sinkage: f64,
    slip: &SlipState,
    phase: f64,
    options: &ModelOptions,
) -> Result<ContactPatch, ModelError> {
    let Some(geometry) = PatchGeometry::new(wheel, sinkage, options)? else {
        return Ok(empty_patch(wheel, sinkage));
    };
    let statics = geometry.static_stress(soil, wheel, slip.slip);
    let amplitude = geometry.coupled_amplitude(soil, wheel, slip, phase, &statics, options);
    Ok(geometry.finish(soil, wheel, slip, phase, amplitude, statics, options))
}

/// Resolves the patch stresses into loads by composite trapezoid quadrature.
pub fn integrate_loads(patch: &ContactPatch, wheel: &WheelGeometry) -> WheelLoads {
    let n = patch.angles.len();
    if n < 2 {
        return WheelLoads::default();
    }
    let mut sums = LoadSums::default();
    for k in 0..n {
        let (sin, cos) = patch.angles[k].sin_cos();
        let weight = trapezoid_weight(&patch.angles, k);
        sums.add(weight, sin, cos, patch.normal_stress[k], patch.shear_stress[k]);
    }
    sums.loads(patch.radius, wheel.width)
}

/// Loads at sinkage `z0` with the coupled grouser amplitude. Same result as
/// `integrate_loads(&coupled_patch(..))` without materialising the patch.
pub fn loads_at(
    soil: &SoilParameters,
    wheel: &WheelGeometry,
    sinkage: f64,
    slip: &SlipState,
    phase: f64,
    options: &ModelOptions,
) -> Result<WheelLoads, ModelError> {
    let Some(geometry) = PatchGeometry::new(wheel, sinkage, options)? else {
        return Ok(WheelLoads::default());
    };
    let statics = geometry.static_stress(soil, wheel, slip.slip);
    let amplitude = geometry.coupled_amplitude(soil, wheel, slip, phase, &statics, options);
    let mut sums = LoadSums::default();
    geometry.visit(
        soil,
        wheel,
        slip,
        phase,
        amplitude,
        &statics,
        options,
        |k, sigma, _, tau| {
            sums.add(geometry.weights[k], geometry.sin[k], geometry.cos[k], sigma, tau);
        },
    );
    Ok(sums.loads(geometry.radius, wheel.width))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub sinkage: f64,
    pub loads: WheelLoads,
    pub patch: ContactPatch,
    pub iterations: usize,
}

/// Sinkage at which the vertical soil reaction balances `load`, found by
/// bisection on `[0, R_o (1 - 1e-6)]`.
pub fn solve_equilibrium_sinkage(
    soil: &SoilParameters,
    wheel: &WheelGeometry,
    slip: &SlipState,
    load: f64,
    phase: f64,
    options: &ModelOptions,
) -> Result<Equilibrium, ModelError> {
    if !(load > 0.0 && load.is_finite()) {
        return Err(ModelError::InvalidParameter {
            name: "load",
            value: load,
            reason: "must be > 0",
        });
    }
    let tolerance = options.tolerance.for_load(load);
    let normal = |z: f64| loads_at(soil, wheel, z, slip, phase, options).map(|l| l.normal_force);
    let done = |z: f64, iterations: usize| -> Result<Equilibrium, ModelError> {
        let patch = coupled_patch(soil, wheel, z, slip, phase, options)?;
        Ok(Equilibrium {
            sinkage: z,
            loads: loads_at(soil, wheel, z, slip, phase, options)?,
            patch,
            iterations,
        })
    };

    let mut lo = 0.0;
    let mut hi = wheel.outer_radius() * BRACKET_FRACTION;
    let capacity = normal(hi)?;
    if capacity < load {
        return Err(ModelError::NotBracketed { load, capacity });
    }
    if (capacity - load).abs() <= tolerance {
        return done(hi, 0);
    }
    let mut best = f64::INFINITY;
    for iteration in 1..=MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let residual = normal(mid)? - load;
        if residual.abs() <= tolerance {
            return done(mid, iteration);
        }
        best = best.min(residual.abs());
        if residual < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Err(ModelError::NoConvergence {
        residual: best,
        tolerance,
    })
}

#[derive(Default)]
struct LoadSums {
    vertical: f64,
    horizontal: f64,
    shear: f64,
}

impl LoadSums {
    #[inline]
    fn add(&mut self, weight: f64, sin: f64, cos: f64, sigma: f64, tau: f64) {
        self.vertical += weight * (sigma * cos + tau * sin);
        self.horizontal += weight * (tau * cos - sigma * sin);
        self.shear += weight * tau;
    }

    fn loads(&self, radius: f64, width: f64) -> WheelLoads {
        WheelLoads {
            normal_force: radius * width * self.vertical,
            drawbar_pull: radius * width * self.horizontal,
            torque: radius * radius * width * self.shear,
        }
    }
}

/// Node placement shared by the provisional and final profiles.
struct PatchGeometry {
    sinkage: f64,
    radius: f64,
    entry: f64,
    exit: f64,
    angles: Vec<f64>,
    sin: Vec<f64>,
    cos: Vec<f64>,
    weights: Vec<f64>,
    depth: Vec<f64>,
}

impl PatchGeometry {
    fn new(wheel: &WheelGeometry, sinkage: f64, options: &ModelOptions) -> Result<Option<Self>, ModelError> {
        if !(sinkage >= 0.0) {
            return Err(ModelError::NegativeSinkage(sinkage));
        }
        let radius = wheel.outer_radius();
        if sinkage >= radius {
            return Err(ModelError::SinkageBeyondAxle { sinkage, limit: radius });
        }
        if options.nodes < MIN_NODES {
            return Err(ModelError::TooFewNodes {
                got: options.nodes,
                min: MIN_NODES,
            });
        }
        if sinkage == 0.0 {
            return Ok(None);
        }
        let entry = entry_angle(sinkage, radius);
        // The soil surface closes behind the wheel at -theta_f at the latest.
        let exit = options.exit_angle.max(-entry);
        let cos_entry = entry.cos();
        let n = options.nodes;
        let span = entry - exit;
        let angles: Vec<f64> = (0..n).map(|k| exit + span * k as f64 / (n - 1) as f64).collect();
        let (sin, cos) = rotations(exit, span / (n - 1) as f64, n);
        let weights = (0..n).map(|k| trapezoid_weight(&angles, k)).collect();
        let depth = cos.iter().map(|c| (radius * (c - cos_entry)).max(0.0)).collect();
        Ok(Some(Self {
            sinkage,
            radius,
            entry,
            exit,
            angles,
            sin,
            cos,
            weights,
            depth,
        }))
    }

    fn length(&self) -> f64 {
        self.radius * (self.entry - self.exit)
    }

    fn static_stress(&self, soil: &SoilParameters, wheel: &WheelGeometry, slip: f64) -> Vec<f64> {
        let modulus = soil.pressure_modulus(wheel.width);
        let n = sinkage_exponent(soil, slip);
        self.depth.iter().map(|z| modulus * (z / wheel.width).powf(n)).collect()
    }

    fn coupled_amplitude(
        &self,
        soil: &SoilParameters,
        wheel: &WheelGeometry,
        slip: &SlipState,
        phase: f64,
        statics: &[f64],
        options: &ModelOptions,
    ) -> f64 {
        let length = self.length();
        let mut amplitude = grouser_amplitude(soil, mean(statics), length).total();
        for _ in 0..options.coupling_iterations {
            let mut total = 0.0;
            self.visit(
                soil,
                wheel,
                slip,
                phase,
                amplitude,
                statics,
                options,
                |_, sigma, _, _| {
                    total += sigma;
                },
            );
            amplitude = grouser_amplitude(soil, total / statics.len() as f64, length).total();
        }
        amplitude
    }

    /// Calls `f(k, sigma, j, tau)` for every node.
    #[allow(clippy::too_many_arguments)]
    #[inline]
    fn visit(
        &self,
        soil: &SoilParameters,
        wheel: &WheelGeometry,
        slip: &SlipState,
        phase: f64,
        amplitude: f64,
        statics: &[f64],
        options: &ModelOptions,
        mut f: impl FnMut(usize, f64, f64, f64),
    ) {
        let wavenumber = grouser_wavenumber(wheel.grouser_count, options.grouser_frequency);
        let travel = 1.0 - slip.conventional();
        let (sin_entry, r) = (self.entry.sin(), self.radius);
        let tan_phi = soil.friction_angle.tan();
        let n = self.angles.len();
        let spacing = if n > 1 { self.angles[1] - self.angles[0] } else { 0.0 };
        // Running rotation for sin(phase + k theta) across the uniform grid.
        let (mut s, mut c) = (phase + wavenumber * self.exit).sin_cos();
        let (ds, dc) = (wavenumber * spacing).sin_cos();
        for (k, &theta) in self.angles.iter().enumerate() {
            let mut sigma = statics[k];
            if amplitude != 0.0 {
                sigma += amplitude * s;
                (s, c) = (s * dc + c * ds, c * dc - s * ds);
            }
            let sigma = sigma.max(0.0);
            let j = (r * ((self.entry - theta) - travel * (sin_entry - self.sin[k]))).max(0.0);
            let limit = soil.cohesion + sigma * tan_phi;
            let tau = shear_ratio_unchecked(soil, j, options.shear_form) * limit;
            f(k, sigma, j, tau);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        soil: &SoilParameters,
        wheel: &WheelGeometry,
        slip: &SlipState,
        phase: f64,
        amplitude: f64,
        statics: Vec<f64>,
        options: &ModelOptions,
    ) -> ContactPatch {
        let n = self.angles.len();
        let mut normal_stress = Vec::with_capacity(n);
        let mut shear_displacement = Vec::with_capacity(n);
        let mut shear_stress = Vec::with_capacity(n);
        self.visit(
            soil,
            wheel,
            slip,
            phase,
            amplitude,
            &statics,
            options,
            |_, sigma, j, tau| {
                normal_stress.push(sigma);
                shear_displacement.push(j);
                shear_stress.push(tau);
            },
        );
        let mean_peak_stress = mean(&normal_stress);
        ContactPatch {
            sinkage: self.sinkage,
            entry_angle: self.entry,
            exit_angle: self.exit,
            radius: self.radius,
            amplitude,
            angles: self.angles.clone(),
            node_sinkage: self.depth.clone(),
            normal_stress,
            shear_displacement,
            shear_stress,
            mean_peak_stress,
            contact_length: self.length(),
        }
    }
}

fn empty_patch(wheel: &WheelGeometry, sinkage: f64) -> ContactPatch {
    ContactPatch {
        sinkage,
        radius: wheel.outer_radius(),
        ..ContactPatch::default()
    }
}

/// `sin` and `cos` of `start + k step` for `k < n`, by repeated rotation.
fn rotations(start: f64, step: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (mut s, mut c) = start.sin_cos();
    let (ds, dc) = step.sin_cos();
    let mut sin = Vec::with_capacity(n);
    let mut cos = Vec::with_capacity(n);
    for _ in 0..n {
        sin.push(s);
        cos.push(c);
        (s, c) = (s * dc + c * ds, c * dc - s * ds);
    }
    (sin, cos)
}

fn trapezoid_weight(x: &[f64], k: usize) -> f64 {
    let n = x.len();
    let left = if k > 0 { x[k] - x[k - 1] } else { 0.0 };
    let right = if k + 1 < n { x[k + 1] - x[k] } else { 0.0 };
    0.5 * (left + right)
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

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

    fn slip(s: f64) -> SlipState {
        SlipState::from_slip(s, 0.5, 0.06).unwrap()
    }

    #[test]
    fn zero_sinkage_gives_empty_patch() {
        let wheel = WheelGeometry::rashid();
        let patch = build_patch(&tuned(), &wheel, 0.0, &slip(0.25), 0.0, 0.0, &ModelOptions::default()).unwrap();
        assert!(patch.is_empty());
        assert_eq!(mean_peak_stress(&patch), 0.0);
        assert_eq!(contact_length(&patch), 0.0);
        assert_eq!(integrate_loads(&patch, &wheel), WheelLoads::default());
    }

    #[test]
    fn entry_angle_on_grouser_circle() {
        let wheel = WheelGeometry::rashid();
        let patch = build_patch(&tuned(), &wheel, 0.01, &slip(0.0), 0.0, 0.0, &ModelOptions::default()).unwrap();
        // arccos(1 - 1/6)
        assert_relative_eq!(patch.entry_angle, 0.5856855434571511, epsilon = 1e-12);
        assert_eq!(patch.exit_angle, 0.0);
        assert_relative_eq!(contact_length(&patch), 0.035141132607429064, epsilon = 1e-12);
        assert_eq!(patch.contact_length, contact_length(&patch));
    }

    #[test]
    fn zero_slip_shear_starts_at_entry() {
        let wheel = WheelGeometry::rashid();
        let patch = build_patch(&tuned(), &wheel, 0.02, &slip(0.0), 0.0, 0.0, &ModelOptions::default()).unwrap();
        let last = patch.shear_displacement.len() - 1;
        assert!(patch.shear_displacement[last].abs() < 1e-15);
        assert!(patch.shear_displacement.iter().all(|&j| j >= 0.0));
        assert!(patch.shear_stress.iter().all(|&t| t >= 0.0));
    }

    #[test]
    fn rejects_buried_axle_and_coarse_grids() {
        let wheel = WheelGeometry::rashid();
        let opts = ModelOptions::default();
        assert!(matches!(
            build_patch(&tuned(), &wheel, wheel.outer_radius(), &slip(0.0), 0.0, 0.0, &opts),
            Err(ModelError::SinkageBeyondAxle { .. })
        ));
        let coarse = ModelOptions { nodes: 8, ..opts };
        assert!(matches!(
            build_patch(&tuned(), &wheel, 0.01, &slip(0.0), 0.0, 0.0, &coarse),
            Err(ModelError::TooFewNodes { .. })
        ));
    }

    #[test]
    fn sinusoid_is_clamped() {
        let wheel = WheelGeometry::rashid();
        let patch = build_patch(&tuned(), &wheel, 0.01, &slip(0.5), 0.3, 1e6, &ModelOptions::default()).unwrap();
        assert!(patch.normal_stress.iter().all(|&s| s >= 0.0));
        assert!(patch.normal_stress.contains(&0.0));
    }

    #[test]
    fn mean_stress_and_length_helpers() {
        let patch = ContactPatch {
            radius: 0.06,
            entry_angle: 0.3,
            exit_angle: -0.1,
            angles: vec![-0.1, 0.1, 0.3],
            normal_stress: vec![0.0, 1000.0, 2000.0],
            shear_stress: vec![0.0; 3],
            ..ContactPatch::default()
        };
        assert_eq!(mean_peak_stress(&patch), 1000.0);
        assert_relative_eq!(contact_length(&patch), 0.024, epsilon = 1e-15);
        let uniform = ContactPatch {
            normal_stress: vec![750.0; 5],
            angles: vec![0.0; 5],
            ..ContactPatch::default()
        };
        assert_eq!(mean_peak_stress(&uniform), 750.0);
    }

    #[test]
    fn uniform_pressure_closed_form() {
        let wheel = WheelGeometry::rashid();
        let (theta0, sigma0, n) = (0.4, 5000.0, 257);
        let angles: Vec<f64> = (0..n)
            .map(|k| -theta0 + 2.0 * theta0 * k as f64 / (n - 1) as f64)
            .collect();
        let patch = ContactPatch {
            radius: 0.06,
            entry_angle: theta0,
            exit_angle: -theta0,
            normal_stress: vec![sigma0; n],
            shear_stress: vec![0.0; n],
            angles,
            ..ContactPatch::default()
        };
        let loads = integrate_loads(&patch, &wheel);
        let exact = 2.0 * 0.06 * wheel.width * sigma0 * theta0.sin();
        assert_relative_eq!(loads.normal_force, exact, max_relative = 1e-5);
        assert!(loads.drawbar_pull.abs() < 1e-12);
        assert_eq!(loads.torque, 0.0);
    }

    #[test]
    fn equilibrium_balances_load() {
        let wheel = WheelGeometry::rashid();
        let opts = ModelOptions::default();
        let eq = solve_equilibrium_sinkage(&tuned(), &wheel, &slip(0.25), 9.81, 0.0, &opts).unwrap();
        assert!((eq.loads.normal_force - 9.81).abs() <= 9.81e-6);
        assert!(eq.sinkage > 0.0 && eq.sinkage < wheel.outer_radius());
    }

    #[test]
    fn equilibrium_reports_unbracketed_load() {
        let wheel = WheelGeometry::rashid();
        let err =
            solve_equilibrium_sinkage(&tuned(), &wheel, &slip(0.0), 1e4, 0.0, &ModelOptions::default()).unwrap_err();
        match err {
            ModelError::NotBracketed { load, capacity } => {
                assert_eq!(load, 1e4);
                assert!(capacity < load);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(solve_equilibrium_sinkage(&tuned(), &wheel, &slip(0.0), 0.0, 0.0, &ModelOptions::default()).is_err());
    }

    #[test]
    fn tiny_load_gives_tiny_sinkage() {
        let wheel = WheelGeometry::rashid();
        let opts = ModelOptions::default();
        let mut previous = f64::INFINITY;
        for load in [1.0, 1e-2, 1e-4] {
            let eq = solve_equilibrium_sinkage(&tuned(), &wheel, &slip(0.0), load, 0.0, &opts).unwrap();
            assert!(eq.sinkage < previous);
            previous = eq.sinkage;
        }
        assert!(previous < 1e-3);
    }
}
