//! Soil and wheel descriptions and the pointwise constitutive laws:
//! grouser-modulated Reece pressure-sinkage, grouser oscillation,
//! the Wong shear-displacement law with a Mohr-Coulomb limit, and the
//! slip kinematics of the rig.

use std::f64::consts::{E, FRAC_PI_2};

use crate::error::ModelError;

/// Terrain constants of the pressure-sinkage and shear laws.
///
/// Angles are radians here; the configuration layer converts from degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoilParameters {
    /// Cohesion `c` (Pa).
    pub cohesion: f64,
    /// Dimensionless cohesive sinkage modulus `k_c'`.
    pub k_c: f64,
    /// Dimensionless frictional sinkage modulus `k_phi'`.
    pub k_phi: f64,
    /// Shear deformation modulus `K_w` (m).
    pub shear_modulus: f64,
    /// Residual shear ratio `K_r`, in (0, 1].
    pub residual_ratio: f64,
    /// Static sinkage exponent `n_o`.
    pub n0: f64,
    /// Slip-sinkage exponent coefficient `n_1`.
    pub n1: f64,
    /// Soil weight density `gamma` (N/m^3).
    pub unit_weight: f64,
    /// Density variation `d_gamma` (N/m^3). `None` means 0.1 x `gamma`.
    pub unit_weight_variation: Option<f64>,
    /// Internal friction angle `phi` (rad).
    pub friction_angle: f64,
    /// Grouser stress-amplitude coefficient `k_g'`.
    pub k_g: f64,
    /// Grouser density-amplitude coefficient `k_a'`.
    pub k_a: f64,
    /// Contact damping `C_f` (N s/m).
    pub damping: f64,
    /// Carried through from the soil tables; no law consumes it.
    pub eta: f64,
}

/// Ratio of `d_gamma` to `gamma` when the variation is not given.
pub const DEFAULT_DENSITY_VARIATION_RATIO: f64 = 0.1;

impl SoilParameters {
    pub fn density_variation(&self) -> f64 {
        self.unit_weight_variation
            .unwrap_or(DEFAULT_DENSITY_VARIATION_RATIO * self.unit_weight)
    }

    /// `c k_c' + gamma b k_phi'`, the prefactor of the static pressure term.
    pub fn pressure_modulus(&self, width: f64) -> f64 {
        self.cohesion * self.k_c + self.unit_weight * width * self.k_phi
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = [
            ("cohesion", self.cohesion),
            ("k_c", self.k_c),
            ("k_phi", self.k_phi),
            ("k_w", self.shear_modulus),
            ("k_r", self.residual_ratio),
            ("n_o", self.n0),
            ("n_1", self.n1),
            ("gamma", self.unit_weight),
            ("d_gamma", self.density_variation()),
            ("phi", self.friction_angle),
            ("k_g", self.k_g),
            ("k_a", self.k_a),
            ("c_f", self.damping),
            ("eta", self.eta),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(invalid(name, value, "must be finite"));
            }
        }
        check(self.unit_weight > 0.0, "gamma", self.unit_weight, "must be > 0")?;
        check(
            self.density_variation() >= 0.0,
            "d_gamma",
            self.density_variation(),
            "must be >= 0",
        )?;
        check(
            (0.0..FRAC_PI_2).contains(&self.friction_angle),
            "phi",
            self.friction_angle,
            "must lie in [0, pi/2) rad",
        )?;
        check(self.cohesion >= 0.0, "cohesion", self.cohesion, "must be >= 0")?;
        check(self.shear_modulus > 0.0, "k_w", self.shear_modulus, "must be > 0")?;
        check(
            self.residual_ratio > 0.0 && self.residual_ratio <= 1.0,
            "k_r",
            self.residual_ratio,
            "must lie in (0, 1]",
        )?;
        check(self.n0 > 0.0, "n_o", self.n0, "must be > 0")?;
        check(self.n1 >= 0.0, "n_1", self.n1, "must be >= 0")?;
        check(self.k_c >= 0.0, "k_c", self.k_c, "must be >= 0")?;
        check(self.k_phi >= 0.0, "k_phi", self.k_phi, "must be >= 0")?;
        check(self.k_g >= 0.0, "k_g", self.k_g, "must be >= 0")?;
        check(self.k_a >= 0.0, "k_a", self.k_a, "must be >= 0")?;
        check(self.damping >= 0.0, "c_f", self.damping, "must be >= 0")?;
        Ok(())
    }
}

/// Rigid grousered wheel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelGeometry {
    /// Rim radius `R` (m).
    pub radius: f64,
    /// Width `b` (m).
    pub width: f64,
    /// Grouser height `h_b` (m).
    pub grouser_height: f64,
    /// Grouser blade thickness (m); informational.
    pub grouser_width: f64,
    pub grouser_count: u32,
    /// Wheel mass (kg).
    pub mass: f64,
}

impl WheelGeometry {
    /// The twelve-grouser rover wheel: 0.1 m diameter, 7.5 mm wide,
    /// 10 mm grousers, 1 kg.
    pub fn rashid() -> Self {
        Self {
            radius: 0.05,
            width: 0.0075,
            grouser_height: 0.01,
            grouser_width: 0.001,
            grouser_count: 12,
            mass: 1.0,
        }
    }

    /// Grouser tip radius `R_o = R + h_b`.
    pub fn outer_radius(&self) -> f64 {
        self.radius + self.grouser_height
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check(
            self.radius.is_finite() && self.radius > 0.0,
            "radius",
            self.radius,
            "must be > 0",
        )?;
        check(
            self.width.is_finite() && self.width > 0.0,
            "width",
            self.width,
            "must be > 0",
        )?;
        check(
            self.grouser_height >= 0.0 && self.grouser_height < self.radius,
            "grouser_height",
            self.grouser_height,
            "must lie in [0, radius)",
        )?;
        check(
            self.grouser_width.is_finite() && self.grouser_width >= 0.0,
            "grouser_width",
            self.grouser_width,
            "must be >= 0",
        )?;
        check(
            self.grouser_count >= 1,
            "grouser_count",
            f64::from(self.grouser_count),
            "must be >= 1",
        )?;
        check(
            self.mass.is_finite() && self.mass > 0.0,
            "mass",
            self.mass,
            "must be > 0",
        )?;
        Ok(())
    }
}

impl Default for WheelGeometry {
    fn default() -> Self {
        Self::rashid()
    }
}

/// Shear-ratio variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ShearForm {
    /// Wong law including the trailing `(1 - exp(-j/K_w))` factor:
    /// zero at `j = 0`, exactly one at `j = K_w`, `K_r` as `j -> inf`.
    #[default]
    Complete,
    /// The bracketed factor alone, without the trailing term.
    AsPrinted,
}

/// How the grouser excitation frequency relates to wheel speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GrouserFrequency {
    /// `omega_w * n_g`, one oscillation per grouser passing.
    #[default]
    Passing,
    /// `omega_w / n_g`.
    AsPrinted,
}

/// How a configured slip value is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SlipConvention {
    /// `s = (omega R - V) / V`.
    #[default]
    Paper,
    /// `i = (omega R - V) / (omega R)`.
    Conventional,
}

impl SlipConvention {
    /// Converts a value given in this convention into the paper convention.
    pub fn to_paper(self, value: f64) -> Result<f64, ModelError> {
        match self {
            SlipConvention::Paper => Ok(value),
            SlipConvention::Conventional => {
                if !(value < 1.0) {
                    return Err(ModelError::SlipOutOfDomain(value));
                }
                Ok(value / (1.0 - value))
            }
        }
    }
}

/// Kinematic state of a driven wheel on the carriage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipState {
    /// Paper-convention slip `s = (omega R - V)/V`.
    pub slip: f64,
    /// Wheel angular velocity (rad/s).
    pub wheel_rate: f64,
    /// Carriage speed `V` (m/s).
    pub carriage_speed: f64,
}

impl SlipState {
    /// Builds the state that realises slip `s` at wheel rate `omega`.
    pub fn from_slip(slip: f64, wheel_rate: f64, kinematic_radius: f64) -> Result<Self, ModelError> {
        let carriage_speed = carriage_speed(slip, wheel_rate, kinematic_radius)?;
        if !(carriage_speed > 0.0) {
            return Err(ModelError::NonPositiveCarriageSpeed(carriage_speed));
        }
        Ok(Self {
            slip,
            wheel_rate,
            carriage_speed,
        })
    }

    pub fn from_speeds(wheel_rate: f64, kinematic_radius: f64, carriage_speed: f64) -> Result<Self, ModelError> {
        let slip = slip_ratio(wheel_rate, kinematic_radius, carriage_speed)?;
        Ok(Self {
            slip,
            wheel_rate,
            carriage_speed,
        })
    }

    /// Conventional slip `i = s / (1 + s)`.
    pub fn conventional(&self) -> f64 {
        self.slip / (1.0 + self.slip)
    }
}

/// `n = n_o + n_1 s`.
pub fn sinkage_exponent(soil: &SoilParameters, slip: f64) -> f64 {
    soil.n0 + soil.n1 * slip
}

/// Grouser oscillation frequency (rad/s) for wheel rate `omega_w`.
pub fn grouser_frequency(wheel_rate: f64, grouser_count: u32, convention: GrouserFrequency) -> f64 {
    wheel_rate * grouser_wavenumber(grouser_count, convention)
}

/// Phase advance of the grouser excitation per radian of wheel rotation.
pub fn grouser_wavenumber(grouser_count: u32, convention: GrouserFrequency) -> f64 {
    let n = f64::from(grouser_count);
    match convention {
        GrouserFrequency::Passing => n,
        GrouserFrequency::AsPrinted => 1.0 / n,
    }
}

/// The two additive parts of the grouser oscillation amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GrouserAmplitude {
    /// `k_g' * sigma_bar_p`, from stress variation (Pa).
    pub stress: f64,
    /// `k_a' * l_c * d_gamma`, from density variation (Pa).
    pub density: f64,
}

impl GrouserAmplitude {
    pub fn total(&self) -> f64 {
        self.stress + self.density
    }
}

pub fn grouser_amplitude(soil: &SoilParameters, mean_peak_stress: f64, contact_length: f64) -> GrouserAmplitude {
    GrouserAmplitude {
        stress: soil.k_g * mean_peak_stress,
        density: soil.k_a * contact_length * soil.density_variation(),
    }
}

/// Static part of the pressure-sinkage law, `(c k_c' + gamma b k_phi') (z/b)^n`.
pub fn static_pressure(soil: &SoilParameters, wheel: &WheelGeometry, sinkage: f64, slip: f64) -> f64 {
    let b = wheel.width;
    soil.pressure_modulus(b) * (sinkage / b).powf(sinkage_exponent(soil, slip))
}

/// Normal pressure at sinkage `z` (Pa), including the grouser sinusoid
/// `A sin(phase)`. Not clamped; callers building stress profiles clamp at zero.
pub fn normal_pressure(
    soil: &SoilParameters,
    wheel: &WheelGeometry,
    sinkage: f64,
    slip: f64,
    amplitude: f64,
    phase: f64,
) -> Result<f64, ModelError> {
    if !(sinkage >= 0.0) {
        return Err(ModelError::NegativeSinkage(sinkage));
    }
    Ok(static_pressure(soil, wheel, sinkage, slip) + amplitude * phase.sin())
}

/// Mohr-Coulomb limit `c + sigma tan(phi)`.
pub fn max_shear(soil: &SoilParameters, normal_stress: f64) -> f64 {
    soil.cohesion + normal_stress * soil.friction_angle.tan()
}

/// Ratio of shear stress to the Mohr-Coulomb limit at shear displacement `j`.
pub fn shear_ratio(soil: &SoilParameters, displacement: f64, form: ShearForm) -> Result<f64, ModelError> {
    if !(displacement >= 0.0) {
        return Err(ModelError::NegativeShearDisplacement(displacement));
    }
    Ok(shear_ratio_unchecked(soil, displacement, form))
}

#[inline]
pub(crate) fn shear_ratio_unchecked(soil: &SoilParameters, displacement: f64, form: ShearForm) -> f64 {
    let kr = soil.residual_ratio;
    let x = displacement / soil.shear_modulus;
    let decay = (-x).exp();
    let hump = 1.0 / (kr * (1.0 - 1.0 / E)) - 1.0;
    // exp(1 - x) = e exp(-x)
    let bracket = kr * (1.0 + hump * E * decay);
    match form {
        ShearForm::Complete => bracket * (1.0 - decay),
        ShearForm::AsPrinted => bracket,
    }
}

/// `s = (omega R - V) / V`.
pub fn slip_ratio(wheel_rate: f64, kinematic_radius: f64, carriage_speed: f64) -> Result<f64, ModelError> {
    if !(carriage_speed > 0.0) {
        return Err(ModelError::NonPositiveCarriageSpeed(carriage_speed));
    }
    Ok((wheel_rate * kinematic_radius - carriage_speed) / carriage_speed)
}

/// Carriage speed realising slip `s`: `V = omega R / (1 + s)`.
pub fn carriage_speed(slip: f64, wheel_rate: f64, kinematic_radius: f64) -> Result<f64, ModelError> {
    if !(slip > -1.0) {
        return Err(ModelError::SlipOutOfDomain(slip));
    }
    Ok(wheel_rate * kinematic_radius / (1.0 + slip))
}

fn invalid(name: &'static str, value: f64, reason: &'static str) -> ModelError {
    ModelError::InvalidParameter { name, value, reason }
}

fn check(ok: bool, name: &'static str, value: f64, reason: &'static str) -> Result<(), ModelError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(name, value, reason))
    }
}
