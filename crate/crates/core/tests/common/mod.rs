#![allow(dead_code)]

use terrasim::io::reference::ReferenceDataset;
use terrasim::{RigConfig, SoilParameters};

/// Weight of the bare wheel (1 kg), a load the soil tables can carry.
pub const WHEEL_WEIGHT: f64 = 9.81;

pub fn tuned() -> SoilParameters {
    ReferenceDataset::bundled().soil_tuned.soil_parameters()
}

pub fn initial() -> SoilParameters {
    ReferenceDataset::bundled().soil_initial.soil_parameters()
}

/// Default rig at the wheel's own weight on the tuned soil.
pub fn light_rig(slip: f64) -> RigConfig {
    RigConfig {
        load: WHEEL_WEIGHT,
        ..RigConfig::new(tuned(), slip)
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}
