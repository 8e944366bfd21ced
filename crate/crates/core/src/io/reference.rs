//! Soil tables and rig measurements bundled with the library.

use std::sync::OnceLock;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::calibration::Target;
use crate::rig::{RigConfig, SpeedSetting};
use crate::soil::{SoilParameters, WheelGeometry, DEFAULT_DENSITY_VARIATION_RATIO};

include!(concat!(env!("OUT_DIR"), "/reference_sha256.rs"));

/// Source text of the bundled dataset.
pub const REFERENCE_TOML: &str = include_str!("../../data/reference.toml");

/// Residual shear ratio assumed for both soil tables, which omit it.
pub const DEFAULT_RESIDUAL_RATIO: f64 = 1.0;

/// Soil table row values in table units.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoilTable {
    pub k_c: f64,
    pub k_phi: f64,
    /// Shear deformation modulus (m).
    pub k: f64,
    /// Sinkage exponent.
    pub n: f64,
    /// N/m^3.
    pub gamma: f64,
    /// `d_gamma / gamma`.
    pub d_gamma_ratio: f64,
    pub eta: f64,
    /// Degrees.
    pub phi: f64,
    /// kPa.
    pub c: f64,
    /// Grouser height (m).
    pub h_b: f64,
    /// N s/m.
    pub c_f: f64,
    pub k_g: f64,
    pub k_0: f64,
}

impl SoilTable {
    pub fn soil_parameters(&self) -> SoilParameters {
        SoilParameters {
            cohesion: self.c * 1e3,
            k_c: self.k_c,
            k_phi: self.k_phi,
            shear_modulus: self.k,
            residual_ratio: DEFAULT_RESIDUAL_RATIO,
            n0: self.n,
            n1: 0.0,
            unit_weight: self.gamma,
            unit_weight_variation: (self.d_gamma_ratio != DEFAULT_DENSITY_VARIATION_RATIO)
                .then_some(self.d_gamma_ratio * self.gamma),
            friction_angle: self.phi.to_radians(),
            k_g: self.k_g,
            k_a: self.k_0,
            damping: self.c_f,
            eta: self.eta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimExp {
    pub sim: f64,
    pub exp: f64,
}

impl SimExp {
    pub fn get(&self, column: Column) -> f64 {
        match column {
            Column::Sim => self.sim,
            Column::Exp => self.exp,
        }
    }
}

/// Which measurement column to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    Sim,
    Exp,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceExperiment {
    pub id: String,
    pub slip: f64,
    pub drawbar_pull: SimExp,
    pub normal_force: SimExp,
    pub sinkage: SimExp,
}

impl ReferenceExperiment {
    /// Row label as printed in the comparison table, e.g. `C2 - 0.25`.
    pub fn row_label(&self) -> String {
        format!("{} - {:.2}", self.id, self.slip)
    }

    pub fn target(&self, column: Column) -> Target {
        Target {
            label: self.id.clone(),
            slip: self.slip,
            drawbar_pull: self.drawbar_pull.get(column),
            normal_force: self.normal_force.get(column),
            sinkage: self.sinkage.get(column),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreeWay {
    pub exp: f64,
    pub sim: f64,
    pub theory: f64,
}

/// C2 means obtained with the initial soil table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreTuning {
    pub experiment: String,
    pub drawbar_pull: ThreeWay,
    pub sinkage: ThreeWay,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceDataset {
    pub soil_initial: SoilTable,
    pub soil_tuned: SoilTable,
    #[serde(rename = "experiment")]
    pub experiments: Vec<ReferenceExperiment>,
    pub pre_tuning: PreTuning,
}

impl ReferenceDataset {
    /// The bundled dataset, parsed once.
    ///
    /// # Panics
    /// If the embedded text no longer matches its build-time checksum.
    pub fn bundled() -> &'static ReferenceDataset {
        static DATA: OnceLock<ReferenceDataset> = OnceLock::new();
        DATA.get_or_init(|| {
            assert!(verify_checksum(), "bundled reference data failed its checksum");
            toml::from_str(REFERENCE_TOML).expect("bundled reference data parses")
        })
    }

    pub fn experiment(&self, id: &str) -> Option<&ReferenceExperiment> {
        self.experiments.iter().find(|e| e.id == id)
    }

    /// Experiment whose slip equals `slip`.
    pub fn experiment_at_slip(&self, slip: f64) -> Option<&ReferenceExperiment> {
        self.experiments.iter().find(|e| e.slip == slip)
    }

    pub fn targets(&self, column: Column) -> Vec<Target> {
        self.experiments.iter().map(|e| e.target(column)).collect()
    }

    /// One rig configuration per experiment, with `soil` and default rig
    /// settings.
    pub fn rig_configs(&self, soil: &SoilParameters) -> Vec<RigConfig> {
        self.experiments
            .iter()
            .map(|e| RigConfig::new(*soil, e.slip).with_label(e.id.clone()))
            .collect()
    }

    /// Wheel of the rig with the grouser height from the tuned table.
    pub fn wheel(&self) -> WheelGeometry {
        WheelGeometry {
            grouser_height: self.soil_tuned.h_b,
            ..WheelGeometry::rashid()
        }
    }

    /// Rim speed held in every experiment (m/s).
    pub fn rim_speed(&self) -> SpeedSetting {
        SpeedSetting::Rim(0.03)
    }
}

/// Hex SHA-256 of the embedded text.
pub fn embedded_checksum() -> String {
    Sha256::digest(REFERENCE_TOML.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Whether the embedded text matches the checksum computed at build time.
pub fn verify_checksum() -> bool {
    embedded_checksum() == REFERENCE_SHA256
}

/// Plain-text rendering of the bundled tables.
pub fn render(data: &ReferenceDataset) -> String {
    let mut out = String::new();
    let soil_row = |out: &mut String, name: &str, unit: &str, a: f64, b: f64| {
        out.push_str(&format!("  {name:<8} {a:>10} {b:>10}  {unit}\n"));
    };
    out.push_str("Soil parameters        initial      tuned\n");
    let (i, t) = (&data.soil_initial, &data.soil_tuned);
    soil_row(&mut out, "k_c'", "-", i.k_c, t.k_c);
    soil_row(&mut out, "k_phi'", "-", i.k_phi, t.k_phi);
    soil_row(&mut out, "K", "m", i.k, t.k);
    soil_row(&mut out, "n", "-", i.n, t.n);
    soil_row(&mut out, "gamma", "N/m^3", i.gamma, t.gamma);
    soil_row(&mut out, "d_gamma", "x gamma", i.d_gamma_ratio, t.d_gamma_ratio);
    soil_row(&mut out, "eta", "-", i.eta, t.eta);
    soil_row(&mut out, "phi", "deg", i.phi, t.phi);
    soil_row(&mut out, "c", "kPa", i.c, t.c);
    soil_row(&mut out, "h_b", "m", i.h_b, t.h_b);
    soil_row(&mut out, "C_f", "N s/m", i.c_f, t.c_f);
    soil_row(&mut out, "k_g'", "-", i.k_g, t.k_g);
    soil_row(&mut out, "k_0'", "-", i.k_0, t.k_0);
    out.push('\n');
    out.push_str("Experiment     DP sim  DP exp   W sim   W exp    z sim    z exp\n");
    for e in &data.experiments {
        out.push_str(&format!(
            "  {:<10} {:>7} {:>7} {:>7} {:>7} {:>8} {:>8}\n",
            e.row_label(),
            e.drawbar_pull.sim,
            e.drawbar_pull.exp,
            e.normal_force.sim,
            e.normal_force.exp,
            e.sinkage.sim,
            e.sinkage.exp,
        ));
    }
    out.push('\n');
    let p = &data.pre_tuning;
    out.push_str(&format!(
        "Before tuning ({}): DP exp {} N, sim {} N, theory {} N; z exp {} m, sim {} m, theory {} m\n",
        p.experiment,
        p.drawbar_pull.exp,
        p.drawbar_pull.sim,
        p.drawbar_pull.theory,
        p.sinkage.exp,
        p.sinkage.sim,
        p.sinkage.theory,
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checksum_matches_build() {
        assert!(verify_checksum());
        assert_eq!(REFERENCE_SHA256.len(), 64);
    }

    #[test]
    fn soil_tables_transcribed() {
        let data = ReferenceDataset::bundled();
        let i = data.soil_initial;
        assert_eq!(
            [
                i.k_c,
                i.k_phi,
                i.k,
                i.n,
                i.gamma,
                i.d_gamma_ratio,
                i.eta,
                i.phi,
                i.c,
                i.h_b,
                i.c_f,
                i.k_g,
                i.k_0
            ],
            [0.0, 80.0, 0.036, 1.0, 13734.0, 0.1, 1.15, 28.0, 0.0, 0.01, 800.0, 0.06, 0.03]
        );
        let t = data.soil_tuned;
        assert_eq!(
            [
                t.k_c,
                t.k_phi,
                t.k,
                t.n,
                t.gamma,
                t.d_gamma_ratio,
                t.eta,
                t.phi,
                t.c,
                t.h_b,
                t.c_f,
                t.k_g,
                t.k_0
            ],
            [0.63, 80.0, 0.036, 1.1, 15620.0, 0.1, 1.15, 23.0, 0.0, 0.01, 800.0, 0.07, 0.035]
        );
    }

    #[test]
    fn experiments_transcribed() {
        let data = ReferenceDataset::bundled();
        let rows: Vec<_> = data
            .experiments
            .iter()
            .map(|e| {
                (
                    e.row_label(),
                    [
                        e.drawbar_pull.sim,
                        e.drawbar_pull.exp,
                        e.normal_force.sim,
                        e.normal_force.exp,
                        e.sinkage.sim,
                        e.sinkage.exp,
                    ],
                )
            })
            .collect();
        assert_eq!(
            rows,
            vec![
                ("C1 - 0.00".to_string(), [5.34, 5.2, 59.0, 62.0, 0.011, 0.01]),
                ("C2 - 0.25".to_string(), [9.26, 10.10, 58.7, 62.3, 0.016, 0.0158]),
                ("C3 - 0.50".to_string(), [17.2, 16.77, 59.1, 62.1, 0.0175, 0.0169]),
                ("C4 - 0.75".to_string(), [23.6, 24.1, 60.2, 62.1, 0.0208, 0.0192]),
            ]
        );
        let p = &data.pre_tuning;
        assert_eq!(p.experiment, "C2");
        assert_eq!(
            [p.drawbar_pull.exp, p.drawbar_pull.sim, p.drawbar_pull.theory],
            [10.2, 6.2, 5.8]
        );
        assert_eq!(
            [p.sinkage.exp, p.sinkage.sim, p.sinkage.theory],
            [0.0168, 0.0126, 0.0118]
        );
    }

    #[test]
    fn tables_map_to_soil_parameters() {
        let soil = ReferenceDataset::bundled().soil_tuned.soil_parameters();
        assert_eq!(soil.friction_angle, 23f64.to_radians());
        assert_eq!(soil.density_variation(), 1562.0);
        assert_eq!(soil.k_a, 0.035);
        assert_eq!(soil.cohesion, 0.0);
        soil.validate().unwrap();
        assert_eq!(ReferenceDataset::bundled().wheel(), WheelGeometry::rashid());
    }

    #[test]
    fn render_lists_every_row() {
        let text = render(ReferenceDataset::bundled());
        for id in ["C1 - 0.00", "C2 - 0.25", "C3 - 0.50", "C4 - 0.75"] {
            assert!(text.contains(id));
        }
        assert!(text.contains("15620"));
    }
}
