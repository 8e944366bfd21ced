//! Steady-state means against the reference measurement table.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::io::emit::number;
use crate::io::reference::{ReferenceDataset, SimExp};
use crate::rig::ExperimentOutcome;

/// Steady-state means of one labelled run.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub label: String,
    pub drawbar_pull: f64,
    pub normal_force: f64,
    pub sinkage: f64,
}

impl From<&ExperimentOutcome> for Observation {
    fn from(o: &ExperimentOutcome) -> Self {
        Self {
            label: o.label().to_string(),
            drawbar_pull: o.steady.drawbar_pull.mean,
            normal_force: o.steady.normal_force.mean,
            sinkage: o.steady.sinkage.mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    DrawbarPull,
    NormalForce,
    Sinkage,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [Quantity::DrawbarPull, Quantity::NormalForce, Quantity::Sinkage];

    pub fn key(self) -> &'static str {
        match self {
            Quantity::DrawbarPull => "drawbar_pull_N",
            Quantity::NormalForce => "normal_force_N",
            Quantity::Sinkage => "sinkage_m",
        }
    }

    /// Whether the quantity decides pass or fail. Normal force is pinned
    /// by the applied load and only reported.
    pub fn gated(self) -> bool {
        !matches!(self, Quantity::NormalForce)
    }

    fn observed(self, o: &Observation) -> f64 {
        match self {
            Quantity::DrawbarPull => o.drawbar_pull,
            Quantity::NormalForce => o.normal_force,
            Quantity::Sinkage => o.sinkage,
        }
    }
}

/// Reads the steady-state means back out of an emitted summary.
pub fn observations_from_summary(text: &str) -> Result<Vec<Observation>, String> {
    let doc: Value = serde_json::from_str(text).map_err(|e| format!("summary is not valid JSON: {e}"))?;
    let experiments = doc
        .get("experiments")
        .and_then(Value::as_array)
        .ok_or("summary has no `experiments` array")?;
    experiments
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let label = e
                .get("label")
                .and_then(Value::as_str)
                .ok_or(format!("experiments[{i}] has no `label`"))?;
            let mean = |key: &str| {
                e.pointer(&format!("/steady/{key}/mean"))
                    .and_then(Value::as_f64)
                    .ok_or(format!("experiments[{i}] has no steady.{key}.mean"))
            };
            Ok(Observation {
                label: label.to_string(),
                drawbar_pull: mean("drawbar_pull_N")?,
                normal_force: mean("normal_force_N")?,
                sinkage: mean("sinkage_m")?,
            })
        })
        .collect()
}

/// `(observed - reference) / reference`.
pub fn relative_deviation(observed: f64, reference: f64) -> f64 {
    (observed - reference) / reference
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub quantity: Quantity,
    pub observed: f64,
    pub sim: f64,
    pub exp: f64,
    pub vs_sim: f64,
    pub vs_exp: f64,
    /// Gated cells pass when `|vs_sim| <= tolerance`; ungated cells always pass.
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub id: String,
    pub row_label: String,
    pub cells: Vec<Cell>,
}

impl Row {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(|c| c.passed)
    }

    pub fn cell(&self, q: Quantity) -> &Cell {
        self.cells
            .iter()
            .find(|c| c.quantity == q)
            .expect("every quantity has a cell")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub tolerance: f64,
    pub rows: Vec<Row>,
    /// Reference experiments without an observation.
    pub missing: Vec<String>,
    /// Observations whose label names no reference experiment.
    pub unmatched: Vec<String>,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.missing.is_empty() && self.unmatched.is_empty() && self.rows.iter().all(Row::passed)
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut cells = serde_json::Map::new();
                for c in &r.cells {
                    cells.insert(
                        c.quantity.key().into(),
                        json!({
                            "observed": number(c.observed),
                            "sim": number(c.sim),
                            "exp": number(c.exp),
                            "deviation_vs_sim": number(c.vs_sim),
                            "deviation_vs_exp": number(c.vs_exp),
                            "gated": c.quantity.gated(),
                            "passed": c.passed,
                        }),
                    );
                }
                json!({ "id": r.id, "row": r.row_label, "passed": r.passed(), "cells": cells })
            })
            .collect();
        json!({
            "tolerance": number(self.tolerance),
            "passed": self.passed(),
            "rows": rows,
            "missing": self.missing,
            "unmatched": self.unmatched,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:<15} {:>12} {:>10} {:>10} {:>9} {:>9}  status",
            "row", "quantity", "observed", "sim", "exp", "vs sim", "vs exp"
        );
        for r in &self.rows {
            for c in &r.cells {
                let status = match (c.quantity.gated(), c.passed) {
                    (false, _) => "info",
                    (true, true) => "ok",
                    (true, false) => "FAIL",
                };
                let _ = writeln!(
                    out,
                    "{:<10} {:<15} {:>12.6} {:>10} {:>10} {:>8.2}% {:>8.2}%  {status}",
                    r.row_label,
                    c.quantity.key(),
                    c.observed,
                    c.sim,
                    c.exp,
                    100.0 * c.vs_sim,
                    100.0 * c.vs_exp,
                );
            }
        }
        for id in &self.missing {
            let _ = writeln!(out, "missing experiment: {id}");
        }
        for label in &self.unmatched {
            let _ = writeln!(out, "unmatched experiment: {label}");
        }
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(
            out,
            "overall: {verdict} (tolerance {:.1}% vs sim)",
            100.0 * self.tolerance
        );
        out
    }
}

/// Compares observations, matched by label to reference experiment ids.
pub fn compare(observations: &[Observation], reference: &ReferenceDataset, tolerance: f64) -> ComparisonReport {
    let mut rows = Vec::new();
    let mut missing = Vec::new();
    for e in &reference.experiments {
        let Some(o) = observations.iter().find(|o| o.label == e.id) else {
            missing.push(e.id.clone());
            continue;
        };
        let columns = |q: Quantity| -> SimExp {
            match q {
                Quantity::DrawbarPull => e.drawbar_pull,
                Quantity::NormalForce => e.normal_force,
                Quantity::Sinkage => e.sinkage,
            }
        };
        let cells = Quantity::ALL
            .iter()
            .map(|&q| {
                let observed = q.observed(o);
                let col = columns(q);
                let vs_sim = relative_deviation(observed, col.sim);
                Cell {
                    quantity: q,
                    observed,
                    sim: col.sim,
                    exp: col.exp,
                    vs_sim,
                    vs_exp: relative_deviation(observed, col.exp),
                    passed: !q.gated() || vs_sim.abs() <= tolerance,
                }
            })
            .collect();
        rows.push(Row {
            id: e.id.clone(),
            row_label: e.row_label(),
            cells,
        });
    }
    let mut unmatched = Vec::new();
    for (i, o) in observations.iter().enumerate() {
        let known = reference.experiment(&o.label).is_some();
        let repeated = observations[..i].iter().any(|p| p.label == o.label);
        if !known || repeated {
            unmatched.push(o.label.clone());
        }
    }
    ComparisonReport {
        tolerance,
        rows,
        missing,
        unmatched,
    }
}
