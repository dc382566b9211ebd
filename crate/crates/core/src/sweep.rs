//! Parameter sweeps over the delay and the tabular result they produce.
//!
//! All sweeps are parameterised by the dimensionless angle `tau * Delta`
//! (radians), with splittings expressed in units of the reference splitting,
//! so `tau = tau_delta` numerically.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::distribution::{correct_set, Conditioning, CorrectSetRule, DistributionKernel};
use crate::number_theory::FactoringInstance;
use crate::par::{try_map_range, Backend};
use crate::phase_model::{PhaseConvention, QubitPhases, SplittingModel};
use crate::{Error, Result};

/// A single table cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(u64),
    Real(f64),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Int(i) => i as f64,
            Value::Real(x) => x,
        }
    }

    /// Integers verbatim, reals with 12 significant digits in scientific
    /// notation. Independent of locale.
    pub fn render(self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Real(x) => format!("{x:.11e}"),
        }
    }
}

/// Named columns of swept parameters and results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl SweepResult {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push_row(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_f64()).collect())
    }

    /// CSV with LF line endings; `comment`, if given, becomes a leading
    /// `# ...` line.
    pub fn write_csv<W: Write>(&self, mut out: W, comment: Option<&str>) -> io::Result<()> {
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.render()).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Evenly spaced `tau * Delta` values, given in units of pi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauGrid {
    pub start_pi: f64,
    pub stop_pi: f64,
    pub points: usize,
}

impl Default for TauGrid {
    fn default() -> Self {
        Self { start_pi: 0.0, stop_pi: 4.0, points: 401 }
    }
}

impl TauGrid {
    /// Grid values in radians; endpoints are hit exactly.
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 || !self.start_pi.is_finite() || !self.stop_pi.is_finite() {
            return Err(Error::InvalidRange(format!("{self:?}")));
        }
        if self.points == 1 {
            return Ok(vec![self.start_pi * PI]);
        }
        let span = self.stop_pi - self.start_pi;
        let last = (self.points - 1) as f64;
        Ok((0..self.points).map(|i| (self.start_pi + span * i as f64 / last) * PI).collect())
    }
}

/// Settings shared by the delay sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub splitting: SplittingModel,
    pub convention: PhaseConvention,
    pub conditioning: Conditioning,
    pub rule: CorrectSetRule,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            splitting: SplittingModel::Identical { delta: 1.0 },
            convention: PhaseConvention::Hamming,
            conditioning: Conditioning::AveragedOverS,
            rule: CorrectSetRule::NearestMultiple,
        }
    }
}

/// Long-format `tau_delta,k,P` table: the full distribution at each angle.
pub fn distribution_sweep(
    backend: Backend,
    inst: &FactoringInstance,
    settings: &SweepSettings,
    tau_deltas: &[f64],
) -> Result<SweepResult> {
    let kernel = DistributionKernel::new(inst)?;
    let phases = QubitPhases::from_model(&settings.splitting, inst.l(), 0, settings.convention)?;
    let mut table = SweepResult::new(["tau_delta", "k", "P"]);
    for &td in tau_deltas {
        let dist = kernel.distribution(backend, &phases, td, settings.conditioning)?;
        for (k, &p) in dist.probs().iter().enumerate() {
            table.push_row(vec![Value::Real(td), Value::Int(k as u64), Value::Real(p)]);
        }
    }
    Ok(table)
}

/// `tau_delta,Pe` table.
pub fn delay_sweep(
    backend: Backend,
    inst: &FactoringInstance,
    settings: &SweepSettings,
    tau_deltas: &[f64],
) -> Result<SweepResult> {
    let kernel = DistributionKernel::new(inst)?;
    let phases = QubitPhases::from_model(&settings.splitting, inst.l(), 0, settings.convention)?;
    let cset = correct_set(inst, settings.rule);
    let pes = try_map_range(backend, tau_deltas.len(), |i| {
        kernel.success_probability(&phases, tau_deltas[i], settings.conditioning, &cset)
    })?;
    let mut table = SweepResult::new(["tau_delta", "Pe"]);
    for (&td, pe) in tau_deltas.iter().zip(pes) {
        table.push_row(vec![Value::Real(td), Value::Real(pe)]);
    }
    Ok(table)
}
