use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use shorphase::{CorrectSetRule, PhaseConvention, SplittingModel};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    Hamming,
    Imbalance,
}

impl From<Convention> for PhaseConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Hamming => PhaseConvention::Hamming,
            Convention::Imbalance => PhaseConvention::Imbalance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Nearest,
    ContinuedFraction,
}

impl From<Rule> for CorrectSetRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Nearest => CorrectSetRule::NearestMultiple,
            Rule::ContinuedFraction => CorrectSetRule::ContinuedFraction,
        }
    }
}

/// Experiment parameters. Every field may come from the `--config` file or
/// from a flag; flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    /// Number to factor.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,

    /// Base coprime to N.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<u64>,

    /// Work register size (default: smallest L with 2^L > N^2).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<u32>,

    /// tau*Delta values in units of pi, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_delta_pi: Option<Vec<f64>>,

    /// First grid point of tau*Delta, in units of pi.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_start_pi: Option<f64>,

    /// Last grid point of tau*Delta, in units of pi.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_stop_pi: Option<f64>,

    /// Number of grid points.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_points: Option<usize>,

    /// Smallest work register size in a qubit sweep.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_min: Option<u32>,

    /// Largest work register size in a qubit sweep.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_max: Option<u32>,

    /// Identical splitting for every work qubit, in units of the reference.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,

    /// Per-qubit splittings (least significant qubit first), comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,

    /// Splitting model table (config file only).
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub splitting: Option<SplittingModel>,

    /// Splitting of the auxiliary qubits (oracle-check).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aux_delta: Option<f64>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convention: Option<Convention>,

    /// Condition on the auxiliary outcome a^s mod N instead of averaging.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<u64>,

    /// Which outcomes count as correct.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correct_set: Option<Rule>,

    /// Ensemble size.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Splitting spreads sigma/<Delta>, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_ratio: Option<Vec<f64>>,

    /// Matching points tau*<Delta> = 2 n pi to scan around, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matching_order: Option<Vec<u32>>,

    /// Half width of the window scanned around each matching point, in units of pi.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_pi: Option<f64>,

    /// Points per matching window.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_points: Option<usize>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {}", path.display(), e.message())))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Usage(format!("cannot serialise config: {e}")))
    }

    /// `self` with every field set in `flags` replaced.
    pub fn overlay(mut self, flags: ExperimentConfig) -> Self {
        if flags.deltas.is_some() || flags.delta.is_some() {
            self.splitting = None;
            self.delta = None;
            self.deltas = None;
        }
        overlay!(self, flags;
            n, a, l, tau_delta_pi, tau_start_pi, tau_stop_pi, tau_points, l_min, l_max,
            delta, deltas, splitting, aux_delta, convention, s, correct_set, samples, seed,
            sigma_ratio, matching_order, window_pi, window_points, out, format);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig {
            n: Some(21),
            a: Some(5),
            tau_delta_pi: Some(vec![0.0, 0.4, 1.0 / 3.0]),
            splitting: Some(SplittingModel::PerQubit { deltas: vec![1.0, 1.01] }),
            convention: Some(Convention::Imbalance),
            correct_set: Some(Rule::ContinuedFraction),
            format: Some(Format::Json),
            out: Some("x.csv".into()),
            ..Default::default()
        };
        let text = cfg.to_toml().unwrap();
        assert_eq!(toml::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn flags_win() {
        let file = ExperimentConfig {
            n: Some(15),
            a: Some(13),
            splitting: Some(SplittingModel::Identical { delta: 2.0 }),
            ..Default::default()
        };
        let flags = ExperimentConfig { a: Some(7), delta: Some(1.0), ..Default::default() };
        let merged = file.overlay(flags);
        assert_eq!((merged.n, merged.a, merged.delta), (Some(15), Some(7), Some(1.0)));
        assert_eq!(merged.splitting, None);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("n = 15\nbogus = 1\n").is_err());
    }
}
