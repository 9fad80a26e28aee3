use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use starcore::greedy::RepairBudget;
use starcore::thresholds::DEFAULT_GRID_STEPS;
use starcore::CspModel;

use crate::CliError;

/// Every experiment knob. The same keys are accepted on the command line
/// and in a `--config` JSON file; flags win.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Built-in model (`2col`, `nae`) or path to a model JSON file.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,

    /// Constraint densities, comma separated; M = round(r n).
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,

    /// Constraint count, exclusive with `--r`.
    #[arg(long = "M", global = true)]
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Worker threads for trial-level parallelism.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,

    /// Per-trial CSV (instance file for `sample`); stdout when absent.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// Run summary JSON.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,

    /// Path lengths for freezing scans, comma separated.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<Vec<usize>>,

    /// Rounds recorded by core scans.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i_max: Option<usize>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_steps: Option<usize>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_flips: Option<usize>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_expansions: Option<usize>,

    /// Sampler for `sample`: `planted`, `uniform` or `random`.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

impl Settings {
    pub fn from_json_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fills every unset field from `file`.
    pub fn overlay(mut self, file: Settings) -> Self {
        overlay!(self, file; model, k, n, r, m, trials, seed, jobs, out, json, ell, i_max,
            grid_steps, max_flips, max_expansions, kind);
        self
    }
}

/// How the number of constraints is specified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Density {
    Ratio(f64),
    Count(usize),
}

impl Density {
    pub fn count(self, n: usize) -> usize {
        match self {
            Density::Ratio(r) => (r * n as f64).round() as usize,
            Density::Count(m) => m,
        }
    }

    pub fn ratio(self, n: usize) -> f64 {
        match self {
            Density::Ratio(r) => r,
            Density::Count(m) => m as f64 / n as f64,
        }
    }
}

/// Settings checked against one command's needs.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub settings: Settings,
    pub model: CspModel,
}

impl ExperimentConfig {
    pub fn resolve(settings: Settings) -> Result<Self, CliError> {
        let name = settings
            .model
            .clone()
            .ok_or_else(|| CliError::Config("--model is required".into()))?;
        let model = load_model(&name, settings.k)?;
        if settings.r.is_some() && settings.m.is_some() {
            return Err(CliError::Config(
                "--r and --M are mutually exclusive".into(),
            ));
        }
        if let Some(r) = &settings.r {
            if r.is_empty() || r.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(CliError::Config(
                    "--r needs non-negative finite values".into(),
                ));
            }
        }
        if settings.jobs == Some(0) {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        Ok(ExperimentConfig { settings, model })
    }

    pub fn k(&self) -> usize {
        self.model.arity()
    }

    pub fn n(&self) -> Result<usize, CliError> {
        self.settings
            .n
            .ok_or_else(|| CliError::Config("--n is required".into()))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.settings
            .seed
            .ok_or_else(|| CliError::Config("--seed is required for stochastic commands".into()))
    }

    pub fn trials(&self) -> usize {
        self.settings.trials.unwrap_or(1)
    }

    pub fn densities(&self) -> Result<Vec<Density>, CliError> {
        match (&self.settings.r, self.settings.m) {
            (Some(r), None) => Ok(r.iter().map(|&x| Density::Ratio(x)).collect()),
            (None, Some(m)) => Ok(vec![Density::Count(m)]),
            (None, None) => Err(CliError::Config("one of --r or --M is required".into())),
            (Some(_), Some(_)) => unreachable!("checked in resolve"),
        }
    }

    /// Densities for commands where they are optional.
    pub fn ratios(&self) -> Vec<f64> {
        match (&self.settings.r, self.settings.m, self.settings.n) {
            (Some(r), _, _) => r.clone(),
            (None, Some(m), Some(n)) if n > 0 => vec![m as f64 / n as f64],
            _ => Vec::new(),
        }
    }

    pub fn ell_list(&self) -> Vec<usize> {
        self.settings.ell.clone().unwrap_or_else(|| vec![1, 2, 4])
    }

    pub fn i_max(&self) -> usize {
        self.settings.i_max.unwrap_or(6)
    }

    pub fn grid_steps(&self) -> usize {
        self.settings.grid_steps.unwrap_or(DEFAULT_GRID_STEPS)
    }

    pub fn budget(&self) -> RepairBudget {
        let d = RepairBudget::default();
        RepairBudget {
            max_flips: self.settings.max_flips.unwrap_or(d.max_flips),
            max_expansions: self.settings.max_expansions.unwrap_or(d.max_expansions),
        }
    }
}

fn load_model(name: &str, k: Option<usize>) -> Result<CspModel, CliError> {
    let path = Path::new(name);
    if name.ends_with(".json") || path.is_file() {
        let m = CspModel::from_json_file(path).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(k) = k {
            if k != m.arity() {
                return Err(CliError::Config(format!(
                    "--k {k} disagrees with the model file arity {}",
                    m.arity()
                )));
            }
        }
        return Ok(m);
    }
    let k = k.ok_or_else(|| CliError::Config("--k is required for built-in models".into()))?;
    Ok(CspModel::builtin(name, k)?)
}
