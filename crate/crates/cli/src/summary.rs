use std::path::Path;

use serde::Serialize;

use crate::config::Settings;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Mean and standard error of one quantity over trials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub count: usize,
    pub mean: f64,
    pub std_error: f64,
}

impl Aggregate {
    pub fn of(name: &str, r: Option<f64>, values: &[f64]) -> Self {
        let count = values.len();
        let mean = if count == 0 {
            0.0
        } else {
            values.iter().sum::<f64>() / count as f64
        };
        let std_error = if count < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        };
        Aggregate {
            name: name.to_string(),
            r,
            count,
            mean,
            std_error,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Predicted {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_p: Option<f64>,
    /// `(r, λ(r))` per requested density.
    pub lambda: Vec<(f64, f64)>,
    /// `(α, ρ_k(α))` per requested density.
    pub rho_k: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary<R: Serialize> {
    pub schema_version: u32,
    pub command: String,
    pub config: Settings,
    pub predicted: Predicted,
    pub aggregates: Vec<Aggregate>,
    pub records: Vec<R>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
    pub wall_clock_seconds: f64,
}

impl<R: Serialize> RunSummary<R> {
    pub fn write(&self, path: Option<&Path>) -> Result<(), CliError> {
        let Some(path) = path else { return Ok(()) };
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn print_aggregates(&self) {
        for a in &self.aggregates {
            match a.r {
                Some(r) => eprintln!(
                    "{} r={r}: {:.6} ± {:.6} (n={})",
                    a.name, a.mean, a.std_error, a.count
                ),
                None => eprintln!(
                    "{}: {:.6} ± {:.6} (n={})",
                    a.name, a.mean, a.std_error, a.count
                ),
            }
        }
    }
}
