//! JSON scenario configuration: schema validation up front (unknown keys
//! rejected), then resolution into a runnable [`SimConfig`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{ClassSpec, CodeChoice};
use crate::error::{Error, Result};
use crate::simulator::{ArrivalProcess, DelaySource, SimConfig, StrategyRuntime};
use crate::solver::{build_thresholds, ThresholdTable};
use crate::strategies::StrategyKind;
use crate::trace::{load_trace, EmpiricalDelaySource};

fn default_alpha() -> f64 {
    0.99
}

fn default_true() -> bool {
    true
}

fn default_requests_per_cell() -> u64 {
    100_000
}

fn default_window_s() -> f64 {
    10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelaySourceKind {
    #[default]
    Model,
    Trace,
}

/// Grid for the static-versus-adaptive sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub lambdas: Vec<f64>,
    /// Static codes to sweep; defaults to every (n, k) within the class
    /// limits and redundancy cap.
    #[serde(default)]
    pub codes: Option<Vec<CodeChoice>>,
    /// Approximate arrivals per cell; each cell runs for this many over its
    /// arrival rate.
    #[serde(default = "default_requests_per_cell")]
    pub requests_per_cell: u64,
    #[serde(default = "default_true")]
    pub include_greedy: bool,
    #[serde(default = "default_true")]
    pub include_tofec: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub rate_per_s: f64,
    pub duration_s: f64,
}

/// Piecewise-rate experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSection {
    pub segments: Vec<SegmentConfig>,
    #[serde(default = "default_window_s")]
    pub window_s: f64,
}

/// Top-level scenario document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub threads: u32,
    pub arrival_rate_per_s: f64,
    pub duration_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup_s: Option<f64>,
    pub seed: u64,
    pub strategy: StrategyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_code: Option<CodeChoice>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub delay_source: DelaySourceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<String>,
    pub classes: Vec<ClassSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workload_change: Option<WorkloadSection>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl ScenarioConfig {
    /// Parse and schema-check a scenario file. Relative paths inside the
    /// scenario resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: ScenarioConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn warmup_or_default(&self, duration_s: f64) -> f64 {
        self.warmup_s.unwrap_or(duration_s * 0.1)
    }

    /// Threshold tables for the scenario's classes at its thread count.
    pub fn build_tables(&self) -> Result<Vec<ThresholdTable>> {
        self.classes
            .iter()
            .map(|cls| build_thresholds(cls, self.threads))
            .collect()
    }

    /// Resolve the configured strategy, building threshold tables when the
    /// adaptive strategy is selected.
    pub fn strategy_runtime(&self) -> Result<StrategyRuntime> {
        match self.strategy {
            StrategyKind::Static => {
                let code = self.static_code.ok_or_else(|| {
                    Error::Config("strategy \"static\" requires a static_code".into())
                })?;
                Ok(StrategyRuntime::Static(code))
            }
            StrategyKind::Greedy => Ok(StrategyRuntime::Greedy),
            StrategyKind::Tofec => Ok(StrategyRuntime::Tofec {
                alpha: self.alpha,
                tables: self.build_tables()?,
            }),
        }
    }

    pub fn delay_source(&self) -> Result<DelaySource> {
        match self.delay_source {
            DelaySourceKind::Model => Ok(DelaySource::Model),
            DelaySourceKind::Trace => {
                let rel = self.trace_path.as_ref().ok_or_else(|| {
                    Error::Config("delay_source \"trace\" requires a trace_path".into())
                })?;
                let path = self.base_dir.join(rel);
                let records = load_trace(&path)?;
                Ok(DelaySource::Trace(EmpiricalDelaySource::from_records(
                    &records,
                )?))
            }
        }
    }

    /// The scenario as a single constant-rate simulation.
    pub fn build_sim(&self) -> Result<SimConfig> {
        let cfg = SimConfig {
            threads: self.threads,
            arrivals: ArrivalProcess::Constant {
                rate: self.arrival_rate_per_s,
                duration_s: self.duration_s,
            },
            warmup_s: self.warmup_or_default(self.duration_s),
            seed: self.seed,
            classes: self.classes.clone(),
            strategy: self.strategy_runtime()?,
            delay_source: self.delay_source()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every static (n, k) within the joint class limits and redundancy cap.
    pub fn all_static_codes(&self) -> Vec<CodeChoice> {
        let k_max = self.classes.iter().map(|c| c.k_max).min().unwrap_or(1);
        let n_max = self.classes.iter().map(|c| c.n_max).min().unwrap_or(1);
        let r_max = self
            .classes
            .iter()
            .map(|c| c.r_max)
            .fold(f64::INFINITY, f64::min);
        let mut codes = Vec::new();
        for k in 1..=k_max {
            let n_cap = n_max.min((r_max * k as f64).floor() as u32).max(k);
            for n in k..=n_cap {
                codes.push(CodeChoice::new(n, k).unwrap());
            }
        }
        codes
    }
}
