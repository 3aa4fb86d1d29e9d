//! Experiment configuration: JSON schema, validation, optimizer-choice
//! strings, and sweep axes.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use qng_core::{LossConvention, MetricMode, OptimizerConfig, OptimizerKind};

use crate::HarnessError;

/// JSON experiment description consumed by `qnglab run` and friends.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_qubits: usize,
    pub layers: usize,
    /// One of gd | adam | qng | natural-adam.
    pub optimizer: String,
    /// full | block | diag; only read by qng and natural-adam.
    #[serde(default = "default_metric_mode")]
    pub metric_mode: String,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Shots per expectation value; omit (null) for analytic estimates.
    #[serde(default)]
    pub shots: Option<u64>,
    pub seed: u64,
    pub max_iters: usize,
    /// plain (energy) or half.
    #[serde(default = "default_convention")]
    pub loss_convention: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_metric_mode() -> String {
    "block".into()
}

fn default_eta() -> f64 {
    0.01
}

fn default_convention() -> String {
    "plain".into()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n_qubits < 2 {
            return Err(HarnessError::Config(format!(
                "benchmark needs at least 2 qubits, got {}",
                self.n_qubits
            )));
        }
        if self.n_qubits > qng_core::MAX_QUBITS {
            return Err(HarnessError::Config(format!(
                "n_qubits {} exceeds the engine limit {}",
                self.n_qubits,
                qng_core::MAX_QUBITS
            )));
        }
        if self.layers == 0 {
            return Err(HarnessError::Config("layers must be at least 1".into()));
        }
        if !(self.eta > 0.0) {
            return Err(HarnessError::Config(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if self.shots == Some(0) {
            return Err(HarnessError::Config(
                "shots must be at least 1 in sampled mode (omit for analytic)".into(),
            ));
        }
        self.convention()?;
        self.choice()?;
        Ok(())
    }

    pub fn convention(&self) -> Result<LossConvention, HarnessError> {
        match self.loss_convention.as_str() {
            "plain" => Ok(LossConvention::Plain),
            "half" => Ok(LossConvention::Half),
            other => Err(HarnessError::Config(format!(
                "unknown loss convention {other:?} (expected plain or half)"
            ))),
        }
    }

    /// The optimizer/metric pair selected by this config.
    pub fn choice(&self) -> Result<OptimizerChoice, HarnessError> {
        let kind = match self.optimizer.as_str() {
            "gd" => OptimizerKind::Gd,
            "adam" => OptimizerKind::Adam,
            "qng" => OptimizerKind::Qng,
            "natural-adam" => OptimizerKind::NaturalAdam,
            other => {
                // allow combined forms like "qng-diag" in the config too
                return OptimizerChoice::from_str(other);
            }
        };
        let metric = parse_metric_mode(&self.metric_mode)?;
        Ok(OptimizerChoice { kind, metric })
    }

    pub fn with_choice(&self, choice: OptimizerChoice) -> Self {
        let mut out = self.clone();
        out.optimizer = choice.kind.as_str().to_string();
        out.metric_mode = choice.metric.as_str().to_string();
        out
    }
}

fn parse_metric_mode(s: &str) -> Result<MetricMode, HarnessError> {
    match s {
        "full" => Ok(MetricMode::Full),
        "block" | "block-diagonal" => Ok(MetricMode::BlockDiagonal),
        "diag" | "diagonal" => Ok(MetricMode::Diagonal),
        other => Err(HarnessError::Config(format!(
            "unknown metric mode {other:?} (expected full, block, or diag)"
        ))),
    }
}

/// An optimizer kind plus metric mode, written `gd`, `adam`, `qng-block`,
/// `qng-diag`, `qng-full`, or `natural-adam[-block|-diag|-full]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimizerChoice {
    pub kind: OptimizerKind,
    pub metric: MetricMode,
}

impl OptimizerChoice {
    pub fn label(&self) -> String {
        if self.kind.uses_metric() {
            format!("{}-{}", self.kind.as_str(), self.metric.as_str())
        } else {
            self.kind.as_str().to_string()
        }
    }

    /// Metric mode string for trace metadata; "none" for gradient-only
    /// optimizers.
    pub fn metric_label(&self) -> &'static str {
        if self.kind.uses_metric() {
            self.metric.as_str()
        } else {
            "none"
        }
    }

    pub fn optimizer_config(&self, eta: f64) -> OptimizerConfig {
        OptimizerConfig::new(self.kind)
            .with_eta(eta)
            .with_metric_mode(self.metric)
    }

    pub fn from_str(s: &str) -> Result<Self, HarnessError> {
        let (kind, metric) = match s {
            "gd" => (OptimizerKind::Gd, MetricMode::BlockDiagonal),
            "adam" => (OptimizerKind::Adam, MetricMode::BlockDiagonal),
            "qng" => (OptimizerKind::Qng, MetricMode::BlockDiagonal),
            "natural-adam" => (OptimizerKind::NaturalAdam, MetricMode::BlockDiagonal),
            _ => {
                let (base, mode) = s.rsplit_once('-').ok_or_else(|| {
                    HarnessError::Config(format!("unknown optimizer {s:?}"))
                })?;
                let kind = match base {
                    "qng" => OptimizerKind::Qng,
                    "natural-adam" => OptimizerKind::NaturalAdam,
                    _ => return Err(HarnessError::Config(format!("unknown optimizer {s:?}"))),
                };
                (kind, parse_metric_mode(mode)?)
            }
        };
        Ok(Self { kind, metric })
    }

    /// Parse a comma-separated list such as `gd,adam,qng-block,qng-diag`.
    pub fn parse_list(s: &str) -> Result<Vec<Self>, HarnessError> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(Self::from_str)
            .collect()
    }
}

/// Output format for emitted traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(HarnessError::Config(format!(
                "unknown output format {other:?} (expected csv or json)"
            ))),
        }
    }
}

/// A swept configuration axis, e.g. `layers=3,4,5,6` or
/// `shots=analytic,1024,8192`.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Layers(Vec<usize>),
    Shots(Vec<Option<u64>>),
}

impl SweepAxis {
    pub fn parse(spec: &str) -> Result<Self, HarnessError> {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("sweep spec {spec:?} needs key=v1,v2")))?;
        let parts: Vec<&str> = values.split(',').map(str::trim).collect();
        if parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
            return Err(HarnessError::Config(format!(
                "sweep spec {spec:?} has empty values"
            )));
        }
        match key {
            "layers" => {
                let vals = parts
                    .iter()
                    .map(|p| {
                        p.parse::<usize>().map_err(|_| {
                            HarnessError::Config(format!("bad layer count {p:?} in sweep"))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(SweepAxis::Layers(vals))
            }
            "shots" => {
                let vals = parts
                    .iter()
                    .map(|p| {
                        if *p == "analytic" {
                            Ok(None)
                        } else {
                            p.parse::<u64>().map(Some).map_err(|_| {
                                HarnessError::Config(format!("bad shot count {p:?} in sweep"))
                            })
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(SweepAxis::Shots(vals))
            }
            other => Err(HarnessError::Config(format!(
                "unknown sweep key {other:?} (expected layers or shots)"
            ))),
        }
    }
}
