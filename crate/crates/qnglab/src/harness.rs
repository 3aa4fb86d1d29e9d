//! Seeded experiment runs and optimizer comparisons.

use serde::{Deserialize, Serialize};

use qng_core::seeding;
use qng_core::{build_benchmark_circuit, Objective, OptimizerError, RunRecord, ShotBudget};

use crate::config::{ExperimentConfig, OptimizerChoice, SweepAxis};
use crate::HarnessError;

/// One optimization run with the metadata needed to emit result rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTrace {
    pub run_id: String,
    pub optimizer: String,
    pub metric_mode: String,
    pub n_qubits: usize,
    pub layers: usize,
    pub eta: f64,
    pub shots: Option<u64>,
    pub seed: u64,
    pub records: Vec<RunRecord>,
}

/// Uniform angles on [0, 2 pi), drawn from the run seed's init stream.
pub fn initial_parameters(seed: u64, d: usize) -> Vec<f64> {
    let mut rng = seeding::stream_rng(seed, seeding::INIT_STREAM);
    (0..d)
        .map(|_| seeding::next_unit(&mut rng) * std::f64::consts::TAU)
        .collect()
}

fn run_id(config: &ExperimentConfig, choice: &OptimizerChoice) -> String {
    let shots = match config.shots {
        Some(s) => s.to_string(),
        None => "analytic".to_string(),
    };
    format!(
        "{}-n{}-L{}-s{}-seed{}",
        choice.label(),
        config.n_qubits,
        config.layers,
        shots,
        config.seed
    )
}

/// Build the benchmark circuit from (n, layers, seed), initialize parameters
/// from the same seed, run the configured optimizer, and return the trace.
/// Identical configs produce identical traces (wall time aside).
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentTrace, HarnessError> {
    config.validate()?;
    let choice = config.choice()?;
    let (circuit, observable) = build_benchmark_circuit(config.n_qubits, config.layers, config.seed)?;
    let init = initial_parameters(config.seed, circuit.param_count());
    let objective = Objective::new(circuit, observable, config.convention()?);
    let budget = match config.shots {
        None => ShotBudget::Analytic,
        Some(shots) => ShotBudget::sampled(shots, config.seed)
            .map_err(|e| HarnessError::Config(e.to_string()))?,
    };
    let optimizer = choice.optimizer_config(config.eta);

    let id = run_id(config, &choice);
    let trace_of = |records: Vec<RunRecord>| ExperimentTrace {
        run_id: id.clone(),
        optimizer: choice.kind.as_str().to_string(),
        metric_mode: choice.metric_label().to_string(),
        n_qubits: config.n_qubits,
        layers: config.layers,
        eta: config.eta,
        shots: config.shots,
        seed: config.seed,
        records,
    };

    match qng_core::run_optimization(&objective, &init, &optimizer, &budget, config.max_iters) {
        Ok(records) => Ok(trace_of(records)),
        Err(OptimizerError::NonFiniteLoss { iteration, trace }) => Err(HarnessError::Numerical {
            run_id: id.clone(),
            iteration,
            trace: Box::new(trace_of(trace)),
        }),
        Err(e) => Err(HarnessError::Config(e.to_string())),
    }
}

#[cfg(feature = "parallel")]
fn run_many(configs: Vec<ExperimentConfig>) -> Vec<Result<ExperimentTrace, HarnessError>> {
    use rayon::prelude::*;
    configs.par_iter().map(run_experiment).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_many(configs: Vec<ExperimentConfig>) -> Vec<Result<ExperimentTrace, HarnessError>> {
    configs.iter().map(run_experiment).collect()
}

/// Run several optimizers against the same circuit seed and initialization.
/// Traces come back in the order of `choices`.
pub fn compare_optimizers(
    base: &ExperimentConfig,
    choices: &[OptimizerChoice],
) -> Result<Vec<ExperimentTrace>, HarnessError> {
    if choices.is_empty() {
        return Err(HarnessError::Config("no optimizers selected".into()));
    }
    let configs: Vec<ExperimentConfig> = choices.iter().map(|c| base.with_choice(*c)).collect();
    for c in &configs {
        c.validate()?;
    }
    run_many(configs).into_iter().collect()
}

/// Run the comparison at every value of the swept axis.
pub fn sweep(
    base: &ExperimentConfig,
    axis: &SweepAxis,
    choices: &[OptimizerChoice],
) -> Result<Vec<ExperimentTrace>, HarnessError> {
    if choices.is_empty() {
        return Err(HarnessError::Config("no optimizers selected".into()));
    }
    let mut configs = Vec::new();
    match axis {
        SweepAxis::Layers(values) => {
            for &layers in values {
                let mut cfg = base.clone();
                cfg.layers = layers;
                for choice in choices {
                    configs.push(cfg.with_choice(*choice));
                }
            }
        }
        SweepAxis::Shots(values) => {
            for &shots in values {
                let mut cfg = base.clone();
                cfg.shots = shots;
                for choice in choices {
                    configs.push(cfg.with_choice(*choice));
                }
            }
        }
    }
    for c in &configs {
        c.validate()?;
    }
    run_many(configs).into_iter().collect()
}

/// First iteration whose recorded energy is at or below `threshold`.
pub fn iterations_to_energy(records: &[RunRecord], threshold: f64) -> Option<usize> {
    records
        .iter()
        .find(|r| r.energy <= threshold)
        .map(|r| r.iteration)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(optimizer: &str, metric: &str) -> ExperimentConfig {
        ExperimentConfig {
            n_qubits: 3,
            layers: 2,
            optimizer: optimizer.into(),
            metric_mode: metric.into(),
            eta: 0.01,
            shots: None,
            seed: 11,
            max_iters: 4,
            loss_convention: "plain".into(),
            output: None,
        }
    }

    #[test]
    fn run_produces_fencepost_records_with_exact_accounting() {
        let trace = run_experiment(&config("qng", "block")).unwrap();
        assert_eq!(trace.records.len(), 5);
        let d = 6;
        let l = 2;
        for (t, r) in trace.records.iter().enumerate() {
            assert_eq!(r.iteration, t);
            assert_eq!(r.qevals_cum, (t as u64) * (2 * d + l));
        }
    }

    #[test]
    fn gd_and_adam_consume_only_gradient_evaluations() {
        for name in ["gd", "adam"] {
            let trace = run_experiment(&config(name, "block")).unwrap();
            let last = trace.records.last().unwrap();
            assert_eq!(last.qevals_cum, 4 * 2 * 6);
        }
    }

    #[test]
    fn traces_are_reproducible_modulo_wall_time() {
        let mut cfg = config("qng", "diag");
        cfg.shots = Some(128);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.iteration, rb.iteration);
            assert_eq!(ra.loss.to_bits(), rb.loss.to_bits());
            assert_eq!(ra.energy.to_bits(), rb.energy.to_bits());
            assert_eq!(ra.grad_norm.map(f64::to_bits), rb.grad_norm.map(f64::to_bits));
            assert_eq!(ra.qevals_cum, rb.qevals_cum);
        }
    }

    #[test]
    fn comparison_shares_initialization_across_kinds() {
        let choices = OptimizerChoice::parse_list("gd,adam,qng-block,qng-diag").unwrap();
        let traces = compare_optimizers(&config("gd", "block"), &choices).unwrap();
        assert_eq!(traces.len(), 4);
        let first_energy = traces[0].records[0].energy;
        for t in &traces {
            assert_eq!(t.records[0].energy.to_bits(), first_energy.to_bits());
        }
        assert_eq!(traces[2].metric_mode, "block");
        assert_eq!(traces[1].metric_mode, "none");
    }

    #[test]
    fn sweep_covers_every_axis_value() {
        let choices = OptimizerChoice::parse_list("qng-diag").unwrap();
        let axis = SweepAxis::parse("layers=1,2,3").unwrap();
        let traces = sweep(&config("qng", "diag"), &axis, &choices).unwrap();
        assert_eq!(traces.len(), 3);
        assert_eq!(
            traces.iter().map(|t| t.layers).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
    }

    #[test]
    fn iterations_to_energy_finds_first_crossing() {
        let cfg = ExperimentConfig {
            max_iters: 60,
            eta: 0.1,
            ..config("qng", "diag")
        };
        let trace = run_experiment(&cfg).unwrap();
        if let Some(t) = iterations_to_energy(&trace.records, -0.5) {
            assert!(trace.records[t].energy <= -0.5);
            assert!(trace.records[..t].iter().all(|r| r.energy > -0.5));
        }
    }
}
