//! Machine-readable trace emission: CSV and JSON with a fixed column set.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;
use crate::harness::ExperimentTrace;
use crate::HarnessError;

/// One emitted row; the CSV column order matches the field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: String,
    pub optimizer: String,
    pub metric_mode: String,
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub eta: f64,
    /// `analytic` or the shot count.
    pub shots: String,
    pub seed: u64,
    pub iter: usize,
    pub loss: f64,
    pub energy: f64,
    pub grad_norm: Option<f64>,
    pub qevals_cum: u64,
    pub wall_ms: f64,
}

/// Flatten traces into rows in trace order.
pub fn trace_rows(traces: &[ExperimentTrace]) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for trace in traces {
        let shots = match trace.shots {
            Some(s) => s.to_string(),
            None => "analytic".to_string(),
        };
        for record in &trace.records {
            rows.push(ResultRow {
                run_id: trace.run_id.clone(),
                optimizer: trace.optimizer.clone(),
                metric_mode: trace.metric_mode.clone(),
                n: trace.n_qubits,
                l: trace.layers,
                eta: trace.eta,
                shots: shots.clone(),
                seed: trace.seed,
                iter: record.iteration,
                loss: record.loss,
                energy: record.energy,
                grad_norm: record.grad_norm,
                qevals_cum: record.qevals_cum,
                wall_ms: record.wall_ms,
            });
        }
    }
    rows
}

/// Write traces to `path` as CSV or JSON. Emission is a pure function of
/// the traces, so identical traces re-emit byte-identically.
pub fn emit_results(
    traces: &[ExperimentTrace],
    path: &Path,
    format: OutputFormat,
) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut writer = BufWriter::new(file);
    let result = write_results(&mut writer, traces, format).and_then(|()| writer.flush());
    result.map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Same as [`emit_results`] but to any writer (the CLI uses stdout).
pub fn emit_results_to_writer(
    out: &mut dyn Write,
    traces: &[ExperimentTrace],
    format: OutputFormat,
) -> Result<(), HarnessError> {
    write_results(out, traces, format).map_err(|e| HarnessError::Io {
        path: std::path::PathBuf::from("<writer>"),
        source: e,
    })
}

fn write_results(
    out: &mut dyn Write,
    traces: &[ExperimentTrace],
    format: OutputFormat,
) -> Result<(), std::io::Error> {
    let rows = trace_rows(traces);
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            if rows.is_empty() {
                // header-only output for empty trace lists
                w.write_record([
                    "run_id",
                    "optimizer",
                    "metric_mode",
                    "n",
                    "L",
                    "eta",
                    "shots",
                    "seed",
                    "iter",
                    "loss",
                    "energy",
                    "grad_norm",
                    "qevals_cum",
                    "wall_ms",
                ])?;
            }
            for row in &rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &rows)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Parse rows back from a CSV results file.
pub fn read_rows_csv(path: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut reader = csv::Reader::from_reader(file);
    reader
        .deserialize()
        .collect::<Result<Vec<ResultRow>, _>>()
        .map_err(|e| HarnessError::Config(format!("bad results csv: {e}")))
}

/// Parse rows back from a JSON results file.
pub fn read_rows_json(path: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_reader(file)
        .map_err(|e| HarnessError::Config(format!("bad results json: {e}")))
}
