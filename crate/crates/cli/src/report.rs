//! CSV report rows and the relative-time histogram.

use std::io::Write;

use dpgc_core::{Mode, TransportConfig};
use serde::Serialize;

use crate::BenchError;

/// Column order of the CSV report. Changing it is a breaking change; the
/// golden test in `tests/report.rs` pins it.
pub const COLUMNS: [&str; 26] = [
    "instance",
    "seed",
    "problem",
    "vertices",
    "arcs",
    "mode",
    "n_subgraphs",
    "iter_patience",
    "merge_group_size",
    "merge_period",
    "max_iterations",
    "transport",
    "repetitions",
    "t_serial_s",
    "t_mode_s",
    "relative_time",
    "cut_serial",
    "cut_mode",
    "converged",
    "iterations",
    "first_n_diff",
    "final_n_diff",
    "merges",
    "relative_reused_flow",
    "modeled_bytes",
    "modeled_time_s",
];

/// One solver run on one instance. `mode` is `serial` for the reference BK
/// row, whose parallel-only fields are zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub instance: String,
    pub seed: Option<u64>,
    pub problem: String,
    pub vertices: usize,
    pub arcs: usize,
    pub mode: String,
    pub n_subgraphs: usize,
    pub iter_patience: usize,
    pub merge_group_size: usize,
    pub merge_period: usize,
    pub max_iterations: usize,
    pub transport: String,
    pub repetitions: usize,
    pub t_serial_s: f64,
    pub t_mode_s: f64,
    pub relative_time: f64,
    pub cut_serial: String,
    pub cut_mode: String,
    pub converged: bool,
    pub iterations: usize,
    pub first_n_diff: usize,
    pub final_n_diff: usize,
    pub merges: usize,
    pub relative_reused_flow: f64,
    pub modeled_bytes: u64,
    pub modeled_time_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
}

impl BenchReport {
    pub fn write_csv(&self, w: impl Write) -> Result<(), BenchError> {
        let mut out = csv::Writer::from_writer(w);
        if self.rows.is_empty() {
            out.write_record(COLUMNS)?;
        }
        for row in &self.rows {
            out.serialize(row)?;
        }
        out.flush().map_err(|e| BenchError::Io("report".into(), e))?;
        Ok(())
    }

    /// Counts of converged runs per relative-time bin, one column per mode.
    pub fn write_histogram(&self, mut w: impl Write, bin: f64) -> Result<(), BenchError> {
        let modes: Vec<&str> = [Mode::BaselinePbk, Mode::NaiveConverged, Mode::Dynamic]
            .iter()
            .map(|m| m.name())
            .filter(|m| self.rows.iter().any(|r| r.mode == *m))
            .collect();
        let converged = |m: &'static str| self.rows.iter().filter(move |r| r.mode == m && r.converged);
        let n_bins = modes
            .iter()
            .flat_map(|&m| converged(m))
            .map(|r| (r.relative_time / bin).floor() as usize + 1)
            .max()
            .unwrap_or(0);
        let io = |e| BenchError::Io("histogram".into(), e);
        writeln!(w, "# relative time t_mode/t_serial, bin width {bin}").map_err(io)?;
        for m in &modes {
            let failed = self.rows.iter().filter(|r| r.mode == *m && !r.converged).count();
            writeln!(w, "# {m}: {failed} runs did not converge").map_err(io)?;
        }
        writeln!(w, "# bin_lo bin_hi {}", modes.join(" ")).map_err(io)?;
        for k in 0..n_bins {
            let (lo, hi) = (k as f64 * bin, (k + 1) as f64 * bin);
            let counts: Vec<usize> = modes
                .iter()
                .map(|m| converged(m).filter(|r| (r.relative_time / bin).floor() as usize == k).count())
                .collect();
            if counts.iter().all(|&c| c == 0) {
                continue;
            }
            let counts: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
            writeln!(w, "{lo:.6} {hi:.6} {}", counts.join(" ")).map_err(io)?;
        }
        Ok(())
    }
}

pub fn transport_label(t: &TransportConfig) -> String {
    match t {
        TransportConfig::InProcess => "in_process".into(),
        TransportConfig::SimulatedNetwork { machines, latency_s, bytes_per_sec } => {
            format!("sim:{machines}:{latency_s}:{bytes_per_sec}")
        }
    }
}
