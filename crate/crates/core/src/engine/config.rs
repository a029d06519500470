//! Solver configuration.

use serde::{Deserialize, Serialize};

use crate::capacity::Capacity;
use crate::split_merge::Orientation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Dual decomposition without merging, capped at `max_iterations`.
    BaselinePbk,
    /// Pairwise merging once the disagreement count stalls for `ITER` rounds.
    NaiveConverged,
    /// Merge every `K` rounds in groups of `l` (see [`super::ScheduleStrategy`]).
    Dynamic,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::BaselinePbk => "baseline_pbk",
            Mode::NaiveConverged => "naive_converged",
            Mode::Dynamic => "dynamic",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "baseline_pbk" | "baseline" | "pbk" => Ok(Mode::BaselinePbk),
            "naive_converged" | "naive" | "cpbk" => Ok(Mode::NaiveConverged),
            "dynamic" => Ok(Mode::Dynamic),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TransportConfig {
    /// Shared memory: exchanges cost nothing.
    #[default]
    InProcess,
    /// Subgraphs live on `machines` simulated hosts; every cross-host message
    /// costs `latency_s + bytes / bytes_per_sec` of modeled time.
    SimulatedNetwork { machines: usize, latency_s: f64, bytes_per_sec: f64 },
}

impl std::str::FromStr for TransportConfig {
    type Err = String;
    /// `in_process`, or `sim:<machines>[:<latency_s>[:<bytes_per_sec>]]`.
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "in_process" || s == "in-process" {
            return Ok(TransportConfig::InProcess);
        }
        let mut parts = s.split(':');
        if parts.next() != Some("sim") {
            return Err(format!("unknown transport `{s}` (expected in_process or sim:<machines>[:<latency>[:<bw>]])"));
        }
        let num = |p: Option<&str>, default: f64| -> Result<f64, String> {
            p.map_or(Ok(default), |v| v.parse::<f64>().map_err(|e| format!("bad transport number `{v}`: {e}")))
        };
        let machines = num(parts.next(), 2.0)? as usize;
        let latency_s = num(parts.next(), 1e-4)?;
        let bytes_per_sec = num(parts.next(), 1e9)?;
        if machines == 0 || latency_s < 0.0 || bytes_per_sec <= 0.0 {
            return Err(format!("invalid transport parameters in `{s}`"));
        }
        Ok(TransportConfig::SimulatedNetwork { machines, latency_s, bytes_per_sec })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mode: Mode,
    /// Initial number of subgraphs `N`.
    pub n_subgraphs: usize,
    /// Stall patience `ITER` of the naive converged mode.
    pub iter_patience: usize,
    /// Group size `l` of the dynamic schedule.
    pub merge_group_size: usize,
    /// Period `K` of the dynamic schedule.
    pub merge_period: usize,
    /// Iteration cap of the baseline mode.
    pub max_iterations: usize,
    /// Initial dual step size.
    pub step_init: Capacity,
    pub transport: TransportConfig,
    /// Worker threads; 0 means one per subgraph.
    pub threads: usize,
    /// Pixel grid shape `(width, height)`; with it the graph is cut into
    /// stripes, without it into BFS layers.
    pub grid: Option<(usize, usize)>,
    pub orientation: Orientation,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: Mode::NaiveConverged,
            n_subgraphs: 2,
            iter_patience: 20,
            merge_group_size: 2,
            merge_period: 10,
            max_iterations: 1000,
            step_init: Capacity::ONE,
            transport: TransportConfig::InProcess,
            threads: 0,
            grid: None,
            orientation: Orientation::Vertical,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_subgraphs == 0 {
            return Err("n_subgraphs must be at least 1".into());
        }
        if self.iter_patience == 0 {
            return Err("iter_patience must be at least 1".into());
        }
        if self.merge_group_size < 2 {
            return Err("merge_group_size must be at least 2".into());
        }
        if self.merge_period == 0 {
            return Err("merge_period must be at least 1".into());
        }
        if self.max_iterations == 0 {
            return Err("max_iterations must be at least 1".into());
        }
        if self.step_init <= Capacity::ZERO {
            return Err("step_init must be positive".into());
        }
        Ok(())
    }
}
