//! Benchmark settings: defaults, then a TOML file, then command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use dpgc_core::{Mode, Orientation, SegParams, SolverConfig, SyntheticKind, TransportConfig};
use serde::Deserialize;

use crate::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    Seg1,
    Seg2,
    Raw,
}

impl Problem {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::Seg1 => "seg1",
            Problem::Seg2 => "seg2",
            Problem::Raw => "raw",
        }
    }
}

impl FromStr for Problem {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "seg1" => Ok(Problem::Seg1),
            "seg2" => Ok(Problem::Seg2),
            "raw" => Ok(Problem::Raw),
            other => Err(format!("unknown problem `{other}` (expected seg1, seg2 or raw)")),
        }
    }
}

/// Where the graph comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum InputSpec {
    /// A PGM image, segmented as seg1 or seg2.
    Image(PathBuf),
    /// A DIMACS max-flow file, solved as is.
    Dimacs(PathBuf),
    /// `synthetic:<kind>:<W>x<H>`, one image per seed.
    Synthetic { kind: SyntheticKind, width: usize, height: usize },
}

impl FromStr for InputSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(rest) = s.strip_prefix("synthetic:") {
            let (kind, dims) =
                rest.split_once(':').ok_or_else(|| format!("expected synthetic:<kind>:<W>x<H>, got `{s}`"))?;
            let (width, height) = parse_dims(dims)?;
            return Ok(InputSpec::Synthetic { kind: kind.parse()?, width, height });
        }
        let path = PathBuf::from(s);
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("pgm" | "pnm") => Ok(InputSpec::Image(path)),
            _ => Ok(InputSpec::Dimacs(path)),
        }
    }
}

/// Parses `WxH`.
pub fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected <W>x<H>, got `{s}`"))?;
    let w = w.trim().parse::<usize>().map_err(|e| format!("bad width `{w}`: {e}"))?;
    let h = h.trim().parse::<usize>().map_err(|e| format!("bad height `{h}`: {e}"))?;
    if w == 0 || h == 0 {
        return Err(format!("dimensions must be positive, got `{s}`"));
    }
    Ok((w, h))
}

/// Every knob of `dpgc bench`, all optional so that a config file and the
/// flags can be layered.
#[derive(Args, Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Image (.pgm), DIMACS file, or synthetic:<seg1_worst|seg2_random>:<W>x<H>
    #[arg(long)]
    pub input: Option<String>,
    /// seg1, seg2 or raw (default: raw for DIMACS, seg1 for seg1_worst, seg2 otherwise)
    #[arg(long)]
    pub problem: Option<String>,
    /// Comma-separated solver modes: baseline_pbk, naive_converged, dynamic or all
    #[arg(long = "mode", value_delimiter = ',')]
    #[serde(rename = "mode")]
    pub modes: Option<Vec<String>>,
    /// Number of subgraphs N
    #[arg(long)]
    pub threads: Option<usize>,
    /// Worker threads for the subgraph solves (0: one per subgraph)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Stall patience ITER of naive_converged
    #[arg(long)]
    pub iter: Option<usize>,
    /// Group size of the dynamic merge schedule
    #[arg(long = "merge-size")]
    pub merge_size: Option<usize>,
    /// Period K of the dynamic merge schedule
    #[arg(long = "merge-period")]
    pub merge_period: Option<usize>,
    /// Iteration cap of baseline_pbk
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// in_process or sim:<machines>[:<latency_s>[:<bytes_per_sec>]]
    #[arg(long)]
    pub transport: Option<String>,
    /// Stripe orientation for image inputs: vertical or horizontal
    #[arg(long)]
    pub orientation: Option<String>,
    /// Seed of the first synthetic image
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of synthetic images (seeds seed, seed+1, ...)
    #[arg(long)]
    pub count: Option<usize>,
    /// Timed repetitions per solver; the best one is reported
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Gaussian width of the n-link kernel
    #[arg(long)]
    pub sigma: Option<f64>,
    /// n-link scale (seg1 edge_scale, seg2 pairwise_scale)
    #[arg(long = "pairwise-scale")]
    pub pairwise_scale: Option<f64>,
    /// seg2 t-link scale
    #[arg(long = "unary-scale")]
    pub unary_scale: Option<f64>,
    /// Fractional bits of the capacities
    #[arg(long = "frac-bits")]
    pub frac_bits: Option<u32>,
    /// CSV report path (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Histogram of relative times, gnuplot-friendly columns
    #[arg(long)]
    pub hist: Option<PathBuf>,
    /// Bin width of the histogram
    #[arg(long = "hist-bin")]
    pub hist_bin: Option<f64>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $(if $src.$f.is_some() { $dst.$f = $src.$f.clone(); })*
    };
}

impl Settings {
    pub fn from_toml_file(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(path.display().to_string(), e))?;
        Settings::from_toml(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Fields set in `other` win.
    pub fn overlay(mut self, other: &Settings) -> Settings {
        overlay!(
            self,
            other,
            input,
            problem,
            modes,
            threads,
            workers,
            iter,
            merge_size,
            merge_period,
            max_iter,
            transport,
            orientation,
            seed,
            count,
            repetitions,
            sigma,
            pairwise_scale,
            unary_scale,
            frac_bits,
            out,
            hist,
            hist_bin
        );
        self
    }

    pub fn resolve(&self) -> Result<BenchConfig, BenchError> {
        let bad = |e: String| BenchError::Config(e);
        let raw_input =
            self.input.clone().ok_or_else(|| bad("no input given (--input or `input` in the config)".into()))?;
        let input: InputSpec = raw_input.parse().map_err(bad)?;
        let problem = match &self.problem {
            Some(p) => p.parse().map_err(bad)?,
            None => match &input {
                InputSpec::Dimacs(_) => Problem::Raw,
                InputSpec::Synthetic { kind: SyntheticKind::Seg1Worst, .. } => Problem::Seg1,
                _ => Problem::Seg2,
            },
        };
        match (&input, problem) {
            (InputSpec::Dimacs(_), Problem::Seg1 | Problem::Seg2) => {
                return Err(bad("a DIMACS input can only be solved as problem `raw`".into()))
            }
            (InputSpec::Image(_) | InputSpec::Synthetic { .. }, Problem::Raw) => {
                return Err(bad("image inputs need problem seg1 or seg2".into()))
            }
            _ => {}
        }

        let modes = match &self.modes {
            None => vec![Mode::BaselinePbk, Mode::NaiveConverged, Mode::Dynamic],
            Some(list) if list.iter().any(|m| m == "all") => {
                vec![Mode::BaselinePbk, Mode::NaiveConverged, Mode::Dynamic]
            }
            Some(list) => list.iter().map(|m| m.parse::<Mode>()).collect::<Result<Vec<_>, _>>().map_err(bad)?,
        };

        let d = SolverConfig::default();
        let solver = SolverConfig {
            n_subgraphs: self.threads.unwrap_or(d.n_subgraphs),
            iter_patience: self.iter.unwrap_or(d.iter_patience),
            merge_group_size: self.merge_size.unwrap_or(d.merge_group_size),
            merge_period: self.merge_period.unwrap_or(d.merge_period),
            max_iterations: self.max_iter.unwrap_or(d.max_iterations),
            threads: self.workers.unwrap_or(d.threads),
            transport: match &self.transport {
                Some(t) => t.parse::<TransportConfig>().map_err(bad)?,
                None => d.transport,
            },
            orientation: match &self.orientation {
                Some(o) => o.parse::<Orientation>().map_err(bad)?,
                None => d.orientation,
            },
            ..d
        };
        solver.validate().map_err(bad)?;

        let base = if problem == Problem::Seg1 { SegParams::seg1_worst() } else { SegParams::seg2_random() };
        let seg = SegParams {
            sigma: self.sigma.unwrap_or(base.sigma),
            pairwise_scale: self.pairwise_scale.unwrap_or(base.pairwise_scale),
            unary_scale: self.unary_scale.unwrap_or(base.unary_scale),
            frac_bits: self.frac_bits.unwrap_or(base.frac_bits),
        };

        let repetitions = self.repetitions.unwrap_or(3);
        let count = self.count.unwrap_or(1);
        let hist_bin = self.hist_bin.unwrap_or(0.1);
        if repetitions == 0 || count == 0 {
            return Err(bad("repetitions and count must be at least 1".into()));
        }
        if !(hist_bin.is_finite() && hist_bin > 0.0) {
            return Err(bad("hist_bin must be positive".into()));
        }
        Ok(BenchConfig {
            input_label: raw_input,
            input,
            problem,
            modes,
            solver,
            seg,
            seed: self.seed.unwrap_or(0),
            count,
            repetitions,
            out: self.out.clone(),
            hist: self.hist.clone(),
            hist_bin,
        })
    }
}

/// Fully resolved benchmark configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub input_label: String,
    pub input: InputSpec,
    pub problem: Problem,
    pub modes: Vec<Mode>,
    pub solver: SolverConfig,
    pub seg: SegParams,
    pub seed: u64,
    pub count: usize,
    pub repetitions: usize,
    pub out: Option<PathBuf>,
    pub hist: Option<PathBuf>,
    pub hist_bin: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_forms() {
        assert_eq!(
            "synthetic:seg1_worst:32x16".parse::<InputSpec>().unwrap(),
            InputSpec::Synthetic { kind: SyntheticKind::Seg1Worst, width: 32, height: 16 }
        );
        assert_eq!("a/b.PGM".parse::<InputSpec>().unwrap(), InputSpec::Image("a/b.PGM".into()));
        assert_eq!("g.max".parse::<InputSpec>().unwrap(), InputSpec::Dimacs("g.max".into()));
        assert!("synthetic:seg3:4x4".parse::<InputSpec>().is_err());
        assert!("synthetic:seg2_random:0x4".parse::<InputSpec>().is_err());
    }

    #[test]
    fn flags_override_file() {
        assert!(Settings::from_toml("modes = [\"naive\"]\n").is_err(), "unknown keys are rejected");
        let file =
            Settings::from_toml("input = \"synthetic:seg2_random:8x8\"\nthreads = 4\niter = 5\nmode = [\"naive\"]\n")
                .unwrap();
        let flags = Settings { iter: Some(7), ..Settings::default() };
        let cfg = file.overlay(&flags).resolve().unwrap();
        assert_eq!(cfg.solver.n_subgraphs, 4);
        assert_eq!(cfg.solver.iter_patience, 7);
        assert_eq!(cfg.modes, vec![Mode::NaiveConverged]);
        assert_eq!(cfg.problem, Problem::Seg2);
        assert_eq!(cfg.repetitions, 3);
    }

    #[test]
    fn defaults_follow_the_input() {
        let s = |input: &str| Settings { input: Some(input.into()), ..Settings::default() };
        let seg1 = s("synthetic:seg1_worst:32x32").resolve().unwrap();
        assert_eq!(seg1.problem, Problem::Seg1);
        assert_eq!(seg1.seg, SegParams::seg1_worst());
        assert_eq!(s("x.max").resolve().unwrap().problem, Problem::Raw);
        let wrong = Settings { problem: Some("seg1".into()), ..s("x.max") };
        assert!(wrong.resolve().is_err());
        let zero = Settings { threads: Some(0), ..s("x.max") };
        assert!(zero.resolve().is_err());
    }
}
