//! Loads instances, runs serial BK and the requested modes, and checks that
//! every converged run found the serial cut value.

use std::fs::File;
use std::io::BufReader;
use std::time::{Duration, Instant};

use dpgc_core::dimacs::read_dimacs;
use dpgc_core::{build_seg1, build_seg2, gen_synthetic, run, BkState, Capacity, FlowGraph, GridImage, SolverConfig};

use crate::report::{transport_label, BenchReport, ReportRow};
use crate::settings::{BenchConfig, InputSpec, Problem};
use crate::BenchError;

pub struct Instance {
    pub name: String,
    pub seed: Option<u64>,
    pub graph: FlowGraph,
    /// Pixel grid of image inputs, which are split into stripes.
    pub grid: Option<(usize, usize)>,
}

fn segment(img: &GridImage, cfg: &BenchConfig) -> Result<FlowGraph, BenchError> {
    Ok(match cfg.problem {
        Problem::Seg1 => build_seg1(img, &cfg.seg)?,
        Problem::Seg2 => build_seg2(img, &cfg.seg)?,
        Problem::Raw => unreachable!("rejected when resolving the settings"),
    })
}

pub fn load_instances(cfg: &BenchConfig) -> Result<Vec<Instance>, BenchError> {
    match &cfg.input {
        InputSpec::Image(path) => {
            let img = GridImage::read_pgm(path)?;
            let grid = Some((img.width(), img.height()));
            Ok(vec![Instance { name: cfg.input_label.clone(), seed: None, graph: segment(&img, cfg)?, grid }])
        }
        InputSpec::Dimacs(path) => {
            let file = File::open(path).map_err(|e| BenchError::Io(path.display().to_string(), e))?;
            let graph = read_dimacs(BufReader::new(file))?;
            Ok(vec![Instance { name: cfg.input_label.clone(), seed: None, graph, grid: None }])
        }
        InputSpec::Synthetic { kind, width, height } => (cfg.seed..cfg.seed + cfg.count as u64)
            .map(|seed| {
                let img = gen_synthetic(*kind, *width, *height, seed)?;
                Ok(Instance {
                    name: cfg.input_label.clone(),
                    seed: Some(seed),
                    graph: segment(&img, cfg)?,
                    grid: Some((*width, *height)),
                })
            })
            .collect(),
    }
}

/// Smallest duration over `reps` calls, with the value of the first call.
fn best_of<T>(reps: usize, mut f: impl FnMut() -> (Duration, T)) -> (Duration, T) {
    let (mut best, first) = f();
    for _ in 1..reps {
        best = best.min(f().0);
    }
    (best, first)
}

fn timed<T>(f: impl FnOnce() -> T) -> (Duration, T) {
    let start = Instant::now();
    let v = f();
    (start.elapsed(), v)
}

fn serial_solve(g: &FlowGraph, reps: usize) -> (Duration, Capacity) {
    best_of(reps, || {
        let mut bk = BkState::new(g.clone());
        let (t, (_, x)) = timed(|| bk.solve());
        (t, g.cut_cost(&x))
    })
}

pub fn bench_instance(inst: &Instance, cfg: &BenchConfig) -> Result<Vec<ReportRow>, BenchError> {
    let g = &inst.graph;
    let (t_serial, cut_serial) = serial_solve(g, cfg.repetitions);
    let t_serial_s = t_serial.as_secs_f64();
    let row = |mode: &str, solver: &SolverConfig| ReportRow {
        instance: inst.name.clone(),
        seed: inst.seed,
        problem: cfg.problem.name().into(),
        vertices: g.n_vertices(),
        arcs: g.n_arcs(),
        mode: mode.into(),
        n_subgraphs: solver.n_subgraphs,
        iter_patience: solver.iter_patience,
        merge_group_size: solver.merge_group_size,
        merge_period: solver.merge_period,
        max_iterations: solver.max_iterations,
        transport: transport_label(&solver.transport),
        repetitions: cfg.repetitions,
        t_serial_s,
        t_mode_s: t_serial_s,
        relative_time: 1.0,
        cut_serial: cut_serial.to_string(),
        cut_mode: cut_serial.to_string(),
        converged: true,
        iterations: 1,
        first_n_diff: 0,
        final_n_diff: 0,
        merges: 0,
        relative_reused_flow: 1.0,
        modeled_bytes: 0,
        modeled_time_s: 0.0,
    };
    let mut rows = vec![row("serial", &cfg.solver)];
    for &mode in &cfg.modes {
        let solver = SolverConfig { mode, grid: inst.grid, ..cfg.solver.clone() };
        let (first, result) = timed(|| run(g, &solver));
        let result = result?;
        let t = (1..cfg.repetitions).map(|_| timed(|| run(g, &solver)).0).fold(first, Duration::min);
        if result.converged && result.cut_value != cut_serial {
            return Err(BenchError::CutMismatch {
                instance: inst.label(),
                mode: mode.name().into(),
                serial: cut_serial.to_string(),
                got: result.cut_value.to_string(),
            });
        }
        let t_mode_s = t.as_secs_f64();
        rows.push(ReportRow {
            t_mode_s,
            relative_time: t_mode_s / t_serial_s.max(1e-9),
            cut_mode: result.cut_value.to_string(),
            converged: result.converged,
            iterations: result.iterations,
            first_n_diff: result.first_n_diff().unwrap_or(0),
            final_n_diff: result.stats.last().map_or(0, |s| s.n_diff),
            merges: result.merge_steps(),
            relative_reused_flow: result.relative_reused_flow,
            modeled_bytes: result.transport.total_bytes(),
            modeled_time_s: result.transport.modeled_time_s,
            ..row(mode.name(), &solver)
        });
    }
    Ok(rows)
}

impl Instance {
    pub fn label(&self) -> String {
        match self.seed {
            Some(s) => format!("{} (seed {s})", self.name),
            None => self.name.clone(),
        }
    }
}

/// Runs every instance. Fails on the first cut-value mismatch, before any
/// report is written.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    let mut report = BenchReport::default();
    for inst in load_instances(cfg)? {
        report.rows.extend(bench_instance(&inst, cfg)?);
    }
    Ok(report)
}
