//! Parallel dual decomposition with merging.
//!
//! One iteration solves every subgraph on the worker pool, exchanges the
//! labels of shared vertices, counts disagreements and moves the dual
//! variables of the disagreeing vertices. Everything between two iterations
//! (merges, refinements, boundary moves) runs on the calling thread. Results
//! depend only on the input and the configuration, never on the number of
//! threads.

mod config;
mod dual;
mod strategy;
mod transport;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{Mode, SolverConfig, TransportConfig};
pub use dual::{disagreement, dual_update, StepRule};
pub use strategy::{neighbor_groups, MergePlan, NaiveStrategy, ScheduleStrategy, StallCounter, Strategy};
pub use transport::{decode_graph, encode_graph, encoded_len, Traffic, Transport, TransportStats, WireError};

use crate::capacity::Capacity;
use crate::graph::{Assignment, FlowGraph};
use crate::split_merge::{AdjustReport, Partition, RegionSpec, SplitError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// One merge step: the groups as indexed just before it, and the flow the
/// merged graphs start from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeRecord {
    pub groups: Vec<Vec<usize>>,
    /// Accumulated flow of all subgraphs after the merge, minus the constant
    /// the original graph already carried.
    pub reused_flow: Capacity,
}

/// Per-iteration record. Merges list what happened after the iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub n_subgraphs: usize,
    /// Flow pushed in each subgraph by this iteration's solve.
    pub flows: Vec<Capacity>,
    pub n_diff: usize,
    /// Sum of the subgraph minima, a lower bound on the optimum.
    pub dual_bound: Capacity,
    pub merges: Vec<MergeRecord>,
    /// Cumulative transport counters at the end of the iteration.
    pub transport: TransportStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutResult {
    pub assignment: Assignment,
    /// Cut cost of `assignment` in the original graph.
    pub cut_value: Capacity,
    pub converged: bool,
    pub iterations: usize,
    pub stats: Vec<IterationStats>,
    /// Flow the last merged graph inherited (or, without merges, the flow
    /// found by the subgraphs), beyond the original constant.
    pub reused_flow: Capacity,
    /// `reused_flow` over the maxflow of the original graph; 1 when both
    /// are zero.
    pub relative_reused_flow: f64,
    pub transport: TransportStats,
}

impl CutResult {
    /// Disagreements after the first iteration (`M` of the naive bound).
    pub fn first_n_diff(&self) -> Option<usize> {
        self.stats.first().map(|s| s.n_diff)
    }

    pub fn merge_steps(&self) -> usize {
        self.stats.iter().map(|s| s.merges.len()).sum()
    }
}

pub type Observer<'o> = Box<dyn FnMut(&IterationStats) + 'o>;

pub struct Engine<'o> {
    original: FlowGraph,
    partition: Partition,
    pool: rayon::ThreadPool,
    transport: Transport,
    rule: StepRule,
    labels: Vec<Assignment>,
    stats: Vec<IterationStats>,
    emitted: usize,
    observer: Option<Observer<'o>>,
    last_merge: Option<Capacity>,
}

impl<'o> Engine<'o> {
    /// Splits `g` as `config` says: stripes when a grid shape is given,
    /// BFS layers otherwise.
    pub fn new(g: &FlowGraph, config: &SolverConfig) -> Result<Self, EngineError> {
        config.validate().map_err(EngineError::Config)?;
        let n = g.n_vertices();
        if n == 0 {
            return Err(EngineError::Config("graph has no vertices".into()));
        }
        if g.has_negative_capacity() {
            return Err(EngineError::Config("graph has negative capacities".into()));
        }
        let spec = match config.grid {
            Some((w, h)) if w * h != n => {
                return Err(EngineError::Config(format!("grid {w}x{h} does not match {n} vertices")));
            }
            Some((w, h)) => RegionSpec::stripes(w, h, config.n_subgraphs, config.orientation)?,
            None if config.n_subgraphs == 1 => RegionSpec::new(vec![(0..n).collect()]),
            None => RegionSpec::layers(g, config.n_subgraphs)?,
        };
        Self::with_spec(g, &spec, config)
    }

    /// Splits `g` over explicit regions; `config.n_subgraphs` and
    /// `config.grid` are ignored.
    pub fn with_spec(g: &FlowGraph, spec: &RegionSpec, config: &SolverConfig) -> Result<Self, EngineError> {
        config.validate().map_err(EngineError::Config)?;
        if g.has_negative_capacity() {
            return Err(EngineError::Config("graph has negative capacities".into()));
        }
        let mut partition = Partition::split(g, spec)?;
        partition.set_initial_step(config.step_init);
        let threads = if config.threads == 0 { partition.n_subgraphs() } else { config.threads };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .thread_name(|i| format!("dpgc-worker-{i}"))
            .build()
            .map_err(|e| EngineError::Pool(e.to_string()))?;
        // splitting halves shared weights, so one bit below the graph's unit
        let min_step = Capacity::new(1, g.scale() + 1);
        let max_step = g.total_capacity().max(min_step).max(config.step_init);
        Ok(Engine {
            original: g.clone(),
            transport: Transport::new(config.transport, partition.n_subgraphs()),
            partition,
            pool,
            rule: StepRule { min_step, max_step },
            labels: Vec::new(),
            stats: Vec::new(),
            emitted: 0,
            observer: None,
            last_merge: None,
        })
    }

    /// Receives every [`IterationStats`] once its merges are known.
    pub fn set_observer(&mut self, observer: Observer<'o>) {
        self.observer = Some(observer);
    }

    pub fn set_step_rule(&mut self, rule: StepRule) {
        self.rule = rule;
    }

    pub fn original(&self) -> &FlowGraph {
        &self.original
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn stats(&self) -> &[IterationStats] {
        &self.stats
    }

    pub fn transport(&self) -> &Transport {
        &self.transport
    }

    /// Subgraph labels of the last iteration, if nothing changed since.
    pub fn labels(&self) -> Option<&[Assignment]> {
        (self.labels.len() == self.partition.n_subgraphs()).then_some(&self.labels[..])
    }

    fn emit(&mut self) {
        if let Some(obs) = &mut self.observer {
            for s in &self.stats[self.emitted..] {
                obs(s);
            }
        }
        self.emitted = self.stats.len();
    }

    /// Solve, exchange labels, count disagreements, update duals.
    pub fn iterate(&mut self) -> &IterationStats {
        self.emit();
        let parts = &mut self.partition;
        let results: Vec<(Capacity, Assignment)> =
            self.pool.install(|| parts.subgraphs_mut().par_iter_mut().map(|s| s.state_mut().solve()).collect());
        let (flows, labels): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        let dual_bound = self.partition.accumulated_total();

        for o in self.partition.overlaps() {
            // length prefix plus one byte per label, both directions
            let bytes = 8 + o.vertices.len() as u64;
            self.transport.send(o.a, o.b, bytes, Traffic::Labels);
            self.transport.send(o.b, o.a, bytes, Traffic::Labels);
        }
        let (n_diff, diff) = disagreement(self.partition.overlaps(), &labels);
        let n_sub = self.partition.n_subgraphs();
        let deltas = dual_update(self.partition.overlaps_mut(), &labels, &diff, &self.rule, n_sub);
        for (sub, batch) in self.partition.subgraphs_mut().iter_mut().zip(&deltas) {
            if !batch.is_empty() {
                sub.state_mut().apply_tlink_deltas(batch).expect("overlap vertices are local");
            }
        }
        self.labels = labels;
        self.stats.push(IterationStats {
            iteration: self.stats.len() + 1,
            n_subgraphs: n_sub,
            flows,
            n_diff,
            dual_bound,
            merges: Vec::new(),
            transport: self.transport.stats(),
        });
        self.stats.last().unwrap()
    }

    fn record_merge(&mut self, groups: Vec<Vec<usize>>) {
        let reused = self.partition.accumulated_total() - self.original.accumulated_flow();
        self.last_merge = Some(reused);
        self.labels.clear();
        if let Some(s) = self.stats.last_mut() {
            s.merges.push(MergeRecord { groups, reused_flow: reused });
        }
    }

    /// Ships every member of each group to the group's largest member.
    fn charge_merge(&mut self, groups: &[Vec<usize>]) -> Vec<usize> {
        let sizes: Vec<usize> = self.partition.subgraphs().iter().map(|s| s.global_ids().len()).collect();
        let mut hosts = Vec::with_capacity(groups.len());
        for grp in groups {
            let host = self.transport.merge_host(grp, &sizes);
            for &m in grp {
                if m != host {
                    let bytes = encoded_len(self.partition.subgraph(m).graph()) as u64;
                    self.transport.send(m, host, bytes, Traffic::Merge);
                }
            }
            hosts.push(host);
        }
        hosts
    }

    fn check_groups(&self, groups: &[Vec<usize>]) -> Result<(), EngineError> {
        let n = self.partition.n_subgraphs();
        let mut used = vec![false; n];
        for grp in groups {
            if grp.is_empty() {
                return Err(SplitError::BadGroup(grp.clone()).into());
            }
            for &i in grp {
                if i >= n || used[i] {
                    return Err(SplitError::BadGroup(grp.clone()).into());
                }
                used[i] = true;
            }
            let mut seen = vec![grp[0]];
            let mut stack = vec![grp[0]];
            while let Some(k) = stack.pop() {
                for &j in grp {
                    if !seen.contains(&j) && self.partition.adjacent(k, j) {
                        seen.push(j);
                        stack.push(j);
                    }
                }
            }
            if seen.len() != grp.len() {
                return Err(SplitError::NotAdjacent(grp.clone()).into());
            }
        }
        Ok(())
    }

    /// Merges disjoint connected groups. Returns each group's new index.
    pub fn merge_groups(&mut self, groups: &[Vec<usize>]) -> Result<Vec<usize>, EngineError> {
        self.check_groups(groups)?;
        let groups: Vec<Vec<usize>> = groups.iter().filter(|g| g.len() > 1).cloned().collect();
        if groups.is_empty() {
            return Ok(Vec::new());
        }
        let hosts = self.charge_merge(&groups);
        let old_place = self.transport.placement().to_vec();
        let new_index = self.partition.merge_groups(&groups)?;

        let mut placement = vec![usize::MAX; self.partition.n_subgraphs()];
        let mut in_group = vec![None; old_place.len()];
        for (k, grp) in groups.iter().enumerate() {
            for &i in grp {
                in_group[i] = Some(k);
            }
        }
        let removed: Vec<usize> =
            groups.iter().flat_map(|g| g.iter().copied().filter(|&i| i != *g.iter().min().unwrap())).collect();
        for (old, &machine) in old_place.iter().enumerate() {
            match in_group[old] {
                Some(k) => placement[new_index[k]] = old_place[hosts[k]],
                None => placement[old - removed.iter().filter(|&&r| r < old).count()] = machine,
            }
        }
        self.transport.set_placement(placement);
        self.record_merge(groups);
        Ok(new_index)
    }

    /// Merges everything into one subgraph.
    pub fn merge_all(&mut self) -> Result<(), EngineError> {
        let n = self.partition.n_subgraphs();
        if n < 2 {
            return Ok(());
        }
        let all: Vec<usize> = (0..n).collect();
        let host = self.charge_merge(std::slice::from_ref(&all))[0];
        let machine = self.transport.machine_of(host);
        self.partition.merge_all()?;
        self.transport.set_placement(vec![machine]);
        self.record_merge(vec![all]);
        Ok(())
    }

    pub fn apply_merge(&mut self, plan: MergePlan) -> Result<(), EngineError> {
        match plan {
            MergePlan::All => self.merge_all(),
            MergePlan::Groups(groups) => self.merge_groups(&groups).map(|_| ()),
        }
    }

    /// Moves the boundary between neighboring stripes; only the band moves
    /// over the network.
    pub fn adjust_boundary(&mut self, a: usize, b: usize, shift: isize) -> Result<AdjustReport, EngineError> {
        let report = self.partition.adjust_boundary(a, b, shift)?;
        self.transport.send(a, b, encoded_len(&report.band_graph) as u64, Traffic::Adjust);
        self.labels.clear();
        Ok(report)
    }

    /// Splits subgraph `i` further; the pieces stay on its machine.
    pub fn refine(&mut self, i: usize, regions: Vec<Vec<usize>>) -> Result<Vec<usize>, EngineError> {
        let idx = self.partition.refine(i, regions)?;
        let mut placement = self.transport.placement().to_vec();
        let m = placement[i];
        placement.splice(i..=i, std::iter::repeat(m).take(idx.len()));
        self.transport.set_placement(placement);
        self.labels.clear();
        Ok(idx)
    }

    /// Global labels, each vertex taken from the lowest-indexed subgraph
    /// holding it.
    pub fn assemble(&self) -> Assignment {
        let labels = self.labels().expect("assemble needs a fresh iteration");
        let mut x = Assignment::zeros(self.partition.n_vertices());
        for (s, sub) in self.partition.subgraphs().iter().enumerate().rev() {
            for (k, &v) in sub.global_ids().iter().enumerate() {
                x.set(v, labels[s][k]);
            }
        }
        x
    }

    pub fn finish(mut self, converged: bool) -> CutResult {
        self.emit();
        let assignment = self.assemble();
        let cut_value = self.original.cut_cost(&assignment);
        let constant = self.original.accumulated_flow();
        let reused_flow = self.last_merge.unwrap_or_else(|| self.partition.accumulated_total() - constant);
        let maxflow = cut_value - constant;
        let relative_reused_flow = if maxflow.is_zero() { 1.0 } else { reused_flow.to_f64() / maxflow.to_f64() };
        CutResult {
            assignment,
            cut_value,
            converged,
            iterations: self.stats.len(),
            stats: std::mem::take(&mut self.stats),
            reused_flow,
            relative_reused_flow,
            transport: self.transport.stats(),
        }
    }
}

fn empty_result(g: &FlowGraph) -> CutResult {
    CutResult {
        assignment: Assignment::zeros(0),
        cut_value: g.accumulated_flow(),
        converged: true,
        iterations: 0,
        stats: Vec::new(),
        reused_flow: Capacity::ZERO,
        relative_reused_flow: 1.0,
        transport: TransportStats::default(),
    }
}

/// Runs the solver selected by `config.mode`.
pub fn run(g: &FlowGraph, config: &SolverConfig) -> Result<CutResult, EngineError> {
    run_with_observer(g, config, |_| {})
}

/// [`run`], streaming one record per iteration to `observer`.
pub fn run_with_observer<'o>(
    g: &FlowGraph,
    config: &SolverConfig,
    observer: impl FnMut(&IterationStats) + 'o,
) -> Result<CutResult, EngineError> {
    if g.n_vertices() == 0 {
        config.validate().map_err(EngineError::Config)?;
        return Ok(empty_result(g));
    }
    let mut engine = Engine::new(g, config)?;
    engine.set_observer(Box::new(observer));
    match config.mode {
        Mode::BaselinePbk => Ok(baseline_loop(engine, config.max_iterations)),
        Mode::NaiveConverged => naive_loop(engine, config.iter_patience),
        Mode::Dynamic => {
            let mut s = ScheduleStrategy::new(config.merge_period, config.merge_group_size);
            dynamic_loop(engine, &mut s)
        }
    }
}

/// Dual decomposition without merging, stopped after `max_iterations`.
pub fn solve_baseline_pbk(g: &FlowGraph, config: &SolverConfig) -> Result<CutResult, EngineError> {
    if g.n_vertices() == 0 {
        return Ok(empty_result(g));
    }
    Ok(baseline_loop(Engine::new(g, config)?, config.max_iterations))
}

fn baseline_loop(mut engine: Engine<'_>, max_iterations: usize) -> CutResult {
    for _ in 0..max_iterations {
        if engine.iterate().n_diff == 0 {
            return engine.finish(true);
        }
    }
    engine.finish(false)
}

/// Dual decomposition that merges every two neighbors whenever the
/// disagreement count has not improved for `iter_patience` iterations.
/// Always converges: without progress the partition halves.
pub fn solve_naive_converged(g: &FlowGraph, config: &SolverConfig) -> Result<CutResult, EngineError> {
    if g.n_vertices() == 0 {
        return Ok(empty_result(g));
    }
    naive_loop(Engine::new(g, config)?, config.iter_patience)
}

fn naive_loop(mut engine: Engine<'_>, patience: usize) -> Result<CutResult, EngineError> {
    let mut stall = StallCounter::new(patience);
    loop {
        let n_diff = engine.iterate().n_diff;
        if n_diff == 0 {
            return Ok(engine.finish(true));
        }
        if stall.observe(n_diff) {
            let plan = neighbor_groups(engine.partition(), 2);
            engine.apply_merge(plan)?;
        }
    }
}

/// The general loop: optional refinements, an inner round of iterations
/// until agreement or `inner_stop`, then optional merges. Terminates when
/// the strategy eventually merges far enough.
pub fn solve_dynamic(
    g: &FlowGraph,
    config: &SolverConfig,
    strategy: &mut dyn Strategy,
) -> Result<CutResult, EngineError> {
    if g.n_vertices() == 0 {
        return Ok(empty_result(g));
    }
    dynamic_loop(Engine::new(g, config)?, strategy)
}

fn dynamic_loop(mut engine: Engine<'_>, strategy: &mut dyn Strategy) -> Result<CutResult, EngineError> {
    loop {
        let mut splits = strategy.should_split(&engine);
        splits.sort_by_key(|s| std::cmp::Reverse(s.0));
        for (i, regions) in splits {
            engine.refine(i, regions)?;
        }
        let n_diff = loop {
            let stats = engine.iterate();
            if stats.n_diff == 0 || strategy.inner_stop(stats) {
                break stats.n_diff;
            }
        };
        if n_diff == 0 {
            return Ok(engine.finish(true));
        }
        if let Some(plan) = strategy.should_merge(&engine) {
            engine.apply_merge(plan)?;
        }
    }
}
