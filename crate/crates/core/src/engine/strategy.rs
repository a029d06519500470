//! Hooks that decide when to split, when to stop an inner round and what to
//! merge in the dynamic solver.

use super::{Engine, IterationStats};
use crate::split_merge::Partition;

/// What to merge after an inner round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MergePlan {
    /// Disjoint groups of subgraph indices, each connected through overlaps.
    Groups(Vec<Vec<usize>>),
    /// Everything into one graph.
    All,
}

pub trait Strategy {
    /// Refinements `(subgraph, regions)` to apply before the next round.
    fn should_split(&mut self, _engine: &Engine<'_>) -> Vec<(usize, Vec<Vec<usize>>)> {
        Vec::new()
    }

    /// Called after every iteration that still has disagreements; `true`
    /// ends the inner round.
    fn inner_stop(&mut self, stats: &IterationStats) -> bool;

    /// Called when an inner round ends with disagreements left.
    fn should_merge(&mut self, engine: &Engine<'_>) -> Option<MergePlan>;
}

/// The stall rule of the naive converged solver. `numDiff` is the smallest
/// disagreement count seen so far; `ITER` iterations in a row that fail to
/// beat it request a merge, after which the counter starts over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StallCounter {
    patience: usize,
    best: Option<usize>,
    iter: usize,
}

impl StallCounter {
    pub fn new(patience: usize) -> Self {
        assert!(patience >= 1, "patience must be at least 1");
        StallCounter { patience, best: None, iter: 0 }
    }

    /// Records one disagreement count; returns whether to merge now.
    pub fn observe(&mut self, n_diff: usize) -> bool {
        match self.best {
            Some(best) if n_diff >= best => {
                self.iter += 1;
                if self.iter == self.patience {
                    self.iter = 0;
                    return true;
                }
                false
            }
            _ => {
                self.best = Some(n_diff);
                self.iter = 0;
                false
            }
        }
    }
}

/// Runs of up to `size` consecutive subgraphs, cut wherever two consecutive
/// subgraphs share no vertex. Singleton runs stay as they are. If that
/// leaves nothing to merge, everything is merged.
pub fn neighbor_groups(p: &Partition, size: usize) -> MergePlan {
    let n = p.n_subgraphs();
    let mut groups = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + size).min(n);
        let mut run = vec![start];
        for i in start + 1..end {
            if p.adjacent(i - 1, i) {
                run.push(i);
            } else {
                if run.len() > 1 {
                    groups.push(std::mem::take(&mut run));
                }
                run = vec![i];
            }
        }
        if run.len() > 1 {
            groups.push(run);
        }
        start = end;
    }
    if groups.is_empty() && n > 1 {
        MergePlan::All
    } else {
        MergePlan::Groups(groups)
    }
}

/// The naive converged solver expressed as hooks: no splits, a round ends
/// when the stall rule fires, then every two neighbors merge.
#[derive(Clone, Debug)]
pub struct NaiveStrategy {
    stall: StallCounter,
}

impl NaiveStrategy {
    pub fn new(iter_patience: usize) -> Self {
        NaiveStrategy { stall: StallCounter::new(iter_patience) }
    }
}

impl Strategy for NaiveStrategy {
    fn inner_stop(&mut self, stats: &IterationStats) -> bool {
        self.stall.observe(stats.n_diff)
    }

    fn should_merge(&mut self, engine: &Engine<'_>) -> Option<MergePlan> {
        Some(neighbor_groups(engine.partition(), 2))
    }
}

/// Fixed schedule: merge every `period` iterations, `group_size` neighbors
/// at a time. Needs at most `ceil(log_l N)` merges, so at most
/// `period * ceil(log_l N) + 1` iterations.
#[derive(Clone, Debug)]
pub struct ScheduleStrategy {
    period: usize,
    group_size: usize,
    since: usize,
}

impl ScheduleStrategy {
    pub fn new(period: usize, group_size: usize) -> Self {
        assert!(period >= 1 && group_size >= 2, "period >= 1 and group size >= 2 required");
        ScheduleStrategy { period, group_size, since: 0 }
    }
}

impl Strategy for ScheduleStrategy {
    fn inner_stop(&mut self, _stats: &IterationStats) -> bool {
        self.since += 1;
        if self.since == self.period {
            self.since = 0;
            return true;
        }
        false
    }

    fn should_merge(&mut self, engine: &Engine<'_>) -> Option<MergePlan> {
        Some(neighbor_groups(engine.partition(), self.group_size))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::random_grid;
    use crate::split_merge::{Orientation, RegionSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stall_counter_follows_the_rule() {
        let mut s = StallCounter::new(2);
        assert!(!s.observe(5)); // numDiff = 5
        assert!(!s.observe(5)); // iter = 1
        assert!(!s.observe(4)); // improvement resets
        assert!(!s.observe(6));
        assert!(s.observe(4)); // equal counts as a stall
        assert!(!s.observe(4)); // counting starts over after a merge
        assert!(s.observe(9));
        let mut one = StallCounter::new(1);
        assert!(!one.observe(3));
        assert!(one.observe(3));
        assert!(one.observe(3));
    }

    #[test]
    fn neighbor_pairs_on_stripes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_grid(&mut rng, 12, 3, 8);
        let p = Partition::split(&g, &RegionSpec::stripes(12, 3, 5, Orientation::Vertical).unwrap()).unwrap();
        assert_eq!(neighbor_groups(&p, 2), MergePlan::Groups(vec![vec![0, 1], vec![2, 3]]));
        assert_eq!(neighbor_groups(&p, 5), MergePlan::Groups(vec![(0..5).collect()]));
        let empty = crate::graph::FlowGraph::new(4);
        let apart = Partition::split(&empty, &RegionSpec::new(vec![vec![0, 1], vec![2, 3]])).unwrap();
        assert_eq!(neighbor_groups(&apart, 2), MergePlan::All);
    }
}
