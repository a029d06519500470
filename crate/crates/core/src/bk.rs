//! Boykov-Kolmogorov augmenting-path maxflow with search-tree reuse.
//!
//! The residual network lives in the wrapped [`FlowGraph`]: pushing flow
//! lowers capacities in place and adds the pushed amount to the graph's
//! accumulated flow, so the graph always describes the same cut problem.
//! After [`BkState::apply_tlink_deltas`] the next [`BkState::solve`] starts
//! from the existing trees instead of rebuilding them, which is what makes the
//! repeated solves of the dual-decomposition loop cheap.
//!
//! Vertex `i`'s terminal residual is `tr(i) = source[i] - sink[i]`; the two
//! t-links are kept cancelled so at most one of them is non-zero.

use std::collections::VecDeque;

use thiserror::Error;

use crate::capacity::Capacity;
use crate::graph::{Assignment, FlowGraph};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BkError {
    #[error("t-link delta for vertex {vertex}, graph has {n} vertices")]
    UnknownVertex { vertex: usize, n: usize },
}

const NONE: u32 = u32::MAX;
const TERMINAL: u32 = u32::MAX - 1;
const ORPHAN: u32 = u32::MAX - 2;
const INF: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct BkState {
    graph: FlowGraph,
    // CSR over half-arcs. Half-arc 2k is record k's u->v, 2k+1 is v->u.
    first: Vec<u32>,
    adj: Vec<u32>,
    head: Vec<u32>,

    /// Half-arc from the vertex to its tree parent, or NONE/TERMINAL/ORPHAN.
    parent: Vec<u32>,
    is_sink: Vec<bool>,
    ts: Vec<u32>,
    dist: Vec<u32>,
    time: u32,

    active: VecDeque<u32>,
    queued: Vec<bool>,
    current: Option<u32>,
    orphans: VecDeque<u32>,

    marked: Vec<bool>,
    marked_list: Vec<u32>,

    solved_once: bool,
    running: bool,
}

fn sister(a: u32) -> u32 {
    a ^ 1
}

impl BkState {
    /// Panics if `graph` stores a negative capacity.
    pub fn new(graph: FlowGraph) -> Self {
        assert!(!graph.has_negative_capacity(), "maxflow needs non-negative capacities");
        let n = graph.n_vertices();
        let m = graph.n_arcs();
        let mut head = vec![0u32; 2 * m];
        let mut deg = vec![0u32; n + 1];
        for (k, r) in graph.arc_records().iter().enumerate() {
            head[2 * k] = r.v;
            head[2 * k + 1] = r.u;
            deg[r.u as usize] += 1;
            deg[r.v as usize] += 1;
        }
        let mut first = vec![0u32; n + 1];
        for i in 0..n {
            first[i + 1] = first[i] + deg[i];
        }
        let mut fill = first.clone();
        let mut adj = vec![0u32; 2 * m];
        for (k, r) in graph.arc_records().iter().enumerate() {
            adj[fill[r.u as usize] as usize] = 2 * k as u32;
            fill[r.u as usize] += 1;
            adj[fill[r.v as usize] as usize] = 2 * k as u32 + 1;
            fill[r.v as usize] += 1;
        }
        BkState {
            graph,
            first,
            adj,
            head,
            parent: vec![NONE; n],
            is_sink: vec![false; n],
            ts: vec![0; n],
            dist: vec![0; n],
            time: 0,
            active: VecDeque::new(),
            queued: vec![false; n],
            current: None,
            orphans: VecDeque::new(),
            marked: vec![false; n],
            marked_list: Vec::new(),
            solved_once: false,
            running: false,
        }
    }

    pub fn graph(&self) -> &FlowGraph {
        &self.graph
    }

    pub fn into_graph(self) -> FlowGraph {
        self.graph
    }

    pub fn n_vertices(&self) -> usize {
        self.graph.n_vertices()
    }

    // -- residual access ----------------------------------------------------

    fn rcap(&self, a: u32) -> i64 {
        let r = &self.graph.arc_records()[(a >> 1) as usize];
        if a & 1 == 0 {
            r.cap_uv
        } else {
            r.cap_vu
        }
    }

    fn rcap_add(&mut self, a: u32, d: i64) {
        let r = &mut self.graph.arc_records_mut()[(a >> 1) as usize];
        if a & 1 == 0 {
            r.cap_uv += d;
        } else {
            r.cap_vu += d;
        }
    }

    fn tr(&self, i: usize) -> i64 {
        self.graph.source_raw()[i] - self.graph.sink_raw()[i]
    }

    fn arcs_of(&self, i: usize) -> std::ops::Range<usize> {
        self.first[i] as usize..self.first[i + 1] as usize
    }

    // -- queues ---------------------------------------------------------------

    fn set_active(&mut self, i: u32) {
        if !self.queued[i as usize] {
            self.queued[i as usize] = true;
            self.active.push_back(i);
        }
    }

    fn next_active(&mut self) -> Option<u32> {
        while let Some(i) = self.active.pop_front() {
            self.queued[i as usize] = false;
            if self.parent[i as usize] != NONE {
                return Some(i);
            }
        }
        None
    }

    fn set_orphan(&mut self, i: u32) {
        if self.parent[i as usize] != ORPHAN {
            self.parent[i as usize] = ORPHAN;
            self.orphans.push_back(i);
        }
    }

    fn mark(&mut self, i: usize) {
        if !self.marked[i] {
            self.marked[i] = true;
            self.marked_list.push(i as u32);
        }
    }

    // -- public operations ------------------------------------------------------

    /// Changes t-links by `(vertex, d_source, d_sink)`. A t-link pushed below
    /// zero is lifted back to zero together with its partner, the lift being
    /// subtracted from the accumulated flow, and the common part of the two
    /// t-links is then moved into the accumulated flow. Both steps leave the
    /// intended change of the cut function intact.
    pub fn apply_tlink_deltas(&mut self, deltas: &[(usize, Capacity, Capacity)]) -> Result<(), BkError> {
        let n = self.n_vertices();
        if let Some(&(vertex, _, _)) = deltas.iter().find(|d| d.0 >= n) {
            return Err(BkError::UnknownVertex { vertex, n });
        }
        let need = deltas
            .iter()
            .flat_map(|&(_, a, b)| [a.normalized().log2_den(), b.normalized().log2_den()])
            .max()
            .unwrap_or(0);
        self.graph.rescale(need);
        for &(i, ds, dt) in deltas {
            if ds.is_zero() && dt.is_zero() {
                continue;
            }
            let (ds, dt) = (self.graph.raw(ds), self.graph.raw(dt));
            let (src, snk) = self.graph.tlinks_raw_mut();
            let mut s = src[i].checked_add(ds).expect("capacity overflow");
            let mut t = snk[i].checked_add(dt).expect("capacity overflow");
            let lift = (-s).max(-t).max(0);
            s += lift;
            t += lift;
            let m = s.min(t);
            src[i] = s - m;
            snk[i] = t - m;
            *self.graph.accumulated_raw_mut() += m - lift;
            if self.solved_once {
                self.mark(i);
            }
        }
        Ok(())
    }

    /// Runs to the maximum flow. Returns the flow pushed by this call and the
    /// minimum cut: `x[i] = 1` iff `i` can still reach the sink in the
    /// residual network, so vertices cut off from both terminals get 0.
    pub fn solve(&mut self) -> (Capacity, Assignment) {
        let before = self.graph.accumulated_raw();
        while self.step().is_some() {}
        let flow = Capacity::new(self.graph.accumulated_raw() - before, self.graph.scale()).normalized();
        (flow, self.min_cut())
    }

    /// Advances to the next augmentation and returns the flow it pushed, or
    /// `None` once the flow is maximal. The first call after construction or
    /// after [`BkState::apply_tlink_deltas`] also cancels opposing t-links,
    /// which counts towards the returned amount.
    pub fn step(&mut self) -> Option<Capacity> {
        let before = self.graph.accumulated_raw();
        if !self.running {
            self.begin();
        }
        loop {
            let i = match self.current.take() {
                Some(i) => {
                    self.queued[i as usize] = false;
                    if self.parent[i as usize] != NONE {
                        Some(i)
                    } else {
                        self.next_active()
                    }
                }
                None => self.next_active(),
            };
            let Some(i) = i else {
                self.running = false;
                self.solved_once = true;
                let pushed = self.graph.accumulated_raw() - before;
                return (pushed != 0).then(|| Capacity::new(pushed, self.graph.scale()).normalized());
            };
            let found = self.grow(i);
            self.time += 1;
            if let Some(a) = found {
                // keep i out of the active queue while the trees are repaired
                self.queued[i as usize] = true;
                self.current = Some(i);
                self.augment(a);
                self.adopt();
                let pushed = self.graph.accumulated_raw() - before;
                return Some(Capacity::new(pushed, self.graph.scale()).normalized());
            }
        }
    }

    /// Current minimum cut of the residual graph.
    pub fn min_cut(&self) -> Assignment {
        let n = self.n_vertices();
        let mut x = vec![0u8; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| self.tr(i) < 0).collect();
        for &i in &queue {
            x[i] = 1;
        }
        while let Some(v) = queue.pop_front() {
            for k in self.arcs_of(v) {
                let a = self.adj[k];
                let u = self.head[a as usize] as usize;
                if x[u] == 0 && self.rcap(sister(a)) > 0 {
                    x[u] = 1;
                    queue.push_back(u);
                }
            }
        }
        Assignment::new(x)
    }

    // -- internals --------------------------------------------------------------

    fn cancel_tlinks(&mut self) {
        for i in 0..self.n_vertices() {
            let (src, snk) = self.graph.tlinks_raw_mut();
            let m = src[i].min(snk[i]);
            if m > 0 {
                src[i] -= m;
                snk[i] -= m;
                *self.graph.accumulated_raw_mut() += m;
                if self.solved_once {
                    self.mark(i);
                }
            }
        }
    }

    fn begin(&mut self) {
        self.cancel_tlinks();
        self.active.clear();
        self.orphans.clear();
        self.current = None;
        self.queued.iter_mut().for_each(|q| *q = false);
        if self.solved_once {
            self.reuse_trees();
        } else {
            self.init_trees();
        }
        self.running = true;
    }

    fn init_trees(&mut self) {
        self.time = 0;
        for i in 0..self.n_vertices() {
            self.ts[i] = 0;
            let tr = self.tr(i);
            if tr != 0 {
                self.is_sink[i] = tr < 0;
                self.parent[i] = TERMINAL;
                self.dist[i] = 1;
                self.set_active(i as u32);
            } else {
                self.parent[i] = NONE;
            }
        }
    }

    fn reuse_trees(&mut self) {
        self.time += 1;
        let list = std::mem::take(&mut self.marked_list);
        for &i in &list {
            self.marked[i as usize] = false;
        }
        for &i in &list {
            let iu = i as usize;
            self.set_active(i);
            let tr = self.tr(iu);
            if tr == 0 {
                if self.parent[iu] != NONE {
                    self.set_orphan(i);
                }
                continue;
            }
            let to_sink = tr < 0;
            if self.parent[iu] == NONE || self.is_sink[iu] != to_sink {
                self.is_sink[iu] = to_sink;
                for k in self.arcs_of(iu) {
                    let a = self.adj[k];
                    let j = self.head[a as usize];
                    let ju = j as usize;
                    if self.parent[ju] == sister(a) {
                        self.set_orphan(j);
                    }
                    let toward_i = if to_sink { self.rcap(sister(a)) } else { self.rcap(a) };
                    if self.parent[ju] != NONE && self.is_sink[ju] != to_sink && toward_i > 0 {
                        self.set_active(j);
                    }
                }
            }
            self.parent[iu] = TERMINAL;
            self.ts[iu] = self.time;
            self.dist[iu] = 1;
        }
        self.adopt();
    }

    /// Grows the tree of `i` by one vertex's worth of arcs. Returns the arc
    /// joining the two trees, oriented from the source tree to the sink tree.
    fn grow(&mut self, i: u32) -> Option<u32> {
        let iu = i as usize;
        let sink_side = self.is_sink[iu];
        for k in self.arcs_of(iu) {
            let a = self.adj[k];
            let out = if sink_side { self.rcap(sister(a)) } else { self.rcap(a) };
            if out <= 0 {
                continue;
            }
            let j = self.head[a as usize];
            let ju = j as usize;
            if self.parent[ju] == NONE {
                self.is_sink[ju] = sink_side;
                self.parent[ju] = sister(a);
                self.ts[ju] = self.ts[iu];
                self.dist[ju] = self.dist[iu] + 1;
                self.set_active(j);
            } else if self.is_sink[ju] != sink_side {
                return Some(if sink_side { sister(a) } else { a });
            } else if self.ts[ju] <= self.ts[iu] && self.dist[ju] > self.dist[iu] {
                self.parent[ju] = sister(a);
                self.ts[ju] = self.ts[iu];
                self.dist[ju] = self.dist[iu] + 1;
            }
        }
        None
    }

    fn augment(&mut self, middle: u32) {
        let mut b = self.rcap(middle);
        let mut i = self.head[sister(middle) as usize] as usize;
        while self.parent[i] != TERMINAL {
            let a = self.parent[i];
            b = b.min(self.rcap(sister(a)));
            i = self.head[a as usize] as usize;
        }
        b = b.min(self.tr(i));
        let mut i = self.head[middle as usize] as usize;
        while self.parent[i] != TERMINAL {
            let a = self.parent[i];
            b = b.min(self.rcap(a));
            i = self.head[a as usize] as usize;
        }
        b = b.min(-self.tr(i));
        debug_assert!(b > 0);

        self.rcap_add(sister(middle), b);
        self.rcap_add(middle, -b);

        let mut i = self.head[sister(middle) as usize] as usize;
        while self.parent[i] != TERMINAL {
            let a = self.parent[i];
            self.rcap_add(a, b);
            self.rcap_add(sister(a), -b);
            let next = self.head[a as usize] as usize;
            if self.rcap(sister(a)) == 0 {
                self.set_orphan(i as u32);
            }
            i = next;
        }
        self.graph.tlinks_raw_mut().0[i] -= b;
        if self.tr(i) == 0 {
            self.set_orphan(i as u32);
        }

        let mut i = self.head[middle as usize] as usize;
        while self.parent[i] != TERMINAL {
            let a = self.parent[i];
            self.rcap_add(sister(a), b);
            self.rcap_add(a, -b);
            let next = self.head[a as usize] as usize;
            if self.rcap(a) == 0 {
                self.set_orphan(i as u32);
            }
            i = next;
        }
        self.graph.tlinks_raw_mut().1[i] -= b;
        if self.tr(i) == 0 {
            self.set_orphan(i as u32);
        }

        *self.graph.accumulated_raw_mut() += b;
    }

    fn adopt(&mut self) {
        while let Some(i) = self.orphans.pop_front() {
            if self.parent[i as usize] == ORPHAN {
                self.process_orphan(i);
            }
        }
    }

    /// Distance from `j` to its terminal through valid parents, or INF if the
    /// path runs into an orphan. Caches distances with the current timestamp.
    fn origin_distance(&mut self, j: usize) -> u32 {
        let mut d = 0u32;
        let mut k = j;
        loop {
            if self.ts[k] == self.time {
                d += self.dist[k];
                break;
            }
            let a = self.parent[k];
            d += 1;
            if a == TERMINAL {
                self.ts[k] = self.time;
                self.dist[k] = 1;
                break;
            }
            if a == ORPHAN {
                return INF;
            }
            k = self.head[a as usize] as usize;
        }
        let mut k = j;
        let mut dd = d;
        while self.ts[k] != self.time {
            self.ts[k] = self.time;
            self.dist[k] = dd;
            dd -= 1;
            k = self.head[self.parent[k] as usize] as usize;
        }
        d
    }

    fn process_orphan(&mut self, i: u32) {
        let iu = i as usize;
        let sink_side = self.is_sink[iu];
        let mut best = NONE;
        let mut d_min = INF;
        for k in self.arcs_of(iu) {
            let a0 = self.adj[k];
            // residual from the candidate parent towards i (source tree) or
            // from i towards it (sink tree)
            let cap = if sink_side { self.rcap(a0) } else { self.rcap(sister(a0)) };
            if cap <= 0 {
                continue;
            }
            let j = self.head[a0 as usize] as usize;
            if self.is_sink[j] != sink_side || self.parent[j] == NONE {
                continue;
            }
            let d = self.origin_distance(j);
            if d < d_min {
                best = a0;
                d_min = d;
            }
        }
        if best != NONE {
            self.parent[iu] = best;
            self.ts[iu] = self.time;
            self.dist[iu] = d_min + 1;
            return;
        }
        self.parent[iu] = NONE;
        for k in self.arcs_of(iu) {
            let a0 = self.adj[k];
            let j = self.head[a0 as usize];
            let ju = j as usize;
            let pj = self.parent[ju];
            if self.is_sink[ju] != sink_side || pj == NONE {
                continue;
            }
            let cap = if sink_side { self.rcap(a0) } else { self.rcap(sister(a0)) };
            if cap > 0 {
                self.set_active(j);
            }
            if pj != TERMINAL && pj != ORPHAN && self.head[pj as usize] == i {
                self.set_orphan(j);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{g0, random_graph, random_grid};
    use crate::pseudo_boolean::{
        brute_force_min, evaluate, graph_polynomial, poly_equal_up_to_constant, polynomial_of, posiform_of,
    };
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(v: i64) -> Capacity {
        Capacity::from_int(v)
    }

    fn homogeneous_poly(g: &FlowGraph) -> crate::pseudo_boolean::MultilinearPolynomial {
        polynomial_of(&posiform_of(g).homogeneous())
    }

    #[test]
    fn g0_flow_is_four() {
        let mut bk = BkState::new(g0());
        let (flow, x) = bk.solve();
        assert_eq!(flow, c(4));
        assert_eq!(bk.graph().accumulated_flow(), c(4));
        assert_eq!(g0().cut_cost(&x), c(4));
        let f = graph_polynomial(bk.graph());
        assert_eq!(f.to_string(), "8 - 4*x0 + 3*x1 - 3*x0*x1");
        assert_eq!(poly_equal_up_to_constant(&graph_polynomial(&g0()), &homogeneous_poly(bk.graph())), Some(c(4)));
    }

    #[test]
    fn empty_graph() {
        let mut bk = BkState::new(FlowGraph::new(3));
        let (flow, x) = bk.solve();
        assert_eq!(flow, Capacity::ZERO);
        assert_eq!(&*x, &[0, 0, 0]);
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let g = random_graph(&mut rng, 10, 16);
            let f = graph_polynomial(&g);
            let (min, _) = brute_force_min(&f).unwrap();
            let mut bk = BkState::new(g.clone());
            let (flow, x) = bk.solve();
            assert_eq!(flow, min);
            assert_eq!(evaluate(&f, &x).unwrap(), min);
        }
    }

    #[test]
    fn every_push_is_a_constant_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let g = random_grid(&mut rng, 4, 3, 9);
            let full = graph_polynomial(&g);
            let mut bk = BkState::new(g);
            let mut before = homogeneous_poly(bk.graph());
            while let Some(pushed) = bk.step() {
                assert!(pushed > Capacity::ZERO);
                let after = homogeneous_poly(bk.graph());
                assert_eq!(poly_equal_up_to_constant(&before, &after), Some(pushed));
                assert_eq!(graph_polynomial(bk.graph()), full);
                before = after;
            }
        }
    }

    #[test]
    fn no_deltas_no_extra_flow() {
        let mut bk = BkState::new(g0());
        bk.solve();
        bk.apply_tlink_deltas(&[]).unwrap();
        assert_eq!(bk.solve().0, Capacity::ZERO);
    }

    #[test]
    fn negative_delta_lifts_both_tlinks() {
        let mut g = FlowGraph::new(1);
        g.add_tlinks(0, c(3), c(0)).unwrap();
        let mut bk = BkState::new(g);
        let before = homogeneous_poly(bk.graph());
        let full_before = graph_polynomial(bk.graph());
        bk.apply_tlink_deltas(&[(0, c(-5), c(0))]).unwrap();
        assert_eq!((bk.graph().source_cap(0), bk.graph().sink_cap(0)), (c(0), c(2)));
        let after = homogeneous_poly(bk.graph());
        let mut expected = before.clone();
        expected.add_linear(0, c(-5));
        assert!(poly_equal_up_to_constant(&after, &expected).is_some());
        let mut full_expected = full_before;
        full_expected.add_linear(0, c(-5));
        assert_eq!(graph_polynomial(bk.graph()), full_expected);
    }

    #[test]
    fn unknown_vertex_rejected() {
        let mut bk = BkState::new(g0());
        assert_eq!(bk.apply_tlink_deltas(&[(2, c(1), c(0))]), Err(BkError::UnknownVertex { vertex: 2, n: 2 }));
    }

    fn random_deltas(rng: &mut impl Rng, n: usize, frac: bool) -> Vec<(usize, Capacity, Capacity)> {
        let k = rng.gen_range(0..=n);
        (0..k)
            .map(|_| {
                let den = if frac { rng.gen_range(0..3) } else { 0 };
                let a = Capacity::new(rng.gen_range(-12..=12), den);
                let b = Capacity::new(rng.gen_range(-12..=12), den);
                (rng.gen_range(0..n), a, b)
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn warm_start_matches_cold_start(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_grid(&mut rng, 5, 4, 12);
            let mut warm = BkState::new(g);
            warm.solve();
            for round in 0..6 {
                let deltas = random_deltas(&mut rng, 20, round % 2 == 1);
                warm.apply_tlink_deltas(&deltas).unwrap();
                let snapshot = warm.graph().clone();
                let (_, x) = warm.solve();
                let mut cold = BkState::new(snapshot.clone());
                let (_, y) = cold.solve();
                prop_assert_eq!(warm.graph().accumulated_flow(), cold.graph().accumulated_flow());
                prop_assert_eq!(snapshot.cut_cost(&x), snapshot.cut_cost(&y));
                prop_assert_eq!(snapshot.cut_cost(&x), warm.graph().accumulated_flow());
                prop_assert_eq!(graph_polynomial(warm.graph()), graph_polynomial(&snapshot));
            }
        }
    }
}
