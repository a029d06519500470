//! Overlapping partitions of a flow graph, and their merges.
//!
//! Splitting copies every t-link and arc that lies inside exactly one region
//! and gives each of the two regions sharing it exactly half of anything that
//! lies in both. The sum of the subgraph polynomials is then the original
//! polynomial. Merging adds the (residual) subgraphs of a group back together
//! in global coordinates, which again preserves the sum, so the merged graph
//! describes the original problem minus the flow already pushed.
//!
//! A vertex may be shared by at most two subgraphs (chain or stripe
//! topologies). Per shared vertex the partition also keeps the dual variable
//! state used by the engine; it follows the vertex through merges and
//! refinements as long as the vertex stays shared between the same two
//! pieces of the graph.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bk::BkState;
use crate::capacity::Capacity;
use crate::graph::FlowGraph;
use crate::pseudo_boolean::{graph_polynomial, MultilinearPolynomial};

const NONE: u32 = u32::MAX;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SplitError {
    #[error("region {region} contains vertex {vertex}, graph has {n} vertices")]
    VertexOutOfRange { region: usize, vertex: usize, n: usize },
    #[error("region {0} is empty")]
    EmptyRegion(usize),
    #[error("vertex {0} is not covered by any region")]
    Uncovered(usize),
    #[error("vertex {0} lies in more than two regions")]
    TooManyRegions(usize),
    #[error("arc {u}-{v} has positive capacity but no region contains both endpoints")]
    NotSeparable { u: usize, v: usize },
    #[error("cannot cut {extent} columns/rows into {n} overlapping stripes")]
    TooManyStripes { n: usize, extent: usize },
    #[error("invalid merge group {0:?}")]
    BadGroup(Vec<usize>),
    #[error("merge group {0:?} is not connected through overlaps")]
    NotAdjacent(Vec<usize>),
    #[error("boundary adjustment needs a stripe partition")]
    NoLayout,
    #[error("subgraphs {a} and {b} are not neighboring stripes")]
    NotNeighbors { a: usize, b: usize },
    #[error("shift {shift} out of range: new boundary must stay within {min}..={max}")]
    ShiftOutOfRange { shift: isize, min: isize, max: isize },
    #[error("invalid refinement of subgraph {sub}: {msg}")]
    BadRefinement { sub: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Stripes are column ranges (boundaries are vertical lines).
    Vertical,
    /// Stripes are row ranges.
    Horizontal,
}

impl std::str::FromStr for Orientation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "vertical" => Ok(Orientation::Vertical),
            "horizontal" => Ok(Orientation::Horizontal),
            other => Err(format!("unknown orientation `{other}`")),
        }
    }
}

/// Grid stripes: region `k` is columns (or rows) `spans[k].0..=spans[k].1`,
/// with `spans[k].1 == spans[k + 1].0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StripeLayout {
    pub orientation: Orientation,
    pub width: usize,
    pub height: usize,
    pub spans: Vec<(usize, usize)>,
}

impl StripeLayout {
    fn extent(&self) -> usize {
        match self.orientation {
            Orientation::Vertical => self.width,
            Orientation::Horizontal => self.height,
        }
    }

    /// Vertices whose column (row) lies in `lo..=hi`.
    fn band(&self, lo: usize, hi: usize) -> Vec<usize> {
        let w = self.width;
        let mut out: Vec<usize> = match self.orientation {
            Orientation::Vertical => (0..self.height).flat_map(|r| (lo..=hi).map(move |c| r * w + c)).collect(),
            Orientation::Horizontal => (lo..=hi).flat_map(|r| (0..w).map(move |c| r * w + c)).collect(),
        };
        out.sort_unstable();
        out
    }

    fn coord(&self, v: usize) -> usize {
        match self.orientation {
            Orientation::Vertical => v % self.width,
            Orientation::Horizontal => v / self.width,
        }
    }
}

/// Global vertex sets of the subgraphs to create.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionSpec {
    regions: Vec<Vec<usize>>,
    layout: Option<StripeLayout>,
}

impl RegionSpec {
    pub fn new(regions: Vec<Vec<usize>>) -> Self {
        let regions = regions
            .into_iter()
            .map(|mut r| {
                r.sort_unstable();
                r.dedup();
                r
            })
            .collect();
        RegionSpec { regions, layout: None }
    }

    /// `n` stripes of nearly equal size over a `width x height` grid, each
    /// neighboring pair sharing one column (row).
    pub fn stripes(width: usize, height: usize, n: usize, orientation: Orientation) -> Result<Self, SplitError> {
        let extent = match orientation {
            Orientation::Vertical => width,
            Orientation::Horizontal => height,
        };
        if n == 0 || (n > 1 && extent < n + 1) {
            return Err(SplitError::TooManyStripes { n, extent });
        }
        let last = extent - 1;
        let bounds: Vec<usize> = (0..=n).map(|k| (k * last + n / 2) / n).collect();
        let spans: Vec<(usize, usize)> =
            if n == 1 { vec![(0, last)] } else { bounds.windows(2).map(|w| (w[0], w[1])).collect() };
        let layout = StripeLayout { orientation, width, height, spans };
        let regions = layout.spans.iter().map(|&(lo, hi)| layout.band(lo, hi)).collect();
        Ok(RegionSpec { regions, layout: Some(layout) })
    }

    /// Chain partition of an arbitrary graph: vertices are ordered by BFS
    /// level (each connected component restarting at level 0), the levels are
    /// cut into `n` runs, and neighboring runs share their boundary level.
    /// Arcs only join equal or adjacent levels, so every arc lands inside a
    /// region and every vertex in at most two.
    pub fn layers(g: &FlowGraph, n: usize) -> Result<Self, SplitError> {
        let nv = g.n_vertices();
        let mut adj = vec![Vec::new(); nv];
        for (u, v, uv, vu) in g.arcs() {
            if !uv.is_zero() || !vu.is_zero() {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        let mut level = vec![usize::MAX; nv];
        let mut queue = std::collections::VecDeque::new();
        for root in 0..nv {
            if level[root] != usize::MAX {
                continue;
            }
            level[root] = 0;
            queue.push_back(root);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if level[v] == usize::MAX {
                        level[v] = level[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        let depth = level.iter().max().map_or(0, |&d| d + 1);
        if n == 0 || (n > 1 && depth < n + 1) {
            return Err(SplitError::TooManyStripes { n, extent: depth });
        }
        if n == 1 {
            return Ok(RegionSpec::new(vec![(0..nv).collect()]));
        }
        let last = depth - 1;
        let bounds: Vec<usize> = (0..=n).map(|k| (k * last + n / 2) / n).collect();
        let regions =
            bounds.windows(2).map(|w| (0..nv).filter(|&v| level[v] >= w[0] && level[v] <= w[1]).collect()).collect();
        Ok(RegionSpec::new(regions))
    }

    pub fn regions(&self) -> &[Vec<usize>] {
        &self.regions
    }

    pub fn layout(&self) -> Option<&StripeLayout> {
        self.layout.as_ref()
    }
}

/// Dual variable of one shared vertex. `lambda` has been added to the
/// linear coefficient in the lower-indexed subgraph of the pair and
/// subtracted in the other.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualVar {
    pub lambda: Capacity,
    pub step: Capacity,
    pub last_sign: i8,
}

impl DualVar {
    pub fn fresh(step: Capacity) -> Self {
        DualVar { lambda: Capacity::ZERO, step, last_sign: 0 }
    }

    fn flipped(self) -> Self {
        DualVar { lambda: -self.lambda, step: self.step, last_sign: -self.last_sign }
    }
}

/// Vertices shared by subgraphs `a < b`, in increasing global id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Overlap {
    pub a: usize,
    pub b: usize,
    pub vertices: Vec<usize>,
    pub local_a: Vec<usize>,
    pub local_b: Vec<usize>,
    pub dual: Vec<DualVar>,
}

#[derive(Clone, Debug)]
pub struct Subgraph {
    state: BkState,
    global: Vec<usize>,
}

impl Subgraph {
    pub fn graph(&self) -> &FlowGraph {
        self.state.graph()
    }

    pub fn state(&self) -> &BkState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut BkState {
        &mut self.state
    }

    /// Local vertex `k` is global vertex `global_ids()[k]`.
    pub fn global_ids(&self) -> &[usize] {
        &self.global
    }

    pub fn local_index(&self, v: usize) -> Option<usize> {
        self.global.binary_search(&v).ok()
    }

    /// This subgraph's polynomial over the global variables.
    pub fn global_polynomial(&self, n_global: usize) -> MultilinearPolynomial {
        let mut f = MultilinearPolynomial::zero(n_global);
        f.add_mapped(&graph_polynomial(self.graph()), &self.global);
        f
    }
}

/// What [`Partition::adjust_boundary`] moved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjustReport {
    pub band_vertices: usize,
    /// The band's t-links and arcs from both sides, as one graph.
    pub band_graph: FlowGraph,
}

#[derive(Clone, Debug)]
pub struct Partition {
    n_global: usize,
    subgraphs: Vec<Subgraph>,
    overlaps: Vec<Overlap>,
    membership: Vec<[u32; 2]>,
    layout: Option<StripeLayout>,
    initial_step: Capacity,
}

fn members(m: &[u32; 2]) -> impl Iterator<Item = usize> + '_ {
    m.iter().filter(|&&s| s != NONE).map(|&s| s as usize)
}

/// Splits `g` over `regions` (sorted global ids). `offset_regions` only
/// shifts region numbers in error messages.
fn distribute(g: &FlowGraph, regions: &[Vec<usize>]) -> Result<Vec<FlowGraph>, SplitError> {
    let n = g.n_vertices();
    let mut member = vec![[NONE; 2]; n];
    for (r, reg) in regions.iter().enumerate() {
        if reg.is_empty() {
            return Err(SplitError::EmptyRegion(r));
        }
        for &v in reg {
            if v >= n {
                return Err(SplitError::VertexOutOfRange { region: r, vertex: v, n });
            }
            let m = &mut member[v];
            if m[0] == NONE {
                m[0] = r as u32;
            } else if m[1] == NONE {
                m[1] = r as u32;
            } else {
                return Err(SplitError::TooManyRegions(v));
            }
        }
    }
    if let Some(v) = member.iter().position(|m| m[0] == NONE) {
        return Err(SplitError::Uncovered(v));
    }
    let local = |r: usize, v: usize| regions[r].binary_search(&v).expect("member of region");
    let mut parts: Vec<FlowGraph> = regions.iter().map(|r| FlowGraph::with_scale(r.len(), g.scale())).collect();
    for v in 0..n {
        let (s, t) = (g.source_cap(v), g.sink_cap(v));
        if s.is_zero() && t.is_zero() {
            continue;
        }
        let m = member[v];
        if m[1] == NONE {
            let r = m[0] as usize;
            parts[r].add_tlinks(local(r, v), s, t).expect("valid");
        } else {
            for r in members(&m) {
                parts[r].add_tlinks(local(r, v), s.halve(), t.halve()).expect("valid");
            }
        }
    }
    for (u, v, uv, vu) in g.arcs() {
        if uv.is_zero() && vu.is_zero() {
            continue;
        }
        let common: Vec<usize> = members(&member[u]).filter(|r| members(&member[v]).any(|q| q == *r)).collect();
        let (uv, vu) = match common.len() {
            0 => return Err(SplitError::NotSeparable { u, v }),
            1 => (uv, vu),
            _ => (uv.halve(), vu.halve()),
        };
        for r in common {
            parts[r].add_edge(local(r, u), local(r, v), uv, vu).expect("valid");
        }
    }
    parts[0].add_accumulated_flow(g.accumulated_flow());
    Ok(parts)
}

/// Adds `src` (local ids `src_ids`, global) into `dst` (sorted global ids `dst_ids`).
fn add_into(dst: &mut FlowGraph, dst_ids: &[usize], src: &FlowGraph, src_ids: &[usize]) {
    let map: Vec<usize> = src_ids.iter().map(|v| dst_ids.binary_search(v).expect("subset")).collect();
    for k in 0..src.n_vertices() {
        let (s, t) = (src.source_cap(k), src.sink_cap(k));
        if !s.is_zero() || !t.is_zero() {
            dst.add_tlinks(map[k], s, t).expect("valid");
        }
    }
    for (u, v, uv, vu) in src.arcs() {
        if !uv.is_zero() || !vu.is_zero() {
            dst.add_edge(map[u], map[v], uv, vu).expect("valid");
        }
    }
    dst.add_accumulated_flow(src.accumulated_flow());
}

fn union_sorted(sets: impl Iterator<Item = Vec<usize>>) -> Vec<usize> {
    let mut all: Vec<usize> = sets.flatten().collect();
    all.sort_unstable();
    all.dedup();
    all
}

impl Partition {
    pub fn split(g: &FlowGraph, spec: &RegionSpec) -> Result<Partition, SplitError> {
        let parts = distribute(g, &spec.regions)?;
        let subgraphs = parts
            .into_iter()
            .zip(&spec.regions)
            .map(|(graph, ids)| Subgraph { state: BkState::new(graph), global: ids.clone() })
            .collect();
        let mut p = Partition {
            n_global: g.n_vertices(),
            subgraphs,
            overlaps: Vec::new(),
            membership: Vec::new(),
            layout: spec.layout.clone(),
            initial_step: Capacity::ONE,
        };
        p.rebuild(HashMap::new());
        Ok(p)
    }

    /// Step size given to dual variables of newly shared vertices. Applies
    /// to existing fresh variables too.
    pub fn set_initial_step(&mut self, step: Capacity) {
        assert!(step > Capacity::ZERO, "step must be positive");
        let old = self.initial_step;
        self.initial_step = step;
        for o in &mut self.overlaps {
            for d in &mut o.dual {
                if d.last_sign == 0 && d.lambda.is_zero() && d.step == old {
                    d.step = step;
                }
            }
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_global
    }

    pub fn n_subgraphs(&self) -> usize {
        self.subgraphs.len()
    }

    pub fn subgraph(&self, i: usize) -> &Subgraph {
        &self.subgraphs[i]
    }

    pub fn subgraphs(&self) -> &[Subgraph] {
        &self.subgraphs
    }

    pub fn subgraphs_mut(&mut self) -> &mut [Subgraph] {
        &mut self.subgraphs
    }

    pub fn overlaps(&self) -> &[Overlap] {
        &self.overlaps
    }

    pub fn overlaps_mut(&mut self) -> &mut [Overlap] {
        &mut self.overlaps
    }

    pub fn layout(&self) -> Option<&StripeLayout> {
        self.layout.as_ref()
    }

    /// Subgraphs containing global vertex `v`.
    pub fn membership(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        members(&self.membership[v])
    }

    /// Number of subgraphs containing each vertex.
    pub fn split_depth(&self) -> Vec<usize> {
        self.membership.iter().map(|m| members(m).count()).collect()
    }

    /// Sum of the accumulated flows of all subgraphs.
    pub fn accumulated_total(&self) -> Capacity {
        self.subgraphs.iter().map(|s| s.graph().accumulated_flow()).sum()
    }

    /// Sum of all subgraph polynomials over the global variables.
    pub fn polynomial_sum(&self) -> MultilinearPolynomial {
        let mut f = MultilinearPolynomial::zero(self.n_global);
        for s in &self.subgraphs {
            f.add_mapped(&graph_polynomial(s.graph()), &s.global);
        }
        f
    }

    /// Whether subgraphs `a` and `b` share at least one vertex.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.overlaps.iter().any(|o| o.a == a && o.b == b)
    }

    /// Recomputes membership and overlaps. `carry` maps a vertex to its old
    /// dual variable and the new index of the subgraph that held `+lambda`.
    fn rebuild(&mut self, carry: HashMap<usize, (DualVar, usize)>) {
        let mut membership = vec![[NONE; 2]; self.n_global];
        for (i, s) in self.subgraphs.iter().enumerate() {
            for &v in &s.global {
                let m = &mut membership[v];
                if m[0] == NONE {
                    m[0] = i as u32;
                } else {
                    assert_eq!(m[1], NONE, "vertex {v} in more than two subgraphs");
                    m[1] = i as u32;
                }
            }
        }
        let mut by_pair: std::collections::BTreeMap<(usize, usize), Vec<usize>> = Default::default();
        for (v, m) in membership.iter().enumerate() {
            if m[1] != NONE {
                by_pair.entry((m[0] as usize, m[1] as usize)).or_default().push(v);
            }
        }
        self.overlaps = by_pair
            .into_iter()
            .map(|((a, b), vertices)| {
                let local_a = vertices.iter().map(|&v| self.subgraphs[a].local_index(v).unwrap()).collect();
                let local_b = vertices.iter().map(|&v| self.subgraphs[b].local_index(v).unwrap()).collect();
                let dual = vertices
                    .iter()
                    .map(|v| match carry.get(v) {
                        Some(&(d, plus)) if plus == a => d,
                        Some(&(d, plus)) if plus == b => d.flipped(),
                        _ => DualVar::fresh(self.initial_step),
                    })
                    .collect();
                Overlap { a, b, vertices, local_a, local_b, dual }
            })
            .collect();
        self.membership = membership;
    }

    /// Dual state of every shared vertex with the `+lambda` side mapped by `f`.
    fn carried(&self, f: impl Fn(usize, usize) -> Option<usize>) -> HashMap<usize, (DualVar, usize)> {
        let mut out = HashMap::new();
        for o in &self.overlaps {
            for (k, &v) in o.vertices.iter().enumerate() {
                if let Some(plus) = f(o.a, v) {
                    out.insert(v, (o.dual[k], plus));
                }
            }
        }
        out
    }

    /// Replaces the subgraphs in `group` by their sum, placed at the smallest
    /// index of the group. Returns that index.
    pub fn merge(&mut self, group: &[usize]) -> Result<usize, SplitError> {
        let mut g: Vec<usize> = group.to_vec();
        g.sort_unstable();
        g.dedup();
        if g.is_empty() || g.len() != group.len() || *g.last().unwrap() >= self.subgraphs.len() {
            return Err(SplitError::BadGroup(group.to_vec()));
        }
        if g.len() == 1 {
            return Ok(g[0]);
        }
        // connectivity through overlaps
        let mut seen = vec![false; g.len()];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(k) = stack.pop() {
            for j in 0..g.len() {
                if !seen[j] && self.adjacent(g[k], g[j]) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(SplitError::NotAdjacent(group.to_vec()));
        }

        let target = g[0];
        let new_index = |old: usize| -> usize {
            if g.binary_search(&old).is_ok() {
                target
            } else {
                old - g.iter().filter(|&&m| m < old).count() + usize::from(old > target)
            }
        };
        let carry = self.carried(|plus, v| {
            let m = self.membership(v).collect::<Vec<_>>();
            let both_in = m.iter().all(|s| g.binary_search(s).is_ok());
            (!both_in).then(|| new_index(plus))
        });

        let ids = union_sorted(g.iter().map(|&i| self.subgraphs[i].global.clone()));
        let scale = g.iter().map(|&i| self.subgraphs[i].graph().scale()).max().unwrap();
        let mut merged = FlowGraph::with_scale(ids.len(), scale);
        for &i in &g {
            let s = &self.subgraphs[i];
            add_into(&mut merged, &ids, s.graph(), &s.global);
        }

        if let Some(layout) = &mut self.layout {
            let lo = g.iter().map(|&i| layout.spans[i].0).min().unwrap();
            let hi = g.iter().map(|&i| layout.spans[i].1).max().unwrap();
            if g.windows(2).all(|w| w[1] == w[0] + 1) {
                layout.spans[target] = (lo, hi);
                for &i in g[1..].iter().rev() {
                    layout.spans.remove(i);
                }
            } else {
                self.layout = None;
            }
        }
        for &i in g[1..].iter().rev() {
            self.subgraphs.remove(i);
        }
        self.subgraphs[target] = Subgraph { state: BkState::new(merged), global: ids };
        self.rebuild(carry);
        Ok(target)
    }

    /// Merges several disjoint groups, highest first so indices stay valid.
    /// Returns the new index of each group, in the order given.
    pub fn merge_groups(&mut self, groups: &[Vec<usize>]) -> Result<Vec<usize>, SplitError> {
        let mut used = vec![false; self.subgraphs.len()];
        for grp in groups {
            if grp.is_empty() {
                return Err(SplitError::BadGroup(grp.clone()));
            }
            for &i in grp {
                if i >= used.len() || used[i] {
                    return Err(SplitError::BadGroup(grp.clone()));
                }
                used[i] = true;
            }
        }
        let mut order: Vec<usize> = (0..groups.len()).collect();
        order.sort_by_key(|&k| std::cmp::Reverse(groups[k].iter().min().copied()));
        // groups may interleave ([0, 3] with [1, 2]), so shift each member
        // down by the members already removed below it
        let mut removed: Vec<usize> = Vec::new();
        for k in order {
            let shifted: Vec<usize> =
                groups[k].iter().map(|&i| i - removed.iter().filter(|&&r| r < i).count()).collect();
            self.merge(&shifted)?;
            let m = *groups[k].iter().min().unwrap();
            removed.extend(groups[k].iter().copied().filter(|&i| i != m));
        }
        // a group's minimum moves down by the non-minimal members of the
        // groups below it
        let min_of = |grp: &Vec<usize>| *grp.iter().min().unwrap();
        Ok(groups
            .iter()
            .map(|grp| {
                let m = min_of(grp);
                let removed: usize =
                    groups.iter().map(|h| h.iter().filter(|&&i| i < m && i != min_of(h)).count()).sum();
                m - removed
            })
            .collect())
    }

    /// Merges everything into one subgraph.
    pub fn merge_all(&mut self) -> Result<(), SplitError> {
        while self.subgraphs.len() > 1 {
            // merge along the overlap structure; a disconnected partition
            // (no shared vertices) is merged component-wise then pairwise
            let all: Vec<usize> = (0..self.subgraphs.len()).collect();
            match self.merge(&all) {
                Ok(_) => {}
                Err(SplitError::NotAdjacent(_)) => self.force_merge_all(),
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    fn force_merge_all(&mut self) {
        let ids = union_sorted(self.subgraphs.iter().map(|s| s.global.clone()));
        let scale = self.subgraphs.iter().map(|s| s.graph().scale()).max().unwrap();
        let mut merged = FlowGraph::with_scale(ids.len(), scale);
        for s in &self.subgraphs {
            add_into(&mut merged, &ids, s.graph(), &s.global);
        }
        self.subgraphs = vec![Subgraph { state: BkState::new(merged), global: ids }];
        if let Some(l) = &mut self.layout {
            l.spans = vec![(0, l.extent() - 1)];
        }
        self.rebuild(HashMap::new());
    }

    /// Moves the shared stripe boundary of neighbors `a` and `a + 1` by
    /// `shift` columns (rows): the band between the old and the new boundary
    /// is recombined from both sides and re-split on the new boundary. Dual
    /// variables of the new shared line start fresh.
    pub fn adjust_boundary(&mut self, a: usize, b: usize, shift: isize) -> Result<AdjustReport, SplitError> {
        let layout = self.layout.clone().ok_or(SplitError::NoLayout)?;
        if b != a + 1 || b >= self.subgraphs.len() {
            return Err(SplitError::NotNeighbors { a, b });
        }
        let (a_lo, o) = layout.spans[a];
        let (o2, b_hi) = layout.spans[b];
        if o != o2 {
            return Err(SplitError::NotNeighbors { a, b });
        }
        let new_o = o as isize + shift;
        if new_o <= a_lo as isize || new_o >= b_hi as isize {
            return Err(SplitError::ShiftOutOfRange {
                shift,
                min: a_lo as isize + 1 - o as isize,
                max: b_hi as isize - 1 - o as isize,
            });
        }
        let new_o = new_o as usize;
        let (band_lo, band_hi) = (o.min(new_o), o.max(new_o));
        let band = layout.band(band_lo, band_hi);
        let in_band = |v: usize| band.binary_search(&v).is_ok();

        let carry = self.carried(|plus, v| {
            let m: Vec<usize> = self.membership(v).collect();
            (!(m.contains(&a) && m.contains(&b))).then_some(plus)
        });

        let old_a = self.subgraphs[a].global.clone();
        let old_b = self.subgraphs[b].global.clone();
        let new_a: Vec<usize> = old_a
            .iter()
            .copied()
            .filter(|&v| !in_band(v) || layout.coord(v) <= new_o)
            .chain(band.iter().copied().filter(|&v| layout.coord(v) <= new_o))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let new_b: Vec<usize> = old_b
            .iter()
            .copied()
            .filter(|&v| !in_band(v) || layout.coord(v) >= new_o)
            .chain(band.iter().copied().filter(|&v| layout.coord(v) >= new_o))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();

        // The band's items from both sides, in band-local ids.
        let scale = self.subgraphs[a].graph().scale().max(self.subgraphs[b].graph().scale());
        let mut band_graph = FlowGraph::with_scale(band.len(), scale);
        let mut keep = [FlowGraph::with_scale(new_a.len(), scale), FlowGraph::with_scale(new_b.len(), scale)];
        for (side, (sub, new_ids)) in [(a, &new_a), (b, &new_b)].into_iter().enumerate() {
            let s = &self.subgraphs[sub];
            let g = s.graph();
            let ids = &s.global;
            let bl = |k: usize| band.binary_search(&ids[k]).ok();
            let nl = |k: usize| new_ids.binary_search(&ids[k]).expect("vertex kept on its side");
            for k in 0..g.n_vertices() {
                let (sc, tc) = (g.source_cap(k), g.sink_cap(k));
                if sc.is_zero() && tc.is_zero() {
                    continue;
                }
                match bl(k) {
                    Some(j) => band_graph.add_tlinks(j, sc, tc).expect("valid"),
                    None => keep[side].add_tlinks(nl(k), sc, tc).expect("valid"),
                }
            }
            for (u, v, uv, vu) in g.arcs() {
                if uv.is_zero() && vu.is_zero() {
                    continue;
                }
                match (bl(u), bl(v)) {
                    (Some(x), Some(y)) => band_graph.add_edge(x, y, uv, vu).expect("valid"),
                    _ => keep[side].add_edge(nl(u), nl(v), uv, vu).expect("valid"),
                }
            }
            keep[side].add_accumulated_flow(g.accumulated_flow());
        }
        // Re-split the band on the new boundary.
        let region_a: Vec<usize> = (0..band.len()).filter(|&j| layout.coord(band[j]) <= new_o).collect();
        let region_b: Vec<usize> = (0..band.len()).filter(|&j| layout.coord(band[j]) >= new_o).collect();
        let band_only = {
            let mut g = band_graph.clone();
            g.set_accumulated_flow(Capacity::ZERO);
            g
        };
        let pieces = distribute(&band_only, &[region_a.clone(), region_b.clone()])?;
        for (side, (piece, region)) in pieces.iter().zip([&region_a, &region_b]).enumerate() {
            let ids: Vec<usize> = region.iter().map(|&j| band[j]).collect();
            let new_ids = if side == 0 { &new_a } else { &new_b };
            add_into(&mut keep[side], new_ids, piece, &ids);
        }
        let [ga, gb] = keep;
        self.subgraphs[a] = Subgraph { state: BkState::new(ga), global: new_a };
        self.subgraphs[b] = Subgraph { state: BkState::new(gb), global: new_b };
        let l = self.layout.as_mut().unwrap();
        l.spans[a].1 = new_o;
        l.spans[b].0 = new_o;
        self.rebuild(carry);
        Ok(AdjustReport { band_vertices: band.len(), band_graph })
    }

    /// Splits subgraph `i` over `regions` (global ids covering exactly its
    /// vertex set). Vertices that `i` shares with other subgraphs must land
    /// in exactly one piece. The pieces take indices `i..i + regions.len()`.
    pub fn refine(&mut self, i: usize, regions: Vec<Vec<usize>>) -> Result<Vec<usize>, SplitError> {
        let bad = |msg: String| SplitError::BadRefinement { sub: i, msg };
        if i >= self.subgraphs.len() {
            return Err(bad("no such subgraph".into()));
        }
        if regions.len() < 2 {
            return Ok(vec![i]);
        }
        let spec = RegionSpec::new(regions);
        let ids = self.subgraphs[i].global.clone();
        let mut local_regions = Vec::with_capacity(spec.regions.len());
        for r in &spec.regions {
            let mut lr = Vec::with_capacity(r.len());
            for &v in r {
                let k = ids.binary_search(&v).map_err(|_| bad(format!("vertex {v} is not in the subgraph")))?;
                lr.push(k);
            }
            local_regions.push(lr);
        }
        for &v in &ids {
            let outside = self.membership(v).any(|s| s != i);
            let count = spec.regions.iter().filter(|r| r.binary_search(&v).is_ok()).count();
            if outside && count > 1 {
                return Err(bad(format!("vertex {v} is shared with another subgraph and cannot be shared again")));
            }
        }
        let pieces = distribute(self.subgraphs[i].graph(), &local_regions).map_err(|e| match e {
            SplitError::Uncovered(k) => bad(format!("vertex {} not covered", ids[k])),
            SplitError::NotSeparable { u, v } => SplitError::NotSeparable { u: ids[u], v: ids[v] },
            other => other,
        })?;

        let k = pieces.len();
        let piece_of = |v: usize| spec.regions.iter().position(|r| r.binary_search(&v).is_ok());
        let carry = self.carried(|plus, v| {
            if plus == i {
                piece_of(v).map(|p| i + p)
            } else if plus > i {
                Some(plus + k - 1)
            } else {
                Some(plus)
            }
        });
        let new: Vec<Subgraph> = pieces
            .into_iter()
            .zip(spec.regions)
            .map(|(graph, global)| Subgraph { state: BkState::new(graph), global })
            .collect();
        self.subgraphs.splice(i..=i, new);
        self.layout = None;
        self.rebuild(carry);
        Ok((i..i + k).collect())
    }
}
