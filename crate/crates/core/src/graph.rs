//! The s-t flow network shared by every solver in the crate.

use std::collections::HashMap;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::Capacity;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {vertex} out of range (graph has {n} vertices)")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("negative capacity {value} on {what}")]
    NegativeCapacity { what: String, value: Capacity },
}

/// One record per unordered vertex pair, holding both directions. `u < v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcRecord {
    pub u: u32,
    pub v: u32,
    pub cap_uv: i64,
    pub cap_vu: i64,
}

/// Directed s-t network over vertices `0..n`, terminals implicit.
///
/// All capacities are numerators over the shared denominator `2^scale`. The
/// graph also carries the constant absorbed by flow pushes and
/// reparameterizations, so that `cut_cost` of any assignment equals the cost
/// of the corresponding cut in the network this graph was derived from.
#[derive(Clone, Debug)]
pub struct FlowGraph {
    scale: u32,
    source: Vec<i64>,
    sink: Vec<i64>,
    arcs: Vec<ArcRecord>,
    lookup: HashMap<(u32, u32), usize>,
    accumulated: i64,
}

impl FlowGraph {
    pub fn new(n: usize) -> Self {
        Self::with_scale(n, 0)
    }

    pub fn with_scale(n: usize, scale: u32) -> Self {
        assert!(n <= u32::MAX as usize);
        FlowGraph {
            scale,
            source: vec![0; n],
            sink: vec![0; n],
            arcs: Vec::new(),
            lookup: HashMap::new(),
            accumulated: 0,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.source.len()
    }

    pub fn n_arcs(&self) -> usize {
        self.arcs.len()
    }

    /// Shared denominator exponent.
    pub fn scale(&self) -> u32 {
        self.scale
    }

    fn cap(&self, raw: i64) -> Capacity {
        Capacity::new(raw, self.scale)
    }

    pub fn source_cap(&self, i: usize) -> Capacity {
        self.cap(self.source[i])
    }

    pub fn sink_cap(&self, i: usize) -> Capacity {
        self.cap(self.sink[i])
    }

    pub fn accumulated_flow(&self) -> Capacity {
        self.cap(self.accumulated)
    }

    /// Directed capacity `u -> v`, zero when no record exists.
    pub fn arc_cap(&self, u: usize, v: usize) -> Capacity {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        match self.lookup.get(&(a as u32, b as u32)) {
            Some(&k) => {
                let r = &self.arcs[k];
                self.cap(if u < v { r.cap_uv } else { r.cap_vu })
            }
            None => Capacity::ZERO,
        }
    }

    /// `(u, v, cap u->v, cap v->u)` for every record, `u < v`.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, Capacity, Capacity)> + '_ {
        self.arcs.iter().map(|r| (r.u as usize, r.v as usize, self.cap(r.cap_uv), self.cap(r.cap_vu)))
    }

    fn check_vertex(&self, i: usize) -> Result<(), GraphError> {
        if i >= self.n_vertices() {
            Err(GraphError::VertexOutOfRange { vertex: i, n: self.n_vertices() })
        } else {
            Ok(())
        }
    }

    fn check_non_negative(what: impl FnOnce() -> String, c: Capacity) -> Result<(), GraphError> {
        if c.is_negative() {
            Err(GraphError::NegativeCapacity { what: what(), value: c })
        } else {
            Ok(())
        }
    }

    /// Raises the shared denominator to at least `2^scale`.
    pub fn rescale(&mut self, scale: u32) {
        if scale <= self.scale {
            return;
        }
        let shift = scale - self.scale;
        let up = |x: &mut i64| *x = x.checked_mul(1i64 << shift).expect("capacity overflow");
        self.source.iter_mut().for_each(up);
        self.sink.iter_mut().for_each(up);
        for r in &mut self.arcs {
            up(&mut r.cap_uv);
            up(&mut r.cap_vu);
        }
        up(&mut self.accumulated);
        self.scale = scale;
    }

    /// Lowers the denominator as far as every stored value allows.
    pub fn normalize(&mut self) {
        let tz = self
            .source
            .iter()
            .chain(&self.sink)
            .chain(std::iter::once(&self.accumulated))
            .copied()
            .chain(self.arcs.iter().flat_map(|r| [r.cap_uv, r.cap_vu]))
            .filter(|&x| x != 0)
            .map(i64::trailing_zeros)
            .min()
            .unwrap_or(u32::MAX)
            .min(self.scale);
        if tz == 0 {
            return;
        }
        let down = |x: &mut i64| *x >>= tz;
        self.source.iter_mut().for_each(down);
        self.sink.iter_mut().for_each(down);
        for r in &mut self.arcs {
            down(&mut r.cap_uv);
            down(&mut r.cap_vu);
        }
        down(&mut self.accumulated);
        self.scale -= tz;
    }

    pub(crate) fn raw(&self, c: Capacity) -> i64 {
        c.at_scale(self.scale).expect("capacity not representable at graph scale")
    }

    /// Rescales so that every value in `cs` is representable, then returns
    /// their raw numerators.
    fn fit<const K: usize>(&mut self, cs: [Capacity; K]) -> [i64; K] {
        let need = cs.iter().map(|c| c.normalized().log2_den()).max().unwrap_or(0);
        self.rescale(need);
        cs.map(|c| self.raw(c))
    }

    pub fn add_tlinks(&mut self, i: usize, source: Capacity, sink: Capacity) -> Result<(), GraphError> {
        self.check_vertex(i)?;
        let [s, t] = self.fit([source, sink]);
        let (ns, nt) = (self.source[i] + s, self.sink[i] + t);
        Self::check_non_negative(|| format!("t-link s->{i}"), self.cap(ns))?;
        Self::check_non_negative(|| format!("t-link {i}->t"), self.cap(nt))?;
        self.source[i] = ns;
        self.sink[i] = nt;
        Ok(())
    }

    pub fn set_tlinks(&mut self, i: usize, source: Capacity, sink: Capacity) -> Result<(), GraphError> {
        self.check_vertex(i)?;
        Self::check_non_negative(|| format!("t-link s->{i}"), source)?;
        Self::check_non_negative(|| format!("t-link {i}->t"), sink)?;
        let [s, t] = self.fit([source, sink]);
        self.source[i] = s;
        self.sink[i] = t;
        Ok(())
    }

    /// Adds capacity in both directions between `u` and `v`, folding into an
    /// existing record for the pair.
    pub fn add_edge(&mut self, u: usize, v: usize, cap_uv: Capacity, cap_vu: Capacity) -> Result<(), GraphError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        let [a, b] = self.fit([cap_uv, cap_vu]);
        let (lo, hi, fwd, bwd) = if u < v { (u, v, a, b) } else { (v, u, b, a) };
        let k = self.record_index(lo, hi);
        let r = &mut self.arcs[k];
        let (nf, nb) = (r.cap_uv + fwd, r.cap_vu + bwd);
        if nf < 0 || nb < 0 {
            let value = Capacity::new(nf.min(nb), self.scale);
            return Err(GraphError::NegativeCapacity { what: format!("arc {u}-{v}"), value });
        }
        r.cap_uv = nf;
        r.cap_vu = nb;
        Ok(())
    }

    fn record_index(&mut self, lo: usize, hi: usize) -> usize {
        let key = (lo as u32, hi as u32);
        if let Some(&k) = self.lookup.get(&key) {
            return k;
        }
        let k = self.arcs.len();
        self.arcs.push(ArcRecord { u: key.0, v: key.1, cap_uv: 0, cap_vu: 0 });
        self.lookup.insert(key, k);
        k
    }

    pub fn add_accumulated_flow(&mut self, c: Capacity) {
        let [raw] = self.fit([c]);
        self.accumulated += raw;
    }

    pub fn set_accumulated_flow(&mut self, c: Capacity) {
        let [raw] = self.fit([c]);
        self.accumulated = raw;
    }

    /// Cost of the cut selected by `x` (0 = source side), plus the carried
    /// constant.
    pub fn cut_cost(&self, x: &[u8]) -> Capacity {
        assert_eq!(x.len(), self.n_vertices(), "assignment length mismatch");
        let mut total = self.accumulated as i128;
        for i in 0..self.n_vertices() {
            total += if x[i] == 1 { self.source[i] } else { self.sink[i] } as i128;
        }
        for r in &self.arcs {
            match (x[r.u as usize], x[r.v as usize]) {
                (0, 1) => total += r.cap_uv as i128,
                (1, 0) => total += r.cap_vu as i128,
                _ => {}
            }
        }
        Capacity::from_wide(total, self.scale)
    }

    /// Sum of every stored capacity (t-links and both arc directions).
    pub fn total_capacity(&self) -> Capacity {
        let s: i128 = self
            .source
            .iter()
            .chain(&self.sink)
            .map(|&x| x as i128)
            .chain(self.arcs.iter().map(|r| r.cap_uv as i128 + r.cap_vu as i128))
            .sum();
        Capacity::from_wide(s, self.scale)
    }

    pub fn has_negative_capacity(&self) -> bool {
        self.source.iter().chain(&self.sink).any(|&x| x < 0) || self.arcs.iter().any(|r| r.cap_uv < 0 || r.cap_vu < 0)
    }

    // Raw access for the solvers in this crate. Values are numerators at `scale`.

    pub(crate) fn source_raw(&self) -> &[i64] {
        &self.source
    }

    pub(crate) fn sink_raw(&self) -> &[i64] {
        &self.sink
    }

    pub(crate) fn tlinks_raw_mut(&mut self) -> (&mut [i64], &mut [i64]) {
        (&mut self.source, &mut self.sink)
    }

    pub(crate) fn arc_records(&self) -> &[ArcRecord] {
        &self.arcs
    }

    pub(crate) fn arc_records_mut(&mut self) -> &mut [ArcRecord] {
        &mut self.arcs
    }

    pub(crate) fn accumulated_raw(&self) -> i64 {
        self.accumulated
    }

    pub(crate) fn accumulated_raw_mut(&mut self) -> &mut i64 {
        &mut self.accumulated
    }
}

impl Eq for FlowGraph {}

impl PartialEq for FlowGraph {
    /// Value equality: same vertex count, same capacities per t-link and per
    /// directed pair, same constant. Denominators and record order may differ.
    fn eq(&self, other: &Self) -> bool {
        if self.n_vertices() != other.n_vertices() {
            return false;
        }
        let s = self.scale.max(other.scale);
        let (a, b) = (self.clone_at(s), other.clone_at(s));
        if a.source != b.source || a.sink != b.sink || a.accumulated != b.accumulated {
            return false;
        }
        let mut ra: Vec<_> = a.arcs.iter().filter(|r| r.cap_uv != 0 || r.cap_vu != 0).copied().collect();
        let mut rb: Vec<_> = b.arcs.iter().filter(|r| r.cap_uv != 0 || r.cap_vu != 0).copied().collect();
        ra.sort_by_key(|r| (r.u, r.v));
        rb.sort_by_key(|r| (r.u, r.v));
        ra == rb
    }
}

impl FlowGraph {
    fn clone_at(&self, scale: u32) -> FlowGraph {
        let mut g = self.clone();
        g.rescale(scale);
        g
    }
}

/// Binary labeling of the vertices: 0 puts a vertex on the source side.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment(Vec<u8>);

impl Assignment {
    pub fn zeros(n: usize) -> Self {
        Assignment(vec![0; n])
    }

    /// Panics if any entry is not 0 or 1.
    pub fn new(labels: Vec<u8>) -> Self {
        assert!(labels.iter().all(|&x| x <= 1), "labels must be 0 or 1");
        Assignment(labels)
    }

    /// Bit `i` of `bits` becomes the label of vertex `i`.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        Assignment((0..n).map(|i| ((bits >> i) & 1) as u8).collect())
    }

    pub fn set(&mut self, i: usize, label: u8) {
        assert!(label <= 1);
        self.0[i] = label;
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

impl Deref for Assignment {
    type Target = [u8];
    fn deref(&self) -> &[u8] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: i64) -> Capacity {
        Capacity::from_int(v)
    }

    #[test]
    fn antiparallel_arcs_fold_into_one_record() {
        let mut g = FlowGraph::new(3);
        g.add_edge(0, 1, c(2), c(0)).unwrap();
        g.add_edge(1, 0, c(5), c(1)).unwrap();
        assert_eq!(g.n_arcs(), 1);
        assert_eq!(g.arc_cap(0, 1), c(3));
        assert_eq!(g.arc_cap(1, 0), c(5));
        assert_eq!(g.arc_cap(1, 2), Capacity::ZERO);
    }

    #[test]
    fn fractional_capacity_rescales_graph() {
        let mut g = FlowGraph::new(2);
        g.add_tlinks(0, c(3), c(0)).unwrap();
        g.add_tlinks(1, Capacity::new(1, 2), c(0)).unwrap();
        assert_eq!(g.scale(), 2);
        assert_eq!(g.source_cap(0), c(3));
        g.add_tlinks(1, Capacity::new(3, 2), c(0)).unwrap();
        g.normalize();
        assert_eq!(g.scale(), 0);
        assert_eq!(g.source_cap(1), c(1));
    }

    #[test]
    fn mixed_denominators_in_one_call() {
        let mut g = FlowGraph::new(2);
        g.add_tlinks(0, c(5), Capacity::new(1, 3)).unwrap();
        assert_eq!((g.source_cap(0), g.sink_cap(0)), (c(5), Capacity::new(1, 3)));
        g.add_edge(0, 1, c(2), Capacity::new(3, 5)).unwrap();
        assert_eq!((g.arc_cap(0, 1), g.arc_cap(1, 0)), (c(2), Capacity::new(3, 5)));
    }

    #[test]
    fn errors() {
        let mut g = FlowGraph::new(2);
        assert_eq!(g.add_edge(0, 0, c(1), c(1)), Err(GraphError::SelfLoop(0)));
        assert!(matches!(g.add_tlinks(5, c(1), c(0)), Err(GraphError::VertexOutOfRange { .. })));
        assert!(matches!(g.add_tlinks(0, c(-1), c(0)), Err(GraphError::NegativeCapacity { .. })));
    }

    #[test]
    fn cut_cost_counts_forward_edges_only() {
        let mut g = FlowGraph::new(2);
        g.add_tlinks(0, c(0), c(6)).unwrap();
        g.add_tlinks(1, c(4), c(2)).unwrap();
        g.add_edge(0, 1, c(1), c(2)).unwrap();
        assert_eq!(g.cut_cost(&[0, 0]), c(8));
        assert_eq!(g.cut_cost(&[1, 0]), c(4));
        assert_eq!(g.cut_cost(&[0, 1]), c(11));
        assert_eq!(g.cut_cost(&[1, 1]), c(4));
    }

    #[test]
    fn equality_is_by_value() {
        let mut a = FlowGraph::new(2);
        a.add_edge(0, 1, c(1), c(0)).unwrap();
        let mut b = FlowGraph::with_scale(2, 3);
        b.add_edge(1, 0, c(0), c(1)).unwrap();
        assert_eq!(a, b);
        b.add_accumulated_flow(Capacity::new(1, 3));
        assert_ne!(a, b);
    }
}
