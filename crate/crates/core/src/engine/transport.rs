//! Cost model for moving labels and graphs between workers.
//!
//! In-process execution is free. The simulated network places subgraphs on
//! machines in contiguous index blocks and charges `latency + bytes / bw` per
//! message that crosses machines: label exchanges over an overlap each
//! iteration, whole serialized subgraphs when a merge pulls members onto one
//! machine, and only the re-split band when a boundary is adjusted.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::TransportConfig;
use crate::capacity::Capacity;
use crate::graph::FlowGraph;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TransportStats {
    pub messages: u64,
    pub label_bytes: u64,
    pub merge_bytes: u64,
    pub adjust_bytes: u64,
    pub modeled_time_s: f64,
}

impl TransportStats {
    pub fn total_bytes(&self) -> u64 {
        self.label_bytes + self.merge_bytes + self.adjust_bytes
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Traffic {
    Labels,
    Merge,
    Adjust,
}

#[derive(Clone, Debug)]
pub struct Transport {
    config: TransportConfig,
    /// Machine hosting each subgraph.
    placement: Vec<usize>,
    stats: TransportStats,
}

impl Transport {
    pub fn new(config: TransportConfig, n_subgraphs: usize) -> Self {
        let machines = match config {
            TransportConfig::InProcess => 1,
            TransportConfig::SimulatedNetwork { machines, .. } => machines,
        };
        let placement = (0..n_subgraphs).map(|i| i * machines / n_subgraphs.max(1)).collect();
        Transport { config, placement, stats: TransportStats::default() }
    }

    pub fn is_simulated(&self) -> bool {
        matches!(self.config, TransportConfig::SimulatedNetwork { .. })
    }

    pub fn stats(&self) -> TransportStats {
        self.stats
    }

    pub fn placement(&self) -> &[usize] {
        &self.placement
    }

    pub fn machine_of(&self, sub: usize) -> usize {
        self.placement[sub]
    }

    /// Charges one message of `bytes` from subgraph `from` to `to`, if they
    /// live on different machines.
    pub fn send(&mut self, from: usize, to: usize, bytes: u64, kind: Traffic) {
        let TransportConfig::SimulatedNetwork { latency_s, bytes_per_sec, .. } = self.config else { return };
        if self.placement[from] == self.placement[to] {
            return;
        }
        self.stats.messages += 1;
        self.stats.modeled_time_s += latency_s + bytes as f64 / bytes_per_sec;
        match kind {
            Traffic::Labels => self.stats.label_bytes += bytes,
            Traffic::Merge => self.stats.merge_bytes += bytes,
            Traffic::Adjust => self.stats.adjust_bytes += bytes,
        }
    }

    /// The member of `group` the others are shipped to: the one with the
    /// most vertices, ties to the lowest index.
    pub fn merge_host(&self, group: &[usize], sizes: &[usize]) -> usize {
        let mut best = group[0];
        for &i in group {
            if sizes[i] > sizes[best] || (sizes[i] == sizes[best] && i < best) {
                best = i;
            }
        }
        best
    }

    pub(crate) fn set_placement(&mut self, placement: Vec<usize>) {
        self.placement = placement;
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("payload too short")]
    Truncated,
    #[error("bad magic or version")]
    BadHeader,
    #[error("invalid graph payload: {0}")]
    Invalid(String),
}

const MAGIC: &[u8; 4] = b"DPGC";
const VERSION: u8 = 1;

/// Little-endian binary form of a graph: header, scale, counts, constant,
/// per-vertex t-links, then one `(u, v, cap_uv, cap_vu)` per arc record.
pub fn encode_graph(g: &FlowGraph) -> Vec<u8> {
    let mut out = Vec::with_capacity(encoded_len(g));
    let (n, m) = (g.n_vertices(), g.n_arcs());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&g.scale().to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(m as u32).to_le_bytes());
    out.extend_from_slice(&g.accumulated_raw().to_le_bytes());
    for (s, t) in g.source_raw().iter().zip(g.sink_raw()) {
        out.extend_from_slice(&s.to_le_bytes());
        out.extend_from_slice(&t.to_le_bytes());
    }
    for r in g.arc_records() {
        out.extend_from_slice(&r.u.to_le_bytes());
        out.extend_from_slice(&r.v.to_le_bytes());
        out.extend_from_slice(&r.cap_uv.to_le_bytes());
        out.extend_from_slice(&r.cap_vu.to_le_bytes());
    }
    out
}

/// Length of [`encode_graph`]'s output.
pub fn encoded_len(g: &FlowGraph) -> usize {
    25 + 16 * g.n_vertices() + 24 * g.n_arcs()
}

struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K], WireError> {
        if self.0.len() < K {
            return Err(WireError::Truncated);
        }
        let (head, rest) = self.0.split_at(K);
        self.0 = rest;
        Ok(head.try_into().unwrap())
    }
    fn u32(&mut self) -> Result<u32, WireError> {
        self.take::<4>().map(u32::from_le_bytes)
    }
    fn i64(&mut self) -> Result<i64, WireError> {
        self.take::<8>().map(i64::from_le_bytes)
    }
}

pub fn decode_graph(bytes: &[u8]) -> Result<FlowGraph, WireError> {
    let mut r = Reader(bytes);
    if &r.take::<4>()? != MAGIC || r.take::<1>()?[0] != VERSION {
        return Err(WireError::BadHeader);
    }
    let scale = r.u32()?;
    if scale > crate::capacity::MAX_LOG2_DEN {
        return Err(WireError::Invalid(format!("scale {scale}")));
    }
    let n = r.u32()? as usize;
    let m = r.u32()? as usize;
    let acc = r.i64()?;
    let cap = |raw: i64| Capacity::new(raw, scale);
    let invalid = |e: crate::graph::GraphError| WireError::Invalid(e.to_string());
    let mut g = FlowGraph::with_scale(n, scale);
    for i in 0..n {
        let (s, t) = (r.i64()?, r.i64()?);
        g.add_tlinks(i, cap(s), cap(t)).map_err(invalid)?;
    }
    for _ in 0..m {
        let (u, v) = (r.u32()? as usize, r.u32()? as usize);
        let (a, b) = (r.i64()?, r.i64()?);
        if u >= v {
            return Err(WireError::Invalid(format!("arc record {u}-{v} not ordered")));
        }
        g.add_edge(u, v, cap(a), cap(b)).map_err(invalid)?;
    }
    g.set_accumulated_flow(cap(acc));
    if !r.0.is_empty() {
        return Err(WireError::Invalid("trailing bytes".into()));
    }
    Ok(g)
}
