//! Small graphs and random generators shared by the unit, integration and
//! acceptance tests, the CLI tests and the benchmarks.

use rand::Rng;

use crate::capacity::Capacity;
use crate::graph::FlowGraph;

fn c(v: i64) -> Capacity {
    Capacity::from_int(v)
}

/// Two vertices: `s->1` 4, `0->t` 6, `1->t` 2, `0->1` 1, `1->0` 2.
/// Polynomial `8 - 4 x0 + 3 x1 - 3 x0 x1`, min cut 4.
pub fn g0() -> FlowGraph {
    let mut g = FlowGraph::new(2);
    g.add_tlinks(0, c(0), c(6)).unwrap();
    g.add_tlinks(1, c(4), c(2)).unwrap();
    g.add_edge(0, 1, c(1), c(2)).unwrap();
    g
}

/// Residual of [`g0`] after pushing one unit along `s->1->0->t`.
pub fn g1() -> FlowGraph {
    let mut g = FlowGraph::new(2);
    g.add_tlinks(0, c(0), c(5)).unwrap();
    g.add_tlinks(1, c(3), c(2)).unwrap();
    g.add_edge(0, 1, c(2), c(1)).unwrap();
    g
}

/// Residual of [`g0`] once the full flow of 4 is pushed.
pub fn g2() -> FlowGraph {
    let mut g = FlowGraph::new(2);
    g.add_tlinks(0, c(0), c(4)).unwrap();
    g.add_edge(0, 1, c(3), c(0)).unwrap();
    g
}

/// Random graph on `1..=max_n` vertices with integer capacities in
/// `0..=max_cap`. About half of the vertex pairs get an arc record.
pub fn random_graph(rng: &mut impl Rng, max_n: usize, max_cap: i64) -> FlowGraph {
    let n = rng.gen_range(1..=max_n);
    random_graph_n(rng, n, max_cap, 0.5)
}

pub fn random_graph_n(rng: &mut impl Rng, n: usize, max_cap: i64, density: f64) -> FlowGraph {
    let mut g = FlowGraph::new(n);
    for i in 0..n {
        let s = rng.gen_range(0..=max_cap);
        let t = rng.gen_range(0..=max_cap);
        g.add_tlinks(i, c(s), c(t)).unwrap();
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                let a = rng.gen_range(0..=max_cap);
                let b = rng.gen_range(0..=max_cap);
                g.add_edge(u, v, c(a), c(b)).unwrap();
            }
        }
    }
    g
}

/// Random 4-connected `w x h` grid graph (vertex `r * w + c`).
pub fn random_grid(rng: &mut impl Rng, w: usize, h: usize, max_cap: i64) -> FlowGraph {
    let mut g = FlowGraph::new(w * h);
    for i in 0..w * h {
        g.add_tlinks(i, c(rng.gen_range(0..=max_cap)), c(rng.gen_range(0..=max_cap))).unwrap();
    }
    for r in 0..h {
        for col in 0..w {
            let p = r * w + col;
            if col + 1 < w {
                g.add_edge(p, p + 1, c(rng.gen_range(0..=max_cap)), c(rng.gen_range(0..=max_cap))).unwrap();
            }
            if r + 1 < h {
                g.add_edge(p, p + w, c(rng.gen_range(0..=max_cap)), c(rng.gen_range(0..=max_cap))).unwrap();
            }
        }
    }
    g
}
