//! Pseudo-boolean views of a flow graph.
//!
//! A graph is the posiform
//! `sum a_src[i] x_i + sum a_snk[i] (1 - x_i) + sum a_pair[(i,j)] (1 - x_i) x_j + constant`
//! with one non-negative coefficient per edge. Expanding gives the unique
//! multilinear polynomial `l0 + sum l1[i] x_i + sum l2[(i,j)] x_i x_j`, which is
//! what every reparameterization check compares: two graphs describe the same
//! cut problem iff their polynomials differ by a constant.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::capacity::Capacity;
use crate::graph::{Assignment, FlowGraph, GraphError};

/// Largest variable count [`brute_force_min`] accepts.
pub const BRUTE_FORCE_LIMIT: usize = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PbError {
    #[error("assignment has {got} labels, function has {expected} variables")]
    LengthMismatch { got: usize, expected: usize },
    #[error("{0} variables is too many to enumerate (limit {BRUTE_FORCE_LIMIT})")]
    TooLarge(usize),
    #[error("negative posiform coefficient {value} on {term}")]
    NegativeCoefficient { term: String, value: Capacity },
    #[error("pair term ({0}, {0}) is not allowed")]
    DiagonalPair(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Posiform {
    pub a_src: Vec<Capacity>,
    pub a_snk: Vec<Capacity>,
    /// Coefficient of `(1 - x_i) x_j`, keyed by the ordered pair `(i, j)`.
    pub a_pair: BTreeMap<(usize, usize), Capacity>,
    pub constant: Capacity,
}

impl Posiform {
    pub fn zero(n: usize) -> Self {
        Posiform {
            a_src: vec![Capacity::ZERO; n],
            a_snk: vec![Capacity::ZERO; n],
            a_pair: BTreeMap::new(),
            constant: Capacity::ZERO,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.a_src.len()
    }

    /// The same posiform with the constant dropped.
    pub fn homogeneous(&self) -> Self {
        Posiform { constant: Capacity::ZERO, ..self.clone() }
    }

    /// Term-by-term evaluation, independent of the polynomial expansion.
    pub fn evaluate(&self, x: &[u8]) -> Result<Capacity, PbError> {
        check_len(x, self.n_vars())?;
        let mut v = self.constant;
        for i in 0..self.n_vars() {
            v += if x[i] == 1 { self.a_src[i] } else { self.a_snk[i] };
        }
        for (&(i, j), &a) in &self.a_pair {
            if x[i] == 0 && x[j] == 1 {
                v += a;
            }
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultilinearPolynomial {
    n: usize,
    l0: Capacity,
    l1: Vec<Capacity>,
    /// Keyed by `(i, j)` with `i < j`; zero coefficients are not stored.
    l2: BTreeMap<(usize, usize), Capacity>,
}

impl MultilinearPolynomial {
    pub fn zero(n: usize) -> Self {
        MultilinearPolynomial { n, l0: Capacity::ZERO, l1: vec![Capacity::ZERO; n], l2: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: Capacity) -> Self {
        MultilinearPolynomial { l0: c, ..Self::zero(n) }
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn l0(&self) -> Capacity {
        self.l0
    }

    pub fn l1(&self, i: usize) -> Capacity {
        self.l1[i]
    }

    /// Quadratic coefficient of `x_i x_j` (order of `i`, `j` irrelevant).
    pub fn l2(&self, i: usize, j: usize) -> Capacity {
        let key = if i < j { (i, j) } else { (j, i) };
        self.l2.get(&key).copied().unwrap_or(Capacity::ZERO)
    }

    pub fn quadratic_terms(&self) -> impl Iterator<Item = ((usize, usize), Capacity)> + '_ {
        self.l2.iter().map(|(&k, &v)| (k, v))
    }

    pub fn add_constant(&mut self, c: Capacity) {
        self.l0 += c;
    }

    pub fn add_linear(&mut self, i: usize, c: Capacity) {
        self.l1[i] += c;
    }

    pub fn add_quadratic(&mut self, i: usize, j: usize, c: Capacity) {
        assert_ne!(i, j, "quadratic term needs two distinct variables");
        let key = if i < j { (i, j) } else { (j, i) };
        let e = self.l2.entry(key).or_insert(Capacity::ZERO);
        *e += c;
        if e.is_zero() {
            self.l2.remove(&key);
        }
    }

    /// Adds `other`, whose variable `k` is this polynomial's variable `map[k]`.
    pub fn add_mapped(&mut self, other: &MultilinearPolynomial, map: &[usize]) {
        assert_eq!(map.len(), other.n, "variable map length mismatch");
        self.l0 += other.l0;
        for (k, &c) in other.l1.iter().enumerate() {
            self.l1[map[k]] += c;
        }
        for (&(i, j), &c) in &other.l2 {
            self.add_quadratic(map[i], map[j], c);
        }
    }

    pub fn scaled_half(&self) -> Self {
        MultilinearPolynomial {
            n: self.n,
            l0: self.l0.halve(),
            l1: self.l1.iter().map(|c| c.halve()).collect(),
            l2: self.l2.iter().map(|(&k, c)| (k, c.halve())).collect(),
        }
    }

    /// Coefficients at one common denominator, for fast enumeration.
    fn raw(&self) -> (u32, i128, Vec<i128>, Vec<(usize, usize, i128)>) {
        let scale = std::iter::once(self.l0)
            .chain(self.l1.iter().copied())
            .chain(self.l2.values().copied())
            .map(|c| c.normalized().log2_den())
            .max()
            .unwrap_or(0);
        let l1 = self.l1.iter().map(|c| c.wide_at(scale)).collect();
        let l2 = self.l2.iter().map(|(&(i, j), c)| (i, j, c.wide_at(scale))).collect();
        (scale, self.l0.wide_at(scale), l1, l2)
    }
}

impl std::ops::Add<&MultilinearPolynomial> for &MultilinearPolynomial {
    type Output = MultilinearPolynomial;
    fn add(self, rhs: &MultilinearPolynomial) -> MultilinearPolynomial {
        assert_eq!(self.n, rhs.n, "variable count mismatch");
        let mut out = self.clone();
        out.add_mapped(rhs, &(0..rhs.n).collect::<Vec<_>>());
        out
    }
}

fn check_len(x: &[u8], n: usize) -> Result<(), PbError> {
    if x.len() != n {
        Err(PbError::LengthMismatch { got: x.len(), expected: n })
    } else {
        Ok(())
    }
}

pub fn posiform_of(g: &FlowGraph) -> Posiform {
    let n = g.n_vertices();
    let mut p = Posiform {
        a_src: (0..n).map(|i| g.source_cap(i)).collect(),
        a_snk: (0..n).map(|i| g.sink_cap(i)).collect(),
        a_pair: BTreeMap::new(),
        constant: g.accumulated_flow(),
    };
    for (u, v, uv, vu) in g.arcs() {
        if !uv.is_zero() {
            *p.a_pair.entry((u, v)).or_insert(Capacity::ZERO) += uv;
        }
        if !vu.is_zero() {
            *p.a_pair.entry((v, u)).or_insert(Capacity::ZERO) += vu;
        }
    }
    p
}

pub fn graph_of(p: &Posiform) -> Result<FlowGraph, PbError> {
    let n = p.n_vars();
    let neg = |term: String, value: Capacity| PbError::NegativeCoefficient { term, value };
    let mut g = FlowGraph::new(n);
    for i in 0..n {
        if p.a_src[i].is_negative() {
            return Err(neg(format!("x{i}"), p.a_src[i]));
        }
        if p.a_snk[i].is_negative() {
            return Err(neg(format!("~x{i}"), p.a_snk[i]));
        }
        g.add_tlinks(i, p.a_src[i], p.a_snk[i])?;
    }
    for (&(i, j), &a) in &p.a_pair {
        if i == j {
            return Err(PbError::DiagonalPair(i));
        }
        if a.is_negative() {
            return Err(neg(format!("~x{i} x{j}"), a));
        }
        if !a.is_zero() {
            g.add_edge(i, j, a, Capacity::ZERO)?;
        }
    }
    g.set_accumulated_flow(p.constant);
    Ok(g)
}

pub fn polynomial_of(p: &Posiform) -> MultilinearPolynomial {
    let n = p.n_vars();
    let mut f = MultilinearPolynomial::constant(n, p.constant);
    for i in 0..n {
        f.l0 += p.a_snk[i];
        f.l1[i] += p.a_src[i] - p.a_snk[i];
    }
    for (&(i, j), &a) in &p.a_pair {
        // (1 - x_i) x_j = x_j - x_i x_j
        f.l1[j] += a;
        f.add_quadratic(i, j, -a);
    }
    f
}

/// `polynomial_of(posiform_of(g))`, computed straight from the graph.
pub fn graph_polynomial(g: &FlowGraph) -> MultilinearPolynomial {
    polynomial_of(&posiform_of(g))
}

pub fn evaluate(f: &MultilinearPolynomial, x: &[u8]) -> Result<Capacity, PbError> {
    check_len(x, f.n)?;
    let mut v = f.l0;
    for i in 0..f.n {
        if x[i] == 1 {
            v += f.l1[i];
        }
    }
    for (&(i, j), &c) in &f.l2 {
        if x[i] == 1 && x[j] == 1 {
            v += c;
        }
    }
    Ok(v)
}

/// Exhaustive minimum over all `2^n` assignments, with every argmin in
/// increasing order of `sum x_i 2^i`.
pub fn brute_force_min(f: &MultilinearPolynomial) -> Result<(Capacity, Vec<Assignment>), PbError> {
    if f.n > BRUTE_FORCE_LIMIT {
        return Err(PbError::TooLarge(f.n));
    }
    let (scale, l0, l1, l2) = f.raw();
    let mut best = i128::MAX;
    let mut arg = Vec::new();
    for bits in 0u64..(1u64 << f.n) {
        let on = |i: usize| (bits >> i) & 1 == 1;
        let mut v = l0;
        for (i, &c) in l1.iter().enumerate() {
            if on(i) {
                v += c;
            }
        }
        for &(i, j, c) in &l2 {
            if on(i) && on(j) {
                v += c;
            }
        }
        if v < best {
            best = v;
            arg.clear();
        }
        if v == best {
            arg.push(bits);
        }
    }
    Ok((Capacity::from_wide(best, scale), arg.into_iter().map(|b| Assignment::from_bits(b, f.n)).collect()))
}

/// `Some(f.l0 - g.l0)` when all non-constant coefficients agree.
pub fn poly_equal_up_to_constant(f: &MultilinearPolynomial, g: &MultilinearPolynomial) -> Option<Capacity> {
    (f.n == g.n && f.l1 == g.l1 && f.l2 == g.l2).then(|| f.l0 - g.l0)
}

fn fmt_coeff(f: &mut fmt::Formatter<'_>, first: &mut bool, c: Capacity, term: &str) -> fmt::Result {
    if c.is_zero() {
        return Ok(());
    }
    let sign = if c.is_negative() { "-" } else { "+" };
    if *first {
        if c.is_negative() {
            write!(f, "-")?;
        }
    } else {
        write!(f, " {sign} ")?;
    }
    *first = false;
    let mag = c.abs();
    if term.is_empty() {
        write!(f, "{mag}")
    } else if mag == Capacity::ONE {
        write!(f, "{term}")
    } else {
        write!(f, "{mag}*{term}")
    }
}

impl fmt::Display for MultilinearPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        fmt_coeff(f, &mut first, self.l0, "")?;
        for (i, &c) in self.l1.iter().enumerate() {
            fmt_coeff(f, &mut first, c, &format!("x{i}"))?;
        }
        for (&(i, j), &c) in &self.l2 {
            fmt_coeff(f, &mut first, c, &format!("x{i}*x{j}"))?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl fmt::Display for Posiform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for i in 0..self.n_vars() {
            fmt_coeff(f, &mut first, self.a_src[i], &format!("x{i}"))?;
            fmt_coeff(f, &mut first, self.a_snk[i], &format!("~x{i}"))?;
        }
        for (&(i, j), &a) in &self.a_pair {
            fmt_coeff(f, &mut first, a, &format!("~x{i}*x{j}"))?;
        }
        fmt_coeff(f, &mut first, self.constant, "")?;
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{g0, random_graph};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(v: i64) -> Capacity {
        Capacity::from_int(v)
    }

    #[test]
    fn g0_posiform_and_polynomial() {
        let p = posiform_of(&g0());
        assert_eq!(p.a_snk, vec![c(6), c(2)]);
        assert_eq!(p.a_src, vec![c(0), c(4)]);
        assert_eq!(p.a_pair.get(&(0, 1)), Some(&c(1)));
        assert_eq!(p.a_pair.get(&(1, 0)), Some(&c(2)));
        let f = polynomial_of(&p);
        assert_eq!((f.l0(), f.l1(0), f.l1(1), f.l2(0, 1)), (c(8), c(-4), c(3), c(-3)));
        assert_eq!(f.to_string(), "8 - 4*x0 + 3*x1 - 3*x0*x1");
        assert_eq!(p.to_string(), "6*~x0 + 4*x1 + 2*~x1 + ~x0*x1 + 2*~x1*x0");
    }

    #[test]
    fn g0_evaluations_and_minimum() {
        let f = graph_polynomial(&g0());
        let vals: Vec<_> = [[0, 0], [1, 0], [0, 1], [1, 1]].iter().map(|x| evaluate(&f, x).unwrap()).collect();
        assert_eq!(vals, vec![c(8), c(4), c(11), c(4)]);
        let (min, arg) = brute_force_min(&f).unwrap();
        assert_eq!(min, c(4));
        assert_eq!(arg, vec![Assignment::new(vec![1, 0]), Assignment::new(vec![1, 1])]);
    }

    #[test]
    fn g2_polynomial_differs_by_four() {
        let mut p = Posiform::zero(2);
        p.a_snk[0] = c(4);
        p.a_pair.insert((0, 1), c(3));
        let f2 = polynomial_of(&p);
        assert_eq!(f2.to_string(), "4 - 4*x0 + 3*x1 - 3*x0*x1");
        let f0 = graph_polynomial(&g0());
        assert_eq!(poly_equal_up_to_constant(&f0, &f2), Some(c(4)));
        assert_eq!(poly_equal_up_to_constant(&f0, &f0), Some(Capacity::ZERO));
        let mut bumped = f0.clone();
        bumped.add_linear(0, c(1));
        assert_eq!(poly_equal_up_to_constant(&f0, &bumped), None);
    }

    #[test]
    fn zero_and_constant_cases() {
        let p = posiform_of(&FlowGraph::new(3));
        assert_eq!(p, Posiform::zero(3));
        assert_eq!(polynomial_of(&p), MultilinearPolynomial::zero(3));
        let f = MultilinearPolynomial::constant(3, c(5));
        assert_eq!(evaluate(&f, &[0, 0, 0]).unwrap(), c(5));
        let (min, arg) = brute_force_min(&f).unwrap();
        assert_eq!((min, arg.len()), (c(5), 8));
    }

    #[test]
    fn errors() {
        let f = MultilinearPolynomial::zero(2);
        assert_eq!(evaluate(&f, &[0]), Err(PbError::LengthMismatch { got: 1, expected: 2 }));
        assert_eq!(brute_force_min(&MultilinearPolynomial::zero(25)).unwrap_err(), PbError::TooLarge(25));
        let mut p = Posiform::zero(2);
        p.a_src[1] = c(-1);
        assert!(matches!(graph_of(&p), Err(PbError::NegativeCoefficient { .. })));
    }

    #[test]
    fn graph_posiform_bijection() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let g = random_graph(&mut rng, 8, 16);
            let p = posiform_of(&g);
            let back = graph_of(&p).unwrap();
            assert_eq!(back, g);
            assert_eq!(posiform_of(&back), p);
        }
    }

    proptest! {
        #[test]
        fn polynomial_matches_posiform_and_cut(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_graph(&mut rng, 8, 16);
            let p = posiform_of(&g);
            let f = polynomial_of(&p);
            for (_, c) in f.quadratic_terms() {
                prop_assert!(c <= Capacity::ZERO);
            }
            for bits in 0..(1u64 << g.n_vertices()) {
                let x = Assignment::from_bits(bits, g.n_vertices());
                let v = evaluate(&f, &x).unwrap();
                prop_assert_eq!(v, p.evaluate(&x).unwrap());
                prop_assert_eq!(v, g.cut_cost(&x));
            }
        }
    }
}
