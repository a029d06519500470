//! Disagreement counting and the dual (Lagrange multiplier) update.
//!
//! For a vertex shared by subgraphs `a < b` with labels `x_a`, `x_b`, the
//! supergradient of the dual function is `x_a - x_b`. We step along it:
//! `dl = step * (x_a - x_b)` is added to the linear coefficient of the
//! vertex in `a` and subtracted in `b`, so a side that says 1 while the
//! other says 0 gets pushed towards 0 and vice versa. Both changes go on
//! the source t-link; the sum of the two subgraph polynomials, constant
//! included, is untouched.

use crate::capacity::Capacity;
use crate::graph::Assignment;
use crate::split_merge::Overlap;

/// Bounds of the sign-adaptive step rule: the step doubles while a vertex
/// keeps disagreeing the same way and halves when the direction flips.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepRule {
    pub min_step: Capacity,
    pub max_step: Capacity,
}

impl StepRule {
    fn adapt(&self, step: Capacity, last_sign: i8, sign: i8) -> Capacity {
        if last_sign == sign {
            step.double().min(self.max_step).max(step)
        } else if last_sign == -sign {
            step.halve().max(self.min_step).min(step)
        } else {
            step
        }
    }
}

/// Number of shared vertices whose two labels differ, and where they are as
/// `(overlap index, position in the overlap)`.
pub fn disagreement(overlaps: &[Overlap], labels: &[Assignment]) -> (usize, Vec<(usize, usize)>) {
    let mut diff = Vec::new();
    for (o_idx, o) in overlaps.iter().enumerate() {
        for k in 0..o.vertices.len() {
            if labels[o.a][o.local_a[k]] != labels[o.b][o.local_b[k]] {
                diff.push((o_idx, k));
            }
        }
    }
    (diff.len(), diff)
}

/// Updates the dual variables of the disagreeing vertices and returns the
/// t-link changes `(local vertex, d_source, d_sink)` for each subgraph.
pub fn dual_update(
    overlaps: &mut [Overlap],
    labels: &[Assignment],
    diff: &[(usize, usize)],
    rule: &StepRule,
    n_subgraphs: usize,
) -> Vec<Vec<(usize, Capacity, Capacity)>> {
    let mut deltas = vec![Vec::new(); n_subgraphs];
    for &(o_idx, k) in diff {
        let o = &mut overlaps[o_idx];
        let (la, lb) = (o.local_a[k], o.local_b[k]);
        let sign = labels[o.a][la] as i8 - labels[o.b][lb] as i8;
        if sign == 0 {
            continue;
        }
        let d = &mut o.dual[k];
        d.step = rule.adapt(d.step, d.last_sign, sign);
        d.last_sign = sign;
        let dl = if sign > 0 { d.step } else { -d.step };
        d.lambda += dl;
        deltas[o.a].push((la, dl, Capacity::ZERO));
        deltas[o.b].push((lb, -dl, Capacity::ZERO));
    }
    deltas
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::g0;
    use crate::split_merge::{Partition, RegionSpec};

    fn rule() -> StepRule {
        StepRule { min_step: Capacity::new(1, 1), max_step: Capacity::from_int(64) }
    }

    fn overlap(n: usize) -> Overlap {
        let v: Vec<usize> = (0..n).collect();
        Overlap {
            a: 0,
            b: 1,
            vertices: v.clone(),
            local_a: v.clone(),
            local_b: v,
            dual: vec![crate::split_merge::DualVar::fresh(Capacity::ONE); n],
        }
    }

    #[test]
    fn counts() {
        let o = [overlap(5)];
        let same = [Assignment::new(vec![0, 1, 0, 1, 1]), Assignment::new(vec![0, 1, 0, 1, 1])];
        assert_eq!(disagreement(&o, &same).0, 0);
        let all = [Assignment::new(vec![0; 5]), Assignment::new(vec![1; 5])];
        assert_eq!(disagreement(&o, &all).0, 5);
        let one = [overlap(1)];
        let (n, set) = disagreement(&one, &[Assignment::new(vec![0]), Assignment::new(vec![1])]);
        assert_eq!((n, set), (1, vec![(0, 0)]));
    }

    #[test]
    fn empty_diff_changes_nothing() {
        let mut o = [overlap(3)];
        let before = o.clone();
        let labels = [Assignment::zeros(3), Assignment::zeros(3)];
        let d = dual_update(&mut o, &labels, &[], &rule(), 2);
        assert!(d.iter().all(Vec::is_empty));
        assert_eq!(o, before);
    }

    #[test]
    fn single_vertex_step_and_conservation() {
        let mut p = Partition::split(&g0(), &RegionSpec::new(vec![vec![0, 1], vec![1]])).unwrap();
        let total = p.polynomial_sum();
        let labels = [Assignment::new(vec![0, 0]), Assignment::new(vec![1])];
        let coef =
            |p: &Partition, s: usize, v: usize| crate::pseudo_boolean::graph_polynomial(p.subgraph(s).graph()).l1(v);
        let (c0, c1) = (coef(&p, 0, 1), coef(&p, 1, 0));

        let (_, diff) = disagreement(p.overlaps(), &labels);
        let n = p.n_subgraphs();
        let d = dual_update(p.overlaps_mut(), &labels, &diff, &rule(), n);
        assert_eq!(p.overlaps()[0].dual[0].lambda, Capacity::from_int(-1));
        for (s, batch) in d.iter().enumerate() {
            p.subgraphs_mut()[s].state_mut().apply_tlink_deltas(batch).unwrap();
        }
        // x_a = 0, x_b = 1: side a is pushed towards 1, side b towards 0
        assert_eq!(coef(&p, 0, 1), c0 - Capacity::ONE);
        assert_eq!(coef(&p, 1, 0), c1 + Capacity::ONE);
        assert_eq!(p.polynomial_sum(), total);

        let d = dual_update(p.overlaps_mut(), &labels, &diff, &rule(), n);
        assert_eq!(p.overlaps()[0].dual[0].step, Capacity::from_int(2));
        assert_eq!(d[0][0].1, Capacity::from_int(-2));
        // direction flips: halve
        let flipped = [Assignment::new(vec![0, 1]), Assignment::new(vec![0])];
        dual_update(p.overlaps_mut(), &flipped, &diff, &rule(), n);
        assert_eq!(p.overlaps()[0].dual[0].step, Capacity::ONE);
        assert_eq!(p.overlaps()[0].dual[0].lambda, Capacity::from_int(-2));
    }

    #[test]
    fn step_stays_within_bounds() {
        let r = StepRule { min_step: Capacity::new(1, 2), max_step: Capacity::from_int(4) };
        assert_eq!(r.adapt(Capacity::from_int(4), 1, 1), Capacity::from_int(4));
        assert_eq!(r.adapt(Capacity::new(1, 2), -1, 1), Capacity::new(1, 2));
        assert_eq!(r.adapt(Capacity::from_int(3), 0, 1), Capacity::from_int(3));
    }
}
