//! The two foreground/background constructions on a 4-connected pixel grid.
//!
//! Both share the contrast-sensitive n-link weight
//! `w(p, q) = scale * exp(-(I_p - I_q)^2 / (2 sigma^2))`, rounded to the
//! graph's fixed-point grid. They differ in the t-links:
//!
//! * seg1 ties the leftmost column to the source and the rightmost column to
//!   the sink with a capacity larger than any cut through the grid.
//! * seg2 gives every pixel both t-links, proportional to its brightness
//!   (sink) and darkness (source).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::Capacity;
use crate::graph::FlowGraph;
use crate::image::GridImage;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegError {
    #[error("seg1 needs at least two columns (image is {0} wide)")]
    TooNarrow(usize),
    #[error("scale factors must be positive and finite")]
    BadScale,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegParams {
    /// Width of the Gaussian contrast kernel, in intensity units.
    pub sigma: f64,
    /// Multiplier on n-link weights (seg1 `edge_scale`, seg2 `pairwise_scale`).
    pub pairwise_scale: f64,
    /// Multiplier on seg2 t-links.
    pub unary_scale: f64,
    /// Fractional bits of the fixed-point capacities.
    pub frac_bits: u32,
}

impl Default for SegParams {
    fn default() -> Self {
        SegParams { sigma: 10.0, pairwise_scale: 1.0, unary_scale: 1.0, frac_bits: 0 }
    }
}

impl SegParams {
    /// The seg1 worst-case setting used by the benchmarks. With unit scale
    /// every n-link rounds to 1 and the gradient is lost, so the weights are
    /// spread over 0..=100 instead.
    pub fn seg1_worst() -> Self {
        SegParams { pairwise_scale: 100.0, ..SegParams::default() }
    }

    /// The seg2 setting used with `seg2_random` images: unit weights would
    /// round most t-links to 0 or 1, and sigma 10 would erase every n-link
    /// under the generator's noise.
    pub fn seg2_random() -> Self {
        SegParams { sigma: 40.0, pairwise_scale: 50.0, unary_scale: 100.0, frac_bits: 0 }
    }

    fn check(&self) -> Result<(), SegError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.sigma) && ok(self.pairwise_scale) && ok(self.unary_scale) {
            Ok(())
        } else {
            Err(SegError::BadScale)
        }
    }

    fn nlink(&self, a: u8, b: u8) -> Capacity {
        let d = a as f64 - b as f64;
        let w = self.pairwise_scale * (-d * d / (2.0 * self.sigma * self.sigma)).exp();
        Capacity::round_from_f64(w, self.frac_bits)
    }
}

fn grid_nlinks(img: &GridImage, params: &SegParams, g: &mut FlowGraph) -> Capacity {
    let w = img.width();
    let mut total = Capacity::ZERO;
    for r in 0..img.height() {
        for c in 0..w {
            let p = r * w + c;
            if c + 1 < w {
                let cap = params.nlink(img.get(r, c), img.get(r, c + 1));
                g.add_edge(p, p + 1, cap, cap).expect("grid indices are valid");
                total += cap + cap;
            }
            if r + 1 < img.height() {
                let cap = params.nlink(img.get(r, c), img.get(r + 1, c));
                g.add_edge(p, p + w, cap, cap).expect("grid indices are valid");
                total += cap + cap;
            }
        }
    }
    total
}

/// Leftmost column to the source, rightmost to the sink, gradient n-links.
pub fn build_seg1(img: &GridImage, params: &SegParams) -> Result<FlowGraph, SegError> {
    params.check()?;
    if img.width() < 2 {
        return Err(SegError::TooNarrow(img.width()));
    }
    let w = img.width();
    let mut g = FlowGraph::with_scale(w * img.height(), params.frac_bits);
    let large = grid_nlinks(img, params, &mut g) + Capacity::ONE;
    for r in 0..img.height() {
        g.add_tlinks(r * w, large, Capacity::ZERO).expect("valid vertex");
        g.add_tlinks(r * w + w - 1, Capacity::ZERO, large).expect("valid vertex");
    }
    g.normalize();
    Ok(g)
}

/// Every pixel linked to both terminals by its intensity, gradient n-links.
pub fn build_seg2(img: &GridImage, params: &SegParams) -> Result<FlowGraph, SegError> {
    params.check()?;
    let mut g = FlowGraph::with_scale(img.width() * img.height(), params.frac_bits);
    grid_nlinks(img, params, &mut g);
    for (p, &v) in img.pixels().iter().enumerate() {
        let src = Capacity::round_from_f64(params.unary_scale * (255 - v) as f64 / 255.0, params.frac_bits);
        let snk = Capacity::round_from_f64(params.unary_scale * v as f64 / 255.0, params.frac_bits);
        g.add_tlinks(p, src, snk).expect("valid vertex");
    }
    g.normalize();
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(w: usize, h: usize, px: &[u8]) -> GridImage {
        GridImage::new(w, h, px.to_vec()).unwrap()
    }

    #[test]
    fn seg1_two_pixels() {
        let g = build_seg1(&img(2, 1, &[0, 0]), &SegParams::default()).unwrap();
        assert_eq!(g.n_vertices(), 2);
        assert_eq!(g.arc_cap(0, 1), Capacity::ONE);
        let large = Capacity::from_int(3);
        assert_eq!(g.source_cap(0), large);
        assert_eq!(g.sink_cap(1), large);
        assert_eq!(g.sink_cap(0), Capacity::ZERO);
        assert_eq!(g.source_cap(1), Capacity::ZERO);
        // single path s -> 0 -> 1 -> t, bottleneck is the n-link
        let best = (0..4u64).map(|b| g.cut_cost(&[(b & 1) as u8, (b >> 1) as u8])).min().unwrap();
        assert_eq!(best, Capacity::ONE);
    }

    #[test]
    fn seg1_rejects_single_column() {
        assert_eq!(build_seg1(&img(1, 1, &[0]), &SegParams::default()).unwrap_err(), SegError::TooNarrow(1));
        assert_eq!(build_seg1(&img(1, 4, &[0; 4]), &SegParams::default()).unwrap_err(), SegError::TooNarrow(1));
    }

    #[test]
    fn seg2_single_pixel() {
        let p = SegParams::default();
        let g = build_seg2(&img(1, 1, &[255]), &p).unwrap();
        assert_eq!((g.source_cap(0), g.sink_cap(0)), (Capacity::ZERO, Capacity::ONE));
        // x = 1 (sink side) cuts only s->p, which is empty
        assert_eq!(g.cut_cost(&[1]), Capacity::ZERO);
        assert_eq!(g.cut_cost(&[0]), Capacity::ONE);

        let g = build_seg2(&img(1, 1, &[0]), &p).unwrap();
        assert_eq!((g.source_cap(0), g.sink_cap(0)), (Capacity::ONE, Capacity::ZERO));
        assert_eq!(g.cut_cost(&[0]), Capacity::ZERO);
    }

    #[test]
    fn fractional_bits_are_exact() {
        let p = SegParams { frac_bits: 4, pairwise_scale: 3.0, ..SegParams::default() };
        let g = build_seg2(&img(2, 1, &[0, 10]), &p).unwrap();
        // 3 * exp(-0.5) = 1.8196 -> 29/16
        assert_eq!(g.arc_cap(0, 1), Capacity::new(29, 4));
        assert!(!g.has_negative_capacity());
    }

    #[test]
    fn bad_scales_rejected() {
        let p = SegParams { sigma: 0.0, ..SegParams::default() };
        assert_eq!(build_seg2(&img(1, 1, &[0]), &p).unwrap_err(), SegError::BadScale);
    }
}
