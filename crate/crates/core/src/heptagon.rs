//! Rectangular heptagons with one vertex at infinity.
//!
//! A heptagon in the space `P_{αβ}` is described by signed side lengths
//! `H₁..H₅` with `i^s·H_s = w_s − w_{s+1}`. The two remaining sides are
//! horizontal rays bounding a channel of width π going east.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{c, C64};

/// Index pair `(α, β)` and signed side lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Heptagon {
    pub alpha: u8,
    pub beta: u8,
    #[serde(rename = "H")]
    pub h: [f64; 5],
}

/// One failed constraint of [`Heptagon::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Indices { alpha: u8, beta: u8 },
    NotFinite,
    SumRule { residual: f64 },
    SignRule { side: usize, value: f64 },
    NoIntersection { alpha: u8, beta: u8, rule: &'static str, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Indices { alpha, beta } => {
                write!(f, "indices ({alpha},{beta}) must satisfy 1 <= alpha < beta <= 6")
            }
            Violation::NotFinite => write!(f, "side lengths must be finite"),
            Violation::SumRule { residual } => {
                write!(f, "H1-H3+H5=pi violated (residual {residual:.3e})")
            }
            Violation::SignRule { side, value } => {
                write!(f, "sign rule violated for H{side} = {value}")
            }
            Violation::NoIntersection { alpha, beta, rule, value } => {
                write!(f, "({alpha},{beta}): {rule} violated (value {value})")
            }
        }
    }
}

/// Non-intersection rows: `(α, β, rule, lhs, condition)`. The rule is
/// `lhs > 0` or `lhs < 0`; it only applies when `condition` holds.
type Row = (u8, u8, &'static str, fn(&[f64; 5]) -> f64, bool, fn(&[f64; 5]) -> bool);

const ROWS: [Row; 6] = [
    (1, 2, "-H2+H4>0", |h| -h[1] + h[3], true, |_| true),
    (1, 5, "-H2+H4>0 when H1-H3<=0", |h| -h[1] + h[3], true, |h| h[0] - h[2] <= 0.0),
    (2, 3, "-H3+H5>0", |h| -h[2] + h[4], true, |_| true),
    (2, 6, "-H2+H4<0 when -H3+H5<=0", |h| -h[1] + h[3], false, |h| -h[2] + h[4] <= 0.0),
    (4, 5, "H1-H3>0", |h| h[0] - h[2], true, |_| true),
    (5, 6, "-H2+H4<0", |h| -h[1] + h[3], false, |_| true),
];

impl Heptagon {
    pub fn new(alpha: u8, beta: u8, h: [f64; 5]) -> Self {
        Heptagon { alpha, beta, h }
    }

    /// Builds a heptagon from `H₁, H₂, H₄, H₅`, with `H₃ = H₁ + H₅ − π`.
    pub fn from_free_sides(alpha: u8, beta: u8, h1: f64, h2: f64, h4: f64, h5: f64) -> Self {
        Heptagon { alpha, beta, h: [h1, h2, h1 + h5 - PI, h4, h5] }
    }

    /// Every violated constraint; empty when the heptagon lies in `P_{αβ}`.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let (a, b) = (self.alpha, self.beta);
        if !(1 <= a && a < b && b <= 6) {
            out.push(Violation::Indices { alpha: a, beta: b });
            return out;
        }
        if self.h.iter().any(|v| !v.is_finite()) {
            out.push(Violation::NotFinite);
            return out;
        }
        let h = &self.h;
        let residual = h[0] - h[2] + h[4] - PI;
        let scale = PI + h.iter().map(|v| v.abs()).sum::<f64>();
        if residual.abs() > 1e-12 * scale {
            out.push(Violation::SumRule { residual });
        }
        for s in 1..=5usize {
            let sign = (s as f64 + 0.5 - a as f64) * (s as f64 + 0.5 - b as f64);
            if !(sign * h[s - 1] > 0.0) {
                out.push(Violation::SignRule { side: s, value: h[s - 1] });
            }
        }
        for (ra, rb, rule, lhs, positive, applies) in ROWS {
            if (ra, rb) != (a, b) || !applies(h) {
                continue;
            }
            let v = lhs(h);
            let ok = if positive { v > 0.0 } else { v < 0.0 };
            if !ok {
                out.push(Violation::NoIntersection { alpha: a, beta: b, rule, value: v });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidHeptagon(v))
        }
    }

    /// Vertices with the normalization `w₁ = iπ`.
    pub fn vertices(&self) -> Result<VertexSet> {
        self.ensure_valid()?;
        Ok(self.vertices_unchecked())
    }

    pub(crate) fn vertices_unchecked(&self) -> VertexSet {
        let mut w = [c(0.0, PI); 6];
        let mut is = C64::new(1.0, 0.0);
        for s in 0..5 {
            is *= C64::i();
            w[s + 1] = w[s] - is * self.h[s];
        }
        VertexSet { w }
    }

    /// The mirror image in `P_{7−β,7−α}`.
    pub fn reflect(&self) -> Heptagon {
        let mut h = self.h;
        h.reverse();
        Heptagon { alpha: 7 - self.beta, beta: 7 - self.alpha, h }
    }

    /// The `(α, β)` pairs for which the space `P_{αβ}` is defined.
    pub fn index_pairs() -> impl Iterator<Item = (u8, u8)> {
        (1..=6u8).flat_map(|a| (a + 1..=6).map(move |b| (a, b)))
    }
}

/// The six finite vertices `w₁..w₆`; the channel lies east of `w₁` and `w₆`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexSet {
    pub w: [C64; 6],
}

impl VertexSet {
    /// East end used to close the channel for polygon tests.
    fn far_east(&self, extra: f64) -> f64 {
        self.w.iter().map(|z| z.re).fold(extra, f64::max) + 1.0
    }

    /// Boundary segments, with the two channel rays cut at `x_east`.
    pub fn boundary(&self, x_east: f64) -> Vec<(C64, C64)> {
        let w = &self.w;
        let mut segs = vec![(c(x_east, w[0].im), w[0])];
        for s in 0..5 {
            segs.push((w[s], w[s + 1]));
        }
        segs.push((w[5], c(x_east, w[5].im)));
        segs
    }

    /// Checks that the boundary polyline, including both rays, has no self-intersections.
    pub fn is_simple(&self) -> bool {
        let x_east = self.far_east(0.0) + 10.0;
        let segs = self.boundary(x_east);
        let n = segs.len();
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 {
                    // neighbours share one endpoint; they must not fold back
                    if overlapping_collinear(segs[i], segs[j]) {
                        return false;
                    }
                    continue;
                }
                if segments_intersect(segs[i], segs[j]) {
                    return false;
                }
            }
        }
        true
    }

    /// Whether `w` lies in the open heptagon.
    pub fn contains(&self, w: C64) -> bool {
        if !w.is_finite() {
            return false;
        }
        if self.distance_to_boundary(w) == 0.0 {
            return false;
        }
        let x_east = self.far_east(w.re);
        let mut poly: Vec<C64> = self.w.to_vec();
        poly.push(c(x_east, self.w[5].im));
        poly.push(c(x_east, self.w[0].im));
        let mut inside = false;
        let n = poly.len();
        for i in 0..n {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            if (p.im > w.im) != (q.im > w.im) {
                let x = p.re + (w.im - p.im) * (q.re - p.re) / (q.im - p.im);
                if w.re < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Whether the closed segment `[a, b]` stays in the open heptagon.
    pub fn segment_inside(&self, a: C64, b: C64) -> bool {
        if !self.contains(a) || !self.contains(b) {
            return false;
        }
        let x_east = self.far_east(a.re.max(b.re)) + 1.0;
        !self.boundary(x_east).into_iter().any(|s| segments_intersect(s, (a, b)))
    }

    /// Box `(re_min, re_max, im_min, im_max)` around the vertices, extended
    /// `channel` units into the channel.
    pub fn bounding_box(&self, channel: f64) -> (f64, f64, f64, f64) {
        let re = self.w.iter().map(|z| z.re);
        let im = self.w.iter().map(|z| z.im);
        let re_min = re.clone().fold(f64::INFINITY, f64::min);
        let re_max = re.fold(f64::NEG_INFINITY, f64::max) + channel;
        let im_min = im.clone().fold(f64::INFINITY, f64::min);
        let im_max = im.fold(f64::NEG_INFINITY, f64::max);
        (re_min, re_max, im_min, im_max)
    }

    /// Cell centres of an `nx × ny` mesh over [`Self::bounding_box`] that lie
    /// inside the heptagon, row by row from the bottom.
    pub fn interior_mesh(&self, nx: usize, ny: usize, channel: f64) -> Vec<C64> {
        let (x0, x1, y0, y1) = self.bounding_box(channel);
        let mut out = Vec::new();
        for j in 0..ny {
            let y = y0 + (y1 - y0) * (j as f64 + 0.5) / ny as f64;
            for i in 0..nx {
                let x = x0 + (x1 - x0) * (i as f64 + 0.5) / nx as f64;
                let w = c(x, y);
                if self.contains(w) {
                    out.push(w);
                }
            }
        }
        out
    }

    /// The mesh lines through the cell centres of [`Self::interior_mesh`],
    /// sampled at `samples` points each and cut into runs inside the heptagon.
    pub fn mesh_lines(&self, nx: usize, ny: usize, channel: f64, samples: usize) -> Vec<Vec<C64>> {
        let (x0, x1, y0, y1) = self.bounding_box(channel);
        let mut lines = Vec::new();
        let mut push_runs = |pts: Vec<C64>| {
            let mut run = Vec::new();
            for p in pts {
                if self.contains(p) {
                    run.push(p);
                } else if run.len() > 1 {
                    lines.push(std::mem::take(&mut run));
                } else {
                    run.clear();
                }
            }
            if run.len() > 1 {
                lines.push(run);
            }
        };
        let frac = |k: usize| (k as f64 + 0.5) / samples as f64;
        for i in 0..nx {
            let x = x0 + (x1 - x0) * (i as f64 + 0.5) / nx as f64;
            push_runs((0..samples).map(|k| c(x, y0 + (y1 - y0) * frac(k))).collect());
        }
        for j in 0..ny {
            let y = y0 + (y1 - y0) * (j as f64 + 0.5) / ny as f64;
            push_runs((0..samples).map(|k| c(x0 + (x1 - x0) * frac(k), y)).collect());
        }
        lines
    }

    /// Euclidean distance from `w` to the boundary (rays included).
    pub fn distance_to_boundary(&self, w: C64) -> f64 {
        let x_east = self.far_east(w.re) + 1.0;
        self.boundary(x_east)
            .into_iter()
            .map(|(p, q)| point_segment_distance(w, p, q))
            .fold(f64::INFINITY, f64::min)
    }
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn on_segment(p: C64, (a, b): (C64, C64)) -> bool {
    p.re >= a.re.min(b.re) && p.re <= a.re.max(b.re) && p.im >= a.im.min(b.im) && p.im <= a.im.max(b.im)
}

fn segments_intersect(s: (C64, C64), t: (C64, C64)) -> bool {
    let d1 = cross(t.1 - t.0, s.0 - t.0);
    let d2 = cross(t.1 - t.0, s.1 - t.0);
    let d3 = cross(s.1 - s.0, t.0 - s.0);
    let d4 = cross(s.1 - s.0, t.1 - s.0);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(s.0, t))
        || (d2 == 0.0 && on_segment(s.1, t))
        || (d3 == 0.0 && on_segment(t.0, s))
        || (d4 == 0.0 && on_segment(t.1, s))
}

fn overlapping_collinear(s: (C64, C64), t: (C64, C64)) -> bool {
    let (u, v) = (s.1 - s.0, t.1 - t.0);
    cross(u, v) == 0.0 && (u.re * v.re + u.im * v.im) < 0.0
}

fn point_segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> Heptagon {
        Heptagon::new(5, 6, [5.0, 2.0, 1.0, 1.0, PI - 4.0])
    }

    #[test]
    fn example_is_valid() {
        assert!(example().validate().is_empty());
    }

    #[test]
    fn no_intersection_row_is_reported() {
        let mut h = example();
        h.h[3] = 3.0;
        let v = h.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("(5,6): -H2+H4<0"));
    }

    #[test]
    fn sign_rule_for_one_five() {
        let ok = Heptagon::from_free_sides(1, 5, -1.0, -1.0, -0.5, 2.0);
        assert!(ok.validate().is_empty(), "{:?}", ok.validate());
        let bad = Heptagon::from_free_sides(1, 5, 1.0, -1.0, -0.5, 2.0);
        assert!(bad
            .validate()
            .iter()
            .any(|v| matches!(v, Violation::SignRule { side: 1, .. })));
    }

    #[test]
    fn sum_rule_and_indices() {
        let mut h = example();
        h.h[0] += 1e-6;
        assert!(matches!(h.validate()[0], Violation::SumRule { .. }));
        let bad = Heptagon::new(4, 2, example().h);
        assert!(matches!(bad.validate()[0], Violation::Indices { .. }));
    }

    #[test]
    fn vertices_of_example() {
        let v = example().vertices().unwrap().w;
        let want = [c(0.0, PI), c(0.0, PI - 5.0), c(2.0, PI - 5.0), c(2.0, PI - 4.0), c(1.0, PI - 4.0), c(1.0, 0.0)];
        for (a, b) in v.iter().zip(want) {
            assert!((a - b).norm() < 1e-14);
        }
        assert!(((v[0] - v[5]).im - PI).abs() < 1e-14);
    }

    #[test]
    fn reflection() {
        let h = example();
        let r = h.reflect();
        assert_eq!((r.alpha, r.beta), (1, 2));
        assert!(r.validate().is_empty());
        assert_eq!(r.reflect(), h);
        // the mirror image is the conjugate polygon up to translation
        let a = h.vertices().unwrap().w;
        let b = r.vertices().unwrap().w;
        let shift = b[5] - a[0].conj();
        for s in 0..6 {
            assert!((b[5 - s] - a[s].conj() - shift).norm() < 1e-13);
        }
    }

    #[test]
    fn containment() {
        let v = example().vertices().unwrap();
        assert!(v.is_simple());
        assert!(v.contains(c(1.5, 0.5)));
        assert!(v.contains(c(50.0, 1.0)));
        assert!(v.contains(c(1.5, -1.0)));
        assert!(v.contains(c(0.5, -0.5)));
        assert!(!v.contains(c(-1.0, 1.0)));
        assert!(!v.contains(c(3.0, -1.0)));
        assert!(!v.contains(c(5.0, 4.0)));
    }

    #[test]
    fn folded_polyline_is_not_simple() {
        // violates the (5,6) row: the pocket crosses the lower ray
        let h = Heptagon::new(5, 6, [5.0, 2.0, 1.0, 3.0, PI - 4.0]);
        assert!(!h.vertices_unchecked().is_simple());
    }
}
