//! Quadrature for hyperelliptic integrals.
//!
//! Two kernels cover everything: Gauss–Chebyshev for real integrals between
//! branch points, whose weight absorbs both inverse square-root endpoint
//! singularities, and adaptive Gauss–Kronrod for complex line integrals.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::{c, C64};

const MIN_NODES: usize = 16;
const MAX_NODES: usize = 4096;

/// `∫ₐᵇ f(x)/√((x−a)(b−x)) dx` for a vector of integrands sharing the nodes.
///
/// The node count doubles from 16 until two successive values agree to `tol`
/// (relative to the larger of 1 and the value).
pub fn cheb_singular_vec<const K: usize, F>(f: F, a: f64, b: f64, tol: f64) -> Result<[f64; K]>
where
    F: Fn(f64) -> [f64; K],
{
    if !(a < b) {
        return Err(Error::NoConvergence {
            context: "Gauss-Chebyshev",
            detail: format!("empty interval [{a}, {b}]"),
        });
    }
    let mut prev = cheb_fixed(&f, a, b, MIN_NODES);
    let mut n = 2 * MIN_NODES;
    while n <= MAX_NODES {
        let cur = cheb_fixed(&f, a, b, n);
        let diff = cur.iter().zip(&prev).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let size = cur.iter().map(|x| x.abs()).fold(1.0, f64::max);
        if diff <= tol * size {
            return Ok(cur);
        }
        prev = cur;
        n *= 2;
    }
    Err(Error::NoConvergence {
        context: "Gauss-Chebyshev",
        detail: format!("no agreement to {tol:.1e} with {MAX_NODES} nodes"),
    })
}

/// Scalar form of [`cheb_singular_vec`].
pub fn cheb_singular<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    Ok(cheb_singular_vec(|x| [f(x)], a, b, tol)?[0])
}

fn cheb_fixed<const K: usize, F: Fn(f64) -> [f64; K]>(f: &F, a: f64, b: f64, n: usize) -> [f64; K] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = [0.0; K];
    for k in 0..n {
        let t = ((2 * k + 1) as f64 * PI / (2 * n) as f64).cos();
        let v = f(mid + half * t);
        for (s, x) in acc.iter_mut().zip(v) {
            *s += x;
        }
    }
    acc.map(|s| s * PI / n as f64)
}

/// Integrals `∫ poly_k(x)/y dx` between consecutive branch points.
///
/// `branch` holds six finite, strictly increasing reals. Segment `s ∈ 1..=6`
/// runs from `x_s` to `x_{s+1}` along the upper side of the real axis; segment
/// 6 runs from `x₆` through ∞ to `x₁`. On the upper side, `y` is the product of
/// principal square roots `∏√(x−x_j)`, so `y = i^{6−s}·√|∏(x−x_j)|` on segment
/// `s`. Polynomials are coefficient lists, constant term first; on segment 6
/// their degree must be at most 1.
pub fn segment_integrals<const K: usize>(
    branch: &[f64; 6],
    polys: &[&[f64]; K],
    seg: usize,
    tol: f64,
) -> Result<[C64; K]> {
    check_branch(branch)?;
    match seg {
        1..=5 => {
            let (a, b) = (branch[seg - 1], branch[seg]);
            let others: Vec<f64> = (0..6).filter(|&j| j != seg - 1 && j != seg).map(|j| branch[j]).collect();
            let vals = cheb_singular_vec(
                |x| {
                    let w = 1.0 / others.iter().map(|o| (x - o).abs()).product::<f64>().sqrt();
                    polys.map(|p| horner(p, x) * w)
                },
                a,
                b,
                tol,
            )?;
            let phase = C64::i().powi(6 - seg as i32);
            Ok(vals.map(|v| c(v, 0.0) / phase))
        }
        6 => {
            if polys.iter().any(|p| degree(p) > 1) {
                return Err(Error::BadSegment(6, 1));
            }
            // x = m + 1/t with m inside (x₁, x₆): the arc x₆ → ∞ → x₁ becomes [t₁, t₆]
            let m = widest_gap_midpoint(branch);
            let t: Vec<f64> = branch.iter().map(|x| 1.0 / (x - m)).collect();
            let lead = branch.iter().map(|x| (m - x).abs()).product::<f64>();
            let vals = cheb_singular_vec(
                |tt| {
                    let inner: f64 = t[1..5].iter().map(|ts| (tt - ts).abs()).product();
                    let w = tt / (lead * inner).sqrt();
                    polys.map(|p| {
                        // t·poly(m + 1/t) stays finite at t = 0
                        let a0 = p.first().copied().unwrap_or(0.0);
                        let a1 = p.get(1).copied().unwrap_or(0.0);
                        if tt == 0.0 {
                            a1 / (lead * inner).sqrt()
                        } else {
                            (a0 + a1 * (m + 1.0 / tt)) * w
                        }
                    })
                },
                t[0],
                t[5],
                tol,
            )?;
            Ok(vals.map(|v| c(v, 0.0)))
        }
        _ => Err(Error::BadSegment(seg, seg + 1)),
    }
}

/// Scalar form of [`segment_integrals`].
pub fn segment_integral(branch: &[f64; 6], poly: &[f64], seg: usize, tol: f64) -> Result<C64> {
    Ok(segment_integrals(branch, &[poly], seg, tol)?[0])
}

/// Segment integral between labelled branch points `from` and `to`, which must
/// be cyclically adjacent (labels 1..=6).
pub fn segment_integral_between(branch: &[f64; 6], poly: &[f64], from: usize, to: usize, tol: f64) -> Result<C64> {
    let adjacent = |a: usize, b: usize| b == a % 6 + 1;
    if adjacent(from, to) {
        segment_integral(branch, poly, from, tol)
    } else if adjacent(to, from) {
        Ok(-segment_integral(branch, poly, to, tol)?)
    } else {
        Err(Error::BadSegment(from, to))
    }
}

fn check_branch(branch: &[f64; 6]) -> Result<()> {
    let ok = branch.iter().all(|x| x.is_finite()) && branch.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidCurve(format!("branch points {branch:?} must be finite and increasing")))
    }
}

fn widest_gap_midpoint(branch: &[f64; 6]) -> f64 {
    let s = (0..5)
        .max_by(|&i, &j| (branch[i + 1] - branch[i]).total_cmp(&(branch[j + 1] - branch[j])))
        .unwrap_or(0);
    0.5 * (branch[s] + branch[s + 1])
}

fn degree(p: &[f64]) -> usize {
    p.iter().rposition(|&a| a != 0.0).unwrap_or(0)
}

pub(crate) fn horner(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

// Gauss–Kronrod 7/15 on [-1, 1].
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Options for [`LineIntegral::integrate`].
#[derive(Debug, Clone)]
pub struct LineIntegral<'a> {
    pub tol: f64,
    /// The first vertex of the path is an inverse square-root singularity.
    pub singular_start: bool,
    /// The last vertex of the path is an inverse square-root singularity.
    pub singular_end: bool,
    /// Points the path must keep away from (except at singular endpoints).
    pub avoid: &'a [C64],
    pub min_distance: f64,
    pub max_depth: usize,
}

impl<'a> LineIntegral<'a> {
    pub fn new(tol: f64) -> Self {
        LineIntegral {
            tol,
            singular_start: false,
            singular_end: false,
            avoid: &[],
            min_distance: 0.0,
            max_depth: 40,
        }
    }

    pub fn singular_ends(mut self, start: bool, end: bool) -> Self {
        self.singular_start = start;
        self.singular_end = end;
        self
    }

    pub fn avoiding(mut self, points: &'a [C64], min_distance: f64) -> Self {
        self.avoid = points;
        self.min_distance = min_distance;
        self
    }

    /// Integrates `f` along the polyline `path`.
    pub fn integrate<const K: usize, F>(&self, f: F, path: &[C64]) -> Result<[C64; K]>
    where
        F: Fn(C64) -> [C64; K],
    {
        let n = path.len();
        let mut total = [C64::new(0.0, 0.0); K];
        if n < 2 {
            return Ok(total);
        }
        self.check_path(path)?;
        let length: f64 = path.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        for i in 0..n - 1 {
            let (p, q) = (path[i], path[i + 1]);
            let s0 = self.singular_start && i == 0;
            let s1 = self.singular_end && i == n - 2;
            let share = self.tol * ((q - p).norm() / length).max(1e-3);
            let mut pieces: Vec<(C64, C64, bool)> = Vec::new();
            match (s0, s1) {
                (false, false) => pieces.push((p, q, false)),
                (true, false) => pieces.push((p, q, true)),
                (false, true) => pieces.push((q, p, true)),
                (true, true) => {
                    let m = 0.5 * (p + q);
                    pieces.push((p, m, true));
                    pieces.push((q, m, true));
                }
            }
            for (a, b, sing) in pieces {
                // a singular piece is integrated from its singular end `a`
                let reversed = s1 && a == q;
                let g = |t: f64| -> [C64; K] {
                    if sing {
                        let x = a + (b - a) * (t * t);
                        let jac = (b - a) * (2.0 * t);
                        f(x).map(|v| v * jac)
                    } else {
                        f(a + (b - a) * t).map(|v| v * (b - a))
                    }
                };
                let v = adaptive(&g, 0.0, 1.0, share, self.max_depth)?;
                for (acc, x) in total.iter_mut().zip(v) {
                    if reversed {
                        *acc -= x;
                    } else {
                        *acc += x;
                    }
                }
            }
        }
        Ok(total)
    }

    fn check_path(&self, path: &[C64]) -> Result<()> {
        if self.avoid.is_empty() {
            return Ok(());
        }
        let n = path.len();
        for i in 0..n - 1 {
            let (p, q) = (path[i], path[i + 1]);
            for &z in self.avoid {
                let at_start = self.singular_start && i == 0 && z == p;
                let at_end = self.singular_end && i == n - 2 && z == q;
                if at_start || at_end {
                    continue;
                }
                let d = point_segment_distance(z, p, q);
                if d < self.min_distance {
                    return Err(Error::PathThroughSingularity { distance: d });
                }
            }
        }
        Ok(())
    }
}

/// `∫ f` along a polyline with default options.
pub fn line_integral<F: Fn(C64) -> C64>(f: F, path: &[C64], tol: f64) -> Result<C64> {
    Ok(LineIntegral::new(tol).integrate(|x| [f(x)], path)?[0])
}

fn point_segment_distance(z: C64, p: C64, q: C64) -> f64 {
    let d = q - p;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - p).norm();
    }
    let t = (((z - p) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (p + d * t)).norm()
}

fn gk15<const K: usize, G: Fn(f64) -> [C64; K]>(g: &G, a: f64, b: f64) -> ([C64; K], f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let zero = [C64::new(0.0, 0.0); K];
    let fc = g(mid);
    let mut kr = fc.map(|v| v * WGK[7]);
    let mut ga = fc.map(|v| v * WG[3]);
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = g(mid - dx);
        let f2 = g(mid + dx);
        for k in 0..K {
            let s = f1[k] + f2[k];
            kr[k] += s * WGK[j];
            if j % 2 == 1 {
                ga[k] += s * WG[j / 2];
            }
        }
    }
    let mut err = 0.0f64;
    let mut out = zero;
    for k in 0..K {
        out[k] = kr[k] * half;
        err = err.max(((kr[k] - ga[k]) * half).norm());
    }
    (out, err)
}

fn adaptive<const K: usize, G: Fn(f64) -> [C64; K]>(g: &G, a: f64, b: f64, tol: f64, depth: usize) -> Result<[C64; K]> {
    let (v, err) = gk15(g, a, b);
    // rounding floor relative to the whole integral, kept fixed while recursing
    let floor = 50.0 * f64::EPSILON * v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    refine(g, a, b, (v, err), tol, floor, depth)
}

fn refine<const K: usize, G: Fn(f64) -> [C64; K]>(
    g: &G,
    a: f64,
    b: f64,
    (v, err): ([C64; K], f64),
    tol: f64,
    floor: f64,
    depth: usize,
) -> Result<[C64; K]> {
    if v.iter().any(|z| !z.is_finite()) {
        return Err(Error::NoConvergence {
            context: "adaptive Gauss-Kronrod",
            detail: "non-finite integrand".into(),
        });
    }
    if err <= tol.max(floor) {
        return Ok(v);
    }
    if depth == 0 {
        return Err(Error::NoConvergence {
            context: "adaptive Gauss-Kronrod",
            detail: format!("error estimate {err:.3e} above {tol:.3e} at maximum depth"),
        });
    }
    let m = 0.5 * (a + b);
    let left = gk15(g, a, m);
    let right = gk15(g, m, b);
    let l = refine(g, a, m, left, 0.5 * tol, floor, depth - 1)?;
    let r = refine(g, m, b, right, 0.5 * tol, floor, depth - 1)?;
    let mut out = l;
    for k in 0..K {
        out[k] += r[k];
    }
    Ok(out)
}

/// Adaptive Gauss–Kronrod for a vector of complex integrands of a real parameter.
pub fn integrate_param<const K: usize, G: Fn(f64) -> [C64; K]>(g: G, a: f64, b: f64, tol: f64) -> Result<[C64; K]> {
    adaptive(&g, a, b, tol, 40)
}

/// `∫ f dx` along the segment from the branch point `start` to `end`.
///
/// `f(x, r)` receives `r = √(x − start)` computed exactly from the
/// parametrization `x = start + (end − start)t²`, so an integrand of the form
/// `g(x)/r` is evaluated without cancellation near the endpoint.
pub fn from_branch_point<const K: usize, F>(start: C64, end: C64, f: F, tol: f64) -> Result<[C64; K]>
where
    F: Fn(C64, C64) -> [C64; K],
{
    let d = end - start;
    let sd = d.sqrt();
    integrate_param(
        |t| {
            let x = start + d * (t * t);
            let jac = d * (2.0 * t);
            f(x, sd * t).map(|v| v * jac)
        },
        0.0,
        1.0,
        tol,
    )
}

/// Adaptive Gauss–Kronrod for a real integrand on `[a, b]`.
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    Ok(adaptive(&|t| [c(f(t), 0.0)], a, b, tol, 40)?[0].re)
}
