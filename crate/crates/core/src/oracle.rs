//! Quadrature reference implementations.
//!
//! Everything here integrates differentials directly on the curve
//! `y² = ∏(x − x_s)`. Theta values only appear as comparison targets, so a
//! match between this module and [`crate::mapper`] is a genuine cross-check.
//! Each integral is computed twice, at `tol` and `tol/10`, and the two must
//! agree within `10·tol`.

use std::f64::consts::PI;

use crate::curve::{aj_real, period_matrix, y_plus, Curve, Mobius, Norm, PeriodData, Sheet, SurfacePoint};
use crate::mapper::MapParams;
use crate::quad::{self, LineIntegral};
use crate::theta::{char_from_indices, ThetaConfig};
use crate::{c, CVec2, Error, Result, C64};

/// The curve of a parameter set, in two charts.
#[derive(Debug, Clone)]
pub struct MarkedCurve {
    /// Chart `x₁ = 0, x₂ = 1, x₆ = ∞`, with the marked point `x₀`.
    pub standard: Curve,
    /// Chart `t = 1/(x₀ − x)`: `p₀` at infinity, all branch points finite.
    pub marked: Curve,
    /// The map from the standard chart to the marked chart.
    pub to_marked: Mobius,
    pub x0: f64,
}

/// Rebuilds the curve from `Ω` (Rosenhain) and `u⁰` (theta projection).
pub fn curve_from_params(params: &MapParams, cfg: ThetaConfig) -> Result<MarkedCurve> {
    let jac = crate::curve::Jacobian::new(params.omega, cfg)?;
    let r = jac.rosenhain()?;
    let proj = jac.projection(Norm::STANDARD)?;
    let x0 = proj.eval(&crate::rvec(params.u0[0], params.u0[1]))?.re;
    let standard = Curve::new([0.0, 1.0, r[0], r[1], r[2], f64::INFINITY], Some(x0))?;
    let to_marked = Mobius::marked(x0);
    let mut tb = [0.0; 6];
    for (i, x) in standard.branch().iter().enumerate() {
        tb[i] = if x.is_infinite() { 0.0 } else { 1.0 / (x0 - x) };
    }
    let marked = Curve::new(tb, None)?;
    Ok(MarkedCurve { standard, marked, to_marked, x0 })
}

fn twice<T, F>(tol: f64, f: F, diff: impl Fn(&T, &T) -> f64, context: &'static str) -> Result<T>
where
    F: Fn(f64) -> Result<T>,
{
    let a = f(tol)?;
    let b = f(0.1 * tol)?;
    let d = diff(&a, &b);
    if d > 10.0 * tol {
        return Err(Error::NoConvergence { context, detail: format!("refinement changed the value by {d:.3e}") });
    }
    Ok(b)
}

fn cs_poly(branch: &[f64; 6], alpha: u8, beta: u8) -> Result<[f64; 3]> {
    if !(1 <= alpha && alpha < beta && beta <= 6) {
        return Err(Error::InvalidHeptagon(vec![crate::heptagon::Violation::Indices { alpha, beta }]));
    }
    let (a, b) = (branch[alpha as usize - 1], branch[beta as usize - 1]);
    Ok([a * b, -(a + b), 1.0])
}

/// Side lengths `H₁..H₅` by integrating `dw = (t − t_α)(t − t_β) dt/y` between
/// consecutive branch points of the marked chart.
pub fn sides_by_quadrature(marked: &Curve, alpha: u8, beta: u8, tol: f64) -> Result<[f64; 5]> {
    let branch = marked.finite_branch()?;
    let poly = cs_poly(&branch, alpha, beta)?;
    let run = |tol: f64| -> Result<[f64; 5]> {
        let mut h = [0.0; 5];
        let mut is = c(0.0, 1.0);
        for s in 1..=5 {
            // i^s H_s = w_s − w_{s+1} = −∫_{t_s}^{t_{s+1}} dw
            let inc = quad::segment_integral(&branch, &poly, s, tol)?;
            let hs = -inc / is;
            if hs.im.abs() > 1e-6 * (1.0 + hs.norm()) {
                return Err(Error::NoConvergence {
                    context: "side quadrature",
                    detail: format!("H{s} = {hs} is not real"),
                });
            }
            h[s - 1] = hs.re;
            is *= c(0.0, 1.0);
        }
        Ok(h)
    };
    twice(tol, run, |a, b| (0..5).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max), "side quadrature")
}

/// A path from `t₁` to `target` through the upper half plane.
pub fn default_path(marked: &Curve, target: C64) -> Result<Vec<C64>> {
    let b = marked.finite_branch()?;
    let height = target.im.max(0.5 * (b[5] - b[0]));
    Ok(vec![c(b[0], 0.0), c(b[0], height), c(target.re, height), target])
}

/// `w(t)` by integrating `dw` along `path`, which must start at `t₁`; anchored at `w(t₁) = iπ`.
pub fn cs_by_quadrature(marked: &Curve, alpha: u8, beta: u8, path: &[C64], tol: f64) -> Result<C64> {
    let branch = marked.finite_branch()?;
    let poly = cs_poly(&branch, alpha, beta)?;
    if path.len() < 2 || (path[0] - branch[0]).norm() > 1e-14 * (1.0 + branch[0].abs()) {
        return Err(Error::InvalidCurve("path must start at the first branch point".into()));
    }
    if path[1..].iter().any(|z| z.im < 0.0) {
        return Err(Error::InvalidCurve("path must stay in the closed upper half plane".into()));
    }
    let dw = |t: C64| (t * t * poly[2] + t * poly[1] + poly[0]) / y_plus(&branch, t);
    let pts: Vec<C64> = branch.iter().map(|&x| c(x, 0.0)).collect();
    let run = |tol: f64| -> Result<C64> {
        let first = quad::from_branch_point(
            path[0],
            path[1],
            |t, r| {
                let rest: C64 = branch[1..].iter().map(|b| (t - b).sqrt()).product();
                [(t * t * poly[2] + t * poly[1] + poly[0]) / (r * rest)]
            },
            tol,
        )?[0];
        let rest = if path.len() > 2 {
            let ends_at_branch = pts.iter().any(|p| (p - path[path.len() - 1]).norm() == 0.0);
            LineIntegral::new(tol)
                .singular_ends(false, ends_at_branch)
                .avoiding(&pts, 0.0)
                .integrate::<1, _>(|t| [dw(t)], &path[1..])?[0]
        } else {
            c(0.0, 0.0)
        };
        Ok(c(0.0, PI) + first + rest)
    };
    twice(tol, run, |a, b| (a - b).norm(), "Christoffel-Schwarz quadrature")
}

/// Outcome of [`third_kind_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThirdKindReport {
    /// `∫_{p_ref}^{p} dv_{rq}` by quadrature.
    pub quadrature: C64,
    /// The theta quotient for the same increment.
    pub theta: C64,
    /// Distance of the two modulo `2πi`.
    pub residual: f64,
    /// Residuals of `∫_{b_j} dv_{rq} = 2πi ∫_q^r du_j` modulo `2πi`.
    pub bilinear: [f64; 2],
    /// The reference point used, in the curve's chart.
    pub p_ref: f64,
}

fn mod_2pi_i(z: C64) -> f64 {
    let im = (z.im + PI).rem_euclid(2.0 * PI) - PI;
    c(z.re, im).norm()
}

/// `∫_{x_s}^{x_{s+1}} g(x)/y dx` with the upper-side branch of `y`.
fn segment_general<F: Fn(f64) -> f64>(branch: &[f64; 6], s: usize, g: F, tol: f64) -> Result<C64> {
    let others: Vec<f64> = (0..6).filter(|&j| j != s - 1 && j != s).map(|j| branch[j]).collect();
    let v = quad::cheb_singular(
        |x| g(x) / others.iter().map(|o| (x - o).abs()).product::<f64>().sqrt(),
        branch[s - 1],
        branch[s],
        tol,
    )?;
    Ok(c(v, 0.0) / C64::i().powi(6 - s as i32))
}

/// Third-kind differential with simple poles at `r` (+1) and `q` (−1),
/// normalized to vanishing `a`-periods, for points on the third oval.
struct ThirdKind<'a> {
    pd: &'a PeriodData,
    xr: f64,
    xq: f64,
    yr: f64,
    yq: f64,
    /// Holomorphic correction `c·du` removing the `a`-periods.
    corr: [f64; 2],
}

impl<'a> ThirdKind<'a> {
    fn new(pd: &'a PeriodData, xr: f64, xq: f64, tol: f64) -> Result<Self> {
        let b = &pd.finite;
        let yr = y_plus(b, c(xr, 0.0)).re;
        let yq = y_plus(b, c(xq, 0.0)).re;
        let mut tk = ThirdKind { pd, xr, xq, yr, yq, corr: [0.0; 2] };
        // a-cycles are the doubled segments [x₂, x₃] and [x₄, x₅]
        let a1 = segment_general(b, 2, |x| tk.odd(x), tol)? * 2.0;
        let a2 = segment_general(b, 4, |x| tk.odd(x), tol)? * 2.0;
        tk.corr = [a1.re, a2.re];
        Ok(tk)
    }

    /// The part of the raw kernel that changes sign with `y`, times `y`.
    fn odd(&self, x: f64) -> f64 {
        0.5 * (self.yr / (x - self.xr) - self.yq / (x - self.xq))
    }

    fn eval(&self, x: C64) -> C64 {
        let y = y_plus(&self.pd.finite, x);
        let raw = ((y + self.yr) / (x - self.xr) - (y + self.yq) / (x - self.xq)) * 0.5 / y;
        let du = self.pd.du(x);
        raw - du[0] * self.corr[0] - du[1] * self.corr[1]
    }

    /// `∫_{b_j} dv` for `j = 1, 2`.
    fn b_periods(&self, tol: f64) -> Result<[C64; 2]> {
        let b = &self.pd.finite;
        let raw1 = segment_general(b, 1, |x| self.odd(x), tol)? * -2.0;
        let raw2 = segment_general(b, 5, |x| self.odd(x), tol)? * 2.0;
        let o = self.pd.omega();
        let pi = |i: usize, j: usize| c(0.0, o[(i, j)]);
        Ok([
            raw1 - pi(0, 0) * self.corr[0] - pi(1, 0) * self.corr[1],
            raw2 - pi(0, 1) * self.corr[0] - pi(1, 1) * self.corr[1],
        ])
    }
}

fn on_third_oval(pd: &PeriodData, p: &SurfacePoint, what: &str) -> Result<f64> {
    if p.x.im != 0.0 || p.sheet != Sheet::Plus {
        return Err(Error::InvalidCurve(format!("{what} must be a real point on the boundary sheet")));
    }
    let x = pd.to_finite.apply(p.x);
    if !(x.re < 0.0 || x.re > 1.0) || !x.re.is_finite() {
        return Err(Error::InvalidCurve(format!("{what} = {} is not on the third oval", p.x.re)));
    }
    Ok(x.re)
}

/// Compares the quadrature of the normalized third-kind differential `dv_{rq}`
/// from a reference point to `p` against its theta-quotient representation,
/// and checks the bilinear relation for its `b`-periods.
///
/// `r`, `q`, `p` are real points of the third oval in the chart of `curve`.
pub fn third_kind_check(curve: &Curve, r: SurfacePoint, q: SurfacePoint, p: SurfacePoint, tol: f64) -> Result<ThirdKindReport> {
    let pd = period_matrix(curve, 0.1 * tol)?;
    let xr = on_third_oval(&pd, &r, "r")?;
    let xq = on_third_oval(&pd, &q, "q")?;
    let xp = on_third_oval(&pd, &p, "p")?;
    let taken = [xr, xq, xp];
    let gap = |x: f64| taken.iter().map(|t| (t - x).abs()).fold(f64::INFINITY, f64::min);
    if [(xr, xq), (xr, xp), (xq, xp)].iter().any(|(a, b)| (a - b).abs() < 1e-6) {
        return Err(Error::InvalidCurve("r, q, p must be distinct".into()));
    }
    // reference point on the third oval, away from r, q, p
    let candidates = [-2.0, -1.0, -0.5, -0.25, 1.25, 1.5, 2.0, 3.0];
    let x_ref = candidates.into_iter().max_by(|a, b| gap(*a).total_cmp(&gap(*b))).expect("non-empty");

    let run = |tol: f64| -> Result<(C64, [C64; 2])> {
        let tk = ThirdKind::new(&pd, xr, xq, tol)?;
        let height = 0.5 + 0.25 * (xp - x_ref).abs();
        let path = [c(x_ref, 0.0), c(x_ref, height), c(xp, height), c(xp, 0.0)];
        let v = LineIntegral::new(tol).integrate::<1, _>(|x| [tk.eval(x)], &path)?[0];
        Ok((v, tk.b_periods(tol)?))
    };
    let (quadrature, bper) = twice(
        tol,
        run,
        |a, b| mod_2pi_i(a.0 - b.0).max((a.1[0] - b.1[0]).norm()).max((a.1[1] - b.1[1]).norm()),
        "third-kind quadrature",
    )?;

    let u = |x: f64| aj_real(&pd, x);
    let (ur, uq, up, uref) = (u(xr)?, u(xq)?, u(xp)?, u(x_ref)?);
    // odd characteristic [s35] whose extra zero p_s is far from the evaluation points
    let b = pd.finite;
    let s = (0..6)
        .max_by(|&i, &j| {
            let d = |k: usize| [xp, x_ref].iter().map(|x| (x - b[k]).abs()).fold(f64::INFINITY, f64::min);
            d(i).total_cmp(&d(j))
        })
        .expect("six branch points") as u8
        + 1;
    let ch = if s == 1 { crate::theta::riemann_constant() } else { char_from_indices(&[s, 3, 5])? }.to_real();
    let th = pd.jac.theta();
    let e = |z: CVec2| th.char_value(&ch, &z);
    let ratio = e(up - ur)? * e(uref - uq)? / (e(up - uq)? * e(uref - ur)?);
    let theta = ratio.ln();
    let residual = mod_2pi_i(quadrature - theta);

    let target = (ur - uq) * c(0.0, 2.0 * PI);
    let bilinear = [mod_2pi_i(bper[0] - target[0]), mod_2pi_i(bper[1] - target[1])];
    Ok(ThirdKindReport { quadrature, theta, residual, bilinear, p_ref: pd.to_finite.inverse().apply_real(x_ref) })
}

/// Quadrature Abel–Jacobi image of `x` (marked chart, `Im x > 0`) on the
/// curve of `params`, for comparison with the theta solution of the map.
pub fn aj_by_quadrature(mc: &MarkedCurve, t: C64, tol: f64) -> Result<CVec2> {
    let pd = period_matrix(&mc.standard, tol)?;
    let x = mc.to_marked.inverse().apply(t);
    crate::curve::aj_point(&pd, SurfacePoint::plus(x))
}
