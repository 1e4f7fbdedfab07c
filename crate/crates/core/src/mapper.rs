//! The auxiliary parameter system of a heptagon and the conformal map in theta form.
//!
//! A heptagon in `P_{αβ}` is determined by seven real parameters: the matrix
//! `Ω`, the image `u⁰ = u(p₀)` of the marked point and the vector `C`. The
//! Christoffel-Schwarz integral is
//!
//! ```text
//! w(u) = log(θ[c](u + u⁰) / θ[c](u − u⁰)) + C·u,    c = [k35] odd,
//! ```
//!
//! restricted to the theta divisor `θ[35](u) = 0`. The logarithm is
//! multivalued; [`ConformalMap`] fixes its branch by continuation along
//! the curve, starting from the third oval where it is real up to `iπ`.
//!
//! Points of the curve are tracked in the marked chart `t = 1/(x₀ − x)`,
//! where all six branch points are finite and `p₀` sits at infinity.

use std::cell::Cell;
use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};

use crate::exec::{self, Execution};
use crate::curve::{in_cone, Jacobian, Mobius, Norm, Projection};
use crate::heptagon::{Heptagon, VertexSet};
use crate::theta::{char_from_indices, riemann_constant, RealChar, ThetaConfig};
use crate::{c, rvec, CMat2, CVec2, Error, Mat2, Result, C64};

/// Starting point of the parameter continuation.
pub const REFERENCE_OMEGA: [[f64; 2]; 2] = [[2.0, 0.5], [0.5, 1.5]];
pub const REFERENCE_U1: f64 = 0.2;

/// Bound on the steps of one tracking call; only severe crowding of branch points reaches it.
const MAX_TRACK_STEPS: usize = 20_000;

/// Bound on the tracking steps spent inverting one point.
const INVERSE_STEP_BUDGET: usize = 50_000;

/// The seven real parameters of the map, plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct MapParams {
    pub alpha: u8,
    pub beta: u8,
    pub omega: Mat2,
    pub u0: [f64; 2],
    pub c: [f64; 2],
    /// Additive constant of the integral; the theta form already gives `w(p₁) = iπ`.
    pub anchor: C64,
    /// Largest residual of the seven defining equations.
    pub residual: f64,
}

/// Residuals of the seven equations at a parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `|θ[35](u⁰)|` relative to the series scale.
    pub oval: f64,
    /// Relative wedge residuals at `u(p_α)` and `u(p_β)`.
    pub wedge: [f64; 2],
    /// `|H_s(params) − H_s|` for `s = 1, 2, 4, 5`.
    pub sides: [f64; 4],
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.wedge.iter().chain(self.sides.iter()).fold(self.oval, |a, &b| a.max(b))
    }
}

/// Result of the forward map `(Ω, u₁⁰) ↦ H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Auxiliary {
    pub u0: [f64; 2],
    pub c: [f64; 2],
    pub heptagon: Heptagon,
}

/// Options of [`solve_parameters`].
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Required accuracy of each side length.
    pub tol: f64,
    pub theta: ThetaConfig,
    /// Initial parameters `(Ω, u₁⁰)` of the continuation.
    pub start: (Mat2, f64),
}

impl Default for SolveOptions {
    fn default() -> Self {
        let o = REFERENCE_OMEGA;
        SolveOptions {
            tol: 1e-9,
            theta: ThetaConfig::default(),
            start: (Mat2::new(o[0][0], o[0][1], o[1][0], o[1][1]), REFERENCE_U1),
        }
    }
}

fn check_indices(alpha: u8, beta: u8) -> Result<()> {
    if 1 <= alpha && alpha < beta && beta <= 6 {
        Ok(())
    } else {
        Err(Error::InvalidHeptagon(vec![crate::heptagon::Violation::Indices { alpha, beta }]))
    }
}

/// The unique `u₂⁰ ∈ (0, ½)` with `θ[35]((u₁⁰, u₂⁰)) = 0`.
pub fn solve_u0_second(jac: &Jacobian, u1: f64) -> Result<f64> {
    if !(0.0 < u1 && u1 < 0.5) {
        return Err(Error::LeftValidRegion(format!("u1 = {u1} outside (0, 1/2)")));
    }
    let k = riemann_constant().to_real();
    let th = jac.theta();
    // the restriction to real arguments is real
    let f = |u2: f64| -> Result<(f64, f64)> {
        let v = th.eval(&k, &rvec(u1, u2))?;
        Ok((v.value.re, v.grad[1].re))
    };
    const N: usize = 64;
    let mut prev = (0.0, f(0.0)?.0);
    let mut bracket = None;
    let mut changes = 0;
    for i in 1..=N {
        let x = 0.5 * i as f64 / N as f64;
        let y = f(x)?.0;
        if y == 0.0 {
            return Ok(x);
        }
        if (prev.1 < 0.0) != (y < 0.0) {
            changes += 1;
            bracket = Some((prev.0, prev.1, x));
        }
        prev = (x, y);
    }
    let (mut lo, flo, mut hi) = match (changes, bracket) {
        (1, Some(b)) => b,
        (0, _) => return Err(Error::NoRootInBracket(u1)),
        _ => return Err(Error::LeftValidRegion(format!("{changes} roots of θ[35] for u1 = {u1}"))),
    };
    let lo_negative = flo < 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (y, dy) = f(x)?;
        if y == 0.0 {
            return Ok(x);
        }
        if (y < 0.0) == lo_negative {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - y / dy;
        let next = if dy != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-16 || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// The label `k` of the characteristic `[k35]` used for the logarithm: `5` unless
/// it coincides with `α` or `β`.
pub fn log_label(alpha: u8, beta: u8) -> u8 {
    [5, 2, 3, 4, 6].into_iter().find(|&k| k != alpha && k != beta).unwrap_or(5)
}

fn log_char(k: u8) -> RealChar {
    char_from_indices(&[k, 3, 5]).expect("labels are valid").to_real()
}

/// `(θ[c](u + u⁰)/θ[c](u − u⁰), ∇ log of it)`.
fn log_ratio(jac: &Jacobian, ch: &RealChar, u: &CVec2, u0: &CVec2) -> Result<(C64, CVec2)> {
    let th = jac.theta();
    let p = th.eval(ch, &(u + u0))?;
    let m = th.eval(ch, &(u - u0))?;
    if p.value.norm() <= 1e-14 * p.scale || m.value.norm() <= 1e-14 * m.scale {
        return Err(Error::AtPole);
    }
    Ok((p.value / m.value, p.grad / p.value - m.grad / m.value))
}

fn wedge_rows(jac: &Jacobian, u0: &CVec2, alpha: u8, beta: u8) -> Result<[(CVec2, CVec2); 2]> {
    let k35 = riemann_constant().to_real();
    let ch = log_char(log_label(alpha, beta));
    let row = |s: u8| -> Result<(CVec2, CVec2)> {
        let us = jac.half_period(s)?;
        let g = jac.theta().grad(&k35, &us)?;
        let (_, gl) = log_ratio(jac, &ch, &us, u0)?;
        Ok((g, gl))
    };
    Ok([row(alpha)?, row(beta)?])
}

/// `C` from `dθ[35] ∧ d(w) = 0` at `u(p_α)` and `u(p_β)`.
pub fn solve_c(jac: &Jacobian, u0: [f64; 2], alpha: u8, beta: u8) -> Result<[f64; 2]> {
    check_indices(alpha, beta)?;
    let u0 = rvec(u0[0], u0[1]);
    let rows = wedge_rows(jac, &u0, alpha, beta)?;
    // g ∧ (G + C) = 0  ⇔  −g₂C₁ + g₁C₂ = g₂G₁ − g₁G₂
    let a = CMat2::new(-rows[0].0[1], rows[0].0[0], -rows[1].0[1], rows[1].0[0]);
    let b = CVec2::new(
        rows[0].0[1] * rows[0].1[0] - rows[0].0[0] * rows[0].1[1],
        rows[1].0[1] * rows[1].1[0] - rows[1].0[0] * rows[1].1[1],
    );
    let x = solve2(&a, &b).ok_or(Error::SingularSystem("wedge conditions"))?;
    Ok([x[0].re, x[1].re])
}

/// Relative wedge residuals of `C` at `u(p_α)`, `u(p_β)`.
pub fn wedge_residuals(jac: &Jacobian, u0: [f64; 2], cc: [f64; 2], alpha: u8, beta: u8) -> Result<[f64; 2]> {
    let u0 = rvec(u0[0], u0[1]);
    let cv = rvec(cc[0], cc[1]);
    let rows = wedge_rows(jac, &u0, alpha, beta)?;
    Ok(rows.map(|(g, gl)| {
        let d = gl + cv;
        let r = g[0] * d[1] - g[1] * d[0];
        r.norm() / (g.norm() * (gl.norm() + cv.norm())).max(f64::MIN_POSITIVE)
    }))
}

/// Side lengths from `(Ω, u⁰, C)`.
pub fn sides_from(omega: &Mat2, u0: [f64; 2], cc: [f64; 2], alpha: u8, beta: u8) -> Heptagon {
    let h1 = 0.5 * (cc[0] * omega[(0, 0)] + cc[1] * omega[(0, 1)] + 2.0 * PI * (1.0 - 2.0 * u0[0]));
    let h2 = 0.5 * cc[0];
    let h4 = -0.5 * cc[1];
    let h5 = -0.5 * (cc[0] * omega[(0, 1)] + cc[1] * omega[(1, 1)] - 4.0 * PI * u0[1]);
    Heptagon::from_free_sides(alpha, beta, h1, h2, h4, h5)
}

/// `(Ω, u₁⁰) ↦ (u⁰, C, H)` on a prepared Jacobian.
pub fn auxiliary(jac: &Jacobian, u1: f64, alpha: u8, beta: u8) -> Result<Auxiliary> {
    check_indices(alpha, beta)?;
    if !jac.in_cone() {
        let o = jac.omega();
        return Err(Error::ConeViolation([o[(0, 0)], o[(0, 1)], o[(1, 1)]]));
    }
    let u2 = solve_u0_second(jac, u1)?;
    let u0 = [u1, u2];
    let cc = solve_c(jac, u0, alpha, beta)?;
    if !(cc[0].is_finite() && cc[1].is_finite()) {
        return Err(Error::SingularSystem("wedge conditions"));
    }
    Ok(Auxiliary { u0, c: cc, heptagon: sides_from(jac.omega(), u0, cc, alpha, beta) })
}

/// The heptagon of the parameters `(Ω, u₁⁰)`; not validated.
pub fn forward_sides(omega: &Mat2, u1: f64, alpha: u8, beta: u8, cfg: ThetaConfig) -> Result<Heptagon> {
    let jac = Jacobian::new(*omega, cfg)?;
    Ok(auxiliary(&jac, u1, alpha, beta)?.heptagon)
}

/// All seven residuals of `params` against the heptagon `h`.
pub fn residuals(params: &MapParams, h: &Heptagon, cfg: ThetaConfig) -> Result<Residuals> {
    let jac = Jacobian::new(params.omega, cfg)?;
    let oval = jac.divisor_residual(&rvec(params.u0[0], params.u0[1]))?;
    let wedge = wedge_residuals(&jac, params.u0, params.c, params.alpha, params.beta)?;
    let f = sides_from(&params.omega, params.u0, params.c, params.alpha, params.beta);
    let sides = [0, 1, 3, 4].map(|i| (f.h[i] - h.h[i]).abs());
    Ok(Residuals { oval, wedge, sides })
}

type Z = Vector4<f64>;

fn z_omega(z: &Z) -> Mat2 {
    Mat2::new(z[0], z[1], z[1], z[2])
}

fn free(h: &Heptagon) -> Z {
    Z::new(h.h[0], h.h[1], h.h[3], h.h[4])
}

struct Outer {
    alpha: u8,
    beta: u8,
    cfg: ThetaConfig,
}

impl Outer {
    fn admissible(z: &Z) -> bool {
        in_cone(&z_omega(z)) && 0.0 < z[3] && z[3] < 0.5
    }

    fn eval(&self, z: &Z) -> Result<(Z, Auxiliary)> {
        if !Outer::admissible(z) {
            return Err(Error::LeftValidRegion(format!("parameters {:?}", z.as_slice())));
        }
        let jac = Jacobian::new(z_omega(z), self.cfg)?;
        let aux = auxiliary(&jac, z[3], self.alpha, self.beta)?;
        Ok((free(&aux.heptagon), aux))
    }

    fn jacobian(&self, z: &Z, fz: &Z) -> Result<Matrix4<f64>> {
        let mut j = Matrix4::zeros();
        for i in 0..4 {
            let h = 1e-6 * z[i].abs().max(0.05);
            let mut zp = *z;
            let mut zm = *z;
            zp[i] += h;
            zm[i] -= h;
            let col = match (self.eval(&zp), self.eval(&zm)) {
                (Ok((fp, _)), Ok((fm, _))) => (fp - fm) / (2.0 * h),
                (Ok((fp, _)), Err(_)) => (fp - fz) / h,
                (Err(_), Ok((fm, _))) => (fz - fm) / h,
                (Err(e), Err(_)) => return Err(e),
            };
            j.set_column(i, &col);
        }
        Ok(j)
    }

    /// Damped Newton for `F(z) = target`, from `z`.
    fn newton(&self, mut z: Z, target: &Z, tol: f64, max_iter: usize) -> Result<(Z, Auxiliary, f64)> {
        let (mut fz, mut aux) = self.eval(&z)?;
        let mut r = (fz - target).amax();
        for _ in 0..max_iter {
            if r <= tol {
                return Ok((z, aux, r));
            }
            let j = self.jacobian(&z, &fz)?;
            let dz = j.lu().solve(&(target - fz)).ok_or(Error::SingularSystem("parameter Newton step"))?;
            let mut lam = 1.0;
            let mut accepted = false;
            while lam >= 1.0 / 64.0 {
                let zn = z + dz * lam;
                if let Ok((fn_, an)) = self.eval(&zn) {
                    let rn = (fn_ - target).amax();
                    if rn < r {
                        z = zn;
                        fz = fn_;
                        aux = an;
                        r = rn;
                        accepted = true;
                        break;
                    }
                }
                lam *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if r <= tol {
            Ok((z, aux, r))
        } else {
            Err(Error::NoConvergence { context: "parameter Newton", detail: format!("residual {r:.3e}") })
        }
    }
}

fn segment_valid(a: &Z, b: &Z, alpha: u8, beta: u8) -> bool {
    (0..=64).all(|i| {
        let s = i as f64 / 64.0;
        let p = a + (b - a) * s;
        Heptagon::from_free_sides(alpha, beta, p[0], p[1], p[2], p[3]).is_valid()
    })
}

/// Waypoints of a path from `a` to `b` inside `P_{αβ}`.
fn continuation_path(a: &Z, b: &Z, alpha: u8, beta: u8) -> Vec<Z> {
    if segment_valid(a, b, alpha, beta) {
        return vec![*a, *b];
    }
    for mask in 1..15u32 {
        let m = Z::from_fn(|i, _| if mask >> i & 1 == 1 { b[i] } else { a[i] });
        if segment_valid(a, &m, alpha, beta) && segment_valid(&m, b, alpha, beta) {
            return vec![*a, m, *b];
        }
    }
    vec![*a, *b]
}

/// Solves the auxiliary system for `h` by Newton's method with continuation
/// from the reference parameters.
pub fn solve_parameters(h: &Heptagon, opts: &SolveOptions) -> Result<MapParams> {
    h.ensure_valid()?;
    let outer = Outer { alpha: h.alpha, beta: h.beta, cfg: opts.theta };
    let (o, u1) = opts.start;
    let mut z = Z::new(o[(0, 0)], 0.5 * (o[(0, 1)] + o[(1, 0)]), o[(1, 1)], u1);
    let (h0, _) = outer.eval(&z)?;
    let target = free(h);
    let fine = opts.tol.clamp(1e-14, 1e-12);
    let path = continuation_path(&h0, &target, h.alpha, h.beta);
    for leg in path.windows(2) {
        let (a, b) = (leg[0], leg[1]);
        let span = (b - a).amax().max(1e-300);
        let mut tau = 0.0;
        let mut step = 1.0f64;
        while tau < 1.0 {
            let next = (tau + step).min(1.0);
            let goal = a + (b - a) * next;
            let tol = 1e-8 * (1.0 + goal.amax());
            match outer.newton(z, &goal, tol, 12) {
                Ok((zn, _, _)) => {
                    z = zn;
                    tau = next;
                    step = (2.0 * step).min(1.0);
                }
                Err(e) => {
                    step *= 0.5;
                    if step * span < 1e-6 * span {
                        return Err(match e {
                            Error::LeftValidRegion(_) => e,
                            _ => Error::ContinuationStalled { t: tau, step },
                        });
                    }
                }
            }
        }
    }
    let (z, aux, _) = match outer.newton(z, &target, fine, 20) {
        Ok(v) => v,
        Err(_) => outer.newton(z, &target, opts.tol, 20)?,
    };
    let mut params = MapParams {
        alpha: h.alpha,
        beta: h.beta,
        omega: z_omega(&z),
        u0: aux.u0,
        c: aux.c,
        anchor: c(0.0, 0.0),
        residual: 0.0,
    };
    params.residual = residuals(&params, h, opts.theta)?.max();
    Ok(params)
}

/// Parameters straight from `(Ω, u₁⁰)`, for building maps of computed heptagons.
pub fn params_from(omega: &Mat2, u1: f64, alpha: u8, beta: u8, cfg: ThetaConfig) -> Result<(MapParams, Heptagon)> {
    let jac = Jacobian::new(*omega, cfg)?;
    let aux = auxiliary(&jac, u1, alpha, beta)?;
    let mut p = MapParams {
        alpha,
        beta,
        omega: *omega,
        u0: aux.u0,
        c: aux.c,
        anchor: c(0.0, 0.0),
        residual: 0.0,
    };
    p.residual = residuals(&p, &aux.heptagon, cfg)?.max();
    Ok((p, aux.heptagon))
}

/// Solves `a·x = b` for a complex 2×2 system.
pub(crate) fn solve2(a: &CMat2, b: &CVec2) -> Option<CVec2> {
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let scale = (a[(0, 0)].norm() + a[(0, 1)].norm()) * (a[(1, 0)].norm() + a[(1, 1)].norm());
    if !(det.norm() > 1e-15 * scale) {
        return None;
    }
    let x0 = (b[0] * a[(1, 1)] - b[1] * a[(0, 1)]) / det;
    let x1 = (a[(0, 0)] * b[1] - a[(1, 0)] * b[0]) / det;
    let x = CVec2::new(x0, x1);
    if x[0].is_finite() && x[1].is_finite() {
        Some(x)
    } else {
        None
    }
}

/// A point of the curve together with the branch of the logarithm there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    /// Marked-chart coordinate.
    pub t: C64,
    /// Abel-Jacobi image, on the theta divisor.
    pub u: CVec2,
    /// Continuous branch of `log(θ[c](u + u⁰)/θ[c](u − u⁰))`.
    pub log: C64,
}

/// One evaluated point of the map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappedPoint {
    pub w: C64,
    pub x: C64,
    pub u: CVec2,
}

/// Tuning of a [`ConformalMap`].
#[derive(Debug, Clone, Copy)]
pub struct MapConfig {
    pub theta: ThetaConfig,
    /// Number of interior seeds for the inverse map.
    pub seeds: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig { theta: ThetaConfig::default(), seeds: 12 }
    }
}

struct Frame {
    f: CVec2,
    jac: CMat2,
    ft: C64,
}

/// The conformal map of one heptagon, ready for evaluation in both directions.
///
/// Immutable after construction; evaluation is safe from many threads.
#[derive(Debug, Clone)]
pub struct ConformalMap {
    params: MapParams,
    jac: Jacobian,
    proj: Projection,
    x0: f64,
    /// Branch points in the marked chart; `t₆ = 0`.
    tb: [f64; 6],
    /// `[k35]` for `k = 2..6`.
    chars: [RealChar; 5],
    u0: CVec2,
    cv: CVec2,
    oval_seeds: Vec<TrackPoint>,
    seeds: Vec<TrackPoint>,
    vertices: VertexSet,
}

impl ConformalMap {
    pub fn new(params: &MapParams, cfg: MapConfig) -> Result<Self> {
        check_indices(params.alpha, params.beta)?;
        let jac = Jacobian::new(params.omega, cfg.theta)?;
        if !jac.in_cone() {
            let o = params.omega;
            return Err(Error::ConeViolation([o[(0, 0)], o[(0, 1)], o[(1, 1)]]));
        }
        let proj = jac.projection(Norm::STANDARD)?;
        let u0 = rvec(params.u0[0], params.u0[1]);
        let x0 = proj.eval(&u0)?.re;
        if !(x0 < 0.0) {
            return Err(Error::LeftValidRegion(format!("marked point x0 = {x0} not on the third oval")));
        }
        let r = jac.rosenhain()?;
        let xb = [0.0, 1.0, r[0], r[1], r[2]];
        let mut tb = [0.0; 6];
        for (i, x) in xb.iter().enumerate() {
            tb[i] = 1.0 / (x0 - x);
        }
        let chars = [2, 3, 4, 5, 6].map(log_char);
        let mut map = ConformalMap {
            params: params.clone(),
            jac,
            proj,
            x0,
            tb,
            chars,
            u0,
            cv: rvec(params.c[0], params.c[1]),
            oval_seeds: Vec::new(),
            seeds: Vec::new(),
            vertices: VertexSet { w: [c(0.0, 0.0); 6] },
        };
        map.oval_seeds = map.third_oval_seeds(8)?;
        map.seeds = map.interior_seeds(cfg.seeds.max(1))?;
        map.vertices = map.compute_vertices()?;
        Ok(map)
    }

    pub fn params(&self) -> &MapParams {
        &self.params
    }

    pub fn jacobian(&self) -> &Jacobian {
        &self.jac
    }

    /// The marked point in the chart `x₁ = 0, x₂ = 1, x₆ = ∞`.
    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// Branch points in the marked chart `t = 1/(x₀ − x)`.
    pub fn marked_branch_points(&self) -> [f64; 6] {
        self.tb
    }

    /// Vertices `w₁..w₆` from the theta form at the six half-periods.
    pub fn vertices(&self) -> &VertexSet {
        &self.vertices
    }

    /// Side lengths reproduced from [`Self::vertices`].
    pub fn sides(&self) -> [f64; 5] {
        let w = &self.vertices.w;
        let mut h = [0.0; 5];
        let mut is = c(0.0, 1.0);
        for s in 0..5 {
            h[s] = ((w[s] - w[s + 1]) / is).re;
            is *= c(0.0, 1.0);
        }
        h
    }

    pub fn seeds(&self) -> &[TrackPoint] {
        &self.seeds
    }

    /// `w` at a tracked point.
    pub fn w_of(&self, p: &TrackPoint) -> C64 {
        p.log + self.cv.dot(&p.u) + self.params.anchor
    }

    /// Möbius map from the marked chart to the chart of `norm`.
    pub fn chart(&self, norm: Norm) -> Result<Mobius> {
        let n = Norm::new(norm.s, norm.j, norm.l, norm.k)?;
        let t = |s: u8| self.tb[s as usize - 1];
        let m = Mobius::through(t(n.s), t(n.j), t(n.l));
        if m.det() <= 0.0 {
            return Err(Error::BadNorm(format!(
                "labels ({},{},{}) reverse orientation; use a cyclic order",
                n.s, n.j, n.l
            )));
        }
        Ok(m)
    }

    /// Branch points in the chart of `norm` (one of them is ∞).
    pub fn branch_points(&self, norm: Norm) -> Result<[f64; 6]> {
        let m = self.chart(norm)?;
        Ok(self.tb.map(|t| m.apply_real(t)))
    }

    /// `x(u)` by the theta projection of `norm`.
    pub fn project(&self, u: &CVec2, norm: Norm) -> Result<C64> {
        self.jac.projection(norm)?.eval(u)
    }

    fn clearance(&self, t: C64) -> f64 {
        self.tb.iter().map(|&b| (t - b).norm()).fold(f64::INFINITY, f64::min)
    }

    fn segment_clearance(&self, a: C64, b: C64) -> f64 {
        let d = b - a;
        let len2 = d.norm_sqr();
        self.tb
            .iter()
            .map(|&p| {
                let s = if len2 == 0.0 { 0.0 } else { ((c(p, 0.0) - a) * d.conj()).re / len2 };
                (a + d * s.clamp(0.0, 1.0) - p).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// The characteristic whose spurious common zero `p_k` is farthest from `t`.
    fn char_for(&self, t: C64) -> &RealChar {
        let mut best = 0;
        let mut far = -1.0;
        for k in 0..5 {
            let d = if t.is_finite() { (t - self.tb[k + 1]).norm() } else { f64::INFINITY };
            if d > far {
                far = d;
                best = k;
            }
        }
        &self.chars[best]
    }

    fn char_avoiding(&self, s: u8) -> &RealChar {
        let t = self.tb[s as usize - 1];
        let mut best = 0;
        let mut far = -1.0;
        for k in 0..5 {
            let d = (t - self.tb[k + 1]).abs();
            if (k + 2) as u8 != s && d > far {
                far = d;
                best = k;
            }
        }
        &self.chars[best]
    }

    fn frame(&self, u: &CVec2, t: C64) -> Option<Frame> {
        let (a, b) = self.proj.parts(u).ok()?;
        let k35 = self.jac.theta().eval(&riemann_constant().to_real(), u).ok()?;
        let kappa = self.proj.factor();
        let q = t * self.x0 - 1.0;
        // κ t θ[s]² − (x₀ t − 1) θ[l]² = 0 is x(u) = x₀ − 1/t cleared of poles
        let f1 = kappa * t * a.value * a.value - q * b.value * b.value;
        let g1 = a.grad * (kappa * t * a.value * 2.0) - b.grad * (q * b.value * 2.0);
        let ft = kappa * a.value * a.value - b.value * b.value * self.x0;
        Some(Frame {
            f: CVec2::new(f1, k35.value),
            jac: CMat2::new(g1[0], g1[1], k35.grad[0], k35.grad[1]),
            ft,
        })
    }

    fn correct(&self, mut u: CVec2, t: C64) -> Option<CVec2> {
        let mut last = f64::INFINITY;
        for _ in 0..16 {
            let fr = self.frame(&u, t)?;
            let du = solve2(&fr.jac, &(-fr.f))?;
            let n = du.norm();
            if n > 0.25 {
                return None;
            }
            // near branch points the noise floor of u rises above machine precision
            if n >= 0.5 * last {
                return (last <= 1e-9).then_some(u);
            }
            u += du;
            if n <= 1e-14 * (1.0 + u.norm()) {
                return Some(u);
            }
            last = n;
        }
        (last <= 1e-10).then_some(u)
    }

    fn dudt(&self, u: &CVec2, t: C64) -> Option<CVec2> {
        let fr = self.frame(u, t)?;
        solve2(&fr.jac, &CVec2::new(-fr.ft, c(0.0, 0.0)))
    }

    /// Continuous branch of the logarithm at `u`, nearest to `reference`.
    fn log_near(&self, ch: &RealChar, u: &CVec2, reference: C64) -> Result<(C64, CVec2)> {
        let (r, g) = log_ratio(&self.jac, ch, u, &self.u0)?;
        let l = r.ln();
        let k = ((reference - l).im / (2.0 * PI)).round();
        Ok((l + c(0.0, 2.0 * PI * k), g))
    }

    fn step(&self, p: &TrackPoint, t1: C64) -> Option<TrackPoint> {
        let v = self.dudt(&p.u, p.t)?;
        let pred = p.u + v * (t1 - p.t);
        let u = self.correct(pred, t1)?;
        if (u - pred).norm() > 0.3 * (pred - p.u).norm() + 1e-12 {
            return None;
        }
        let (l, _) = self.log_near(self.char_for(t1), &u, p.log).ok()?;
        if (l - p.log).norm() > 1.0 {
            return None;
        }
        Some(TrackPoint { t: t1, u, log: l })
    }

    /// Follows the curve from `from` to `to` along a straight segment in the marked chart.
    pub fn track(&self, from: TrackPoint, to: C64) -> Result<TrackPoint> {
        self.track_within(from, to, &Cell::new(usize::MAX))
    }

    /// [`Self::track`], drawing its steps from `budget`.
    fn track_within(&self, from: TrackPoint, to: C64, budget: &Cell<usize>) -> Result<TrackPoint> {
        let mut p = from;
        let total = (to - from.t).norm();
        let mut h_prev = f64::INFINITY;
        let mut steps = 0;
        while p.t != to {
            steps += 1;
            budget.set(budget.get().saturating_sub(1));
            if steps > MAX_TRACK_STEPS || budget.get() == 0 {
                return Err(Error::ContinuationStalled { t: p.t.re, step: h_prev });
            }
            let rem = to - p.t;
            let dist = rem.norm();
            let mut h = dist.min(0.25 * self.clearance(p.t)).min(2.0 * h_prev);
            loop {
                let t1 = if h >= dist { to } else { p.t + rem * (h / dist) };
                if let Some(q) = self.step(&p, t1) {
                    p = q;
                    h_prev = h;
                    break;
                }
                h *= 0.5;
                if h < 1e-10 * total {
                    return Err(Error::ContinuationStalled { t: p.t.re, step: h });
                }
            }
        }
        Ok(p)
    }

    fn track_path(&self, from: TrackPoint, path: &[C64]) -> Result<TrackPoint> {
        path.iter().try_fold(from, |p, &t| self.track(p, t))
    }

    fn third_oval_seeds(&self, per_arc: usize) -> Result<Vec<TrackPoint>> {
        let u1 = self.params.u0[0];
        let mut out = Vec::new();
        for j in 1..=per_arc {
            let f = j as f64 / (per_arc + 1) as f64;
            for (v, expect_im) in [(u1 * f, PI), (u1 + (0.5 - u1) * f, 0.0)] {
                let u2 = solve_u0_second(&self.jac, v)?;
                let u = rvec(v, u2);
                let x = self.proj.eval(&u)?.re;
                let t = c(1.0 / (self.x0 - x), 0.0);
                let (r, _) = log_ratio(&self.jac, self.char_for(t), &u, &self.u0)?;
                let l = r.ln();
                if (l.im.abs() - expect_im).abs() > 1e-6 {
                    return Err(Error::SignCheckFailed(format!("third-oval logarithm {l} at u1 = {v}")));
                }
                out.push(TrackPoint { t, u, log: c(l.re, expect_im) });
            }
        }
        out.sort_by(|a, b| a.t.re.total_cmp(&b.t.re));
        Ok(out)
    }

    /// Path to `target` from the third oval: up, across, down.
    fn via_oval(&self, target: C64) -> Result<TrackPoint> {
        let width = self.tb[5] - self.tb[0];
        let height = target.im.max(0.5 * width);
        let seed = *self
            .oval_seeds
            .iter()
            .min_by(|a, b| (a.t.re - target.re).abs().total_cmp(&(b.t.re - target.re).abs()))
            .expect("seeds exist");
        let path = [
            seed.t + c(0.0, height),
            c(target.re, height),
            target,
        ];
        self.track_path(seed, &path)
    }

    fn interior_seeds(&self, n: usize) -> Result<Vec<TrackPoint>> {
        let tb = self.tb;
        let mut targets = Vec::new();
        let mut level = 0.5;
        while targets.len() < n {
            for s in 0..5 {
                let gap = tb[s + 1] - tb[s];
                targets.push(c(0.5 * (tb[s] + tb[s + 1]), gap * level));
            }
            for s in 0..6 {
                let left = if s > 0 { tb[s] - tb[s - 1] } else { f64::INFINITY };
                let right = if s < 5 { tb[s + 1] - tb[s] } else { f64::INFINITY };
                targets.push(c(tb[s], left.min(right) * level));
            }
            targets.push(c(0.5 * (tb[0] + tb[5]), (tb[5] - tb[0]) * level * 2.0));
            level *= 0.25;
        }
        targets.truncate(n);
        targets.into_iter().map(|t| self.via_oval(t)).collect()
    }

    fn compute_vertices(&self) -> Result<VertexSet> {
        let mut w = [c(0.0, PI); 6];
        let width = self.tb[5] - self.tb[0];
        for s in 2..=6u8 {
            let i = s as usize - 1;
            let next = if i < 5 { self.tb[i + 1] - self.tb[i] } else { f64::INFINITY };
            let local = (self.tb[i] - self.tb[i - 1]).min(next);
            let near = self.to_marked(c(self.tb[i], (1e-6 * width).min(0.05 * local)))?;
            let us = self.jac.half_period(s)?;
            // carry the logarithm from the tracked point to the half-period in u
            let ch = self.char_avoiding(s);
            let (start, _) = self.log_near(ch, &near.u, near.log)?;
            let l = self.carry_log(ch, near.u, start, us, 0)?;
            w[i] = l + self.cv.dot(&us) + self.params.anchor;
        }
        Ok(VertexSet { w })
    }

    /// Continues `log θ[c](u + u⁰)/θ[c](u − u⁰)` along the segment `[a, b]` in `u`.
    fn carry_log(&self, ch: &RealChar, a: CVec2, la: C64, b: CVec2, depth: u32) -> Result<C64> {
        let (lb, _) = self.log_near(ch, &b, la)?;
        if (lb - la).norm() <= 0.5 {
            return Ok(lb);
        }
        if depth >= 40 {
            return Err(Error::NoConvergence { context: "vertex logarithm", detail: "log jumps along the segment".into() });
        }
        let m = (a + b) * c(0.5, 0.0);
        let lm = self.carry_log(ch, a, la, m, depth + 1)?;
        self.carry_log(ch, m, lm, b, depth + 1)
    }

    /// Tracks the curve to the marked-chart point `t` (`Im t > 0`).
    pub fn to_marked(&self, t: C64) -> Result<TrackPoint> {
        let clear = self.clearance(t);
        let best = self
            .seeds
            .iter()
            .filter(|s| self.segment_clearance(s.t, t) >= 0.5 * clear.min(self.clearance(s.t)))
            .min_by(|a, b| (a.t - t).norm().total_cmp(&(b.t - t).norm()));
        let p = match best {
            Some(s) => self.track(*s, t)?,
            None => self.via_oval(t)?,
        };
        if !self.jac.tile(&p.u, 1e-12).is_h_plus() {
            return Err(Error::WrongTile(format!("t = {t}")));
        }
        Ok(p)
    }

    fn vertex_at(&self, x: C64, norm: Norm) -> Result<Option<usize>> {
        let xb = self.branch_points(norm)?;
        Ok(xb.iter().position(|&b| {
            if b.is_infinite() {
                !x.is_finite()
            } else {
                x.im == 0.0 && (x.re - b).abs() <= 1e-12 * (1.0 + b.abs())
            }
        }))
    }

    /// `w(x)` for `Im x > 0`, or at a branch point (a vertex).
    pub fn to_heptagon(&self, x: C64, norm: Norm) -> Result<C64> {
        if let Some(i) = self.vertex_at(x, norm)? {
            return Ok(self.vertices.w[i]);
        }
        Ok(self.to_heptagon_point(x, norm)?.w)
    }

    pub fn to_heptagon_point(&self, x: C64, norm: Norm) -> Result<MappedPoint> {
        if !(x.im > 0.0 && x.is_finite()) {
            return Err(Error::LeftValidRegion(format!("x = {x} is not in the upper half plane")));
        }
        let t = self.chart(norm)?.inverse().apply(x);
        let p = self.to_marked(t)?;
        Ok(MappedPoint { w: self.w_of(&p), x, u: p.u })
    }

    /// `x(w)` for `w` inside the heptagon, or at a vertex.
    pub fn to_halfplane(&self, w: C64, norm: Norm) -> Result<C64> {
        let tol = 1e-9 * (1.0 + w.norm());
        if let Some(i) = self.vertices.w.iter().position(|v| (v - w).norm() <= tol) {
            return Ok(c(self.branch_points(norm)?[i], 0.0));
        }
        Ok(self.to_halfplane_point(w, norm)?.x)
    }

    pub fn to_halfplane_point(&self, w: C64, norm: Norm) -> Result<MappedPoint> {
        let m = self.chart(norm)?;
        let p = self.locate(w)?;
        Ok(MappedPoint { w, x: m.apply(p.t), u: p.u })
    }

    /// The tracked point of the marked chart whose image is `w`.
    fn locate(&self, w: C64) -> Result<TrackPoint> {
        self.locate_within(w, &Cell::new(INVERSE_STEP_BUDGET))
    }

    fn locate_within(&self, w: C64, budget: &Cell<usize>) -> Result<TrackPoint> {
        if !self.vertices.contains(w) {
            return Err(Error::OutsideHeptagon(format!("{w}")));
        }
        let mut order: Vec<&TrackPoint> = self.seeds.iter().collect();
        order.sort_by(|a, b| (self.w_of(a) - w).norm().total_cmp(&(self.w_of(b) - w).norm()));
        let visible = order.iter().find(|s| self.vertices.segment_inside(self.w_of(s), w));
        let mut result = match visible {
            Some(s) => self.w_continuation(**s, w, budget),
            None => Err(Error::NoConvergence { context: "inverse map", detail: "no visible seed".into() }),
        };
        if result.is_err() {
            for s in &order {
                result = self.t_newton(**s, w, 60, budget);
                if result.is_ok() || budget.get() == 0 {
                    break;
                }
            }
        }
        let p = result?;
        if !self.jac.tile(&p.u, 1e-12).is_h_plus() {
            return Err(Error::WrongTile(format!("w = {w}")));
        }
        Ok(p)
    }

    fn dwdt(&self, p: &TrackPoint) -> Option<C64> {
        let v = self.dudt(&p.u, p.t)?;
        let (_, g) = log_ratio(&self.jac, self.char_for(p.t), &p.u, &self.u0).ok()?;
        Some((g + self.cv).dot(&v))
    }

    /// Newton's method in the marked chart for `w(t) = target`.
    fn t_newton(&self, mut p: TrackPoint, target: C64, max_iter: usize, budget: &Cell<usize>) -> Result<TrackPoint> {
        let fail = |d: String| Error::NoConvergence { context: "inverse map", detail: d };
        let mut r = (self.w_of(&p) - target).norm();
        for _ in 0..max_iter {
            let scale = 1.0 + target.norm();
            if r <= 1e-13 * scale {
                return Ok(p);
            }
            let d = self.dwdt(&p).ok_or_else(|| fail("singular derivative".into()))?;
            let mut dt = (target - self.w_of(&p)) / d;
            let limit = 0.5 * self.clearance(p.t);
            if dt.norm() > limit {
                dt *= limit / dt.norm();
            }
            let mut accepted = false;
            for _ in 0..40 {
                if budget.get() == 0 {
                    break;
                }
                let tn = p.t + dt;
                if tn.im > 0.0 {
                    if let Ok(q) = self.track_within(p, tn, budget) {
                        let rn = (self.w_of(&q) - target).norm();
                        if rn < r {
                            p = q;
                            r = rn;
                            accepted = true;
                            break;
                        }
                    }
                }
                dt *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if r <= 1e-10 * (1.0 + target.norm()) {
            Ok(p)
        } else {
            Err(fail(format!("residual {r:.3e}")))
        }
    }

    /// Continuation along the segment from the seed's image to `target`.
    fn w_continuation(&self, seed: TrackPoint, target: C64, budget: &Cell<usize>) -> Result<TrackPoint> {
        let w_start = self.w_of(&seed);
        let mut p = seed;
        let mut tau = 0.0;
        let mut dtau = 1.0f64;
        while tau < 1.0 {
            let cur = self.w_of(&p);
            let room = 0.3 * self.vertices.distance_to_boundary(cur).max(1e-300);
            let len = (target - w_start).norm() * dtau;
            if len > room {
                dtau = room / (target - w_start).norm();
            }
            let next = (tau + dtau).min(1.0);
            let goal = w_start + (target - w_start) * next;
            let tight = next >= 1.0;
            match self.t_newton(p, goal, if tight { 40 } else { 12 }, budget) {
                Ok(q) => {
                    p = q;
                    tau = next;
                    dtau *= 2.0;
                }
                Err(e) => {
                    dtau *= 0.5;
                    if dtau < 1e-9 || budget.get() == 0 {
                        return Err(e);
                    }
                }
            }
        }
        Ok(p)
    }

    /// [`Self::to_halfplane_point`] over many points, in input order.
    pub fn to_halfplane_many(&self, ws: &[C64], norm: Norm, mode: Execution) -> Vec<Result<MappedPoint>> {
        exec::map(ws, mode, |&w| self.to_halfplane_point(w, norm))
    }

    /// [`Self::to_halfplane_point`] along a polyline, continuing each point
    /// from its predecessor when the segment between them is inside.
    pub fn to_halfplane_polyline(&self, ws: &[C64], norm: Norm) -> Vec<Result<MappedPoint>> {
        let m = match self.chart(norm) {
            Ok(m) => m,
            Err(e) => return ws.iter().map(|_| Err(e.clone())).collect(),
        };
        let mut prev: Option<TrackPoint> = None;
        let mut out = Vec::with_capacity(ws.len());
        for &w in ws {
            let budget = Cell::new(INVERSE_STEP_BUDGET);
            let cont = prev
                .filter(|p| self.vertices.contains(w) && self.vertices.segment_inside(self.w_of(p), w))
                .and_then(|p| self.w_continuation(p, w, &budget).ok())
                .filter(|p| self.jac.tile(&p.u, 1e-12).is_h_plus());
            let r = match cont {
                Some(p) => Ok(p),
                None => self.locate_within(w, &budget),
            };
            prev = r.as_ref().ok().copied();
            out.push(r.map(|p| MappedPoint { w, x: m.apply(p.t), u: p.u }));
        }
        out
    }

    /// [`Self::to_heptagon_point`] over many points, in input order.
    pub fn to_heptagon_many(&self, xs: &[C64], norm: Norm, mode: Execution) -> Vec<Result<MappedPoint>> {
        exec::map(xs, mode, |&x| self.to_heptagon_point(x, norm))
    }

    /// `w(u)` for `u` on the divisor in the closure of the `H⁺` block.
    pub fn cs_value(&self, u: &CVec2) -> Result<C64> {
        if (u - self.u0).norm() < 1e-12 || (u + self.u0).norm() < 1e-12 {
            return Err(Error::AtPole);
        }
        if u.norm() == 0.0 {
            return Ok(self.vertices.w[0]);
        }
        let x = match self.proj.eval(u) {
            Ok(x) => x,
            Err(Error::DenominatorZero) => c(f64::INFINITY, 0.0),
            Err(e) => return Err(e),
        };
        let t = if x.is_finite() { (c(self.x0, 0.0) - x).inv() } else { c(0.0, 0.0) };
        let scale = self.tb[5] - self.tb[0];
        if t.im < -1e-9 * scale {
            return Err(Error::WrongTile(format!("u = {:?} projects below the real axis", u.as_slice())));
        }
        let probe = if t.im > 1e-6 * scale { t } else { c(t.re, 1e-6 * scale) };
        let p = self.to_marked(probe)?;
        if (p.u - u).norm() > 0.05 {
            return Err(Error::WrongTile(format!("u = {:?} is not in the H+ block", u.as_slice())));
        }
        let ch = self.char_for(t);
        let (l, _) = self.log_near(ch, u, p.log)?;
        Ok(l + self.cv.dot(u) + self.params.anchor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> Mat2 {
        Mat2::new(2.0, 0.5, 0.5, 1.5)
    }

    #[test]
    fn u0_second_root_is_unique_and_accurate() {
        let jac = Jacobian::new(reference(), ThetaConfig::default()).unwrap();
        for &u1 in &[0.05, 0.2, 0.31, 0.45] {
            let u2 = solve_u0_second(&jac, u1).unwrap();
            assert!(0.0 < u2 && u2 < 0.5);
            assert!(jac.divisor_residual(&rvec(u1, u2)).unwrap() < 1e-13);
        }
    }

    #[test]
    fn c_satisfies_wedge_conditions() {
        let jac = Jacobian::new(reference(), ThetaConfig::default()).unwrap();
        for (a, b) in Heptagon::index_pairs() {
            let aux = auxiliary(&jac, 0.2, a, b).unwrap();
            let r = wedge_residuals(&jac, aux.u0, aux.c, a, b).unwrap();
            assert!(r[0] < 1e-12 && r[1] < 1e-12, "({a},{b}): {r:?}");
            let h = aux.heptagon.h;
            assert!((h[0] - h[2] + h[4] - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_heptagons_are_valid() {
        for (a, b) in Heptagon::index_pairs() {
            let h = forward_sides(&reference(), 0.2, a, b, ThetaConfig::default()).unwrap();
            assert!(h.is_valid(), "({a},{b}): {:?} {:?}", h.h, h.validate());
        }
    }

    #[test]
    fn solver_recovers_parameters() {
        let omega = Mat2::new(1.3, 0.4, 0.4, 0.9);
        let h = forward_sides(&omega, 0.31, 2, 5, ThetaConfig::default()).unwrap();
        let p = solve_parameters(&h, &SolveOptions::default()).unwrap();
        assert!((p.omega - omega).amax() < 1e-8, "{}", p.omega);
        assert!((p.u0[0] - 0.31).abs() < 1e-8);
        assert!(p.residual < 1e-9);
    }

    #[test]
    fn log_branches_agree_across_characteristics() {
        let (p, _) = params_from(&reference(), 0.2, 1, 4, ThetaConfig::default()).unwrap();
        let map = ConformalMap::new(&p, MapConfig::default()).unwrap();
        let pt = map.to_marked(c(-0.1, 0.05)).unwrap();
        let u0 = rvec(p.u0[0], p.u0[1]);
        let first = log_ratio(&map.jac, &map.chars[0], &pt.u, &u0).unwrap().0;
        for ch in &map.chars[1..] {
            let r = log_ratio(&map.jac, ch, &pt.u, &u0).unwrap().0;
            assert!((r - first).norm() < 1e-9 * first.norm(), "{r} vs {first}");
        }
    }

    #[test]
    fn vertices_reproduce_sides() {
        for (a, b) in [(1, 4), (2, 5), (5, 6)] {
            let (p, h) = params_from(&reference(), 0.2, a, b, ThetaConfig::default()).unwrap();
            let map = ConformalMap::new(&p, MapConfig::default()).unwrap();
            let got = map.sides();
            for (s, (g, e)) in got.iter().zip(&h.h).enumerate() {
                assert!((g - e).abs() < 1e-9, "({a},{b}) H{}: {g} vs {e}", s + 1);
            }
            assert!((map.vertices().w[0] - c(0.0, PI)).norm() < 1e-14);
            assert!(map.vertices().w[5].im.abs() < 1e-9);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let (p, _) = params_from(&reference(), 0.2, 2, 4, ThetaConfig::default()).unwrap();
        let map = ConformalMap::new(&p, MapConfig::default()).unwrap();
        for x in [c(0.5, 0.5), c(-3.0, 0.1), c(7.0, 2.0), c(2.5, 1e-3)] {
            let w = map.to_heptagon(x, Norm::STANDARD).unwrap();
            let back = map.to_halfplane(w, Norm::STANDARD).unwrap();
            assert!((back - x).norm() < 1e-8 * (1.0 + x.norm()), "{x} -> {w} -> {back}");
        }
    }
}
