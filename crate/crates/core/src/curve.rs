//! The genus-2 curve `y² = ∏(x − x_s)` with six real branch points.
//!
//! Conventions:
//! - `H⁺` is the sheet over the upper half plane on which `y` is the product of
//!   principal square roots `∏√(x − x_s)` (in a chart with all branch points
//!   finite). Its boundary runs along the real axis through `x₁, …, x₆`.
//! - The holomorphic differentials are normalized by `∫ du = ½·E` over the
//!   boundary segments `[x₂,x₃]` and `[x₄,x₅]` of `H⁺`, i.e. the a-cycles are
//!   the lifts of these real ovals.
//! - `Π = iΩ` with `Ω` read off the boundary segments `[x₁,x₂]` and `[x₅,x₆]`.
//!   With these choices the boundary half-periods are
//!   `u(p₁)=0, u(p₂)=−iΩ¹/2, u(p₃)=(E¹−iΩ¹)/2, u(p₄)=(E¹−iΩ²)/2,
//!   u(p₅)=(E¹+E²−iΩ²)/2, u(p₆)=(E¹+E²)/2` and `H⁺` lands in the block
//!   `ε ∈ (−1,0)², ε′ ∈ (0,1)²`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad;
use crate::theta::{char_from_indices, riemann_constant, IntChar, RealChar, Theta, ThetaConfig, TileLabel};
use crate::{c, rvec, CVec2, Mat2, C64};

/// Orientation-preserving real Möbius map `x ↦ (ax + b)/(cx + d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mobius {
    pub const IDENTITY: Mobius = Mobius { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        let det = a * d - b * c;
        let s = det.abs().sqrt();
        Mobius { a: a / s, b: b / s, c: c / s, d: d / s }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// The map sending `p ↦ 0`, `q ↦ 1`, `r ↦ ∞` (extended reals; ∞ as `f64::INFINITY`).
    pub fn through(p: f64, q: f64, r: f64) -> Self {
        match (p.is_infinite(), q.is_infinite(), r.is_infinite()) {
            (false, false, true) => Mobius::new(1.0, -p, 0.0, q - p),
            (true, false, false) => Mobius::new(0.0, q - r, 1.0, -r),
            (false, true, false) => Mobius::new(1.0, -p, 1.0, -r),
            _ => Mobius::new(q - r, -p * (q - r), q - p, -r * (q - p)),
        }
    }

    /// `x ↦ 1/(x₀ − x)`, sending `x₀` to ∞.
    pub fn marked(x0: f64) -> Self {
        Mobius::new(0.0, 1.0, -1.0, x0)
    }

    pub fn apply_real(&self, x: f64) -> f64 {
        if x.is_infinite() {
            return if self.c == 0.0 { f64::INFINITY } else { self.a / self.c };
        }
        let den = self.c * x + self.d;
        if den == 0.0 {
            f64::INFINITY
        } else {
            (self.a * x + self.b) / den
        }
    }

    pub fn apply(&self, z: C64) -> C64 {
        (z * self.a + self.b) / (z * self.c + self.d)
    }

    pub fn inverse(&self) -> Mobius {
        Mobius::new(self.d, -self.b, -self.c, self.a)
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &Mobius) -> Mobius {
        Mobius::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

/// Cross-ratio of four finite points.
pub fn cross_ratio(a: f64, b: f64, c: f64, d: f64) -> f64 {
    (a - c) * (b - d) / ((a - d) * (b - c))
}

fn angle(x: f64) -> f64 {
    if x.is_infinite() {
        PI
    } else {
        2.0 * x.atan()
    }
}

fn forward_gap(from: f64, to: f64) -> f64 {
    (angle(to) - angle(from)).rem_euclid(2.0 * PI)
}

/// Six cyclically ordered branch points on the real projective line and an
/// optional marked point on the arc `(x₆, x₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curve {
    branch: [f64; 6],
    marked: Option<f64>,
}

impl Curve {
    pub fn new(branch: [f64; 6], marked: Option<f64>) -> Result<Self> {
        let branch = branch.map(|x| if x.is_infinite() { f64::INFINITY } else { x });
        if branch.iter().any(|x| x.is_nan()) || branch.iter().filter(|x| x.is_infinite()).count() > 1 {
            return Err(Error::InvalidCurve("branch points must be real with at most one at infinity".into()));
        }
        let mut turn = 0.0;
        for s in 0..6 {
            let g = forward_gap(branch[s], branch[(s + 1) % 6]);
            if !(g > 1e-14) {
                return Err(Error::InvalidCurve(format!("branch points {branch:?} are not distinct")));
            }
            turn += g;
        }
        if (turn - 2.0 * PI).abs() > 1e-9 {
            return Err(Error::InvalidCurve(format!("branch points {branch:?} are not cyclically ordered")));
        }
        if let Some(x0) = marked {
            let inside = x0.is_finite() || x0.is_infinite();
            let g0 = forward_gap(branch[5], x0);
            let g1 = forward_gap(branch[5], branch[0]);
            if !inside || !(g0 > 1e-14 && g0 < g1 - 1e-14) {
                return Err(Error::InvalidCurve(format!("marked point {x0} is not on the arc (x6, x1)")));
            }
        }
        let marked = marked.map(|x| if x.is_infinite() { f64::INFINITY } else { x });
        Ok(Curve { branch, marked })
    }

    pub fn branch(&self) -> &[f64; 6] {
        &self.branch
    }

    pub fn marked(&self) -> Option<f64> {
        self.marked
    }

    pub fn transform(&self, m: &Mobius) -> Result<Curve> {
        if m.det() <= 0.0 {
            return Err(Error::InvalidCurve("chart change must preserve orientation".into()));
        }
        Curve::new(self.branch.map(|x| m.apply_real(x)), self.marked.map(|x| m.apply_real(x)))
    }

    /// Chart with the marked point at infinity, via `x ↦ 1/(x₀ − x)`.
    pub fn to_marked_chart(&self) -> Result<(Curve, Mobius)> {
        let x0 = self
            .marked
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::InvalidCurve("no finite marked point".into()))?;
        let m = Mobius::marked(x0);
        Ok((self.transform(&m)?, m))
    }

    /// Chart `x₁ = 0, x₂ = 1, x₆ = ∞`.
    pub fn to_standard_chart(&self) -> Result<(Curve, Mobius)> {
        let b = &self.branch;
        let m = Mobius::through(b[0], b[1], b[5]);
        let mut cv = self.transform(&m)?;
        cv.branch[0] = 0.0;
        cv.branch[1] = 1.0;
        cv.branch[5] = f64::INFINITY;
        Ok((cv, m))
    }

    /// Whether all branch points are finite and increasing.
    pub fn is_finite_chart(&self) -> bool {
        self.branch.iter().all(|x| x.is_finite()) && self.branch.windows(2).all(|w| w[0] < w[1])
    }

    /// A chart with finite increasing branch points scaled to `x₁ = 0, x₆ = 1`.
    pub fn to_finite_chart(&self) -> Result<(Curve, Mobius)> {
        let b = &self.branch;
        let m = if self.is_finite_chart() {
            Mobius::IDENTITY
        } else {
            // send the middle of the arc (x₆, x₁) to infinity
            let th = angle(b[5]) + 0.5 * forward_gap(b[5], b[0]);
            let p = (0.5 * th).tan();
            Mobius::marked(p)
        };
        let y1 = m.apply_real(b[0]);
        let y6 = m.apply_real(b[5]);
        let affine = Mobius::new(1.0, -y1, 0.0, y6 - y1);
        let total = affine.compose(&m);
        let mut cv = self.transform(&total)?;
        cv.branch[0] = 0.0;
        cv.branch[5] = 1.0;
        Ok((cv, total))
    }

    /// Finite, increasing branch points (error otherwise).
    pub fn finite_branch(&self) -> Result<[f64; 6]> {
        if self.is_finite_chart() {
            Ok(self.branch)
        } else {
            Err(Error::InvalidCurve("operation needs a chart with finite branch points".into()))
        }
    }
}

/// `y` on `H⁺` (principal product) for finite branch points.
pub fn y_plus(branch: &[f64; 6], x: C64) -> C64 {
    branch.iter().map(|b| (x - b).sqrt()).product()
}

/// Real coefficients of the normalized differentials: `du_j = (K₀ⱼ x + K₁ⱼ) dx/y`.
pub fn normalize_differentials(curve: &Curve, tol: f64) -> Result<Mat2> {
    let branch = curve.finite_branch()?;
    let basis: [&[f64]; 2] = [&[0.0, 1.0], &[1.0, 0.0]];
    let s2 = quad::segment_integrals(&branch, &basis, 2, tol)?;
    let s4 = quad::segment_integrals(&branch, &basis, 4, tol)?;
    let a = Mat2::new(s2[0].re, s2[1].re, s4[0].re, s4[1].re);
    let cond = a.norm() * a.try_inverse().map(|m| m.norm()).unwrap_or(f64::INFINITY);
    if !(cond < 1e12) {
        return Err(Error::SingularSystem("normalization of differentials"));
    }
    let inv = a.try_inverse().ok_or(Error::SingularSystem("normalization of differentials"))?;
    Ok(inv * 0.5)
}

/// Integrals of `du₁, du₂` over segment `seg` of the `H⁺` boundary.
pub fn du_segment(branch: &[f64; 6], coeffs: &Mat2, seg: usize, tol: f64) -> Result<CVec2> {
    let p1 = [coeffs[(1, 0)], coeffs[(0, 0)]];
    let p2 = [coeffs[(1, 1)], coeffs[(0, 1)]];
    let v = quad::segment_integrals(branch, &[&p1, &p2], seg, tol)?;
    Ok(CVec2::new(v[0], v[1]))
}

/// `Π = iΩ` together with a theta evaluator.
#[derive(Debug, Clone)]
pub struct Jacobian {
    omega: Mat2,
    theta: Theta,
}

impl Jacobian {
    pub fn new(omega: Mat2, cfg: ThetaConfig) -> Result<Self> {
        Ok(Jacobian { omega, theta: Theta::from_omega(&omega, cfg)? })
    }

    pub fn omega(&self) -> &Mat2 {
        &self.omega
    }

    pub fn theta(&self) -> &Theta {
        &self.theta
    }

    /// Whether `0 < Ω₁₂ < min(Ω₁₁, Ω₂₂)`.
    pub fn in_cone(&self) -> bool {
        in_cone(&self.omega)
    }

    /// The half-period `u(p_s)` on the boundary of `H⁺`.
    pub fn half_period(&self, s: u8) -> Result<CVec2> {
        let o = &self.omega;
        let (a1, a2) = (o[(0, 0)], o[(1, 0)]);
        let (b1, b2) = (o[(0, 1)], o[(1, 1)]);
        Ok(match s {
            1 => CVec2::zeros(),
            2 => CVec2::new(c(0.0, -0.5 * a1), c(0.0, -0.5 * a2)),
            3 => CVec2::new(c(0.5, -0.5 * a1), c(0.0, -0.5 * a2)),
            4 => CVec2::new(c(0.5, -0.5 * b1), c(0.0, -0.5 * b2)),
            5 => CVec2::new(c(0.5, -0.5 * b1), c(0.5, -0.5 * b2)),
            6 => rvec(0.5, 0.5),
            _ => return Err(Error::BadLabel(s)),
        })
    }

    /// Residual of `u` modulo the lattice `Z² + ΠZ²`.
    pub fn lattice_residual(&self, u: &CVec2) -> CVec2 {
        match RealChar::from_point(u, &self.omega) {
            Ok(rc) => {
                let r = RealChar {
                    eps: rc.eps.map(|e| e - 2.0 * (e / 2.0).round()),
                    epsp: rc.epsp.map(|e| e - 2.0 * (e / 2.0).round()),
                };
                r.to_point(&self.omega)
            }
            Err(_) => *u,
        }
    }

    pub fn lattice_distance(&self, u: &CVec2, v: &CVec2) -> f64 {
        self.lattice_residual(&(u - v)).norm()
    }

    pub fn tile(&self, u: &CVec2, tol: f64) -> TileLabel {
        crate::theta::tile_of(u, &self.omega, tol)
    }

    /// `θ[35](u)` relative to the largest term of its series.
    pub fn divisor_residual(&self, u: &CVec2) -> Result<f64> {
        let v = self.theta.eval(&riemann_constant().to_real(), u)?;
        Ok(v.value.norm() / v.scale)
    }

    fn theta_const_sq(&self, ch: &str) -> Result<C64> {
        let ic: IntChar = ch.parse()?;
        let v = self.theta.constant(ic)?;
        if v.norm() < HUMBERT_EPS {
            return Err(Error::HumbertDegenerate(ic.to_string()));
        }
        Ok(v * v)
    }

    /// Branch points `(x₃, x₄, x₅)` in the chart `x₁ = 0, x₂ = 1, x₆ = ∞`.
    pub fn rosenhain(&self) -> Result<[f64; 3]> {
        let t = |s: &str| self.theta_const_sq(s);
        let x3 = t("[00;00]")? * t("[00;01]")? / (t("[01;00]")? * t("[01;01]")?);
        let x4 = t("[00;01]")? * t("[10;10]")? / (t("[01;00]")? * t("[11;11]")?);
        let x5 = t("[00;00]")? * t("[10;10]")? / (t("[11;11]")? * t("[01;01]")?);
        let out = [x3.re, x4.re, x5.re];
        if !(1.0 < out[0] && out[0] < out[1] && out[1] < out[2] && out[2].is_finite()) {
            return Err(Error::LeftValidRegion(format!("Rosenhain branch points {out:?} are not ordered")));
        }
        Ok(out)
    }

    /// `(1 − x₃, 1 − x₄, 1 − x₅)` from the second normalization of the projection.
    pub fn rosenhain_alt(&self) -> Result<[f64; 3]> {
        let t = |s: &str| self.theta_const_sq(s);
        let y3 = -(t("[10;00]")? * t("[10;01]")?) / (t("[01;00]")? * t("[01;01]")?);
        let y4 = -(t("[00;10]")? * t("[10;01]")?) / (t("[01;00]")? * t("[11;11]")?);
        let y5 = -(t("[00;10]")? * t("[10;00]")?) / (t("[11;11]")? * t("[01;01]")?);
        Ok([y3.re, y4.re, y5.re])
    }

    /// The degree-2 projection normalized by `x(p_s)=0, x(p_j)=1, x(p_l)=∞`.
    pub fn projection(&self, norm: Norm) -> Result<Projection> {
        Projection::new(self, norm)
    }
}

const HUMBERT_EPS: f64 = 1e-10;

pub fn in_cone(o: &Mat2) -> bool {
    (o[(0, 1)] - o[(1, 0)]).abs() <= 1e-9 * o.norm() && 0.0 < o[(0, 1)] && o[(0, 1)] < o[(0, 0)].min(o[(1, 1)])
}

/// Branch labels `(s, j, l, k)` of a projection; `k` is auxiliary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Norm {
    pub s: u8,
    pub j: u8,
    pub l: u8,
    pub k: u8,
}

impl Norm {
    pub const STANDARD: Norm = Norm { s: 1, j: 2, l: 6, k: 3 };

    pub fn new(s: u8, j: u8, l: u8, k: u8) -> Result<Self> {
        let n = Norm { s, j, l, k };
        let labels = [s, j, l, k];
        if let Some(&bad) = labels.iter().find(|&&x| !(1..=6).contains(&x)) {
            return Err(Error::BadLabel(bad));
        }
        let distinct = (0..4).all(|a| (a + 1..4).all(|b| labels[a] != labels[b]));
        if !distinct {
            return Err(Error::BadNorm(format!("labels {labels:?} must be distinct")));
        }
        Ok(n)
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<u8> = s
            .split(',')
            .map(|p| p.trim().parse::<u8>().map_err(|_| Error::BadNorm(format!("cannot parse {s:?}"))))
            .collect::<Result<_>>()?;
        match parts[..] {
            [a, b, c, d] => Norm::new(a, b, c, d),
            _ => Err(Error::BadNorm(format!("expected four labels s,j,l,k in {s:?}"))),
        }
    }
}

/// `x(p) = ±(θ²[lkj35]/θ²[skj35])·(θ²[sk35](u)/θ²[lk35](u))`.
#[derive(Debug, Clone)]
pub struct Projection {
    norm: Norm,
    num: RealChar,
    den: RealChar,
    factor: C64,
    theta: Theta,
}

impl Projection {
    pub fn new(jac: &Jacobian, norm: Norm) -> Result<Self> {
        let Norm { s, j, l, k } = Norm::new(norm.s, norm.j, norm.l, norm.k)?;
        let th = jac.theta();
        let cst = |idx: &[u8]| -> Result<C64> {
            let ch = char_from_indices(idx)?;
            let v = th.constant(ch)?;
            if v.norm() < HUMBERT_EPS {
                return Err(Error::HumbertDegenerate(ch.to_string()));
            }
            Ok(v * v)
        };
        let ratio = cst(&[l, k, j, 3, 5])? / cst(&[s, k, j, 3, 5])?;
        // reduction of characteristics mod 2 can only flip the sign
        let e_j = IntChar::branch_point(j)?.eps;
        let ep_s = IntChar::branch_point(s)?.epsp;
        let ep_l = IntChar::branch_point(l)?.epsp;
        let dot = (e_j[0] * (ep_s[0] ^ ep_l[0]) + e_j[1] * (ep_s[1] ^ ep_l[1])) % 2;
        let sign = if dot == 0 { 1.0 } else { -1.0 };
        let p = Projection {
            norm,
            num: char_from_indices(&[s, k, 3, 5])?.to_real(),
            den: char_from_indices(&[l, k, 3, 5])?.to_real(),
            factor: ratio * sign,
            theta: th.clone(),
        };
        let at_j = p.eval(&jac.half_period(j)?)?;
        if (at_j - 1.0).norm() > 1e-6 {
            return Err(Error::SignCheckFailed(format!("{at_j}")));
        }
        Ok(p)
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn eval(&self, u: &CVec2) -> Result<C64> {
        let a = self.theta.eval(&self.num, u)?;
        let b = self.theta.eval(&self.den, u)?;
        if b.value.norm() <= 1e-14 * b.scale {
            return Err(Error::DenominatorZero);
        }
        let q = a.value / b.value;
        Ok(self.factor * q * q)
    }

    /// Value and gradient in `u`.
    pub fn eval_grad(&self, u: &CVec2) -> Result<(C64, CVec2)> {
        let a = self.theta.eval(&self.num, u)?;
        let b = self.theta.eval(&self.den, u)?;
        if b.value.norm() <= 1e-14 * b.scale {
            return Err(Error::DenominatorZero);
        }
        let q = a.value / b.value;
        let x = self.factor * q * q;
        let g = (a.grad / a.value - b.grad / b.value) * (x * 2.0);
        Ok((x, g))
    }

    /// Numerator and denominator thetas `θ[sk35](u), θ[lk35](u)` with gradients.
    pub(crate) fn parts(&self, u: &CVec2) -> Result<(crate::theta::ThetaValue, crate::theta::ThetaValue)> {
        Ok((self.theta.eval(&self.num, u)?, self.theta.eval(&self.den, u)?))
    }

    pub(crate) fn factor(&self) -> C64 {
        self.factor
    }
}

/// Which lift of `x` is meant: `Plus` is the principal-product branch of `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sheet {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub x: C64,
    pub sheet: Sheet,
}

impl SurfacePoint {
    pub fn plus(x: C64) -> Self {
        SurfacePoint { x, sheet: Sheet::Plus }
    }
}

/// Periods and normalized differentials of a curve.
#[derive(Debug, Clone)]
pub struct PeriodData {
    pub jac: Jacobian,
    /// `du_j = (K₀ⱼ x + K₁ⱼ) dx/y` in the finite chart.
    pub coeffs: Mat2,
    /// Branch points in the finite chart.
    pub finite: [f64; 6],
    /// Map from the curve's chart to the finite chart.
    pub to_finite: Mobius,
    /// Characteristics of the half-periods `u(p₁..p₆)`.
    pub half_chars: [IntChar; 6],
    pub tol: f64,
}

impl PeriodData {
    pub fn omega(&self) -> &Mat2 {
        self.jac.omega()
    }

    /// `du(x)/dx` (both components) in the finite chart.
    pub fn du(&self, x: C64) -> CVec2 {
        let y = y_plus(&self.finite, x);
        let k = &self.coeffs;
        CVec2::new((x * k[(0, 0)] + k[(1, 0)]) / y, (x * k[(0, 1)] + k[(1, 1)]) / y)
    }

    /// Boundary integral of `du` between labelled branch points.
    pub fn segment(&self, seg: usize) -> Result<CVec2> {
        du_segment(&self.finite, &self.coeffs, seg, self.tol)
    }
}

/// Period matrix and differentials. Fails with `ConeViolation` if the
/// orientation conventions do not produce a matrix in the period cone.
pub fn period_matrix(curve: &Curve, tol: f64) -> Result<PeriodData> {
    period_matrix_with(curve, tol, ThetaConfig::default())
}

pub fn period_matrix_with(curve: &Curve, tol: f64, cfg: ThetaConfig) -> Result<PeriodData> {
    let (fc, to_finite) = curve.to_finite_chart()?;
    let finite = fc.finite_branch()?;
    let coeffs = normalize_differentials(&fc, tol)?;
    let i1 = du_segment(&finite, &coeffs, 1, tol)?;
    let i5 = du_segment(&finite, &coeffs, 5, tol)?;
    let r1 = i1.map(|z| z * c(0.0, 2.0));
    let r5 = i5.map(|z| z * c(0.0, -2.0));
    let re_part = r1.iter().chain(r5.iter()).map(|z| z.im.abs()).fold(0.0, f64::max);
    let mut omega = Mat2::new(r1[0].re, r1[1].re, r5[0].re, r5[1].re);
    let size = omega.norm();
    if re_part > 1e-8 * size {
        return Err(Error::NoConvergence {
            context: "period matrix",
            detail: format!("real part {re_part:.3e} of the period matrix"),
        });
    }
    let asym = (omega[(0, 1)] - omega[(1, 0)]).abs();
    if asym > 1e-8 * size {
        return Err(Error::NotSymmetric(asym));
    }
    let off = 0.5 * (omega[(0, 1)] + omega[(1, 0)]);
    omega[(0, 1)] = off;
    omega[(1, 0)] = off;
    if !in_cone(&omega) {
        return Err(Error::ConeViolation([omega[(0, 0)], omega[(0, 1)], omega[(1, 1)]]));
    }
    let jac = Jacobian::new(omega, cfg)?;
    let half_chars = [1u8, 2, 3, 4, 5, 6].map(|s| IntChar::branch_point(s).expect("label in range"));
    Ok(PeriodData { jac, coeffs, finite, to_finite, half_chars, tol })
}

/// Abel–Jacobi image `∫_{p₁}^{p} du`.
///
/// Points over the open upper half plane on the `Plus` sheet use the straight
/// path from `x₁` (with `x = x₁ + (x − x₁)t²` at the branch point) and land in
/// the `H⁺` block; real points follow the boundary of `H⁺`; the other lifts
/// follow from `u(Jp) = −u(p)` and `u(p̄) = ū(p)`.
pub fn aj_point(pd: &PeriodData, p: SurfacePoint) -> Result<CVec2> {
    let x = pd.to_finite.apply(p.x);
    if !x.is_finite() {
        return Err(Error::InvalidCurve("point at infinity of the chart".into()));
    }
    let u = aj_finite(pd, x)?;
    Ok(match p.sheet {
        Sheet::Plus => u,
        Sheet::Minus => -u,
    })
}

/// Abel–Jacobi image for a point given in the finite chart (`Plus` sheet).
pub fn aj_finite(pd: &PeriodData, x: C64) -> Result<CVec2> {
    let b = &pd.finite;
    if let Some(s) = b.iter().position(|&bs| (x - bs).norm() <= 1e-15 * (1.0 + bs.abs())) {
        return pd.jac.half_period(s as u8 + 1);
    }
    if x.im > 0.0 {
        let k = &pd.coeffs;
        let v = quad::from_branch_point(
            c(b[0], 0.0),
            x,
            |z, r| {
                let y = r * b[1..].iter().map(|bs| (z - bs).sqrt()).product::<C64>();
                [(z * k[(0, 0)] + k[(1, 0)]) / y, (z * k[(0, 1)] + k[(1, 1)]) / y]
            },
            pd.tol * 0.1,
        )?;
        Ok(CVec2::new(v[0], v[1]))
    } else if x.im < 0.0 {
        Ok(aj_finite(pd, x.conj())?.map(|z| z.conj()))
    } else {
        aj_real(pd, x.re)
    }
}

/// Abel–Jacobi image of a real point, reached along the boundary of `H⁺`.
pub fn aj_real(pd: &PeriodData, x: f64) -> Result<CVec2> {
    let b = &pd.finite;
    let k = &pd.coeffs;
    let tol = pd.tol * 0.1;
    // ∫ du from the branch point `b[from]` to `to` along the real axis, where `y = phase·√|P|`
    let run = |from: usize, to: f64, phase: C64| -> Result<CVec2> {
        let v = quad::from_branch_point(
            c(b[from], 0.0),
            c(to, 0.0),
            |z, r| {
                let t = z.re;
                let rest: f64 = (0..6).filter(|&j| j != from).map(|j| (t - b[j]).abs()).product();
                let w = 1.0 / (r.norm() * rest.sqrt());
                [c((k[(0, 0)] * t + k[(1, 0)]) * w, 0.0) / phase, c((k[(0, 1)] * t + k[(1, 1)]) * w, 0.0) / phase]
            },
            tol,
        )?;
        Ok(CVec2::new(v[0], v[1]))
    };
    if x < b[0] {
        // leftwards from p₁ along the third oval, where y = −√P
        run(0, x, c(-1.0, 0.0))
    } else if x > b[5] {
        Ok(pd.jac.half_period(6)? + run(5, x, c(1.0, 0.0))?)
    } else {
        let s = (0..5).find(|&s| x < b[s + 1]).unwrap_or(4);
        let phase = C64::i().powi(6 - (s as i32 + 1));
        let base = pd.jac.half_period(s as u8 + 1)?;
        if x == b[s] {
            return Ok(base);
        }
        // integrate from the nearer end to keep the endpoint singularity at the start
        if x - b[s] <= b[s + 1] - x {
            Ok(base + run(s, x, phase)?)
        } else {
            let next = pd.jac.half_period(s as u8 + 2)?;
            Ok(next + run(s + 1, x, phase)?)
        }
    }
}

/// Abel–Jacobi image of the marked point `p₀` (real, in `(0, ½)²`).
pub fn aj_marked(curve: &Curve, pd: &PeriodData) -> Result<CVec2> {
    let x0 = curve.marked().ok_or_else(|| Error::InvalidCurve("no marked point".into()))?;
    let xf = pd.to_finite.apply_real(x0);
    aj_real(pd, xf)
}
