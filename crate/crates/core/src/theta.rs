//! Genus-2 Riemann theta functions with characteristics.
//!
//! The series is summed over an ellipse centred on the dominant term. The
//! radius comes from a Gaussian tail bound, so the truncation error is bounded
//! by `tol` relative to the largest term (the `scale` of the evaluation).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::{c, CMat2, CVec2, Mat2, C64};

use std::f64::consts::PI;

/// Even or odd characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Integer characteristic `[2ε, 2ε′]` reduced mod 2.
///
/// `eps` is the first column of the 2×2 array notation and `epsp` the second;
/// the corresponding Jacobian point is `½(Πε + ε′)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct IntChar {
    pub eps: [u8; 2],
    pub epsp: [u8; 2],
}

impl IntChar {
    pub const ZERO: IntChar = IntChar { eps: [0, 0], epsp: [0, 0] };

    pub fn new(eps: [u8; 2], epsp: [u8; 2]) -> Self {
        IntChar {
            eps: [eps[0] & 1, eps[1] & 1],
            epsp: [epsp[0] & 1, epsp[1] & 1],
        }
    }

    /// Characteristic of the half-period `u(p_s)` of branch point `s`.
    pub fn branch_point(label: u8) -> Result<Self> {
        let (e, ep) = match label {
            1 => ([0, 0], [0, 0]),
            2 => ([1, 0], [0, 0]),
            3 => ([1, 0], [1, 0]),
            4 => ([0, 1], [1, 0]),
            5 => ([0, 1], [1, 1]),
            6 => ([0, 0], [1, 1]),
            _ => return Err(Error::BadLabel(label)),
        };
        Ok(IntChar::new(e, ep))
    }

    pub fn parity(self) -> Parity {
        char_parity(self)
    }

    pub fn is_odd(self) -> bool {
        self.parity() == Parity::Odd
    }

    /// All sixteen characteristics, ordered by their bit pattern.
    pub fn all() -> impl Iterator<Item = IntChar> {
        (0u8..16).map(|b| IntChar::new([b >> 3, b >> 2], [b >> 1, b]))
    }

    pub fn to_real(self) -> RealChar {
        RealChar {
            eps: [self.eps[0] as f64, self.eps[1] as f64],
            epsp: [self.epsp[0] as f64, self.epsp[1] as f64],
        }
    }
}

impl std::ops::Add for IntChar {
    type Output = IntChar;
    fn add(self, o: IntChar) -> IntChar {
        IntChar {
            eps: [self.eps[0] ^ o.eps[0], self.eps[1] ^ o.eps[1]],
            epsp: [self.epsp[0] ^ o.epsp[0], self.epsp[1] ^ o.epsp[1]],
        }
    }
}

/// Rows of the array notation: `[ε₁ε′₁;ε₂ε′₂]`.
impl fmt::Display for IntChar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}{};{}{}]",
            self.eps[0], self.epsp[0], self.eps[1], self.epsp[1]
        )
    }
}

impl FromStr for IntChar {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidCurve(format!("cannot parse characteristic {s:?}"));
        let body = s.trim().trim_start_matches('[').trim_end_matches(']');
        let digits: Vec<u8> = body
            .chars()
            .filter(|ch| !matches!(ch, ';' | '\\' | ' '))
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(bad()),
            })
            .collect::<Result<_>>()?;
        if digits.len() != 4 {
            return Err(bad());
        }
        Ok(IntChar::new([digits[0], digits[2]], [digits[1], digits[3]]))
    }
}

/// Real characteristic: the point `u = ½(Πε + ε′)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RealChar {
    pub eps: [f64; 2],
    pub epsp: [f64; 2],
}

impl RealChar {
    /// Coordinates of `u` with respect to `Π = iΩ`: `ε′ = 2 Re u`, `ε = Ω⁻¹·2 Im u`.
    pub fn from_point(u: &CVec2, omega: &Mat2) -> Result<Self> {
        let inv = omega
            .try_inverse()
            .ok_or(Error::SingularSystem("characteristic of a point"))?;
        let e = inv * nalgebra::Vector2::new(2.0 * u[0].im, 2.0 * u[1].im);
        Ok(RealChar {
            eps: [e[0], e[1]],
            epsp: [2.0 * u[0].re, 2.0 * u[1].re],
        })
    }

    /// The point `½(iΩε + ε′)`.
    pub fn to_point(&self, omega: &Mat2) -> CVec2 {
        let e = omega * nalgebra::Vector2::new(self.eps[0], self.eps[1]);
        CVec2::new(
            c(0.5 * self.epsp[0], 0.5 * e[0]),
            c(0.5 * self.epsp[1], 0.5 * e[1]),
        )
    }

    /// The integer characteristic if all entries are exactly 0 or 1.
    pub fn as_int(&self) -> Option<IntChar> {
        let bit = |v: f64| {
            if v == 0.0 {
                Some(0u8)
            } else if v == 1.0 {
                Some(1u8)
            } else {
                None
            }
        };
        Some(IntChar::new(
            [bit(self.eps[0])?, bit(self.eps[1])?],
            [bit(self.epsp[0])?, bit(self.epsp[1])?],
        ))
    }

    /// Entries reduced mod 2 into `(-1, 1]`.
    pub fn reduced(&self) -> RealChar {
        RealChar {
            eps: self.eps.map(reduce_mod2),
            epsp: self.epsp.map(reduce_mod2),
        }
    }
}

impl From<IntChar> for RealChar {
    fn from(ch: IntChar) -> Self {
        ch.to_real()
    }
}

/// `v` mod 2 in `(-1, 1]`.
pub fn reduce_mod2(v: f64) -> f64 {
    let r = v - 2.0 * (v / 2.0).round();
    if r <= -1.0 {
        r + 2.0
    } else {
        r
    }
}

/// A symmetric complex matrix with positive definite imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannMatrix {
    pi: CMat2,
    y: Mat2,
    y_inv: Mat2,
    /// `√det Y`: covolume of the lattice in the metric of `Y`.
    covol: f64,
    /// Largest `Y`-length of the two short diagonals, a lattice covering bound.
    diam: f64,
}

impl RiemannMatrix {
    pub fn new(pi: CMat2) -> Result<Self> {
        let asym = (pi[(0, 1)] - pi[(1, 0)]).norm();
        let size = pi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > 1e-12 * size.max(1.0) || !asym.is_finite() {
            return Err(Error::NotSymmetric(asym));
        }
        let mut pi = pi;
        let off = (pi[(0, 1)] + pi[(1, 0)]) * 0.5;
        pi[(0, 1)] = off;
        pi[(1, 0)] = off;
        let y = pi.map(|z| z.im);
        let det = y.determinant();
        if !(y[(0, 0)] > 0.0 && det > 0.0) {
            return Err(Error::NonPositiveDefinite);
        }
        let y_inv = y.try_inverse().ok_or(Error::NonPositiveDefinite)?;
        let ylen = |a: f64, b: f64| (y[(0, 0)] * a * a + 2.0 * y[(0, 1)] * a * b + y[(1, 1)] * b * b).sqrt();
        Ok(RiemannMatrix {
            pi,
            y,
            y_inv,
            covol: det.sqrt(),
            diam: ylen(1.0, 1.0).max(ylen(1.0, -1.0)),
        })
    }

    /// `Π = iΩ` for a real matrix `Ω`.
    pub fn from_omega(omega: &Mat2) -> Result<Self> {
        RiemannMatrix::new(omega.map(|v| c(0.0, v)))
    }

    pub fn pi(&self) -> &CMat2 {
        &self.pi
    }

    pub fn im(&self) -> &Mat2 {
        &self.y
    }

    /// Bound on the truncated tail relative to the largest term, for radius `r`.
    fn tail_bound(&self, r: f64) -> f64 {
        let d = self.diam;
        PI / self.covol
            * (-PI * r * r).exp()
            * (r * r + 1.0 / PI + d * r + d / (2.0 * PI * r) + d * d / 4.0)
    }

    /// Smallest radius (on a 1/16 grid) whose tail bound is below `tol`.
    /// The cap applies to the extent of the summation ellipse in lattice units.
    fn radius_for(&self, tol: f64, cap: f64) -> Result<f64> {
        let stretch = self.y_inv.symmetric_eigenvalues().max().sqrt();
        let mut r = 1.0;
        while self.tail_bound(r) >= tol {
            r += 0.0625;
            if r * stretch > cap {
                return Err(Error::NoConvergence {
                    context: "theta series",
                    detail: format!("truncation radius exceeds cap {cap}"),
                });
            }
        }
        Ok(r)
    }
}

/// Truncation control for theta evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaConfig {
    /// Truncation error relative to the largest term.
    pub tol: f64,
    /// Hard cap on the summation radius.
    pub max_radius: f64,
    /// Re-sum the shell between `R` and `2R` and require it to be below `tol`.
    pub verify: bool,
}

impl Default for ThetaConfig {
    fn default() -> Self {
        ThetaConfig {
            tol: 1e-13,
            max_radius: 60.0,
            verify: false,
        }
    }
}

/// Value and gradient of one theta evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaValue {
    pub value: C64,
    pub grad: CVec2,
    /// Magnitude bound of the largest term in the series.
    pub scale: f64,
}

/// A theta function bound to one Riemann matrix and truncation rule.
#[derive(Debug, Clone)]
pub struct Theta {
    m: RiemannMatrix,
    cfg: ThetaConfig,
    radius: f64,
    grad_radius: f64,
}

impl Theta {
    pub fn new(m: RiemannMatrix, cfg: ThetaConfig) -> Result<Self> {
        if !(cfg.tol > 0.0) {
            return Err(Error::NoConvergence {
                context: "theta series",
                detail: "tolerance must be positive".into(),
            });
        }
        let radius = m.radius_for(cfg.tol, cfg.max_radius)?;
        // derivative terms carry an extra factor 2π|n|
        let grad_radius = m.radius_for(cfg.tol / (2.0 * PI * (radius + 4.0)), cfg.max_radius)?;
        Ok(Theta { m, cfg, radius, grad_radius })
    }

    pub fn from_omega(omega: &Mat2, cfg: ThetaConfig) -> Result<Self> {
        Theta::new(RiemannMatrix::from_omega(omega)?, cfg)
    }

    pub fn matrix(&self) -> &RiemannMatrix {
        &self.m
    }

    pub fn config(&self) -> &ThetaConfig {
        &self.cfg
    }

    /// `θ(u, Π)`.
    pub fn value(&self, u: &CVec2) -> Result<C64> {
        self.char_value(&RealChar::default(), u)
    }

    /// `θ[ε,ε′](u, Π)`.
    pub fn char_value(&self, ch: &RealChar, u: &CVec2) -> Result<C64> {
        if is_odd_at_origin(ch, u) {
            return Ok(C64::new(0.0, 0.0));
        }
        Ok(self.sum(ch, u, false)?.value)
    }

    /// Value, gradient and scale of `θ[ε,ε′](u, Π)`.
    pub fn eval(&self, ch: &RealChar, u: &CVec2) -> Result<ThetaValue> {
        let mut v = self.sum(ch, u, true)?;
        if is_odd_at_origin(ch, u) {
            v.value = C64::new(0.0, 0.0);
        }
        Ok(v)
    }

    pub fn grad(&self, ch: &RealChar, u: &CVec2) -> Result<CVec2> {
        Ok(self.sum(ch, u, true)?.grad)
    }

    /// Theta constant `θ[c](0, Π)`.
    pub fn constant(&self, ch: IntChar) -> Result<C64> {
        self.char_value(&ch.to_real(), &CVec2::zeros())
    }

    fn sum(&self, ch: &RealChar, u: &CVec2, with_grad: bool) -> Result<ThetaValue> {
        let r = if with_grad { self.grad_radius } else { self.radius };
        let v = self.shell(ch, u, 0.0, r, with_grad);
        if self.cfg.verify {
            let tail = self.shell(ch, u, r, 2.0 * r, with_grad);
            let tail_rel = (tail.value.norm() + tail.grad.norm()) / v.scale;
            if !(tail_rel < self.cfg.tol) {
                return Err(Error::NoConvergence {
                    context: "theta series",
                    detail: format!("tail {tail_rel:.3e} above tolerance"),
                });
            }
        }
        if !v.value.is_finite() || !v.scale.is_finite() {
            return Err(Error::NoConvergence {
                context: "theta series",
                detail: "overflow (argument far outside the fundamental domain)".into(),
            });
        }
        Ok(v)
    }

    /// Sum of the terms `n = m + ε/2` with `r_in² < |n + k|²_Y ≤ r_out²`, where
    /// `-k` is the centre of the Gaussian envelope.
    fn shell(&self, ch: &RealChar, u: &CVec2, r_in: f64, r_out: f64, with_grad: bool) -> ThetaValue {
        let m = &self.m;
        let y = &m.y;
        let pi = &m.pi;
        let a = [0.5 * ch.eps[0], 0.5 * ch.eps[1]];
        let v = [u[0] + 0.5 * ch.epsp[0], u[1] + 0.5 * ch.epsp[1]];
        let imv = nalgebra::Vector2::new(v[0].im, v[1].im);
        let k = m.y_inv * imv;
        let log_scale = PI * k.dot(&(y * k));
        // shifted lattice point relative to the centre: n + k = m + a + k
        let d = [a[0] + k[0], a[1] + k[1]];
        let half2 = r_out * m.y_inv[(1, 1)].sqrt();
        let m2_lo = (-half2 - d[1]).ceil() as i64;
        let m2_hi = (half2 - d[1]).floor() as i64;
        let mut total = C64::new(0.0, 0.0);
        let mut g0 = C64::new(0.0, 0.0);
        let mut g1 = C64::new(0.0, 0.0);
        let (y11, y12, y22) = (y[(0, 0)], y[(0, 1)], y[(1, 1)]);
        let r2_out = r_out * r_out;
        let r2_in = r_in * r_in;
        for m2 in m2_lo..=m2_hi {
            let z = m2 as f64 + d[1];
            let disc = y12 * y12 * z * z - y11 * (y22 * z * z - r2_out);
            if disc < 0.0 {
                continue;
            }
            let sq = disc.sqrt();
            let lo = ((-y12 * z - sq) / y11 - d[0]).ceil() as i64;
            let hi = ((-y12 * z + sq) / y11 - d[0]).floor() as i64;
            let n2 = m2 as f64 + a[1];
            for m1 in lo..=hi {
                let x = m1 as f64 + d[0];
                let q = y11 * x * x + 2.0 * y12 * x * z + y22 * z * z;
                if q <= r2_in && r_in > 0.0 {
                    continue;
                }
                let n1 = m1 as f64 + a[0];
                // iπ nᵗΠn + 2πi nᵗv, with the Gaussian envelope factored out
                let quad = pi[(0, 0)] * (n1 * n1) + pi[(0, 1)] * (2.0 * n1 * n2) + pi[(1, 1)] * (n2 * n2);
                let lin = v[0] * n1 + v[1] * n2;
                let e = C64::i() * PI * (quad + lin * 2.0) - log_scale;
                let t = e.exp();
                total += t;
                if with_grad {
                    g0 += t * n1;
                    g1 += t * n2;
                }
            }
        }
        let scale = log_scale.exp();
        let gfac = C64::i() * (2.0 * PI) * scale;
        ThetaValue {
            value: total * scale,
            grad: CVec2::new(g0 * gfac, g1 * gfac),
            scale,
        }
    }
}

fn is_odd_at_origin(ch: &RealChar, u: &CVec2) -> bool {
    u.iter().all(|z| *z == C64::new(0.0, 0.0)) && ch.as_int().is_some_and(|ic| ic.is_odd())
}

/// `θ(u, Π)` truncated to relative error `tol`.
pub fn theta(u: &CVec2, pi: &RiemannMatrix, tol: f64) -> Result<C64> {
    Theta::new(pi.clone(), ThetaConfig { tol, ..Default::default() })?.value(u)
}

/// `θ[ε,ε′](u, Π)` by shifted summation.
pub fn theta_char(ch: &RealChar, u: &CVec2, pi: &RiemannMatrix, tol: f64) -> Result<C64> {
    Theta::new(pi.clone(), ThetaConfig { tol, ..Default::default() })?.char_value(ch, u)
}

/// Gradient `∂θ[ε,ε′]/∂u`.
pub fn theta_grad(ch: &RealChar, u: &CVec2, pi: &RiemannMatrix, tol: f64) -> Result<CVec2> {
    Theta::new(pi.clone(), ThetaConfig { tol, ..Default::default() })?.grad(ch, u)
}

/// Theta constant `θ[c](0, Π)`; exactly zero for odd `c`.
pub fn theta_const(ch: IntChar, pi: &RiemannMatrix, tol: f64) -> Result<C64> {
    Theta::new(pi.clone(), ThetaConfig { tol, ..Default::default() })?.constant(ch)
}

/// Mod-2 sum of the half-period characteristics of the given branch labels.
pub fn char_from_indices(indices: &[u8]) -> Result<IntChar> {
    indices
        .iter()
        .try_fold(IntChar::ZERO, |acc, &s| Ok(acc + IntChar::branch_point(s)?))
}

pub fn char_parity(ch: IntChar) -> Parity {
    if (ch.eps[0] * ch.epsp[0] + ch.eps[1] * ch.epsp[1]).is_multiple_of(2) {
        Parity::Even
    } else {
        Parity::Odd
    }
}

/// Characteristic `[35]` of the vector of Riemann constants.
pub fn riemann_constant() -> IntChar {
    IntChar::new([1, 1], [0, 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn of(v: f64) -> Sign {
        if v > 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// Which of the sixteen blocks of the Jacobian a point lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileLabel {
    pub sigma_eps: [Sign; 2],
    pub sigma_epsp: [Sign; 2],
    pub boundary: bool,
}

impl TileLabel {
    /// The block `ε ∈ (-1,0)², ε′ ∈ (0,1)²` containing the upper sheet `H⁺`.
    pub const H_PLUS: TileLabel = TileLabel {
        sigma_eps: [Sign::Minus, Sign::Minus],
        sigma_epsp: [Sign::Plus, Sign::Plus],
        boundary: false,
    };

    pub fn is_h_plus(&self) -> bool {
        !self.boundary
            && self.sigma_eps == TileLabel::H_PLUS.sigma_eps
            && self.sigma_epsp == TileLabel::H_PLUS.sigma_epsp
    }
}

/// Tile of `u` for `Π = iΩ`.
pub fn tile_of(u: &CVec2, omega: &Mat2, tol: f64) -> TileLabel {
    let rc = match RealChar::from_point(u, omega) {
        Ok(rc) => rc.reduced(),
        Err(_) => {
            return TileLabel {
                sigma_eps: [Sign::Plus; 2],
                sigma_epsp: [Sign::Plus; 2],
                boundary: true,
            }
        }
    };
    let near = |v: f64| v.abs() <= tol || (v.abs() - 1.0).abs() <= tol;
    let boundary = rc.eps.iter().chain(rc.epsp.iter()).any(|&v| near(v));
    TileLabel {
        sigma_eps: rc.eps.map(Sign::of),
        sigma_epsp: rc.epsp.map(Sign::of),
        boundary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{cvec, rvec};

    fn brute(ch: &RealChar, u: &CVec2, pi: &CMat2, n: i64) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for m1 in -n..=n {
            for m2 in -n..=n {
                let a = m1 as f64 + ch.eps[0] / 2.0;
                let b = m2 as f64 + ch.eps[1] / 2.0;
                let q = pi[(0, 0)] * a * a + pi[(0, 1)] * 2.0 * a * b + pi[(1, 1)] * b * b;
                let l = (u[0] + ch.epsp[0] / 2.0) * a + (u[1] + ch.epsp[1] / 2.0) * b;
                s += (C64::i() * PI * (q + l * 2.0)).exp();
            }
        }
        s
    }

    fn omega0() -> Mat2 {
        Mat2::new(2.0, 0.5, 0.5, 1.5)
    }

    #[test]
    fn diagonal_matrix_at_origin_is_one() {
        let m = RiemannMatrix::from_omega(&Mat2::new(10.0, 0.0, 0.0, 10.0)).unwrap();
        let v = theta(&CVec2::zeros(), &m, 1e-13).unwrap();
        assert!((v - 1.0).norm() < 1e-12);
    }

    #[test]
    fn matches_brute_force_sum() {
        let m = RiemannMatrix::from_omega(&omega0()).unwrap();
        let u = cvec(c(0.1, 0.2), c(0.3, 0.0));
        let got = theta(&u, &m, 1e-13).unwrap();
        let want = brute(&RealChar::default(), &u, m.pi(), 30);
        assert!((got - want).norm() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn real_argument_gives_real_value() {
        let m = RiemannMatrix::from_omega(&omega0()).unwrap();
        let v = theta(&rvec(0.31, -0.72), &m, 1e-13).unwrap();
        assert!(v.im.abs() < 1e-13);
    }

    #[test]
    fn characteristic_matches_shift_identity() {
        let m = RiemannMatrix::from_omega(&omega0()).unwrap();
        let th = Theta::new(m.clone(), ThetaConfig::default()).unwrap();
        let ch = RealChar { eps: [0.3, -0.7], epsp: [0.25, 1.5] };
        let u = cvec(c(0.1, -0.05), c(-0.2, 0.1));
        let direct = th.char_value(&ch, &u).unwrap();
        let pi = m.pi();
        let e = nalgebra::Vector2::new(c(ch.eps[0], 0.0), c(ch.eps[1], 0.0));
        let pe = pi * e;
        let pref = C64::i() * PI * (e.dot(&pe) * 0.25)
            + C64::i() * PI * (e[0] * (u[0] + ch.epsp[0] * 0.5) + e[1] * (u[1] + ch.epsp[1] * 0.5));
        // θ[ε,ε′](u) = exp(iπ(ε/2)ᵗΠ(ε/2) + 2πi(ε/2)ᵗ(u+ε′/2))·θ(u + Πε/2 + ε′/2)
        let half = CVec2::new(
            u[0] + pe[0] * 0.5 + ch.epsp[0] * 0.5,
            u[1] + pe[1] * 0.5 + ch.epsp[1] * 0.5,
        );
        let via_shift = pref.exp() * th.value(&half).unwrap();
        assert!((direct - via_shift).norm() < 1e-12 * direct.norm().max(1.0));
    }

    #[test]
    fn zero_characteristic_is_plain_theta() {
        let m = RiemannMatrix::from_omega(&omega0()).unwrap();
        let u = cvec(c(0.4, 0.1), c(-0.1, 0.3));
        let a = theta(&u, &m, 1e-13).unwrap();
        let b = theta_char(&IntChar::ZERO.to_real(), &u, &m, 1e-13).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn odd_constants_vanish_exactly() {
        let m = RiemannMatrix::from_omega(&omega0()).unwrap();
        for ch in IntChar::all().filter(|c| c.is_odd()) {
            assert_eq!(theta_const(ch, &m, 1e-13).unwrap(), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn even_constants_do_not_vanish_in_cone() {
        let m = RiemannMatrix::from_omega(&omega0()).unwrap();
        for ch in IntChar::all().filter(|c| !c.is_odd()) {
            assert!(theta_const(ch, &m, 1e-13).unwrap().norm() > 1e-3);
        }
    }

    #[test]
    fn parity_counts() {
        let odd = IntChar::all().filter(|c| c.is_odd()).count();
        assert_eq!(odd, 6);
        assert_eq!(IntChar::all().count() - odd, 10);
        assert_eq!(char_parity(IntChar::ZERO), Parity::Even);
    }

    #[test]
    fn characteristics_from_branch_labels() {
        let k = char_from_indices(&[3, 5]).unwrap();
        assert_eq!(k, IntChar::new([1, 1], [0, 1]));
        assert_eq!(k, riemann_constant());
        assert_eq!(k.parity(), Parity::Odd);
        assert_eq!(k.to_string(), "[10;11]");
        assert_eq!(char_from_indices(&[2]).unwrap(), IntChar::new([1, 0], [0, 0]));
        assert_eq!(char_from_indices(&[]).unwrap(), IntChar::ZERO);
        assert_eq!(char_from_indices(&[1]).unwrap(), IntChar::ZERO);
        assert!(matches!(char_from_indices(&[7]), Err(Error::BadLabel(7))));
        assert_eq!("[10;11]".parse::<IntChar>().unwrap(), k);
        assert_eq!("[10\\11]".parse::<IntChar>().unwrap(), k);
    }

    #[test]
    fn gradient_of_even_function_vanishes_at_origin() {
        let m = RiemannMatrix::from_omega(&omega0()).unwrap();
        for ch in IntChar::all().filter(|c| !c.is_odd()) {
            let g = theta_grad(&ch.to_real(), &CVec2::zeros(), &m, 1e-13).unwrap();
            assert!(g.norm() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_central_difference() {
        let m = RiemannMatrix::from_omega(&omega0()).unwrap();
        let th = Theta::new(m, ThetaConfig::default()).unwrap();
        let ch = riemann_constant().to_real();
        let u = cvec(c(0.13, 0.21), c(-0.4, 0.05));
        let g = th.grad(&ch, &u).unwrap();
        let h = 1e-6;
        for j in 0..2 {
            let mut up = u;
            let mut dn = u;
            up[j] += h;
            dn[j] -= h;
            let fd = (th.char_value(&ch, &up).unwrap() - th.char_value(&ch, &dn).unwrap()) / (2.0 * h);
            assert!((fd - g[j]).norm() <= 1e-6 * g[j].norm().max(1.0));
        }
    }

    #[test]
    fn verify_mode_accepts_default_radius() {
        let m = RiemannMatrix::from_omega(&Mat2::new(0.6, 0.1, 0.1, 0.5)).unwrap();
        let cfg = ThetaConfig { verify: true, ..Default::default() };
        let th = Theta::new(m, cfg).unwrap();
        th.eval(&riemann_constant().to_real(), &cvec(c(0.3, 0.4), c(0.1, -0.2))).unwrap();
    }

    #[test]
    fn rejects_bad_matrices() {
        let bad = CMat2::new(c(0.0, 1.0), c(0.0, 2.0), c(0.0, 2.0), c(0.0, 1.0));
        assert!(matches!(RiemannMatrix::new(bad), Err(Error::NonPositiveDefinite)));
        let asym = CMat2::new(c(0.0, 1.0), c(0.0, 0.2), c(0.0, 0.3), c(0.0, 1.0));
        assert!(matches!(RiemannMatrix::new(asym), Err(Error::NotSymmetric(_))));
        let m = RiemannMatrix::from_omega(&Mat2::new(1e-4, 0.0, 0.0, 1e-4)).unwrap();
        assert!(Theta::new(m, ThetaConfig::default()).is_err());
    }

    #[test]
    fn tiles_from_definition() {
        let om = omega0();
        let rc = RealChar { eps: [-0.5, -0.5], epsp: [0.5, 0.5] };
        let t = tile_of(&rc.to_point(&om), &om, 1e-9);
        assert!(t.is_h_plus());
        let t = tile_of(&rvec(0.2, 0.3), &om, 1e-9);
        assert!(t.boundary);
    }
}
