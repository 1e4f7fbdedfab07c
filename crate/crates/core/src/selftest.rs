//! A quick battery of consistency checks on a reference configuration.
//!
//! Each check reports a residual and the threshold it must stay under.
//! Thresholds scale with the requested tolerance, so asking for more
//! accuracy than double precision allows makes the battery fail.

use std::f64::consts::PI;
use std::fmt;

use crate::curve::{aj_point, period_matrix, Curve, Norm, SurfacePoint};
use crate::heptagon::Heptagon;
use crate::mapper::{forward_sides, params_from, residuals, solve_parameters, ConformalMap, MapConfig, SolveOptions};
use crate::oracle::{cs_by_quadrature, curve_from_params, default_path, sides_by_quadrature, third_kind_check};
use crate::theta::{IntChar, RealChar, RiemannMatrix, Theta, ThetaConfig};
use crate::{c, CMat2, CVec2, Mat2, Result, C64};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
    /// Error message when the check could not be evaluated.
    pub error: Option<String>,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        match &self.error {
            Some(e) => write!(f, "{tag}  {:<40} error: {e}", self.name),
            None => write!(f, "{tag}  {:<40} residual {:.3e} (limit {:.1e})", self.name, self.residual, self.threshold),
        }
    }
}

/// All checks of one run.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ch in &self.checks {
            writeln!(f, "{ch}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

fn record(report: &mut Report, name: &'static str, threshold: f64, r: Result<f64>) {
    let check = match r {
        Ok(residual) => Check { name, residual, threshold, passed: residual <= threshold, error: None },
        Err(e) => Check { name, residual: f64::NAN, threshold, passed: false, error: Some(e.to_string()) },
    };
    report.checks.push(check);
}

fn brute_theta(ch: &RealChar, u: &CVec2, pi: &CMat2, n: i64) -> C64 {
    let mut s = c(0.0, 0.0);
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

fn theta_vs_brute_force() -> Result<f64> {
    let pi = CMat2::new(c(0.3, 1.1), c(-0.2, 0.4), c(-0.2, 0.4), c(0.1, 0.9));
    let th = Theta::new(RiemannMatrix::new(pi)?, ThetaConfig::default())?;
    let mut worst: f64 = 0.0;
    for (k, ch) in IntChar::all().enumerate() {
        let u = CVec2::new(c(0.1 * k as f64 - 0.4, 0.2), c(0.3, -0.05 * k as f64));
        let rc = ch.to_real();
        let v = th.char_value(&rc, &u)?;
        let b = brute_theta(&rc, &u, &pi, 30);
        worst = worst.max((v - b).norm() / b.norm().max(1.0));
    }
    Ok(worst)
}

fn odd_constants() -> Result<f64> {
    let omega = Mat2::new(1.2, 0.3, 0.3, 0.8);
    let th = Theta::from_omega(&omega, ThetaConfig::default())?;
    let pi = omega.map(|v| c(0.0, v));
    let mut worst: f64 = 0.0;
    for ch in IntChar::all().filter(|ch| ch.is_odd()) {
        worst = worst.max(th.constant(ch)?.norm());
        worst = worst.max(brute_theta(&ch.to_real(), &CVec2::zeros(), &pi, 30).norm());
    }
    Ok(worst)
}

fn test_curve() -> Result<Curve> {
    Curve::new([0.0, 1.0, 2.0, 3.0, 5.0, 7.5], None)
}

fn half_periods_by_quadrature() -> Result<f64> {
    let curve = test_curve()?;
    let pd = period_matrix(&curve, 1e-14)?;
    let mut u = CVec2::zeros();
    let mut worst: f64 = 0.0;
    for s in 1..=5 {
        u += pd.segment(s)?;
        worst = worst.max(pd.jac.lattice_distance(&u, &pd.jac.half_period(s as u8 + 1)?));
    }
    Ok(worst)
}

fn rosenhain_round_trip() -> Result<f64> {
    let curve = test_curve()?;
    let (std_curve, _) = curve.to_standard_chart()?;
    let pd = period_matrix(&std_curve, 1e-14)?;
    let r = pd.jac.rosenhain()?;
    let b = std_curve.branch();
    Ok((0..3).map(|i| ((r[i] - b[i + 2]) / b[i + 2]).abs()).fold(0.0, f64::max))
}

fn divisor_and_projection() -> Result<f64> {
    let curve = test_curve()?;
    let (_, to_std) = curve.to_standard_chart()?;
    let pd = period_matrix(&curve, 1e-14)?;
    let proj = pd.jac.projection(Norm::STANDARD)?;
    let mut worst: f64 = 0.0;
    for x in [c(0.5, 0.5), c(2.5, 1.0), c(-3.0, 0.2), c(6.0, 4.0)] {
        let u = aj_point(&pd, SurfacePoint::plus(x))?;
        worst = worst.max(pd.jac.divisor_residual(&u)?);
        let xs = to_std.apply(x);
        let got = proj.eval(&u)?;
        worst = worst.max((got - xs).norm() / (1.0 + xs.norm()));
    }
    Ok(worst)
}

fn third_kind(tol: f64) -> Result<(f64, f64)> {
    let curve = test_curve()?;
    let pt = |x: f64| SurfacePoint::plus(c(x, 0.0));
    let rep = third_kind_check(&curve, pt(-1.0), pt(9.0), pt(-3.0), tol)?;
    Ok((rep.residual, rep.bilinear[0].max(rep.bilinear[1])))
}

fn humbert_decay() -> Result<f64> {
    let ch: IntChar = "[11;11]".parse()?;
    let mut prev = f64::INFINITY;
    let mut eps = 0.4;
    for _ in 0..40 {
        let th = Theta::from_omega(&Mat2::new(1.0, eps, eps, 1.0), ThetaConfig::default())?;
        let v = th.constant(ch)?.norm();
        if v >= prev {
            return Ok(f64::INFINITY);
        }
        if v < 1e-6 {
            return Ok(v);
        }
        prev = v;
        eps *= 0.5;
    }
    Ok(prev)
}

/// Largest angle defect between the images of two orthogonal segments of length `2h` at `w`.
pub fn conformality_defect(map: &ConformalMap, w: C64, h: f64) -> Result<f64> {
    let x = |z: C64| map.to_halfplane(z, Norm::STANDARD);
    let dx = x(w + h)? - x(w - h)?;
    let dy = x(w + c(0.0, h))? - x(w - c(0.0, h))?;
    // for a conformal map dy = i·dx to first order
    let ratio = dy / (dx * C64::i());
    Ok(ratio.arg().abs().max((ratio.norm() - 1.0).abs()))
}

/// Runs every check with thresholds derived from `tol`.
pub fn run(tol: f64) -> Report {
    let mut report = Report::default();
    record(&mut report, "theta series vs brute-force sum", 1e-3 * tol, theta_vs_brute_force());
    record(&mut report, "odd theta constants vanish", 1e-3 * tol, odd_constants());
    record(&mut report, "AJ of branch points = half-periods", tol, half_periods_by_quadrature());
    record(&mut report, "Rosenhain recovers branch points", tol, rosenhain_round_trip());
    record(&mut report, "divisor membership and projection", tol, divisor_and_projection());
    let tk = third_kind(tol);
    record(&mut report, "third-kind theta representation", 10.0 * tol, tk.clone().map(|v| v.0));
    record(&mut report, "bilinear relation for b-periods", 10.0 * tol, tk.map(|v| v.1));
    record(&mut report, "Humbert decay of theta[11;11]", 1e-6, humbert_decay());

    let cfg = ThetaConfig::default();
    let omega = Mat2::new(1.3, 0.4, 0.4, 0.9);
    let h: Result<Heptagon> = forward_sides(&omega, 0.31, 2, 5, cfg);
    let solved = h.clone().and_then(|h| Ok((h, solve_parameters(&h, &SolveOptions { tol, ..Default::default() })?)));
    record(
        &mut report,
        "solver recovers (Omega, u1)",
        10.0 * tol,
        solved.clone().map(|(_, p)| (p.omega - omega).amax().max((p.u0[0] - 0.31).abs())),
    );
    record(
        &mut report,
        "seven-equation residual",
        tol,
        solved.clone().and_then(|(h, p)| Ok(residuals(&p, &h, cfg)?.max())),
    );

    let built = params_from(&Mat2::new(2.0, 0.5, 0.5, 1.5), 0.2, 1, 4, cfg)
        .and_then(|(p, h)| Ok((ConformalMap::new(&p, MapConfig::default())?, curve_from_params(&p, cfg)?, h)));
    record(
        &mut report,
        "side lengths: theta vs quadrature",
        10.0 * tol,
        built.clone().and_then(|(_, mc, h)| {
            let q = sides_by_quadrature(&mc.marked, 1, 4, 0.01 * tol)?;
            Ok((0..5).map(|i| (q[i] - h.h[i]).abs()).fold(0.0, f64::max))
        }),
    );
    record(
        &mut report,
        "vertices reproduce side lengths",
        10.0 * tol,
        built.clone().map(|(map, _, h)| {
            let got = map.sides();
            (0..5).map(|i| (got[i] - h.h[i]).abs()).fold(0.0, f64::max)
        }),
    );
    record(
        &mut report,
        "CS integral: theta vs quadrature",
        10.0 * tol,
        built.clone().and_then(|(map, mc, _)| {
            let mut worst: f64 = 0.0;
            for t in [c(-1.0, 0.3), c(-0.4, 0.05), c(0.5, 1.5)] {
                let path = default_path(&mc.marked, t)?;
                let wq = cs_by_quadrature(&mc.marked, 1, 4, &path, 0.01 * tol)?;
                worst = worst.max((map.w_of(&map.to_marked(t)?) - wq).norm());
            }
            Ok(worst)
        }),
    );
    record(
        &mut report,
        "inverse map round trip",
        10.0 * tol,
        built.clone().and_then(|(map, _, _)| {
            let mut worst: f64 = 0.0;
            for x in [c(0.5, 0.5), c(-2.0, 0.1), c(4.0, 3.0)] {
                let w = map.to_heptagon(x, Norm::STANDARD)?;
                worst = worst.max((map.to_halfplane(w, Norm::STANDARD)? - x).norm() / (1.0 + x.norm()));
            }
            Ok(worst)
        }),
    );
    record(
        &mut report,
        "conformality probe (rad)",
        1e-3,
        built.and_then(|(map, _, _)| {
            let w = map.to_heptagon(c(1.0, 1.0), Norm::STANDARD)?;
            conformality_defect(&map, w, 1e-3)
        }),
    );
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes_at_default_tolerance() {
        let r = run(1e-9);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn battery_fails_below_double_precision() {
        let r = run(1e-20);
        assert!(!r.passed());
    }
}
