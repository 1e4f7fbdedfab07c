//! Acceptance suite: one line per criterion, with its measured residual,
//! limit and wall time. Exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use heptamap::curve::{aj_point, du_segment, normalize_differentials, period_matrix, Curve, Mobius, Norm, SurfacePoint};
use heptamap::heptagon::Heptagon;
use heptamap::mapper::{forward_sides, solve_parameters, ConformalMap, MapConfig, SolveOptions};
use heptamap::oracle::{cs_by_quadrature, curve_from_params, default_path, third_kind_check};
use heptamap::quad::from_branch_point;
use heptamap::selftest::conformality_defect;
use heptamap::theta::{IntChar, RealChar, RiemannMatrix, Theta, ThetaConfig};
use heptamap::{CMat2, CVec2, Mat2, Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

struct Outcome {
    residual: f64,
    limit: f64,
    /// Extra requirement that is not a residual, e.g. monotonicity.
    ok: bool,
    note: String,
}

impl Outcome {
    fn new(residual: f64, limit: f64) -> Self {
        Outcome { residual, limit, ok: true, note: String::new() }
    }
}

fn report(n: usize, name: &str, budget: Duration, f: impl FnOnce() -> Result<Outcome>) -> bool {
    let start = Instant::now();
    let r = f();
    let dt = start.elapsed();
    let (pass, detail) = match r {
        Ok(o) => {
            let pass = o.ok && o.residual <= o.limit && dt <= budget;
            let note = if o.note.is_empty() { String::new() } else { format!(", {}", o.note) };
            (pass, format!("residual {:.2e} (limit {:.0e}){note}", o.residual, o.limit))
        }
        Err(e) => (false, format!("error: {e}")),
    };
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {n}. {name}: {detail}, {:.2} s (budget {} s)", dt.as_secs_f64(), budget.as_secs());
    pass
}

fn random_sextuple(rng: &mut ChaCha8Rng) -> [f64; 6] {
    let mut b = [0.0; 6];
    b[0] = rng.random_range(-3.0..3.0);
    for i in 1..6 {
        b[i] = b[i - 1] + rng.random_range(0.2..3.0);
    }
    b
}

fn brute_theta(ch: &RealChar, u: &CVec2, pi: &CMat2) -> C64 {
    let mut s = c(0.0, 0.0);
    for m1 in -30..=30 {
        for m2 in -30..=30 {
            let a = m1 as f64 + ch.eps[0] / 2.0;
            let b = m2 as f64 + ch.eps[1] / 2.0;
            let q = pi[(0, 0)] * a * a + pi[(0, 1)] * 2.0 * a * b + pi[(1, 1)] * b * b;
            let l = (u[0] + ch.epsp[0] / 2.0) * a + (u[1] + ch.epsp[1] / 2.0) * b;
            s += (C64::i() * PI * (q + l * 2.0)).exp();
        }
    }
    s
}

fn theta_correctness() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let chars: Vec<IntChar> = IntChar::all().collect();
    let mut worst: f64 = 0.0;
    let mut odd: f64 = 0.0;
    for _ in 0..100 {
        let (a, b, d) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        // Im Π = 0.5·Id + AAᵀ
        let im = Mat2::new(0.5 + a * a + b * b, a * d + b * d, a * d + b * d, 0.5 + 2.0 * d * d);
        let re = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let pi = CMat2::new(c(re[0], im[(0, 0)]), c(re[1], im[(0, 1)]), c(re[1], im[(1, 0)]), c(re[2], im[(1, 1)]));
        let u = CVec2::new(
            c(rng.random_range(-1.0..1.0), rng.random_range(-0.3..0.3)),
            c(rng.random_range(-1.0..1.0), rng.random_range(-0.3..0.3)),
        );
        let th = Theta::new(RiemannMatrix::new(pi)?, ThetaConfig::default())?;
        let ch = chars[rng.random_range(0..16)];
        let got = th.char_value(&ch.to_real(), &u)?;
        let want = brute_theta(&ch.to_real(), &u, &pi);
        worst = worst.max((got - want).norm() / want.norm().max(1.0));
        for k in chars.iter().filter(|k| k.is_odd()) {
            odd = odd.max(th.constant(*k)?.norm());
        }
    }
    let mut o = Outcome::new(worst, 1e-12);
    o.ok = odd == 0.0;
    o.note = format!("largest odd constant {odd:e}");
    Ok(o)
}

/// `u(p_s)` by integrating from `x₁` to `x_s` through the upper half plane.
fn aj_branch_point_through_uhp(finite: &[f64; 6], k: &Mat2, s: usize) -> Result<CVec2> {
    if s == 0 {
        return Ok(CVec2::zeros());
    }
    let mid = c(0.5 * (finite[0] + finite[s]), 0.5 * (finite[s] - finite[0]));
    let leg = |from: usize| -> Result<CVec2> {
        let v = from_branch_point(
            c(finite[from], 0.0),
            mid,
            |z, r| {
                // principal square roots, in the order of the branch points
                let y: C64 = (0..6).map(|j| if j == from { r } else { (z - finite[j]).sqrt() }).product();
                [(z * k[(0, 0)] + k[(1, 0)]) / y, (z * k[(0, 1)] + k[(1, 1)]) / y]
            },
            1e-13,
        )?;
        Ok(CVec2::new(v[0], v[1]))
    };
    Ok(leg(0)? - leg(s)?)
}

fn period_consistency() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut re_pi: f64 = 0.0;
    let mut ok = true;
    for _ in 0..20 {
        let b = random_sextuple(&mut rng);
        let curve = Curve::new(b, None)?;
        let pd = period_matrix(&curve, 1e-13)?;
        let o = pd.omega();
        ok &= o[(0, 0)] > 0.0 && o.determinant() > 0.0;
        ok &= 0.0 < o[(0, 1)] && o[(0, 1)] < o[(0, 0)].min(o[(1, 1)]);
        // real parts of the b-periods, from the normalized differentials
        let k = normalize_differentials(&curve, 1e-13)?;
        for seg in [1, 5] {
            let v = du_segment(&b, &k, seg, 1e-13)?;
            // these rows of Π are 2i times the segment integrals
            re_pi = re_pi.max(2.0 * v[0].re.abs()).max(2.0 * v[1].re.abs());
        }
        for s in 0..6 {
            let u = aj_branch_point_through_uhp(&b, &k, s)?;
            worst = worst.max(pd.jac.lattice_distance(&u, &pd.jac.half_period(s as u8 + 1)?));
        }
    }
    let mut out = Outcome::new(worst, 1e-9);
    out.ok = ok && re_pi <= 1e-10;
    out.note = format!("Omega SPD and in cone: {ok}, |Re Pi| {re_pi:.1e}");
    Ok(out)
}

fn rosenhain_round_trip() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut cross: f64 = 0.0;
    for _ in 0..20 {
        let (sc, _) = Curve::new(random_sextuple(&mut rng), None)?.to_standard_chart()?;
        let pd = period_matrix(&sc, 1e-13)?;
        let r = pd.jac.rosenhain()?;
        let alt = pd.jac.rosenhain_alt()?;
        for i in 0..3 {
            let want = sc.branch()[i + 2];
            worst = worst.max((r[i] - want).abs() / want.abs());
            cross = cross.max((alt[i] - (1.0 - r[i])).abs());
        }
    }
    let mut o = Outcome::new(worst, 1e-9);
    o.ok = cross <= 1e-10;
    o.note = format!("cross-consistency {cross:.1e} (limit 1e-10)");
    Ok(o)
}

fn divisor_and_projection() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_x: f64 = 0.0;
    let mut worst_div: f64 = 0.0;
    for _ in 0..5 {
        let b = random_sextuple(&mut rng);
        let curve = Curve::new(b, None)?;
        let pd = period_matrix(&curve, 1e-13)?;
        let proj = pd.jac.projection(Norm::STANDARD)?;
        let m = Mobius::through(b[0], b[1], b[5]);
        for _ in 0..50 {
            let x = c(rng.random_range(b[0] - 3.0..b[5] + 3.0), rng.random_range(0.01..4.0));
            let x = if rng.random_bool(0.5) { x } else { x.conj() };
            let u = aj_point(&pd, SurfacePoint::plus(x))?;
            worst_div = worst_div.max(pd.jac.divisor_residual(&u)?);
            let want = m.apply(x);
            worst_x = worst_x.max((proj.eval(&u)? - want).norm() / want.norm().max(1.0));
        }
    }
    let mut o = Outcome::new(worst_x, 1e-9);
    o.ok = worst_div <= 1e-9;
    o.note = format!("divisor residual {worst_div:.1e} (limit 1e-9)");
    Ok(o)
}

fn third_kind() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rep: f64 = 0.0;
    let mut bil: f64 = 0.0;
    for _ in 0..5 {
        let b = random_sextuple(&mut rng);
        let curve = Curve::new(b, None)?;
        // three distinct points on the third oval (x < x₁ or x > x₆)
        let pt = |x: f64| SurfacePoint::plus(c(x, 0.0));
        let r = third_kind_check(&curve, pt(b[0] - 1.0), pt(b[5] + 2.0), pt(b[0] - 2.5), 1e-12)?;
        rep = rep.max(r.residual);
        bil = bil.max(r.bilinear[0]).max(r.bilinear[1]);
    }
    let mut o = Outcome::new(rep, 1e-8);
    o.ok = bil <= 1e-8;
    o.note = format!("bilinear relation {bil:.1e} (limit 1e-8)");
    Ok(o)
}

/// A valid heptagon of class `(α, β)` drawn through its map parameters:
/// `Ω` and `u₁` are sampled in a fixed region of the period cone and the
/// heptagon is read off the forward side map.
fn random_heptagon(rng: &mut ChaCha8Rng, alpha: u8, beta: u8) -> Heptagon {
    loop {
        let (o11, o22): (f64, f64) = (rng.random_range(0.6..2.4), rng.random_range(0.6..2.4));
        let o12 = rng.random_range(0.1..0.8) * o11.min(o22);
        let u1 = rng.random_range(0.1..0.4);
        let omega = Mat2::new(o11, o12, o12, o22);
        if let Ok(h) = forward_sides(&omega, u1, alpha, beta, ThetaConfig::default()) {
            if h.is_valid() {
                return h;
            }
        }
    }
}

struct EndToEnd {
    heptagons: usize,
    solve: f64,
    cs: f64,
    sides: f64,
    round_trip: f64,
    slowest: Duration,
}

fn end_to_end_one(h: &Heptagon, rng: &mut ChaCha8Rng, acc: &mut EndToEnd) -> Result<()> {
    let start = Instant::now();
    let cfg = ThetaConfig::default();
    let params = solve_parameters(h, &SolveOptions::default())?;
    acc.solve = acc.solve.max(params.residual);
    let map = ConformalMap::new(&params, MapConfig::default())?;
    let mc = curve_from_params(&params, cfg)?;

    let got = map.sides();
    acc.sides = acc.sides.max((0..5).map(|i| (got[i] - h.h[i]).abs()).fold(0.0, f64::max));

    let chart = map.chart(Norm::STANDARD)?;
    for _ in 0..20 {
        let x = c(rng.random_range(-4.0..5.0), rng.random_range(0.05..3.0));
        let w = map.to_heptagon(x, Norm::STANDARD)?;
        let t = chart.inverse().apply(x);
        let wq = cs_by_quadrature(&mc.marked, h.alpha, h.beta, &default_path(&mc.marked, t)?, 1e-12)?;
        acc.cs = acc.cs.max((w - wq).norm());
    }

    for w in map.vertices().interior_mesh(10, 10, 2.0) {
        let x = map.to_halfplane(w, Norm::STANDARD)?;
        let back = map.to_heptagon(x, Norm::STANDARD)?;
        acc.round_trip = acc.round_trip.max((back - w).norm());
    }
    acc.heptagons += 1;
    acc.slowest = acc.slowest.max(start.elapsed());
    Ok(())
}

fn end_to_end() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut acc = EndToEnd { heptagons: 0, solve: 0.0, cs: 0.0, sides: 0.0, round_trip: 0.0, slowest: Duration::ZERO };
    let mut failures = Vec::new();
    for (a, b) in Heptagon::index_pairs() {
        for _ in 0..5 {
            let h = random_heptagon(&mut rng, a, b);
            if let Err(e) = end_to_end_one(&h, &mut rng, &mut acc) {
                failures.push(format!("({a},{b}) H={:?}: {e}", h.h));
            }
        }
    }
    for f in &failures {
        eprintln!("    failed: {f}");
    }
    let mut o = Outcome::new(acc.cs.max(acc.sides).max(acc.round_trip), 1e-8);
    o.ok = failures.is_empty() && acc.solve <= 1e-9 && acc.slowest <= Duration::from_secs(120);
    o.note = format!(
        "{} heptagons ok, {} failed; solver {:.1e}, CS vs quadrature {:.1e}, sides {:.1e}, round trip {:.1e}, slowest {:.1} s",
        acc.heptagons,
        failures.len(),
        acc.solve,
        acc.cs,
        acc.sides,
        acc.round_trip,
        acc.slowest.as_secs_f64()
    );
    Ok(o)
}

fn humbert() -> Result<Outcome> {
    let ch: IntChar = "[11;11]".parse()?;
    let mut values = Vec::new();
    let mut eps = 0.45;
    for _ in 0..40 {
        let th = Theta::from_omega(&Mat2::new(1.0, eps, eps, 1.0), ThetaConfig::default())?;
        values.push(th.constant(ch)?.norm());
        eps *= 0.5;
    }
    let monotone = values.windows(2).all(|w| w[1] < w[0]);
    let last = *values.last().unwrap();
    let mut o = Outcome::new(last, 1e-6);
    o.ok = monotone;
    o.note = format!("{} terms, monotone: {monotone}", values.len());
    Ok(o)
}

fn conformality() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for (a, b) in [(5, 6), (2, 5), (1, 4)] {
        let h = random_heptagon(&mut rng, a, b);
        let params = solve_parameters(&h, &SolveOptions::default())?;
        let map = ConformalMap::new(&params, MapConfig::default())?;
        let verts = map.vertices();
        for w in verts.interior_mesh(6, 4, 2.0) {
            if verts.distance_to_boundary(w) > 0.05 {
                worst = worst.max(conformality_defect(&map, w, 1e-3)?);
            }
        }
    }
    Ok(Outcome::new(worst, 1e-3))
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let results = [
        report(1, "theta series vs brute force", secs(5), theta_correctness),
        report(2, "periods and Abel-Jacobi images of branch points", secs(60), period_consistency),
        report(3, "Rosenhain round trip", secs(30), rosenhain_round_trip),
        report(4, "theta divisor and projection", secs(60), divisor_and_projection),
        report(5, "third-kind representation and bilinear relation", secs(60), third_kind),
        report(6, "end-to-end mapping, 5 heptagons per class", secs(15 * 5 * 120), end_to_end),
        report(7, "Humbert edge decay", secs(5), humbert),
        report(8, "conformality probe", secs(120), conformality),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
