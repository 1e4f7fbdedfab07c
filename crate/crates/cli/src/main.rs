//! `heptamap`: validate heptagons, solve map parameters, map points and grids.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use heptamap::curve::Norm;
use heptamap::exec::Execution;
use heptamap::io::{self, Svg};
use heptamap::mapper::{residuals, solve_parameters, ConformalMap, MapConfig, MapParams, SolveOptions};
use heptamap::oracle::{cs_by_quadrature, curve_from_params, default_path, sides_by_quadrature};
use heptamap::theta::ThetaConfig;
use heptamap::{selftest, Error, Result, C64};

#[derive(Parser)]
#[command(name = "heptamap", version, about = "Conformal maps of rectangular heptagons onto the upper half plane")]
struct Cli {
    /// Target accuracy for the solver and the self-test thresholds.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Cross-check results against direct quadrature.
    #[arg(long, global = true)]
    oracle: bool,
    /// Number of interior seeds used by the inverse map.
    #[arg(long, global = true, default_value_t = 12)]
    seed_table: usize,
    /// Normalization of the half plane: branch labels sent to 0, 1, ∞ and an auxiliary label.
    #[arg(long, global = true, default_value = "1,2,6,3")]
    norm: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a heptagon file and list every violated constraint.
    Validate { file: PathBuf },
    /// Solve for the map parameters of a heptagon and write them as JSON.
    Solve {
        file: PathBuf,
        /// Output file (stdout if omitted).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Map one point. `forward` sends x in the half plane to w in the heptagon.
    Map {
        params: PathBuf,
        /// Complex number written as a+bi.
        #[arg(allow_hyphen_values = true)]
        point: String,
        #[arg(short, long, value_enum, default_value_t = Direction::Forward)]
        direction: Direction,
    },
    /// Map an interior mesh of the heptagon and write CSV (and optionally SVG).
    Grid {
        params: PathBuf,
        #[arg(long, default_value_t = 20)]
        nx: usize,
        #[arg(long, default_value_t = 10)]
        ny: usize,
        /// How far the mesh extends into the channel beyond the last vertex.
        #[arg(long, default_value_t = 2.0)]
        channel: f64,
        /// CSV output file.
        #[arg(short, long)]
        out: PathBuf,
        /// Draw the image of the mesh lines in the half plane.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run the built-in consistency checks.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    /// Half plane to heptagon.
    Forward,
    /// Heptagon to half plane.
    Inverse,
}

/// Outcome of a command that did not fail with an error.
enum Status {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}

fn run(cli: &Cli) -> Result<Status> {
    let norm: Norm = cli.norm.parse()?;
    match &cli.command {
        Command::Validate { file } => validate(file),
        Command::Solve { file, out } => solve(cli, file, out.as_deref()),
        Command::Map { params, point, direction } => map_point(cli, norm, params, point, *direction),
        Command::Grid { params, nx, ny, channel, out, svg } => grid(cli, norm, params, (*nx, *ny), *channel, out, svg.as_deref()),
        Command::Selftest => {
            let report = selftest::run(cli.tol);
            println!("{report}");
            Ok(if report.passed() { Status::Ok } else { Status::Failed })
        }
    }
}

fn validate(file: &Path) -> Result<Status> {
    let h = io::read_heptagon(file)?;
    let violations = h.validate();
    if violations.is_empty() {
        println!("valid: ({},{}) H = {:?}", h.alpha, h.beta, h.h);
        return Ok(Status::Ok);
    }
    for v in &violations {
        println!("violated: {v}");
    }
    Ok(Status::Failed)
}

fn solve(cli: &Cli, file: &Path, out: Option<&Path>) -> Result<Status> {
    let h = io::read_heptagon(file)?;
    h.ensure_valid()?;
    let params = solve_parameters(&h, &SolveOptions { tol: cli.tol, ..Default::default() })?;
    let r = residuals(&params, &h, ThetaConfig::default())?;
    eprintln!("residuals: oval {:.2e}, wedge {:.2e}, sides {:.2e}", r.oval, r.wedge[0].max(r.wedge[1]), r.sides.iter().fold(0.0f64, |a, b| a.max(b.abs())));
    if cli.oracle {
        let mc = curve_from_params(&params, ThetaConfig::default())?;
        let q = sides_by_quadrature(&mc.marked, h.alpha, h.beta, 1e-12)?;
        let diff = (0..5).map(|i| (q[i] - h.h[i]).abs()).fold(0.0, f64::max);
        eprintln!("oracle: side lengths by quadrature differ by {diff:.2e}");
    }
    let text = io::params_json(&params);
    match out {
        Some(p) => io::write_file(p, &text)?,
        None => println!("{text}"),
    }
    Ok(Status::Ok)
}

fn load_map(cli: &Cli, params: &Path) -> Result<(MapParams, ConformalMap)> {
    let p = io::read_params(params)?;
    let map = ConformalMap::new(&p, MapConfig { seeds: cli.seed_table, ..Default::default() })?;
    Ok((p, map))
}

/// Difference between the theta-form value `w` at `x` and direct quadrature.
fn oracle_gap(p: &MapParams, map: &ConformalMap, norm: Norm, x: C64, w: C64) -> Result<f64> {
    let mc = curve_from_params(p, ThetaConfig::default())?;
    let t = map.chart(norm)?.inverse().apply(x);
    let path = default_path(&mc.marked, t)?;
    Ok((cs_by_quadrature(&mc.marked, p.alpha, p.beta, &path, 1e-12)? - w).norm())
}

fn map_point(cli: &Cli, norm: Norm, params: &Path, point: &str, dir: Direction) -> Result<Status> {
    let z = io::parse_complex(point)?;
    let (p, map) = load_map(cli, params)?;
    let (x, w) = match dir {
        Direction::Forward => (z, map.to_heptagon(z, norm)?),
        Direction::Inverse => (map.to_halfplane(z, norm)?, z),
    };
    let image = match dir {
        Direction::Forward => w,
        Direction::Inverse => x,
    };
    println!("{}", io::format_complex(image));
    if cli.oracle && x.im > 0.0 {
        eprintln!("oracle: quadrature differs by {:.2e}", oracle_gap(&p, &map, norm, x, w)?);
    }
    Ok(Status::Ok)
}

fn grid(cli: &Cli, norm: Norm, params: &Path, (nx, ny): (usize, usize), channel: f64, out: &Path, svg: Option<&Path>) -> Result<Status> {
    if nx < 2 || ny < 2 {
        return Err(Error::Parse(format!("grid needs at least 2×2 cells, got {nx}×{ny}")));
    }
    let (p, map) = load_map(cli, params)?;
    let mode = Execution::available();
    let ws = map.vertices().interior_mesh(nx, ny, channel);
    let mut rows = Vec::with_capacity(ws.len());
    for r in map.to_halfplane_many(&ws, norm, mode) {
        let m = r?;
        rows.push((m.w, m.x));
    }
    io::write_file(out, &io::points_csv(&rows))?;
    eprintln!("{} points written to {}", rows.len(), out.display());
    if cli.oracle {
        let worst = rows
            .iter()
            .step_by((rows.len() / 20).max(1))
            .map(|&(w, x)| oracle_gap(&p, &map, norm, x, w))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        eprintln!("oracle: largest quadrature difference on sampled points {worst:.2e}");
    }
    if let Some(path) = svg {
        io::write_file(path, &draw(&map, norm, nx, ny, channel)?)?;
    }
    Ok(Status::Ok)
}

/// SVG of the images of the mesh lines, with the real axis and branch points.
fn draw(map: &ConformalMap, norm: Norm, nx: usize, ny: usize, channel: f64) -> Result<String> {
    let finite: Vec<f64> = map
        .branch_points(norm)?
        .into_iter()
        .chain(std::iter::once(map.chart(norm)?.apply_real(f64::INFINITY)))
        .filter(|x| x.is_finite())
        .collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.25 * (hi - lo).max(1.0);
    let (x0, x1) = (lo - pad, hi + pad);
    let mut svg = Svg::new(x0, x1, -0.02 * (x1 - x0), 0.5 * (x1 - x0), 800.0);
    svg.line(C64::new(x0, 0.0), C64::new(x1, 0.0), "black", 1.0);
    for b in &finite {
        svg.line(C64::new(*b, -0.01 * (x1 - x0)), C64::new(*b, 0.01 * (x1 - x0)), "red", 1.5);
    }
    for line in map.vertices().mesh_lines(nx, ny, channel, 200) {
        let xs: Vec<C64> = map.to_halfplane_polyline(&line, norm).into_iter().filter_map(|r| r.ok().map(|m| m.x)).collect();
        svg.path(&xs, "steelblue", 0.8, false);
    }
    Ok(svg.render())
}
