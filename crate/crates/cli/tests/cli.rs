use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use heptamap::heptagon::Heptagon;
use heptamap::io::{parse_complex, parse_params};
use num_complex::Complex64;

const VALID: &str = r#"{"alpha":5,"beta":6,"H":[5,2,1,1,-0.8584073464102069]}"#;
const H4_VIOLATION: &str = r#"{"alpha":5,"beta":6,"H":[5,2,1,3,-0.8584073464102069]}"#;

fn heptamap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heptamap")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn complex_out(o: &Output) -> Complex64 {
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    parse_complex(stdout(o).trim()).unwrap()
}

/// Solves the valid example and returns the path of the parameter file.
fn solved(dir: &Path) -> PathBuf {
    let h = write(dir, "h.json", VALID);
    let out = dir.join("params.json");
    let o = heptamap(&["solve", h.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.json", VALID);
    assert_eq!(heptamap(&["validate", ok.to_str().unwrap()]).status.code(), Some(0));

    let bad = write(dir.path(), "bad.json", H4_VIOLATION);
    let o = heptamap(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("(5,6): -H2+H4<0"), "{}", stdout(&o));

    let broken = write(dir.path(), "broken.json", "{\"alpha\": 5,");
    assert_eq!(heptamap(&["validate", broken.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(heptamap(&["validate", "/nonexistent/h.json"]).status.code(), Some(2));
}

#[test]
fn solve_is_deterministic_and_accurate() {
    let dir = tempfile::tempdir().unwrap();
    let p = solved(dir.path());
    let first = std::fs::read(&p).unwrap();
    let params = parse_params(std::str::from_utf8(&first).unwrap()).unwrap();
    assert!(params.residual <= 1e-9);
    assert_eq!((params.alpha, params.beta), (5, 6));
    let again = solved(dir.path());
    assert_eq!(std::fs::read(again).unwrap(), first);
}

#[test]
fn solve_rejects_invalid_heptagon() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", H4_VIOLATION);
    assert_eq!(heptamap(&["solve", bad.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn vertices_round_trip_through_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = solved(dir.path());
    let p = p.to_str().unwrap();
    let h: Heptagon = serde_json::from_str(VALID).unwrap();
    // a normalization with all six branch points finite
    let norm = ["--norm", "1,2,5,3"];
    for w in h.vertices().unwrap().w {
        let ws = format!("{}{:+}i", w.re, w.im);
        let x = complex_out(&heptamap(&[&["map", p, &ws, "-d", "inverse"][..], &norm].concat()));
        assert!(x.im.abs() < 1e-12, "vertex {w} went to {x}");
        let xs = format!("{}{:+}i", x.re, x.im);
        let back = complex_out(&heptamap(&[&["map", p, &xs][..], &norm].concat()));
        assert!((back - w).norm() <= 1e-7, "{w} -> {x} -> {back}");
    }
}

#[test]
fn forward_inverses_inverse() {
    let dir = tempfile::tempdir().unwrap();
    let p = solved(dir.path());
    let p = p.to_str().unwrap();
    let x = complex_out(&heptamap(&["map", p, "1.5+0.5i", "--direction", "inverse"]));
    assert!(x.im > 0.0);
    let w = complex_out(&heptamap(&["map", p, &format!("{}{:+}i", x.re, x.im), "--oracle"]));
    assert!((w - Complex64::new(1.5, 0.5)).norm() <= 1e-8, "{w}");
}

#[test]
fn map_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = solved(dir.path());
    let p = p.to_str().unwrap();
    let o = heptamap(&["map", p, "-5+1i", "-d", "inverse"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("outside the heptagon"));
    assert_eq!(heptamap(&["map", p, "one plus i"]).status.code(), Some(2));
    assert_eq!(heptamap(&["map", "/nonexistent.json", "1+i"]).status.code(), Some(2));
}

#[test]
fn grid_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let p = solved(dir.path());
    let csv = dir.path().join("grid.csv");
    let svg = dir.path().join("grid.svg");
    let o = heptamap(&[
        "grid",
        p.to_str().unwrap(),
        "--nx",
        "8",
        "--ny",
        "5",
        "-o",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("w_re,w_im,x_re,x_im"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    let h: Heptagon = serde_json::from_str(VALID).unwrap();
    let mesh = h.vertices().unwrap().interior_mesh(8, 5, 2.0);
    assert_eq!(rows.len(), mesh.len());
    for (row, w) in rows.iter().zip(&mesh) {
        assert!((row[0] - w.re).abs() < 1e-9 && (row[1] - w.im).abs() < 1e-9);
        assert!(row[3] > 0.0, "{row:?}");
    }

    let drawing = std::fs::read_to_string(&svg).unwrap();
    assert!(drawing.starts_with("<svg"));
    assert!(drawing.contains("<path"));
    assert!(!drawing.contains("<circle") && !drawing.contains("<polyline"));
}

#[test]
fn grid_rejects_degenerate_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let p = solved(dir.path());
    let csv = dir.path().join("grid.csv");
    let o = heptamap(&["grid", p.to_str().unwrap(), "--nx", "1", "-o", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selftest_passes_and_fails_loudly() {
    let o = heptamap(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("residual"));
    let o = heptamap(&["selftest", "--tol", "1e-20"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}
