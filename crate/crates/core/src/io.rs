//! File formats: heptagon and parameter JSON, point CSV and SVG drawings.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::heptagon::Heptagon;
use crate::mapper::MapParams;
use crate::{c, Error, Mat2, Result, C64};

/// JSON form of [`MapParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub alpha: u8,
    pub beta: u8,
    #[serde(rename = "Omega")]
    pub omega: [[f64; 2]; 2],
    pub u0: [f64; 2],
    #[serde(rename = "C")]
    pub c: [f64; 2],
    pub anchor: [f64; 2],
    pub residual: f64,
}

impl From<&MapParams> for ParamsFile {
    fn from(p: &MapParams) -> Self {
        let o = &p.omega;
        ParamsFile {
            alpha: p.alpha,
            beta: p.beta,
            omega: [[o[(0, 0)], o[(0, 1)]], [o[(1, 0)], o[(1, 1)]]],
            u0: p.u0,
            c: p.c,
            anchor: [p.anchor.re, p.anchor.im],
            residual: p.residual,
        }
    }
}

impl From<&ParamsFile> for MapParams {
    fn from(f: &ParamsFile) -> Self {
        let o = f.omega;
        MapParams {
            alpha: f.alpha,
            beta: f.beta,
            omega: Mat2::new(o[0][0], o[0][1], o[1][0], o[1][1]),
            u0: f.u0,
            c: f.c,
            anchor: c(f.anchor[0], f.anchor[1]),
            residual: f.residual,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn parse_heptagon(text: &str) -> Result<Heptagon> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_heptagon(path: &Path) -> Result<Heptagon> {
    parse_heptagon(&read(path)?)
}

pub fn heptagon_json(h: &Heptagon) -> String {
    serde_json::to_string_pretty(h).expect("heptagon serializes")
}

pub fn parse_params(text: &str) -> Result<MapParams> {
    let f: ParamsFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(MapParams::from(&f))
}

pub fn read_params(path: &Path) -> Result<MapParams> {
    parse_params(&read(path)?)
}

pub fn params_json(p: &MapParams) -> String {
    serde_json::to_string_pretty(&ParamsFile::from(p)).expect("parameters serialize")
}

/// Parses `a+bi`, `a-bi`, `a`, `bi`, `i`, with optional spaces.
pub fn parse_complex(s: &str) -> Result<C64> {
    let bad = || Error::Parse(format!("cannot read {s:?} as a complex number a+bi"));
    let t: String = s.chars().filter(|ch| !ch.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().map(|re| c(re, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => v.parse::<f64>().map_err(|_| bad())?,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    Ok(c(re, im))
}

/// `a+bi` with 17 significant digits.
pub fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.16e}{}{:.16e}i", z.re, sign, z.im.abs())
}

pub const CSV_HEADER: &str = "w_re,w_im,x_re,x_im";

/// CSV with header `w_re,w_im,x_re,x_im`, one row per point, 17 significant digits.
pub fn points_csv(rows: &[(C64, C64)]) -> String {
    let mut out = String::with_capacity(80 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (w, x) in rows {
        let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", w.re, w.im, x.re, x.im);
    }
    out
}

/// Minimal SVG canvas drawing only `path` and `line` elements.
#[derive(Debug, Clone)]
pub struct Svg {
    view: (f64, f64, f64, f64),
    width: f64,
    body: String,
}

impl Svg {
    /// Canvas showing the region `[x0, x1] × [y0, y1]` of the complex plane.
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, width: f64) -> Self {
        Svg { view: (x0, x1, y0, y1), width, body: String::new() }
    }

    fn map(&self, z: C64) -> (f64, f64) {
        let (x0, x1, _, y1) = self.view;
        let s = self.width / (x1 - x0);
        ((z.re - x0) * s, (y1 - z.im) * s)
    }

    fn inside(&self, z: C64) -> bool {
        let (x0, x1, y0, y1) = self.view;
        z.is_finite() && z.re >= x0 && z.re <= x1 && z.im >= y0 && z.im <= y1
    }

    pub fn line(&mut self, a: C64, b: C64, stroke: &str, width: f64) {
        let (p, q) = (self.map(a), self.map(b));
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{stroke}" stroke-width="{width}"/>"#,
            p.0, p.1, q.0, q.1
        );
    }

    /// A polyline, split wherever it leaves the view.
    pub fn path(&mut self, pts: &[C64], stroke: &str, width: f64, closed: bool) {
        let mut d = String::new();
        let mut pen_down = false;
        for &z in pts {
            if !self.inside(z) {
                pen_down = false;
                continue;
            }
            let (x, y) = self.map(z);
            let _ = write!(d, "{}{x:.3},{y:.3} ", if pen_down { 'L' } else { 'M' });
            pen_down = true;
        }
        if closed && !d.is_empty() {
            d.push('Z');
        }
        if !d.is_empty() {
            let _ = writeln!(
                self.body,
                r#"<path d="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#,
                d.trim_end()
            );
        }
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.view;
        let height = self.width * (y1 - y0) / (x1 - x0);
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {w:.3} {height:.3}\">\n{}</svg>\n",
            self.body,
            w = self.width
        )
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("1.5+0.5i").unwrap(), c(1.5, 0.5));
        assert_eq!(parse_complex(" 1.5 - 0.5 i ").unwrap(), c(1.5, -0.5));
        assert_eq!(parse_complex("-2").unwrap(), c(-2.0, 0.0));
        assert_eq!(parse_complex("3i").unwrap(), c(0.0, 3.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("1e-3+2.5E+1i").unwrap(), c(1e-3, 25.0));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn complex_format_round_trips() {
        let z = c(std::f64::consts::PI, -1.0 / 3.0);
        assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
    }

    #[test]
    fn params_json_round_trip() {
        let p = MapParams {
            alpha: 2,
            beta: 5,
            omega: Mat2::new(1.0, 0.25, 0.25, 0.75),
            u0: [0.1, 0.2],
            c: [0.3, -0.4],
            anchor: c(0.0, 0.0),
            residual: 1e-12,
        };
        let text = params_json(&p);
        assert!(text.contains("\"Omega\""));
        assert_eq!(parse_params(&text).unwrap(), p);
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let z = c(1.0 / 3.0, 2.0);
        let csv = points_csv(&[(z, z)]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row[0], 1.0 / 3.0);
    }

    #[test]
    fn svg_uses_path_and_line_only() {
        let mut s = Svg::new(0.0, 1.0, 0.0, 1.0, 100.0);
        s.line(c(0.0, 0.0), c(1.0, 1.0), "black", 1.0);
        s.path(&[c(0.1, 0.1), c(0.5, 0.5), c(5.0, 5.0), c(0.9, 0.2)], "blue", 0.5, false);
        let out = s.render();
        assert_eq!(out.matches("<path").count(), 1);
        assert_eq!(out.matches("<line").count(), 1);
        assert_eq!(out.matches(" M").count() + out.matches("\"M").count(), 2);
    }
}
