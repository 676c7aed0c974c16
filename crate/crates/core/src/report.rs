//! File output: CSV tables, JSON documents, point files and SVG plots.
//!
//! Output is byte-for-byte reproducible: floats are written in their
//! shortest round-trip form and maps are ordered.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::PointSet;

/// Version tag carried by every JSON report.
pub const SPEC_VERSION: &str = "1.0";

/// A CSV table with a header row and LF line endings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

/// Shortest round-trip decimal form; `inf` for infinities.
pub fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

/// Reads points, one per line, coordinates separated by commas and/or
/// whitespace. Blank lines and lines starting with `#` are skipped.
pub fn read_points(path: &Path) -> Result<PointSet> {
    parse_points(&std::fs::read_to_string(path)?)
}

pub fn parse_points(text: &str) -> Result<PointSet> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::input(format!("line {}: cannot parse {t:?} as a number", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    PointSet::from_rows(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Dots,
    Crosses,
    Steps,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
    pub mark: Mark,
    pub color: &'static str,
}

/// Index-vs-value plot with a logarithmic value axis, in the style of an
/// eigenvalue decay figure. Non-positive values are drawn at the floor.
pub fn spectrum_svg(title: &str, series: &[Series]) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 50.0);
    let count = series.iter().map(|s| s.values.len()).max().unwrap_or(1).max(2);
    let positive = series.iter().flat_map(|s| s.values.iter().copied()).filter(|v| *v > 0.0 && v.is_finite());
    let (mut lo, mut hi) = positive.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (1e-3, 1.0);
    }
    let lo_exp = lo.log10().floor().max(hi.log10().ceil() - 16.0);
    let hi_exp = hi.log10().ceil().max(lo_exp + 1.0);
    let px = |i: f64| left + (w - left - right) * i / (count - 1) as f64;
    let py = |v: f64| {
        let e = if v > 0.0 { v.log10().clamp(lo_exp, hi_exp) } else { lo_exp };
        top + (h - top - bottom) * (hi_exp - e) / (hi_exp - lo_exp)
    };

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - left - right,
        h - top - bottom
    );
    let mut e = lo_exp;
    while e <= hi_exp {
        let y = py(10f64.powf(e));
        let _ = writeln!(out, r##"<line x1="{left}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, w - right);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">1e{}</text>"#, left - 6.0, y + 4.0, e as i64);
        e += ((hi_exp - lo_exp) / 8.0).ceil().max(1.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">index j</text>"#, w / 2.0, h - 14.0);
    for (si, s) in series.iter().enumerate() {
        match s.mark {
            Mark::Steps => {
                let mut d = String::new();
                for (i, &v) in s.values.iter().enumerate() {
                    let (x0, x1, y) = (px(i as f64 - 0.5).max(left), px(i as f64 + 0.5).min(w - right), py(v));
                    let _ = write!(d, "{}{x0:.2},{y:.2} L{x1:.2},{y:.2} ", if i == 0 { "M" } else { "L" });
                }
                let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{}" stroke-width="2"/>"#, d.trim_end(), s.color);
            }
            Mark::Dots => {
                for (i, &v) in s.values.iter().enumerate() {
                    let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#, px(i as f64), py(v), s.color);
                }
            }
            Mark::Crosses => {
                for (i, &v) in s.values.iter().enumerate() {
                    let (x, y) = (px(i as f64), py(v));
                    let _ = writeln!(
                        out,
                        r#"<path d="M{:.2},{:.2} L{:.2},{:.2} M{:.2},{:.2} L{:.2},{:.2}" stroke="{}"/>"#,
                        x - 3.0, y - 3.0, x + 3.0, y + 3.0, x - 3.0, y + 3.0, x + 3.0, y - 3.0, s.color
                    );
                }
            }
        }
        let ly = top + 16.0 + 16.0 * si as f64;
        let _ = writeln!(out, r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/>"#, w - right - 190.0, ly - 9.0, s.color);
        let _ = writeln!(out, r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="12">{}</text>"#, w - right - 175.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
