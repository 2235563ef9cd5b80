//! CSV tables and self-contained SVG plots for reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::data::format_f64;
use crate::error::{Error, Result};

/// Writes a header and rows with the `csv` crate.
pub fn write_csv<S: AsRef<str>>(path: impl AsRef<Path>, header: &[&str], rows: &[Vec<S>]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record(r.iter().map(|s| s.as_ref())).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

/// Shortest decimal that reads back to the same `f64`.
pub fn num(v: f64) -> String {
    format_f64(v)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Dot,
    Line,
    /// a larger outlined marker for highlighted points
    Star,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
    pub color: String,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>, mark: Mark, color: &str) -> Self {
        Series {
            name: name.into(),
            points,
            mark,
            color: color.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// draw y = x
    pub diagonal: bool,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Default::default()
        }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn range(&self, pick: impl Fn(&(f64, f64)) -> f64, fixed: Option<(f64, f64)>) -> (f64, f64) {
        if let Some(r) = fixed {
            return r;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in self.series.iter().flat_map(|s| &s.points) {
            let v = pick(p);
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            return (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            return (lo - 0.5, hi + 0.5);
        }
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    }

    pub fn to_svg(&self) -> String {
        let (x0, x1) = self.range(|p| p.0, self.x_range);
        let (y0, y1) = self.range(|p| p.1, self.y_range);
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for k in 0..=4 {
            let t = k as f64 / 4.0;
            let xv = x0 + t * (x1 - x0);
            let yv = y0 + t * (y1 - y0);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                sx(xv),
                TOP + ph + 18.0,
                tick(xv)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                sy(yv) + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        if self.diagonal {
            let lo = x0.max(y0);
            let hi = x1.min(y1);
            if lo < hi {
                let _ = writeln!(
                    s,
                    r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#888" stroke-dasharray="4 3"/>"##,
                    sx(lo),
                    sy(lo),
                    sx(hi),
                    sy(hi)
                );
            }
        }
        for (i, ser) in self.series.iter().enumerate() {
            let finite = ser.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite());
            match ser.mark {
                Mark::Line => {
                    let pts: Vec<String> =
                        finite.map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                        ser.color,
                        pts.join(" ")
                    );
                }
                Mark::Dot => {
                    let _ = writeln!(s, r#"<g fill="{}" fill-opacity="0.55">"#, ser.color);
                    for &(x, y) in finite {
                        let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="2"/>"#, sx(x), sy(y));
                    }
                    s.push_str("</g>\n");
                }
                Mark::Star => {
                    for &(x, y) in finite {
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{:.1}" cy="{:.1}" r="6" fill="{}" stroke="black" stroke-width="1.5"/>"#,
                            sx(x),
                            sy(y),
                            ser.color
                        );
                    }
                }
            }
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = W - RIGHT + 12.0;
            let _ = writeln!(
                s,
                r#"<rect x="{lx}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{}" y="{:.1}">{}</text>"#,
                ly - 9.0,
                ser.color,
                lx + 15.0,
                ly,
                escape(&ser.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_svg()).map_err(|e| Error::io(path, e))
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.into() }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_is_self_contained() {
        let p = Plot::new("a < b", "x", "y")
            .with(Series::new("pts", vec![(0.0, 1.0), (1.0, 2.0), (f64::NAN, 0.0)], Mark::Dot, color(0)))
            .with(Series::new("curve", vec![(0.0, 0.0), (1.0, 1.0)], Mark::Line, color(1)));
        let svg = p.to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(!svg.contains("href"));
    }

    #[test]
    fn ticks_are_short() {
        assert_eq!(tick(0.25), "0.25");
        assert_eq!(tick(2.0), "2");
        assert_eq!(tick(-0.0), "0");
        assert_eq!(tick(1e-6), "1.00e-6");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_csv(&p, &["k", "err"], &[vec!["1".to_string(), num(0.125)]]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "k,err\n1,0.125\n");
        assert!(write_csv(dir.path().join("no/such/t.csv"), &["a"], &Vec::<Vec<String>>::new()).is_err());
    }
}
