//! Minimal polyline SVG plots.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;

use allen_cahn::contour::{chain_segments, marching_squares, ScalarGrid};
use allen_cahn::{PlanePoint, Potential, PotentialSpec};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 50.0;

pub struct Series {
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub width: f64,
}

pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Filled circles, e.g. poles.
    pub markers: Vec<(f64, f64)>,
    /// Plot `log10(y)`; nonpositive values are dropped.
    pub log_y: bool,
    /// Same scale on both axes.
    pub equal_aspect: bool,
}

impl Figure {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            markers: Vec::new(),
            log_y: false,
            equal_aspect: false,
        }
    }

    pub fn line(&mut self, points: Vec<(f64, f64)>, color: &'static str, width: f64) {
        self.series.push(Series {
            points,
            color,
            width,
        });
    }

    fn transformed(&self, (x, y): (f64, f64)) -> Option<(f64, f64)> {
        let y = if self.log_y {
            if y <= 0.0 {
                return None;
            }
            y.log10()
        } else {
            y
        };
        (x.is_finite() && y.is_finite()).then_some((x, y))
    }

    fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let pts = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .chain(self.markers.iter())
            .filter_map(|&p| self.transformed(p));
        let mut b: Option<(f64, f64, f64, f64)> = None;
        for (x, y) in pts {
            b = Some(match b {
                None => (x, x, y, y),
                Some((x0, x1, y0, y1)) => (x0.min(x), x1.max(x), y0.min(y), y1.max(y)),
            });
        }
        b.map(|(x0, x1, y0, y1)| {
            let pad = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, b + 0.5) };
            let (x0, x1) = pad(x0, x1);
            let (y0, y1) = pad(y0, y1);
            (x0, x1, y0, y1)
        })
    }

    /// Renders the figure; `None` when there is nothing to draw.
    pub fn render(&self) -> Option<String> {
        let (x0, x1, y0, y1) = self.bounds()?;
        let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
        let (mut sx, mut sy) = (pw / (x1 - x0), ph / (y1 - y0));
        if self.equal_aspect {
            let s = sx.min(sy);
            sx = s;
            sy = s;
        }
        let map = |(x, y): (f64, f64)| (MARGIN + (x - x0) * sx, HEIGHT - MARGIN - (y - y0) * sy);
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black" stroke-width="0.5"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="25" font-size="14" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let y_name = if self.log_y {
            format!("log10 {}", self.y_label)
        } else {
            self.y_label.clone()
        };
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{} [{x0:.3}, {x1:.3}]</text>"#,
            WIDTH / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="15" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 15 {})">{} [{y0:.3}, {y1:.3}]</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&y_name)
        );
        for s in &self.series {
            let pts: Vec<String> = s
                .points
                .iter()
                .filter_map(|&p| self.transformed(p))
                .map(|p| {
                    let (a, b) = map(p);
                    format!("{a:.2},{b:.2}")
                })
                .collect();
            if pts.len() < 2 {
                continue;
            }
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="{}" points="{}"/>"#,
                s.color,
                s.width,
                pts.join(" ")
            );
        }
        for &m in &self.markers {
            if let Some(p) = self.transformed(m) {
                let (a, b) = map(p);
                let _ = writeln!(out, r#"<circle cx="{a:.2}" cy="{b:.2}" r="3" fill="red"/>"#);
            }
        }
        out.push_str("</svg>\n");
        Some(out)
    }

    /// Writes the figure if it has content. Returns whether a file was written.
    pub fn save(&self, path: &Path) -> Result<bool> {
        match self.render() {
            Some(text) => {
                std::fs::write(path, text)?;
                Ok(true)
            }
            None => Ok(false),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Twelve geometrically spaced levels between `lo` and `hi`.
pub fn geometric_levels(lo: f64, hi: f64) -> Vec<f64> {
    (0..12)
        .map(|k| lo * (hi / lo).powf(k as f64 / 11.0))
        .collect()
}

/// Level sets of `W` on a box, skipping cells that straddle a pole.
pub fn level_set_lines(spec: &PotentialSpec, half: f64, n: usize) -> Vec<Vec<(f64, f64)>> {
    let grid = ScalarGrid::sample(|u| spec.value(u), (-half, half), (-half, half), n, n);
    let poles = spec.poles();
    let cell = 2.0 * half / (n - 1) as f64;
    let radius = spec.mollify_radius().max(2.0 * cell);
    let mut lines = Vec::new();
    for level in geometric_levels(1e-2, 10.0) {
        let segments: Vec<(PlanePoint, PlanePoint)> = marching_squares(&grid, level, |_| true)
            .into_iter()
            .filter(|(a, b)| {
                poles
                    .iter()
                    .all(|p| a.distance(*p) > radius && b.distance(*p) > radius)
            })
            .collect();
        for chain in chain_segments(&segments) {
            lines.push(chain.iter().map(|p| (p.u1, p.u2)).collect());
        }
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_figure_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.svg");
        let fig = Figure::new("t", "x", "y");
        assert!(!fig.save(&path).unwrap());
        assert!(!path.exists());
    }

    #[test]
    fn renders_polyline_without_timestamp() {
        let mut fig = Figure::new("t", "x", "y");
        fig.line(vec![(0.0, 1.0), (1.0, 10.0), (2.0, 100.0)], "blue", 1.0);
        fig.log_y = true;
        let s = fig.render().unwrap();
        assert!(s.contains("<polyline"));
        assert_eq!(s, fig.render().unwrap());
    }

    #[test]
    fn levels_are_geometric() {
        let l = geometric_levels(0.01, 10.0);
        assert_eq!(l.len(), 12);
        assert!((l[0] - 0.01).abs() < 1e-15 && (l[11] - 10.0).abs() < 1e-12);
        let r = l[1] / l[0];
        assert!(l.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-12));
    }
}
