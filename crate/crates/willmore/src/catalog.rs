//! Initial-curve catalog: named parametric presets sampled at uniform
//! parameter values, plus two-column point files. Curvature and velocity of
//! the initial state come from the same discrete formulas the solvers use, so
//! step one starts from self-consistent data.

use crate::error::{Error, Result};
use crate::grid::{GeometricState, NodalCurve, Vec2};
use crate::redistribute::state_on_curve;
use std::f64::consts::PI;
use std::path::Path;

/// Names accepted by `curve_catalog`, in catalog order.
pub const PRESET_NAMES: [&str; 10] = [
    "circle",
    "ellipse4",
    "ellipse6",
    "bump",
    "flower32",
    "tear",
    "wiggle",
    "lemniscate",
    "petal5",
    "petal3",
];

fn preset_point(name: &str, rho: f64) -> Option<Vec2> {
    let a = 2.0 * PI * rho;
    let (s, c) = a.sin_cos();
    let p = match name {
        "circle" => Vec2::new(c, s),
        "ellipse4" => Vec2::new(4.0 * c, s),
        "ellipse6" => Vec2::new(6.0 * c, s),
        "bump" => {
            let g = 1.0 + 0.3 * (-(a - PI).powi(2) / 0.16).exp();
            Vec2::new(4.0 + g * c, g * s)
        }
        "flower32" => {
            let r = 1.0 + 0.3 * (2.0 * a).sin() + 0.2 * (4.0 * a).cos();
            Vec2::new(r * c, r * s)
        }
        "tear" => Vec2::new(0.5 * s, 1.5 * c * (1.0 + c)),
        "wiggle" => {
            let y = 0.5 * s + c.sin() + s * (0.2 + s * (3.0 * a).sin().powi(2));
            Vec2::new(1.2 * c, y)
        }
        "lemniscate" => {
            let d = 1.0 + s * s;
            Vec2::new(c / d, c * s / d)
        }
        "petal5" => {
            let r = 1.0 + 0.5 * (5.0 * a).cos();
            Vec2::new(r * c, r * s)
        }
        "petal3" => {
            let r = 1.0 - 0.65 * (3.0 * a).cos();
            Vec2::new(r * c, r * s)
        }
        _ => return None,
    };
    Some(p)
}

/// Samples a named preset at m uniform parameter values.
pub fn preset_curve(name: &str, m: usize) -> Result<NodalCurve> {
    if m < 4 {
        return Err(Error::GridTooSmall { m });
    }
    let mut points = Vec::with_capacity(m);
    for i in 0..m {
        let rho = i as f64 / m as f64;
        match preset_point(name, rho) {
            Some(p) => points.push(p),
            None => {
                return Err(Error::UnknownPreset {
                    name: name.to_string(),
                    available: PRESET_NAMES.join(", "),
                })
            }
        }
    }
    NodalCurve::new(points)
}

/// Reads a curve from a plain-text file: one `x y` (or `x,y`) pair per line,
/// blank lines and `#` comments ignored.
pub fn load_point_file(path: &Path) -> Result<NodalCurve> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::CurveFile {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed
            .split(|ch: char| ch == ',' || ch.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(Error::CurveFile {
                path: path.display().to_string(),
                detail: format!(
                    "line {}: expected two columns, found {}",
                    lineno + 1,
                    fields.len()
                ),
            });
        }
        let parse = |f: &str| -> Result<f64> {
            f.parse().map_err(|_| Error::CurveFile {
                path: path.display().to_string(),
                detail: format!("line {}: not a number: {f:?}", lineno + 1),
            })
        };
        points.push(Vec2::new(parse(fields[0])?, parse(fields[1])?));
    }
    if points.len() < 4 {
        return Err(Error::CurveFile {
            path: path.display().to_string(),
            detail: format!("need at least 4 points, found {}", points.len()),
        });
    }
    NodalCurve::new(points)
}

/// Builds the initial state for a preset name or a point-file path. Point
/// files bring their own node count; presets are sampled at m nodes.
pub fn curve_catalog(name: &str, m: usize) -> Result<GeometricState> {
    let curve = if PRESET_NAMES.contains(&name) {
        preset_curve(name, m)?
    } else {
        let path = Path::new(name);
        if path.is_file() {
            load_point_file(path)?
        } else {
            return Err(Error::UnknownPreset {
                name: name.to_string(),
                available: PRESET_NAMES.join(", "),
            });
        }
    };
    state_on_curve(curve)
}
