//! Sparse CT system matrices under the line, strip and Joseph models, and
//! unmatched back projectors built from them.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Ray, ScanGeometry};
use crate::sparse::CsrMatrix;

/// Contributions below this (in pixel-length units) are treated as grazing
/// and dropped.
pub const GRAZE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProjModel {
    /// Intersection length of the detector-center line with each pixel.
    Line,
    /// Area of the beam strip inside each pixel divided by the detector width.
    Strip,
    /// Linear interpolation along the dominant axis (Joseph's method).
    Joseph,
}

impl ProjModel {
    pub const ALL: [ProjModel; 3] = [ProjModel::Line, ProjModel::Strip, ProjModel::Joseph];

    pub fn name(self) -> &'static str {
        match self {
            ProjModel::Line => "line",
            ProjModel::Strip => "strip",
            ProjModel::Joseph => "joseph",
        }
    }
}

impl fmt::Display for ProjModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProjModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(ProjModel::Line),
            "strip" => Ok(ProjModel::Strip),
            "joseph" | "interp" => Ok(ProjModel::Joseph),
            other => Err(Error::InvalidArgument(format!(
                "unknown projection model {other:?} (expected line, strip or joseph)"
            ))),
        }
    }
}

/// A forward projector `A` (m×n) with a back projector `B` (n×m).
#[derive(Debug, Clone)]
pub struct ProjectorPair {
    pub a: CsrMatrix,
    pub b: CsrMatrix,
    pub label_a: String,
    pub label_b: String,
}

impl ProjectorPair {
    pub fn new(a: CsrMatrix, b: CsrMatrix, label_a: String, label_b: String) -> Result<Self> {
        if a.nrows() != b.ncols() || a.ncols() != b.nrows() {
            return Err(Error::ShapeMismatch {
                context: "projector pair (B must be n×m for A m×n)",
                left: a.shape(),
                right: b.shape(),
            });
        }
        Ok(Self {
            a,
            b,
            label_a,
            label_b,
        })
    }

    /// Matched pair `(A, Aᵀ)`.
    pub fn matched(a: CsrMatrix, label: &str) -> Self {
        let b = a.transpose();
        Self {
            a,
            b,
            label_a: label.to_string(),
            label_b: format!("{label}^T"),
        }
    }
}

/// Builds the `m×n` system matrix of `g` under `model`. Rays that miss the
/// image give empty rows.
pub fn build_matrix(g: &ScanGeometry, model: ProjModel) -> Result<CsrMatrix> {
    g.validate()?;
    let rays: Vec<(usize, usize)> = (0..g.n_angles())
        .flat_map(|a| (0..g.n_det).map(move |d| (a, d)))
        .collect();
    let rows: Vec<Vec<(usize, f64)>> = rays
        .par_iter()
        .map(|&(a, d)| {
            let ray = g.ray_of(a, d).expect("indices in range");
            match model {
                ProjModel::Line => line_row(g.n_pixels, &ray),
                ProjModel::Strip => strip_row(g.n_pixels, &ray),
                ProjModel::Joseph => joseph_row(g.n_pixels, &ray),
            }
        })
        .collect();
    CsrMatrix::from_rows(g.n(), rows)
}

/// `A` from `model_a` and `B = transpose(A')` with `A'` from `model_b`.
pub fn build_pair(g: &ScanGeometry, model_a: ProjModel, model_b: ProjModel) -> Result<ProjectorPair> {
    let a = build_matrix(g, model_a)?;
    let b = if model_a == model_b {
        a.transpose()
    } else {
        build_matrix(g, model_b)?.transpose()
    };
    ProjectorPair::new(a, b, format!("A_{model_a}"), format!("A_{model_b}^T"))
}

/// `B_τ`: the transpose of `A` keeping only entries `≥ τ·max(A)`.
///
/// `τ = 0` returns exactly `Aᵀ`; `τ > 1` returns an empty matrix.
pub fn threshold_transpose(a: &CsrMatrix, tau: f64) -> Result<CsrMatrix> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("tau must be >= 0, got {tau}")));
    }
    if let Some(min) = a.min_value() {
        if min < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "threshold_transpose needs a nonnegative matrix (found entry {min})"
            )));
        }
    }
    if tau == 0.0 {
        return Ok(a.transpose());
    }
    let cut = tau * a.max_value().unwrap_or(0.0);
    Ok(a.filter(|_, _, v| v >= cut).transpose())
}

/// `‖B − Aᵀ‖_F / ‖A‖_F`.
pub fn unmatchedness(pair: &ProjectorPair) -> Result<f64> {
    let at = pair.a.transpose();
    let diff = pair.b.frob_diff(&at)?;
    Ok(diff / pair.a.frob_norm())
}

/// Conventional file name, `A_<model>_<N>x<Nang>x<Ndet>.mtx`.
pub fn matrix_file_name(g: &ScanGeometry, model: ProjModel) -> String {
    format!(
        "A_{}_{}x{}x{}.mtx",
        model.name(),
        g.n_pixels,
        g.n_angles(),
        g.n_det
    )
}

/// Flat pixel index of the pixel containing `(x, y)` with half-open bounds
/// `[lo, hi)` in both directions.
fn pixel_at(n: usize, x: f64, y: f64) -> Option<usize> {
    let h = n as f64 / 2.0;
    let col = (x + h).floor();
    let iy = (y + h).floor();
    if col < 0.0 || iy < 0.0 || col >= n as f64 || iy >= n as f64 {
        return None;
    }
    let row = n - 1 - iy as usize;
    Some(row * n + col as usize)
}

/// Parameter interval where `p + t·d` lies in the image box `[-h, h)²`.
fn clip_to_box(h: f64, p: [f64; 2], d: [f64; 2]) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for k in 0..2 {
        if d[k] == 0.0 {
            if p[k] < -h || p[k] >= h {
                return None;
            }
        } else {
            let t0 = (-h - p[k]) / d[k];
            let t1 = (h - p[k]) / d[k];
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
    }
    (hi - lo > GRAZE_EPS).then_some((lo, hi))
}

/// Siddon-style traversal: split the chord at every grid-line crossing and
/// attribute each piece to the pixel containing its midpoint.
fn line_row(n: usize, ray: &Ray) -> Vec<(usize, f64)> {
    let h = n as f64 / 2.0;
    let (p, d) = (ray.point, ray.direction);
    let Some((t_lo, t_hi)) = clip_to_box(h, p, d) else {
        return Vec::new();
    };
    let mut ts = Vec::with_capacity(2 * n + 4);
    ts.push(t_lo);
    ts.push(t_hi);
    for k in 0..2 {
        if d[k] != 0.0 {
            for line in 0..=n {
                let t = (line as f64 - h - p[k]) / d[k];
                if t > t_lo && t < t_hi {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    let mut row = Vec::with_capacity(ts.len());
    for w in ts.windows(2) {
        let len = w[1] - w[0];
        if len <= GRAZE_EPS {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        if let Some(px) = pixel_at(n, p[0] + tm * d[0], p[1] + tm * d[1]) {
            row.push((px, len));
        }
    }
    row
}

/// CDF of `δ = U₁·p + U₂·q` with `U₁, U₂ ~ U[-½, ½]` and `p ≥ q ≥ 0`, i.e.
/// the area of the unit pixel on one side of a line at signed distance `u`
/// from its center.
fn pixel_area_below(u: f64, p: f64, q: f64) -> f64 {
    let outer = 0.5 * (p + q);
    if u <= -outer {
        return 0.0;
    }
    if u >= outer {
        return 1.0;
    }
    if q < 1e-15 {
        return ((u + 0.5 * p) / p).clamp(0.0, 1.0);
    }
    let inner = 0.5 * (p - q);
    if u <= -inner {
        let t = u + outer;
        t * t / (2.0 * p * q)
    } else if u <= inner {
        q / (2.0 * p) + (u + inner) / p
    } else {
        let t = outer - u;
        1.0 - t * t / (2.0 * p * q)
    }
}

fn strip_row(n: usize, ray: &Ray) -> Vec<(usize, f64)> {
    let h = n as f64 / 2.0;
    let [c, s] = ray.axis;
    let (p, q) = (c.abs().max(s.abs()), c.abs().min(s.abs()));
    let hw = ray.half_width;
    let width = 2.0 * hw;
    let reach = hw + 0.5 * (p + q);
    let u0 = ray.offset;
    let mut row = Vec::new();
    let mut push = |rr: usize, cc: usize| {
        let x = cc as f64 - h + 0.5;
        let y = h - rr as f64 - 0.5;
        let proj = x * c + y * s;
        let area = pixel_area_below(u0 + hw - proj, p, q) - pixel_area_below(u0 - hw - proj, p, q);
        let w = area / width;
        if w > GRAZE_EPS {
            row.push((rr * n + cc, w));
        }
    };
    // Walk the axis along which the strip's footprint per line is bounded.
    let index_range = |lo: f64, hi: f64| -> (usize, usize) {
        // Coordinates are pixel-center values; map to indices and widen by one.
        let a = ((lo + h - 0.5).floor() - 1.0).max(0.0) as usize;
        let b = ((hi + h - 0.5).ceil() + 1.0).min(n as f64 - 1.0);
        if b < 0.0 {
            return (1, 0);
        }
        (a, b as usize)
    };
    if c.abs() >= s.abs() {
        for rr in 0..n {
            let y = h - rr as f64 - 0.5;
            let x0 = (u0 - y * s - reach) / c;
            let x1 = (u0 - y * s + reach) / c;
            let (a, b) = index_range(x0.min(x1), x0.max(x1));
            for cc in a..=b.min(n - 1) {
                if a <= b {
                    push(rr, cc);
                }
            }
        }
    } else {
        for cc in 0..n {
            let x = cc as f64 - h + 0.5;
            let y0 = (u0 - x * c - reach) / s;
            let y1 = (u0 - x * c + reach) / s;
            // Rows run top-down, so convert y to the row-center coordinate.
            let (a, b) = index_range(-y0.max(y1), -y0.min(y1));
            for rr in a..=b.min(n - 1) {
                if a <= b {
                    push(rr, cc);
                }
            }
        }
    }
    row
}

fn joseph_row(n: usize, ray: &Ray) -> Vec<(usize, f64)> {
    let h = n as f64 / 2.0;
    let (p, d) = (ray.point, ray.direction);
    let mut row = Vec::with_capacity(2 * n);
    // x-stepping wins ties (within rounding) so 45° is deterministic.
    if d[0].abs() >= d[1].abs() - 1e-12 {
        let step = 1.0 / d[0].abs();
        for col in 0..n {
            let x = col as f64 - h + 0.5;
            let y = p[1] + (x - p[0]) / d[0] * d[1];
            let fy = h - y - 0.5;
            deposit(&mut row, fy, step, |r| r * n + col, n);
        }
    } else {
        let step = 1.0 / d[1].abs();
        for r in 0..n {
            let y = h - r as f64 - 0.5;
            let x = p[0] + (y - p[1]) / d[1] * d[0];
            let fx = x + h - 0.5;
            deposit(&mut row, fx, step, |c| r * n + c, n);
        }
    }
    row
}

/// Splits `step` between the two pixel centers straddling the continuous
/// index `f`; pixels outside `0..n` receive nothing.
fn deposit(row: &mut Vec<(usize, f64)>, f: f64, step: f64, index: impl Fn(usize) -> usize, n: usize) {
    let base = f.floor();
    let frac = f - base;
    for (k, w) in [(base, 1.0 - frac), (base + 1.0, frac)] {
        let wv = w * step;
        if k >= 0.0 && k < n as f64 && wv > GRAZE_EPS {
            row.push((index(k as usize), wv));
        }
    }
}
