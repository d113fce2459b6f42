//! Ground-truth images, noise-free sinograms and seeded Gaussian noise.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::sparse::vector::{norm2, scale};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    ThreePhases,
    SheppLogan,
}

impl std::str::FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "threephases" => Ok(PhantomKind::ThreePhases),
            "sheppLogan" | "shepplogan" | "shepp-logan" => Ok(PhantomKind::SheppLogan),
            other => Err(Error::InvalidArgument(format!(
                "unknown phantom kind {other:?} (expected threephases or sheppLogan)"
            ))),
        }
    }
}

/// An `n×n` image in the pixel order of [`crate::geometry`], values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub n: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// `‖e‖₂ / ‖b̄‖₂`
    pub rel_level: f64,
    pub seed: u64,
}

pub fn make_phantom(kind: PhantomKind, n: usize, seed: u64) -> Result<Phantom> {
    if n < 8 {
        return Err(Error::InvalidArgument(format!("phantom size must be >= 8, got {n}")));
    }
    let values = match kind {
        PhantomKind::ThreePhases => three_phases(n, seed),
        PhantomKind::SheppLogan => shepp_logan(n),
    };
    Ok(Phantom { n, values })
}

/// Pixel-center coordinates in pixel units, origin at the image center.
fn centers(n: usize) -> impl Iterator<Item = (usize, f64, f64)> {
    let h = n as f64 / 2.0;
    (0..n * n).map(move |k| {
        let (r, c) = (k / n, k % n);
        (k, c as f64 - h + 0.5, h - r as f64 - 0.5)
    })
}

/// Uniform point in the disk of radius `radius` by rejection from the square.
fn point_in_disk(rng: &mut SplitMix64, radius: f64) -> (f64, f64) {
    loop {
        let u = rng.uniform(-1.0, 1.0);
        let v = rng.uniform(-1.0, 1.0);
        if u * u + v * v <= 1.0 {
            return (u * radius, v * radius);
        }
    }
}

fn three_phases(n: usize, seed: u64) -> Vec<f64> {
    let nf = n as f64;
    let area_scale = (nf / 128.0) * (nf / 128.0);
    let n_small = (60.0 * area_scale).round() as usize;
    let n_ellipses = (12.0 * area_scale).round() as usize;
    let mut rng = SplitMix64::new(seed);
    let mut img = vec![0.0; n * n];
    let center_radius = 0.45 * nf;

    for _ in 0..n_small {
        let (cx, cy) = point_in_disk(&mut rng, center_radius);
        let r = rng.uniform(0.01, 0.03) * nf;
        paint(&mut img, n, 0.35, |x, y| (x - cx).powi(2) + (y - cy).powi(2) <= r * r);
    }
    for _ in 0..n_ellipses {
        let (cx, cy) = point_in_disk(&mut rng, center_radius);
        let a = rng.uniform(0.05, 0.15) * nf;
        let b = rng.uniform(0.05, 0.15) * nf;
        paint(&mut img, n, 0.7, |x, y| {
            ((x - cx) / a).powi(2) + ((y - cy) / b).powi(2) <= 1.0
        });
    }
    for _ in 0..5 {
        let (cx, cy) = point_in_disk(&mut rng, center_radius);
        let r = rng.uniform(0.1, 0.2) * nf;
        paint(&mut img, n, 1.0, |x, y| (x - cx).powi(2) + (y - cy).powi(2) <= r * r);
    }
    let rim = nf / 2.0;
    for (k, x, y) in centers(n) {
        if x * x + y * y > rim * rim {
            img[k] = 0.0;
        }
    }
    img
}

fn paint(img: &mut [f64], n: usize, value: f64, inside: impl Fn(f64, f64) -> bool) {
    for (k, x, y) in centers(n) {
        if inside(x, y) {
            img[k] = value;
        }
    }
}

/// Modified Shepp–Logan table: intensity, semi-axes a, b, center x0, y0,
/// rotation in degrees, on the `[-1, 1]²` frame.
const SHEPP_LOGAN: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0],
    [-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0],
    [-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0],
    [0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0],
    [0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0],
    [0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0],
    [0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0],
    [0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0],
    [0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0],
];

fn shepp_logan(n: usize) -> Vec<f64> {
    let h = n as f64 / 2.0;
    let mut img = vec![0.0; n * n];
    for (k, x, y) in centers(n) {
        let (u, v) = (x / h, y / h);
        let mut val = 0.0;
        for &[intensity, a, b, x0, y0, phi] in &SHEPP_LOGAN {
            let (s, c) = phi.to_radians().sin_cos();
            let (dx, dy) = (u - x0, v - y0);
            let xr = dx * c + dy * s;
            let yr = -dx * s + dy * c;
            if (xr / a).powi(2) + (yr / b).powi(2) <= 1.0 {
                val += intensity;
            }
        }
        img[k] = val.clamp(0.0, 1.0);
    }
    img
}

/// Noise-free data `b̄ = A·x̄`.
pub fn synth_sinogram(a: &CsrMatrix, x: &Phantom) -> Result<Vec<f64>> {
    a.matvec(&x.values)
}

/// Returns `(b, ‖e‖₂)` with `e` white Gaussian noise rescaled so that
/// `‖e‖₂ = rel_level·‖b̄‖₂` exactly.
pub fn add_noise(b_exact: &[f64], spec: NoiseSpec) -> Result<(Vec<f64>, f64)> {
    if !(spec.rel_level >= 0.0) || !spec.rel_level.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise level must be >= 0, got {}",
            spec.rel_level
        )));
    }
    if spec.rel_level == 0.0 {
        return Ok((b_exact.to_vec(), 0.0));
    }
    let nb = norm2(b_exact);
    if nb == 0.0 {
        return Err(Error::InvalidArgument(
            "cannot scale relative noise to a zero sinogram".into(),
        ));
    }
    let e = noise_vector(b_exact.len(), spec.rel_level * nb, spec.seed);
    let b = b_exact.iter().zip(&e).map(|(x, y)| x + y).collect();
    Ok((b, spec.rel_level * nb))
}

/// Gaussian vector of length `len` scaled to 2-norm `target`.
pub fn noise_vector(len: usize, target: f64, seed: u64) -> Vec<f64> {
    let mut g = SplitMix64::new(seed).normal_vec(len);
    let ng = norm2(&g);
    if ng > 0.0 {
        scale(target / ng, &mut g);
    }
    g
}

/// Writes an `n×n` image as a 16-bit plain PGM (P2), clipping to `[0, 1]`.
pub fn write_pgm(values: &[f64], n: usize, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "P2")?;
    writeln!(w, "{n} {n}")?;
    writeln!(w, "65535")?;
    for row in values.chunks(n) {
        let line: Vec<String> = row
            .iter()
            .map(|v| {
                let c = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
                ((c * 65535.0).round() as u32).to_string()
            })
            .collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn save_pgm(values: &[f64], n: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if values.len() != n * n {
        return Err(Error::DimensionMismatch {
            context: "PGM image",
            expected: n * n,
            got: values.len(),
        });
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_pgm(values, n, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
