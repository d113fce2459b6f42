//! 2D parallel-beam scan geometry.
//!
//! The image is an `N×N` grid of unit pixels centered on the origin. Pixel
//! `(row, col)` has flat index `row·N + col`; row 0 is the top of the image
//! (largest `y`) and column 0 is the left edge (smallest `x`).
//!
//! For a projection angle `θ`, the beam travels along `(−sin θ, cos θ)` and
//! the detector axis is `(cos θ, sin θ)`. Sinogram rows are ordered
//! angle-major: ray index `angle·N_det + det`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeClass {
    /// 128×128 image, 180 angles at 1°, 128 detectors.
    Small,
    /// 420×420 image, 600 angles at 0.3°, 420 detectors.
    Large,
    /// 64×64 image, 90 angles at 2°, 64 detectors.
    Desk,
}

impl std::str::FromStr for SizeClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(SizeClass::Small),
            "large" => Ok(SizeClass::Large),
            "desk" => Ok(SizeClass::Desk),
            other => Err(Error::InvalidArgument(format!("unknown size class {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanGeometry {
    pub n_pixels: usize,
    pub angles_deg: Vec<f64>,
    pub n_det: usize,
    pub det_width: f64,
    pub det_offset: f64,
}

/// Central line of one detector cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    /// Point on the ray: the detector-cell center projected through the origin.
    pub point: [f64; 2],
    /// Unit beam direction.
    pub direction: [f64; 2],
    /// Unit detector axis, perpendicular to `direction`.
    pub axis: [f64; 2],
    /// Signed detector coordinate of the cell center along `axis`.
    pub offset: f64,
    pub half_width: f64,
}

/// `(sin, cos)` of an angle in degrees, exact at multiples of 90°.
pub fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let r = deg.rem_euclid(360.0);
    if r == 0.0 {
        (0.0, 1.0)
    } else if r == 90.0 {
        (1.0, 0.0)
    } else if r == 180.0 {
        (0.0, -1.0)
    } else if r == 270.0 {
        (-1.0, 0.0)
    } else {
        r.to_radians().sin_cos()
    }
}

/// `count` angles `0, step, 2·step, …` computed as `i·step` (no accumulation).
pub fn uniform_angles(count: usize, step_deg: f64) -> Vec<f64> {
    (0..count).map(|i| i as f64 * step_deg).collect()
}

impl ScanGeometry {
    pub fn new(
        n_pixels: usize,
        angles_deg: Vec<f64>,
        n_det: usize,
        det_width: f64,
        det_offset: f64,
    ) -> Result<Self> {
        let g = Self {
            n_pixels,
            angles_deg,
            n_det,
            det_width,
            det_offset,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pixels == 0 {
            return Err(Error::InvalidArgument("n_pixels must be >= 1".into()));
        }
        if self.n_det == 0 {
            return Err(Error::InvalidArgument("n_det must be >= 1".into()));
        }
        if self.angles_deg.is_empty() {
            return Err(Error::InvalidArgument("angle set is empty".into()));
        }
        if self.angles_deg.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("non-finite angle".into()));
        }
        if !(self.det_width > 0.0 && self.det_width.is_finite()) {
            return Err(Error::InvalidArgument("det_width must be > 0".into()));
        }
        if !self.det_offset.is_finite() {
            return Err(Error::InvalidArgument("det_offset must be finite".into()));
        }
        Ok(())
    }

    pub fn standard(size: SizeClass) -> Self {
        let (n, count, step) = match size {
            SizeClass::Small => (128, 180, 1.0),
            SizeClass::Large => (420, 600, 0.3),
            SizeClass::Desk => (64, 90, 2.0),
        };
        Self {
            n_pixels: n,
            angles_deg: uniform_angles(count, step),
            n_det: n,
            det_width: 1.0,
            det_offset: 0.0,
        }
    }

    pub fn n_angles(&self) -> usize {
        self.angles_deg.len()
    }

    /// Number of rays, `N_ang·N_det`.
    pub fn m(&self) -> usize {
        self.n_angles() * self.n_det
    }

    /// Number of pixels, `N²`.
    pub fn n(&self) -> usize {
        self.n_pixels * self.n_pixels
    }

    pub fn ray_index(&self, angle_index: usize, det_index: usize) -> usize {
        angle_index * self.n_det + det_index
    }

    pub fn ray_of(&self, angle_index: usize, det_index: usize) -> Result<Ray> {
        if angle_index >= self.n_angles() {
            return Err(Error::InvalidArgument(format!(
                "angle index {angle_index} out of range 0..{}",
                self.n_angles()
            )));
        }
        if det_index >= self.n_det {
            return Err(Error::InvalidArgument(format!(
                "detector index {det_index} out of range 0..{}",
                self.n_det
            )));
        }
        let (s, c) = sin_cos_deg(self.angles_deg[angle_index]);
        let offset =
            (det_index as f64 - (self.n_det as f64 - 1.0) / 2.0) * self.det_width + self.det_offset;
        Ok(Ray {
            point: [offset * c, offset * s],
            direction: [-s, c],
            axis: [c, s],
            offset,
            half_width: self.det_width / 2.0,
        })
    }

    /// Center of pixel `(row, col)`.
    pub fn pixel_center(&self, row: usize, col: usize) -> [f64; 2] {
        let h = self.n_pixels as f64 / 2.0;
        [col as f64 - h + 0.5, h - row as f64 - 0.5]
    }
}
