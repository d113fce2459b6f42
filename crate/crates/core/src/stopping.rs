//! Stopping rules aimed at the point of semi-convergence: the discrepancy
//! principle (DP) and the normalized cumulative periodogram (NCP) criterion.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    None,
    Dp,
    Ncp,
}

impl std::str::FromStr for StopRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(StopRule::None),
            "dp" => Ok(StopRule::Dp),
            "ncp" => Ok(StopRule::Ncp),
            other => Err(Error::Config(format!(
                "unknown stop rule {other:?} (expected none, dp or ncp)"
            ))),
        }
    }
}

/// Sinogram shape used to reshape residuals for the NCP test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SinogramLayout {
    pub n_det: usize,
    pub n_ang: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingConfig {
    pub rule: StopRule,
    /// DP safety factor τ ≥ 1.
    pub dp_tau: f64,
    /// `‖e‖₂`; required by DP.
    pub noise_norm: Option<f64>,
    pub ncp_patience: usize,
    /// Required by NCP.
    pub layout: Option<SinogramLayout>,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        Self {
            rule: StopRule::None,
            dp_tau: 1.0,
            noise_norm: None,
            ncp_patience: 3,
            layout: None,
        }
    }
}

impl StoppingConfig {
    pub fn dp(noise_norm: f64) -> Self {
        Self {
            rule: StopRule::Dp,
            noise_norm: Some(noise_norm),
            ..Self::default()
        }
    }

    pub fn ncp(layout: SinogramLayout) -> Self {
        Self {
            rule: StopRule::Ncp,
            layout: Some(layout),
            ..Self::default()
        }
    }

    /// Checks invariants; `m` is the residual length when known.
    pub fn validate(&self, m: Option<usize>) -> Result<()> {
        if !(self.dp_tau >= 1.0) {
            return Err(Error::Config(format!(
                "dp_tau must be >= 1, got {}",
                self.dp_tau
            )));
        }
        if let Some(e) = self.noise_norm {
            if !(e >= 0.0) || !e.is_finite() {
                return Err(Error::Config(format!("noise_norm must be >= 0, got {e}")));
            }
        }
        if self.rule == StopRule::Dp && self.noise_norm.is_none() {
            return Err(Error::Config(
                "discrepancy principle requested without a noise norm".into(),
            ));
        }
        if self.rule == StopRule::Ncp {
            if self.layout.is_none() {
                return Err(Error::Config("NCP requested without a sinogram layout".into()));
            }
            if self.ncp_patience == 0 {
                return Err(Error::Config("ncp_patience must be >= 1".into()));
            }
        }
        if let (Some(l), Some(m)) = (self.layout, m) {
            if l.n_det * l.n_ang != m {
                return Err(Error::Config(format!(
                    "layout {}x{} does not match residual length {m}",
                    l.n_det, l.n_ang
                )));
            }
        }
        Ok(())
    }

    /// Right-hand side `τ·‖e‖₂` of the DP test, when a noise norm is set.
    pub fn dp_threshold(&self) -> Option<f64> {
        self.noise_norm.map(|e| self.dp_tau * e)
    }
}

/// `true` iff `resnorm ≤ τ·‖e‖₂`.
pub fn dp_check(resnorm: f64, cfg: &StoppingConfig) -> Result<bool> {
    let rhs = cfg.dp_threshold().ok_or_else(|| {
        Error::Config("discrepancy principle requested without a noise norm".into())
    })?;
    Ok(resnorm <= rhs)
}

/// First index (0-based) of `resnorms` passing the DP test.
pub fn dp_index(resnorms: &[f64], threshold: f64) -> Option<usize> {
    resnorms.iter().position(|&r| r <= threshold)
}

/// Reusable NCP evaluator holding an FFT plan for one layout.
pub struct Ncp {
    layout: SinogramLayout,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Ncp {
    pub fn new(layout: SinogramLayout) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(layout.n_det.max(1));
        Self { layout, fft }
    }

    /// Mean over angles of the 2-norm distance between the residual's
    /// normalized cumulative periodogram and the white-noise ramp `i/q`.
    pub fn distance(&self, residual: &[f64]) -> Result<f64> {
        let SinogramLayout { n_det, n_ang } = self.layout;
        if residual.len() != n_det * n_ang {
            return Err(Error::DimensionMismatch {
                context: "NCP residual",
                expected: n_det * n_ang,
                got: residual.len(),
            });
        }
        let q = n_det / 2;
        if q == 0 || n_ang == 0 {
            return Ok(0.0);
        }
        let mut buf = vec![Complex::new(0.0, 0.0); n_det];
        let mut cum = vec![0.0; q];
        let mut total = 0.0;
        for column in residual.chunks(n_det) {
            for (b, &r) in buf.iter_mut().zip(column) {
                *b = Complex::new(r, 0.0);
            }
            self.fft.process(&mut buf);
            let mut acc = 0.0;
            for (i, c) in cum.iter_mut().enumerate() {
                acc += buf[i + 1].norm_sqr();
                *c = acc;
            }
            if acc == 0.0 {
                // All-zero spectrum: treated as perfectly white.
                continue;
            }
            let d2: f64 = cum
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let diff = c / acc - (i + 1) as f64 / q as f64;
                    diff * diff
                })
                .sum();
            total += d2.sqrt();
        }
        Ok(total / n_ang as f64)
    }
}

pub fn ncp_distance(residual: &[f64], layout: SinogramLayout) -> Result<f64> {
    Ncp::new(layout).distance(residual)
}

/// Returns the 1-based argmin of `distances` once every one of the last
/// `patience` entries lies above the running minimum; `None` otherwise.
pub fn ncp_stop(distances: &[f64], patience: usize) -> Option<usize> {
    let mut best = 0;
    for (k, &d) in distances.iter().enumerate() {
        if d < distances[best] {
            best = k;
        }
        if k - best >= patience.max(1) {
            return Some(best + 1);
        }
    }
    None
}
