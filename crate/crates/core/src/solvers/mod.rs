//! Iterative solvers: AB-GMRES, BA-GMRES, LSQR, LSMR and Landweber.
//!
//! Every solver records the same per-iteration diagnostics in a
//! [`SolverTrace`]: the explicitly recomputed residual norm `‖b − A·x_k‖₂`,
//! the solver's own objective (`inner_resnorms`), the relative error against
//! a supplied ground truth, and stopping-rule diagnostics.

mod arnoldi;
mod gmres;
mod landweber;
mod lsmr;
mod lsqr;

use std::fmt;
use std::io::Write;

pub use arnoldi::{Arnoldi, HessenbergLstsq};
pub use gmres::{ab_gmres, ba_gmres};
pub use landweber::landweber;
pub use lsmr::lsmr;
pub use lsqr::lsqr;

use crate::error::{Error, Result};
use crate::sparse::vector::{norm2, rel_diff};
use crate::sparse::CsrMatrix;
use crate::stopping::{ncp_stop, Ncp, StopRule, StoppingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    AbGmres,
    BaGmres,
    Lsqr,
    Lsmr,
    Landweber,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::AbGmres => "ab",
            Method::BaGmres => "ba",
            Method::Lsqr => "lsqr",
            Method::Lsmr => "lsmr",
            Method::Landweber => "landweber",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ab" => Ok(Method::AbGmres),
            "ba" => Ok(Method::BaGmres),
            "lsqr" => Ok(Method::Lsqr),
            "lsmr" => Ok(Method::Lsmr),
            "landweber" => Ok(Method::Landweber),
            other => Err(Error::Config(format!(
                "unknown solver {other:?} (expected ab, ba, lsqr, lsmr or landweber)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Initial guess; zero when `None`.
    pub x0: Option<Vec<f64>>,
    /// Ground truth for error histories.
    pub x_true: Option<Vec<f64>>,
    pub stopping: StoppingConfig,
    /// Halt at the first stopping-rule trigger instead of running on to
    /// `max_iter` with the trigger only recorded.
    pub halt_on_stop: bool,
    /// Keep every `keep_iterates`-th iterate (0 keeps none).
    pub keep_iterates: usize,
    /// Second modified Gram–Schmidt pass in Arnoldi; full reorthogonalization
    /// of both Golub–Kahan bases in LSQR and LSMR.
    pub reorthogonalize: bool,
    /// Lucky breakdown when `h_{k+1,k} ≤ breakdown_tol·‖H_k‖_F`.
    pub breakdown_tol: f64,
    /// Landweber divergence when `‖x_k‖ > factor·‖x̄‖` (or `factor` without x̄).
    pub divergence_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            x0: None,
            x_true: None,
            stopping: StoppingConfig::default(),
            halt_on_stop: true,
            keep_iterates: 1,
            reorthogonalize: false,
            breakdown_tol: 1e-14,
            divergence_factor: 1e6,
        }
    }
}

impl SolverOptions {
    pub fn with_max_iter(max_iter: usize) -> Self {
        Self {
            max_iter,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub method: Method,
    pub x0: Vec<f64>,
    /// Retained iterates `(k, x_k)`, `k ≥ 1`.
    pub iterates: Vec<(usize, Vec<f64>)>,
    /// Last computed iterate.
    pub final_x: Vec<f64>,
    /// Minimum-error iterate `(k, x_k)` when a ground truth was supplied.
    pub best: Option<(usize, Vec<f64>)>,
    pub true_resnorms: Vec<f64>,
    pub inner_resnorms: Vec<f64>,
    pub errnorms: Vec<f64>,
    pub ncp_distances: Vec<f64>,
    pub dp_threshold: Option<f64>,
    /// 1-based iteration selected by the stopping rule.
    pub stop_index: Option<usize>,
    pub stop_reason: String,
    /// Length of one stored basis vector (`m` for AB, `n` for BA, else 0).
    pub basis_len: usize,
    /// First iteration at which Landweber's iterate norm crossed the divergence threshold.
    pub diverged_at: Option<usize>,
}

impl SolverTrace {
    pub fn iterations(&self) -> usize {
        self.true_resnorms.len()
    }

    /// `x_k` for `k ≥ 1` if retained, or `x0` for `k = 0`.
    pub fn iterate(&self, k: usize) -> Option<&[f64]> {
        if k == 0 {
            return Some(&self.x0);
        }
        if k == self.iterations() {
            return Some(&self.final_x);
        }
        self.iterates
            .binary_search_by_key(&k, |(i, _)| *i)
            .ok()
            .map(|i| self.iterates[i].1.as_slice())
    }

    /// Stored basis entries after `k` iterations, `k·basis_len`.
    pub fn storage(&self, k: usize) -> usize {
        k * self.basis_len
    }

    /// First 1-based iteration passing the DP test, if DP was monitored.
    pub fn dp_index(&self) -> Option<usize> {
        self.dp_threshold
            .and_then(|t| crate::stopping::dp_index(&self.true_resnorms, t))
            .map(|i| i + 1)
    }

    /// 1-based NCP stop with the given patience, if NCP was monitored.
    pub fn ncp_index(&self, patience: usize) -> Option<usize> {
        ncp_stop(&self.ncp_distances, patience)
    }

    /// Writes `k,true_resnorm,inner_resnorm,errnorm,stop_flag,dp_lhs,dp_rhs,ncp_distance`,
    /// leaving unavailable diagnostics empty.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "k,true_resnorm,inner_resnorm,errnorm,stop_flag,dp_lhs,dp_rhs,ncp_distance"
        )?;
        let opt = |v: Option<&f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        for k in 0..self.iterations() {
            let flag = u8::from(self.stop_index == Some(k + 1));
            writeln!(
                w,
                "{},{:.17e},{},{},{},{:.17e},{},{}",
                k + 1,
                self.true_resnorms[k],
                opt(self.inner_resnorms.get(k)),
                opt(self.errnorms.get(k)),
                flag,
                self.true_resnorms[k],
                opt(self.dp_threshold.as_ref()),
                opt(self.ncp_distances.get(k)),
            )?;
        }
        Ok(())
    }
}

/// Stored Golub–Kahan vectors for full reorthogonalization; inert when disabled.
pub(crate) struct Basis(Option<Vec<Vec<f64>>>);

impl Basis {
    pub(crate) fn new(enabled: bool) -> Self {
        Self(enabled.then(Vec::new))
    }

    /// Modified Gram–Schmidt of `w` against the stored vectors.
    pub(crate) fn orthogonalize(&self, w: &mut [f64]) {
        for q in self.0.iter().flatten() {
            let d: f64 = q.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
            w.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
        }
    }

    pub(crate) fn push(&mut self, q: &[f64]) {
        if let Some(b) = &mut self.0 {
            b.push(q.to_vec());
        }
    }
}

/// Outcome of recording one iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Control {
    Continue,
    Halt,
}

/// Shared bookkeeping: explicit residuals, errors, stopping rules, iterate
/// retention.
pub(crate) struct Recorder<'a> {
    a: &'a CsrMatrix,
    b: &'a [f64],
    opts: &'a SolverOptions,
    ncp: Option<Ncp>,
    trace: SolverTrace,
    best_err: f64,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(
        method: Method,
        a: &'a CsrMatrix,
        b: &'a [f64],
        opts: &'a SolverOptions,
        basis_len: usize,
    ) -> Result<Self> {
        if opts.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
        }
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch {
                context: "right-hand side",
                expected: a.nrows(),
                got: b.len(),
            });
        }
        let n = a.ncols();
        let x0 = match &opts.x0 {
            Some(x0) if x0.len() != n => {
                return Err(Error::DimensionMismatch {
                    context: "initial guess",
                    expected: n,
                    got: x0.len(),
                })
            }
            Some(x0) => x0.clone(),
            None => vec![0.0; n],
        };
        if let Some(xt) = &opts.x_true {
            if xt.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "ground truth",
                    expected: n,
                    got: xt.len(),
                });
            }
        }
        opts.stopping.validate(Some(a.nrows()))?;
        let ncp = opts.stopping.layout.map(Ncp::new);
        Ok(Self {
            a,
            b,
            opts,
            ncp,
            trace: SolverTrace {
                method,
                final_x: x0.clone(),
                x0,
                iterates: Vec::new(),
                best: None,
                true_resnorms: Vec::new(),
                inner_resnorms: Vec::new(),
                errnorms: Vec::new(),
                ncp_distances: Vec::new(),
                dp_threshold: opts.stopping.dp_threshold(),
                stop_index: None,
                stop_reason: "max_iter".into(),
                basis_len,
                diverged_at: None,
            },
            best_err: f64::INFINITY,
        })
    }

    pub(crate) fn x0(&self) -> &[f64] {
        &self.trace.x0
    }

    /// Records iterate `x` (iteration `k = len + 1`) with the solver's own
    /// objective value `inner`.
    pub(crate) fn record(&mut self, x: Vec<f64>, inner: f64) -> Result<Control> {
        let k = self.trace.iterations() + 1;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteIterate { iteration: k });
        }
        let ax = self
            .a
            .matvec(&x)
            .map_err(|_| Error::NonFiniteIterate { iteration: k })?;
        let r: Vec<f64> = self.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let resnorm = norm2(&r);
        self.trace.true_resnorms.push(resnorm);
        self.trace.inner_resnorms.push(inner);
        if let Some(ncp) = &self.ncp {
            self.trace.ncp_distances.push(ncp.distance(&r)?);
        }
        if let Some(xt) = &self.opts.x_true {
            let err = rel_diff(&x, xt);
            self.trace.errnorms.push(err);
            if err < self.best_err {
                self.best_err = err;
                self.trace.best = Some((k, x.clone()));
            }
        }
        let stride = self.opts.keep_iterates;
        if stride > 0 && k % stride == 0 {
            self.trace.iterates.push((k, x.clone()));
        }
        self.trace.final_x = x;

        if self.trace.stop_index.is_none() {
            let triggered = match self.opts.stopping.rule {
                StopRule::None => None,
                StopRule::Dp => {
                    let t = self.trace.dp_threshold.expect("validated");
                    (resnorm <= t).then_some((k, "discrepancy principle"))
                }
                StopRule::Ncp => ncp_stop(&self.trace.ncp_distances, self.opts.stopping.ncp_patience)
                    .map(|i| (i, "ncp")),
            };
            if let Some((idx, reason)) = triggered {
                self.trace.stop_index = Some(idx);
                self.trace.stop_reason = reason.into();
                if self.opts.halt_on_stop {
                    return Ok(Control::Halt);
                }
            }
        }
        Ok(if k >= self.opts.max_iter {
            Control::Halt
        } else {
            Control::Continue
        })
    }

    /// Marks an early termination that is not a stopping-rule trigger.
    pub(crate) fn terminate(&mut self, reason: &str) {
        self.trace.stop_reason = if self.trace.stop_index.is_some() {
            format!("{}; {reason}", self.trace.stop_reason)
        } else {
            reason.to_string()
        };
    }

    pub(crate) fn mark_diverged(&mut self) {
        self.trace.diverged_at = Some(self.trace.iterations());
    }

    pub(crate) fn finish(self) -> SolverTrace {
        self.trace
    }
}
