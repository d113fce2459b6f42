use crate::error::Result;
use crate::sparse::vector::{dot, norm2};
use crate::sparse::DenseMatrix;

/// Arnoldi process with modified Gram–Schmidt.
///
/// After `k` steps the basis holds `k + 1` orthonormal vectors and
/// `op(W_k) = W_{k+1}·H_k` with `H_k` upper Hessenberg of size `(k+1)×k`.
#[derive(Debug, Clone)]
pub struct Arnoldi {
    basis: Vec<Vec<f64>>,
    /// Column `j` holds `h_{0..=j+1, j}`.
    columns: Vec<Vec<f64>>,
    beta: f64,
    reorthogonalize: bool,
    broken_down: bool,
}

impl Arnoldi {
    /// Starts from `r0`; `None` when `r0 = 0`.
    pub fn new(r0: &[f64], reorthogonalize: bool) -> Option<Self> {
        let beta = norm2(r0);
        if beta == 0.0 {
            return None;
        }
        Some(Self {
            basis: vec![r0.iter().map(|v| v / beta).collect()],
            columns: Vec::new(),
            beta,
            reorthogonalize,
            broken_down: false,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Completed steps `k`.
    pub fn steps(&self) -> usize {
        self.columns.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn broken_down(&self) -> bool {
        self.broken_down
    }

    /// One Arnoldi step with `q = op(w_k)`. Returns the new Hessenberg column
    /// `h_{1..k+1, k}`. The subdiagonal entry is checked against
    /// `breakdown_tol·‖H_k‖_F`; on breakdown no new basis vector is added.
    pub fn step(
        &mut self,
        op: impl FnOnce(&[f64]) -> Result<Vec<f64>>,
        breakdown_tol: f64,
    ) -> Result<&[f64]> {
        assert!(!self.broken_down, "Arnoldi step after breakdown");
        let k = self.columns.len();
        let mut q = op(&self.basis[k])?;
        let mut h = vec![0.0; k + 2];
        for (i, w) in self.basis.iter().enumerate() {
            let hij = dot(&q, w);
            h[i] = hij;
            q.iter_mut().zip(w).for_each(|(qv, wv)| *qv -= hij * wv);
        }
        if self.reorthogonalize {
            for (i, w) in self.basis.iter().enumerate() {
                let c = dot(&q, w);
                h[i] += c;
                q.iter_mut().zip(w).for_each(|(qv, wv)| *qv -= c * wv);
            }
        }
        let sub = norm2(&q);
        h[k + 1] = sub;
        let h_frob = self
            .columns
            .iter()
            .flatten()
            .chain(h.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        if sub <= breakdown_tol * h_frob {
            self.broken_down = true;
        } else {
            self.basis.push(q.into_iter().map(|v| v / sub).collect());
        }
        self.columns.push(h);
        Ok(self.columns.last().expect("just pushed"))
    }

    /// `H_k` as a dense `(k+1)×k` matrix.
    pub fn hessenberg(&self) -> DenseMatrix {
        let k = self.steps();
        DenseMatrix::from_fn(k + 1, k, |i, j| {
            self.columns[j].get(i).copied().unwrap_or(0.0)
        })
    }

    /// `W_k·y` over the first `y.len()` basis vectors.
    pub fn combine(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.basis[0].len()];
        for (w, &c) in self.basis.iter().zip(y) {
            out.iter_mut().zip(w).for_each(|(o, wv)| *o += c * wv);
        }
        out
    }
}

/// Incrementally updated Givens QR of the Hessenberg least-squares problem
/// `min ‖β·e₁ − H_k·y‖₂`.
#[derive(Debug, Clone)]
pub struct HessenbergLstsq {
    /// Columns of the triangular factor, column `j` of length `j + 1`.
    r: Vec<Vec<f64>>,
    cs: Vec<f64>,
    sn: Vec<f64>,
    /// Rotated right-hand side, length `k + 1`.
    g: Vec<f64>,
}

impl HessenbergLstsq {
    pub fn new(beta: f64) -> Self {
        Self {
            r: Vec::new(),
            cs: Vec::new(),
            sn: Vec::new(),
            g: vec![beta],
        }
    }

    /// Appends Hessenberg column `h` (length `k + 1` for step `k`, 1-based)
    /// and returns the least-squares residual norm `|g_{k+1}|`.
    pub fn push_column(&mut self, h: &[f64]) -> f64 {
        let k = self.r.len();
        debug_assert_eq!(h.len(), k + 2);
        let mut col = h.to_vec();
        for i in 0..k {
            let (c, s) = (self.cs[i], self.sn[i]);
            let (a, b) = (col[i], col[i + 1]);
            col[i] = c * a + s * b;
            col[i + 1] = -s * a + c * b;
        }
        let (a, b) = (col[k], col[k + 1]);
        let rho = a.hypot(b);
        let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (a / rho, b / rho) };
        col[k] = rho;
        col.truncate(k + 1);
        self.cs.push(c);
        self.sn.push(s);
        let gk = self.g[k];
        self.g[k] = c * gk;
        self.g.push(-s * gk);
        self.r.push(col);
        self.residual()
    }

    pub fn residual(&self) -> f64 {
        self.g.last().copied().unwrap_or(0.0).abs()
    }

    /// Back substitution for `y_k`.
    pub fn solve(&self) -> Vec<f64> {
        let k = self.r.len();
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = self.g[i];
            for j in i + 1..k {
                s -= self.r[j][i] * y[j];
            }
            y[i] = if self.r[i][i] != 0.0 { s / self.r[i][i] } else { 0.0 };
        }
        y
    }
}
