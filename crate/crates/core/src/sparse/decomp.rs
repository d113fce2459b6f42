//! Dense SVD and nonsymmetric eigenvalues, backed by `faer`.

use faer::Mat;
use num_complex::Complex64;

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Default element cap (`rows·cols`) for [`dense_svd`].
pub const DEFAULT_SVD_CAP: usize = 50_000_000;
/// Default dimension cap for [`dense_eig`].
pub const DEFAULT_EIG_CAP: usize = 4096;

/// Thin SVD `M = U·diag(sigma)·Vᵀ` with `sigma` nonincreasing.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    /// Number of singular values above `rel_tol·σ₁`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let s1 = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma.iter().filter(|&&s| s > rel_tol * s1).count()
    }

    /// Pseudoinverse keeping singular values above `rel_tol·σ₁`.
    pub fn pinv(&self, rel_tol: f64) -> DenseMatrix {
        let r = self.rank(rel_tol);
        let (m, n) = (self.u.nrows(), self.v.nrows());
        DenseMatrix::from_fn(n, m, |i, j| {
            (0..r)
                .map(|k| self.v[(i, k)] * self.u[(j, k)] / self.sigma[k])
                .sum()
        })
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, n) = (self.u.nrows(), self.v.nrows());
        DenseMatrix::from_fn(m, n, |i, j| {
            (0..self.sigma.len())
                .map(|k| self.u[(i, k)] * self.sigma[k] * self.v[(j, k)])
                .sum()
        })
    }
}

fn to_faer(m: &DenseMatrix) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thread count for dense factorizations; `1` makes them sequential and
/// bit-reproducible.
pub fn set_dense_threads(threads: usize) {
    let par = if threads <= 1 {
        faer::Par::Seq
    } else {
        faer::Par::rayon(threads)
    };
    faer::set_global_parallelism(par);
}

pub fn dense_svd(m: &DenseMatrix) -> Result<Svd> {
    dense_svd_with_cap(m, DEFAULT_SVD_CAP)
}

pub fn dense_svd_with_cap(m: &DenseMatrix, cap: usize) -> Result<Svd> {
    let size = m.nrows() * m.ncols();
    if size > cap {
        return Err(Error::CapExceeded {
            what: "SVD input",
            size,
            cap,
        });
    }
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Ok(Svd {
            u: DenseMatrix::zeros(m.nrows(), 0),
            sigma: Vec::new(),
            v: DenseMatrix::zeros(m.ncols(), 0),
        });
    }
    let svd = to_faer(m)
        .thin_svd()
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    Ok(Svd {
        u: from_faer(svd.U()),
        sigma: (0..k).map(|i| s[i]).collect(),
        v: from_faer(svd.V()),
    })
}

/// All eigenvalues of a square (generally nonsymmetric) matrix, sorted by
/// real part and then imaginary part.
pub fn dense_eig(m: &DenseMatrix) -> Result<Vec<Complex64>> {
    dense_eig_with_cap(m, DEFAULT_EIG_CAP)
}

pub fn dense_eig_with_cap(m: &DenseMatrix, cap: usize) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch {
            context: "eigenvalues of non-square matrix",
            left: m.shape(),
            right: (m.ncols(), m.nrows()),
        });
    }
    if m.nrows() > cap {
        return Err(Error::CapExceeded {
            what: "eigenproblem dimension",
            size: m.nrows(),
            cap,
        });
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut ev: Vec<Complex64> = to_faer(m)
        .eigenvalues()
        .map_err(|e| Error::Factorization(format!("{e:?}")))?
        .into_iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect();
    if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Factorization("non-finite eigenvalue".into()));
    }
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_dense(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = SplitMix64::new(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.next_normal())
    }

    /// Independent route for singular values: cyclic Jacobi on the Gram matrix.
    fn gram_singular_values(m: &DenseMatrix) -> Vec<f64> {
        let mut g = m.transpose().matmul(m).unwrap();
        let n = g.nrows();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| g[(i, j)] * g[(i, j)])
                .sum();
            if off < 1e-26 * g.frob_norm().powi(2) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = g[(p, q)];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (g[(q, q)] - g[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (gkp, gkq) = (g[(k, p)], g[(k, q)]);
                        g[(k, p)] = c * gkp - s * gkq;
                        g[(k, q)] = s * gkp + c * gkq;
                    }
                    for k in 0..n {
                        let (gpk, gqk) = (g[(p, k)], g[(q, k)]);
                        g[(p, k)] = c * gpk - s * gqk;
                        g[(q, k)] = s * gpk + c * gqk;
                    }
                }
            }
        }
        let mut s: Vec<f64> = (0..n).map(|i| g[(i, i)].max(0.0).sqrt()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    fn orthonormality_defect(q: &DenseMatrix) -> f64 {
        let g = q.transpose().matmul(q).unwrap();
        g.sub(&DenseMatrix::identity(g.nrows())).unwrap().frob_norm()
    }

    #[test]
    fn diagonal_svd() {
        let m = DenseMatrix::from_diag(&[3.0, 1.0]);
        let svd = dense_svd(&m).unwrap();
        assert!((svd.sigma[0] - 3.0).abs() < 1e-14);
        assert!((svd.sigma[1] - 1.0).abs() < 1e-14);
        for i in 0..2 {
            assert!((svd.u[(i, i)].abs() - 1.0).abs() < 1e-14);
            assert!((svd.v[(i, i)].abs() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rank_one_svd() {
        let u = [2.0 / 3.0_f64.sqrt(), 2.0 / 3.0_f64.sqrt(), 2.0 / 3.0_f64.sqrt()];
        let v = [0.6, 0.8];
        let m = DenseMatrix::from_fn(3, 2, |i, j| u[i] * v[j]);
        let svd = dense_svd(&m).unwrap();
        assert!((svd.sigma[0] - 2.0).abs() < 1e-14);
        assert!(svd.sigma[1].abs() < 1e-14);
        assert_eq!(svd.rank(1e-12), 1);
    }

    #[test]
    fn random_svd_tolerances_and_gram_oracle() {
        let m = random_dense(30, 20, 1);
        let svd = dense_svd(&m).unwrap();
        let recon = svd.reconstruct();
        assert!(m.sub(&recon).unwrap().frob_norm() <= 1e-10 * m.frob_norm());
        assert!(orthonormality_defect(&svd.u) < 1e-10);
        assert!(orthonormality_defect(&svd.v) < 1e-10);
        assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1]));
        let oracle = gram_singular_values(&m);
        for (a, b) in svd.sigma.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn svd_cap() {
        let m = DenseMatrix::zeros(10, 10);
        assert!(matches!(
            dense_svd_with_cap(&m, 99),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn pinv_of_full_rank_is_left_inverse() {
        let m = random_dense(8, 5, 3);
        let p = dense_svd(&m).unwrap().pinv(1e-12);
        let i = p.matmul(&m).unwrap();
        assert!(i.sub(&DenseMatrix::identity(5)).unwrap().frob_norm() < 1e-12);
    }

    #[test]
    fn rotation_eigenvalues() {
        let m = DenseMatrix::new(2, 2, vec![0.0, -1.0, 1.0, 0.0]).unwrap();
        let ev = dense_eig(&m).unwrap();
        assert_eq!(ev.len(), 2);
        let mut ims: Vec<f64> = ev.iter().map(|z| z.im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 1.0).abs() < 1e-14 && (ims[1] - 1.0).abs() < 1e-14);
        assert!(ev.iter().all(|z| z.re.abs() < 1e-14));
    }

    #[test]
    fn triangular_eigenvalues_are_diagonal() {
        let m = DenseMatrix::from_fn(4, 4, |i, j| if j >= i { (i + 2 * j + 1) as f64 } else { 0.0 });
        let ev = dense_eig(&m).unwrap();
        let mut diag: Vec<f64> = (0..4).map(|i| m[(i, i)]).collect();
        diag.sort_by(f64::total_cmp);
        for (z, d) in ev.iter().zip(&diag) {
            assert!((z.re - d).abs() < 1e-12 && z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_has_same_spectrum_and_trace() {
        let m = random_dense(20, 20, 5);
        let a = dense_eig(&m).unwrap();
        let b = dense_eig(&m.transpose()).unwrap();
        for za in &a {
            let best = b.iter().map(|zb| (za - zb).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8);
        }
        let sum: f64 = a.iter().map(|z| z.re).sum();
        assert!((sum - m.trace()).abs() <= 1e-8 * m.frob_norm());
    }

    #[test]
    fn eig_rejects_non_square() {
        assert!(dense_eig(&DenseMatrix::zeros(2, 3)).is_err());
        assert!(dense_eig_with_cap(&DenseMatrix::zeros(3, 3), 2).is_err());
    }
}
