use super::{Basis, Control, Method, Recorder, SolverOptions, SolverTrace};
use crate::error::Result;
use crate::sparse::vector::{axpy, norm2, scale};
use crate::sparse::CsrMatrix;

/// LSQR (Paige–Saunders) for `min_x ‖b − A·x‖₂`.
///
/// `inner_resnorms` holds the recurrence estimate `φ̄_k` of `‖b − A·x_k‖₂`.
pub fn lsqr(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<SolverTrace> {
    let at = a.transpose();
    let mut rec = Recorder::new(Method::Lsqr, a, b, opts, 0)?;
    let mut x = rec.x0().to_vec();
    let ax0 = a.matvec(&x)?;
    let mut u: Vec<f64> = b.iter().zip(&ax0).map(|(b, a)| b - a).collect();
    let mut beta = norm2(&u);
    if beta == 0.0 {
        rec.terminate("zero initial residual");
        return Ok(rec.finish());
    }
    scale(1.0 / beta, &mut u);
    let mut v = at.matvec(&u)?;
    let mut alpha = norm2(&v);
    if alpha == 0.0 {
        rec.terminate("initial guess solves the normal equations");
        return Ok(rec.finish());
    }
    scale(1.0 / alpha, &mut v);
    let (mut ub, mut vb) = (Basis::new(opts.reorthogonalize), Basis::new(opts.reorthogonalize));
    ub.push(&u);
    vb.push(&v);
    let mut w = v.clone();
    let mut phibar = beta;
    let mut rhobar = alpha;

    loop {
        let mut next_u = a.matvec(&v)?;
        axpy(-alpha, &u, &mut next_u);
        ub.orthogonalize(&mut next_u);
        u = next_u;
        beta = norm2(&u);
        if beta > 0.0 {
            scale(1.0 / beta, &mut u);
            ub.push(&u);
            let mut next_v = at.matvec(&u)?;
            axpy(-beta, &v, &mut next_v);
            vb.orthogonalize(&mut next_v);
            v = next_v;
            alpha = norm2(&v);
            if alpha > 0.0 {
                scale(1.0 / alpha, &mut v);
                vb.push(&v);
            }
        } else {
            alpha = 0.0;
        }

        let rho = rhobar.hypot(beta);
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar *= s;

        axpy(phi / rho, &w, &mut x);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi = vi - (theta / rho) * *wi;
        }

        let control = rec.record(x.clone(), phibar.abs())?;
        if alpha == 0.0 || phibar == 0.0 {
            rec.terminate("Krylov subspace exhausted");
            break;
        }
        if control == Control::Halt {
            break;
        }
    }
    Ok(rec.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::sparse::{dense_svd, DenseMatrix};

    fn random_dense(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut rng = SplitMix64::new(seed);
        DenseMatrix::from_fn(m, n, |_, _| rng.next_normal())
    }

    #[test]
    fn consistent_system_converges_within_n_steps() {
        let d = random_dense(20, 10, 1);
        let a = CsrMatrix::from_dense(&d);
        let b = a.matvec(&SplitMix64::new(2).normal_vec(10)).unwrap();
        let mut opts = SolverOptions::with_max_iter(10);
        opts.halt_on_stop = false;
        let t = lsqr(&a, &b, &opts).unwrap();
        assert!(t.iterations() <= 10);
        assert!(*t.true_resnorms.last().unwrap() < 1e-10 * norm2(&b));
    }

    #[test]
    fn normal_equations_residual_vanishes() {
        let d = random_dense(50, 30, 3);
        let a = CsrMatrix::from_dense(&d);
        let b = SplitMix64::new(4).normal_vec(50);
        let t = lsqr(&a, &b, &SolverOptions::with_max_iter(200)).unwrap();
        let x = &t.final_x;
        let r: Vec<f64> = b.iter().zip(a.matvec(x).unwrap()).map(|(b, a)| b - a).collect();
        assert!(norm2(&d.tr_matvec(&r).unwrap()) < 1e-8);
        let oracle = dense_svd(&d).unwrap().pinv(1e-14).matvec(&b).unwrap();
        for (p, q) in x.iter().zip(&oracle) {
            assert!((p - q).abs() < 1e-8);
        }
    }

    #[test]
    fn estimate_tracks_true_residual_early() {
        let a = CsrMatrix::from_dense(&random_dense(40, 25, 5));
        let b = SplitMix64::new(6).normal_vec(40);
        let t = lsqr(&a, &b, &SolverOptions::with_max_iter(10)).unwrap();
        for (est, tr) in t.inner_resnorms.iter().zip(&t.true_resnorms) {
            assert!((est - tr).abs() < 1e-10 * tr);
        }
    }

    #[test]
    fn reorthogonalized_lsqr_tracks_ab_gmres() {
        // Graded columns make plain Golub–Kahan lose orthogonality quickly.
        let g = random_dense(80, 50, 4);
        let d = DenseMatrix::from_fn(80, 50, |i, j| g.row(i)[j] * 10f64.powf(-6.0 * j as f64 / 50.0));
        let a = CsrMatrix::from_dense(&d);
        let b = SplitMix64::new(5).normal_vec(80);
        let opts = SolverOptions {
            max_iter: 45,
            reorthogonalize: true,
            ..SolverOptions::default()
        };
        let q = lsqr(&a, &b, &opts).unwrap();
        let g = crate::solvers::ab_gmres(&a, &a.transpose(), &b, &opts).unwrap();
        for (k, (x, y)) in q.true_resnorms.iter().zip(&g.true_resnorms).enumerate() {
            assert!((x - y).abs() <= 1e-6 * y, "k {}: {x} vs {y}", k + 1);
        }
    }
}
