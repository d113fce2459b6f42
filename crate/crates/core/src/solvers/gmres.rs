use super::arnoldi::{Arnoldi, HessenbergLstsq};
use super::{Control, Method, Recorder, SolverOptions, SolverTrace};
use crate::error::{Error, Result};
use crate::sparse::vector::add;
use crate::sparse::CsrMatrix;

fn check_pair(a: &CsrMatrix, b: &CsrMatrix) -> Result<()> {
    if b.shape() != (a.ncols(), a.nrows()) {
        return Err(Error::ShapeMismatch {
            context: "back projector must be n x m",
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(())
}

/// AB-GMRES: GMRES on `min_u ‖b − AB·u‖₂` with `x = x₀ + B·u`.
pub fn ab_gmres(
    a: &CsrMatrix,
    bp: &CsrMatrix,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<SolverTrace> {
    check_pair(a, bp)?;
    let mut rec = Recorder::new(Method::AbGmres, a, b, opts, a.nrows())?;
    let x0 = rec.x0().to_vec();
    let ax0 = a.matvec(&x0)?;
    let r0: Vec<f64> = b.iter().zip(&ax0).map(|(b, a)| b - a).collect();
    let Some(mut arn) = Arnoldi::new(&r0, opts.reorthogonalize) else {
        rec.terminate("zero initial residual");
        return Ok(rec.finish());
    };
    let mut ls = HessenbergLstsq::new(arn.beta());
    loop {
        let h = arn.step(|w| a.matvec(&bp.matvec(w)?), opts.breakdown_tol)?;
        let inner = ls.push_column(h);
        let u = arn.combine(&ls.solve());
        let x = add(&x0, &bp.matvec(&u)?);
        let control = rec.record(x, inner)?;
        if arn.broken_down() {
            rec.terminate("lucky breakdown");
            break;
        }
        if control == Control::Halt {
            break;
        }
    }
    Ok(rec.finish())
}

/// BA-GMRES: GMRES on `min_x ‖B·b − BA·x‖₂` over `x₀ + K_k(BA, B·r₀)`.
pub fn ba_gmres(
    a: &CsrMatrix,
    bp: &CsrMatrix,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<SolverTrace> {
    check_pair(a, bp)?;
    let mut rec = Recorder::new(Method::BaGmres, a, b, opts, a.ncols())?;
    let x0 = rec.x0().to_vec();
    let ax0 = a.matvec(&x0)?;
    let r: Vec<f64> = b.iter().zip(&ax0).map(|(b, a)| b - a).collect();
    let r0 = bp.matvec(&r)?;
    let Some(mut arn) = Arnoldi::new(&r0, opts.reorthogonalize) else {
        rec.terminate("zero initial residual");
        return Ok(rec.finish());
    };
    let mut ls = HessenbergLstsq::new(arn.beta());
    loop {
        let h = arn.step(|w| bp.matvec(&a.matvec(w)?), opts.breakdown_tol)?;
        let inner = ls.push_column(h);
        let x = add(&x0, &arn.combine(&ls.solve()));
        let control = rec.record(x, inner)?;
        if arn.broken_down() {
            rec.terminate("lucky breakdown");
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
    use crate::sparse::vector::norm2;
    use crate::sparse::DenseMatrix;

    fn scaled_orthogonal(n: usize, seed: u64) -> CsrMatrix {
        // Q from Gram–Schmidt on a random matrix, scaled by 2.
        let mut rng = SplitMix64::new(seed);
        let mut cols: Vec<Vec<f64>> = Vec::new();
        while cols.len() < n {
            let mut v = rng.normal_vec(n);
            for c in &cols {
                let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= d * y);
            }
            let nv = norm2(&v);
            cols.push(v.into_iter().map(|x| x / nv).collect());
        }
        let q = DenseMatrix::from_columns(n, &cols).scaled(2.0);
        CsrMatrix::from_dense(&q)
    }

    fn random_sparse(m: usize, n: usize, seed: u64) -> CsrMatrix {
        let mut rng = SplitMix64::new(seed);
        CsrMatrix::from_dense(&DenseMatrix::from_fn(m, n, |_, _| {
            if rng.next_f64() < 0.4 {
                rng.next_f64()
            } else {
                0.0
            }
        }))
    }

    #[test]
    fn orthogonal_converges_in_one_step() {
        let a = scaled_orthogonal(12, 5);
        let at = a.transpose();
        let b = SplitMix64::new(6).normal_vec(12);
        let opts = SolverOptions::with_max_iter(5);
        for trace in [ab_gmres(&a, &at, &b, &opts).unwrap(), ba_gmres(&a, &at, &b, &opts).unwrap()] {
            assert_eq!(trace.iterations(), 1, "{}", trace.stop_reason);
            assert!(trace.true_resnorms[0] <= 1e-10 * norm2(&b));
            assert!(trace.stop_reason.contains("breakdown"));
        }
    }

    #[test]
    fn ab_inner_equals_true_and_monotone() {
        let a = random_sparse(40, 25, 1);
        let bp = random_sparse(25, 40, 2);
        let b = SplitMix64::new(3).normal_vec(40);
        let opts = SolverOptions::with_max_iter(20);
        let t = ab_gmres(&a, &bp, &b, &opts).unwrap();
        for (i, r) in t.inner_resnorms.iter().zip(&t.true_resnorms) {
            assert!((i - r).abs() <= 1e-10 * r.max(1e-300), "{i} {r}");
        }
        for w in t.true_resnorms.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-10));
        }
        assert_eq!(t.storage(10), 400);
        let t = ba_gmres(&a, &bp, &b, &opts).unwrap();
        for w in t.inner_resnorms.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-10));
        }
        assert_eq!(t.storage(10), 250);
    }

    #[test]
    fn zero_rhs_and_shape_errors() {
        let a = random_sparse(10, 6, 1);
        let bp = a.transpose();
        let opts = SolverOptions::with_max_iter(5);
        let t = ab_gmres(&a, &bp, &[0.0; 10], &opts).unwrap();
        assert_eq!(t.iterations(), 0);
        assert_eq!(t.final_x, vec![0.0; 6]);
        assert!(ab_gmres(&a, &a, &[0.0; 10], &opts).is_err());
        assert!(ba_gmres(&a, &bp, &[0.0; 9], &opts).is_err());
        assert!(ab_gmres(&a, &bp, &[1.0; 10], &SolverOptions::with_max_iter(0)).is_err());
    }

    #[test]
    fn nonzero_initial_guess() {
        let a = random_sparse(30, 30, 9);
        let at = a.transpose();
        let xt = SplitMix64::new(1).normal_vec(30);
        let b = a.matvec(&xt).unwrap();
        let opts = SolverOptions {
            max_iter: 60,
            x0: Some(vec![0.5; 30]),
            ..SolverOptions::default()
        };
        let t = ba_gmres(&a, &at, &b, &opts).unwrap();
        assert!(*t.true_resnorms.last().unwrap() < 1e-8 * norm2(&b));
    }
}
