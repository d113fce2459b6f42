use super::{Basis, Control, Method, Recorder, SolverOptions, SolverTrace};
use crate::error::Result;
use crate::sparse::vector::{axpy, norm2, scale};
use crate::sparse::CsrMatrix;

/// Stable Givens rotation `(c, s, r)` with `c·a + s·b = r`.
fn sym_ortho(a: f64, b: f64) -> (f64, f64, f64) {
    if b == 0.0 {
        (if a == 0.0 { 1.0 } else { a.signum() }, 0.0, a.abs())
    } else if a == 0.0 {
        (0.0, b.signum(), b.abs())
    } else if b.abs() > a.abs() {
        let tau = a / b;
        let s = b.signum() / (1.0 + tau * tau).sqrt();
        (s * tau, s, b / s)
    } else {
        let tau = b / a;
        let c = a.signum() / (1.0 + tau * tau).sqrt();
        (c, c * tau, a / c)
    }
}

/// LSMR (Fong–Saunders) for `min_x ‖b − A·x‖₂`, i.e. MINRES on the normal
/// equations.
///
/// `inner_resnorms` holds the recurrence value of `‖Aᵀ(b − A·x_k)‖₂`.
pub fn lsmr(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<SolverTrace> {
    let at = a.transpose();
    let mut rec = Recorder::new(Method::Lsmr, a, b, opts, 0)?;
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

    let mut zetabar = alpha * beta;
    let mut alphabar = alpha;
    let mut rho = 1.0;
    let mut rhobar = 1.0;
    let mut cbar = 1.0;
    let mut sbar = 0.0;
    let mut h = v.clone();
    let mut hbar = vec![0.0; x.len()];

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

        let rho_old = rho;
        let (c, s, r) = sym_ortho(alphabar, beta);
        rho = r;
        let theta_new = s * alpha;
        alphabar = c * alpha;

        let rhobar_old = rhobar;
        let thetabar = sbar * rho;
        let (cb, sb, rb) = sym_ortho(cbar * rho, theta_new);
        cbar = cb;
        sbar = sb;
        rhobar = rb;
        let zeta = cbar * zetabar;
        zetabar *= -sbar;

        let f = thetabar * rho / (rho_old * rhobar_old);
        for (hb, hv) in hbar.iter_mut().zip(&h) {
            *hb = hv - f * *hb;
        }
        axpy(zeta / (rho * rhobar), &hbar, &mut x);
        let g = theta_new / rho;
        for (hv, vv) in h.iter_mut().zip(&v) {
            *hv = vv - g * *hv;
        }

        let control = rec.record(x.clone(), zetabar.abs())?;
        if alpha == 0.0 || zetabar == 0.0 {
            rec.terminate("Krylov subspace exhausted");
            break;
        }
        if control == Control::Halt {
            break;
        }
    }
    Ok(rec.finish())
}
