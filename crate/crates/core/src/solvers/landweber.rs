use super::{Control, Method, Recorder, SolverOptions, SolverTrace};
use crate::error::{Error, Result};
use crate::sparse::vector::{axpy, norm2};
use crate::sparse::CsrMatrix;

/// Landweber / SIRT iteration `x_k = x_{k−1} + ω·B·(b − A·x_{k−1})`.
///
/// Runs `opts.max_iter` steps. When `‖x_k‖₂` exceeds
/// `opts.divergence_factor·‖x̄‖₂` (or the bare factor without a ground truth)
/// the run is flagged as diverged and halted. `inner_resnorms` holds
/// `‖B·(b − A·x_{k−1})‖₂`, the preconditioned residual that produced step `k`.
pub fn landweber(
    a: &CsrMatrix,
    bp: &CsrMatrix,
    b: &[f64],
    omega: f64,
    opts: &SolverOptions,
) -> Result<SolverTrace> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidArgument(format!("omega must be > 0, got {omega}")));
    }
    if bp.shape() != (a.ncols(), a.nrows()) {
        return Err(Error::ShapeMismatch {
            context: "back projector must be n x m",
            left: a.shape(),
            right: bp.shape(),
        });
    }
    let mut rec = Recorder::new(Method::Landweber, a, b, opts, 0)?;
    let limit = opts.divergence_factor
        * opts.x_true.as_deref().map(norm2).filter(|&s| s > 0.0).unwrap_or(1.0);
    let mut x = rec.x0().to_vec();
    loop {
        let ax = a.matvec(&x)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let step = bp.matvec(&r)?;
        axpy(omega, &step, &mut x);
        let control = rec.record(x.clone(), norm2(&step))?;
        if norm2(&x) > limit {
            rec.mark_diverged();
            rec.terminate("diverged");
            break;
        }
        if control == Control::Halt {
            break;
        }
    }
    Ok(rec.finish())
}
