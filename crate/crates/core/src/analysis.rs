//! SVD and Picard diagnostics, spectra of `B·A`, subspace angles and
//! first-order perturbation bounds.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::projector::ProjectorPair;
use crate::rng::SplitMix64;
use crate::solvers::SolverTrace;
use crate::sparse::vector::{norm2, rel_diff, sub};
use crate::sparse::{dense_eig_with_cap, dense_svd, Complex64, DenseMatrix, Svd};

/// Singular values below this fraction of `σ₁` are treated as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Pseudoinverse cutoff relative to `σ₁`.
pub const PINV_TOL: f64 = 1e-12;
/// Trailing-window length of the noise-floor locator.
pub const NOISE_FLOOR_WINDOW: usize = 200;
/// Eigenvalues with real part below `-NEG_REAL_TOL` count as negative.
pub const NEG_REAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub svd: Svd,
    /// `|u_iᵀ·b̄|`
    pub picard_exact: Vec<f64>,
    /// `|u_iᵀ·b|`
    pub picard_noisy: Vec<f64>,
    /// Index where `picard_noisy` stops decreasing.
    pub noise_floor: Option<usize>,
}

impl SpectralReport {
    pub fn sigma(&self) -> &[f64] {
        &self.svd.sigma
    }

    /// `|v_iᵀ·x|` for every singular triplet.
    pub fn coefficients(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.svd.v.tr_matvec(x)?.into_iter().map(f64::abs).collect())
    }

    /// Writes `i,sigma,picard_exact,picard_noisy` with 1-based `i`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "i,sigma,picard_exact,picard_noisy")?;
        for (i, s) in self.svd.sigma.iter().enumerate() {
            writeln!(
                w,
                "{},{s:.16e},{:.16e},{:.16e}",
                i + 1,
                self.picard_exact[i],
                self.picard_noisy[i]
            )?;
        }
        Ok(())
    }
}

pub fn picard_report(a: &DenseMatrix, b_exact: &[f64], b: &[f64]) -> Result<SpectralReport> {
    for (v, context) in [(b_exact, "exact data"), (b, "noisy data")] {
        if v.len() != a.nrows() {
            return Err(Error::DimensionMismatch {
                context,
                expected: a.nrows(),
                got: v.len(),
            });
        }
    }
    let svd = dense_svd(a)?;
    let abs = |v: Vec<f64>| v.into_iter().map(f64::abs).collect::<Vec<_>>();
    let picard_exact = abs(svd.u.tr_matvec(b_exact)?);
    let picard_noisy = abs(svd.u.tr_matvec(b)?);
    let noise_floor = noise_floor_index(&picard_noisy, NOISE_FLOOR_WINDOW);
    Ok(SpectralReport {
        svd,
        picard_exact,
        picard_noisy,
        noise_floor,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = v.len() / 2;
    if v.len() % 2 == 1 {
        v[h]
    } else {
        0.5 * (v[h - 1] + v[h])
    }
}

/// Start of the noise floor in a coefficient sequence.
///
/// Medians of trailing windows of length `window` are taken every
/// `window / 4` indices; the floor starts at the first window whose median
/// is no smaller than its predecessor's. Sequences shorter than
/// `window + window / 4` use `len / 2` as window.
pub fn noise_floor_index(values: &[f64], window: usize) -> Option<usize> {
    let mut window = window.max(4);
    if values.len() < window + window / 4 {
        window = values.len() / 2;
    }
    if window < 4 {
        return None;
    }
    let stride = window / 4;
    let mut prev = median(&values[..window]);
    let mut start = 0;
    while start + stride + window <= values.len() {
        let next = median(&values[start + stride..start + stride + window]);
        if next >= prev {
            return Some(start + stride);
        }
        prev = next;
        start += stride;
    }
    None
}

/// `|Vᵀ·x_k|` for every requested `k` (`k = 0` is the initial guess).
pub fn iterate_svd_coeffs(
    v: &DenseMatrix,
    trace: &SolverTrace,
    ks: &[usize],
) -> Result<BTreeMap<usize, Vec<f64>>> {
    ks.iter()
        .map(|&k| {
            let x = trace.iterate(k).ok_or(Error::MissingIterate(k))?;
            let c = v.tr_matvec(x)?.into_iter().map(f64::abs).collect();
            Ok((k, c))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct BaSpectrum {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex64>,
    pub min_real: f64,
    pub max_modulus: f64,
    /// Eigenvalues with `Re λ < −NEG_REAL_TOL`.
    pub negative_real: usize,
}

impl BaSpectrum {
    pub fn from_eigenvalues(eigenvalues: Vec<Complex64>) -> Self {
        let min_real = eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let max_modulus = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let negative_real = eigenvalues.iter().filter(|z| z.re < -NEG_REAL_TOL).count();
        Self {
            eigenvalues,
            min_real,
            max_modulus,
            negative_real,
        }
    }

    /// Writes `re,im` per eigenvalue.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "re,im")?;
        for z in &self.eigenvalues {
            writeln!(w, "{:.16e},{:.16e}", z.re, z.im)?;
        }
        Ok(())
    }
}

/// All eigenvalues of the densified `B·A`; fails if `n > cap`.
pub fn ba_spectrum(pair: &ProjectorPair, cap: usize) -> Result<BaSpectrum> {
    let n = pair.a.ncols();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "BA eigenvalue problem",
            size: n,
            cap,
        });
    }
    let ba = pair.b.matmul_dense(&pair.a)?;
    Ok(BaSpectrum::from_eigenvalues(dense_eig_with_cap(&ba, cap)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinThetaCheck {
    /// `(‖sin Θ(R(B), R(Aᵀ))‖_F² + ‖sin Θ(R(Bᵀ), R(A))‖_F²)^{1/2}`
    pub lhs: f64,
    /// `√2·‖B − Aᵀ‖_F / max(σ_r(A), σ_r(B))`
    pub rhs: f64,
    /// The same left-hand side in the 2-norm.
    pub lhs_2: f64,
    /// `√2·min(κ₂(A)·‖B − Aᵀ‖₂/‖A‖₂, κ₂(B)·‖B − Aᵀ‖₂/‖B‖₂)`
    pub rhs_alt: f64,
    pub rank: usize,
}

impl SinThetaCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs && self.lhs_2 <= self.rhs_alt
    }
}

fn leading(m: &DenseMatrix, r: usize) -> DenseMatrix {
    m.leading_columns(r)
}

/// Sines of the principal angles between `R(P)` and `R(Q)` for orthonormal
/// bases of equal width, nonincreasing.
pub fn principal_sines(p: &DenseMatrix, q: &DenseMatrix) -> Result<Vec<f64>> {
    // (I − QQᵀ)P has the sines as singular values.
    let residual = p.sub(&q.matmul(&q.transpose().matmul(p)?)?)?;
    Ok(dense_svd(&residual)?.sigma)
}

fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(dense_svd(m)?.sigma.first().copied().unwrap_or(0.0))
}

/// Checks the extended sin θ theorem for `A` (m×n) and `B` (n×m).
pub fn sin_theta_check(a: &DenseMatrix, b: &DenseMatrix) -> Result<SinThetaCheck> {
    if b.shape() != (a.ncols(), a.nrows()) {
        return Err(Error::ShapeMismatch {
            context: "sin theta check needs B of shape n x m",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let sa = dense_svd(a)?;
    let sb = dense_svd(b)?;
    let r = sa.rank(RANK_TOL);
    if sb.rank(RANK_TOL) != r {
        return Err(Error::RankMismatch(format!(
            "rank(A) = {r}, rank(B) = {}",
            sb.rank(RANK_TOL)
        )));
    }
    if r == 0 {
        return Ok(SinThetaCheck { lhs: 0.0, rhs: 0.0, lhs_2: 0.0, rhs_alt: 0.0, rank: 0 });
    }
    // R(B) = span U_B, R(Aᵀ) = span V_A, R(Bᵀ) = span V_B, R(A) = span U_A.
    let s1 = principal_sines(&leading(&sb.u, r), &leading(&sa.v, r))?;
    let s2 = principal_sines(&leading(&sb.v, r), &leading(&sa.u, r))?;
    let sq = |s: &[f64]| s.iter().map(|v| v * v).sum::<f64>();
    let lhs = (sq(&s1) + sq(&s2)).sqrt();
    let top = |s: &[f64]| s.first().copied().unwrap_or(0.0);
    let lhs_2 = (top(&s1).powi(2) + top(&s2).powi(2)).sqrt();

    let diff = b.sub(&a.transpose())?;
    let diff_2 = spectral_norm(&diff)?;
    let (ar, br) = (sa.sigma[r - 1], sb.sigma[r - 1]);
    let rhs = std::f64::consts::SQRT_2 * diff.frob_norm() / ar.max(br);
    let kappa_term = |s: &Svd| {
        let kappa = s.sigma[0] / s.sigma[r - 1];
        kappa * diff_2 / s.sigma[0]
    };
    let rhs_alt = std::f64::consts::SQRT_2 * kappa_term(&sa).min(kappa_term(&sb));
    Ok(SinThetaCheck { lhs, rhs, lhs_2, rhs_alt, rank: r })
}

/// `Ã = A + E₁`, `B̃ = Aᵀ + E₂ᵀ`, `b = b̄ + δb`.
#[derive(Debug, Clone)]
pub struct PerturbationInstance {
    pub a: DenseMatrix,
    pub e1: DenseMatrix,
    /// Same shape as `A`.
    pub e2: DenseMatrix,
    pub b_exact: Vec<f64>,
    pub delta_b: Vec<f64>,
    pub epsilon: f64,
}

impl PerturbationInstance {
    /// Scales unit-size perturbation directions by `epsilon`.
    pub fn scaled(
        a: DenseMatrix,
        f1: &DenseMatrix,
        f2: &DenseMatrix,
        b_exact: Vec<f64>,
        db: &[f64],
        epsilon: f64,
    ) -> Self {
        Self {
            a,
            e1: f1.scaled(epsilon),
            e2: f2.scaled(epsilon),
            b_exact,
            delta_b: db.iter().map(|v| v * epsilon).collect(),
            epsilon,
        }
    }
}

/// `(I + ε·L)·A·(I + ε·R) − A`, a perturbation that keeps the rank of `A`
/// for small `ε`.
pub fn product_perturbation(
    a: &DenseMatrix,
    left: &DenseMatrix,
    right: &DenseMatrix,
    epsilon: f64,
) -> Result<DenseMatrix> {
    let (m, n) = a.shape();
    let l = DenseMatrix::identity(m).add(&left.scaled(epsilon))?;
    let r = DenseMatrix::identity(n).add(&right.scaled(epsilon))?;
    l.matmul(a)?.matmul(&r)?.sub(a)
}

/// Seeded Gaussian matrix with entries of variance `1/cols`.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut SplitMix64) -> DenseMatrix {
    let s = 1.0 / (cols as f64).sqrt();
    DenseMatrix::from_fn(rows, cols, |_, _| s * rng.next_normal())
}

/// Random rank-`rank` `m×n` test problem with product perturbations of
/// size `ε` and `‖δb‖ = ε·‖b̄‖`. With `inverse_crime`, `E₁ = 0` and `b̄ ∈ R(A)`.
pub fn random_instance(
    m: usize,
    n: usize,
    rank: usize,
    seed: u64,
    epsilon: f64,
    inverse_crime: bool,
) -> Result<PerturbationInstance> {
    let mut rng = SplitMix64::new(seed);
    let a = gaussian_matrix(m, rank, &mut rng).matmul(&gaussian_matrix(rank, n, &mut rng))?;
    let (l1, r1) = (gaussian_matrix(m, m, &mut rng), gaussian_matrix(n, n, &mut rng));
    let (l2, r2) = (gaussian_matrix(m, m, &mut rng), gaussian_matrix(n, n, &mut rng));
    let b_exact = if inverse_crime {
        a.matvec(&rng.normal_vec(n))?
    } else {
        rng.normal_vec(m)
    };
    let mut db = rng.normal_vec(m);
    let scale = epsilon * norm2(&b_exact) / norm2(&db);
    db.iter_mut().for_each(|v| *v *= scale);
    let e1 = if inverse_crime {
        DenseMatrix::zeros(m, n)
    } else {
        product_perturbation(&a, &l1, &r1, epsilon)?
    };
    let e2 = product_perturbation(&a, &l2, &r2, epsilon)?;
    Ok(PerturbationInstance { a, e1, e2, b_exact, delta_b: db, epsilon })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationResult {
    pub epsilon: f64,
    /// `‖δx_min‖₂ / ‖x_min‖₂`
    pub observed: f64,
    pub bound: f64,
}

fn range_projector(basis: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    let q = leading(basis, r);
    q.matmul(&q.transpose())
}

/// Observed relative change of the minimum-norm solution and its first-order bound.
pub fn perturbation_bound(inst: &PerturbationInstance) -> Result<PerturbationResult> {
    let a = &inst.a;
    let (m, n) = a.shape();
    if inst.e1.shape() != (m, n) || inst.e2.shape() != (m, n) {
        return Err(Error::ShapeMismatch {
            context: "perturbations must match A",
            left: a.shape(),
            right: if inst.e1.shape() != (m, n) { inst.e1.shape() } else { inst.e2.shape() },
        });
    }
    for (v, context) in [(&inst.b_exact, "exact data"), (&inst.delta_b, "data perturbation")] {
        if v.len() != m {
            return Err(Error::DimensionMismatch { context, expected: m, got: v.len() });
        }
    }
    let a_t = a.add(&inst.e1)?;
    let b_t = a.add(&inst.e2)?.transpose();
    let sa = dense_svd(a)?;
    let sat = dense_svd(&a_t)?;
    let sbt = dense_svd(&b_t)?;
    let r = sa.rank(PINV_TOL);
    if sat.rank(PINV_TOL) != r || sbt.rank(PINV_TOL) != r {
        return Err(Error::RankMismatch(format!(
            "rank(A) = {r}, rank(A~) = {}, rank(B~) = {}",
            sat.rank(PINV_TOL),
            sbt.rank(PINV_TOL)
        )));
    }
    if r == 0 {
        return Err(Error::RankMismatch("A is zero".into()));
    }

    let p_ra = range_projector(&sa.u, r)?;
    let p_rat = range_projector(&sa.v, r)?;
    let checks = [
        ("P_R(A~) - P_R(A)", range_projector(&sat.u, r)?.sub(&p_ra)?),
        ("P_R(A~^T) - P_R(A^T)", range_projector(&sat.v, r)?.sub(&p_rat)?),
        ("P_R(B~) - P_R(A^T)", range_projector(&sbt.u, r)?.sub(&p_rat)?),
        ("P_R(B~^T) - P_R(A)", range_projector(&sbt.v, r)?.sub(&p_ra)?),
    ];
    for (which, d) in checks {
        let value = spectral_norm(&d)?;
        if value >= 1.0 {
            return Err(Error::NotAcute { which, value });
        }
    }

    let x_min = sa.pinv(PINV_TOL).matvec(&inst.b_exact)?;
    let b: Vec<f64> = inst.b_exact.iter().zip(&inst.delta_b).map(|(x, y)| x + y).collect();
    let bta = b_t.matmul(&a_t)?;
    let x_pert = dense_svd(&bta)?.pinv(PINV_TOL).matvec(&b_t.matvec(&b)?)?;
    let observed = rel_diff(&x_pert, &x_min);

    let sigma_r = sa.sigma[r - 1];
    let kappa = sa.sigma[0] / sigma_r;
    let nb = norm2(&inst.b_exact);
    let b_range = p_ra.matvec(&inst.b_exact)?;
    let b_perp = norm2(&sub(&inst.b_exact, &b_range));
    let db_range = norm2(&p_ra.matvec(&inst.delta_b)?);
    let e1 = spectral_norm(&inst.e1)?;
    let e2 = spectral_norm(&inst.e2)?;
    let bound = kappa
        * ((2.0 * e1 * norm2(&b_range) / nb + e2 * b_perp / nb) / sigma_r + db_range / nb);
    Ok(PerturbationResult { epsilon: inst.epsilon, observed, bound })
}

/// Writes `epsilon,observed,bound`.
pub fn write_bound_csv(rows: &[PerturbationResult], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "epsilon,observed,bound")?;
    for r in rows {
        writeln!(w, "{:.16e},{:.16e},{:.16e}", r.epsilon, r.observed, r.bound)?;
    }
    Ok(())
}

/// Pearson correlation coefficient; `None` for fewer than two points or a
/// constant sequence.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorHistory {
    /// `‖x̄ − x_k‖₂ / ‖x̄‖₂` for `k = 1..K`.
    pub errnorms: Vec<f64>,
    /// 1-based minimizer, smallest on ties.
    pub k_min: usize,
    pub err_min: f64,
}

/// Relative error history over the retained iterates `1..=K`.
pub fn error_history(trace: &SolverTrace, x_true: &[f64]) -> Result<ErrorHistory> {
    let errnorms = (1..=trace.iterations())
        .map(|k| {
            let x = trace.iterate(k).ok_or(Error::MissingIterate(k))?;
            if x.len() != x_true.len() {
                return Err(Error::DimensionMismatch {
                    context: "ground truth",
                    expected: x.len(),
                    got: x_true.len(),
                });
            }
            Ok(rel_diff(x, x_true))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorHistory::from_errnorms(errnorms))
}

impl ErrorHistory {
    /// Argmin of a precomputed history; `k_min = 0` when it is empty.
    pub fn from_errnorms(errnorms: Vec<f64>) -> Self {
        let (k_min, err_min) = errnorms
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bk, be), (k, &e)| if e < be { (k + 1, e) } else { (bk, be) });
        Self { errnorms, k_min, err_min }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{lsqr, SolverOptions};
    use crate::sparse::CsrMatrix;

    fn random_dense(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut rng = SplitMix64::new(seed);
        DenseMatrix::from_fn(m, n, |_, _| rng.next_normal())
    }

    fn low_rank(m: usize, n: usize, r: usize, seed: u64) -> DenseMatrix {
        random_dense(m, r, seed).matmul(&random_dense(r, n, seed + 1)).unwrap()
    }

    #[test]
    fn constructed_picard_condition() {
        let a = random_dense(40, 25, 1);
        let svd = dense_svd(&a).unwrap();
        let b: Vec<f64> = (0..40)
            .map(|i| (0..25).map(|k| svd.sigma[k].powi(2) * svd.u[(i, k)]).sum())
            .collect();
        let rep = picard_report(&a, &b, &b).unwrap();
        for (c, s) in rep.picard_exact.iter().zip(rep.sigma()) {
            assert!((c - s * s).abs() < 1e-10 * s * s.max(1.0));
        }
    }

    #[test]
    fn white_noise_is_flat() {
        let m = 600;
        let a = random_dense(m, 500, 2);
        let e = SplitMix64::new(3).normal_vec(m);
        let rep = picard_report(&a, &vec![0.0; m], &e).unwrap();
        // |u_iᵀe| is |N(0, ‖e‖²/m)|-like with mean ‖e‖·√(2/(πm)).
        let expected = norm2(&e) * (2.0 / (std::f64::consts::PI * m as f64)).sqrt();
        let mean = rep.picard_noisy.iter().sum::<f64>() / 500.0;
        assert!((mean / expected - 1.0).abs() < 0.1, "{mean} vs {expected}");
        let first = rep.picard_noisy[..250].iter().sum::<f64>();
        let second = rep.picard_noisy[250..].iter().sum::<f64>();
        assert!((first / second - 1.0).abs() < 0.2);
    }

    #[test]
    fn floor_locator() {
        let v: Vec<f64> = (0..2000)
            .map(|i| if i < 800 { (-(i as f64) / 80.0).exp() } else { (-10.0f64).exp() })
            .collect();
        let idx = noise_floor_index(&v, 200).unwrap();
        assert!((600..=900).contains(&idx), "{idx}");
        let decreasing: Vec<f64> = (0..2000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        assert_eq!(noise_floor_index(&decreasing, 200), None);
        assert_eq!(noise_floor_index(&[1.0, 2.0], 200), None);
    }

    #[test]
    fn coefficients_of_zero_start() {
        let a = CsrMatrix::from_dense(&random_dense(20, 10, 4));
        let b = SplitMix64::new(5).normal_vec(20);
        let t = lsqr(&a, &b, &SolverOptions::with_max_iter(3)).unwrap();
        let v = DenseMatrix::identity(10);
        let c = iterate_svd_coeffs(&v, &t, &[0, 3]).unwrap();
        assert!(c[&0].iter().all(|&x| x == 0.0));
        assert_eq!(c[&3], t.final_x.iter().map(|x| x.abs()).collect::<Vec<_>>());
        assert!(matches!(
            iterate_svd_coeffs(&v, &t, &[7]),
            Err(Error::MissingIterate(7))
        ));
    }

    #[test]
    fn matched_spectrum_is_real_nonnegative() {
        let a = CsrMatrix::from_dense(&low_rank(30, 20, 12, 6));
        let pair = ProjectorPair::matched(a, "a");
        let s = ba_spectrum(&pair, 100).unwrap();
        assert_eq!(s.eigenvalues.len(), 20);
        assert!(s.eigenvalues.iter().all(|z| z.im.abs() < 1e-8 && z.re > -1e-8));
        assert_eq!(s.negative_real, 0);
        assert!(ba_spectrum(&pair, 10).is_err());
    }

    #[test]
    fn sin_theta_cases() {
        let a = low_rank(12, 8, 6, 7);
        let exact = sin_theta_check(&a, &a.transpose()).unwrap();
        assert!(exact.lhs < 1e-12 && exact.rhs < 1e-12);
        assert_eq!(exact.rank, 6);

        // B = QAᵀ, Q = I + εS with S skew: angles between R(B) and R(Aᵀ) are O(ε).
        let mut rng = SplitMix64::new(8);
        let g = DenseMatrix::from_fn(8, 8, |_, _| rng.next_normal());
        let s = g.sub(&g.transpose()).unwrap();
        for eps in [1e-2, 1e-3] {
            let q = DenseMatrix::identity(8).add(&s.scaled(eps)).unwrap();
            let chk = sin_theta_check(&a, &q.matmul(&a.transpose()).unwrap()).unwrap();
            assert!(chk.holds(), "{chk:?}");
            assert!(chk.lhs < 10.0 * eps * s.frob_norm());
        }
        let full = random_dense(12, 8, 9);
        assert!(matches!(
            sin_theta_check(&a, &full.transpose()),
            Err(Error::RankMismatch(_))
        ));
    }

    #[test]
    fn sin_theta_random_rank_preserving() {
        for seed in 0..10 {
            let a = low_rank(12, 8, 6, 100 + seed);
            let mut rng = SplitMix64::new(200 + seed);
            let f = DenseMatrix::from_fn(8, 8, |_, _| rng.next_normal());
            let g = DenseMatrix::from_fn(12, 12, |_, _| rng.next_normal());
            let eps = 1e-3;
            let left = DenseMatrix::identity(8).add(&f.scaled(eps)).unwrap();
            let right = DenseMatrix::identity(12).add(&g.scaled(eps)).unwrap();
            let b = left.matmul(&a.transpose()).unwrap().matmul(&right).unwrap();
            let chk = sin_theta_check(&a, &b).unwrap();
            assert!(chk.holds(), "seed {seed}: {chk:?}");
        }
    }

    #[test]
    fn unperturbed_bound_is_zero() {
        let a = low_rank(10, 7, 5, 11);
        let z = DenseMatrix::zeros(10, 7);
        let b = SplitMix64::new(12).normal_vec(10);
        let inst = PerturbationInstance::scaled(a, &z, &z, b, &[0.0; 10], 1e-3);
        let r = perturbation_bound(&inst).unwrap();
        assert!(r.observed < 1e-12);
        assert!(r.bound < 1e-12);
    }

    #[test]
    fn non_acute_is_reported() {
        let a = DenseMatrix::from_diag(&[1.0, 1.0, 0.0]);
        // Ã rotates the range onto the null direction.
        let e1 = DenseMatrix::new(3, 3, vec![-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let inst = PerturbationInstance {
            a,
            e1,
            e2: DenseMatrix::zeros(3, 3),
            b_exact: vec![1.0, 1.0, 0.0],
            delta_b: vec![0.0; 3],
            epsilon: 1.0,
        };
        assert!(matches!(perturbation_bound(&inst), Err(Error::NotAcute { .. })));
    }

    #[test]
    fn pearson_cases() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&x, &[2.0, 4.0, 6.0, 8.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&x, &[1.0; 4]), None);
        assert_eq!(pearson(&[1.0], &[1.0]), None);
    }

    #[test]
    fn random_instances_are_acute_and_first_order() {
        let mut ratios = Vec::new();
        for eps in [1e-3, 1e-4, 1e-5] {
            let inst = random_instance(10, 7, 5, 3, eps, false).unwrap();
            let r = perturbation_bound(&inst).unwrap();
            assert!(r.observed <= 1.1 * r.bound + 1e-3, "{r:?}");
            ratios.push(r.observed / eps);
        }
        assert!((ratios[1] / ratios[2] - 1.0).abs() < 0.05, "{ratios:?}");
    }

    #[test]
    fn error_history_argmin() {
        let a = CsrMatrix::from_dense(&random_dense(20, 10, 13));
        let xt = SplitMix64::new(14).normal_vec(10);
        let b = a.matvec(&xt).unwrap();
        let t = lsqr(&a, &b, &SolverOptions::with_max_iter(10)).unwrap();
        let h = error_history(&t, &xt).unwrap();
        assert_eq!(h.errnorms.len(), t.iterations());
        assert_eq!(h.k_min, t.iterations());
        assert!(h.err_min < 1e-8);
    }
}
