use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ctkrylov::analysis::{
    ba_spectrum, pearson, perturbation_bound, picard_report, random_instance, write_bound_csv,
    ErrorHistory,
};
use ctkrylov::phantom::{add_noise, make_phantom, save_pgm, synth_sinogram, NoiseSpec};
use ctkrylov::projector::{build_matrix, matrix_file_name, threshold_transpose, unmatchedness};
use ctkrylov::solvers::{ab_gmres, ba_gmres, landweber, lsmr, lsqr, Method};
use ctkrylov::sparse::{mm, DEFAULT_EIG_CAP};
use ctkrylov::stopping::SinogramLayout;
use ctkrylov::{
    CsrMatrix, ProjModel, ProjectorPair, SolverOptions, SolverTrace, StoppingConfig,
};

use crate::config::{BackModel, ExperimentConfig, Omega};
use crate::error::CliError;

type CliResult<T> = Result<T, CliError>;

/// Everything a run needs: operators, ground truth and data.
pub struct Problem {
    pub a: CsrMatrix,
    pub b_op: CsrMatrix,
    pub x_true: Vec<f64>,
    pub b_exact: Vec<f64>,
    pub b: Vec<f64>,
    pub noise_norm: f64,
}

pub fn back_label(model: BackModel) -> String {
    match model {
        BackModel::Transpose(m) => m.name().to_string(),
        BackModel::Threshold(tau) => format!("threshold:{tau}"),
    }
}

pub fn back_operator(cfg: &ExperimentConfig, a: &CsrMatrix, model: BackModel) -> CliResult<CsrMatrix> {
    Ok(match model {
        BackModel::Transpose(m) if m == cfg.model_a => a.transpose(),
        BackModel::Transpose(m) => build_matrix(&cfg.geometry, m)?.transpose(),
        BackModel::Threshold(tau) => threshold_transpose(a, tau)?,
    })
}

pub fn build_problem(cfg: &ExperimentConfig) -> CliResult<Problem> {
    let a = build_matrix(&cfg.geometry, cfg.model_a)?;
    let b_op = back_operator(cfg, &a, cfg.model_b)?;
    let phantom = make_phantom(cfg.phantom_kind, cfg.geometry.n_pixels, cfg.phantom_seed)?;
    let b_exact = synth_sinogram(&a, &phantom)?;
    let (b, noise_norm) = add_noise(
        &b_exact,
        NoiseSpec {
            rel_level: cfg.noise_level,
            seed: cfg.noise_seed,
        },
    )?;
    Ok(Problem {
        a,
        b_op,
        x_true: phantom.values,
        b_exact,
        b,
        noise_norm,
    })
}

pub fn solver_options(cfg: &ExperimentConfig, noise_norm: f64, x_true: &[f64]) -> SolverOptions {
    let g = &cfg.geometry;
    SolverOptions {
        max_iter: cfg.max_iter,
        x0: None,
        x_true: Some(x_true.to_vec()),
        stopping: StoppingConfig {
            rule: cfg.stop_rule,
            dp_tau: cfg.dp_tau,
            noise_norm: Some(noise_norm),
            ncp_patience: cfg.ncp_patience,
            layout: Some(SinogramLayout {
                n_det: g.n_det,
                n_ang: g.n_angles(),
            }),
        },
        halt_on_stop: cfg.halt_on_stop,
        keep_iterates: cfg.keep_iterates,
        reorthogonalize: cfg.reorthogonalize,
        ..SolverOptions::default()
    }
}

/// `1/(‖B‖∞·‖A‖∞)`, which bounds `ω·ρ(BA) ≤ 1`.
pub fn auto_omega(a: &CsrMatrix, b_op: &CsrMatrix) -> f64 {
    1.0 / (a.inf_norm() * b_op.inf_norm())
}

pub fn run_solver(
    cfg: &ExperimentConfig,
    a: &CsrMatrix,
    b_op: &CsrMatrix,
    b: &[f64],
    opts: &SolverOptions,
) -> CliResult<SolverTrace> {
    Ok(match cfg.solver {
        Method::AbGmres => ab_gmres(a, b_op, b, opts)?,
        Method::BaGmres => ba_gmres(a, b_op, b, opts)?,
        Method::Lsqr => lsqr(a, b, opts)?,
        Method::Lsmr => lsmr(a, b, opts)?,
        Method::Landweber => {
            let omega = match cfg.omega {
                Omega::Auto => auto_omega(a, b_op),
                Omega::Value(w) => w,
            };
            landweber(a, b_op, b, omega, opts)?
        }
    })
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult<()> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn opt_usize(v: Option<usize>) -> String {
    v.map(|k| k.to_string()).unwrap_or_default()
}

/// Writes one Matrix Market file per model plus `summary.csv`.
pub fn build_matrices(cfg: &ExperimentConfig, models: &[ProjModel], out: &Path) -> CliResult<Vec<PathBuf>> {
    ensure_dir(out)?;
    let mut rows = Vec::new();
    let mut paths = Vec::new();
    for &model in models {
        let a = build_matrix(&cfg.geometry, model)?;
        let name = matrix_file_name(&cfg.geometry, model);
        let path = out.join(&name);
        mm::mm_write(&a, &path)?;
        println!(
            "{name}: {}x{}, nnz {}, sparsity {:.6}",
            a.nrows(),
            a.ncols(),
            a.nnz(),
            a.sparsity()
        );
        rows.push(format!(
            "{},{name},{},{},{},{:.16e}",
            model.name(),
            a.nrows(),
            a.ncols(),
            a.nnz(),
            a.sparsity()
        ));
        paths.push(path);
    }
    write_file(&out.join("summary.csv"), |w| {
        writeln!(w, "model,file,rows,cols,nnz,sparsity")?;
        rows.iter().try_for_each(|r| writeln!(w, "{r}"))
    })?;
    Ok(paths)
}

/// Default model set for `build-matrix`: `model_a` and, if distinct, the model behind `model_b`.
pub fn default_models(cfg: &ExperimentConfig) -> Vec<ProjModel> {
    let mut models = vec![cfg.model_a];
    if let BackModel::Transpose(m) = cfg.model_b {
        if m != cfg.model_a {
            models.push(m);
        }
    }
    models
}

#[derive(Debug, Clone)]
pub struct SolveSummary {
    pub iterations: usize,
    pub k_min: usize,
    pub err_min: f64,
    pub k_stop: Option<usize>,
    pub stop_reason: String,
    pub storage: usize,
    pub k_dp: Option<usize>,
    pub k_ncp: Option<usize>,
}

impl SolveSummary {
    pub fn from_trace(trace: &SolverTrace, patience: usize) -> Self {
        let hist = ErrorHistory::from_errnorms(trace.errnorms.clone());
        let k = trace.stop_index.unwrap_or(trace.iterations());
        Self {
            iterations: trace.iterations(),
            k_min: hist.k_min,
            err_min: hist.err_min,
            k_stop: trace.stop_index,
            stop_reason: trace.stop_reason.clone(),
            storage: trace.storage(k),
            k_dp: trace.dp_index(),
            k_ncp: trace.ncp_index(patience),
        }
    }
}

/// Runs the configured solver and writes `trace.csv`, `summary.csv`,
/// `recon.pgm` and `recon_best.pgm`.
pub fn solve(cfg: &ExperimentConfig, out: &Path) -> CliResult<SolveSummary> {
    ensure_dir(out)?;
    let p = build_problem(cfg)?;
    let opts = solver_options(cfg, p.noise_norm, &p.x_true);
    let trace = run_solver(cfg, &p.a, &p.b_op, &p.b, &opts)?;
    let s = SolveSummary::from_trace(&trace, cfg.ncp_patience);

    write_file(&out.join("trace.csv"), |w| trace.write_csv(w))?;
    let n = cfg.geometry.n_pixels;
    save_pgm(&trace.final_x, n, out.join("recon.pgm"))?;
    if let Some((_, best)) = &trace.best {
        save_pgm(best, n, out.join("recon_best.pgm"))?;
    }
    write_file(&out.join("summary.csv"), |w| {
        writeln!(
            w,
            "solver,model_a,model_b,m,n,iterations,k_min,err_min,k_stop,stop_reason,storage,k_dp,k_ncp"
        )?;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{:.16e},{},{},{},{},{}",
            cfg.solver,
            cfg.model_a,
            back_label(cfg.model_b),
            p.a.nrows(),
            p.a.ncols(),
            s.iterations,
            s.k_min,
            s.err_min,
            opt_usize(s.k_stop),
            s.stop_reason,
            s.storage,
            opt_usize(s.k_dp),
            opt_usize(s.k_ncp)
        )
    })?;
    println!(
        "{} ({}, {}): k_min={} err_min={:.6} k_stop={} ({}) storage={}",
        cfg.solver,
        cfg.model_a,
        back_label(cfg.model_b),
        s.k_min,
        s.err_min,
        opt_usize(s.k_stop),
        s.stop_reason,
        s.storage
    );
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub tau: f64,
    pub unmatchedness: f64,
    pub k_min_clean: usize,
    pub err_min_clean: f64,
    pub k_min_noisy: usize,
    pub err_min_noisy: f64,
}

/// Error minima with and without noise for each `B_τ`; writes `sweep.csv`.
pub fn sweep_tau(cfg: &ExperimentConfig, taus: &[f64], out: &Path) -> CliResult<Vec<SweepRow>> {
    if !matches!(cfg.model_b, BackModel::Threshold(_)) {
        return Err(CliError::Config(
            "model_b: sweep-tau requires model_b = threshold:<tau>".into(),
        ));
    }
    if matches!(cfg.solver, Method::Lsqr | Method::Lsmr) {
        return Err(CliError::Config(format!(
            "solver: {} ignores the back projector; use ab, ba or landweber",
            cfg.solver
        )));
    }
    ensure_dir(out)?;
    let p = build_problem(cfg)?;
    let mut base = solver_options(cfg, p.noise_norm, &p.x_true);
    base.stopping = StoppingConfig::default();
    base.halt_on_stop = false;
    base.keep_iterates = 0;

    let mut rows = Vec::new();
    for &tau in taus {
        let b_op = threshold_transpose(&p.a, tau)?;
        let pair = ProjectorPair::new(p.a.clone(), b_op, "A".into(), format!("B_{tau}"))?;
        let um = unmatchedness(&pair)?;
        let clean = run_solver(cfg, &p.a, &pair.b, &p.b_exact, &base)?;
        let noisy = run_solver(cfg, &p.a, &pair.b, &p.b, &base)?;
        let hc = ErrorHistory::from_errnorms(clean.errnorms);
        let hn = ErrorHistory::from_errnorms(noisy.errnorms);
        println!(
            "tau={tau}: unmatchedness={um:.6} err_min clean={:.6} ({}) noisy={:.6} ({})",
            hc.err_min, hc.k_min, hn.err_min, hn.k_min
        );
        rows.push(SweepRow {
            tau,
            unmatchedness: um,
            k_min_clean: hc.k_min,
            err_min_clean: hc.err_min,
            k_min_noisy: hn.k_min,
            err_min_noisy: hn.err_min,
        });
    }
    write_file(&out.join("sweep.csv"), |w| {
        writeln!(
            w,
            "tau,unmatchedness,k_min_clean,err_min_clean,k_min_noisy,err_min_noisy"
        )?;
        rows.iter().try_for_each(|r| {
            writeln!(
                w,
                "{},{:.16e},{},{:.16e},{},{:.16e}",
                r.tau, r.unmatchedness, r.k_min_clean, r.err_min_clean, r.k_min_noisy, r.err_min_noisy
            )
        })
    })?;
    let um: Vec<f64> = rows.iter().map(|r| r.unmatchedness).collect();
    let err: Vec<f64> = rows.iter().map(|r| r.err_min_noisy).collect();
    if let Some(rho) = pearson(&um, &err) {
        println!("pearson(unmatchedness, err_min noisy) = {rho:.4}");
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    Picard,
    Spectrum,
    Coeffs,
    Bound,
}

impl std::str::FromStr for Analysis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "picard" => Ok(Analysis::Picard),
            "spectrum" => Ok(Analysis::Spectrum),
            "coeffs" => Ok(Analysis::Coeffs),
            "bound" => Ok(Analysis::Bound),
            other => Err(format!(
                "unknown analysis {other:?} (expected picard, spectrum, coeffs or bound)"
            )),
        }
    }
}

pub struct AnalyzeArgs {
    pub what: Analysis,
    /// Iterations for `coeffs`.
    pub ks: Vec<usize>,
    /// ε ladder for `bound`.
    pub epsilons: Vec<f64>,
}

pub fn analyze(cfg: &ExperimentConfig, args: &AnalyzeArgs, out: &Path) -> CliResult<()> {
    ensure_dir(out)?;
    match args.what {
        Analysis::Picard => {
            let p = build_problem(cfg)?;
            let rep = picard_report(&p.a.to_dense(), &p.b_exact, &p.b)?;
            write_file(&out.join("picard.csv"), |w| rep.write_csv(w))?;
            println!(
                "sigma_1={:.6e} sigma_r={:.6e} noise floor at {}",
                rep.sigma().first().copied().unwrap_or(0.0),
                rep.sigma().last().copied().unwrap_or(0.0),
                opt_usize(rep.noise_floor)
            );
        }
        Analysis::Spectrum => {
            let a = build_matrix(&cfg.geometry, cfg.model_a)?;
            let b_op = back_operator(cfg, &a, cfg.model_b)?;
            let pair = ProjectorPair::new(a, b_op, cfg.model_a.to_string(), back_label(cfg.model_b))?;
            let s = ba_spectrum(&pair, DEFAULT_EIG_CAP)?;
            write_file(&out.join("spectrum.csv"), |w| s.write_csv(w))?;
            write_file(&out.join("spectrum_summary.csv"), |w| {
                writeln!(w, "count,min_real,max_modulus,negative_real")?;
                writeln!(
                    w,
                    "{},{:.16e},{:.16e},{}",
                    s.eigenvalues.len(),
                    s.min_real,
                    s.max_modulus,
                    s.negative_real
                )
            })?;
            println!(
                "{} eigenvalues: min Re = {:.6e}, max |λ| = {:.6e}, {} with negative real part",
                s.eigenvalues.len(),
                s.min_real,
                s.max_modulus,
                s.negative_real
            );
        }
        Analysis::Coeffs => {
            let p = build_problem(cfg)?;
            let rep = picard_report(&p.a.to_dense(), &p.b_exact, &p.b)?;
            let mut ks = args.ks.clone();
            ks.sort_unstable();
            ks.dedup();
            let mut opts = solver_options(cfg, p.noise_norm, &p.x_true);
            opts.max_iter = ks.last().copied().unwrap_or(1).max(1);
            opts.keep_iterates = 1;
            opts.halt_on_stop = false;
            let trace = run_solver(cfg, &p.a, &p.b_op, &p.b, &opts)?;
            let coeffs = ctkrylov::analysis::iterate_svd_coeffs(&rep.svd.v, &trace, &ks)?;
            let exact = rep.coefficients(&p.x_true)?;
            write_file(&out.join("coeffs.csv"), |w| {
                let header: Vec<String> = ks.iter().map(|k| format!("k_{k}")).collect();
                writeln!(w, "i,sigma,exact,{}", header.join(","))?;
                for (i, s) in rep.sigma().iter().enumerate() {
                    let cols: Vec<String> = ks.iter().map(|k| format!("{:.16e}", coeffs[k][i])).collect();
                    writeln!(w, "{},{s:.16e},{:.16e},{}", i + 1, exact[i], cols.join(","))?;
                }
                Ok(())
            })?;
            println!("coefficients for k = {ks:?} written");
        }
        Analysis::Bound => {
            let mut rows = Vec::new();
            for &eps in &args.epsilons {
                let inst = random_instance(10, 7, 5, cfg.noise_seed, eps, false)?;
                let r = perturbation_bound(&inst)?;
                println!("eps={eps:e}: observed={:.6e} bound={:.6e}", r.observed, r.bound);
                rows.push(r);
            }
            write_file(&out.join("bound.csv"), |w| write_bound_csv(&rows, w))?;
        }
    }
    Ok(())
}

/// Solver run used by `solve` without file output; exposed for tests.
pub fn run_configured(cfg: &ExperimentConfig) -> CliResult<(Problem, SolverTrace)> {
    let p = build_problem(cfg)?;
    let opts = solver_options(cfg, p.noise_norm, &p.x_true);
    let trace = run_solver(cfg, &p.a, &p.b_op, &p.b, &opts)?;
    Ok((p, trace))
}
