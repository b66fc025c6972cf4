use std::sync::Arc;
use std::time::Instant;

use log::{info, warn};
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::design::{default_probe_resolution, fill_distance, tensor_grid};
use crate::error::{Error, Result};
use crate::forward_model::{generate_data, InverseProblem};
use crate::gp::{Factorization, JointSampler, PredictiveProcess, VectorEmulator};
use crate::kernels::{self, KernelSpec};
use crate::points::PointSet;
use crate::posterior::{self, PosteriorKind, PosteriorSpec, RealizationSampler};
use crate::quadrature::{
    fit_rate, hellinger_sq_estimate, lattice_rule, predicted_l2_sq_rate, predicted_sup_sq_rate,
    reference_rate, Estimate, QuadratureRule, RateModel,
};
use crate::summation;

use super::config::{ExperimentConfig, Target};

/// One `(kind, K, ν, N)` measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub kind: PosteriorKind,
    pub dim: usize,
    pub nu: f64,
    pub n_obs: usize,
    pub n_design: usize,
    pub n_per_dim: usize,
    pub fill_distance: f64,
    pub d2_mean: f64,
    pub d2_stderr: f64,
    pub elapsed_s: f64,
}

/// A study cell that could not be completed. `n_per_dim` is `None` when the
/// whole `(K, ν)` group failed.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub dim: usize,
    pub nu: f64,
    pub n_per_dim: Option<usize>,
    pub message: String,
}

/// The fitted rate for one `(kind, K, ν)` curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub kind: PosteriorKind,
    pub dim: usize,
    pub nu: f64,
    pub n_obs: usize,
    pub points: usize,
    pub model: Option<RateModel>,
    pub status: String,
    pub predicted_l2_sq: f64,
    pub predicted_sup_sq: f64,
    pub reference: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub config: ExperimentConfig,
    pub rows: Vec<StudyRow>,
    pub failures: Vec<CellFailure>,
    pub rates: Vec<RateRow>,
    pub problems: Vec<InverseProblem>,
}

impl StudyReport {
    /// Rows of one curve, ordered by `N`.
    pub fn curve(&self, kind: PosteriorKind, dim: usize, nu: f64) -> Vec<&StudyRow> {
        let mut rows: Vec<&StudyRow> = self
            .rows
            .iter()
            .filter(|r| r.kind == kind && r.dim == dim && r.nu == nu)
            .collect();
        rows.sort_by_key(|r| r.n_design);
        rows
    }

    pub fn rate(&self, kind: PosteriorKind, dim: usize, nu: f64) -> Option<&RateRow> {
        self.rates
            .iter()
            .find(|r| r.kind == kind && r.dim == dim && r.nu == nu)
    }
}

struct DimContext {
    ip: InverseProblem,
    rule: QuadratureRule,
    exact: Vec<f64>,
}

fn dim_context(cfg: &ExperimentConfig, dim: usize) -> Result<DimContext> {
    let ip = generate_data(cfg.problem(dim), cfg.u_star.clone(), cfg.seed)?;
    let rule = lattice_rule(
        &cfg.generating_vector()?,
        dim,
        cfg.qmc_points,
        cfg.qmc_shifts,
        cfg.seed,
    )?;
    let exact = posterior::densities(&PosteriorSpec::exact(), &ip, rule.nodes())?;
    Ok(DimContext { ip, rule, exact })
}

fn stream_index(dim: usize, nu_index: usize, n_per_dim: usize, shift: usize) -> u64 {
    ((dim as u64) << 40) | ((nu_index as u64) << 32) | ((n_per_dim as u64) << 16) | shift as u64
}

/// Emulators of `G` (one component per observation) and `Φ` sharing one
/// factorization of the design Gram matrix.
pub struct Emulators {
    pub g: Arc<VectorEmulator>,
    pub phi: Arc<PredictiveProcess>,
}

pub fn build_emulators(ip: &InverseProblem, kernel: &KernelSpec, design: &PointSet) -> Result<Emulators> {
    let outputs = design
        .iter()
        .map(|u| ip.forward(u))
        .collect::<Result<Vec<_>>>()?;
    let phi_values: Vec<f64> = outputs.iter().map(|g| ip.misfit(g)).collect();
    let factor = Arc::new(Factorization::new(*kernel, design.clone())?);
    let components = (0..ip.n_obs)
        .map(|j| {
            PredictiveProcess::from_factorization(
                Arc::clone(&factor),
                outputs.iter().map(|g| g[j]).collect(),
                None,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Emulators {
        g: Arc::new(VectorEmulator::new(components)?),
        phi: Arc::new(PredictiveProcess::from_factorization(factor, phi_values, None)?),
    })
}

struct CellInput<'a> {
    cfg: &'a ExperimentConfig,
    kinds: &'a [PosteriorKind],
    ctx: &'a DimContext,
    kernel: KernelSpec,
    nu_index: usize,
    n_per_dim: usize,
    prior_blocks: &'a [DMatrix<f64>],
}

fn run_cell(input: &CellInput<'_>) -> Result<Vec<StudyRow>> {
    let ctx = input.ctx;
    let cfg = input.cfg;
    let dim = ctx.ip.dim;
    let design = tensor_grid(dim, input.n_per_dim)?;
    let fill = fill_distance(&design, default_probe_resolution(input.n_per_dim))?;
    let setup = Instant::now();
    let em = build_emulators(&ctx.ip, &input.kernel, &design)?;
    let setup_s = setup.elapsed().as_secs_f64();
    let row = |kind, est: &Estimate, elapsed_s| StudyRow {
        kind,
        dim,
        nu: input.kernel.nu(),
        n_obs: ctx.ip.n_obs,
        n_design: design.len(),
        n_per_dim: input.n_per_dim,
        fill_distance: fill,
        d2_mean: est.mean,
        d2_stderr: est.stderr,
        elapsed_s,
    };
    let mut rows = Vec::new();
    for &kind in input.kinds.iter().filter(|k| !k.is_sample()) {
        let t = Instant::now();
        let spec = PosteriorSpec::new(kind, Some(Arc::clone(&em.g)), Some(Arc::clone(&em.phi)))?;
        let d = posterior::densities(&spec, &ctx.ip, ctx.rule.nodes())?;
        let est = hellinger_sq_estimate(&ctx.exact, &d, &ctx.rule)?;
        rows.push(row(kind, &est, setup_s + t.elapsed().as_secs_f64()));
    }
    let sample_kinds: Vec<PosteriorKind> = input.kinds.iter().copied().filter(|k| k.is_sample()).collect();
    if !sample_kinds.is_empty() {
        let m = ctx.rule.n_points();
        let per_block = (0..ctx.rule.n_shifts())
            .into_par_iter()
            .map(|s| -> Result<Vec<(f64, f64)>> {
                let t = Instant::now();
                let block = ctx.rule.block(s);
                let factor = em.g.factorization();
                let cov = factor.predictive_covariance(&block, Some(&input.prior_blocks[s]))?;
                let sampler = Arc::new(JointSampler::new(&cov, input.kernel.sigma2())?);
                let shared_s = t.elapsed().as_secs_f64();
                let exact = &ctx.exact[s * m..(s + 1) * m];
                sample_kinds
                    .iter()
                    .map(|&kind| {
                        let t = Instant::now();
                        let spec = PosteriorSpec::new(kind, Some(Arc::clone(&em.g)), Some(Arc::clone(&em.phi)))?;
                        let rs = RealizationSampler::with_sampler(&spec, &block, Arc::clone(&sampler))?;
                        let mut stream = posterior::realization_stream(
                            cfg.seed,
                            kind,
                            stream_index(dim, input.nu_index, input.n_per_dim, s),
                        );
                        let d2 = rs
                            .draw_many(&mut stream, cfg.n_realizations)
                            .into_iter()
                            .map(|r| {
                                let realized = spec.with_realization(Arc::new(r))?;
                                let d = posterior::densities(&realized, &ctx.ip, &block)?;
                                Ok(crate::quadrature::hellinger_from_densities(exact, &d)?.powi(2))
                            })
                            .collect::<Result<Vec<f64>>>()?;
                        Ok((summation::mean(&d2), shared_s + t.elapsed().as_secs_f64()))
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, &kind) in sample_kinds.iter().enumerate() {
            let est = Estimate::from_shifts(per_block.iter().map(|b| b[i].0).collect());
            let elapsed: f64 = per_block.iter().map(|b| b[i].1).sum();
            rows.push(row(kind, &est, setup_s + elapsed));
        }
    }
    rows.sort_by_key(|r| r.kind);
    Ok(rows)
}

fn prior_blocks(rule: &QuadratureRule, kernel: &KernelSpec) -> Vec<DMatrix<f64>> {
    (0..rule.n_shifts())
        .into_par_iter()
        .map(|s| kernels::symmetric_gram(kernel, &rule.block(s)))
        .collect()
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j.max(1));
    }
    b.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Squared Hellinger errors for every configured kind and design size.
/// Cell failures are recorded and do not stop the study.
pub fn run_hellinger_study(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<StudyReport> {
    cfg.validate()?;
    let kinds = cfg.kinds()?;
    let mut report = StudyReport {
        config: cfg.clone(),
        rows: Vec::new(),
        failures: Vec::new(),
        rates: Vec::new(),
        problems: Vec::new(),
    };
    let needs_samples = kinds.iter().any(|k| k.is_sample());
    let pool = thread_pool(jobs)?;
    pool.install(|| -> Result<()> {
        for &dim in &cfg.dims {
            let ctx = match dim_context(cfg, dim) {
                Ok(c) => c,
                Err(e) => {
                    for &nu in &cfg.nu {
                        report.failures.push(CellFailure {
                            dim,
                            nu,
                            n_per_dim: None,
                            message: e.to_string(),
                        });
                    }
                    continue;
                }
            };
            report.problems.push(ctx.ip.clone());
            for (nu_index, &nu) in cfg.nu.iter().enumerate() {
                let kernel = match cfg.kernel(nu) {
                    Ok(k) => k,
                    Err(e) => {
                        report.failures.push(CellFailure {
                            dim,
                            nu,
                            n_per_dim: None,
                            message: e.to_string(),
                        });
                        continue;
                    }
                };
                let t = Instant::now();
                let blocks = if needs_samples {
                    prior_blocks(&ctx.rule, &kernel)
                } else {
                    Vec::new()
                };
                info!("K={dim} nu={nu}: prior node covariances in {:.1}s", t.elapsed().as_secs_f64());
                let outcomes: Vec<(usize, Result<Vec<StudyRow>>)> = cfg
                    .n_per_dim
                    .par_iter()
                    .map(|&n| {
                        let input = CellInput {
                            cfg,
                            kinds: &kinds,
                            ctx: &ctx,
                            kernel,
                            nu_index,
                            n_per_dim: n,
                            prior_blocks: &blocks,
                        };
                        let t = Instant::now();
                        let out = run_cell(&input);
                        info!("K={dim} nu={nu} n={n}: {:.1}s", t.elapsed().as_secs_f64());
                        (n, out)
                    })
                    .collect();
                for (n, out) in outcomes {
                    match out {
                        Ok(rows) => report.rows.extend(rows),
                        Err(e) => {
                            warn!("cell K={dim} nu={nu} n_per_dim={n} failed: {e}");
                            report.failures.push(CellFailure {
                                dim,
                                nu,
                                n_per_dim: Some(n),
                                message: e.to_string(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    })?;
    report.rows.sort_by(|a, b| {
        (a.dim, a.kind, a.n_design)
            .cmp(&(b.dim, b.kind, b.n_design))
            .then(a.nu.total_cmp(&b.nu))
    });
    Ok(report)
}

/// Fits `2 d² ≈ C1 N^{-C2}` to every curve of a report.
pub fn fit_rates(report: &mut StudyReport) {
    let cfg = &report.config;
    let kinds = cfg.kinds().unwrap_or_default();
    let mut rates = Vec::new();
    for &dim in &cfg.dims {
        for &nu in &cfg.nu {
            for &kind in &kinds {
                let curve = report.curve(kind, dim, nu);
                let ns: Vec<f64> = curve.iter().map(|r| r.n_design as f64).collect();
                let errs: Vec<f64> = curve.iter().map(|r| 2.0 * r.d2_mean).collect();
                let (model, status) = if curve.len() < 3 {
                    (None, "insufficient points".to_string())
                } else {
                    match fit_rate(&ns, &errs) {
                        Ok(m) => (Some(m), "ok".to_string()),
                        Err(e) => (None, e.to_string()),
                    }
                };
                rates.push(RateRow {
                    kind,
                    dim,
                    nu,
                    n_obs: cfg.n_obs,
                    points: curve.len(),
                    model,
                    status,
                    predicted_l2_sq: predicted_l2_sq_rate(nu, dim),
                    predicted_sup_sq: predicted_sup_sq_rate(nu, dim),
                    reference: reference_rate(kind, dim, nu, cfg.n_obs),
                });
            }
        }
    }
    report.rates = rates;
}

/// The full study: Hellinger errors plus rate fits.
pub fn run_convergence_study(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<StudyReport> {
    let mut report = run_hellinger_study(cfg, jobs)?;
    fit_rates(&mut report);
    Ok(report)
}

/// Emulator accuracy on a probe set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmulatorDiagnostics {
    /// `max_x |f(x) - m_N(x)|`, maximised over components as well.
    pub sup_error: f64,
    /// Root mean square of `‖f(x) - m_N(x)‖` over the probe set.
    pub l2_error: f64,
    /// `max_x sqrt(k_N(x, x))`.
    pub max_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmulateRow {
    pub target: Target,
    pub dim: usize,
    pub nu: f64,
    pub n_obs: usize,
    pub n_design: usize,
    pub n_per_dim: usize,
    pub fill_distance: f64,
    pub diagnostics: EmulatorDiagnostics,
}

/// The cell-centred tensor grid with `n` points per dimension.
pub fn midpoint_grid(dim: usize, n: usize) -> Result<PointSet> {
    if dim == 0 || n == 0 {
        return Err(Error::InvalidDesign("midpoint grid needs positive sizes".into()));
    }
    let axis: Vec<f64> = (0..n).map(|i| -1.0 + (2 * i + 1) as f64 / n as f64).collect();
    let total = n.pow(dim as u32);
    let mut coords = Vec::with_capacity(total * dim);
    for idx in 0..total {
        let mut rest = idx;
        let mut p = vec![0.0; dim];
        for d in (0..dim).rev() {
            p[d] = axis[rest % n];
            rest /= n;
        }
        coords.extend(p);
    }
    PointSet::from_flat(dim, coords)
}

/// Observed values of the emulated function at `points`: `G` components or
/// `Φ`, one inner vector per component.
pub fn target_values(ip: &InverseProblem, target: Target, points: &PointSet) -> Result<Vec<Vec<f64>>> {
    let outputs = points
        .iter()
        .map(|u| ip.forward(u))
        .collect::<Result<Vec<_>>>()?;
    Ok(match target {
        Target::G => (0..ip.n_obs)
            .map(|j| outputs.iter().map(|g| g[j]).collect())
            .collect(),
        Target::Phi => vec![outputs.iter().map(|g| ip.misfit(g)).collect()],
    })
}

/// Emulates `target` on `design` and measures it against `truth` (as from
/// [`target_values`]) on `probe`.
pub fn emulator_diagnostics(
    ip: &InverseProblem,
    target: Target,
    kernel: &KernelSpec,
    design: &PointSet,
    probe: &PointSet,
    truth: &[Vec<f64>],
) -> Result<EmulatorDiagnostics> {
    let values = target_values(ip, target, design)?;
    let factor = Arc::new(Factorization::new(*kernel, design.clone())?);
    let proj = factor.project(probe)?;
    let mut sq = vec![0.0; probe.len()];
    let mut sup: f64 = 0.0;
    for (v, t) in values.into_iter().zip(truth) {
        let p = PredictiveProcess::from_factorization(Arc::clone(&factor), v, None)?;
        for (i, (m, f)) in p.means(probe, &proj).iter().zip(t).enumerate() {
            let e = (f - m).abs();
            sup = sup.max(e);
            sq[i] += e * e;
        }
    }
    let max_var = factor
        .variances(&proj)?
        .into_iter()
        .fold(0.0f64, f64::max);
    Ok(EmulatorDiagnostics {
        sup_error: sup,
        l2_error: summation::mean(&sq).sqrt(),
        max_std: max_var.sqrt(),
    })
}

/// Emulator diagnostics for every `(K, ν, n_per_dim)` of the config.
pub fn run_emulate(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<(Vec<EmulateRow>, Vec<CellFailure>)> {
    cfg.validate()?;
    let pool = thread_pool(jobs)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    pool.install(|| -> Result<()> {
        for &dim in &cfg.dims {
            let ip = generate_data(cfg.problem(dim), cfg.u_star.clone(), cfg.seed)?;
            let probe = midpoint_grid(dim, cfg.probe_points_for(dim))?;
            let truth = target_values(&ip, cfg.target, &probe)?;
            for &nu in &cfg.nu {
                let kernel = cfg.kernel(nu)?;
                let outcomes: Vec<(usize, Result<EmulateRow>)> = cfg
                    .n_per_dim
                    .par_iter()
                    .map(|&n| {
                        let out = (|| {
                            let design = tensor_grid(dim, n)?;
                            let diagnostics =
                                emulator_diagnostics(&ip, cfg.target, &kernel, &design, &probe, &truth)?;
                            Ok(EmulateRow {
                                target: cfg.target,
                                dim,
                                nu,
                                n_obs: ip.n_obs,
                                n_design: design.len(),
                                n_per_dim: n,
                                fill_distance: fill_distance(&design, default_probe_resolution(n))?,
                                diagnostics,
                            })
                        })();
                        (n, out)
                    })
                    .collect();
                for (n, out) in outcomes {
                    match out {
                        Ok(r) => rows.push(r),
                        Err(e) => failures.push(CellFailure {
                            dim,
                            nu,
                            n_per_dim: Some(n),
                            message: e.to_string(),
                        }),
                    }
                }
            }
        }
        Ok(())
    })?;
    Ok((rows, failures))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_indices_are_distinct_below_48_bits() {
        let mut seen = std::collections::HashSet::new();
        for dim in [1, 2, 3, 255] {
            for nu in [0, 1, 254] {
                for n in [2, 9, 65535] {
                    for s in [0, 7, 65535] {
                        let i = stream_index(dim, nu, n, s);
                        assert!(i < 1 << 48);
                        assert!(seen.insert(i));
                    }
                }
            }
        }
    }

    #[test]
    fn midpoint_grid_layout() {
        let g = midpoint_grid(2, 2).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.get(1), &[-0.5, 0.5]);
    }
}
