#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use gplab::design::tensor_grid;
use gplab::forward_model::{fem_solve, generate_data, Coefficient, InverseProblem, ProblemConfig};
use gplab::gp::{condition, DesignSet, PredictiveProcess, VectorEmulator};
use gplab::kernels::KernelSpec;
use gplab::points::PointSet;
use gplab::posterior::{densities, draw_sample_posterior, PosteriorKind, PosteriorSpec};
use gplab::quadrature::{
    fit_rate, hellinger_from_densities, lattice_rule, total_variation_estimate, tv_bound_check,
    Estimate, GeneratingVector, QuadratureRule, RateModel,
};
use gplab::rng::{stream, Domain};
use gplab::summation::mean_and_stderr;
use gplab::experiment::{build_emulators, EmulateRow, ExperimentConfig, Target};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn matern1() -> KernelSpec {
    KernelSpec::matern(1.0, 1.0, 1.0).unwrap()
}

pub fn random_points(dim: usize, count: usize, seed: u64) -> PointSet {
    let mut r = stream(seed, Domain::Generic, 1000);
    let coords = (0..dim * count).map(|_| r.random_range(-1.0..1.0)).collect();
    PointSet::from_flat(dim, coords).unwrap()
}

pub fn default_problem(dim: usize, n_obs: usize, seed: u64) -> InverseProblem {
    generate_data(ProblemConfig::new(dim, n_obs), None, seed).unwrap()
}

pub struct ProblemEmulators {
    pub ip: InverseProblem,
    pub g: Arc<VectorEmulator>,
    pub phi: Arc<PredictiveProcess>,
}

pub fn problem_emulators(dim: usize, n_per_dim: usize, seed: u64) -> ProblemEmulators {
    let ip = default_problem(dim, 1, seed);
    let em = build_emulators(&ip, &matern1(), &tensor_grid(dim, n_per_dim).unwrap()).unwrap();
    ProblemEmulators { ip, g: em.g, phi: em.phi }
}

/// Maximum nodal error against `50 x (1 - x)` and the largest error over a
/// fine sampling, for `u = 0`.
pub fn fem_errors(mesh_h: f64) -> (f64, f64) {
    let sol = fem_solve(&Coefficient::new(&[0.0]).unwrap(), mesh_h).unwrap();
    let m = sol.cells();
    let exact = |x: f64| 50.0 * x * (1.0 - x);
    let nodal = (0..=m)
        .map(|i| (sol.nodal()[i] - exact(i as f64 / m as f64)).abs())
        .fold(0.0, f64::max);
    let sampled = (0..=8192)
        .map(|i| {
            let x = i as f64 / 8192.0;
            (sol.eval(x) - exact(x)).abs()
        })
        .fold(0.0, f64::max);
    (nodal, sampled)
}

pub struct GpExactness {
    pub interpolation_ratio: f64,
    pub max_node_variance: f64,
    pub maximizer_relative: f64,
    pub min_increment: f64,
}

/// Measured on a Matérn ν=1 emulator of a smooth test function on a
/// perturbed tensor design in `[-1,1]²`.
pub fn gp_exactness(pairs: usize, seed: u64) -> GpExactness {
    let s = matern1();
    let mut r = stream(seed, Domain::Generic, 2000);
    let mut design = tensor_grid(2, 6).unwrap();
    let coords: Vec<f64> = design
        .as_flat()
        .iter()
        .map(|x| (x + r.random_range(-0.05..0.05)).clamp(-1.0, 1.0))
        .collect();
    design = PointSet::from_flat(2, coords).unwrap();
    let f = |u: &[f64]| (2.0 * u[0]).sin() * (u[1] - 0.3).exp() + 3.0;
    let data = DesignSet::from_fn(design.clone(), f).unwrap();
    let p = condition(&s, &data, None).unwrap();
    let fmax = design.iter().map(|u| f(u).abs()).fold(0.0, f64::max);
    let interpolation_ratio = design
        .iter()
        .map(|u| (p.mean(u) - f(u)).abs() / fmax)
        .fold(0.0, f64::max);
    let max_node_variance = design
        .iter()
        .map(|u| p.variance(u).unwrap())
        .fold(0.0, f64::max);

    let mut maximizer_relative: f64 = 0.0;
    for u in random_points(2, 50, seed).iter() {
        let kn = p.variance(u).unwrap();
        let gstar = p.variance_maximizer(u);
        let norm = gplab::gp::native_norm(&gstar, &s);
        let g = gstar.scaled(1.0 / norm);
        let gd = DesignSet::from_fn(design.clone(), |x| g.eval(&s, x)).unwrap();
        let pg = condition(&s, &gd, None).unwrap();
        let gap = (g.eval(&s, u) - pg.mean(u)).abs();
        maximizer_relative = maximizer_relative.max((gap / kn.sqrt() - 1.0).abs());
    }

    let pts = random_points(2, 2 * pairs, seed + 1);
    let mut min_increment = f64::INFINITY;
    for i in 0..pairs {
        let (u, v) = (pts.get(2 * i), pts.get(2 * i + 1));
        let prior = s.eval(u, u).unwrap() - 2.0 * s.eval(u, v).unwrap() + s.eval(v, v).unwrap();
        let post = p.variance(u).unwrap() - 2.0 * p.covariance(u, v).unwrap() + p.variance(v).unwrap();
        min_increment = min_increment.min(prior - post);
    }
    GpExactness {
        interpolation_ratio,
        max_node_variance,
        maximizer_relative,
        min_increment,
    }
}

pub struct McComparison {
    pub kind: PosteriorKind,
    pub points: usize,
    pub within_3se: usize,
    pub worst_z: f64,
}

/// Compares the closed-form marginal densities with `draws`-sample Monte
/// Carlo means at `points` random parameters.
pub fn marginal_mc(points: usize, draws: usize, seed: u64) -> Vec<McComparison> {
    let em = problem_emulators(2, 3, seed);
    let ip = &em.ip;
    let us = random_points(2, points, seed + 7);
    let mut out = Vec::new();
    for kind in [PosteriorKind::MarginalPhi, PosteriorKind::MarginalG] {
        let mut within = 0;
        let mut worst: f64 = 0.0;
        for (i, u) in us.iter().enumerate() {
            let mut r = stream(seed, Domain::Generic, 10_000 + i as u64 + 1000 * kind as u64);
            let (closed, samples): (f64, Vec<f64>) = if kind == PosteriorKind::MarginalPhi {
                let (m, v) = (em.phi.mean(u), em.phi.variance(u).unwrap());
                let sd = v.sqrt();
                let xs = (0..draws)
                    .map(|_| (-(m + sd * r.sample::<f64, _>(StandardNormal))).exp())
                    .collect();
                (gplab::posterior::marginal_phi_density(m, v), xs)
            } else {
                let (means, v) = em.g.mean_and_variance(u).unwrap();
                let sd = v.sqrt();
                let xs = (0..draws)
                    .map(|_| {
                        let g: Vec<f64> = means
                            .iter()
                            .map(|m| m + sd * r.sample::<f64, _>(StandardNormal))
                            .collect();
                        (-ip.misfit(&g)).exp()
                    })
                    .collect();
                (gplab::posterior::marginal_g_density(&ip.data, &means, v, ip.sigma_eta2), xs)
            };
            let (mc, se) = mean_and_stderr(&samples);
            let z = (mc - closed).abs() / se;
            worst = worst.max(z);
            if z <= 3.0 {
                within += 1;
            }
        }
        out.push(McComparison {
            kind,
            points,
            within_3se: within,
            worst_z: worst,
        });
    }
    out
}

pub struct HellingerSuite {
    pub max_self: f64,
    pub max_asymmetry: f64,
    pub max_scaling_gap: f64,
    pub triples: usize,
    pub triangle_violations: usize,
    pub worst_triangle_slack: f64,
    pub tv_bound: f64,
    pub tv_estimate: Estimate,
}

/// A pool of exact, mean, marginal and sample posteriors on designs of
/// several sizes, evaluated once on the nodes of `rule`.
pub fn spec_pool(ip: &InverseProblem, rule: &QuadratureRule, seed: u64) -> Vec<(String, Vec<f64>)> {
    let mut pool = vec![(
        "exact".to_string(),
        densities(&PosteriorSpec::exact(), ip, rule.nodes()).unwrap(),
    )];
    for n in 2..=5 {
        let em = build_emulators(ip, &matern1(), &tensor_grid(ip.dim, n).unwrap()).unwrap();
        for kind in PosteriorKind::APPROXIMATIONS {
            let spec = if kind.uses_g() {
                PosteriorSpec::with_g(kind, Arc::clone(&em.g)).unwrap()
            } else {
                PosteriorSpec::with_phi(kind, Arc::clone(&em.phi)).unwrap()
            };
            let spec = if kind.is_sample() {
                draw_sample_posterior(&spec, rule.nodes(), seed + n as u64).unwrap()
            } else {
                spec
            };
            pool.push((
                format!("{}_n{n}", kind.name()),
                densities(&spec, ip, rule.nodes()).unwrap(),
            ));
        }
    }
    pool
}

pub fn hellinger_suite(n_triples: usize, seed: u64) -> HellingerSuite {
    let ip = default_problem(2, 1, seed);
    let rule = lattice_rule(&GeneratingVector::Embedded, 2, 256, 4, seed).unwrap();
    let pool = spec_pool(&ip, &rule, seed);
    let d = |a: &[f64], b: &[f64]| hellinger_from_densities(a, b).unwrap();

    let mut max_self: f64 = 0.0;
    let mut max_asymmetry: f64 = 0.0;
    let mut max_scaling_gap: f64 = 0.0;
    for (i, (_, a)) in pool.iter().enumerate() {
        max_self = max_self.max(d(a, a));
        let scaled: Vec<f64> = a.iter().map(|x| 7.3 * x).collect();
        let (_, b) = &pool[(i + 1) % pool.len()];
        max_asymmetry = max_asymmetry.max((d(a, b) - d(b, a)).abs());
        max_scaling_gap = max_scaling_gap.max((d(&scaled, b) - d(a, b)).abs());
        let tiny: Vec<f64> = a.iter().map(|x| 1e-3 * x).collect();
        max_scaling_gap = max_scaling_gap.max((d(&tiny, b) - d(a, b)).abs());
    }

    let mut r = stream(seed, Domain::Generic, 3000);
    let mut violations = 0;
    let mut worst: f64 = f64::INFINITY;
    for _ in 0..n_triples {
        let pick = |r: &mut gplab::rng::StreamRng| &pool[r.random_range(0..pool.len())].1;
        let (a, b, c) = (pick(&mut r), pick(&mut r), pick(&mut r));
        let slack = d(a, b) + d(b, c) - d(a, c);
        worst = worst.min(slack);
        if slack < -1e-12 {
            violations += 1;
        }
    }

    let coarse = pool.iter().find(|(n, _)| n == "mean_g_n2").unwrap();
    let tv_bound = tv_bound_check(d(&pool[0].1, &coarse.1));
    let tv_estimate = total_variation_estimate(&pool[0].1, &coarse.1, &rule).unwrap();
    HellingerSuite {
        max_self,
        max_asymmetry,
        max_scaling_gap,
        triples: n_triples,
        triangle_violations: violations,
        worst_triangle_slack: worst,
        tv_bound,
        tv_estimate,
    }
}

pub struct QmcSuite {
    pub constant_error: f64,
    pub product: Estimate,
}

pub fn qmc_suite(seed: u64) -> QmcSuite {
    let rule = lattice_rule(&GeneratingVector::Embedded, 2, 1024, 8, seed).unwrap();
    let c = rule.integrate(|_| 3.25);
    let product = rule.integrate(|u| u.iter().map(|x| x * x).product());
    QmcSuite {
        constant_error: (c.mean - 3.25).abs().max(c.per_shift.iter().map(|v| (v - 3.25).abs()).fold(0.0, f64::max)),
        product,
    }
}

/// The rate-reproduction study at desk scale.
pub fn rate_study_config() -> ExperimentConfig {
    ExperimentConfig::default()
}

/// Emulator error curves for `K = 1, ν = 1`.
pub fn theory_config() -> ExperimentConfig {
    ExperimentConfig {
        dims: vec![1],
        n_per_dim: vec![3, 4, 6, 8, 12, 16, 24, 32],
        target: Target::G,
        ..ExperimentConfig::default()
    }
}

/// Fits `log err = c1 - c2 log N` for the squared L² and sup errors of an
/// emulate run.
pub fn emulate_rates(rows: &[EmulateRow]) -> (RateModel, RateModel) {
    let ns: Vec<f64> = rows.iter().map(|r| r.n_design as f64).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.diagnostics.l2_error.powi(2)).collect();
    let sup: Vec<f64> = rows.iter().map(|r| r.diagnostics.sup_error.powi(2)).collect();
    (fit_rate(&ns, &l2).unwrap(), fit_rate(&ns, &sup).unwrap())
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gplab")
}

/// Runs the binary and returns its exit code.
pub fn run_cli(args: &[&str]) -> i32 {
    let out = std::process::Command::new(bin()).args(args).output().unwrap();
    out.status.code().unwrap_or(-1)
}

/// All files below `dir`, relative path and contents, in sorted order.
pub fn tree_contents(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// A small study touching every kind, for run-to-run comparisons.
pub fn small_study_toml(out: &Path) -> String {
    format!(
        "K = [1, 2]\nn_per_dim = [2, 3, 4]\nqmc_points = 256\nqmc_shifts = 4\nn_realizations = 5\nseed = 11\noutput_dir = {:?}\n",
        out.to_str().unwrap()
    )
}
