//! The elliptic model problem
//!
//! ```text
//! -(κ(x;u) p'(x))' = 1 on (0,1),  p(0) = p(1) = 0,
//! κ(x;u) = 1/100 + Σ_j u_j sin(2πjx) / (200(K+1)),
//! ```
//!
//! discretized with continuous piecewise-linear elements on a uniform mesh,
//! and the inverse problem built on point observations of `p`.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};

pub const DEFAULT_MESH_H: f64 = 1.0 / 32.0;
pub const DEFAULT_TRUTH_MESH_H: f64 = 1.0 / 1024.0;

const KAPPA_FLOOR: f64 = 0.01;

/// Diffusion coefficient for a parameter vector `u ∈ [-1,1]^K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    u: Vec<f64>,
}

impl Coefficient {
    pub fn new(u: &[f64]) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::Domain("coefficient needs at least one parameter".into()));
        }
        if let Some(bad) = u.iter().find(|x| !(x.abs() <= 1.0)) {
            return Err(Error::Domain(format!("parameter {bad} outside [-1, 1]")));
        }
        Ok(Coefficient { u: u.to_vec() })
    }

    pub fn params(&self) -> &[f64] {
        &self.u
    }

    pub fn kappa(&self, x: f64) -> f64 {
        let scale = 1.0 / (200.0 * (self.u.len() as f64 + 1.0));
        KAPPA_FLOOR
            + self
                .u
                .iter()
                .enumerate()
                .map(|(j, uj)| uj * scale * (2.0 * PI * (j as f64 + 1.0) * x).sin())
                .sum::<f64>()
    }

    /// `1/100 - K/(200(K+1))`, the uniform lower bound on κ over the cube.
    pub fn ellipticity_bound(dim: usize) -> f64 {
        KAPPA_FLOOR - dim as f64 / (200.0 * (dim as f64 + 1.0))
    }
}

/// Number of cells of a uniform mesh with size `h = 1/m`.
pub fn mesh_cells(h: f64) -> Result<usize> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidMesh(h));
    }
    let m = (1.0 / h).round();
    if m < 2.0 || ((m * h) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidMesh(h));
    }
    Ok(m as usize)
}

/// Nodal values of the FEM solution on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FemSolution {
    nodal: Vec<f64>,
}

impl FemSolution {
    pub fn nodal(&self) -> &[f64] {
        &self.nodal
    }

    pub fn cells(&self) -> usize {
        self.nodal.len() - 1
    }

    /// Piecewise-linear interpolation of the nodal values; `x` is clamped to
    /// `[0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let m = self.cells();
        let s = x.clamp(0.0, 1.0) * m as f64;
        let i = (s.floor() as usize).min(m - 1);
        let t = s - i as f64;
        if t == 0.0 {
            return self.nodal[i];
        }
        (1.0 - t) * self.nodal[i] + t * self.nodal[i + 1]
    }
}

/// Solves `A x = d` for symmetric tridiagonal `A` given by its diagonal and
/// off-diagonal (Thomas algorithm).
pub fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    assert_eq!(rhs.len(), n);
    assert_eq!(off.len() + 1, n.max(1));
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::SingularSystem(0));
    }
    if n > 1 {
        c[0] = off[0] / pivot;
    }
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - off[i - 1] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem(i));
        }
        if i < n - 1 {
            c[i] = off[i] / pivot;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Piecewise-linear FEM solution with κ sampled at element midpoints and the
/// exact load vector for `f ≡ 1`.
pub fn fem_solve(coefficient: &Coefficient, mesh_h: f64) -> Result<FemSolution> {
    let m = mesh_cells(mesh_h)?;
    let h = 1.0 / m as f64;
    let kappa: Vec<f64> = (0..m)
        .map(|e| coefficient.kappa((e as f64 + 0.5) * h))
        .collect();
    let n = m - 1;
    let diag: Vec<f64> = (0..n).map(|i| (kappa[i] + kappa[i + 1]) / h).collect();
    let off: Vec<f64> = (1..n).map(|i| -kappa[i] / h).collect();
    let rhs = vec![h; n];
    let interior = solve_tridiagonal(&diag, &off, &rhs)?;
    let mut nodal = Vec::with_capacity(m + 1);
    nodal.push(0.0);
    nodal.extend(interior);
    nodal.push(0.0);
    Ok(FemSolution { nodal })
}

/// Settings that determine an inverse problem before any data are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConfig {
    pub dim: usize,
    pub n_obs: usize,
    pub sigma_eta2: f64,
    pub mesh_h: f64,
    pub truth_mesh_h: f64,
}

impl ProblemConfig {
    pub fn new(dim: usize, n_obs: usize) -> Self {
        ProblemConfig {
            dim,
            n_obs,
            sigma_eta2: 1.0,
            mesh_h: DEFAULT_MESH_H,
            truth_mesh_h: DEFAULT_TRUTH_MESH_H,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("parameter dimension K must be at least 1".into()));
        }
        if self.n_obs == 0 {
            return Err(Error::Config("observation count J must be at least 1".into()));
        }
        if !(self.sigma_eta2 >= 0.0) || !self.sigma_eta2.is_finite() {
            return Err(Error::Config(format!(
                "noise variance must be non-negative, got {}",
                self.sigma_eta2
            )));
        }
        mesh_cells(self.mesh_h)?;
        mesh_cells(self.truth_mesh_h)?;
        Ok(())
    }
}

/// `x_j = j/(J+1)`, `j = 1..J`.
pub fn observation_points(n_obs: usize) -> Vec<f64> {
    (1..=n_obs).map(|j| j as f64 / (n_obs as f64 + 1.0)).collect()
}

/// A fully specified inverse problem: forward map settings plus data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseProblem {
    pub dim: usize,
    pub n_obs: usize,
    pub sigma_eta2: f64,
    pub obs_points: Vec<f64>,
    pub data: Vec<f64>,
    pub mesh_h: f64,
    pub truth_mesh_h: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_star: Option<Vec<f64>>,
    #[serde(default = "default_stiffness_rule")]
    pub stiffness_quadrature: String,
    #[serde(default = "default_observation_rule")]
    pub observation_rule: String,
}

fn default_stiffness_rule() -> String {
    "element-midpoint".into()
}

fn default_observation_rule() -> String {
    "piecewise-linear".into()
}

impl InverseProblem {
    /// A problem with given data (no truth recorded).
    pub fn with_data(config: ProblemConfig, data: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if data.len() != config.n_obs {
            return Err(Error::Config(format!(
                "{} data values for J = {}",
                data.len(),
                config.n_obs
            )));
        }
        Ok(InverseProblem {
            dim: config.dim,
            n_obs: config.n_obs,
            sigma_eta2: config.sigma_eta2,
            obs_points: observation_points(config.n_obs),
            data,
            mesh_h: config.mesh_h,
            truth_mesh_h: config.truth_mesh_h,
            seed: 0,
            u_star: None,
            stiffness_quadrature: default_stiffness_rule(),
            observation_rule: default_observation_rule(),
        })
    }

    pub fn config(&self) -> ProblemConfig {
        ProblemConfig {
            dim: self.dim,
            n_obs: self.n_obs,
            sigma_eta2: self.sigma_eta2,
            mesh_h: self.mesh_h,
            truth_mesh_h: self.truth_mesh_h,
        }
    }

    fn observe(&self, u: &[f64], mesh_h: f64) -> Result<Vec<f64>> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: u.len(),
            });
        }
        let sol = fem_solve(&Coefficient::new(u)?, mesh_h)?;
        Ok(self.obs_points.iter().map(|&x| sol.eval(x)).collect())
    }

    /// `G(u)` on the reference mesh.
    pub fn forward(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.observe(u, self.mesh_h)
    }

    /// `Φ(u) = ‖y - G(u)‖² / (2σ_η²)`.
    pub fn potential(&self, u: &[f64]) -> Result<f64> {
        let g = self.forward(u)?;
        Ok(self.misfit(&g))
    }

    /// `‖y - g‖² / (2σ_η²)` for a predicted observation vector `g`.
    pub fn misfit(&self, g: &[f64]) -> f64 {
        let ss: f64 = self.data.iter().zip(g).map(|(y, g)| (y - g) * (y - g)).sum();
        ss / (2.0 * self.sigma_eta2)
    }

    pub fn to_toml(&self) -> Result<String> {
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config("seed must be below 2^63 to be serialized".into()));
        }
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let p: InverseProblem = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        p.config().validate()?;
        if p.obs_points.len() != p.n_obs || p.data.len() != p.n_obs {
            return Err(Error::Config("observation points and data must have length J".into()));
        }
        if p.obs_points.windows(2).any(|w| w[0] >= w[1])
            || p.obs_points.iter().any(|&x| !(x > 0.0 && x < 1.0))
        {
            return Err(Error::Config(
                "observation points must be strictly increasing inside (0, 1)".into(),
            ));
        }
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

/// `G(u)` as a free function.
pub fn parameter_to_observation(ip: &InverseProblem, u: &[f64]) -> Result<Vec<f64>> {
    ip.forward(u)
}

/// `Φ(u)` as a free function.
pub fn potential(ip: &InverseProblem, u: &[f64]) -> Result<f64> {
    ip.potential(u)
}

/// Synthetic data `y_j = p_{h*}(x_j; u*) + η_j`, `η ~ N(0, σ_η² I)`, with
/// `u* ~ U[-1,1]^K` unless supplied.
pub fn generate_data(config: ProblemConfig, u_star: Option<Vec<f64>>, seed: u64) -> Result<InverseProblem> {
    config.validate()?;
    let u_star = match u_star {
        Some(u) => {
            if u.len() != config.dim {
                return Err(Error::DimensionMismatch {
                    expected: config.dim,
                    got: u.len(),
                });
            }
            u
        }
        None => {
            let mut r = rng::stream(seed, Domain::Data, 0);
            (0..config.dim).map(|_| r.random_range(-1.0..=1.0)).collect()
        }
    };
    let mut ip = InverseProblem::with_data(config, vec![0.0; config.n_obs])?;
    let clean = ip.observe(&u_star, config.truth_mesh_h)?;
    let mut noise = rng::stream(seed, Domain::Data, 1);
    let sd = config.sigma_eta2.sqrt();
    ip.data = clean
        .iter()
        .map(|p| p + sd * noise.sample::<f64, _>(StandardNormal))
        .collect();
    ip.seed = seed;
    ip.u_star = Some(u_star);
    Ok(ip)
}
