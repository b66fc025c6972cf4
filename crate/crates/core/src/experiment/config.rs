use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward_model::{mesh_cells, ProblemConfig, DEFAULT_MESH_H, DEFAULT_TRUTH_MESH_H};
use crate::kernels::KernelSpec;
use crate::posterior::PosteriorKind;
use crate::quadrature::{GeneratingVector, EMBEDDED_POINTS};

/// What the `emulate` subcommand approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    G,
    Phi,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::G => "g",
            Target::Phi => "phi",
        }
    }
}

/// Settings for a study, read from a TOML file. Every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    #[serde(rename = "K")]
    pub dims: Vec<usize>,
    pub nu: Vec<f64>,
    #[serde(rename = "J")]
    pub n_obs: usize,
    pub n_per_dim: Vec<usize>,
    pub kinds: Vec<String>,
    pub mesh_h: f64,
    pub truth_mesh_h: f64,
    pub sigma_eta2: f64,
    pub lambda: f64,
    pub sigma_k2: f64,
    pub qmc_points: usize,
    pub qmc_shifts: usize,
    pub n_realizations: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generating_vector: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_star: Option<Vec<f64>>,
    pub record_timing: bool,
    pub target: Target,
    /// Probe points per dimension for `emulate`; 0 picks about 4096 in total.
    pub probe_points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dims: vec![2],
            nu: vec![1.0],
            n_obs: 1,
            n_per_dim: (3..=9).collect(),
            kinds: PosteriorKind::APPROXIMATIONS
                .iter()
                .map(|k| k.name().to_string())
                .collect(),
            mesh_h: DEFAULT_MESH_H,
            truth_mesh_h: DEFAULT_TRUTH_MESH_H,
            sigma_eta2: 1.0,
            lambda: 1.0,
            sigma_k2: 1.0,
            qmc_points: 1024,
            qmc_shifts: 8,
            n_realizations: 200,
            seed: 1,
            output_dir: PathBuf::from("gplab-out"),
            generating_vector: None,
            u_star: None,
            record_timing: false,
            target: Target::G,
            probe_points: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.dims.is_empty() || self.nu.is_empty() || self.n_per_dim.is_empty() || self.kinds.is_empty() {
            return fail("K, nu, n_per_dim and kinds must be nonempty".into());
        }
        if self.dims.iter().any(|&k| k == 0 || k > 255) {
            return fail("every K must be between 1 and 255".into());
        }
        if self.nu.len() > 255 || self.nu.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return fail("every nu must be positive and finite (at most 255 values)".into());
        }
        if self.n_per_dim.iter().any(|&n| !(2..=65535).contains(&n)) {
            return fail("every n_per_dim must be between 2 and 65535".into());
        }
        if self.n_obs == 0 {
            return fail("J must be at least 1".into());
        }
        self.kinds()?;
        KernelSpec::matern(self.nu[0], self.lambda, self.sigma_k2)?;
        mesh_cells(self.mesh_h)?;
        mesh_cells(self.truth_mesh_h)?;
        if !(self.sigma_eta2 > 0.0) || !self.sigma_eta2.is_finite() {
            return fail(format!("sigma_eta2 must be positive, got {}", self.sigma_eta2));
        }
        if self.qmc_shifts < 2 || self.qmc_shifts > 65535 {
            return fail("qmc_shifts must be between 2 and 65535".into());
        }
        if self.n_realizations == 0 {
            return fail("n_realizations must be at least 1".into());
        }
        if self.generating_vector.is_none() && !EMBEDDED_POINTS.contains(&self.qmc_points) {
            return fail(format!(
                "qmc_points = {} needs a generating_vector file; embedded sizes are {EMBEDDED_POINTS:?}",
                self.qmc_points
            ));
        }
        if let Some(u) = &self.u_star {
            if self.dims.iter().any(|&k| k != u.len()) {
                return fail("u_star length must equal every K".into());
            }
        }
        if self.seed > i64::MAX as u64 {
            return fail("seed must be below 2^63".into());
        }
        Ok(())
    }

    pub fn kinds(&self) -> Result<Vec<PosteriorKind>> {
        let mut kinds = self
            .kinds
            .iter()
            .map(|s| s.parse::<PosteriorKind>())
            .collect::<Result<Vec<_>>>()?;
        if kinds.contains(&PosteriorKind::Exact) {
            return Err(Error::Config("'exact' is the reference, not an approximation".into()));
        }
        kinds.sort();
        kinds.dedup();
        Ok(kinds)
    }

    pub fn problem(&self, dim: usize) -> ProblemConfig {
        ProblemConfig {
            dim,
            n_obs: self.n_obs,
            sigma_eta2: self.sigma_eta2,
            mesh_h: self.mesh_h,
            truth_mesh_h: self.truth_mesh_h,
        }
    }

    pub fn kernel(&self, nu: f64) -> Result<KernelSpec> {
        KernelSpec::matern(nu, self.lambda, self.sigma_k2)
    }

    pub fn generating_vector(&self) -> Result<GeneratingVector> {
        match &self.generating_vector {
            Some(p) => GeneratingVector::from_file(p),
            None => Ok(GeneratingVector::Embedded),
        }
    }

    pub fn probe_points_for(&self, dim: usize) -> usize {
        if self.probe_points > 0 {
            self.probe_points
        } else {
            (4096f64.powf(1.0 / dim as f64).round() as usize).max(2)
        }
    }
}
