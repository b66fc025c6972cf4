//! Unnormalised posterior densities with respect to the uniform prior.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::forward_model::InverseProblem;
use crate::gp::{JointSampler, PredictiveProcess, VectorEmulator};
use crate::points::PointSet;
use crate::rng::{self, Domain};
use crate::summation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PosteriorKind {
    Exact,
    MeanG,
    MeanPhi,
    MarginalG,
    MarginalPhi,
    SampleG,
    SamplePhi,
}

impl PosteriorKind {
    /// The six emulator-based approximations.
    pub const APPROXIMATIONS: [PosteriorKind; 6] = [
        PosteriorKind::MeanG,
        PosteriorKind::MeanPhi,
        PosteriorKind::MarginalG,
        PosteriorKind::MarginalPhi,
        PosteriorKind::SampleG,
        PosteriorKind::SamplePhi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PosteriorKind::Exact => "exact",
            PosteriorKind::MeanG => "mean_g",
            PosteriorKind::MeanPhi => "mean_phi",
            PosteriorKind::MarginalG => "marginal_g",
            PosteriorKind::MarginalPhi => "marginal_phi",
            PosteriorKind::SampleG => "sample_g",
            PosteriorKind::SamplePhi => "sample_phi",
        }
    }

    pub fn uses_g(self) -> bool {
        matches!(
            self,
            PosteriorKind::MeanG | PosteriorKind::MarginalG | PosteriorKind::SampleG
        )
    }

    pub fn uses_phi(self) -> bool {
        matches!(
            self,
            PosteriorKind::MeanPhi | PosteriorKind::MarginalPhi | PosteriorKind::SamplePhi
        )
    }

    pub fn is_sample(self) -> bool {
        matches!(self, PosteriorKind::SampleG | PosteriorKind::SamplePhi)
    }
}

impl fmt::Display for PosteriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PosteriorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let normalized = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        [PosteriorKind::Exact]
            .into_iter()
            .chain(PosteriorKind::APPROXIMATIONS)
            .find(|k| k.name() == normalized)
            .ok_or_else(|| Error::Config(format!("unknown posterior kind '{s}'")))
    }
}

/// One joint draw of the predictive process over a fixed node set.
/// `values[j][i]` is component `j` at node `i` (a single component for `Φ`).
#[derive(Debug, Clone)]
pub struct Realization {
    nodes: PointSet,
    values: Vec<Vec<f64>>,
}

impl Realization {
    pub fn new(nodes: PointSet, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| v.len() != nodes.len()) {
            return Err(Error::PosteriorConfig(
                "realization must have one value per node for every component".into(),
            ));
        }
        Ok(Realization { nodes, values })
    }

    pub fn nodes(&self) -> &PointSet {
        &self.nodes
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    fn node_index(&self, u: &[f64]) -> Option<usize> {
        self.nodes.iter().position(|p| p == u)
    }

    fn same_nodes(&self, nodes: &PointSet) -> bool {
        self.nodes.dim() == nodes.dim() && self.nodes.as_flat() == nodes.as_flat()
    }
}

/// A posterior density, possibly built on emulators or on a stored
/// realization of one.
#[derive(Debug, Clone)]
pub struct PosteriorSpec {
    kind: PosteriorKind,
    emulator_g: Option<Arc<VectorEmulator>>,
    emulator_phi: Option<Arc<PredictiveProcess>>,
    realization: Option<Arc<Realization>>,
    scale: f64,
}

impl PosteriorSpec {
    pub fn exact() -> Self {
        PosteriorSpec {
            kind: PosteriorKind::Exact,
            emulator_g: None,
            emulator_phi: None,
            realization: None,
            scale: 1.0,
        }
    }

    pub fn new(
        kind: PosteriorKind,
        emulator_g: Option<Arc<VectorEmulator>>,
        emulator_phi: Option<Arc<PredictiveProcess>>,
    ) -> Result<Self> {
        if kind.uses_g() && emulator_g.is_none() {
            return Err(Error::PosteriorConfig(format!("{kind} needs an emulator of G")));
        }
        if kind.uses_phi() && emulator_phi.is_none() {
            return Err(Error::PosteriorConfig(format!("{kind} needs an emulator of Phi")));
        }
        Ok(PosteriorSpec {
            kind,
            emulator_g,
            emulator_phi,
            realization: None,
            scale: 1.0,
        })
    }

    pub fn with_g(kind: PosteriorKind, emulator: Arc<VectorEmulator>) -> Result<Self> {
        Self::new(kind, Some(emulator), None)
    }

    pub fn with_phi(kind: PosteriorKind, emulator: Arc<PredictiveProcess>) -> Result<Self> {
        Self::new(kind, None, Some(emulator))
    }

    /// The same density multiplied by a positive constant.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::PosteriorConfig(format!(
                "density scale must be positive and finite, got {factor}"
            )));
        }
        let mut s = self.clone();
        s.scale *= factor;
        Ok(s)
    }

    /// Attaches a realization (sample kinds only).
    pub fn with_realization(&self, realization: Arc<Realization>) -> Result<Self> {
        if !self.kind.is_sample() {
            return Err(Error::PosteriorConfig(format!(
                "{} does not take a realization",
                self.kind
            )));
        }
        let expected = self.components();
        if realization.values.len() != expected {
            return Err(Error::PosteriorConfig(format!(
                "realization has {} components, {} expected",
                realization.values.len(),
                expected
            )));
        }
        let mut s = self.clone();
        s.realization = Some(realization);
        Ok(s)
    }

    pub fn kind(&self) -> PosteriorKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn emulator_g(&self) -> Option<&Arc<VectorEmulator>> {
        self.emulator_g.as_ref()
    }

    pub fn emulator_phi(&self) -> Option<&Arc<PredictiveProcess>> {
        self.emulator_phi.as_ref()
    }

    pub fn realization(&self) -> Option<&Arc<Realization>> {
        self.realization.as_ref()
    }

    fn components(&self) -> usize {
        if self.kind.uses_g() {
            self.emulator_g.as_ref().map_or(0, |e| e.len())
        } else {
            1
        }
    }

    fn g(&self) -> Result<&VectorEmulator> {
        self.emulator_g
            .as_deref()
            .ok_or_else(|| Error::PosteriorConfig(format!("{} needs an emulator of G", self.kind)))
    }

    fn phi(&self) -> Result<&PredictiveProcess> {
        self.emulator_phi
            .as_deref()
            .ok_or_else(|| Error::PosteriorConfig(format!("{} needs an emulator of Phi", self.kind)))
    }

    fn require_realization(&self) -> Result<&Realization> {
        self.realization.as_deref().ok_or_else(|| {
            Error::PosteriorConfig(format!("{} needs an attached realization", self.kind))
        })
    }
}

fn check_data_len(spec: &PosteriorSpec, ip: &InverseProblem) -> Result<()> {
    if spec.kind.uses_g() {
        let j = spec.g()?.len();
        if j != ip.n_obs {
            return Err(Error::PosteriorConfig(format!(
                "emulator of G has {j} components but J = {}",
                ip.n_obs
            )));
        }
    }
    Ok(())
}

fn finite(value: f64, u: &[f64]) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::NonFiniteDensity {
            value,
            point: u.to_vec(),
        })
    }
}

/// `exp(-Φ_N(u))` averaged over the predictive process of `Φ`.
pub fn marginal_phi_density(mean: f64, variance: f64) -> f64 {
    (-mean + 0.5 * variance).exp()
}

/// `E[exp(-‖y - G_N(u)‖²/(2σ_η²))]` for independent Gaussian components with
/// means `means` and common variance `variance`.
pub fn marginal_g_density(data: &[f64], means: &[f64], variance: f64, sigma_eta2: f64) -> f64 {
    let total = sigma_eta2 + variance;
    let log: f64 = data
        .iter()
        .zip(means)
        .map(|(y, m)| 0.5 * (sigma_eta2 / total).ln() - (y - m) * (y - m) / (2.0 * total))
        .sum();
    log.exp()
}

fn density_from_values(spec: &PosteriorSpec, ip: &InverseProblem, values: &[f64]) -> f64 {
    match spec.kind {
        PosteriorKind::SamplePhi => (-values[0]).exp(),
        _ => (-ip.misfit(values)).exp(),
    }
}

/// The unnormalised density `dμ/dμ₀` at `u`, up to the spec's scale. Sample
/// kinds are only defined at the nodes of their realization.
pub fn unnorm_density(spec: &PosteriorSpec, ip: &InverseProblem, u: &[f64]) -> Result<f64> {
    check_data_len(spec, ip)?;
    if u.len() != ip.dim {
        return Err(Error::DimensionMismatch {
            expected: ip.dim,
            got: u.len(),
        });
    }
    let raw = match spec.kind {
        PosteriorKind::Exact => (-ip.potential(u)?).exp(),
        PosteriorKind::MeanG => {
            let g: Vec<f64> = spec.g()?.components().iter().map(|c| c.mean(u)).collect();
            (-ip.misfit(&g)).exp()
        }
        PosteriorKind::MeanPhi => (-spec.phi()?.mean(u)).exp(),
        PosteriorKind::MarginalG => {
            let (means, var) = spec.g()?.mean_and_variance(u)?;
            marginal_g_density(&ip.data, &means, var, ip.sigma_eta2)
        }
        PosteriorKind::MarginalPhi => {
            let p = spec.phi()?;
            marginal_phi_density(p.mean(u), p.variance(u)?)
        }
        PosteriorKind::SampleG | PosteriorKind::SamplePhi => {
            let r = spec.require_realization()?;
            let i = r.node_index(u).ok_or_else(|| {
                Error::PosteriorConfig(format!("{u:?} is not a node of the attached realization"))
            })?;
            let values: Vec<f64> = r.values.iter().map(|v| v[i]).collect();
            density_from_values(spec, ip, &values)
        }
    };
    finite(raw * spec.scale, u)
}

/// Unnormalised densities at every node, computed in one batch.
pub fn densities(spec: &PosteriorSpec, ip: &InverseProblem, nodes: &PointSet) -> Result<Vec<f64>> {
    check_data_len(spec, ip)?;
    if nodes.dim() != ip.dim {
        return Err(Error::DimensionMismatch {
            expected: ip.dim,
            got: nodes.dim(),
        });
    }
    let raw: Vec<f64> = match spec.kind {
        PosteriorKind::Exact => nodes
            .iter()
            .map(|u| ip.potential(u).map(|phi| (-phi).exp()))
            .collect::<Result<_>>()?,
        PosteriorKind::MeanG | PosteriorKind::MarginalG => {
            let em = spec.g()?;
            let proj = em.factorization().project(nodes)?;
            let means: Vec<Vec<f64>> = em
                .components()
                .iter()
                .map(|c| c.means(nodes, &proj))
                .collect();
            let variances = if spec.kind == PosteriorKind::MarginalG {
                em.factorization().variances(&proj)?
            } else {
                Vec::new()
            };
            (0..nodes.len())
                .map(|i| {
                    let g: Vec<f64> = means.iter().map(|m| m[i]).collect();
                    if spec.kind == PosteriorKind::MarginalG {
                        marginal_g_density(&ip.data, &g, variances[i], ip.sigma_eta2)
                    } else {
                        (-ip.misfit(&g)).exp()
                    }
                })
                .collect()
        }
        PosteriorKind::MeanPhi | PosteriorKind::MarginalPhi => {
            let p = spec.phi()?;
            let proj = p.factorization().project(nodes)?;
            let means = p.means(nodes, &proj);
            if spec.kind == PosteriorKind::MarginalPhi {
                let variances = p.factorization().variances(&proj)?;
                means
                    .iter()
                    .zip(&variances)
                    .map(|(m, v)| marginal_phi_density(*m, *v))
                    .collect()
            } else {
                means.iter().map(|m| (-m).exp()).collect()
            }
        }
        PosteriorKind::SampleG | PosteriorKind::SamplePhi => {
            let r = spec.require_realization()?;
            if !r.same_nodes(nodes) {
                return Err(Error::PosteriorConfig(
                    "nodes differ from those of the attached realization".into(),
                ));
            }
            (0..nodes.len())
                .map(|i| {
                    let values: Vec<f64> = r.values.iter().map(|v| v[i]).collect();
                    density_from_values(spec, ip, &values)
                })
                .collect()
        }
    };
    raw.iter()
        .enumerate()
        .map(|(i, d)| finite(d * spec.scale, nodes.get(i)))
        .collect()
}

/// Quadrature average of the unnormalised density over `nodes`.
pub fn normalizing_constant(spec: &PosteriorSpec, ip: &InverseProblem, nodes: &PointSet) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::Quadrature("empty node set".into()));
    }
    Ok(summation::mean(&densities(spec, ip, nodes)?))
}

/// Draws realizations of the predictive process of a sample-kind spec over a
/// fixed node set, reusing one factor of `k_N(X, X)`.
#[derive(Debug, Clone)]
pub struct RealizationSampler {
    kind: PosteriorKind,
    nodes: PointSet,
    means: Vec<Vec<f64>>,
    sampler: Arc<JointSampler>,
}

impl RealizationSampler {
    /// `prior_cov` may supply a precomputed `k(X, X)`.
    pub fn new(spec: &PosteriorSpec, nodes: &PointSet, prior_cov: Option<&DMatrix<f64>>) -> Result<Self> {
        let (factor, sigma2) = match spec.kind {
            PosteriorKind::SampleG => {
                let f = spec.g()?.factorization();
                (Arc::clone(f), f.spec().sigma2())
            }
            PosteriorKind::SamplePhi => {
                let f = spec.phi()?.factorization();
                (Arc::clone(f), f.spec().sigma2())
            }
            other => {
                return Err(Error::PosteriorConfig(format!(
                    "{other} is not a sample approximation"
                )))
            }
        };
        let cov = factor.predictive_covariance(nodes, prior_cov)?;
        let sampler = Arc::new(JointSampler::new(&cov, sigma2)?);
        Self::with_sampler(spec, nodes, sampler)
    }

    /// Shares an existing factor of `k_N(X, X)`, which must belong to the
    /// same design and kernel as the spec's emulator.
    pub fn with_sampler(spec: &PosteriorSpec, nodes: &PointSet, sampler: Arc<JointSampler>) -> Result<Self> {
        if sampler.dim() != nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                got: sampler.dim(),
            });
        }
        let means = match spec.kind {
            PosteriorKind::SampleG => {
                let em = spec.g()?;
                let proj = em.factorization().project(nodes)?;
                em.components().iter().map(|c| c.means(nodes, &proj)).collect()
            }
            PosteriorKind::SamplePhi => {
                let p = spec.phi()?;
                let proj = p.factorization().project(nodes)?;
                vec![p.means(nodes, &proj)]
            }
            other => {
                return Err(Error::PosteriorConfig(format!(
                    "{other} is not a sample approximation"
                )))
            }
        };
        Ok(RealizationSampler {
            kind: spec.kind,
            nodes: nodes.clone(),
            means,
            sampler,
        })
    }

    pub fn kind(&self) -> PosteriorKind {
        self.kind
    }

    pub fn sampler(&self) -> &Arc<JointSampler> {
        &self.sampler
    }

    /// One realization; components are independent draws.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Realization {
        let values = self
            .means
            .iter()
            .map(|m| {
                let d = self.sampler.draw(rng);
                m.iter().zip(d.iter()).map(|(a, b)| a + b).collect()
            })
            .collect();
        Realization {
            nodes: self.nodes.clone(),
            values,
        }
    }

    /// `count` realizations; identical to `count` successive calls to
    /// [`RealizationSampler::draw`] on the same generator.
    pub fn draw_many<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<Realization> {
        if self.means.len() == 1 {
            let block = self.sampler.draw_many(rng, count);
            return block
                .column_iter()
                .map(|col| Realization {
                    nodes: self.nodes.clone(),
                    values: vec![self.means[0].iter().zip(col.iter()).map(|(a, b)| a + b).collect()],
                })
                .collect();
        }
        (0..count).map(|_| self.draw(rng)).collect()
    }
}

fn sample_domain(kind: PosteriorKind) -> Domain {
    if kind == PosteriorKind::SampleG {
        Domain::SampleG
    } else {
        Domain::SamplePhi
    }
}

/// Attaches one joint realization over `nodes`, drawn from the stream for
/// `seed`.
pub fn draw_sample_posterior(spec: &PosteriorSpec, nodes: &PointSet, seed: u64) -> Result<PosteriorSpec> {
    let sampler = RealizationSampler::new(spec, nodes, None)?;
    let mut r = rng::stream(seed, sample_domain(spec.kind), 0);
    spec.with_realization(Arc::new(sampler.draw(&mut r)))
}

/// Random stream for realizations of `kind` in block `index`.
pub fn realization_stream(seed: u64, kind: PosteriorKind, index: u64) -> rng::StreamRng {
    rng::stream(seed, sample_domain(kind), index)
}
