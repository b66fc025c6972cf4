use crate::error::{Error, Result};
use crate::forward_model::InverseProblem;
use crate::posterior::{self, PosteriorSpec, RealizationSampler};
use crate::summation;

use super::lattice::{Estimate, QuadratureRule};

fn check(ra: &[f64], rb: &[f64]) -> Result<()> {
    if ra.len() != rb.len() || ra.is_empty() {
        return Err(Error::Quadrature(format!(
            "density vectors must be nonempty and of equal length ({} vs {})",
            ra.len(),
            rb.len()
        )));
    }
    if let Some(i) = ra
        .iter()
        .chain(rb)
        .position(|d| !d.is_finite() || *d < 0.0)
    {
        let (which, idx) = if i < ra.len() { ("first", i) } else { ("second", i - ra.len()) };
        return Err(Error::Quadrature(format!(
            "{which} density is not finite and nonnegative at node {idx}"
        )));
    }
    Ok(())
}

fn normalizer(r: &[f64]) -> Result<f64> {
    let z = summation::mean(r);
    if z > 0.0 && z.is_finite() {
        Ok(z)
    } else {
        Err(Error::Quadrature(format!("normalizing constant {z} is not positive")))
    }
}

fn half_mean_sq_root_gap(ra: &[f64], rb: &[f64]) -> Result<f64> {
    let (za, zb) = (normalizer(ra)?, normalizer(rb)?);
    let gap = summation::mean(
        &ra.iter()
            .zip(rb)
            .map(|(a, b)| {
                let d = (a / za).sqrt() - (b / zb).sqrt();
                d * d
            })
            .collect::<Vec<_>>(),
    );
    Ok(0.5 * gap)
}

fn half_mean_abs_gap(ra: &[f64], rb: &[f64]) -> Result<f64> {
    let (za, zb) = (normalizer(ra)?, normalizer(rb)?);
    Ok(0.5
        * summation::mean(
            &ra.iter()
                .zip(rb)
                .map(|(a, b)| (a / za - b / zb).abs())
                .collect::<Vec<_>>(),
        ))
}

/// `sqrt(½ Q[(√(ρ_A/Z_A) - √(ρ_B/Z_B))²])` with `Q` the equal-weight average
/// over all nodes and both constants computed on the same nodes.
pub fn hellinger_from_densities(ra: &[f64], rb: &[f64]) -> Result<f64> {
    check(ra, rb)?;
    Ok(half_mean_sq_root_gap(ra, rb)?.sqrt())
}

/// Hellinger distance between two posteriors using every node of the rule.
pub fn hellinger(ip: &InverseProblem, a: &PosteriorSpec, b: &PosteriorSpec, rule: &QuadratureRule) -> Result<f64> {
    let ra = posterior::densities(a, ip, rule.nodes())?;
    let rb = posterior::densities(b, ip, rule.nodes())?;
    hellinger_from_densities(&ra, &rb)
}

fn per_shift(
    ra: &[f64],
    rb: &[f64],
    rule: &QuadratureRule,
    f: fn(&[f64], &[f64]) -> Result<f64>,
) -> Result<Estimate> {
    check(ra, rb)?;
    if ra.len() != rule.nodes().len() {
        return Err(Error::DimensionMismatch {
            expected: rule.nodes().len(),
            got: ra.len(),
        });
    }
    let m = rule.n_points();
    let values = ra
        .chunks(m)
        .zip(rb.chunks(m))
        .map(|(a, b)| f(a, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_shifts(values))
}

/// Squared Hellinger distance estimated separately on each shift, with
/// normalizing constants computed per shift.
pub fn hellinger_sq_estimate(ra: &[f64], rb: &[f64], rule: &QuadratureRule) -> Result<Estimate> {
    per_shift(ra, rb, rule, half_mean_sq_root_gap)
}

/// Direct estimate of `½∫|ρ_A/Z_A - ρ_B/Z_B| dμ₀`, per shift.
pub fn total_variation_estimate(ra: &[f64], rb: &[f64], rule: &QuadratureRule) -> Result<Estimate> {
    per_shift(ra, rb, rule, half_mean_abs_gap)
}

/// The total variation bound `√2 · d_Hell`.
pub fn tv_bound_check(d_hell: f64) -> f64 {
    debug_assert!(d_hell >= 0.0);
    std::f64::consts::SQRT_2 * d_hell
}

/// Monte Carlo mean over `n_realizations` predictive-process realizations
/// of the squared Hellinger distance between the exact posterior and the
/// sample approximation. Realizations are drawn jointly over the nodes of
/// each shift and independently across shifts; the per-shift averages give
/// the reported mean and standard error.
pub fn expected_hellinger_sq(
    ip: &InverseProblem,
    spec: &PosteriorSpec,
    rule: &QuadratureRule,
    n_realizations: usize,
    seed: u64,
) -> Result<Estimate> {
    if !spec.kind().is_sample() {
        return Err(Error::PosteriorConfig(format!(
            "{} is not a sample approximation",
            spec.kind()
        )));
    }
    if n_realizations == 0 {
        return Err(Error::PosteriorConfig("at least one realization is required".into()));
    }
    let exact = PosteriorSpec::exact();
    let mut values = Vec::with_capacity(rule.n_shifts());
    for s in 0..rule.n_shifts() {
        let block = rule.block(s);
        let re = posterior::densities(&exact, ip, &block)?;
        let sampler = RealizationSampler::new(spec, &block, None)?;
        let mut stream = posterior::realization_stream(seed, spec.kind(), s as u64);
        let d2 = sampler
            .draw_many(&mut stream, n_realizations)
            .into_iter()
            .map(|r| {
                let realized = spec.with_realization(std::sync::Arc::new(r))?;
                let rs = posterior::densities(&realized, ip, &block)?;
                half_mean_sq_root_gap(&re, &rs)
            })
            .collect::<Result<Vec<_>>>()?;
        values.push(summation::mean(&d2));
    }
    Ok(Estimate::from_shifts(values))
}
