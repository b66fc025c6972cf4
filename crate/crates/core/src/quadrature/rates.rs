use crate::error::{Error, Result};
use crate::posterior::PosteriorKind;

/// `err ≈ C1 N^{-C2}` fitted by least squares in log-log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    pub c1: f64,
    pub c2: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

impl RateModel {
    pub fn predict(&self, n: f64) -> f64 {
        self.c1 * n.powf(-self.c2)
    }
}

pub fn fit_rate(ns: &[f64], errors: &[f64]) -> Result<RateModel> {
    if ns.len() != errors.len() {
        return Err(Error::RateFit(format!(
            "{} sizes but {} errors",
            ns.len(),
            errors.len()
        )));
    }
    if ns.len() < 3 {
        return Err(Error::RateFit(format!(
            "insufficient points: {} given, at least 3 needed",
            ns.len()
        )));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::RateFit(format!("errors must be positive and finite, got {e}")));
    }
    if let Some(n) = ns.iter().find(|n| !(**n > 0.0) || !n.is_finite()) {
        return Err(Error::RateFit(format!("sizes must be positive and finite, got {n}")));
    }
    let x: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx) * (xi - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::RateFit("all sizes are equal".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    Ok(RateModel {
        c1: intercept.exp(),
        c2: -slope,
        residual: (ss / n).sqrt(),
    })
}

/// Predicted rate in `N` of the squared `L²` emulator error on a tensor grid.
pub fn predicted_l2_sq_rate(nu: f64, dim: usize) -> f64 {
    (2.0 * nu + dim as f64) / dim as f64
}

/// Predicted rate in `N` of the squared sup-norm emulator error.
pub fn predicted_sup_sq_rate(nu: f64, dim: usize) -> f64 {
    2.0 * nu / dim as f64
}

/// Published observed rates of the squared Hellinger error, where available.
pub fn reference_rate(kind: PosteriorKind, dim: usize, nu: f64, n_obs: usize) -> Option<f64> {
    use PosteriorKind::*;
    let nu_key = if nu == 1.0 {
        1
    } else if nu == 5.0 {
        5
    } else {
        return None;
    };
    let v = match (n_obs, nu_key, dim, kind) {
        (1, 1, 2, MeanG) => 2.6,
        (1, 1, 3, MeanG) => 2.4,
        (1, 5, 2, MeanG) => 6.2,
        (1, 5, 3, MeanG) => 4.5,
        (1, 1, 2, MarginalG) => 2.6,
        (1, 1, 3, MarginalG) => 2.2,
        (1, 5, 2, MarginalG) => 6.2,
        (1, 5, 3, MarginalG) => 4.6,
        (1, 1, 2, SampleG) => 2.3,
        (1, 1, 3, SampleG) => 1.7,
        (1, 5, 2, SampleG) => 6.1,
        (1, 5, 3, SampleG) => 4.4,
        (1, 1, 2, MeanPhi) => 2.5,
        (1, 1, 3, MeanPhi) => 2.0,
        (1, 5, 2, MeanPhi) => 5.4,
        (1, 5, 3, MeanPhi) => 3.8,
        (1, 1, 2, MarginalPhi) => 1.8,
        (1, 1, 3, MarginalPhi) => 1.1,
        (1, 5, 2, MarginalPhi) => 4.9,
        (1, 5, 3, MarginalPhi) => 3.2,
        (1, 1, 2, SamplePhi) => 1.1,
        (1, 1, 3, SamplePhi) => 0.76,
        (1, 5, 2, SamplePhi) => 4.9,
        (1, 5, 3, SamplePhi) => 3.3,
        (15, 1, 1, MeanG) => 4.1,
        (15, 1, 2, MeanG) => 2.7,
        (15, 1, 3, MeanG) => 2.3,
        (15, 1, 4, MeanG) => 2.3,
        (15, 1, 1, MeanPhi) => 4.0,
        (15, 1, 2, MeanPhi) => 2.7,
        (15, 1, 3, MeanPhi) => 2.1,
        (15, 1, 4, MeanPhi) => 1.9,
        _ => return None,
    };
    Some(v)
}
