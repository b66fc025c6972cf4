//! Stationary covariance kernels.
//!
//! Matérn:
//! `k(r) = σ² · 2^{1-ν}/Γ(ν) · (√(2ν) r/λ)^ν · K_ν(√(2ν) r/λ)`,
//! Gaussian: `k(r) = σ² exp(-r²/(2λ²))`, with `r = ‖u - v‖`.

pub mod special;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::points::{squared_distance, PointSet};

pub use special::{bessel_k, gamma};

/// Radii below this are treated as `r = 0`.
pub const ZERO_RADIUS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    Matern,
    Gaussian,
}

/// Covariance family and hyper-parameters. `nu` is ignored by the Gaussian
/// family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    nu: f64,
    lambda: f64,
    sigma2: f64,
    // 2^{1-ν}/Γ(ν), √(2ν)/λ
    matern_norm: f64,
    matern_scale: f64,
}

impl KernelSpec {
    pub fn matern(nu: f64, lambda: f64, sigma2: f64) -> Result<Self> {
        check_positive("nu", nu)?;
        check_positive("lambda", lambda)?;
        check_positive("sigma2", sigma2)?;
        Ok(KernelSpec {
            family: KernelFamily::Matern,
            nu,
            lambda,
            sigma2,
            matern_norm: 2f64.powf(1.0 - nu) / gamma(nu),
            matern_scale: (2.0 * nu).sqrt() / lambda,
        })
    }

    pub fn gaussian(lambda: f64, sigma2: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        check_positive("sigma2", sigma2)?;
        Ok(KernelSpec {
            family: KernelFamily::Gaussian,
            nu: f64::INFINITY,
            lambda,
            sigma2,
            matern_norm: 0.0,
            matern_scale: 0.0,
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Covariance as a function of the distance `r ≥ 0`.
    pub fn at_radius(&self, r: f64) -> f64 {
        if r < ZERO_RADIUS {
            return self.sigma2;
        }
        match self.family {
            KernelFamily::Gaussian => {
                self.sigma2 * (-(r * r) / (2.0 * self.lambda * self.lambda)).exp()
            }
            KernelFamily::Matern => {
                let z = self.matern_scale * r;
                let bessel = match special::half_integer_index(self.nu) {
                    Some(n) => special::bessel_k_half_integer(n, z),
                    None => special::bessel_k_integral(self.nu, z),
                };
                if bessel == 0.0 {
                    return 0.0;
                }
                (self.sigma2 * self.matern_norm * z.powf(self.nu) * bessel).min(self.sigma2)
            }
        }
    }

    /// `k(u, v)` for points of equal dimension.
    pub fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                got: v.len(),
            });
        }
        Ok(self.eval_unchecked(u, v))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, u: &[f64], v: &[f64]) -> f64 {
        self.at_radius(squared_distance(u, v).sqrt())
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidKernel(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `kernel_eval`: free-function form of [`KernelSpec::eval`].
pub fn kernel_eval(spec: &KernelSpec, u: &[f64], v: &[f64]) -> Result<f64> {
    spec.eval(u, v)
}

/// Gram matrix `K[i][j] = k(u^i, u^j)`. Fails on repeated points.
pub fn kernel_matrix(spec: &KernelSpec, points: &PointSet) -> Result<DMatrix<f64>> {
    let n = points.len();
    for i in 0..n {
        for j in 0..i {
            if squared_distance(points.get(i), points.get(j)) == 0.0 {
                return Err(Error::DuplicatePoints(j, i));
            }
        }
    }
    Ok(symmetric_gram(spec, points))
}

/// Gram matrix without the distinctness check.
pub(crate) fn symmetric_gram(spec: &KernelSpec, points: &PointSet) -> DMatrix<f64> {
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = spec.sigma2;
        for j in 0..i {
            let v = spec.eval_unchecked(points.get(i), points.get(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Cross-covariance matrix with entries `k(a_i, b_j)`.
pub fn cross_matrix(spec: &KernelSpec, a: &PointSet, b: &PointSet) -> Result<DMatrix<f64>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| {
        spec.eval_unchecked(a.get(i), b.get(j))
    }))
}
