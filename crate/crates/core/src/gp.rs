//! Gaussian process regression on a fixed design.
//!
//! Conditioning a prior `GP(m, k)` on exact data `f(U)` gives the predictive
//! process with
//!
//! ```text
//! m_N(u)    = m(u) + k(u,U)ᵀ K(U,U)⁻¹ (f(U) - m(U))
//! k_N(u,u') = k(u,u') - k(u,U)ᵀ K(U,U)⁻¹ k(u',U)
//! ```
//!
//! `K(U,U) = L Lᵀ` is factorized once per design and shared (through an
//! [`Arc`]) by every scalar emulator built on that design, which is how the
//! `J` components of a vector-valued map are emulated.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::{self, KernelSpec};
use crate::points::PointSet;
use crate::rng::{self, Domain};

/// Relative jitter levels (times `σ_k²`) tried, in order, when factorizing
/// `K(U,U)` or a predictive covariance matrix.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

/// Negative predictive variances down to `-VARIANCE_ROUNDOFF · σ_k²` are
/// clamped to zero; anything below is reported as an error.
pub const VARIANCE_ROUNDOFF: f64 = 1e-9;

/// Residual diagonal (times `σ_k²`) at which the pivoted fallback factor
/// stops.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

/// Distinct design points together with the exact function values there.
#[derive(Debug, Clone)]
pub struct DesignSet {
    points: PointSet,
    values: Vec<f64>,
}

impl DesignSet {
    pub fn new(points: PointSet, values: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidDesign("design must contain at least one point".into()));
        }
        if points.len() != values.len() {
            return Err(Error::InvalidDesign(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        Ok(DesignSet { points, values })
    }

    /// Evaluates `f` at every point.
    pub fn from_fn(points: PointSet, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = points.iter().map(f).collect();
        Self::new(points, values)
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Polynomial prior mean `m(u) = Σ c · Π u_i^{e_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialMean {
    terms: Vec<(Vec<u32>, f64)>,
}

impl PolynomialMean {
    pub fn new(terms: Vec<(Vec<u32>, f64)>) -> Self {
        PolynomialMean { terms }
    }

    pub fn constant(c: f64) -> Self {
        PolynomialMean {
            terms: vec![(Vec::new(), c)],
        }
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(exps, c)| {
                c * exps
                    .iter()
                    .zip(u)
                    .map(|(&e, &x)| x.powi(e as i32))
                    .product::<f64>()
            })
            .sum()
    }
}

/// Cholesky factor of `K(U,U)` for a design, with the jitter that was needed.
#[derive(Debug, Clone)]
pub struct Factorization {
    spec: KernelSpec,
    points: PointSet,
    lower: DMatrix<f64>,
    jitter: f64,
}

impl Factorization {
    pub fn new(spec: KernelSpec, points: PointSet) -> Result<Self> {
        let gram = kernels::kernel_matrix(&spec, &points)?;
        let (lower, jitter) = cholesky_with_ladder(&gram, spec.sigma2())?;
        Ok(Factorization {
            spec,
            points,
            lower,
            jitter,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    /// Absolute jitter added to the diagonal of `K(U,U)`.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `k(u, U)`.
    pub fn cross(&self, u: &[f64]) -> DVector<f64> {
        assert_eq!(u.len(), self.points.dim(), "point dimension mismatch");
        DVector::from_iterator(
            self.points.len(),
            self.points.iter().map(|p| self.spec.eval_unchecked(u, p)),
        )
    }

    /// `K(U,U)⁻¹ b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let y = self.whiten(b);
        self.lower
            .tr_solve_lower_triangular(&y)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// `L⁻¹ b`.
    pub fn whiten(&self, b: &DVector<f64>) -> DVector<f64> {
        self.lower
            .solve_lower_triangular(b)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// Cross-covariances and their whitened form for a batch of points.
    pub fn project(&self, points: &PointSet) -> Result<Projection> {
        let cross = kernels::cross_matrix(&self.spec, &self.points, points)?;
        let mut whitened = cross.clone();
        self.lower
            .solve_lower_triangular_mut(&mut whitened);
        Ok(Projection { cross, whitened })
    }

    /// `k_N(x, x)` for every column of a projection, clamped at round-off.
    pub fn variances(&self, proj: &Projection) -> Result<Vec<f64>> {
        proj.whitened
            .column_iter()
            .map(|w| clamp_variance(self.spec.sigma2() - w.norm_squared(), self.spec.sigma2()))
            .collect()
    }

    /// Predictive covariance matrix `k_N(X, X)`. `prior` may supply a
    /// precomputed `k(X, X)`.
    pub fn predictive_covariance(
        &self,
        points: &PointSet,
        prior: Option<&DMatrix<f64>>,
    ) -> Result<DMatrix<f64>> {
        let proj = self.project(points)?;
        let mut cov = match prior {
            Some(p) => {
                if p.nrows() != points.len() || p.ncols() != points.len() {
                    return Err(Error::DimensionMismatch {
                        expected: points.len(),
                        got: p.nrows(),
                    });
                }
                p.clone()
            }
            None => kernels::symmetric_gram(&self.spec, points),
        };
        cov.gemm_tr(-1.0, &proj.whitened, &proj.whitened, 1.0);
        Ok(cov)
    }
}

/// `k(U, X)` and `L⁻¹ k(U, X)` for a batch `X`, one column per point.
#[derive(Debug, Clone)]
pub struct Projection {
    pub cross: DMatrix<f64>,
    pub whitened: DMatrix<f64>,
}

fn clamp_variance(v: f64, sigma2: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -VARIANCE_ROUNDOFF * sigma2 {
        Ok(0.0)
    } else {
        Err(Error::NegativeVariance {
            value: v,
            tolerance: VARIANCE_ROUNDOFF * sigma2,
        })
    }
}

/// Cholesky with the jitter ladder. Returns the lower factor and the
/// absolute jitter used.
pub fn cholesky_with_ladder(matrix: &DMatrix<f64>, sigma2: f64) -> Result<(DMatrix<f64>, f64)> {
    for &rel in &JITTER_LADDER {
        let jitter = rel * sigma2;
        let mut m = matrix.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(chol) = m.cholesky() {
            return Ok((chol.unpack(), jitter));
        }
    }
    let min_eigenvalue = matrix
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Err(Error::Conditioning {
        max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1] * sigma2,
        min_eigenvalue,
    })
}

/// The conditioned process for one scalar function.
#[derive(Debug, Clone)]
pub struct PredictiveProcess {
    factor: Arc<Factorization>,
    values: Vec<f64>,
    alpha: DVector<f64>,
    prior_mean: Option<PolynomialMean>,
}

impl PredictiveProcess {
    /// Conditions on `values` at the already factorized design.
    pub fn from_factorization(
        factor: Arc<Factorization>,
        values: Vec<f64>,
        prior_mean: Option<PolynomialMean>,
    ) -> Result<Self> {
        if values.len() != factor.len() {
            return Err(Error::InvalidDesign(format!(
                "{} values for {} design points",
                values.len(),
                factor.len()
            )));
        }
        let residual = DVector::from_iterator(
            values.len(),
            values.iter().zip(factor.points().iter()).map(|(f, u)| match &prior_mean {
                Some(m) => f - m.eval(u),
                None => *f,
            }),
        );
        let alpha = factor.solve(&residual);
        Ok(PredictiveProcess {
            factor,
            values,
            alpha,
            prior_mean,
        })
    }

    pub fn factorization(&self) -> &Arc<Factorization> {
        &self.factor
    }

    pub fn spec(&self) -> &KernelSpec {
        self.factor.spec()
    }

    pub fn design_points(&self) -> &PointSet {
        self.factor.points()
    }

    pub fn design_values(&self) -> &[f64] {
        &self.values
    }

    /// `α = K(U,U)⁻¹ (f(U) - m(U))`.
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn prior_mean(&self) -> Option<&PolynomialMean> {
        self.prior_mean.as_ref()
    }

    fn prior_at(&self, u: &[f64]) -> f64 {
        self.prior_mean.as_ref().map_or(0.0, |m| m.eval(u))
    }

    /// `m_N(u)`.
    pub fn mean(&self, u: &[f64]) -> f64 {
        self.prior_at(u) + self.factor.cross(u).dot(&self.alpha)
    }

    /// `m_N(u)` given `k(u, U)`.
    pub fn mean_from_cross(&self, u: &[f64], cross: &DVector<f64>) -> f64 {
        self.prior_at(u) + cross.dot(&self.alpha)
    }

    /// Predictive means at every point of a projection.
    pub fn means(&self, points: &PointSet, proj: &Projection) -> Vec<f64> {
        let base = proj.cross.tr_mul(&self.alpha);
        points
            .iter()
            .zip(base.iter())
            .map(|(u, b)| self.prior_at(u) + b)
            .collect()
    }

    /// `k_N(u, u)`, clamped at round-off.
    pub fn variance(&self, u: &[f64]) -> Result<f64> {
        let w = self.factor.whiten(&self.factor.cross(u));
        let s2 = self.spec().sigma2();
        clamp_variance(s2 - w.norm_squared(), s2)
    }

    /// `k_N(u, v)`.
    pub fn covariance(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let wu = self.factor.whiten(&self.factor.cross(u));
        if u == v {
            let s2 = self.spec().sigma2();
            return clamp_variance(s2 - wu.norm_squared(), s2);
        }
        let wv = self.factor.whiten(&self.factor.cross(v));
        Ok(self.spec().eval_unchecked(u, v) - wu.dot(&wv))
    }

    /// The unit-direction maximiser of `|g(u) - m_N^g(u)|` over the native
    /// space: `k(·,u) - k(·,U)ᵀ K(U,U)⁻¹ k(u,U)` (not normalised).
    pub fn variance_maximizer(&self, u: &[f64]) -> NativeSpaceElement {
        let weights = self.factor.solve(&self.factor.cross(u));
        let mut centers = PointSet::new(u.len());
        centers.push(u).expect("dimension checked by cross");
        centers.extend(self.design_points()).expect("same dimension");
        let mut coeffs = Vec::with_capacity(weights.len() + 1);
        coeffs.push(1.0);
        coeffs.extend(weights.iter().map(|w| -w));
        NativeSpaceElement { centers, coeffs }
    }
}

/// `J` independent scalar emulators sharing one design, kernel and factor.
#[derive(Debug, Clone)]
pub struct VectorEmulator {
    components: Vec<PredictiveProcess>,
}

impl VectorEmulator {
    pub fn new(components: Vec<PredictiveProcess>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidDesign("vector emulator needs a component".into()))?;
        if components
            .iter()
            .any(|c| !Arc::ptr_eq(c.factorization(), first.factorization()))
        {
            return Err(Error::InvalidDesign(
                "vector emulator components must share one factorization".into(),
            ));
        }
        Ok(VectorEmulator { components })
    }

    pub fn components(&self) -> &[PredictiveProcess] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn factorization(&self) -> &Arc<Factorization> {
        self.components[0].factorization()
    }

    /// Component means and the shared predictive variance at `u`.
    pub fn mean_and_variance(&self, u: &[f64]) -> Result<(Vec<f64>, f64)> {
        let factor = self.factorization();
        let cross = factor.cross(u);
        let means = self
            .components
            .iter()
            .map(|c| c.mean_from_cross(u, &cross))
            .collect();
        let w = factor.whiten(&cross);
        let s2 = factor.spec().sigma2();
        Ok((means, clamp_variance(s2 - w.norm_squared(), s2)?))
    }
}

/// Conditions a GP prior on a design.
pub fn condition(
    spec: &KernelSpec,
    design: &DesignSet,
    prior_mean: Option<PolynomialMean>,
) -> Result<PredictiveProcess> {
    let factor = Arc::new(Factorization::new(*spec, design.points().clone())?);
    PredictiveProcess::from_factorization(factor, design.values().to_vec(), prior_mean)
}

/// Conditions one zero-mean emulator per component of `values` on a shared
/// design. `values[j][n]` is component `j` at design point `n`.
pub fn condition_vector(
    spec: &KernelSpec,
    points: &PointSet,
    values: &[Vec<f64>],
) -> Result<VectorEmulator> {
    let factor = Arc::new(Factorization::new(*spec, points.clone())?);
    let components = values
        .iter()
        .map(|v| PredictiveProcess::from_factorization(Arc::clone(&factor), v.clone(), None))
        .collect::<Result<Vec<_>>>()?;
    VectorEmulator::new(components)
}

pub fn predictive_mean(p: &PredictiveProcess, u: &[f64]) -> f64 {
    p.mean(u)
}

pub fn predictive_cov(p: &PredictiveProcess, u: &[f64], v: &[f64]) -> Result<f64> {
    p.covariance(u, v)
}

/// How a [`JointSampler`] factorized its covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplerFactor {
    /// Full Cholesky after adding `jitter` to the diagonal.
    Cholesky { jitter: f64 },
    /// Diagonal-pivoted Cholesky truncated at rank `rank`.
    Pivoted { rank: usize },
}

/// Draws from `N(0, C)` via `F z` with `F Fᵀ ≈ C`.
#[derive(Debug, Clone)]
pub struct JointSampler {
    factor: DMatrix<f64>,
    kind: SamplerFactor,
}

impl JointSampler {
    /// Tries the jitter ladder first; if `C` is numerically singular beyond
    /// it, falls back to a pivoted Cholesky factor truncated where the
    /// residual diagonal drops below `PIVOT_TOLERANCE · σ²`.
    pub fn new(cov: &DMatrix<f64>, sigma2: f64) -> Result<Self> {
        if cov.nrows() != cov.ncols() || cov.nrows() == 0 {
            return Err(Error::Sampling("covariance must be a nonempty square matrix".into()));
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::Sampling("covariance has non-finite entries".into()));
        }
        if let Ok((lower, jitter)) = cholesky_with_ladder(cov, sigma2) {
            return Ok(JointSampler {
                factor: lower,
                kind: SamplerFactor::Cholesky { jitter },
            });
        }
        let factor = pivoted_cholesky(cov, PIVOT_TOLERANCE * sigma2);
        let rank = factor.ncols();
        Ok(JointSampler {
            factor,
            kind: SamplerFactor::Pivoted { rank },
        })
    }

    pub fn kind(&self) -> SamplerFactor {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    /// One centered draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_iterator(
            self.factor.ncols(),
            (0..self.factor.ncols()).map(|_| rng.sample::<f64, _>(StandardNormal)),
        );
        &self.factor * z
    }

    /// `count` centered draws, one per column. Consumes the generator exactly
    /// as `count` successive calls to [`JointSampler::draw`] would.
    pub fn draw_many<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> DMatrix<f64> {
        let r = self.factor.ncols();
        let z = DMatrix::from_iterator(
            r,
            count,
            (0..r * count).map(|_| rng.sample::<f64, _>(StandardNormal)),
        );
        &self.factor * z
    }
}

/// Diagonal-pivoted Cholesky: returns `F` (rows in the original order) with
/// `F Fᵀ ≈ C`, stopping when the largest remaining pivot is `≤ tol`.
pub fn pivoted_cholesky(cov: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = cov.nrows();
    let mut diag: Vec<f64> = (0..n).map(|i| cov[(i, i)]).collect();
    let mut used = vec![false; n];
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for _ in 0..n {
        let (pivot, &best) = diag
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("at least one unused index");
        if !(best > tol) {
            break;
        }
        let root = best.sqrt();
        let mut col = vec![0.0; n];
        for j in 0..n {
            if used[j] {
                continue;
            }
            if j == pivot {
                col[j] = root;
                continue;
            }
            let mut s = cov[(j, pivot)];
            for c in &columns {
                s -= c[j] * c[pivot];
            }
            col[j] = s / root;
        }
        used[pivot] = true;
        for j in 0..n {
            if !used[j] {
                diag[j] -= col[j] * col[j];
            }
        }
        columns.push(col);
    }
    DMatrix::from_fn(n, columns.len(), |i, k| columns[k][i])
}

/// `n_draws` joint draws of `(f_N(x_1), …, f_N(x_M))`, one per row.
pub fn sample_joint(
    p: &PredictiveProcess,
    points: &PointSet,
    n_draws: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if points.is_empty() {
        return Err(Error::Sampling("no sample points".into()));
    }
    let cov = p.factorization().predictive_covariance(points, None)?;
    let sampler = JointSampler::new(&cov, p.spec().sigma2())?;
    let proj = p.factorization().project(points)?;
    let means = p.means(points, &proj);
    let mut rng = rng::stream(seed, Domain::Generic, 0);
    let mut out = DMatrix::zeros(n_draws, points.len());
    for r in 0..n_draws {
        let draw = sampler.draw(&mut rng);
        for (m, (mean, d)) in means.iter().zip(draw.iter()).enumerate() {
            out[(r, m)] = mean + d;
        }
    }
    Ok(out)
}

/// `g(·) = Σ c_i k(·, z_i)`, an element of the native space of `k`.
#[derive(Debug, Clone)]
pub struct NativeSpaceElement {
    pub centers: PointSet,
    pub coeffs: Vec<f64>,
}

impl NativeSpaceElement {
    pub fn new(centers: PointSet, coeffs: Vec<f64>) -> Result<Self> {
        if centers.len() != coeffs.len() {
            return Err(Error::InvalidDesign(format!(
                "{} centers but {} coefficients",
                centers.len(),
                coeffs.len()
            )));
        }
        Ok(NativeSpaceElement { centers, coeffs })
    }

    pub fn eval(&self, spec: &KernelSpec, u: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(&self.coeffs)
            .map(|(z, c)| c * spec.eval_unchecked(u, z))
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        NativeSpaceElement {
            centers: self.centers.clone(),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }
}

/// `‖g‖_{H_k} = sqrt(cᵀ K(Z,Z) c)`.
pub fn native_norm(g: &NativeSpaceElement, spec: &KernelSpec) -> f64 {
    let gram = kernels::symmetric_gram(spec, &g.centers);
    let c = DVector::from_column_slice(&g.coeffs);
    (c.dot(&(gram * &c))).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::tensor_grid;

    fn matern1() -> KernelSpec {
        KernelSpec::matern(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn single_point_interpolates_and_has_zero_variance() {
        let s = matern1();
        let d = DesignSet::new(PointSet::from_rows(&[[0.2, -0.1]]).unwrap(), vec![3.5]).unwrap();
        let p = condition(&s, &d, None).unwrap();
        assert!((p.mean(&[0.2, -0.1]) - 3.5).abs() < 1e-14);
        assert_eq!(p.variance(&[0.2, -0.1]).unwrap(), 0.0);

        let u = [0.7, 0.4];
        let k = s.eval(&u, &[0.2, -0.1]).unwrap();
        assert!((p.mean(&u) - 3.5 * k / s.sigma2()).abs() < 1e-14);
        let expected = s.sigma2() - k * k / s.sigma2();
        assert!((p.variance(&u).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn zero_data_gives_zero_mean() {
        let s = matern1();
        let pts = tensor_grid(2, 3).unwrap();
        let d = DesignSet::new(pts, vec![0.0; 9]).unwrap();
        let p = condition(&s, &d, None).unwrap();
        assert!(p.alpha().iter().all(|a| *a == 0.0));
        assert_eq!(p.mean(&[0.33, -0.71]), 0.0);
    }

    #[test]
    fn kernel_translate_is_reproduced() {
        let s = matern1();
        let center = [0.25, -0.5];
        let d = DesignSet::new(
            PointSet::from_rows(&[center]).unwrap(),
            vec![s.sigma2()],
        )
        .unwrap();
        let p = condition(&s, &d, None).unwrap();
        for u in [[0.0, 0.0], [-0.9, 0.8], [1.0, 1.0]] {
            let expected = s.eval(&u, &center).unwrap();
            assert!((p.mean(&u) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn far_field_mean_returns_to_prior() {
        let s = matern1();
        let pts = tensor_grid(1, 4).unwrap();
        let d = DesignSet::from_fn(pts, |u| 1.0 + u[0]).unwrap();
        let p = condition(&s, &d, None).unwrap();
        assert!(p.mean(&[40.0]).abs() < 1e-6);
    }

    #[test]
    fn design_nodes_have_zero_variance_and_variance_is_bounded() {
        let s = matern1();
        let pts = tensor_grid(2, 4).unwrap();
        let d = DesignSet::from_fn(pts.clone(), |u| (u[0] * 2.0).sin() + u[1]).unwrap();
        let p = condition(&s, &d, None).unwrap();
        for u in pts.iter() {
            assert!(p.covariance(u, u).unwrap() <= 1e-9 * s.sigma2());
        }
        for u in [[0.1, 0.2], [0.95, -0.95], [-0.4, 0.33]] {
            let v = p.covariance(&u, &u).unwrap();
            assert!(v >= 0.0 && v <= s.sigma2());
        }
    }

    #[test]
    fn polynomial_mean_still_interpolates() {
        let s = matern1();
        let pts = tensor_grid(2, 3).unwrap();
        let d = DesignSet::from_fn(pts.clone(), |u| 2.0 + u[0] * u[1] - u[1]).unwrap();
        let mean = PolynomialMean::new(vec![(vec![], 1.0), (vec![1, 0], 0.5), (vec![0, 2], -1.0)]);
        let p = condition(&s, &d, Some(mean.clone())).unwrap();
        for (u, f) in pts.iter().zip(d.values()) {
            assert!((p.mean(u) - f).abs() < 1e-9 * 3.0);
        }
        assert!((p.mean(&[50.0, 0.0]) - mean.eval(&[50.0, 0.0])).abs() < 1e-6);
    }

    #[test]
    fn vector_components_share_factor() {
        let s = matern1();
        let pts = tensor_grid(1, 5).unwrap();
        let values = vec![
            pts.iter().map(|u| u[0]).collect::<Vec<_>>(),
            pts.iter().map(|u| u[0] * u[0]).collect(),
        ];
        let g = condition_vector(&s, &pts, &values).unwrap();
        assert_eq!(g.len(), 2);
        let (means, var) = g.mean_and_variance(&[0.5]).unwrap();
        assert!((means[0] - 0.5).abs() < 1e-12 && (means[1] - 0.25).abs() < 1e-12);
        assert!(var.abs() < 1e-12);
        let scalar = condition(&s, &DesignSet::new(pts, values[1].clone()).unwrap(), None).unwrap();
        assert!((scalar.mean(&[0.1]) - g.mean_and_variance(&[0.1]).unwrap().0[1]).abs() < 1e-14);
    }

    #[test]
    fn duplicate_design_is_rejected() {
        let pts = PointSet::from_rows(&[[0.0], [0.5], [0.5]]).unwrap();
        let d = DesignSet::new(pts, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(condition(&matern1(), &d, None), Err(Error::DuplicatePoints(1, 2))));
    }

    #[test]
    fn indefinite_matrix_reports_eigenvalue() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match cholesky_with_ladder(&m, 1.0) {
            Err(Error::Conditioning { min_eigenvalue, max_jitter }) => {
                assert!((min_eigenvalue + 1.0).abs() < 1e-12);
                assert_eq!(max_jitter, 1e-8);
            }
            other => panic!("expected conditioning failure, got {other:?}"),
        }
    }

    #[test]
    fn negative_variance_beyond_roundoff_is_an_error() {
        assert_eq!(clamp_variance(-1e-12, 1.0).unwrap(), 0.0);
        assert!(matches!(clamp_variance(-1e-6, 1.0), Err(Error::NegativeVariance { .. })));
    }

    #[test]
    fn native_norm_examples() {
        let s = KernelSpec::matern(1.0, 1.0, 2.25).unwrap();
        let one = NativeSpaceElement::new(PointSet::from_rows(&[[0.1]]).unwrap(), vec![1.0]).unwrap();
        assert!((native_norm(&one, &s) - 1.5).abs() < 1e-14);
        let zero = NativeSpaceElement::new(
            PointSet::from_rows(&[[0.1], [0.4]]).unwrap(),
            vec![0.0, 0.0],
        )
        .unwrap();
        assert_eq!(native_norm(&zero, &s), 0.0);
    }

    #[test]
    fn pivoted_factor_reproduces_low_rank_matrix() {
        let a = DMatrix::from_fn(6, 2, |i, j| (i as f64 + 1.0).powi(j as i32));
        let c = &a * a.transpose();
        let f = pivoted_cholesky(&c, 1e-12);
        assert_eq!(f.ncols(), 2);
        assert!((&f * f.transpose() - c).abs().max() < 1e-12);
    }

    #[test]
    fn singular_covariance_falls_back_to_pivoting() {
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, -1e-7]);
        let s = JointSampler::new(&c, 1.0).unwrap();
        assert!(matches!(s.kind(), SamplerFactor::Pivoted { rank: 2 }));
    }

    #[test]
    fn draws_are_seed_deterministic() {
        let s = matern1();
        let pts = tensor_grid(1, 4).unwrap();
        let p = condition(&s, &DesignSet::from_fn(pts, |u| u[0].cos()).unwrap(), None).unwrap();
        let x = PointSet::from_rows(&[[0.1], [0.5], [0.9]]).unwrap();
        let a = sample_joint(&p, &x, 5, 11).unwrap();
        let b = sample_joint(&p, &x, 5, 11).unwrap();
        let c = sample_joint(&p, &x, 5, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
