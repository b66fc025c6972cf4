use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::rng::{self, Domain};
use crate::summation;

/// Point counts with an embedded generating vector.
pub const EMBEDDED_POINTS: [usize; 5] = [256, 512, 1024, 2048, 4096];

// Component-by-component constructions for product weights γ_j = 1/j², one
// row per entry of EMBEDDED_POINTS, eight dimensions each.
const EMBEDDED: [[u64; 8]; 5] = [
    [1, 75, 97, 47, 41, 55, 17, 65],
    [1, 149, 113, 193, 31, 243, 163, 203],
    [1, 275, 167, 403, 317, 181, 103, 297],
    [1, 791, 591, 957, 107, 177, 753, 347],
    [1, 1557, 1087, 701, 1163, 321, 1649, 207],
];

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Generating vector of a rank-1 lattice rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeneratingVector {
    /// The built-in table, usable for `n_points` in [`EMBEDDED_POINTS`].
    Embedded,
    /// An externally supplied vector, reduced modulo the point count.
    Custom(Vec<u64>),
}

impl GeneratingVector {
    /// Parses one integer per line. Blank lines and `#` comments are skipped;
    /// on lines with two columns (`j z_j`) the last column is used.
    pub fn parse(text: &str) -> Result<Self> {
        let mut z = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let field = line.split_whitespace().last().unwrap_or(line);
            let v: u64 = field.parse().map_err(|_| {
                Error::Quadrature(format!("line {}: '{line}' is not a nonnegative integer", lineno + 1))
            })?;
            z.push(v);
        }
        if z.is_empty() {
            return Err(Error::Quadrature("generating vector file is empty".into()));
        }
        Ok(GeneratingVector::Custom(z))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// The first `dim` components reduced modulo `n_points`.
    pub fn components(&self, dim: usize, n_points: usize) -> Result<Vec<u64>> {
        if dim == 0 || n_points == 0 {
            return Err(Error::Quadrature("dimension and point count must be positive".into()));
        }
        let full: Vec<u64> = match self {
            GeneratingVector::Embedded => {
                let row = EMBEDDED_POINTS
                    .iter()
                    .position(|&m| m == n_points)
                    .ok_or_else(|| {
                        Error::Quadrature(format!(
                            "no embedded generating vector for {n_points} points; available: {EMBEDDED_POINTS:?}"
                        ))
                    })?;
                EMBEDDED[row].to_vec()
            }
            GeneratingVector::Custom(z) => z.clone(),
        };
        if full.len() < dim {
            return Err(Error::Quadrature(format!(
                "generating vector has {} components, {dim} needed",
                full.len()
            )));
        }
        let m = n_points as u64;
        let z: Vec<u64> = full[..dim].iter().map(|v| v % m).collect();
        if let Some((j, v)) = z.iter().enumerate().find(|(_, v)| gcd(**v, m) != 1) {
            return Err(Error::Quadrature(format!(
                "component {} ({v} mod {m}) is not coprime to the point count",
                j + 1
            )));
        }
        Ok(z)
    }
}

/// A quadrature estimate from independently shifted copies of a rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub per_shift: Vec<f64>,
}

impl Estimate {
    pub fn from_shifts(per_shift: Vec<f64>) -> Self {
        let (mean, stderr) = summation::mean_and_stderr(&per_shift);
        Estimate {
            mean,
            stderr,
            per_shift,
        }
    }
}

/// A randomly shifted rank-1 lattice rule. Nodes are stored shift by shift:
/// block `s` holds the `n_points` nodes for shift `s`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    generating_vector: Vec<u64>,
    n_points: usize,
    shifts: Vec<Vec<f64>>,
    seed: u64,
    nodes: PointSet,
}

/// Nodes `2·frac(i z / M + Δ) - 1`, `i = 0..M`, for `n_shifts` uniform
/// shifts `Δ` drawn from the stream for `seed`.
pub fn lattice_rule(
    source: &GeneratingVector,
    dim: usize,
    n_points: usize,
    n_shifts: usize,
    seed: u64,
) -> Result<QuadratureRule> {
    if n_shifts == 0 {
        return Err(Error::Quadrature("at least one shift is required".into()));
    }
    let z = source.components(dim, n_points)?;
    let mut r = rng::stream(seed, Domain::QuadratureShifts, dim as u64);
    let shifts: Vec<Vec<f64>> = (0..n_shifts)
        .map(|_| (0..dim).map(|_| r.random::<f64>()).collect())
        .collect();
    let m = n_points as u64;
    let mut coords = Vec::with_capacity(n_shifts * n_points * dim);
    for shift in &shifts {
        for i in 0..m {
            for (zj, dj) in z.iter().zip(shift) {
                let base = ((i * zj) % m) as f64 / n_points as f64;
                let t = (base + dj).fract();
                coords.push(2.0 * t - 1.0);
            }
        }
    }
    Ok(QuadratureRule {
        generating_vector: z,
        n_points,
        shifts,
        seed,
        nodes: PointSet::from_flat(dim, coords)?,
    })
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        self.nodes.dim()
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_shifts(&self) -> usize {
        self.shifts.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn generating_vector(&self) -> &[u64] {
        &self.generating_vector
    }

    pub fn shifts(&self) -> &[Vec<f64>] {
        &self.shifts
    }

    /// All `n_shifts · n_points` nodes.
    pub fn nodes(&self) -> &PointSet {
        &self.nodes
    }

    /// The nodes of shift `s`.
    pub fn block(&self, s: usize) -> PointSet {
        self.nodes.slice(s * self.n_points..(s + 1) * self.n_points)
    }

    /// Shift-by-shift averages of per-node values laid out like
    /// [`QuadratureRule::nodes`].
    pub fn estimate(&self, values: &[f64]) -> Result<Estimate> {
        if values.len() != self.nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.nodes.len(),
                got: values.len(),
            });
        }
        Ok(Estimate::from_shifts(
            values
                .chunks(self.n_points)
                .map(summation::mean)
                .collect(),
        ))
    }

    /// `∫ f dμ₀` with the uniform probability measure on `[-1,1]^K`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> Estimate {
        let values: Vec<f64> = self.nodes.iter().map(f).collect();
        self.estimate(&values).expect("one value per node")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrates_exactly() {
        for dim in 1..=4 {
            let rule = lattice_rule(&GeneratingVector::Embedded, dim, 1024, 8, 1).unwrap();
            let e = rule.integrate(|_| 1.0);
            assert_eq!(e.mean, 1.0);
            assert_eq!(e.stderr, 0.0);
        }
    }

    #[test]
    fn nodes_lie_in_cube_and_are_deterministic() {
        let a = lattice_rule(&GeneratingVector::Embedded, 3, 256, 4, 7).unwrap();
        let b = lattice_rule(&GeneratingVector::Embedded, 3, 256, 4, 7).unwrap();
        assert_eq!(a.nodes(), b.nodes());
        assert!(a.nodes().as_flat().iter().all(|x| (-1.0..1.0).contains(x)));
        assert_eq!(a.block(2).len(), 256);
    }

    #[test]
    fn one_dimensional_projection_is_a_shifted_grid() {
        let rule = lattice_rule(&GeneratingVector::Embedded, 2, 512, 1, 3).unwrap();
        let mut first: Vec<f64> = rule.nodes().iter().map(|p| (p[0] + 1.0) / 2.0).collect();
        first.sort_by(f64::total_cmp);
        for w in first.windows(2) {
            assert!((w[1] - w[0] - 1.0 / 512.0).abs() < 1e-12);
        }
    }

    #[test]
    fn smooth_periodic_integrand() {
        let rule = lattice_rule(&GeneratingVector::Embedded, 3, 2048, 8, 5).unwrap();
        let e = rule.integrate(|u| u.iter().map(|x| (std::f64::consts::PI * x).cos() + 1.0).product());
        assert!((e.mean - 1.0).abs() < 1e-10);
    }

    #[test]
    fn file_vectors() {
        let v = GeneratingVector::parse("# header\n1\n433461\n\n1 315689\n").unwrap();
        assert_eq!(v.components(3, 1024).unwrap(), vec![1, 433461 % 1024, 315689 % 1024]);
        assert!(v.components(4, 1024).is_err());
        assert!(GeneratingVector::parse("1\n2\n").unwrap().components(2, 1024).is_err());
        assert!(GeneratingVector::parse("x\n").is_err());
        assert!(GeneratingVector::Embedded.components(2, 1000).is_err());
        assert!(GeneratingVector::Embedded.components(9, 1024).is_err());
    }
}
