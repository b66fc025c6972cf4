//! Design-point generation and geometry on `[-1, 1]^K`.

use crate::error::{Error, Result};
use crate::points::{distance, squared_distance, PointSet};

/// Fill distance, separation radius and mesh ratio of a design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignGeometry {
    pub fill_distance: f64,
    pub separation_radius: f64,
    pub mesh_ratio: f64,
}

/// `n^K` points `{-1 + 2i/(n-1)}^K` in lexicographic order (last coordinate
/// varies fastest).
pub fn tensor_grid(dim: usize, n_per_dim: usize) -> Result<PointSet> {
    if dim == 0 {
        return Err(Error::InvalidDesign("dimension must be at least 1".into()));
    }
    if n_per_dim < 2 {
        return Err(Error::InvalidDesign(format!(
            "tensor grid needs at least 2 points per dimension, got {n_per_dim}"
        )));
    }
    let axis: Vec<f64> = (0..n_per_dim)
        .map(|i| -1.0 + 2.0 * i as f64 / (n_per_dim - 1) as f64)
        .collect();
    Ok(product_grid(dim, &axis))
}

fn product_grid(dim: usize, axis: &[f64]) -> PointSet {
    let n = axis.len();
    let total = n.pow(dim as u32);
    let mut coords = Vec::with_capacity(total * dim);
    let mut index = vec![0usize; dim];
    for _ in 0..total {
        coords.extend(index.iter().map(|&i| axis[i]));
        for d in (0..dim).rev() {
            index[d] += 1;
            if index[d] < n {
                break;
            }
            index[d] = 0;
        }
    }
    PointSet::from_flat(dim, coords).expect("dimension is nonzero")
}

/// Estimate of `sup_{u ∈ [-1,1]^K} min_n ‖u - u^n‖`.
///
/// The supremum is taken over a probe set made of a tensor grid with
/// `probe_resolution` points per axis plus the centres of its cells. For a
/// tensor design with `n` points per axis the estimate is exact whenever
/// `n - 1` divides `probe_resolution - 1`.
pub fn fill_distance(design: &PointSet, probe_resolution: usize) -> Result<f64> {
    if design.is_empty() {
        return Err(Error::InvalidDesign("fill distance of an empty design".into()));
    }
    if probe_resolution < 2 {
        return Err(Error::InvalidDesign(format!(
            "probe resolution must be at least 2, got {probe_resolution}"
        )));
    }
    let dim = design.dim();
    let step = 2.0 / (probe_resolution - 1) as f64;
    let nodes: Vec<f64> = (0..probe_resolution).map(|i| -1.0 + i as f64 * step).collect();
    let centres: Vec<f64> = (0..probe_resolution - 1)
        .map(|i| -1.0 + (i as f64 + 0.5) * step)
        .collect();

    let mut worst = 0.0f64;
    for probe in [product_grid(dim, &nodes), product_grid(dim, &centres)] {
        for p in probe.iter() {
            let nearest = design
                .iter()
                .map(|u| squared_distance(p, u))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest);
        }
    }
    Ok(worst.sqrt())
}

/// `q_U`: half the smallest pairwise distance.
pub fn separation_radius(design: &PointSet) -> Result<f64> {
    if design.len() < 2 {
        return Err(Error::InvalidDesign(
            "separation radius needs at least two points".into(),
        ));
    }
    let mut min = f64::INFINITY;
    for i in 0..design.len() {
        for j in 0..i {
            let d = distance(design.get(i), design.get(j));
            if d == 0.0 {
                return Err(Error::DuplicatePoints(j, i));
            }
            min = min.min(d);
        }
    }
    Ok(0.5 * min)
}

/// `ρ_U = h_U / q_U`.
pub fn mesh_ratio(design: &PointSet, probe_resolution: usize) -> Result<f64> {
    Ok(fill_distance(design, probe_resolution)? / separation_radius(design)?)
}

pub fn geometry(design: &PointSet, probe_resolution: usize) -> Result<DesignGeometry> {
    let fill_distance = fill_distance(design, probe_resolution)?;
    let separation_radius = separation_radius(design)?;
    Ok(DesignGeometry {
        fill_distance,
        separation_radius,
        mesh_ratio: fill_distance / separation_radius,
    })
}

/// Probe resolution that makes [`fill_distance`] exact for a tensor design
/// with `n_per_dim` points per axis.
pub fn default_probe_resolution(n_per_dim: usize) -> usize {
    4 * (n_per_dim.max(2) - 1) + 1
}
