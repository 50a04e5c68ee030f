//! Graph Laplacian regularization over the hexagonal cell layout.
//!
//! H is the combinatorial Laplacian of the cell adjacency graph
//! (H_ii = |Λ_i|, H_ij = −1 for j ∈ Λ_i); D is the diagonal matrix of
//! cell areas. The regularizer R is D alone (plain ∫ v² under the
//! piecewise-constant basis) or H + D when Laplacian smoothing is on;
//! H + D is positive definite because H is PSD and D has positive
//! diagonal.

use crate::mesh::CellPartition;
use crate::{CloakError, Result};

#[derive(Debug, Clone)]
pub struct LaplacianMatrix {
    /// neighbor lists defining H implicitly
    adjacency: Vec<Vec<usize>>,
    /// diagonal of D: cell areas
    pub d: Vec<f64>,
}

pub fn build_laplacian(partition: &CellPartition) -> Result<LaplacianMatrix> {
    if partition.num_cells == 0 {
        return Err(CloakError::Optimization("no cells to regularize".into()));
    }
    for (k, &a) in partition.areas.iter().enumerate() {
        if a <= 0.0 {
            return Err(CloakError::Optimization(format!(
                "cell {k} has non-positive area {a}; H + D would be singular"
            )));
        }
    }
    Ok(LaplacianMatrix {
        adjacency: partition.adjacency.clone(),
        d: partition.areas.clone(),
    })
}

impl LaplacianMatrix {
    pub fn num_cells(&self) -> usize {
        self.d.len()
    }

    /// y = H x
    pub fn apply_h(&self, x: &[f64]) -> Vec<f64> {
        self.adjacency
            .iter()
            .enumerate()
            .map(|(i, nbrs)| nbrs.len() as f64 * x[i] - nbrs.iter().map(|&j| x[j]).sum::<f64>())
            .collect()
    }

    /// y = R x with R = H + D (use_laplacian) or R = D.
    pub fn apply_r(&self, x: &[f64], use_laplacian: bool) -> Vec<f64> {
        let mut y: Vec<f64> = if use_laplacian {
            self.apply_h(x)
        } else {
            vec![0.0; x.len()]
        };
        for (yi, (xi, di)) in y.iter_mut().zip(x.iter().zip(&self.d)) {
            *yi += xi * di;
        }
        y
    }

    /// xᵀ R x
    pub fn quadratic_form(&self, x: &[f64], use_laplacian: bool) -> f64 {
        x.iter()
            .zip(self.apply_r(x, use_laplacian))
            .map(|(xi, rxi)| xi * rxi)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use crate::hexgrid::generate_hex_partition;
    use crate::mesh::{assign_cells, build_mesh};
    use approx::assert_relative_eq;

    fn partition() -> CellPartition {
        let spec = DomainSpec::circular(1.0, 2.6, 5.0, 0.4, 256).unwrap();
        let hexes = generate_hex_partition(&spec).unwrap();
        let mesh = build_mesh(&spec, 0.2).unwrap();
        assign_cells(&mesh, hexes)
    }

    #[test]
    fn h_annihilates_constants() {
        let lap = build_laplacian(&partition()).unwrap();
        let ones = vec![1.0; lap.num_cells()];
        for v in lap.apply_h(&ones) {
            assert_relative_eq!(v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn h_matches_edge_difference_form() {
        // xᵀHx = Σ_{edges (i,j)} (x_i − x_j)², the independent identity
        let part = partition();
        let lap = build_laplacian(&part).unwrap();
        let x: Vec<f64> = (0..lap.num_cells()).map(|i| ((i * 37 % 11) as f64).sin()).collect();
        let hx = lap.apply_h(&x);
        let form: f64 = x.iter().zip(&hx).map(|(a, b)| a * b).sum();
        let mut edges = 0.0;
        for (i, nbrs) in part.adjacency.iter().enumerate() {
            for &j in nbrs {
                if j > i {
                    edges += (x[i] - x[j]) * (x[i] - x[j]);
                }
            }
        }
        assert_relative_eq!(form, edges, max_relative = 1e-12);
    }

    #[test]
    fn h_plus_d_positive_definite() {
        let lap = build_laplacian(&partition()).unwrap();
        let n = lap.num_cells();
        let mut seed = 7u64;
        for _ in 0..25 {
            let x: Vec<f64> = (0..n)
                .map(|_| {
                    seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
                    (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                })
                .collect();
            let norm2: f64 = x.iter().map(|v| v * v).sum();
            if norm2 == 0.0 {
                continue;
            }
            assert!(lap.quadratic_form(&x, true) > 0.0);
            assert!(lap.quadratic_form(&x, false) > 0.0);
        }
        // constants are in H's kernel but not in (H+D)'s
        let ones = vec![1.0; n];
        let area: f64 = lap.d.iter().sum();
        assert_relative_eq!(lap.quadratic_form(&ones, true), area, max_relative = 1e-12);
    }

    #[test]
    fn kernel_of_h_is_constants_only() {
        // on a connected graph xᵀHx = 0 forces x constant; perturb one
        // entry of a constant vector and the form becomes positive
        let part = partition();
        assert!(part.is_connected());
        let lap = build_laplacian(&part).unwrap();
        let mut x = vec![2.5; lap.num_cells()];
        assert!(lap.quadratic_form(&x, true) - lap.d.iter().sum::<f64>() * 2.5 * 2.5 < 1e-9);
        x[3] += 1.0;
        let hx = lap.apply_h(&x);
        let form: f64 = x.iter().zip(&hx).map(|(a, b)| a * b).sum();
        assert!(form > 0.5); // degree of cell 3 is at least 1
    }

    #[test]
    fn empty_or_degenerate_partition_rejected() {
        let part = partition();
        let mut bad = part.clone();
        bad.areas[0] = 0.0;
        assert!(build_laplacian(&bad).is_err());
    }
}
