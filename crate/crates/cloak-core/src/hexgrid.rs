//! Hexagonal control-cell layout: a triangular lattice of flat-top
//! regular hexagons anchored at the obstacle centroid. A hexagon is a
//! control cell iff it lies entirely inside the cloak annulus.

use crate::geometry::{DomainSpec, Point};
use crate::{CloakError, Result};

/// One control-cell hexagon with its lattice coordinates.
#[derive(Debug, Clone)]
pub struct Hexagon {
    pub center: Point,
    pub vertices: [Point; 6],
    /// axial lattice indices (column, row) used for adjacency
    pub lattice: (i64, i64),
}

impl Hexagon {
    pub fn contains(&self, p: Point) -> bool {
        // convex polygon: p is inside iff it is on the same side of
        // every edge (counter-clockwise orientation, boundary counts)
        for k in 0..6 {
            let a = self.vertices[k];
            let b = self.vertices[(k + 1) % 6];
            let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
            if cross < 0.0 {
                return false;
            }
        }
        true
    }

    /// Exact area of a regular hexagon of the generating edge length.
    pub fn area(edge: f64) -> f64 {
        1.5 * 3.0_f64.sqrt() * edge * edge
    }
}

/// Lays out the hexagonal lattice and keeps the hexagons fully inside
/// the cloak region (outside the obstacle, inside the cloak boundary).
pub fn generate_hex_partition(spec: &DomainSpec) -> Result<Vec<Hexagon>> {
    let l = spec.cell_edge;
    let anchor = spec.obstacle_contour.centroid();
    let reach = spec.cloak_outer_boundary.max_radius_from(anchor);
    let n_range = (reach / l).ceil() as i64 + 2;

    let mut hexes = Vec::new();
    let mut worst_clearance = f64::NEG_INFINITY;
    for i in -n_range..=n_range {
        for j in -n_range..=n_range {
            let cx = anchor.x + 1.5 * l * (i as f64);
            let offset = if i.rem_euclid(2) == 1 { 0.5 } else { 0.0 };
            let cy = anchor.y + 3.0_f64.sqrt() * l * (j as f64 + offset);
            let center = Point::new(cx, cy);
            let vertices: [Point; 6] = std::array::from_fn(|k| {
                let t = k as f64 * std::f64::consts::FRAC_PI_3;
                Point::new(cx + l * t.cos(), cy + l * t.sin())
            });
            let hex = Hexagon {
                center,
                vertices,
                lattice: (i, j),
            };
            match hex_clearance(&hex, spec) {
                Ok(()) => hexes.push(hex),
                Err(c) => worst_clearance = worst_clearance.max(c),
            }
        }
    }

    if hexes.is_empty() {
        return Err(CloakError::EmptyPartition(format!(
            "no hexagon of edge {l} fits inside the cloak region; best candidate \
             violated the boundary clearance by {:.3e}",
            -worst_clearance
        )));
    }
    Ok(hexes)
}

/// Ok if the hexagon lies entirely in the cloak region; Err carries the
/// (negative) clearance of the worst violation for diagnostics.
fn hex_clearance(hex: &Hexagon, spec: &DomainSpec) -> std::result::Result<(), f64> {
    let mut clearance = f64::INFINITY;
    for v in &hex.vertices {
        if !spec.cloak_outer_boundary.contains(*v) || spec.obstacle_contour.contains(*v) {
            clearance = clearance
                .min(-spec.cloak_outer_boundary.boundary_distance(*v))
                .min(-spec.obstacle_contour.boundary_distance(*v));
        }
    }
    if clearance < 0.0 {
        return Err(clearance);
    }
    // vertices are all in the region; reject hexagons whose edges still
    // clip a (possibly concave) contour
    for k in 0..6 {
        let a = hex.vertices[k];
        let b = hex.vertices[(k + 1) % 6];
        for contour in [&spec.obstacle_contour, &spec.cloak_outer_boundary] {
            for (c, d) in contour.segments() {
                if segments_cross(a, b, c, d) {
                    return Err(-crate::geometry::dist_point_segment(hex.center, c, d));
                }
            }
        }
    }
    Ok(())
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o = |p: Point, q: Point, r: Point| (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    let d1 = o(c, d, a);
    let d2 = o(c, d, b);
    let d3 = o(a, b, c);
    let d4 = o(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Lattice adjacency: hexagons sharing an edge. For the flat-top layout
/// the six neighbors of column i differ by one lattice step; the row
/// offset of the diagonal neighbors depends on the column parity.
pub fn lattice_adjacency(hexes: &[Hexagon]) -> Vec<Vec<usize>> {
    use std::collections::HashMap;
    let index: HashMap<(i64, i64), usize> = hexes
        .iter()
        .enumerate()
        .map(|(n, h)| (h.lattice, n))
        .collect();
    hexes
        .iter()
        .map(|h| {
            let (i, j) = h.lattice;
            let dj = if i.rem_euclid(2) == 1 { 0 } else { -1 };
            let neighbors = [
                (i, j + 1),
                (i, j - 1),
                (i + 1, j + dj),
                (i + 1, j + dj + 1),
                (i - 1, j + dj),
                (i - 1, j + dj + 1),
            ];
            let mut adj: Vec<usize> = neighbors
                .iter()
                .filter_map(|key| index.get(key).copied())
                .collect();
            adj.sort_unstable();
            adj
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ClosedPolyline;

    fn annulus(r_in: f64, r_out: f64, l: f64) -> DomainSpec {
        DomainSpec::circular(r_in, r_out, 3.0 * r_out, l, 512).unwrap()
    }

    #[test]
    fn paper_layout_has_390_cells() {
        // circular obstacle radius r, cloak 1.57 r, edge 8.7% of lambda
        // with lambda / r = 0.69
        let r = 1.0;
        let lambda = 0.69 * r;
        let spec = annulus(r, 1.57 * r, 0.087 * lambda);
        let hexes = generate_hex_partition(&spec).unwrap();
        assert_eq!(hexes.len(), 390);
    }

    #[test]
    fn zero_width_annulus_is_an_error() {
        let o = Point::new(0.0, 0.0);
        let contour = ClosedPolyline::circle(o, 1.0, 128);
        let spec = DomainSpec {
            obstacle_contour: contour.clone(),
            cloak_outer_boundary: contour,
            outer_radius: 5.0,
            cell_edge: 0.06,
        };
        match generate_hex_partition(&spec) {
            Err(CloakError::EmptyPartition(msg)) => {
                assert!(msg.contains("clearance"), "message was: {msg}")
            }
            other => panic!("expected empty-partition error, got {other:?}"),
        }
    }

    #[test]
    fn matches_brute_force_lattice_scan() {
        // annulus between radii 1 and 3, edge 0.4: compare against an
        // exhaustive scan over the same lattice with an independent
        // point-wise containment check
        let spec = annulus(1.0, 3.0, 0.4);
        let hexes = generate_hex_partition(&spec).unwrap();

        let l = 0.4;
        let anchor = spec.obstacle_contour.centroid();
        let mut brute = 0;
        for i in -20i64..=20 {
            for j in -20i64..=20 {
                let cx = anchor.x + 1.5 * l * (i as f64);
                let offset = if i.rem_euclid(2) == 1 { 0.5 } else { 0.0 };
                let cy = anchor.y + 3.0_f64.sqrt() * l * (j as f64 + offset);
                // dense sampling of the hexagon boundary
                let ok = (0..600).all(|s| {
                    let k = s / 100;
                    let t = (s % 100) as f64 / 100.0;
                    let t0 = k as f64 * std::f64::consts::FRAC_PI_3;
                    let t1 = (k + 1) as f64 * std::f64::consts::FRAC_PI_3;
                    let a = Point::new(cx + l * t0.cos(), cy + l * t0.sin());
                    let b = Point::new(cx + l * t1.cos(), cy + l * t1.sin());
                    let p = a + (b - a) * t;
                    spec.cloak_outer_boundary.contains(p) && !spec.obstacle_contour.contains(p)
                });
                if ok {
                    brute += 1;
                }
            }
        }
        assert_eq!(hexes.len(), brute);
    }

    #[test]
    fn adjacency_is_symmetric_and_six_fold_in_the_interior() {
        let r = 1.0;
        let spec = annulus(r, 1.57 * r, 0.087 * 0.69 * r);
        let hexes = generate_hex_partition(&spec).unwrap();
        let adj = lattice_adjacency(&hexes);
        for (i, nbrs) in adj.iter().enumerate() {
            assert!(nbrs.len() <= 6);
            for &j in nbrs {
                assert!(adj[j].contains(&i), "adjacency not symmetric: {i} vs {j}");
            }
        }
        // cells whose six lattice neighbors were all kept
        let interior = adj.iter().filter(|n| n.len() == 6).count();
        assert!(interior > 100, "expected many interior cells, got {interior}");
    }

    #[test]
    fn neighbor_centers_share_an_edge() {
        let spec = annulus(1.0, 3.0, 0.4);
        let hexes = generate_hex_partition(&spec).unwrap();
        let adj = lattice_adjacency(&hexes);
        let expected = 3.0_f64.sqrt() * 0.4;
        for (i, nbrs) in adj.iter().enumerate() {
            for &j in nbrs {
                let d = hexes[i].center.dist(hexes[j].center);
                assert!((d - expected).abs() < 1e-9, "center spacing {d}");
            }
        }
    }
}
