//! P2 triangular meshing of the annular computational domain and the
//! partition of the cloak region into hexagonal control cells.
//!
//! Triangulation is delegated to a constrained Delaunay refinement
//! (spade); this module adds the P2 midpoint nodes, boundary and region
//! tags, the plain-text mesh format, and the element-to-cell map.

use crate::geometry::{DomainSpec, Point};
use crate::hexgrid::{lattice_adjacency, Hexagon};
use crate::{CloakError, Result};
use spade::{ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};
use std::collections::HashMap;
use std::io::{BufRead, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    /// rigid obstacle boundary
    GammaI,
    /// outer truncation circle carrying the radiation condition
    GammaE,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionTag {
    /// ambient fluid
    Da,
    /// cloak annulus
    Dc,
}

#[derive(Debug, Clone)]
pub struct BoundaryEdge {
    /// endpoint vertex node ids
    pub a: usize,
    pub b: usize,
    /// P2 midpoint node id of the edge
    pub midpoint: usize,
    pub tag: BoundaryTag,
    /// the unique triangle owning this edge
    pub triangle: usize,
}

/// Quadratic triangular mesh. Nodes list all vertices first, then all
/// edge midpoints; each triangle stores its three vertices followed by
/// the midpoints of edges (0,1), (1,2), (2,0).
#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    pub num_vertices: usize,
    pub triangles: Vec<[usize; 6]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub element_region: Vec<RegionTag>,
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn tri_vertices(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]]
    }

    pub fn tri_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.tri_vertices(t);
        0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
    }

    pub fn tri_centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.tri_vertices(t);
        Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// Gradients of the barycentric coordinates of triangle `t`
    /// (constant over the element).
    pub fn bary_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.tri_vertices(t);
        let two_area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        [
            [(b.y - c.y) / two_area, (c.x - b.x) / two_area],
            [(c.y - a.y) / two_area, (a.x - c.x) / two_area],
            [(a.y - b.y) / two_area, (b.x - a.x) / two_area],
        ]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.tri_area(t)).sum()
    }

    /// Position of a point in barycentric coordinates of triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let g = self.bary_gradients(t);
        let [a, _, _] = self.tri_vertices(t);
        let l2 = g[1][0] * (p.x - a.x) + g[1][1] * (p.y - a.y);
        let l3 = g[2][0] * (p.x - a.x) + g[2][1] * (p.y - a.y);
        [1.0 - l2 - l3, l2, l3]
    }
}

/// Builds the conforming P2 triangulation of the computational domain.
pub fn build_mesh(spec: &DomainSpec, target_h: f64) -> Result<Mesh> {
    if target_h > spec.cell_edge {
        return Err(CloakError::Meshing(format!(
            "target element size {target_h} exceeds the cell edge {}; each cell must \
             contain several elements",
            spec.cell_edge
        )));
    }

    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    let insert_loop = |cdt: &mut ConstrainedDelaunayTriangulation<Point2<f64>>,
                       pts: &[Point]|
     -> Result<()> {
        let handles: Vec<_> = pts
            .iter()
            .map(|p| cdt.insert(Point2::new(p.x, p.y)))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CloakError::Meshing(format!("vertex insertion failed: {e:?}")))?;
        for i in 0..handles.len() {
            let j = (i + 1) % handles.len();
            if handles[i] == handles[j] {
                return Err(CloakError::Meshing(format!(
                    "degenerate boundary segment between ({}, {}) and ({}, {})",
                    pts[i].x, pts[i].y, pts[j].x, pts[j].y
                )));
            }
            cdt.add_constraint(handles[i], handles[j]);
        }
        Ok(())
    };

    // outer truncation circle, resolved at least as finely as the mesh
    let r = spec.outer_radius;
    let n_outer = ((std::f64::consts::TAU * r / target_h).ceil() as usize).max(64);
    let outer_pts: Vec<Point> = (0..n_outer)
        .map(|i| {
            let t = i as f64 / n_outer as f64 * std::f64::consts::TAU;
            Point::new(r * t.cos(), r * t.sin())
        })
        .collect();
    insert_loop(&mut cdt, &outer_pts)?;
    insert_loop(&mut cdt, &spec.obstacle_contour.vertices)?;

    // the cloak interface is constrained so the Da/Dc split is exact
    insert_loop(&mut cdt, &spec.cloak_outer_boundary.vertices)?;

    let max_area = 3.0_f64.sqrt() / 4.0 * target_h * target_h;
    // generous vertex budget: the whole disk (obstacle included, since
    // face selection happens after refinement) at the target density
    let budget = (4.0 * std::f64::consts::PI * r * r / max_area) as usize + 10_000;
    let refinement = cdt.refine(
        RefinementParameters::<f64>::new()
            .with_max_allowed_area(max_area)
            .with_max_additional_vertices(budget),
    );
    if !refinement.refinement_complete {
        return Err(CloakError::Meshing(
            "refinement hit its vertex budget before meeting the quality targets".into(),
        ));
    }

    // keep only faces of the computational annulus: inside the outer
    // polygon, outside the obstacle. Constraint edges guarantee no face
    // straddles either contour, so the centroid test is exact.
    // (spade's own outer-face exclusion classifies by even-odd parity
    // over all constraint loops, which would flip the cloak annulus.)
    let outer_poly = crate::geometry::ClosedPolyline {
        vertices: outer_pts.clone(),
    };
    let keep = |centroid: Point| -> bool {
        outer_poly.contains(centroid) && !spec.obstacle_contour.contains(centroid)
    };

    // extract kept triangles with a compact vertex numbering
    let mut vertex_ids: HashMap<usize, usize> = HashMap::new();
    let mut nodes: Vec<Point> = Vec::new();
    let mut tri_verts: Vec<[usize; 3]> = Vec::new();
    for face in cdt.inner_faces() {
        let vs = face.vertices();
        {
            let centroid = {
                let mut cx = 0.0;
                let mut cy = 0.0;
                for v in vs.iter() {
                    let p = v.position();
                    cx += p.x;
                    cy += p.y;
                }
                Point::new(cx / 3.0, cy / 3.0)
            };
            if !keep(centroid) {
                continue;
            }
        }
        let mut ids = [0usize; 3];
        for (slot, v) in ids.iter_mut().zip(vs.iter()) {
            let key = v.fix().index();
            *slot = *vertex_ids.entry(key).or_insert_with(|| {
                let p = v.position();
                nodes.push(Point::new(p.x, p.y));
                nodes.len() - 1
            });
        }
        // enforce counter-clockwise orientation
        let [a, b, c] = [nodes[ids[0]], nodes[ids[1]], nodes[ids[2]]];
        if (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x) < 0.0 {
            ids.swap(1, 2);
        }
        tri_verts.push(ids);
    }
    if tri_verts.is_empty() {
        return Err(CloakError::Meshing("triangulation kept no elements".into()));
    }

    // boundary edges: used by exactly one kept triangle
    let mut edge_use: HashMap<(usize, usize), (usize, usize, usize)> = HashMap::new();
    for (t, ids) in tri_verts.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (ids[k], ids[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            edge_use
                .entry(key)
                .and_modify(|(_, _, count)| *count += 1)
                .or_insert((t, k, 1));
        }
    }

    // snap outer-boundary vertices to the exact truncation radius
    let snap_tol = 0.05 * r;
    let mut is_gamma_e_vertex = vec![false; nodes.len()];
    for (&(a, b), &(_, _, count)) in &edge_use {
        if count == 1 {
            let on_circle = |p: Point| (p.norm() - r).abs() < snap_tol;
            if on_circle(nodes[a]) && on_circle(nodes[b]) {
                is_gamma_e_vertex[a] = true;
                is_gamma_e_vertex[b] = true;
            }
        }
    }
    for (i, flag) in is_gamma_e_vertex.iter().enumerate() {
        if *flag {
            let s = r / nodes[i].norm();
            nodes[i] = nodes[i] * s;
        }
    }

    // P2 midpoints, shared between the two triangles of an edge
    let num_vertices = nodes.len();
    let mut midpoint_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut triangles: Vec<[usize; 6]> = Vec::with_capacity(tri_verts.len());
    for ids in &tri_verts {
        let mut full = [0usize; 6];
        full[..3].copy_from_slice(ids);
        for k in 0..3 {
            let (a, b) = (ids[k], ids[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            full[3 + k] = *midpoint_of.entry(key).or_insert_with(|| {
                let m = (nodes[a] + nodes[b]) * 0.5;
                nodes.push(m);
                nodes.len() - 1
            });
        }
        triangles.push(full);
    }

    let mut boundary_edges = Vec::new();
    for (&(a, b), &(t, k, count)) in &edge_use {
        if count != 1 {
            continue;
        }
        let tag = if is_gamma_e_vertex[a] && is_gamma_e_vertex[b] {
            BoundaryTag::GammaE
        } else {
            BoundaryTag::GammaI
        };
        // recover edge orientation from the owning triangle
        let ids = tri_verts[t];
        let _ = k;
        let (ea, eb) = (0..3)
            .map(|k| (ids[k], ids[(k + 1) % 3]))
            .find(|&(p, q)| (p.min(q), p.max(q)) == (a, b))
            .expect("edge must belong to its triangle");
        let midpoint = midpoint_of[&(a.min(b), a.max(b))];
        boundary_edges.push(BoundaryEdge {
            a: ea,
            b: eb,
            midpoint,
            tag,
            triangle: t,
        });
    }
    boundary_edges.sort_by_key(|e| (e.a, e.b));

    let mesh_area: f64 = triangles.len() as f64;
    let mean_area = {
        let mut total = 0.0;
        for t in 0..triangles.len() {
            let [a, b, c] = [
                nodes[triangles[t][0]],
                nodes[triangles[t][1]],
                nodes[triangles[t][2]],
            ];
            total += 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
        }
        total / mesh_area
    };

    let mut element_region = Vec::with_capacity(triangles.len());
    let mut mesh = Mesh {
        nodes,
        num_vertices,
        triangles,
        boundary_edges,
        element_region: Vec::new(),
    };
    for t in 0..mesh.triangles.len() {
        let area = mesh.tri_area(t);
        if area < 1e-14 * mean_area {
            let c = mesh.tri_centroid(t);
            return Err(CloakError::Meshing(format!(
                "degenerate element {t} near ({:.6}, {:.6}) with area {area:.3e}",
                c.x, c.y
            )));
        }
        let region = if spec.cloak_outer_boundary.contains(mesh.tri_centroid(t)) {
            RegionTag::Dc
        } else {
            RegionTag::Da
        };
        element_region.push(region);
    }
    mesh.element_region = element_region;
    Ok(mesh)
}

/// Element-to-cell assignment and the per-cell bookkeeping used by the
/// optimizer: areas, membership, lattice adjacency.
#[derive(Debug, Clone)]
pub struct CellPartition {
    pub num_cells: usize,
    /// per-triangle cell index; None for elements outside every hexagon
    pub cell_of_element: Vec<Option<usize>>,
    /// cell areas from the sum of member element areas
    pub areas: Vec<f64>,
    /// symmetric neighbor lists
    pub adjacency: Vec<Vec<usize>>,
    pub hexes: Vec<Hexagon>,
}

impl CellPartition {
    pub fn elements_of_cell(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        self.cell_of_element
            .iter()
            .enumerate()
            .filter_map(move |(t, c)| (*c == Some(cell)).then_some(t))
    }

    /// True when the adjacency graph is connected (required for the
    /// simple zero eigenvalue of the graph Laplacian).
    pub fn is_connected(&self) -> bool {
        if self.num_cells == 0 {
            return false;
        }
        let mut seen = vec![false; self.num_cells];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &self.adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Maps every Dc element to the hexagon containing its centroid; the
/// lowest hexagon index wins when a centroid sits exactly on a shared
/// boundary. Elements of Dc outside every hexagon keep background
/// properties and map to no cell.
pub fn assign_cells(mesh: &Mesh, hexes: Vec<Hexagon>) -> CellPartition {
    let num_cells = hexes.len();
    let mut areas = vec![0.0; num_cells];
    let mut cell_of_element = vec![None; mesh.triangles.len()];
    for t in 0..mesh.triangles.len() {
        if mesh.element_region[t] != RegionTag::Dc {
            continue;
        }
        let centroid = mesh.tri_centroid(t);
        // first match = lowest index, the deterministic tie-break
        if let Some(k) = hexes.iter().position(|h| h.contains(centroid)) {
            cell_of_element[t] = Some(k);
            areas[k] += mesh.tri_area(t);
        }
    }
    let adjacency = lattice_adjacency(&hexes);
    CellPartition {
        num_cells,
        cell_of_element,
        areas,
        adjacency,
        hexes,
    }
}

impl Mesh {
    /// Plain-text export. Header `nodes N triangles T edges E`, then N
    /// node lines `x y`, T triangle lines of 6 node indices, E edge
    /// lines `n1 n2 tag`, then T region-tag lines.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "nodes {} triangles {} edges {}",
            self.num_nodes(),
            self.triangles.len(),
            self.boundary_edges.len()
        )?;
        for p in &self.nodes {
            writeln!(w, "{:.17e} {:.17e}", p.x, p.y)?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {} {} {} {}", t[0], t[1], t[2], t[3], t[4], t[5])?;
        }
        for e in &self.boundary_edges {
            let tag = match e.tag {
                BoundaryTag::GammaI => "GammaI",
                BoundaryTag::GammaE => "GammaE",
            };
            writeln!(w, "{} {} {}", e.a, e.b, tag)?;
        }
        for r in &self.element_region {
            writeln!(
                w,
                "{}",
                match r {
                    RegionTag::Da => "Da",
                    RegionTag::Dc => "Dc",
                }
            )?;
        }
        Ok(())
    }

    /// Parses the plain-text format written by [`Mesh::write_text`].
    pub fn read_text<R: BufRead>(reader: R, path: &str) -> Result<Mesh> {
        let mut lines = reader.lines();
        let mut next_line = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| CloakError::parse(path, "unexpected end of file"))?
                .map_err(|e| CloakError::io(path, e))
        };
        let header = next_line()?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != "nodes" || fields[2] != "triangles" || fields[4] != "edges"
        {
            return Err(CloakError::parse(path, format!("bad header: {header}")));
        }
        let parse_count = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| CloakError::parse(path, format!("bad count: {s}")))
        };
        let n = parse_count(fields[1])?;
        let t = parse_count(fields[3])?;
        let e = parse_count(fields[5])?;

        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let line = next_line()?;
            let mut it = line.split_whitespace();
            let x: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CloakError::parse(path, format!("bad node line: {line}")))?;
            let y: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CloakError::parse(path, format!("bad node line: {line}")))?;
            nodes.push(Point::new(x, y));
        }
        let mut triangles = Vec::with_capacity(t);
        let mut max_vertex = 0usize;
        for _ in 0..t {
            let line = next_line()?;
            let ids: Vec<usize> = line
                .split_whitespace()
                .map(|s| s.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| CloakError::parse(path, format!("bad triangle line: {line}")))?;
            if ids.len() != 6 {
                return Err(CloakError::parse(path, format!("bad triangle line: {line}")));
            }
            max_vertex = max_vertex.max(ids[0]).max(ids[1]).max(ids[2]);
            triangles.push([ids[0], ids[1], ids[2], ids[3], ids[4], ids[5]]);
        }
        let mut raw_edges = Vec::with_capacity(e);
        for _ in 0..e {
            let line = next_line()?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(CloakError::parse(path, format!("bad edge line: {line}")));
            }
            let a = parse_count(fields[0])?;
            let b = parse_count(fields[1])?;
            let tag = match fields[2] {
                "GammaI" => BoundaryTag::GammaI,
                "GammaE" => BoundaryTag::GammaE,
                other => {
                    return Err(CloakError::parse(path, format!("unknown edge tag: {other}")))
                }
            };
            raw_edges.push((a, b, tag));
        }
        let mut element_region = Vec::with_capacity(t);
        for _ in 0..t {
            let line = next_line()?;
            element_region.push(match line.trim() {
                "Da" => RegionTag::Da,
                "Dc" => RegionTag::Dc,
                other => {
                    return Err(CloakError::parse(path, format!("unknown region tag: {other}")))
                }
            });
        }

        // reconnect boundary edges to their owning triangle and midpoint
        let mut edge_map: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (ti, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_map.insert((a.min(b), a.max(b)), (ti, tri[3 + k]));
            }
        }
        let mut boundary_edges = Vec::with_capacity(e);
        for (a, b, tag) in raw_edges {
            let &(triangle, midpoint) = edge_map.get(&(a.min(b), a.max(b))).ok_or_else(|| {
                CloakError::parse(path, format!("boundary edge {a}-{b} not found in any triangle"))
            })?;
            boundary_edges.push(BoundaryEdge {
                a,
                b,
                midpoint,
                tag,
                triangle,
            });
        }

        Ok(Mesh {
            nodes,
            num_vertices: max_vertex + 1,
            triangles,
            boundary_edges,
            element_region,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hexgrid::generate_hex_partition;
    use approx::assert_relative_eq;

    fn disk_spec() -> DomainSpec {
        DomainSpec::circular(1.0, 1.57, 3.0, 0.8, 256).unwrap()
    }

    #[test]
    fn mesh_area_matches_analytic_annulus() {
        let spec = disk_spec();
        let mesh = build_mesh(&spec, 0.3).unwrap();
        let analytic = std::f64::consts::PI * (3.0 * 3.0 - 1.0);
        assert_relative_eq!(mesh.total_area(), analytic, max_relative = 5e-3);
    }

    #[test]
    fn refinement_scaling_is_quadratic() {
        // contour resolution scales with h so boundary segments do not
        // pin the element size
        let spec_c = DomainSpec::circular(1.0, 1.57, 3.0, 0.8, 24).unwrap();
        let spec_f = DomainSpec::circular(1.0, 1.57, 3.0, 0.8, 48).unwrap();
        let coarse = build_mesh(&spec_c, 0.4).unwrap().triangles.len() as f64;
        let fine = build_mesh(&spec_f, 0.2).unwrap().triangles.len() as f64;
        let ratio = fine / coarse;
        assert!(
            (2.5..6.0).contains(&ratio),
            "halving h should roughly quadruple elements, ratio {ratio}"
        );
    }

    #[test]
    fn gamma_e_nodes_on_exact_circle() {
        let spec = disk_spec();
        let mesh = build_mesh(&spec, 0.3).unwrap();
        let mut n_e = 0;
        for e in &mesh.boundary_edges {
            if e.tag == BoundaryTag::GammaE {
                n_e += 1;
                for id in [e.a, e.b] {
                    assert!(
                        (mesh.nodes[id].norm() - 3.0).abs() < 1e-9 * 3.0,
                        "GammaE endpoint off the circle by {}",
                        (mesh.nodes[id].norm() - 3.0).abs()
                    );
                }
            }
        }
        assert!(n_e >= 64);
    }

    #[test]
    fn gamma_i_nodes_on_obstacle() {
        let spec = disk_spec();
        let mesh = build_mesh(&spec, 0.3).unwrap();
        let mut n_i = 0;
        for e in &mesh.boundary_edges {
            if e.tag == BoundaryTag::GammaI {
                n_i += 1;
                for id in [e.a, e.b] {
                    let d = spec.obstacle_contour.boundary_distance(mesh.nodes[id]);
                    assert!(d < 1e-9, "GammaI endpoint {d} away from the obstacle");
                }
            }
        }
        assert!(n_i >= 32);
    }

    #[test]
    fn midpoints_at_edge_midpoints() {
        let spec = disk_spec();
        let mesh = build_mesh(&spec, 0.4).unwrap();
        for tri in &mesh.triangles {
            for k in 0..3 {
                let a = mesh.nodes[tri[k]];
                let b = mesh.nodes[tri[(k + 1) % 3]];
                let m = mesh.nodes[tri[3 + k]];
                assert_relative_eq!(m.x, (a.x + b.x) / 2.0, epsilon = 1e-12);
                assert_relative_eq!(m.y, (a.y + b.y) / 2.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn too_coarse_mesh_rejected() {
        // cell edge 0.06 requires target_h <= 0.03
        let spec = DomainSpec::circular(1.0, 1.57, 3.0, 0.06, 64).unwrap();
        match build_mesh(&spec, 0.05) {
            Err(CloakError::Meshing(msg)) => assert!(msg.contains("cell edge")),
            other => panic!("expected a meshing error, got {:?}", other.map(|_| "mesh")),
        }
    }

    #[test]
    fn cell_areas_match_hexagon_area() {
        let spec = DomainSpec::circular(1.0, 3.0, 5.0, 0.5, 256).unwrap();
        let hexes = generate_hex_partition(&spec).unwrap();
        let mesh = build_mesh(&spec, 0.1).unwrap();
        let partition = assign_cells(&mesh, hexes);
        let exact = Hexagon::area(0.5);
        for (k, &area) in partition.areas.iter().enumerate() {
            // hexagon boundaries are not mesh-conforming, so each cell
            // gains or loses a fringe of centroid-assigned elements
            assert!(
                (area - exact).abs() / exact < 0.025,
                "cell {k}: area {area} vs exact {exact}"
            );
        }
    }

    #[test]
    fn partition_is_disjoint_and_contained() {
        let spec = DomainSpec::circular(1.0, 3.0, 5.0, 0.5, 256).unwrap();
        let hexes = generate_hex_partition(&spec).unwrap();
        let mesh = build_mesh(&spec, 0.15).unwrap();
        let partition = assign_cells(&mesh, hexes);
        let mut cell_area_total = 0.0;
        let mut dc_area = 0.0;
        for t in 0..mesh.triangles.len() {
            match partition.cell_of_element[t] {
                Some(_) => {
                    assert_eq!(mesh.element_region[t], RegionTag::Dc);
                    cell_area_total += mesh.tri_area(t);
                    dc_area += mesh.tri_area(t);
                }
                None => {
                    if mesh.element_region[t] == RegionTag::Dc {
                        dc_area += mesh.tri_area(t);
                    }
                }
            }
        }
        assert!(cell_area_total < dc_area, "cells must not exhaust Dc");
        assert!(partition.is_connected());
    }

    #[test]
    fn text_roundtrip() {
        let spec = disk_spec();
        let mesh = build_mesh(&spec, 0.4).unwrap();
        let mut buf = Vec::new();
        mesh.write_text(&mut buf).unwrap();
        let back = Mesh::read_text(std::io::BufReader::new(&buf[..]), "test").unwrap();
        assert_eq!(back.triangles, mesh.triangles);
        assert_eq!(back.num_vertices, mesh.num_vertices);
        assert_eq!(back.boundary_edges.len(), mesh.boundary_edges.len());
        assert_relative_eq!(back.total_area(), mesh.total_area(), epsilon = 1e-12);
    }
}
