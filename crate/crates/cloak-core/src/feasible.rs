//! The manufacturable material set S in (ρ̂, κ̂) space, its log image
//! S′, homogenization helpers, and the inverse map from target
//! properties back to unit-cell geometry.
//!
//! Two unit-cell families are supported on a triangular lattice of
//! flat-top hexagonal cells:
//!   * ⊙ hollow metal cylinders with an air core (r̂_in, r̂_out),
//!   * ★ n-pointed metal stars with sealed air pockets (p̂, P̂).
//!
//! Density homogenizes analytically by the rule of mixtures. The bulk
//! modulus requires the Bloch dispersion slope, which is data; the
//! bundled synthetic generator stands in for it with a thick-walled
//! Lamé ring-stiffness model mixed Reuss-style with the surrounding
//! water, so the whole pipeline runs without external data files. The
//! synthetic model uses the physically standard water bulk modulus
//! (2.2 GPa) internally; only dimensionless ratios ρ̂, κ̂, c_ph/c0 are
//! ever stored.

use crate::geometry::{project_point_segment, ClosedPolyline, Point};
use crate::{CloakError, Result};
use geo::{LineString, MultiPolygon, Polygon};
use std::io::{BufRead, Write};

/// Minimum wall thickness δr̂2 (5% of the lattice constant).
pub const DELTA_R2: f64 = 0.05;
/// Minimum feature radius δr̂1 = 4 δr̂2.
pub const DELTA_R1: f64 = 4.0 * DELTA_R2;
/// Largest admissible outer radius √3/2 − δr̂1.
pub fn r_hat_max() -> f64 {
    3.0_f64.sqrt() / 2.0 - DELTA_R1
}

/// Star-cell fillet radius (2.5% of the lattice constant); geometric
/// detail of the manufactured cell, not used by the synthetic model.
pub const STAR_FILLET: f64 = 0.025;
/// Star-cell wall thickness (5% of the lattice constant).
pub const STAR_WALL: f64 = 0.05;
/// Default number of star points (must be a multiple of 3).
pub const STAR_POINTS_DEFAULT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometryCylinder {
    pub r_in_hat: f64,
    pub r_out_hat: f64,
}

impl CellGeometryCylinder {
    pub fn validate(&self) -> Result<()> {
        let ok = self.r_in_hat >= DELTA_R1 - 1e-12
            && self.r_out_hat <= r_hat_max() + 1e-12
            && self.r_out_hat >= self.r_in_hat + DELTA_R2 - 1e-12;
        if ok {
            Ok(())
        } else {
            Err(CloakError::FeasibleSet(format!(
                "cylinder cell (r_in = {}, r_out = {}) violates the feature-size constraints",
                self.r_in_hat, self.r_out_hat
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometryStar {
    pub p_hat: f64,
    pub p_hat_cap: f64,
    pub n_points: usize,
}

impl CellGeometryStar {
    pub fn validate(&self, p_min: f64, p_max: f64) -> Result<()> {
        let ok = self.p_hat >= p_min - 1e-12
            && self.p_hat <= self.p_hat_cap + 1e-12
            && self.p_hat_cap <= p_max + 1e-12
            && self.n_points % 3 == 0
            && self.n_points >= 3;
        if ok {
            Ok(())
        } else {
            Err(CloakError::FeasibleSet(format!(
                "star cell (p = {}, P = {}, n = {}) violates the constraints",
                self.p_hat, self.p_hat_cap, self.n_points
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Cylinder,
    Star,
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Cylinder => "cylinder",
            Family::Star => "star",
        }
    }

    pub fn from_tag(s: &str) -> Option<Family> {
        match s {
            "cylinder" => Some(Family::Cylinder),
            "star" => Some(Family::Star),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellGeometry {
    Cylinder(CellGeometryCylinder),
    Star(CellGeometryStar),
}

/// Weighted phase densities: ρ_hom = Σ χ_i ρ_i.
pub fn rule_of_mixtures(fractions: &[(f64, f64)]) -> Result<f64> {
    let total: f64 = fractions.iter().map(|(chi, _)| chi).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(CloakError::FeasibleSet(format!(
            "volume fractions sum to {total}, not 1"
        )));
    }
    if fractions.iter().any(|&(chi, _)| chi < -1e-15) {
        return Err(CloakError::FeasibleSet("negative volume fraction".into()));
    }
    Ok(fractions.iter().map(|(chi, rho)| chi * rho).sum())
}

/// κ_hom = c_ph² ρ_hom (slope of the acoustic branch at the origin).
pub fn kappa_from_phase_speed(c_ph: f64, rho_hom: f64) -> f64 {
    c_ph * c_ph * rho_hom
}

/// Rectangular sample grid of one family: (param1, param2) →
/// (ρ̂, κ̂, c_ph/c0), row-major with param1 as the outer index.
///
/// Both families use a rectangularized parameter space so the grid can
/// be rectangular despite the triangular geometric constraints:
/// cylinder: param1 = r̂_in, param2 = t with
///   r̂_out = r̂_in + δr̂2 + t (r̂_max − δr̂2 − r̂_in);
/// star: param1 = p̂, param2 = s with P̂ = p̂ + s (P̂_max − p̂).
#[derive(Debug, Clone)]
pub struct FamilyTable {
    pub family: Family,
    pub param1: Vec<f64>,
    pub param2: Vec<f64>,
    pub rho_hat: Vec<f64>,
    pub kappa_hat: Vec<f64>,
    pub c_ph_over_c0: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct HomogenizationTable {
    pub cylinder: FamilyTable,
    pub star: FamilyTable,
    pub star_p_min: f64,
    pub star_p_max: f64,
}

/// Material constants of the synthetic effective-medium model.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticModel {
    pub rho_water: f64,
    pub kappa_water: f64,
    pub rho_metal: f64,
    pub e_metal: f64,
    pub nu_metal: f64,
    pub rho_air: f64,
    pub n_star_points: usize,
    pub star_p_min: f64,
    pub star_p_max: f64,
}

impl Default for SyntheticModel {
    fn default() -> Self {
        SyntheticModel {
            rho_water: 998.0,
            // physically standard value; ratios only
            kappa_water: 2.2e9,
            rho_metal: 2700.0,
            e_metal: 70.0e9,
            nu_metal: 0.3,
            rho_air: 1.23,
            n_star_points: STAR_POINTS_DEFAULT,
            // small stars have relatively thick walls (the wall is a
            // fixed fraction of the lattice constant), so letting p
            // reach below the cylinder feature limit gives the family
            // stiff-but-neutral cells; this keeps (1, 1) interior to S
            star_p_min: 0.12,
            star_p_max: 3.0_f64.sqrt() / 2.0 - DELTA_R1,
        }
    }
}

/// Hexagonal Wigner-Seitz cell area for a unit lattice constant.
fn cell_area() -> f64 {
    3.0_f64.sqrt() / 2.0
}

/// Radius scale mapping r̂ (fraction of the lattice constant, bounded
/// by √3/2 − δr̂1) onto physical radii that fit inside the cell
/// inradius 1/2.
fn radius_scale() -> f64 {
    0.5 / (3.0_f64.sqrt() / 2.0 - DELTA_R1)
}

/// Plane-strain ring stiffness of a thick-walled tube under external
/// pressure (Lamé): K = p / (−2 ε_θ(b)).
fn ring_stiffness(a: f64, b: f64, e: f64, nu: f64) -> f64 {
    let ratio = (b * b + a * a) / (b * b - a * a);
    e / (2.0 * (1.0 + nu) * ((1.0 - nu) * ratio - nu))
}

impl SyntheticModel {
    /// Homogenized (ρ̂, κ̂) of a hollow-cylinder cell with an air core.
    pub fn cylinder_properties(&self, r_in_hat: f64, r_out_hat: f64) -> (f64, f64) {
        let s = radius_scale();
        let a = s * r_in_hat;
        let b = s * r_out_hat;
        let chi_disc = std::f64::consts::PI * b * b / cell_area();
        let chi_air = std::f64::consts::PI * a * a / cell_area();
        let chi_metal = chi_disc - chi_air;
        let rho = rule_of_mixtures(&[
            (1.0 - chi_disc, self.rho_water),
            (chi_metal, self.rho_metal),
            (chi_air, self.rho_air),
        ])
        .expect("fractions sum to 1 by construction");
        let k_inc = ring_stiffness(a, b, self.e_metal, self.nu_metal);
        let kappa_hat = 1.0 / ((1.0 - chi_disc) + chi_disc * self.kappa_water / k_inc);
        (rho / self.rho_water, kappa_hat)
    }

    /// Homogenized (ρ̂, κ̂) of a solid metal star whose concave pockets
    /// are sealed and air-filled; the ring stiffness uses a shell of
    /// fixed wall STAR_WALL softened quadratically by the spike aspect
    /// p̂/P̂ (spiky stars bend easily).
    pub fn star_properties(&self, p_hat: f64, cap_hat: f64) -> (f64, f64) {
        let s = radius_scale();
        let n = self.n_star_points as f64;
        let r_out = s * cap_hat;
        let r_in = s * p_hat;
        let a_disc = std::f64::consts::PI * r_out * r_out;
        let a_star = n * r_out * r_in * (std::f64::consts::PI / n).sin();
        let chi_disc = a_disc / cell_area();
        let chi_metal = a_star / cell_area();
        let chi_air = chi_disc - chi_metal;
        let rho = rule_of_mixtures(&[
            (1.0 - chi_disc, self.rho_water),
            (chi_metal, self.rho_metal),
            (chi_air, self.rho_air),
        ])
        .expect("fractions sum to 1 by construction");
        let wall = (STAR_WALL * s).min(0.9 * r_out);
        let k_ring = ring_stiffness(r_out - wall, r_out, self.e_metal, self.nu_metal);
        let aspect = (p_hat / cap_hat).clamp(0.0, 1.0);
        let k_star = k_ring * (2.0 * aspect) * (2.0 * aspect);
        let kappa_hat = 1.0 / ((1.0 - chi_disc) + chi_disc * self.kappa_water / k_star);
        (rho / self.rho_water, kappa_hat)
    }

    fn cylinder_params_to_geometry(&self, r_in: f64, t: f64) -> CellGeometryCylinder {
        let r_out = r_in + DELTA_R2 + t * (r_hat_max() - DELTA_R2 - r_in);
        CellGeometryCylinder {
            r_in_hat: r_in,
            r_out_hat: r_out,
        }
    }

    fn star_params_to_geometry(&self, p: f64, s: f64) -> CellGeometryStar {
        CellGeometryStar {
            p_hat: p,
            p_hat_cap: p + s * (self.star_p_max - p),
            n_points: self.n_star_points,
        }
    }

    fn family_point(&self, family: Family, p1: f64, p2: f64) -> (f64, f64) {
        match family {
            Family::Cylinder => {
                let g = self.cylinder_params_to_geometry(p1, p2);
                self.cylinder_properties(g.r_in_hat, g.r_out_hat)
            }
            Family::Star => {
                let g = self.star_params_to_geometry(p1, p2);
                self.star_properties(g.p_hat, g.p_hat_cap)
            }
        }
    }

    /// Samples both families on n1 × n2 rectangular grids.
    pub fn generate_table(&self, n1: usize, n2: usize) -> Result<HomogenizationTable> {
        if n1 < 2 || n2 < 2 {
            return Err(CloakError::FeasibleSet(format!(
                "table grid needs at least 2 samples per axis, got {n1} x {n2}"
            )));
        }
        let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect()
        };
        let build = |family: Family, p1: Vec<f64>, p2: Vec<f64>| -> FamilyTable {
            let mut rho = Vec::with_capacity(n1 * n2);
            let mut kap = Vec::with_capacity(n1 * n2);
            let mut cph = Vec::with_capacity(n1 * n2);
            for &a in &p1 {
                for &b in &p2 {
                    let (r, k) = self.family_point(family, a, b);
                    rho.push(r);
                    kap.push(k);
                    cph.push((k / r).sqrt());
                }
            }
            FamilyTable {
                family,
                param1: p1,
                param2: p2,
                rho_hat: rho,
                kappa_hat: kap,
                c_ph_over_c0: cph,
            }
        };
        let r_in_hi = r_hat_max() - DELTA_R2;
        Ok(HomogenizationTable {
            cylinder: build(
                Family::Cylinder,
                axis(DELTA_R1, r_in_hi, n1),
                axis(0.0, 1.0, n2),
            ),
            star: build(
                Family::Star,
                axis(self.star_p_min, self.star_p_max, n1),
                axis(0.0, 1.0, n2),
            ),
            star_p_min: self.star_p_min,
            star_p_max: self.star_p_max,
        })
    }
}

impl FamilyTable {
    pub fn n1(&self) -> usize {
        self.param1.len()
    }

    pub fn n2(&self) -> usize {
        self.param2.len()
    }

    fn at(&self, i: usize, j: usize) -> (f64, f64) {
        let idx = i * self.n2() + j;
        (self.rho_hat[idx], self.kappa_hat[idx])
    }

    fn bracket(axis: &[f64], x: f64) -> (usize, f64) {
        let n = axis.len();
        if x <= axis[0] {
            return (0, 0.0);
        }
        if x >= axis[n - 1] {
            return (n - 2, 1.0);
        }
        let i = axis.partition_point(|&v| v <= x).min(n - 1) - 1;
        let w = (x - axis[i]) / (axis[i + 1] - axis[i]);
        (i, w)
    }

    /// Clamped bilinear interpolation of (ρ̂, κ̂).
    pub fn interpolate(&self, p1: f64, p2: f64) -> (f64, f64) {
        let (i, wi) = Self::bracket(&self.param1, p1);
        let (j, wj) = Self::bracket(&self.param2, p2);
        let f = |a: (f64, f64), b: (f64, f64), w: f64| {
            (a.0 + (b.0 - a.0) * w, a.1 + (b.1 - a.1) * w)
        };
        let lo = f(self.at(i, j), self.at(i, j + 1), wj);
        let hi = f(self.at(i + 1, j), self.at(i + 1, j + 1), wj);
        f(lo, hi, wi)
    }

    /// Jacobian of the bilinear interpolant at (p1, p2).
    pub fn jacobian(&self, p1: f64, p2: f64) -> [[f64; 2]; 2] {
        let (i, wi) = Self::bracket(&self.param1, p1);
        let (j, wj) = Self::bracket(&self.param2, p2);
        let d1 = self.param1[i + 1] - self.param1[i];
        let d2 = self.param2[j + 1] - self.param2[j];
        let (r00, k00) = self.at(i, j);
        let (r01, k01) = self.at(i, j + 1);
        let (r10, k10) = self.at(i + 1, j);
        let (r11, k11) = self.at(i + 1, j + 1);
        let drho_d1 = ((r10 - r00) * (1.0 - wj) + (r11 - r01) * wj) / d1;
        let drho_d2 = ((r01 - r00) * (1.0 - wi) + (r11 - r10) * wi) / d2;
        let dkap_d1 = ((k10 - k00) * (1.0 - wj) + (k11 - k01) * wj) / d1;
        let dkap_d2 = ((k01 - k00) * (1.0 - wi) + (k11 - k10) * wi) / d2;
        [[drho_d1, drho_d2], [dkap_d1, dkap_d2]]
    }

    fn param_bounds(&self) -> ((f64, f64), (f64, f64)) {
        (
            (self.param1[0], *self.param1.last().unwrap()),
            (self.param2[0], *self.param2.last().unwrap()),
        )
    }
}

impl HomogenizationTable {
    pub fn validate(&self) -> Result<()> {
        for t in [&self.cylinder, &self.star] {
            let n = t.n1() * t.n2();
            if t.rho_hat.len() != n || t.kappa_hat.len() != n || t.c_ph_over_c0.len() != n {
                return Err(CloakError::FeasibleSet(format!(
                    "{} table is not rectangular: {} samples for a {} x {} grid",
                    t.family.tag(),
                    t.rho_hat.len(),
                    t.n1(),
                    t.n2()
                )));
            }
            for axis in [&t.param1, &t.param2] {
                if axis.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(CloakError::FeasibleSet(format!(
                        "{} table axis is not strictly increasing",
                        t.family.tag()
                    )));
                }
            }
            for idx in 0..n {
                let (r, k, c) = (t.rho_hat[idx], t.kappa_hat[idx], t.c_ph_over_c0[idx]);
                if r <= 0.0 || k <= 0.0 || c <= 0.0 {
                    return Err(CloakError::FeasibleSet(format!(
                        "{} table sample {idx} has non-positive properties",
                        t.family.tag()
                    )));
                }
                if (k - c * c * r).abs() > 1e-9 * k {
                    return Err(CloakError::FeasibleSet(format!(
                        "{} table sample {idx} breaks kappa = (c_ph/c0)^2 rho",
                        t.family.tag()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Plain-text save: per family a `family n1 n2` header followed by
    /// `param1 param2 rho_hat kappa_hat c_ph_over_c0` rows.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for t in [&self.cylinder, &self.star] {
            writeln!(w, "{} {} {}", t.family.tag(), t.n1(), t.n2())?;
            for (i, &a) in t.param1.iter().enumerate() {
                for (j, &b) in t.param2.iter().enumerate() {
                    let idx = i * t.n2() + j;
                    writeln!(
                        w,
                        "{:.12e} {:.12e} {:.17e} {:.17e} {:.17e}",
                        a, b, t.rho_hat[idx], t.kappa_hat[idx], t.c_ph_over_c0[idx]
                    )?;
                }
            }
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(reader: R, path: &str) -> Result<HomogenizationTable> {
        let mut lines = reader.lines();
        let mut tables: Vec<FamilyTable> = Vec::new();
        loop {
            let header = match lines.next() {
                None => break,
                Some(h) => h.map_err(|e| CloakError::io(path, e))?,
            };
            if header.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = header.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(CloakError::parse(path, format!("bad table header: {header}")));
            }
            let family = Family::from_tag(fields[0])
                .ok_or_else(|| CloakError::parse(path, format!("unknown family: {}", fields[0])))?;
            let n1: usize = fields[1]
                .parse()
                .map_err(|_| CloakError::parse(path, "bad n1"))?;
            let n2: usize = fields[2]
                .parse()
                .map_err(|_| CloakError::parse(path, "bad n2"))?;
            let mut param1 = Vec::new();
            let mut param2 = Vec::new();
            let mut rho = Vec::with_capacity(n1 * n2);
            let mut kap = Vec::with_capacity(n1 * n2);
            let mut cph = Vec::with_capacity(n1 * n2);
            for _ in 0..n1 * n2 {
                let line = lines
                    .next()
                    .ok_or_else(|| CloakError::parse(path, "truncated table block"))?
                    .map_err(|e| CloakError::io(path, e))?;
                let vals: Vec<f64> = line
                    .split_whitespace()
                    .map(|s| s.parse())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| CloakError::parse(path, format!("bad table row: {line}")))?;
                if vals.len() != 5 {
                    return Err(CloakError::parse(path, format!("bad table row: {line}")));
                }
                if param1.last() != Some(&vals[0]) {
                    param1.push(vals[0]);
                }
                if param1.len() == 1 {
                    param2.push(vals[1]);
                }
                rho.push(vals[2]);
                kap.push(vals[3]);
                cph.push(vals[4]);
            }
            if param1.len() != n1 || param2.len() != n2 {
                return Err(CloakError::parse(
                    path,
                    format!(
                        "table block for {} is not a rectangular {n1} x {n2} grid",
                        family.tag()
                    ),
                ));
            }
            tables.push(FamilyTable {
                family,
                param1,
                param2,
                rho_hat: rho,
                kappa_hat: kap,
                c_ph_over_c0: cph,
            });
        }
        let cylinder = tables
            .iter()
            .find(|t| t.family == Family::Cylinder)
            .cloned()
            .ok_or_else(|| CloakError::parse(path, "missing cylinder family block"))?;
        let star = tables
            .iter()
            .find(|t| t.family == Family::Star)
            .cloned()
            .ok_or_else(|| CloakError::parse(path, "missing star family block"))?;
        let star_p_min = star.param1[0];
        let star_p_max = *star.param1.last().unwrap();
        let table = HomogenizationTable {
            cylinder,
            star,
            star_p_min,
            star_p_max,
        };
        table.validate()?;
        Ok(table)
    }
}

/// One closed loop of the feasible-set boundary with per-vertex
/// provenance tags.
#[derive(Debug, Clone)]
pub struct FeasibleLoop {
    pub vertices: Vec<(f64, f64)>,
    pub tags: Vec<Family>,
}

/// The reachable set S ⊂ (ρ̂, κ̂) as the union of the two family
/// images, stored as its boundary loops.
#[derive(Debug, Clone)]
pub struct FeasibleSet {
    pub loops: Vec<FeasibleLoop>,
}

/// Membership tolerance: points within 1e−9 of ∂S count as inside.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Walks the rectangular parameter-space boundary of one family and
/// maps it through the table interpolant into (ρ̂, κ̂).
fn family_image_loop(table: &FamilyTable, samples_per_edge: usize) -> Vec<(f64, f64)> {
    let ((a0, a1), (b0, b1)) = table.param_bounds();
    let m = samples_per_edge;
    let mut params = Vec::with_capacity(4 * m);
    for i in 0..m {
        let t = i as f64 / m as f64;
        params.push((a0 + (a1 - a0) * t, b0));
    }
    for i in 0..m {
        let t = i as f64 / m as f64;
        params.push((a1, b0 + (b1 - b0) * t));
    }
    for i in 0..m {
        let t = i as f64 / m as f64;
        params.push((a1 - (a1 - a0) * t, b1));
    }
    for i in 0..m {
        let t = i as f64 / m as f64;
        params.push((a0, b1 - (b1 - b0) * t));
    }
    let mut out: Vec<(f64, f64)> = params
        .into_iter()
        .map(|(p1, p2)| table.interpolate(p1, p2))
        .collect();
    // drop consecutive duplicates (degenerate box edges collapse)
    out.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-14 && (a.1 - b.1).abs() < 1e-14);
    if out.len() > 1 {
        let first = out[0];
        let last = *out.last().unwrap();
        if (first.0 - last.0).abs() < 1e-14 && (first.1 - last.1).abs() < 1e-14 {
            out.pop();
        }
    }
    out
}

fn to_geo_polygon(loop_pts: &[(f64, f64)]) -> Polygon<f64> {
    let mut coords: Vec<(f64, f64)> = loop_pts.to_vec();
    if let Some(&first) = coords.first() {
        coords.push(first);
    }
    Polygon::new(LineString::from(coords), vec![])
}

/// The image of one family's parameter grid as a set of CCW-oriented
/// triangles (two per grid cell). Triangles are always simple polygons,
/// so folds of the parameter-to-property map cannot produce
/// self-intersecting boundaries the way the raw box-edge image can.
fn family_triangles(table: &FamilyTable) -> Vec<Polygon<f64>> {
    let mut out = Vec::new();
    for i in 0..table.n1() - 1 {
        for j in 0..table.n2() - 1 {
            let q00 = table.at(i, j);
            let q10 = table.at(i + 1, j);
            let q11 = table.at(i + 1, j + 1);
            let q01 = table.at(i, j + 1);
            for tri in [[q00, q10, q11], [q00, q11, q01]] {
                let area2 = (tri[1].0 - tri[0].0) * (tri[2].1 - tri[0].1)
                    - (tri[1].1 - tri[0].1) * (tri[2].0 - tri[0].0);
                if area2.abs() < 1e-14 {
                    continue;
                }
                let pts: Vec<(f64, f64)> = if area2 < 0.0 {
                    vec![tri[2], tri[1], tri[0]]
                } else {
                    tri.to_vec()
                };
                out.push(to_geo_polygon(&pts));
            }
        }
    }
    out
}

/// Traces ∂S⊙ and ∂S★ through the table and unions them into S.
pub fn trace_feasible_boundary(table: &HomogenizationTable) -> Result<FeasibleSet> {
    table.validate()?;
    let cyl_loop = family_image_loop(&table.cylinder, 160);
    let star_loop = family_image_loop(&table.star, 160);

    let mut tris = family_triangles(&table.cylinder);
    tris.extend(family_triangles(&table.star));
    if tris.is_empty() {
        // both families collapse to (at most) a point: S is that point
        let pt = cyl_loop
            .first()
            .or(star_loop.first())
            .copied()
            .ok_or_else(|| CloakError::FeasibleSet("empty family images".into()))?;
        return Ok(FeasibleSet {
            loops: vec![FeasibleLoop {
                vertices: vec![pt],
                tags: vec![Family::Cylinder],
            }],
        });
    }
    let union: MultiPolygon<f64> = geo::algorithm::unary_union(&tris);

    // provenance: a union vertex inherited from whichever source loop
    // passes closest
    let tag_of = |p: (f64, f64)| -> Family {
        let dist_to = |pts: &[(f64, f64)]| -> f64 {
            let n = pts.len();
            (0..n)
                .map(|i| {
                    crate::geometry::dist_point_segment(
                        Point::new(p.0, p.1),
                        Point::new(pts[i].0, pts[i].1),
                        Point::new(pts[(i + 1) % n].0, pts[(i + 1) % n].1),
                    )
                })
                .fold(f64::INFINITY, f64::min)
        };
        if dist_to(&cyl_loop) <= dist_to(&star_loop) {
            Family::Cylinder
        } else {
            Family::Star
        }
    };

    let mut loops = Vec::new();
    for poly in &union {
        let mut rings: Vec<Vec<(f64, f64)>> = vec![poly
            .exterior()
            .coords()
            .map(|c| (c.x, c.y))
            .collect()];
        for hole in poly.interiors() {
            rings.push(hole.coords().map(|c| (c.x, c.y)).collect());
        }
        for mut ring in rings {
            // geo closes rings explicitly; store open
            if ring.len() > 1 && ring.first() == ring.last() {
                ring.pop();
            }
            let tags = ring.iter().map(|&p| tag_of(p)).collect();
            loops.push(FeasibleLoop {
                vertices: ring,
                tags,
            });
        }
    }
    let set = FeasibleSet { loops };
    set.validate()?;
    Ok(set)
}

impl FeasibleSet {
    pub fn validate(&self) -> Result<()> {
        if self.loops.is_empty() {
            return Err(CloakError::FeasibleSet("feasible set has no boundary".into()));
        }
        for (i, lp) in self.loops.iter().enumerate() {
            if lp.vertices.len() != lp.tags.len() {
                return Err(CloakError::FeasibleSet(format!(
                    "loop {i}: {} vertices but {} tags",
                    lp.vertices.len(),
                    lp.tags.len()
                )));
            }
            for &(r, k) in &lp.vertices {
                if r <= 0.0 || k <= 0.0 || !r.is_finite() || !k.is_finite() {
                    return Err(CloakError::FeasibleSet(format!(
                        "loop {i} has a non-positive vertex ({r}, {k})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn polylines(&self) -> impl Iterator<Item = ClosedPolyline> + '_ {
        self.loops.iter().filter(|l| l.vertices.len() >= 3).map(|l| ClosedPolyline {
            vertices: l.vertices.iter().map(|&(r, k)| Point::new(r, k)).collect(),
        })
    }

    /// Even-odd membership across all loops with the boundary counting
    /// as inside (within MEMBERSHIP_TOL).
    pub fn contains(&self, rho_hat: f64, kappa_hat: f64) -> bool {
        let p = Point::new(rho_hat, kappa_hat);
        let mut inside = false;
        for poly in self.polylines() {
            if poly.contains(p) {
                inside = !inside;
            }
        }
        inside || self.boundary_distance(rho_hat, kappa_hat) <= MEMBERSHIP_TOL
    }

    /// Number of connected components: loops enclosing positive area
    /// with CCW orientation (holes are CW after the union).
    pub fn num_components(&self) -> usize {
        self.loops
            .iter()
            .filter(|l| {
                let n = l.vertices.len();
                if n < 3 {
                    return true;
                }
                let signed: f64 = (0..n)
                    .map(|i| {
                        let (x0, y0) = l.vertices[i];
                        let (x1, y1) = l.vertices[(i + 1) % n];
                        x0 * y1 - x1 * y0
                    })
                    .sum();
                signed > 0.0
            })
            .count()
    }

    pub fn boundary_distance(&self, rho_hat: f64, kappa_hat: f64) -> f64 {
        let p = Point::new(rho_hat, kappa_hat);
        self.polylines()
            .map(|poly| poly.boundary_distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Log image S′ = {(v, u) : (e^v, e^u) ∈ S}.
    pub fn to_control_space(&self) -> Result<ControlSpaceSet> {
        for lp in &self.loops {
            for &(r, k) in &lp.vertices {
                if r <= 0.0 || k <= 0.0 {
                    return Err(CloakError::FeasibleSet(format!(
                        "cannot take the log of non-positive vertex ({r}, {k})"
                    )));
                }
            }
        }
        Ok(ControlSpaceSet {
            loops: self
                .loops
                .iter()
                .map(|lp| lp.vertices.iter().map(|&(r, k)| (r.ln(), k.ln())).collect())
                .collect(),
        })
    }

    /// Projection operator for the descent loop. The primary step is
    /// the nearest point of S′ in control space; because the log image
    /// of a chord is not a chord, the exp of that point can fall
    /// slightly outside the linear-space polygon, so a secondary
    /// linear-space projection guarantees (e^v, e^u) ∈ S to the
    /// membership tolerance.
    pub fn control_projector(&self) -> Result<FeasibleProjector> {
        let log = self.to_control_space()?;
        let lin = ControlSpaceSet {
            loops: self.loops.iter().map(|lp| lp.vertices.clone()).collect(),
        };
        Ok(FeasibleProjector { log, lin })
    }

    /// `rho_hat kappa_hat family_tag` rows, loops separated by a blank
    /// line.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, lp) in self.loops.iter().enumerate() {
            if i > 0 {
                writeln!(w)?;
            }
            for (&(r, k), tag) in lp.vertices.iter().zip(&lp.tags) {
                writeln!(w, "{:.17e} {:.17e} {}", r, k, tag.tag())?;
            }
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(reader: R, path: &str) -> Result<FeasibleSet> {
        let mut loops = Vec::new();
        let mut current = FeasibleLoop {
            vertices: Vec::new(),
            tags: Vec::new(),
        };
        for line in reader.lines() {
            let line = line.map_err(|e| CloakError::io(path, e))?;
            if line.trim().is_empty() {
                if !current.vertices.is_empty() {
                    loops.push(std::mem::replace(
                        &mut current,
                        FeasibleLoop {
                            vertices: Vec::new(),
                            tags: Vec::new(),
                        },
                    ));
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(CloakError::parse(path, format!("bad boundary row: {line}")));
            }
            let r: f64 = fields[0]
                .parse()
                .map_err(|_| CloakError::parse(path, "bad rho_hat"))?;
            let k: f64 = fields[1]
                .parse()
                .map_err(|_| CloakError::parse(path, "bad kappa_hat"))?;
            let tag = Family::from_tag(fields[2])
                .ok_or_else(|| CloakError::parse(path, format!("unknown tag: {}", fields[2])))?;
            current.vertices.push((r, k));
            current.tags.push(tag);
        }
        if !current.vertices.is_empty() {
            loops.push(current);
        }
        let set = FeasibleSet { loops };
        set.validate()?;
        Ok(set)
    }
}

/// S′ in control coordinates (v, u) = (ln ρ̂, ln κ̂) with nearest-point
/// projection.
#[derive(Debug, Clone)]
pub struct ControlSpaceSet {
    pub loops: Vec<Vec<(f64, f64)>>,
}

impl ControlSpaceSet {
    fn polylines(&self) -> impl Iterator<Item = ClosedPolyline> + '_ {
        self.loops.iter().filter(|l| l.len() >= 3).map(|l| ClosedPolyline {
            vertices: l.iter().map(|&(v, u)| Point::new(v, u)).collect(),
        })
    }

    pub fn contains(&self, v: f64, u: f64) -> bool {
        let p = Point::new(v, u);
        let mut inside = false;
        let mut near = f64::INFINITY;
        for poly in self.polylines() {
            if poly.contains(p) {
                inside = !inside;
            }
            near = near.min(poly.boundary_distance(p));
        }
        inside || near <= MEMBERSHIP_TOL
    }

    /// Nearest point of S′; interior points are fixed points. Ties
    /// resolve to the lowest (loop, segment) index.
    pub fn project(&self, v: f64, u: f64) -> (f64, f64) {
        if self.contains(v, u) {
            return (v, u);
        }
        let p = Point::new(v, u);
        let mut best = (f64::INFINITY, p);
        for lp in &self.loops {
            let n = lp.len();
            if n == 1 {
                let q = Point::new(lp[0].0, lp[0].1);
                if p.dist(q) < best.0 {
                    best = (p.dist(q), q);
                }
                continue;
            }
            for i in 0..n {
                let a = Point::new(lp[i].0, lp[i].1);
                let b = Point::new(lp[(i + 1) % n].0, lp[(i + 1) % n].1);
                let q = project_point_segment(p, a, b);
                let d = p.dist(q);
                if d < best.0 - 1e-15 {
                    best = (d, q);
                }
            }
        }
        (best.1.x, best.1.y)
    }
}

/// Two-stage feasible-set projector: nearest point of S′ in control
/// space, corrected in linear space when the log/linear chord mismatch
/// leaves the exp image outside S.
#[derive(Debug, Clone)]
pub struct FeasibleProjector {
    log: ControlSpaceSet,
    lin: ControlSpaceSet,
}

impl FeasibleProjector {
    pub fn project(&self, v: f64, u: f64) -> (f64, f64) {
        let (pv, pu) = self.log.project(v, u);
        let (r, k) = (pv.exp(), pu.exp());
        if self.lin.contains(r, k) {
            (pv, pu)
        } else {
            let (r2, k2) = self.lin.project(r, k);
            (r2.ln(), k2.ln())
        }
    }
}

/// Inverse design result for one cell.
#[derive(Debug, Clone)]
pub struct InversionResult {
    pub geometry: CellGeometry,
    pub achieved: (f64, f64),
    pub residual: f64,
}

/// Finds the unit-cell geometry whose homogenized (ρ̂, κ̂) best matches
/// the target: nearest grid sample as the initial guess, then
/// Gauss-Newton on the bilinear interpolant (box-clamped), per family;
/// the better family wins.
pub fn invert_cell(
    target: (f64, f64),
    table: &HomogenizationTable,
) -> Result<InversionResult> {
    let refine = |t: &FamilyTable| -> (f64, f64, (f64, f64), f64) {
        let ((a0, a1), (b0, b1)) = t.param_bounds();
        // nearest interpolated sample on a subdivided grid: the map can
        // fold, so the nearest raw sample may start Gauss-Newton on the
        // wrong branch
        let sub = 4;
        let m1 = sub * (t.n1() - 1);
        let m2 = sub * (t.n2() - 1);
        let mut best = (a0, b0, f64::INFINITY);
        for i in 0..=m1 {
            let p1 = a0 + (a1 - a0) * i as f64 / m1 as f64;
            for j in 0..=m2 {
                let p2 = b0 + (b1 - b0) * j as f64 / m2 as f64;
                let (r, k) = t.interpolate(p1, p2);
                let d = (r - target.0).hypot(k - target.1);
                if d < best.2 {
                    best = (p1, p2, d);
                }
            }
        }
        let mut p1 = best.0;
        let mut p2 = best.1;
        let mut res = {
            let (r, k) = t.interpolate(p1, p2);
            (r - target.0).hypot(k - target.1)
        };
        for _ in 0..50 {
            if res < 1e-3 {
                break;
            }
            let (r, k) = t.interpolate(p1, p2);
            let jac = t.jacobian(p1, p2);
            // solve J d = -(F - target) in the least-squares sense
            let f0 = r - target.0;
            let f1 = k - target.1;
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            let (d1, d2) = if det.abs() > 1e-18 {
                (
                    (-f0 * jac[1][1] + f1 * jac[0][1]) / det,
                    (f0 * jac[1][0] - f1 * jac[0][0]) / det,
                )
            } else {
                // gradient fallback for a singular Jacobian
                let g1 = jac[0][0] * f0 + jac[1][0] * f1;
                let g2 = jac[0][1] * f0 + jac[1][1] * f1;
                let gn = g1.hypot(g2).max(1e-18);
                (-g1 / gn * 1e-3, -g2 / gn * 1e-3)
            };
            // the Jacobian changes across grid cells, so back-track the
            // step until the residual actually drops
            let mut step = 1.0_f64;
            let mut improved = false;
            for _ in 0..12 {
                let c1 = (p1 + step * d1).clamp(a0, a1);
                let c2 = (p2 + step * d2).clamp(b0, b1);
                let (cr, ck) = t.interpolate(c1, c2);
                let cres = (cr - target.0).hypot(ck - target.1);
                if cres < res {
                    p1 = c1;
                    p2 = c2;
                    res = cres;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        let (r, k) = t.interpolate(p1, p2);
        (p1, p2, (r, k), (r - target.0).hypot(k - target.1))
    };

    let model = SyntheticModel::default();
    let (c1, c2, c_ach, c_res) = refine(&table.cylinder);
    let (s1, s2, s_ach, s_res) = refine(&table.star);
    let (geometry, achieved, residual) = if c_res <= s_res {
        (
            CellGeometry::Cylinder(model.cylinder_params_to_geometry(c1, c2)),
            c_ach,
            c_res,
        )
    } else {
        let star = CellGeometryStar {
            p_hat: s1,
            p_hat_cap: s1 + s2 * (table.star_p_max - s1),
            n_points: STAR_POINTS_DEFAULT,
        };
        (CellGeometry::Star(star), s_ach, s_res)
    };
    Ok(InversionResult {
        geometry,
        achieved,
        residual,
    })
}
