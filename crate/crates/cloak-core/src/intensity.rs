//! Scattered-field intensity on a probe circle and the decibel
//! reduction metric between a cloaked and a bare configuration.
//!
//! Intensity uses the locally-plane-wave impedance relation
//! I = |p|² / (2 ρ0 c0); the probe circle sits several wavelengths from
//! the cloak so the outgoing field is locally plane there.

use crate::fem::BackgroundMedium;
use crate::geometry::Point;
use crate::mesh::{Mesh, RegionTag};
use crate::quadrature::p2_shape;
use crate::{CloakError, Complex, Result};
use std::io::Write;

/// Angular profile of an intensity quantity in decibels.
#[derive(Debug, Clone)]
pub struct IntensityProfile {
    /// sample angles in radians, covering [0, 2π)
    pub theta: Vec<f64>,
    pub delta_db: Vec<f64>,
    pub probe_radius: f64,
}

/// Evaluates the P2 field at arbitrary points on a probe circle inside
/// Da. Fails if any probe point falls in Dc or outside the mesh.
pub fn field_on_circle(
    mesh: &Mesh,
    field: &[Complex],
    probe_radius: f64,
    n_theta: usize,
) -> Result<Vec<Complex>> {
    if field.len() != mesh.num_nodes() {
        return Err(CloakError::Geometry(format!(
            "field length {} does not match the {} mesh nodes",
            field.len(),
            mesh.num_nodes()
        )));
    }
    let mut out = Vec::with_capacity(n_theta);
    for i in 0..n_theta {
        let t = i as f64 / n_theta as f64 * std::f64::consts::TAU;
        let x = Point::new(probe_radius * t.cos(), probe_radius * t.sin());
        let (elem, bary) = locate(mesh, x).ok_or_else(|| {
            CloakError::Geometry(format!(
                "probe point at radius {probe_radius}, angle {t:.3} rad lies outside the mesh"
            ))
        })?;
        if mesh.element_region[elem] != RegionTag::Da {
            return Err(CloakError::Geometry(format!(
                "probe circle of radius {probe_radius} intersects the cloak region Dc"
            )));
        }
        let shp = p2_shape(bary);
        let nodes = mesh.triangles[elem];
        let mut val = Complex::ZERO;
        for k in 0..6 {
            val += field[nodes[k]] * shp[k];
        }
        out.push(val);
    }
    Ok(out)
}

/// Finds the element containing `x`, tolerating roundoff on element
/// boundaries. Returns barycentric coordinates for interpolation.
fn locate(mesh: &Mesh, x: Point) -> Option<(usize, [f64; 3])> {
    const EPS: f64 = 1e-10;
    let mut best: Option<(usize, [f64; 3], f64)> = None;
    for t in 0..mesh.triangles.len() {
        let l = mesh.barycentric(t, x);
        let worst = l.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if worst >= -EPS {
            return Some((t, l));
        }
        if best.map(|(_, _, w)| worst > w).unwrap_or(true) {
            best = Some((t, l, worst));
        }
    }
    // accept a slightly-outside point only within a loose snap distance
    match best {
        Some((t, l, w)) if w > -1e-6 => Some((t, l)),
        _ => None,
    }
}

/// Time-averaged intensity of a complex pressure amplitude.
pub fn intensity(p: Complex, medium: &BackgroundMedium) -> f64 {
    p.norm_sqr() / (2.0 * medium.rho0 * medium.c0())
}

/// Δ(θ) = 10 log10(I(θ) / I_inc) for one scattered field, with the
/// unit-amplitude incident intensity as reference.
pub fn delta_profile(
    mesh: &Mesh,
    p_s: &[Complex],
    medium: &BackgroundMedium,
    probe_radius: f64,
    n_theta: usize,
) -> Result<IntensityProfile> {
    let samples = field_on_circle(mesh, p_s, probe_radius, n_theta)?;
    let i_inc = intensity(Complex::from(1.0), medium);
    let theta: Vec<f64> = (0..n_theta)
        .map(|i| i as f64 / n_theta as f64 * std::f64::consts::TAU)
        .collect();
    let delta_db = samples
        .iter()
        .map(|&p| 10.0 * (intensity(p, medium) / i_inc).max(1e-300).log10())
        .collect();
    Ok(IntensityProfile {
        theta,
        delta_db,
        probe_radius,
    })
}

/// Pointwise reduction in dB between a bare and a cloaked run:
/// reduction(θ) = Δ_bare(θ) − Δ_cloaked(θ) = 10 log10(I_bare/I_cloaked).
pub fn intensity_reduction(
    mesh: &Mesh,
    p_s_cloaked: &[Complex],
    p_s_bare: &[Complex],
    medium: &BackgroundMedium,
    probe_radius: f64,
    n_theta: usize,
) -> Result<IntensityProfile> {
    let bare = delta_profile(mesh, p_s_bare, medium, probe_radius, n_theta)?;
    let cloaked = delta_profile(mesh, p_s_cloaked, medium, probe_radius, n_theta)?;
    let delta_db = bare
        .delta_db
        .iter()
        .zip(&cloaked.delta_db)
        .map(|(b, c)| b - c)
        .collect();
    Ok(IntensityProfile {
        theta: bare.theta,
        delta_db,
        probe_radius,
    })
}

impl IntensityProfile {
    pub fn mean_db(&self) -> f64 {
        self.delta_db.iter().sum::<f64>() / self.delta_db.len() as f64
    }

    /// Circular moving average over `window` samples (odd widths keep
    /// the profile centered). Optional post-processing, off by default.
    pub fn smoothed(&self, window: usize) -> IntensityProfile {
        let n = self.delta_db.len();
        let w = window.max(1).min(n);
        let half = w / 2;
        let delta_db = (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for k in 0..w {
                    let idx = (i + n + k - half) % n;
                    acc += self.delta_db[idx];
                }
                acc / w as f64
            })
            .collect();
        IntensityProfile {
            theta: self.theta.clone(),
            delta_db,
            probe_radius: self.probe_radius,
        }
    }

    /// Plain-text export: `theta_deg delta_dB` rows.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (t, d) in self.theta.iter().zip(&self.delta_db) {
            writeln!(w, "{:.6} {:.9}", t.to_degrees(), d)?;
        }
        Ok(())
    }

    /// Parses the format written by [`IntensityProfile::write_text`].
    /// The probe radius is not stored in the file; the caller supplies
    /// context, so it is restored as NaN here.
    pub fn read_text<R: std::io::BufRead>(reader: R, path: &str) -> Result<IntensityProfile> {
        let mut theta = Vec::new();
        let mut delta_db = Vec::new();
        for line in reader.lines() {
            let line = line.map_err(|e| CloakError::io(path, e))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 2 {
                return Err(CloakError::parse(path, format!("bad profile row: {line}")));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| CloakError::parse(path, format!("bad number: {line}")))
            };
            theta.push(parse(f[0])?.to_radians());
            delta_db.push(parse(f[1])?);
        }
        Ok(IntensityProfile {
            theta,
            delta_db,
            probe_radius: f64::NAN,
        })
    }
}

/// Plain-text field export: `x y re(p) im(p)` per node.
pub fn write_field<W: Write>(mesh: &Mesh, field: &[Complex], mut w: W) -> std::io::Result<()> {
    for (node, p) in mesh.nodes.iter().zip(field) {
        writeln!(w, "{:.12e} {:.12e} {:.17e} {:.17e}", node.x, node.y, p.re, p.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use approx::assert_relative_eq;

    fn mesh() -> Mesh {
        let spec = DomainSpec::circular(1.0, 1.6, 4.0, 0.8, 128).unwrap();
        crate::mesh::build_mesh(&spec, 0.25).unwrap()
    }

    #[test]
    fn interpolation_reproduces_quadratics() {
        // P2 interpolation is exact for quadratic fields
        let mesh = mesh();
        let field: Vec<Complex> = mesh
            .nodes
            .iter()
            .map(|p| Complex::new(p.x * p.x - 2.0 * p.y, p.x * p.y))
            .collect();
        let vals = field_on_circle(&mesh, &field, 3.0, 64).unwrap();
        for (i, v) in vals.iter().enumerate() {
            let t = i as f64 / 64.0 * std::f64::consts::TAU;
            let x = 3.0 * t.cos();
            let y = 3.0 * t.sin();
            let want = Complex::new(x * x - 2.0 * y, x * y);
            assert!((v - want).norm() < 1e-9, "sample {i}: {v} vs {want}");
        }
    }

    #[test]
    fn identical_fields_give_zero_reduction() {
        let mesh = mesh();
        let medium = BackgroundMedium::water();
        let field: Vec<Complex> = mesh
            .nodes
            .iter()
            .map(|p| Complex::new(p.x.sin(), p.y.cos()))
            .collect();
        let red = intensity_reduction(&mesh, &field, &field, &medium, 3.0, 90).unwrap();
        for d in red.delta_db {
            assert_relative_eq!(d, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn tenth_amplitude_is_twenty_db() {
        let mesh = mesh();
        let medium = BackgroundMedium::water();
        let bare: Vec<Complex> = mesh
            .nodes
            .iter()
            .map(|p| Complex::new(1.0 + p.x * 0.1, 0.5))
            .collect();
        let cloaked: Vec<Complex> = bare.iter().map(|v| v * 0.1).collect();
        let red = intensity_reduction(&mesh, &cloaked, &bare, &medium, 3.0, 45).unwrap();
        for d in &red.delta_db {
            assert_relative_eq!(*d, 20.0, epsilon = 1e-9);
        }
        assert_relative_eq!(red.mean_db(), 20.0, epsilon = 1e-9);
    }

    #[test]
    fn probe_inside_cloak_is_rejected() {
        let mesh = mesh();
        let field = vec![Complex::ZERO; mesh.num_nodes()];
        let err = field_on_circle(&mesh, &field, 1.3, 16);
        assert!(err.is_err());
        // outside the mesh entirely
        assert!(field_on_circle(&mesh, &field, 4.5, 16).is_err());
    }

    #[test]
    fn smoothing_preserves_mean() {
        let profile = IntensityProfile {
            theta: (0..32).map(|i| i as f64 / 32.0 * std::f64::consts::TAU).collect(),
            delta_db: (0..32).map(|i| (i as f64 * 0.7).sin() * 5.0).collect(),
            probe_radius: 1.0,
        };
        let sm = profile.smoothed(5);
        assert_relative_eq!(sm.mean_db(), profile.mean_db(), epsilon = 1e-12);
        // and reduces variation
        let var = |p: &IntensityProfile| {
            let m = p.mean_db();
            p.delta_db.iter().map(|d| (d - m) * (d - m)).sum::<f64>()
        };
        assert!(var(&sm) < var(&profile));
    }
}
