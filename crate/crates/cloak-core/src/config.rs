//! Structured plain-text (TOML) run configuration shared by the CLI
//! and the pipeline stages.
//!
//! A config fully determines a run: domain geometry, background medium,
//! incident frequencies, mesh resolution, optimizer settings, the
//! feasibility mode, and probe/export parameters. Frequencies may be
//! given as absolute angular frequencies or as wavelength ratios
//! relative to the domain's characteristic length, matching how the
//! benchmarks are usually stated (e.g. lambda/r = 0.69).

use crate::fem::{BackgroundMedium, FrequencySpec};
use crate::geometry::{ClosedPolyline, DomainSpec, Point};
use crate::ocp::OcpConfig;
use crate::{CloakError, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// "circle" or "polygon"
    pub kind: String,
    /// circle: obstacle radius
    pub obstacle_radius: Option<f64>,
    /// polygon: obstacle vertices (closed, CCW)
    pub obstacle: Option<Vec<[f64; 2]>>,
    /// circle: outer radius of the cloak annulus
    pub cloak_radius: Option<f64>,
    /// polygon: cloak boundary as a scale factor of the obstacle about
    /// its centroid
    pub cloak_scale: Option<f64>,
    pub outer_radius: f64,
    /// hexagonal control-cell edge length
    pub cell_edge: f64,
    /// circle discretization segments
    #[serde(default = "default_segments")]
    pub segments: usize,
    /// length used to convert wavelength ratios; defaults to the
    /// obstacle radius for circles, required for polygons
    pub characteristic_length: Option<f64>,
}

fn default_segments() -> usize {
    256
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub rho0: f64,
    pub kappa0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyConfig {
    /// absolute angular frequency [rad/s]; exclusive with lambda_ratio
    pub omega: Option<f64>,
    /// wavelength as a fraction of the characteristic length
    pub lambda_ratio: Option<f64>,
    pub direction: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// absolute target element size; exclusive with target_h_over_lambda
    pub target_h: Option<f64>,
    /// element size as a fraction of the shortest incident wavelength
    pub target_h_over_lambda: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OcpSection {
    pub lambda_v: f64,
    pub lambda_u: f64,
    pub max_iter: usize,
    pub grad_tol: Option<f64>,
    pub armijo_c1: f64,
    pub armijo_shrink: f64,
    pub tau0: f64,
    pub use_laplacian: bool,
}

impl Default for OcpSection {
    fn default() -> Self {
        let d = OcpConfig::default();
        OcpSection {
            lambda_v: d.lambda_v,
            lambda_u: d.lambda_u,
            max_iter: d.max_iter,
            grad_tol: d.grad_tol,
            armijo_c1: d.armijo_c1,
            armijo_shrink: d.armijo_shrink,
            tau0: d.tau0,
            use_laplacian: d.use_laplacian,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibleConfig {
    /// "unconstrained" or "projected"
    #[serde(default = "default_feasible_mode")]
    pub mode: String,
    /// path to a homogenization table; when absent and projection is
    /// requested, a synthetic table is generated (requires star bounds)
    pub table: Option<String>,
    /// path to a precomputed feasible-set boundary file
    pub set: Option<String>,
    /// star family parameter bounds, required when generating a table
    /// (the source material never fixes them numerically)
    pub star_p_min: Option<f64>,
    pub star_p_max: Option<f64>,
    /// samples per table axis when generating
    #[serde(default = "default_table_grid")]
    pub grid: usize,
}

fn default_table_grid() -> usize {
    25
}

fn default_feasible_mode() -> String {
    "unconstrained".into()
}

impl Default for FeasibleConfig {
    fn default() -> Self {
        FeasibleConfig {
            mode: "unconstrained".into(),
            table: None,
            set: None,
            star_p_min: None,
            star_p_max: None,
            grid: default_table_grid(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub radius: f64,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
}

fn default_n_theta() -> usize {
    360
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub medium: MediumConfig,
    #[serde(rename = "frequency")]
    pub frequencies: Vec<FrequencyConfig>,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub ocp: OcpSection,
    #[serde(default)]
    pub feasible: FeasibleConfig,
    pub probe: ProbeConfig,
    /// output directory; the CLI --out flag overrides it
    #[serde(default = "default_out_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub seed: u64,
}

fn default_out_dir() -> String {
    "out".into()
}

impl RunConfig {
    pub fn from_str(text: &str, origin: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text)
            .map_err(|e| CloakError::parse(origin, format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CloakError::io(path.display().to_string(), e))?;
        Self::from_str(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        let key = |k: &str| CloakError::Config(format!("config key `{k}` is invalid or missing"));
        match self.domain.kind.as_str() {
            "circle" => {
                if self.domain.obstacle_radius.is_none() {
                    return Err(key("domain.obstacle_radius"));
                }
                if self.domain.cloak_radius.is_none() {
                    return Err(key("domain.cloak_radius"));
                }
            }
            "polygon" => {
                match &self.domain.obstacle {
                    Some(v) if v.len() >= 3 => {}
                    _ => return Err(key("domain.obstacle")),
                }
                if self.domain.cloak_scale.map_or(true, |s| s <= 1.0) {
                    return Err(key("domain.cloak_scale"));
                }
                if self.domain.characteristic_length.map_or(true, |l| l <= 0.0) {
                    return Err(key("domain.characteristic_length"));
                }
            }
            other => {
                return Err(CloakError::Config(format!(
                    "config key `domain.kind` must be \"circle\" or \"polygon\", got \"{other}\""
                )));
            }
        }
        if self.domain.outer_radius <= 0.0 {
            return Err(key("domain.outer_radius"));
        }
        if self.domain.cell_edge <= 0.0 {
            return Err(key("domain.cell_edge"));
        }
        self.background().validate()?;
        if self.frequencies.is_empty() {
            return Err(CloakError::Config(
                "config key `frequency` must list at least one incident wave".into(),
            ));
        }
        for (i, f) in self.frequencies.iter().enumerate() {
            match (f.omega, f.lambda_ratio) {
                (Some(w), None) if w > 0.0 => {}
                (None, Some(r)) if r > 0.0 => {}
                _ => {
                    return Err(CloakError::Config(format!(
                        "config key `frequency[{i}]` needs exactly one of positive `omega` \
                         or `lambda_ratio`"
                    )));
                }
            }
        }
        match (self.mesh.target_h, self.mesh.target_h_over_lambda) {
            (Some(h), None) if h > 0.0 => {}
            (None, Some(r)) if r > 0.0 => {}
            _ => {
                return Err(CloakError::Config(
                    "config key `mesh` needs exactly one of positive `target_h` or \
                     `target_h_over_lambda`"
                        .into(),
                ));
            }
        }
        match self.feasible.mode.as_str() {
            "unconstrained" | "projected" => {}
            other => {
                return Err(CloakError::Config(format!(
                    "config key `feasible.mode` must be \"unconstrained\" or \"projected\", \
                     got \"{other}\""
                )));
            }
        }
        if self.feasible.mode == "projected"
            && self.feasible.table.is_none()
            && self.feasible.set.is_none()
        {
            // synthetic generation: the star bounds have no defaults
            if self.feasible.star_p_min.is_none() || self.feasible.star_p_max.is_none() {
                return Err(CloakError::Config(
                    "config keys `feasible.star_p_min` and `feasible.star_p_max` are \
                     required to generate a synthetic table (no defaults exist)"
                        .into(),
                ));
            }
        }
        if self.probe.radius <= 0.0 || self.probe.radius >= self.domain.outer_radius {
            return Err(CloakError::Config(
                "config key `probe.radius` must lie strictly inside the outer circle".into(),
            ));
        }
        self.ocp_config().validate()?;
        Ok(())
    }

    pub fn background(&self) -> BackgroundMedium {
        BackgroundMedium {
            rho0: self.medium.rho0,
            kappa0: self.medium.kappa0,
        }
    }

    pub fn characteristic_length(&self) -> f64 {
        self.domain
            .characteristic_length
            .or(self.domain.obstacle_radius)
            .expect("validated config has a characteristic length")
    }

    pub fn domain_spec(&self) -> Result<DomainSpec> {
        match self.domain.kind.as_str() {
            "circle" => DomainSpec::circular(
                self.domain.obstacle_radius.unwrap(),
                self.domain.cloak_radius.unwrap(),
                self.domain.outer_radius,
                self.domain.cell_edge,
                self.domain.segments,
            ),
            "polygon" => {
                let verts: Vec<Point> = self
                    .domain
                    .obstacle
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|&[x, y]| Point::new(x, y))
                    .collect();
                let obstacle = ClosedPolyline::new(verts)?;
                let c = obstacle.centroid();
                let s = self.domain.cloak_scale.unwrap();
                let cloak = ClosedPolyline::new(
                    obstacle
                        .vertices
                        .iter()
                        .map(|&p| Point::new(c.x + (p.x - c.x) * s, c.y + (p.y - c.y) * s))
                        .collect(),
                )?;
                DomainSpec::new(obstacle, cloak, self.domain.outer_radius, self.domain.cell_edge)
            }
            _ => unreachable!("validated config"),
        }
    }

    /// Incident frequencies in absolute angular frequency, converting
    /// wavelength ratios with the configured medium and characteristic
    /// length.
    pub fn frequency_specs(&self) -> Result<Vec<FrequencySpec>> {
        let medium = self.background();
        let c0 = medium.c0();
        let l = self.characteristic_length();
        self.frequencies
            .iter()
            .map(|f| {
                let omega = match (f.omega, f.lambda_ratio) {
                    (Some(w), _) => w,
                    (None, Some(r)) => std::f64::consts::TAU * c0 / (r * l),
                    _ => unreachable!("validated config"),
                };
                FrequencySpec::new(omega, Point::new(f.direction[0], f.direction[1]))
            })
            .collect()
    }

    /// Mesh element size target; ratio form uses the shortest incident
    /// wavelength.
    pub fn target_h(&self) -> Result<f64> {
        if let Some(h) = self.mesh.target_h {
            return Ok(h);
        }
        let ratio = self.mesh.target_h_over_lambda.unwrap();
        let medium = self.background();
        let min_lambda = self
            .frequency_specs()?
            .iter()
            .map(|f| f.wavelength(&medium))
            .fold(f64::INFINITY, f64::min);
        Ok(ratio * min_lambda)
    }

    pub fn ocp_config(&self) -> OcpConfig {
        OcpConfig {
            lambda_v: self.ocp.lambda_v,
            lambda_u: self.ocp.lambda_u,
            max_iter: self.ocp.max_iter,
            grad_tol: self.ocp.grad_tol,
            armijo_c1: self.ocp.armijo_c1,
            armijo_shrink: self.ocp.armijo_shrink,
            tau0: self.ocp.tau0,
            use_laplacian: self.ocp.use_laplacian,
        }
    }

    pub fn projected(&self) -> bool {
        self.feasible.mode == "projected"
    }

    pub fn output_path(&self, override_dir: Option<&str>) -> PathBuf {
        PathBuf::from(override_dir.unwrap_or(&self.output_dir))
    }
}
