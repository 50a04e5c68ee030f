//! Browser demo bindings: a small interactive tour of the toolkit.
//!
//! Three operations, sized to stay responsive in a browser tab:
//! 1. analytic rigid-cylinder scattering profiles at any k0·r,
//! 2. a coarse FEM forward solve overlaid on the analytic solution,
//! 3. a live cloak optimization on a small hexagonal control grid.

use cloak_core::analytic::CylinderScatterer;
use cloak_core::fem::{assemble_constants, BackgroundMedium, ControlState, FrequencySpec};
use cloak_core::geometry::{DomainSpec, Point};
use cloak_core::hexgrid::generate_hex_partition;
use cloak_core::intensity::{delta_profile, intensity_reduction};
use cloak_core::laplacian::build_laplacian;
use cloak_core::mesh::{assign_cells, build_mesh, CellPartition, Mesh};
use cloak_core::ocp::{steepest_descent, OcpConfig, OcpProblem};
use cloak_core::Complex;
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Δ(θ) in dB for a rigid cylinder of radius 1 at wavenumber `k0r`,
/// probed on the circle `probe_ratio` × radius; `n` samples over 2π.
#[wasm_bindgen]
pub fn analytic_profile(k0r: f64, probe_ratio: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    if !(k0r > 0.0) || !(probe_ratio >= 1.0) || n == 0 {
        return Err(err("k0r must be positive and the probe outside the cylinder"));
    }
    let medium = BackgroundMedium::water();
    let scat = CylinderScatterer::with_truncation(
        k0r,
        Point::new(1.0, 0.0),
        1.0,
        cloak_core::analytic::default_truncation(k0r),
    )
    .map_err(err)?;
    let mut out = Vec::with_capacity(n);
    let i_inc = 1.0 / (2.0 * medium.rho0 * medium.c0());
    for i in 0..n {
        let t = i as f64 / n as f64 * std::f64::consts::TAU;
        let x = Point::new(probe_ratio * t.cos(), probe_ratio * t.sin());
        let p = scat.scattered(x).map_err(err)?;
        let intensity = p.norm_sqr() / (2.0 * medium.rho0 * medium.c0());
        out.push(10.0 * (intensity / i_inc).max(1e-300).log10());
    }
    Ok(out)
}

/// A small cloak design problem the browser can iterate on: circular
/// obstacle of radius 1, cloak shell to radius 2, truncation at 3.2.
#[wasm_bindgen]
pub struct DemoCloak {
    mesh: Mesh,
    partition: CellPartition,
    ops: Vec<cloak_core::fem::AssembledOperators>,
    lap: cloak_core::laplacian::LaplacianMatrix,
    medium: BackgroundMedium,
    ctrl: ControlState,
    trace_j: Vec<f64>,
    probe_radius: f64,
    bare: Vec<Complex>,
    cloaked: Vec<Complex>,
}

#[wasm_bindgen]
impl DemoCloak {
    /// `k0r` is the nondimensional wavenumber (cylinder radius 1).
    #[wasm_bindgen(constructor)]
    pub fn new(k0r: f64) -> Result<DemoCloak, JsValue> {
        if !(k0r > 0.2) || !(k0r < 6.0) {
            return Err(err("demo problem supports 0.2 < k0r < 6"));
        }
        let medium = BackgroundMedium::water();
        let spec = DomainSpec::circular(1.0, 2.0, 3.2, 0.42, 96).map_err(err)?;
        // resolution follows the wavelength but is capped for interactivity
        let h = (std::f64::consts::TAU / k0r / 10.0).clamp(0.1, 0.21);
        let mesh = build_mesh(&spec, h).map_err(err)?;
        let hexes = generate_hex_partition(&spec).map_err(err)?;
        let partition = assign_cells(&mesh, hexes);
        let freq = FrequencySpec::new(k0r * medium.c0(), Point::new(1.0, 0.0)).map_err(err)?;
        let ops = vec![assemble_constants(&mesh, &partition, &medium, &freq).map_err(err)?];
        let lap = build_laplacian(&partition).map_err(err)?;
        let ctrl = ControlState::zeros(partition.num_cells);

        let mut demo = DemoCloak {
            mesh,
            partition,
            ops,
            lap,
            medium,
            ctrl,
            trace_j: Vec::new(),
            probe_radius: 2.8,
            bare: Vec::new(),
            cloaked: Vec::new(),
        };
        demo.bare = demo.solve_at(&ControlState::zeros(demo.partition.num_cells))?;
        demo.cloaked = demo.bare.clone();
        Ok(demo)
    }

    fn solve_at(&self, ctrl: &ControlState) -> Result<Vec<Complex>, JsValue> {
        let mut solvers = vec![cloak_core::solver::HelmholtzSolver::new()];
        let sols = cloak_core::ocp::solve_fields(&self.ops, &mut solvers, ctrl).map_err(err)?;
        Ok(sols.into_iter().next().unwrap().p_s)
    }

    pub fn num_cells(&self) -> usize {
        self.partition.num_cells
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }

    pub fn iterations(&self) -> usize {
        self.trace_j.len()
    }

    /// Bare-obstacle Δ(θ) from the FEM solve, for overlay against the
    /// analytic profile.
    pub fn bare_profile(&self, n: usize) -> Result<Vec<f64>, JsValue> {
        let p = delta_profile(&self.mesh, &self.bare, &self.medium, self.probe_radius, n)
            .map_err(err)?;
        Ok(p.delta_db)
    }

    /// Runs `n` more descent iterations from the current controls and
    /// returns the cost after each accepted step.
    pub fn step(&mut self, n: usize) -> Result<Vec<f64>, JsValue> {
        let cfg = OcpConfig {
            max_iter: n,
            grad_tol: Some(0.0),
            ..OcpConfig::default()
        };
        let problem = OcpProblem {
            ops: &self.ops,
            lap: &self.lap,
            projector: None,
        };
        let (ctrl, trace) = steepest_descent(&problem, self.ctrl.clone(), &cfg).map_err(err)?;
        self.ctrl = ctrl;
        let js: Vec<f64> = trace.rows.iter().map(|r| r.j).collect();
        self.trace_j.extend(js.iter().copied());
        self.cloaked = self.solve_at(&self.ctrl)?;
        Ok(js)
    }

    /// Pointwise dB reduction of the current design against the bare
    /// obstacle.
    pub fn reduction_profile(&self, n: usize) -> Result<Vec<f64>, JsValue> {
        let p = intensity_reduction(
            &self.mesh,
            &self.cloaked,
            &self.bare,
            &self.medium,
            self.probe_radius,
            n,
        )
        .map_err(err)?;
        Ok(p.delta_db)
    }

    pub fn mean_reduction_db(&self) -> Result<f64, JsValue> {
        let p = self.reduction_profile(360)?;
        Ok(p.iter().sum::<f64>() / p.len() as f64)
    }

    pub fn cost_trace(&self) -> Vec<f64> {
        self.trace_j.clone()
    }

    /// Current cell material ratios, interleaved [rho_hat, kappa_hat]
    /// per cell, for the material map rendering.
    pub fn cell_materials(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.ctrl.num_cells());
        for k in 0..self.ctrl.num_cells() {
            out.push(self.ctrl.v[k].exp());
            out.push(self.ctrl.u[k].exp());
        }
        out
    }

    /// Hexagon centers, interleaved [x, y] per cell.
    pub fn cell_centers(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.partition.num_cells);
        for h in &self.partition.hexes {
            out.push(h.center.x);
            out.push(h.center.y);
        }
        out
    }

    pub fn cell_edge(&self) -> f64 {
        0.42
    }
}
