//! End-to-end pipeline: mesh → forward → optimize → invert → report.
//!
//! Every stage reads its inputs from the run configuration, writes its
//! artifacts into the output directory, and records them in a manifest
//! alongside the config hash, seed, and tool version. Stages recompute
//! the mesh and partition deterministically from the config, so they
//! can run independently while staying mutually consistent; the mesh
//! stage additionally exports both as plain-text artifacts. Identical
//! config and seed produce bit-identical control exports and cost
//! traces.

use crate::config::RunConfig;
use crate::feasible::{
    trace_feasible_boundary, invert_cell, CellGeometry, FeasibleProjector, FeasibleSet,
    HomogenizationTable, SyntheticModel,
};
use crate::fem::{assemble_constants, AssembledOperators, ControlState};
use crate::hexgrid::generate_hex_partition;
use crate::intensity::{delta_profile, intensity_reduction, write_field, IntensityProfile};
use crate::laplacian::{build_laplacian, LaplacianMatrix};
use crate::mesh::{assign_cells, build_mesh, CellPartition, Mesh};
use crate::ocp::{solve_fields, steepest_descent, OcpProblem, OptimizationTrace};
use crate::solver::HelmholtzSolver;
use crate::{CloakError, Complex, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

/// A run's identity: config, resolved output directory, and seed.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: RunConfig,
    /// raw config text, hashed into the manifest
    pub config_text: String,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl RunContext {
    pub fn new(
        config: RunConfig,
        config_text: String,
        out_override: Option<&str>,
        seed_override: Option<u64>,
    ) -> RunContext {
        let out_dir = config.output_path(out_override);
        let seed = seed_override.unwrap_or(config.seed);
        RunContext {
            config,
            config_text,
            out_dir,
            seed,
        }
    }

    pub fn load(
        config_path: &Path,
        out_override: Option<&str>,
        seed_override: Option<u64>,
    ) -> Result<RunContext> {
        let text = fs::read_to_string(config_path)
            .map_err(|e| CloakError::io(config_path.display().to_string(), e))?;
        let config = RunConfig::from_str(&text, &config_path.display().to_string())?;
        Ok(RunContext::new(config, text, out_override, seed_override))
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

// ---------------------------------------------------------------------
// manifest

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Provenance record for one output directory, stored as
/// `manifest.toml`. `complete` is false while a stage is running, so
/// interrupted runs are detectable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub complete: bool,
    #[serde(default, rename = "artifact")]
    pub artifacts: Vec<ArtifactEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

impl Manifest {
    pub fn path(out_dir: &Path) -> PathBuf {
        out_dir.join("manifest.toml")
    }

    /// Loads the existing manifest or starts a fresh one; a config
    /// change invalidates previously recorded artifacts.
    pub fn open(ctx: &RunContext) -> Result<Manifest> {
        let config_sha256 = sha256_hex(ctx.config_text.as_bytes());
        let path = Manifest::path(&ctx.out_dir);
        if let Ok(text) = fs::read_to_string(&path) {
            if let Ok(m) = toml::from_str::<Manifest>(&text) {
                if m.config_sha256 == config_sha256 && m.seed == ctx.seed {
                    return Ok(m);
                }
            }
        }
        Ok(Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256,
            seed: ctx.seed,
            complete: false,
            artifacts: Vec::new(),
        })
    }

    pub fn save(&self, out_dir: &Path) -> Result<()> {
        let path = Manifest::path(out_dir);
        let text = toml::to_string_pretty(self)
            .map_err(|e| CloakError::Config(format!("manifest serialization: {e}")))?;
        fs::write(&path, text).map_err(|e| CloakError::io(path.display().to_string(), e))
    }

    /// Records (or refreshes) one artifact's size and checksum.
    pub fn record(&mut self, out_dir: &Path, name: &str) -> Result<()> {
        let path = out_dir.join(name);
        let bytes =
            fs::read(&path).map_err(|e| CloakError::io(path.display().to_string(), e))?;
        let entry = ArtifactEntry {
            name: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        };
        if let Some(e) = self.artifacts.iter_mut().find(|e| e.name == name) {
            *e = entry;
        } else {
            self.artifacts.push(entry);
        }
        Ok(())
    }
}

/// Runs `body`, bracketing it with incomplete/complete manifest writes
/// and recording every artifact name `body` returns.
fn with_manifest<F>(ctx: &RunContext, body: F) -> Result<()>
where
    F: FnOnce() -> Result<Vec<String>>,
{
    fs::create_dir_all(&ctx.out_dir)
        .map_err(|e| CloakError::io(ctx.out_dir.display().to_string(), e))?;
    let mut manifest = Manifest::open(ctx)?;
    manifest.complete = false;
    manifest.save(&ctx.out_dir)?;
    let names = body()?;
    for name in &names {
        manifest.record(&ctx.out_dir, name)?;
    }
    manifest.complete = true;
    manifest.save(&ctx.out_dir)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    let f = fs::File::create(path).map_err(|e| CloakError::io(path.display().to_string(), e))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    let f = fs::File::open(path).map_err(|e| CloakError::io(path.display().to_string(), e))?;
    Ok(BufReader::new(f))
}

// ---------------------------------------------------------------------
// shared problem assembly

/// Mesh, partition, per-frequency operators, and the control
/// regularization operator for one run.
pub struct Problem {
    pub mesh: Mesh,
    pub partition: CellPartition,
    pub ops: Vec<AssembledOperators>,
    pub lap: LaplacianMatrix,
}

/// Deterministically rebuilds the full discrete problem from a config.
pub fn build_problem(cfg: &RunConfig) -> Result<Problem> {
    let spec = cfg.domain_spec()?;
    let mesh = build_mesh(&spec, cfg.target_h()?)?;
    let hexes = generate_hex_partition(&spec)?;
    let partition = assign_cells(&mesh, hexes);
    let medium = cfg.background();
    let mut ops = Vec::new();
    for freq in cfg.frequency_specs()? {
        ops.push(assemble_constants(&mesh, &partition, &medium, &freq)?);
    }
    let lap = build_laplacian(&partition)?;
    Ok(Problem {
        mesh,
        partition,
        ops,
        lap,
    })
}

/// Loads or synthesizes the homogenization table for a projected run.
pub fn resolve_table(cfg: &RunConfig) -> Result<HomogenizationTable> {
    if let Some(path) = &cfg.feasible.table {
        let path = Path::new(path);
        return HomogenizationTable::read_text(open(path)?, &path.display().to_string());
    }
    let model = SyntheticModel {
        star_p_min: cfg.feasible.star_p_min.ok_or_else(|| {
            CloakError::Config("feasible.star_p_min required to generate a table".into())
        })?,
        star_p_max: cfg.feasible.star_p_max.ok_or_else(|| {
            CloakError::Config("feasible.star_p_max required to generate a table".into())
        })?,
        ..SyntheticModel::default()
    };
    model.generate_table(cfg.feasible.grid, cfg.feasible.grid)
}

/// Loads or traces the feasible-set boundary for a projected run.
pub fn resolve_feasible_set(cfg: &RunConfig) -> Result<FeasibleSet> {
    if let Some(path) = &cfg.feasible.set {
        let path = Path::new(path);
        return FeasibleSet::read_text(open(path)?, &path.display().to_string());
    }
    trace_feasible_boundary(&resolve_table(cfg)?)
}

// ---------------------------------------------------------------------
// stage: mesh

/// Writes the partition artifact: a header with cell count and edge
/// length, the hexagon centers, then one cell index per element (-1
/// for elements owned by no cell).
pub fn write_partition<W: Write>(partition: &CellPartition, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "cells {} elements {}",
        partition.num_cells,
        partition.cell_of_element.len()
    )?;
    for h in &partition.hexes {
        writeln!(w, "{:.17e} {:.17e}", h.center.x, h.center.y)?;
    }
    for c in &partition.cell_of_element {
        match c {
            Some(k) => writeln!(w, "{k}")?,
            None => writeln!(w, "-1")?,
        }
    }
    Ok(())
}

pub fn stage_mesh(ctx: &RunContext) -> Result<()> {
    with_manifest(ctx, || {
        let problem = build_problem(&ctx.config)?;
        let mesh_path = ctx.artifact("mesh.txt");
        problem
            .mesh
            .write_text(create(&mesh_path)?)
            .map_err(|e| CloakError::io(mesh_path.display().to_string(), e))?;
        let part_path = ctx.artifact("partition.txt");
        write_partition(&problem.partition, create(&part_path)?)
            .map_err(|e| CloakError::io(part_path.display().to_string(), e))?;
        Ok(vec!["mesh.txt".into(), "partition.txt".into()])
    })
}

// ---------------------------------------------------------------------
// stage: forward

fn field_name(prefix: &str, i: usize) -> String {
    format!("{prefix}_{i}.txt")
}

fn write_profiles(
    ctx: &RunContext,
    problem: &Problem,
    solutions: &[Vec<Complex>],
    field_prefix: &str,
    delta_prefix: &str,
) -> Result<Vec<String>> {
    let medium = ctx.config.background();
    let mut names = Vec::new();
    for (i, p_s) in solutions.iter().enumerate() {
        let fname = field_name(field_prefix, i);
        let fpath = ctx.artifact(&fname);
        write_field(&problem.mesh, p_s, create(&fpath)?)
            .map_err(|e| CloakError::io(fpath.display().to_string(), e))?;
        names.push(fname);

        let profile = delta_profile(
            &problem.mesh,
            p_s,
            &medium,
            ctx.config.probe.radius,
            ctx.config.probe.n_theta,
        )?;
        let dname = field_name(delta_prefix, i);
        let dpath = ctx.artifact(&dname);
        profile
            .write_text(create(&dpath)?)
            .map_err(|e| CloakError::io(dpath.display().to_string(), e))?;
        names.push(dname);
    }
    Ok(names)
}

fn solve_bare(problem: &Problem) -> Result<Vec<Vec<Complex>>> {
    let ctrl = ControlState::zeros(problem.partition.num_cells);
    let mut solvers: Vec<HelmholtzSolver> =
        problem.ops.iter().map(|_| HelmholtzSolver::new()).collect();
    let sols = solve_fields(&problem.ops, &mut solvers, &ctrl)?;
    Ok(sols.into_iter().map(|s| s.p_s).collect())
}

/// Bare-obstacle forward solve: scattered fields and baseline Δ(θ)
/// profiles for every frequency.
pub fn stage_forward(ctx: &RunContext) -> Result<()> {
    with_manifest(ctx, || {
        let problem = build_problem(&ctx.config)?;
        let fields = solve_bare(&problem)?;
        write_profiles(ctx, &problem, &fields, "bare_field", "delta_bare")
    })
}

// ---------------------------------------------------------------------
// stage: optimize

/// `cell_index v u rho_hat kappa_hat` rows.
pub fn write_controls<W: Write>(ctrl: &ControlState, mut w: W) -> std::io::Result<()> {
    for k in 0..ctrl.num_cells() {
        writeln!(
            w,
            "{} {:.17e} {:.17e} {:.17e} {:.17e}",
            k,
            ctrl.v[k],
            ctrl.u[k],
            ctrl.v[k].exp(),
            ctrl.u[k].exp()
        )?;
    }
    Ok(())
}

pub fn read_controls<R: BufRead>(reader: R, path: &str) -> Result<ControlState> {
    let mut v = Vec::new();
    let mut u = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| CloakError::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(CloakError::parse(path, format!("bad control row: {line}")));
        }
        let idx: usize = f[0]
            .parse()
            .map_err(|_| CloakError::parse(path, format!("bad cell index: {line}")))?;
        if idx != v.len() {
            return Err(CloakError::parse(path, format!("out-of-order cell {idx}")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| CloakError::parse(path, format!("bad control value: {line}")))
        };
        v.push(parse(f[1])?);
        u.push(parse(f[2])?);
    }
    Ok(ControlState { v, u })
}

/// Runs (projected) steepest descent and exports the optimized
/// controls, the iteration trace, the cloaked fields, their Δ(θ), and
/// the pointwise reduction against the bare baseline.
pub fn stage_optimize(ctx: &RunContext) -> Result<()> {
    with_manifest(ctx, || {
        let cfg = &ctx.config;
        let problem = build_problem(cfg)?;
        let mut names = Vec::new();

        // a projected run also exports the table and traced set so the
        // feasibility of the exported controls is externally checkable
        let control_set: Option<FeasibleProjector> = if cfg.projected() {
            let table = resolve_table(cfg)?;
            let tpath = ctx.artifact("table.txt");
            table
                .write_text(create(&tpath)?)
                .map_err(|e| CloakError::io(tpath.display().to_string(), e))?;
            names.push("table.txt".into());
            let set = resolve_feasible_set(cfg)?;
            let spath = ctx.artifact("feasible_set.txt");
            set.write_text(create(&spath)?)
                .map_err(|e| CloakError::io(spath.display().to_string(), e))?;
            names.push("feasible_set.txt".into());
            Some(set.control_projector()?)
        } else {
            None
        };
        let projector = control_set
            .as_ref()
            .map(|s| move |v: f64, u: f64| s.project(v, u));

        let ocp_cfg = cfg.ocp_config();
        let problem_ref = OcpProblem {
            ops: &problem.ops,
            lap: &problem.lap,
            projector: projector
                .as_ref()
                .map(|p| p as &dyn Fn(f64, f64) -> (f64, f64)),
        };
        let init = ControlState::zeros(problem.partition.num_cells);
        let (ctrl, trace) = steepest_descent(&problem_ref, init, &ocp_cfg)?;

        let cpath = ctx.artifact("controls.txt");
        write_controls(&ctrl, create(&cpath)?)
            .map_err(|e| CloakError::io(cpath.display().to_string(), e))?;
        names.push("controls.txt".into());
        let tpath = ctx.artifact("trace.txt");
        trace
            .write_text(create(&tpath)?)
            .map_err(|e| CloakError::io(tpath.display().to_string(), e))?;
        names.push("trace.txt".into());

        // cloaked fields at the final controls
        let mut solvers: Vec<HelmholtzSolver> =
            problem.ops.iter().map(|_| HelmholtzSolver::new()).collect();
        let sols = solve_fields(&problem.ops, &mut solvers, &ctrl)?;
        let cloaked: Vec<Vec<Complex>> = sols.into_iter().map(|s| s.p_s).collect();
        names.extend(write_profiles(
            ctx,
            &problem,
            &cloaked,
            "cloaked_field",
            "delta_cloaked",
        )?);

        // reduction against the bare baseline, per frequency
        let bare = solve_bare(&problem)?;
        let medium = cfg.background();
        for (i, (pc, pb)) in cloaked.iter().zip(&bare).enumerate() {
            let red = intensity_reduction(
                &problem.mesh,
                pc,
                pb,
                &medium,
                cfg.probe.radius,
                cfg.probe.n_theta,
            )?;
            let rname = field_name("reduction", i);
            let rpath = ctx.artifact(&rname);
            red.write_text(create(&rpath)?)
                .map_err(|e| CloakError::io(rpath.display().to_string(), e))?;
            names.push(rname);
        }
        Ok(names)
    })
}

// ---------------------------------------------------------------------
// stage: invert

/// Maps the exported controls back to unit-cell geometries:
/// `cell family param1 param2 target_rho target_kappa achieved_rho
/// achieved_kappa residual` rows.
pub fn stage_invert(ctx: &RunContext) -> Result<()> {
    with_manifest(ctx, || {
        let cfg = &ctx.config;
        let cpath = ctx.artifact("controls.txt");
        let ctrl = read_controls(open(&cpath)?, &cpath.display().to_string())?;
        let table = resolve_table(cfg)?;
        let gpath = ctx.artifact("geometry.txt");
        let mut w = create(&gpath)?;
        for k in 0..ctrl.num_cells() {
            let target = (ctrl.v[k].exp(), ctrl.u[k].exp());
            let res = invert_cell(target, &table)?;
            let (fam, p1, p2) = match res.geometry {
                CellGeometry::Cylinder(c) => ("cylinder", c.r_in_hat, c.r_out_hat),
                CellGeometry::Star(s) => ("star", s.p_hat, s.p_hat_cap),
            };
            writeln!(
                w,
                "{} {} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}",
                k, fam, p1, p2, target.0, target.1, res.achieved.0, res.achieved.1, res.residual
            )
            .map_err(|e| CloakError::io(gpath.display().to_string(), e))?;
        }
        drop(w);
        Ok(vec!["geometry.txt".into()])
    })
}

// ---------------------------------------------------------------------
// stage: report

/// Per-frequency and overall performance summary.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub mean_reduction_db: Vec<f64>,
    pub iterations: usize,
    pub final_cost: f64,
    pub feasibility_violations: usize,
}

/// Collects the summary from previously written artifacts.
pub fn summarize(ctx: &RunContext) -> Result<RunSummary> {
    let cfg = &ctx.config;
    let mut mean_reduction_db = Vec::new();
    for i in 0..cfg.frequencies.len() {
        let rpath = ctx.artifact(&field_name("reduction", i));
        let profile =
            IntensityProfile::read_text(open(&rpath)?, &rpath.display().to_string())?;
        mean_reduction_db.push(profile.mean_db());
    }
    let tpath = ctx.artifact("trace.txt");
    let trace = OptimizationTrace::read_text(open(&tpath)?, &tpath.display().to_string())?;
    let iterations = trace.rows.len();
    let final_cost = trace.rows.last().map(|r| r.j).unwrap_or(f64::NAN);

    let cpath = ctx.artifact("controls.txt");
    let ctrl = read_controls(open(&cpath)?, &cpath.display().to_string())?;
    let feasibility_violations = if cfg.projected() {
        let set = resolve_feasible_set(cfg)?;
        (0..ctrl.num_cells())
            .filter(|&k| !set.contains(ctrl.v[k].exp(), ctrl.u[k].exp()))
            .count()
    } else {
        0
    };
    Ok(RunSummary {
        mean_reduction_db,
        iterations,
        final_cost,
        feasibility_violations,
    })
}

pub fn stage_report(ctx: &RunContext) -> Result<()> {
    with_manifest(ctx, || {
        let summary = summarize(ctx)?;
        let spath = ctx.artifact("summary.txt");
        let mut w = create(&spath)?;
        let io = |e| CloakError::io(spath.display().to_string(), e);
        for (i, db) in summary.mean_reduction_db.iter().enumerate() {
            writeln!(w, "frequency {i} mean_reduction_db {db:.6}").map_err(io)?;
        }
        writeln!(w, "iterations {}", summary.iterations).map_err(io)?;
        writeln!(w, "final_cost {:.17e}", summary.final_cost).map_err(io)?;
        writeln!(w, "feasibility_violations {}", summary.feasibility_violations).map_err(io)?;
        drop(w);
        Ok(vec!["summary.txt".into()])
    })
}

/// All five stages in order.
pub fn run_all(ctx: &RunContext) -> Result<()> {
    stage_mesh(ctx)?;
    stage_forward(ctx)?;
    stage_optimize(ctx)?;
    stage_invert(ctx)?;
    stage_report(ctx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(out_dir: &Path, extra: &str) -> (RunConfig, String) {
        let text = format!(
            r#"
output_dir = "{}"

[domain]
kind = "circle"
obstacle_radius = 1.0
cloak_radius = 2.0
outer_radius = 3.2
cell_edge = 0.42

[medium]
rho0 = 998.0
kappa0 = 2.2e6

[[frequency]]
lambda_ratio = 3.14159265358979
direction = [1.0, 0.0]

[mesh]
target_h = 0.21

[ocp]
max_iter = 3

[probe]
radius = 2.8
{extra}
"#,
            out_dir.display()
        );
        (RunConfig::from_str(&text, "test").unwrap(), text)
    }

    fn tmp_dir(tag: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("cloak_pipeline_{tag}_{}", std::process::id()));
        let _ = fs::remove_dir_all(&d);
        d
    }

    #[test]
    fn full_pipeline_produces_all_artifacts_and_manifest() {
        let dir = tmp_dir("full");
        // star bounds let the invert stage synthesize its table even
        // though the optimization itself is unconstrained
        let (cfg, text) = tiny_config(
            &dir,
            "\n[feasible]\nstar_p_min = 0.12\nstar_p_max = 0.64\ngrid = 13\n",
        );
        let ctx = RunContext::new(cfg, text, None, None);
        run_all(&ctx).unwrap();

        for name in [
            "mesh.txt",
            "partition.txt",
            "bare_field_0.txt",
            "delta_bare_0.txt",
            "controls.txt",
            "trace.txt",
            "cloaked_field_0.txt",
            "delta_cloaked_0.txt",
            "reduction_0.txt",
            "geometry.txt",
            "summary.txt",
            "manifest.toml",
        ] {
            assert!(ctx.artifact(name).exists(), "missing {name}");
        }
        let manifest: Manifest =
            toml::from_str(&fs::read_to_string(ctx.artifact("manifest.toml")).unwrap()).unwrap();
        assert!(manifest.complete);
        assert_eq!(manifest.config_sha256, sha256_hex(ctx.config_text.as_bytes()));
        for entry in &manifest.artifacts {
            let bytes = fs::read(ctx.artifact(&entry.name)).unwrap();
            assert_eq!(entry.bytes, bytes.len() as u64, "{}", entry.name);
            assert_eq!(entry.sha256, sha256_hex(&bytes), "{}", entry.name);
        }
        // every artifact is recorded
        for name in ["mesh.txt", "controls.txt", "summary.txt"] {
            assert!(manifest.artifacts.iter().any(|e| e.name == name));
        }
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn zero_iterations_reproduce_the_bare_field() {
        let dir = tmp_dir("zero");
        let (cfg, text) = tiny_config(&dir, "");
        let mut cfg = cfg;
        cfg.ocp.max_iter = 0;
        let ctx = RunContext::new(cfg, text, None, None);
        stage_forward(&ctx).unwrap();
        stage_optimize(&ctx).unwrap();
        let bare = fs::read(ctx.artifact("bare_field_0.txt")).unwrap();
        let cloaked = fs::read(ctx.artifact("cloaked_field_0.txt")).unwrap();
        assert_eq!(bare, cloaked);
        let ctrl = read_controls(
            open(&ctx.artifact("controls.txt")).unwrap(),
            "controls.txt",
        )
        .unwrap();
        assert!(ctrl.v.iter().chain(&ctrl.u).all(|&x| x == 0.0));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn identical_config_and_seed_reproduce_bitwise() {
        let dir_a = tmp_dir("det_a");
        let dir_b = tmp_dir("det_b");
        let (cfg_a, text) = tiny_config(&dir_a, "");
        let (cfg_b, _) = tiny_config(&dir_b, "");
        // same config content, different output directories
        let ctx_a = RunContext::new(cfg_a, text.clone(), None, Some(7));
        let ctx_b = RunContext::new(cfg_b, text, None, Some(7));
        stage_optimize(&ctx_a).unwrap();
        stage_optimize(&ctx_b).unwrap();
        assert_eq!(
            fs::read(ctx_a.artifact("controls.txt")).unwrap(),
            fs::read(ctx_b.artifact("controls.txt")).unwrap()
        );
        assert_eq!(
            fs::read(ctx_a.artifact("trace.txt")).unwrap(),
            fs::read(ctx_b.artifact("trace.txt")).unwrap()
        );
        fs::remove_dir_all(&dir_a).unwrap();
        fs::remove_dir_all(&dir_b).unwrap();
    }

    #[test]
    fn projected_run_exports_feasible_controls_and_inverts() {
        let dir = tmp_dir("proj");
        let (cfg, text) = tiny_config(
            &dir,
            "\n[feasible]\nmode = \"projected\"\nstar_p_min = 0.12\nstar_p_max = 0.64\ngrid = 13\n",
        );
        let ctx = RunContext::new(cfg, text, None, None);
        stage_optimize(&ctx).unwrap();
        stage_invert(&ctx).unwrap();
        stage_report(&ctx).unwrap();

        let set = resolve_feasible_set(&ctx.config).unwrap();
        let ctrl = read_controls(
            open(&ctx.artifact("controls.txt")).unwrap(),
            "controls.txt",
        )
        .unwrap();
        for k in 0..ctrl.num_cells() {
            assert!(
                set.contains(ctrl.v[k].exp(), ctrl.u[k].exp()),
                "cell {k} left the feasible set"
            );
        }
        let summary = summarize(&ctx).unwrap();
        assert_eq!(summary.feasibility_violations, 0);
        assert_eq!(summary.mean_reduction_db.len(), 1);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn trace_text_round_trips() {
        let dir = tmp_dir("trace");
        let (cfg, text) = tiny_config(&dir, "");
        let ctx = RunContext::new(cfg, text, None, None);
        stage_optimize(&ctx).unwrap();
        let tpath = ctx.artifact("trace.txt");
        let trace = OptimizationTrace::read_text(open(&tpath).unwrap(), "trace.txt").unwrap();
        assert!(!trace.rows.is_empty());
        assert!(trace.is_monotone());
        fs::remove_dir_all(&dir).unwrap();
    }
}
