//! Acceptance suite: one test per acceptance criterion, each printing a
//! pass line on success (visible with `--nocapture`; failures panic
//! with the measured values).
//!
//! The three bundled run configurations are executed at most once each
//! and shared between criteria through lazily initialized statics; with
//! the default single-process test harness this costs one optimization
//! run per configuration regardless of which criteria consume it.

use cloak_core::analytic::CylinderScatterer;
use cloak_core::config::RunConfig;
use cloak_core::feasible::trace_feasible_boundary;
use cloak_core::fem::{assemble_constants, ControlState, FrequencySpec};
use cloak_core::geometry::{DomainSpec, Point};
use cloak_core::hexgrid::generate_hex_partition;
use cloak_core::intensity::field_on_circle;
use cloak_core::laplacian::{build_laplacian, LaplacianMatrix};
use cloak_core::mesh::{assign_cells, build_mesh, CellPartition};
use cloak_core::ocp::{
    cost, reduced_gradient, solve_fields, OcpConfig, OptimizationTrace,
};
use cloak_core::pipeline::{
    build_problem, read_controls, resolve_feasible_set, stage_forward, stage_mesh, stage_optimize,
    stage_report, summarize, Problem, RunContext, RunSummary,
};
use cloak_core::solver::HelmholtzSolver;
use cloak_core::sparse::{norm2, CooMat};
use cloak_core::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fs;
use std::io::BufReader;
use std::path::PathBuf;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

/// Wall-clock budgets are only meaningful if timed sections do not share
/// the CPU with another criterion's optimization run, so every timed or
/// heavy section takes this lock first.
static TIMED: Mutex<()> = Mutex::new(());

fn timed_section() -> MutexGuard<'static, ()> {
    TIMED.lock().unwrap_or_else(|e| e.into_inner())
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn out_dir(tag: &str) -> String {
    let d = std::env::temp_dir().join(format!("cloak_acceptance_{tag}"));
    let _ = fs::remove_dir_all(&d);
    d.display().to_string()
}

/// One completed optimization run of a bundled config.
struct OptRun {
    ctx: RunContext,
    summary: RunSummary,
    trace: OptimizationTrace,
    optimize_wall: Duration,
    num_cells: usize,
}

fn execute(config: &str, tag: &str) -> OptRun {
    let _cpu = timed_section();
    let out = out_dir(tag);
    let ctx = RunContext::load(&config_path(config), Some(&out), None)
        .unwrap_or_else(|e| panic!("loading {config}: {e}"));
    stage_mesh(&ctx).unwrap();
    stage_forward(&ctx).unwrap();
    let t0 = Instant::now();
    stage_optimize(&ctx).unwrap();
    let optimize_wall = t0.elapsed();
    stage_report(&ctx).unwrap();
    let summary = summarize(&ctx).unwrap();
    let trace = OptimizationTrace::read_text(
        BufReader::new(fs::File::open(ctx.artifact("trace.txt")).unwrap()),
        "trace.txt",
    )
    .unwrap();
    let partition_header = fs::read_to_string(ctx.artifact("partition.txt")).unwrap();
    let num_cells: usize = partition_header
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    OptRun {
        ctx,
        summary,
        trace,
        optimize_wall,
        num_cells,
    }
}

static CIRCLE_UNC: OnceLock<OptRun> = OnceLock::new();
static CIRCLE_PROJ: OnceLock<OptRun> = OnceLock::new();
static SHIP: OnceLock<OptRun> = OnceLock::new();

fn circle_unconstrained() -> &'static OptRun {
    CIRCLE_UNC.get_or_init(|| execute("circle_unconstrained.toml", "circle_unc"))
}

fn circle_projected() -> &'static OptRun {
    CIRCLE_PROJ.get_or_init(|| execute("circle_projected.toml", "circle_proj"))
}

fn ship() -> &'static OptRun {
    SHIP.get_or_init(|| execute("ship_two_frequency.toml", "ship"))
}

/// Small fixture shared by the gradient and adjoint criteria: ~10
/// hexagonal cells, two candidate frequencies.
fn small_problem(k0s: &[f64]) -> Problem {
    let spec = DomainSpec::circular(1.0, 2.0, 3.2, 0.35, 96).unwrap();
    let mesh = build_mesh(&spec, 0.3).unwrap();
    let hexes = generate_hex_partition(&spec).unwrap();
    let partition = assign_cells(&mesh, hexes);
    let medium = cloak_core::fem::BackgroundMedium::water();
    let ops = k0s
        .iter()
        .map(|&k0| {
            let freq = FrequencySpec::new(k0 * medium.c0(), Point::new(1.0, 0.0)).unwrap();
            assemble_constants(&mesh, &partition, &medium, &freq).unwrap()
        })
        .collect();
    let lap = build_laplacian(&partition).unwrap();
    Problem {
        mesh,
        partition,
        ops,
        lap,
    }
}

fn random_controls(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> ControlState {
    ControlState {
        v: (0..n).map(|_| rng.gen_range(-amp..amp)).collect(),
        u: (0..n).map(|_| rng.gen_range(-amp..amp)).collect(),
    }
}

// ---------------------------------------------------------------------

#[test]
fn criterion_1_forward_oracle_equivalence() {
    let _cpu = timed_section();
    let t0 = Instant::now();
    let cfg = RunConfig::load(&config_path("circle_unconstrained.toml")).unwrap();
    assert_eq!(cfg.domain.cloak_radius, Some(1.57));
    assert!((cfg.domain.outer_radius - 3.0 * 1.57).abs() < 1e-12, "R = 3x cloak radius");
    let problem = build_problem(&cfg).unwrap();
    let ctrl = ControlState::zeros(problem.partition.num_cells);
    let mut solvers = vec![HelmholtzSolver::new()];
    let sols = solve_fields(&problem.ops, &mut solvers, &ctrl).unwrap();

    let probe = 4.0;
    let n = 720;
    let fem = field_on_circle(&problem.mesh, &sols[0].p_s, probe, n).unwrap();
    let medium = cfg.background();
    let freq = &cfg.frequency_specs().unwrap()[0];
    let oracle = CylinderScatterer::new(&medium, freq, 1.0).unwrap();
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, p_fem) in fem.iter().enumerate() {
        let t = i as f64 / n as f64 * std::f64::consts::TAU;
        let x = Point::new(probe * t.cos(), probe * t.sin());
        let p_an = oracle.scattered(x).unwrap();
        num += (p_fem - p_an).norm_sqr();
        den += p_an.norm_sqr();
    }
    let rel_l2 = (num / den).sqrt();
    let wall = t0.elapsed();
    assert!(
        rel_l2 < 0.02,
        "forward relative L2 error {rel_l2:.4} >= 2% vs cylindrical-harmonics oracle"
    );
    assert!(wall < Duration::from_secs(60), "forward oracle took {wall:?} >= 60 s");
    eprintln!(
        "criterion 1 (forward oracle equivalence): PASS (rel L2 {:.3e}, {:.1} s)",
        rel_l2,
        wall.as_secs_f64()
    );
}

#[test]
fn criterion_2_gradient_correctness() {
    let _cpu = timed_section();
    let t0 = Instant::now();
    let problem = small_problem(&[2.0, 2.6]);
    let nc = problem.partition.num_cells;
    assert!((8..=16).contains(&nc), "fixture should have ~10 cells, got {nc}");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let ctrl = random_controls(&mut rng, nc, 0.3);

    for use_laplacian in [false, true] {
        for nfreq in [1usize, 2] {
            let ops = &problem.ops[..nfreq];
            let cfg = OcpConfig {
                lambda_v: 1e-4,
                lambda_u: 1e-4,
                use_laplacian,
                ..OcpConfig::default()
            };
            let mut solvers: Vec<HelmholtzSolver> =
                ops.iter().map(|_| HelmholtzSolver::new()).collect();
            let sols = solve_fields(ops, &mut solvers, &ctrl).unwrap();
            let (gv, gu) = reduced_gradient(&ctrl, &sols, ops, &problem.lap, &cfg).unwrap();

            let eps = 1e-5;
            let mut j_at = |c: &ControlState| -> f64 {
                let s = solve_fields(ops, &mut solvers, c).unwrap();
                cost(c, &s, ops, &problem.lap, &cfg).unwrap()
            };
            let gmax = gv
                .iter()
                .chain(&gu)
                .fold(0.0f64, |m, &g| m.max(g.abs()));
            for k in 0..nc {
                for (family, g_adj) in [("v", gv[k]), ("u", gu[k])] {
                    let mut cp = ctrl.clone();
                    let mut cm = ctrl.clone();
                    match family {
                        "v" => {
                            cp.v[k] += eps;
                            cm.v[k] -= eps;
                        }
                        _ => {
                            cp.u[k] += eps;
                            cm.u[k] -= eps;
                        }
                    }
                    let g_fd = (j_at(&cp) - j_at(&cm)) / (2.0 * eps);
                    // componentwise relative agreement; components far
                    // below the gradient scale are compared to it
                    let denom = g_fd.abs().max(1e-8 * gmax);
                    let rel = (g_adj - g_fd).abs() / denom;
                    assert!(
                        rel < 1e-5,
                        "gradient mismatch cell {k} family {family} (H: {use_laplacian}, \
                         {nfreq} freq): adjoint {g_adj:.12e} vs FD {g_fd:.12e} (rel {rel:.2e})"
                    );
                }
            }
        }
    }
    let wall = t0.elapsed();
    assert!(wall < Duration::from_secs(120), "gradient check took {wall:?} >= 120 s");
    eprintln!(
        "criterion 2 (gradient correctness): PASS ({nc} cells, both families, ±H, 1/2 freqs, {:.1} s)",
        wall.as_secs_f64()
    );
}

#[test]
fn criterion_3_desk_scale_cloaking() {
    let run = circle_unconstrained();
    assert!(run.num_cells >= 100, "only {} cells", run.num_cells);
    let mean_db = run.summary.mean_reduction_db[0];
    assert!(
        mean_db >= 20.0,
        "mean reduction {mean_db:.2} dB < 20 dB after 200 unconstrained iterations"
    );
    assert!(
        run.optimize_wall < Duration::from_secs(30 * 60),
        "optimization took {:?} >= 30 min",
        run.optimize_wall
    );
    eprintln!(
        "criterion 3 (desk-scale cloaking): PASS ({} cells, {:.1} dB, {:.0} s)",
        run.num_cells,
        mean_db,
        run.optimize_wall.as_secs_f64()
    );
}

#[test]
fn criterion_4_projected_feasibility() {
    let proj = circle_projected();
    let unc = circle_unconstrained();

    // every exported control pair lies inside S (tolerance 1e-9 is the
    // membership tolerance built into FeasibleSet::contains)
    let set = resolve_feasible_set(&proj.ctx.config).unwrap();
    let ctrl = read_controls(
        BufReader::new(fs::File::open(proj.ctx.artifact("controls.txt")).unwrap()),
        "controls.txt",
    )
    .unwrap();
    for k in 0..ctrl.num_cells() {
        let (r, kap) = (ctrl.v[k].exp(), ctrl.u[k].exp());
        assert!(
            set.contains(r, kap),
            "cell {k}: ({r:.6}, {kap:.6}) outside the feasible set"
        );
    }
    assert_eq!(proj.summary.feasibility_violations, 0);

    let mean_db = proj.summary.mean_reduction_db[0];
    assert!(mean_db >= 15.0, "projected mean reduction {mean_db:.2} dB < 15 dB");

    let j_proj = proj.trace.rows.last().unwrap().j;
    let j_unc = unc.trace.rows.last().unwrap().j;
    assert!(
        j_proj <= 2.0 * j_unc,
        "projected final J {j_proj:.4e} > 2x unconstrained {j_unc:.4e}"
    );
    eprintln!(
        "criterion 4 (projected feasibility): PASS ({:.1} dB, J {:.3e} vs unconstrained {:.3e})",
        mean_db, j_proj, j_unc
    );
}

fn laplacian_checks(lap: &LaplacianMatrix, label: &str) {
    use faer::{Mat, Side};
    let n = lap.num_cells();
    // dense H via unit vectors
    let mut h = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = lap.apply_h(&e);
        for i in 0..n {
            h[(i, j)] = col[i];
        }
    }
    // symmetry
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            asym = asym.max((h[(i, j)] - h[(j, i)]).abs());
        }
    }
    assert!(asym <= 1e-15, "{label}: H asymmetric by {asym:.2e}");
    // H 1 = 0
    let ones = vec![1.0; n];
    let h1 = lap.apply_h(&ones);
    let max_h1 = h1.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    assert!(max_h1 <= 1e-12, "{label}: ||H 1||_inf = {max_h1:.2e}");
    // eigenvalues >= -1e-10 with a simple zero
    let eigs = h.self_adjoint_eigenvalues(Side::Lower).unwrap();
    assert!(eigs[0] >= -1e-10, "{label}: min eigenvalue {:.2e}", eigs[0]);
    let zeros = eigs.iter().filter(|&&l| l.abs() < 1e-8).count();
    assert_eq!(zeros, 1, "{label}: zero eigenvalue multiplicity {zeros}");
    // H + D positive definite: Cholesky succeeds
    let mut hd = h;
    for i in 0..n {
        hd[(i, i)] += lap.d[i];
    }
    assert!(
        hd.llt(Side::Lower).is_ok(),
        "{label}: Cholesky of H + D failed"
    );
}

#[test]
fn criterion_5_laplacian_properties() {
    // paper-scale partition: cloak shell 1..1.57 with cells sized for
    // roughly 390 hexagons
    let spec = DomainSpec::circular(1.0, 1.57, 4.71, 0.0585, 256).unwrap();
    let hexes = generate_hex_partition(&spec).unwrap();
    let n_paper = hexes.len();
    let adjacency = cloak_core::hexgrid::lattice_adjacency(&hexes);
    let areas = vec![cloak_core::hexgrid::Hexagon::area(spec.cell_edge); hexes.len()];
    let partition = CellPartition {
        num_cells: hexes.len(),
        cell_of_element: Vec::new(),
        areas,
        adjacency,
        hexes,
    };
    assert!(
        (300..=500).contains(&n_paper),
        "expected a partition near 390 cells, got {n_paper}"
    );
    assert!(partition.is_connected());
    laplacian_checks(&build_laplacian(&partition).unwrap(), "390-cell");

    // assorted smaller connected partitions (mesh-derived areas)
    for (cell_edge, h) in [(0.2, 0.15), (0.15, 0.12)] {
        let spec = DomainSpec::circular(1.0, 2.0, 3.2, cell_edge, 96).unwrap();
        let mesh = build_mesh(&spec, h).unwrap();
        let hexes = generate_hex_partition(&spec).unwrap();
        let partition = assign_cells(&mesh, hexes);
        assert!(partition.is_connected());
        laplacian_checks(
            &build_laplacian(&partition).unwrap(),
            &format!("edge {cell_edge}"),
        );
    }
    eprintln!("criterion 5 (Laplacian properties): PASS ({n_paper}-cell and 2 smaller partitions)");
}

#[test]
fn criterion_6_self_adjoint_reuse() {
    let problem = small_problem(&[2.4]);
    let ops = &problem.ops[0];
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let ctrl = random_controls(&mut rng, problem.partition.num_cells, 0.4);
        let (a, f) = ops.compose_system(&ctrl).unwrap();
        let mut solver = HelmholtzSolver::new();
        let fac = solver.factorize(&a).unwrap();
        let p_s = fac.solve_state(&a, &f).unwrap();
        // conjugation-based adjoint reusing the state factorization
        let lam_reuse = fac.solve_adjoint(&a, &ops.m_da, &p_s).unwrap();
        // independent direct solve of A^H lam = M_Da p_s: A is complex
        // symmetric, so A^H = conj(A), factorized from scratch
        let mut conj_coo = CooMat::new(a.nrows, a.ncols);
        for i in 0..a.nrows {
            for (j, v) in a.row(i) {
                conj_coo.push(i, j, v.conj());
            }
        }
        let a_conj = conj_coo.to_csr();
        let rhs = ops.m_da.matvec(&p_s);
        let mut solver2 = HelmholtzSolver::new();
        let fac2 = solver2.factorize(&a_conj).unwrap();
        let lam_direct = fac2.solve_state(&a_conj, &rhs).unwrap();

        let diff: Vec<Complex> = lam_reuse
            .iter()
            .zip(&lam_direct)
            .map(|(a, b)| a - b)
            .collect();
        let rel = norm2(&diff) / norm2(&lam_direct);
        worst = worst.max(rel);
        assert!(
            rel <= 1e-12,
            "trial {trial}: adjoint reuse differs from direct solve by rel {rel:.2e}"
        );
    }
    eprintln!("criterion 6 (self-adjoint reuse): PASS (20 controls, worst rel {worst:.2e})");
}

#[test]
fn criterion_7_multifrequency_additivity_and_ship_gate() {
    // additivity at equal controls on the actual ship discretization;
    // the regularizer is zeroed so the comparison isolates the additive
    // misfit terms (the quadratic penalty is counted once per run, not
    // once per frequency)
    let cfg = RunConfig::load(&config_path("ship_two_frequency.toml")).unwrap();
    let problem = build_problem(&cfg).unwrap();
    let nc = problem.partition.num_cells;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ctrl = random_controls(&mut rng, nc, 0.2);
    let ocp = OcpConfig {
        lambda_v: 0.0,
        lambda_u: 0.0,
        ..OcpConfig::default()
    };
    let mut solvers: Vec<HelmholtzSolver> =
        problem.ops.iter().map(|_| HelmholtzSolver::new()).collect();
    let sols = solve_fields(&problem.ops, &mut solvers, &ctrl).unwrap();

    let j_two = cost(&ctrl, &sols, &problem.ops, &problem.lap, &ocp).unwrap();
    let j_1 = cost(&ctrl, &sols[..1], &problem.ops[..1], &problem.lap, &ocp).unwrap();
    let j_2 = cost(&ctrl, &sols[1..], &problem.ops[1..], &problem.lap, &ocp).unwrap();
    let j_rel = ((j_two - (j_1 + j_2)) / j_two).abs();
    assert!(j_rel <= 1e-12, "cost additivity violated: rel {j_rel:.2e}");

    let (gv, gu) = reduced_gradient(&ctrl, &sols, &problem.ops, &problem.lap, &ocp).unwrap();
    let (gv1, gu1) =
        reduced_gradient(&ctrl, &sols[..1], &problem.ops[..1], &problem.lap, &ocp).unwrap();
    let (gv2, gu2) =
        reduced_gradient(&ctrl, &sols[1..], &problem.ops[1..], &problem.lap, &ocp).unwrap();
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..nc {
        num += (gv[k] - (gv1[k] + gv2[k])).powi(2) + (gu[k] - (gu1[k] + gu2[k])).powi(2);
        den += gv[k].powi(2) + gu[k].powi(2);
    }
    let g_rel = (num / den).sqrt();
    assert!(g_rel <= 1e-12, "gradient additivity violated: rel {g_rel:.2e}");
    drop(problem);

    // the bundled ship run must reach 10 dB at both frequencies (the
    // paper's 25 dB is reported by the run but not gated here)
    let run = ship();
    for (i, &db) in run.summary.mean_reduction_db.iter().enumerate() {
        assert!(
            db >= 10.0,
            "ship frequency {i}: mean reduction {db:.2} dB < 10 dB"
        );
    }
    eprintln!(
        "criterion 7 (multi-frequency): PASS (additivity {j_rel:.1e}/{g_rel:.1e}, ship {:.1}/{:.1} dB)",
        run.summary.mean_reduction_db[0], run.summary.mean_reduction_db[1]
    );
}

#[test]
fn criterion_8_homogenization_formulas() {
    use cloak_core::feasible::{
        invert_cell, rule_of_mixtures, HomogenizationTable, SyntheticModel,
    };
    let model = SyntheticModel::default();
    let table: HomogenizationTable = model.generate_table(25, 25).unwrap();
    table.validate().unwrap();

    // rule-of-mixtures density vs an independent exact-area oracle for
    // both families
    let s = 0.5 / (3.0_f64.sqrt() / 2.0 - 0.2);
    let cell_area = 3.0_f64.sqrt() / 2.0;
    for (i, &r_in) in table.cylinder.param1.iter().enumerate() {
        for (j, _) in table.cylinder.param2.iter().enumerate() {
            let idx = i * table.cylinder.param2.len() + j;
            let rho_hat = table.cylinder.rho_hat[idx];
            // reconstruct the geometry from the rectangularized params
            let t = table.cylinder.param2[j];
            let r_out = r_in + 0.05 + t * (3.0_f64.sqrt() / 2.0 - 0.2 - 0.05 - r_in);
            let (a, b) = (s * r_in, s * r_out);
            let area_air = std::f64::consts::PI * a * a;
            let area_disc = std::f64::consts::PI * b * b;
            let oracle = rule_of_mixtures(&[
                ((cell_area - area_disc) / cell_area, model.rho_water),
                ((area_disc - area_air) / cell_area, model.rho_metal),
                (area_air / cell_area, model.rho_air),
            ])
            .unwrap()
                / model.rho_water;
            assert!(
                (rho_hat - oracle).abs() <= 1e-9,
                "cylinder density mismatch at ({i},{j}): {rho_hat} vs {oracle}"
            );
        }
    }
    for (i, &p) in table.star.param1.iter().enumerate() {
        for (j, &frac) in table.star.param2.iter().enumerate() {
            let idx = i * table.star.param2.len() + j;
            let rho_hat = table.star.rho_hat[idx];
            let cap = p + frac * (table.star_p_max - p);
            let (r_in, r_out) = (s * p, s * cap);
            // the star body is the union of n kites; total polygon area
            // n * r_out * r_in * sin(pi/n)
            let n = 12.0;
            let area_star = n * r_out * r_in * (std::f64::consts::PI / n).sin();
            let area_disc = std::f64::consts::PI * r_out * r_out;
            let oracle = rule_of_mixtures(&[
                ((cell_area - area_disc) / cell_area, model.rho_water),
                (area_star / cell_area, model.rho_metal),
                ((area_disc - area_star) / cell_area, model.rho_air),
            ])
            .unwrap()
                / model.rho_water;
            assert!(
                (rho_hat - oracle).abs() <= 1e-9,
                "star density mismatch at ({i},{j}): {rho_hat} vs {oracle}"
            );
        }
    }

    // kappa-hat = (c_ph/c0)^2 rho_hat self-consistency of the stored table
    for fam in [&table.cylinder, &table.star] {
        for idx in 0..fam.rho_hat.len() {
            let recon = fam.c_ph_over_c0[idx].powi(2) * fam.rho_hat[idx];
            assert!(
                (recon - fam.kappa_hat[idx]).abs() <= 1e-9 * fam.kappa_hat[idx].max(1.0),
                "phase-speed consistency violated at {idx}"
            );
        }
    }

    // invert round-trip on 100 random in-set targets
    let set = trace_feasible_boundary(&table).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut done = 0;
    let mut worst = 0.0f64;
    while done < 100 {
        let r = rng.gen_range(0.2..2.2);
        let k = rng.gen_range(0.2..2.2);
        if !set.contains(r, k) || set.boundary_distance(r, k) < 5e-3 {
            continue;
        }
        let res = invert_cell((r, k), &table).unwrap();
        worst = worst.max(res.residual);
        assert!(
            res.residual < 1e-3,
            "invert_cell residual {:.2e} for target ({r:.4}, {k:.4})",
            res.residual
        );
        done += 1;
    }
    eprintln!("criterion 8 (homogenization formulas): PASS (worst invert residual {worst:.2e})");
}

/// Initial cost of a run (controls start at zero for every bundled
/// config, and zero is feasible, so projection leaves it unchanged).
fn initial_cost(cfg: &RunConfig) -> f64 {
    let problem = build_problem(cfg).unwrap();
    let ctrl = ControlState::zeros(problem.partition.num_cells);
    let mut solvers: Vec<HelmholtzSolver> =
        problem.ops.iter().map(|_| HelmholtzSolver::new()).collect();
    let sols = solve_fields(&problem.ops, &mut solvers, &ctrl).unwrap();
    cost(&ctrl, &sols, &problem.ops, &problem.lap, &cfg.ocp_config()).unwrap()
}

#[test]
fn criterion_9_armijo_monotonicity() {
    let mut checked = 0usize;
    for run in [circle_unconstrained(), circle_projected(), ship()] {
        let cfg = &run.ctx.config;
        let c1 = cfg.ocp.armijo_c1;
        assert!(run.trace.is_monotone(), "trace not monotone");
        let j0 = initial_cost(cfg);
        let mut j_prev = j0;
        for row in &run.trace.rows {
            if row.tau == 0.0 {
                // convergence marker, no step taken
                continue;
            }
            let bound = j_prev - c1 * row.tau * row.grad_norm * row.grad_norm;
            assert!(
                row.j <= bound + 1e-12 * j_prev.abs(),
                "iteration {}: J {:.12e} violates sufficient decrease (bound {:.12e})",
                row.iter,
                row.j,
                bound
            );
            j_prev = row.j;
            checked += 1;
        }
    }
    eprintln!("criterion 9 (Armijo monotonicity): PASS ({checked} accepted steps replayed)");
}
