//! The optimal-control problem: cost functional, adjoint-based reduced
//! gradients, Armijo backtracking, and the (projected) steepest-descent
//! loop over the cell-wise controls.
//!
//! The physical gradient term is the real part of the adjoint pairing
//! e^{−v_k} λ†(A_k p + l_k); the pairing itself carries a nonzero
//! imaginary part in general (only its real part is the derivative of
//! the real cost), so correctness is guarded by finite-difference
//! tests rather than an imaginary-part assertion.

use crate::fem::{AssembledOperators, ControlState};
use crate::laplacian::LaplacianMatrix;
use crate::solver::HelmholtzSolver;
use crate::sparse::dot_conj;
use crate::{CloakError, Complex, Result};
use std::io::Write;

/// Optimizer settings. Defaults follow standard Armijo practice:
/// c1 = 1e−4, shrink = 0.5, tau0 = 1, with a Barzilai–Borwein warm
/// start for subsequent iterations.
#[derive(Debug, Clone)]
pub struct OcpConfig {
    pub lambda_v: f64,
    pub lambda_u: f64,
    pub max_iter: usize,
    /// absolute gradient-norm stopping tolerance; None selects
    /// 1e−8 × the initial gradient norm
    pub grad_tol: Option<f64>,
    pub armijo_c1: f64,
    pub armijo_shrink: f64,
    pub tau0: f64,
    pub use_laplacian: bool,
}

impl Default for OcpConfig {
    fn default() -> Self {
        OcpConfig {
            lambda_v: 1e-6,
            lambda_u: 1e-6,
            max_iter: 200,
            grad_tol: None,
            armijo_c1: 1e-4,
            armijo_shrink: 0.5,
            tau0: 1.0,
            use_laplacian: false,
        }
    }
}

impl OcpConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda_v >= 0.0
            && self.lambda_u >= 0.0
            && self.armijo_c1 > 0.0
            && self.armijo_c1 < 1.0
            && self.armijo_shrink > 0.0
            && self.armijo_shrink < 1.0
            && self.tau0 > 0.0;
        if ok {
            Ok(())
        } else {
            Err(CloakError::Config(format!("invalid optimizer settings: {self:?}")))
        }
    }
}

/// State and adjoint fields for one frequency, stamped with the
/// controls they were solved at so gradients can refuse stale pairs.
#[derive(Debug, Clone)]
pub struct FieldSolution {
    pub p_s: Vec<Complex>,
    pub lambda: Vec<Complex>,
    ctrl_stamp: ControlState,
}

impl FieldSolution {
    pub fn stamp_matches(&self, ctrl: &ControlState) -> bool {
        self.ctrl_stamp == *ctrl
    }
}

/// Solves state and adjoint for every frequency at the given controls.
pub fn solve_fields(
    ops_list: &[AssembledOperators],
    solvers: &mut [HelmholtzSolver],
    ctrl: &ControlState,
) -> Result<Vec<FieldSolution>> {
    assert_eq!(ops_list.len(), solvers.len());
    let mut out = Vec::with_capacity(ops_list.len());
    for (ops, solver) in ops_list.iter().zip(solvers.iter_mut()) {
        let (a, f) = ops.compose_system(ctrl)?;
        let fac = solver.factorize(&a)?;
        let p_s = fac.solve_state(&a, &f)?;
        let lambda = fac.solve_adjoint(&a, &ops.m_da, &p_s)?;
        out.push(FieldSolution {
            p_s,
            lambda,
            ctrl_stamp: ctrl.clone(),
        });
    }
    Ok(out)
}

/// J = (λ_v/2) vᵀRv + (λ_u/2) uᵀRu + ½ Σ_h p_h† M_Da p_h.
pub fn cost(
    ctrl: &ControlState,
    solutions: &[FieldSolution],
    ops_list: &[AssembledOperators],
    lap: &LaplacianMatrix,
    cfg: &OcpConfig,
) -> Result<f64> {
    if ctrl.v.len() != lap.num_cells() {
        return Err(CloakError::Optimization(format!(
            "control dimension {} vs {} cells",
            ctrl.v.len(),
            lap.num_cells()
        )));
    }
    let mut j = 0.5 * cfg.lambda_v * lap.quadratic_form(&ctrl.v, cfg.use_laplacian)
        + 0.5 * cfg.lambda_u * lap.quadratic_form(&ctrl.u, cfg.use_laplacian);
    for (sol, ops) in solutions.iter().zip(ops_list) {
        let mp = ops.m_da.matvec(&sol.p_s);
        j += 0.5 * dot_conj(&sol.p_s, &mp).re;
    }
    Ok(j)
}

/// Fully discrete reduced gradients, summed over frequencies.
pub fn reduced_gradient(
    ctrl: &ControlState,
    solutions: &[FieldSolution],
    ops_list: &[AssembledOperators],
    lap: &LaplacianMatrix,
    cfg: &OcpConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let nc = ctrl.v.len();
    for sol in solutions {
        if !sol.stamp_matches(ctrl) {
            return Err(CloakError::Optimization(
                "stale field solution: controls changed since the state/adjoint solve".into(),
            ));
        }
    }
    let rv = lap.apply_r(&ctrl.v, cfg.use_laplacian);
    let ru = lap.apply_r(&ctrl.u, cfg.use_laplacian);
    let mut gv: Vec<f64> = rv.iter().map(|r| cfg.lambda_v * r).collect();
    let mut gu: Vec<f64> = ru.iter().map(|r| cfg.lambda_u * r).collect();
    for (sol, ops) in solutions.iter().zip(ops_list) {
        for k in 0..nc {
            // d f / d v_k = +e^{−v_k} l_k (the load enters f negated),
            // d A / d v_k = −e^{−v_k} A_k; the chain rule pairs both
            // against the adjoint
            let pair_v = ops.a_cell[k].sesquilinear(&sol.lambda, &sol.p_s)
                + ops.l_cell[k].dot_conj(&sol.lambda);
            gv[k] += (-ctrl.v[k]).exp() * pair_v.re;
            let pair_u = ops.b_cell[k].sesquilinear(&sol.lambda, &sol.p_s)
                - ops.d_cell[k].dot_conj(&sol.lambda);
            gu[k] += (-ctrl.u[k]).exp() * pair_u.re;
        }
    }
    for g in gv.iter().chain(&gu) {
        if !g.is_finite() {
            return Err(CloakError::Optimization("non-finite gradient entry".into()));
        }
    }
    Ok((gv, gu))
}

fn grad_norm(gv: &[f64], gu: &[f64]) -> f64 {
    gv.iter()
        .chain(gu)
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt()
}

/// Gradient step followed by pairwise projection onto S′. Returns the
/// new controls and how many cell pairs the projection moved.
pub fn projected_update(
    ctrl: &ControlState,
    gv: &[f64],
    gu: &[f64],
    tau: f64,
    projector: Option<&dyn Fn(f64, f64) -> (f64, f64)>,
) -> (ControlState, usize) {
    let mut out = ctrl.clone();
    let mut n_projected = 0;
    for k in 0..ctrl.v.len() {
        let mut vk = ctrl.v[k] - tau * gv[k];
        let mut uk = ctrl.u[k] - tau * gu[k];
        if let Some(proj) = projector {
            let (pv, pu) = proj(vk, uk);
            if (pv - vk).abs() > 1e-14 || (pu - uk).abs() > 1e-14 {
                n_projected += 1;
            }
            vk = pv;
            uk = pu;
        }
        out.v[k] = vk;
        out.u[k] = uk;
    }
    (out, n_projected)
}

/// Backtracking line search: largest τ = tau0·shrinkⁿ satisfying
/// J(trial(τ)) ≤ J0 − c1·τ·‖gJ‖². `trial` evaluates the cost at the
/// (possibly projected) step of length τ.
pub fn armijo_backtracking(
    j0: f64,
    gnorm2: f64,
    mut trial: impl FnMut(f64) -> Result<f64>,
    cfg: &OcpConfig,
    tau0: f64,
) -> Result<(f64, usize)> {
    if gnorm2 == 0.0 {
        return Ok((0.0, 0));
    }
    let mut tau = tau0;
    for n in 0..=60 {
        let j_trial = trial(tau)?;
        if j_trial <= j0 - cfg.armijo_c1 * tau * gnorm2 {
            return Ok((tau, n + 1));
        }
        tau *= cfg.armijo_shrink;
    }
    Err(CloakError::Optimization(format!(
        "Armijo backtracking failed after 60 step halvings (J0 = {j0:.6e}); \
         the gradient or tolerances are suspect"
    )))
}

/// One row of the optimization trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iter: usize,
    pub j: f64,
    pub grad_norm: f64,
    pub tau: f64,
    pub n_projected: usize,
}

#[derive(Debug, Clone, Default)]
pub struct OptimizationTrace {
    pub rows: Vec<TraceRow>,
}

impl OptimizationTrace {
    /// `iter J grad_norm tau n_projected` rows.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.rows {
            writeln!(
                w,
                "{} {:.17e} {:.17e} {:.9e} {}",
                r.iter, r.j, r.grad_norm, r.tau, r.n_projected
            )?;
        }
        Ok(())
    }

    /// Parses the format written by [`OptimizationTrace::write_text`].
    pub fn read_text<R: std::io::BufRead>(reader: R, path: &str) -> Result<OptimizationTrace> {
        let mut rows = Vec::new();
        for line in reader.lines() {
            let line = line.map_err(|e| CloakError::io(path, e))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(CloakError::parse(path, format!("bad trace row: {line}")));
            }
            let bad = |what: &str| CloakError::parse(path, format!("bad {what}: {line}"));
            rows.push(TraceRow {
                iter: f[0].parse().map_err(|_| bad("iter"))?,
                j: f[1].parse().map_err(|_| bad("J"))?,
                grad_norm: f[2].parse().map_err(|_| bad("grad_norm"))?,
                tau: f[3].parse().map_err(|_| bad("tau"))?,
                n_projected: f[4].parse().map_err(|_| bad("n_projected"))?,
            });
        }
        Ok(OptimizationTrace { rows })
    }

    /// Accepted iterations must never increase J.
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].j <= w[0].j)
    }
}

/// Everything the descent loop needs besides the configuration.
pub struct OcpProblem<'a> {
    pub ops: &'a [AssembledOperators],
    pub lap: &'a LaplacianMatrix,
    /// pairwise projection onto S′; None runs the unconstrained variant
    pub projector: Option<&'a dyn Fn(f64, f64) -> (f64, f64)>,
}

/// Steepest descent with Armijo backtracking (projected-gradient when a
/// feasible-set projector is supplied). Returns the best iterate found
/// and the per-iteration trace.
pub fn steepest_descent(
    problem: &OcpProblem,
    init: ControlState,
    cfg: &OcpConfig,
) -> Result<(ControlState, OptimizationTrace)> {
    cfg.validate()?;
    let mut solvers: Vec<HelmholtzSolver> =
        problem.ops.iter().map(|_| HelmholtzSolver::new()).collect();
    let mut ctrl = init;
    // the initial point may be infeasible; project it first
    if problem.projector.is_some() {
        let zeros = vec![0.0; ctrl.v.len()];
        (ctrl, _) = projected_update(&ctrl, &zeros, &zeros, 0.0, problem.projector);
    }
    let mut trace = OptimizationTrace::default();
    let mut best: Option<(f64, ControlState)> = None;
    let mut tau_warm = cfg.tau0;
    let mut prev: Option<(ControlState, Vec<f64>, Vec<f64>)> = None;

    let mut sols = solve_fields(problem.ops, &mut solvers, &ctrl)?;
    let mut j = cost(&ctrl, &sols, problem.ops, problem.lap, cfg)?;
    let mut tol = cfg.grad_tol.unwrap_or(f64::INFINITY);

    for iter in 0..cfg.max_iter {
        if !j.is_finite() {
            return Err(CloakError::Optimization(format!(
                "non-finite cost at iteration {iter}; trace length {}",
                trace.rows.len()
            )));
        }
        let (gv, gu) = reduced_gradient(&ctrl, &sols, problem.ops, problem.lap, cfg)?;
        let gn = grad_norm(&gv, &gu);
        if iter == 0 && cfg.grad_tol.is_none() {
            tol = 1e-8 * gn;
        }
        if gn < tol {
            trace.rows.push(TraceRow {
                iter,
                j,
                grad_norm: gn,
                tau: 0.0,
                n_projected: 0,
            });
            break;
        }

        // Barzilai-Borwein warm start from the previous accepted step
        if let Some((pc, pgv, pgu)) = &prev {
            let mut sy = 0.0;
            let mut ss = 0.0;
            for k in 0..ctrl.v.len() {
                let sv = ctrl.v[k] - pc.v[k];
                let su = ctrl.u[k] - pc.u[k];
                sy += sv * (gv[k] - pgv[k]) + su * (gu[k] - pgu[k]);
                ss += sv * sv + su * su;
            }
            if sy > 0.0 && ss > 0.0 {
                tau_warm = (ss / sy).clamp(1e-12, 1e6);
            }
        }

        let mut trial_state: Option<(ControlState, Vec<FieldSolution>, usize)> = None;
        let gnorm2 = gn * gn;
        let (tau, _trials) = armijo_backtracking(
            j,
            gnorm2,
            |tau| {
                let (cand, n_proj) = projected_update(&ctrl, &gv, &gu, tau, problem.projector);
                // an overshooting trial can blow up e^{-v} and ruin the
                // factorization; treat that as an infinite cost so the
                // backtracking shrinks the step instead of aborting
                let cand_sols = match solve_fields(problem.ops, &mut solvers, &cand) {
                    Ok(s) => s,
                    Err(_) => return Ok(f64::INFINITY),
                };
                let j_t = match cost(&cand, &cand_sols, problem.ops, problem.lap, cfg) {
                    Ok(j_t) if j_t.is_finite() => j_t,
                    _ => return Ok(f64::INFINITY),
                };
                trial_state = Some((cand, cand_sols, n_proj));
                Ok(j_t)
            },
            cfg,
            tau_warm,
        )?;
        let (cand, cand_sols, n_projected) =
            trial_state.expect("accepted Armijo step must have a trial state");
        prev = Some((ctrl.clone(), gv, gu));
        ctrl = cand;
        sols = cand_sols;
        j = cost(&ctrl, &sols, problem.ops, problem.lap, cfg)?;
        tau_warm = tau;
        trace.rows.push(TraceRow {
            iter,
            j,
            grad_norm: gn,
            tau,
            n_projected,
        });
        if best.as_ref().map(|(bj, _)| j < *bj).unwrap_or(true) {
            best = Some((j, ctrl.clone()));
        }
    }
    let result = best.map(|(_, c)| c).unwrap_or(ctrl);
    Ok((result, trace))
}
