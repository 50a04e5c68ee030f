//! Direct sparse solves for the state and adjoint systems.
//!
//! One LU factorization per composed system, reused for the adjoint:
//! since the matrix is complex symmetric (A = Aᵀ), the adjoint system
//! A†λ = M_{Da} p_s is Āλ = M_{Da} p_s, and λ = conj(A⁻¹ conj(rhs))
//! falls out of the same factorization.
//!
//! The symbolic analysis depends only on the sparsity pattern, which is
//! fixed across optimization iterations, so it is cached and shared.

use crate::sparse::{norm2, CsrMat};
use crate::{CloakError, Complex, Result};
use faer::prelude::{Reborrow, Solve};
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};

/// Factory that caches the symbolic LU analysis between factorizations
/// of matrices with an identical sparsity pattern.
#[derive(Default)]
pub struct HelmholtzSolver {
    symbolic: Option<SymbolicLu<usize>>,
}

pub struct Factorization {
    lu: Lu<usize, Complex>,
    n: usize,
}

/// Relative residual bound enforced on every solve.
pub const SOLVER_TOL: f64 = 1e-10;

/// Caps the worker threads used by the factorization backend;
/// `n = 1` forces sequential execution.
pub fn set_threads(n: usize) {
    #[cfg(not(target_arch = "wasm32"))]
    {
        let par = match n {
            0 | 1 => faer::Par::Seq,
            n => faer::Par::rayon(n),
        };
        faer::set_global_parallelism(par);
    }
    #[cfg(target_arch = "wasm32")]
    let _ = n;
}

impl HelmholtzSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Invalidate the cached symbolic analysis (pattern changed).
    pub fn reset(&mut self) {
        self.symbolic = None;
    }

    pub fn factorize(&mut self, a: &CsrMat) -> Result<Factorization> {
        if a.nrows != a.ncols {
            return Err(CloakError::Solver(format!(
                "system matrix must be square, got {}x{}",
                a.nrows, a.ncols
            )));
        }
        let mut triplets = Vec::with_capacity(a.nnz());
        for r in 0..a.nrows {
            for (c, v) in a.row(r) {
                triplets.push(Triplet::new(r, c, v));
            }
        }
        let mat = SparseColMat::<usize, Complex>::try_new_from_triplets(a.nrows, a.ncols, &triplets)
            .map_err(|e| CloakError::Solver(format!("matrix conversion failed: {e:?}")))?;
        if self.symbolic.is_none() {
            let sym = SymbolicLu::try_new(mat.symbolic())
                .map_err(|e| CloakError::Solver(format!("symbolic analysis failed: {e:?}")))?;
            self.symbolic = Some(sym);
        }
        let sym = self.symbolic.as_ref().unwrap().clone();
        let lu = Lu::try_new_with_symbolic(sym, mat.rb())
            .map_err(|e| CloakError::Solver(format!("numeric factorization failed (singular or ill-conditioned pivot): {e:?}")))?;
        Ok(Factorization { lu, n: a.nrows })
    }
}

impl Factorization {
    /// Raw triangular solve A x = b.
    pub fn solve(&self, b: &[Complex]) -> Vec<Complex> {
        assert_eq!(b.len(), self.n);
        let rhs = faer::Mat::<Complex>::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// State solve with a residual guarantee: ‖A p − f‖ ≤ tol ‖f‖.
    pub fn solve_state(&self, a: &CsrMat, f: &[Complex]) -> Result<Vec<Complex>> {
        let p = self.solve(f);
        let mut resid = a.matvec(&p);
        for (ri, fi) in resid.iter_mut().zip(f) {
            *ri -= fi;
        }
        let rel = norm2(&resid) / norm2(f).max(f64::MIN_POSITIVE);
        if rel > SOLVER_TOL {
            return Err(CloakError::Solver(format!(
                "state solve residual {rel:.3e} exceeds tolerance {SOLVER_TOL:.1e}"
            )));
        }
        Ok(p)
    }

    /// Adjoint solve A†λ = M_{Da} p_s reusing the state factorization:
    /// λ = conj(A⁻¹ conj(M_{Da} p_s)), valid because A = Aᵀ.
    pub fn solve_adjoint(&self, a: &CsrMat, m_da: &CsrMat, p_s: &[Complex]) -> Result<Vec<Complex>> {
        let rhs = m_da.matvec(p_s);
        let conj_rhs: Vec<Complex> = rhs.iter().map(|v| v.conj()).collect();
        let lam: Vec<Complex> = self.solve(&conj_rhs).iter().map(|v| v.conj()).collect();
        // residual of conj(A) λ = rhs
        let mut resid = vec![Complex::ZERO; self.n];
        for r in 0..a.nrows {
            let mut acc = Complex::ZERO;
            for (c, v) in a.row(r) {
                acc += v.conj() * lam[c];
            }
            resid[r] = acc - rhs[r];
        }
        let rel = norm2(&resid) / norm2(&rhs).max(f64::MIN_POSITIVE);
        if rel > SOLVER_TOL {
            return Err(CloakError::Solver(format!(
                "adjoint solve residual {rel:.3e} exceeds tolerance {SOLVER_TOL:.1e}"
            )));
        }
        Ok(lam)
    }
}
