//! Minimal complex sparse matrix types used by the assembly and the
//! optimizer: triplet accumulation, CSR with matvec, and coordinate
//! text export for external verification.

use crate::Complex;
use std::io::Write;

/// Triplet (coordinate) accumulator. Duplicate entries add up.
#[derive(Debug, Clone)]
pub struct CooMat {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, Complex)>,
}

impl CooMat {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        CooMat {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: Complex) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if val != Complex::ZERO {
            self.entries.push((row, col, val));
        }
    }

    /// Coalesce duplicates and convert to CSR.
    pub fn to_csr(&self) -> CsrMat {
        let mut sorted = self.entries.clone();
        sorted.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut cols = Vec::with_capacity(sorted.len());
        let mut vals: Vec<Complex> = Vec::with_capacity(sorted.len());
        let mut rows: Vec<usize> = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        let mut row_ptr = vec![0usize; self.nrows + 1];
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for r in 0..self.nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMat {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            cols,
            vals,
        }
    }
}

/// Compressed sparse row matrix over complex numbers.
#[derive(Debug, Clone)]
pub struct CsrMat {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<Complex>,
}

impl CsrMat {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex)> + '_ {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.cols[lo..hi]
            .iter()
            .copied()
            .zip(self.vals[lo..hi].iter().copied())
    }

    pub fn matvec(&self, x: &[Complex]) -> Vec<Complex> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![Complex::ZERO; self.nrows];
        for r in 0..self.nrows {
            let mut acc = Complex::ZERO;
            for (c, v) in self.row(r) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
        y
    }

    /// y += alpha * A x, without allocating.
    pub fn matvec_acc(&self, alpha: Complex, x: &[Complex], y: &mut [Complex]) {
        for r in 0..self.nrows {
            let mut acc = Complex::ZERO;
            for (c, v) in self.row(r) {
                acc += v * x[c];
            }
            y[r] += alpha * acc;
        }
    }

    /// Largest absolute asymmetry |A - A^T|; zero for the assembled
    /// operators by construction.
    pub fn max_asymmetry(&self) -> f64 {
        use std::collections::HashMap;
        let mut map: HashMap<(usize, usize), Complex> = HashMap::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                map.insert((r, c), v);
            }
        }
        let mut worst = 0.0_f64;
        for (&(r, c), &v) in &map {
            let vt = map.get(&(c, r)).copied().unwrap_or(Complex::ZERO);
            worst = worst.max((v - vt).norm());
        }
        worst
    }

    /// Coordinate-format export: one `row col re im` line per entry
    /// (0-based indices).
    pub fn write_coo<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                writeln!(w, "{} {} {:.17e} {:.17e}", r, c, v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// Dot product conj(x) . y (the physicists' inner product).
pub fn dot_conj(x: &[Complex], y: &[Complex]) -> Complex {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm2(x: &[Complex]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
