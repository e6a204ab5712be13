//! Small sparse-matrix toolkit: CSR storage, products, and the damped
//! normal-equation conjugate gradient used by both inversion methods.

use crate::error::Warning;

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

/// Incremental COO builder; duplicate entries are summed on assembly.
#[derive(Debug, Clone)]
pub struct CooBuilder {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooBuilder {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        if v != 0.0 {
            self.entries.push((r, c, v));
        }
    }

    pub fn build(mut self) -> Csr {
        self.entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut counts = vec![0usize; self.rows];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                counts[r] += 1;
                last = Some((r, c));
            }
        }
        let mut row_ptr = vec![0usize; self.rows + 1];
        for r in 0..self.rows {
            row_ptr[r + 1] = row_ptr[r] + counts[r];
        }
        Csr {
            rows: self.rows,
            cols: self.cols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

impl Csr {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for r in 0..self.rows {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    /// y = A^T x (scatter form).
    pub fn mul_transpose_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        y.fill(0.0);
        for r in 0..self.rows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k]] += self.values[k] * xr;
            }
        }
    }

    /// Scales each row (and the matching entry of `rhs`) so its largest
    /// absolute coefficient is one. Rows that are entirely zero are left alone.
    pub fn normalize_rows(&mut self, rhs: &mut [f64]) {
        for r in 0..self.rows {
            let lo = self.row_ptr[r];
            let hi = self.row_ptr[r + 1];
            let maxabs = self.values[lo..hi]
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            if maxabs > 0.0 {
                let s = 1.0 / maxabs;
                for v in &mut self.values[lo..hi] {
                    *v *= s;
                }
                rhs[r] *= s;
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Outcome of a conjugate-gradient run on the damped normal equations.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Relative residual of (A^T A + alpha I) x = A^T b at termination.
    pub residual: f64,
    pub warning: Option<Warning>,
}

/// Solves (A^T A + alpha I) x = A^T b by conjugate gradients.
///
/// Terminates at relative residual `tol` or after `max_iter` iterations,
/// whichever comes first; hitting the cap is reported as a warning, not an
/// error. `x0` seeds the iteration (zeros are the usual choice).
pub fn cg_normal(
    a: &Csr,
    b: &[f64],
    alpha: f64,
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> CgOutcome {
    let n = a.cols;
    let mut x = match x0 {
        Some(v) => v.to_vec(),
        None => vec![0.0; n],
    };
    let mut atb = vec![0.0; n];
    a.mul_transpose_vec(b, &mut atb);
    let rhs_norm = norm2(&atb).max(f64::MIN_POSITIVE);

    let mut tmp_m = vec![0.0; a.rows];
    let mut tmp_n = vec![0.0; n];
    // operator apply: out = A^T (A x) + alpha x
    let apply = |x: &[f64], tmp_m: &mut [f64], tmp_n: &mut [f64], out: &mut [f64]| {
        a.mul_vec(x, tmp_m);
        a.mul_transpose_vec(tmp_m, tmp_n);
        for i in 0..x.len() {
            out[i] = tmp_n[i] + alpha * x[i];
        }
    };

    let mut r = vec![0.0; n];
    let mut ax = vec![0.0; n];
    apply(&x, &mut tmp_m, &mut tmp_n, &mut ax);
    for i in 0..n {
        r[i] = atb[i] - ax[i];
    }
    let mut p = r.clone();
    let mut rs_old = dot(&r, &r);
    let mut it = 0;
    let mut q = vec![0.0; n];
    while it < max_iter {
        let rel = rs_old.sqrt() / rhs_norm;
        if rel <= tol {
            break;
        }
        apply(&p, &mut tmp_m, &mut tmp_n, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            break; // loss of positive definiteness in floating point
        }
        let step = rs_old / pq;
        axpy(step, &p, &mut x);
        axpy(-step, &q, &mut r);
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs_old;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs_old = rs_new;
        it += 1;
    }
    let residual = rs_old.sqrt() / rhs_norm;
    let warning = if residual > tol && it >= max_iter {
        Some(Warning::Convergence {
            residual,
            iterations: it,
        })
    } else {
        None
    };
    CgOutcome {
        solution: x,
        iterations: it,
        residual,
        warning,
    }
}

/// Residual norm ||A x - b||.
pub fn residual_norm(a: &Csr, x: &[f64], b: &[f64]) -> f64 {
    let mut ax = vec![0.0; a.rows];
    a.mul_vec(x, &mut ax);
    ax.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}
