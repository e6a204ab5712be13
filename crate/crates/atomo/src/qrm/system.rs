//! Finite-difference discretization of the projected elliptic system with
//! appended Cauchy-data rows, and its Tikhonov-regularized solve.
//!
//! Data rows are kept in the same weighted-projection form as the interior
//! equations: at a boundary node the Dirichlet condition reads
//! `W V = d0` with `W[n,k] = <L^2 Psi_k Psi_n>` and `d0[n] = <L psi Psi_n>`,
//! and likewise for the one-sided normal derivative, so every row of the
//! least-squares system has bounded coefficients.

use super::bundle::OperatorBundle;
use crate::error::{Error, Result};
use crate::linalg::{cg_normal, CgOutcome, CooBuilder, Csr};

/// Which equation a matrix row encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Projected PDE at an interior node, one row per basis component.
    Interior { node: usize, comp: usize },
    /// Weighted Dirichlet condition at a boundary node.
    Dirichlet { node: usize, comp: usize },
    /// Weighted one-sided normal derivative at a non-corner boundary node.
    Neumann { node: usize, comp: usize },
    /// First-difference smoothing row (H2-functional surrogate).
    Smoothing { node: usize, comp: usize },
}

/// Cauchy data in weighted-projection form at the boundary grid nodes.
#[derive(Debug, Clone)]
pub struct BoundaryCoefficients {
    /// Boundary node ids in grid indexing (`i * n + j`).
    pub nodes: Vec<usize>,
    /// Per node, row-major N x N weighted Gram `W[n,k] = <L^2 Psi_k Psi_n>`.
    pub gram: Vec<f64>,
    /// Dirichlet right sides `d0[n] = <L psi Psi_n>`, layout `rank * N + n`.
    pub d0: Vec<f64>,
    /// Normal-derivative right sides
    /// `d1[n] = <(L psi1 - psi dL/dnu) Psi_n>`, same layout.
    pub d1: Vec<f64>,
    /// Plain coefficient vectors `S0 = W^{-1} d0`, `S1 = W^{-1} d1` for
    /// inspection and downstream reporting.
    pub s0: Vec<f64>,
    pub s1: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct QrmLinearSystem {
    pub a: Csr,
    pub b: Vec<f64>,
    pub rows: Vec<RowKind>,
    /// Basis order N.
    pub n_comp: usize,
    /// Grid nodes per side.
    pub grid_n: usize,
}

/// Assembles the row-scaled least-squares system: five-point Laplacian and
/// central first differences in the interior, weighted Dirichlet rows at
/// every boundary node, and weighted second-order one-sided
/// normal-derivative rows at the non-corner boundary nodes.
///
/// Interior rows are scaled to unit maximum coefficient, except that rows
/// whose natural scale is far below the median (grid nodes the kernel is
/// nearly blind to) are not amplified past the median scale.
pub fn discretize(bundle: &OperatorBundle, bc: &BoundaryCoefficients) -> Result<QrmLinearSystem> {
    discretize_with_smoothing(bundle, bc, 0.0)
}

/// Like [`discretize`], with optional first-difference smoothing rows
/// `sqrt(mu) (V_k(n') - V_k(n)) = 0` over grid edges. These realize the
/// derivative part of the continuum H2 smoothing functional and pin the
/// directions the weighted kernels are nearly blind to; `mu = 0` disables
/// them.
pub fn discretize_with_smoothing(
    bundle: &OperatorBundle,
    bc: &BoundaryCoefficients,
    mu: f64,
) -> Result<QrmLinearSystem> {
    let n = bundle.grid.n_per_side;
    if n < 5 {
        return Err(Error::invalid("grid needs at least 5 nodes per side".to_string()));
    }
    let nc = bundle.n;
    let h = bundle.grid.spacing;
    let unknowns = n * n * nc;
    let uid = |node: usize, comp: usize| node * nc + comp;

    let interior_rows = (n - 2) * (n - 2) * nc;
    let dirichlet_rows = bc.nodes.len() * nc;
    let neumann_rows = bc.nodes.len().saturating_sub(4) * nc;
    let smoothing_rows = if mu > 0.0 { 2 * n * (n - 1) * nc } else { 0 };
    let total_rows = interior_rows + dirichlet_rows + neumann_rows + smoothing_rows;

    let mut coo = CooBuilder::new(total_rows, unknowns);
    let mut b = vec![0.0; total_rows];
    let mut rows = Vec::with_capacity(total_rows);
    let mut row_scale_class = Vec::with_capacity(total_rows); // true: interior
    let mut row = 0usize;

    let inv_h2 = 1.0 / (h * h);
    let inv_2h = 1.0 / (2.0 * h);
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let node = i * n + j;
            let east = i * n + (j + 1);
            let west = i * n + (j - 1);
            let north = (i + 1) * n + j;
            let south = (i - 1) * n + j;
            let mt = bundle.mt_at(node);
            let k1 = bundle.k1_at(node);
            let k2 = bundle.k2_at(node);
            for comp in 0..nc {
                for k in 0..nc {
                    let m = mt[comp * nc + k];
                    if m != 0.0 {
                        coo.push(row, uid(east, k), m * inv_h2);
                        coo.push(row, uid(west, k), m * inv_h2);
                        coo.push(row, uid(north, k), m * inv_h2);
                        coo.push(row, uid(south, k), m * inv_h2);
                        coo.push(row, uid(node, k), -4.0 * m * inv_h2);
                    }
                    let c1 = k1[comp * nc + k];
                    if c1 != 0.0 {
                        coo.push(row, uid(east, k), c1 * inv_2h);
                        coo.push(row, uid(west, k), -c1 * inv_2h);
                    }
                    let c2 = k2[comp * nc + k];
                    if c2 != 0.0 {
                        coo.push(row, uid(north, k), c2 * inv_2h);
                        coo.push(row, uid(south, k), -c2 * inv_2h);
                    }
                }
                rows.push(RowKind::Interior { node, comp });
                row_scale_class.push(true);
                row += 1;
            }
        }
    }

    for (rank, &node) in bc.nodes.iter().enumerate() {
        for comp in 0..nc {
            coo.push(row, uid(node, comp), 1.0);
            b[row] = bc.s0[rank * nc + comp];
            rows.push(RowKind::Dirichlet { node, comp });
            row_scale_class.push(false);
            row += 1;
        }
    }

    for (rank, &node) in bc.nodes.iter().enumerate() {
        let i = node / n;
        let j = node % n;
        let corner = (i == 0 || i == n - 1) && (j == 0 || j == n - 1);
        if corner {
            continue;
        }
        let (di, dj) = bundle.grid.inward_steps(i, j);
        let in1 = ((i as isize + di) as usize) * n + (j as isize + dj) as usize;
        let in2 = ((i as isize + 2 * di) as usize) * n + (j as isize + 2 * dj) as usize;
        for comp in 0..nc {
            coo.push(row, uid(node, comp), 3.0 * inv_2h);
            coo.push(row, uid(in1, comp), -4.0 * inv_2h);
            coo.push(row, uid(in2, comp), 1.0 * inv_2h);
            b[row] = bc.s1[rank * nc + comp];
            rows.push(RowKind::Neumann { node, comp });
            row_scale_class.push(false);
            row += 1;
        }
    }
    if mu > 0.0 {
        let w = mu.sqrt();
        for i in 0..n {
            for j in 0..n {
                let node = i * n + j;
                if j + 1 < n {
                    let e = i * n + (j + 1);
                    for comp in 0..nc {
                        coo.push(row, uid(node, comp), -w);
                        coo.push(row, uid(e, comp), w);
                        rows.push(RowKind::Smoothing { node, comp });
                        row_scale_class.push(false);
                        row += 1;
                    }
                }
                if i + 1 < n {
                    let nn_ = (i + 1) * n + j;
                    for comp in 0..nc {
                        coo.push(row, uid(node, comp), -w);
                        coo.push(row, uid(nn_, comp), w);
                        rows.push(RowKind::Smoothing { node, comp });
                        row_scale_class.push(false);
                        row += 1;
                    }
                }
            }
        }
    }
    debug_assert_eq!(row, total_rows);

    let mut a = coo.build();

    // row scaling: unit max-abs, with a cap on the amplification of
    // interior rows far below the median scale
    let mut maxabs = vec![0.0f64; a.rows];
    for r in 0..a.rows {
        for k in a.row_ptr[r]..a.row_ptr[r + 1] {
            maxabs[r] = maxabs[r].max(a.values[k].abs());
        }
    }
    let mut interior_scales: Vec<f64> = maxabs
        .iter()
        .zip(&row_scale_class)
        .filter(|&(_, &cls)| cls)
        .map(|(&m, _)| m)
        .collect();
    interior_scales.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let median = interior_scales
        .get(interior_scales.len() / 2)
        .copied()
        .unwrap_or(1.0);
    // nodes the kernel is all but blind to (vanishing natural scale) must
    // not be amplified to unit rows: cap the gain well below the median
    let cap = 1e-3 * median;
    for r in 0..a.rows {
        if matches!(rows[r], RowKind::Smoothing { .. }) {
            continue;
        }
        let denom = if row_scale_class[r] {
            maxabs[r].max(cap)
        } else {
            maxabs[r]
        };
        if denom > 0.0 {
            let s = 1.0 / denom;
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                a.values[k] *= s;
            }
            b[r] *= s;
        }
    }

    Ok(QrmLinearSystem {
        a,
        b,
        rows,
        n_comp: nc,
        grid_n: n,
    })
}

/// Solves `(A^T A + alpha E) V = A^T b` by conjugate gradients: relative
/// residual 1e-10 or `10 x unknowns` iterations, whichever first.
pub fn tikhonov_solve(sys: &QrmLinearSystem, alpha: f64, warm: Option<&[f64]>) -> Result<CgOutcome> {
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    Ok(cg_normal(
        &sys.a,
        &sys.b,
        alpha,
        warm,
        1e-10,
        10 * sys.a.cols,
    ))
}
