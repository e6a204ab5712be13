//! Recovery of the coefficient perturbation from the solved component
//! fields.
//!
//! Per source the second-order relation gives `xi = lap(u^)/L` with
//! `u^ = L v` and `L = ln|x - x0|`; the pooled estimator combines the
//! sources by least squares over the ring, `xi = sum(L lap u^) / sum(L^2)`,
//! which damps pairs near the logarithm's zero set without hard masks. The
//! per-source form masks `|L| < 0.05` and fills from neighbors, matching
//! the pairwise change of variables.

use super::basis::RingBasis;
use super::bundle::log_distance;
use super::system::QrmLinearSystem;
use crate::error::{Error, Result};
use crate::geometry::{TransducerRing, UniformGrid};
use crate::laplace::NEAR_SINGULAR_LOG;
use crate::linalg::{norm2, residual_norm};
use crate::phantom::CoefficientField;
use rayon::prelude::*;

/// Sources whose mean squared logarithm falls below this carry too little
/// kernel weight; the pooled estimator shrinks such nodes toward zero
/// instead of dividing by a vanishing weight.
pub const MIN_MEAN_LOG_SQ: f64 = 0.03;

/// Perturbation field recovered for one source, with a validity mask.
#[derive(Debug, Clone)]
pub struct RecoveredXi {
    pub values: Vec<f64>,
    /// True where the stencil was evaluated; false where the node was
    /// masked (near-singular log or boundary) and filled from neighbors.
    pub computed: Vec<bool>,
}

/// Synthesizes the product field `u^(x) = L(x, x0) * sum_k v_k(x) Psi_k(x0)`
/// for source `source_j` on the grid.
fn synth_product(
    solution: &[f64],
    basis: &RingBasis,
    grid: &UniformGrid,
    ring: &TransducerRing,
    source_j: usize,
) -> Vec<f64> {
    let n = grid.n_per_side;
    let nc = basis.n;
    let x0 = ring.position(source_j);
    (0..n * n)
        .map(|node| {
            let mut acc = 0.0;
            for k in 0..nc {
                acc += solution[node * nc + k] * basis.sample(k, source_j);
            }
            let l = log_distance(grid.node(node / n, node % n), x0);
            if l.is_finite() {
                l * acc
            } else {
                0.0
            }
        })
        .collect()
}

/// Per-source recovery: `xi = lap(L v)/L` with the five-point Laplacian,
/// masked where `|ln|x - x0|| < 0.05` and on the boundary ring, then filled
/// by repeated neighbor averaging.
pub fn recover_xi(
    solution: &[f64],
    basis: &RingBasis,
    grid: &UniformGrid,
    ring: &TransducerRing,
    source_j: usize,
) -> RecoveredXi {
    let n = grid.n_per_side;
    let h = grid.spacing;
    let x0 = ring.position(source_j);
    let u = synth_product(solution, basis, grid, ring, source_j);

    let mut values = vec![0.0; n * n];
    let mut computed = vec![false; n * n];
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let node = i * n + j;
            let l = log_distance(grid.node(i, j), x0);
            if !l.is_finite() || l.abs() < NEAR_SINGULAR_LOG {
                continue;
            }
            let lap = (u[node + 1] + u[node - 1] + u[node + n] + u[node - n] - 4.0 * u[node])
                / (h * h);
            values[node] = lap / l;
            computed[node] = true;
        }
    }
    fill_uncomputed(&mut values, &computed, n);
    RecoveredXi { values, computed }
}

fn fill_uncomputed(values: &mut [f64], computed: &[bool], n: usize) {
    let mut filled = computed.to_vec();
    loop {
        let mut progressed = false;
        let snapshot = values.to_vec();
        let filled_snapshot = filled.clone();
        for i in 0..n {
            for j in 0..n {
                let node = i * n + j;
                if filled[node] {
                    continue;
                }
                let mut acc = 0.0;
                let mut cnt = 0;
                if i > 0 && filled_snapshot[node - n] {
                    acc += snapshot[node - n];
                    cnt += 1;
                }
                if i + 1 < n && filled_snapshot[node + n] {
                    acc += snapshot[node + n];
                    cnt += 1;
                }
                if j > 0 && filled_snapshot[node - 1] {
                    acc += snapshot[node - 1];
                    cnt += 1;
                }
                if j + 1 < n && filled_snapshot[node + 1] {
                    acc += snapshot[node + 1];
                    cnt += 1;
                }
                if cnt > 0 {
                    values[node] = acc / cnt as f64;
                    filled[node] = true;
                    progressed = true;
                }
            }
        }
        if !progressed || filled.iter().all(|&b| b) {
            break;
        }
    }
}

/// Pooled recovery over all sources: the ring-quadrature least-squares
/// combination `xi(x) = sum_j L_j lap(u^_j)(x) / sum_j L_j^2(x)`, with the
/// denominator floored at `M * MIN_MEAN_LOG_SQ` so kernel-blind nodes near
/// the grid center shrink toward the background instead of amplifying
/// noise. Returns the field and the per-node count of sources with
/// `|L| >= 0.05` (the coverage bookkeeping of the per-source view).
pub fn reconstruct_xi(
    solution: &[f64],
    basis: &RingBasis,
    grid: &UniformGrid,
    ring: &TransducerRing,
) -> Result<(CoefficientField, Vec<u32>)> {
    let n = grid.n_per_side;
    let nn = n * n;
    let h = grid.spacing;
    let m = ring.count;

    let parts: Vec<(Vec<f64>, Vec<f64>, Vec<u32>)> = (0..m)
        .into_par_iter()
        .map(|j| {
            let u = synth_product(solution, basis, grid, ring, j);
            let x0 = ring.position(j);
            let mut num = vec![0.0; nn];
            let mut den = vec![0.0; nn];
            let mut cnt = vec![0u32; nn];
            for i in 1..n - 1 {
                for jj in 1..n - 1 {
                    let node = i * n + jj;
                    let l = log_distance(grid.node(i, jj), x0);
                    if !l.is_finite() {
                        continue;
                    }
                    let lap = (u[node + 1] + u[node - 1] + u[node + n] + u[node - n]
                        - 4.0 * u[node])
                        / (h * h);
                    num[node] = l * lap;
                    den[node] = l * l;
                    if l.abs() >= NEAR_SINGULAR_LOG {
                        cnt[node] = 1;
                    }
                }
            }
            (num, den, cnt)
        })
        .collect();

    let mut num = vec![0.0; nn];
    let mut den = vec![0.0; nn];
    let mut counts = vec![0u32; nn];
    for (pn, pd, pc) in parts {
        for k in 0..nn {
            num[k] += pn[k];
            den[k] += pd[k];
            counts[k] += pc[k];
        }
    }
    let floor = m as f64 * MIN_MEAN_LOG_SQ;
    let mut values = vec![0.0; nn];
    let mut interior_computed = vec![false; nn];
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let node = i * n + j;
            values[node] = num[node] / den[node].max(floor);
            interior_computed[node] = true;
        }
    }
    // boundary ring: copy from the nearest interior neighbor
    fill_uncomputed(&mut values, &interior_computed, n);
    Ok((
        CoefficientField {
            grid: grid.clone(),
            values,
        },
        counts,
    ))
}

/// Ring-quadrature mean over per-source fields; on a uniform ring this is
/// the arithmetic mean, taken at each node over the sources where that node
/// was genuinely computed. Nodes computed nowhere fall back to the mean of
/// the filled values. Returns the averaged field and the per-node
/// contributor count.
pub fn average_xi(fields: &[RecoveredXi], grid: &UniformGrid) -> Result<(CoefficientField, Vec<u32>)> {
    if fields.is_empty() {
        return Err(Error::invalid("no per-source fields to average".to_string()));
    }
    let nn = grid.node_count();
    let mut values = vec![0.0; nn];
    let mut counts = vec![0u32; nn];
    for node in 0..nn {
        let mut acc = 0.0;
        let mut cnt = 0u32;
        for f in fields {
            if f.computed[node] {
                acc += f.values[node];
                cnt += 1;
            }
        }
        if cnt == 0 {
            let mut all = 0.0;
            for f in fields {
                all += f.values[node];
            }
            values[node] = all / fields.len() as f64;
        } else {
            values[node] = acc / cnt as f64;
        }
        counts[node] = cnt;
    }
    Ok((
        CoefficientField {
            grid: grid.clone(),
            values,
        },
        counts,
    ))
}

/// One row of the regularization sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub alpha: f64,
    pub residual: f64,
    pub norm: f64,
    pub error: Option<f64>,
}

/// Sweeps the regularization parameter (ascending). With ground truth the
/// quasi-optimal alpha minimizes the relative L2 reconstruction error;
/// without it the corner of the (log residual, log norm) curve is chosen by
/// maximum discrete curvature.
pub fn alpha_sweep(
    sys: &QrmLinearSystem,
    alphas: &[f64],
    mut reconstruct: impl FnMut(&[f64]) -> CoefficientField,
    truth: Option<&CoefficientField>,
) -> Result<(f64, Vec<SweepRow>)> {
    if alphas.is_empty() {
        return Err(Error::invalid("empty alpha list".to_string()));
    }
    let mut sorted = alphas.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut rows = Vec::with_capacity(sorted.len());
    let mut warm: Option<Vec<f64>> = None;
    for &alpha in &sorted {
        let out = super::system::tikhonov_solve(sys, alpha, warm.as_deref())?;
        let residual = residual_norm(&sys.a, &out.solution, &sys.b);
        let norm = norm2(&out.solution);
        let error = truth.map(|t| {
            let recon = reconstruct(&out.solution);
            let num: f64 = recon
                .values
                .iter()
                .zip(&t.values)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den: f64 = t.values.iter().map(|v| v * v).sum::<f64>().sqrt();
            num / den.max(1e-300)
        });
        rows.push(SweepRow {
            alpha,
            residual,
            norm,
            error,
        });
        warm = Some(out.solution);
    }

    let chosen = if truth.is_some() {
        rows.iter()
            .min_by(|a, b| a.error.unwrap().partial_cmp(&b.error.unwrap()).unwrap())
            .unwrap()
            .alpha
    } else if rows.len() < 3 {
        rows[rows.len() / 2].alpha
    } else {
        // maximum-curvature corner of the L-curve
        let xs: Vec<f64> = rows.iter().map(|r| r.residual.max(1e-300).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.norm.max(1e-300).ln()).collect();
        let mut best = (1usize, f64::NEG_INFINITY);
        for k in 1..rows.len() - 1 {
            let x1 = xs[k + 1] - xs[k - 1];
            let y1 = ys[k + 1] - ys[k - 1];
            let x2 = xs[k + 1] - 2.0 * xs[k] + xs[k - 1];
            let y2 = ys[k + 1] - 2.0 * ys[k] + ys[k - 1];
            let denom = (x1 * x1 + y1 * y1).powf(1.5);
            if denom > 0.0 {
                let kappa = (x1 * y2 - y1 * x2).abs() / denom;
                if kappa > best.1 {
                    best = (k, kappa);
                }
            }
        }
        rows[best.0].alpha
    };
    Ok((chosen, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_uniform_grid, Disk};
    use crate::qrm::basis::build_ring_basis;

    #[test]
    fn zero_solution_zero_xi() {
        let ring = TransducerRing::new(Disk::centered(1.0).unwrap(), 32, 0.0).unwrap();
        let basis = build_ring_basis(4, &ring).unwrap();
        let grid = build_uniform_grid(2f64.sqrt(), 9).unwrap();
        let solution = vec![0.0; 81 * 4];
        let xi = recover_xi(&solution, &basis, &grid, &ring, 3);
        assert!(xi.values.iter().all(|&v| v == 0.0));
        // determinism: same inputs, bit-identical output
        let xi2 = recover_xi(&solution, &basis, &grid, &ring, 3);
        assert_eq!(
            xi.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            xi2.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let (pooled, counts) = reconstruct_xi(&solution, &basis, &grid, &ring).unwrap();
        assert!(pooled.values.iter().all(|&v| v == 0.0));
        assert!(counts.iter().any(|&c| c > 0));
    }

    #[test]
    fn averaging_rules() {
        let grid = build_uniform_grid(1.0, 5).unwrap();
        let a = RecoveredXi {
            values: vec![1.0; 25],
            computed: vec![true; 25],
        };
        let b = RecoveredXi {
            values: vec![-1.0; 25],
            computed: vec![true; 25],
        };
        let (mean, counts) = average_xi(&[a.clone(), b], &grid).unwrap();
        assert!(mean.values.iter().all(|&v| v == 0.0));
        assert!(counts.iter().all(|&c| c == 2));
        let (same, _) = average_xi(&[a.clone(), a.clone()], &grid).unwrap();
        assert!(same.values.iter().all(|&v| v == 1.0));
        assert!(average_xi(&[], &grid).is_err());
    }

    #[test]
    fn masked_sources_excluded_from_average() {
        let grid = build_uniform_grid(1.0, 5).unwrap();
        let mut a = RecoveredXi {
            values: vec![2.0; 25],
            computed: vec![true; 25],
        };
        a.computed[7] = false; // filled value, should not contribute
        a.values[7] = 99.0;
        let b = RecoveredXi {
            values: vec![4.0; 25],
            computed: vec![true; 25],
        };
        let (mean, counts) = average_xi(&[a, b], &grid).unwrap();
        assert_eq!(counts[7], 1);
        assert_eq!(mean.values[7], 4.0);
        assert_eq!(mean.values[8], 3.0);
    }
}
