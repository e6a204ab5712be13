//! Quasi-reversibility inversion: ring basis, projected elliptic system,
//! Tikhonov solve, and recovery of the coefficient perturbation with
//! source averaging.

pub mod basis;
pub mod bundle;
pub mod oracle;
pub mod recover;
pub mod system;

pub use basis::{build_ring_basis, RingBasis};
pub use bundle::{assemble_operator_bundle, OperatorBundle};
pub use oracle::{
    lavrentiev_forward_batch, lavrentiev_forward_gradient, lavrentiev_forward_oracle,
    SquareQuadrature,
};
pub use recover::{alpha_sweep, average_xi, reconstruct_xi, recover_xi, RecoveredXi, SweepRow};
pub use system::{
    discretize, discretize_with_smoothing, tikhonov_solve, BoundaryCoefficients, QrmLinearSystem,
    RowKind,
};

use crate::error::{Error, Result, Warning};
use crate::geometry::{Point, TransducerRing, UniformGrid};
use crate::io::{BinReader, BinWriter};
use crate::phantom::CoefficientField;
use std::path::Path;

/// Boundary nodes of the grid in row-major order; the fixed enumeration
/// shared by data assembly and discretization.
pub fn boundary_grid_nodes(grid: &UniformGrid) -> Vec<usize> {
    let n = grid.n_per_side;
    let mut v = Vec::with_capacity(4 * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if grid.is_boundary(i, j) {
                v.push(i * n + j);
            }
        }
    }
    v
}

/// Statistics of pair exclusions during data projection.
#[derive(Debug, Clone, Default)]
pub struct ProjectionStats {
    pub excluded_pairs: usize,
    pub total_pairs: usize,
    pub warnings: Vec<Warning>,
}

/// Projects per-pair Cauchy data `(psi, psi1)` given at (boundary grid
/// node, ring node) pairs onto the ring basis.
///
/// The change of variables `s0 = psi / L`, `s1 = psi1 / L - psi dL/dnu / L^2`
/// is applied in `L^2`-weighted form so every quadrature stays bounded
/// where the logarithm crosses zero: per boundary node the data enter as
/// the Gram `W[n,k] = <L^2 Psi_k Psi_n>` with right sides
/// `d0[n] = <L psi Psi_n>` and `d1[n] = <(L psi1 - psi dL/dnu) Psi_n>`.
/// The plain coefficient vectors `S0 = W^{-1} d0`, `S1 = W^{-1} d1` are
/// solved alongside for reporting.
///
/// Layout of `psi`, `psi1`, `pair_valid`: `bnode_rank * ring.count + j`.
/// Invalid pairs (coincident transducer, unusable measurement) are dropped
/// from the quadratures on both sides.
pub fn project_boundary_data(
    basis: &RingBasis,
    grid: &UniformGrid,
    ring: &TransducerRing,
    psi: &[f64],
    psi1: &[f64],
    pair_valid: Option<&[bool]>,
) -> Result<(BoundaryCoefficients, ProjectionStats)> {
    let nodes = boundary_grid_nodes(grid);
    let m = ring.count;
    let nc = basis.n;
    let n = grid.n_per_side;
    let mut gram = vec![0.0; nodes.len() * nc * nc];
    let mut d0 = vec![0.0; nodes.len() * nc];
    let mut d1 = vec![0.0; nodes.len() * nc];
    let mut s0 = vec![0.0; nodes.len() * nc];
    let mut s1 = vec![0.0; nodes.len() * nc];
    let mut stats = ProjectionStats::default();

    let positions = ring.positions();
    for (rank, &node) in nodes.iter().enumerate() {
        let i = node / n;
        let j = node % n;
        let x = grid.node(i, j);
        let normal = grid.outward_normal(i, j);
        let mut excluded = 0usize;
        let w_node = &mut gram[rank * nc * nc..(rank + 1) * nc * nc];
        let d0_node = &mut d0[rank * nc..(rank + 1) * nc];
        let d1_node = &mut d1[rank * nc..(rank + 1) * nc];
        for (jr, &x0) in positions.iter().enumerate() {
            let idx = rank * m + jr;
            if let Some(v) = pair_valid {
                if !v[idx] {
                    excluded += 1;
                    continue;
                }
            }
            let d = x.sub(x0);
            let r2 = d.dot(d);
            if r2 < 1e-24 {
                excluded += 1;
                continue;
            }
            let l = 0.5 * r2.ln();
            let dl_dnu = d.dot(normal) / r2;
            let qw = basis.weight;
            for a in 0..nc {
                let pa = basis.sample(a, jr);
                d0_node[a] += qw * l * psi[idx] * pa;
                d1_node[a] += qw * (l * psi1[idx] - psi[idx] * dl_dnu) * pa;
                for k in 0..nc {
                    w_node[a * nc + k] += qw * l * l * pa * basis.sample(k, jr);
                }
            }
        }
        stats.excluded_pairs += excluded;
        stats.total_pairs += m;
        if let Some(w) = crate::laplace::coverage_warning(excluded, m) {
            stats.warnings.push(w);
        }
        // plain coefficient view for reporting
        let wm = nalgebra::DMatrix::from_fn(nc, nc, |r, c| w_node[r * nc + c]);
        let chol = wm
            .cholesky()
            .ok_or_else(|| Error::Fit(format!("weighted Gram degenerate at boundary node {node}")))?;
        let c0 = chol.solve(&nalgebra::DVector::from_column_slice(d0_node));
        let c1 = chol.solve(&nalgebra::DVector::from_column_slice(d1_node));
        s0[rank * nc..(rank + 1) * nc].copy_from_slice(c0.as_slice());
        s1[rank * nc..(rank + 1) * nc].copy_from_slice(c1.as_slice());
    }
    Ok((
        BoundaryCoefficients {
            nodes,
            gram,
            d0,
            d1,
            s0,
            s1,
        },
        stats,
    ))
}

/// Manufactures exact Cauchy data on the boundary grid nodes from the
/// integral-operator oracle: `psi = u`, `psi1 = grad(u) . nu`.
/// Layout matches [`project_boundary_data`].
pub fn oracle_boundary_data(
    xi: &dyn Fn(Point) -> f64,
    grid: &UniformGrid,
    ring: &TransducerRing,
    quad: &SquareQuadrature,
) -> (Vec<f64>, Vec<f64>) {
    let nodes = boundary_grid_nodes(grid);
    let n = grid.n_per_side;
    let receivers: Vec<Point> = nodes.iter().map(|&nd| grid.node(nd / n, nd % n)).collect();
    let normals: Vec<Point> = nodes
        .iter()
        .map(|&nd| grid.outward_normal(nd / n, nd % n))
        .collect();
    let sources = ring.positions();
    let (u, g) = lavrentiev_forward_batch(xi, quad, &receivers, &sources);
    // transpose to bnode-major
    let m = sources.len();
    let nr = receivers.len();
    let mut psi = vec![0.0; nr * m];
    let mut psi1 = vec![0.0; nr * m];
    for si in 0..m {
        for ri in 0..nr {
            psi[ri * m + si] = u[si * nr + ri];
            psi1[ri * m + si] = g[si * nr + ri].dot(normals[ri]);
        }
    }
    (psi, psi1)
}

/// Persisted inversion output.
#[derive(Debug, Clone)]
pub struct QrmSolution {
    pub xi: CoefficientField,
    pub alpha: f64,
    pub basis_n: usize,
    /// Residual `||A V - b||` of the solved system.
    pub residual: f64,
    pub cg_iterations: usize,
}

const MAGIC: &[u8; 4] = b"ATQ1";

pub fn write_qrm_solution(sol: &QrmSolution, path: &Path, config_hash: &str) -> Result<()> {
    let mut w = BinWriter::new(MAGIC, 1, config_hash);
    w.f64(sol.alpha);
    w.u64(sol.basis_n as u64);
    w.f64(sol.residual);
    w.u64(sol.cg_iterations as u64);
    w.f64(sol.xi.grid.origin.x);
    w.f64(sol.xi.grid.origin.y);
    w.f64(sol.xi.grid.spacing);
    w.u64(sol.xi.grid.n_per_side as u64);
    w.f64_slice(&sol.xi.values);
    w.finish(path)
}

pub fn read_qrm_solution(path: &Path) -> Result<QrmSolution> {
    let mut r = BinReader::open(path, MAGIC, 1)?;
    let alpha = r.f64()?;
    let basis_n = r.u64()? as usize;
    let residual = r.f64()?;
    let cg_iterations = r.u64()? as usize;
    let ox = r.f64()?;
    let oy = r.f64()?;
    let spacing = r.f64()?;
    let n = r.u64()? as usize;
    let values = r.f64_vec()?;
    Ok(QrmSolution {
        xi: CoefficientField::new(
            UniformGrid {
                origin: Point::new(ox, oy),
                spacing,
                n_per_side: n,
            },
            values,
        )?,
        alpha,
        basis_n,
        residual,
        cg_iterations,
    })
}
