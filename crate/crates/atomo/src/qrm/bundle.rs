//! Projection of the third-order equation onto the ring basis.
//!
//! Writing `L = ln|x - x0|` and `u^ = L v`, the pointwise relation
//! `d/ds0 [lap(u^)/L] = 0` is multiplied by `L^2` before projecting:
//!
//! `L d/ds0(lap u^) - L' lap(u^) = 0`,
//!
//! which is the same equation with every coefficient bounded (the raw form
//! divides by the logarithm, which vanishes on a circle of ring nodes for
//! every grid point). Substituting the basis expansion of `v` gives, at
//! each grid node, the elliptic system
//!
//! `Mt(x) lap(V) + K1(x) V_x1 + K2(x) V_x2 = 0`
//!
//! with `Mt[n,k] = <L^2 Psi_k' Psi_n>`,
//! `Kj[n,k] = <2 [L (grad L)_j Psi_k' + (L (grad L)' - L' grad L)_j Psi_k] Psi_n>`,
//! where `'` is the arc-length derivative in the source position and `< >`
//! the ring quadrature. The zero-order block vanishes identically because
//! `ln|x - x0|` is harmonic away from `x0`. The unweighted pairing matrix
//! `D[n,k] = <Psi_k' Psi_n>` (unit diagonal, zeros below, determinant one)
//! is kept alongside as the structural object of the truncation.

use super::basis::RingBasis;
use crate::error::{Error, Result};
use crate::geometry::{Point, TransducerRing, UniformGrid};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// `L = ln|x - x0|`.
pub(crate) fn log_distance(x: Point, x0: Point) -> f64 {
    0.5 * x.sub(x0).dot(x.sub(x0)).ln()
}

/// Kernel derivatives at one (grid node, ring node) pair: the logarithm,
/// its spatial gradient, and their arc-length derivatives in the source.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogKernel {
    pub l: f64,
    pub grad: Point,
    /// dL/ds0
    pub l_arc: f64,
    /// d(grad L)/ds0
    pub grad_arc: Point,
}

pub(crate) fn log_kernel(x: Point, x0: Point, tangent: Point) -> LogKernel {
    let d = x.sub(x0);
    let r2 = d.dot(d);
    let l = 0.5 * r2.ln();
    let grad = d.scale(1.0 / r2);
    let dt = d.dot(tangent);
    let l_arc = -dt / r2;
    // d/ds0 of d/r^2 with d' = -tau, (r^2)' = -2 d.tau
    let grad_arc = tangent.scale(-1.0 / r2).add(d.scale(2.0 * dt / (r2 * r2)));
    LogKernel {
        l,
        grad,
        l_arc,
        grad_arc,
    }
}

/// Matrix fields of the projected system.
#[derive(Debug, Clone)]
pub struct OperatorBundle {
    pub n: usize,
    pub grid: UniformGrid,
    /// Structural pairing matrix `D` of the basis (unit-diagonal upper
    /// triangular, determinant one).
    pub m_n: DMatrix<f64>,
    /// Per-node N x N Laplacian blocks `<L^2 Psi_k' Psi_n>`,
    /// layout `node * N * N + row * N + col`.
    pub mt: Vec<f64>,
    /// Per-node N x N first-order blocks, same layout.
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    /// Mean of `L^2` over the ring per node: the information weight the
    /// kernel gives that location (vanishes toward the grid center).
    pub mean_l2: Vec<f64>,
}

/// Assembles the bundle by plain ring quadrature at every grid node; all
/// integrands are bounded, so no masking is required. Ring nodes closer to
/// `x` than 1e-12 (coincident pairs at the square's corners) are skipped.
pub fn assemble_operator_bundle(
    basis: &RingBasis,
    grid: &UniformGrid,
    ring: &TransducerRing,
) -> Result<OperatorBundle> {
    if ring.count != basis.m {
        return Err(Error::invalid(format!(
            "basis sampled at {} nodes but ring has {}",
            basis.m, ring.count
        )));
    }
    let n = basis.n;
    let ng = grid.node_count();
    let positions = ring.positions();
    let tangents: Vec<Point> = (0..ring.count)
        .map(|j| {
            let a = ring.angle(j);
            Point::new(-a.sin(), a.cos())
        })
        .collect();

    let rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> = (0..ng)
        .into_par_iter()
        .map(|node| {
            let i = node / grid.n_per_side;
            let j = node % grid.n_per_side;
            let x = grid.node(i, j);
            let mut mt = vec![0.0; n * n];
            let mut k1 = vec![0.0; n * n];
            let mut k2 = vec![0.0; n * n];
            let mut l2_sum = 0.0;
            for (jr, (&x0, &tau)) in positions.iter().zip(&tangents).enumerate() {
                if x.dist(x0) < 1e-12 {
                    continue;
                }
                let ker = log_kernel(x, x0, tau);
                l2_sum += ker.l * ker.l;
                // vector coefficient of grad(V_k) against Psi_k':
                let a = ker.grad.scale(2.0 * ker.l);
                // and against Psi_k: 2 (L grad' - L' grad)
                let b = ker
                    .grad_arc
                    .scale(2.0 * ker.l)
                    .add(ker.grad.scale(-2.0 * ker.l_arc));
                let l2 = ker.l * ker.l;
                for row in 0..n {
                    let pn = basis.sample(row, jr) * basis.weight;
                    for col in 0..n {
                        let t1 = basis.deriv_sample(col, jr);
                        let t0 = basis.sample(col, jr);
                        mt[row * n + col] += pn * l2 * t1;
                        k1[row * n + col] += pn * (a.x * t1 + b.x * t0);
                        k2[row * n + col] += pn * (a.y * t1 + b.y * t0);
                    }
                }
            }
            (mt, k1, k2, l2_sum / ring.count as f64)
        })
        .collect();

    let mut mt = Vec::with_capacity(ng * n * n);
    let mut k1 = Vec::with_capacity(ng * n * n);
    let mut k2 = Vec::with_capacity(ng * n * n);
    let mut mean_l2 = Vec::with_capacity(ng);
    for (a, b, c, f) in rows {
        mt.extend(a);
        k1.extend(b);
        k2.extend(c);
        mean_l2.push(f);
    }

    Ok(OperatorBundle {
        n,
        grid: grid.clone(),
        m_n: basis.pairing.clone(),
        mt,
        k1,
        k2,
        mean_l2,
    })
}

impl OperatorBundle {
    pub fn mt_at(&self, node: usize) -> &[f64] {
        &self.mt[node * self.n * self.n..(node + 1) * self.n * self.n]
    }

    pub fn k1_at(&self, node: usize) -> &[f64] {
        &self.k1[node * self.n * self.n..(node + 1) * self.n * self.n]
    }

    pub fn k2_at(&self, node: usize) -> &[f64] {
        &self.k2[node * self.n * self.n..(node + 1) * self.n * self.n]
    }
}
