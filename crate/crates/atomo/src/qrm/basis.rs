//! Orthonormal source basis on the measurement circle.
//!
//! The family `phi_k(s) = t(s)^k e^s` (with `t` the arc parameter rescaled
//! to [-1, 1]) has the property that arc-length differentiation is
//! triangular with unit diagonal: `d phi_k / ds = phi_k + (2k/L) phi_{k-1}`.
//! Orthonormalizing by a triangular recombination (modified Gram-Schmidt
//! with reorthogonalization) preserves that structure, so the pairing
//! matrix `D[n, k] = integral(Psi_k' Psi_n)` comes out upper triangular
//! with unit diagonal and determinant one.

use crate::error::{Error, Result};
use crate::geometry::TransducerRing;
use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct RingBasis {
    /// Truncation order N.
    pub n: usize,
    /// Quadrature node count M (= transducer count).
    pub m: usize,
    /// Ring radius.
    pub radius: f64,
    /// Quadrature weight per node, `2 pi R / M`.
    pub weight: f64,
    /// `Psi_k(theta_j)`, layout `k * m + j`.
    pub samples: Vec<f64>,
    /// Arc-length derivatives `Psi_k'(theta_j)`, same layout.
    pub deriv: Vec<f64>,
    /// Pairing matrix `D[n, k] = sum_j w Psi_k'(j) Psi_n(j)`.
    pub pairing: DMatrix<f64>,
    /// Singular-value ratio of the weighted sample matrix (diagnostic).
    pub sv_ratio: f64,
}

/// Builds the orthonormal basis of order `n` sampled at the ring's
/// transducer nodes.
pub fn build_ring_basis(n: usize, ring: &TransducerRing) -> Result<RingBasis> {
    let m = ring.count;
    if n < 1 {
        return Err(Error::invalid("basis order must be at least 1".to_string()));
    }
    if m < 4 * n {
        return Err(Error::invalid(format!(
            "ring quadrature needs at least 4N = {} nodes, got {m}",
            4 * n
        )));
    }
    let radius = ring.circle.radius;
    let circumference = ring.circumference();
    let weight = circumference / m as f64;

    // raw family samples: phi_k(s_j) = t_j^k e^{s_j}
    let mut phi = vec![0.0; n * m];
    let mut dphi = vec![0.0; n * m];
    for j in 0..m {
        let s = ring.arc_coord(j);
        let t = (s - 0.5 * circumference) / (0.5 * circumference);
        let es = s.exp();
        let mut tk = 1.0;
        for k in 0..n {
            phi[k * m + j] = tk * es;
            tk *= t;
        }
    }
    // d phi_k / ds = phi_k + (2k / circumference) phi_{k-1}
    for k in 0..n {
        for j in 0..m {
            dphi[k * m + j] = phi[k * m + j]
                + if k > 0 {
                    (2.0 * k as f64 / circumference) * phi[(k - 1) * m + j]
                } else {
                    0.0
                };
        }
    }

    // conditioning diagnostic on the weighted sample matrix
    let sqrt_w = weight.sqrt();
    let a = DMatrix::from_fn(m, n, |j, k| sqrt_w * phi[k * m + j]);
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let sv_ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if sv_ratio < 1e-13 {
        return Err(Error::Basis(format!(
            "sample matrix singular value ratio {sv_ratio:.3e}; reduce the basis order N = {n}"
        )));
    }

    // modified Gram-Schmidt with one reorthogonalization pass; the
    // recombination is triangular, recorded in R
    let mut q = a;
    let mut r_mat = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        for _pass in 0..2 {
            for i in 0..k {
                let c = q.column(i).dot(&q.column(k));
                let qi = q.column(i).clone_owned();
                let mut col = q.column_mut(k);
                col.axpy(-c, &qi, 1.0);
                r_mat[(i, k)] += c;
            }
        }
        let norm = q.column(k).norm();
        if norm < 1e-300 {
            return Err(Error::Basis(format!("breakdown at basis function {k}")));
        }
        r_mat[(k, k)] = norm;
        q.column_mut(k).scale_mut(1.0 / norm);
    }

    // Psi_k = sum_i phi_i C[i, k] with C = R^{-1} (upper triangular)
    let mut c = DMatrix::<f64>::identity(n, n);
    for k in 0..n {
        for i in (0..=k).rev() {
            let mut acc = if i == k { 1.0 } else { 0.0 };
            for l in i + 1..=k {
                acc -= r_mat[(i, l)] * c[(l, k)];
            }
            c[(i, k)] = acc / r_mat[(i, i)];
        }
    }
    // zero the spurious lower identity entries from initialization
    for k in 0..n {
        for i in k + 1..n {
            c[(i, k)] = 0.0;
        }
    }

    let mut samples = vec![0.0; n * m];
    let mut deriv = vec![0.0; n * m];
    for k in 0..n {
        for j in 0..m {
            samples[k * m + j] = q[(j, k)] / sqrt_w;
            let mut d = 0.0;
            for i in 0..=k {
                d += c[(i, k)] * dphi[i * m + j];
            }
            deriv[k * m + j] = d;
        }
    }

    let mut pairing = DMatrix::<f64>::zeros(n, n);
    for row in 0..n {
        for col in 0..n {
            let mut acc = 0.0;
            for j in 0..m {
                acc += weight * deriv[col * m + j] * samples[row * m + j];
            }
            pairing[(row, col)] = acc;
        }
    }

    Ok(RingBasis {
        n,
        m,
        radius,
        weight,
        samples,
        deriv,
        pairing,
        sv_ratio,
    })
}

impl RingBasis {
    pub fn sample(&self, k: usize, j: usize) -> f64 {
        self.samples[k * self.m + j]
    }

    pub fn deriv_sample(&self, k: usize, j: usize) -> f64 {
        self.deriv[k * self.m + j]
    }

    /// Gram matrix under the ring quadrature; identity up to rounding.
    pub fn gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::<f64>::zeros(self.n, self.n);
        for a in 0..self.n {
            for b in 0..self.n {
                let mut acc = 0.0;
                for j in 0..self.m {
                    acc += self.weight * self.sample(a, j) * self.sample(b, j);
                }
                g[(a, b)] = acc;
            }
        }
        g
    }

    /// Condition number of the pairing matrix.
    pub fn pairing_condition(&self) -> f64 {
        let svd = self.pairing.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        }
    }

    /// Weighted least-squares projection of ring samples onto the basis,
    /// restricted to nodes where `mask` is true. With a full mask this is
    /// the plain quadrature projection (the basis is orthonormal).
    pub fn project_masked(&self, values: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
        assert_eq!(values.len(), self.m);
        assert_eq!(mask.len(), self.m);
        let kept = mask.iter().filter(|&&b| b).count();
        if kept < self.n {
            return Err(Error::Fit(format!(
                "only {kept} unmasked ring nodes for {} basis functions",
                self.n
            )));
        }
        let mut gram = DMatrix::<f64>::zeros(self.n, self.n);
        let mut rhs = nalgebra::DVector::<f64>::zeros(self.n);
        for j in 0..self.m {
            if !mask[j] {
                continue;
            }
            for a in 0..self.n {
                let sa = self.sample(a, j);
                rhs[a] += self.weight * sa * values[j];
                for b in a..self.n {
                    gram[(a, b)] += self.weight * sa * self.sample(b, j);
                }
            }
        }
        for a in 0..self.n {
            for b in 0..a {
                gram[(a, b)] = gram[(b, a)];
            }
        }
        let chol = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Fit("masked projection Gram not positive definite".into()))?;
        Ok(chol.solve(&rhs).as_slice().to_vec())
    }

    /// Synthesis at ring node `j` from coefficients.
    pub fn synth(&self, coeffs: &[f64], j: usize) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * self.sample(k, j))
            .sum()
    }
}
