//! Forward wave simulation: P1 Galerkin assembly on disk triangulations,
//! leapfrog time stepping for the Neumann-control system, and the absorbing
//! boundary variant used to synthesize point-source data.

mod solver;
pub mod trace_io;
pub mod waveform;

pub use solver::{solve_cauchy_absorbing, solve_neumann_ibvp, CauchyRun, NeumannRun};
pub use waveform::{cap_delta, cap_delta_line, half_sine, ricker, ControlWaveform};

use crate::error::{Error, Result, Warning};
use crate::geometry::{Point, TriMesh};
use crate::linalg::{CooBuilder, Csr};

/// Assembled P1 system for `q u_tt = laplace(u)`.
///
/// The mass matrix is weighted by the per-triangle coefficient; the lumped
/// variant (row sums) is what the explicit integrator inverts.
#[derive(Debug, Clone)]
pub struct FemSystem {
    pub mesh: TriMesh,
    /// Coefficient sampled at triangle centroids.
    pub q_tri: Vec<f64>,
    /// Consistent q-weighted mass matrix.
    pub mass: Csr,
    /// Row sums of the mass matrix.
    pub mass_lumped: Vec<f64>,
    pub stiffness: Csr,
    /// Length of the boundary edge from boundary node `i` to `i+1` (cyclic).
    pub boundary_edge_len: Vec<f64>,
}

/// Assembles mass and stiffness with `q` sampled at triangle centroids.
pub fn assemble_fem(mesh: &TriMesh, q: &dyn Fn(Point) -> f64) -> Result<FemSystem> {
    let n = mesh.node_count();
    let mut mass = CooBuilder::new(n, n);
    let mut stiff = CooBuilder::new(n, n);
    let mut lumped = vec![0.0; n];
    let mut q_tri = Vec::with_capacity(mesh.triangle_count());

    for t in 0..mesh.triangle_count() {
        let area = mesh.signed_area(t);
        if !(area > 1e-14) {
            return Err(Error::Assembly {
                triangle: t,
                reason: format!("degenerate area {area:.3e}"),
            });
        }
        let qk = q(mesh.centroid(t));
        if !(qk >= 1.0 - 1e-12) || !qk.is_finite() {
            return Err(Error::invalid(format!(
                "coefficient must satisfy q >= 1, got {qk} in triangle {t}"
            )));
        }
        q_tri.push(qk);
        let [a, b, c] = mesh.triangles[t];
        let (pa, pb, pc) = (mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]);
        // hat gradients: grad psi_i = (b_i, c_i) / (2 area)
        let bv = [pb.y - pc.y, pc.y - pa.y, pa.y - pb.y];
        let cv = [pc.x - pb.x, pa.x - pc.x, pb.x - pa.x];
        let idx = [a, b, c];
        for i in 0..3 {
            for j in 0..3 {
                let kij = (bv[i] * bv[j] + cv[i] * cv[j]) / (4.0 * area);
                stiff.push(idx[i], idx[j], kij);
                let mij = qk * area / if i == j { 6.0 } else { 12.0 };
                mass.push(idx[i], idx[j], mij);
                lumped[idx[i]] += mij;
            }
        }
    }

    let nb = mesh.boundary_nodes.len();
    let mut boundary_edge_len = Vec::with_capacity(nb);
    for i in 0..nb {
        let p = mesh.nodes[mesh.boundary_nodes[i]];
        let q_ = mesh.nodes[mesh.boundary_nodes[(i + 1) % nb]];
        boundary_edge_len.push(p.dist(q_));
    }

    Ok(FemSystem {
        mesh: mesh.clone(),
        q_tri,
        mass: mass.build(),
        mass_lumped: lumped,
        stiffness: stiff.build(),
        boundary_edge_len,
    })
}

impl FemSystem {
    /// Nodal load from boundary values `f` given at boundary nodes:
    /// consistent P1 line integrals along the boundary polygon.
    pub fn boundary_load(&self, f: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let bn = &self.mesh.boundary_nodes;
        let nb = bn.len();
        for i in 0..nb {
            let j = (i + 1) % nb;
            let l = self.boundary_edge_len[i];
            out[bn[i]] += l * (2.0 * f[i] + f[j]) / 6.0;
            out[bn[j]] += l * (f[i] + 2.0 * f[j]) / 6.0;
        }
    }

    /// Boundary arc weight of boundary node `i` (half the adjacent edges).
    pub fn boundary_weight(&self, i: usize) -> f64 {
        let nb = self.boundary_edge_len.len();
        0.5 * (self.boundary_edge_len[i] + self.boundary_edge_len[(i + nb - 1) % nb])
    }

    /// Smallest mesh edge; the stability bound scales with it.
    pub fn min_edge(&self) -> f64 {
        self.mesh.min_edge_length()
    }

    pub fn q_min(&self) -> f64 {
        self.q_tri.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn q_mean(&self) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for t in 0..self.mesh.triangle_count() {
            let a = self.mesh.signed_area(t);
            num += self.q_tri[t] * a;
            den += a;
        }
        num / den
    }

    /// Explicit-stability precondition on the time step.
    pub fn dt_bound(&self) -> f64 {
        0.9 * self.min_edge() * self.q_min().sqrt()
    }

    /// Energy of the leapfrog pair `(u_prev, u_next)`:
    /// `E = 1/2 v^T M v + 1/2 u_next^T K u_prev` with the midpoint velocity
    /// `v = (u_next - u_prev) / dt`. This staggered form is the invariant the
    /// central-difference scheme conserves exactly.
    pub fn discrete_energy(&self, u_prev: &[f64], u_next: &[f64], dt: f64) -> f64 {
        let n = u_prev.len();
        let mut kinetic = 0.0;
        for i in 0..n {
            let v = (u_next[i] - u_prev[i]) / dt;
            kinetic += self.mass_lumped[i] * v * v;
        }
        let mut ku = vec![0.0; n];
        self.stiffness.mul_vec(u_prev, &mut ku);
        let potential: f64 = ku.iter().zip(u_next).map(|(a, b)| a * b).sum();
        0.5 * kinetic + 0.5 * potential
    }

    /// Interior inner product `u^T M v` (the weighted L2 pairing).
    pub fn mass_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut mu = vec![0.0; u.len()];
        self.mass.mul_vec(u, &mut mu);
        mu.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// H1-type inner product `u^T (M + K) v` used to grade control targets.
    pub fn h1_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut tmp = vec![0.0; u.len()];
        self.stiffness.mul_vec(u, &mut tmp);
        let kuv: f64 = tmp.iter().zip(v).map(|(a, b)| a * b).sum();
        self.mass_inner(u, v) + kuv
    }
}

/// Dirichlet (and optionally normal-derivative) traces recorded at a fixed
/// set of receivers with a uniform time axis.
#[derive(Debug, Clone)]
pub struct TraceSet {
    pub dt: f64,
    /// Number of recorded samples (steps + 1, sample 0 at t = 0).
    pub samples: usize,
    /// Receiver labels (mesh node ids or probe indices).
    pub receivers: Vec<usize>,
    /// Row-major `samples x receivers`.
    pub p0: Vec<f64>,
    /// Same layout when present.
    pub p1: Option<Vec<f64>>,
}

impl TraceSet {
    pub fn horizon(&self) -> f64 {
        self.dt * (self.samples.saturating_sub(1)) as f64
    }

    pub fn p0_at(&self, sample: usize, receiver: usize) -> f64 {
        self.p0[sample * self.receivers.len() + receiver]
    }

    /// Time series of one receiver.
    pub fn series(&self, receiver: usize) -> Vec<f64> {
        (0..self.samples).map(|s| self.p0_at(s, receiver)).collect()
    }
}

/// Traces for a family of sources sharing one time axis.
#[derive(Debug, Clone)]
pub struct BoundaryTraceSet {
    /// Source label per block (ring node id or control index).
    pub sources: Vec<usize>,
    pub traces: Vec<TraceSet>,
}

/// Final nodal state `U(T)` of a controlled run.
#[derive(Debug, Clone)]
pub struct FinalState {
    pub time: f64,
    pub values: Vec<f64>,
}

/// One-sided second-order normal derivative from traces at a boundary point
/// and one or two inward offsets at spacing `h`:
/// `(3 u0 - 4 u1 + u2) / (2h)` along the outward normal.
///
/// With only one inward sample available the first-order difference
/// `(u0 - u1)/h` is used and a warning is attached.
pub fn normal_derivative_trace(
    u0: &[f64],
    u_in1: &[f64],
    u_in2: Option<&[f64]>,
    h: f64,
    node: usize,
) -> (Vec<f64>, Option<Warning>) {
    match u_in2 {
        Some(u2) => {
            let d = u0
                .iter()
                .zip(u_in1)
                .zip(u2)
                .map(|((&a, &b), &c)| (3.0 * a - 4.0 * b + c) / (2.0 * h))
                .collect();
            (d, None)
        }
        None => {
            let d = u0.iter().zip(u_in1).map(|(&a, &b)| (a - b) / h).collect();
            (d, Some(Warning::FirstOrderFallback { node }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::triangulate_disk;
    use approx::assert_relative_eq;

    #[test]
    fn single_triangle_mass_entries() {
        // unit right triangle: legs along the axes, area 1/2, q = 1
        let mesh = TriMesh {
            nodes: vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
            triangles: vec![[0, 1, 2]],
            boundary_nodes: vec![],
            radius: 1.0,
        };
        let sys = assemble_fem(&mesh, &|_| 1.0).unwrap();
        let area = 0.5;
        let mut y = vec![0.0; 3];
        // column extraction via unit vectors
        for j in 0..3 {
            let mut e = vec![0.0; 3];
            e[j] = 1.0;
            sys.mass.mul_vec(&e, &mut y);
            for i in 0..3 {
                let expect = if i == j { area / 6.0 } else { area / 12.0 };
                assert_relative_eq!(y[i], expect, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn mass_linear_in_q_stiffness_not() {
        let mesh = triangulate_disk(1.0, 0.3, 0.0).unwrap();
        let s1 = assemble_fem(&mesh, &|_| 2.0).unwrap();
        let s2 = assemble_fem(&mesh, &|_| 4.0).unwrap();
        assert_eq!(s1.mass.nnz(), s2.mass.nnz());
        for k in 0..s1.mass.nnz() {
            assert_relative_eq!(2.0 * s1.mass.values[k], s2.mass.values[k], epsilon = 1e-13);
        }
        for k in 0..s1.stiffness.nnz() {
            assert_relative_eq!(s1.stiffness.values[k], s2.stiffness.values[k], epsilon = 1e-15);
        }
    }

    #[test]
    fn stiffness_kills_constants() {
        let mesh = triangulate_disk(1.0, 0.25, 0.1).unwrap();
        let sys = assemble_fem(&mesh, &|_| 1.5).unwrap();
        let ones = vec![1.0; mesh.node_count()];
        let mut y = vec![0.0; mesh.node_count()];
        sys.stiffness.mul_vec(&ones, &mut y);
        for v in y {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_sub_unit_coefficient() {
        let mesh = triangulate_disk(1.0, 0.4, 0.0).unwrap();
        assert!(assemble_fem(&mesh, &|_| 0.5).is_err());
    }

    #[test]
    fn boundary_load_integrates_constants() {
        // integral of 1 against all hats along the circle = circumference
        let mesh = triangulate_disk(1.0, 0.2, 0.0).unwrap();
        let sys = assemble_fem(&mesh, &|_| 1.0).unwrap();
        let nb = mesh.boundary_nodes.len();
        let f = vec![1.0; nb];
        let mut load = vec![0.0; mesh.node_count()];
        sys.boundary_load(&f, &mut load);
        let total: f64 = load.iter().sum();
        // polygonal circumference, not 2 pi exactly
        let perim: f64 = sys.boundary_edge_len.iter().sum();
        assert_relative_eq!(total, perim, epsilon = 1e-12);
    }

    #[test]
    fn normal_trace_exact_for_linears() {
        let u0 = vec![2.0, 3.0];
        let u1 = vec![1.5, 2.5];
        let u2 = vec![1.0, 2.0];
        let (d, w) = normal_derivative_trace(&u0, &u1, Some(&u2), 0.5, 0);
        assert!(w.is_none());
        assert_relative_eq!(d[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(d[1], 1.0, epsilon = 1e-14);
        // constants: zero
        let c = vec![4.0; 2];
        let (d, _) = normal_derivative_trace(&c, &c, Some(&c), 0.5, 0);
        assert_relative_eq!(d[0], 0.0);
    }

    #[test]
    fn normal_trace_fallback_warns() {
        let (d, w) = normal_derivative_trace(&[1.0], &[0.9], None, 0.1, 5);
        assert!(matches!(w, Some(Warning::FirstOrderFallback { node: 5 })));
        assert_relative_eq!(d[0], 1.0, epsilon = 1e-12);
    }
}
