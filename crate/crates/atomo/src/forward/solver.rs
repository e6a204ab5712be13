//! Explicit leapfrog integrators with lumped mass: the Neumann-control
//! system on a disk and the point-source system with a first-order
//! absorbing condition on an outer circle.

use super::waveform::ControlWaveform;
use super::{FemSystem, FinalState, TraceSet};
use crate::error::{Error, Result, Warning};
use crate::geometry::{Point, PointLocator};

#[derive(Debug, Clone)]
pub struct NeumannSpec {
    pub dt: f64,
    pub horizon: f64,
    /// Time at which the final state is captured (defaults to the horizon).
    pub snapshot_time: Option<f64>,
    /// Record the discrete energy every this many steps (0 = never).
    pub energy_every: usize,
}

#[derive(Debug, Clone)]
pub struct NeumannRun {
    /// Dirichlet traces at all boundary nodes, every step.
    pub traces: TraceSet,
    pub final_state: FinalState,
    /// `(t, E)` samples of the conserved leapfrog energy.
    pub energies: Vec<(f64, f64)>,
}

fn check_dt(sys: &FemSystem, dt: f64) -> Result<()> {
    let bound = sys.dt_bound();
    if !(dt > 0.0) || dt > bound {
        return Err(Error::Stability { dt, bound });
    }
    Ok(())
}

fn check_finite(u: &[f64], step: usize) -> Result<()> {
    if u.iter().take(32).any(|v| !v.is_finite()) || !u.iter().fold(0.0, |a, &b| a + b).is_finite() {
        return Err(Error::Divergence { step });
    }
    Ok(())
}

/// Integrates `M u_tt + K u = F(t)` with zero initial data, where `F` is the
/// consistent boundary load of the Neumann control.
pub fn solve_neumann_ibvp(
    sys: &FemSystem,
    control: &ControlWaveform,
    spec: &NeumannSpec,
) -> Result<NeumannRun> {
    check_dt(sys, spec.dt)?;
    let dt = spec.dt;
    let steps = (spec.horizon / dt).round() as usize;
    let n = sys.mesh.node_count();
    let nb = sys.mesh.boundary_nodes.len();

    // separable control: load shape times scalar time signal
    let arc: Vec<f64> = {
        let mut acc = 0.0;
        let mut v = Vec::with_capacity(nb);
        for i in 0..nb {
            v.push(acc);
            acc += sys.boundary_edge_len[i];
        }
        v
    };
    let circumference: f64 = sys.boundary_edge_len.iter().sum();
    let profile = control.spatial_profile(&arc, circumference);
    let mut load_shape = vec![0.0; n];
    sys.boundary_load(&profile, &mut load_shape);

    let snap_step = spec
        .snapshot_time
        .map(|t| (t / dt).round() as usize)
        .unwrap_or(steps)
        .min(steps);

    let mut u_prev = vec![0.0; n];
    let mut u_curr = vec![0.0; n];
    let g0 = control.time_signal(0.0);
    for i in 0..n {
        u_curr[i] = 0.5 * dt * dt * g0 * load_shape[i] / sys.mass_lumped[i];
    }

    let mut p0 = Vec::with_capacity((steps + 1) * nb);
    let record = |u: &[f64], out: &mut Vec<f64>| {
        for &b in &sys.mesh.boundary_nodes {
            out.push(u[b]);
        }
    };
    record(&u_prev, &mut p0); // t = 0
    record(&u_curr, &mut p0); // t = dt

    let mut snapshot = if snap_step == 0 {
        Some(u_prev.clone())
    } else if snap_step == 1 {
        Some(u_curr.clone())
    } else {
        None
    };

    let mut energies = Vec::new();
    let mut ku = vec![0.0; n];
    let mut u_next = vec![0.0; n];
    for step in 1..steps {
        let t = step as f64 * dt;
        sys.stiffness.mul_vec(&u_curr, &mut ku);
        let g = control.time_signal(t);
        for i in 0..n {
            let accel = (g * load_shape[i] - ku[i]) / sys.mass_lumped[i];
            u_next[i] = 2.0 * u_curr[i] - u_prev[i] + dt * dt * accel;
        }
        std::mem::swap(&mut u_prev, &mut u_curr);
        std::mem::swap(&mut u_curr, &mut u_next);
        record(&u_curr, &mut p0);
        if step + 1 == snap_step {
            snapshot = Some(u_curr.clone());
        }
        if spec.energy_every > 0 && (step + 1) % spec.energy_every == 0 {
            energies.push(((step + 1) as f64 * dt, sys.discrete_energy(&u_prev, &u_curr, dt)));
        }
        if (step + 1) % 64 == 0 {
            check_finite(&u_curr, step + 1)?;
        }
    }
    check_finite(&u_curr, steps)?;

    Ok(NeumannRun {
        traces: TraceSet {
            dt,
            samples: steps + 1,
            receivers: sys.mesh.boundary_nodes.clone(),
            p0,
            p1: None,
        },
        final_state: FinalState {
            time: snap_step as f64 * dt,
            values: snapshot.unwrap_or_else(|| u_curr.clone()),
        },
        energies,
    })
}

/// Integrates `M u_tt + K u = F_vol(t) + F_bnd(t)` with zero initial data
/// and explicit volumetric forcing; used by manufactured-solution checks.
/// Returns the nodal state at the horizon.
pub fn solve_forced(
    sys: &FemSystem,
    f_vol: &dyn Fn(Point, f64) -> f64,
    g_bnd: &dyn Fn(Point, f64) -> f64,
    horizon: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    check_dt(sys, dt)?;
    let steps = (horizon / dt).round() as usize;
    let n = sys.mesh.node_count();
    let nb = sys.mesh.boundary_nodes.len();

    // unweighted lumped mass for the nodal volume quadrature
    let mut area_lumped = vec![0.0; n];
    for t in 0..sys.mesh.triangle_count() {
        let a3 = sys.mesh.signed_area(t) / 3.0;
        for &v in &sys.mesh.triangles[t] {
            area_lumped[v] += a3;
        }
    }

    let load = |t: f64, out: &mut Vec<f64>| {
        for i in 0..n {
            out[i] = area_lumped[i] * f_vol(sys.mesh.nodes[i], t);
        }
        let g: Vec<f64> = (0..nb)
            .map(|i| g_bnd(sys.mesh.nodes[sys.mesh.boundary_nodes[i]], t))
            .collect();
        let mut bl = vec![0.0; n];
        sys.boundary_load(&g, &mut bl);
        for i in 0..n {
            out[i] += bl[i];
        }
    };

    let mut u_prev = vec![0.0; n];
    let mut u_curr = vec![0.0; n];
    let mut f = vec![0.0; n];
    load(0.0, &mut f);
    for i in 0..n {
        u_curr[i] = 0.5 * dt * dt * f[i] / sys.mass_lumped[i];
    }
    let mut ku = vec![0.0; n];
    let mut u_next = vec![0.0; n];
    for step in 1..steps {
        let t = step as f64 * dt;
        sys.stiffness.mul_vec(&u_curr, &mut ku);
        load(t, &mut f);
        for i in 0..n {
            let accel = (f[i] - ku[i]) / sys.mass_lumped[i];
            u_next[i] = 2.0 * u_curr[i] - u_prev[i] + dt * dt * accel;
        }
        std::mem::swap(&mut u_prev, &mut u_curr);
        std::mem::swap(&mut u_curr, &mut u_next);
        if (step + 1) % 64 == 0 {
            check_finite(&u_curr, step + 1)?;
        }
    }
    check_finite(&u_curr, steps)?;
    Ok(u_curr)
}

#[derive(Debug, Clone)]
pub struct CauchySpec {
    pub dt: f64,
    pub horizon: f64,
    /// Cap source radius.
    pub eps: f64,
    /// Stop once the mass-weighted state norm falls below this.
    pub decay_threshold: f64,
}

#[derive(Debug, Clone)]
pub struct CauchyRun {
    /// Row-major `samples x probes` Dirichlet values at the probe points.
    pub probe_p0: Vec<f64>,
    pub samples: usize,
    pub dt: f64,
    pub final_norm: f64,
    pub warning: Option<Warning>,
}

impl CauchyRun {
    pub fn probe_series(&self, n_probes: usize, probe: usize) -> Vec<f64> {
        (0..self.samples).map(|s| self.probe_p0[s * n_probes + probe]).collect()
    }
}

/// Point-source run on the outer disk: initial velocity is the lumped-mass
/// projection of a unit-mass cap at `source`, and the outer circle carries
/// the first-order outgoing condition
/// `v_t + (1/sqrt(q^)) dv/dnu + v / (2 R_S sqrt(q^)) = 0`
/// with `q^` the area mean of the coefficient.
pub fn solve_cauchy_absorbing(
    sys: &FemSystem,
    source: Point,
    probes: &PointLocator,
    spec: &CauchySpec,
) -> Result<CauchyRun> {
    check_dt(sys, spec.dt)?;
    let dt = spec.dt;
    let steps = (spec.horizon / dt).round() as usize;
    let n = sys.mesh.node_count();
    let q_hat = sys.q_mean();
    let r_s = sys.mesh.radius;

    // cap load, normalized to exactly unit mass against the hat partition
    let mut cap_load = vec![0.0; n];
    let mid = |a: Point, b: Point| Point::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
    for t in 0..sys.mesh.triangle_count() {
        let [a, b, c] = sys.mesh.triangles[t];
        let (pa, pb, pc) = (sys.mesh.nodes[a], sys.mesh.nodes[b], sys.mesh.nodes[c]);
        let area = sys.mesh.signed_area(t);
        // edge-midpoint rule, exact for quadratics; hats take value 1/2 on
        // the two adjacent midpoints
        let m_ab = mid(pa, pb);
        let m_bc = mid(pb, pc);
        let m_ca = mid(pc, pa);
        let w = area / 3.0;
        let cap = |p: Point| super::waveform::cap_delta(p.dist(source), spec.eps);
        let (f_ab, f_bc, f_ca) = (cap(m_ab), cap(m_bc), cap(m_ca));
        cap_load[a] += w * 0.5 * (f_ab + f_ca);
        cap_load[b] += w * 0.5 * (f_ab + f_bc);
        cap_load[c] += w * 0.5 * (f_bc + f_ca);
    }
    let total: f64 = cap_load.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid(format!(
            "cap source at ({:.3}, {:.3}) with eps = {} not resolved by the mesh",
            source.x, source.y, spec.eps
        )));
    }
    for v in &mut cap_load {
        *v /= total;
    }

    // absorbing terms: lumped boundary mass on the outer circle
    let nb = sys.mesh.boundary_nodes.len();
    let mut damp = vec![0.0; n]; // diagonal of C = sqrt(q^) B
    let mut stiff_extra = vec![0.0; n]; // diagonal of B / (2 R_S)
    for i in 0..nb {
        let node = sys.mesh.boundary_nodes[i];
        let w = sys.boundary_weight(i);
        damp[node] = q_hat.sqrt() * w;
        stiff_extra[node] = w / (2.0 * r_s);
    }

    let mut v0 = vec![0.0; n];
    for i in 0..n {
        v0[i] = cap_load[i] / sys.mass_lumped[i];
    }

    let mut u_prev = vec![0.0; n];
    let mut u_curr = vec![0.0; n];
    for i in 0..n {
        u_curr[i] = dt * v0[i] - 0.5 * dt * dt * damp[i] * v0[i] / sys.mass_lumped[i];
    }

    let np = probes.len();
    let mut p0 = Vec::with_capacity((steps + 1) * np);
    let record = |u: &[f64], out: &mut Vec<f64>| {
        for i in 0..np {
            out.push(probes.eval(&sys.mesh, u, i));
        }
    };
    record(&u_prev, &mut p0);
    record(&u_curr, &mut p0);

    let mut ku = vec![0.0; n];
    let mut u_next = vec![0.0; n];
    let mut samples = 2usize;
    let mut final_norm;
    let mass_norm = |u: &[f64], sys: &FemSystem| {
        u.iter()
            .zip(&sys.mass_lumped)
            .map(|(v, m)| m * v * v)
            .sum::<f64>()
            .sqrt()
    };
    for step in 1..steps {
        let t_unused = step as f64 * dt;
        let _ = t_unused;
        sys.stiffness.mul_vec(&u_curr, &mut ku);
        for i in 0..n {
            let m = sys.mass_lumped[i];
            let rhs = 2.0 * m * u_curr[i]
                - (m - 0.5 * dt * damp[i]) * u_prev[i]
                - dt * dt * (ku[i] + stiff_extra[i] * u_curr[i]);
            u_next[i] = rhs / (m + 0.5 * dt * damp[i]);
        }
        std::mem::swap(&mut u_prev, &mut u_curr);
        std::mem::swap(&mut u_curr, &mut u_next);
        record(&u_curr, &mut p0);
        samples += 1;
        if (step + 1) % 64 == 0 {
            check_finite(&u_curr, step + 1)?;
        }
        if (step + 1) % 16 == 0 {
            final_norm = mass_norm(&u_curr, sys);
            if final_norm <= spec.decay_threshold {
                break;
            }
        }
    }
    check_finite(&u_curr, samples - 1)?;
    final_norm = mass_norm(&u_curr, sys);
    let warning = if final_norm > spec.decay_threshold {
        Some(Warning::NonDecay {
            final_norm,
            threshold: spec.decay_threshold,
        })
    } else {
        None
    };

    Ok(CauchyRun {
        probe_p0: p0,
        samples,
        dt,
        final_norm,
        warning,
    })
}
