//! Structured polar triangulation of a disk.

use super::Point;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Triangulation of a disk. Triangles are counterclockwise; boundary nodes
/// are listed in counterclockwise angular order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriMesh {
    pub nodes: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_nodes: Vec<usize>,
    pub radius: f64,
}

impl TriMesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((q.x - p.x) * (r.y - p.y) - (r.x - p.x) * (q.y - p.y))
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        Point::new((p.x + q.x + r.x) / 3.0, (p.y + q.y + r.y) / 3.0)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangle_count()).map(|t| self.signed_area(t)).sum()
    }

    pub fn max_edge_length(&self) -> f64 {
        let mut m = 0.0f64;
        for tri in &self.triangles {
            for e in 0..3 {
                let d = self.nodes[tri[e]].dist(self.nodes[tri[(e + 1) % 3]]);
                m = m.max(d);
            }
        }
        m
    }

    pub fn min_edge_length(&self) -> f64 {
        let mut m = f64::INFINITY;
        for tri in &self.triangles {
            for e in 0..3 {
                let d = self.nodes[tri[e]].dist(self.nodes[tri[(e + 1) % 3]]);
                m = m.min(d);
            }
        }
        m
    }

    /// Barycentric coordinates of `p` in triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        let det = (pb.x - pa.x) * (pc.y - pa.y) - (pc.x - pa.x) * (pb.y - pa.y);
        let l1 = ((pb.x - p.x) * (pc.y - p.y) - (pc.x - p.x) * (pb.y - p.y)) / det;
        let l2 = ((pc.x - p.x) * (pa.y - p.y) - (pa.x - p.x) * (pc.y - p.y)) / det;
        [l1, l2, 1.0 - l1 - l2]
    }

    fn check(&self) -> Result<()> {
        for (t, tri) in self.triangles.iter().enumerate() {
            for &n in tri {
                if n >= self.nodes.len() {
                    return Err(Error::Assembly {
                        triangle: t,
                        reason: format!("node index {n} out of range"),
                    });
                }
            }
            if self.signed_area(t) <= 0.0 {
                return Err(Error::Assembly {
                    triangle: t,
                    reason: "non-positive signed area".into(),
                });
            }
        }
        for &b in &self.boundary_nodes {
            let r = self.nodes[b].norm();
            if (r - self.radius).abs() > 1e-12 * self.radius {
                return Err(Error::invalid(format!(
                    "boundary node {b} off circle by {:.3e}",
                    (r - self.radius).abs()
                )));
            }
        }
        Ok(())
    }
}

/// Triangulates the disk of the given radius with target edge length
/// `target_h`. The mesh is rotated rigidly by `angular_offset`.
pub fn triangulate_disk(radius: f64, target_h: f64, angular_offset: f64) -> Result<TriMesh> {
    if !(target_h > 0.0 && target_h < radius) {
        return Err(Error::invalid(format!(
            "target_h must lie in (0, radius), got {target_h} for radius {radius}"
        )));
    }
    let rings = (radius / target_h).ceil() as usize;
    build_polar_mesh(radius, rings, angular_offset)
}

/// Triangulates a disk of radius `outer` while forcing a node ring to land
/// exactly on the circle of radius `inner`. Returns the mesh and the indices
/// of the nodes on that inner ring, in counterclockwise order.
pub fn triangulate_disk_with_inner_ring(
    outer: f64,
    inner: f64,
    target_h: f64,
    angular_offset: f64,
) -> Result<(TriMesh, Vec<usize>)> {
    if !(inner > 0.0 && inner < outer) {
        return Err(Error::invalid(format!(
            "inner ring radius must lie in (0, outer), got {inner} for outer {outer}"
        )));
    }
    if !(target_h > 0.0 && target_h < outer) {
        return Err(Error::invalid("target_h must lie in (0, outer)".to_string()));
    }
    let ratio = inner / outer;
    let min_rings = (outer / target_h).ceil() as usize;
    let rings = (min_rings..min_rings + 10_000)
        .find(|&k| {
            let m = k as f64 * ratio;
            (m - m.round()).abs() < 1e-9 && m.round() >= 1.0
        })
        .ok_or_else(|| {
            Error::invalid(format!("no ring count <= {} aligns with inner radius {inner}", min_rings + 10_000))
        })?;
    let mesh = build_polar_mesh(outer, rings, angular_offset)?;
    let inner_ring = (rings as f64 * ratio).round() as usize;
    Ok((mesh, ring_node_indices(inner_ring)))
}

/// Node indices of polar ring `k` (ring 0 is the center node).
fn ring_node_indices(k: usize) -> Vec<usize> {
    if k == 0 {
        return vec![0];
    }
    // ring k starts after center + rings 1..k-1, i.e. at 1 + 3k(k-1)
    let start = 1 + 3 * k * (k - 1);
    (start..start + 6 * k).collect()
}

fn build_polar_mesh(radius: f64, rings: usize, angular_offset: f64) -> Result<TriMesh> {
    let rings = rings.max(1);
    let mut nodes = vec![Point::new(0.0, 0.0)];
    for k in 1..=rings {
        let r = radius * k as f64 / rings as f64;
        let n_k = 6 * k;
        for j in 0..n_k {
            let a = angular_offset + 2.0 * std::f64::consts::PI * j as f64 / n_k as f64;
            nodes.push(Point::new(r * a.cos(), r * a.sin()));
        }
    }
    // snap the outer ring exactly onto the circle against cos/sin rounding
    for &b in &ring_node_indices(rings) {
        let p = nodes[b];
        let r = p.norm();
        nodes[b] = p.scale(radius / r);
    }

    let mut triangles: Vec<[usize; 3]> = Vec::with_capacity(6 * rings * rings);
    // center fan
    let ring1 = ring_node_indices(1);
    for j in 0..6 {
        triangles.push([0, ring1[j], ring1[(j + 1) % 6]]);
    }
    // annuli between ring k and ring k+1
    for k in 1..rings {
        let inner = ring_node_indices(k);
        let outer = ring_node_indices(k + 1);
        for s in 0..6 {
            // sextant s: k inner intervals laddered against k+1 outer intervals
            let inner_at = |i: usize| inner[(s * k + i) % inner.len()];
            let outer_at = |i: usize| outer[(s * (k + 1) + i) % outer.len()];
            for i in 0..=k {
                triangles.push([outer_at(i), outer_at(i + 1), inner_at(i)]);
            }
            for i in 0..k {
                triangles.push([inner_at(i), outer_at(i + 1), inner_at(i + 1)]);
            }
        }
    }
    // enforce counterclockwise orientation
    let mut mesh = TriMesh {
        nodes,
        triangles,
        boundary_nodes: ring_node_indices(rings),
        radius,
    };
    for t in 0..mesh.triangle_count() {
        if mesh.signed_area(t) < 0.0 {
            mesh.triangles[t].swap(1, 2);
        }
    }
    mesh.check()?;
    Ok(mesh)
}

/// Precomputed point-to-triangle assignment for interpolating FEM fields at
/// arbitrary probe locations.
#[derive(Debug, Clone)]
pub struct PointLocator {
    pub points: Vec<Point>,
    /// Containing triangle and barycentric weights per point.
    pub cells: Vec<(usize, [f64; 3])>,
}

impl PointLocator {
    /// Locates every point by scanning triangles with a small tolerance for
    /// points on edges or just outside the hull due to rounding.
    pub fn new(mesh: &TriMesh, points: Vec<Point>) -> Result<Self> {
        let mut cells = Vec::with_capacity(points.len());
        for (pi, &p) in points.iter().enumerate() {
            let mut best: Option<(usize, [f64; 3], f64)> = None;
            for t in 0..mesh.triangle_count() {
                let bc = mesh.barycentric(t, p);
                let worst = bc.iter().fold(f64::INFINITY, |m, &v| m.min(v));
                match best {
                    Some((_, _, w)) if w >= worst => {}
                    _ => best = Some((t, bc, worst)),
                }
                if worst >= 0.0 {
                    break;
                }
            }
            let (t, bc, worst) = best.unwrap();
            if worst < -1e-6 {
                return Err(Error::invalid(format!(
                    "probe point {pi} at ({:.4}, {:.4}) lies outside the mesh",
                    p.x, p.y
                )));
            }
            // clamp tiny negative weights from rounding
            let mut bc = bc;
            let s: f64 = bc.iter().map(|v| v.max(0.0)).sum();
            for v in &mut bc {
                *v = v.max(0.0) / s;
            }
            cells.push((t, bc));
        }
        Ok(PointLocator { points, cells })
    }

    /// Evaluates a nodal field at probe point `i`.
    pub fn eval(&self, mesh: &TriMesh, nodal: &[f64], i: usize) -> f64 {
        let (t, bc) = self.cells[i];
        let [a, b, c] = mesh.triangles[t];
        bc[0] * nodal[a] + bc[1] * nodal[b] + bc[2] * nodal[c]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
