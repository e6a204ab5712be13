//! Geometric primitives: disks, the inscribed square, uniform grids,
//! structured disk triangulations, and transducer rings.
//!
//! Meshes are generated by a deterministic polar refinement (rings of nodes
//! at radii `k*R/K`, ring `k` carrying `6k` nodes) rather than Delaunay on
//! scattered points, so repeated runs produce bitwise identical geometry.

mod mesh;
pub mod serialize;

pub use mesh::{triangulate_disk, triangulate_disk_with_inner_ring, PointLocator, TriMesh};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A point in the dimensionless plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Point) -> f64 {
        self.sub(o).norm()
    }
}

/// Closed disk `{ |x - center| < radius }`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("disk radius must be positive, got {radius}")));
        }
        Ok(Disk { center, radius })
    }

    pub fn centered(radius: f64) -> Result<Self> {
        Disk::new(Point::new(0.0, 0.0), radius)
    }
}

/// Axis-aligned square inscribed in a circle of the given radius, centered
/// at the origin. Side length is `radius * sqrt(2)`; all four corners lie on
/// the circle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InscribedSquare {
    pub side: f64,
}

pub fn inscribed_square(radius: f64) -> Result<InscribedSquare> {
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    Ok(InscribedSquare {
        side: radius * std::f64::consts::SQRT_2,
    })
}

impl InscribedSquare {
    pub fn half(&self) -> f64 {
        0.5 * self.side
    }

    pub fn corners(&self) -> [Point; 4] {
        let h = self.half();
        [
            Point::new(-h, -h),
            Point::new(h, -h),
            Point::new(h, h),
            Point::new(-h, h),
        ]
    }

    /// Map from the unit parameter square `(s, t) in [0,1]^2` onto this square.
    pub fn param_map(&self, s: f64, t: f64) -> Point {
        Point::new(self.side * s - self.half(), self.side * t - self.half())
    }
}

/// Tensor grid over a square, nodes ordered row-major: index `i * n + j`
/// maps to `origin + spacing * (j, i)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformGrid {
    pub origin: Point,
    pub spacing: f64,
    pub n_per_side: usize,
}

/// Builds the `n x n` grid covering the axis-aligned square of the given
/// side, centered at the origin.
pub fn build_uniform_grid(side: f64, n: usize) -> Result<UniformGrid> {
    if n < 2 {
        return Err(Error::invalid(format!("grid needs n >= 2 nodes per side, got {n}")));
    }
    if !(side > 0.0) {
        return Err(Error::invalid(format!("grid side must be positive, got {side}")));
    }
    Ok(UniformGrid {
        origin: Point::new(-0.5 * side, -0.5 * side),
        spacing: side / (n as f64 - 1.0),
        n_per_side: n,
    })
}

impl UniformGrid {
    pub fn node_count(&self) -> usize {
        self.n_per_side * self.n_per_side
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + self.spacing * j as f64,
            self.origin.y + self.spacing * i as f64,
        )
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_per_side + j
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        let n = self.n_per_side;
        i == 0 || j == 0 || i == n - 1 || j == n - 1
    }

    pub fn is_corner(&self, i: usize, j: usize) -> bool {
        let n = self.n_per_side;
        (i == 0 || i == n - 1) && (j == 0 || j == n - 1)
    }

    /// Inward unit normal direction for a boundary node, as integer steps
    /// `(di, dj)`. Corners return the diagonal combination.
    pub fn inward_steps(&self, i: usize, j: usize) -> (isize, isize) {
        let n = self.n_per_side;
        let di = if i == 0 {
            1
        } else if i == n - 1 {
            -1
        } else {
            0
        };
        let dj = if j == 0 {
            1
        } else if j == n - 1 {
            -1
        } else {
            0
        };
        (di, dj)
    }

    /// Outward unit normal of the square at a non-corner boundary node.
    pub fn outward_normal(&self, i: usize, j: usize) -> Point {
        let (di, dj) = self.inward_steps(i, j);
        let v = Point::new(-(dj as f64), -(di as f64));
        let n = v.norm();
        v.scale(1.0 / n)
    }
}

/// Uniformly spaced transducers on a circle. Angles are strictly increasing
/// with spacing `2*pi/count`, starting at `offset`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransducerRing {
    pub circle: Disk,
    pub count: usize,
    pub offset: f64,
}

impl TransducerRing {
    pub fn new(circle: Disk, count: usize, offset: f64) -> Result<Self> {
        if count < 3 {
            return Err(Error::invalid(format!("transducer ring needs >= 3 elements, got {count}")));
        }
        Ok(TransducerRing { circle, count, offset })
    }

    pub fn angle(&self, j: usize) -> f64 {
        self.offset + 2.0 * std::f64::consts::PI * j as f64 / self.count as f64
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.angle(j)).collect()
    }

    pub fn position(&self, j: usize) -> Point {
        let a = self.angle(j);
        Point::new(
            self.circle.center.x + self.circle.radius * a.cos(),
            self.circle.center.y + self.circle.radius * a.sin(),
        )
    }

    pub fn positions(&self) -> Vec<Point> {
        (0..self.count).map(|j| self.position(j)).collect()
    }

    /// Outward unit normal at transducer `j`.
    pub fn normal(&self, j: usize) -> Point {
        let a = self.angle(j);
        Point::new(a.cos(), a.sin())
    }

    /// Quadrature weight of one node for integrals over the circle.
    pub fn arc_weight(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.circle.radius / self.count as f64
    }

    /// Arc-length coordinate of transducer `j` (radius times angle from offset).
    pub fn arc_coord(&self, j: usize) -> f64 {
        self.circle.radius * 2.0 * std::f64::consts::PI * j as f64 / self.count as f64
    }

    pub fn circumference(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.circle.radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_basic_arithmetic() {
        let g = build_uniform_grid(2f64.sqrt(), 3).unwrap();
        assert_eq!(g.node_count(), 9);
        assert_relative_eq!(g.spacing, 2f64.sqrt() / 2.0);
    }

    #[test]
    fn grid_paper_scale_accepted() {
        let g = build_uniform_grid(2f64.sqrt(), 256).unwrap();
        assert_eq!(g.node_count(), 256 * 256);
    }

    #[test]
    fn grid_minimal_two_by_two() {
        let g = build_uniform_grid(1.0, 2).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_relative_eq!(g.spacing, 1.0);
        assert_relative_eq!(g.node(1, 1).x, 0.5);
        assert_relative_eq!(g.node(1, 1).y, 0.5);
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(build_uniform_grid(1.0, 1).is_err());
        assert!(build_uniform_grid(0.0, 4).is_err());
        assert!(build_uniform_grid(-1.0, 4).is_err());
    }

    #[test]
    fn grid_nodes_bit_reproducible() {
        let g = build_uniform_grid(1.7, 17).unwrap();
        for i in 0..17 {
            for j in 0..17 {
                let p = g.node(i, j);
                assert_eq!(p.x.to_bits(), (g.origin.x + g.spacing * j as f64).to_bits());
                assert_eq!(p.y.to_bits(), (g.origin.y + g.spacing * i as f64).to_bits());
            }
        }
    }

    #[test]
    fn inscribed_square_geometry() {
        let sq = inscribed_square(1.0).unwrap();
        assert_relative_eq!(sq.side, 2f64.sqrt());
        for c in sq.corners() {
            assert_relative_eq!(c.norm(), 1.0, epsilon = 1e-15);
        }
        // parameter map at s = 0 lands on the left edge
        let p = sq.param_map(0.0, 0.5);
        assert_relative_eq!(p.x, -2f64.sqrt() / 2.0, epsilon = 1e-15);
        let sq2 = inscribed_square(2.0).unwrap();
        assert_relative_eq!(sq2.side, 2.0 * 2f64.sqrt());
        assert!(inscribed_square(0.0).is_err());
    }

    #[test]
    fn ring_angles_uniform() {
        let ring = TransducerRing::new(Disk::centered(1.0).unwrap(), 8, 0.1).unwrap();
        let a = ring.angles();
        for w in a.windows(2) {
            assert_relative_eq!(w[1] - w[0], std::f64::consts::PI / 4.0, epsilon = 1e-15);
        }
        assert!(TransducerRing::new(Disk::centered(1.0).unwrap(), 2, 0.0).is_err());
    }
}
