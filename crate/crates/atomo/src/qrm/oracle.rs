//! Brute-force evaluation of the double-logarithm volume potential
//!
//! `u(x, x0) = (1/2pi) integral_D ln|x - x'| ln|x' - x0| xi(x') dx'`
//!
//! by midpoint quadrature over the reconstruction square. Test support:
//! manufactures exact synthetic boundary data and validates the inversion
//! chain end to end.

use crate::geometry::{InscribedSquare, Point};

/// Midpoint quadrature nodes over the inscribed square.
pub struct SquareQuadrature {
    pub centers: Vec<Point>,
    pub cell_area: f64,
}

impl SquareQuadrature {
    pub fn new(square: &InscribedSquare, n_cells: usize) -> Self {
        let h = square.side / n_cells as f64;
        let half = square.half();
        let mut centers = Vec::with_capacity(n_cells * n_cells);
        for i in 0..n_cells {
            for j in 0..n_cells {
                centers.push(Point::new(
                    -half + h * (j as f64 + 0.5),
                    -half + h * (i as f64 + 0.5),
                ));
            }
        }
        SquareQuadrature {
            centers,
            cell_area: h * h,
        }
    }
}

/// Single-point evaluation of the potential.
pub fn lavrentiev_forward_oracle(
    xi: &dyn Fn(Point) -> f64,
    quad: &SquareQuadrature,
    x: Point,
    x0: Point,
) -> f64 {
    let mut acc = 0.0;
    for &c in &quad.centers {
        let v = xi(c);
        if v == 0.0 {
            continue;
        }
        acc += x.dist(c).ln() * c.dist(x0).ln() * v;
    }
    acc * quad.cell_area / (2.0 * std::f64::consts::PI)
}

/// Gradient of the potential in the first argument.
pub fn lavrentiev_forward_gradient(
    xi: &dyn Fn(Point) -> f64,
    quad: &SquareQuadrature,
    x: Point,
    x0: Point,
) -> Point {
    let mut gx = 0.0;
    let mut gy = 0.0;
    for &c in &quad.centers {
        let v = xi(c);
        if v == 0.0 {
            continue;
        }
        let d = x.sub(c);
        let r2 = d.dot(d);
        let w = c.dist(x0).ln() * v / r2;
        gx += d.x * w;
        gy += d.y * w;
    }
    let s = quad.cell_area / (2.0 * std::f64::consts::PI);
    Point::new(gx * s, gy * s)
}

/// Batched evaluation at many receivers and sources via the separable
/// factorization `u = (ln|x - c| xi_c) . (ln|c - x0|)`.
/// Returns `(u, grad_x u)` with layouts `src * n_rec + rec`.
pub fn lavrentiev_forward_batch(
    xi: &dyn Fn(Point) -> f64,
    quad: &SquareQuadrature,
    receivers: &[Point],
    sources: &[Point],
) -> (Vec<f64>, Vec<Point>) {
    let nc = quad.centers.len();
    let nr = receivers.len();
    let ns = sources.len();
    // keep only cells with mass
    let mut cells = Vec::with_capacity(nc);
    for &c in &quad.centers {
        let v = xi(c);
        if v != 0.0 {
            cells.push((c, v));
        }
    }
    let scale = quad.cell_area / (2.0 * std::f64::consts::PI);
    // source factors
    let mut src_f = vec![0.0; cells.len() * ns];
    for (ci, &(c, _)) in cells.iter().enumerate() {
        for (si, &s) in sources.iter().enumerate() {
            src_f[ci * ns + si] = c.dist(s).ln();
        }
    }
    let mut u = vec![0.0; ns * nr];
    let mut grad = vec![Point::new(0.0, 0.0); ns * nr];
    for (ci, &(c, v)) in cells.iter().enumerate() {
        for (ri, &r) in receivers.iter().enumerate() {
            let d = r.sub(c);
            let r2 = d.dot(d);
            let lnr = 0.5 * r2.ln();
            let w0 = lnr * v;
            let w1 = v / r2;
            for si in 0..ns {
                let f = src_f[ci * ns + si];
                let idx = si * nr + ri;
                u[idx] += w0 * f;
                grad[idx].x += d.x * w1 * f;
                grad[idx].y += d.y * w1 * f;
            }
        }
    }
    for v in &mut u {
        *v *= scale;
    }
    for g in &mut grad {
        *g = g.scale(scale);
    }
    (u, grad)
}
