//! End-to-end check of the quasi-reversibility chain on manufactured data:
//! a known smooth perturbation generates exact boundary data through the
//! integral-operator oracle, and the full inversion must reproduce it.

use atomo::geometry::{build_uniform_grid, inscribed_square, Disk, Point, TransducerRing};
use atomo::qrm;

fn bump(center: Point, sigma: f64, amp: f64) -> impl Fn(Point) -> f64 + Copy {
    move |p: Point| {
        let d2 = p.dist(center).powi(2);
        amp * (-d2 / (2.0 * sigma * sigma)).exp()
    }
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    num / den
}

#[test]
fn single_bump_recovered_from_oracle_data() {
    let n_grid = 32;
    let basis_n = 8;
    let transducers = 64;

    let square = inscribed_square(1.0).unwrap();
    let grid = build_uniform_grid(square.side, n_grid).unwrap();
    let ring = TransducerRing::new(Disk::centered(1.0).unwrap(), transducers, 0.0).unwrap();
    let xi_true = bump(Point::new(0.2, 0.2), 0.12, 0.5);

    let quad = qrm::SquareQuadrature::new(&square, 128);
    let (psi, psi1) = qrm::oracle_boundary_data(&xi_true, &grid, &ring, &quad);

    let basis = qrm::build_ring_basis(basis_n, &ring).unwrap();
    let (bc, stats) = qrm::project_boundary_data(&basis, &grid, &ring, &psi, &psi1, None).unwrap();
    eprintln!(
        "projection: {}/{} pairs excluded, {} warnings",
        stats.excluded_pairs,
        stats.total_pairs,
        stats.warnings.len()
    );

    let bundle = qrm::assemble_operator_bundle(&basis, &grid, &ring).unwrap();
    let sys = qrm::discretize(&bundle, &bc).unwrap();
    eprintln!("system: {} rows x {} cols, nnz {}", sys.a.rows, sys.a.cols, sys.a.nnz());

    let truth: Vec<f64> = (0..n_grid * n_grid)
        .map(|node| xi_true(grid.node(node / n_grid, node % n_grid)))
        .collect();

    let mut best = (f64::INFINITY, 0.0, 0usize);
    let mut warm: Option<Vec<f64>> = None;
    for &alpha in &[1e-4, 1e-5, 1e-6, 1e-7] {
        let out = qrm::tikhonov_solve(&sys, alpha, warm.as_deref()).unwrap();
        let (field, _counts) = qrm::reconstruct_xi(&out.solution, &basis, &grid, &ring).unwrap();
        let err = rel_l2(&field.values, &truth);
        eprintln!(
            "alpha {alpha:.1e}: cg iters {}, residual {:.3e}, rel L2 err {:.4}",
            out.iterations, out.residual, err
        );
        if err < best.0 {
            best = (err, alpha, out.iterations);
        }
        warm = Some(out.solution);
    }
    eprintln!("best: err {:.4} at alpha {:.1e}", best.0, best.1);
    assert!(best.0 <= 0.15, "relative L2 error {:.4} above 15%", best.0);
}
