//! Ground-truth coefficient models: the analytic smooth phantom and
//! raster-backed discontinuous phantoms, both rescaled to the dimensionless
//! range used throughout.

use crate::error::{Error, Result};
use crate::geometry::{InscribedSquare, UniformGrid};
use crate::io::{quantize_to_pgm, write_text_atomic, BinReader, BinWriter, Pgm};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Coefficient `q` (or perturbation `xi`) sampled on a uniform grid,
/// row-major, one value per node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientField {
    pub grid: UniformGrid,
    pub values: Vec<f64>,
}

impl CoefficientField {
    pub fn new(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::invalid(format!(
                "field length {} does not match grid with {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field contains non-finite values".to_string()));
        }
        Ok(CoefficientField { grid, values })
    }

    pub fn constant(grid: UniformGrid, value: f64) -> Self {
        let n = grid.node_count();
        CoefficientField {
            grid,
            values: vec![value; n],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Grid cell (row, col) of the largest value.
    pub fn argmax_cell(&self) -> (usize, usize) {
        let mut best = (0usize, 0usize);
        let mut hi = f64::NEG_INFINITY;
        let n = self.grid.n_per_side;
        for i in 0..n {
            for j in 0..n {
                let v = self.at(i, j);
                if v > hi {
                    hi = v;
                    best = (i, j);
                }
            }
        }
        best
    }
}

/// Constants of the smooth three-bump phantom.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhantomConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Evaluates the raw three-bump surface at parameters `(s, t)` in the unit
/// square:
///
/// `q(s,t) = c0 + c1 * [q1 - q2 - q3]` with
/// `q1 = c2 (1-3s)^2 exp(-9s^2 - (3t-2)^2)`,
/// `q2 = (3s/5 - 27 s^3 - (3(t-1))^5) exp(-9s^2 - 9(t-1)^2)`,
/// `q3 = exp(-(3s+1)^2 - 9(t-1)^2)`.
pub fn eval_smooth(s: f64, t: f64, consts: PhantomConstants) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("(s, t) = ({s}, {t}) outside the unit square")));
    }
    Ok(consts.c0 + consts.c1 * smooth_bracket(s, t, consts.c2))
}

fn smooth_bracket(s: f64, t: f64, c2: f64) -> f64 {
    let q1 = c2 * (1.0 - 3.0 * s).powi(2) * (-9.0 * s * s - (3.0 * t - 2.0).powi(2)).exp();
    let q2 = (0.6 * s - 27.0 * s.powi(3) - (3.0 * (t - 1.0)).powi(5))
        * (-(9.0 * s * s + 9.0 * (t - 1.0).powi(2))).exp();
    let q3 = (-(3.0 * s + 1.0).powi(2) - 9.0 * (t - 1.0).powi(2)).exp();
    q1 - q2 - q3
}

/// Smooth edge taper: exactly 0 on the boundary of the unit square, exactly
/// 1 at distance >= `margin` from it, C^2 across the joins.
fn edge_taper(s: f64, t: f64, margin: f64) -> f64 {
    let ramp = |d: f64| {
        if d <= 0.0 {
            0.0
        } else if d >= margin {
            1.0
        } else {
            let x = d / margin;
            x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
        }
    };
    ramp(s.min(1.0 - s)) * ramp(t.min(1.0 - t))
}

/// Fraction of the parameter square over which the perturbation is tapered
/// to the background so the field matches `c0` on the boundary of `D`.
pub const TAPER_MARGIN: f64 = 0.12;

/// Samples the smooth phantom on a grid over the inscribed square. The
/// three-bump perturbation is tapered to zero near the square's boundary,
/// which keeps the coefficient equal to the background `c0` on the edge.
pub fn smooth_phantom_field(grid: &UniformGrid, consts: PhantomConstants) -> CoefficientField {
    let n = grid.n_per_side;
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let s = j as f64 / (n as f64 - 1.0);
            let t = i as f64 / (n as f64 - 1.0);
            let v = consts.c0
                + consts.c1 * edge_taper(s, t, TAPER_MARGIN) * smooth_bracket(s, t, consts.c2);
            values.push(v);
        }
    }
    CoefficientField {
        grid: grid.clone(),
        values,
    }
}

/// Evaluates the tapered phantom at a point of the plane, mapping through
/// the inscribed square's parameterization. Outside the square the value is
/// the background `c0`.
pub fn smooth_phantom_at(square: &InscribedSquare, consts: PhantomConstants, x: f64, y: f64) -> f64 {
    let h = square.half();
    let s = (x + h) / square.side;
    let t = (y + h) / square.side;
    if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
        return consts.c0;
    }
    consts.c0 + consts.c1 * edge_taper(s, t, TAPER_MARGIN) * smooth_bracket(s, t, consts.c2)
}

/// Chooses `c1` (with `c0 = 4`, `c2 = 1`) by bisection so the tapered field
/// range fits inside `[target_lo, target_hi]` as tightly as possible.
///
/// The background sits at 4 so that the perturbation `xi = q - 4` vanishes
/// on the boundary of the reconstruction square.
pub fn calibrate_constants(target_lo: f64, target_hi: f64) -> Result<PhantomConstants> {
    if !(1.0 <= target_lo && target_lo < target_hi) {
        return Err(Error::Calibration(format!(
            "need 1 <= lo < hi, got ({target_lo}, {target_hi})"
        )));
    }
    let c0 = 4.0;
    let c2 = 1.0;
    if c0 < target_lo || c0 > target_hi {
        return Err(Error::Calibration(format!(
            "background {c0} outside target range ({target_lo}, {target_hi})"
        )));
    }
    // extremes of the tapered bracket on a 512^2 sampling
    let n = 512;
    let mut b_min = f64::INFINITY;
    let mut b_max = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            let s = j as f64 / (n as f64 - 1.0);
            let t = i as f64 / (n as f64 - 1.0);
            let b = edge_taper(s, t, TAPER_MARGIN) * smooth_bracket(s, t, c2);
            b_min = b_min.min(b);
            b_max = b_max.max(b);
        }
    }
    if b_min >= 0.0 || b_max <= 0.0 {
        return Err(Error::Calibration(format!(
            "bracket range [{b_min:.3}, {b_max:.3}] cannot span both sides of the background"
        )));
    }
    let fits = |c1: f64| c0 + c1 * b_min >= target_lo && c0 + c1 * b_max <= target_hi;
    if !fits(0.0) {
        return Err(Error::Calibration("degenerate: background itself out of range".into()));
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while fits(hi) {
        hi *= 2.0;
        if hi > 1e6 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // shave a hair so denser resampling stays inside the interval
    let c1 = lo * (1.0 - 5e-4);
    Ok(PhantomConstants { c0, c1, c2 })
}

/// Loads an 8-bit PGM raster and rescales pixel values affinely with
/// `pixel-min -> lo`, `pixel-max -> hi`, resampling to the target grid by
/// nearest neighbor so discontinuities stay sharp. A constant image maps to
/// the midpoint `(lo + hi) / 2`.
pub fn load_raster(path: &Path, grid: &UniformGrid, lo: f64, hi: f64) -> Result<CoefficientField> {
    if !(lo < hi) {
        return Err(Error::invalid(format!("need lo < hi, got ({lo}, {hi})")));
    }
    let img = Pgm::read(path)?;
    Ok(raster_to_field(&img, grid, lo, hi))
}

pub fn raster_to_field(img: &Pgm, grid: &UniformGrid, lo: f64, hi: f64) -> CoefficientField {
    let pmin = img.pixels.iter().copied().min().unwrap_or(0) as f64;
    let pmax = img.pixels.iter().copied().max().unwrap_or(0) as f64;
    let n = grid.n_per_side;
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            // nearest-neighbor lookup; raster row 0 is the top of the image
            let u = j as f64 / (n as f64 - 1.0);
            let v = 1.0 - i as f64 / (n as f64 - 1.0);
            let px = ((u * (img.width as f64 - 1.0)).round() as usize).min(img.width - 1);
            let py = ((v * (img.height as f64 - 1.0)).round() as usize).min(img.height - 1);
            let p = img.pixels[py * img.width + px] as f64;
            let q = if pmax > pmin {
                lo + (hi - lo) * (p - pmin) / (pmax - pmin)
            } else {
                0.5 * (lo + hi)
            };
            values.push(q);
        }
    }
    CoefficientField {
        grid: grid.clone(),
        values,
    }
}

/// Synthetic discontinuous phantom: two elliptical inclusions at the high
/// level over a low-level background, rendered as an 8-bit raster. Stands in
/// for scan data that cannot ship with the repository.
pub fn synthetic_ellipse_raster(size: usize) -> Pgm {
    let mut pixels = vec![0u8; size * size];
    let ellipses = [
        // (cx, cy, rx, ry, angle)
        (0.62, 0.58, 0.17, 0.10, 0.5),
        (0.38, 0.36, 0.10, 0.16, -0.3),
    ];
    for py in 0..size {
        for px in 0..size {
            let x = px as f64 / (size as f64 - 1.0);
            let y = py as f64 / (size as f64 - 1.0);
            let mut inside = false;
            for &(cx, cy, rx, ry, ang) in &ellipses {
                let (dx, dy) = (x - cx, y - cy);
                let (c, s) = (f64::cos(ang), f64::sin(ang));
                let u = (c * dx + s * dy) / rx;
                let v = (-s * dx + c * dy) / ry;
                if u * u + v * v <= 1.0 {
                    inside = true;
                }
            }
            pixels[py * size + px] = if inside { 255 } else { 0 };
        }
    }
    Pgm {
        width: size,
        height: size,
        pixels,
    }
}

const FIELD_MAGIC: &[u8; 4] = b"ATF1";

pub fn write_field(field: &CoefficientField, path: &Path, config_hash: &str) -> Result<()> {
    let mut w = BinWriter::new(FIELD_MAGIC, 1, config_hash);
    w.f64(field.grid.origin.x);
    w.f64(field.grid.origin.y);
    w.f64(field.grid.spacing);
    w.u64(field.grid.n_per_side as u64);
    w.f64_slice(&field.values);
    w.finish(path)
}

pub fn read_field(path: &Path) -> Result<CoefficientField> {
    let mut r = BinReader::open(path, FIELD_MAGIC, 1)?;
    let ox = r.f64()?;
    let oy = r.f64()?;
    let spacing = r.f64()?;
    let n = r.u64()? as usize;
    let values = r.f64_vec()?;
    CoefficientField::new(
        UniformGrid {
            origin: crate::geometry::Point::new(ox, oy),
            spacing,
            n_per_side: n,
        },
        values,
    )
}

/// Writes the field as a windowed PGM plus a `.window` sidecar recording the
/// linear map.
pub fn write_field_pgm(field: &CoefficientField, path: &Path, config_hash: &str) -> Result<()> {
    let n = field.grid.n_per_side;
    // flip rows so the image's top corresponds to large y
    let mut flipped = Vec::with_capacity(field.values.len());
    for i in (0..n).rev() {
        flipped.extend_from_slice(&field.values[i * n..(i + 1) * n]);
    }
    let (img, lo, hi) = quantize_to_pgm(&flipped, n, n);
    img.write(path, Some(&format!("config_hash={config_hash}")))?;
    let sidecar = path.with_extension("window");
    write_text_atomic(&sidecar, &format!("min={lo:.17e}\nmax={hi:.17e}\n"))
}

pub fn write_field_csv(field: &CoefficientField, path: &Path, config_hash: &str) -> Result<()> {
    let n = field.grid.n_per_side;
    let mut s = format!("# config_hash={config_hash}\ni,j,x,y,q\n");
    for i in 0..n {
        for j in 0..n {
            let p = field.grid.node(i, j);
            s.push_str(&format!("{i},{j},{:.17e},{:.17e},{:.17e}\n", p.x, p.y, field.at(i, j)));
        }
    }
    write_text_atomic(path, &s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_uniform_grid;
    use approx::assert_relative_eq;

    const C: PhantomConstants = PhantomConstants {
        c0: 4.0,
        c1: 1.0,
        c2: 1.0,
    };

    #[test]
    fn q3_term_at_corner() {
        // at (s, t) = (0, 1): q3 = exp(-(1)^2 - 0) = e^{-1}, q2 = 0, and
        // q1 = e^{-1} as well, so the bracket cancels exactly
        let q3 = (-(3.0 * 0.0 + 1.0f64).powi(2) - 0.0).exp();
        assert_relative_eq!(q3, (-1.0f64).exp(), epsilon = 1e-15);
        let v = eval_smooth(0.0, 1.0, C).unwrap();
        assert_relative_eq!(v, 4.0, epsilon = 1e-15);
    }

    #[test]
    fn q1_vanishes_at_prefactor_root() {
        // s = 1/3 kills the (1 - 3s)^2 prefactor: q = c0 - c1 (q2 + q3)
        let s = 1.0 / 3.0;
        let t = 0.7;
        let v = eval_smooth(s, t, C).unwrap();
        let q2 = (0.6 * s - 27.0 * s.powi(3) - (3.0 * (t - 1.0)).powi(5))
            * (-(9.0 * s * s + 9.0 * (t - 1.0) * (t - 1.0))).exp();
        let q3 = (-(3.0 * s + 1.0).powi(2) - 9.0 * (t - 1.0) * (t - 1.0)).exp();
        assert_relative_eq!(v, 4.0 - q2 - q3, epsilon = 1e-15);
    }

    #[test]
    fn golden_value_at_center() {
        // worked by hand: at (0.5, 0.5)
        // q1 = 0.25 exp(-2.5), q2 = (0.3 - 3.375 + 7.59375) exp(-4.5),
        // q3 = exp(-8.5); bracket = q1 - q2 - q3
        let v = eval_smooth(0.5, 0.5, C).unwrap();
        let q1 = 0.25 * (-2.5f64).exp();
        let q2 = (0.3 - 3.375 + 7.59375) * (-4.5f64).exp();
        let q3 = (-8.5f64).exp();
        assert_relative_eq!(v, 4.0 + (q1 - q2 - q3), epsilon = 1e-15);
        // frozen decimal value of the same expression
        assert_relative_eq!(v, 3.970119003179782, epsilon = 1e-12);
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(eval_smooth(-0.1, 0.5, C).is_err());
        assert!(eval_smooth(0.5, 1.1, C).is_err());
    }

    #[test]
    fn bitwise_deterministic() {
        let a = eval_smooth(0.37, 0.83, C).unwrap();
        let b = eval_smooth(0.37, 0.83, C).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn smooth_gradient_matches_finite_differences() {
        // C-infinity check: central differences vs a tighter-step gradient
        let h = 1e-5;
        let pts = [
            (0.31, 0.42),
            (0.55, 0.61),
            (0.27, 0.79),
            (0.64, 0.33),
            (0.48, 0.52),
            (0.39, 0.68),
            (0.72, 0.45),
            (0.58, 0.27),
            (0.36, 0.36),
            (0.51, 0.74),
        ];
        for &(s, t) in &pts {
            let f = |s: f64, t: f64| eval_smooth(s, t, C).unwrap();
            let g_s = (f(s + h, t) - f(s - h, t)) / (2.0 * h);
            let g_t = (f(s, t + h) - f(s, t - h)) / (2.0 * h);
            // analytic gradient via tiny complex-step-like refinement: use
            // h/32 central difference as the reference
            let hh = h / 32.0;
            let r_s = (f(s + hh, t) - f(s - hh, t)) / (2.0 * hh);
            let r_t = (f(s, t + hh) - f(s, t - hh)) / (2.0 * hh);
            let scale = r_s.abs().max(r_t.abs()).max(1.0);
            assert!(((g_s - r_s) / scale).abs() < 1e-6, "ds mismatch at ({s},{t})");
            assert!(((g_t - r_t) / scale).abs() < 1e-6, "dt mismatch at ({s},{t})");
        }
    }

    #[test]
    fn calibration_hits_paper_range() {
        let c = calibrate_constants(3.43, 4.53).unwrap();
        assert!(c.c1 > 0.0);
        let grid = build_uniform_grid(2f64.sqrt(), 512).unwrap();
        let field = smooth_phantom_field(&grid, c);
        let (lo, hi) = field.min_max();
        assert!(lo >= 3.43 && hi <= 4.53, "range [{lo}, {hi}]");
        // the range should be used, not collapsed near the background
        assert!(hi - lo > 0.5 * (4.53 - 3.43), "span too small: {}", hi - lo);
        // boundary stays at the background level
        let n = grid.n_per_side;
        for k in 0..n {
            for &(i, j) in &[(0, k), (n - 1, k), (k, 0), (k, n - 1)] {
                assert!((field.at(i, j) - 4.0).abs() <= 1e-3);
            }
        }
    }

    #[test]
    fn calibration_survives_denser_resampling() {
        let c = calibrate_constants(3.43, 4.53).unwrap();
        let grid = build_uniform_grid(2f64.sqrt(), 1024).unwrap();
        let field = smooth_phantom_field(&grid, c);
        let (lo, hi) = field.min_max();
        assert!(lo >= 3.43 && hi <= 4.53, "range [{lo}, {hi}]");
    }

    #[test]
    fn degenerate_c1_zero_gives_constant_field() {
        let grid = build_uniform_grid(2f64.sqrt(), 32).unwrap();
        let field = smooth_phantom_field(
            &grid,
            PhantomConstants {
                c0: 4.0,
                c1: 0.0,
                c2: 1.0,
            },
        );
        let (lo, hi) = field.min_max();
        assert_eq!(lo, 4.0);
        assert_eq!(hi, 4.0);
    }

    #[test]
    fn two_level_raster_maps_to_endpoints() {
        let img = Pgm {
            width: 4,
            height: 4,
            pixels: vec![0, 255, 0, 255, 255, 0, 255, 0, 0, 255, 0, 255, 255, 0, 255, 0],
        };
        let grid = build_uniform_grid(2f64.sqrt(), 8).unwrap();
        let f = raster_to_field(&img, &grid, 3.43, 4.53);
        for &v in &f.values {
            assert!((v - 3.43).abs() < 1e-12 || (v - 4.53).abs() < 1e-12);
        }
        let (lo, hi) = f.min_max();
        assert_relative_eq!(lo, 3.43);
        assert_relative_eq!(hi, 4.53);
    }

    #[test]
    fn constant_raster_maps_to_midpoint() {
        let img = Pgm {
            width: 3,
            height: 3,
            pixels: vec![77; 9],
        };
        let grid = build_uniform_grid(1.0, 5).unwrap();
        let f = raster_to_field(&img, &grid, 3.0, 5.0);
        for &v in &f.values {
            assert_relative_eq!(v, 4.0);
        }
    }

    #[test]
    fn checkerboard_upsamples_block_constant() {
        // 2x2 checkerboard to 4x4: each source pixel covers a 2x2 block
        let img = Pgm {
            width: 2,
            height: 2,
            pixels: vec![0, 255, 255, 0],
        };
        let grid = build_uniform_grid(1.0, 4).unwrap();
        let f = raster_to_field(&img, &grid, 0.0, 1.0);
        let n = 4;
        for i in 0..n {
            for j in 0..n {
                let src_i = if i < 2 { 0 } else { 1 };
                let src_j = if j < 2 { 0 } else { 1 };
                // raster row 0 is top (large y = large i flipped)
                let expect = if (1 - src_i) == src_j { 0.0 } else { 1.0 };
                assert_relative_eq!(f.at(i, j), expect);
            }
        }
    }

    #[test]
    fn synthetic_raster_has_two_levels() {
        let img = synthetic_ellipse_raster(64);
        assert!(img.pixels.iter().any(|&p| p == 0));
        assert!(img.pixels.iter().any(|&p| p == 255));
        assert!(img.pixels.iter().all(|&p| p == 0 || p == 255));
    }

    #[test]
    fn field_binary_roundtrip() {
        let grid = build_uniform_grid(1.0, 6).unwrap();
        let f = CoefficientField::constant(grid, 4.25);
        let dir = std::env::temp_dir().join("atomo_field_io");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("f.bin");
        write_field(&f, &p, "cafe").unwrap();
        let back = read_field(&p).unwrap();
        assert_eq!(back.values, f.values);
    }
}
