//! Laplace-domain preprocessing: truncated transforms of time traces, the
//! small-p kernel expansion, limit extraction by least squares in
//! `w = 1/(ln p + gamma)`, exterior Neumann completion on the measurement
//! circle, and assembly of the Cauchy data for the elliptic system.

use crate::error::{Error, Result, Warning};
use crate::geometry::Point;
use crate::io::{BinReader, BinWriter};
use std::path::Path;

/// Euler's constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Pairs with `|ln|x - x0|| < NEAR_SINGULAR_LOG` are excluded everywhere:
/// the `1/ln` weights of the change of variables blow up there.
pub const NEAR_SINGULAR_LOG: f64 = 0.05;

/// Strictly decreasing Laplace parameters inside `(0, e^-gamma)`.
#[derive(Debug, Clone)]
pub struct PGrid {
    values: Vec<f64>,
}

impl PGrid {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if values.len() < 3 {
            return Err(Error::invalid("p grid needs at least 3 points".to_string()));
        }
        let cap = (-EULER_GAMMA).exp();
        for w in values.windows(2) {
            if w[0] <= w[1] {
                return Err(Error::invalid("p grid must be strictly decreasing".to_string()));
            }
        }
        if values.iter().any(|&p| !(p > 0.0 && p < cap)) {
            return Err(Error::invalid(format!("p values must lie in (0, {cap:.4})")));
        }
        Ok(PGrid { values })
    }

    /// Logarithmically spaced grid, returned in decreasing order.
    pub fn log_spaced(p_min: f64, p_max: f64, count: usize) -> Result<Self> {
        if !(p_min > 0.0 && p_min < p_max) {
            return Err(Error::invalid("need 0 < p_min < p_max".to_string()));
        }
        let vals = (0..count)
            .map(|k| {
                let f = k as f64 / (count as f64 - 1.0);
                (p_max.ln() * (1.0 - f) + p_min.ln() * f).exp()
            })
            .collect();
        PGrid::new(vals)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Composite Simpson weights for `n` uniformly spaced samples (spacing 1).
/// Odd interval counts close with one trapezoid panel at the end.
pub fn simpson_weights(n: usize) -> Vec<f64> {
    assert!(n >= 3);
    let mut w = vec![0.0; n];
    let intervals = n - 1;
    let simpson_end = if intervals % 2 == 0 { n - 1 } else { n - 2 };
    let mut k = 0;
    while k + 2 <= simpson_end {
        w[k] += 1.0 / 3.0;
        w[k + 1] += 4.0 / 3.0;
        w[k + 2] += 1.0 / 3.0;
        k += 2;
    }
    if simpson_end < intervals {
        w[n - 2] += 0.5;
        w[n - 1] += 0.5;
    }
    w
}

/// Truncated Laplace transform of a uniformly sampled series on `[0, T]`:
/// composite Simpson quadrature of `exp(-p t) series(t)` over `[tau, T]`.
pub fn truncated_laplace(series: &[f64], dt: f64, tau: f64, p: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive".to_string()));
    }
    let t_end = dt * (series.len().saturating_sub(1)) as f64;
    if !(tau >= 0.0 && tau < t_end) {
        return Err(Error::invalid(format!("tau = {tau} outside [0, {t_end})")));
    }
    let start = (tau / dt).ceil() as usize;
    let n = series.len() - start;
    if n < 3 {
        return Err(Error::invalid(format!("only {n} samples beyond tau, need at least 3")));
    }
    let w = simpson_weights(n);
    let mut acc = 0.0;
    for k in 0..n {
        let t = (start + k) as f64 * dt;
        acc += w[k] * (-p * t).exp() * series[start + k];
    }
    Ok(acc * dt)
}

/// Small-p background kernel `g0(x, x0; p)`:
///
/// `-(1/pi)(1 + gamma/ln p + ln r / ln p + r^2 p^2)
///  + (p^2 r^2 / ln p) ln r + (gamma - 1)(p^2 r^2 / ln p)`, `r = |x - x0|`.
pub fn g0_kernel(x: Point, x0: Point, p: f64) -> Result<f64> {
    let r = x.dist(x0);
    if r < 1e-14 {
        return Err(Error::SingularPair);
    }
    if !(p > 0.0 && p < (-EULER_GAMMA).exp()) {
        return Err(Error::invalid(format!("p = {p} outside (0, e^-gamma)")));
    }
    let lp = p.ln();
    let lr = r.ln();
    let p2r2 = p * p * r * r;
    Ok(-(1.0 / std::f64::consts::PI) * (1.0 + EULER_GAMMA / lp + lr / lp + p2r2)
        + (p2r2 / lp) * lr
        + (EULER_GAMMA - 1.0) * (p2r2 / lp))
}

/// Kernel-normalized data `h(x, x0; p) = 4 pi^2 (v - g0) / ((1 + gamma/ln p)^2 p^2 ln p)`.
pub fn h_from_v(v: f64, g0: f64, p: f64) -> Result<f64> {
    let lp = p.ln();
    let denom = (1.0 + EULER_GAMMA / lp).powi(2) * p * p * lp;
    if denom.abs() < 1e-300 {
        return Err(Error::Underflow {
            context: "h_from_v",
            value: denom.abs(),
        });
    }
    Ok(4.0 * std::f64::consts::PI * std::f64::consts::PI * (v - g0) / denom)
}

/// Limits extracted from `h(p)` samples: the least-squares fit of
/// `h = H0 + H1 w + psi w^2` with `w = 1/(ln p + gamma)`.
#[derive(Debug, Clone, Copy)]
pub struct ExtractedLimits {
    pub h0: f64,
    pub h1: f64,
    pub psi: f64,
    /// Root-mean-square fit residual.
    pub residual: f64,
}

/// Fits the three-term expansion over the p grid. Rejects Vandermonde
/// condition numbers above 1e12 (spread the p grid wider in that case).
pub fn extract_limits(p_values: &[f64], h_samples: &[f64]) -> Result<ExtractedLimits> {
    if p_values.len() != h_samples.len() || p_values.len() < 3 {
        return Err(Error::invalid("need matching p and h samples, at least 3".to_string()));
    }
    let m = p_values.len();
    let mut a = nalgebra::DMatrix::zeros(m, 3);
    for (k, &p) in p_values.iter().enumerate() {
        let w = 1.0 / (p.ln() + EULER_GAMMA);
        a[(k, 0)] = 1.0;
        a[(k, 1)] = w;
        a[(k, 2)] = w * w;
    }
    let b = nalgebra::DVector::from_column_slice(h_samples);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 0.0 || smax / smin > 1e12 {
        return Err(Error::Fit(format!(
            "w-Vandermonde condition {:.3e}; widen the p grid",
            if smin > 0.0 { smax / smin } else { f64::INFINITY }
        )));
    }
    let coeffs = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::Fit(format!("least squares failed: {e}")))?;
    let fitted = a * &coeffs;
    let residual = ((&b - fitted).norm_squared() / m as f64).sqrt();
    Ok(ExtractedLimits {
        h0: coeffs[0],
        h1: coeffs[1],
        psi: coeffs[2],
        residual,
    })
}

/// Exterior Neumann completion on the measurement circle.
#[derive(Debug, Clone)]
pub struct Completion {
    /// Outward normal derivative at the ring nodes.
    pub psi1: Vec<f64>,
    /// Dirichlet mean handled by the logarithmic extension; recorded for
    /// run metadata.
    pub mean_mode: f64,
}

/// Given `psi` at `M` uniformly spaced ring nodes (radius `R`), expands in
/// discrete Fourier modes and differentiates the decaying harmonic
/// extension: mode `k != 0` extends as `r^{-|k|}` giving `-|k|/R` per mode;
/// the constant mode extends logarithmically to a cutoff radius
/// `r_inf_factor * R`.
pub fn exterior_neumann_completion(psi: &[f64], radius: f64, r_inf_factor: f64) -> Completion {
    let m = psi.len();
    let mean: f64 = psi.iter().sum::<f64>() / m as f64;
    let mut psi1 = vec![0.0; m];
    let two_pi = 2.0 * std::f64::consts::PI;
    let kmax = m / 2;
    for k in 1..=kmax {
        let mut a = 0.0;
        let mut b = 0.0;
        for (j, &v) in psi.iter().enumerate() {
            let ang = two_pi * (k * j) as f64 / m as f64;
            a += v * ang.cos();
            b += v * ang.sin();
        }
        // Nyquist mode appears once in the reconstruction
        let scale = if 2 * k == m { 1.0 / m as f64 } else { 2.0 / m as f64 };
        a *= scale;
        b *= scale;
        let factor = -(k as f64) / radius;
        for (j, out) in psi1.iter_mut().enumerate() {
            let ang = two_pi * (k * j) as f64 / m as f64;
            *out += factor * (a * ang.cos() + b * ang.sin());
        }
    }
    // u0(r) = mean * ln(r / R_inf) / ln(R / R_inf); d/dr at R
    let mean_derivative = -mean / (radius * (r_inf_factor).ln());
    for out in psi1.iter_mut() {
        *out += mean_derivative;
    }
    Completion {
        psi1,
        mean_mode: mean,
    }
}

/// Cauchy data for the first-order change of variables `v = u / ln|x - x0|`:
///
/// `s0 = psi / L`, `s1 = psi1 / L - psi * dL/dnu / L^2`,
/// `dL/dnu = (x - x0) . nu(x) / |x - x0|^2`, `L = ln|x - x0|`.
///
/// Returns `None` for near-singular pairs (`|L| < 0.05`), which are dropped
/// from the overdetermined data.
pub fn assemble_boundary_data(
    psi: f64,
    psi1: f64,
    x: Point,
    normal: Point,
    x0: Point,
) -> Option<(f64, f64)> {
    let d = x.sub(x0);
    let r2 = d.dot(d);
    if r2 <= 0.0 {
        return None;
    }
    let l = 0.5 * r2.ln();
    if l.abs() < NEAR_SINGULAR_LOG {
        return None;
    }
    let dl_dnu = d.dot(normal) / r2;
    let s0 = psi / l;
    let s1 = psi1 / l - psi * dl_dnu / (l * l);
    Some((s0, s1))
}

/// Spectral boundary data for one family of point sources: transform
/// samples and extracted limits per (source, receiver) pair.
#[derive(Debug, Clone)]
pub struct SpectralBoundaryData {
    pub p_values: Vec<f64>,
    /// Receiver positions and outward normals.
    pub receivers: Vec<(Point, Point)>,
    /// Source positions on the measurement circle.
    pub sources: Vec<Point>,
    /// Row-major `sources x receivers x p`.
    pub utilde: Vec<f64>,
    /// Row-major `sources x receivers`.
    pub psi: Vec<f64>,
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
    /// 1 when the pair carries data (coincident pairs are 0).
    pub valid: Vec<u8>,
}

impl SpectralBoundaryData {
    pub fn pair_index(&self, src: usize, rec: usize) -> usize {
        src * self.receivers.len() + rec
    }

    /// Checks the symmetry of `psi` over ring-to-ring pairs; the kernel of
    /// the underlying integral equation is symmetric under swapping the two
    /// circle points.
    pub fn ring_symmetry_defect(&self, ring_receiver_of_source: &[usize]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (si, &ri) in ring_receiver_of_source.iter().enumerate() {
            for (sj, &rj) in ring_receiver_of_source.iter().enumerate() {
                if si == sj {
                    continue;
                }
                let a = self.pair_index(si, rj);
                let b = self.pair_index(sj, ri);
                if self.valid[a] == 0 || self.valid[b] == 0 {
                    continue;
                }
                num += (self.psi[a] - self.psi[b]).powi(2);
                den += self.psi[a].powi(2) + self.psi[b].powi(2);
            }
        }
        if den > 0.0 {
            (num / den).sqrt()
        } else {
            0.0
        }
    }
}

const MAGIC: &[u8; 4] = b"ATS1";

pub fn write_spectral(data: &SpectralBoundaryData, path: &Path, config_hash: &str) -> Result<()> {
    let mut w = BinWriter::new(MAGIC, 1, config_hash);
    w.f64_slice(&data.p_values);
    w.u64(data.receivers.len() as u64);
    for (pos, nrm) in &data.receivers {
        w.f64(pos.x);
        w.f64(pos.y);
        w.f64(nrm.x);
        w.f64(nrm.y);
    }
    w.u64(data.sources.len() as u64);
    for s in &data.sources {
        w.f64(s.x);
        w.f64(s.y);
    }
    w.f64_slice(&data.utilde);
    w.f64_slice(&data.psi);
    w.f64_slice(&data.h0);
    w.f64_slice(&data.h1);
    w.bytes(&data.valid);
    w.finish(path)
}

pub fn read_spectral(path: &Path) -> Result<SpectralBoundaryData> {
    let mut r = BinReader::open(path, MAGIC, 1)?;
    let p_values = r.f64_vec()?;
    let nr = r.u64()? as usize;
    let mut receivers = Vec::with_capacity(nr);
    for _ in 0..nr {
        let px = r.f64()?;
        let py = r.f64()?;
        let nx = r.f64()?;
        let ny = r.f64()?;
        receivers.push((Point::new(px, py), Point::new(nx, ny)));
    }
    let ns = r.u64()? as usize;
    let mut sources = Vec::with_capacity(ns);
    for _ in 0..ns {
        let x = r.f64()?;
        let y = r.f64()?;
        sources.push(Point::new(x, y));
    }
    let utilde = r.f64_vec()?;
    let psi = r.f64_vec()?;
    let h0 = r.f64_vec()?;
    let h1 = r.f64_vec()?;
    let valid = r.byte_vec()?;
    Ok(SpectralBoundaryData {
        p_values,
        receivers,
        sources,
        utilde,
        psi,
        h0,
        h1,
        valid,
    })
}

/// Coverage check used after masking: warns when more than 30% of a ring of
/// pairs was excluded.
pub fn coverage_warning(excluded: usize, total: usize) -> Option<Warning> {
    if total > 0 && excluded * 10 > total * 3 {
        Some(Warning::DataCoverage { excluded, total })
    } else {
        None
    }
}
