//! Source and control waveforms: Ricker wavelets, compactly supported cap
//! approximations of the delta function, and the separable control basis.

use std::sync::OnceLock;

/// Ricker wavelet with center frequency `f0`, delayed so the pulse starts
/// near zero: `t0 = 1.5 / f0`.
///
/// `r(t) = (1 - 2 pi^2 f0^2 (t - t0)^2) exp(-pi^2 f0^2 (t - t0)^2)`
pub fn ricker(t: f64, f0: f64) -> f64 {
    let t0 = 1.5 / f0;
    let a = std::f64::consts::PI * f0 * (t - t0);
    let a2 = a * a;
    (1.0 - 2.0 * a2) * (-a2).exp()
}

/// `I = integral_0^1 exp(-1/u) du`, the normalization integral of the
/// radial cap profile. Evaluated once by 256-panel Simpson; the integrand
/// vanishes to all orders at u = 0.
fn cap_radial_integral() -> f64 {
    static VAL: OnceLock<f64> = OnceLock::new();
    *VAL.get_or_init(|| {
        let n = 512usize; // even panel count
        let h = 1.0 / n as f64;
        let f = |u: f64| if u <= 0.0 { 0.0 } else { (-1.0 / u).exp() };
        let mut s = f(0.0) + f(1.0);
        for k in 1..n {
            s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    })
}

/// Same for the line profile: `J = integral_{-1}^{1} exp(-1/(1-x^2)) dx`.
fn cap_line_integral() -> f64 {
    static VAL: OnceLock<f64> = OnceLock::new();
    *VAL.get_or_init(|| {
        let n = 512usize;
        let h = 2.0 / n as f64;
        let f = |x: f64| {
            let d = 1.0 - x * x;
            if d <= 0.0 {
                0.0
            } else {
                (-1.0 / d).exp()
            }
        };
        let mut s = f(-1.0) + f(1.0);
        for k in 1..n {
            s += f(-1.0 + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    })
}

/// Radial C-infinity cap of width `eps`, normalized to unit integral over
/// the plane: `cap(r) = C(eps) exp(-eps^2 / (eps^2 - r^2))` for `r < eps`.
pub fn cap_delta(r: f64, eps: f64) -> f64 {
    if r.abs() >= eps {
        return 0.0;
    }
    let c = 1.0 / (std::f64::consts::PI * eps * eps * cap_radial_integral());
    let d = eps * eps - r * r;
    c * (-(eps * eps) / d).exp()
}

/// One-dimensional cap of width `eps` with unit line integral; used for
/// smooth point-like profiles along the boundary arc.
pub fn cap_delta_line(x: f64, eps: f64) -> f64 {
    if x.abs() >= eps {
        return 0.0;
    }
    let s = x / eps;
    let d = 1.0 - s * s;
    (1.0 / (eps * cap_line_integral())) * (-1.0 / d).exp()
}

/// Half-period sine pulse supported on `[start, start + width]`.
pub fn half_sine(t: f64, start: f64, width: f64) -> f64 {
    if t <= start || t >= start + width {
        0.0
    } else {
        (std::f64::consts::PI * (t - start) / width).sin()
    }
}

/// Neumann control `f(x, t)` on the boundary, separable into a spatial
/// profile over boundary nodes and a scalar time signal.
#[derive(Debug, Clone)]
pub enum ControlWaveform {
    /// Ricker wavelet injected at a single boundary node.
    Ricker { node: usize, f0: f64 },
    /// Spatial cap of width `eps` (arc length) centered at a boundary node,
    /// Ricker-modulated in time.
    CapDelta { node: usize, eps: f64, f0: f64 },
    /// Explicit spatial weights with a half-sine time pulse.
    Tabulated {
        spatial: Vec<f64>,
        start: f64,
        width: f64,
    },
}

impl ControlWaveform {
    /// Spatial profile over the boundary nodes, given their cyclic arc
    /// coordinates and the total circumference.
    pub fn spatial_profile(&self, arc: &[f64], circumference: f64) -> Vec<f64> {
        match self {
            ControlWaveform::Ricker { node, .. } => {
                let mut v = vec![0.0; arc.len()];
                v[*node] = 1.0;
                v
            }
            ControlWaveform::CapDelta { node, eps, .. } => {
                let c = arc[*node];
                arc.iter()
                    .map(|&a| {
                        let mut d = (a - c).abs();
                        d = d.min(circumference - d);
                        cap_delta_line(d, *eps)
                    })
                    .collect()
            }
            ControlWaveform::Tabulated { spatial, .. } => spatial.clone(),
        }
    }

    pub fn time_signal(&self, t: f64) -> f64 {
        match self {
            ControlWaveform::Ricker { f0, .. } | ControlWaveform::CapDelta { f0, .. } => {
                ricker(t, *f0)
            }
            ControlWaveform::Tabulated { start, width, .. } => half_sine(t, *start, *width),
        }
    }
}
