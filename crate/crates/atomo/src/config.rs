//! Run configuration: flat `key = value` files with `[section]` headers,
//! command-line overrides, cross-field validation, and a stable hash that is
//! stamped into every artifact.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryConfig {
    /// Measurement circle radius R.
    pub radius: f64,
    /// Outer (absorbing) circle radius for the Cauchy simulations.
    pub outer_radius: f64,
    /// Reconstruction grid nodes per side of the inscribed square.
    pub grid_n: usize,
    /// FEM target edge length.
    pub mesh_h: f64,
    /// Requested transducer count; rounded to the nearest count the mesh's
    /// measurement ring supports.
    pub transducers: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForwardConfig {
    /// Time step as a fraction of the stability bound `h_min * sqrt(q_min)`.
    pub dt_factor: f64,
    /// Simulation horizon (Cauchy runs may stop earlier on decay).
    pub horizon: f64,
    /// Ricker center frequency for Neumann controls.
    pub f0: f64,
    /// Cap-function radius as a multiple of mesh h (delta-source width).
    pub cap_eps_factor: f64,
    /// Decay threshold for stopping the absorbing-boundary runs.
    pub decay_threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaplaceConfig {
    pub p_count: usize,
    pub p_min: f64,
    pub p_max: f64,
    /// Lower truncation point of the transform window.
    pub tau: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QrmConfig {
    /// Ring basis truncation order N.
    pub basis_n: usize,
    /// Regularization sweep values.
    pub alphas: Vec<f64>,
    /// Default alpha when not sweeping.
    pub alpha: f64,
    /// "oracle" (integral-operator data) or "wave" (simulated time traces).
    pub data_source: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BcmConfig {
    /// Harmonic family degree K (2K+1 functions).
    pub harmonics_k: usize,
    /// Tikhonov weight on the squared mesh-graph Laplacian.
    pub gamma: f64,
    /// Spatial control basis size on the boundary.
    pub ctrl_nodes: usize,
    /// Temporal control basis size (half-period sine pulses).
    pub ctrl_pulses: usize,
    /// Ridge weight in the control synthesis least squares.
    pub control_reg: f64,
    /// Control horizon T; traces are recorded to 2T.
    pub control_time: f64,
    /// Residual ceiling above which a controllability warning is raised.
    pub residual_ceiling: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub deltas: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhantomConfig {
    /// "smooth" or "raster".
    pub kind: String,
    pub lo: f64,
    pub hi: f64,
    /// Optional raster path; a synthetic two-ellipse raster is generated
    /// when empty and kind = raster.
    pub raster: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterConfig {
    pub window: usize,
    pub sigma_mult: f64,
    pub min_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub forward: ForwardConfig,
    pub laplace: LaplaceConfig,
    pub qrm: QrmConfig,
    pub bcm: BcmConfig,
    pub noise: NoiseConfig,
    pub phantom: PhantomConfig,
    pub filter: FilterConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            geometry: GeometryConfig {
                radius: 1.0,
                outer_radius: 1.25,
                grid_n: 64,
                mesh_h: 0.05,
                transducers: 60,
            },
            forward: ForwardConfig {
                dt_factor: 0.3,
                horizon: 40.0,
                f0: 2.5,
                cap_eps_factor: 2.0,
                decay_threshold: 1e-3,
            },
            laplace: LaplaceConfig {
                p_count: 8,
                p_min: 0.01,
                p_max: 0.3,
                tau: 0.0,
            },
            qrm: QrmConfig {
                basis_n: 8,
                alphas: vec![1e-7, 1e-6, 5e-6, 1e-5, 5e-5, 1e-4],
                alpha: 5e-6,
                data_source: "wave".into(),
            },
            bcm: BcmConfig {
                harmonics_k: 4,
                gamma: 1e-8,
                ctrl_nodes: 24,
                ctrl_pulses: 12,
                control_reg: 1e-6,
                control_time: 4.5,
                residual_ceiling: 0.25,
            },
            noise: NoiseConfig {
                deltas: vec![0.0, 0.01, 0.05],
                runs: 20,
                seed: 7,
            },
            phantom: PhantomConfig {
                kind: "smooth".into(),
                lo: 3.43,
                hi: 4.53,
                raster: String::new(),
            },
            filter: FilterConfig {
                window: 5,
                sigma_mult: 2.0,
                min_count: 4,
            },
        }
    }
}

impl RunConfig {
    /// Parses a `[section]` / `key = value` file over the defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = RunConfig::default();
        for (k, v) in parse_kv(&text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    /// Applies one `section.key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_f64 = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number '{v}' for {key}")))
        };
        let parse_usize = |v: &str| -> Result<usize> {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad integer '{v}' for {key}")))
        };
        let parse_list = |v: &str| -> Result<Vec<f64>> {
            v.split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad list entry '{s}' for {key}")))
                })
                .collect()
        };
        match key {
            "geometry.radius" => self.geometry.radius = parse_f64(value)?,
            "geometry.outer_radius" => self.geometry.outer_radius = parse_f64(value)?,
            "geometry.grid_n" => self.geometry.grid_n = parse_usize(value)?,
            "geometry.mesh_h" => self.geometry.mesh_h = parse_f64(value)?,
            "geometry.transducers" => self.geometry.transducers = parse_usize(value)?,
            "forward.dt_factor" => self.forward.dt_factor = parse_f64(value)?,
            "forward.horizon" => self.forward.horizon = parse_f64(value)?,
            "forward.f0" => self.forward.f0 = parse_f64(value)?,
            "forward.cap_eps_factor" => self.forward.cap_eps_factor = parse_f64(value)?,
            "forward.decay_threshold" => self.forward.decay_threshold = parse_f64(value)?,
            "laplace.p_count" => self.laplace.p_count = parse_usize(value)?,
            "laplace.p_min" => self.laplace.p_min = parse_f64(value)?,
            "laplace.p_max" => self.laplace.p_max = parse_f64(value)?,
            "laplace.tau" => self.laplace.tau = parse_f64(value)?,
            "qrm.basis_n" => self.qrm.basis_n = parse_usize(value)?,
            "qrm.alphas" => self.qrm.alphas = parse_list(value)?,
            "qrm.alpha" => self.qrm.alpha = parse_f64(value)?,
            "qrm.data_source" => self.qrm.data_source = value.trim().to_string(),
            "bcm.harmonics_k" => self.bcm.harmonics_k = parse_usize(value)?,
            "bcm.gamma" => self.bcm.gamma = parse_f64(value)?,
            "bcm.ctrl_nodes" => self.bcm.ctrl_nodes = parse_usize(value)?,
            "bcm.ctrl_pulses" => self.bcm.ctrl_pulses = parse_usize(value)?,
            "bcm.control_reg" => self.bcm.control_reg = parse_f64(value)?,
            "bcm.control_time" => self.bcm.control_time = parse_f64(value)?,
            "bcm.residual_ceiling" => self.bcm.residual_ceiling = parse_f64(value)?,
            "noise.deltas" => self.noise.deltas = parse_list(value)?,
            "noise.runs" => self.noise.runs = parse_usize(value)?,
            "noise.seed" => {
                self.noise.seed = value
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Config(format!("bad seed '{value}'")))?
            }
            "phantom.kind" => self.phantom.kind = value.trim().to_string(),
            "phantom.lo" => self.phantom.lo = parse_f64(value)?,
            "phantom.hi" => self.phantom.hi = parse_f64(value)?,
            "phantom.raster" => self.phantom.raster = value.trim().to_string(),
            "filter.window" => self.filter.window = parse_usize(value)?,
            "filter.sigma_mult" => self.filter.sigma_mult = parse_f64(value)?,
            "filter.min_count" => self.filter.min_count = parse_usize(value)?,
            _ => return Err(Error::Config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Cross-field validation; called once before any pipeline runs.
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if !(g.radius > 0.0) {
            return Err(Error::Config("geometry.radius must be positive".into()));
        }
        if !(g.outer_radius > g.radius) {
            return Err(Error::Config("geometry.outer_radius must exceed geometry.radius".into()));
        }
        if g.grid_n < 5 {
            return Err(Error::Config("geometry.grid_n must be at least 5".into()));
        }
        if !(g.mesh_h > 0.0 && g.mesh_h < g.radius) {
            return Err(Error::Config("geometry.mesh_h must lie in (0, radius)".into()));
        }
        if g.transducers < 4 * self.qrm.basis_n {
            return Err(Error::Config(format!(
                "transducers ({}) must be at least 4x qrm.basis_n ({})",
                g.transducers, self.qrm.basis_n
            )));
        }
        if !(self.forward.dt_factor > 0.0 && self.forward.dt_factor <= 0.9) {
            return Err(Error::Config("forward.dt_factor must lie in (0, 0.9]".into()));
        }
        let gamma_e = 0.5772156649015329f64;
        let p_cap = (-gamma_e).exp();
        if !(self.laplace.p_min > 0.0 && self.laplace.p_min < self.laplace.p_max) {
            return Err(Error::Config("laplace p grid must satisfy 0 < p_min < p_max".into()));
        }
        if self.laplace.p_max >= p_cap {
            return Err(Error::Config(format!(
                "laplace.p_max must stay below e^-gamma = {p_cap:.4}"
            )));
        }
        if self.laplace.p_count < 3 {
            return Err(Error::Config("laplace.p_count must be at least 3".into()));
        }
        if !(self.laplace.tau >= 0.0 && self.laplace.tau < self.forward.horizon) {
            return Err(Error::Config("laplace.tau must lie in [0, horizon)".into()));
        }
        if self.qrm.basis_n < 1 {
            return Err(Error::Config("qrm.basis_n must be at least 1".into()));
        }
        if self.qrm.alpha <= 0.0 || self.qrm.alphas.iter().any(|&a| a <= 0.0) {
            return Err(Error::Config("qrm regularization values must be positive".into()));
        }
        if self.qrm.data_source != "wave" && self.qrm.data_source != "oracle" {
            return Err(Error::Config("qrm.data_source must be 'wave' or 'oracle'".into()));
        }
        if self.bcm.harmonics_k < 1 {
            return Err(Error::Config("bcm.harmonics_k must be at least 1".into()));
        }
        if self.bcm.gamma <= 0.0 || self.bcm.control_reg <= 0.0 {
            return Err(Error::Config("bcm regularization values must be positive".into()));
        }
        if self.noise.deltas.iter().any(|&d| d < 0.0) {
            return Err(Error::Config("noise.deltas must be nonnegative".into()));
        }
        if self.noise.runs < 1 {
            return Err(Error::Config("noise.runs must be at least 1".into()));
        }
        if self.phantom.kind != "smooth" && self.phantom.kind != "raster" {
            return Err(Error::Config("phantom.kind must be 'smooth' or 'raster'".into()));
        }
        if !(self.phantom.lo < self.phantom.hi) {
            return Err(Error::Config("phantom.lo must be below phantom.hi".into()));
        }
        if self.filter.window < 3 || self.filter.window % 2 == 0 {
            return Err(Error::Config("filter.window must be odd and at least 3".into()));
        }
        if self.filter.window > self.geometry.grid_n {
            return Err(Error::Config("filter.window does not fit in the grid".into()));
        }
        Ok(())
    }

    /// Canonical text rendering; the config hash is computed over this.
    pub fn canonical_text(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        flatten("", &v, &mut out);
        out
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical_text().as_bytes());
        let digest = h.finalize();
        let mut s = String::with_capacity(64);
        for b in digest {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }
}

fn flatten(prefix: &str, v: &serde_json::Value, out: &mut String) {
    match v {
        serde_json::Value::Object(map) => {
            let sorted: BTreeMap<_, _> = map.iter().collect();
            for (k, val) in sorted {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, val, out);
            }
        }
        serde_json::Value::Array(items) => {
            let rendered: Vec<String> = items.iter().map(render_scalar).collect();
            out.push_str(&format!("{prefix}=[{}]\n", rendered.join(",")));
        }
        _ => out.push_str(&format!("{prefix}={}\n", render_scalar(v))),
    }
}

fn render_scalar(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                format!("{f:e}")
            } else {
                n.to_string()
            }
        }
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut section = String::new();
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].trim().to_string();
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(Error::Config(format!("line {}: expected key = value", lineno + 1)));
        };
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        let full = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        out.push((full, value.to_string()));
    }
    Ok(out)
}
