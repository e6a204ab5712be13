//! Trace persistence: `ATT1` binary container plus CSV export.

use super::{BoundaryTraceSet, TraceSet};
use crate::error::{Error, Result};
use crate::io::{write_text_atomic, BinReader, BinWriter};
use std::path::Path;

const MAGIC: &[u8; 4] = b"ATT1";
const VERSION: u32 = 1;

pub fn write_traces(set: &BoundaryTraceSet, path: &Path, config_hash: &str) -> Result<()> {
    let mut w = BinWriter::new(MAGIC, VERSION, config_hash);
    w.u64(set.sources.len() as u64);
    for &s in &set.sources {
        w.u64(s as u64);
    }
    for tr in &set.traces {
        w.f64(tr.dt);
        w.u64(tr.samples as u64);
        w.u64(tr.receivers.len() as u64);
        for &r in &tr.receivers {
            w.u64(r as u64);
        }
        w.u8(tr.p1.is_some() as u8);
        w.f64_slice(&tr.p0);
        if let Some(p1) = &tr.p1 {
            w.f64_slice(p1);
        }
    }
    w.finish(path)
}

pub fn read_traces(path: &Path) -> Result<BoundaryTraceSet> {
    let mut r = BinReader::open(path, MAGIC, VERSION)?;
    let ns = r.u64()? as usize;
    let mut sources = Vec::with_capacity(ns);
    for _ in 0..ns {
        sources.push(r.u64()? as usize);
    }
    let mut traces = Vec::with_capacity(ns);
    for _ in 0..ns {
        let dt = r.f64()?;
        let samples = r.u64()? as usize;
        let nr = r.u64()? as usize;
        let mut receivers = Vec::with_capacity(nr);
        for _ in 0..nr {
            receivers.push(r.u64()? as usize);
        }
        let has_p1 = r.u8()? != 0;
        let p0 = r.f64_vec()?;
        if p0.len() != samples * nr {
            return Err(Error::Data("trace block size mismatch".into()));
        }
        let p1 = if has_p1 { Some(r.f64_vec()?) } else { None };
        traces.push(TraceSet {
            dt,
            samples,
            receivers,
            p0,
            p1,
        });
    }
    Ok(BoundaryTraceSet { sources, traces })
}

/// One CSV row per (source, receiver, sample); intended for inspection at
/// desk scales, not bulk storage.
pub fn write_traces_csv(set: &BoundaryTraceSet, path: &Path, config_hash: &str) -> Result<()> {
    let mut s = format!("# config_hash={config_hash}\nsource,receiver,t,p0,p1\n");
    for (bi, tr) in set.traces.iter().enumerate() {
        let src = set.sources[bi];
        for k in 0..tr.samples {
            for (ri, &rec) in tr.receivers.iter().enumerate() {
                let p1 = tr
                    .p1
                    .as_ref()
                    .map(|v| format!("{:.17e}", v[k * tr.receivers.len() + ri]))
                    .unwrap_or_default();
                s.push_str(&format!(
                    "{src},{rec},{:.17e},{:.17e},{p1}\n",
                    k as f64 * tr.dt,
                    tr.p0_at(k, ri)
                ));
            }
        }
    }
    write_text_atomic(path, &s)
}
