//! Binary container primitives, PGM images, and atomic file writes.
//!
//! All on-disk containers are little-endian with a four-byte magic and a
//! `u32` version, followed by a 64-hex config hash (zeros when unknown).

use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

pub struct BinWriter {
    buf: Vec<u8>,
}

impl BinWriter {
    pub fn new(magic: &[u8; 4], version: u32, config_hash: &str) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(magic);
        buf.extend_from_slice(&version.to_le_bytes());
        let mut hash = [b'0'; 64];
        let src = config_hash.as_bytes();
        let n = src.len().min(64);
        hash[..n].copy_from_slice(&src[..n]);
        buf.extend_from_slice(&hash);
        BinWriter { buf }
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64_slice(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        for &x in v {
            self.f64(x);
        }
    }

    pub fn u32_slice(&mut self, v: &[u32]) {
        self.u64(v.len() as u64);
        for &x in v {
            self.u32(x);
        }
    }

    pub fn bytes(&mut self, v: &[u8]) {
        self.u64(v.len() as u64);
        self.buf.extend_from_slice(v);
    }

    pub fn finish(self, path: &Path) -> Result<()> {
        write_atomic(path, &self.buf)
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

pub struct BinReader {
    data: Vec<u8>,
    pos: usize,
    pub config_hash: String,
}

impl BinReader {
    pub fn open(path: &Path, magic: &[u8; 4], version: u32) -> Result<Self> {
        let mut data = Vec::new();
        std::fs::File::open(path)
            .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?
            .read_to_end(&mut data)?;
        Self::from_bytes(data, magic, version, path)
    }

    pub fn from_bytes(data: Vec<u8>, magic: &[u8; 4], version: u32, path: &Path) -> Result<Self> {
        if data.len() < 72 || &data[0..4] != magic {
            return Err(Error::Data(format!(
                "{} is not a {} container",
                path.display(),
                String::from_utf8_lossy(magic)
            )));
        }
        let v = u32::from_le_bytes(data[4..8].try_into().unwrap());
        if v != version {
            return Err(Error::Data(format!(
                "{}: unsupported container version {v}, expected {version}",
                path.display()
            )));
        }
        let config_hash = String::from_utf8_lossy(&data[8..72]).into_owned();
        Ok(BinReader {
            data,
            pos: 72,
            config_hash,
        })
    }

    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Data("container truncated".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64_vec(&mut self) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(self.f64()?);
        }
        Ok(v)
    }

    pub fn u32_vec(&mut self) -> Result<Vec<u32>> {
        let n = self.u64()? as usize;
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(self.u32()?);
        }
        Ok(v)
    }

    pub fn byte_vec(&mut self) -> Result<Vec<u8>> {
        let n = self.u64()? as usize;
        Ok(self.take(n)?.to_vec())
    }
}

/// Writes via a temp file in the same directory, then renames into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all().ok();
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_text_atomic(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

/// 8-bit binary PGM (P5).
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Pgm {
    pub fn read(path: &Path) -> Result<Pgm> {
        let mut data = Vec::new();
        std::fs::File::open(path)
            .map_err(|e| Error::Data(format!("cannot open raster {}: {e}", path.display())))?
            .read_to_end(&mut data)?;
        Self::parse(&data).map_err(|m| Error::Data(format!("{}: {m}", path.display())))
    }

    fn parse(data: &[u8]) -> std::result::Result<Pgm, String> {
        let mut pos = 0usize;
        let mut fields = Vec::new();
        // header: magic, width, height, maxval; '#' starts a comment
        while fields.len() < 4 {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < data.len() && !data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err("truncated header".into());
            }
            fields.push(String::from_utf8_lossy(&data[start..pos]).into_owned());
        }
        if fields[0] != "P5" {
            return Err(format!("expected P5, got {}", fields[0]));
        }
        let width: usize = fields[1].parse().map_err(|_| "bad width")?;
        let height: usize = fields[2].parse().map_err(|_| "bad height")?;
        let maxval: usize = fields[3].parse().map_err(|_| "bad maxval")?;
        if maxval != 255 {
            return Err(format!("only 8-bit PGM supported, maxval {maxval}"));
        }
        pos += 1; // single whitespace after maxval
        let need = width * height;
        if data.len() < pos + need {
            return Err("pixel data truncated".into());
        }
        Ok(Pgm {
            width,
            height,
            pixels: data[pos..pos + need].to_vec(),
        })
    }

    pub fn write(&self, path: &Path, comment: Option<&str>) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"P5\n");
        if let Some(c) = comment {
            for line in c.lines() {
                buf.extend_from_slice(format!("# {line}\n").as_bytes());
            }
        }
        buf.extend_from_slice(format!("{} {}\n255\n", self.width, self.height).as_bytes());
        buf.extend_from_slice(&self.pixels);
        write_atomic(path, &buf)
    }
}

/// Linearly windows `values` into 8-bit pixels; returns the window used.
pub fn quantize_to_pgm(values: &[f64], width: usize, height: usize) -> (Pgm, f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let pixels = values
        .iter()
        .map(|&v| (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8)
        .collect();
    (
        Pgm {
            width,
            height,
            pixels,
        },
        lo,
        hi,
    )
}
