//! Mesh persistence: versioned binary container (magic `ATM1`) and a
//! human-readable CSV export.

use super::{Point, TriMesh};
use crate::error::Result;
use crate::io::{write_text_atomic, BinReader, BinWriter};
use std::path::Path;

const MAGIC: &[u8; 4] = b"ATM1";
const VERSION: u32 = 1;

pub fn write_mesh(mesh: &TriMesh, path: &Path, config_hash: &str) -> Result<()> {
    let mut w = BinWriter::new(MAGIC, VERSION, config_hash);
    w.f64(mesh.radius);
    w.u64(mesh.nodes.len() as u64);
    for p in &mesh.nodes {
        w.f64(p.x);
        w.f64(p.y);
    }
    let mut tri = Vec::with_capacity(mesh.triangles.len() * 3);
    for t in &mesh.triangles {
        tri.extend(t.iter().map(|&n| n as u32));
    }
    w.u32_slice(&tri);
    let bnd: Vec<u32> = mesh.boundary_nodes.iter().map(|&n| n as u32).collect();
    w.u32_slice(&bnd);
    w.finish(path)
}

pub fn read_mesh(path: &Path) -> Result<TriMesh> {
    let mut r = BinReader::open(path, MAGIC, VERSION)?;
    let radius = r.f64()?;
    let n = r.u64()? as usize;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let x = r.f64()?;
        let y = r.f64()?;
        nodes.push(Point::new(x, y));
    }
    let tri = r.u32_vec()?;
    let triangles = tri
        .chunks_exact(3)
        .map(|c| [c[0] as usize, c[1] as usize, c[2] as usize])
        .collect();
    let boundary_nodes = r.u32_vec()?.into_iter().map(|v| v as usize).collect();
    Ok(TriMesh {
        nodes,
        triangles,
        boundary_nodes,
        radius,
    })
}

pub fn write_mesh_csv(mesh: &TriMesh, path: &Path, config_hash: &str) -> Result<()> {
    let mut s = String::new();
    s.push_str(&format!("# config_hash={config_hash}\n"));
    s.push_str("kind,a,b,c\n");
    for p in &mesh.nodes {
        s.push_str(&format!("node,{:.17e},{:.17e},\n", p.x, p.y));
    }
    for t in &mesh.triangles {
        s.push_str(&format!("triangle,{},{},{}\n", t[0], t[1], t[2]));
    }
    for &b in &mesh.boundary_nodes {
        s.push_str(&format!("boundary,{b},,\n"));
    }
    write_text_atomic(path, &s)
}
