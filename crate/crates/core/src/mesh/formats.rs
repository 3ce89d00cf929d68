//! Mesh file formats: Gmsh MSH 2.2 ASCII and the plain-text `TETMESH v1` dump.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::Mesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    GmshMsh2Ascii,
    TetMesh,
}

impl MeshFormat {
    /// Guess from the file extension (`.msh` or anything else → TETMESH).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("msh") => Self::GmshMsh2Ascii,
            _ => Self::TetMesh,
        }
    }
}

/// What happened during an import besides the mesh itself.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImportReport {
    /// Non-tetrahedral elements that were skipped.
    pub skipped_elements: usize,
    /// Nodes dropped because no tetrahedron references them.
    pub unreferenced_nodes: usize,
}

pub fn import_mesh(path: &Path, format: MeshFormat) -> Result<(Mesh, ImportReport)> {
    let text = std::fs::read_to_string(path)?;
    match format {
        MeshFormat::GmshMsh2Ascii => parse_msh2(&text),
        MeshFormat::TetMesh => parse_tetmesh(&text).map(|m| (m, ImportReport::default())),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { inner: text.lines().enumerate(), line: 0 }
    }

    /// Next non-empty line, trimmed.
    fn next(&mut self) -> Option<&'a str> {
        for (i, l) in self.inner.by_ref() {
            let t = l.trim();
            if !t.is_empty() {
                self.line = i + 1;
                return Some(t);
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<&'a str> {
        self.next().ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, msg: msg.into() }
    }

    fn parse<T: std::str::FromStr>(&self, tok: &str, what: &str) -> Result<T> {
        tok.parse().map_err(|_| self.err(format!("invalid {what} '{tok}'")))
    }
}

/// Parses a Gmsh MSH 2.2 ASCII file, keeping only 4-node tetrahedra (type 4).
pub fn parse_msh2(text: &str) -> Result<(Mesh, ImportReport)> {
    let mut lines = Lines::new(text);
    let mut nodes: Vec<(u64, Vector3<f64>)> = Vec::new();
    let mut tets: Vec<[u64; 4]> = Vec::new();
    let mut report = ImportReport::default();
    let mut saw_format = false;

    while let Some(section) = lines.next() {
        match section {
            "$MeshFormat" => {
                let hdr = lines.expect("format header")?;
                let toks: Vec<&str> = hdr.split_whitespace().collect();
                if toks.len() < 3 || !toks[0].starts_with('2') {
                    return Err(lines.err(format!("unsupported MSH format '{hdr}', need 2.2 ASCII")));
                }
                if toks[1] != "0" {
                    return Err(lines.err("binary MSH files are not supported"));
                }
                if lines.expect("$EndMeshFormat")? != "$EndMeshFormat" {
                    return Err(lines.err("expected $EndMeshFormat"));
                }
                saw_format = true;
            }
            "$Nodes" => {
                let n: usize = {
                    let l = lines.expect("node count")?;
                    lines.parse(l, "node count")?
                };
                nodes.reserve(n);
                for _ in 0..n {
                    let l = lines.expect("node line")?;
                    let toks: Vec<&str> = l.split_whitespace().collect();
                    if toks.len() != 4 {
                        return Err(lines.err(format!("node line needs 4 fields, got {}", toks.len())));
                    }
                    let id: u64 = lines.parse(toks[0], "node id")?;
                    let x: f64 = lines.parse(toks[1], "coordinate")?;
                    let y: f64 = lines.parse(toks[2], "coordinate")?;
                    let z: f64 = lines.parse(toks[3], "coordinate")?;
                    nodes.push((id, Vector3::new(x, y, z)));
                }
                if lines.expect("$EndNodes")? != "$EndNodes" {
                    return Err(lines.err("expected $EndNodes"));
                }
            }
            "$Elements" => {
                let n: usize = {
                    let l = lines.expect("element count")?;
                    lines.parse(l, "element count")?
                };
                for _ in 0..n {
                    let l = lines.expect("element line")?;
                    let toks: Vec<&str> = l.split_whitespace().collect();
                    if toks.len() < 3 {
                        return Err(lines.err("truncated element line"));
                    }
                    let ty: u32 = lines.parse(toks[1], "element type")?;
                    let ntags: usize = lines.parse(toks[2], "tag count")?;
                    let conn = toks.get(3 + ntags..).unwrap_or(&[]);
                    if ty != 4 {
                        report.skipped_elements += 1;
                        continue;
                    }
                    if conn.len() != 4 {
                        return Err(lines.err(format!("tetrahedron needs 4 nodes, got {}", conn.len())));
                    }
                    let mut t = [0u64; 4];
                    for (k, tok) in conn.iter().enumerate() {
                        t[k] = lines.parse(tok, "node reference")?;
                    }
                    tets.push(t);
                }
                if lines.expect("$EndElements")? != "$EndElements" {
                    return Err(lines.err("expected $EndElements"));
                }
            }
            other if other.starts_with('$') => {
                // skip unknown sections such as $PhysicalNames
                let end = format!("$End{}", &other[1..]);
                loop {
                    if lines.expect(&end)? == end {
                        break;
                    }
                }
            }
            other => return Err(lines.err(format!("unexpected content '{other}'"))),
        }
    }
    if !saw_format {
        return Err(Error::Parse { line: 1, msg: "missing $MeshFormat section".into() });
    }
    if tets.is_empty() {
        return Err(Error::InvalidMesh("file contains no tetrahedra".into()));
    }

    let mut referenced: HashMap<u64, bool> = nodes.iter().map(|(id, _)| (*id, false)).collect();
    for t in &tets {
        for id in t {
            match referenced.get_mut(id) {
                Some(r) => *r = true,
                None => return Err(Error::InvalidMesh(format!("element references unknown node {id}"))),
            }
        }
    }
    let mut index = HashMap::new();
    let mut vertices = Vec::new();
    for (id, x) in &nodes {
        if referenced[id] {
            index.insert(*id, vertices.len());
            vertices.push(*x);
        } else {
            report.unreferenced_nodes += 1;
        }
    }
    let elements = tets.iter().map(|t| t.map(|id| index[&id])).collect();
    if report.skipped_elements > 0 {
        log::warn!("skipped {} non-tetrahedral elements", report.skipped_elements);
    }
    Ok((Mesh::new(vertices, elements)?, report))
}

/// Writes a mesh as MSH 2.2 ASCII with 1-based node and element ids.
pub fn export_msh2(mesh: &Mesh) -> String {
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(s, "{}", mesh.n_vertices());
    for (i, v) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(s, "{} {:?} {:?} {:?}", i + 1, v.x, v.y, v.z);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let _ = writeln!(s, "{}", mesh.n_elements());
    for (e, el) in mesh.elements().iter().enumerate() {
        let _ = writeln!(s, "{} 4 2 0 1 {} {} {} {}", e + 1, el[0] + 1, el[1] + 1, el[2] + 1, el[3] + 1);
    }
    s.push_str("$EndElements\n");
    s
}

pub fn export_tetmesh(mesh: &Mesh) -> String {
    let mut s = String::from("TETMESH v1\n");
    let _ = writeln!(s, "{}", mesh.n_vertices());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", v.x, v.y, v.z);
    }
    let _ = writeln!(s, "{}", mesh.n_elements());
    for el in mesh.elements() {
        let _ = writeln!(s, "{} {} {} {}", el[0], el[1], el[2], el[3]);
    }
    s
}

pub fn parse_tetmesh(text: &str) -> Result<Mesh> {
    let mut lines = Lines::new(text);
    if lines.expect("header")? != "TETMESH v1" {
        return Err(lines.err("expected header 'TETMESH v1'"));
    }
    let nv: usize = {
        let l = lines.expect("vertex count")?;
        lines.parse(l, "vertex count")?
    };
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let l = lines.expect("vertex line")?;
        let c: Vec<f64> = l
            .split_whitespace()
            .map(|t| lines.parse(t, "coordinate"))
            .collect::<Result<_>>()?;
        if c.len() != 3 {
            return Err(lines.err("vertex line needs 3 coordinates"));
        }
        vertices.push(Vector3::new(c[0], c[1], c[2]));
    }
    let ne: usize = {
        let l = lines.expect("element count")?;
        lines.parse(l, "element count")?
    };
    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let l = lines.expect("element line")?;
        let c: Vec<usize> = l
            .split_whitespace()
            .map(|t| lines.parse(t, "vertex index"))
            .collect::<Result<_>>()?;
        if c.len() != 4 {
            return Err(lines.err("element line needs 4 indices"));
        }
        elements.push([c[0], c[1], c[2], c[3]]);
    }
    Mesh::new(vertices, elements)
}
