//! Legacy ASCII VTK (version 3.0) unstructured-grid snapshots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::fields::SublatticePair;
use crate::mesh::Mesh;

const VTK_TETRA: u32 = 10;

/// Renders the snapshot: `m1`, `m2` and `m_total = η_{s,1}m1 + η_{s,2}m2`.
pub fn vtk_string(mesh: &Mesh, pair: &SublatticePair, eta_s: [f64; 2]) -> Result<String> {
    let n = mesh.n_vertices();
    if pair.n_vertices() != n {
        return Err(Error::DimensionMismatch { expected: n, got: pair.n_vertices() });
    }
    let ne = mesh.n_elements();
    let mut s = String::with_capacity(64 * (n + ne));
    s.push_str("# vtk DataFile Version 3.0\nafm-fem snapshot\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    let _ = writeln!(s, "CELLS {ne} {}", 5 * ne);
    for e in mesh.elements() {
        let _ = writeln!(s, "4 {} {} {} {}", e[0], e[1], e[2], e[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        let _ = writeln!(s, "{VTK_TETRA}");
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    let total = pair.total(eta_s);
    for (name, field) in [("m1", pair.m1()), ("m2", pair.m2()), ("m_total", &total)] {
        let _ = writeln!(s, "VECTORS {name} double");
        for v in field.iter() {
            let _ = writeln!(s, "{} {} {}", v.x, v.y, v.z);
        }
    }
    Ok(s)
}

pub fn write_vtk(mesh: &Mesh, pair: &SublatticePair, eta_s: [f64; 2], path: &Path) -> Result<()> {
    std::fs::write(path, vtk_string(mesh, pair, eta_s)?)?;
    Ok(())
}

/// Contents of a legacy unstructured-grid file as read back by [`parse_vtk`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VtkData {
    pub title: String,
    pub points: Vec<Vector3<f64>>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u32>,
    pub point_vectors: BTreeMap<String, Vec<Vector3<f64>>>,
}

struct Tokens<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    buf: std::vec::IntoIter<&'a str>,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn new(body: &'a str, first_line: usize) -> Self {
        let mut lines = body.lines().enumerate();
        for _ in 0..first_line {
            lines.next();
        }
        Self { lines, buf: Vec::new().into_iter(), line: first_line }
    }

    fn next(&mut self) -> Option<&'a str> {
        loop {
            if let Some(t) = self.buf.next() {
                return Some(t);
            }
            let (i, l) = self.lines.next()?;
            self.line = i + 1;
            self.buf = l.split_whitespace().collect::<Vec<_>>().into_iter();
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, msg: msg.into() }
    }

    fn expect(&mut self) -> Result<&'a str> {
        self.next().ok_or_else(|| self.err("unexpected end of file"))
    }

    fn num<T: std::str::FromStr>(&mut self) -> Result<T> {
        let t = self.expect()?;
        t.parse().map_err(|_| self.err(format!("bad number '{t}'")))
    }

    fn vec3(&mut self) -> Result<Vector3<f64>> {
        Ok(Vector3::new(self.num()?, self.num()?, self.num()?))
    }
}

/// Parses the subset of legacy ASCII VTK written by [`write_vtk`]: an
/// unstructured grid with point-data `VECTORS` arrays.
pub fn parse_vtk(text: &str) -> Result<VtkData> {
    let mut header = text.lines();
    let version = header.next().unwrap_or("");
    if !version.starts_with("# vtk DataFile Version") {
        return Err(Error::Parse { line: 1, msg: "missing VTK version line".into() });
    }
    let title = header.next().unwrap_or("").to_string();
    if header.next().map(str::trim) != Some("ASCII") {
        return Err(Error::Parse { line: 3, msg: "only ASCII files are supported".into() });
    }
    let mut tok = Tokens::new(text, 3);
    let mut data = VtkData { title, ..Default::default() };
    let mut n_point_data = None;
    while let Some(key) = tok.next() {
        match key {
            "DATASET" => {
                let kind = tok.expect()?;
                if kind != "UNSTRUCTURED_GRID" {
                    return Err(tok.err(format!("unsupported dataset {kind}")));
                }
            }
            "POINTS" => {
                let n: usize = tok.num()?;
                tok.expect()?;
                data.points = (0..n).map(|_| tok.vec3()).collect::<Result<_>>()?;
            }
            "CELLS" => {
                let n: usize = tok.num()?;
                let size: usize = tok.num()?;
                let mut read = 0;
                for _ in 0..n {
                    let k: usize = tok.num()?;
                    let cell = (0..k).map(|_| tok.num()).collect::<Result<Vec<usize>>>()?;
                    if let Some(&bad) = cell.iter().find(|&&i| i >= data.points.len()) {
                        return Err(tok.err(format!("cell references point {bad}")));
                    }
                    read += k + 1;
                    data.cells.push(cell);
                }
                if read != size {
                    return Err(tok.err(format!("CELLS size {size} does not match {read} entries")));
                }
            }
            "CELL_TYPES" => {
                let n: usize = tok.num()?;
                data.cell_types = (0..n).map(|_| tok.num()).collect::<Result<_>>()?;
            }
            "POINT_DATA" => n_point_data = Some(tok.num::<usize>()?),
            "VECTORS" => {
                let n = n_point_data.ok_or_else(|| tok.err("VECTORS before POINT_DATA"))?;
                let name = tok.expect()?.to_string();
                tok.expect()?;
                let values = (0..n).map(|_| tok.vec3()).collect::<Result<_>>()?;
                data.point_vectors.insert(name, values);
            }
            other => return Err(tok.err(format!("unsupported keyword {other}"))),
        }
    }
    if data.cells.len() != data.cell_types.len() {
        return Err(tok.err("CELLS and CELL_TYPES counts differ"));
    }
    if n_point_data.is_some_and(|n| n != data.points.len()) {
        return Err(tok.err("POINT_DATA count differs from POINTS"));
    }
    Ok(data)
}

/// Reads `m1`/`m2` back from a snapshot on `mesh` (vertex counts must agree).
pub fn read_vtk_pair(path: &Path, mesh: &Mesh) -> Result<SublatticePair> {
    let data = parse_vtk(&std::fs::read_to_string(path)?)?;
    if data.points.len() != mesh.n_vertices() {
        return Err(Error::DimensionMismatch { expected: mesh.n_vertices(), got: data.points.len() });
    }
    let get = |name: &str| {
        data.point_vectors
            .get(name)
            .cloned()
            .map(crate::fem::NodalVectorField)
            .ok_or_else(|| Error::Config(format!("{} has no '{name}' array", path.display())))
    };
    SublatticePair::new(get("m1")?, get("m2")?)
}
