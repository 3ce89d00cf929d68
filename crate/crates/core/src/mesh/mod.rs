//! Tetrahedral meshes of polyhedral domains.
//!
//! A [`Mesh`] is immutable after construction. Element orientation is repaired
//! on construction so every element has positive signed volume, and the
//! boundary faces are derived from the connectivity.

mod formats;
mod generate;

pub use formats::{export_msh2, export_tetmesh, import_mesh, parse_msh2, parse_tetmesh, ImportReport, MeshFormat};
pub use generate::{generate_box_mesh, generate_disk_mesh};

use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Volume and barycentric-coordinate gradients of one tetrahedron.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub volume: f64,
    /// Gradients of the four P1 hat functions restricted to the element.
    pub grads: [Vector3<f64>; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vector3<f64>>,
    elements: Vec<[usize; 4]>,
    boundary_faces: Vec<[usize; 3]>,
}

/// Summary quantities of a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStats {
    pub h_max: f64,
    pub h_min: f64,
    /// Max over elements of diameter / inradius (at least 2√6 for any tetrahedron).
    pub shape_regularity: f64,
    pub n_vertices: usize,
    pub n_elements: usize,
    pub total_volume: f64,
}

/// Smallest possible diameter/inradius ratio of a tetrahedron (the regular one).
pub const MIN_SHAPE_RATIO: f64 = 4.898_979_485_566_356;

fn signed_volume(p: [&Vector3<f64>; 4]) -> f64 {
    let m = Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]);
    m.determinant() / 6.0
}

impl Mesh {
    /// Builds a mesh, swapping two vertices of any negatively oriented element.
    pub fn new(vertices: Vec<Vector3<f64>>, mut elements: Vec<[usize; 4]>) -> Result<Self> {
        if vertices.is_empty() || elements.is_empty() {
            return Err(Error::InvalidMesh("mesh has no vertices or no elements".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        let n = vertices.len();
        for (e, el) in elements.iter_mut().enumerate() {
            if let Some(&bad) = el.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidMesh(format!(
                    "element {e} references vertex {bad} but there are only {n} vertices"
                )));
            }
            let vol = signed_volume([&vertices[el[0]], &vertices[el[1]], &vertices[el[2]], &vertices[el[3]]]);
            let scale = (0..4)
                .flat_map(|a| (a + 1..4).map(move |b| (a, b)))
                .map(|(a, b)| (vertices[el[a]] - vertices[el[b]]).norm())
                .fold(0.0_f64, f64::max);
            if vol.abs() <= 1e-14 * scale.powi(3) {
                return Err(Error::DegenerateElement { element: e, volume: vol });
            }
            if vol < 0.0 {
                el.swap(2, 3);
            }
        }
        let boundary_faces = Self::derive_boundary(&elements)?;
        Ok(Self { vertices, elements, boundary_faces })
    }

    fn derive_boundary(elements: &[[usize; 4]]) -> Result<Vec<[usize; 3]>> {
        // local faces opposite to each vertex, oriented outward for positive elements
        const FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];
        let mut count: HashMap<[usize; 3], (usize, [usize; 3])> = HashMap::new();
        let mut order = Vec::new();
        for el in elements {
            for f in FACES {
                let face = [el[f[0]], el[f[1]], el[f[2]]];
                let mut key = face;
                key.sort_unstable();
                let entry = count.entry(key).or_insert_with(|| {
                    order.push(key);
                    (0, face)
                });
                entry.0 += 1;
            }
        }
        let mut boundary = Vec::new();
        for key in order {
            match count[&key] {
                (1, face) => boundary.push(face),
                (2, _) => {}
                (k, _) => {
                    return Err(Error::InvalidMesh(format!("face {key:?} shared by {k} elements")));
                }
            }
        }
        Ok(boundary)
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 4]] {
        &self.elements
    }

    pub fn boundary_faces(&self) -> &[[usize; 3]] {
        &self.boundary_faces
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_vertices(&self, e: usize) -> [Vector3<f64>; 4] {
        self.elements[e].map(|i| self.vertices[i])
    }

    pub fn element_volume(&self, e: usize) -> f64 {
        let p = self.element_vertices(e);
        signed_volume([&p[0], &p[1], &p[2], &p[3]])
    }

    /// Volume and hat-function gradients of element `e`.
    pub fn element_geometry(&self, e: usize) -> ElementGeometry {
        let p = self.element_vertices(e);
        let jac = Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]);
        let volume = jac.determinant() / 6.0;
        // rows of J^{-1} are the gradients of λ1, λ2, λ3
        let inv = jac.try_inverse().expect("element validated as non-degenerate");
        let g1 = inv.row(0).transpose();
        let g2 = inv.row(1).transpose();
        let g3 = inv.row(2).transpose();
        let g0 = -(g1 + g2 + g3);
        ElementGeometry { volume, grads: [g0, g1, g2, g3] }
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.element_volume(e)).sum()
    }

    /// Mesh size `h`: the largest element diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.element_diameter(e)).fold(0.0, f64::max)
    }

    pub fn element_diameter(&self, e: usize) -> f64 {
        let p = self.element_vertices(e);
        let mut d: f64 = 0.0;
        for a in 0..4 {
            for b in a + 1..4 {
                d = d.max((p[a] - p[b]).norm());
            }
        }
        d
    }

    fn element_inradius(&self, e: usize) -> f64 {
        let p = self.element_vertices(e);
        let area = |a: usize, b: usize, c: usize| 0.5 * (p[b] - p[a]).cross(&(p[c] - p[a])).norm();
        let surface = area(1, 2, 3) + area(0, 2, 3) + area(0, 1, 3) + area(0, 1, 2);
        3.0 * self.element_volume(e) / surface
    }

    pub fn stats(&self) -> MeshStats {
        mesh_stats(self)
    }
}

pub fn mesh_stats(mesh: &Mesh) -> MeshStats {
    let mut h_max: f64 = 0.0;
    let mut h_min = f64::INFINITY;
    let mut shape: f64 = 0.0;
    let mut total_volume = 0.0;
    for e in 0..mesh.n_elements() {
        let d = mesh.element_diameter(e);
        h_max = h_max.max(d);
        h_min = h_min.min(d);
        shape = shape.max(d / mesh.element_inradius(e));
        total_volume += mesh.element_volume(e);
    }
    MeshStats {
        h_max,
        h_min,
        shape_regularity: shape,
        n_vertices: mesh.n_vertices(),
        n_elements: mesh.n_elements(),
        total_volume,
    }
}
