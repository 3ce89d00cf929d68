use std::f64::consts::PI;

use nalgebra::Vector3;

use super::Mesh;
use crate::error::{Error, Result};

/// Structured box mesh: `nx·ny·nz` cells, each split into six tetrahedra
/// sharing the main diagonal (Kuhn/Freudenthal subdivision).
///
/// Vertices are numbered with x fastest, then y, then z.
pub fn generate_box_mesh(
    nx: usize,
    ny: usize,
    nz: usize,
    lo: Vector3<f64>,
    hi: Vector3<f64>,
) -> Result<Mesh> {
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::MeshParams(format!("cell counts must be positive, got ({nx},{ny},{nz})")));
    }
    if !(0..3).all(|k| hi[k] > lo[k]) {
        return Err(Error::MeshParams(format!("degenerate bounds lo={lo:?} hi={hi:?}")));
    }
    let n = [nx, ny, nz];
    let coord = |k: usize, i: usize| {
        // exact endpoints regardless of rounding
        if i == n[k] {
            hi[k]
        } else {
            lo[k] + (hi[k] - lo[k]) * i as f64 / n[k] as f64
        }
    };
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Vector3::new(coord(0, i), coord(1, j), coord(2, k)));
            }
        }
    }
    let idx = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);

    // Each tet follows a monotone lattice path 000 -> 111 along a permutation of the axes.
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut elements = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for perm in PERMS {
                    let mut off = [0usize; 3];
                    let mut tet = [idx(i, j, k); 4];
                    for (step, &axis) in perm.iter().enumerate() {
                        off[axis] = 1;
                        tet[step + 1] = idx(i + off[0], j + off[1], k + off[2]);
                    }
                    elements.push(tet);
                }
            }
        }
    }
    Mesh::new(vertices, elements)
}

/// Cylindrical disk of the given radius and thickness centred on the z axis,
/// occupying `0 ≤ z ≤ thickness`.
///
/// The cross-section is a ring pattern: a centre vertex plus `n_radial` rings,
/// ring `r` carrying `6r` equally spaced vertices at radius `radius·r/n_radial`.
/// Adjacent rings are stitched into triangles by angular merging, and the
/// triangulation is extruded through `n_layers` prism layers, three tetrahedra
/// per prism. The cross-section is the inscribed `6·n_radial`-gon, so the
/// volume is strictly below `π·radius²·thickness`.
pub fn generate_disk_mesh(radius: f64, thickness: f64, n_radial: usize, n_layers: usize) -> Result<Mesh> {
    if !(radius > 0.0 && thickness > 0.0) {
        return Err(Error::MeshParams(format!(
            "radius and thickness must be positive, got {radius}, {thickness}"
        )));
    }
    if n_radial < 2 || n_layers < 1 {
        return Err(Error::MeshParams(format!(
            "need n_radial >= 2 and n_layers >= 1, got {n_radial}, {n_layers}"
        )));
    }

    // 2D ring layout
    let mut points: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    let mut ring_start = vec![0usize];
    let mut ring_len = vec![1usize];
    for r in 1..=n_radial {
        ring_start.push(points.len());
        ring_len.push(6 * r);
        let rad = radius * r as f64 / n_radial as f64;
        for k in 0..6 * r {
            let phi = 2.0 * PI * k as f64 / (6 * r) as f64;
            points.push((rad * phi.cos(), rad * phi.sin()));
        }
    }

    let mut triangles: Vec<[usize; 3]> = Vec::new();
    for r in 1..=n_radial {
        let (s_in, n_in) = (ring_start[r - 1], ring_len[r - 1]);
        let (s_out, n_out) = (ring_start[r], ring_len[r]);
        if n_in == 1 {
            for k in 0..n_out {
                triangles.push([s_in, s_out + k, s_out + (k + 1) % n_out]);
            }
            continue;
        }
        // walk both rings in increasing angle; fractions k/n are the normalised angles
        let (mut i, mut j) = (0usize, 0usize);
        while i < n_in || j < n_out {
            let next_in = (i + 1) as f64 / n_in as f64;
            let next_out = (j + 1) as f64 / n_out as f64;
            let a = s_in + i % n_in;
            let b = s_out + j % n_out;
            if j < n_out && (i == n_in || next_out <= next_in) {
                triangles.push([a, b, s_out + (j + 1) % n_out]);
                j += 1;
            } else {
                triangles.push([a, b, s_in + (i + 1) % n_in]);
                i += 1;
            }
        }
    }

    let n2 = points.len();
    let mut vertices = Vec::with_capacity(n2 * (n_layers + 1));
    for l in 0..=n_layers {
        let z = if l == n_layers { thickness } else { thickness * l as f64 / n_layers as f64 };
        vertices.extend(points.iter().map(|&(x, y)| Vector3::new(x, y, z)));
    }

    let mut elements = Vec::with_capacity(3 * triangles.len() * n_layers);
    for l in 0..n_layers {
        for tri in &triangles {
            let mut t = *tri;
            // global vertex order fixes the quad-face diagonals consistently between prisms
            t.sort_unstable();
            let bot = |v: usize| v + l * n2;
            let top = |v: usize| v + (l + 1) * n2;
            let [a, b, c] = t;
            elements.push([bot(a), bot(b), bot(c), top(c)]);
            elements.push([bot(a), bot(b), top(b), top(c)]);
            elements.push([bot(a), top(a), top(b), top(c)]);
        }
    }
    Mesh::new(vertices, elements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> (Vector3<f64>, Vector3<f64>) {
        (Vector3::zeros(), Vector3::new(1.0, 1.0, 1.0))
    }

    #[test]
    fn one_kuhn_cube() {
        let (lo, hi) = unit();
        let m = generate_box_mesh(1, 1, 1, lo, hi).unwrap();
        assert_eq!(m.n_vertices(), 8);
        assert_eq!(m.n_elements(), 6);
        assert_relative_eq!(m.total_volume(), 1.0, epsilon = 1e-15);
        for e in 0..6 {
            assert_relative_eq!(m.element_volume(e), 1.0 / 6.0, epsilon = 1e-15);
        }
        // 6 tets × 4 faces = 24 = 12 boundary (two per cube face) + 2×6 interior
        assert_eq!(m.boundary_faces().len(), 12);
    }

    #[test]
    fn toy_cube_counts() {
        let lo = Vector3::repeat(-0.5);
        let hi = Vector3::repeat(0.5);
        let m = generate_box_mesh(8, 8, 8, lo, hi).unwrap();
        assert_eq!(m.n_vertices(), 729);
        assert_eq!(m.n_elements(), 3072);
        assert_relative_eq!(m.total_volume(), 1.0, epsilon = 1e-12);
        assert_eq!(m.boundary_faces().len(), 6 * 64 * 2);
    }

    #[test]
    fn two_cells_brute_force_volumes() {
        let m = generate_box_mesh(2, 1, 1, Vector3::zeros(), Vector3::new(2.0, 1.0, 1.0)).unwrap();
        assert_eq!(m.n_vertices(), 12);
        assert_eq!(m.n_elements(), 12);
        // oracle: determinant from raw coordinates
        for el in m.elements() {
            let p: Vec<_> = el.iter().map(|&i| m.vertices()[i]).collect();
            let d = (p[1] - p[0]).dot(&(p[2] - p[0]).cross(&(p[3] - p[0])));
            assert_relative_eq!(d.abs() / 6.0, 1.0 / 6.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn box_rejects_bad_input() {
        let (lo, hi) = unit();
        assert!(generate_box_mesh(0, 1, 1, lo, hi).is_err());
        assert!(generate_box_mesh(1, 1, 1, hi, lo).is_err());
        assert!(generate_box_mesh(1, 1, 1, lo, Vector3::new(1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn box_is_deterministic() {
        let (lo, hi) = unit();
        assert_eq!(generate_box_mesh(3, 2, 2, lo, hi).unwrap(), generate_box_mesh(3, 2, 2, lo, hi).unwrap());
    }

    #[test]
    fn disk_volume_matches_inscribed_polygon() {
        let m = generate_disk_mesh(30.0, 1.0, 8, 1).unwrap();
        // oracle: area of the regular 48-gon inscribed in the circle
        let n = 48.0;
        let polygon = 0.5 * n * 900.0 * (2.0 * PI / n).sin();
        assert_relative_eq!(m.total_volume(), polygon, max_relative = 1e-12);
        let exact = PI * 900.0;
        assert!(m.total_volume() <= exact);
        assert!((exact - m.total_volume()) / exact < 0.1);
    }

    #[test]
    fn small_disk_is_valid() {
        let m = generate_disk_mesh(1.0, 1.0, 2, 1).unwrap();
        assert!((0..m.n_elements()).all(|e| m.element_volume(e) > 0.0));
        assert_eq!(m.n_vertices(), 2 * (1 + 6 + 12));
    }

    #[test]
    fn disk_volume_increases_monotonically_with_refinement() {
        let mut prev = 0.0;
        for n in 2..12 {
            let v = generate_disk_mesh(30.0, 1.0, n, 1).unwrap().total_volume();
            assert!(v > prev);
            assert!(v < PI * 900.0);
            prev = v;
        }
        assert!((PI * 900.0 - prev) / (PI * 900.0) < 2e-3);
    }

    #[test]
    fn multilayer_disk_is_conforming() {
        // Mesh::new errors if any face is shared by more than two elements; in addition the
        // boundary must consist of the two caps plus the lateral surface only.
        let m = generate_disk_mesh(5.0, 2.0, 3, 3).unwrap();
        let n_tri = 6 * 9; // 6 r² triangles per layer
        let lateral = 2 * 18 * 3;
        assert_eq!(m.boundary_faces().len(), 2 * n_tri + lateral);
    }
}
