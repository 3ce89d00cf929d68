//! First-order Lagrange finite elements on tetrahedra.
//!
//! Scalar operators (stiffness, consistent mass, lumped mass) are assembled
//! once and applied componentwise to vector fields. All element integrals are
//! closed-form, so no quadrature is involved.

use std::ops::{Index, IndexMut};

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;

/// One 3-vector per mesh vertex: an element of the vector-valued P1 space.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodalVectorField(pub Vec<Vector3<f64>>);

impl NodalVectorField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![Vector3::zeros(); n])
    }

    pub fn constant(n: usize, v: Vector3<f64>) -> Self {
        Self(vec![v; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vector3<f64>> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Vector3<f64>] {
        &self.0
    }

    /// `self + s·other`
    pub fn add_scaled(&self, s: f64, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b * s).collect())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|a| a * s).collect())
    }

    /// Plain Euclidean dot product of the nodal coefficient vectors.
    pub fn coeff_dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.dot(b)).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max)
    }

    /// Scalar field of one Cartesian component.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.0.iter().map(|v| v[k]).collect()
    }

    pub fn from_components(c: [&[f64]; 3]) -> Self {
        Self((0..c[0].len()).map(|i| Vector3::new(c[0][i], c[1][i], c[2][i])).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.iter().all(|c| c.is_finite()))
    }
}

impl Index<usize> for NodalVectorField {
    type Output = Vector3<f64>;
    fn index(&self, i: usize) -> &Vector3<f64> {
        &self.0[i]
    }
}

impl IndexMut<usize> for NodalVectorField {
    fn index_mut(&mut self, i: usize) -> &mut Vector3<f64> {
        &mut self.0[i]
    }
}

/// Diagonal of the mass-lumped L² product: `w_z = Σ_{K∋z} |K|/4`.
#[derive(Debug, Clone, PartialEq)]
pub struct LumpedMass(pub Vec<f64>);

impl LumpedMass {
    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `⟨u, v⟩_h = Σ_z w_z u(z)·v(z)`
    pub fn inner(&self, u: &NodalVectorField, v: &NodalVectorField) -> f64 {
        self.0.iter().zip(u.iter().zip(v.iter())).map(|(w, (a, b))| w * a.dot(b)).sum()
    }

    pub fn inner_scalar(&self, u: &[f64], v: &[f64]) -> f64 {
        self.0.iter().zip(u.iter().zip(v)).map(|(w, (a, b))| w * a * b).sum()
    }
}

/// Scalar stiffness matrix `K_ij = ∫ ∇φ_i·∇φ_j`.
pub fn assemble_stiffness(mesh: &Mesh) -> CsrMatrix {
    let n = mesh.n_vertices();
    let mut trip = Vec::with_capacity(16 * mesh.n_elements());
    for (e, el) in mesh.elements().iter().enumerate() {
        let g = mesh.element_geometry(e);
        for a in 0..4 {
            for b in 0..4 {
                trip.push((el[a], el[b], g.volume * g.grads[a].dot(&g.grads[b])));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &trip)
}

/// Consistent scalar mass matrix `M_ij = ∫ φ_i φ_j` (|K|/10 diagonal, |K|/20 off-diagonal per element).
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let n = mesh.n_vertices();
    let mut trip = Vec::with_capacity(16 * mesh.n_elements());
    for (e, el) in mesh.elements().iter().enumerate() {
        let vol = mesh.element_volume(e);
        for a in 0..4 {
            for b in 0..4 {
                let v = if a == b { vol / 10.0 } else { vol / 20.0 };
                trip.push((el[a], el[b], v));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &trip)
}

pub fn assemble_lumped_mass(mesh: &Mesh) -> LumpedMass {
    let mut w = vec![0.0; mesh.n_vertices()];
    for (e, el) in mesh.elements().iter().enumerate() {
        let q = mesh.element_volume(e) / 4.0;
        for &i in el {
            w[i] += q;
        }
    }
    LumpedMass(w)
}

/// `field(z) = f(z)` at every vertex.
pub fn nodal_interpolation<F>(f: F, mesh: &Mesh) -> Result<NodalVectorField>
where
    F: Fn(&Vector3<f64>) -> Vector3<f64>,
{
    let mut out = Vec::with_capacity(mesh.n_vertices());
    for (i, z) in mesh.vertices().iter().enumerate() {
        let v = f(z);
        if !v.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        out.push(v);
    }
    Ok(NodalVectorField(out))
}

/// Gradient-flow / inner-product metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Consistent L² product.
    L2,
    /// Mass-lumped L² product.
    #[serde(rename = "lumped")]
    LumpedL2,
    /// Full H¹ product `⟨u,v⟩ + ⟨∇u,∇v⟩`.
    H1,
}

impl Metric {
    /// Constant `c` with `c⁻¹‖φ‖ ≤ ‖φ‖_metric ≤ c‖φ‖_{H¹}` on the discrete space.
    pub fn equivalence_constant(self) -> f64 {
        match self {
            Metric::L2 | Metric::H1 => 1.0,
            Metric::LumpedL2 => 5f64.sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::L2 => "L2",
            Metric::LumpedL2 => "lumped-L2",
            Metric::H1 => "H1",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Metric::L2),
            "lumped" | "lumped-l2" | "lumpedl2" | "l2h" => Ok(Metric::LumpedL2),
            "h1" => Ok(Metric::H1),
            other => Err(Error::InvalidParameter(format!("unknown metric '{other}'"))),
        }
    }
}

/// Mesh plus the assembled scalar operators.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Mesh,
    stiffness: CsrMatrix,
    mass: CsrMatrix,
    lumped: LumpedMass,
    lumped_matrix: CsrMatrix,
    volume: f64,
}

impl FeSpace {
    pub fn new(mesh: Mesh) -> Self {
        let stiffness = assemble_stiffness(&mesh);
        let mass = assemble_mass(&mesh);
        let lumped = assemble_lumped_mass(&mesh);
        let lumped_matrix = CsrMatrix::from_diagonal(&lumped.0);
        let volume = mesh.total_volume();
        Self { mesh, stiffness, mass, lumped, lumped_matrix, volume }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn n_vertices(&self) -> usize {
        self.mesh.n_vertices()
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn lumped(&self) -> &LumpedMass {
        &self.lumped
    }

    /// The lumped mass as a diagonal sparse matrix.
    pub fn lumped_matrix(&self) -> &CsrMatrix {
        &self.lumped_matrix
    }

    /// |Ω|
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn check(&self, u: &NodalVectorField) -> Result<()> {
        if u.len() != self.n_vertices() {
            return Err(Error::DimensionMismatch { expected: self.n_vertices(), got: u.len() });
        }
        Ok(())
    }

    /// `Σ_ij A_ij u_i·v_j` for a scalar operator `A` applied componentwise.
    pub fn bilinear(a: &CsrMatrix, u: &NodalVectorField, v: &NodalVectorField) -> f64 {
        let mut s = 0.0;
        for i in 0..a.n_rows() {
            let mut row = Vector3::zeros();
            for (j, aij) in a.row(i) {
                row += v[j] * aij;
            }
            s += u[i].dot(&row);
        }
        s
    }

    /// `(A u)_i = Σ_j A_ij u_j`, componentwise.
    pub fn apply(a: &CsrMatrix, u: &NodalVectorField) -> NodalVectorField {
        NodalVectorField(
            (0..a.n_rows())
                .map(|i| a.row(i).fold(Vector3::zeros(), |acc, (j, aij)| acc + u[j] * aij))
                .collect(),
        )
    }

    /// `⟨∇u, ∇v⟩`
    pub fn grad_inner(&self, u: &NodalVectorField, v: &NodalVectorField) -> f64 {
        Self::bilinear(&self.stiffness, u, v)
    }

    /// `⟨u, v⟩` (consistent mass).
    pub fn l2_inner(&self, u: &NodalVectorField, v: &NodalVectorField) -> f64 {
        Self::bilinear(&self.mass, u, v)
    }

    pub fn lumped_inner(&self, u: &NodalVectorField, v: &NodalVectorField) -> f64 {
        self.lumped.inner(u, v)
    }

    pub fn inner(&self, metric: Metric, u: &NodalVectorField, v: &NodalVectorField) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.inner_unchecked(metric, u, v))
    }

    pub(crate) fn inner_unchecked(&self, metric: Metric, u: &NodalVectorField, v: &NodalVectorField) -> f64 {
        match metric {
            Metric::L2 => self.l2_inner(u, v),
            Metric::LumpedL2 => self.lumped_inner(u, v),
            Metric::H1 => self.l2_inner(u, v) + self.grad_inner(u, v),
        }
    }

    /// Scalar operator realizing a metric (`M`, diagonal lumped mass, or `M + K`).
    pub fn metric_matrix(&self, metric: Metric) -> CsrMatrix {
        match metric {
            Metric::L2 => self.mass.clone(),
            Metric::LumpedL2 => self.lumped_matrix.clone(),
            Metric::H1 => {
                let mut trip = Vec::with_capacity(self.mass.nnz() + self.stiffness.nnz());
                for a in [&self.mass, &self.stiffness] {
                    for i in 0..a.n_rows() {
                        trip.extend(a.row(i).map(|(j, v)| (i, j, v)));
                    }
                }
                CsrMatrix::from_triplets(self.n_vertices(), self.n_vertices(), &trip)
            }
        }
    }

    /// `∫_Ω u` for a P1 vector field (exact: uses the lumped weights).
    pub fn integral(&self, u: &NodalVectorField) -> Vector3<f64> {
        self.lumped.0.iter().zip(u.iter()).map(|(w, v)| v * *w).sum()
    }

    /// `|Ω|⁻¹ ∫_Ω u`
    pub fn average(&self, u: &NodalVectorField) -> Vector3<f64> {
        self.integral(u) / self.volume
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_box_mesh;
    use approx::assert_relative_eq;

    fn cube(n: usize) -> Mesh {
        generate_box_mesh(n, n, n, Vector3::zeros(), Vector3::repeat(1.0)).unwrap()
    }

    fn ref_tet() -> Mesh {
        Mesh::new(vec![Vector3::zeros(), Vector3::x(), Vector3::y(), Vector3::z()], vec![[0, 1, 2, 3]]).unwrap()
    }

    #[test]
    fn stiffness_kills_constants_and_is_symmetric() {
        let m = cube(3);
        let k = assemble_stiffness(&m);
        assert!(k.is_symmetric());
        let ones = vec![1.0; m.n_vertices()];
        let scale = k.diagonal().iter().cloned().fold(0.0, f64::max);
        for r in k.mul_vec(&ones) {
            assert!(r.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn linear_field_seminorm_on_kuhn_cube() {
        let m = cube(1);
        let k = assemble_stiffness(&m);
        let x: Vec<f64> = m.vertices().iter().map(|p| p.x).collect();
        let kx = k.mul_vec(&x);
        let s: f64 = x.iter().zip(&kx).map(|(a, b)| a * b).sum();
        assert_relative_eq!(s, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn reference_tet_mass_entries() {
        // oracle: ∫ λ_a λ_b over the unit right tet = (1+δ_ab)·|K|/20, |K| = 1/6
        let mm = assemble_mass(&ref_tet());
        for a in 0..4 {
            for b in 0..4 {
                let expect = if a == b { 1.0 / 60.0 } else { 1.0 / 120.0 };
                assert_relative_eq!(mm.get(a, b), expect, epsilon = 1e-16);
            }
        }
    }

    #[test]
    fn mass_partition_of_unity() {
        let m = cube(2);
        let mm = assemble_mass(&m);
        let total: f64 = mm.values().iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-14);
        let space = FeSpace::new(m);
        let a = NodalVectorField::constant(space.n_vertices(), Vector3::new(1.0, 2.0, 3.0));
        let b = NodalVectorField::constant(space.n_vertices(), Vector3::new(-1.0, 0.5, 2.0));
        assert_relative_eq!(space.l2_inner(&a, &b), 6.0, epsilon = 1e-13);
        assert_relative_eq!(space.lumped_inner(&a, &b), 6.0, epsilon = 1e-13);
    }

    #[test]
    fn lumped_weights_on_kuhn_cube() {
        let m = cube(1);
        let w = assemble_lumped_mass(&m);
        assert_relative_eq!(w.total(), 1.0, epsilon = 1e-15);
        // brute-force incidence count: weight = (#tets containing z)·(1/6)/4
        for (z, wz) in w.0.iter().enumerate() {
            let count = m.elements().iter().filter(|el| el.contains(&z)).count();
            assert_relative_eq!(*wz, count as f64 / 24.0, epsilon = 1e-15);
        }
        assert_relative_eq!(w.0[0], 0.25, epsilon = 1e-15);
        assert_relative_eq!(w.0[7], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn interpolation_is_nodal() {
        let m = cube(2);
        let c = Vector3::new(0.3, -0.2, 0.9);
        let f = nodal_interpolation(|_| c, &m).unwrap();
        assert!(f.iter().all(|v| *v == c));
        let lo = Vector3::repeat(1.0);
        let shifted = generate_box_mesh(2, 2, 2, lo, Vector3::repeat(2.0)).unwrap();
        let u = nodal_interpolation(|x| x / x.norm(), &shifted).unwrap();
        assert!(u.iter().all(|v| (v.norm() - 1.0).abs() < 1e-15));
        assert!(matches!(nodal_interpolation(|_| Vector3::repeat(f64::NAN), &m), Err(Error::NonFinite(0))));
    }

    #[test]
    fn metric_inner_products() {
        let space = FeSpace::new(cube(2));
        let n = space.n_vertices();
        let e = NodalVectorField::constant(n, Vector3::z());
        for metric in [Metric::L2, Metric::LumpedL2, Metric::H1] {
            assert_relative_eq!(space.inner(metric, &e, &e).unwrap(), 1.0, epsilon = 1e-13);
        }
        let short = NodalVectorField::zeros(n - 1);
        assert!(space.inner(Metric::L2, &e, &short).is_err());
        assert!(space.metric_matrix(Metric::H1).is_symmetric());
    }

    #[test]
    fn lumping_exact_when_one_factor_constant() {
        let space = FeSpace::new(cube(3));
        let u = nodal_interpolation(|x| Vector3::new(x.x * x.y, x.z.sin(), 1.0 + x.x), space.mesh()).unwrap();
        let c = NodalVectorField::constant(space.n_vertices(), Vector3::new(0.2, -1.0, 0.7));
        assert_relative_eq!(space.l2_inner(&u, &c), space.lumped_inner(&u, &c), epsilon = 1e-14);
    }
}
