//! Sublattice magnetization pairs, unit-length constraint diagnostics, and
//! initial states.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::{FeSpace, NodalVectorField};
use crate::mesh::Mesh;

/// The pair `(m₁, m₂)` of sublattice magnetizations.
#[derive(Debug, Clone, PartialEq)]
pub struct SublatticePair {
    pub m: [NodalVectorField; 2],
}

impl SublatticePair {
    pub fn new(m1: NodalVectorField, m2: NodalVectorField) -> Result<Self> {
        if m1.len() != m2.len() {
            return Err(Error::DimensionMismatch { expected: m1.len(), got: m2.len() });
        }
        Ok(Self { m: [m1, m2] })
    }

    pub fn m1(&self) -> &NodalVectorField {
        &self.m[0]
    }

    pub fn m2(&self) -> &NodalVectorField {
        &self.m[1]
    }

    pub fn n_vertices(&self) -> usize {
        self.m[0].len()
    }

    /// Applies `m_ℓ + τ v_ℓ` to both sublattices.
    pub fn updated(&self, tau: f64, v: &[NodalVectorField; 2]) -> Self {
        Self { m: [self.m[0].add_scaled(tau, &v[0]), self.m[1].add_scaled(tau, &v[1])] }
    }

    /// Nodal projection of both fields.
    pub fn projected(&self) -> Self {
        Self { m: [nodal_projection(&self.m[0]).0, nodal_projection(&self.m[1]).0] }
    }

    /// Total magnetization `η_{s,1} m₁ + η_{s,2} m₂`.
    pub fn total(&self, eta_s: [f64; 2]) -> NodalVectorField {
        self.m[0].scaled(eta_s[0]).add_scaled(eta_s[1], &self.m[1])
    }

    pub fn swapped(&self) -> Self {
        Self { m: [self.m[1].clone(), self.m[0].clone()] }
    }
}

/// Unit-length constraint violation per sublattice.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConstraintReport {
    /// `‖I_h[|m_ℓ|²] − 1‖_{L¹(Ω)}`
    pub err_l1: [f64; 2],
    /// `max_z |m_ℓ(z)| − 1`
    pub err_linf: [f64; 2],
}

impl ConstraintReport {
    pub fn max_l1(&self) -> f64 {
        self.err_l1[0].max(self.err_l1[1])
    }

    pub fn max_linf(&self) -> f64 {
        self.err_linf[0].max(self.err_linf[1])
    }
}

pub fn constraint_report(space: &FeSpace, pair: &SublatticePair) -> ConstraintReport {
    let mut rep = ConstraintReport::default();
    for l in 0..2 {
        let f: Vec<f64> = pair.m[l].iter().map(|v| v.norm_squared() - 1.0).collect();
        rep.err_l1[l] = l1_norm_p1(space, &f);
        rep.err_linf[l] = pair.m[l].iter().map(|v| v.norm()).fold(f64::NEG_INFINITY, f64::max) - 1.0;
    }
    rep
}

/// Exact `‖f‖_{L¹}` of the P1 function with nodal values `f`.
pub fn l1_norm_p1(space: &FeSpace, f: &[f64]) -> f64 {
    if f.iter().all(|&x| x >= 0.0) {
        return space.lumped().inner_scalar(f, &vec![1.0; f.len()]);
    }
    let mesh = space.mesh();
    mesh.elements()
        .iter()
        .enumerate()
        .map(|(e, el)| mesh.element_volume(e) * abs_affine_mean(el.map(|i| f[i])))
        .sum()
}

/// Mean of `|g|` over a tetrahedron for the affine `g` with vertex values `vals`.
///
/// Uses `∫_K φ(g) = 3!·|K|·[g₀,…,g₃]Φ` with `Φ''' = φ`; for `φ(s) = s₊`
/// that is `Φ(s) = s₊⁴/24`, and `|g| = 2g₊ − g`.
pub(crate) fn abs_affine_mean(vals: [f64; 4]) -> f64 {
    let mean = vals.iter().sum::<f64>() / 4.0;
    if vals.iter().all(|&x| x >= 0.0) {
        return mean;
    }
    if vals.iter().all(|&x| x <= 0.0) {
        return -mean;
    }
    let mut x = vals;
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = x[3] - x[0];
    2.0 * 6.0 * divided_difference(&x, scale) - mean
}

fn phi_derivative(s: f64, k: usize) -> f64 {
    let p = s.max(0.0);
    match k {
        0 => p.powi(4) / 24.0,
        1 => p.powi(3) / 6.0,
        2 => p * p / 2.0,
        _ => p,
    }
}

// confluent divided difference of s₊⁴/24 on sorted nodes
fn divided_difference(x: &[f64], scale: f64) -> f64 {
    let n = x.len() - 1;
    let span = x[n] - x[0];
    if span <= 1e-12 * scale {
        let factorial = [1.0, 1.0, 2.0, 6.0][n];
        return phi_derivative(0.5 * (x[0] + x[n]), n) / factorial;
    }
    if n == 0 {
        return phi_derivative(x[0], 0);
    }
    (divided_difference(&x[1..], scale) - divided_difference(&x[..n], scale)) / span
}

/// Normalizes every nodal vector. Vectors shorter than `1e-12` are replaced by
/// `(0,0,1)`; the number of such vertices is returned alongside.
pub fn nodal_projection(field: &NodalVectorField) -> (NodalVectorField, usize) {
    let mut degenerate = 0;
    let out = field
        .iter()
        .map(|v| {
            let n = v.norm();
            if n < 1e-12 {
                degenerate += 1;
                Vector3::z()
            } else {
                v / n
            }
        })
        .collect();
    (NodalVectorField(out), degenerate)
}

/// Initial-state recipes.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Constant { m1: Vector3<f64>, m2: Vector3<f64> },
    /// Independent, isotropically distributed unit vectors at every vertex.
    Random { seed: u64 },
    /// Antiparallel skyrmion-like profile `m₁,₂ = (0,0,±sign·f)` with
    /// `f(ρ) = 1/(1+exp(steepness·(ρ−r0))) − 1/2`, then projection, uniform
    /// perturbation of each component in `[−amplitude, amplitude]`, projection.
    Skyrmion { sign: f64, r0: f64, steepness: f64, seed: u64, amplitude: f64 },
}

impl InitialState {
    /// Skyrmion seed with radius 10, steepness 20, perturbation 0.3.
    pub fn default_skyrmion(seed: u64) -> Self {
        Self::Skyrmion { sign: 1.0, r0: 10.0, steepness: 20.0, seed, amplitude: 0.3 }
    }
}

fn logistic_profile(rho: f64, r0: f64, steepness: f64) -> f64 {
    let t = steepness * (rho - r0);
    let s = if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    };
    s - 0.5
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n2: f64 = v.norm_squared();
        if n2 <= 1.0 && n2 > 1e-6 {
            return v / n2.sqrt();
        }
    }
}

pub fn make_initial(kind: &InitialState, mesh: &Mesh) -> Result<SublatticePair> {
    let n = mesh.n_vertices();
    match kind {
        InitialState::Constant { m1, m2 } => {
            if m1.norm() == 0.0 || m2.norm() == 0.0 {
                return Err(Error::InvalidParameter("constant initial vectors must be nonzero".into()));
            }
            SublatticePair::new(
                NodalVectorField::constant(n, m1.normalize()),
                NodalVectorField::constant(n, m2.normalize()),
            )
        }
        InitialState::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let m1 = NodalVectorField((0..n).map(|_| random_unit(&mut rng)).collect());
            let m2 = NodalVectorField((0..n).map(|_| random_unit(&mut rng)).collect());
            SublatticePair::new(m1, m2)
        }
        InitialState::Skyrmion { sign, r0, steepness, seed, amplitude } => {
            if *amplitude < 0.0 {
                return Err(Error::InvalidParameter("perturbation amplitude must be nonnegative".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut out = Vec::with_capacity(2);
            for s in [*sign, -*sign] {
                let raw = NodalVectorField(
                    mesh.vertices()
                        .iter()
                        .map(|x| {
                            let rho = (x.x * x.x + x.y * x.y).sqrt();
                            Vector3::new(0.0, 0.0, s * logistic_profile(rho, *r0, *steepness))
                        })
                        .collect(),
                );
                let (mut f, _) = nodal_projection(&raw);
                if *amplitude > 0.0 {
                    for v in f.0.iter_mut() {
                        for k in 0..3 {
                            v[k] += rng.gen_range(-*amplitude..=*amplitude);
                        }
                    }
                }
                out.push(nodal_projection(&f).0);
            }
            let m2 = out.pop().unwrap();
            let m1 = out.pop().unwrap();
            SublatticePair::new(m1, m2)
        }
    }
}
