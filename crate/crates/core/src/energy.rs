//! Dimensionless micromagnetic energy of a two-sublattice magnet, its negative
//! first variation (effective-field right-hand sides), and stationarity
//! residuals.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::fem::{FeSpace, NodalVectorField};
use crate::fields::SublatticePair;
use crate::tangent::build_frames;

/// Dimensionless material and field parameters. Index 0/1 of the per-sublattice
/// arrays refers to sublattice 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    pub a11: f64,
    pub a22: f64,
    pub a12: f64,
    pub a0: f64,
    pub q: [f64; 2],
    pub axis: [Vector3<f64>; 2],
    pub dmi: [Matrix3<f64>; 2],
    pub h_ext: Vector3<f64>,
    pub eta_s: [f64; 2],
}

impl MaterialParams {
    /// Exchange-only parameters; the constructor checks the coefficient
    /// condition `a11 + a22 > 0`, `a11·a22 > a12²`.
    pub fn exchange(a11: f64, a22: f64, a12: f64, a0: f64) -> Result<Self> {
        Self {
            a11,
            a22,
            a12,
            a0,
            q: [0.0; 2],
            axis: [Vector3::z(); 2],
            dmi: [Matrix3::zeros(); 2],
            h_ext: Vector3::zeros(),
            eta_s: [1.0; 2],
        }
        .validated()
    }

    /// Exchange plus uniaxial anisotropy test problem on the unit cube.
    pub fn toy_problem() -> Self {
        let axis = Vector3::repeat(1.0).normalize();
        Self { q: [5.0, 10.0], axis: [axis, axis], ..Self::exchange(2.0, 1.0, -0.5, -100.0).unwrap() }
    }

    pub fn with_anisotropy(mut self, q: [f64; 2], axis: [Vector3<f64>; 2]) -> Result<Self> {
        self.q = q;
        self.axis = axis;
        self.validated()
    }

    pub fn with_dmi(mut self, dmi: [Matrix3<f64>; 2]) -> Result<Self> {
        self.dmi = dmi;
        self.validated()
    }

    pub fn with_field(mut self, h_ext: Vector3<f64>) -> Self {
        self.h_ext = h_ext;
        self
    }

    /// Checks the invariants and normalizes the easy axes.
    pub fn validated(mut self) -> Result<Self> {
        let scalars = [self.a11, self.a22, self.a12, self.a0, self.q[0], self.q[1], self.eta_s[0], self.eta_s[1]];
        if !scalars.iter().all(|x| x.is_finite())
            || !self.h_ext.iter().all(|x| x.is_finite())
            || !self.dmi.iter().all(|d| d.iter().all(|x| x.is_finite()))
        {
            return Err(Error::InvalidParameter("material parameters must be finite".into()));
        }
        if !(self.a11 + self.a22 > 0.0 && self.a11 * self.a22 > self.a12 * self.a12) {
            return Err(Error::CoefficientCondition(format!(
                "need a11 + a22 > 0 and a11*a22 > a12^2, got a11={}, a22={}, a12={}",
                self.a11, self.a22, self.a12
            )));
        }
        if self.q.iter().any(|&q| q < 0.0) {
            return Err(Error::InvalidParameter("anisotropy constants must be nonnegative".into()));
        }
        if self.eta_s.iter().any(|&e| e <= 0.0) {
            return Err(Error::InvalidParameter("saturation ratios eta_s must be positive".into()));
        }
        for a in self.axis.iter_mut() {
            let n = a.norm();
            if !(n > 0.0) {
                return Err(Error::InvalidParameter("easy axis must be nonzero".into()));
            }
            *a /= n;
        }
        Ok(self)
    }

    /// Diagonal exchange coefficient `a_ℓℓ` (ℓ = 0, 1).
    pub fn a_diag(&self, ell: usize) -> f64 {
        [self.a11, self.a22][ell]
    }

    pub fn has_lower_order(&self) -> bool {
        self.q.iter().any(|&q| q != 0.0) || self.dmi.iter().any(|d| d.iter().any(|&x| x != 0.0)) || self.h_ext != Vector3::zeros()
    }

    /// Parameters with the sublattice labels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            a11: self.a22,
            a22: self.a11,
            q: [self.q[1], self.q[0]],
            axis: [self.axis[1], self.axis[0]],
            dmi: [self.dmi[1], self.dmi[0]],
            eta_s: [self.eta_s[1], self.eta_s[0]],
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub intra_exchange: f64,
    pub inter_inhomogeneous: f64,
    pub inter_homogeneous: f64,
    pub anisotropy: f64,
    pub dmi: f64,
    pub zeeman: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn exchange(&self) -> f64 {
        self.intra_exchange + self.inter_inhomogeneous + self.inter_homogeneous
    }
}

fn check_pair(space: &FeSpace, pair: &SublatticePair) -> Result<()> {
    space.check(pair.m1())?;
    space.check(pair.m2())
}

pub fn energy(space: &FeSpace, pair: &SublatticePair, params: &MaterialParams) -> Result<EnergyBreakdown> {
    check_pair(space, pair)?;
    let (m1, m2) = (pair.m1(), pair.m2());
    let k = space.stiffness();
    let intra = 0.5 * (params.a11 * FeSpace::bilinear(k, m1, m1) + params.a22 * FeSpace::bilinear(k, m2, m2));
    let inter_inhom = params.a12 * FeSpace::bilinear(k, m1, m2);
    let inter_hom = -params.a0 * FeSpace::bilinear(space.mass(), m1, m2);
    let mut ani = 0.0;
    let mut dmi = 0.0;
    let mut zee = 0.0;
    for ell in 0..2 {
        let m = &pair.m[ell];
        ani += anisotropy_energy(space, m, params.q[ell], &params.axis[ell]);
        dmi += dmi_energy(space, m, &params.dmi[ell]);
        zee -= params.eta_s[ell] * params.h_ext.dot(&space.integral(m));
    }
    Ok(EnergyBreakdown {
        intra_exchange: intra,
        inter_inhomogeneous: inter_inhom,
        inter_homogeneous: inter_hom,
        anisotropy: ani,
        dmi,
        zeeman: zee,
        total: intra + inter_inhom + inter_hom + ani + dmi + zee,
    })
}

fn axis_projection(m: &NodalVectorField, axis: &Vector3<f64>) -> Vec<f64> {
    m.iter().map(|v| axis.dot(v)).collect()
}

fn scalar_form(a: &crate::sparse::CsrMatrix, s: &[f64]) -> f64 {
    crate::sparse::dot(s, &a.mul_vec(s))
}

/// `(q²/2)∫[1 − (a·m)²]`, exact for P1 `m`.
pub fn anisotropy_energy(space: &FeSpace, m: &NodalVectorField, q: f64, axis: &Vector3<f64>) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    let s = axis_projection(m, axis);
    0.5 * q * q * (space.volume() - scalar_form(space.mass(), &s))
}

/// `∫ D:(∇m × m)`; `∇m` is elementwise constant so the integrand is affine.
pub fn dmi_energy(space: &FeSpace, m: &NodalVectorField, d: &Matrix3<f64>) -> f64 {
    if d.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    let mesh = space.mesh();
    let mut acc = 0.0;
    for (e, el) in mesh.elements().iter().enumerate() {
        let geo = mesh.element_geometry(e);
        let mbar = el.iter().map(|&i| m[i]).sum::<Vector3<f64>>() / 4.0;
        let grad = element_gradient(&geo.grads, el, m);
        let mut s = 0.0;
        for j in 0..3 {
            s += d.column(j).dot(&grad.column(j).cross(&mbar));
        }
        acc += geo.volume * s;
    }
    acc
}

/// `∇m` on one element as the matrix with columns `∂_j m`.
fn element_gradient(grads: &[Vector3<f64>; 4], el: &[usize; 4], m: &NodalVectorField) -> Matrix3<f64> {
    let mut g = Matrix3::zeros();
    for (a, &i) in el.iter().enumerate() {
        g += m[i] * grads[a].transpose();
    }
    g
}

/// Dual vector of the negative first variation of the anisotropy, DMI and
/// Zeeman contributions of sublattice `ell` at `m`.
pub fn lower_order_rhs(space: &FeSpace, ell: usize, m: &NodalVectorField, params: &MaterialParams) -> NodalVectorField {
    let n = space.n_vertices();
    let mut out = NodalVectorField::zeros(n);
    let q = params.q[ell];
    if q != 0.0 {
        let a = params.axis[ell];
        let ms = space.mass().mul_vec(&axis_projection(m, &a));
        for z in 0..n {
            out[z] += a * (q * q * ms[z]);
        }
    }
    let d = &params.dmi[ell];
    if d.iter().any(|&x| x != 0.0) {
        let mesh = space.mesh();
        for (e, el) in mesh.elements().iter().enumerate() {
            let geo = mesh.element_geometry(e);
            let mbar = el.iter().map(|&i| m[i]).sum::<Vector3<f64>>() / 4.0;
            let grad = element_gradient(&geo.grads, el, m);
            let mut tail = Vector3::zeros();
            for j in 0..3 {
                tail += d.column(j).cross(&grad.column(j));
            }
            for (a, &i) in el.iter().enumerate() {
                let dg = d * geo.grads[a];
                out[i] -= (mbar.cross(&dg) + tail * 0.25) * geo.volume;
            }
        }
    }
    if params.h_ext != Vector3::zeros() {
        let h = params.h_ext * params.eta_s[ell];
        for (z, w) in space.lumped().weights().iter().enumerate() {
            out[z] += h * *w;
        }
    }
    out
}

/// Dual vector of `φ ↦ −a_ℓℓ⟨∇m_ℓ,∇φ⟩ − a12⟨∇m_{3−ℓ},∇φ⟩ + a0⟨m_{3−ℓ},φ⟩`.
pub fn exchange_rhs(space: &FeSpace, ell: usize, pair: &SublatticePair, params: &MaterialParams) -> NodalVectorField {
    let (own, other) = (&pair.m[ell], &pair.m[1 - ell]);
    let k = space.stiffness();
    let mut out = FeSpace::apply(k, own).scaled(-params.a_diag(ell));
    if params.a12 != 0.0 {
        out = out.add_scaled(-params.a12, &FeSpace::apply(k, other));
    }
    if params.a0 != 0.0 {
        out = out.add_scaled(params.a0, &FeSpace::apply(space.mass(), other));
    }
    out
}

/// Full negative first variation of the energy with respect to `m_ℓ`.
pub fn effective_field_rhs(
    space: &FeSpace,
    ell: usize,
    pair: &SublatticePair,
    params: &MaterialParams,
) -> Result<NodalVectorField> {
    check_pair(space, pair)?;
    if ell > 1 {
        return Err(Error::InvalidParameter(format!("sublattice index must be 0 or 1, got {ell}")));
    }
    let ex = exchange_rhs(space, ell, pair, params);
    if !params.has_lower_order() {
        return Ok(ex);
    }
    Ok(ex.add_scaled(1.0, &lower_order_rhs(space, ell, &pair.m[ell], params)))
}

/// Quadratic part `Q(v)` of the anisotropy and DMI energies of sublattice
/// `ell`: `E_lo(m + τv) = E_lo(m) + τ·dE_lo(m)[v] + τ²·Q(v)`.
pub fn lower_order_quadratic(space: &FeSpace, ell: usize, v: &NodalVectorField, params: &MaterialParams) -> f64 {
    let mut q2 = 0.0;
    let q = params.q[ell];
    if q != 0.0 {
        q2 -= 0.5 * q * q * scalar_form(space.mass(), &axis_projection(v, &params.axis[ell]));
    }
    q2 + dmi_energy(space, v, &params.dmi[ell])
}

/// Euclidean norm of the tangent-frame coefficients of the effective-field
/// right-hand side, per sublattice.
pub fn stationarity_residual(space: &FeSpace, pair: &SublatticePair, params: &MaterialParams) -> Result<[f64; 2]> {
    let mut out = [0.0; 2];
    for ell in 0..2 {
        let rhs = effective_field_rhs(space, ell, pair, params)?;
        let frames = build_frames(&pair.m[ell])?;
        out[ell] = crate::sparse::norm2(&frames.restrict(&rhs));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_initial, InitialState};
    use crate::mesh::generate_box_mesh;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube(n: usize) -> FeSpace {
        FeSpace::new(generate_box_mesh(n, n, n, Vector3::repeat(-0.5), Vector3::repeat(0.5)).unwrap())
    }

    fn constant_pair(space: &FeSpace, a: Vector3<f64>, b: Vector3<f64>) -> SublatticePair {
        let n = space.n_vertices();
        SublatticePair::new(NodalVectorField::constant(n, a), NodalVectorField::constant(n, b)).unwrap()
    }

    fn random_field(n: usize, rng: &mut ChaCha8Rng) -> NodalVectorField {
        NodalVectorField((0..n).map(|_| Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0))).collect())
    }

    fn full_params() -> MaterialParams {
        let mut d = Matrix3::zeros();
        d[(0, 1)] = -0.7;
        d[(1, 0)] = 0.7;
        d[(2, 2)] = 0.3;
        let mut d2 = Matrix3::zeros();
        d2[(0, 2)] = 0.4;
        d2[(1, 1)] = -0.2;
        MaterialParams::exchange(1.3, 0.8, 0.4, -2.0)
            .unwrap()
            .with_anisotropy([1.5, 0.5], [Vector3::new(0.0, 0.6, 0.8), Vector3::x()])
            .unwrap()
            .with_dmi([d, d2])
            .unwrap()
            .with_field(Vector3::new(0.2, -0.1, 0.3))
    }

    #[test]
    fn toy_minimizer_energy() {
        let s = cube(2);
        let a = Vector3::repeat(1.0).normalize();
        let e = energy(&s, &constant_pair(&s, a, -a), &MaterialParams::toy_problem()).unwrap();
        assert_relative_eq!(e.total, -100.0, epsilon = 1e-10);
        assert!(e.anisotropy.abs() < 1e-12);
    }

    #[test]
    fn toy_initial_energy() {
        let s = cube(2);
        let e = energy(&s, &constant_pair(&s, Vector3::x(), Vector3::y()), &MaterialParams::toy_problem()).unwrap();
        assert_relative_eq!(e.total, 125.0 / 3.0, epsilon = 1e-10);
        assert!(e.exchange().abs() < 1e-12);
    }

    #[test]
    fn homogeneous_only() {
        let s = FeSpace::new(generate_box_mesh(2, 2, 2, Vector3::zeros(), Vector3::repeat(1.0)).unwrap());
        let p = MaterialParams { a0: 1.0, ..MaterialParams::exchange(1.0, 1.0, 0.0, 0.0).unwrap() };
        let e = energy(&s, &constant_pair(&s, Vector3::z(), Vector3::z()), &p).unwrap();
        assert_relative_eq!(e.total, -1.0, epsilon = 1e-13);
    }

    #[test]
    fn coefficient_condition_enforced() {
        assert!(matches!(MaterialParams::exchange(1.0, 1.0, 1.0, 0.0), Err(Error::CoefficientCondition(_))));
        assert!(matches!(MaterialParams::exchange(-1.0, -1.0, 0.0, 0.0), Err(Error::CoefficientCondition(_))));
        assert!(MaterialParams::exchange(1.0, 1.0, 0.99, 0.0).is_ok());
        let bad = MaterialParams::exchange(1.0, 1.0, 0.0, 0.0).unwrap().with_anisotropy([1.0, 1.0], [Vector3::zeros(); 2]);
        assert!(bad.is_err());
    }

    #[test]
    fn breakdown_sums_to_total() {
        let s = cube(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pair = SublatticePair::new(random_field(27, &mut rng), random_field(27, &mut rng)).unwrap();
        let e = energy(&s, &pair, &full_params()).unwrap();
        let sum = e.intra_exchange + e.inter_inhomogeneous + e.inter_homogeneous + e.anisotropy + e.dmi + e.zeeman;
        assert!((sum - e.total).abs() <= 1e-12 * sum.abs().max(1.0));
    }

    #[test]
    fn dmi_of_linear_field() {
        // m = (x, 0, 1): ∂₁m = e₁, so ∇m×m has first column e₁×m = (0,−1,0)
        let s = FeSpace::new(generate_box_mesh(2, 2, 2, Vector3::zeros(), Vector3::new(2.0, 1.0, 1.0)).unwrap());
        let m = NodalVectorField(s.mesh().vertices().iter().map(|x| Vector3::new(x.x, 0.0, 1.0)).collect());
        let mut d = Matrix3::zeros();
        d[(1, 0)] = 1.0;
        assert_relative_eq!(dmi_energy(&s, &m, &d), -2.0, epsilon = 1e-13);
        // interfacial tensor picks up the same entry with the opposite-sign partner
        let mut d2 = Matrix3::zeros();
        d2[(0, 1)] = -3.0;
        d2[(1, 0)] = 3.0;
        assert_relative_eq!(dmi_energy(&s, &m, &d2), -6.0, epsilon = 1e-13);
    }

    /// Independent DMI route: 4-point degree-2 quadrature of the integrand
    /// with per-point interpolation.
    fn dmi_quadrature(space: &FeSpace, m: &NodalVectorField, d: &Matrix3<f64>) -> f64 {
        let (a, b) = (0.5854101966249685, 0.1381966011250105);
        let pts = [[a, b, b, b], [b, a, b, b], [b, b, a, b], [b, b, b, a]];
        let mesh = space.mesh();
        let mut acc = 0.0;
        for (e, el) in mesh.elements().iter().enumerate() {
            let geo = mesh.element_geometry(e);
            let grads: Vec<Vector3<f64>> = (0..3)
                .map(|j| el.iter().enumerate().map(|(k, &i)| m[i] * geo.grads[k][j]).sum())
                .collect();
            for lam in pts {
                let mx: Vector3<f64> = el.iter().zip(lam).map(|(&i, l)| m[i] * l).sum();
                let mut v = 0.0;
                for j in 0..3 {
                    for r in 0..3 {
                        v += d[(r, j)] * grads[j].cross(&mx)[r];
                    }
                }
                acc += geo.volume * 0.25 * v;
            }
        }
        acc
    }

    #[test]
    fn dmi_matches_quadrature() {
        let s = cube(3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_field(s.n_vertices(), &mut rng);
        let d = full_params().dmi[0];
        assert_relative_eq!(dmi_energy(&s, &m, &d), dmi_quadrature(&s, &m, &d), max_relative = 1e-12);
    }

    #[test]
    fn anisotropy_matches_quadrature() {
        let s = cube(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_field(s.n_vertices(), &mut rng);
        let axis = Vector3::new(0.0, 0.6, 0.8);
        let (a, b) = (0.5854101966249685, 0.1381966011250105);
        let mesh = s.mesh();
        let mut q = 0.0;
        for (e, el) in mesh.elements().iter().enumerate() {
            for p in [[a, b, b, b], [b, a, b, b], [b, b, a, b], [b, b, b, a]] {
                let mx: Vector3<f64> = el.iter().zip(p).map(|(&i, l)| m[i] * l).sum();
                q += mesh.element_volume(e) * 0.25 * (1.0 - axis.dot(&mx).powi(2));
            }
        }
        assert_relative_eq!(anisotropy_energy(&s, &m, 2.0, &axis), 2.0 * q, max_relative = 1e-12);
    }

    #[test]
    fn rhs_is_central_difference_of_energy() {
        let s = cube(2);
        let n = s.n_vertices();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pair = SublatticePair::new(random_field(n, &mut rng), random_field(n, &mut rng)).unwrap();
        let params = full_params();
        for ell in 0..2 {
            let rhs = effective_field_rhs(&s, ell, &pair, &params).unwrap();
            let phi = random_field(n, &mut rng);
            let exact = -rhs.coeff_dot(&phi);
            let mut errs = Vec::new();
            for h in [1e-3, 1e-4] {
                let mut plus = pair.clone();
                plus.m[ell] = pair.m[ell].add_scaled(h, &phi);
                let mut minus = pair.clone();
                minus.m[ell] = pair.m[ell].add_scaled(-h, &phi);
                let fd = (energy(&s, &plus, &params).unwrap().total - energy(&s, &minus, &params).unwrap().total) / (2.0 * h);
                errs.push((fd - exact).abs());
            }
            // the energy is quadratic, so central differences are exact up to rounding
            assert!(errs.iter().all(|&e| e < 1e-6 * exact.abs().max(1.0)), "{errs:?}");
        }
    }

    #[test]
    fn lower_order_quadratic_expansion() {
        let s = cube(2);
        let n = s.n_vertices();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_field(n, &mut rng);
        let v = random_field(n, &mut rng);
        let params = full_params();
        let tau = 0.37;
        for ell in 0..2 {
            let lo = |f: &NodalVectorField| {
                anisotropy_energy(&s, f, params.q[ell], &params.axis[ell]) + dmi_energy(&s, f, &params.dmi[ell])
                    - params.eta_s[ell] * params.h_ext.dot(&s.integral(f))
            };
            let lhs = lo(&m.add_scaled(tau, &v)) - lo(&m);
            let rhs = -tau * lower_order_rhs(&s, ell, &m, &params).coeff_dot(&v)
                + tau * tau * lower_order_quadratic(&s, ell, &v, &params);
            assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn harmonic_map_specialization() {
        let s = cube(2);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = s.n_vertices();
        let pair = SublatticePair::new(random_field(n, &mut rng), random_field(n, &mut rng)).unwrap();
        let p = MaterialParams::exchange(1.7, 1.0, 0.0, 0.0).unwrap();
        let rhs = effective_field_rhs(&s, 0, &pair, &p).unwrap();
        let expect = FeSpace::apply(s.stiffness(), pair.m1()).scaled(-1.7);
        assert!(rhs.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn parallel_constant_pair_is_stationary() {
        let s = cube(2);
        let a = Vector3::new(1.0, -2.0, 0.5).normalize();
        let p = MaterialParams::exchange(2.0, 1.0, -0.5, -100.0).unwrap();
        let r = stationarity_residual(&s, &constant_pair(&s, a, a), &p).unwrap();
        assert!(r[0] < 1e-12 && r[1] < 1e-12);
    }

    #[test]
    fn toy_minimizer_is_stationary_and_random_is_not() {
        let s = cube(2);
        let a = Vector3::repeat(1.0).normalize();
        let p = MaterialParams::toy_problem();
        let r = stationarity_residual(&s, &constant_pair(&s, a, -a), &p).unwrap();
        assert!(r[0] <= 1e-10 && r[1] <= 1e-10);
        let rand = make_initial(&InitialState::Random { seed: 3 }, s.mesh()).unwrap();
        let r = stationarity_residual(&s, &rand, &p).unwrap();
        assert!(r[0] > 0.0 && r[1] > 0.0);
    }

    #[test]
    fn relabeling_symmetry() {
        let s = cube(2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = s.n_vertices();
        let pair = SublatticePair::new(random_field(n, &mut rng), random_field(n, &mut rng)).unwrap();
        let p = full_params();
        let e = energy(&s, &pair, &p).unwrap().total;
        let f = energy(&s, &pair.swapped(), &p.swapped()).unwrap().total;
        assert_relative_eq!(e, f, max_relative = 1e-13);
    }

    #[test]
    fn mesh_mismatch_rejected() {
        let s = cube(2);
        let t = cube(1);
        let pair = constant_pair(&t, Vector3::x(), Vector3::y());
        assert!(energy(&s, &pair, &MaterialParams::toy_problem()).is_err());
    }

    proptest! {
        #[test]
        fn exchange_energy_lower_bound(seed in 0u64..500, a12 in -0.9f64..0.9, a0 in -50.0f64..50.0) {
            let s = cube(2);
            let pair = make_initial(&InitialState::Random { seed }, s.mesh()).unwrap();
            let p = MaterialParams::exchange(1.0, 1.0, a12, a0).unwrap();
            let e = energy(&s, &pair, &p).unwrap().total;
            prop_assert!(e >= -a0.abs() * s.volume() - 1e-10);
        }

        #[test]
        fn gradient_form_positive_definite(
            a11 in 0.1f64..5.0, a22 in 0.1f64..5.0, t in -0.99f64..0.99,
            g in proptest::collection::vec(-1.0f64..1.0, 18)
        ) {
            let a12 = t * (a11 * a22).sqrt();
            let g1 = Matrix3::from_column_slice(&g[..9]);
            let g2 = Matrix3::from_column_slice(&g[9..]);
            prop_assume!(g1.norm() + g2.norm() > 1e-3);
            let form = 0.5 * a11 * g1.norm_squared() + 0.5 * a22 * g2.norm_squared() + a12 * g1.dot(&g2);
            prop_assert!(form > 0.0);
        }
    }
}
