//! Conversion between SI material parameters and the dimensionless model.

use nalgebra::{Matrix3, Vector3};

use crate::energy::MaterialParams;
use crate::error::{Error, Result};
use crate::llg::LLGParams;

/// Vacuum permeability in N/A².
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;

/// Material parameters in SI units. Index 0/1 refers to sublattice 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    /// Saturation magnetizations `M_{s,ℓ}` (A/m).
    pub ms: [f64; 2],
    /// Intralattice exchange stiffness `A_ℓℓ` (J/m).
    pub a_intra: [f64; 2],
    /// Inhomogeneous interlattice exchange `A₁₂` (J/m).
    pub a12: f64,
    /// Homogeneous interlattice exchange `A₀` (J/m).
    pub a0: f64,
    /// Lattice constant `a` (m).
    pub lattice_a: f64,
    /// Uniaxial anisotropy constants (J/m³).
    pub k: [f64; 2],
    pub axis: [Vector3<f64>; 2],
    /// Spiralization tensors (J/m²).
    pub dmi: [Matrix3<f64>; 2],
    /// Applied field (A/m).
    pub h_ext: Vector3<f64>,
    /// Gyromagnetic ratios `γ_ℓ` (m/(A·s)).
    pub gamma: [f64; 2],
    /// Reference gyromagnetic ratio `γ₀` (m/(A·s)).
    pub gamma0: f64,
    pub alpha: [f64; 2],
    /// Reference length `L` (m); defaults to the lattice constant.
    pub length: Option<f64>,
    /// Reference magnetization (A/m); defaults to `max(M_{s,1}, M_{s,2})`.
    pub ms_ref: Option<f64>,
}

impl PhysicalParams {
    /// AFM nanodisk parameters: Ms = 376 kA/m, A = 6.59 pJ/m, A₀ = −6.59 pJ/m,
    /// a = 1 nm, K = 0.15 MJ/m³ along e₃, interfacial DMI with D = 3 mJ/m²,
    /// γ = 2.21·10⁵ m/(A·s), α = 5·10⁻³.
    pub fn afm_disk() -> Self {
        let d = 3e-3;
        let mut dmi = Matrix3::zeros();
        dmi[(0, 1)] = -d;
        dmi[(1, 0)] = d;
        Self {
            ms: [376e3; 2],
            a_intra: [6.59e-12; 2],
            a12: 0.0,
            a0: -6.59e-12,
            lattice_a: 1e-9,
            k: [0.15e6; 2],
            axis: [Vector3::z(); 2],
            dmi: [dmi; 2],
            h_ext: Vector3::zeros(),
            gamma: [2.21e5; 2],
            gamma0: 2.21e5,
            alpha: [5e-3; 2],
            length: None,
            ms_ref: None,
        }
    }

    pub fn reference_ms(&self) -> f64 {
        self.ms_ref.unwrap_or(self.ms[0].max(self.ms[1]))
    }

    pub fn reference_length(&self) -> f64 {
        self.length.unwrap_or(self.lattice_a)
    }

    pub fn scales(&self) -> Scales {
        Scales { ms_ref: self.reference_ms(), length: self.reference_length(), lattice_a: self.lattice_a, gamma0: self.gamma0 }
    }

    fn validate(&self) -> Result<()> {
        let positive = [self.ms[0], self.ms[1], self.reference_ms(), self.reference_length(), self.lattice_a, self.gamma0];
        if !positive.iter().all(|&x| x > 0.0 && x.is_finite()) {
            return Err(Error::InvalidParameter(
                "Ms1, Ms2, Ms_ref, L, lattice_a and gamma0 must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Reference scales of a nondimensionalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub ms_ref: f64,
    pub length: f64,
    pub lattice_a: f64,
    pub gamma0: f64,
}

impl Scales {
    /// `μ₀Ms²` (J/m³).
    pub fn energy_density(&self) -> f64 {
        MU0 * self.ms_ref * self.ms_ref
    }

    /// Seconds per dimensionless time unit, `1/(γ₀Ms)`.
    pub fn time_scale(&self) -> f64 {
        1.0 / (self.gamma0 * self.ms_ref)
    }

    /// Joules per dimensionless energy unit, `μ₀Ms²L³`.
    pub fn energy_scale(&self) -> f64 {
        self.energy_density() * self.length.powi(3)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nondimensionalized {
    pub material: MaterialParams,
    pub llg: LLGParams,
    pub scales: Scales,
}

impl Nondimensionalized {
    pub fn time_scale(&self) -> f64 {
        self.scales.time_scale()
    }
}

pub fn nondimensionalize(p: &PhysicalParams) -> Result<Nondimensionalized> {
    p.validate()?;
    if p.k.iter().any(|&k| k < 0.0) {
        return Err(Error::InvalidParameter("anisotropy constants must be nonnegative".into()));
    }
    let s = p.scales();
    let e = s.energy_density();
    let l2 = s.length * s.length;
    let eta_s = [p.ms[0] / s.ms_ref, p.ms[1] / s.ms_ref];
    let material = MaterialParams {
        a11: 2.0 * p.a_intra[0] / (e * l2),
        a22: 2.0 * p.a_intra[1] / (e * l2),
        a12: p.a12 / (e * l2),
        a0: 4.0 * p.a0 / (e * s.lattice_a * s.lattice_a),
        q: [(2.0 * p.k[0] / e).sqrt(), (2.0 * p.k[1] / e).sqrt()],
        axis: p.axis,
        dmi: [p.dmi[0] / (e * s.length), p.dmi[1] / (e * s.length)],
        h_ext: p.h_ext / s.ms_ref,
        eta_s,
    };
    let material = material.validated()?;
    let llg = LLGParams::new([p.gamma[0] / p.gamma0 / eta_s[0], p.gamma[1] / p.gamma0 / eta_s[1]], p.alpha)?;
    Ok(Nondimensionalized { material, llg, scales: s })
}

/// Inverse of [`nondimensionalize`] for the given scales.
pub fn redimensionalize(material: &MaterialParams, llg: &LLGParams, scales: &Scales) -> PhysicalParams {
    let e = scales.energy_density();
    let l2 = scales.length * scales.length;
    let ms = [material.eta_s[0] * scales.ms_ref, material.eta_s[1] * scales.ms_ref];
    PhysicalParams {
        ms,
        a_intra: [material.a11 * e * l2 / 2.0, material.a22 * e * l2 / 2.0],
        a12: material.a12 * e * l2,
        a0: material.a0 * e * scales.lattice_a * scales.lattice_a / 4.0,
        lattice_a: scales.lattice_a,
        k: [material.q[0].powi(2) * e / 2.0, material.q[1].powi(2) * e / 2.0],
        axis: material.axis,
        dmi: [material.dmi[0] * (e * scales.length), material.dmi[1] * (e * scales.length)],
        h_ext: material.h_ext * scales.ms_ref,
        gamma: [
            llg.eta[0] * material.eta_s[0] * scales.gamma0,
            llg.eta[1] * material.eta_s[1] * scales.gamma0,
        ],
        gamma0: scales.gamma0,
        alpha: llg.alpha,
        length: Some(scales.length),
        ms_ref: Some(scales.ms_ref),
    }
}

/// `ℓ_ex = √(2A/(μ₀Ms²))` in metres.
pub fn exchange_length(a: f64, ms: f64) -> Result<f64> {
    if !(a > 0.0 && ms > 0.0) {
        return Err(Error::InvalidParameter(format!("exchange length needs A > 0 and Ms > 0, got {a}, {ms}")));
    }
    Ok((2.0 * a / (MU0 * ms * ms)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy;
    use crate::fem::{FeSpace, NodalVectorField};
    use crate::fields::SublatticePair;
    use crate::mesh::generate_box_mesh;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn disk_coefficients() {
        let nd = nondimensionalize(&PhysicalParams::afm_disk()).unwrap();
        // plug-in oracle: μ₀Ms² = 4π·10⁻⁷ · 376000²
        let e = 4.0 * std::f64::consts::PI * 1e-7 * 376e3 * 376e3;
        assert_relative_eq!(e, 1.7766e5, max_relative = 1e-4);
        assert_relative_eq!(nd.material.a11, 2.0 * 6.59e-12 / (e * 1e-18), max_relative = 1e-14);
        assert_relative_eq!(nd.material.a11, 74.19, max_relative = 1e-3);
        assert_relative_eq!(nd.material.a22, nd.material.a11);
        assert_relative_eq!(nd.material.a0, -148.4, max_relative = 1e-3);
        assert_eq!(nd.material.a12, 0.0);
        assert_relative_eq!(nd.material.q[0], 1.2995, max_relative = 1e-4);
        assert_relative_eq!(nd.material.dmi[0][(1, 0)], 3e-3 / (e * 1e-9), max_relative = 1e-14);
        assert_relative_eq!(nd.material.dmi[0][(0, 1)], -nd.material.dmi[0][(1, 0)]);
        assert_eq!(nd.material.eta_s, [1.0, 1.0]);
        assert_eq!(nd.llg.eta, [1.0, 1.0]);
        let tau = 2e-15 / nd.time_scale();
        assert_relative_eq!(tau, 1.662e-4, max_relative = 1e-3);
    }

    #[test]
    fn exchange_length_values() {
        assert_relative_eq!(exchange_length(6.59e-12, 376e3).unwrap(), 8.61e-9, max_relative = 1e-2);
        let l = exchange_length(1e-11, 5e5).unwrap();
        assert_relative_eq!(exchange_length(4e-11, 5e5).unwrap(), 2.0 * l, max_relative = 1e-14);
        assert_relative_eq!(exchange_length(1e-11, 1e6).unwrap(), 0.5 * l, max_relative = 1e-14);
        assert!(exchange_length(0.0, 1.0).is_err());
        assert!(exchange_length(1.0, -1.0).is_err());
    }

    #[test]
    fn defaults_and_overrides() {
        let mut p = PhysicalParams::afm_disk();
        p.ms = [300e3, 400e3];
        assert_eq!(p.reference_ms(), 400e3);
        assert_eq!(p.reference_length(), 1e-9);
        p.length = Some(2e-9);
        let nd = nondimensionalize(&p).unwrap();
        assert_relative_eq!(nd.material.eta_s[0], 0.75);
        assert_relative_eq!(nd.llg.eta[0], 1.0 / 0.75);
        p.lattice_a = 0.0;
        assert!(nondimensionalize(&p).is_err());
    }

    #[test]
    fn coefficient_violation_is_reported() {
        let mut p = PhysicalParams::afm_disk();
        p.a12 = 2.0 * 6.59e-12;
        let err = nondimensionalize(&p).unwrap_err();
        assert!(matches!(err, Error::CoefficientCondition(ref m) if m.contains("a11*a22 > a12^2")));
    }

    /// `E_phys = μ₀Ms²L³·E` on constant fields, with the SI side evaluated analytically.
    #[test]
    fn energy_scaling_on_constant_fields() {
        let mut p = PhysicalParams::afm_disk();
        p.ms = [376e3, 300e3];
        p.h_ext = Vector3::new(1e4, -2e4, 5e3);
        p.axis = [Vector3::new(0.0, 0.6, 0.8), Vector3::z()];
        p.length = Some(2e-9);
        let nd = nondimensionalize(&p).unwrap();
        let side = 3.0;
        let space = FeSpace::new(generate_box_mesh(2, 2, 2, Vector3::zeros(), Vector3::repeat(side)).unwrap());
        let (u1, u2) = (Vector3::new(1.0, 2.0, 2.0) / 3.0, Vector3::new(0.0, -0.6, 0.8));
        let n = space.n_vertices();
        let pair = SublatticePair::new(NodalVectorField::constant(n, u1), NodalVectorField::constant(n, u2)).unwrap();
        let e = energy(&space, &pair, &nd.material).unwrap().total;
        let vol = (side * 2e-9_f64).powi(3);
        let si = -4.0 * p.a0 / (p.lattice_a * p.lattice_a) * u1.dot(&u2) * vol
            + p.k[0] * (1.0 - p.axis[0].dot(&u1).powi(2)) * vol
            + p.k[1] * (1.0 - p.axis[1].dot(&u2).powi(2)) * vol
            - MU0 * p.h_ext.dot(&(u1 * p.ms[0] + u2 * p.ms[1])) * vol;
        assert_relative_eq!(e * nd.scales.energy_scale(), si, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn round_trip(
            ms1 in 1e5f64..1e6, ms2 in 1e5f64..1e6, a in 1e-12f64..2e-11, a12f in -0.9f64..0.9,
            a0 in -2e-11f64..2e-11, k in 0.0f64..1e6, d in -5e-3f64..5e-3, h in -1e5f64..1e5,
            g in 1e5f64..3e5, alpha in 1e-3f64..1.0, len in 0.5e-9f64..5e-9
        ) {
            let mut p = PhysicalParams::afm_disk();
            p.ms = [ms1, ms2];
            p.a_intra = [a, 1.3 * a];
            p.a12 = a12f * a;
            p.a0 = a0;
            p.k = [k, 0.5 * k];
            p.dmi[0][(0, 1)] = d;
            p.dmi[1][(2, 0)] = -d;
            p.h_ext = Vector3::new(h, 0.3 * h, -h);
            p.gamma = [g, 1.1 * g];
            p.alpha = [alpha, 0.5 * alpha];
            p.length = Some(len);
            let nd = nondimensionalize(&p).unwrap();
            let back = redimensionalize(&nd.material, &nd.llg, &nd.scales);
            let rel = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
            prop_assert!(rel(back.ms[0], ms1) && rel(back.ms[1], ms2));
            prop_assert!(rel(back.a_intra[0], p.a_intra[0]) && rel(back.a_intra[1], p.a_intra[1]));
            prop_assert!(rel(back.a12, p.a12) || (back.a12 - p.a12).abs() < 1e-30);
            prop_assert!(rel(back.a0, a0) || (back.a0 - a0).abs() < 1e-30);
            prop_assert!(rel(back.k[0], p.k[0]) || p.k[0] == 0.0);
            prop_assert!((back.dmi[0] - p.dmi[0]).norm() <= 1e-12 * p.dmi[0].norm().max(1e-300));
            prop_assert!((back.h_ext - p.h_ext).norm() <= 1e-12 * p.h_ext.norm().max(1e-300));
            prop_assert!(rel(back.gamma[1], p.gamma[1]) && rel(back.alpha[1], p.alpha[1]));
        }
    }
}
