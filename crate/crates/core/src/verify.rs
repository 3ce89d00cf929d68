//! Self-checks of the discrete identities, used by `afm-fem verify` and the
//! acceptance tests.

use std::fmt;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{effective_field_rhs, energy, MaterialParams};
use crate::error::{Error, Result};
use crate::fem::{FeSpace, Metric, NodalVectorField};
use crate::fields::{constraint_report, make_initial, InitialState, SublatticePair};
use crate::flow::{compute_updates, flow_step, minimize, FlowConfig, FlowOperators, ThetaScheme};
use crate::llg::{llg_step, llg_updates, FieldSchedule, LLGParams, LlgOptions};
use crate::mesh::{generate_box_mesh, generate_disk_mesh, Mesh};
use crate::tangent::{build_frames, SolverOptions};

/// One scalar check `value ≤ bound` (or a custom pass flag).
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, pass: value <= bound }
    }

    fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, pass: value >= bound }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {:.6e} (bound {:.6e})", self.name, self.value, self.bound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    EnergyLaws,
    NormEquivalence,
    ConstraintRecursion,
    GammaRecovery,
    LlgEquivalence,
    EffectiveField,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::EnergyLaws,
        Suite::NormEquivalence,
        Suite::ConstraintRecursion,
        Suite::GammaRecovery,
        Suite::LlgEquivalence,
        Suite::EffectiveField,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::EnergyLaws => "energy-laws",
            Suite::NormEquivalence => "norm-equivalence",
            Suite::ConstraintRecursion => "constraint-recursion",
            Suite::GammaRecovery => "gamma-recovery",
            Suite::LlgEquivalence => "llg-equivalence",
            Suite::EffectiveField => "effective-field",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown verify suite '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {}:", self.suite.name())?;
        for c in &self.checks {
            writeln!(f, "  {c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Random samples per check.
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { samples: 200, seed: 0 }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::EnergyLaws => energy_laws(opts.samples, opts.seed)?,
        Suite::NormEquivalence => {
            let mut c = norm_equivalence(5 * opts.samples, opts.seed);
            c.extend(lumping_error_constant([4, 8, 16]));
            c
        }
        Suite::ConstraintRecursion => {
            let mut c = constraint_recursion(8, 100)?;
            c.extend(constraint_order(4, &[1e-3, 5e-4, 2.5e-4], Some(0.1))?.checks);
            c
        }
        Suite::GammaRecovery => gamma_recovery([4, 8, 16])?.checks,
        Suite::LlgEquivalence => vec![llg_equivalence(50, opts.seed)?],
        Suite::EffectiveField => effective_field(opts.samples / 2, 1e-4, opts.seed)?,
    };
    Ok(SuiteReport { suite, checks })
}

pub fn unit_cube(n: usize) -> Mesh {
    generate_box_mesh(n, n, n, Vector3::repeat(-0.5), Vector3::repeat(0.5)).expect("valid cube parameters")
}

fn random_unit_pair(mesh: &Mesh, rng: &mut ChaCha8Rng) -> SublatticePair {
    make_initial(&InitialState::Random { seed: rng.gen() }, mesh).expect("random initial state")
}

/// Toy exchange problem plus DMI and a Zeeman field, so that every term of
/// the energy contributes.
pub fn full_material() -> MaterialParams {
    let mut d1 = Matrix3::zeros();
    d1[(0, 1)] = -0.7;
    d1[(1, 0)] = 0.7;
    d1[(2, 2)] = 0.2;
    let mut d2 = Matrix3::zeros();
    d2[(0, 2)] = 0.4;
    d2[(2, 1)] = -0.3;
    let mut p = MaterialParams::toy_problem()
        .with_dmi([d1, d2])
        .expect("finite DMI")
        .with_field(Vector3::new(0.3, -0.2, 0.5));
    p.eta_s = [0.6, 0.4];
    p
}

fn scaled_law_residual(d: &crate::flow::StepDiagnostics) -> f64 {
    d.energy_law_residual / d.energy_before.total.abs().max(1.0)
}

/// Energy-law residuals of one step of each scheme on `samples` random states.
pub fn energy_laws(samples: usize, seed: u64) -> Result<Vec<Check>> {
    let space = FeSpace::new(unit_cube(3));
    let params = full_material();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let metrics = [Metric::L2, Metric::LumpedL2, Metric::H1];
    let schemes = [
        ("coupled", ThetaScheme::COUPLED),
        ("decoupled", ThetaScheme::DECOUPLED),
        ("general(1,1/4,3/4)", ThetaScheme::new(1.0, 0.25, 0.75)?),
    ];
    let mut worst = [0.0f64; 4];
    let llg = LLGParams::new([1.0, 0.8], [0.5, 1.0])?;
    let schedule = FieldSchedule::constant(params.h_ext);
    for k in 0..samples {
        let pair = random_unit_pair(space.mesh(), &mut rng);
        let tau = 10f64.powf(rng.gen_range(-4.0..-2.0));
        for (j, (_, theta)) in schemes.iter().enumerate() {
            let cfg = FlowConfig::new(*theta, metrics[k % 3], tau, 1e-4);
            let d = flow_step(&space, &pair, &params, &cfg)?.diagnostics;
            worst[j] = worst[j].max(scaled_law_residual(&d));
        }
        let d = llg_step(&space, &pair, &params, &llg, &schedule, 0.0, tau, &LlgOptions::default())?.diagnostics;
        worst[3] = worst[3].max(scaled_law_residual(&d));
    }
    let names = [schemes[0].0, schemes[1].0, schemes[2].0, "llg"];
    Ok((0..4).map(|j| Check::at_most(format!("energy law {}", names[j]), worst[j], 1e-9)).collect())
}

fn random_scalar(n: usize, rng: &mut ChaCha8Rng) -> NodalVectorField {
    NodalVectorField((0..n).map(|_| Vector3::new(rng.gen_range(-1.0..1.0), 0.0, 0.0)).collect())
}

/// `‖φ‖ ≤ ‖φ‖_h ≤ √5‖φ‖` for random P1 fields on three meshes.
pub fn norm_equivalence(samples: usize, seed: u64) -> Vec<Check> {
    let meshes = [
        unit_cube(3),
        generate_box_mesh(4, 3, 2, Vector3::new(0.0, -1.0, 0.0), Vector3::new(2.0, 0.5, 0.3)).expect("box"),
        generate_disk_mesh(1.0, 0.3, 3, 2).expect("disk"),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Both bounds are algebraic, so only rounding may spoil them.
    let slack = 8.0 * f64::EPSILON;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for mesh in meshes {
        let space = FeSpace::new(mesh);
        for _ in 0..samples {
            let phi = random_scalar(space.n_vertices(), &mut rng);
            let ratio = (space.lumped_inner(&phi, &phi) / space.l2_inner(&phi, &phi)).sqrt();
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    vec![
        Check::at_least("min ||phi||_h / ||phi||", lo, 1.0 - slack),
        Check::at_most("max ||phi||_h / ||phi||", hi, 5f64.sqrt() * (1.0 + slack)),
    ]
}

fn smooth_scalar(mesh: &Mesh, f: impl Fn(&Vector3<f64>) -> f64) -> NodalVectorField {
    NodalVectorField(mesh.vertices().iter().map(|p| Vector3::new(f(p), 0.0, 0.0)).collect())
}

/// Fitted constants `C_h = max |⟨φ,ψ⟩ − ⟨φ,ψ⟩_h| / (h²‖∇φ‖‖∇ψ‖)` over a few
/// smooth pairs on uniformly refined cubes.
pub fn lumping_constants(ns: &[usize]) -> Vec<f64> {
    let fs: [fn(&Vector3<f64>) -> f64; 3] = [
        |p| (std::f64::consts::PI * p.x).sin() * (2.0 * p.y).cos() + p.z * p.z,
        |p| (p.x + 2.0 * p.y - p.z).exp(),
        |p| (3.0 * p.z).sin() * p.y + p.x * p.y * p.z,
    ];
    ns.iter()
        .map(|&n| {
            let mesh = unit_cube(n);
            let h = mesh.h_max();
            let space = FeSpace::new(mesh);
            let fields: Vec<_> = fs.iter().map(|f| smooth_scalar(space.mesh(), f)).collect();
            let mut c = 0.0f64;
            for (i, phi) in fields.iter().enumerate() {
                for psi in &fields[i..] {
                    let diff = (space.l2_inner(phi, psi) - space.lumped_inner(phi, psi)).abs();
                    let g = (space.grad_inner(phi, phi) * space.grad_inner(psi, psi)).sqrt();
                    c = c.max(diff / (h * h * g));
                }
            }
            c
        })
        .collect()
}

pub fn lumping_error_constant(ns: [usize; 3]) -> Vec<Check> {
    let c = lumping_constants(&ns);
    let max = c.iter().cloned().fold(0.0, f64::max);
    let min = c.iter().cloned().fold(f64::INFINITY, f64::min);
    vec![Check::at_most(format!("lumping constant spread over n={ns:?} (C={c:.4?})"), (max - min) / max, 0.25)]
}

fn toy_space(n: usize) -> (FeSpace, SublatticePair, MaterialParams) {
    let space = FeSpace::new(unit_cube(n));
    let pair = make_initial(&InitialState::Constant { m1: Vector3::x(), m2: Vector3::y() }, space.mesh())
        .expect("constant initial state");
    (space, pair, MaterialParams::toy_problem())
}

/// Worst nodal defect `| |m^{i+1}|² − |m^i|² − τ²|v^i|² |` over `steps`
/// steps of the toy problem, for the coupled and decoupled schemes.
pub fn constraint_recursion(n: usize, steps: usize) -> Result<Vec<Check>> {
    let (space, init, params) = toy_space(n);
    let mut out = Vec::new();
    for (name, theta) in [("coupled", ThetaScheme::COUPLED), ("decoupled", ThetaScheme::DECOUPLED)] {
        let cfg = FlowConfig::new(theta, Metric::L2, 1e-3, 1e-4);
        let mut pair = init.clone();
        let mut worst = 0.0f64;
        for _ in 0..steps {
            let s = flow_step(&space, &pair, &params, &cfg)?;
            worst = worst.max(s.diagnostics.recursion_defect);
            pair = s.pair;
        }
        out.push(Check::at_most(format!("recursion defect {name}, {steps} steps"), worst, 1e-12));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderStudy {
    pub taus: Vec<f64>,
    /// `max_ℓ err_L1` at the end of each run.
    pub errors: Vec<f64>,
    pub steps: Vec<usize>,
    pub checks: Vec<Check>,
}

/// Decoupled toy runs for several τ. With `horizon = Some(T)` every run is
/// stopped at pseudo-time `T`; otherwise it runs to the stopping criterion.
/// Successive error ratios must lie in `[1.5, 2.5]` when τ is halved.
pub fn constraint_order(n: usize, taus: &[f64], horizon: Option<f64>) -> Result<OrderStudy> {
    let (space, init, params) = toy_space(n);
    let mut errors = Vec::new();
    let mut steps = Vec::new();
    for &tau in taus {
        let mut cfg = FlowConfig::new(ThetaScheme::DECOUPLED, Metric::L2, tau, 1e-4);
        let (pair, k) = match horizon {
            Some(t) => {
                let k = (t / tau).round() as usize;
                let mut pair = init.clone();
                for _ in 0..k {
                    pair = flow_step(&space, &pair, &params, &cfg)?.pair;
                }
                (pair, k)
            }
            None => {
                cfg.max_steps = 1_000_000;
                let r = minimize(&space, &init, &params, &cfg)?;
                (r.pair, r.iterations)
            }
        };
        errors.push(constraint_report(&space, &pair).max_l1());
        steps.push(k);
    }
    let checks = errors
        .windows(2)
        .zip(taus.windows(2))
        .map(|(e, t)| {
            let ratio = e[0] / e[1];
            let name = format!("err_L1 ratio tau {:e} -> {:e}, lower bound 1.5", t[0], t[1]);
            Check { name, value: ratio, bound: 2.5, pass: (1.5..=2.5).contains(&ratio) }
        })
        .collect();
    Ok(OrderStudy { taus: taus.to_vec(), errors, steps, checks })
}

fn sphere(alpha: f64, beta: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    (
        Vector3::new(sa * cb, sa * sb, ca),
        Vector3::new(ca * cb, ca * sb, -sa),
        Vector3::new(-sa * sb, sa * cb, 0.0),
    )
}

/// Smooth unit-length test pair: value and Jacobian columns `∂_j m`.
pub fn smooth_pair_at(p: &Vector3<f64>) -> [(Vector3<f64>, [Vector3<f64>; 3]); 2] {
    use std::f64::consts::PI;
    let (x, y, z) = (p.x, p.y, p.z);
    let a1 = 1.0 + 0.4 * (PI * x).sin() * (PI * y).cos();
    let da1 = Vector3::new(0.4 * PI * (PI * x).cos() * (PI * y).cos(), -0.4 * PI * (PI * x).sin() * (PI * y).sin(), 0.0);
    let b1 = 0.8 * z + 0.5 * x * y;
    let db1 = Vector3::new(0.5 * y, 0.5 * x, 0.8);
    let a2 = PI - a1 + 0.3 * x * z;
    let da2 = -da1 + Vector3::new(0.3 * z, 0.0, 0.3 * x);
    let b2 = b1 + PI + 0.2 * (PI * z).sin();
    let db2 = db1 + Vector3::new(0.0, 0.0, 0.2 * PI * (PI * z).cos());
    let eval = |a: f64, da: Vector3<f64>, b: f64, db: Vector3<f64>| {
        let (m, ma, mb) = sphere(a, b);
        (m, [0, 1, 2].map(|j| ma * da[j] + mb * db[j]))
    };
    [eval(a1, da1, b1, db1), eval(a2, da2, b2, db2)]
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

/// Continuous energy of [`smooth_pair_at`] on `(−½,½)³` by composite
/// 5-point Gauss quadrature on `cells³` subcubes.
pub fn smooth_pair_energy(params: &MaterialParams, cells: usize) -> f64 {
    let h = 1.0 / cells as f64;
    let mut total = 0.0;
    for (i, j, k) in (0..cells).flat_map(|i| (0..cells).flat_map(move |j| (0..cells).map(move |k| (i, j, k)))) {
        let corner = Vector3::new(i as f64, j as f64, k as f64) * h - Vector3::repeat(0.5);
        for (gx, wx) in GAUSS5 {
            for (gy, wy) in GAUSS5 {
                for (gz, wz) in GAUSS5 {
                    let p = corner + Vector3::new(gx + 1.0, gy + 1.0, gz + 1.0) * (0.5 * h);
                    let w = wx * wy * wz * (0.5 * h).powi(3);
                    let [(m1, g1), (m2, g2)] = smooth_pair_at(&p);
                    let grad = |a: &[Vector3<f64>; 3], b: &[Vector3<f64>; 3]| (0..3).map(|j| a[j].dot(&b[j])).sum::<f64>();
                    let mut e = 0.5 * params.a11 * grad(&g1, &g1) + 0.5 * params.a22 * grad(&g2, &g2)
                        + params.a12 * grad(&g1, &g2)
                        - params.a0 * m1.dot(&m2);
                    for (l, m) in [m1, m2].iter().enumerate() {
                        let s = params.axis[l].dot(m);
                        e += 0.5 * params.q[l] * params.q[l] * (1.0 - s * s);
                        e -= params.eta_s[l] * params.h_ext.dot(m);
                    }
                    total += w * e;
                }
            }
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaStudy {
    pub h: Vec<f64>,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
    pub exact: f64,
    pub checks: Vec<Check>,
}

/// Energies of nodal interpolants of a smooth unit-length pair against the
/// continuous energy, on cubes with `ns` cells per axis.
pub fn gamma_recovery(ns: [usize; 3]) -> Result<GammaStudy> {
    let params = MaterialParams::toy_problem().with_field(Vector3::new(0.3, -0.2, 0.1));
    let exact = smooth_pair_energy(&params, 12);
    let mut h = Vec::new();
    let mut errors = Vec::new();
    let mut checks = Vec::new();
    for n in ns {
        let mesh = unit_cube(n);
        h.push(mesh.h_max());
        let (m1, m2): (Vec<_>, Vec<_>) = mesh
            .vertices()
            .iter()
            .map(|p| {
                let [(a, _), (b, _)] = smooth_pair_at(p);
                (a, b)
            })
            .unzip();
        let space = FeSpace::new(mesh);
        let pair = SublatticePair::new(NodalVectorField(m1), NodalVectorField(m2))?;
        let c = constraint_report(&space, &pair);
        checks.push(Check::at_most(format!("interpolant constraint error n={n}"), c.max_linf().max(c.max_l1()), 1e-13));
        errors.push((energy(&space, &pair, &params)?.total - exact).abs());
    }
    let orders: Vec<f64> = (0..2).map(|k| (errors[k] / errors[k + 1]).ln() / (h[k] / h[k + 1]).ln()).collect();
    for (k, o) in orders.iter().enumerate() {
        checks.push(Check::at_least(format!("energy error order n={} -> n={}", ns[k], ns[k + 1]), *o, 1.0));
    }
    Ok(GammaStudy { h, errors, orders, exact, checks })
}

/// With `η = α = 1` and no precession the tangent plane LLG step is the
/// decoupled lumped-L² flow step; compares reduced coordinates for `steps`
/// steps of two independently advanced runs.
pub fn llg_equivalence(steps: usize, seed: u64) -> Result<Check> {
    let space = FeSpace::new(unit_cube(4));
    let params = MaterialParams::toy_problem();
    let init = make_initial(&InitialState::Random { seed }, space.mesh())?;
    let tau = 1e-3;
    let solver = SolverOptions::default();
    let cfg = FlowConfig { solver, ..FlowConfig::new(ThetaScheme::DECOUPLED, Metric::LumpedL2, tau, 1e-4) };
    let ops = FlowOperators::new(&space, Metric::LumpedL2);
    let llg = LLGParams::uniform(1.0, 1.0)?;
    let opts = LlgOptions { precession: false, solver };
    let (mut a, mut b) = (init.clone(), init);
    let mut worst = 0.0f64;
    for _ in 0..steps {
        let (va, _, _) = compute_updates(&ops, &a, &params, &cfg)?;
        let (vb, xb, _, _) = llg_updates(&space, &b, &params, &llg, params.h_ext, tau, &opts)?;
        for l in 0..2 {
            let xa = build_frames(&a.m[l])?.restrict(&va[l]);
            let diff = xa.iter().zip(&xb[l]).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            let norm = xa.iter().map(|p| p * p).sum::<f64>().sqrt();
            worst = worst.max(diff / norm.max(f64::MIN_POSITIVE));
        }
        a = a.updated(tau, &va);
        b = b.updated(tau, &vb);
    }
    Ok(Check::at_most(format!("llg vs decoupled reduced iterates, {steps} steps"), worst, 10.0 * solver.tol))
}

/// Central differences of the energy along random tangent directions against
/// `−⟨effective_field_rhs, w⟩`.
pub fn effective_field(samples: usize, s: f64, seed: u64) -> Result<Vec<Check>> {
    let space = FeSpace::new(unit_cube(3));
    let params = full_material();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let pair = random_unit_pair(space.mesh(), &mut rng);
        for l in 0..2 {
            let m = &pair.m[l];
            let w = NodalVectorField(
                m.iter()
                    .map(|mz| {
                        let r = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
                        r - mz * mz.dot(&r)
                    })
                    .collect(),
            );
            let shifted = |sign: f64| -> Result<f64> {
                let mut p = pair.clone();
                p.m[l] = m.add_scaled(sign * s, &w);
                Ok(energy(&space, &p, &params)?.total)
            };
            let fd = (shifted(1.0)? - shifted(-1.0)?) / (2.0 * s);
            let b = effective_field_rhs(&space, l, &pair, &params)?;
            let predicted = -b.coeff_dot(&w);
            worst = worst.max((fd - predicted).abs() / predicted.abs());
        }
    }
    Ok(vec![Check::at_most(format!("effective field vs central differences ({} directions)", 2 * samples), worst, 1e-5)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_pair_jacobian_matches_differences() {
        let p = Vector3::new(0.1, -0.2, 0.3);
        let d = 1e-6;
        let base = smooth_pair_at(&p);
        for j in 0..3 {
            let e = Vector3::ith(j, d);
            let (fp, fm) = (smooth_pair_at(&(p + e)), smooth_pair_at(&(p - e)));
            for l in 0..2 {
                let fd = (fp[l].0 - fm[l].0) / (2.0 * d);
                assert!((fd - base[l].1[j]).norm() < 1e-8);
                assert!((base[l].0.norm() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn smooth_energy_quadrature_converged() {
        let p = MaterialParams::toy_problem();
        let (a, b) = (smooth_pair_energy(&p, 6), smooth_pair_energy(&p, 12));
        assert!((a - b).abs() < 1e-10 * b.abs());
    }

    #[test]
    fn suite_names_parse() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn small_energy_law_sample() {
        assert!(energy_laws(3, 1).unwrap().iter().all(|c| c.pass));
    }
}
