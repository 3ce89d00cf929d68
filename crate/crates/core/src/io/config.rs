//! Run configuration (TOML).

use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::energy::MaterialParams;
use crate::error::{Error, Result};
use crate::fem::{FeSpace, Metric};
use crate::fields::{make_initial, InitialState, SublatticePair};
use crate::flow::{FlowConfig, StopAggregation, ThetaScheme};
use crate::llg::{FieldSchedule, LLGParams, LlgOptions};
use crate::mesh::{generate_box_mesh, generate_disk_mesh, import_mesh, Mesh, MeshFormat};
use crate::nondim::{nondimensionalize, PhysicalParams, Scales, MU0};
use crate::tangent::SolverOptions;

type Tensor = [[f64; 3]; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshSection,
    /// Dimensionless coefficients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<DimensionlessMaterial>,
    /// SI parameters, converted on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material_si: Option<SiMaterial>,
    pub initial: InitialSection,
    pub algorithm: AlgorithmSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeshSection {
    /// Kuhn-subdivided box `[lo, hi]` with `n` cells per axis.
    Box { n: [usize; 3], lo: [f64; 3], hi: [f64; 3] },
    Disk { radius: f64, thickness: f64, n_radial: usize, n_layers: usize },
    /// Gmsh 2.2 ASCII (`.msh`) or TETMESH text file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionlessMaterial {
    pub a11: f64,
    pub a22: f64,
    pub a12: f64,
    pub a0: f64,
    #[serde(default)]
    pub q: [f64; 2],
    #[serde(default = "default_axes")]
    pub axis: [[f64; 3]; 2],
    /// Full spiralization tensors (row-major).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dmi: Option<[Tensor; 2]>,
    /// Interfacial DMI strengths `D̂_ℓ`, i.e. `D̂(−e₁⊗e₂ + e₂⊗e₁)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dmi_interfacial: Option<[f64; 2]>,
    #[serde(default)]
    pub h_ext: [f64; 3],
    #[serde(default = "ones")]
    pub eta_s: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiMaterial {
    /// A/m
    pub ms: [f64; 2],
    /// J/m
    pub a_intra: [f64; 2],
    pub a12: f64,
    pub a0: f64,
    /// m
    pub lattice_a: f64,
    /// J/m³
    #[serde(default)]
    pub k: [f64; 2],
    #[serde(default = "default_axes")]
    pub axis: [[f64; 3]; 2],
    /// J/m²
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dmi: Option<[Tensor; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dmi_interfacial: Option<[f64; 2]>,
    /// A/m
    #[serde(default)]
    pub h_ext: [f64; 3],
    /// m/(A·s)
    pub gamma: [f64; 2],
    pub gamma0: f64,
    #[serde(default = "ones")]
    pub alpha: [f64; 2],
    /// Reference length override (m); defaults to `lattice_a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    /// Reference magnetization override (A/m); defaults to `max Ms`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ms_ref: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSection {
    Constant {
        m1: [f64; 3],
        m2: [f64; 3],
    },
    Random {
        seed: u64,
    },
    Skyrmion {
        #[serde(default = "one")]
        sign: f64,
        #[serde(default = "ten")]
        r0: f64,
        #[serde(default = "twenty")]
        steepness: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default = "point_three")]
        amplitude: f64,
    },
    /// `m1`/`m2` arrays of a VTK snapshot on the same mesh.
    Vtk {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Coupled,
    Decoupled,
    /// θ-scheme with `theta = [θ₁, θ₂, θ₃]`.
    General,
    /// Tangent plane LLG scheme.
    Llg,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupled" => Ok(Self::Coupled),
            "decoupled" => Ok(Self::Decoupled),
            "general" | "general-theta" => Ok(Self::General),
            "llg" => Ok(Self::Llg),
            other => Err(Error::Config(format!("unknown preset '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Units {
    #[default]
    Dimensionless,
    /// Seconds for times, A/m for field amplitudes.
    Si,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSection {
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<[f64; 3]>,
    #[serde(default = "default_metric")]
    pub metric: Metric,
    pub tau: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub stop_aggregation: StopAggregation,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Final time of an `evolve` run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    /// Units of `tau` and `t_final`.
    #[serde(default)]
    pub time_units: Units,
    /// LLG coefficients; derived from the SI section when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<[f64; 2]>,
    #[serde(default = "yes")]
    pub precession: bool,
    #[serde(default)]
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub direction: [f64; 3],
    /// `[time, amplitude]` pairs, linearly interpolated.
    pub breakpoints: Vec<[f64; 2]>,
    #[serde(default)]
    pub units: Units,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// VTK snapshot every this many steps (0: final state only).
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default = "yes")]
    pub vtk: bool,
    #[serde(default = "yes")]
    pub csv: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir(), snapshot_every: 0, vtk: true, csv: true }
    }
}

fn default_axes() -> [[f64; 3]; 2] {
    [[0.0, 0.0, 1.0]; 2]
}
fn ones() -> [f64; 2] {
    [1.0; 2]
}
fn one() -> f64 {
    1.0
}
fn ten() -> f64 {
    10.0
}
fn twenty() -> f64 {
    20.0
}
fn point_three() -> f64 {
    0.3
}
fn yes() -> bool {
    true
}
fn default_metric() -> Metric {
    Metric::L2
}
fn default_eps() -> f64 {
    1e-4
}
fn default_max_steps() -> usize {
    100_000
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn v3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::from(a)
}

fn m3(t: &Tensor) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| t[i][j])
}

fn interfacial(d: f64) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    m[(0, 1)] = -d;
    m[(1, 0)] = d;
    m
}

fn dmi_tensors(full: &Option<[Tensor; 2]>, interf: &Option<[f64; 2]>) -> Result<[Matrix3<f64>; 2]> {
    match (full, interf) {
        (Some(_), Some(_)) => Err(Error::Config("give either dmi or dmi_interfacial, not both".into())),
        (Some(t), None) => Ok([m3(&t[0]), m3(&t[1])]),
        (None, Some(d)) => Ok([interfacial(d[0]), interfacial(d[1])]),
        (None, None) => Ok([Matrix3::zeros(); 2]),
    }
}

fn tensor(m: &Matrix3<f64>) -> Tensor {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| m[(i, j)]))
}

impl SiMaterial {
    pub fn to_physical(&self) -> Result<PhysicalParams> {
        Ok(PhysicalParams {
            ms: self.ms,
            a_intra: self.a_intra,
            a12: self.a12,
            a0: self.a0,
            lattice_a: self.lattice_a,
            k: self.k,
            axis: self.axis.map(v3),
            dmi: dmi_tensors(&self.dmi, &self.dmi_interfacial)?,
            h_ext: v3(self.h_ext),
            gamma: self.gamma,
            gamma0: self.gamma0,
            alpha: self.alpha,
            length: self.length,
            ms_ref: self.ms_ref,
        })
    }

    pub fn from_physical(p: &PhysicalParams) -> Self {
        Self {
            ms: p.ms,
            a_intra: p.a_intra,
            a12: p.a12,
            a0: p.a0,
            lattice_a: p.lattice_a,
            k: p.k,
            axis: p.axis.map(|a| a.into()),
            dmi: Some([tensor(&p.dmi[0]), tensor(&p.dmi[1])]),
            dmi_interfacial: None,
            h_ext: p.h_ext.into(),
            gamma: p.gamma,
            gamma0: p.gamma0,
            alpha: p.alpha,
            length: p.length,
            ms_ref: p.ms_ref,
        }
    }
}

impl DimensionlessMaterial {
    pub fn to_params(&self) -> Result<MaterialParams> {
        let mut p = MaterialParams::exchange(self.a11, self.a22, self.a12, self.a0)?
            .with_anisotropy(self.q, self.axis.map(v3))?
            .with_dmi(dmi_tensors(&self.dmi, &self.dmi_interfacial)?)?
            .with_field(v3(self.h_ext));
        p.eta_s = self.eta_s;
        p.validated()
    }

    pub fn from_params(p: &MaterialParams) -> Self {
        Self {
            a11: p.a11,
            a22: p.a22,
            a12: p.a12,
            a0: p.a0,
            q: p.q,
            axis: p.axis.map(|a| a.into()),
            dmi: Some([tensor(&p.dmi[0]), tensor(&p.dmi[1])]),
            dmi_interfacial: None,
            h_ext: p.h_ext.into(),
            eta_s: p.eta_s,
        }
    }
}

/// Everything a run needs, resolved from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Problem {
    pub space: FeSpace,
    pub material: MaterialParams,
    pub llg: LLGParams,
    /// Present when the material was given in SI units.
    pub scales: Option<Scales>,
    pub physical: Option<PhysicalParams>,
    pub initial: SublatticePair,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Structural checks that do not need the mesh.
    pub fn check(&self) -> Result<()> {
        match (&self.material, &self.material_si) {
            (Some(_), Some(_)) => return Err(Error::Config("both [material] and [material_si] given".into())),
            (None, None) => return Err(Error::Config("one of [material] or [material_si] is required".into())),
            _ => {}
        }
        let a = &self.algorithm;
        if a.preset == Preset::General && a.theta.is_none() {
            return Err(Error::Config("preset 'general' needs algorithm.theta".into()));
        }
        if a.preset != Preset::General && a.theta.is_some() {
            return Err(Error::Config("algorithm.theta is only used by preset 'general'".into()));
        }
        let si_needed = a.time_units == Units::Si || self.field.as_ref().is_some_and(|f| f.units == Units::Si);
        if si_needed && self.material_si.is_none() {
            return Err(Error::Config("SI time or field units need [material_si]".into()));
        }
        Ok(())
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        match &self.mesh {
            MeshSection::Box { n, lo, hi } => generate_box_mesh(n[0], n[1], n[2], v3(*lo), v3(*hi)),
            MeshSection::Disk { radius, thickness, n_radial, n_layers } => {
                generate_disk_mesh(*radius, *thickness, *n_radial, *n_layers)
            }
            MeshSection::File { path } => {
                let (mesh, report) = import_mesh(path, MeshFormat::from_path(path))?;
                if report.skipped_elements > 0 || report.unreferenced_nodes > 0 {
                    log::info!(
                        "mesh import skipped {} non-tetrahedral elements and {} unused nodes",
                        report.skipped_elements,
                        report.unreferenced_nodes
                    );
                }
                Ok(mesh)
            }
        }
    }

    /// Dimensionless material, LLG coefficients and (for SI input) scales.
    pub fn build_material(&self) -> Result<(MaterialParams, LLGParams, Option<Scales>, Option<PhysicalParams>)> {
        let a = &self.algorithm;
        let (material, mut llg, scales, physical) = match (&self.material, &self.material_si) {
            (Some(m), None) => (m.to_params()?, LLGParams::uniform(1.0, 1.0)?, None, None),
            (None, Some(si)) => {
                let p = si.to_physical()?;
                let nd = nondimensionalize(&p)?;
                (nd.material, nd.llg, Some(nd.scales), Some(p))
            }
            _ => return Err(Error::Config("exactly one material section is required".into())),
        };
        if a.eta.is_some() || a.alpha.is_some() {
            llg = LLGParams::new(a.eta.unwrap_or(llg.eta), a.alpha.unwrap_or(llg.alpha))?;
        }
        Ok((material, llg, scales, physical))
    }

    fn to_dimensionless_time(&self, t: f64, units: Units, scales: Option<&Scales>) -> Result<f64> {
        match units {
            Units::Dimensionless => Ok(t),
            Units::Si => {
                let s = scales.ok_or_else(|| Error::Config("SI units need [material_si]".into()))?;
                Ok(t / s.time_scale())
            }
        }
    }

    pub fn tau(&self, scales: Option<&Scales>) -> Result<f64> {
        self.to_dimensionless_time(self.algorithm.tau, self.algorithm.time_units, scales)
    }

    pub fn t_final(&self, scales: Option<&Scales>) -> Result<f64> {
        let t = self.algorithm.t_final.ok_or_else(|| Error::Config("evolve needs algorithm.t_final".into()))?;
        self.to_dimensionless_time(t, self.algorithm.time_units, scales)
    }

    pub fn flow_config(&self, scales: Option<&Scales>) -> Result<FlowConfig> {
        let a = &self.algorithm;
        let theta = match a.preset {
            Preset::Coupled => ThetaScheme::COUPLED,
            Preset::Decoupled | Preset::Llg => ThetaScheme::DECOUPLED,
            Preset::General => {
                let t = a.theta.ok_or_else(|| Error::Config("preset 'general' needs algorithm.theta".into()))?;
                ThetaScheme::new(t[0], t[1], t[2])?
            }
        };
        let mut cfg = FlowConfig::new(theta, a.metric, self.tau(scales)?, a.eps);
        cfg.stop_aggregation = a.stop_aggregation;
        cfg.max_steps = a.max_steps;
        cfg.solver = a.solver;
        Ok(cfg)
    }

    pub fn llg_options(&self) -> LlgOptions {
        LlgOptions { precession: self.algorithm.precession, solver: self.algorithm.solver }
    }

    /// Applied field schedule; the constant material field when no `[field]` is given.
    pub fn schedule(&self, material: &MaterialParams, scales: Option<&Scales>) -> Result<FieldSchedule> {
        let Some(f) = &self.field else {
            return Ok(FieldSchedule::constant(material.h_ext));
        };
        let amp_scale = match f.units {
            Units::Dimensionless => 1.0,
            Units::Si => 1.0 / scales.ok_or_else(|| Error::Config("SI field units need [material_si]".into()))?.ms_ref,
        };
        let bps = f
            .breakpoints
            .iter()
            .map(|[t, h]| Ok((self.to_dimensionless_time(*t, f.units, scales)?, h * amp_scale)))
            .collect::<Result<Vec<_>>>()?;
        FieldSchedule::new(v3(f.direction), bps)
    }

    pub fn initial_state(&self, mesh: &Mesh) -> Result<SublatticePair> {
        let kind = match &self.initial {
            InitialSection::Constant { m1, m2 } => InitialState::Constant { m1: v3(*m1), m2: v3(*m2) },
            InitialSection::Random { seed } => InitialState::Random { seed: *seed },
            InitialSection::Skyrmion { sign, r0, steepness, seed, amplitude } => InitialState::Skyrmion {
                sign: *sign,
                r0: *r0,
                steepness: *steepness,
                seed: *seed,
                amplitude: *amplitude,
            },
            InitialSection::Vtk { path } => return crate::io::read_vtk_pair(path, mesh),
        };
        make_initial(&kind, mesh)
    }

    pub fn seed(&self) -> Option<u64> {
        match self.initial {
            InitialSection::Random { seed } | InitialSection::Skyrmion { seed, .. } => Some(seed),
            _ => None,
        }
    }

    pub fn build(&self) -> Result<Problem> {
        self.check()?;
        let mesh = self.build_mesh()?;
        let (material, llg, scales, physical) = self.build_material()?;
        let initial = self.initial_state(&mesh)?;
        Ok(Problem { space: FeSpace::new(mesh), material, llg, scales, physical, initial })
    }
}

/// Built-in experiment setups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Unit cube, 8×8×8 Kuhn mesh, toy exchange problem, constant (e₁, e₂) start.
    ToyCube,
    /// 60 nm × 1 nm AFM disk relaxed from a perturbed skyrmion seed.
    SkyrmionRelax,
    /// In-plane field pulse on the disk (40/110/150 ps ramp, 100 mT, 1 ns).
    SkyrmionPulse,
}

impl std::str::FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toy-cube" => Ok(Self::ToyCube),
            "skyrmion-relax" => Ok(Self::SkyrmionRelax),
            "skyrmion-pulse" => Ok(Self::SkyrmionPulse),
            other => Err(Error::Config(format!(
                "unknown experiment '{other}' (toy-cube, skyrmion-relax, skyrmion-pulse)"
            ))),
        }
    }
}

impl Experiment {
    pub fn config(self) -> RunConfig {
        let disk = MeshSection::Disk { radius: 30.0, thickness: 1.0, n_radial: 12, n_layers: 1 };
        let si = SiMaterial::from_physical(&PhysicalParams::afm_disk());
        let algorithm = |preset, metric, tau, eps| AlgorithmSection {
            preset,
            theta: None,
            metric,
            tau,
            eps,
            stop_aggregation: StopAggregation::default(),
            max_steps: default_max_steps(),
            t_final: None,
            time_units: Units::Dimensionless,
            eta: None,
            alpha: None,
            precession: true,
            solver: SolverOptions::default(),
        };
        match self {
            Self::ToyCube => {
                let toy = MaterialParams::toy_problem();
                RunConfig {
                    mesh: MeshSection::Box { n: [8; 3], lo: [-0.5; 3], hi: [0.5; 3] },
                    material: Some(DimensionlessMaterial { dmi: None, ..DimensionlessMaterial::from_params(&toy) }),
                    material_si: None,
                    initial: InitialSection::Constant { m1: [1.0, 0.0, 0.0], m2: [0.0, 1.0, 0.0] },
                    algorithm: algorithm(Preset::Decoupled, Metric::L2, 1e-3, 1e-4),
                    field: None,
                    output: OutputSection::default(),
                }
            }
            Self::SkyrmionRelax => RunConfig {
                mesh: disk,
                material: None,
                material_si: Some(si),
                initial: InitialSection::Skyrmion { sign: 1.0, r0: 10.0, steepness: 20.0, seed: 0, amplitude: 0.3 },
                algorithm: algorithm(Preset::Decoupled, Metric::H1, 1e-3, 1e-3),
                field: None,
                output: OutputSection::default(),
            },
            Self::SkyrmionPulse => {
                let h_max = 0.1 / MU0;
                let mut alg = algorithm(Preset::Llg, Metric::LumpedL2, 5e-16, 1e-4);
                alg.time_units = Units::Si;
                alg.t_final = Some(1e-9);
                RunConfig {
                    mesh: disk,
                    material: None,
                    material_si: Some(si),
                    initial: InitialSection::Skyrmion { sign: 1.0, r0: 10.0, steepness: 20.0, seed: 0, amplitude: 0.3 },
                    algorithm: alg,
                    field: Some(FieldSection {
                        direction: [1.0, 0.0, 0.0],
                        breakpoints: vec![[0.0, 0.0], [40e-12, h_max], [110e-12, h_max], [150e-12, 0.0]],
                        units: Units::Si,
                    }),
                    output: OutputSection { snapshot_every: 20000, ..OutputSection::default() },
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TOY: &str = r#"
[mesh]
kind = "box"
n = [2, 2, 2]
lo = [-0.5, -0.5, -0.5]
hi = [0.5, 0.5, 0.5]

[material]
a11 = 2.0
a22 = 1.0
a12 = -0.5
a0 = -100.0
q = [5.0, 10.0]
axis = [[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]]

[initial]
kind = "constant"
m1 = [1.0, 0.0, 0.0]
m2 = [0.0, 1.0, 0.0]

[algorithm]
preset = "decoupled"
metric = "lumped"
tau = 1e-3
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = RunConfig::from_toml(TOY).unwrap();
        assert_eq!(cfg.algorithm.metric, Metric::LumpedL2);
        assert_eq!(cfg.algorithm.eps, 1e-4);
        let p = cfg.build().unwrap();
        assert_eq!(p.material, MaterialParams::toy_problem());
        assert_eq!(p.space.n_vertices(), 27);
    }

    #[test]
    fn unknown_keys_rejected() {
        for (from, to) in [
            ("tau = 1e-3", "tau = 1e-3\ntua = 1"),
            ("a0 = -100.0", "a0 = -100.0\na00 = 1"),
            ("hi = [0.5, 0.5, 0.5]", "hi = [0.5, 0.5, 0.5]\nh = 1"),
            ("m2 = [0.0, 1.0, 0.0]", "m2 = [0.0, 1.0, 0.0]\nseed = 1"),
        ] {
            let text = TOY.replace(from, to);
            assert!(matches!(RunConfig::from_toml(&text), Err(Error::Config(_))), "accepted: {to}");
        }
        assert!(RunConfig::from_toml(&format!("{TOY}\n[extra]\nx = 1\n")).is_err());
    }

    #[test]
    fn exactly_one_material() {
        let none = TOY.replace("[material]", "[material_unused]");
        assert!(RunConfig::from_toml(&none).is_err());
        let mut both = Experiment::SkyrmionRelax.config();
        both.material = Experiment::ToyCube.config().material;
        assert!(both.check().is_err());
        let mut neither = Experiment::ToyCube.config();
        neither.material = None;
        assert!(matches!(neither.check(), Err(Error::Config(_))));
    }

    #[test]
    fn experiments_round_trip_through_toml() {
        for e in [Experiment::ToyCube, Experiment::SkyrmionRelax, Experiment::SkyrmionPulse] {
            let cfg = e.config();
            let text = cfg.to_toml().unwrap();
            assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg, "{text}");
        }
    }

    #[test]
    fn pulse_schedule_in_dimensionless_units() {
        let cfg = Experiment::SkyrmionPulse.config();
        let (m, _, scales, _) = cfg.build_material().unwrap();
        let s = scales.unwrap();
        let sched = cfg.schedule(&m, Some(&s)).unwrap();
        let h = 0.1 / MU0 / 376e3;
        assert_relative_eq!(sched.amplitude(80e-12 / s.time_scale()), h, max_relative = 1e-12);
        assert_relative_eq!(sched.amplitude(20e-12 / s.time_scale()), h / 2.0, max_relative = 1e-12);
        assert_eq!(sched.amplitude(0.5e-9 / s.time_scale()), 0.0);
        assert_relative_eq!(cfg.tau(Some(&s)).unwrap(), 5e-16 * 2.21e5 * 376e3, max_relative = 1e-12);
    }

    #[test]
    fn general_preset_needs_theta() {
        let text = TOY.replace("\"decoupled\"", "\"general\"");
        assert!(RunConfig::from_toml(&text).is_err());
        let text = text.replace("tau = 1e-3", "tau = 1e-3\ntheta = [1.0, 0.25, 0.75]");
        let cfg = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.flow_config(None).unwrap().theta, ThetaScheme::new(1.0, 0.25, 0.75).unwrap());
    }

    #[test]
    fn si_time_units_need_si_material() {
        let text = TOY.replace("tau = 1e-3", "tau = 1e-3\ntime_units = \"si\"");
        assert!(RunConfig::from_toml(&text).is_err());
    }
}
