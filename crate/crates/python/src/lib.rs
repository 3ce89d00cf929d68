//! Python module `afm_fem`.

use std::path::PathBuf;

use afm_fem::energy::{energy as total_energy, EnergyBreakdown, MaterialParams};
use afm_fem::fem::{FeSpace, Metric};
use afm_fem::fields::{constraint_report, make_initial, InitialState, SublatticePair};
use afm_fem::flow::{minimize as run_minimize, FlowConfig, Termination, ThetaScheme};
use afm_fem::io::write_vtk;
use afm_fem::llg::{evolve as run_evolve, FieldSchedule, LLGParams, LlgOptions};
use afm_fem::mesh::{generate_box_mesh, generate_disk_mesh, import_mesh, MeshFormat};
use afm_fem::nondim::{exchange_length, nondimensionalize, PhysicalParams};
use afm_fem::Error;
use nalgebra::Vector3;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) | Error::SolverNonConvergence { .. } | Error::NonFinite(_) | Error::ZeroVector(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn v3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::from(a)
}

/// Tetrahedral mesh with its assembled P1 operators.
#[pyclass(name = "Mesh", module = "afm_fem", frozen)]
pub struct PyMesh {
    space: FeSpace,
}

#[pymethods]
impl PyMesh {
    /// Kuhn-subdivided box with `n` cells per axis.
    #[staticmethod]
    #[pyo3(signature = (n, lo = [-0.5; 3], hi = [0.5; 3]))]
    fn r#box(n: [usize; 3], lo: [f64; 3], hi: [f64; 3]) -> PyResult<Self> {
        let mesh = generate_box_mesh(n[0], n[1], n[2], v3(lo), v3(hi)).map_err(to_py)?;
        Ok(Self { space: FeSpace::new(mesh) })
    }

    #[staticmethod]
    fn disk(radius: f64, thickness: f64, n_radial: usize, n_layers: usize) -> PyResult<Self> {
        let mesh = generate_disk_mesh(radius, thickness, n_radial, n_layers).map_err(to_py)?;
        Ok(Self { space: FeSpace::new(mesh) })
    }

    /// Reads a Gmsh 2.2 ASCII (`.msh`) or TETMESH file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let (mesh, _) = import_mesh(&path, MeshFormat::from_path(&path)).map_err(to_py)?;
        Ok(Self { space: FeSpace::new(mesh) })
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.space.n_vertices()
    }

    #[getter]
    fn n_elements(&self) -> usize {
        self.space.mesh().n_elements()
    }

    #[getter]
    fn volume(&self) -> f64 {
        self.space.volume()
    }

    #[getter]
    fn h_max(&self) -> f64 {
        self.space.mesh().h_max()
    }

    fn vertices(&self) -> Vec<[f64; 3]> {
        self.space.mesh().vertices().iter().map(|p| [p.x, p.y, p.z]).collect()
    }

    fn elements(&self) -> Vec<[usize; 4]> {
        self.space.mesh().elements().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Mesh(n_vertices={}, n_elements={})", self.n_vertices(), self.n_elements())
    }
}

/// Dimensionless material coefficients.
#[pyclass(name = "Material", module = "afm_fem", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyMaterial {
    params: MaterialParams,
}

#[pymethods]
impl PyMaterial {
    #[new]
    #[pyo3(signature = (a11, a22, a12, a0, q = [0.0, 0.0], axis = [[0.0, 0.0, 1.0]; 2], h_ext = [0.0; 3], eta_s = [1.0, 1.0]))]
    fn new(a11: f64, a22: f64, a12: f64, a0: f64, q: [f64; 2], axis: [[f64; 3]; 2], h_ext: [f64; 3], eta_s: [f64; 2]) -> PyResult<Self> {
        let mut p = MaterialParams::exchange(a11, a22, a12, a0)
            .and_then(|p| p.with_anisotropy(q, axis.map(v3)))
            .map_err(to_py)?
            .with_field(v3(h_ext));
        p.eta_s = eta_s;
        Ok(Self { params: p.validated().map_err(to_py)? })
    }

    /// Exchange toy problem on the unit cube (minimum energy −100).
    #[staticmethod]
    fn toy() -> Self {
        Self { params: MaterialParams::toy_problem() }
    }

    /// AFM nanodisk parameters converted from SI units.
    #[staticmethod]
    fn afm_disk() -> PyResult<Self> {
        Ok(Self { params: nondimensionalize(&PhysicalParams::afm_disk()).map_err(to_py)?.material })
    }

    #[getter]
    fn coefficients(&self) -> (f64, f64, f64, f64) {
        (self.params.a11, self.params.a22, self.params.a12, self.params.a0)
    }

    fn __repr__(&self) -> String {
        let p = &self.params;
        format!("Material(a11={}, a22={}, a12={}, a0={}, q={:?})", p.a11, p.a22, p.a12, p.a0, p.q)
    }
}

/// Pair of nodal magnetization fields `(m1, m2)`.
#[pyclass(name = "State", module = "afm_fem", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyState {
    pair: SublatticePair,
}

fn vecs(f: &afm_fem::fem::NodalVectorField) -> Vec<[f64; 3]> {
    f.iter().map(|v| [v.x, v.y, v.z]).collect()
}

#[pymethods]
impl PyState {
    #[staticmethod]
    fn constant(mesh: &PyMesh, m1: [f64; 3], m2: [f64; 3]) -> PyResult<Self> {
        let kind = InitialState::Constant { m1: v3(m1), m2: v3(m2) };
        Ok(Self { pair: make_initial(&kind, mesh.space.mesh()).map_err(to_py)? })
    }

    #[staticmethod]
    fn random(mesh: &PyMesh, seed: u64) -> PyResult<Self> {
        Ok(Self { pair: make_initial(&InitialState::Random { seed }, mesh.space.mesh()).map_err(to_py)? })
    }

    #[staticmethod]
    #[pyo3(signature = (mesh, seed = 0))]
    fn skyrmion(mesh: &PyMesh, seed: u64) -> PyResult<Self> {
        Ok(Self { pair: make_initial(&InitialState::default_skyrmion(seed), mesh.space.mesh()).map_err(to_py)? })
    }

    #[getter]
    fn m1(&self) -> Vec<[f64; 3]> {
        vecs(self.pair.m1())
    }

    #[getter]
    fn m2(&self) -> Vec<[f64; 3]> {
        vecs(self.pair.m2())
    }

    /// Nodal projection onto unit length.
    fn projected(&self) -> Self {
        Self { pair: self.pair.projected() }
    }

    /// `(err_L1, err_Linf)`, each a pair over the sublattices.
    fn constraint_errors(&self, mesh: &PyMesh) -> PyResult<([f64; 2], [f64; 2])> {
        check_len(mesh, &self.pair)?;
        let c = constraint_report(&mesh.space, &self.pair);
        Ok((c.err_l1, c.err_linf))
    }

    fn write_vtk(&self, mesh: &PyMesh, path: PathBuf, material: &PyMaterial) -> PyResult<()> {
        write_vtk(mesh.space.mesh(), &self.pair, material.params.eta_s, &path).map_err(to_py)
    }
}

fn check_len(mesh: &PyMesh, pair: &SublatticePair) -> PyResult<()> {
    if mesh.space.n_vertices() != pair.n_vertices() {
        return Err(PyValueError::new_err(format!(
            "state has {} vertices, mesh has {}",
            pair.n_vertices(),
            mesh.space.n_vertices()
        )));
    }
    Ok(())
}

fn breakdown<'py>(py: Python<'py>, e: &EnergyBreakdown) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("total", e.total)?;
    d.set_item("intra_exchange", e.intra_exchange)?;
    d.set_item("inter_inhomogeneous", e.inter_inhomogeneous)?;
    d.set_item("inter_homogeneous", e.inter_homogeneous)?;
    d.set_item("anisotropy", e.anisotropy)?;
    d.set_item("dmi", e.dmi)?;
    d.set_item("zeeman", e.zeeman)?;
    Ok(d)
}

/// Energy contributions of `state`.
#[pyfunction]
fn energy<'py>(py: Python<'py>, mesh: &PyMesh, state: &PyState, material: &PyMaterial) -> PyResult<Bound<'py, PyDict>> {
    let e = total_energy(&mesh.space, &state.pair, &material.params).map_err(to_py)?;
    breakdown(py, &e)
}

/// Gradient flow to the stopping criterion. `preset` is `coupled`,
/// `decoupled` or `general` (with `theta`).
#[pyfunction]
#[pyo3(signature = (mesh, state, material, preset = "decoupled", metric = "l2", tau = 1e-3, eps = 1e-4, max_steps = 100_000, theta = None))]
#[allow(clippy::too_many_arguments)]
fn minimize<'py>(
    py: Python<'py>,
    mesh: &PyMesh,
    state: &PyState,
    material: &PyMaterial,
    preset: &str,
    metric: &str,
    tau: f64,
    eps: f64,
    max_steps: usize,
    theta: Option<[f64; 3]>,
) -> PyResult<Bound<'py, PyDict>> {
    let scheme = match (preset, theta) {
        ("coupled", None) => ThetaScheme::COUPLED,
        ("decoupled", None) => ThetaScheme::DECOUPLED,
        ("general", Some(t)) => ThetaScheme::new(t[0], t[1], t[2]).map_err(to_py)?,
        _ => return Err(PyValueError::new_err("preset must be coupled, decoupled, or general with theta")),
    };
    let metric: Metric = metric.parse().map_err(to_py)?;
    let mut cfg = FlowConfig::new(scheme, metric, tau, eps);
    cfg.max_steps = max_steps;
    let r = run_minimize(&mesh.space, &state.pair, &material.params, &cfg).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("iterations", r.iterations)?;
    d.set_item("converged", r.termination == Termination::Converged)?;
    d.set_item("energy", r.final_energy.total)?;
    d.set_item("energies", r.trace.iter().map(|s| s.energy_after.total).collect::<Vec<_>>())?;
    d.set_item("state", PyState { pair: r.pair })?;
    Ok(d)
}

/// Tangent plane LLG integration up to `t_final` with a constant field.
#[pyfunction]
#[pyo3(signature = (mesh, state, material, t_final, tau, alpha = 1.0, eta = 1.0, precession = true))]
#[allow(clippy::too_many_arguments)]
fn evolve<'py>(
    py: Python<'py>,
    mesh: &PyMesh,
    state: &PyState,
    material: &PyMaterial,
    t_final: f64,
    tau: f64,
    alpha: f64,
    eta: f64,
    precession: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let llg = LLGParams::uniform(eta, alpha).map_err(to_py)?;
    let schedule = FieldSchedule::constant(material.params.h_ext);
    let opts = LlgOptions { precession, ..LlgOptions::default() };
    let traj = run_evolve(&mesh.space, &state.pair, &material.params, &llg, &schedule, t_final, tau, usize::MAX, &opts)
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("steps", traj.n_steps())?;
    d.set_item("initial_energy", traj.initial_energy.total)?;
    d.set_item("final_energy", traj.final_energy.total)?;
    d.set_item("energies", traj.trace.iter().map(|s| s.energy_after.total).collect::<Vec<_>>())?;
    d.set_item("state", PyState { pair: traj.final_pair().clone() })?;
    Ok(d)
}

/// Derived quantities of the AFM nanodisk parameter set.
#[pyfunction]
fn nondim_afm_disk<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
    let p = PhysicalParams::afm_disk();
    let nd = nondimensionalize(&p).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("l_ex_nm", exchange_length(p.a_intra[0], p.ms[0]).map_err(to_py)? * 1e9)?;
    d.set_item("a11", nd.material.a11)?;
    d.set_item("a22", nd.material.a22)?;
    d.set_item("a12", nd.material.a12)?;
    d.set_item("a0", nd.material.a0)?;
    d.set_item("q", nd.material.q)?;
    d.set_item("dmi", nd.material.dmi[0][(1, 0)])?;
    d.set_item("time_scale_s", nd.scales.time_scale())?;
    d.set_item("energy_scale_J", nd.scales.energy_scale())?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "afm_fem")]
pub fn afm_fem_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyMaterial>()?;
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(nondim_afm_disk, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
