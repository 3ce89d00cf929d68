//! Drives the extension module through an embedded interpreter.

use std::ffi::CStr;
use std::sync::Once;

use afm_fem_py::afm_fem_module;
use pyo3::prelude::*;

fn run(code: &CStr) {
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        pyo3::append_to_inittab!(afm_fem_module);
        Python::initialize();
    });
    Python::attach(|py| {
        if let Err(e) = py.run(code, None, None) {
            e.print(py);
            panic!("python error: {e}");
        }
    });
}

#[test]
fn toy_problem_from_python() {
    run(c"
import afm_fem
mesh = afm_fem.Mesh.box([4, 4, 4])
assert mesh.n_vertices == 125 and mesh.n_elements == 384
mat = afm_fem.Material.toy()
s = afm_fem.State.constant(mesh, [1, 0, 0], [0, 1, 0])
e0 = afm_fem.energy(mesh, s, mat)['total']
assert abs(e0 - 125 / 3) < 1e-10, e0
r = afm_fem.minimize(mesh, s, mat, preset='decoupled', tau=1e-3, eps=1e-4)
assert r['converged']
e = afm_fem.energy(mesh, r['state'].projected(), mat)['total']
assert abs(e + 100) < 1e-6, e
");
}

#[test]
fn errors_map_to_python_exceptions() {
    run(c"
import afm_fem
try:
    afm_fem.Mesh.box([0, 1, 1])
except ValueError:
    pass
else:
    raise AssertionError('empty box accepted')
mesh = afm_fem.Mesh.box([2, 2, 2])
try:
    afm_fem.minimize(mesh, afm_fem.State.random(mesh, 0), afm_fem.Material.toy(), preset='bogus')
except ValueError:
    pass
else:
    raise AssertionError('unknown preset accepted')
");
}

#[test]
fn nondimensional_disk_parameters() {
    run(c"
import afm_fem
d = afm_fem.nondim_afm_disk()
assert abs(d['l_ex_nm'] - 8.61) / 8.61 < 0.01, d
");
}
