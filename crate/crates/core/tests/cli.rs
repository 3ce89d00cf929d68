//! End-to-end runs of the `afm-fem` binary.

use std::path::Path;
use std::process::{Command, Output};

use afm_fem::io::{read_trace, Manifest};

fn afm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afm-fem")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn summary(dir: &Path) -> toml::Table {
    Manifest::read(&dir.join("manifest.toml")).unwrap().summary.into_iter().collect()
}

const TOY_FILE_CONFIG: &str = r#"
[mesh]
kind = "file"
path = "MESH"

[material]
a11 = 2.0
a22 = 1.0
a12 = -0.5
a0 = -100.0
q = [5.0, 10.0]
axis = [[0.5773502691896258, 0.5773502691896258, 0.5773502691896258], [0.5773502691896258, 0.5773502691896258, 0.5773502691896258]]

[initial]
kind = "constant"
m1 = [1.0, 0.0, 0.0]
m2 = [0.0, 1.0, 0.0]

[algorithm]
preset = "coupled"
metric = "lumped"
tau = 1e-3
eps = 1e-4
"#;

#[test]
fn generated_mesh_feeds_a_minimize_run() {
    let dir = tempfile::tempdir().unwrap();
    let msh = dir.path().join("cube.msh");
    let tet = dir.path().join("cube.tetmesh");
    let out = afm(&["mesh", "generate", "--shape", "box", "--n", "4", "4", "4", "--output", msh.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(code(&afm(&["mesh", "convert", "--input", msh.to_str().unwrap(), "--output", tet.to_str().unwrap()])), 0);
    let stats = afm(&["mesh", "stats", "--input", tet.to_str().unwrap()]);
    assert_eq!(code(&stats), 0);
    let text = String::from_utf8_lossy(&stats.stdout);
    assert!(text.contains("125") && text.contains("384"), "{text}");

    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, TOY_FILE_CONFIG.replace("MESH", tet.to_str().unwrap())).unwrap();
    let run_dir = dir.path().join("run");
    let out = afm(&["minimize", "--config", cfg.to_str().unwrap(), "--out", run_dir.to_str().unwrap(), "--snapshot-every", "50"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["config.toml", "manifest.toml", "trace.csv", "final.vtk", "final_projected.vtk", "snapshot_0000000.vtk", "snapshot_0000050.vtk"] {
        assert!(run_dir.join(f).exists(), "missing {f}");
    }
    let s = summary(&run_dir);
    assert_eq!(s["converged"].as_bool(), Some(true));
    assert!((s["projected_energy"].as_float().unwrap() + 100.0).abs() < 1e-6);
    let rows = read_trace(&run_dir.join("trace.csv")).unwrap();
    assert_eq!(rows.len() as i64, s["iterations"].as_integer().unwrap());
}

#[test]
fn evolve_restarts_from_a_minimize_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let relax = dir.path().join("relax");
    let out = afm(&["minimize", "--experiment", "toy-cube", "--max-steps", "20", "--out", relax.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let e_relax = summary(&relax)["energy"].as_float().unwrap();

    let dyn_dir = dir.path().join("dyn");
    let init = relax.join("final.vtk");
    let out = afm(&[
        "evolve",
        "--experiment",
        "toy-cube",
        "--initial",
        init.to_str().unwrap(),
        "--t-final",
        "0.005",
        "--alpha",
        "0.5",
        "--out",
        dyn_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&dyn_dir);
    assert_eq!(s["steps"].as_integer(), Some(5));
    assert_eq!(s["initial_energy"].as_float(), Some(e_relax));
    assert_eq!(s["weak_energy_pass"].as_bool(), Some(true));
    assert_eq!(read_trace(&dyn_dir.join("trace.csv")).unwrap().len(), 5);
}

#[test]
fn exit_status_classes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("o");
    let o = out_dir.to_str().unwrap();

    assert_eq!(code(&afm(&["minimize", "--experiment", "no-such-thing", "--out", o])), 1);
    assert_eq!(code(&afm(&["minimize", "--experiment", "toy-cube", "--tau", "-1", "--out", o])), 1);

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[mesh]\nkind = \"box\"\nn = [2, 2, 2]\nlo = [0, 0, 0]\nhi = [1, 1, 1]\nextra = 1\n").unwrap();
    assert_eq!(code(&afm(&["minimize", "--config", cfg.to_str().unwrap(), "--out", o])), 1);

    let starved = dir.path().join("starved.toml");
    let text = TOY_FILE_CONFIG
        .replace("kind = \"file\"\npath = \"MESH\"", "kind = \"box\"\nn = [3, 3, 3]\nlo = [0.0, 0.0, 0.0]\nhi = [1.0, 1.0, 1.0]")
        + "\n[algorithm.solver]\ntol = 1e-14\nmax_iter = 1\nrestart = 1\n";
    std::fs::write(&starved, text).unwrap();
    assert_eq!(code(&afm(&["minimize", "--config", starved.to_str().unwrap(), "--out", dir.path().join("s").to_str().unwrap()])), 2);

    let v = afm(&["verify", "--suite", "constraint-recursion"]);
    assert_eq!(code(&v), 0);
    assert!(String::from_utf8_lossy(&v.stdout).contains("all checks passed"));
}

#[test]
fn nondim_prints_exchange_length() {
    let out = afm(&["nondim", "--builtin"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("8.61"), "{text}");
}
