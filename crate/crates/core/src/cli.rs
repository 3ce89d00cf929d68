//! Command-line front end of the `afm-fem` binary.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::energy::energy;
use crate::error::{Error, Result};
use crate::fem::Metric;
use crate::fields::{constraint_report, SublatticePair};
use crate::flow::{minimize_with, StepDiagnostics, Termination};
use crate::io::config::{InitialSection, Preset};
use crate::io::{DerivedParams, Experiment, Manifest, Problem, RunConfig, TraceRow, TraceWriter, Versions};
use crate::llg::{evolve_with, llg_minimize_with, weak_energy_check};
use crate::mesh::{export_msh2, export_tetmesh, generate_box_mesh, generate_disk_mesh, import_mesh, Mesh, MeshFormat};
use crate::nondim::{exchange_length, nondimensionalize, PhysicalParams};
use crate::verify::{run_suite, Suite, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "afm-fem", version, about = "Finite element energy minimization and LLG dynamics for two-sublattice antiferromagnets")]
pub struct Cli {
    /// Log progress at info level (RUST_LOG overrides).
    #[arg(long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a discrete gradient flow (or LLG-based relaxation) to a stationary state.
    Minimize(RunArgs),
    /// Integrate the LLG system up to a final time.
    Evolve {
        #[command(flatten)]
        run: RunArgs,
        /// Final time, in the config's time units.
        #[arg(long)]
        t_final: Option<f64>,
        /// Uniform Gilbert damping for both sublattices.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Generate, convert or inspect meshes.
    #[command(subcommand)]
    Mesh(MeshCommand),
    /// Print the dimensionless parameters derived from SI input.
    Nondim {
        /// Use the built-in AFM nanodisk parameters.
        #[arg(long, conflicts_with = "config")]
        builtin: bool,
        /// Config file with a [material_si] section.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run invariant suites; exit status 3 if any check fails.
    Verify {
        /// Suite(s) to run; all when omitted.
        #[arg(long, value_parser = parse_suite)]
        suite: Vec<Suite>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args, Default, Clone)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "experiment", required_unless_present = "experiment")]
    pub config: Option<PathBuf>,
    /// Built-in setup: toy-cube, skyrmion-relax, skyrmion-pulse.
    #[arg(long)]
    pub experiment: Option<String>,
    /// coupled, decoupled, general or llg.
    #[arg(long)]
    pub preset: Option<String>,
    /// θ₁,θ₂,θ₃ for the general preset.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub theta: Option<Vec<f64>>,
    /// l2, lumped or h1.
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Seed of a random or skyrmion initial state.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Start from the m1/m2 arrays of a VTK snapshot.
    #[arg(long)]
    pub initial: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a VTK snapshot every this many steps (0: final only).
    #[arg(long)]
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Box,
    Disk,
}

#[derive(Debug, Subcommand)]
pub enum MeshCommand {
    /// Write a generated mesh (.msh: Gmsh 2.2 ASCII, otherwise TETMESH).
    Generate {
        #[arg(long, value_enum)]
        shape: Shape,
        #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [8, 8, 8])]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [-0.5, -0.5, -0.5], allow_hyphen_values = true)]
        lo: Vec<f64>,
        #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.5, 0.5, 0.5], allow_hyphen_values = true)]
        hi: Vec<f64>,
        #[arg(long, default_value_t = 30.0)]
        radius: f64,
        #[arg(long, default_value_t = 1.0)]
        thickness: f64,
        #[arg(long, default_value_t = 12)]
        n_radial: usize,
        #[arg(long, default_value_t = 1)]
        n_layers: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Convert between Gmsh 2.2 ASCII and TETMESH.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Print size and quality statistics.
    Stats {
        #[arg(long)]
        input: PathBuf,
    },
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Exit status for an error: numerical failures are 2, everything else 1.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) | Error::SolverNonConvergence { .. } | Error::NonFinite(_) | Error::ZeroVector(_) => {
            EXIT_NUMERICAL
        }
        _ => EXIT_CONFIG,
    }
}

/// Parses `argv` and runs the command, returning the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Minimize(args) => cmd_minimize(&args),
        Command::Evolve { run, t_final, alpha } => cmd_evolve(&run, t_final, alpha),
        Command::Mesh(m) => cmd_mesh(m),
        Command::Nondim { builtin, config } => cmd_nondim(builtin, config.as_deref()),
        Command::Verify { suite, samples, seed } => cmd_verify(&suite, samples, seed),
    }
}

/// Builds the run configuration from `--config`/`--experiment` plus flag overrides.
pub fn resolve_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match (&args.config, &args.experiment) {
        (Some(path), None) => RunConfig::load(path)?,
        (None, Some(name)) => name.parse::<Experiment>()?.config(),
        _ => return Err(Error::Config("give exactly one of --config or --experiment".into())),
    };
    let a = &mut cfg.algorithm;
    if let Some(p) = &args.preset {
        a.preset = p.parse()?;
        if a.preset != Preset::General {
            a.theta = None;
        }
    }
    if let Some(t) = &args.theta {
        a.theta = Some([t[0], t[1], t[2]]);
    }
    if let Some(m) = &args.metric {
        a.metric = m.parse::<Metric>().map_err(|e| Error::Config(e.to_string()))?;
    }
    if let Some(t) = args.tau {
        a.tau = t;
    }
    if let Some(e) = args.eps {
        a.eps = e;
    }
    if let Some(k) = args.max_steps {
        a.max_steps = k;
    }
    if let Some(s) = args.seed {
        match &mut cfg.initial {
            InitialSection::Random { seed } | InitialSection::Skyrmion { seed, .. } => *seed = s,
            _ => return Err(Error::Config("--seed needs a random or skyrmion initial state".into())),
        }
    }
    if let Some(p) = &args.initial {
        cfg.initial = InitialSection::Vtk { path: p.clone() };
    }
    if let Some(o) = &args.out {
        cfg.output.dir = o.clone();
    }
    if let Some(k) = args.snapshot_every {
        cfg.output.snapshot_every = k;
    }
    cfg.check()?;
    Ok(cfg)
}

/// Trace and snapshot writer shared by `minimize` and `evolve`.
struct Sink<'a> {
    dir: PathBuf,
    problem: &'a Problem,
    tau: f64,
    trace: Option<TraceWriter>,
    vtk: bool,
    every: usize,
    error: Option<Error>,
}

impl<'a> Sink<'a> {
    fn new(cfg: &RunConfig, problem: &'a Problem, tau: f64) -> Result<Self> {
        let dir = cfg.output.dir.clone();
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
        let trace = if cfg.output.csv { Some(TraceWriter::create(&dir.join("trace.csv"))?) } else { None };
        let sink = Self { dir, problem, tau, trace, vtk: cfg.output.vtk, every: cfg.output.snapshot_every, error: None };
        if sink.vtk && sink.every > 0 {
            sink.snapshot(0, &problem.initial)?;
        }
        Ok(sink)
    }

    fn snapshot(&self, step: usize, pair: &SublatticePair) -> Result<()> {
        let path = self.dir.join(format!("snapshot_{step:07}.vtk"));
        crate::io::write_vtk(self.problem.space.mesh(), pair, self.problem.material.eta_s, &path)
    }

    fn step(&mut self, d: &StepDiagnostics, pair: &SublatticePair) {
        if self.error.is_some() {
            return;
        }
        let row = TraceRow::from_step(d, self.tau, &self.problem.space, pair, self.problem.material.eta_s);
        let mut res = self.trace.as_mut().map_or(Ok(()), |w| w.push(&row));
        if res.is_ok() && self.vtk && self.every > 0 && row.step % self.every == 0 {
            res = self.snapshot(row.step, pair);
        }
        if let Err(e) = res {
            self.error = Some(e);
        }
    }

    fn finish(self, pair: &SublatticePair) -> Result<()> {
        if let Some(e) = self.error {
            return Err(e);
        }
        if let Some(w) = self.trace {
            w.finish()?;
        }
        if self.vtk {
            crate::io::write_vtk(self.problem.space.mesh(), pair, self.problem.material.eta_s, &self.dir.join("final.vtk"))?;
        }
        Ok(())
    }
}

fn write_manifest(
    command: &str,
    cfg: &RunConfig,
    problem: &Problem,
    tau: f64,
    t_final: Option<f64>,
    summary: BTreeMap<String, toml::Value>,
) -> Result<()> {
    let derived = DerivedParams::new(&problem.material, &problem.llg, tau, t_final, problem.scales.as_ref(), &problem.space.mesh().stats());
    let manifest = Manifest {
        command: command.into(),
        seed: cfg.seed(),
        versions: Versions::current(),
        config: cfg.clone(),
        derived,
        summary,
    };
    manifest.write(&cfg.output.dir.join("manifest.toml"))
}

fn print_summary(summary: &BTreeMap<String, toml::Value>) {
    for (k, v) in summary {
        println!("{k} = {v}");
    }
}

fn float(x: f64) -> toml::Value {
    toml::Value::Float(x)
}

fn cmd_minimize(args: &RunArgs) -> Result<i32> {
    let cfg = resolve_config(args)?;
    let problem = cfg.build()?;
    let scales = problem.scales;
    let tau = cfg.tau(scales.as_ref())?;
    let mut sink = Sink::new(&cfg, &problem, tau)?;
    let space = &problem.space;
    let (pair, iterations, termination) = if cfg.algorithm.preset == Preset::Llg {
        let r = llg_minimize_with(
            space,
            &problem.initial,
            &problem.material,
            &problem.llg,
            tau,
            cfg.algorithm.eps,
            cfg.algorithm.max_steps,
            &cfg.llg_options(),
            |d, p| sink.step(d, p),
        )?;
        (r.pair, r.iterations, r.termination)
    } else {
        let flow = cfg.flow_config(scales.as_ref())?;
        let r = minimize_with(space, &problem.initial, &problem.material, &flow, |d, p| sink.step(d, p))?;
        (r.pair, r.iterations, r.termination)
    };
    sink.finish(&pair)?;
    let e = energy(space, &pair, &problem.material)?;
    let projected = pair.projected();
    let e_proj = energy(space, &projected, &problem.material)?;
    let c = constraint_report(space, &pair);
    let mut s = BTreeMap::new();
    s.insert("iterations".into(), toml::Value::Integer(iterations as i64));
    s.insert("converged".into(), toml::Value::Boolean(termination == Termination::Converged));
    s.insert("energy".into(), float(e.total));
    s.insert("projected_energy".into(), float(e_proj.total));
    s.insert("err_L1".into(), toml::Value::Array(c.err_l1.iter().map(|&x| float(x)).collect()));
    s.insert("err_Linf".into(), toml::Value::Array(c.err_linf.iter().map(|&x| float(x)).collect()));
    let mean_dot = mean_sublattice_dot(&problem, &pair);
    s.insert("mean_m1_dot_m2".into(), float(mean_dot));
    if let Some(sc) = scales {
        s.insert("projected_energy_J".into(), float(e_proj.total * sc.energy_scale()));
    }
    if cfg.output.vtk {
        crate::io::write_vtk(space.mesh(), &projected, problem.material.eta_s, &cfg.output.dir.join("final_projected.vtk"))?;
    }
    write_manifest("minimize", &cfg, &problem, tau, None, s.clone())?;
    print_summary(&s);
    if termination == Termination::MaxSteps {
        log::warn!("stopping criterion not met within {} steps", cfg.algorithm.max_steps);
    }
    Ok(EXIT_OK)
}

/// `(1/|Ω|)∫ m₁·m₂` with lumped weights.
pub fn mean_sublattice_dot(problem: &Problem, pair: &SublatticePair) -> f64 {
    let w = problem.space.lumped().weights();
    pair.m1().iter().zip(pair.m2().iter()).zip(w).map(|((a, b), w)| w * a.dot(b)).sum::<f64>() / problem.space.volume()
}

fn cmd_evolve(args: &RunArgs, t_final: Option<f64>, alpha: Option<f64>) -> Result<i32> {
    let mut cfg = resolve_config(args)?;
    if let Some(t) = t_final {
        cfg.algorithm.t_final = Some(t);
    }
    if let Some(a) = alpha {
        cfg.algorithm.alpha = Some([a, a]);
    }
    if cfg.algorithm.preset != Preset::Llg {
        log::info!("evolve always uses the tangent plane LLG scheme; preset '{:?}' ignored", cfg.algorithm.preset);
    }
    let problem = cfg.build()?;
    let scales = problem.scales;
    let tau = cfg.tau(scales.as_ref())?;
    let t_end = cfg.t_final(scales.as_ref())?;
    let schedule = cfg.schedule(&problem.material, scales.as_ref())?;
    let mut sink = Sink::new(&cfg, &problem, tau)?;
    // Snapshots are written by the sink; the trajectory keeps only the ends.
    let keep = usize::MAX;
    let traj = evolve_with(
        &problem.space,
        &problem.initial,
        &problem.material,
        &problem.llg,
        &schedule,
        t_end,
        tau,
        keep,
        &cfg.llg_options(),
        |d, p| sink.step(d, p),
    )?;
    let pair = traj.final_pair().clone();
    sink.finish(&pair)?;
    let weak = weak_energy_check(&traj, &problem.material, &problem.llg);
    let mut s = BTreeMap::new();
    s.insert("steps".into(), toml::Value::Integer(traj.n_steps() as i64));
    s.insert("t_final".into(), float(traj.n_steps() as f64 * tau));
    s.insert("initial_energy".into(), float(traj.initial_energy.total));
    s.insert("final_energy".into(), float(traj.final_energy.total));
    s.insert("weak_energy_value".into(), float(weak.value));
    s.insert("weak_energy_budget".into(), float(weak.budget));
    s.insert("weak_energy_pass".into(), toml::Value::Boolean(weak.pass));
    s.insert("mean_m1_dot_m2".into(), float(mean_sublattice_dot(&problem, &pair)));
    if let Some(sc) = scales {
        s.insert("t_final_s".into(), float(traj.n_steps() as f64 * tau * sc.time_scale()));
    }
    if let Some(msg) = &traj.aborted {
        s.insert("aborted".into(), toml::Value::String(msg.clone()));
    }
    write_manifest("evolve", &cfg, &problem, tau, Some(t_end), s.clone())?;
    print_summary(&s);
    if let Some(msg) = traj.aborted {
        return Err(Error::Numerical(msg));
    }
    Ok(EXIT_OK)
}

fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    let text = match MeshFormat::from_path(path) {
        MeshFormat::GmshMsh2Ascii => export_msh2(mesh),
        MeshFormat::TetMesh => export_tetmesh(mesh),
    };
    std::fs::write(path, text)?;
    Ok(())
}

fn print_stats(mesh: &Mesh) {
    let s = mesh.stats();
    println!("vertices = {}", s.n_vertices);
    println!("elements = {}", s.n_elements);
    println!("boundary_faces = {}", mesh.boundary_faces().len());
    println!("volume = {}", s.total_volume);
    println!("h_max = {}", s.h_max);
    println!("h_min = {}", s.h_min);
    println!("shape_regularity = {}", s.shape_regularity);
}

fn cmd_mesh(cmd: MeshCommand) -> Result<i32> {
    match cmd {
        MeshCommand::Generate { shape, n, lo, hi, radius, thickness, n_radial, n_layers, output } => {
            let mesh = match shape {
                Shape::Box => generate_box_mesh(n[0], n[1], n[2], [lo[0], lo[1], lo[2]].into(), [hi[0], hi[1], hi[2]].into())?,
                Shape::Disk => generate_disk_mesh(radius, thickness, n_radial, n_layers)?,
            };
            write_mesh(&mesh, &output)?;
            print_stats(&mesh);
        }
        MeshCommand::Convert { input, output } => {
            let (mesh, report) = import_mesh(&input, MeshFormat::from_path(&input))?;
            write_mesh(&mesh, &output)?;
            println!("skipped_elements = {}", report.skipped_elements);
            println!("unreferenced_nodes = {}", report.unreferenced_nodes);
            print_stats(&mesh);
        }
        MeshCommand::Stats { input } => {
            let (mesh, _) = import_mesh(&input, MeshFormat::from_path(&input))?;
            print_stats(&mesh);
        }
    }
    Ok(EXIT_OK)
}

fn cmd_nondim(builtin: bool, config: Option<&Path>) -> Result<i32> {
    let phys: PhysicalParams = match (builtin, config) {
        (true, _) => PhysicalParams::afm_disk(),
        (false, Some(path)) => {
            let cfg = RunConfig::load(path)?;
            cfg.material_si.ok_or_else(|| Error::Config("nondim needs a [material_si] section".into()))?.to_physical()?
        }
        (false, None) => return Err(Error::Config("give --builtin or --config".into())),
    };
    let nd = nondimensionalize(&phys)?;
    let m = &nd.material;
    let s = &nd.scales;
    println!("length_scale_m = {:e}", s.length);
    println!("ms_ref_A_per_m = {:e}", s.ms_ref);
    println!("time_scale_s = {:e}", s.time_scale());
    println!("energy_scale_J = {:e}", s.energy_scale());
    for l in 0..2 {
        let lex = exchange_length(phys.a_intra[l], phys.ms[l])?;
        println!("l_ex{} = {:.4} nm", l + 1, lex * 1e9);
    }
    println!("a11 = {}", m.a11);
    println!("a22 = {}", m.a22);
    println!("a12 = {}", m.a12);
    println!("a0 = {}", m.a0);
    println!("q = [{}, {}]", m.q[0], m.q[1]);
    println!("dmi1 = {:?}", m.dmi[0].transpose().as_slice());
    println!("dmi2 = {:?}", m.dmi[1].transpose().as_slice());
    println!("h_ext = [{}, {}, {}]", m.h_ext.x, m.h_ext.y, m.h_ext.z);
    println!("eta_s = [{}, {}]", m.eta_s[0], m.eta_s[1]);
    println!("eta = [{}, {}]", nd.llg.eta[0], nd.llg.eta[1]);
    println!("alpha = [{}, {}]", nd.llg.alpha[0], nd.llg.alpha[1]);
    Ok(EXIT_OK)
}

fn cmd_verify(suites: &[Suite], samples: usize, seed: u64) -> Result<i32> {
    let opts = VerifyOptions { samples, seed };
    let list: Vec<Suite> = if suites.is_empty() { Suite::ALL.to_vec() } else { suites.to_vec() };
    let mut failed = Vec::new();
    for suite in list {
        let report = run_suite(suite, &opts)?;
        print!("{report}");
        for c in report.failures() {
            failed.push(format!("{}: {}", suite.name(), c.name));
        }
    }
    if failed.is_empty() {
        println!("all checks passed");
        Ok(EXIT_OK)
    } else {
        for f in &failed {
            eprintln!("failed check: {f}");
        }
        Ok(EXIT_VERIFY)
    }
}
