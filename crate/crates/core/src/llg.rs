//! Projection-free tangent plane integrator for the coupled
//! Landau–Lifshitz–Gilbert system, with time-dependent applied fields,
//! trajectories, time reconstructions and energy diagnostics.

use nalgebra::{Matrix3, Vector3};

use crate::energy::{effective_field_rhs, energy, lower_order_quadratic, EnergyBreakdown, MaterialParams};
use crate::error::{Error, Result};
use crate::fem::{FeSpace, NodalVectorField};
use crate::fields::{constraint_report, SublatticePair};
use crate::flow::{recursion_defect, StepDiagnostics, StepResult, Termination};
use crate::tangent::{build_frames, lift_blocks, reduce, solve, FullOperator, KrylovMethod, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LLGParams {
    /// Dimensionless gyromagnetic factors `η_ℓ`.
    pub eta: [f64; 2],
    /// Gilbert damping `α_ℓ`.
    pub alpha: [f64; 2],
}

impl LLGParams {
    pub fn new(eta: [f64; 2], alpha: [f64; 2]) -> Result<Self> {
        if !eta.iter().chain(&alpha).all(|&x| x > 0.0 && x.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta and alpha must be positive, got {eta:?}, {alpha:?}")));
        }
        Ok(Self { eta, alpha })
    }

    pub fn uniform(eta: f64, alpha: f64) -> Result<Self> {
        Self::new([eta; 2], [alpha; 2])
    }

    /// Largest step for which the discrete stability estimate is guaranteed:
    /// `2·max α_ℓ / |a₀|`.
    pub fn stability_tau_bound(&self, params: &MaterialParams) -> f64 {
        2.0 * self.alpha[0].max(self.alpha[1]) / params.a0.abs()
    }
}

/// Applied field `h(t) = amplitude(t)·direction` with a piecewise-linear
/// amplitude held constant outside the breakpoint range.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSchedule {
    pub direction: Vector3<f64>,
    pub breakpoints: Vec<(f64, f64)>,
}

impl FieldSchedule {
    pub fn new(direction: Vector3<f64>, breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidParameter("field schedule needs at least one breakpoint".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidParameter("schedule breakpoints must be strictly increasing in t".into()));
        }
        if !breakpoints.iter().all(|(t, a)| t.is_finite() && a.is_finite()) || !direction.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("schedule values must be finite".into()));
        }
        Ok(Self { direction, breakpoints })
    }

    pub fn none() -> Self {
        Self { direction: Vector3::zeros(), breakpoints: vec![(0.0, 0.0)] }
    }

    pub fn constant(h: Vector3<f64>) -> Self {
        Self { direction: h, breakpoints: vec![(0.0, 1.0)] }
    }

    /// Trapezoidal pulse: ramp from 0 at `t = 0` to `amplitude` at `times[0]`,
    /// hold until `times[1]`, ramp back to 0 at `times[2]`.
    pub fn pulse(amplitude: f64, direction: Vector3<f64>, times: [f64; 3]) -> Result<Self> {
        Self::new(direction, vec![(0.0, 0.0), (times[0], amplitude), (times[1], amplitude), (times[2], 0.0)])
    }

    pub fn amplitude(&self, t: f64) -> f64 {
        let b = &self.breakpoints;
        if t <= b[0].0 {
            return b[0].1;
        }
        for w in b.windows(2) {
            let ((t0, a0), (t1, a1)) = (w[0], w[1]);
            if t <= t1 {
                return a0 + (a1 - a0) * (t - t0) / (t1 - t0);
            }
        }
        b[b.len() - 1].1
    }

    pub fn at(&self, t: f64) -> Vector3<f64> {
        self.direction * self.amplitude(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlgOptions {
    /// Include the skew term `⟨m×v,φ⟩_h`. Disabling it is a test hook.
    pub precession: bool,
    pub solver: SolverOptions,
}

impl Default for LlgOptions {
    fn default() -> Self {
        Self { precession: true, solver: SolverOptions { method: KrylovMethod::Gmres, ..SolverOptions::default() } }
    }
}

/// Solves the two independent tangent-plane systems at `pair` with the field
/// evaluated at `t`. Returns the updates and the reduced solutions.
pub fn llg_updates(
    space: &FeSpace,
    pair: &SublatticePair,
    params: &MaterialParams,
    llg: &LLGParams,
    h: Vector3<f64>,
    tau: f64,
    opts: &LlgOptions,
) -> Result<([NodalVectorField; 2], [Vec<f64>; 2], usize, f64)> {
    let n = space.n_vertices();
    let p = params.clone().with_field(h);
    let mut vs = Vec::with_capacity(2);
    let mut xs = Vec::with_capacity(2);
    let (mut iters, mut res) = (0, 0.0f64);
    // a KrylovMethod::Cg request is ignored: the system is nonsymmetric with precession
    let solver = SolverOptions { method: KrylovMethod::Gmres, ..opts.solver };
    for ell in 0..2 {
        let rhs = effective_field_rhs(space, ell, pair, &p)?.scaled(llg.eta[ell]);
        let frames = build_frames(&pair.m[ell])?;
        let mut op = FullOperator::new(1, n);
        op.add_scalar(0, 0, llg.alpha[ell], space.lumped_matrix())
            .add_scalar(0, 0, llg.eta[ell] * params.a_diag(ell) * tau, space.stiffness());
        if opts.precession {
            let skew: Vec<Matrix3<f64>> =
                pair.m[ell].iter().zip(space.lumped().weights()).map(|(m, w)| m.cross_matrix() * *w).collect();
            op.add_nodal(0, 0, skew);
        }
        let sys = reduce(&op, &[rhs], &[&frames])?;
        let (x, rep) = solve(&sys, &solver)?;
        if !rep.converged {
            return Err(Error::SolverNonConvergence { iterations: rep.iterations, residual: rep.residual });
        }
        iters += rep.iterations;
        res = res.max(rep.residual);
        vs.push(lift_blocks(&x, &[&frames]).pop().unwrap());
        xs.push(x);
    }
    let v2 = vs.pop().unwrap();
    let v1 = vs.pop().unwrap();
    let x2 = xs.pop().unwrap();
    let x1 = xs.pop().unwrap();
    Ok(([v1, v2], [x1, x2], iters, res))
}

/// One tangent plane step from `t_i` with energy-law diagnostics. Both
/// energies use the field at `t_i`.
#[allow(clippy::too_many_arguments)]
pub fn llg_step(
    space: &FeSpace,
    pair: &SublatticePair,
    params: &MaterialParams,
    llg: &LLGParams,
    schedule: &FieldSchedule,
    t_i: f64,
    tau: f64,
    opts: &LlgOptions,
) -> Result<StepResult> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let p = params.clone().with_field(schedule.at(t_i));
    let e0 = energy(space, pair, &p)?;
    let (v, _, iters, res) = llg_updates(space, pair, params, llg, schedule.at(t_i), tau, opts)?;
    Ok(finish(space, pair, v, e0, &p, llg, tau, t_i, (iters, res)))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    space: &FeSpace,
    pair: &SublatticePair,
    v: [NodalVectorField; 2],
    e0: EnergyBreakdown,
    p: &MaterialParams,
    llg: &LLGParams,
    tau: f64,
    t_i: f64,
    solver: (usize, f64),
) -> StepResult {
    let next = pair.updated(tau, &v);
    let e1 = energy(space, &next, p).expect("energy of updated pair");
    let lumped = space.lumped();
    let hn = [lumped.inner(&v[0], &v[0]), lumped.inner(&v[1], &v[1])];
    let gn = [space.grad_inner(&v[0], &v[0]), space.grad_inner(&v[1], &v[1])];
    let cross_grad = space.grad_inner(&v[0], &v[1]);
    let cross_l2 = space.l2_inner(&v[0], &v[1]);
    let lo = lower_order_quadratic(space, 0, &v[0], p) + lower_order_quadratic(space, 1, &v[1], p);
    let t2 = tau * tau;
    let predicted = -tau * (llg.alpha[0] / llg.eta[0] * hn[0] + llg.alpha[1] / llg.eta[1] * hn[1])
        - 0.5 * t2 * (p.a11 * gn[0] + p.a22 * gn[1])
        + p.a12 * t2 * cross_grad
        - p.a0 * t2 * cross_l2
        + t2 * lo;
    let mut skew: f64 = 0.0;
    for ell in 0..2 {
        let s: f64 = (0..space.n_vertices())
            .map(|z| lumped.weights()[z] * pair.m[ell][z].cross(&v[ell][z]).dot(&v[ell][z]))
            .sum();
        skew = skew.max(s.abs());
    }
    let stop = (hn[0] + tau * gn[0]).max(hn[1] + tau * gn[1]);
    let diagnostics = StepDiagnostics {
        step: (t_i / tau).round() as usize,
        time: t_i,
        energy_before: e0,
        energy_after: e1,
        metric_norm2: hn,
        grad_norm2: gn,
        cross_grad,
        cross_l2,
        lower_order_quadratic: lo,
        energy_law_predicted: predicted,
        energy_law_residual: ((e1.total - e0.total) - predicted).abs(),
        recursion_defect: recursion_defect(pair, &next, &v, tau),
        constraint: constraint_report(space, &next),
        solver_iterations: solver.0,
        solver_residual: solver.1,
        stop_quantity: stop,
        skew_defect: skew,
    };
    StepResult { v, pair: next, diagnostics }
}

/// Running sums of the discrete stability estimate
/// `Σ_ℓ‖m_ℓ^j‖²_{H¹} + τΣ_iΣ_ℓ‖v_ℓ^i‖_h² + τ²Σ_iΣ_ℓ‖∇v_ℓ^i‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StabilitySums {
    pub h1_norm2_final: f64,
    pub dissipation: f64,
    pub gradient: f64,
    /// Maximum of the full left-hand side over all recorded `j`.
    pub max_total: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub tau: f64,
    /// `(step, pair)` at the snapshot cadence, always including first and last.
    pub snapshots: Vec<(usize, SublatticePair)>,
    pub trace: Vec<StepDiagnostics>,
    /// Energy at `t = 0` with the field `h(0)`.
    pub initial_energy: EnergyBreakdown,
    /// Energy at the final time with the field at that time.
    pub final_energy: EnergyBreakdown,
    /// `E(m^{i+1}; h(t_{i+1})) − E(m^{i+1}; h(t_i))` per step.
    pub field_work: Vec<f64>,
    pub stability: StabilitySums,
    /// Set when the run stopped early on a non-finite energy.
    pub aborted: Option<String>,
}

impl Trajectory {
    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|(i, _)| *i as f64 * self.tau).collect()
    }

    pub fn n_steps(&self) -> usize {
        self.trace.len()
    }

    pub fn final_pair(&self) -> &SublatticePair {
        &self.snapshots.last().expect("trajectory has an initial snapshot").1
    }

    fn snapshot(&self, step: usize) -> Option<&SublatticePair> {
        self.snapshots.binary_search_by_key(&step, |(i, _)| *i).ok().map(|k| &self.snapshots[k].1)
    }
}

fn h1_norm2(space: &FeSpace, pair: &SublatticePair) -> f64 {
    pair.m.iter().map(|m| space.l2_inner(m, m) + space.grad_inner(m, m)).sum()
}

fn zeeman_only(space: &FeSpace, pair: &SublatticePair, params: &MaterialParams, h: Vector3<f64>) -> f64 {
    -(0..2).map(|l| params.eta_s[l] * h.dot(&space.integral(&pair.m[l]))).sum::<f64>()
}

/// Integrates up to `t_final` in `⌈t_final/τ⌉` steps, keeping every
/// `snapshot_every`-th state plus the first and last.
#[allow(clippy::too_many_arguments)]
pub fn evolve(
    space: &FeSpace,
    initial: &SublatticePair,
    params: &MaterialParams,
    llg: &LLGParams,
    schedule: &FieldSchedule,
    t_final: f64,
    tau: f64,
    snapshot_every: usize,
    opts: &LlgOptions,
) -> Result<Trajectory> {
    evolve_with(space, initial, params, llg, schedule, t_final, tau, snapshot_every, opts, |_, _| {})
}

/// As [`evolve`], calling `observer` with each step's diagnostics and new state.
#[allow(clippy::too_many_arguments)]
pub fn evolve_with<F: FnMut(&StepDiagnostics, &SublatticePair)>(
    space: &FeSpace,
    initial: &SublatticePair,
    params: &MaterialParams,
    llg: &LLGParams,
    schedule: &FieldSchedule,
    t_final: f64,
    tau: f64,
    snapshot_every: usize,
    opts: &LlgOptions,
    mut observer: F,
) -> Result<Trajectory> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!("final time must be positive, got {t_final}")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    if snapshot_every == 0 {
        return Err(Error::InvalidParameter("snapshot cadence must be at least 1".into()));
    }
    space.check(initial.m1())?;
    space.check(initial.m2())?;
    if params.a0 != 0.0 && tau >= llg.stability_tau_bound(params) {
        log::warn!("tau = {tau} violates the stability advisory tau < {}", llg.stability_tau_bound(params));
    }
    let n_steps = ((t_final / tau) * (1.0 - 1e-12)).ceil() as usize;
    let initial_energy = energy(space, initial, &params.clone().with_field(schedule.at(0.0)))?;
    let mut pair = initial.clone();
    let mut snapshots = vec![(0, pair.clone())];
    let mut trace = Vec::with_capacity(n_steps);
    let mut field_work = Vec::with_capacity(n_steps);
    let mut stab = StabilitySums { h1_norm2_final: h1_norm2(space, &pair), ..Default::default() };
    stab.max_total = stab.h1_norm2_final;
    let mut e = initial_energy;
    let mut aborted = None;
    for i in 0..n_steps {
        let t = i as f64 * tau;
        let p = params.clone().with_field(schedule.at(t));
        let (v, _, iters, res) = llg_updates(space, &pair, params, llg, schedule.at(t), tau, opts)?;
        let step = finish(space, &pair, v, e, &p, llg, tau, t, (iters, res));
        let d = step.diagnostics;
        if !d.energy_after.total.is_finite() {
            let msg = format!("non-finite energy at step {i}");
            log::error!("{msg}");
            aborted = Some(msg);
            break;
        }
        let (h0, h1) = (schedule.at(t), schedule.at(t + tau));
        let work = if h0 == h1 {
            0.0
        } else {
            zeeman_only(space, &step.pair, params, h1) - zeeman_only(space, &step.pair, params, h0)
        };
        e = d.energy_after;
        e.zeeman += work;
        e.total += work;
        pair = step.pair;
        stab.dissipation += tau * (d.metric_norm2[0] + d.metric_norm2[1]);
        stab.gradient += tau * tau * (d.grad_norm2[0] + d.grad_norm2[1]);
        stab.h1_norm2_final = h1_norm2(space, &pair);
        stab.max_total = stab.max_total.max(stab.h1_norm2_final + stab.dissipation + stab.gradient);
        observer(&d, &pair);
        field_work.push(work);
        trace.push(d);
        if (i + 1) % snapshot_every == 0 || i + 1 == n_steps {
            snapshots.push((i + 1, pair.clone()));
        }
    }
    if aborted.is_some() && snapshots.last().map(|s| s.0) != Some(trace.len()) {
        snapshots.push((trace.len(), pair.clone()));
    }
    Ok(Trajectory { tau, snapshots, trace, initial_energy, final_energy: e, field_work, stability: stab, aborted })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconstructionKind {
    /// Piecewise affine interpolation in time.
    Affine,
    /// Piecewise constant, left-continuous value `m^i` on `[t_i, t_{i+1})`.
    Left,
    /// Piecewise constant value `m^{i+1}` on `(t_i, t_{i+1}]`.
    Right,
}

pub fn reconstruct(traj: &Trajectory, t: f64, kind: ReconstructionKind) -> Result<SublatticePair> {
    let tau = traj.tau;
    let span = traj.snapshots.last().map(|s| s.0).unwrap_or(0) as f64 * tau;
    let tol = 1e-12 * span.max(1.0);
    if !(t >= -tol && t <= span + tol) {
        return Err(Error::InvalidParameter(format!("t = {t} outside the recorded span [0, {span}]")));
    }
    let coarse = |i: usize| Error::InvalidParameter(format!("snapshot {i} not retained; reduce the snapshot cadence"));
    let s = t / tau;
    let i_near = s.round();
    if (s - i_near).abs() * tau <= tol {
        let i = i_near as usize;
        return traj.snapshot(i).cloned().ok_or_else(|| coarse(i));
    }
    let i = s.floor() as usize;
    let get = |k: usize| traj.snapshot(k).ok_or_else(|| coarse(k));
    match kind {
        ReconstructionKind::Left => get(i).cloned(),
        ReconstructionKind::Right => get(i + 1).cloned(),
        ReconstructionKind::Affine => {
            let (a, b) = (get(i)?, get(i + 1)?);
            let w = s - i as f64;
            let mix = |l: usize| a.m[l].scaled(1.0 - w).add_scaled(w, &b.m[l]);
            SublatticePair::new(mix(0), mix(1))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakEnergyReport {
    /// `E(T) + Σ_ℓ(α_ℓ/η_ℓ)τΣ_i‖v_ℓ^i‖_h² − E(0)`
    pub value: f64,
    /// `Σ_i |a₁₂τ²⟨∇v₁,∇v₂⟩ − a₀τ²⟨v₁,v₂⟩|`
    pub cross_terms: f64,
    /// `Σ_i τ²|Q(v^i)|` from anisotropy and DMI.
    pub lower_order: f64,
    /// `Σ_i |field work|` from a time-dependent applied field.
    pub field_work: f64,
    pub budget: f64,
    pub pass: bool,
}

/// Discrete surrogate of the energy inequality of weak solutions.
pub fn weak_energy_check(traj: &Trajectory, params: &MaterialParams, llg: &LLGParams) -> WeakEnergyReport {
    let t2 = traj.tau * traj.tau;
    let mut diss = 0.0;
    let (mut cross, mut lo, mut work) = (0.0, 0.0, 0.0);
    for (d, w) in traj.trace.iter().zip(&traj.field_work) {
        diss += traj.tau * (llg.alpha[0] / llg.eta[0] * d.metric_norm2[0] + llg.alpha[1] / llg.eta[1] * d.metric_norm2[1]);
        cross += (params.a12 * t2 * d.cross_grad - params.a0 * t2 * d.cross_l2).abs();
        lo += t2 * d.lower_order_quadratic.abs();
        work += w.abs();
    }
    let value = traj.final_energy.total + diss - traj.initial_energy.total;
    let budget = cross + lo + work;
    WeakEnergyReport { value, cross_terms: cross, lower_order: lo, field_work: work, budget, pass: value <= budget + 1e-8 }
}

#[derive(Debug, Clone)]
pub struct LlgMinimizeResult {
    pub pair: SublatticePair,
    pub iterations: usize,
    pub termination: Termination,
    pub trace: Vec<StepDiagnostics>,
}

/// Runs the tangent plane scheme with a constant field until the lumped
/// stopping quantity `max_ℓ(‖v_ℓ‖_h² + τ‖∇v_ℓ‖²) ≤ ε²|Ω|` holds for the
/// freshly computed update.
#[allow(clippy::too_many_arguments)]
pub fn llg_minimize(
    space: &FeSpace,
    initial: &SublatticePair,
    params: &MaterialParams,
    llg: &LLGParams,
    tau: f64,
    eps: f64,
    max_steps: usize,
    opts: &LlgOptions,
) -> Result<LlgMinimizeResult> {
    llg_minimize_with(space, initial, params, llg, tau, eps, max_steps, opts, |_, _| {})
}

/// As [`llg_minimize`], calling `observer` with each applied step and the new state.
#[allow(clippy::too_many_arguments)]
pub fn llg_minimize_with<F: FnMut(&StepDiagnostics, &SublatticePair)>(
    space: &FeSpace,
    initial: &SublatticePair,
    params: &MaterialParams,
    llg: &LLGParams,
    tau: f64,
    eps: f64,
    max_steps: usize,
    opts: &LlgOptions,
    mut observer: F,
) -> Result<LlgMinimizeResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let threshold = eps * eps * space.volume();
    let mut pair = initial.clone();
    let mut e = energy(space, &pair, params)?;
    let mut trace = Vec::new();
    loop {
        let t = trace.len() as f64 * tau;
        let (v, _, iters, res) = llg_updates(space, &pair, params, llg, params.h_ext, tau, opts)?;
        let lumped = space.lumped();
        let stop = (0..2)
            .map(|l| lumped.inner(&v[l], &v[l]) + tau * space.grad_inner(&v[l], &v[l]))
            .fold(0.0, f64::max);
        if stop <= threshold || trace.len() >= max_steps {
            let termination = if stop <= threshold { Termination::Converged } else { Termination::MaxSteps };
            return Ok(LlgMinimizeResult { pair, iterations: trace.len(), termination, trace });
        }
        let step = finish(space, &pair, v, e, params, llg, tau, t, (iters, res));
        if !step.diagnostics.energy_after.total.is_finite() {
            return Err(Error::Numerical(format!("non-finite energy at step {}", trace.len())));
        }
        observer(&step.diagnostics, &step.pair);
        e = step.diagnostics.energy_after;
        pair = step.pair;
        trace.push(step.diagnostics);
    }
}
