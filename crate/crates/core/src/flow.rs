//! Discrete gradient flows with tunable implicitness `θ = (θ₁, θ₂, θ₃)` for
//! the intralattice, inhomogeneous interlattice and homogeneous interlattice
//! exchange contributions.

use crate::energy::{effective_field_rhs, energy, lower_order_quadratic, EnergyBreakdown, MaterialParams};
use crate::error::{Error, Result};
use crate::fem::{FeSpace, Metric, NodalVectorField};
use crate::fields::{constraint_report, ConstraintReport, SublatticePair};
use crate::mesh::MeshStats;
use crate::sparse::CsrMatrix;
use crate::tangent::{build_frames, lift_blocks, reduce, solve, FullOperator, SolverOptions, TangentFrame};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ThetaScheme {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl ThetaScheme {
    /// Backward Euler for the intralattice term, Crank–Nicolson for both
    /// interlattice terms: one coupled system per step.
    pub const COUPLED: Self = Self { theta1: 1.0, theta2: 0.5, theta3: 0.5 };
    /// Backward Euler intralattice, explicit interlattice: two independent systems.
    pub const DECOUPLED: Self = Self { theta1: 1.0, theta2: 0.0, theta3: 0.0 };

    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Result<Self> {
        let s = Self { theta1, theta2, theta3 };
        if ![theta1, theta2, theta3].iter().all(|t| (0.0..=1.0).contains(t)) {
            return Err(Error::InvalidParameter(format!("theta values must lie in [0,1], got {s:?}")));
        }
        Ok(s)
    }

    /// Interlattice terms enter the left-hand side, so the sublattices are solved together.
    pub fn is_coupled(&self) -> bool {
        self.theta2 != 0.0 || self.theta3 != 0.0
    }

    /// `θ₁ ≥ 1/2`; smaller values need `τ = O(h²)` and are flagged unsupported.
    pub fn is_supported(&self) -> bool {
        self.theta1 >= 0.5
    }

    /// The τ-independent well-posedness conditions `θ₁ > 0`, `a₁₁a₂₂θ₁² > a₁₂²θ₂²`.
    pub fn check(&self, params: &MaterialParams) -> Result<()> {
        Self::new(self.theta1, self.theta2, self.theta3)?;
        if self.theta1 <= 0.0 {
            return Err(Error::InvalidParameter("theta1 must be positive".into()));
        }
        if params.a11 * params.a22 * self.theta1.powi(2) <= params.a12.powi(2) * self.theta2.powi(2) {
            return Err(Error::CoefficientCondition(format!(
                "a11*a22*theta1^2 > a12^2*theta2^2 fails for {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopAggregation {
    #[default]
    MaxOverSublattices,
    SumOverSublattices,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub theta: ThetaScheme,
    pub metric: Metric,
    pub tau: f64,
    pub eps: f64,
    pub stop_aggregation: StopAggregation,
    pub max_steps: usize,
    pub solver: SolverOptions,
}

impl FlowConfig {
    pub fn new(theta: ThetaScheme, metric: Metric, tau: f64, eps: f64) -> Self {
        Self {
            theta,
            metric,
            tau,
            eps,
            stop_aggregation: StopAggregation::default(),
            max_steps: 100_000,
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self, params: &MaterialParams) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        self.theta.check(params)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepDiagnostics {
    pub step: usize,
    /// Time `t_i` at the start of the step (`i·τ`).
    pub time: f64,
    pub energy_before: EnergyBreakdown,
    pub energy_after: EnergyBreakdown,
    /// `‖v_ℓ‖²` in the step metric.
    pub metric_norm2: [f64; 2],
    /// `‖∇v_ℓ‖²`
    pub grad_norm2: [f64; 2],
    /// `⟨∇v₁,∇v₂⟩`
    pub cross_grad: f64,
    /// `⟨v₁,v₂⟩` with the consistent mass matrix.
    pub cross_l2: f64,
    /// `Σ_ℓ Q_ℓ(v_ℓ)`: quadratic part of the anisotropy and DMI energies.
    pub lower_order_quadratic: f64,
    /// Energy change predicted by the discrete energy law.
    pub energy_law_predicted: f64,
    /// `|ΔE − predicted|` with both energies evaluated independently.
    pub energy_law_residual: f64,
    /// `max_z | |m^{i+1}|² − |m^i|² − τ²|v|² |`
    pub recursion_defect: f64,
    pub constraint: ConstraintReport,
    pub solver_iterations: usize,
    pub solver_residual: f64,
    /// Aggregated `‖v_ℓ‖²_𝓗 + τ‖∇v_ℓ‖²`.
    pub stop_quantity: f64,
    /// `max_ℓ |⟨m_ℓ×v_ℓ, v_ℓ⟩_h|` (LLG steps only).
    pub skew_defect: f64,
}

impl StepDiagnostics {
    pub fn energy_law_ok(&self) -> bool {
        self.energy_law_residual <= 1e-9 * self.energy_before.total.abs().max(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub v: [NodalVectorField; 2],
    pub pair: SublatticePair,
    pub diagnostics: StepDiagnostics,
}

/// Per-run operators reused across steps.
pub struct FlowOperators<'a> {
    space: &'a FeSpace,
    metric_matrix: CsrMatrix,
}

impl<'a> FlowOperators<'a> {
    pub fn new(space: &'a FeSpace, metric: Metric) -> Self {
        Self { space, metric_matrix: space.metric_matrix(metric) }
    }

    pub fn space(&self) -> &FeSpace {
        self.space
    }

    pub fn metric_matrix(&self) -> &CsrMatrix {
        &self.metric_matrix
    }
}

/// Solves for the updates `(v₁, v₂)` at `pair` without applying them.
pub fn compute_updates(
    ops: &FlowOperators,
    pair: &SublatticePair,
    params: &MaterialParams,
    config: &FlowConfig,
) -> Result<([NodalVectorField; 2], usize, f64)> {
    let space = ops.space;
    let n = space.n_vertices();
    let (t1, t2, t3) = (config.theta.theta1, config.theta.theta2, config.theta.theta3);
    let tau = config.tau;
    let rhs = [effective_field_rhs(space, 0, pair, params)?, effective_field_rhs(space, 1, pair, params)?];
    let frames = [build_frames(pair.m1())?, build_frames(pair.m2())?];
    let h = &ops.metric_matrix;
    let k = space.stiffness();
    let solve_checked = |op: &FullOperator, b: &[NodalVectorField], f: &[&TangentFrame]| -> Result<(Vec<NodalVectorField>, usize, f64)> {
        let sys = reduce(op, b, f)?;
        let (x, rep) = solve(&sys, &config.solver)?;
        if !rep.converged {
            return Err(Error::SolverNonConvergence { iterations: rep.iterations, residual: rep.residual });
        }
        Ok((lift_blocks(&x, f), rep.iterations, rep.residual))
    };
    if config.theta.is_coupled() {
        let mut op = FullOperator::new(2, n);
        for ell in 0..2 {
            op.add_scalar(ell, ell, 1.0, h)
                .add_scalar(ell, ell, params.a_diag(ell) * t1 * tau, k)
                .add_scalar(ell, 1 - ell, params.a12 * t2 * tau, k)
                .add_scalar(ell, 1 - ell, -params.a0 * t3 * tau, space.mass());
        }
        let (mut v, it, res) = solve_checked(&op, &rhs, &[&frames[0], &frames[1]])?;
        let v2 = v.pop().unwrap();
        let v1 = v.pop().unwrap();
        Ok(([v1, v2], it, res))
    } else {
        let mut out = Vec::with_capacity(2);
        let (mut iters, mut res) = (0, 0.0f64);
        for ell in 0..2 {
            let mut op = FullOperator::new(1, n);
            op.add_scalar(0, 0, 1.0, h).add_scalar(0, 0, params.a_diag(ell) * t1 * tau, k);
            let (mut v, it, r) = solve_checked(&op, std::slice::from_ref(&rhs[ell]), &[&frames[ell]])?;
            out.push(v.pop().unwrap());
            iters += it;
            res = res.max(r);
        }
        let v2 = out.pop().unwrap();
        let v1 = out.pop().unwrap();
        Ok(([v1, v2], iters, res))
    }
}

/// Per-sublattice `(‖v‖²_𝓗, ‖∇v‖²)` and the aggregated stopping quantity.
pub fn update_norms(ops: &FlowOperators, v: &[NodalVectorField; 2], tau: f64, agg: StopAggregation) -> ([f64; 2], [f64; 2], f64) {
    let mut hn = [0.0; 2];
    let mut gn = [0.0; 2];
    for ell in 0..2 {
        hn[ell] = FeSpace::bilinear(&ops.metric_matrix, &v[ell], &v[ell]);
        gn[ell] = ops.space.grad_inner(&v[ell], &v[ell]);
    }
    let q = [hn[0] + tau * gn[0], hn[1] + tau * gn[1]];
    let stop = match agg {
        StopAggregation::MaxOverSublattices => q[0].max(q[1]),
        StopAggregation::SumOverSublattices => q[0] + q[1],
    };
    (hn, gn, stop)
}

pub(crate) fn recursion_defect(before: &SublatticePair, after: &SublatticePair, v: &[NodalVectorField; 2], tau: f64) -> f64 {
    let mut d: f64 = 0.0;
    for ell in 0..2 {
        for z in 0..before.n_vertices() {
            let lhs = after.m[ell][z].norm_squared() - before.m[ell][z].norm_squared();
            d = d.max((lhs - tau * tau * v[ell][z].norm_squared()).abs());
        }
    }
    d
}

/// One step of the θ-scheme, with energy-law diagnostics.
pub fn flow_step(space: &FeSpace, pair: &SublatticePair, params: &MaterialParams, config: &FlowConfig) -> Result<StepResult> {
    config.validate(params)?;
    let ops = FlowOperators::new(space, config.metric);
    let e0 = energy(space, pair, params)?;
    step_with(&ops, pair, e0, params, config, 0)
}

fn step_with(
    ops: &FlowOperators,
    pair: &SublatticePair,
    e0: EnergyBreakdown,
    params: &MaterialParams,
    config: &FlowConfig,
    step: usize,
) -> Result<StepResult> {
    let (v, iters, sres) = compute_updates(ops, pair, params, config)?;
    let (hn, gn, stop) = update_norms(ops, &v, config.tau, config.stop_aggregation);
    Ok(finish_step(ops, pair, v, e0, params, config, step, (hn, gn, stop), (iters, sres)))
}

#[allow(clippy::too_many_arguments)]
fn finish_step(
    ops: &FlowOperators,
    pair: &SublatticePair,
    v: [NodalVectorField; 2],
    e0: EnergyBreakdown,
    params: &MaterialParams,
    config: &FlowConfig,
    step: usize,
    norms: ([f64; 2], [f64; 2], f64),
    solver: (usize, f64),
) -> StepResult {
    let space = ops.space;
    let tau = config.tau;
    let (hn, gn, stop) = norms;
    let th = config.theta;
    let next = pair.updated(tau, &v);
    // energies of unit-scale fields are finite; a failure here means the input was already invalid
    let e1 = energy(space, &next, params).expect("energy of updated pair");
    let cross_grad = space.grad_inner(&v[0], &v[1]);
    let cross_l2 = space.l2_inner(&v[0], &v[1]);
    let lo = lower_order_quadratic(space, 0, &v[0], params) + lower_order_quadratic(space, 1, &v[1], params);
    let t2 = tau * tau;
    let predicted = -tau * (hn[0] + hn[1])
        - (2.0 * th.theta1 - 1.0) / 2.0 * t2 * (params.a11 * gn[0] + params.a22 * gn[1])
        - params.a12 * (2.0 * th.theta2 - 1.0) * t2 * cross_grad
        + params.a0 * (2.0 * th.theta3 - 1.0) * t2 * cross_l2
        + t2 * lo;
    let diagnostics = StepDiagnostics {
        step,
        time: step as f64 * tau,
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
        skew_defect: 0.0,
    };
    StepResult { v, pair: next, diagnostics }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxSteps,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub pair: SublatticePair,
    /// One entry per applied update.
    pub trace: Vec<StepDiagnostics>,
    pub termination: Termination,
    /// Number of applied updates `i*`.
    pub iterations: usize,
    pub final_energy: EnergyBreakdown,
    /// Stopping quantity of the last computed update (applied or not).
    pub final_stop_quantity: f64,
    pub threshold: f64,
}

/// Runs the flow until the stopping criterion `stop ≤ ε²|Ω|` holds for the
/// freshly computed update (which is then discarded), or `max_steps` updates
/// have been applied.
pub fn minimize(
    space: &FeSpace,
    initial: &SublatticePair,
    params: &MaterialParams,
    config: &FlowConfig,
) -> Result<MinimizeResult> {
    minimize_with(space, initial, params, config, |_, _| {})
}

/// As [`minimize`], calling `observer` with each applied step and the new state.
pub fn minimize_with<F: FnMut(&StepDiagnostics, &SublatticePair)>(
    space: &FeSpace,
    initial: &SublatticePair,
    params: &MaterialParams,
    config: &FlowConfig,
    mut observer: F,
) -> Result<MinimizeResult> {
    config.validate(params)?;
    space.check(initial.m1())?;
    space.check(initial.m2())?;
    let advisory = step_size_advisory(params, config, &space.mesh().stats());
    for item in advisory.items.iter().filter(|i| i.status == AdvisoryStatus::Fail) {
        log::warn!("step-size advisory failed: {} ({} vs {})", item.name, item.value, item.bound);
    }
    let ops = FlowOperators::new(space, config.metric);
    let threshold = config.eps * config.eps * space.volume();
    let mut pair = initial.clone();
    let mut e = energy(space, &pair, params)?;
    let mut trace = Vec::new();
    loop {
        let (v, iters, sres) = compute_updates(&ops, &pair, params, config)?;
        let norms = update_norms(&ops, &v, config.tau, config.stop_aggregation);
        if norms.2 <= threshold {
            return Ok(MinimizeResult {
                pair,
                iterations: trace.len(),
                trace,
                termination: Termination::Converged,
                final_energy: e,
                final_stop_quantity: norms.2,
                threshold,
            });
        }
        if trace.len() >= config.max_steps {
            log::warn!("minimize: max_steps = {} reached", config.max_steps);
            return Ok(MinimizeResult {
                pair,
                iterations: trace.len(),
                trace,
                termination: Termination::MaxSteps,
                final_energy: e,
                final_stop_quantity: norms.2,
                threshold,
            });
        }
        let step = finish_step(&ops, &pair, v, e, params, config, trace.len(), norms, (iters, sres));
        if !step.diagnostics.energy_after.total.is_finite() {
            return Err(Error::Numerical(format!("non-finite energy at step {}", trace.len())));
        }
        log::debug!("step {} energy {:.12e} stop {:.3e}", trace.len(), step.diagnostics.energy_after.total, step.diagnostics.stop_quantity);
        observer(&step.diagnostics, &step.pair);
        e = step.diagnostics.energy_after;
        pair = step.pair;
        trace.push(step.diagnostics);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvisoryStatus {
    Pass,
    Fail,
    NotComputable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvisoryItem {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub status: AdvisoryStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvisoryReport {
    pub items: Vec<AdvisoryItem>,
}

impl AdvisoryReport {
    pub fn get(&self, name: &str) -> Option<&AdvisoryItem> {
        self.items.iter().find(|i| i.name == name)
    }

    pub fn all_computable_pass(&self) -> bool {
        self.items.iter().all(|i| i.status != AdvisoryStatus::Fail)
    }
}

fn item(name: &'static str, value: f64, bound: f64, pass: bool) -> AdvisoryItem {
    AdvisoryItem { name, value, bound, status: if pass { AdvisoryStatus::Pass } else { AdvisoryStatus::Fail } }
}

/// Evaluates the sufficient conditions for well-posedness, energy decay and
/// stability of the θ-scheme with the metric's equivalence constant `c_𝓗`.
pub fn step_size_advisory(params: &MaterialParams, config: &FlowConfig, stats: &MeshStats) -> AdvisoryReport {
    let th = config.theta;
    let c2 = config.metric.equivalence_constant().powi(2);
    let a0 = params.a0.abs();
    let tau = config.tau;
    let aa = params.a11 * params.a22;
    let a12s = params.a12 * params.a12;
    let g1 = (2.0 * th.theta1 - 1.0).powi(2);
    let g2 = (2.0 * th.theta2 - 1.0).powi(2);
    let w3 = c2 * a0 * th.theta3 * tau;
    let d3 = c2 * a0 * (2.0 * th.theta3 - 1.0).abs() * tau;
    let items = vec![
        item("wellposed.theta1_positive", th.theta1, 0.0, th.theta1 > 0.0),
        item("wellposed.exchange_theta", aa * th.theta1.powi(2), a12s * th.theta2.powi(2), aa * th.theta1.powi(2) > a12s * th.theta2.powi(2)),
        item("wellposed.homogeneous_tau", w3, 1.0, w3 < 1.0),
        item("decay.theta1", th.theta1, 0.5, th.theta1 >= 0.5),
        item("decay.exchange_theta", aa * g1, a12s * g2, aa * g1 >= a12s * g2),
        item("decay.homogeneous_tau", d3, 2.0, d3 <= 2.0),
        item("stability.theta1", th.theta1, 0.5, th.theta1 > 0.5),
        item("stability.exchange_theta", aa * g1, a12s * g2, aa * g1 > a12s * g2),
        item("stability.homogeneous_tau", d3, 2.0, d3 < 2.0),
        AdvisoryItem { name: "stability.tau_threshold", value: tau, bound: f64::NAN, status: AdvisoryStatus::NotComputable },
        AdvisoryItem {
            name: "constraint.first_order_bound",
            value: tau,
            bound: f64::NAN,
            status: AdvisoryStatus::NotComputable,
        },
        // θ₁ < 1/2 needs τ = O(h²); the constant is unknown, so only report h²
        AdvisoryItem {
            name: "supported.explicit_intralattice",
            value: tau,
            bound: stats.h_max * stats.h_max,
            status: if th.is_supported() { AdvisoryStatus::Pass } else { AdvisoryStatus::NotComputable },
        },
    ];
    AdvisoryReport { items }
}
