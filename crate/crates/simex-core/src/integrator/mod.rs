//! IMEX-RK and SIMEX-RK steppers and the fixed-step integration driver.
//!
//! Both steppers share the change of variables `η = ξ − y_n` under which
//! the implicit stage equation reads
//!
//! ```text
//! η − hγ (f(y_n + η, t) − k₁) = r,      k₁ = f(y_n, t_n).
//! ```
//!
//! The IMEX step hands this equation to a solver and must get an accurate
//! solution back. The SIMEX step instead accepts whatever `η` a filter
//! returns and rebalances the decomposition: with `d = r − hγk₁` the stage
//! slopes become
//!
//! ```text
//! kᵢ = (η − d)/(hγ),
//! k̂ᵢ = f̂(y_n + η) + f(y_n + η) − kᵢ,
//! ```
//!
//! so that `kᵢ + k̂ᵢ` is exact at the filtered point and the residual of the
//! implicit equation is carried by the explicit part of the step.

mod reference;

pub use reference::{reference_solve, ReferenceError};

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::DenseMatrix;
use crate::filters::{
    select_filter, Filter, FilterError, FilterSequence, StageContext,
};
use crate::linops::{GridPermutation, SparseMatrix};
use crate::scalar::{inf_norm, Scalar};
use crate::tableau::ImexTableau;

pub type RhsFn<S> = Box<dyn Fn(&[S], f64, &mut [S]) + Send + Sync>;
pub type JacFn<S> = Box<dyn Fn(&[S], f64) -> DenseMatrix<S> + Send + Sync>;
pub type StateFn<S> = Box<dyn Fn(f64) -> Vec<S> + Send + Sync>;

/// The implicit part `f` of a decomposition, either a constant linear
/// operator (`f(y, t) = J·y`, stage matrix available) or a general
/// function with an optional exact Jacobian.
pub enum ImplicitPart<S: Scalar> {
    Linear(SparseMatrix<S>),
    Nonlinear { f: RhsFn<S>, jacobian: Option<JacFn<S>> },
}

/// An ODE split into an implicit part `f` and an explicit part `f̂`,
/// with optional grid structure and an optional exact solution sampler.
pub struct DecomposedSystem<S: Scalar> {
    name: String,
    dim: usize,
    implicit: ImplicitPart<S>,
    f_expl: RhsFn<S>,
    grid_perm: Option<GridPermutation>,
    exact: Option<StateFn<S>>,
    instance_id: u64,
}

fn next_instance_id() -> u64 {
    use core::sync::atomic::{AtomicU64, Ordering};
    static COUNTER: AtomicU64 = AtomicU64::new(1);
    COUNTER.fetch_add(1, Ordering::Relaxed)
}

impl<S: Scalar> DecomposedSystem<S> {
    pub fn new_linear(name: impl Into<String>, matrix: SparseMatrix<S>, f_expl: RhsFn<S>) -> Self {
        let dim = matrix.n();
        Self {
            name: name.into(),
            dim,
            implicit: ImplicitPart::Linear(matrix),
            f_expl,
            grid_perm: None,
            exact: None,
            instance_id: next_instance_id(),
        }
    }

    pub fn new_nonlinear(
        name: impl Into<String>,
        dim: usize,
        f: RhsFn<S>,
        jacobian: Option<JacFn<S>>,
        f_expl: RhsFn<S>,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            implicit: ImplicitPart::Nonlinear { f, jacobian },
            f_expl,
            grid_perm: None,
            exact: None,
            instance_id: next_instance_id(),
        }
    }

    pub fn with_grid_permutation(mut self, perm: GridPermutation) -> Self {
        self.grid_perm = Some(perm);
        self
    }

    pub fn with_exact_solution(mut self, exact: StateFn<S>) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Identity used to key per-filter stage-matrix caches.
    pub fn instance_id(&self) -> u64 {
        self.instance_id
    }

    pub fn f_impl_into(&self, y: &[S], t: f64, out: &mut [S]) {
        match &self.implicit {
            ImplicitPart::Linear(m) => m.matvec_into(y, out),
            ImplicitPart::Nonlinear { f, .. } => f(y, t, out),
        }
    }

    pub fn f_impl(&self, y: &[S], t: f64) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        self.f_impl_into(y, t, &mut out);
        out
    }

    pub fn f_expl_into(&self, y: &[S], t: f64, out: &mut [S]) {
        (self.f_expl)(y, t, out)
    }

    pub fn f_expl(&self, y: &[S], t: f64) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        self.f_expl_into(y, t, &mut out);
        out
    }

    /// Full right-hand side `f + f̂`.
    pub fn rhs_full(&self, y: &[S], t: f64) -> Vec<S> {
        let mut out = self.f_impl(y, t);
        let e = self.f_expl(y, t);
        for (o, x) in out.iter_mut().zip(&e) {
            *o = *o + *x;
        }
        out
    }

    /// The constant Jacobian of a linear implicit part, if there is one.
    pub fn implicit_matrix(&self) -> Option<&SparseMatrix<S>> {
        match &self.implicit {
            ImplicitPart::Linear(m) => Some(m),
            ImplicitPart::Nonlinear { .. } => None,
        }
    }

    /// Dense implicit-part Jacobian at `(y, t)`.
    pub fn jacobian_dense(&self, y: &[S], t: f64) -> Result<DenseMatrix<S>, FilterError> {
        match &self.implicit {
            ImplicitPart::Linear(m) => Ok(m.to_dense()),
            ImplicitPart::Nonlinear { jacobian: Some(j), .. } => Ok(j(y, t)),
            ImplicitPart::Nonlinear { jacobian: None, .. } => Err(FilterError::JacobianUnavailable),
        }
    }

    pub fn grid_permutation(&self) -> Option<&GridPermutation> {
        self.grid_perm.as_ref()
    }

    /// Exact solution sampled on the grid at time `t`, when known.
    pub fn exact_state(&self, t: f64) -> Option<Vec<S>> {
        self.exact.as_ref().map(|f| f(t))
    }
}

/// Output of a single step.
#[derive(Debug, Clone)]
pub struct StepResult<S> {
    pub y_next: Vec<S>,
    /// Total iterations reported by the filter across the implicit stages.
    pub filter_iterations: usize,
    /// Largest implicit-equation residual over the stages (only measured
    /// when requested through the stepper).
    pub max_stage_residual: Option<f64>,
}

/// One IMEX-RK step (ESDIRK implicit scheme). The solver is a [`Filter`]
/// used as a solver: unlike SIMEX, whatever residual it leaves in the
/// implicit equation goes straight into the local error.
pub fn imex_rk_step<S: Scalar>(
    tableau: &ImexTableau,
    sys: &DecomposedSystem<S>,
    solver: &dyn Filter<S>,
    y_n: &[S],
    t_n: f64,
    h: f64,
) -> Result<StepResult<S>, FilterError> {
    imex_rk_step_inner(tableau, sys, solver, y_n, t_n, h, false)
}

fn imex_rk_step_inner<S: Scalar>(
    tableau: &ImexTableau,
    sys: &DecomposedSystem<S>,
    solver: &dyn Filter<S>,
    y_n: &[S],
    t_n: f64,
    h: f64,
    record_residuals: bool,
) -> Result<StepResult<S>, FilterError> {
    let s = tableau.stages();
    let h_gamma = h * tableau.gamma();
    let k1 = sys.f_impl(y_n, t_n);
    let kh1 = sys.f_expl(y_n, t_n);
    let mut ks: Vec<Vec<S>> = Vec::with_capacity(s);
    let mut khs: Vec<Vec<S>> = Vec::with_capacity(s);
    ks.push(k1.clone());
    khs.push(kh1);
    let mut iterations = 0;
    let mut max_resid: Option<f64> = None;
    for i in 1..s {
        let t_i = t_n + tableau.c()[i] * h;
        let d = weighted_history(tableau, i, h, &ks, &khs);
        let r = add_scaled(&d, &k1, h_gamma);
        let ctx = StageContext { system: sys, y_n, k1: &k1, h_gamma, t_stage: t_i };
        let out = solver.apply(&r, &ctx)?;
        iterations += out.iterations;
        if record_residuals {
            let res = ctx.implicit_residual(&out.eta, &r);
            max_resid = Some(max_resid.map_or(res, |m| m.max(res)));
        }
        let xi: Vec<S> = y_n.iter().zip(&out.eta).map(|(y, e)| *y + *e).collect();
        // reuse the solver's final f-evaluation when it made one
        let k_i = match out.f_at_eta {
            Some(f) => f,
            None => sys.f_impl(&xi, t_i),
        };
        let kh_i = sys.f_expl(&xi, t_i);
        ks.push(k_i);
        khs.push(kh_i);
    }
    Ok(StepResult {
        y_next: combine(tableau, y_n, h, &ks, &khs),
        filter_iterations: iterations,
        max_stage_residual: max_resid,
    })
}

/// One SIMEX-RK step: the same filter instance is applied at every
/// implicit stage of the step, and the residual balanced decomposition
/// turns its output into exact stage slopes.
pub fn simex_rk_step<S: Scalar>(
    tableau: &ImexTableau,
    sys: &DecomposedSystem<S>,
    filter: &dyn Filter<S>,
    y_n: &[S],
    t_n: f64,
    h: f64,
) -> Result<StepResult<S>, FilterError> {
    simex_rk_step_stagewise(tableau, sys, y_n, t_n, h, false, |_| filter)
}

/// SIMEX-RK step with an externally chosen filter per stage index
/// (`i = 2..=s`, matching 1-based stage numbering).
///
/// `simex_rk_step` passes a constant chooser, which is the only correct
/// use for production stepping; a per-stage varying chooser exists for
/// harness experiments that deliberately break the method.
pub fn simex_rk_step_stagewise<'f, S: Scalar>(
    tableau: &ImexTableau,
    sys: &DecomposedSystem<S>,
    y_n: &[S],
    t_n: f64,
    h: f64,
    record_residuals: bool,
    mut filter_for_stage: impl FnMut(usize) -> &'f (dyn Filter<S> + 'f),
) -> Result<StepResult<S>, FilterError> {
    let s = tableau.stages();
    let h_gamma = h * tableau.gamma();
    let k1 = sys.f_impl(y_n, t_n);
    let kh1 = sys.f_expl(y_n, t_n);
    let mut ks: Vec<Vec<S>> = Vec::with_capacity(s);
    let mut khs: Vec<Vec<S>> = Vec::with_capacity(s);
    ks.push(k1.clone());
    khs.push(kh1);
    let mut iterations = 0;
    let mut max_resid: Option<f64> = None;
    for i in 1..s {
        let t_i = t_n + tableau.c()[i] * h;
        let d = weighted_history(tableau, i, h, &ks, &khs);
        let r = add_scaled(&d, &k1, h_gamma);
        let ctx = StageContext { system: sys, y_n, k1: &k1, h_gamma, t_stage: t_i };
        let filter = filter_for_stage(i + 1);
        let out = filter.apply(&r, &ctx)?;
        iterations += out.iterations;
        if record_residuals {
            let res = ctx.implicit_residual(&out.eta, &r);
            max_resid = Some(max_resid.map_or(res, |m| m.max(res)));
        }
        let (k_i, kh_i) = rbd_stage_slopes(sys, y_n, &out.eta, &d, h_gamma, t_i);
        ks.push(k_i);
        khs.push(kh_i);
    }
    Ok(StepResult {
        y_next: combine(tableau, y_n, h, &ks, &khs),
        filter_iterations: iterations,
        max_stage_residual: max_resid,
    })
}

/// SIMEX-RK step with filter selection: candidates from the sequence are
/// tried against the stabilization criterion at the first implicit stage
/// (`i = 2`); the accepted filter is then reused for `i = 3..=s`.
pub fn simex_rk_step_with_selection<S: Scalar>(
    tableau: &ImexTableau,
    sys: &DecomposedSystem<S>,
    sequence: &FilterSequence<S>,
    y_n: &[S],
    t_n: f64,
    h: f64,
) -> Result<(StepResult<S>, SelectionOutcome), FilterError> {
    let s = tableau.stages();
    let h_gamma = h * tableau.gamma();
    let k1 = sys.f_impl(y_n, t_n);
    let kh1 = sys.f_expl(y_n, t_n);
    let mut ks: Vec<Vec<S>> = Vec::with_capacity(s);
    let mut khs: Vec<Vec<S>> = Vec::with_capacity(s);
    ks.push(k1.clone());
    khs.push(kh1);
    let mut iterations = 0;
    let mut outcome = SelectionOutcome { index: 0, exhausted: false };
    for i in 1..s {
        let t_i = t_n + tableau.c()[i] * h;
        let d = weighted_history(tableau, i, h, &ks, &khs);
        let r = add_scaled(&d, &k1, h_gamma);
        let ctx = StageContext { system: sys, y_n, k1: &k1, h_gamma, t_stage: t_i };
        let eta = if i == 1 {
            let sel = select_filter(sequence, &r, &ctx)?;
            outcome = SelectionOutcome { index: sel.index, exhausted: sel.exhausted };
            iterations += sel.iterations;
            sel.eta
        } else {
            let out = sequence.filters()[outcome.index].apply(&r, &ctx)?;
            iterations += out.iterations;
            out.eta
        };
        let (k_i, kh_i) = rbd_stage_slopes(sys, y_n, &eta, &d, h_gamma, t_i);
        ks.push(k_i);
        khs.push(kh_i);
    }
    Ok((
        StepResult {
            y_next: combine(tableau, y_n, h, &ks, &khs),
            filter_iterations: iterations,
            max_stage_residual: None,
        },
        outcome,
    ))
}

/// Which sequence entry a selecting step settled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionOutcome {
    /// 0-based index into the sequence.
    pub index: usize,
    /// True when no candidate satisfied the criterion and the last one was
    /// used anyway.
    pub exhausted: bool,
}

/// `d = h Σ_{j<i} (a_ij k_j + â_ij k̂_j)` for stage `i` (0-based).
fn weighted_history<S: Scalar>(
    tableau: &ImexTableau,
    i: usize,
    h: f64,
    ks: &[Vec<S>],
    khs: &[Vec<S>],
) -> Vec<S> {
    let dim = ks[0].len();
    let mut d = vec![S::zero(); dim];
    for j in 0..i {
        let ai = S::from_re(h * tableau.a_impl(i, j));
        let ae = S::from_re(h * tableau.a_expl(i, j));
        for (x, (k, kh)) in d.iter_mut().zip(ks[j].iter().zip(&khs[j])) {
            *x = *x + ai * *k + ae * *kh;
        }
    }
    d
}

fn add_scaled<S: Scalar>(d: &[S], k1: &[S], h_gamma: f64) -> Vec<S> {
    let hg = S::from_re(h_gamma);
    d.iter().zip(k1).map(|(x, k)| *x + hg * *k).collect()
}

/// Residual-balanced stage slopes:
/// `kᵢ = (η − d)/(hγ)` and `k̂ᵢ = f̂(y_n + η) + f(y_n + η) − kᵢ`.
fn rbd_stage_slopes<S: Scalar>(
    sys: &DecomposedSystem<S>,
    y_n: &[S],
    eta: &[S],
    d: &[S],
    h_gamma: f64,
    t_i: f64,
) -> (Vec<S>, Vec<S>) {
    let inv = S::from_re(1.0 / h_gamma);
    let k_i: Vec<S> = eta.iter().zip(d).map(|(e, x)| (*e - *x) * inv).collect();
    let xi: Vec<S> = y_n.iter().zip(eta).map(|(y, e)| *y + *e).collect();
    let f = sys.f_impl(&xi, t_i);
    let fh = sys.f_expl(&xi, t_i);
    let kh_i: Vec<S> =
        fh.iter().zip(&f).zip(&k_i).map(|((a, b), k)| *a + *b - *k).collect();
    (k_i, kh_i)
}

/// `y_{n+1} = y_n + h Σ_j b_j (k_j + k̂_j)`.
fn combine<S: Scalar>(
    tableau: &ImexTableau,
    y_n: &[S],
    h: f64,
    ks: &[Vec<S>],
    khs: &[Vec<S>],
) -> Vec<S> {
    let mut y = y_n.to_vec();
    for j in 0..tableau.stages() {
        let w = S::from_re(h * tableau.b()[j]);
        for (yi, (k, kh)) in y.iter_mut().zip(ks[j].iter().zip(&khs[j])) {
            *yi = *yi + w * (*k + *kh);
        }
    }
    y
}

/// A single-step method driven by [`integrate`].
pub trait Stepper<S: Scalar> {
    fn step(
        &mut self,
        sys: &DecomposedSystem<S>,
        y: &[S],
        t: f64,
        h: f64,
    ) -> Result<StepResult<S>, FilterError>;
}

/// IMEX-RK with a fixed solver.
pub struct ImexStepper<'a, S: Scalar> {
    pub tableau: &'a ImexTableau,
    pub solver: &'a dyn Filter<S>,
    pub record_residuals: bool,
}

impl<'a, S: Scalar> ImexStepper<'a, S> {
    pub fn new(tableau: &'a ImexTableau, solver: &'a dyn Filter<S>) -> Self {
        Self { tableau, solver, record_residuals: false }
    }
}

impl<S: Scalar> Stepper<S> for ImexStepper<'_, S> {
    fn step(
        &mut self,
        sys: &DecomposedSystem<S>,
        y: &[S],
        t: f64,
        h: f64,
    ) -> Result<StepResult<S>, FilterError> {
        imex_rk_step_inner(self.tableau, sys, self.solver, y, t, h, self.record_residuals)
    }
}

/// SIMEX-RK with a fixed filter.
pub struct SimexStepper<'a, S: Scalar> {
    pub tableau: &'a ImexTableau,
    pub filter: &'a dyn Filter<S>,
    pub record_residuals: bool,
}

impl<'a, S: Scalar> SimexStepper<'a, S> {
    pub fn new(tableau: &'a ImexTableau, filter: &'a dyn Filter<S>) -> Self {
        Self { tableau, filter, record_residuals: false }
    }
}

impl<S: Scalar> Stepper<S> for SimexStepper<'_, S> {
    fn step(
        &mut self,
        sys: &DecomposedSystem<S>,
        y: &[S],
        t: f64,
        h: f64,
    ) -> Result<StepResult<S>, FilterError> {
        let f = self.filter;
        simex_rk_step_stagewise(self.tableau, sys, y, t, h, self.record_residuals, |_| f)
    }
}

/// SIMEX-RK choosing from a filter sequence at each step.
pub struct SelectingSimexStepper<'a, S: Scalar> {
    pub tableau: &'a ImexTableau,
    pub sequence: &'a FilterSequence<S>,
    pub last_selection: Option<SelectionOutcome>,
}

impl<'a, S: Scalar> SelectingSimexStepper<'a, S> {
    pub fn new(tableau: &'a ImexTableau, sequence: &'a FilterSequence<S>) -> Self {
        Self { tableau, sequence, last_selection: None }
    }
}

impl<S: Scalar> Stepper<S> for SelectingSimexStepper<'_, S> {
    fn step(
        &mut self,
        sys: &DecomposedSystem<S>,
        y: &[S],
        t: f64,
        h: f64,
    ) -> Result<StepResult<S>, FilterError> {
        let (res, sel) = simex_rk_step_with_selection(self.tableau, sys, self.sequence, y, t, h)?;
        self.last_selection = Some(sel);
        Ok(res)
    }
}

/// How a finished (or aborted) integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStatus {
    Completed,
    /// The guard threshold was exceeded while computing the given step
    /// (1-based step index).
    Unstable { step: usize },
    /// The stepper failed (singular matrix, Krylov breakdown, ...).
    SolverFailure { step: usize },
}

/// Which states to keep in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StorePolicy {
    All,
    FinalOnly,
}

#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    /// Abort with [`TraceStatus::Unstable`] when any solution component
    /// exceeds this magnitude.
    pub guard_threshold: f64,
    pub store: StorePolicy,
    pub record_residuals: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { guard_threshold: 1e3, store: StorePolicy::FinalOnly, record_residuals: false }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepDiagnostics {
    pub filter_iterations: usize,
    pub residual_inf: Option<f64>,
}

/// Record of a fixed-step integration.
#[derive(Debug, Clone)]
pub struct IntegrationTrace<S> {
    /// Times of the recorded steps, `t_n = t0 + n·h`, strictly increasing.
    pub times: Vec<f64>,
    /// States per [`StorePolicy`]: all of `y_0..y_n`, or just the last
    /// state reached.
    pub states: Vec<Vec<S>>,
    /// `‖y_n‖_∞` for every step taken, including the initial state.
    pub inf_norms: Vec<f64>,
    pub status: TraceStatus,
    /// Number of completed steps.
    pub step_count: usize,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl<S: Scalar> IntegrationTrace<S> {
    pub fn final_state(&self) -> &[S] {
        self.states.last().expect("trace always stores at least one state")
    }

    pub fn completed(&self) -> bool {
        matches!(self.status, TraceStatus::Completed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntegrateError {
    /// `(t_end − t0)/h` must be a positive integer for the fixed-step driver.
    NonIntegerStepCount { ratio: f64 },
    InvalidStep { h: f64 },
}

impl core::fmt::Display for IntegrateError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            IntegrateError::NonIntegerStepCount { ratio } => {
                write!(f, "(t_end - t0)/h = {ratio} is not a positive integer")
            }
            IntegrateError::InvalidStep { h } => write!(f, "invalid step size {h}"),
        }
    }
}

impl core::error::Error for IntegrateError {}

/// Fixed-step driver with an instability guard.
///
/// Steps from `t0` to `t_end` in exactly `(t_end − t0)/h` steps, recording
/// times as `t0 + n·h`. Aborts with status `Unstable` as soon as any
/// component magnitude exceeds `guard_threshold`, and with `SolverFailure`
/// if the stepper reports an error; both leave the offending step index in
/// the status.
pub fn integrate<S: Scalar, St: Stepper<S> + ?Sized>(
    stepper: &mut St,
    sys: &DecomposedSystem<S>,
    y0: &[S],
    t0: f64,
    t_end: f64,
    h: f64,
    opts: &IntegrateOptions,
) -> Result<IntegrationTrace<S>, IntegrateError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(IntegrateError::InvalidStep { h });
    }
    let ratio = (t_end - t0) / h;
    let n_steps = num_traits::Float::round(ratio);
    if n_steps < 1.0 || (ratio - n_steps).abs() > 1e-8 * n_steps.max(1.0) {
        return Err(IntegrateError::NonIntegerStepCount { ratio });
    }
    let n_steps = n_steps as usize;

    let mut trace = IntegrationTrace {
        times: vec![t0],
        states: Vec::new(),
        inf_norms: vec![inf_norm(y0)],
        status: TraceStatus::Completed,
        step_count: 0,
        diagnostics: Vec::new(),
    };
    let mut y = y0.to_vec();
    if matches!(opts.store, StorePolicy::All) {
        trace.states.push(y.clone());
    }
    for n in 0..n_steps {
        let t_n = t0 + (n as f64) * h;
        match stepper.step(sys, &y, t_n, h) {
            Ok(out) => {
                y = out.y_next;
                trace.diagnostics.push(StepDiagnostics {
                    filter_iterations: out.filter_iterations,
                    residual_inf: out.max_stage_residual,
                });
            }
            Err(_) => {
                trace.status = TraceStatus::SolverFailure { step: n + 1 };
                break;
            }
        }
        let norm = inf_norm(&y);
        trace.times.push(t0 + ((n + 1) as f64) * h);
        trace.inf_norms.push(norm);
        trace.step_count = n + 1;
        if matches!(opts.store, StorePolicy::All) {
            trace.states.push(y.clone());
        }
        if !norm.is_finite() || norm > opts.guard_threshold {
            trace.status = TraceStatus::Unstable { step: n + 1 };
            break;
        }
    }
    if matches!(opts.store, StorePolicy::FinalOnly) {
        trace.states.push(y);
    }
    Ok(trace)
}
