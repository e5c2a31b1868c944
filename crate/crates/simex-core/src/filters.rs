//! Implicit-step filters.
//!
//! A filter is a fixed-effort map `F(r, y_n, hγ; f(·,t)) → η` standing in
//! for the solver of the implicit stage equation
//!
//! ```text
//! η − hγ (f(y_n + η, t) − k₁) = r.
//! ```
//!
//! Neither convergence nor accuracy is required of a filter; `F(0) = 0`
//! is, and every filter here satisfies it exactly because the iterations
//! all start from `η⁽⁰⁾ = r`. Filters are stateless with respect to their
//! output: identical inputs give identical outputs. Stage-matrix
//! factorizations are memoized internally (keyed on the system instance
//! and `hγ`, which an ESDIRK tableau keeps fixed across the implicit
//! stages of a step), so a filter instance must not be shared across
//! threads — build one per worker.
//!
//! Catalog: `default` (identity), `jacobi(N)`, `gs(k)`/`gs(k,ω)` (SOR,
//! under-relaxed for ω < 1), `ats(m)` (alternate-direction tridiagonal),
//! `ilu(droptol)`, `cgs(p,droptol)` (ILU-preconditioned CGS), `newton(N)`,
//! and `exact`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use crate::dense::{DenseError, DenseMatrix};
use crate::integrator::DecomposedSystem;
use crate::linops::{
    cgs_solve, gs_sweep, ilu_factor, jacobi_sweep, AtsOperator, IluFactors, LinOpError,
    SparseMatrix,
};
use crate::scalar::{inf_norm, Scalar};

/// Everything that defines the implicit stage equation for one stage.
pub struct StageContext<'a, S: Scalar> {
    pub system: &'a DecomposedSystem<S>,
    pub y_n: &'a [S],
    /// `k₁ = f(y_n, t_n)`, evaluated once at the start of the step.
    pub k1: &'a [S],
    pub h_gamma: f64,
    /// Stage time `t_n + cᵢh`; the implicit part is frozen at this time.
    pub t_stage: f64,
}

impl<S: Scalar> StageContext<'_, S> {
    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// Stage matrix `H = I − hγ·J` of a linear implicit part.
    pub fn stage_matrix(&self) -> Result<SparseMatrix<S>, FilterError> {
        let j = self.system.implicit_matrix().ok_or(FilterError::StageMatrixUnavailable)?;
        Ok(j.identity_minus_scaled(S::from_re(self.h_gamma)))
    }

    /// Cache key: the stage matrix changes only with the system or `hγ`.
    fn cache_key(&self) -> (u64, u64) {
        (self.system.instance_id(), self.h_gamma.to_bits())
    }

    /// `‖η − hγ(f(y_n + η, t) − k₁) − r‖_∞`, the defect of the implicit
    /// stage equation at `η`.
    pub fn implicit_residual(&self, eta: &[S], r: &[S]) -> f64 {
        let xi: Vec<S> = self.y_n.iter().zip(eta).map(|(y, e)| *y + *e).collect();
        let f = self.system.f_impl(&xi, self.t_stage);
        let hg = S::from_re(self.h_gamma);
        let mut worst = 0.0f64;
        for i in 0..eta.len() {
            let defect = eta[i] - hg * (f[i] - self.k1[i]) - r[i];
            worst = worst.max(defect.abs());
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterError {
    /// The filter needs the stage matrix but the implicit part is not linear.
    StageMatrixUnavailable,
    /// The filter needs an exact Jacobian and the system supplies none.
    JacobianUnavailable,
    /// An alternate-direction filter needs a grid permutation.
    GridPermutationUnavailable,
    LinOp(LinOpError),
    Dense(DenseError),
    /// The exact filter ran out of iterations.
    NonConvergence { iterations: usize, residual: f64 },
}

impl From<LinOpError> for FilterError {
    fn from(e: LinOpError) -> Self {
        FilterError::LinOp(e)
    }
}

impl From<DenseError> for FilterError {
    fn from(e: DenseError) -> Self {
        FilterError::Dense(e)
    }
}

impl core::fmt::Display for FilterError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FilterError::StageMatrixUnavailable => {
                write!(f, "stage matrix unavailable (implicit part is not linear)")
            }
            FilterError::JacobianUnavailable => write!(f, "implicit Jacobian unavailable"),
            FilterError::GridPermutationUnavailable => {
                write!(f, "grid permutation unavailable (not a 2D grid problem)")
            }
            FilterError::LinOp(e) => write!(f, "{e}"),
            FilterError::Dense(e) => write!(f, "{e}"),
            FilterError::NonConvergence { iterations, residual } => {
                write!(f, "no convergence after {iterations} iterations (residual {residual:.3e})")
            }
        }
    }
}

impl core::error::Error for FilterError {}

/// Filter output: the approximate stage increment plus bookkeeping.
#[derive(Debug, Clone)]
pub struct FilterOutput<S> {
    pub eta: Vec<S>,
    /// `f(y_n + η, t)` when the filter already evaluated it (lets the
    /// IMEX stepper skip one implicit-part evaluation).
    pub f_at_eta: Option<Vec<S>>,
    /// Iterations spent, for diagnostics.
    pub iterations: usize,
}

impl<S> FilterOutput<S> {
    fn plain(eta: Vec<S>, iterations: usize) -> Self {
        Self { eta, f_at_eta: None, iterations }
    }
}

/// The implicit-step-filter interface.
pub trait Filter<S: Scalar> {
    fn name(&self) -> &str;

    /// True when the filter is a linear map of `r` (for a fixed context).
    fn is_linear(&self) -> bool;

    fn apply(&self, r: &[S], ctx: &StageContext<'_, S>) -> Result<FilterOutput<S>, FilterError>;

    /// `η` alone, when the bookkeeping is not needed.
    fn evaluate(&self, r: &[S], ctx: &StageContext<'_, S>) -> Result<Vec<S>, FilterError> {
        self.apply(r, ctx).map(|o| o.eta)
    }
}

pub type BoxedFilter<S> = Box<dyn Filter<S> + Send>;

// ---------------------------------------------------------------------------
// catalog
// ---------------------------------------------------------------------------

struct DefaultFilter;

impl<S: Scalar> Filter<S> for DefaultFilter {
    fn name(&self) -> &str {
        "default"
    }

    fn is_linear(&self) -> bool {
        true
    }

    fn apply(&self, r: &[S], _ctx: &StageContext<'_, S>) -> Result<FilterOutput<S>, FilterError> {
        Ok(FilterOutput::plain(r.to_vec(), 0))
    }
}

/// The identity filter `η = r`: no information about the implicit
/// equation is used at all.
pub fn default_filter<S: Scalar>() -> BoxedFilter<S> {
    Box::new(DefaultFilter)
}

struct StageMatrixCache<S, T> {
    cell: RefCell<Option<((u64, u64), T)>>,
    _marker: core::marker::PhantomData<S>,
}

impl<S: Scalar, T> StageMatrixCache<S, T> {
    fn new() -> Self {
        Self { cell: RefCell::new(None), _marker: core::marker::PhantomData }
    }

    /// Rebuild the cached value when the (system, hγ) key changes.
    fn get_or_build(
        &self,
        ctx: &StageContext<'_, S>,
        build: impl FnOnce() -> Result<T, FilterError>,
    ) -> Result<core::cell::Ref<'_, T>, FilterError> {
        let key = ctx.cache_key();
        {
            let cur = self.cell.borrow();
            let hit = matches!(cur.as_ref(), Some((k, _)) if *k == key);
            if !hit {
                drop(cur);
                let value = build()?;
                *self.cell.borrow_mut() = Some((key, value));
            }
        }
        Ok(core::cell::Ref::map(self.cell.borrow(), |o| &o.as_ref().unwrap().1))
    }
}

struct JacobiFilter<S: Scalar> {
    name: String,
    sweeps: usize,
    cache: StageMatrixCache<S, SparseMatrix<S>>,
}

impl<S: Scalar> Filter<S> for JacobiFilter<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn is_linear(&self) -> bool {
        true
    }

    fn apply(&self, r: &[S], ctx: &StageContext<'_, S>) -> Result<FilterOutput<S>, FilterError> {
        if self.sweeps == 0 {
            return Ok(FilterOutput::plain(r.to_vec(), 0));
        }
        let h = self.cache.get_or_build(ctx, || ctx.stage_matrix())?;
        let mut eta = r.to_vec();
        for _ in 0..self.sweeps {
            eta = jacobi_sweep(&h, r, &eta)?;
        }
        Ok(FilterOutput::plain(eta, self.sweeps))
    }
}

/// `N` Jacobi sweeps on the stage matrix, starting from `η⁽⁰⁾ = r`;
/// `N = 0` coincides with the default filter.
pub fn jacobi_filter<S: Scalar>(n: usize) -> BoxedFilter<S> {
    Box::new(JacobiFilter {
        name: format!("jacobi({n})"),
        sweeps: n,
        cache: StageMatrixCache::new(),
    })
}

struct GsFilter<S: Scalar> {
    name: String,
    sweeps: usize,
    omega: f64,
    cache: StageMatrixCache<S, SparseMatrix<S>>,
}

impl<S: Scalar> Filter<S> for GsFilter<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn is_linear(&self) -> bool {
        true
    }

    fn apply(&self, r: &[S], ctx: &StageContext<'_, S>) -> Result<FilterOutput<S>, FilterError> {
        if self.sweeps == 0 {
            return Ok(FilterOutput::plain(r.to_vec(), 0));
        }
        let h = self.cache.get_or_build(ctx, || ctx.stage_matrix())?;
        let mut eta = r.to_vec();
        for _ in 0..self.sweeps {
            eta = gs_sweep(&h, r, &eta, self.omega)?;
        }
        Ok(FilterOutput::plain(eta, self.sweeps))
    }
}

/// `k` forward Gauss-Seidel sweeps relaxed by `omega`, from `η⁽⁰⁾ = r`.
/// `omega = 1` is plain GS; `omega = 0.9` gives the successively-relaxed
/// variant.
pub fn gs_filter<S: Scalar>(k: usize, omega: f64) -> BoxedFilter<S> {
    assert!(omega > 0.0 && omega < 2.0, "relaxation must lie in (0, 2)");
    let name = if omega == 1.0 { format!("gs({k})") } else { format!("gs({k},{omega})") };
    Box::new(GsFilter { name, sweeps: k, omega, cache: StageMatrixCache::new() })
}

struct AtsFilter<S: Scalar> {
    name: String,
    iterations: usize,
    cache: StageMatrixCache<S, AtsOperator<S>>,
}

impl<S: Scalar> Filter<S> for AtsFilter<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn is_linear(&self) -> bool {
        true
    }

    fn apply(&self, r: &[S], ctx: &StageContext<'_, S>) -> Result<FilterOutput<S>, FilterError> {
        let op = self.cache.get_or_build(ctx, || {
            let perm =
                ctx.system.grid_permutation().ok_or(FilterError::GridPermutationUnavailable)?;
            Ok(AtsOperator::new(&ctx.stage_matrix()?, perm))
        })?;
        let mut eta = r.to_vec();
        for _ in 0..self.iterations {
            eta = op.iterate(r, &eta)?;
        }
        Ok(FilterOutput::plain(eta, self.iterations))
    }
}

/// `m ≥ 1` alternate-direction tridiagonal iterations from `η⁽⁰⁾ = r`.
pub fn ats_filter<S: Scalar>(m: usize) -> BoxedFilter<S> {
    assert!(m >= 1, "ats filter needs at least one iteration");
    Box::new(AtsFilter { name: format!("ats({m})"), iterations: m, cache: StageMatrixCache::new() })
}

struct IluFilter<S: Scalar> {
    name: String,
    droptol: f64,
    cache: StageMatrixCache<S, IluFactors<S>>,
}

impl<S: Scalar> Filter<S> for IluFilter<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn is_linear(&self) -> bool {
        true
    }

    fn apply(&self, r: &[S], ctx: &StageContext<'_, S>) -> Result<FilterOutput<S>, FilterError> {
        let f =
            self.cache.get_or_build(ctx, || Ok(ilu_factor(&ctx.stage_matrix()?, self.droptol)?))?;
        Ok(FilterOutput::plain(f.solve(r)?, 1))
    }
}

/// Incomplete-LU solve of the stage system; the factorization is computed
/// once per stage matrix and reused across stages and steps.
pub fn ilu_filter<S: Scalar>(droptol: f64) -> BoxedFilter<S> {
    Box::new(IluFilter { name: format!("ilu({droptol})"), droptol, cache: StageMatrixCache::new() })
}

struct CgsFilter<S: Scalar> {
    name: String,
    iterations: usize,
    droptol: f64,
    cache: StageMatrixCache<S, (SparseMatrix<S>, IluFactors<S>)>,
}

impl<S: Scalar> Filter<S> for CgsFilter<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn is_linear(&self) -> bool {
        // the CGS coefficients are rational functions of r
        false
    }

    fn apply(&self, r: &[S], ctx: &StageContext<'_, S>) -> Result<FilterOutput<S>, FilterError> {
        let pair = self.cache.get_or_build(ctx, || {
            let h = ctx.stage_matrix()?;
            let f = ilu_factor(&h, self.droptol)?;
            Ok((h, f))
        })?;
        let (h, f) = &*pair;
        let eta = cgs_solve(h, f, r, r, self.iterations)?;
        Ok(FilterOutput::plain(eta, self.iterations))
    }
}

/// Exactly `p` ILU-preconditioned CGS iterations, starting from `x₀ = r`.
pub fn cgs_filter<S: Scalar>(p: usize, droptol: f64) -> BoxedFilter<S> {
    assert!(p >= 1, "cgs filter needs at least one iteration");
    Box::new(CgsFilter {
        name: format!("cgs({p},{droptol})"),
        iterations: p,
        droptol,
        cache: StageMatrixCache::new(),
    })
}

struct NewtonFilter {
    name: String,
    iterations: usize,
}

impl<S: Scalar> Filter<S> for NewtonFilter {
    fn name(&self) -> &str {
        &self.name
    }

    fn is_linear(&self) -> bool {
        false
    }

    fn apply(&self, r: &[S], ctx: &StageContext<'_, S>) -> Result<FilterOutput<S>, FilterError> {
        let mut eta = r.to_vec();
        for _ in 0..self.iterations {
            eta = newton_update(&eta, r, ctx)?.0;
        }
        Ok(FilterOutput::plain(eta, self.iterations))
    }
}

/// One Newton update of the implicit equation at `eta`; returns the new
/// iterate, the defect norm at the old iterate, and `f(y_n + eta_old)`.
fn newton_update<S: Scalar>(
    eta: &[S],
    r: &[S],
    ctx: &StageContext<'_, S>,
) -> Result<(Vec<S>, f64, Vec<S>), FilterError> {
    let xi: Vec<S> = ctx.y_n.iter().zip(eta).map(|(y, e)| *y + *e).collect();
    let f = ctx.system.f_impl(&xi, ctx.t_stage);
    let hg = S::from_re(ctx.h_gamma);
    // g = H(eta) + hγk₁ − r with H(eta) = eta − hγ f(y_n + eta)
    let g: Vec<S> = (0..eta.len()).map(|i| eta[i] - hg * f[i] + hg * ctx.k1[i] - r[i]).collect();
    let defect = inf_norm(&g);
    let jac = ctx.system.jacobian_dense(&xi, ctx.t_stage)?;
    let m = DenseMatrix::identity(eta.len()).sub(&jac.scale(hg))?;
    let delta = m.solve(&g)?;
    let next: Vec<S> = eta.iter().zip(&delta).map(|(e, d)| *e - *d).collect();
    Ok((next, defect, f))
}

/// `N` Newton iterations on the implicit equation with exact Jacobians and
/// dense LU solves, from `η⁽⁰⁾ = r`; `N = 0` returns `r`.
pub fn newton_filter<S: Scalar>(n: usize) -> BoxedFilter<S> {
    Box::new(NewtonFilter { name: format!("newton({n})"), iterations: n })
}

struct ExactFilter<S: Scalar> {
    cache: StageMatrixCache<S, IluFactors<S>>,
}

const EXACT_REL_TOL: f64 = 1e-12;
const EXACT_MAX_ITERS: usize = 50;

impl<S: Scalar> Filter<S> for ExactFilter<S> {
    fn name(&self) -> &str {
        "exact"
    }

    fn is_linear(&self) -> bool {
        false
    }

    fn apply(&self, r: &[S], ctx: &StageContext<'_, S>) -> Result<FilterOutput<S>, FilterError> {
        if ctx.system.implicit_matrix().is_some() {
            // direct sparse solve: a zero drop tolerance makes the
            // incomplete factorization exact
            let f = self.cache.get_or_build(ctx, || Ok(ilu_factor(&ctx.stage_matrix()?, 0.0)?))?;
            return Ok(FilterOutput::plain(f.solve(r)?, 1));
        }
        let r_norm = inf_norm(r);
        if r_norm == 0.0 {
            return Ok(FilterOutput::plain(vec![S::zero(); r.len()], 0));
        }
        let tol = EXACT_REL_TOL * r_norm;
        let mut eta = r.to_vec();
        let mut iters = 0;
        loop {
            let (next, defect, f_at_eta) = newton_update(&eta, r, ctx)?;
            if defect <= tol {
                return Ok(FilterOutput { eta, f_at_eta: Some(f_at_eta), iterations: iters });
            }
            if iters >= EXACT_MAX_ITERS {
                return Err(FilterError::NonConvergence { iterations: iters, residual: defect });
            }
            eta = next;
            iters += 1;
        }
    }
}

/// Solves the implicit stage equation to a relative residual of 1e-12:
/// a direct sparse solve for linear implicit parts, Newton iteration
/// (capped at 50 iterations) otherwise.
pub fn exact_filter<S: Scalar>() -> BoxedFilter<S> {
    Box::new(ExactFilter { cache: StageMatrixCache::new() })
}

// ---------------------------------------------------------------------------
// diagnostics on linear filters
// ---------------------------------------------------------------------------

/// Materialize a linear filter as the matrix whose columns are `F(eᵢ)`.
pub fn filter_as_matrix<S: Scalar>(
    filter: &dyn Filter<S>,
    ctx: &StageContext<'_, S>,
) -> Result<DenseMatrix<S>, FilterError> {
    let n = ctx.dim();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![S::zero(); n];
        e[j] = S::one();
        cols.push(filter.evaluate(&e, ctx)?);
    }
    Ok(DenseMatrix::from_columns(&cols))
}

/// Both sides of the nonsingularity certificate
/// `‖F − (I − hγA)⁻¹‖ < ‖I − hγA‖⁻¹` in the induced 2-norm.
///
/// `lhs < rhs` certifies that the filter matrix is nonsingular; as
/// `hγ → 0` the test reduces to `‖F − I‖ < 1`.
pub fn nonsingularity_margin<S: Scalar>(
    f_mat: &DenseMatrix<S>,
    a: &DenseMatrix<S>,
    h_gamma: f64,
) -> Result<(f64, f64), FilterError> {
    let n = a.rows();
    let m = DenseMatrix::identity(n).sub(&a.scale(S::from_re(h_gamma)))?;
    let m_inv = m.inverse()?;
    let lhs = f_mat.sub(&m_inv)?.two_norm_est(300);
    let rhs = 1.0 / m.two_norm_est(300);
    Ok((lhs, rhs))
}

// ---------------------------------------------------------------------------
// filter sequences and the stabilization criterion
// ---------------------------------------------------------------------------

/// Accepts or rejects a candidate `η` for the pair `(r, ctx)`.
pub type StabilizationCriterion<S> = Box<dyn Fn(&[S], &[S], &StageContext<'_, S>) -> bool + Send>;

/// An ordered list of candidate filters with a stabilization criterion.
pub struct FilterSequence<S: Scalar> {
    filters: Vec<BoxedFilter<S>>,
    criterion: StabilizationCriterion<S>,
}

impl<S: Scalar> FilterSequence<S> {
    pub fn new(filters: Vec<BoxedFilter<S>>, criterion: StabilizationCriterion<S>) -> Self {
        assert!(!filters.is_empty(), "a filter sequence must not be empty");
        Self { filters, criterion }
    }

    /// Sequence accepting the first `η` whose implicit-equation residual is
    /// at most `tol·(1 + ‖r‖_∞)`.
    pub fn with_residual_criterion(filters: Vec<BoxedFilter<S>>, tol: f64) -> Self {
        Self::new(
            filters,
            Box::new(move |eta, r, ctx| ctx.implicit_residual(eta, r) <= tol * (1.0 + inf_norm(r))),
        )
    }

    pub fn filters(&self) -> &[BoxedFilter<S>] {
        &self.filters
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }
}

/// Result of evaluating a sequence against its criterion.
#[derive(Debug, Clone)]
pub struct Selection<S> {
    /// 0-based index of the accepted (or last) filter.
    pub index: usize,
    pub eta: Vec<S>,
    /// True when every candidate was rejected and the last one is returned.
    pub exhausted: bool,
    pub iterations: usize,
}

/// Evaluate `F⁽¹⁾, F⁽²⁾, …` in order until the stabilization criterion
/// accepts. Exhaustion is flagged, not fatal: the last filter's output is
/// returned.
pub fn select_filter<S: Scalar>(
    seq: &FilterSequence<S>,
    r: &[S],
    ctx: &StageContext<'_, S>,
) -> Result<Selection<S>, FilterError> {
    let mut iterations = 0;
    let last = seq.filters.len() - 1;
    for (m, filter) in seq.filters.iter().enumerate() {
        let out = filter.apply(r, ctx)?;
        iterations += out.iterations;
        if (seq.criterion)(&out.eta, r, ctx) {
            return Ok(Selection { index: m, eta: out.eta, exhausted: false, iterations });
        }
        if m == last {
            return Ok(Selection { index: m, eta: out.eta, exhausted: true, iterations });
        }
    }
    unreachable!("sequence is nonempty")
}

/// Parsed filter designation, shared by the CLI and the experiment
/// harness: `name` or `name(args)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterSpec {
    Default,
    Exact,
    Jacobi { n: usize },
    Gs { k: usize, omega: f64 },
    Ats { m: usize },
    Ilu { droptol: f64 },
    Cgs { p: usize, droptol: f64 },
    Newton { n: usize },
}

impl FilterSpec {
    /// Parse `default`, `exact`, `jacobi(3)`, `gs(5)`, `gs(5,0.9)`,
    /// `sr(5)` (alias for `gs(5,0.9)`), `ats(3)`, `ilu(0.02)`,
    /// `cgs(2,0.02)` (`cgs(2)` defaults droptol to 0.02), `newton(2)`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let text = text.trim();
        let (head, args) = match text.find('(') {
            Some(p) => {
                let inner = text[p..]
                    .strip_prefix('(')
                    .and_then(|s| s.strip_suffix(')'))
                    .ok_or_else(|| format!("malformed filter `{text}`"))?;
                let args: Vec<&str> = if inner.trim().is_empty() {
                    Vec::new()
                } else {
                    inner.split(',').map(str::trim).collect()
                };
                (&text[..p], args)
            }
            None => (text, Vec::new()),
        };
        let arg_usize = |i: usize| -> Result<usize, String> {
            args.get(i)
                .ok_or_else(|| format!("filter `{head}` needs argument {}", i + 1))?
                .parse::<usize>()
                .map_err(|e| format!("filter `{text}`: {e}"))
        };
        let arg_f64 = |i: usize| -> Result<f64, String> {
            args.get(i)
                .ok_or_else(|| format!("filter `{head}` needs argument {}", i + 1))?
                .parse::<f64>()
                .map_err(|e| format!("filter `{text}`: {e}"))
        };
        let want = |n: usize| -> Result<(), String> {
            if args.len() == n {
                Ok(())
            } else {
                Err(format!("filter `{text}` takes {n} argument(s), got {}", args.len()))
            }
        };
        match head {
            "default" | "identity" => {
                want(0)?;
                Ok(FilterSpec::Default)
            }
            "exact" => {
                want(0)?;
                Ok(FilterSpec::Exact)
            }
            "jacobi" => {
                want(1)?;
                Ok(FilterSpec::Jacobi { n: arg_usize(0)? })
            }
            "gs" => {
                if args.len() == 1 {
                    Ok(FilterSpec::Gs { k: arg_usize(0)?, omega: 1.0 })
                } else {
                    want(2)?;
                    Ok(FilterSpec::Gs { k: arg_usize(0)?, omega: arg_f64(1)? })
                }
            }
            "sr" => {
                want(1)?;
                Ok(FilterSpec::Gs { k: arg_usize(0)?, omega: 0.9 })
            }
            "ats" => {
                want(1)?;
                Ok(FilterSpec::Ats { m: arg_usize(0)? })
            }
            "ilu" => {
                want(1)?;
                Ok(FilterSpec::Ilu { droptol: arg_f64(0)? })
            }
            "cgs" => {
                if args.len() == 1 {
                    Ok(FilterSpec::Cgs { p: arg_usize(0)?, droptol: 0.02 })
                } else {
                    want(2)?;
                    Ok(FilterSpec::Cgs { p: arg_usize(0)?, droptol: arg_f64(1)? })
                }
            }
            "newton" => {
                want(1)?;
                Ok(FilterSpec::Newton { n: arg_usize(0)? })
            }
            other => Err(format!("unknown filter `{other}`")),
        }
    }

    /// Instantiate over the chosen scalar field.
    pub fn build<S: Scalar>(&self) -> BoxedFilter<S> {
        match *self {
            FilterSpec::Default => default_filter(),
            FilterSpec::Exact => exact_filter(),
            FilterSpec::Jacobi { n } => jacobi_filter(n),
            FilterSpec::Gs { k, omega } => gs_filter(k, omega),
            FilterSpec::Ats { m } => ats_filter(m),
            FilterSpec::Ilu { droptol } => ilu_filter(droptol),
            FilterSpec::Cgs { p, droptol } => cgs_filter(p, droptol),
            FilterSpec::Newton { n } => newton_filter(n),
        }
    }

    pub fn to_name(&self) -> String {
        format!("{self}")
    }
}

impl core::fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FilterSpec::Default => write!(f, "default"),
            FilterSpec::Exact => write!(f, "exact"),
            FilterSpec::Jacobi { n } => write!(f, "jacobi({n})"),
            FilterSpec::Gs { k, omega } if *omega == 1.0 => write!(f, "gs({k})"),
            FilterSpec::Gs { k, omega } => write!(f, "gs({k},{omega})"),
            FilterSpec::Ats { m } => write!(f, "ats({m})"),
            FilterSpec::Ilu { droptol } => write!(f, "ilu({droptol})"),
            FilterSpec::Cgs { p, droptol } => write!(f, "cgs({p},{droptol})"),
            FilterSpec::Newton { n } => write!(f, "newton({n})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{adv_reac_diff_1d, forced_heat_1d, model_2d};
    use crate::Complex64;
    use proptest::prelude::*;

    fn heat_state(scale: f64) -> Vec<f64> {
        (0..9).map(|i| scale * ((i as f64) * 0.9 + 0.3).sin()).collect()
    }

    // independent dense Jacobi replay (plain loops, no sparse code)
    fn dense_jacobi_replay(
        hd: &DenseMatrix<f64>,
        r: &[f64],
        sweeps: usize,
    ) -> Vec<f64> {
        let n = r.len();
        let mut x = r.to_vec();
        for _ in 0..sweeps {
            let mut next = vec![0.0; n];
            for i in 0..n {
                let mut acc = r[i];
                for j in 0..n {
                    if j != i {
                        acc -= hd[(i, j)] * x[j];
                    }
                }
                next[i] = acc / hd[(i, i)];
            }
            x = next;
        }
        x
    }

    #[test]
    fn default_filter_is_identity() {
        let sys = forced_heat_1d(10);
        let y_n = heat_state(1.0);
        let k1 = sys.f_impl(&y_n, 0.0);
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma: 0.05, t_stage: 0.1 };
        let f = default_filter::<f64>();
        let r = vec![1.0, 2.0, 0.0, -1.0, 0.5, 3.0, -2.0, 0.25, 1.5];
        assert_eq!(f.evaluate(&r, &ctx).unwrap(), r);
        assert_eq!(f.evaluate(&[0.0; 9], &ctx).unwrap(), vec![0.0; 9]);
    }

    #[test]
    fn jacobi_zero_sweeps_is_default() {
        let sys = forced_heat_1d(10);
        let y_n = heat_state(0.7);
        let k1 = sys.f_impl(&y_n, 0.0);
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma: 0.01, t_stage: 0.0 };
        let f = jacobi_filter::<f64>(0);
        let r = heat_state(2.0);
        assert_eq!(f.evaluate(&r, &ctx).unwrap(), r);
    }

    #[test]
    fn jacobi_two_sweeps_match_dense_oracle() {
        // h = 0.05 with the ARK548 gamma
        let sys = forced_heat_1d(10);
        let y_n = heat_state(1.0);
        let k1 = sys.f_impl(&y_n, 0.0);
        let h_gamma = 0.05 * (41.0 / 200.0);
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma, t_stage: 0.02 };
        let hd = ctx.stage_matrix().unwrap().to_dense();
        let r = heat_state(3.0);
        let got = jacobi_filter::<f64>(2).evaluate(&r, &ctx).unwrap();
        let want = dense_jacobi_replay(&hd, &r, 2);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn gs_filter_matches_hand_iterated_relaxed_sweeps() {
        // 4x4 stage matrix via a small heat system; dense SOR replay
        let sys = forced_heat_1d(5);
        let y_n = vec![0.3, -0.2, 0.5, 0.1];
        let k1 = sys.f_impl(&y_n, 0.0);
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma: 0.02, t_stage: 0.0 };
        let hd = ctx.stage_matrix().unwrap().to_dense();
        let r = vec![1.0, -2.0, 0.5, 0.25];
        let got = gs_filter::<f64>(5, 0.9).evaluate(&r, &ctx).unwrap();
        let mut x = r.clone();
        for _ in 0..5 {
            for i in 0..4 {
                let mut acc = r[i];
                for j in 0..4 {
                    if j != i {
                        acc -= hd[(i, j)] * x[j];
                    }
                }
                x[i] += 0.9 * (acc / hd[(i, i)] - x[i]);
            }
        }
        for (a, b) in got.iter().zip(&x) {
            assert!((a - b).abs() < 1e-14);
        }
        // k = 0 keeps r
        assert_eq!(gs_filter::<f64>(0, 1.0).evaluate(&r, &ctx).unwrap(), r);
    }

    #[test]
    fn ats_filter_is_exact_on_1d_problems() {
        let sys = forced_heat_1d(10);
        let y_n = heat_state(1.0);
        let k1 = sys.f_impl(&y_n, 0.0);
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma: 0.1, t_stage: 0.0 };
        let r = heat_state(2.0);
        let eta = ats_filter::<f64>(1).evaluate(&r, &ctx).unwrap();
        assert!(ctx.implicit_residual(&eta, &r) < 1e-12);
        assert_eq!(ats_filter::<f64>(1).evaluate(&[0.0; 9], &ctx).unwrap(), vec![0.0; 9]);
    }

    #[test]
    fn ats_more_iterations_reduce_model_residual() {
        let sys = model_2d(Complex64::new(-10.0, 0.0), 50);
        let dim = sys.dim();
        let y_n: Vec<Complex64> =
            (0..dim).map(|i| Complex64::new(((i as f64) * 0.13).sin(), 0.0)).collect();
        let k1 = sys.f_impl(&y_n, 0.0);
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma: 0.5, t_stage: 0.0 };
        let r: Vec<Complex64> =
            (0..dim).map(|i| Complex64::new(((i as f64) * 0.37).cos(), 0.0)).collect();
        let e1 = ats_filter::<Complex64>(1).evaluate(&r, &ctx).unwrap();
        let e3 = ats_filter::<Complex64>(3).evaluate(&r, &ctx).unwrap();
        let r1 = ctx.implicit_residual(&e1, &r);
        let r3 = ctx.implicit_residual(&e3, &r);
        assert!(r3 < r1, "ats(3) residual {r3} vs ats(1) {r1}");
    }

    #[test]
    fn ilu_zero_droptol_is_exact_stage_solve() {
        let sys = forced_heat_1d(10);
        let y_n = heat_state(1.0);
        let k1 = sys.f_impl(&y_n, 0.0);
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma: 0.05, t_stage: 0.0 };
        let r = heat_state(-1.3);
        let eta = ilu_filter::<f64>(0.0).evaluate(&r, &ctx).unwrap();
        assert!(ctx.implicit_residual(&eta, &r) < 1e-12);
    }

    #[test]
    fn ilu_beats_gs5_on_stiff_model() {
        // n = 50 model at z = -100
        let sys = model_2d(Complex64::new(-100.0, 0.0), 50);
        let dim = sys.dim();
        let y_n: Vec<Complex64> =
            (0..dim).map(|i| Complex64::new(((i as f64) * 0.1).sin(), 0.0)).collect();
        let k1 = sys.f_impl(&y_n, 0.0);
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma: 0.25, t_stage: 0.0 };
        let r: Vec<Complex64> =
            (0..dim).map(|i| Complex64::new(((i as f64) * 0.21).cos(), 0.0)).collect();
        let e_ilu = ilu_filter::<Complex64>(0.02).evaluate(&r, &ctx).unwrap();
        let e_gs = gs_filter::<Complex64>(5, 1.0).evaluate(&r, &ctx).unwrap();
        let r_ilu = ctx.implicit_residual(&e_ilu, &r);
        let r_gs = ctx.implicit_residual(&e_gs, &r);
        assert!(r_ilu < r_gs, "ilu residual {r_ilu} vs gs(5) {r_gs}");
    }

    #[test]
    fn cgs_filter_with_enough_iterations_matches_dense_solve() {
        // 16-dim stage system (heat on a 17-interval grid)
        let sys = forced_heat_1d(17);
        let y_n: Vec<f64> = (0..16).map(|i| ((i as f64) * 0.4).sin()).collect();
        let k1 = sys.f_impl(&y_n, 0.0);
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma: 0.03, t_stage: 0.0 };
        let r: Vec<f64> = (0..16).map(|i| ((i as f64) * 0.9).cos()).collect();
        let eta = cgs_filter::<f64>(16, 0.0).evaluate(&r, &ctx).unwrap();
        let dense = ctx.stage_matrix().unwrap().to_dense().solve(&r).unwrap();
        for (a, b) in eta.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-8);
        }
        assert_eq!(
            cgs_filter::<f64>(2, 0.02).evaluate(&[0.0; 16], &ctx).unwrap(),
            vec![0.0; 16]
        );
    }

    #[test]
    fn newton_zero_iterations_returns_r_and_linear_newton_is_exact() {
        let sys = forced_heat_1d(10);
        let y_n = heat_state(0.5);
        let k1 = sys.f_impl(&y_n, 0.0);
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma: 0.02, t_stage: 0.0 };
        let r = heat_state(1.1);
        assert_eq!(newton_filter::<f64>(0).evaluate(&r, &ctx).unwrap(), r);
        // one Newton step solves a linear implicit equation exactly
        let eta = newton_filter::<f64>(1).evaluate(&r, &ctx).unwrap();
        assert!(ctx.implicit_residual(&eta, &r) < 1e-12);
    }

    #[test]
    fn newton_two_iterations_match_dense_replay() {
        let sys = adv_reac_diff_1d(10);
        let y_n = heat_state(0.8);
        let t_n = 0.3;
        let k1 = sys.f_impl(&y_n, t_n);
        let h_gamma = 0.05 * (41.0 / 200.0);
        let t_stage = t_n + 0.02;
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma, t_stage };
        let r = heat_state(0.4);
        let got = newton_filter::<f64>(2).evaluate(&r, &ctx).unwrap();

        // independent replay: naive Gauss elimination on the dense Newton
        // system, Jacobian taken from the system
        let solve = |m: &DenseMatrix<f64>, b: &[f64]| -> Vec<f64> {
            let n = b.len();
            let mut a = vec![vec![0.0; n + 1]; n];
            for i in 0..n {
                for j in 0..n {
                    a[i][j] = m[(i, j)];
                }
                a[i][n] = b[i];
            }
            for k in 0..n {
                let p = (k..n).max_by(|&x, &y| {
                    a[x][k].abs().partial_cmp(&a[y][k].abs()).unwrap()
                }).unwrap();
                a.swap(k, p);
                for i in k + 1..n {
                    let f = a[i][k] / a[k][k];
                    for j in k..=n {
                        a[i][j] -= f * a[k][j];
                    }
                }
            }
            let mut x = vec![0.0; n];
            for i in (0..n).rev() {
                let mut acc = a[i][n];
                for j in i + 1..n {
                    acc -= a[i][j] * x[j];
                }
                x[i] = acc / a[i][i];
            }
            x
        };
        let mut eta = r.clone();
        for _ in 0..2 {
            let xi: Vec<f64> = y_n.iter().zip(&eta).map(|(a, b)| a + b).collect();
            let f = sys.f_impl(&xi, t_stage);
            let g: Vec<f64> = (0..9)
                .map(|i| eta[i] - h_gamma * f[i] + h_gamma * k1[i] - r[i])
                .collect();
            let jac = sys.jacobian_dense(&xi, t_stage).unwrap();
            let m = DenseMatrix::from_fn(9, 9, |i, j| {
                (if i == j { 1.0 } else { 0.0 }) - h_gamma * jac[(i, j)]
            });
            let delta = solve(&m, &g);
            for i in 0..9 {
                eta[i] -= delta[i];
            }
        }
        for (a, b) in got.iter().zip(&eta) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_filter_solves_scalar_linear_equation() {
        // y' = a y, all implicit: eta = r / (1 - h*gamma*a)
        use crate::linops::SparseMatrix;
        let a = -3.0;
        let m = SparseMatrix::from_triplets(1, &[(0, 0, a)]);
        let f_expl = Box::new(|_y: &[f64], _t: f64, out: &mut [f64]| out[0] = 0.0);
        let sys = DecomposedSystem::new_linear("scalar", m, f_expl);
        let y_n = [2.0];
        let k1 = sys.f_impl(&y_n, 0.0);
        let h_gamma = 0.05;
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma, t_stage: 0.1 };
        let r = [0.7];
        let eta = exact_filter::<f64>().evaluate(&r, &ctx).unwrap();
        assert!((eta[0] - 0.7 / (1.0 - h_gamma * a)).abs() < 1e-14);
        let zero = exact_filter::<f64>().evaluate(&[0.0], &ctx).unwrap();
        assert_eq!(zero, vec![0.0]);
    }

    #[test]
    fn exact_filter_drives_nonlinear_residual_to_tolerance() {
        let sys = adv_reac_diff_1d(10);
        let y_n = heat_state(0.9);
        let k1 = sys.f_impl(&y_n, 0.0);
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma: 0.01, t_stage: 0.05 };
        let r = heat_state(0.6);
        let out = exact_filter::<f64>().apply(&r, &ctx).unwrap();
        assert!(ctx.implicit_residual(&out.eta, &r) <= 1e-12 * inf_norm(&r));
        // the converged f-evaluation is returned for reuse
        let xi: Vec<f64> = y_n.iter().zip(&out.eta).map(|(a, b)| a + b).collect();
        let f = sys.f_impl(&xi, ctx.t_stage);
        for (a, b) in out.f_at_eta.unwrap().iter().zip(&f) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn filter_as_matrix_default_is_identity() {
        let sys = forced_heat_1d(10);
        let y_n = heat_state(1.0);
        let k1 = sys.f_impl(&y_n, 0.0);
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma: 0.05, t_stage: 0.0 };
        let m = filter_as_matrix(default_filter::<f64>().as_ref(), &ctx).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(m[(i, j)], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn filter_as_matrix_jacobi1_matches_recurrence_columns() {
        let sys = forced_heat_1d(10);
        let y_n = heat_state(1.0);
        let k1 = sys.f_impl(&y_n, 0.0);
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma: 0.05, t_stage: 0.0 };
        let hd = ctx.stage_matrix().unwrap().to_dense();
        let m = filter_as_matrix(jacobi_filter::<f64>(1).as_ref(), &ctx).unwrap();
        for j in 0..9 {
            let mut e = vec![0.0; 9];
            e[j] = 1.0;
            let want = dense_jacobi_replay(&hd, &e, 1);
            for i in 0..9 {
                assert!((m[(i, j)] - want[i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn linear_filters_superpose() {
        let sys = forced_heat_1d(10);
        let y_n = heat_state(1.0);
        let k1 = sys.f_impl(&y_n, 0.0);
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma: 0.07, t_stage: 0.0 };
        let r1 = heat_state(1.7);
        let r2 = heat_state(-0.6);
        let alpha = 1.37;
        for filter in [
            jacobi_filter::<f64>(2),
            gs_filter::<f64>(3, 0.9),
            ats_filter::<f64>(2),
            ilu_filter::<f64>(0.02),
        ] {
            assert!(filter.is_linear());
            let mixed: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| alpha * a + b).collect();
            let fm = filter.evaluate(&mixed, &ctx).unwrap();
            let f1 = filter.evaluate(&r1, &ctx).unwrap();
            let f2 = filter.evaluate(&r2, &ctx).unwrap();
            for i in 0..9 {
                assert!(
                    (fm[i] - (alpha * f1[i] + f2[i])).abs() < 1e-12,
                    "{} not linear",
                    filter.name()
                );
            }
        }
    }

    #[test]
    fn nonsingularity_margin_examples() {
        let sys = forced_heat_1d(10);
        let y_n = heat_state(1.0);
        let k1 = sys.f_impl(&y_n, 0.0);
        let h_gamma = 0.05 * (41.0 / 200.0);
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma, t_stage: 0.0 };
        let a = sys.implicit_matrix().unwrap().to_dense();

        // exact inverse: lhs = 0 < rhs
        let m = DenseMatrix::<f64>::identity(9).sub(&a.scale(h_gamma)).unwrap();
        let (lhs, rhs) = nonsingularity_margin(&m.inverse().unwrap(), &a, h_gamma).unwrap();
        assert!(lhs < 1e-10 && rhs > 0.0);

        // h -> 0: the test reduces to ||F - I|| < 1; the default filter
        // has lhs = 0 and rhs = 1
        let f_id = filter_as_matrix(default_filter::<f64>().as_ref(), &ctx).unwrap();
        let (lhs, rhs) = nonsingularity_margin(&f_id, &a, 0.0).unwrap();
        assert!(lhs < 1e-12);
        assert!((rhs - 1.0).abs() < 1e-12);

        // jacobi(2) on the heat stage matrix at h = 0.05 is certified and
        // numerically nonsingular
        let fj = filter_as_matrix(jacobi_filter::<f64>(2).as_ref(), &ctx).unwrap();
        let (lhs, rhs) = nonsingularity_margin(&fj, &a, h_gamma).unwrap();
        assert!(lhs < rhs, "not certified: {lhs} >= {rhs}");
        let sigma_min = 1.0 / fj.inverse().unwrap().two_norm_est(300);
        assert!(sigma_min > 1e-8);
    }

    #[test]
    fn select_filter_behaviour() {
        let sys = forced_heat_1d(10);
        let y_n = heat_state(1.0);
        let k1 = sys.f_impl(&y_n, 0.0);
        // stiff stage: large h*gamma
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma: 0.5, t_stage: 0.0 };
        let r = heat_state(1.0);

        let seq = FilterSequence::new(
            vec![jacobi_filter::<f64>(1), exact_filter::<f64>()],
            Box::new(|_, _, _| true),
        );
        let sel = select_filter(&seq, &r, &ctx).unwrap();
        assert_eq!(sel.index, 0);
        assert!(!sel.exhausted);

        let seq = FilterSequence::with_residual_criterion(
            vec![jacobi_filter::<f64>(1), exact_filter::<f64>()],
            1e-10,
        );
        let sel = select_filter(&seq, &r, &ctx).unwrap();
        assert_eq!(sel.index, 1, "stiff stage needs the exact filter");

        // r = 0 is accepted by the first filter of any sequence
        let sel = select_filter(&seq, &[0.0; 9], &ctx).unwrap();
        assert_eq!(sel.index, 0);
        assert_eq!(sel.eta, vec![0.0; 9]);

        // exhaustion: impossible criterion flags but still returns
        let seq = FilterSequence::new(
            vec![jacobi_filter::<f64>(1), jacobi_filter::<f64>(2)],
            Box::new(|_, _, _| false),
        );
        let sel = select_filter(&seq, &r, &ctx).unwrap();
        assert_eq!(sel.index, 1);
        assert!(sel.exhausted);
    }

    #[test]
    fn iterative_filters_converge_to_exact_on_diagonally_dominant_stage() {
        let sys = forced_heat_1d(10);
        let y_n = heat_state(1.0);
        let k1 = sys.f_impl(&y_n, 0.0);
        let ctx = StageContext { system: &sys, y_n: &y_n, k1: &k1, h_gamma: 0.05, t_stage: 0.0 };
        let r = heat_state(1.9);
        for filter in [
            jacobi_filter::<f64>(200),
            gs_filter::<f64>(200, 1.0),
            cgs_filter::<f64>(200, 0.02),
            newton_filter::<f64>(10),
        ] {
            let eta = filter.evaluate(&r, &ctx).unwrap();
            let resid = ctx.implicit_residual(&eta, &r);
            assert!(resid < 1e-10, "{}: residual {resid}", filter.name());
        }
    }

    #[test]
    fn filter_spec_round_trip_and_build() {
        for (text, canon) in [
            ("default", "default"),
            ("exact", "exact"),
            ("jacobi(3)", "jacobi(3)"),
            ("gs(5)", "gs(5)"),
            ("gs(5,0.9)", "gs(5,0.9)"),
            ("sr(5)", "gs(5,0.9)"),
            ("ats(3)", "ats(3)"),
            ("ilu(0.02)", "ilu(0.02)"),
            ("cgs(2,0.02)", "cgs(2,0.02)"),
            ("cgs(2)", "cgs(2,0.02)"),
            ("newton(2)", "newton(2)"),
        ] {
            let spec = FilterSpec::parse(text).unwrap();
            assert_eq!(spec.to_name(), canon);
            // canonical names re-parse to the same spec
            assert_eq!(FilterSpec::parse(&spec.to_name()).unwrap(), spec);
            let built = spec.build::<f64>();
            assert_eq!(built.name(), canon);
        }
        assert!(FilterSpec::parse("bogus(1)").is_err());
        assert!(FilterSpec::parse("gs(").is_err());
        assert!(FilterSpec::parse("jacobi(x)").is_err());
    }

    proptest! {
        #[test]
        fn all_filters_map_zero_to_zero(
            scale in -2.0f64..2.0,
            h in 1e-4f64..0.2,
            t in 0.0f64..1.0,
        ) {
            let sys = forced_heat_1d(10);
            let y_n = heat_state(scale);
            let k1 = sys.f_impl(&y_n, 0.0);
            let ctx = StageContext {
                system: &sys, y_n: &y_n, k1: &k1,
                h_gamma: h * 0.25, t_stage: t,
            };
            let zero = vec![0.0; 9];
            for filter in [
                default_filter::<f64>(),
                jacobi_filter::<f64>(2),
                gs_filter::<f64>(5, 0.9),
                ats_filter::<f64>(1),
                ilu_filter::<f64>(0.02),
                cgs_filter::<f64>(2, 0.02),
                newton_filter::<f64>(2),
                exact_filter::<f64>(),
            ] {
                let eta = filter.evaluate(&zero, &ctx).unwrap();
                prop_assert!(inf_norm(&eta) == 0.0, "{} moved zero", filter.name());
            }
        }

        #[test]
        fn filters_are_deterministic(seed_val in 0.1f64..3.0) {
            let sys = forced_heat_1d(10);
            let y_n = heat_state(seed_val);
            let k1 = sys.f_impl(&y_n, 0.0);
            let ctx = StageContext {
                system: &sys, y_n: &y_n, k1: &k1, h_gamma: 0.0125, t_stage: 0.25,
            };
            let r = heat_state(seed_val * 1.7);
            for filter in [
                jacobi_filter::<f64>(3),
                gs_filter::<f64>(5, 1.0),
                ilu_filter::<f64>(0.02),
                cgs_filter::<f64>(2, 0.02),
                newton_filter::<f64>(1),
            ] {
                let a = filter.evaluate(&r, &ctx).unwrap();
                let b = filter.evaluate(&r, &ctx).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }
}
