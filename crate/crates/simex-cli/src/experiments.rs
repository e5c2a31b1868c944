//! The experiment commands.
//!
//! Each command takes a [`RunConfig`], fills command-specific defaults,
//! fans independent cells out over a rayon pool, and returns structured
//! records; CSV and summary emission lives in [`crate::report`]. Results
//! are assembled in input order, so serial and parallel runs produce
//! identical output.

use std::time::Instant;

use anyhow::{anyhow, bail, Result};
use rayon::prelude::*;

use simex_core::filters::{exact_filter, BoxedFilter, FilterSpec};
use simex_core::integrator::{
    integrate, simex_rk_step_stagewise, DecomposedSystem, ImexStepper, IntegrateOptions,
    IntegrationTrace, SimexStepper, StepResult, Stepper, StorePolicy, TraceStatus,
};
use simex_core::linops::ilu_factor;
use simex_core::problems::{adv_diff_2d, adv_reac_diff_1d, discrete_l2_norm, forced_heat_1d};
use simex_core::scalar::inf_norm;
use simex_core::stability::{
    amplification, assemble_region_map, axis_scan, mixed_seed, FilterFactory, RegionMap, ScanAxis,
    ScanError,
};
use simex_core::tableau::{all_tableaus, by_name, order_conditions_residual, validate, ImexTableau};
use simex_core::Complex64;

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Imex,
    Simex,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Imex => "imex",
            Method::Simex => "simex",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        match s {
            "imex" => Ok(Method::Imex),
            "simex" => Ok(Method::Simex),
            other => Err(anyhow!("unknown method `{other}`")),
        }
    }
}

fn methods_from(cfg: &RunConfig) -> Result<Vec<Method>> {
    Ok(match cfg.method.as_str() {
        "both" => vec![Method::Simex, Method::Imex],
        one => vec![Method::parse(one)?],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Unstable,
    SolverFailure,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Unstable => "unstable",
            RunStatus::SolverFailure => "solver_failure",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "completed" => Ok(RunStatus::Completed),
            "unstable" => Ok(RunStatus::Unstable),
            "solver_failure" => Ok(RunStatus::SolverFailure),
            other => Err(anyhow!("unknown status `{other}`")),
        }
    }

    fn from_trace<S: simex_core::Scalar>(trace: &IntegrationTrace<S>) -> Self {
        match trace.status {
            TraceStatus::Completed => RunStatus::Completed,
            TraceStatus::Unstable { .. } => RunStatus::Unstable,
            TraceStatus::SolverFailure { .. } => RunStatus::SolverFailure,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergencePoint {
    pub h: f64,
    /// Error at `t_end`; absent unless the run completed.
    pub error: Option<f64>,
    pub status: RunStatus,
}

/// One (method, filter) error curve with its fitted log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub method: Method,
    pub tableau: String,
    pub filter: String,
    pub points: Vec<ConvergencePoint>,
    pub slope: Option<f64>,
    pub slope_points: usize,
}

/// Least-squares slope of `log10(err)` vs `log10(h)`.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0.log10()).sum();
    let sy: f64 = points.iter().map(|p| p.1.log10()).sum();
    let sxx: f64 = points.iter().map(|p| p.0.log10().powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| p.0.log10() * p.1.log10()).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

impl ConvergenceRecord {
    /// Slope over the `slope_points` smallest completed step sizes; at
    /// least three points are required.
    pub fn refit_slope(&mut self, slope_points: usize) {
        self.slope_points = slope_points;
        let mut completed: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter_map(|p| p.error.map(|e| (p.h, e)))
            .filter(|&(_, e)| e > 0.0)
            .collect();
        completed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        completed.truncate(slope_points.max(3));
        self.slope = if completed.len() >= 3 { Some(fit_slope(&completed)) } else { None };
    }
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

/// A single convergence cell: integrate and measure against a reference
/// state at `t_end`.
#[allow(clippy::too_many_arguments)]
fn run_cell(
    sys: &DecomposedSystem<f64>,
    tableau: &ImexTableau,
    method: Method,
    filter: &FilterSpec,
    h: f64,
    t_end: f64,
    guard: f64,
    reference: &[f64],
) -> ConvergencePoint {
    let y0 = sys.exact_state(0.0).expect("model problems sample their exact solution");
    let opts = IntegrateOptions {
        guard_threshold: guard,
        store: StorePolicy::FinalOnly,
        record_residuals: false,
    };
    let filter = filter.build::<f64>();
    let trace = match method {
        Method::Simex => {
            let mut stepper = SimexStepper::new(tableau, filter.as_ref());
            integrate(&mut stepper, sys, &y0, 0.0, t_end, h, &opts)
        }
        Method::Imex => {
            let mut stepper = ImexStepper::new(tableau, filter.as_ref());
            integrate(&mut stepper, sys, &y0, 0.0, t_end, h, &opts)
        }
    };
    match trace {
        Ok(trace) => {
            let status = RunStatus::from_trace(&trace);
            let error = if trace.completed() {
                let diff: Vec<f64> =
                    trace.final_state().iter().zip(reference).map(|(a, b)| a - b).collect();
                Some(inf_norm(&diff))
            } else {
                None
            };
            ConvergencePoint { h, error, status }
        }
        Err(_) => ConvergencePoint { h, error: None, status: RunStatus::SolverFailure },
    }
}

fn ode_reference(sys: &DecomposedSystem<f64>, t_end: f64) -> Result<Vec<f64>> {
    let y0 = sys.exact_state(0.0).expect("model problems sample their exact solution");
    let rhs = |y: &[f64], t: f64, out: &mut [f64]| {
        let v = sys.rhs_full(y, t);
        out.copy_from_slice(&v);
    };
    simex_core::integrator::reference_solve(&rhs, &y0, 0.0, t_end, 1e-12, 1e-12)
        .map_err(|e| anyhow!("reference solve failed: {e}"))
}

fn default_h_grid() -> Vec<f64> {
    (0..5).map(|m| 0.1 * 0.5f64.powi(m)).collect()
}

fn convergence_study(
    sys: &DecomposedSystem<f64>,
    tableau: &ImexTableau,
    methods: &[Method],
    filters: &[FilterSpec],
    h_list: &[f64],
    cfg: &RunConfig,
) -> Result<Vec<ConvergenceRecord>> {
    let reference = ode_reference(sys, cfg.t_end)?;
    let cells: Vec<(usize, usize, usize)> = methods
        .iter()
        .enumerate()
        .flat_map(|(mi, _)| {
            filters.iter().enumerate().flat_map(move |(fi, _)| {
                (0..h_list.len()).map(move |hi| (mi, fi, hi))
            })
        })
        .collect();
    let pool = thread_pool(cfg.jobs)?;
    let points: Vec<ConvergencePoint> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(mi, fi, hi)| {
                run_cell(
                    sys,
                    tableau,
                    methods[mi],
                    &filters[fi],
                    h_list[hi],
                    cfg.t_end,
                    cfg.guard,
                    &reference,
                )
            })
            .collect()
    });
    let mut records = Vec::new();
    for (mi, &method) in methods.iter().enumerate() {
        for (fi, filter) in filters.iter().enumerate() {
            let pts: Vec<ConvergencePoint> = (0..h_list.len())
                .map(|hi| {
                    points[cells
                        .iter()
                        .position(|&c| c == (mi, fi, hi))
                        .expect("cell exists")]
                    .clone()
                })
                .collect();
            let mut rec = ConvergenceRecord {
                method,
                tableau: tableau.name().to_string(),
                filter: filter.to_name(),
                points: pts,
                slope: None,
                slope_points: cfg.slope_points,
            };
            rec.refit_slope(cfg.slope_points);
            records.push(rec);
        }
    }
    Ok(records)
}

/// Forced 1D heat convergence (defaults: ARK548, `jacobi(0..=3)`,
/// `h = 0.1·2^-m` for `m = 0..=4`, both methods).
pub fn converge_heat(cfg: &RunConfig) -> Result<Vec<ConvergenceRecord>> {
    cfg.validate()?;
    let tableau = by_name(if cfg.tableau.is_empty() { "ark548" } else { &cfg.tableau })
        .ok_or_else(|| anyhow!("unknown tableau"))?;
    let filters = parse_filters_or(cfg, || (0..4).map(|n| FilterSpec::Jacobi { n }).collect())?;
    let h_list = if cfg.h.is_empty() { default_h_grid() } else { cfg.h.clone() };
    let n = if cfg.n == 0 { 10 } else { cfg.n };
    let sys = forced_heat_1d(n);
    convergence_study(&sys, &tableau, &methods_from(cfg)?, &filters, &h_list, cfg)
}

/// Nonlinear 1D advection-reaction-diffusion convergence (defaults:
/// ARK548, `newton(0..=3)`).
pub fn converge_nonlinear(cfg: &RunConfig) -> Result<Vec<ConvergenceRecord>> {
    cfg.validate()?;
    let tableau = by_name(if cfg.tableau.is_empty() { "ark548" } else { &cfg.tableau })
        .ok_or_else(|| anyhow!("unknown tableau"))?;
    let filters = parse_filters_or(cfg, || (0..4).map(|n| FilterSpec::Newton { n }).collect())?;
    let h_list = if cfg.h.is_empty() { default_h_grid() } else { cfg.h.clone() };
    let n = if cfg.n == 0 { 10 } else { cfg.n };
    let sys = adv_reac_diff_1d(n);
    convergence_study(&sys, &tableau, &methods_from(cfg)?, &filters, &h_list, cfg)
}

fn parse_filters_or(
    cfg: &RunConfig,
    default: impl FnOnce() -> Vec<FilterSpec>,
) -> Result<Vec<FilterSpec>> {
    if cfg.filters.is_empty() {
        Ok(default())
    } else {
        cfg.filters
            .iter()
            .map(|f| FilterSpec::parse(f).map_err(anyhow::Error::msg))
            .collect()
    }
}

/// Harness stepper that deliberately changes the filter *between RK-stages*
/// of a SIMEX step. This breaks the method (the within-step filter must be
/// fixed) and exists to demonstrate that breakage.
pub struct StageAlternatingStepper<'a> {
    pub tableau: &'a ImexTableau,
    /// Used at even stage indices `i` (1-based: stages 2, 4, ...).
    pub even_stage: BoxedFilter<f64>,
    /// Used at odd stage indices.
    pub odd_stage: BoxedFilter<f64>,
}

impl Stepper<f64> for StageAlternatingStepper<'_> {
    fn step(
        &mut self,
        sys: &DecomposedSystem<f64>,
        y: &[f64],
        t: f64,
        h: f64,
    ) -> Result<StepResult<f64>, simex_core::filters::FilterError> {
        simex_rk_step_stagewise(self.tableau, sys, y, t, h, false, |i| {
            if i % 2 == 0 {
                self.even_stage.as_ref()
            } else {
                self.odd_stage.as_ref()
            }
        })
    }
}

/// Harness stepper that alternates the filter *between whole steps*; every
/// stage of one step sees the same filter, which the method permits.
pub struct StepAlternatingStepper<'a> {
    pub tableau: &'a ImexTableau,
    pub even_step: BoxedFilter<f64>,
    pub odd_step: BoxedFilter<f64>,
    step_index: usize,
}

impl<'a> StepAlternatingStepper<'a> {
    pub fn new(
        tableau: &'a ImexTableau,
        even_step: BoxedFilter<f64>,
        odd_step: BoxedFilter<f64>,
    ) -> Self {
        Self { tableau, even_step, odd_step, step_index: 0 }
    }
}

impl Stepper<f64> for StepAlternatingStepper<'_> {
    fn step(
        &mut self,
        sys: &DecomposedSystem<f64>,
        y: &[f64],
        t: f64,
        h: f64,
    ) -> Result<StepResult<f64>, simex_core::filters::FilterError> {
        let idx = self.step_index;
        self.step_index += 1;
        let filter =
            if idx % 2 == 0 { self.even_step.as_ref() } else { self.odd_step.as_ref() };
        simex_rk_step_stagewise(self.tableau, sys, y, t, h, false, |_| filter)
    }
}

/// The stage-alternation counterexample on the heat problem: a
/// `jacobi(2)/jacobi(3)` filter pair alternated between RK-stages (order
/// drops to four) versus between whole steps (fifth order retained), plus
/// an exact-filter control.
pub fn converge_alternation(cfg: &RunConfig) -> Result<Vec<ConvergenceRecord>> {
    cfg.validate()?;
    let tableau = by_name(if cfg.tableau.is_empty() { "ark548" } else { &cfg.tableau })
        .ok_or_else(|| anyhow!("unknown tableau"))?;
    let h_list = if cfg.h.is_empty() { default_h_grid() } else { cfg.h.clone() };
    let n = if cfg.n == 0 { 10 } else { cfg.n };
    let sys = forced_heat_1d(n);
    let reference = ode_reference(&sys, cfg.t_end)?;
    let y0 = sys.exact_state(0.0).expect("heat samples its exact solution");
    let opts = IntegrateOptions {
        guard_threshold: cfg.guard,
        store: StorePolicy::FinalOnly,
        record_residuals: false,
    };

    #[derive(Clone, Copy)]
    enum Variant {
        StageAlt,
        StepAlt,
        Control,
    }
    let variants = [
        (Variant::StageAlt, "stage-alt[jacobi(2),jacobi(3)]"),
        (Variant::StepAlt, "step-alt[jacobi(2),jacobi(3)]"),
        (Variant::Control, "exact"),
    ];

    let pool = thread_pool(cfg.jobs)?;
    let mut records = Vec::new();
    for (variant, name) in variants {
        let points: Vec<ConvergencePoint> = pool.install(|| {
            h_list
                .par_iter()
                .map(|&h| {
                    let trace = match variant {
                        Variant::StageAlt => {
                            let mut stepper = StageAlternatingStepper {
                                tableau: &tableau,
                                even_stage: simex_core::filters::jacobi_filter(2),
                                odd_stage: simex_core::filters::jacobi_filter(3),
                            };
                            integrate(&mut stepper, &sys, &y0, 0.0, cfg.t_end, h, &opts)
                        }
                        Variant::StepAlt => {
                            let mut stepper = StepAlternatingStepper::new(
                                &tableau,
                                simex_core::filters::jacobi_filter(2),
                                simex_core::filters::jacobi_filter(3),
                            );
                            integrate(&mut stepper, &sys, &y0, 0.0, cfg.t_end, h, &opts)
                        }
                        Variant::Control => {
                            let filter = exact_filter::<f64>();
                            let mut stepper = SimexStepper::new(&tableau, filter.as_ref());
                            integrate(&mut stepper, &sys, &y0, 0.0, cfg.t_end, h, &opts)
                        }
                    };
                    match trace {
                        Ok(trace) => {
                            let status = RunStatus::from_trace(&trace);
                            let error = trace.completed().then(|| {
                                let diff: Vec<f64> = trace
                                    .final_state()
                                    .iter()
                                    .zip(&reference)
                                    .map(|(a, b)| a - b)
                                    .collect();
                                inf_norm(&diff)
                            });
                            ConvergencePoint { h, error, status }
                        }
                        Err(_) => {
                            ConvergencePoint { h, error: None, status: RunStatus::SolverFailure }
                        }
                    }
                })
                .collect()
        });
        let mut rec = ConvergenceRecord {
            method: Method::Simex,
            tableau: tableau.name().to_string(),
            filter: name.to_string(),
            points,
            slope: None,
            slope_points: cfg.slope_points,
        };
        rec.refit_slope(cfg.slope_points);
        records.push(rec);
    }
    Ok(records)
}

/// One filter's stability-region scan: the raw map plus the axis-crossing
/// summary.
pub struct StabilityRecord {
    pub tableau: String,
    pub filter: FilterSpec,
    pub map: RegionMap,
    /// Stability boundary on the negative real axis, if one lies in the
    /// scanned window.
    pub real_crossing: Option<f64>,
    /// Boundary along the positive imaginary axis, if any.
    pub imag_crossing: Option<f64>,
}

/// Default §5 filter set: the six from the region figures.
pub fn default_region_filters() -> Vec<FilterSpec> {
    vec![
        FilterSpec::Default,
        FilterSpec::Ats { m: 1 },
        FilterSpec::Gs { k: 5, omega: 1.0 },
        FilterSpec::Ats { m: 3 },
        FilterSpec::Ilu { droptol: 0.02 },
        FilterSpec::Gs { k: 5, omega: 0.9 },
    ]
}

/// Scan the complex plane for each configured filter (parallel per grid
/// point; bitwise identical to a serial scan) and bisect axis crossings.
pub fn stability_region(cfg: &RunConfig) -> Result<Vec<StabilityRecord>> {
    cfg.validate()?;
    let tableau = by_name(if cfg.tableau.is_empty() { "cnh" } else { &cfg.tableau })
        .ok_or_else(|| anyhow!("unknown tableau"))?;
    let filters = parse_filters_or(cfg, default_region_filters)?;
    let n = if cfg.n == 0 { 50 } else { cfg.n };
    if cfg.resolution_re < 8 || cfg.resolution_im < 8 {
        bail!("resolution must be at least 8 per axis");
    }
    let pool = thread_pool(cfg.jobs)?;
    let mut out = Vec::new();
    for filter in &filters {
        let factory = region_factory(filter.clone());
        let (n_re, n_im) = (cfg.resolution_re, cfg.resolution_im);
        let values: Vec<f64> = pool.install(|| {
            (0..n_re * n_im)
                .into_par_iter()
                .map(|idx| {
                    let (ix, iy) = (idx % n_re, idx / n_re);
                    let z = Complex64::new(
                        grid_coord(cfg.re_min, cfg.re_max, n_re, ix),
                        grid_coord(cfg.im_min, cfg.im_max, n_im, iy),
                    );
                    amplification(
                        &tableau,
                        factory.as_ref(),
                        n,
                        z,
                        cfg.steps,
                        mixed_seed(cfg.seed, idx),
                    )
                })
                .collect()
        });
        let map = assemble_region_map(
            (cfg.re_min, cfg.re_max),
            (cfg.im_min, cfg.im_max),
            (n_re, n_im),
            values,
            cfg.seed,
        );
        let scan = |axis: ScanAxis, bracket: (f64, f64)| -> Option<f64> {
            let tol = 1e-3 * (bracket.1 - bracket.0).abs();
            match axis_scan(&tableau, factory.as_ref(), n, axis, bracket, cfg.steps, cfg.seed, tol)
            {
                Ok(b) => Some(b),
                Err(ScanError::NoSignChange { .. }) => None,
            }
        };
        let real_crossing = scan(ScanAxis::Real, (cfg.re_min, -1e-2));
        let imag_crossing = scan(ScanAxis::Imaginary, (1e-2, cfg.im_max));
        out.push(StabilityRecord {
            tableau: tableau.name().to_string(),
            filter: filter.clone(),
            map,
            real_crossing,
            imag_crossing,
        });
    }
    Ok(out)
}

fn grid_coord(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n == 1 {
        lo
    } else {
        lo + (hi - lo) * (i as f64) / ((n - 1) as f64)
    }
}

/// A filter factory for region scans (fresh instance per `z`).
pub fn region_factory(spec: FilterSpec) -> Box<FilterFactory> {
    Box::new(move || spec.build::<Complex64>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pde2dPoint {
    pub j: u32,
    pub h: f64,
    pub error: Option<f64>,
    pub seconds: f64,
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pde2dRecord {
    pub method: Method,
    pub filter: String,
    pub points: Vec<Pde2dPoint>,
}

pub struct Pde2dOutput {
    pub tableau: String,
    pub records: Vec<Pde2dRecord>,
    /// Per grid and method: the completed filter with the smallest wall
    /// time, with its error.
    pub best: Vec<(Method, u32, String, f64)>,
    /// Fitted slope of the per-grid best stable SIMEX errors.
    pub simex_best_slope: Option<f64>,
    /// `(nnz(L)+nnz(U))/(9N²)` for the `ilu(0.02)` stage factorization at
    /// the finest tested grid.
    pub ilu_fill_ratio: f64,
}

/// Default §6 filter set: `gs(k)` for `k = 0..=7` plus `cgs(1)`/`cgs(2)`
/// with drop tolerance 0.02.
pub fn default_pde2d_filters() -> Vec<FilterSpec> {
    let mut v: Vec<FilterSpec> = (0..=7).map(|k| FilterSpec::Gs { k, omega: 1.0 }).collect();
    v.push(FilterSpec::Cgs { p: 1, droptol: 0.02 });
    v.push(FilterSpec::Cgs { p: 2, droptol: 0.02 });
    v
}

/// Space-time refinement study on the 2D advection-diffusion problem:
/// grids `h_j = 2^-j/5`, `N_j = 5·2^j` (so `h/δx = 1/π`), discrete-L²
/// errors at `t = 1` against the exact solution.
pub fn pde2d(cfg: &RunConfig) -> Result<Pde2dOutput> {
    cfg.validate()?;
    let tableau = by_name(if cfg.tableau.is_empty() { "ark436" } else { &cfg.tableau })
        .ok_or_else(|| anyhow!("unknown tableau"))?;
    let filters = parse_filters_or(cfg, default_pde2d_filters)?;
    let methods = methods_from(cfg)?;
    let grid_j: Vec<u32> = if cfg.grid_j.is_empty() { (1..=5).collect() } else { cfg.grid_j.clone() };
    for &j in &grid_j {
        if j == 0 || j > 7 {
            bail!("grid index j must lie in 1..=7 (got {j})");
        }
        if j > 5 {
            eprintln!("warning: grid j = {j} has {} unknowns; expect a long run", (5usize << j).pow(2));
        }
    }

    // systems shared across cells of the same grid
    let systems: Vec<(u32, f64, DecomposedSystem<f64>)> = grid_j
        .iter()
        .map(|&j| {
            let h = 0.2 * 0.5f64.powi(j as i32);
            let n = 5usize << j;
            (j, h, adv_diff_2d(n))
        })
        .collect();

    let n_sys = systems.len();
    let cells: Vec<(usize, usize, usize)> = (0..methods.len())
        .flat_map(|mi| {
            (0..filters.len()).flat_map(move |fi| (0..n_sys).map(move |si| (mi, fi, si)))
        })
        .collect();

    let pool = thread_pool(cfg.jobs)?;
    let t_end = cfg.t_end;
    let guard = cfg.guard;
    let results: Vec<Pde2dPoint> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(mi, fi, si)| {
                let (j, h, sys) = &systems[si];
                let (j, h) = (*j, *h);
                let y0 = sys.exact_state(0.0).expect("exact solution sampled");
                let filter = filters[fi].build::<f64>();
                let opts = IntegrateOptions {
                    guard_threshold: guard,
                    store: StorePolicy::FinalOnly,
                    record_residuals: false,
                };
                let started = Instant::now();
                let trace = match methods[mi] {
                    Method::Simex => {
                        let mut stepper = SimexStepper::new(&tableau, filter.as_ref());
                        integrate(&mut stepper, sys, &y0, 0.0, t_end, h, &opts)
                    }
                    Method::Imex => {
                        let mut stepper = ImexStepper::new(&tableau, filter.as_ref());
                        integrate(&mut stepper, sys, &y0, 0.0, t_end, h, &opts)
                    }
                };
                let seconds = started.elapsed().as_secs_f64();
                match trace {
                    Ok(trace) => {
                        let status = RunStatus::from_trace(&trace);
                        let error = trace.completed().then(|| {
                            let exact = sys.exact_state(t_end).expect("exact solution sampled");
                            let diff: Vec<f64> = trace
                                .final_state()
                                .iter()
                                .zip(&exact)
                                .map(|(a, b)| a - b)
                                .collect();
                            let n = 5usize << j;
                            discrete_l2_norm(&diff, std::f64::consts::PI / n as f64)
                        });
                        Pde2dPoint { j, h, error, seconds, status }
                    }
                    Err(_) => Pde2dPoint {
                        j,
                        h,
                        error: None,
                        seconds,
                        status: RunStatus::SolverFailure,
                    },
                }
            })
            .collect()
    });

    let mut records = Vec::new();
    for (mi, &method) in methods.iter().enumerate() {
        for (fi, filter) in filters.iter().enumerate() {
            let points: Vec<Pde2dPoint> = (0..systems.len())
                .map(|si| {
                    results[cells.iter().position(|&c| c == (mi, fi, si)).expect("cell")].clone()
                })
                .collect();
            records.push(Pde2dRecord { method, filter: filter.to_name(), points });
        }
    }

    // best stable filter per grid (smallest wall time among completed)
    let mut best = Vec::new();
    for &method in &methods {
        for (si, &(j, _, _)) in systems.iter().enumerate() {
            let mut champion: Option<(&Pde2dRecord, &Pde2dPoint)> = None;
            for rec in records.iter().filter(|r| r.method == method) {
                let p = &rec.points[si];
                if p.status == RunStatus::Completed {
                    let better = match champion {
                        None => true,
                        Some((_, cur)) => p.seconds < cur.seconds,
                    };
                    if better {
                        champion = Some((rec, p));
                    }
                }
            }
            if let Some((rec, p)) = champion {
                best.push((method, j, rec.filter.clone(), p.error.unwrap_or(f64::NAN)));
            }
        }
    }

    // slope of the SIMEX best-stable error per grid
    let mut simex_pts: Vec<(f64, f64)> = best
        .iter()
        .filter(|(m, _, _, _)| *m == Method::Simex)
        .map(|&(_, j, _, e)| (0.2 * 0.5f64.powi(j as i32), e))
        .filter(|&(_, e)| e.is_finite() && e > 0.0)
        .collect();
    simex_pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    simex_pts.truncate(cfg.slope_points.max(3));
    let simex_best_slope = (simex_pts.len() >= 3).then(|| fit_slope(&simex_pts));

    // ILU fill diagnostic at the finest tested grid
    let (_, h_fine, sys_fine) =
        systems.iter().max_by_key(|(j, _, _)| *j).expect("at least one grid");
    let n_fine = (sys_fine.dim() as f64).sqrt() as usize;
    let stage = sys_fine
        .implicit_matrix()
        .expect("diffusion is linear")
        .identity_minus_scaled(h_fine * tableau.gamma());
    let fill = ilu_factor(&stage, 0.02).map_err(|e| anyhow!("ilu diagnostic: {e}"))?;
    let ilu_fill_ratio = (fill.nnz_l() + fill.nnz_u()) as f64 / (9 * n_fine * n_fine) as f64;

    Ok(Pde2dOutput {
        tableau: tableau.name().to_string(),
        records,
        best,
        simex_best_slope,
        ilu_fill_ratio,
    })
}

/// Validation report over all shipped tableaus.
pub struct TableauReport {
    pub lines: Vec<String>,
    pub ok: bool,
}

/// Run `validate` and the order-condition residuals on every shipped
/// tableau.
pub fn tableau_check() -> TableauReport {
    let mut lines = Vec::new();
    let mut ok = true;
    for t in all_tableaus() {
        lines.push(format!(
            "{}: s = {}, gamma = {}, declared order {}",
            t.name(),
            t.stages(),
            t.gamma(),
            t.declared_order()
        ));
        let violations = validate(&t);
        if violations.is_empty() {
            lines.push("  structure: ok".to_string());
        } else {
            ok = false;
            for v in &violations {
                lines.push(format!("  structure violation: {v}"));
            }
        }
        let p = t.declared_order().min(3);
        let mut worst = 0.0f64;
        for r in order_conditions_residual(&t, p) {
            worst = worst.max(r.value.abs());
        }
        if worst <= 1e-12 {
            lines.push(format!("  order conditions up to {p}: ok (max residual {worst:.2e})"));
        } else {
            ok = false;
            lines.push(format!("  order conditions up to {p}: FAILED (max residual {worst:.2e})"));
        }
    }
    TableauReport { lines, ok }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tableau_check_passes_on_shipped_tables() {
        let rep = tableau_check();
        assert!(rep.ok, "{:?}", rep.lines);
        assert!(rep.lines.iter().any(|l| l.contains("gamma = 0.5")));
    }

    #[test]
    fn slope_fit_recovers_exact_power_law() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h: &f64| (h, 3.0 * h.powi(4)))
            .collect();
        assert!((fit_slope(&pts) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn method_and_status_round_trip() {
        assert_eq!(Method::parse("imex").unwrap(), Method::Imex);
        assert_eq!(Method::parse(Method::Simex.as_str()).unwrap(), Method::Simex);
        for s in [RunStatus::Completed, RunStatus::Unstable, RunStatus::SolverFailure] {
            assert_eq!(RunStatus::parse(s.as_str()).unwrap(), s);
        }
    }

    #[test]
    fn small_heat_study_produces_expected_records() {
        let mut cfg = RunConfig::default();
        cfg.method = "simex".into();
        cfg.filters = vec!["jacobi(1)".into()];
        cfg.h = vec![0.1, 0.05, 0.025, 0.0125];
        let recs = converge_heat(&cfg).unwrap();
        assert_eq!(recs.len(), 1);
        let rec = &recs[0];
        assert_eq!(rec.points.len(), 4);
        assert!(rec.points.iter().all(|p| p.status == RunStatus::Completed));
        let s = rec.slope.unwrap();
        assert!((s - 5.0).abs() < 0.5, "slope {s}");
    }
}
