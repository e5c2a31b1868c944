//! Generalized stability regions.
//!
//! For the diffusion model `dy/dt = zA·y` the stability region `Ω(A)` is
//! the set of complex `z` for which time-stepping with `h = 1` drives a
//! random unit-∞-norm initial state to zero. It is probed empirically:
//! run the stepper for a fixed number of steps and store the
//! amplification factor of the last step, `‖y_N‖_∞ / ‖y_{N−1}‖_∞`.
//! A full [`region_map`] evaluates that on a complex-plane grid, smooths
//! the samples with a small box blur, and extracts the level-1 contour by
//! marching squares; [`axis_scan`] bisects a single boundary crossing
//! along the real or imaginary axis, which is much cheaper.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] use num_traits::Float;
use rand::{Rng, SeedableRng};

use crate::filters::BoxedFilter;
use crate::integrator::{integrate, IntegrateOptions, SimexStepper, StorePolicy, TraceStatus};
use crate::problems::model_2d;
use crate::tableau::ImexTableau;
use crate::Complex64;

/// Amplification reported for runs that blow up (guard trip or solver
/// failure); unambiguously outside every region.
pub const UNSTABLE_SENTINEL: f64 = 1e6;

/// Builds a fresh filter per evaluated `z` (the stage matrix depends on
/// `z`, so filter instances cannot be shared between scan points).
pub type FilterFactory = dyn Fn() -> BoxedFilter<Complex64> + Sync;

/// Random initial state with `‖y₀‖_∞ = 1`: components uniform on
/// `[−1, 1]` from a seeded generator, then rescaled. Real-valued, so
/// conjugating `z` conjugates the whole trajectory.
pub fn random_unit_state(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut y: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for v in y.iter_mut() {
        *v /= norm;
    }
    y.into_iter().map(|v| Complex64::new(v, 0.0)).collect()
}

/// Last-step amplification factor of SIMEX-RK applied to the model
/// `dy/dt = zA·y` with `h = 1`.
///
/// Runs `steps` steps from a seeded random unit state; if the instability
/// guard (1e3) trips or the filter fails, returns [`UNSTABLE_SENTINEL`].
pub fn amplification(
    tableau: &ImexTableau,
    filter_factory: &FilterFactory,
    n: usize,
    z: Complex64,
    steps: usize,
    seed: u64,
) -> f64 {
    assert!(steps >= 2);
    let sys = model_2d(z, n);
    let y0 = random_unit_state(sys.dim(), seed);
    let filter = filter_factory();
    let mut stepper = SimexStepper::new(tableau, filter.as_ref());
    let opts = IntegrateOptions {
        guard_threshold: 1e3,
        store: StorePolicy::FinalOnly,
        record_residuals: false,
    };
    let trace = match integrate(&mut stepper, &sys, &y0, 0.0, steps as f64, 1.0, &opts) {
        Ok(t) => t,
        Err(_) => return UNSTABLE_SENTINEL,
    };
    match trace.status {
        TraceStatus::Completed => {
            let n = trace.inf_norms.len();
            let prev = trace.inf_norms[n - 2];
            let last = trace.inf_norms[n - 1];
            if prev == 0.0 {
                if last == 0.0 { 0.0 } else { UNSTABLE_SENTINEL }
            } else {
                last / prev
            }
        }
        TraceStatus::Unstable { .. } | TraceStatus::SolverFailure { .. } => UNSTABLE_SENTINEL,
    }
}

/// Complex-plane grid of last-step amplification factors plus the level-1
/// contours extracted from the smoothed grid. `values` keeps the raw
/// (pre-smoothing) samples in row-major order, the imaginary index
/// varying slowest.
#[derive(Debug, Clone)]
pub struct RegionMap {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    /// `(n_re, n_im)` grid points including both interval endpoints.
    pub resolution: (usize, usize),
    pub values: Vec<f64>,
    pub seed: u64,
    pub contours: Vec<Vec<(f64, f64)>>,
}

impl RegionMap {
    pub fn re_coord(&self, ix: usize) -> f64 {
        grid_coord(self.re_range, self.resolution.0, ix)
    }

    pub fn im_coord(&self, iy: usize) -> f64 {
        grid_coord(self.im_range, self.resolution.1, iy)
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.resolution.0 + ix]
    }
}

fn grid_coord(range: (f64, f64), n: usize, i: usize) -> f64 {
    if n == 1 {
        return range.0;
    }
    range.0 + (range.1 - range.0) * (i as f64) / ((n - 1) as f64)
}

/// Per-grid-point seed: the base seed mixed with the point index, so a
/// parallel scan assembling by index reproduces the serial map bit for
/// bit.
pub fn mixed_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 step
    let mut x = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Evaluate the amplification factor on a complex-plane grid and extract
/// level-1 contours (two passes of a 3×3 box blur, then marching squares
/// with linear interpolation).
#[allow(clippy::too_many_arguments)]
pub fn region_map(
    tableau: &ImexTableau,
    filter_factory: &FilterFactory,
    n: usize,
    re_range: (f64, f64),
    im_range: (f64, f64),
    resolution: (usize, usize),
    steps: usize,
    seed: u64,
) -> RegionMap {
    assert!(resolution.0 >= 8 && resolution.1 >= 8);
    let (n_re, n_im) = resolution;
    let mut values = vec![0.0; n_re * n_im];
    for iy in 0..n_im {
        for ix in 0..n_re {
            let idx = iy * n_re + ix;
            let z = Complex64::new(
                grid_coord(re_range, n_re, ix),
                grid_coord(im_range, n_im, iy),
            );
            values[idx] = amplification(tableau, filter_factory, n, z, steps, mixed_seed(seed, idx));
        }
    }
    assemble_region_map(re_range, im_range, resolution, values, seed)
}

/// Build a [`RegionMap`] from already-evaluated amplification samples
/// (row-major, imaginary index slowest). Used by parallel scans; the
/// samples at index `idx` must have been computed with
/// [`mixed_seed`]`(seed, idx)`.
pub fn assemble_region_map(
    re_range: (f64, f64),
    im_range: (f64, f64),
    resolution: (usize, usize),
    values: Vec<f64>,
    seed: u64,
) -> RegionMap {
    let (n_re, n_im) = resolution;
    assert_eq!(values.len(), n_re * n_im);
    // cap blow-up sentinels so the blur cannot flood stable neighbors;
    // the level-1 set only needs values pinned on either side of 1
    let capped: Vec<f64> = values.iter().map(|v| v.min(4.0)).collect();
    let smoothed = box_blur(&capped, n_re, n_im, 2);
    let xs: Vec<f64> = (0..n_re).map(|i| grid_coord(re_range, n_re, i)).collect();
    let ys: Vec<f64> = (0..n_im).map(|i| grid_coord(im_range, n_im, i)).collect();
    let contours = marching_squares(&smoothed, &xs, &ys, 1.0);
    RegionMap { re_range, im_range, resolution, values, seed, contours }
}

/// 3×3 uniform box blur with edge replication, applied `passes` times.
pub fn box_blur(values: &[f64], n_re: usize, n_im: usize, passes: usize) -> Vec<f64> {
    let mut cur = values.to_vec();
    let clamp = |v: i64, n: usize| -> usize { v.clamp(0, n as i64 - 1) as usize };
    for _ in 0..passes {
        let mut next = vec![0.0; cur.len()];
        for iy in 0..n_im {
            for ix in 0..n_re {
                let mut acc = 0.0;
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let jx = clamp(ix as i64 + dx, n_re);
                        let jy = clamp(iy as i64 + dy, n_im);
                        acc += cur[jy * n_re + jx];
                    }
                }
                next[iy * n_re + ix] = acc / 9.0;
            }
        }
        cur = next;
    }
    cur
}

/// Marching squares at the given level with linear interpolation on cell
/// edges; saddle cells are disambiguated by the cell-center mean. Segments
/// are chained into polylines.
pub fn marching_squares(
    values: &[f64],
    xs: &[f64],
    ys: &[f64],
    level: f64,
) -> Vec<Vec<(f64, f64)>> {
    let n_re = xs.len();
    let n_im = ys.len();
    let v = |ix: usize, iy: usize| values[iy * n_re + ix];
    let mut segments: Vec<((f64, f64), (f64, f64))> = Vec::new();
    for iy in 0..n_im.saturating_sub(1) {
        for ix in 0..n_re.saturating_sub(1) {
            let v00 = v(ix, iy);
            let v10 = v(ix + 1, iy);
            let v11 = v(ix + 1, iy + 1);
            let v01 = v(ix, iy + 1);
            let mut case = 0u8;
            if v00 >= level {
                case |= 1;
            }
            if v10 >= level {
                case |= 2;
            }
            if v11 >= level {
                case |= 4;
            }
            if v01 >= level {
                case |= 8;
            }
            if case == 0 || case == 15 {
                continue;
            }
            let lerp = |a: f64, b: f64, va: f64, vb: f64| a + (level - va) / (vb - va) * (b - a);
            // edge crossing points
            let bottom = || (lerp(xs[ix], xs[ix + 1], v00, v10), ys[iy]);
            let top = || (lerp(xs[ix], xs[ix + 1], v01, v11), ys[iy + 1]);
            let left = || (xs[ix], lerp(ys[iy], ys[iy + 1], v00, v01));
            let right = || (xs[ix + 1], lerp(ys[iy], ys[iy + 1], v10, v11));
            match case {
                1 => segments.push((left(), bottom())),
                2 => segments.push((bottom(), right())),
                3 => segments.push((left(), right())),
                4 => segments.push((right(), top())),
                6 => segments.push((bottom(), top())),
                7 => segments.push((left(), top())),
                8 => segments.push((top(), left())),
                9 => segments.push((top(), bottom())),
                11 => segments.push((top(), right())),
                12 => segments.push((right(), left())),
                13 => segments.push((right(), bottom())),
                14 => segments.push((bottom(), left())),
                5 | 10 => {
                    let center = (v00 + v10 + v11 + v01) / 4.0;
                    let center_inside = center >= level;
                    if case == 5 {
                        if center_inside {
                            segments.push((left(), top()));
                            segments.push((right(), bottom()));
                        } else {
                            segments.push((left(), bottom()));
                            segments.push((right(), top()));
                        }
                    } else if center_inside {
                        segments.push((bottom(), right()));
                        segments.push((top(), left()));
                    } else {
                        segments.push((bottom(), left()));
                        segments.push((top(), right()));
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    chain_segments(segments)
}

fn quantize(p: (f64, f64)) -> (i64, i64) {
    ((p.0 * 1e7).round() as i64, (p.1 * 1e7).round() as i64)
}

fn chain_segments(segments: Vec<((f64, f64), (f64, f64))>) -> Vec<Vec<(f64, f64)>> {
    use alloc::collections::BTreeMap;
    // level hits exactly on a grid corner spawn zero-length segments
    let segments: Vec<_> =
        segments.into_iter().filter(|(a, b)| quantize(*a) != quantize(*b)).collect();
    let mut endpoint_index: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, (a, b)) in segments.iter().enumerate() {
        endpoint_index.entry(quantize(*a)).or_default().push(i);
        endpoint_index.entry(quantize(*b)).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut line = vec![a, b];
        // extend forward from the tail, then backward from the head
        for reverse in [false, true] {
            loop {
                let tip = if reverse { line[0] } else { *line.last().unwrap() };
                let key = quantize(tip);
                let Some(cands) = endpoint_index.get(&key) else { break };
                let mut extended = false;
                for &si in cands {
                    if used[si] {
                        continue;
                    }
                    let (sa, sb) = segments[si];
                    let next = if quantize(sa) == key {
                        sb
                    } else if quantize(sb) == key {
                        sa
                    } else {
                        continue;
                    };
                    used[si] = true;
                    if reverse {
                        line.insert(0, next);
                    } else {
                        line.push(next);
                    }
                    extended = true;
                    break;
                }
                if !extended {
                    break;
                }
            }
        }
        polylines.push(line);
    }
    polylines
}

/// Scan axis for [`axis_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanAxis {
    Real,
    Imaginary,
}

impl ScanAxis {
    fn z(self, coord: f64) -> Complex64 {
        match self {
            ScanAxis::Real => Complex64::new(coord, 0.0),
            ScanAxis::Imaginary => Complex64::new(0.0, coord),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScanError {
    /// The amplification factor does not straddle 1 on the bracket.
    NoSignChange { amp_lo: f64, amp_hi: f64 },
}

impl core::fmt::Display for ScanError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ScanError::NoSignChange { amp_lo, amp_hi } => write!(
                f,
                "no stability boundary in bracket (amplification {amp_lo:.4} / {amp_hi:.4})"
            ),
        }
    }
}

impl core::error::Error for ScanError {}

/// Bisect the amplification-equals-1 crossing along one axis to within
/// `tol` in the axis coordinate. The bracket endpoints must straddle the
/// boundary.
#[allow(clippy::too_many_arguments)]
pub fn axis_scan(
    tableau: &ImexTableau,
    filter_factory: &FilterFactory,
    n: usize,
    axis: ScanAxis,
    bracket: (f64, f64),
    steps: usize,
    seed: u64,
    tol: f64,
) -> Result<f64, ScanError> {
    let amp = |coord: f64| amplification(tableau, filter_factory, n, axis.z(coord), steps, seed);
    let (mut lo, mut hi) = bracket;
    let (amp_lo, amp_hi) = (amp(lo), amp(hi));
    let lo_stable = amp_lo <= 1.0;
    let hi_stable = amp_hi <= 1.0;
    if lo_stable == hi_stable {
        return Err(ScanError::NoSignChange { amp_lo, amp_hi });
    }
    while (hi - lo).abs() > tol {
        let mid = 0.5 * (lo + hi);
        let mid_stable = amp(mid) <= 1.0;
        if mid_stable == lo_stable {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{default_filter, exact_filter, gs_filter};
    use crate::tableau::cnh;

    fn exact_factory() -> &'static FilterFactory {
        &|| exact_filter::<Complex64>()
    }

    #[test]
    fn amplification_is_one_at_z_zero() {
        // f = 0: the state never changes
        let tab = cnh();
        let a = amplification(&tab, exact_factory(), 8, Complex64::new(0.0, 0.0), 5, 3);
        assert_eq!(a, 1.0);
    }

    #[test]
    fn cnh_exact_filter_is_stable_at_negative_real_z() {
        // all eigenvalues of the trapezoidal amplification (1 + l/2)/(1 - l/2)
        // with l = z*eig(A) < 0 have modulus < 1
        let tab = cnh();
        let a = amplification(&tab, exact_factory(), 8, Complex64::new(-1.0, 0.0), 30, 3);
        assert!(a < 1.0, "amplification {a}");
    }

    #[test]
    fn default_filter_blows_up_at_stiff_z() {
        let tab = cnh();
        let factory: &FilterFactory = &|| default_filter::<Complex64>();
        let a = amplification(&tab, factory, 8, Complex64::new(-2000.0, 0.0), 30, 3);
        assert_eq!(a, UNSTABLE_SENTINEL);
    }

    #[test]
    fn amplification_is_deterministic() {
        let tab = cnh();
        let factory: &FilterFactory = &|| gs_filter::<Complex64>(2, 1.0);
        let z = Complex64::new(-3.0, 1.0);
        let a = amplification(&tab, factory, 8, z, 12, 42);
        let b = amplification(&tab, factory, 8, z, 12, 42);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn amplification_has_conjugate_symmetry() {
        // same seed => same real initial state, so conjugating z conjugates
        // the whole trajectory and the norms agree
        let tab = cnh();
        let factory: &FilterFactory = &|| gs_filter::<Complex64>(3, 1.0);
        let z = Complex64::new(-2.0, 1.5);
        let a = amplification(&tab, factory, 8, z, 10, 7);
        let b = amplification(&tab, factory, 8, z.conj(), 10, 7);
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn region_map_is_reproducible_and_contains_origin() {
        let tab = cnh();
        let factory: &FilterFactory = &|| default_filter::<Complex64>();
        let map = region_map(&tab, factory, 8, (-6.0, 2.0), (-4.0, 4.0), (9, 9), 10, 5);
        let map2 = region_map(&tab, factory, 8, (-6.0, 2.0), (-4.0, 4.0), (9, 9), 10, 5);
        for (a, b) in map.values.iter().zip(&map2.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // z just left of the origin is stable, far left is not
        let a_near = map.value(6, 4); // re = -6 + 6*(8/8)... re index 6 -> -6+6 = 0
        assert!(a_near <= 1.0 + 1e-12);
        assert!(map.value(0, 4) > 1.0);
    }

    #[test]
    fn axis_scan_finds_default_filter_boundary() {
        let tab = cnh();
        let factory: &FilterFactory = &|| default_filter::<Complex64>();
        let b = axis_scan(&tab, factory, 8, ScanAxis::Real, (-50.0, -0.5), 30, 11, 0.05).unwrap();
        assert!(b < -0.5 && b > -50.0);
        // boundary must separate stability from instability
        let amp_in =
            amplification(&tab, factory, 8, Complex64::new(b + 0.2, 0.0), 30, 11);
        let amp_out =
            amplification(&tab, factory, 8, Complex64::new(b - 0.2, 0.0), 30, 11);
        assert!(amp_in <= 1.0 + 0.05, "inside {amp_in}");
        assert!(amp_out > 1.0 - 0.05, "outside {amp_out}");
    }

    #[test]
    fn axis_scan_reports_missing_crossing() {
        let tab = cnh();
        let err = axis_scan(
            &tab,
            exact_factory(),
            8,
            ScanAxis::Real,
            (-1e4, -1.0),
            12,
            3,
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, ScanError::NoSignChange { .. }));
    }

    #[test]
    fn marching_squares_extracts_a_circle() {
        // f(x, y) = x^2 + y^2 on [-2, 2]^2, level 1: one closed contour of
        // radius about 1
        let n = 41;
        let xs: Vec<f64> = (0..n).map(|i| -2.0 + 4.0 * (i as f64) / ((n - 1) as f64)).collect();
        let ys = xs.clone();
        let mut values = vec![0.0; n * n];
        for iy in 0..n {
            for ix in 0..n {
                values[iy * n + ix] = xs[ix] * xs[ix] + ys[iy] * ys[iy];
            }
        }
        let contours = marching_squares(&values, &xs, &ys, 1.0);
        assert_eq!(contours.len(), 1);
        let line = &contours[0];
        assert!(line.len() > 20);
        for &(x, y) in line {
            let r = (x * x + y * y).sqrt();
            assert!((r - 1.0).abs() < 0.05, "point ({x}, {y}) at radius {r}");
        }
        // closed: endpoints coincide
        let first = line.first().unwrap();
        let last = line.last().unwrap();
        assert!((first.0 - last.0).abs() < 1e-9 && (first.1 - last.1).abs() < 1e-9);
    }

    #[test]
    fn box_blur_preserves_constants() {
        let v = vec![3.5; 25];
        let b = box_blur(&v, 5, 5, 2);
        for x in b {
            assert!((x - 3.5).abs() < 1e-12);
        }
    }
}
