//! Resonance analysis of the bell-smoothed filter.
//!
//! With the order of integration swapped, `P(n)` becomes a `t`-average of
//! comb-weighted kernel integrals over `m`. Near each resonance `k` the ratio
//! `z(m) = x(t) / (m + δψ(t))` passes through the integer `k` at
//! `m_k(t) = x(t)/k - δψ(t)`, and expanding `K` around `k` turns the local
//! integral into a sum of moments `μ_r(k; t) = ∫ Φ_σ(m) (z(m) - k)^r dm`.
//! The amplitude `A_k(n)` keeps the first few of those terms. It collapses
//! when a bell sits on `m_k`, i.e. when `n/k` is a divisor.
//!
//! ```
//! use smoothprime::resonance::{detect_composite, detection_params, resonance_map, MomentSpec, DETECTION_THRESHOLD};
//! use smoothprime::IntegrationSpec;
//!
//! let params = detection_params();
//! let map = resonance_map(15.0, &params, &MomentSpec::for_n(15.0), &IntegrationSpec::simpson(32)).unwrap();
//! let hit = detect_composite(&map, DETECTION_THRESHOLD).unwrap().expect("15 is composite");
//! assert_eq!(15 % hit.divisor_hint, 0);
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integration::{integrate_1d, integrate_1d_on, IntegrationSpec};
use crate::kernels::{named_enum, Bell, Kernel, MAX_DERIVATIVE_ORDER};
use crate::primality::{outer_bounds, EvalResult, KernelFn, SmoothParams, Variant};

/// Simpson intervals over each bell's window in the reordered integral.
const MIN_WINDOW_INTERVALS: usize = 64;

/// `P(n)` with `t` outermost: `∫₀¹ ∫ Φ_σ(m) K(x(t)/y_m(t)) dm dt`, divided by
/// the comb mass over the same `m` range.
///
/// The `m` integral is split into one window per bell, each with its own
/// Simpson grid of at least `m_integ.grid_points` intervals. `t_integ`
/// drives the outer integral.
pub fn p_reordered(
    n: f64,
    params: &SmoothParams,
    t_integ: &IntegrationSpec,
    m_integ: &IntegrationSpec,
) -> Result<EvalResult> {
    if !(n.is_finite() && n > 2.0) {
        return Err(Error::invalid("n must be > 2"));
    }
    params.validate()?;
    let (lo, hi) = outer_bounds(n, params.outer_domain);
    let intervals = {
        let q = m_integ.grid_points.max(MIN_WINDOW_INTERVALS);
        q + q % 2
    };
    let bell = &params.bell;
    let reach = bell.reach();
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    let last = (hi + reach).floor() as i64;
    for j in 2..=last {
        let (a, b) = ((j as f64 - reach).max(lo), (j as f64 + reach).min(hi));
        if a >= b {
            continue;
        }
        let h = (b - a) / intervals as f64;
        for i in 0..=intervals {
            let m = a + i as f64 * h;
            let w = simpson_coefficient(i, intervals) * h * bell.single(m, j as f64);
            if w > 0.0 {
                nodes.push((m, w));
            }
        }
    }
    let mass: f64 = nodes.iter().map(|(_, w)| w).sum();
    if !(mass >= 1e-12) {
        return Err(Error::DegenerateLocalization { mass, lo, hi });
    }
    let k = KernelFn::new(&params.kernel, t_integ);
    let est = integrate_1d(
        |t| {
            let x = params.x(n, t);
            let shift = params.delta * params.bump.value(t);
            nodes.iter().map(|&(m, w)| w * k.eval(x / (m + shift))).sum::<f64>() / mass
        },
        t_integ,
    )?;
    Ok(EvalResult {
        n,
        variant: Variant::Reordered,
        value: est.value.clamp(0.0, 1.0),
        error_estimate: est.error_estimate,
        evaluations: est.evaluations * nodes.len() as u64,
        params: params.clone(),
    })
}

fn simpson_coefficient(i: usize, q: usize) -> f64 {
    if i == 0 || i == q {
        1.0 / 3.0
    } else if i % 2 == 1 {
        4.0 / 3.0
    } else {
        2.0 / 3.0
    }
}

/// Truncation order and resonance range of a moment expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    /// Highest Taylor order `R` kept in the amplitude.
    pub truncation_order: usize,
    pub k_min: u64,
    pub k_max: u64,
    /// Simpson intervals across each moment window.
    pub window_nodes: usize,
}

impl Default for MomentSpec {
    fn default() -> Self {
        MomentSpec { truncation_order: 4, k_min: 2, k_max: 2, window_nodes: 400 }
    }
}

impl MomentSpec {
    /// Every resonance with a non-empty window: `k = 2..=⌊n/2⌋+1`.
    pub fn for_n(n: f64) -> Self {
        MomentSpec { k_max: max_resonance(n).max(2), ..Default::default() }
    }

    pub fn with_order(self, truncation_order: usize) -> Self {
        MomentSpec { truncation_order, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation_order > MAX_DERIVATIVE_ORDER {
            return Err(Error::invalid(format!("truncation order must be <= {MAX_DERIVATIVE_ORDER}")));
        }
        if self.k_min < 2 {
            return Err(Error::invalid("k_min must be >= 2"));
        }
        if self.k_min > self.k_max {
            return Err(Error::invalid("k_min must not exceed k_max"));
        }
        if self.window_nodes < 2 {
            return Err(Error::invalid("window nodes must be >= 2"));
        }
        Ok(())
    }
}

/// Largest resonance whose centre `n/k` can still reach `m ≥ 2`.
pub fn max_resonance(n: f64) -> u64 {
    (n / 2.0).floor().max(0.0) as u64 + 1
}

/// `m`-window of resonance `k` at `t`: centred where `z(m) = k`, at most
/// half the gap to the neighbouring resonances wide, clipped to the outer
/// domain.
fn moment_window(k: u64, t: f64, n: f64, params: &SmoothParams) -> Option<(f64, f64, f64)> {
    let kf = k as f64;
    let x = params.x(n, t);
    let shift = params.delta * params.bump.value(t);
    let centre = x / kf - shift;
    let half = params.bell.reach().min(n / (2.0 * kf * (kf + 1.0)));
    let (lo, hi) = outer_bounds(n, params.outer_domain);
    let (a, b) = ((centre - half).max(lo), (centre + half).min(hi));
    (a < b).then_some((a, b, shift))
}

/// All moments `μ_0..=μ_r_max` of resonance `k` at `t`, sharing one grid.
fn moments(r_max: usize, k: u64, t: f64, n: f64, params: &SmoothParams, window_nodes: usize) -> Vec<f64> {
    let mut mu = vec![0.0; r_max + 1];
    let Some((a, b, shift)) = moment_window(k, t, n, params) else {
        return mu;
    };
    let q = window_nodes + window_nodes % 2;
    let h = (b - a) / q as f64;
    let x = params.x(n, t);
    let kf = k as f64;
    for i in 0..=q {
        let m = a + i as f64 * h;
        let w = simpson_coefficient(i, q) * h * params.bell.comb(m, 2);
        if w == 0.0 {
            continue;
        }
        let d = x / (m + shift) - kf;
        let mut power = 1.0;
        for slot in mu.iter_mut() {
            *slot += w * power;
            power *= d;
        }
    }
    mu
}

/// The localized moment `μ_r(k; t) = ∫ Φ_σ(m) (z(m) - k)^r dm` over the
/// window of resonance `k`. An empty window gives exactly 0.
///
/// `δ = 0` is accepted here so that the unperturbed moments can be studied.
pub fn localized_moment(r: usize, k: u64, t: f64, n: f64, params: &SmoothParams, spec: &MomentSpec) -> Result<f64> {
    if r > MAX_DERIVATIVE_ORDER {
        return Err(Error::invalid(format!("moment order must be <= {MAX_DERIVATIVE_ORDER}")));
    }
    if k < 2 {
        return Err(Error::invalid("k must be >= 2"));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid("t must lie in [0, 1]"));
    }
    params.validate_allowing_zero_delta()?;
    Ok(moments(r, k, t, n, params, spec.window_nodes)[r])
}

/// `K^(r)(0) / r!` for `r = 0..=order`; every integer is equivalent by
/// periodicity.
pub fn taylor_coefficients(kernel: &Kernel, order: usize) -> Result<Vec<f64>> {
    let mut factorial = 1.0;
    (0..=order)
        .map(|r| {
            if r > 0 {
                factorial *= r as f64;
            }
            Ok(kernel.derivative(0.0, r)? / factorial)
        })
        .collect()
}

/// One row of a resonance map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceEntry {
    pub k: u64,
    /// `A_k(n)`, the truncated moment expansion integrated over `t`.
    pub amplitude: f64,
    /// `∫₀¹ μ_0(k; t) dt`, the comb mass seen by the window.
    pub baseline: f64,
    /// `(baseline - amplitude) / baseline`, or 0 when the window holds
    /// almost no bell mass.
    pub relative_drop: f64,
}

fn resonance_entry(
    k: u64,
    n: f64,
    params: &SmoothParams,
    spec: &MomentSpec,
    coeffs: &[f64],
    integ_t: &IntegrationSpec,
) -> Result<ResonanceEntry> {
    let r_max = spec.truncation_order;
    let amplitude = integrate_1d(
        |t| {
            let mu = moments(r_max, k, t, n, params, spec.window_nodes);
            coeffs.iter().zip(&mu).map(|(c, m)| c * m).sum()
        },
        integ_t,
    )?
    .value;
    let baseline = integrate_1d(|t| moments(0, k, t, n, params, spec.window_nodes)[0], integ_t)?.value;
    let relative_drop =
        if baseline >= 1e-3 * params.bell.unit_mass() { (baseline - amplitude) / baseline } else { 0.0 };
    Ok(ResonanceEntry { k, amplitude, baseline, relative_drop })
}

fn check_moment_inputs(n: f64, params: &SmoothParams, spec: &MomentSpec) -> Result<()> {
    if !(n.is_finite() && n > 2.0) {
        return Err(Error::invalid("n must be > 2"));
    }
    params.validate_allowing_zero_delta()?;
    spec.validate()
}

/// `A_k(n) = ∫₀¹ Σ_{r ≤ R} K^(r)(k)/r! · μ_r(k; t) dt`.
pub fn resonance_amplitude(
    k: u64,
    n: f64,
    params: &SmoothParams,
    spec: &MomentSpec,
    integ_t: &IntegrationSpec,
) -> Result<f64> {
    check_moment_inputs(n, params, spec)?;
    if !(spec.k_min..=spec.k_max).contains(&k) {
        return Err(Error::invalid(format!("k = {k} outside [{}, {}]", spec.k_min, spec.k_max)));
    }
    let coeffs = taylor_coefficients(&params.kernel, spec.truncation_order)?;
    Ok(resonance_entry(k, n, params, spec, &coeffs, integ_t)?.amplitude)
}

/// Amplitudes of every resonance in `spec.k_min..=spec.k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceMap {
    pub n: f64,
    pub entries: Vec<ResonanceEntry>,
    pub params: SmoothParams,
    pub spec: MomentSpec,
}

impl ResonanceMap {
    /// `Σ_k A_k(n)` normalised by the comb mass over the outer domain.
    pub fn total(&self) -> f64 {
        let sum: f64 = self.entries.iter().map(|e| e.amplitude).sum();
        sum / comb_mass(self.n, &self.params)
    }
}

/// `∫ Φ_σ(m) dm` over the outer domain of `n`.
pub fn comb_mass(n: f64, params: &SmoothParams) -> f64 {
    let (lo, hi) = outer_bounds(n, params.outer_domain);
    let bell = &params.bell;
    let reach = bell.reach();
    let spec = IntegrationSpec::simpson(400);
    (2..=(hi + reach).floor() as i64)
        .filter_map(|j| {
            let (a, b) = ((j as f64 - reach).max(lo), (j as f64 + reach).min(hi));
            (a < b).then(|| integrate_1d_on(|m| bell.single(m, j as f64), a, b, &spec).map(|e| e.value).unwrap_or(0.0))
        })
        .sum()
}

pub fn resonance_map(
    n: f64,
    params: &SmoothParams,
    spec: &MomentSpec,
    integ_t: &IntegrationSpec,
) -> Result<ResonanceMap> {
    check_moment_inputs(n, params, spec)?;
    if spec.k_max > max_resonance(n) {
        return Err(Error::invalid(format!(
            "k_max = {} exceeds floor(n/2)+1 = {}; larger k have empty windows",
            spec.k_max,
            max_resonance(n)
        )));
    }
    let coeffs = taylor_coefficients(&params.kernel, spec.truncation_order)?;
    let entries: Vec<Result<ResonanceEntry>> = (spec.k_min..=spec.k_max)
        .into_par_iter()
        .map(|k| resonance_entry(k, n, params, spec, &coeffs, integ_t))
        .collect();
    Ok(ResonanceMap { n, entries: entries.into_iter().collect::<Result<_>>()?, params: params.clone(), spec: *spec })
}

/// A resonance whose amplitude collapsed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub k: u64,
    /// `round(n / k)`, the suspected divisor.
    pub divisor_hint: u64,
    pub relative_drop: f64,
}

/// The most suppressed resonance, if its relative drop exceeds
/// `rel_threshold`. Ties go to the smaller `k`.
pub fn detect_composite(map: &ResonanceMap, rel_threshold: f64) -> Result<Option<Detection>> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::invalid("relative threshold must lie in (0, 1)"));
    }
    let mut best: Option<&ResonanceEntry> = None;
    for e in &map.entries {
        if best.map_or(true, |b| e.relative_drop > b.relative_drop) {
            best = Some(e);
        }
    }
    let best = best.ok_or_else(|| Error::invalid("resonance map is empty"))?;
    Ok((best.relative_drop > rel_threshold).then(|| Detection {
        k: best.k,
        divisor_hint: (map.n / best.k as f64).round() as u64,
        relative_drop: best.relative_drop,
    }))
}

/// Relative drop above which [`detect_composite`] reports a hit under
/// [`detection_params`].
pub const DETECTION_THRESHOLD: f64 = 0.5;

/// A configuration that separates primes from composites on `[4, 60]`:
/// a tiny perturbation, a broad `p = 1` sine kernel whose Taylor series
/// converges over the windows, and bells narrow enough not to overlap
/// neighbouring resonances. Use with [`MomentSpec::for_n`] (order 4).
pub fn detection_params() -> SmoothParams {
    SmoothParams { delta: 1e-3, kernel: Kernel::sine(1.0, 1), bell: Bell::gaussian(0.002), ..SmoothParams::default() }
}

named_enum! {
    /// How the `ψ(t)` factor of the moment estimate is reduced to a number.
    PsiMode {
        /// `ψ = 1`, its peak value.
        Peak => "peak",
        /// `ψ² → ∫₀¹ ψ(t)² dt` (3/8 for the sine-squared bump).
        MeanSquare => "mean-square",
        /// Replace the quadratic term by `∫₀¹ K(δψ(t)/d) dt`, the kernel
        /// itself averaged over the perturbation.
        Integrated => "integrated",
    }
}

/// Constants that override the computed bell ratio and `K''(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GivenConstants {
    pub phi_ratio: f64,
    pub k2: f64,
}

/// Second-order estimate of `P(n)` from a single divisor `d`:
/// `1 - ρ [K(0) + K''(0)/2 · (δψ/d)²]`, with `ρ = Φ_σ(d) / ∫ Φ_σ`.
pub fn moment_estimate(
    n: u64,
    d: u64,
    params: &SmoothParams,
    given: Option<GivenConstants>,
    mode: PsiMode,
) -> Result<f64> {
    if d < 2 || d >= n {
        return Err(Error::invalid(format!("d must satisfy 2 <= d < n, got d = {d}, n = {n}")));
    }
    if n % d != 0 {
        return Err(Error::invalid(format!("{d} does not divide {n}")));
    }
    params.validate_allowing_zero_delta()?;
    let kernel = &params.kernel;
    let (phi_ratio, k2) = match given {
        Some(g) => (g.phi_ratio, g.k2),
        None => (params.bell.comb(d as f64, 2) / comb_mass(n as f64, params), kernel.derivative(0.0, 2)?),
    };
    let k0 = kernel.eval(0.0);
    let df = d as f64;
    let spec = IntegrationSpec::simpson(256);
    let bracket = match mode {
        PsiMode::Peak => k0 + k2 / 2.0 * (params.delta / df).powi(2),
        PsiMode::MeanSquare => {
            let mean_sq = integrate_1d(|t| params.bump.value(t).powi(2), &spec)?.value;
            k0 + k2 / 2.0 * (params.delta / df).powi(2) * mean_sq
        }
        PsiMode::Integrated => integrate_1d(|t| kernel.eval(params.delta * params.bump.value(t) / df), &spec)?.value,
    };
    Ok(1.0 - phi_ratio * bracket)
}
