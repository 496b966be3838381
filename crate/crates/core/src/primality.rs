//! The smooth primality filter `P(n)` in its five integral forms.
//!
//! Every form averages the suppression kernel over perturbed ratios
//! `x / y`, where `x = n + δψ(t)` and `y` ranges over candidate divisors.
//! When some `y` passes close to a divisor the ratio nears an integer, the
//! kernel dips, and `P(n)` falls below 1.
//!
//! ```
//! use smoothprime::{p_summed_triple, IntegrationSpec, SmoothParams};
//!
//! let params = SmoothParams::default();
//! let spec = IntegrationSpec::simpson(32);
//! let prime = p_summed_triple(7, &params, &spec).unwrap();
//! let composite = p_summed_triple(8, &params, &spec).unwrap();
//! assert!(prime.value > 0.99 && composite.value < 0.98);
//! ```

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integration::{integrate_1d, integrate_2d, integrate_3d, IntegralEstimate, IntegrationSpec};
use crate::kernels::{named_enum, Bell, Bump, Kernel, KernelTable};

named_enum! {
    /// Which construction of `P(n)` to evaluate.
    Variant {
        TripleSingle => "triple-single",
        SummedTriple => "summed-triple",
        Reduced1d => "reduced-1d",
        SmoothedIntegral => "smoothed-integral",
        Smoothed1d => "smoothed-1d",
        Reordered => "reordered",
    }
}

named_enum! {
    /// Weight density over the integration cube. Only the uniform density
    /// is built in.
    Density {
        Uniform => "uniform",
    }
}

named_enum! {
    /// Range of the outer `m` integral in the bell-smoothed forms.
    ///
    /// `Padded` integrates over `[1.5, n - 0.5]` so that the bells at 2 and
    /// at `n - 1` are whole and the bell at `n` is excluded. `Literal`
    /// integrates over `[2, n]`, which halves the bell at 2 and keeps half
    /// of the bell at an integer `n`.
    OuterDomain {
        Padded => "padded",
        Literal => "literal",
    }
}

/// Every tunable of the filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothParams {
    pub delta: f64,
    pub kernel: Kernel,
    pub bump: Bump,
    pub bell: Bell,
    pub phi: Density,
    pub outer_domain: OuterDomain,
}

impl Default for SmoothParams {
    fn default() -> Self {
        SmoothParams {
            delta: 0.05,
            kernel: Kernel::default(),
            bump: Bump::default(),
            bell: Bell::default(),
            phi: Density::Uniform,
            outer_domain: OuterDomain::Padded,
        }
    }
}

impl SmoothParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::invalid("delta must be > 0"));
        }
        self.validate_allowing_zero_delta()
    }

    /// As [`validate`](Self::validate) but accepting `δ = 0`, which the
    /// moment analysis uses to switch the perturbation off.
    pub(crate) fn validate_allowing_zero_delta(&self) -> Result<()> {
        if !(self.delta >= 0.0) {
            return Err(Error::invalid("delta must be >= 0"));
        }
        if !(self.delta < 1.0) {
            return Err(Error::invalid("delta must be < 1"));
        }
        self.kernel.validate()?;
        self.bell.validate()
    }

    /// `x(t) = n + δψ(t)`.
    #[inline]
    pub(crate) fn x(&self, n: f64, t: f64) -> f64 {
        n + self.delta * self.bump.value(t)
    }

    /// `y = m + δψ(v)`.
    #[inline]
    pub(crate) fn y(&self, m: f64, v: f64) -> f64 {
        m + self.delta * self.bump.value(v)
    }
}

/// Closed-form kernel or its interpolation table.
pub(crate) enum KernelFn {
    Exact(Kernel),
    Table(Box<KernelTable>),
}

impl KernelFn {
    pub(crate) fn new(kernel: &Kernel, spec: &IntegrationSpec) -> Self {
        match spec.kernel_table {
            Some(nodes) => KernelFn::Table(Box::new(kernel.tabulate(nodes))),
            None => KernelFn::Exact(*kernel),
        }
    }

    #[inline]
    pub(crate) fn eval(&self, z: f64) -> f64 {
        match self {
            KernelFn::Exact(k) => k.eval(z),
            KernelFn::Table(t) => t.eval(z),
        }
    }
}

/// A value of `P(n)` with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub n: f64,
    pub variant: Variant,
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
    pub params: SmoothParams,
}

impl EvalResult {
    fn new(n: f64, variant: Variant, value: f64, error_estimate: f64, evaluations: u64, params: &SmoothParams) -> Self {
        EvalResult { n, variant, value: value.clamp(0.0, 1.0), error_estimate, evaluations, params: params.clone() }
    }
}

fn check_n(n: f64) -> Result<()> {
    if n.is_finite() && n >= 2.0 {
        Ok(())
    } else {
        Err(Error::invalid("n must be >= 2"))
    }
}

/// The single triple integral with `y = 2 + (n - 2)u + δψ(v)`.
pub fn p_triple_single(n: f64, params: &SmoothParams, integ: &IntegrationSpec) -> Result<EvalResult> {
    check_n(n)?;
    params.validate()?;
    let k = KernelFn::new(&params.kernel, integ);
    let est = integrate_3d(
        |t, u, v| k.eval(params.x(n, t) / (2.0 + (n - 2.0) * u + params.delta * params.bump.value(v))),
        integ,
    )?;
    Ok(EvalResult::new(n, Variant::TripleSingle, est.value, est.error_estimate, est.evaluations, params))
}

/// Mean of per-divisor estimates, or 1 when there are no candidates.
fn divisor_mean<F>(n: u64, variant: Variant, params: &SmoothParams, per_m: F) -> Result<EvalResult>
where
    F: Fn(f64) -> Result<IntegralEstimate>,
{
    if n < 2 {
        return Err(Error::invalid("n must be >= 2"));
    }
    params.validate()?;
    if n == 2 {
        return Ok(EvalResult::new(2.0, variant, 1.0, 0.0, 0, params));
    }
    let (mut value, mut error, mut evaluations) = (0.0, 0.0, 0);
    for m in 2..n {
        let est = per_m(m as f64)?;
        value += est.value;
        error += est.error_estimate;
        evaluations += est.evaluations;
    }
    let count = (n - 2) as f64;
    Ok(EvalResult::new(n as f64, variant, value / count, error / count, evaluations, params))
}

/// Triple integral with `y = m + δψ(v)`, the form averaged over divisors.
fn divisor_triple(
    n: f64,
    m: f64,
    params: &SmoothParams,
    k: &KernelFn,
    integ: &IntegrationSpec,
) -> Result<IntegralEstimate> {
    if integ.collapse_u {
        integrate_2d(|t, v| k.eval(params.x(n, t) / params.y(m, v)), integ)
    } else {
        integrate_3d(|t, _u, v| k.eval(params.x(n, t) / params.y(m, v)), integ)
    }
}

/// `∫₀¹ K((n + δψ(t)) / (m + δψ(t))) dt`.
fn divisor_path(
    n: f64,
    m: f64,
    params: &SmoothParams,
    k: &KernelFn,
    integ: &IntegrationSpec,
) -> Result<IntegralEstimate> {
    integrate_1d(|t| k.eval(params.x(n, t) / params.y(m, t)), integ)
}

/// Mean over `m = 2..n-1` of the triple integral of `K(x(t) / (m + δψ(v)))`.
/// `P(2) = 1` by definition.
pub fn p_summed_triple(n: u64, params: &SmoothParams, integ: &IntegrationSpec) -> Result<EvalResult> {
    let k = KernelFn::new(&params.kernel, integ);
    divisor_mean(n, Variant::SummedTriple, params, |m| divisor_triple(n as f64, m, params, &k, integ))
}

/// Mean over `m = 2..n-1` of `∫₀¹ K((n + δψ(t)) / (m + δψ(t))) dt`.
pub fn p_reduced_1d(n: u64, params: &SmoothParams, integ: &IntegrationSpec) -> Result<EvalResult> {
    let k = KernelFn::new(&params.kernel, integ);
    divisor_mean(n, Variant::Reduced1d, params, |m| divisor_path(n as f64, m, params, &k, integ))
}

/// Bounds of the outer `m` integral.
pub fn outer_bounds(n: f64, domain: OuterDomain) -> (f64, f64) {
    match domain {
        OuterDomain::Padded => (1.5, n - 0.5),
        OuterDomain::Literal => (2.0, n),
    }
}

/// Number of Simpson intervals for the outer integral: at least the
/// requested grid, 20 per unit of `m` and 10 per `σ`. The span is rounded
/// up to whole units so the count stays fixed between integer `n`.
pub fn outer_intervals(n: f64, params: &SmoothParams, outer: &IntegrationSpec) -> usize {
    let (lo, hi) = outer_bounds(n, params.outer_domain);
    let span = (hi - lo).ceil().max(1.0);
    let q = outer.grid_points.max((20.0 * span) as usize).max((10.0 * span / params.bell.sigma).ceil() as usize);
    q + q % 2
}

const MAX_OUTER_INTERVALS: usize = 10_000_000;

/// Comb-weighted average of `inner(m)` over the outer domain.
fn comb_average<F>(
    n: f64,
    variant: Variant,
    params: &SmoothParams,
    outer: &IntegrationSpec,
    inner: F,
) -> Result<EvalResult>
where
    F: Fn(f64) -> Result<IntegralEstimate> + Sync,
{
    if !(n.is_finite() && n > 2.0) {
        return Err(Error::invalid("n must be > 2"));
    }
    params.validate()?;
    let (lo, hi) = outer_bounds(n, params.outer_domain);
    let q = outer_intervals(n, params, outer);
    if q > MAX_OUTER_INTERVALS {
        return Err(Error::ResourceGuard(format!(
            "outer grid of {q} intervals exceeds {MAX_OUTER_INTERVALS}; increase sigma"
        )));
    }
    let h = (hi - lo) / q as f64;
    let half = q / 2;

    let evaluated: Vec<Result<(f64, f64, f64, u64)>> = (0..=q)
        .into_par_iter()
        .map(|i| {
            let m = lo + i as f64 * h;
            let w = params.bell.comb(m, 2);
            if w == 0.0 {
                return Ok((0.0, 0.0, 0.0, 0));
            }
            let est = inner(m)?;
            Ok((w, est.value, est.error_estimate, est.evaluations))
        })
        .collect();

    let fine_w = |i: usize| simpson_weight(i, q) * h;
    let coarse_w = |i: usize| {
        if i % 2 == 1 {
            0.0
        } else if half % 2 == 0 {
            simpson_weight(i / 2, half) * 2.0 * h
        } else if i == 0 || i == q {
            h
        } else {
            2.0 * h
        }
    };
    let (mut num, mut den, mut cnum, mut cden) = (0.0, 0.0, 0.0, 0.0);
    let (mut inner_error, mut evaluations) = (0.0f64, 0u64);
    for (i, item) in evaluated.into_iter().enumerate() {
        let (w, v, e, count) = item?;
        num += fine_w(i) * w * v;
        den += fine_w(i) * w;
        cnum += coarse_w(i) * w * v;
        cden += coarse_w(i) * w;
        inner_error = inner_error.max(e);
        evaluations += count;
    }
    if !(den >= 1e-12) {
        return Err(Error::DegenerateLocalization { mass: den, lo, hi });
    }
    let value = num / den;
    let coarse = if cden > 0.0 { cnum / cden } else { value };
    Ok(EvalResult::new(n, variant, value, (value - coarse).abs() + inner_error, evaluations, params))
}

fn simpson_weight(i: usize, q: usize) -> f64 {
    if i == 0 || i == q {
        1.0 / 3.0
    } else if i % 2 == 1 {
        4.0 / 3.0
    } else {
        2.0 / 3.0
    }
}

/// Bell-comb weighted average over real `m` of the divisor triple integral.
///
/// `inner` drives the triple integral at each `m`; `outer` only sets a floor
/// on the outer Simpson grid, which is refined to resolve the bells.
pub fn p_smoothed_integral(
    n: f64,
    params: &SmoothParams,
    inner: &IntegrationSpec,
    outer: &IntegrationSpec,
) -> Result<EvalResult> {
    let k = KernelFn::new(&params.kernel, inner);
    comb_average(n, Variant::SmoothedIntegral, params, outer, |m| divisor_triple(n, m, params, &k, inner))
}

/// Bell-comb weighted average over real `m` of the synchronized path
/// integral `∫₀¹ K((n + δψ(t)) / (m + δψ(t))) dt`.
pub fn p_smoothed_1d(
    n: f64,
    params: &SmoothParams,
    inner: &IntegrationSpec,
    outer: &IntegrationSpec,
) -> Result<EvalResult> {
    let k = KernelFn::new(&params.kernel, inner);
    comb_average(n, Variant::Smoothed1d, params, outer, |m| divisor_path(n, m, params, &k, inner))
}

/// Rule for `δ` as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaRule {
    Fixed(f64),
    /// `δ(n) = n⁻²`
    InverseSquare,
    /// `δ(n) = 1 / ln n`
    InverseLog,
}

/// Rule for `ε` as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonRule {
    Fixed(f64),
    /// `ε(n) = n^(-exponent)`
    Power {
        exponent: f64,
    },
}

/// `n`-dependent overrides for `δ` and `ε`. `None` keeps the base value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamSchedule {
    pub delta: Option<DeltaRule>,
    pub epsilon: Option<EpsilonRule>,
}

impl ParamSchedule {
    pub fn is_identity(&self) -> bool {
        self.delta.is_none() && self.epsilon.is_none()
    }
}

impl fmt::Display for DeltaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaRule::Fixed(d) => write!(f, "fixed:{d}"),
            DeltaRule::InverseSquare => f.write_str("inverse-square"),
            DeltaRule::InverseLog => f.write_str("inverse-log"),
        }
    }
}

impl FromStr for DeltaRule {
    type Err = Error;

    /// `fixed:<δ>`, `inverse-square` or `inverse-log`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("fixed", v)) => {
                v.trim().parse().map(DeltaRule::Fixed).map_err(|_| Error::invalid(format!("invalid fixed delta '{v}'")))
            }
            None if s == "inverse-square" => Ok(DeltaRule::InverseSquare),
            None if s == "inverse-log" => Ok(DeltaRule::InverseLog),
            _ => Err(Error::invalid(format!(
                "unknown delta schedule '{s}' (expected fixed:<value>, inverse-square or inverse-log)"
            ))),
        }
    }
}

impl fmt::Display for EpsilonRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsilonRule::Fixed(e) => write!(f, "fixed:{e}"),
            EpsilonRule::Power { exponent } => write!(f, "power:{exponent}"),
        }
    }
}

impl FromStr for EpsilonRule {
    type Err = Error;

    /// `fixed:<ε>` or `power:<c>`.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| Error::invalid(format!("invalid number '{v}'")));
        match s.split_once(':') {
            Some(("fixed", v)) => parse(v).map(EpsilonRule::Fixed),
            Some(("power", v)) => parse(v).map(|exponent| EpsilonRule::Power { exponent }),
            _ => {
                Err(Error::invalid(format!("unknown eps schedule '{s}' (expected fixed:<value> or power:<exponent>)")))
            }
        }
    }
}

/// `base` with `δ` and `ε` replaced by the schedule's values at `n`.
pub fn resolve_schedule(schedule: &ParamSchedule, base: &SmoothParams, n: f64) -> Result<SmoothParams> {
    let mut out = base.clone();
    if let Some(rule) = schedule.delta {
        out.delta = match rule {
            DeltaRule::Fixed(d) => d,
            DeltaRule::InverseSquare => {
                if !(n > 1.0) {
                    return Err(Error::invalid("inverse-square delta schedule needs n > 1"));
                }
                n.powi(-2)
            }
            DeltaRule::InverseLog => {
                if !(n > std::f64::consts::E) {
                    return Err(Error::invalid("inverse-log delta schedule needs n > e"));
                }
                1.0 / n.ln()
            }
        };
        if !(out.delta > 0.0 && out.delta < 1.0) {
            return Err(Error::invalid(format!("scheduled delta {} must lie in (0, 1)", out.delta)));
        }
    }
    if let Some(rule) = schedule.epsilon {
        out.kernel.epsilon = match rule {
            EpsilonRule::Fixed(e) => e,
            EpsilonRule::Power { exponent } => {
                if !(exponent > 0.0) {
                    return Err(Error::invalid("eps schedule exponent must be > 0"));
                }
                n.powf(-exponent)
            }
        };
        if !(out.kernel.epsilon > 0.0) {
            return Err(Error::invalid("scheduled eps must be > 0"));
        }
    }
    Ok(out)
}

/// Threshold midway between the tabulated prime floor and composite ceiling.
pub const DEFAULT_THRESHOLD: f64 = 0.985;

/// Outcome of thresholding `P(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub value: f64,
    pub likely_prime: bool,
}

/// A variant bound to its parameters, schedule and integration settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluator {
    pub variant: Variant,
    pub params: SmoothParams,
    pub schedule: ParamSchedule,
    pub inner: IntegrationSpec,
    pub outer: IntegrationSpec,
}

impl Evaluator {
    pub fn new(variant: Variant, params: SmoothParams, integ: IntegrationSpec) -> Self {
        Evaluator { variant, params, schedule: ParamSchedule::default(), outer: integ.clone(), inner: integ }
    }

    /// `P(n)` for this variant. The divisor-sum variants need integer `n`.
    pub fn eval(&self, n: f64) -> Result<EvalResult> {
        check_n(n)?;
        let params = resolve_schedule(&self.schedule, &self.params, n)?;
        let integer = || -> Result<u64> {
            if n.fract() == 0.0 {
                Ok(n as u64)
            } else {
                Err(Error::invalid(format!("{} needs an integer n, got {n}", self.variant)))
            }
        };
        match self.variant {
            Variant::TripleSingle => p_triple_single(n, &params, &self.inner),
            Variant::SummedTriple => p_summed_triple(integer()?, &params, &self.inner),
            Variant::Reduced1d => p_reduced_1d(integer()?, &params, &self.inner),
            Variant::SmoothedIntegral => p_smoothed_integral(n, &params, &self.inner, &self.outer),
            Variant::Smoothed1d => p_smoothed_1d(n, &params, &self.inner, &self.outer),
            Variant::Reordered => crate::resonance::p_reordered(n, &params, &self.inner, &self.outer),
        }
    }

    pub fn classify(&self, n: f64, threshold: f64) -> Result<(EvalResult, Classification)> {
        check_threshold(threshold)?;
        let result = self.eval(n)?;
        let class = Classification { value: result.value, likely_prime: result.value > threshold };
        Ok((result, class))
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("threshold must lie in (0, 1)"))
    }
}

/// `P(n) > threshold`, with one integration spec for every level.
pub fn classify(
    n: f64,
    variant: Variant,
    params: &SmoothParams,
    integ: &IntegrationSpec,
    threshold: f64,
) -> Result<Classification> {
    Evaluator::new(variant, params.clone(), integ.clone()).classify(n, threshold).map(|(_, c)| c)
}
