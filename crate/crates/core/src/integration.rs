//! Quadrature over the unit interval and the unit cube.
//!
//! Grid rules (midpoint, trapezoid, Simpson) report `|I(q) - I(q/2)|` as
//! their error estimate, reusing every other node for the coarse sum. Monte
//! Carlo reports the standard error. Adaptive Simpson bisects until each
//! panel meets its share of the tolerance.
//!
//! Integrands are evaluated in parallel and must be `Sync`. Partial sums are
//! combined in a fixed order, so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::named_enum;

named_enum! {
    /// Integration backend.
    Method {
        Midpoint => "midpoint",
        Trapezoid => "trapezoid",
        Simpson => "simpson",
        MonteCarlo => "monte-carlo",
        Adaptive => "adaptive",
    }
}

/// Backend choice and its resolution knobs.
///
/// `grid_points` is the number of intervals per axis for grid rules;
/// `samples` and `seed` drive Monte Carlo; `abs_tol` and `max_subdivisions`
/// drive adaptive refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSpec {
    pub method: Method,
    pub grid_points: usize,
    pub samples: usize,
    pub seed: u64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Integrate the summed-triple variant over `(t, v)` only, since its
    /// integrand does not depend on `u`.
    #[serde(default)]
    pub collapse_u: bool,
    /// Evaluate the kernel through an interpolation table with this many
    /// nodes per half period instead of the closed form.
    #[serde(default)]
    pub kernel_table: Option<usize>,
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        IntegrationSpec {
            method: Method::Simpson,
            grid_points: 32,
            samples: 100_000,
            seed: 0,
            abs_tol: 1e-8,
            max_subdivisions: 100_000,
            collapse_u: false,
            kernel_table: None,
        }
    }
}

impl IntegrationSpec {
    pub fn grid(method: Method, q: usize) -> Self {
        IntegrationSpec { method, grid_points: q, ..Default::default() }
    }

    pub fn simpson(q: usize) -> Self {
        Self::grid(Method::Simpson, q)
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        IntegrationSpec { method: Method::MonteCarlo, samples, seed, ..Default::default() }
    }

    pub fn adaptive(abs_tol: f64) -> Self {
        IntegrationSpec { method: Method::Adaptive, abs_tol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::Midpoint | Method::Trapezoid | Method::Simpson if self.grid_points < 2 => {
                Err(Error::invalid("grid must be >= 2"))
            }
            Method::MonteCarlo if self.samples < 1 => Err(Error::invalid("samples must be >= 1")),
            Method::Adaptive if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) => {
                Err(Error::invalid("tol must be > 0"))
            }
            Method::Adaptive if self.max_subdivisions < 1 => Err(Error::invalid("max subdivisions must be >= 1")),
            _ => Ok(()),
        }
    }
}

/// An integral value with its error estimate and bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
    /// False when adaptive refinement ran out of subdivisions.
    pub converged: bool,
    /// Number of panel bisections performed by adaptive refinement.
    pub refinements: usize,
    pub note: Option<String>,
}

impl IntegralEstimate {
    fn exact(value: f64, error_estimate: f64, evaluations: u64) -> Self {
        IntegralEstimate { value, error_estimate, evaluations, converged: true, refinements: 0, note: None }
    }
}

/// Nodes with fine coefficients and the coefficients of the half-resolution
/// rule that reuses a subset of them. Each rule's weights are its
/// coefficients times its scale; applying the scale once keeps sums of
/// constants exact.
struct GridRule {
    nodes: Vec<f64>,
    fine: Vec<f64>,
    fine_scale: f64,
    coarse: Vec<f64>,
    coarse_scale: f64,
    note: Option<String>,
}

fn grid_rule(method: Method, q: usize, a: f64, b: f64) -> GridRule {
    let len = b - a;
    match method {
        Method::Midpoint => {
            let h = len / q as f64;
            let nodes = (0..q).map(|i| a + (i as f64 + 0.5) * h).collect();
            // Riemann sum on every other node
            let coarse = (0..q)
                .map(|i| match (i % 2, i + 1 < q) {
                    (0, true) => 2.0,
                    (0, false) => 1.0,
                    _ => 0.0,
                })
                .collect();
            GridRule { nodes, fine: vec![1.0; q], fine_scale: h, coarse, coarse_scale: h, note: None }
        }
        Method::Trapezoid | Method::Simpson => {
            let mut note = None;
            let q = if method == Method::Simpson && q % 2 == 1 {
                note = Some(format!("simpson needs an even interval count; grid raised from {q} to {}", q + 1));
                q + 1
            } else {
                q
            };
            let h = len / q as f64;
            let nodes = (0..=q).map(|i| a + i as f64 * h).collect();
            let (fine, fine_scale) = if method == Method::Simpson {
                (simpson_coefficients(q), len / (3 * q) as f64)
            } else {
                (trapezoid_coefficients(q), h)
            };
            let half = q / 2;
            let (coarse, coarse_scale) = if q < 2 {
                (fine.clone(), fine_scale)
            } else {
                let (sub, scale) = if method == Method::Simpson && half % 2 == 0 {
                    (simpson_coefficients(half), 2.0 * len / (3 * q) as f64)
                } else {
                    (trapezoid_coefficients(half), 2.0 * h)
                };
                let mut coarse = vec![0.0; q + 1];
                for (j, w) in sub.into_iter().enumerate() {
                    coarse[2 * j] = w;
                }
                // odd q leaves the last interval out of the subsample
                if q % 2 == 1 {
                    coarse[q - 1] += 0.25;
                    coarse[q] += 0.25;
                }
                (coarse, scale)
            };
            GridRule { nodes, fine, fine_scale, coarse, coarse_scale, note }
        }
        Method::MonteCarlo | Method::Adaptive => unreachable!("not a grid rule"),
    }
}

fn trapezoid_coefficients(q: usize) -> Vec<f64> {
    let mut w = vec![1.0; q + 1];
    w[0] = 0.5;
    w[q] = 0.5;
    w
}

fn simpson_coefficients(q: usize) -> Vec<f64> {
    (0..=q)
        .map(|i| {
            if i == 0 || i == q {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        })
        .collect()
}

fn check_finite(values: &[f64], location: impl Fn(usize) -> Vec<f64>) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFiniteIntegrand { location: location(i), value: values[i] }),
        None => Ok(()),
    }
}

/// `∫₀¹ f(t) dt`.
pub fn integrate_1d<F>(f: F, spec: &IntegrationSpec) -> Result<IntegralEstimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    integrate_1d_on(f, 0.0, 1.0, spec)
}

/// `∫ₐᵇ f(t) dt`.
pub fn integrate_1d_on<F>(f: F, a: f64, b: f64, spec: &IntegrationSpec) -> Result<IntegralEstimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    spec.validate()?;
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::invalid(format!("invalid interval [{a}, {b}]")));
    }
    match spec.method {
        Method::MonteCarlo => monte_carlo(spec, |rng| {
            let t = a + (b - a) * rng.gen::<f64>();
            (vec![t], (b - a) * f(t))
        }),
        Method::Adaptive => adaptive_simpson(&f, a, b, spec),
        grid => {
            let rule = grid_rule(grid, spec.grid_points, a, b);
            let values: Vec<f64> = rule.nodes.par_iter().with_min_len(16).map(|&t| f(t)).collect();
            check_finite(&values, |i| vec![rule.nodes[i]])?;
            let fine = rule.fine_scale * values.iter().zip(&rule.fine).map(|(v, w)| v * w).sum::<f64>();
            let coarse = rule.coarse_scale * values.iter().zip(&rule.coarse).map(|(v, w)| v * w).sum::<f64>();
            let mut est = IntegralEstimate::exact(fine, (fine - coarse).abs(), values.len() as u64);
            est.note = rule.note;
            Ok(est)
        }
    }
}

/// `∫∫∫ f(t, u, v)` over the unit cube.
///
/// Grid rules use tensor-product nodes. The adaptive method nests 1D
/// adaptive Simpson on each axis, splitting the tolerance evenly.
pub fn integrate_3d<F>(f: F, spec: &IntegrationSpec) -> Result<IntegralEstimate>
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    spec.validate()?;
    match spec.method {
        Method::MonteCarlo => monte_carlo(spec, |rng| {
            let (t, u, v) = (rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
            (vec![t, u, v], f(t, u, v))
        }),
        Method::Adaptive => nested_adaptive_3d(&f, spec),
        grid => {
            let rule = grid_rule(grid, spec.grid_points, 0.0, 1.0);
            let n = rule.nodes.len();
            let slabs: Vec<Result<(f64, f64)>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let t = rule.nodes[i];
                    let mut fine = 0.0;
                    let mut coarse = 0.0;
                    for j in 0..n {
                        let u = rule.nodes[j];
                        let mut row_fine = 0.0;
                        let mut row_coarse = 0.0;
                        for k in 0..n {
                            let v = rule.nodes[k];
                            let val = f(t, u, v);
                            if !val.is_finite() {
                                return Err(Error::NonFiniteIntegrand { location: vec![t, u, v], value: val });
                            }
                            row_fine += rule.fine[k] * val;
                            row_coarse += rule.coarse[k] * val;
                        }
                        fine += rule.fine[j] * row_fine;
                        coarse += rule.coarse[j] * row_coarse;
                    }
                    Ok((rule.fine[i] * fine, rule.coarse[i] * coarse))
                })
                .collect();
            let mut fine = 0.0;
            let mut coarse = 0.0;
            for slab in slabs {
                let (a, b) = slab?;
                fine += a;
                coarse += b;
            }
            fine *= rule.fine_scale.powi(3);
            coarse *= rule.coarse_scale.powi(3);
            let mut est = IntegralEstimate::exact(fine, (fine - coarse).abs(), (n * n * n) as u64);
            est.note = rule.note;
            Ok(est)
        }
    }
}

/// `∫∫ f(t, v)` over the unit square; used by the collapsed summed-triple path.
pub fn integrate_2d<F>(f: F, spec: &IntegrationSpec) -> Result<IntegralEstimate>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    spec.validate()?;
    match spec.method {
        Method::MonteCarlo => monte_carlo(spec, |rng| {
            let (t, v) = (rng.gen::<f64>(), rng.gen::<f64>());
            (vec![t, v], f(t, v))
        }),
        Method::Adaptive => {
            let inner_spec = IntegrationSpec { abs_tol: spec.abs_tol / 2.0, ..spec.clone() };
            nested_adaptive(|t| adaptive_simpson(&|v| f(t, v), 0.0, 1.0, &inner_spec), spec.abs_tol / 2.0, spec)
        }
        grid => {
            let rule = grid_rule(grid, spec.grid_points, 0.0, 1.0);
            let n = rule.nodes.len();
            let rows: Vec<Result<(f64, f64)>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let t = rule.nodes[i];
                    let mut fine = 0.0;
                    let mut coarse = 0.0;
                    for k in 0..n {
                        let v = rule.nodes[k];
                        let val = f(t, v);
                        if !val.is_finite() {
                            return Err(Error::NonFiniteIntegrand { location: vec![t, v], value: val });
                        }
                        fine += rule.fine[k] * val;
                        coarse += rule.coarse[k] * val;
                    }
                    Ok((rule.fine[i] * fine, rule.coarse[i] * coarse))
                })
                .collect();
            let mut fine = 0.0;
            let mut coarse = 0.0;
            for row in rows {
                let (a, b) = row?;
                fine += a;
                coarse += b;
            }
            fine *= rule.fine_scale.powi(2);
            coarse *= rule.coarse_scale.powi(2);
            let mut est = IntegralEstimate::exact(fine, (fine - coarse).abs(), (n * n) as u64);
            est.note = rule.note;
            Ok(est)
        }
    }
}

const MC_CHUNK: usize = 4096;

/// Chunked Monte Carlo. Chunk `c` draws from ChaCha8 stream `c` of `seed`,
/// so the sample set is fixed regardless of how chunks are scheduled.
fn monte_carlo<S>(spec: &IntegrationSpec, sample: S) -> Result<IntegralEstimate>
where
    S: Fn(&mut ChaCha8Rng) -> (Vec<f64>, f64) + Sync,
{
    let n = spec.samples;
    let chunks = n.div_ceil(MC_CHUNK);
    let draw_chunk = |c: usize| -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(c as u64);
        let count = MC_CHUNK.min(n - c * MC_CHUNK);
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let (at, v) = sample(&mut rng);
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand { location: at, value: v });
            }
            values.push(v);
        }
        Ok(values)
    };
    let first = draw_chunk(0)?;
    // shifting by a sample keeps the variance sum well conditioned
    let shift = first[0];
    let moments = |values: &[f64]| -> (f64, f64) {
        values.iter().fold((0.0, 0.0), |(s, s2), v| {
            let d = v - shift;
            (s + d, s2 + d * d)
        })
    };
    let mut partials = vec![moments(&first)];
    let rest: Vec<Result<(f64, f64)>> =
        (1..chunks).into_par_iter().map(|c| draw_chunk(c).map(|v| moments(&v))).collect();
    for r in rest {
        partials.push(r?);
    }
    let (sum, sum2) = partials.iter().fold((0.0, 0.0), |(a, b), (s, s2)| (a + s, b + s2));
    let nf = n as f64;
    let mean_shifted = sum / nf;
    let value = shift + mean_shifted;
    let error = if n > 1 {
        let var = ((sum2 - nf * mean_shifted * mean_shifted) / (nf - 1.0)).max(0.0);
        (var / nf).sqrt()
    } else {
        0.0
    };
    Ok(IntegralEstimate::exact(value, error, n as u64))
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson_panel(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Panels in the first level of adaptive refinement.
const ADAPTIVE_START_PANELS: usize = 8;

/// Adaptive Simpson on `[a, b]` over a generic panel evaluator returning an
/// estimate, so that the same driver integrates plain functions and nested
/// inner integrals.
fn adaptive_driver<G>(g: G, a: f64, b: f64, tol: f64, spec: &IntegrationSpec) -> Result<IntegralEstimate>
where
    G: Fn(f64) -> Result<(f64, u64)>,
{
    let mut evaluations = 0u64;
    let mut call = |x: f64| -> Result<f64> {
        let (v, n) = g(x)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { location: vec![x], value: v });
        }
        evaluations += n;
        Ok(v)
    };
    let len = b - a;
    if len == 0.0 {
        return Ok(IntegralEstimate::exact(0.0, 0.0, 1));
    }

    let edges: Vec<f64> =
        (0..=ADAPTIVE_START_PANELS).map(|i| a + len * i as f64 / ADAPTIVE_START_PANELS as f64).collect();
    let mut edge_values = Vec::with_capacity(edges.len());
    for &x in &edges {
        edge_values.push(call(x)?);
    }
    let mut stack = Vec::new();
    for i in (0..ADAPTIVE_START_PANELS).rev() {
        let (pa, pb) = (edges[i], edges[i + 1]);
        let fm = call(0.5 * (pa + pb))?;
        let (fa, fb) = (edge_values[i], edge_values[i + 1]);
        stack.push(Panel { a: pa, b: pb, fa, fm, fb, whole: simpson_panel(pa, pb, fa, fm, fb) });
    }

    let mut value = 0.0;
    let mut error = 0.0;
    let mut refinements = 0usize;
    let mut converged = true;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let flm = call(0.5 * (p.a + m))?;
        let frm = call(0.5 * (m + p.b))?;
        let left = simpson_panel(p.a, m, p.fa, flm, p.fm);
        let right = simpson_panel(m, p.b, p.fm, frm, p.fb);
        let diff = left + right - p.whole;
        let local_tol = tol * (p.b - p.a) / len;
        let resolvable = m > p.a && m < p.b;
        if diff.abs() <= 15.0 * local_tol || !resolvable || refinements >= spec.max_subdivisions {
            if diff.abs() > 15.0 * local_tol {
                converged = false;
            }
            value += left + right + diff / 15.0;
            error += diff.abs() / 15.0;
        } else {
            refinements += 1;
            stack.push(Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right });
            stack.push(Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left });
        }
    }
    let mut est = IntegralEstimate { value, error_estimate: error, evaluations, converged, refinements, note: None };
    if !converged {
        est.note = Some(format!(
            "adaptive refinement stopped after {} subdivisions before reaching tol {:e}",
            spec.max_subdivisions, spec.abs_tol
        ));
    }
    Ok(est)
}

fn adaptive_simpson<F>(f: &F, a: f64, b: f64, spec: &IntegrationSpec) -> Result<IntegralEstimate>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    adaptive_driver(|x| Ok((f(x), 1)), a, b, spec.abs_tol, spec)
}

/// Adaptive Simpson over `[0, 1]` of a function whose values are themselves
/// integral estimates. Inner error estimates are accumulated with the
/// outer quadrature weights folded into a single bound.
fn nested_adaptive<G>(inner: G, tol: f64, spec: &IntegrationSpec) -> Result<IntegralEstimate>
where
    G: Fn(f64) -> Result<IntegralEstimate>,
{
    let worst_inner = std::cell::Cell::new(0.0f64);
    let all_converged = std::cell::Cell::new(true);
    let mut est = adaptive_driver(
        |x| {
            let e = inner(x)?;
            worst_inner.set(worst_inner.get().max(e.error_estimate));
            all_converged.set(all_converged.get() && e.converged);
            Ok((e.value, e.evaluations))
        },
        0.0,
        1.0,
        tol,
        spec,
    )?;
    // each inner value carries at most `worst_inner` error over a unit domain
    est.error_estimate += worst_inner.get();
    if !all_converged.get() {
        est.converged = false;
        est.note.get_or_insert_with(|| "an inner adaptive integral did not converge".into());
    }
    Ok(est)
}

fn nested_adaptive_3d<F>(f: &F, spec: &IntegrationSpec) -> Result<IntegralEstimate>
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    let tol = spec.abs_tol / 3.0;
    let level = IntegrationSpec { abs_tol: tol, ..spec.clone() };
    nested_adaptive(
        |t| nested_adaptive(|u| adaptive_simpson(&|v| f(t, u, v), 0.0, 1.0, &level), tol, &level),
        tol,
        spec,
    )
}
