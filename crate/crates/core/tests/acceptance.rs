//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use smoothprime::integration::{integrate_1d, IntegrationSpec};
use smoothprime::kernels::{Kernel, KernelFamily};
use smoothprime::resonance::{detection_params, DETECTION_THRESHOLD};
use smoothprime::{
    detect_composite, moment_estimate, p_reduced_1d, p_reordered, p_smoothed_1d, p_smoothed_integral, p_summed_triple,
    primality_fact, resonance_map, GivenConstants, MomentSpec, PsiMode, SmoothParams,
};

/// Tabulated `(n, triple, reduced)` values, rounded to three decimals.
const TABLE: [(u64, f64, f64); 12] = [
    (2, 1.000, 1.000),
    (3, 1.000, 1.000),
    (4, 0.919, 0.863),
    (5, 1.000, 1.000),
    (6, 0.913, 0.867),
    (7, 1.000, 1.000),
    (8, 0.936, 0.907),
    (9, 0.975, 0.966),
    (10, 0.947, 0.926),
    (11, 1.000, 1.000),
    (12, 0.917, 0.891),
    (13, 1.000, 1.000),
];

const TABLE_TOL: f64 = 0.02;
const PRIME_TOL: f64 = 0.005;
const ORDERING_SLACK: f64 = 0.005;
const SEPARATION_MARGIN: f64 = 0.02;
const INDICATOR_TOL: f64 = 0.15;
const SHARPENING_SLACK: f64 = 1e-4;
const FUBINI_TOL: f64 = 1e-3;
const COMB_LIMIT_TOL: f64 = 0.01;
const HINT_RATE: f64 = 0.9;
const MOMENT_TOL: f64 = 1e-6;
const SIMPSON_ORDER: f64 = 3.9;
const MC_SIGMAS: f64 = 3.0;
const SMOOTH_ORDER: f64 = 1.8;

fn is_prime(n: u64) -> bool {
    primality_fact(n).unwrap().is_prime
}

struct Outcome {
    pass: bool,
    details: String,
}

fn outcome(pass: bool, details: impl Into<String>) -> Outcome {
    Outcome { pass, details: details.into() }
}

fn table_summed_triple() -> Outcome {
    let params = SmoothParams::default();
    let spec = IntegrationSpec::simpson(64);
    let mut worst = (0, 0.0f64);
    let mut pass = true;
    for (n, expect, _) in TABLE {
        let v = p_summed_triple(n, &params, &spec).unwrap().value;
        let tol = if is_prime(n) { PRIME_TOL } else { TABLE_TOL };
        let err = (v - expect).abs();
        pass &= err <= tol;
        if err > worst.1 {
            worst = (n, err);
        }
    }
    outcome(pass, format!("max |P - table| = {:.4} at n = {}", worst.1, worst.0))
}

fn table_reduced() -> Outcome {
    let params = SmoothParams::default();
    let spec = IntegrationSpec::simpson(64);
    let mut worst = (0, 0.0f64);
    let mut pass = true;
    let mut ordering = true;
    for (n, _, expect) in TABLE {
        let v = p_reduced_1d(n, &params, &spec).unwrap().value;
        let tol = if is_prime(n) { PRIME_TOL } else { TABLE_TOL };
        let err = (v - expect).abs();
        pass &= err <= tol;
        if err > worst.1 {
            worst = (n, err);
        }
        if !is_prime(n) {
            let triple = p_summed_triple(n, &params, &spec).unwrap().value;
            ordering &= v <= triple + ORDERING_SLACK;
        }
    }
    outcome(
        pass && ordering,
        format!("max |P - table| = {:.4} at n = {}; composite reduced <= triple: {ordering}", worst.1, worst.0),
    )
}

fn separation() -> Outcome {
    let params = SmoothParams::default();
    let spec = IntegrationSpec::simpson(64);
    let mut details = Vec::new();
    let mut pass = true;
    for (name, eval) in [
        ("summed-triple", &(|n| p_summed_triple(n, &params, &spec).unwrap().value) as &dyn Fn(u64) -> f64),
        ("reduced-1d", &|n| p_reduced_1d(n, &params, &spec).unwrap().value),
    ] {
        let (mut prime_min, mut comp_max, mut worst) = (f64::INFINITY, f64::NEG_INFINITY, 0);
        for n in 2..=30 {
            let v = eval(n);
            if is_prime(n) {
                prime_min = prime_min.min(v);
            } else if v > comp_max {
                comp_max = v;
                worst = n;
            }
        }
        let margin = prime_min - comp_max;
        pass &= margin >= SEPARATION_MARGIN;
        details.push(format!("{name} margin {margin:.4} (composite max at n = {worst})"));
    }
    outcome(pass, details.join("; "))
}

fn indicator_approximation() -> Outcome {
    let spec = IntegrationSpec { collapse_u: true, ..IntegrationSpec::simpson(64) };
    let mut best: Option<(f64, String)> = None;
    for family in [KernelFamily::Sine, KernelFamily::ModifiedGaussian, KernelFamily::SingularExponential] {
        for delta in [0.01, 0.05, 0.2, 0.4] {
            for eps in [1e-1, 1e-2, 1e-3, 1e-5] {
                for p in [1, 8] {
                    if family != KernelFamily::Sine && p != 1 {
                        continue;
                    }
                    let params = SmoothParams {
                        delta,
                        kernel: Kernel { family, epsilon: eps, p, c: 1.0 },
                        ..SmoothParams::default()
                    };
                    let err = (2..14)
                        .map(|m| {
                            let chi = if is_prime(m) { 1.0 } else { 0.0 };
                            (p_summed_triple(m, &params, &spec).unwrap().value - chi).abs()
                        })
                        .fold(0.0, f64::max);
                    if best.as_ref().map_or(true, |b| err < b.0) {
                        best = Some((err, format!("{family} delta={delta} eps={eps} p={p}")));
                    }
                }
            }
        }
    }
    let (err, tuple) = best.unwrap();
    outcome(
        err < INDICATOR_TOL,
        format!(
            "best max |P - chi| over 2..13 is {err:.3} ({tuple}); n = 9 has one divisor among 7 candidates, \
             so P(9) < 0.15 needs the non-divisor terms below 0.18, and those same terms make up P(13)"
        ),
    )
}

fn sharpening() -> Outcome {
    let spec = IntegrationSpec::simpson(64);
    let with = |eps: f64, p: u32| SmoothParams { kernel: Kernel::sine(eps, p), ..SmoothParams::default() };
    let loose = 1.0 - p_summed_triple(7, &with(1e-4, 8), &spec).unwrap().value;
    let tight = 1.0 - p_summed_triple(7, &with(1e-6, 8), &spec).unwrap().value;
    let low = p_summed_triple(6, &with(1e-5, 6), &spec).unwrap().value;
    let high = p_summed_triple(6, &with(1e-5, 10), &spec).unwrap().value;
    outcome(
        tight < loose && high <= low + SHARPENING_SLACK,
        format!("n=7: 1-P {loose:.3e} -> {tight:.3e}; n=6: P(p=6) {low:.5} P(p=10) {high:.5}"),
    )
}

fn fubini() -> Outcome {
    let params = SmoothParams::default();
    // the kernel dip moves through m as t varies, so both orders need a
    // fine m grid
    let t_spec = IntegrationSpec::simpson(1024);
    let m_spec = IntegrationSpec::simpson(512);
    let mut worst = (0.0, 0.0f64);
    for n in [4.0, 6.0, 7.0, 9.0, 15.0] {
        let a = p_reordered(n, &params, &t_spec, &m_spec).unwrap().value;
        let b = p_smoothed_1d(n, &params, &t_spec, &IntegrationSpec::simpson(8000)).unwrap().value;
        if (a - b).abs() >= worst.1 {
            worst = (n, (a - b).abs());
        }
    }
    outcome(worst.1 <= FUBINI_TOL, format!("max |reordered - smoothed-1d| = {:.2e} at n = {}", worst.1, worst.0))
}

fn comb_limit() -> Outcome {
    let params = SmoothParams::default();
    let inner = IntegrationSpec { collapse_u: true, ..IntegrationSpec::simpson(64) };
    let outer = IntegrationSpec::simpson(32);
    let (mut worst_3d, mut worst_1d) = ((0, 0.0f64), (0, 0.0f64));
    for n in 4..=13u64 {
        let nf = n as f64;
        let d3 = (p_smoothed_integral(nf, &params, &inner, &outer).unwrap().value
            - p_summed_triple(n, &params, &inner).unwrap().value)
            .abs();
        let d1 = (p_smoothed_1d(nf, &params, &inner, &outer).unwrap().value
            - p_reduced_1d(n, &params, &inner).unwrap().value)
            .abs();
        if d3 > worst_3d.1 {
            worst_3d = (n, d3);
        }
        if d1 > worst_1d.1 {
            worst_1d = (n, d1);
        }
    }
    outcome(
        worst_3d.1 <= COMB_LIMIT_TOL && worst_1d.1 <= COMB_LIMIT_TOL,
        format!(
            "sigma=0.05: max diff smoothed-integral {:.4} (n = {}), smoothed-1d {:.4} (n = {}); \
             the bells average K over m within ~sigma of each divisor and blur its narrow dip",
            worst_3d.1, worst_3d.0, worst_1d.1, worst_1d.0
        ),
    )
}

fn detection() -> Outcome {
    let params = detection_params();
    let spec = IntegrationSpec::simpson(32);
    let (mut wrong, mut hits, mut good_hints) = (Vec::new(), 0, 0);
    for n in 4..=60u64 {
        let map = resonance_map(n as f64, &params, &MomentSpec::for_n(n as f64), &spec).unwrap();
        let hit = detect_composite(&map, DETECTION_THRESHOLD).unwrap();
        let composite = !is_prime(n);
        if hit.is_some() != composite {
            wrong.push(n);
        }
        if let (true, Some(h)) = (composite, hit) {
            hits += 1;
            if n % h.divisor_hint == 0 {
                good_hints += 1;
            }
        }
    }
    let rate = if hits == 0 { 0.0 } else { good_hints as f64 / hits as f64 };
    outcome(
        wrong.is_empty() && rate >= HINT_RATE,
        format!(
            "misclassified {:?}; divisor hints correct in {good_hints}/{hits} \
             (delta=1e-3, sine eps=1 p=1, gaussian sigma=0.002, R=4, threshold {DETECTION_THRESHOLD})",
            wrong
        ),
    )
}

fn moment_arithmetic() -> Outcome {
    // 1 - 0.92 * (9.87 / 2) * (0.1 / 3)^2, evaluated independently
    const EXPECTED: f64 = 0.994_955_333_333_333_3;
    let params = SmoothParams { delta: 0.1, ..SmoothParams::default() };
    let given = GivenConstants { phi_ratio: 0.92, k2: 9.87 };
    let v = moment_estimate(15, 3, &params, Some(given), PsiMode::Peak).unwrap();
    outcome((v - EXPECTED).abs() <= MOMENT_TOL, format!("value {v:.10} (expected {EXPECTED:.10})"))
}

fn integration_backends() -> Outcome {
    use std::f64::consts::PI;
    let simpson = |f: &(dyn Fn(f64) -> f64 + Sync), q| integrate_1d(f, &IntegrationSpec::simpson(q)).unwrap().value;

    let periodic = |t: f64| (PI * t).sin().powi(2);
    let periodic_err = [8, 16, 32].map(|q| (simpson(&periodic, q) - 0.5).abs()).iter().fold(0.0, |a: f64, b| a.max(*b));
    let at_roundoff = periodic_err < 1e-14;

    let skew = |t: f64| (PI * t / 3.0).sin().powi(2);
    let exact = 0.5 - 3.0 * 3f64.sqrt() / (8.0 * PI);
    let (e16, e32) = ((simpson(&skew, 16) - exact).abs(), (simpson(&skew, 32) - exact).abs());
    let order = (e16 / e32).log2();

    let params = SmoothParams::default();
    let k = params.kernel;
    let psi = |t: f64| (PI * t).sin().powi(2);
    let f = |t: f64| k.eval((5.0 + params.delta * psi(t)) / (2.0 + params.delta * psi(t)));
    let reference = integrate_1d(f, &IntegrationSpec::simpson(4096)).unwrap().value;
    let mc_spec = IntegrationSpec::monte_carlo(200_000, 2024);
    let mc = integrate_1d(f, &mc_spec).unwrap();
    let mc_ok = (mc.value - reference).abs() <= MC_SIGMAS * mc.error_estimate;

    let runs: Vec<u64> = [1, 2, 8]
        .iter()
        .map(|&threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| integrate_1d(f, &mc_spec).unwrap().value.to_bits())
        })
        .collect();
    let identical = runs.windows(2).all(|w| w[0] == w[1]);

    outcome(
        (at_roundoff || order >= SIMPSON_ORDER) && order >= SIMPSON_ORDER && mc_ok && identical,
        format!(
            "sin^2(pi t) max error {periodic_err:.1e} (exact to rounding); order on sin^2(pi t/3) {order:.2}; \
             monte-carlo {:.6} vs simpson {reference:.6} (se {:.1e}); bit-identical across 1/2/8 threads: {identical}",
            mc.value, mc.error_estimate
        ),
    )
}

fn smoothness() -> Outcome {
    let params = SmoothParams::default();
    // outer nodes slide with n; a dense outer grid keeps their aliasing
    // error below the O(h²) difference error being measured
    let inner = IntegrationSpec::simpson(256);
    let outer = IntegrationSpec::simpson(12_000);
    let p = |n: f64| p_smoothed_1d(n, &params, &inner, &outer).unwrap().value;
    let n0 = 7.5;
    let steps = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let d: Vec<f64> = steps.iter().map(|h| (p(n0 + h) - p(n0 - h)) / (2.0 * h)).collect();
    let deltas: Vec<f64> = d.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    let orders: Vec<f64> = deltas.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let pass = orders.iter().all(|o| *o >= SMOOTH_ORDER);
    outcome(pass, format!("P'(7.5) ~ {:.6}; observed orders {orders:.2?}", d[d.len() - 1]))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("summed-triple table", table_summed_triple),
        ("reduced-1d table and ordering", table_reduced),
        ("prime/composite separation on [2, 30]", separation),
        ("indicator approximation on [2, 14)", indicator_approximation),
        ("sharpening in eps and p", sharpening),
        ("reordered integral", fubini),
        ("comb limit at sigma = 0.05", comb_limit),
        ("resonance detection on [4, 60]", detection),
        ("moment estimate arithmetic", moment_arithmetic),
        ("integration backends", integration_backends),
        ("smoothness at n = 7.5", smoothness),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<40} {} ({}) [{:.1}s]",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.details,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
