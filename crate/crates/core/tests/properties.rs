use proptest::prelude::*;
use smoothprime::kernels::{Bell, BellFamily, Bump, BumpFamily, Kernel, KernelFamily};
use smoothprime::{
    brute_force_p, integrate_1d, integrate_3d, p_reduced_1d, p_smoothed_1d, p_smoothed_integral, p_summed_triple,
    p_triple_single, primality_fact, IntegrationSpec, Method, SmoothParams, Variant,
};
use std::f64::consts::PI;

fn family() -> impl Strategy<Value = KernelFamily> {
    prop::sample::select(KernelFamily::ALL.to_vec())
}

fn kernel() -> impl Strategy<Value = Kernel> {
    (family(), 1e-6f64..1.0, 1u32..64, 0.1f64..4.0).prop_map(|(family, epsilon, p, c)| Kernel { family, epsilon, p, c })
}

proptest! {
    #[test]
    fn kernels_are_periodic_and_bounded(k in kernel(), z in -50.0f64..50.0, shift in -5i32..5) {
        let a = k.eval(z);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a - k.eval(z + f64::from(shift))).abs() <= 1e-9);
        prop_assert!((a - k.eval(-z)).abs() <= 1e-12);
    }

    #[test]
    fn suppressing_families_vanish_at_integers(k in kernel(), n in -1000i64..1000) {
        prop_assume!(k.family != KernelFamily::InversePolynomial);
        prop_assert_eq!(k.eval(n as f64), 0.0);
    }

    #[test]
    fn sine_kernel_sharpens_with_p(z in 0.001f64..0.999, eps in 1e-6f64..1.0, p1 in 1u32..40, dp in 1u32..40) {
        let lo = Kernel::sine(eps, p1).eval(z);
        let hi = Kernel::sine(eps, p1 + dp).eval(z);
        prop_assert!(hi <= lo);
    }

    #[test]
    fn sine_kernel_decreases_with_eps(z in 0.001f64..0.999, e1 in 1e-6f64..1.0, factor in 1.01f64..100.0, p in 1u32..20) {
        prop_assert!(Kernel::sine(e1 * factor, p).eval(z) <= Kernel::sine(e1, p).eval(z));
    }

    #[test]
    fn bumps_are_bounded_and_symmetric(s in 0.0f64..=1.0, normalized: bool) {
        for family in BumpFamily::ALL {
            let b = Bump { family: *family, normalized };
            let v = b.eval(s).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            if *family != BumpFamily::CompactExponential {
                prop_assert!((v - b.eval(1.0 - s).unwrap()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn bells_are_even_and_peak_at_zero(x in -3.0f64..3.0, sigma in 0.01f64..1.0) {
        for family in BellFamily::ALL {
            let b = Bell::new(*family, sigma);
            let v = b.profile(x);
            prop_assert!(v >= 0.0 && v <= b.profile(0.0));
            prop_assert_eq!(v, b.profile(-x));
        }
    }

    #[test]
    fn gaussian_comb_is_positive_within_reach(m in 2.0f64..50.0, sigma in 0.1f64..1.0) {
        prop_assert!(Bell::gaussian(sigma).comb(m, 2) > 0.0);
    }

    #[test]
    fn grid_rules_are_deterministic(q in 2usize..200, method in prop::sample::select(vec![Method::Midpoint, Method::Trapezoid, Method::Simpson])) {
        let spec = IntegrationSpec::grid(method, q);
        let f = |t: f64| (7.0 * t).sin() + t * t;
        let a = integrate_1d(f, &spec).unwrap();
        prop_assert_eq!(&a, &integrate_1d(f, &spec).unwrap());
        prop_assert!(a.error_estimate >= 0.0);
    }

    #[test]
    fn trial_division_is_consistent(n in 2u64..10_000_000) {
        let fact = primality_fact(n).unwrap();
        prop_assert_eq!(n % fact.smallest_divisor, 0);
        prop_assert_eq!(fact.is_prime, fact.smallest_divisor == n);
    }
}

#[test]
fn derivative_matches_difference_quotients() {
    for k in [Kernel::sine(0.1, 2), Kernel { family: KernelFamily::ModifiedGaussian, ..Kernel::sine(0.05, 1) }] {
        for z in [0.05, 0.21, 0.4] {
            let exact = k.derivative(z, 1).unwrap();
            let fd = |h: f64| (k.eval(z + h) - k.eval(z - h)) / (2.0 * h);
            let (e1, e2) = ((fd(2e-3) - exact).abs(), (fd(1e-3) - exact).abs());
            let order = (e1 / e2).log2();
            assert!((order - 2.0).abs() < 0.15, "{} z={z}: order {order}", k.family);
        }
    }
}

#[test]
fn simpson_error_falls_sixteenfold_per_doubling() {
    let f = |t: f64| (2.0 * t).exp() * (3.0 * t).cos();
    let exact = ((2.0f64.exp() * (2.0 * 3f64.cos() + 3.0 * 3f64.sin())) - 2.0) / 13.0;
    let err = |q| (integrate_1d(f, &IntegrationSpec::simpson(q)).unwrap().value - exact).abs();
    for q in [8, 16, 32, 64] {
        let ratio = err(q) / err(2 * q);
        assert!((ratio - 16.0).abs() < 1.0, "q={q}: {ratio}");
    }
}

#[test]
fn monte_carlo_is_unbiased_across_seeds() {
    let f = |t: f64| (PI * t).sin().powi(2) + t.powi(3);
    let reference = integrate_1d(f, &IntegrationSpec::simpson(256)).unwrap().value;
    let runs: Vec<_> =
        (0..50).map(|seed| integrate_1d(f, &IntegrationSpec::monte_carlo(2000, seed)).unwrap()).collect();
    let mean = runs.iter().map(|r| r.value).sum::<f64>() / 50.0;
    let pooled = (runs.iter().map(|r| r.error_estimate.powi(2)).sum::<f64>() / 50.0).sqrt() / 50f64.sqrt();
    assert!((mean - reference).abs() <= 4.0 * pooled, "{mean} vs {reference} (se {pooled})");
}

#[test]
fn tensor_product_of_separable_integrand() {
    let (f, g, h) = (|t: f64| t.exp(), |u: f64| (2.0 * u).cos(), |v: f64| 1.0 + v * v);
    for method in [Method::Midpoint, Method::Trapezoid, Method::Simpson] {
        let spec = IntegrationSpec::grid(method, 20);
        let product = [
            integrate_1d(f, &spec).unwrap().value,
            integrate_1d(g, &spec).unwrap().value,
            integrate_1d(h, &spec).unwrap().value,
        ];
        let cube = integrate_3d(|t, u, v| f(t) * g(u) * h(v), &spec).unwrap().value;
        assert!((cube - product.iter().product::<f64>()).abs() < 1e-9, "{method}");
    }
}

#[test]
fn every_variant_stays_in_range() {
    let params = SmoothParams::default();
    let spec = IntegrationSpec { collapse_u: true, ..IntegrationSpec::simpson(16) };
    let in_range = |v: f64, e: f64| (0.0..=1.0 + e).contains(&v);
    for n in 2..=100u64 {
        let r = p_summed_triple(n, &params, &spec).unwrap();
        assert!(in_range(r.value, r.error_estimate), "summed n={n}");
        let r = p_reduced_1d(n, &params, &spec).unwrap();
        assert!(in_range(r.value, r.error_estimate), "reduced n={n}");
    }
    for n in (2..=100).step_by(7) {
        let nf = n as f64;
        let r = p_triple_single(nf, &params, &IntegrationSpec::simpson(16)).unwrap();
        assert!(in_range(r.value, r.error_estimate));
        if n > 2 {
            let r = p_smoothed_1d(nf + 0.25, &params, &spec, &spec).unwrap();
            assert!(in_range(r.value, r.error_estimate));
            let r = p_smoothed_integral(
                nf,
                &params,
                &IntegrationSpec { collapse_u: true, ..IntegrationSpec::simpson(8) },
                &spec,
            )
            .unwrap();
            assert!(in_range(r.value, r.error_estimate));
        }
    }
}

#[test]
fn reduced_never_exceeds_triple_on_tabulated_composites() {
    let params = SmoothParams::default();
    let spec = IntegrationSpec::simpson(64);
    for n in [4, 6, 8, 9, 10, 12] {
        let reduced = p_reduced_1d(n, &params, &spec).unwrap().value;
        let triple = p_summed_triple(n, &params, &spec).unwrap().value;
        assert!(reduced <= triple, "n={n}: {reduced} > {triple}");
    }
}

#[test]
fn summed_triple_ignores_u() {
    let params = SmoothParams::default();
    for n in [5, 8, 12] {
        let full = p_summed_triple(n, &params, &IntegrationSpec::simpson(48)).unwrap();
        let flat =
            p_summed_triple(n, &params, &IntegrationSpec { collapse_u: true, ..IntegrationSpec::simpson(48) }).unwrap();
        assert!((full.value - flat.value).abs() < 1e-10);
    }
}

#[test]
fn separation_on_two_to_thirty() {
    let params = SmoothParams::default();
    let spec = IntegrationSpec::simpson(32);
    for eval in [&(|n| p_summed_triple(n, &params, &spec).unwrap().value) as &dyn Fn(u64) -> f64, &|n| {
        p_reduced_1d(n, &params, &spec).unwrap().value
    }] {
        let (primes, composites): (Vec<u64>, Vec<u64>) = (2..=30).partition(|&n| primality_fact(n).unwrap().is_prime);
        let prime_min = primes.iter().map(|&n| eval(n)).fold(f64::INFINITY, f64::min);
        let composite_max = composites.iter().map(|&n| eval(n)).fold(f64::NEG_INFINITY, f64::max);
        assert!(prime_min > composite_max, "{prime_min} vs {composite_max}");
    }
}

#[test]
fn reference_values_are_resolution_stable() {
    let params = SmoothParams::default();
    for n in 2..=13u64 {
        let nf = n as f64;
        let coarse = brute_force_p(nf, Variant::SummedTriple, &params, 128).unwrap();
        let fine = brute_force_p(nf, Variant::SummedTriple, &params, 256).unwrap();
        assert!((coarse - fine).abs() <= 1e-4, "summed n={n}: {coarse} vs {fine}");
        let coarse = brute_force_p(nf, Variant::Reduced1d, &params, 256).unwrap();
        let fine = brute_force_p(nf, Variant::Reduced1d, &params, 512).unwrap();
        assert!((coarse - fine).abs() <= 1e-4, "reduced n={n}: {coarse} vs {fine}");
    }
}
