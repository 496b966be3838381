//! A smooth, integral-based surrogate for the prime indicator.
//!
//! `P(n)` averages a periodic suppression kernel `K` over perturbed ratios
//! `n/m`. The kernel vanishes at integers, so every divisor of `n` pulls the
//! average down: primes score close to 1 and composites visibly below it.
//!
//! The crate provides the building blocks ([`kernels`]), quadrature
//! ([`integration`]), the filter in all its forms ([`primality`]), the
//! resonance and moment analysis ([`resonance`]) and exact references for
//! testing ([`oracle`]).
//!
//! ```
//! use smoothprime::{p_reduced_1d, IntegrationSpec, SmoothParams};
//!
//! let spec = IntegrationSpec::simpson(64);
//! let nine = p_reduced_1d(9, &SmoothParams::default(), &spec).unwrap();
//! assert!((nine.value - 0.966).abs() < 0.01);
//! ```

pub mod error;
pub mod integration;
pub mod kernels;
pub mod oracle;
pub mod primality;
pub mod resonance;

pub use error::{Error, Result};
pub use integration::{
    integrate_1d, integrate_1d_on, integrate_2d, integrate_3d, IntegralEstimate, IntegrationSpec, Method,
};
pub use kernels::{Bell, BellFamily, Bump, BumpFamily, Kernel, KernelFamily, KernelTable};
pub use oracle::{brute_force_p, is_prime_wheel, primality_fact, PrimalityFact};
pub use primality::{
    classify, p_reduced_1d, p_smoothed_1d, p_smoothed_integral, p_summed_triple, p_triple_single, resolve_schedule,
    Classification, DeltaRule, Density, EpsilonRule, EvalResult, Evaluator, OuterDomain, ParamSchedule, SmoothParams,
    Variant, DEFAULT_THRESHOLD,
};
pub use resonance::{
    detect_composite, localized_moment, moment_estimate, p_reordered, resonance_amplitude, resonance_map, Detection,
    GivenConstants, MomentSpec, PsiMode, ResonanceMap,
};
