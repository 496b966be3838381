//! Exact ground truth for tests: integer primality and high-resolution
//! reference values of `P(n)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integration::IntegrationSpec;
use crate::primality::{Evaluator, SmoothParams, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimalityFact {
    pub n: u64,
    pub is_prime: bool,
    /// Smallest divisor `d ≥ 2`; equals `n` exactly when `n` is prime.
    pub smallest_divisor: u64,
}

/// Trial division up to `√n`.
pub fn primality_fact(n: u64) -> Result<PrimalityFact> {
    if n < 2 {
        return Err(Error::invalid("n must be >= 2"));
    }
    let smallest_divisor = (2..).take_while(|d| d * d <= n).find(|d| n % d == 0).unwrap_or(n);
    Ok(PrimalityFact { n, is_prime: smallest_divisor == n, smallest_divisor })
}

/// Primality by trial division over `6k ± 1`.
pub fn is_prime_wheel(n: u64) -> bool {
    if n < 4 {
        return n >= 2;
    }
    if n % 2 == 0 || n % 3 == 0 {
        return false;
    }
    let mut d = 5;
    while d * d <= n {
        if n % d == 0 || n % (d + 2) == 0 {
            return false;
        }
        d += 6;
    }
    true
}

pub const MIN_RESOLUTION: usize = 128;
const MAX_CUBE_NODES: u128 = 1_000_000_000;

/// `P(n)` with Simpson grids of `resolution` intervals on every axis.
/// `P(2) = 1` for every variant.
pub fn brute_force_p(n: f64, variant: Variant, params: &SmoothParams, resolution: usize) -> Result<f64> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::invalid(format!("resolution must be >= {MIN_RESOLUTION}")));
    }
    let cubic = matches!(variant, Variant::TripleSingle | Variant::SummedTriple | Variant::SmoothedIntegral);
    if cubic && (resolution as u128).pow(3) > MAX_CUBE_NODES {
        return Err(Error::ResourceGuard(format!("{resolution}^3 grid nodes exceed the limit of {MAX_CUBE_NODES}")));
    }
    if n == 2.0 {
        return Ok(1.0);
    }
    let spec = IntegrationSpec::simpson(resolution);
    Evaluator::new(variant, params.clone(), spec).eval(n).map(|r| r.value)
}
