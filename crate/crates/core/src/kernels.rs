//! Suppression kernels, perturbation bumps and localization bells.
//!
//! A suppression kernel `K(z)` is a 1-periodic function in `[0, 1]` that is
//! close to 1 away from the integers and dips towards 0 at them. Every family
//! here is a function of `sin²(πz)` only, so it is even about each integer.
//!
//! Bumps `ψ(s)` live on `[0, 1]`, vanish at both ends, and deform `n` and the
//! candidate divisor `m` before the kernel sees their ratio. Bells `Φ(x)` are
//! profiles centred at zero; summed over integer centres they form the comb
//! `Φ_σ(m)` that turns the discrete sum over divisors into an integral.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Squared sine of `πz`, evaluated on the reduced argument `z - round(z)` so
/// that integers give exactly zero.
#[inline]
pub(crate) fn sin2_pi(z: f64) -> f64 {
    let r = z - z.round();
    let s = (PI * r).sin();
    s * s
}

/// `base^p`, using `exp(p·ln base)` for large exponents on `(0, 1)`.
#[inline]
fn pow_stable(base: f64, p: u32) -> f64 {
    if p > 32 && base > 0.0 && base < 1.0 {
        (f64::from(p) * base.ln()).exp()
    } else {
        base.powi(p as i32)
    }
}

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($(#[$vmeta:meta])* $variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ::serde::Serialize, ::serde::Deserialize)]
        pub enum $name {
            $($(#[$vmeta])* #[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl ::std::fmt::Display for $name {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(self.name())
            }
        }

        impl ::std::str::FromStr for $name {
            type Err = $crate::error::Error;

            fn from_str(s: &str) -> $crate::error::Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => {
                        let names: Vec<_> = Self::ALL.iter().map(|v| v.name()).collect();
                        Err($crate::error::Error::invalid(format!(
                            "unknown {} '{}' (expected one of: {})",
                            stringify!($name), other, names.join(", ")
                        )))
                    }
                }
            }
        }
    };
}
pub(crate) use named_enum;

named_enum! {
    /// Closed-form kernel family.
    KernelFamily {
        Sine => "sine",
        ModifiedGaussian => "modified-gaussian",
        SingularExponential => "singular-exponential",
        InversePolynomial => "inverse-polynomial",
    }
}

named_enum! {
    /// Perturbation bump on `[0, 1]`.
    BumpFamily {
        SineSquared => "sine-squared",
        Quartic => "quartic",
        CompactExponential => "compact-exponential",
    }
}

named_enum! {
    /// Bell profile used to build the localization comb.
    BellFamily {
        Gaussian => "gaussian",
        CompactBump => "compact-bump",
        SineSquaredBell => "sine-squared-bell",
    }
}

/// A kernel family together with its sharpness `epsilon`, suppression
/// exponent `p` and the constant `c` of the singular-exponential family.
///
/// `p` is ignored by the modified-gaussian and singular-exponential families,
/// and `c` is used only by the singular-exponential one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub family: KernelFamily,
    pub epsilon: f64,
    pub p: u32,
    pub c: f64,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::sine(1e-5, 8)
    }
}

impl Kernel {
    pub fn sine(epsilon: f64, p: u32) -> Self {
        Kernel { family: KernelFamily::Sine, epsilon, p, c: 1.0 }
    }

    pub fn with_family(self, family: KernelFamily) -> Self {
        Kernel { family, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("eps must be > 0"));
        }
        if self.p < 1 {
            return Err(Error::invalid("p must be >= 1"));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid("c must be > 0"));
        }
        Ok(())
    }

    /// `K(z)`; 1-periodic, in `[0, 1]`.
    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        let s = sin2_pi(z);
        match self.family {
            KernelFamily::Sine => pow_stable(s / (s + self.epsilon), self.p),
            KernelFamily::ModifiedGaussian => -(-s / self.epsilon).exp_m1(),
            KernelFamily::SingularExponential => {
                if s < 1e-300 {
                    0.0
                } else {
                    (-self.c / (self.epsilon * s)).exp()
                }
            }
            // As printed this family equals 1 at the integers, i.e. it does
            // not suppress there. Kept verbatim; `sine` is the default.
            KernelFamily::InversePolynomial => 1.0 / (1.0 + pow_stable(s / self.epsilon, self.p)),
        }
    }

    /// Rough width of the dip around each integer, in units of `z`.
    pub fn feature_width(&self) -> f64 {
        (self.epsilon.sqrt() / PI).min(0.25)
    }

    /// Derivative of order `order` (0..=8) of `K` at `z0`.
    ///
    /// Central finite differences on a stencil of at least five points, with
    /// one Richardson extrapolation between step `h` and `h/2`. The step is
    /// tied to the kernel's dip width so that sharp kernels are resolved.
    pub fn derivative(&self, z0: f64, order: usize) -> Result<f64> {
        if order == 0 {
            return Ok(self.eval(z0));
        }
        if order > MAX_DERIVATIVE_ORDER {
            return Err(Error::invalid(format!("derivative order must be <= {MAX_DERIVATIVE_ORDER}, got {order}")));
        }
        let half = 2.max(order.div_ceil(2));
        let offsets: Vec<f64> = (-(half as i64)..=half as i64).map(|j| j as f64).collect();
        let weights = fornberg_weights(order, &offsets);
        let stencil = |h: f64| -> f64 {
            let sum: f64 = offsets.iter().zip(&weights).map(|(&j, &w)| w * self.eval(z0 + j * h)).sum();
            sum / h.powi(order as i32)
        };

        // Higher orders amplify rounding by h^-order; widen the step with
        // the order so that the amplified noise stays well below the signal.
        let h = (self.feature_width() / 100.0 * (1.0 + order as f64 / 2.0)).max(1e-6);
        let accuracy = 2 * ((2 * half + 2 - order) / 2) as i32;
        let factor = 2f64.powi(accuracy);
        let coarse = stencil(h);
        let fine = stencil(h / 2.0);
        Ok((factor * fine - coarse) / (factor - 1.0))
    }

    /// Tabulates the kernel over one half period for interpolated lookups.
    pub fn tabulate(&self, nodes: usize) -> KernelTable {
        KernelTable::new(*self, nodes)
    }
}

pub const MAX_DERIVATIVE_ORDER: usize = 8;

/// Finite-difference weights for the derivative of order `order` at 0 on the
/// given node offsets (Fornberg's recursion).
pub(crate) fn fornberg_weights(order: usize, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0];
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i];
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Cached kernel values on `[0, 1/2]`, looked up through periodicity and
/// evenness with cubic interpolation.
#[derive(Debug, Clone)]
pub struct KernelTable {
    kernel: Kernel,
    step: f64,
    values: Vec<f64>,
}

impl KernelTable {
    fn new(kernel: Kernel, nodes: usize) -> Self {
        let nodes = nodes.max(16);
        let step = 0.5 / nodes as f64;
        // two guard nodes on each side simplify the cubic stencil
        let values = (0..nodes + 4).map(|i| kernel.eval((i as f64 - 2.0) * step)).collect();
        KernelTable { kernel, step, values }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        let r = (z - z.round()).abs();
        let pos = r / self.step;
        let i = (pos.floor() as usize).min(self.values.len() - 5);
        let f = pos - i as f64;
        let y = &self.values[i + 1..i + 5];
        let (y0, y1, y2, y3) = (y[0], y[1], y[2], y[3]);
        // Catmull-Rom between y1 and y2
        let v = y1 + 0.5 * f * (y2 - y0 + f * (2.0 * y0 - 5.0 * y1 + 4.0 * y2 - y3 + f * (3.0 * (y1 - y2) + y3 - y0)));
        v.clamp(0.0, 1.0)
    }
}

/// Perturbation bump `ψ` on `[0, 1]`.
///
/// The quartic and compact-exponential families peak below 1 (at 1/16 and
/// `e^-4`); `normalized` rescales them so the peak at `s = 1/2` is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub family: BumpFamily,
    #[serde(default)]
    pub normalized: bool,
}

impl Default for Bump {
    fn default() -> Self {
        Bump { family: BumpFamily::SineSquared, normalized: false }
    }
}

impl Bump {
    pub fn new(family: BumpFamily) -> Self {
        Bump { family, normalized: false }
    }

    /// `ψ(s)`, rejecting `s` outside `[0, 1]`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::invalid(format!("bump argument must lie in [0, 1], got {s}")));
        }
        Ok(self.value(s))
    }

    /// `ψ(s)` without the domain check; callers guarantee `s ∈ [0, 1]`.
    #[inline]
    pub(crate) fn value(&self, s: f64) -> f64 {
        match self.family {
            BumpFamily::SineSquared => sin2_pi(s),
            BumpFamily::Quartic => {
                let q = s * s * (1.0 - s) * (1.0 - s);
                if self.normalized {
                    16.0 * q
                } else {
                    q
                }
            }
            BumpFamily::CompactExponential => {
                if s <= 0.0 || s >= 1.0 {
                    return 0.0;
                }
                let e = (-1.0 / (s * (1.0 - s))).exp();
                if self.normalized {
                    e * 4f64.exp()
                } else {
                    e
                }
            }
        }
    }
}

/// Bell profile with localization width `sigma`.
///
/// `truncation_radius` (in units of `sigma`) bounds the gaussian's support;
/// the compact families stop at their exact support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bell {
    pub family: BellFamily,
    pub sigma: f64,
    pub truncation_radius: f64,
}

impl Default for Bell {
    fn default() -> Self {
        Bell::gaussian(0.05)
    }
}

/// `∫ exp(-1/(1-x²)) dx` over `(-1, 1)`.
const COMPACT_BUMP_MASS: f64 = 0.443_993_816_168_079_4;

impl Bell {
    pub fn gaussian(sigma: f64) -> Self {
        Bell { family: BellFamily::Gaussian, sigma, truncation_radius: 8.0 }
    }

    pub fn new(family: BellFamily, sigma: f64) -> Self {
        Bell { family, sigma, truncation_radius: 8.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma must be > 0"));
        }
        if !(self.truncation_radius >= 4.0) {
            return Err(Error::invalid("bell truncation radius must be >= 4"));
        }
        Ok(())
    }

    /// `Φ(x)`: even, maximal at 0, zero outside the support of compact
    /// families.
    ///
    /// The sine-squared bell is `sin²(π(x + 1/2)) = cos²(πx)` on `|x| < 1/2`,
    /// the sine-squared bump recentred at zero.
    #[inline]
    pub fn profile(&self, x: f64) -> f64 {
        match self.family {
            BellFamily::Gaussian => (-x * x).exp(),
            BellFamily::CompactBump => {
                if x.abs() < 1.0 {
                    (-1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            }
            BellFamily::SineSquaredBell => {
                if x.abs() < 0.5 {
                    let c = (PI * x).cos();
                    c * c
                } else {
                    0.0
                }
            }
        }
    }

    /// Support half-width of one bell, in units of `m` (i.e. scaled by `sigma`).
    pub fn reach(&self) -> f64 {
        self.sigma
            * match self.family {
                BellFamily::Gaussian => self.truncation_radius,
                BellFamily::CompactBump => 1.0,
                BellFamily::SineSquaredBell => 0.5,
            }
    }

    /// Mass of a single bell, `∫ Φ((m - k)/σ) dm`.
    pub fn unit_mass(&self) -> f64 {
        self.sigma
            * match self.family {
                BellFamily::Gaussian => PI.sqrt(),
                BellFamily::CompactBump => COMPACT_BUMP_MASS,
                BellFamily::SineSquaredBell => 0.5,
            }
    }

    /// Contribution of the bell centred at `center` to the comb at `m`.
    #[inline]
    pub fn single(&self, m: f64, center: f64) -> f64 {
        let d = m - center;
        if d.abs() > self.reach() {
            0.0
        } else {
            self.profile(d / self.sigma)
        }
    }

    /// The comb `Φ_σ(m) = Σ_{k ≥ k_min} Φ((m - k)/σ)`, restricted to centres
    /// within reach of `m`.
    #[inline]
    pub fn comb(&self, m: f64, k_min: i64) -> f64 {
        let reach = self.reach();
        let lo = ((m - reach).ceil() as i64).max(k_min);
        let hi = (m + reach).floor() as i64;
        (lo..=hi).map(|k| self.single(m, k as f64)).sum()
    }
}
