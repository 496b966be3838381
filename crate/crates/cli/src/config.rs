//! Run configuration: defaults, `key = value` files and flag overrides.

use smoothprime::kernels::{Bell, Bump};
use smoothprime::{
    BellFamily, BumpFamily, DeltaRule, EpsilonRule, IntegrationSpec, KernelFamily, Method, OuterDomain, ParamSchedule,
    SmoothParams, Variant, DEFAULT_THRESHOLD,
};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Pretty,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pretty" => Ok(Format::Pretty),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format '{s}' (expected pretty, csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Pretty => "pretty",
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Everything a command needs, fully resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub variant: Variant,
    pub params: SmoothParams,
    pub integ: IntegrationSpec,
    pub schedule: ParamSchedule,
    pub threshold: f64,
    pub format: Format,
    /// Worker threads, 0 for one per core.
    pub jobs: usize,
    pub order: usize,
    pub rel_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            variant: Variant::SummedTriple,
            params: SmoothParams::default(),
            integ: IntegrationSpec::default(),
            schedule: ParamSchedule::default(),
            threshold: DEFAULT_THRESHOLD,
            format: Format::Pretty,
            jobs: 0,
            order: 4,
            rel_threshold: smoothprime::resonance::DETECTION_THRESHOLD,
        }
    }
}

/// Keys accepted in config files; each is also a `--flag`.
pub const KEYS: &[&str] = &[
    "variant",
    "delta",
    "eps",
    "p",
    "c",
    "sigma",
    "kernel",
    "bump",
    "bell",
    "truncation",
    "domain",
    "method",
    "grid",
    "samples",
    "seed",
    "tol",
    "threshold",
    "schedule-delta",
    "schedule-eps",
    "format",
    "jobs",
    "order",
    "rel-threshold",
];

/// Settings given explicitly, by a file or on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    variant: Option<Variant>,
    delta: Option<f64>,
    eps: Option<f64>,
    p: Option<u32>,
    c: Option<f64>,
    sigma: Option<f64>,
    kernel: Option<KernelFamily>,
    bump: Option<BumpFamily>,
    bell: Option<BellFamily>,
    truncation: Option<f64>,
    domain: Option<OuterDomain>,
    method: Option<Method>,
    grid: Option<usize>,
    samples: Option<usize>,
    seed: Option<u64>,
    tol: Option<f64>,
    threshold: Option<f64>,
    schedule_delta: Option<DeltaRule>,
    schedule_eps: Option<EpsilonRule>,
    format: Option<Format>,
    jobs: Option<usize>,
    order: Option<usize>,
    rel_threshold: Option<f64>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| format!("{key}: cannot parse '{value}': {e}"))
}

fn positive(key: &str, value: &str) -> Result<f64, String> {
    let x: f64 = parse(key, value)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{key} must be > 0"))
    }
}

fn unit_open(key: &str, value: &str) -> Result<f64, String> {
    let x: f64 = parse(key, value)?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(format!("{key} must lie in (0, 1)"))
    }
}

fn at_least<T: FromStr + PartialOrd + fmt::Display>(key: &str, value: &str, min: T) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    let x: T = parse(key, value)?;
    if x >= min {
        Ok(x)
    } else {
        Err(format!("{key} must be >= {min}"))
    }
}

impl Overrides {
    /// Parses and range-checks one setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let key = key.replace('_', "-");
        let k = key.as_str();
        let value = value.trim();
        match k {
            "variant" => self.variant = Some(parse(k, value)?),
            "delta" => {
                let x = positive(k, value)?;
                if x >= 1.0 {
                    return Err("delta must be < 1".into());
                }
                self.delta = Some(x)
            }
            "eps" => self.eps = Some(positive(k, value)?),
            "p" => self.p = Some(at_least(k, value, 1)?),
            "c" => self.c = Some(positive(k, value)?),
            "sigma" => self.sigma = Some(positive(k, value)?),
            "kernel" => self.kernel = Some(parse(k, value)?),
            "bump" => self.bump = Some(parse(k, value)?),
            "bell" => self.bell = Some(parse(k, value)?),
            "truncation" => self.truncation = Some(positive(k, value)?),
            "domain" => self.domain = Some(parse(k, value)?),
            "method" => self.method = Some(parse(k, value)?),
            "grid" => self.grid = Some(at_least(k, value, 1)?),
            "samples" => self.samples = Some(at_least(k, value, 1)?),
            "seed" => self.seed = Some(parse(k, value)?),
            "tol" => self.tol = Some(positive(k, value)?),
            "threshold" => self.threshold = Some(unit_open(k, value)?),
            "schedule-delta" => self.schedule_delta = Some(parse(k, value)?),
            "schedule-eps" => self.schedule_eps = Some(parse(k, value)?),
            "format" => self.format = Some(parse(k, value)?),
            "jobs" => self.jobs = Some(parse(k, value)?),
            "order" => {
                let order: usize = parse(k, value)?;
                if order > smoothprime::kernels::MAX_DERIVATIVE_ORDER {
                    return Err(format!("order must be <= {}", smoothprime::kernels::MAX_DERIVATIVE_ORDER));
                }
                self.order = Some(order)
            }
            "rel-threshold" => self.rel_threshold = Some(unit_open(k, value)?),
            _ => return Err(format!("unknown key '{k}'")),
        }
        Ok(())
    }

    /// `self` with every setting present in `over` replaced.
    pub fn merge(self, over: Overrides) -> Overrides {
        macro_rules! pick {
            ($($f:ident),*) => { Overrides { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            variant,
            delta,
            eps,
            p,
            c,
            sigma,
            kernel,
            bump,
            bell,
            truncation,
            domain,
            method,
            grid,
            samples,
            seed,
            tol,
            threshold,
            schedule_delta,
            schedule_eps,
            format,
            jobs,
            order,
            rel_threshold
        )
    }

    /// Applies the overrides on top of `base`.
    pub fn apply(&self, base: RunConfig) -> RunConfig {
        let mut cfg = base;
        let params = &mut cfg.params;
        if let Some(v) = self.delta {
            params.delta = v;
        }
        let kernel = &mut params.kernel;
        if let Some(v) = self.kernel {
            kernel.family = v;
        }
        if let Some(v) = self.eps {
            kernel.epsilon = v;
        }
        if let Some(v) = self.p {
            kernel.p = v;
        }
        if let Some(v) = self.c {
            kernel.c = v;
        }
        if let Some(v) = self.bump {
            params.bump = Bump::new(v);
        }
        let bell = &mut params.bell;
        if let Some(v) = self.bell {
            *bell = Bell { family: v, ..*bell };
        }
        if let Some(v) = self.sigma {
            bell.sigma = v;
        }
        if let Some(v) = self.truncation {
            bell.truncation_radius = v;
        }
        if let Some(v) = self.domain {
            params.outer_domain = v;
        }
        let integ = &mut cfg.integ;
        if let Some(v) = self.method {
            integ.method = v;
        }
        if let Some(v) = self.grid {
            integ.grid_points = v;
        }
        if let Some(v) = self.samples {
            integ.samples = v;
        }
        if let Some(v) = self.seed {
            integ.seed = v;
        }
        if let Some(v) = self.tol {
            integ.abs_tol = v;
        }
        if let Some(v) = self.schedule_delta {
            cfg.schedule.delta = Some(v);
        }
        if let Some(v) = self.schedule_eps {
            cfg.schedule.epsilon = Some(v);
        }
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = self.format {
            cfg.format = v;
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        if let Some(v) = self.order {
            cfg.order = v;
        }
        if let Some(v) = self.rel_threshold {
            cfg.rel_threshold = v;
        }
        cfg
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Overrides, String> {
    let mut out = Overrides::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| format!("line {}: expected 'key = value', got '{line}'", i + 1))?;
        out.set(key.trim(), value).map_err(|e| format!("line {}: {e}", i + 1))?;
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<Overrides, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}
