//! `smoothprime`: evaluate, scan and tabulate the smooth primality filter.

mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use config::{Format, Overrides, RunConfig};
use output::{columns, csv_line, json, sig6};
use rayon::prelude::*;
use serde_json::{json, Value};
use smoothprime::resonance::detection_params;
use smoothprime::{detect_composite, primality_fact, resonance_map, EvalResult, Evaluator, MomentSpec, Variant};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const CONFIG_ENV: &str = "SMOOTHPRIME_CONFIG";

#[derive(Parser)]
#[command(
    name = "smoothprime",
    version,
    about = "Smooth integral-based primality filter",
    after_help = "Settings come from built-in defaults, then the config file (--config or $SMOOTHPRIME_CONFIG, \
                  one `key = value` per line, keys named like the flags), then flags."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate P(n) once
    Eval {
        #[arg(allow_negative_numbers = true)]
        n: f64,
    },
    /// Evaluate and classify every integer in START..=END
    Scan { start: u64, end: u64 },
    /// Summed-triple and reduced values for n = 2..=13
    Table,
    /// Resonance amplitudes A_k(n) and a divisor hint (defaults: delta 1e-3, sine eps 1 p 1, sigma 0.002)
    Resonance {
        #[arg(allow_negative_numbers = true)]
        n: f64,
    },
}

#[derive(Args)]
struct Flags {
    /// Variant: triple-single, summed-triple, reduced-1d, smoothed-integral, smoothed-1d, reordered [default: summed-triple]
    #[arg(long, global = true, value_name = "NAME")]
    variant: Option<String>,
    /// Perturbation size delta in (0, 1) [default: 0.05]
    #[arg(long, global = true, value_name = "X")]
    delta: Option<String>,
    /// Kernel sharpness epsilon [default: 1e-5]
    #[arg(long, global = true, value_name = "X")]
    eps: Option<String>,
    /// Kernel exponent p [default: 8]
    #[arg(long = "p", global = true, value_name = "INT")]
    p: Option<String>,
    /// Inverse-polynomial kernel constant [default: 1]
    #[arg(long, global = true, value_name = "X")]
    c: Option<String>,
    /// Bell width sigma [default: 0.05]
    #[arg(long, global = true, value_name = "X")]
    sigma: Option<String>,
    /// Kernel: sine, modified-gaussian, singular-exponential, inverse-polynomial [default: sine]
    #[arg(long, global = true, value_name = "NAME")]
    kernel: Option<String>,
    /// Bump: sine-squared, quartic, compact-exponential [default: sine-squared]
    #[arg(long, global = true, value_name = "NAME")]
    bump: Option<String>,
    /// Bell: gaussian, compact-bump, sine-squared-bell [default: gaussian]
    #[arg(long, global = true, value_name = "NAME")]
    bell: Option<String>,
    /// Gaussian truncation radius in units of sigma [default: 8]
    #[arg(long, global = true, value_name = "X")]
    truncation: Option<String>,
    /// Outer m-domain of the smoothed variants: padded or literal [default: padded]
    #[arg(long, global = true, value_name = "NAME")]
    domain: Option<String>,
    /// Quadrature: midpoint, trapezoid, simpson, monte-carlo, adaptive [default: simpson]
    #[arg(long, global = true, value_name = "NAME")]
    method: Option<String>,
    /// Grid intervals per axis [default: 32]
    #[arg(long, global = true, value_name = "INT")]
    grid: Option<String>,
    /// Monte Carlo samples [default: 100000]
    #[arg(long, global = true, value_name = "INT")]
    samples: Option<String>,
    /// Monte Carlo seed [default: 0]
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<String>,
    /// Adaptive absolute tolerance [default: 1e-8]
    #[arg(long, global = true, value_name = "X")]
    tol: Option<String>,
    /// Classification threshold in (0, 1) [default: 0.985]
    #[arg(long, global = true, value_name = "X")]
    threshold: Option<String>,
    /// Delta schedule: fixed:X, inverse-square or inverse-log
    #[arg(long, global = true, value_name = "RULE")]
    schedule_delta: Option<String>,
    /// Epsilon schedule: fixed:X or power:C
    #[arg(long, global = true, value_name = "RULE")]
    schedule_eps: Option<String>,
    /// Output: pretty, csv or json [default: pretty]
    #[arg(long, global = true, value_name = "NAME")]
    format: Option<String>,
    /// Worker threads, 0 for one per core [default: 0]
    #[arg(long, global = true, value_name = "INT")]
    jobs: Option<String>,
    /// Taylor truncation order of the resonance amplitudes [default: 4]
    #[arg(long, global = true, value_name = "INT")]
    order: Option<String>,
    /// Relative drop that counts as a resonance hit [default: 0.5]
    #[arg(long, global = true, value_name = "X")]
    rel_threshold: Option<String>,
    /// Config file of `key = value` lines
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
}

impl Flags {
    fn overrides(&self) -> Result<Overrides, String> {
        let given = [
            ("variant", &self.variant),
            ("delta", &self.delta),
            ("eps", &self.eps),
            ("p", &self.p),
            ("c", &self.c),
            ("sigma", &self.sigma),
            ("kernel", &self.kernel),
            ("bump", &self.bump),
            ("bell", &self.bell),
            ("truncation", &self.truncation),
            ("domain", &self.domain),
            ("method", &self.method),
            ("grid", &self.grid),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("tol", &self.tol),
            ("threshold", &self.threshold),
            ("schedule-delta", &self.schedule_delta),
            ("schedule-eps", &self.schedule_eps),
            ("format", &self.format),
            ("jobs", &self.jobs),
            ("order", &self.order),
            ("rel-threshold", &self.rel_threshold),
        ];
        debug_assert_eq!(given.len(), config::KEYS.len());
        let mut out = Overrides::default();
        for (key, value) in given {
            if let Some(v) = value {
                out.set(key, v).map_err(|e| format!("--{key}: {e}"))?;
            }
        }
        Ok(out)
    }
}

/// A message and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<smoothprime::Error> for Failure {
    fn from(e: smoothprime::Error) -> Self {
        use smoothprime::Error::*;
        let code = match e {
            InvalidArgument(_) | ResourceGuard(_) => 2,
            NonFiniteIntegrand { .. } | DegenerateLocalization { .. } => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

type Outcome<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", first.trim_end());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message.replace('\n', " "));
            ExitCode::from(f.code)
        }
    }
}

fn resolve(cli: &Cli) -> Outcome<RunConfig> {
    let file = match cli
        .flags
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
    {
        Some(path) => config::load_config(&path).map_err(Failure::usage)?,
        None => Overrides::default(),
    };
    let overrides = file.merge(cli.flags.overrides().map_err(Failure::usage)?);
    let base = match cli.command {
        Command::Resonance { .. } => RunConfig { params: detection_params(), ..RunConfig::default() },
        _ => RunConfig::default(),
    };
    Ok(overrides.apply(base))
}

fn run(cli: Cli) -> Outcome<String> {
    let cfg = resolve(&cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Failure::usage(format!("cannot start {} workers: {e}", cfg.jobs)))?;
    pool.install(|| match cli.command {
        Command::Eval { n } => cmd_eval(n, &cfg),
        Command::Scan { start, end } => cmd_scan(start, end, &cfg),
        Command::Table => cmd_table(&cfg),
        Command::Resonance { n } => cmd_resonance(n, &cfg),
    })
}

fn evaluator(cfg: &RunConfig, variant: Variant) -> Evaluator {
    let mut e = Evaluator::new(variant, cfg.params.clone(), cfg.integ.clone());
    e.schedule = cfg.schedule.clone();
    e
}

/// `n` as a JSON integer when it is one.
fn json_n(n: f64) -> Value {
    if n.fract() == 0.0 && n.abs() < 9e15 {
        json!(n as i64)
    } else {
        json!(n)
    }
}

fn header(cfg: &RunConfig) -> Value {
    json!({
        "variant": cfg.variant,
        "threshold": cfg.threshold,
        "params": cfg.params,
        "integration": cfg.integ,
        "schedule": {
            "delta": cfg.schedule.delta.map(|r| r.to_string()),
            "epsilon": cfg.schedule.epsilon.map(|r| r.to_string()),
        },
    })
}

fn cmd_eval(n: f64, cfg: &RunConfig) -> Outcome<String> {
    let start = Instant::now();
    let r: EvalResult = evaluator(cfg, cfg.variant).eval(n)?;
    let elapsed = start.elapsed().as_secs_f64();
    Ok(match cfg.format {
        Format::Pretty => format!(
            "P({}) = {} ± {}  ({}, {} evaluations, {} s)\n",
            sig6(n),
            sig6(r.value),
            sig6(r.error_estimate),
            r.variant,
            r.evaluations,
            sig6(elapsed)
        ),
        Format::Csv => {
            csv_line(["n", "variant", "value", "error_estimate", "evaluations", "elapsed"].map(String::from))
                + &csv_line([
                    sig6(n),
                    r.variant.to_string(),
                    sig6(r.value),
                    sig6(r.error_estimate),
                    r.evaluations.to_string(),
                    sig6(elapsed),
                ])
        }
        Format::Json => json(&json!({
            "n": json_n(n),
            "variant": r.variant,
            "value": r.value,
            "error_estimate": r.error_estimate,
            "evaluations": r.evaluations,
            "elapsed": elapsed,
            "params": r.params,
        })),
    })
}

struct ScanRow {
    n: u64,
    result: EvalResult,
    likely_prime: bool,
    is_prime: bool,
    elapsed: f64,
}

/// Runs `f` over `items` on the current pool and returns the results in
/// input order, or the first error in input order.
fn ordered<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> Outcome<R> + Sync + Send) -> Outcome<Vec<R>> {
    let results: Vec<Outcome<R>> = items.par_iter().map(f).collect();
    results.into_iter().collect()
}

fn cmd_scan(start: u64, end: u64, cfg: &RunConfig) -> Outcome<String> {
    if start < 2 || start > end {
        return Err(Failure::usage(format!("bad range {start}..{end}: need 2 <= start <= end")));
    }
    let eval = evaluator(cfg, cfg.variant);
    let ns: Vec<u64> = (start..=end).collect();
    let rows = ordered(&ns, |&n| {
        let t0 = Instant::now();
        let (result, class) = eval.classify(n as f64, cfg.threshold)?;
        Ok(ScanRow {
            n,
            result,
            likely_prime: class.likely_prime,
            is_prime: primality_fact(n)?.is_prime,
            elapsed: t0.elapsed().as_secs_f64(),
        })
    })?;
    Ok(match cfg.format {
        Format::Pretty => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        format!("{:.6}", r.result.value),
                        sig6(r.result.error_estimate),
                        r.likely_prime.to_string(),
                        r.is_prime.to_string(),
                        format!("{:.3}", r.elapsed),
                    ]
                })
                .collect();
            columns(&["n", "value", "error", "likely_prime", "is_prime", "elapsed"], &cells)
        }
        Format::Csv => {
            let mut s = csv_line(["n", "value", "likely_prime", "is_prime", "elapsed"].map(String::from));
            for r in &rows {
                s += &csv_line([
                    r.n.to_string(),
                    sig6(r.result.value),
                    r.likely_prime.to_string(),
                    r.is_prime.to_string(),
                    sig6(r.elapsed),
                ]);
            }
            s
        }
        Format::Json => {
            let data: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "n": r.n,
                        "value": r.result.value,
                        "error_estimate": r.result.error_estimate,
                        "likely_prime": r.likely_prime,
                        "is_prime": r.is_prime,
                        "elapsed": r.elapsed,
                    })
                })
                .collect();
            json(&json!({ "header": header(cfg), "rows": data }))
        }
    })
}

fn cmd_table(cfg: &RunConfig) -> Outcome<String> {
    let triple = evaluator(cfg, Variant::SummedTriple);
    let reduced = evaluator(cfg, Variant::Reduced1d);
    let ns: Vec<u64> = (2..=13).collect();
    let rows = ordered(&ns, |&n| {
        let class = if primality_fact(n)?.is_prime { "prime" } else { "composite" };
        Ok((n, class, triple.eval(n as f64)?.value, reduced.eval(n as f64)?.value))
    })?;
    Ok(match cfg.format {
        Format::Pretty => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|(n, class, t, r)| vec![n.to_string(), class.to_string(), format!("{t:.4}"), format!("{r:.4}")])
                .collect();
            columns(&["n", "class", "triple", "reduced"], &cells)
        }
        Format::Csv => {
            let mut s = csv_line(["n", "class", "triple", "reduced"].map(String::from));
            for (n, class, t, r) in &rows {
                s += &csv_line([n.to_string(), class.to_string(), sig6(*t), sig6(*r)]);
            }
            s
        }
        Format::Json => {
            let data: Vec<Value> = rows
                .iter()
                .map(|(n, class, t, r)| json!({ "n": n, "class": class, "triple": t, "reduced": r }))
                .collect();
            json(&data)
        }
    })
}

fn cmd_resonance(n: f64, cfg: &RunConfig) -> Outcome<String> {
    if !(n.is_finite() && n >= 4.0) {
        return Err(Failure::usage("n must be >= 4"));
    }
    let spec = MomentSpec::for_n(n).with_order(cfg.order);
    let map = resonance_map(n, &cfg.params, &spec, &cfg.integ)?;
    let hit = detect_composite(&map, cfg.rel_threshold)?;
    let summary = match &hit {
        Some(d) => format!("divisor hint {} (k = {}, relative drop {})", d.divisor_hint, d.k, sig6(d.relative_drop)),
        None => "no resonance detected".to_string(),
    };
    Ok(match cfg.format {
        Format::Pretty => {
            let cells: Vec<Vec<String>> = map
                .entries
                .iter()
                .map(|e| vec![e.k.to_string(), sig6(e.amplitude), sig6(e.baseline), format!("{:.4}", e.relative_drop)])
                .collect();
            columns(&["k", "amplitude", "baseline", "relative_drop"], &cells) + &summary + "\n"
        }
        Format::Csv => {
            let mut s = csv_line(["k", "amplitude", "baseline", "relative_drop"].map(String::from));
            for e in &map.entries {
                s += &csv_line([e.k.to_string(), sig6(e.amplitude), sig6(e.baseline), sig6(e.relative_drop)]);
            }
            s + "# " + &summary + "\n"
        }
        Format::Json => json(&json!({
            "n": json_n(n),
            "order": cfg.order,
            "rel_threshold": cfg.rel_threshold,
            "params": cfg.params,
            "rows": map.entries,
            "detection": hit,
            "summary": summary,
        })),
    })
}
