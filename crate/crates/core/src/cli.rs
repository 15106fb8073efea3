//! Command-line front end. Data goes to the output stream as one JSON
//! record (or CSV for `pmf --format csv`); diagnostics go to the error
//! stream.
//!
//! Exit codes: 0 success, 1 usage error, 2 tolerance or convergence failure,
//! 3 resource limit.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::asymptotics::{
    kappa, limit_cdf_det, limit_cdf_p1, limit_cdf_schehr, moment_asymptotic, LimitCdfQuery,
};
use crate::error::MelonError;
use crate::exact::{count_bounded, count_total, exact_moment, height_pmf, rational_to_f64, WatermelonSpec};
use crate::paths::compute_height;
use crate::sampler::{empirical_height, sample_watermelons, SamplerConfig};
use crate::verify::{finite_cdf, run_suite, Suite};

/// Largest `n` accepted by the exact height distribution and moments.
pub const MAX_EXACT_N: u32 = 5000;
/// Largest `n` accepted by `count`.
pub const MAX_COUNT_N: u32 = 100_000;
/// Largest `count * n` accepted by `sample`.
pub const MAX_SAMPLE_WORK: u64 = 200_000_000;

const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "melon", version, about = "Height statistics of p-watermelons with a wall")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MomentMode {
    Exact,
    Asymptotic,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CdfForm {
    Det,
    Schehr,
    P1,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Reciprocity,
    Dirichlet,
    Identities,
    Convergence,
    All,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Number of watermelons, or of those with height below --max-height.
    Count {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: u32,
        /// Count only watermelons of height strictly less than this.
        #[arg(long)]
        max_height: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Exact height distribution.
    Pmf {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Height moment E[H^s], exact and/or asymptotic.
    Moment {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        s: u32,
        #[arg(long, value_enum, default_value = "both")]
        mode: MomentMode,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Moment constant kappa_s.
    Kappa {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Limiting (or exact finite-n) distribution function at scaled height t.
    Cdf {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum, default_value = "det")]
        form: CdfForm,
        #[arg(long, required_if_eq("form", "exact"))]
        n: Option<u32>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Uniform random watermelons.
    Sample {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        count: u64,
        #[arg(long)]
        seed: u64,
        /// Report height statistics instead of the paths.
        #[arg(long)]
        stats: bool,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run the built-in property suites.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
    },
}

#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub err_estimate: Option<f64>,
    pub wall_time_ms: u128,
}

enum Failure {
    Usage(String),
    Tolerance(String),
    Resource(String),
}

impl From<MelonError> for Failure {
    fn from(e: MelonError) -> Self {
        match e {
            MelonError::InvalidInput(_) | MelonError::Pole { .. } => Failure::Usage(e.to_string()),
            MelonError::NonConvergence { .. } | MelonError::Quadrature { .. } => Failure::Tolerance(e.to_string()),
            MelonError::ResourceLimit(_) => Failure::Resource(e.to_string()),
        }
    }
}

enum Output {
    Record(OutputRecord),
    Csv(String),
    /// A record whose computation ran but failed its checks.
    Failed(OutputRecord),
}

/// `%.17g`-style formatting.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.16e}")
    }
}

fn spec(p: u32, n: u32) -> Result<WatermelonSpec, Failure> {
    Ok(WatermelonSpec::new(p, n)?)
}

fn check_tol(tol: Option<f64>) -> Result<f64, Failure> {
    match tol {
        None => Ok(DEFAULT_TOL),
        Some(t) if t > 0.0 && t.is_finite() => Ok(t),
        Some(t) => Err(Failure::Usage(format!("tolerance must be positive, got {t}"))),
    }
}

fn limit_n(n: u32, max: u32, what: &str) -> Result<(), Failure> {
    if n > max {
        Err(Failure::Resource(format!("{what} is limited to n <= {max}, got {n}")))
    } else {
        Ok(())
    }
}

fn record(command: &str, inputs: Value, result: Value, err: Option<f64>) -> OutputRecord {
    let inputs = match inputs {
        Value::Object(m) => m.into_iter().collect(),
        _ => BTreeMap::new(),
    };
    OutputRecord {
        command: command.into(),
        inputs,
        result,
        err_estimate: err,
        wall_time_ms: 0,
    }
}

fn execute(cmd: Command) -> Result<Output, Failure> {
    match cmd {
        Command::Count { p, n, max_height, tol } => {
            check_tol(tol)?;
            limit_n(n, MAX_COUNT_N, "count")?;
            let s = spec(p, n)?;
            let v = match max_height {
                Some(h) => count_bounded(&s, h),
                None => count_total(&s),
            };
            Ok(Output::Record(record(
                "count",
                json!({"p": p, "n": n, "max_height": max_height}),
                json!(v.value.to_string()),
                None,
            )))
        }
        Command::Pmf { p, n, format, tol } => {
            check_tol(tol)?;
            limit_n(n, MAX_EXACT_N, "pmf")?;
            let dist = height_pmf(&spec(p, n)?);
            let rows: Vec<(u64, String, f64)> = dist
                .counts
                .iter()
                .map(|(&h, c)| (h, c.to_string(), rational_to_f64(&dist.probability(h))))
                .collect();
            match format {
                Format::Csv => {
                    let mut s = String::from("h,count,probability\n");
                    for (h, c, q) in rows {
                        s.push_str(&format!("{h},{c},{}\n", format_g17(q)));
                    }
                    Ok(Output::Csv(s))
                }
                Format::Json => {
                    let table: Vec<Value> = rows
                        .into_iter()
                        .map(|(h, c, q)| json!({"h": h, "count": c, "probability": q}))
                        .collect();
                    Ok(Output::Record(record(
                        "pmf",
                        json!({"p": p, "n": n, "total": dist.total.to_string()}),
                        Value::Array(table),
                        None,
                    )))
                }
            }
        }
        Command::Moment { p, n, s, mode, tol } => {
            let tol = check_tol(tol)?;
            if s == 0 {
                return Err(Failure::Usage("s must be at least 1".into()));
            }
            let sp = spec(p, n)?;
            let exact = if mode != MomentMode::Asymptotic {
                limit_n(n, MAX_EXACT_N, "exact moment")?;
                Some(exact_moment(&sp, s)?)
            } else {
                None
            };
            let asym = if mode != MomentMode::Exact {
                if n == 0 {
                    return Err(Failure::Usage("asymptotic moment needs n >= 1".into()));
                }
                Some(moment_asymptotic(p, n as f64, s, tol)?)
            } else {
                None
            };
            let result = match (&exact, asym) {
                (Some(e), None) => json!(e.to_string()),
                (None, Some(a)) => json!(a),
                (Some(e), Some(a)) => json!({
                    "exact": e.to_string(),
                    "exact_value": rational_to_f64(e),
                    "asymptotic": a,
                }),
                (None, None) => unreachable!(),
            };
            Ok(Output::Record(record(
                "moment",
                json!({"p": p, "n": n, "s": s, "mode": format!("{mode:?}").to_lowercase()}),
                result,
                None,
            )))
        }
        Command::Kappa { p, s, tol } => {
            let tol = check_tol(tol)?;
            let k = kappa(p, s, tol)?;
            Ok(Output::Record(record(
                "kappa",
                json!({"p": p, "s": s, "tol": tol}),
                json!(k.value),
                Some(k.err_estimate),
            )))
        }
        Command::Cdf { p, t, form, n, tol } => {
            let tol = check_tol(tol)?;
            let q = LimitCdfQuery::new(p, t)?;
            let (v, h) = match form {
                CdfForm::Det => (limit_cdf_det(&q)?, None),
                CdfForm::Schehr => (limit_cdf_schehr(&q, tol.min(1e-12))?, None),
                CdfForm::P1 => {
                    if p != 1 {
                        return Err(Failure::Usage("form p1 requires p = 1".into()));
                    }
                    (limit_cdf_p1(t)?, None)
                }
                CdfForm::Exact => {
                    let n = n.ok_or_else(|| Failure::Usage("--n is required for the exact form".into()))?;
                    limit_n(n, MAX_EXACT_N, "exact cdf")?;
                    let h = (t * (n as f64).sqrt()).ceil() as i64 - 2;
                    (finite_cdf(&spec(p, n)?, h), Some(h))
                }
            };
            Ok(Output::Record(record(
                "cdf",
                json!({"p": p, "t": t, "form": format!("{form:?}").to_lowercase(), "n": n, "h": h}),
                json!(v),
                None,
            )))
        }
        Command::Sample { p, n, count, seed, stats, tol } => {
            check_tol(tol)?;
            if p > 8 {
                return Err(Failure::Resource(format!("sampling is limited to p <= 8, got {p}")));
            }
            if count.saturating_mul(n.max(1) as u64) > MAX_SAMPLE_WORK {
                return Err(Failure::Resource(format!(
                    "count * n is limited to {MAX_SAMPLE_WORK}"
                )));
            }
            let cfg = SamplerConfig::new(spec(p, n)?, seed, count)?;
            let inputs = json!({"p": p, "n": n, "count": count, "seed": seed, "stats": stats});
            let result = if stats {
                let st = empirical_height(&cfg);
                let hist: Vec<Value> = st.histogram.iter().map(|(h, c)| json!({"h": h, "count": c})).collect();
                json!({
                    "histogram": hist,
                    "sample_mean": st.sample_mean,
                    "sample_var": st.sample_var,
                    "std_error": st.std_error(),
                    "count": st.count,
                })
            } else {
                let rows: Vec<Value> = sample_watermelons(&cfg)
                    .iter()
                    .enumerate()
                    .map(|(i, fam)| {
                        let branches: Vec<String> = fam
                            .steps
                            .iter()
                            .map(|row| row.iter().map(|&s| if s > 0 { 'U' } else { 'D' }).collect())
                            .collect();
                        json!({
                            "index": i,
                            "height": compute_height(fam).expect("sampled families are valid"),
                            "branches": branches,
                        })
                    })
                    .collect();
                Value::Array(rows)
            };
            Ok(Output::Record(record("sample", inputs, result, None)))
        }
        Command::Verify { suite } => {
            let suite = match suite {
                SuiteArg::Reciprocity => Suite::Reciprocity,
                SuiteArg::Dirichlet => Suite::Dirichlet,
                SuiteArg::Identities => Suite::Identities,
                SuiteArg::Convergence => Suite::Convergence,
                SuiteArg::All => Suite::All,
            };
            let checks = run_suite(suite);
            let ok = checks.iter().all(|c| c.passed);
            let rows: Vec<Value> = checks
                .iter()
                .map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail, "elapsed_ms": c.elapsed_ms}))
                .collect();
            let rec = record(
                "verify",
                json!({"suite": format!("{suite:?}").to_lowercase()}),
                Value::Array(rows),
                None,
            );
            Ok(if ok { Output::Record(rec) } else { Output::Failed(rec) })
        }
    }
}

/// Run the command line `argv` (program name first), writing data to `out`
/// and diagnostics to `err`. Returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    let start = Instant::now();
    let emit = |rec: &mut OutputRecord, out: &mut dyn Write| {
        rec.wall_time_ms = start.elapsed().as_millis();
        let _ = writeln!(out, "{}", serde_json::to_string(rec).expect("record serialises"));
    };
    match execute(cli.command) {
        Ok(Output::Record(mut rec)) => {
            emit(&mut rec, out);
            0
        }
        Ok(Output::Csv(s)) => {
            let _ = write!(out, "{s}");
            0
        }
        Ok(Output::Failed(mut rec)) => {
            emit(&mut rec, out);
            let _ = writeln!(err, "error: one or more checks failed");
            2
        }
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
        Err(Failure::Tolerance(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(Failure::Resource(m)) => {
            let _ = writeln!(err, "error: {m}");
            3
        }
    }
}

/// Run against the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
