//! `cue-lab`: command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 computation failure, 3 selftest
//! failure. Reports go to stdout unless `--out` is given.

use clap::{Args, CommandFactory, Parser, Subcommand};
use cue_lab::convergence_harness::compare;
use cue_lab::cue_sampler::{estimate_functional, estimate_parallel, sample_chain, McEstimate, Observable};
use cue_lab::exact_functionals::{
    autocorr_det, dehaye_derivative_ratio, kr3g_moment, ks_moment, mom_moment, ratio_moment, secular_moment,
    truncated_moment_lambda,
};
use cue_lab::limit_constants::{evaluate_constant, Budget};
use cue_lab::polytope_ehrhart::{ehrhart_birkhoff, ehrhart_subbirkhoff, ehrhart_transport};
use cue_lab::report::{emit_report, render, Format, Report};
use cue_lab::selftest::run_criterion;
use cue_lab::{FunctionalKind, LimitFunctionalSpec, Method, Partition, Q, C64};
use num_traits::Zero;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "cue-lab", version, about = "Exact and limiting CUE characteristic-polynomial functionals")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    p: Params,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Exact finite-N values: ks, sc, kr3g, mom, truncated, ratio, autocorr, dehaye
    Exact { functional: String },
    /// Limiting constants: ks, sc, zt, kr3g, mom, vol_b, vol_s, autocorr, ratio
    Limit { functional: String },
    /// Finite-N table, Richardson limit and comparison with the constant
    Converge { functional: String },
    /// Lattice-point counts: birkhoff, subbirkhoff, transport
    Ehrhart { polytope: String },
    /// MCMC estimate of a CUE observable: trace, charpoly, secular, truncated, ratio
    Sample { observable: String },
    /// Run the acceptance suite (all criteria, or one with --criterion)
    Selftest {
        #[arg(long)]
        criterion: Option<u8>,
    },
}

#[derive(Args, Debug, Default)]
struct Params {
    /// Matrix size
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    beta: Option<usize>,
    /// Rational, e.g. 1/2
    #[arg(long, global = true)]
    rho: Option<String>,
    /// Rational, e.g. 1
    #[arg(long, global = true)]
    c: Option<String>,
    /// λ for truncated moments (rational), or a partition `3,2,1` for `ehrhart transport`
    #[arg(long, global = true)]
    lambda: Option<String>,
    /// Partition `2,2,2` for `ehrhart transport`
    #[arg(long, global = true)]
    mu: Option<String>,
    #[arg(long, global = true)]
    m: Option<usize>,
    #[arg(long, global = true)]
    t: Option<usize>,
    /// Derivative order for `exact dehaye`
    #[arg(long, global = true)]
    r: Option<usize>,
    /// Comma-separated points, e.g. `0.1,-0.3` or `0.2+0.5i`
    #[arg(long, global = true, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    y: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// spline | hankel | closed-form | quad | qmc | mc
    #[arg(long, global = true)]
    method: Option<String>,
    /// Comma-separated N list for `converge`
    #[arg(long, global = true)]
    ns: Option<String>,
    #[arg(long = "burn-in", global = true)]
    burn_in: Option<usize>,
    #[arg(long, global = true)]
    chains: Option<usize>,
    #[arg(long, global = true)]
    batches: Option<usize>,
    /// json | csv
    #[arg(long, global = true)]
    format: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// `key = value` file; command-line flags win
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

enum Fail {
    Usage(String),
    Compute(String),
    Selftest,
}

impl From<cue_lab::Error> for Fail {
    fn from(e: cue_lab::Error) -> Self {
        Fail::Compute(e.to_string())
    }
}

type R<T> = std::result::Result<T, Fail>;

fn usage<T>(msg: impl Into<String>) -> R<T> {
    Err(Fail::Usage(msg.into()))
}

fn need<T: Clone>(v: &Option<T>, flag: &str) -> R<T> {
    v.clone().ok_or_else(|| Fail::Usage(format!("missing --{flag}")))
}

fn parse_q(s: &str) -> R<Q> {
    let s = s.trim();
    if let Ok(v) = Q::from_str(s) {
        return Ok(v);
    }
    // terminating decimal
    let bad = || Fail::Usage(format!("not a rational number: '{s}'"));
    let (neg, body) = s.strip_prefix('-').map_or((false, s), |b| (true, b));
    let (ip, fp) = body.split_once('.').ok_or_else(bad)?;
    let digits = format!("{ip}{fp}");
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let num = num_bigint::BigInt::from_str(&digits).map_err(|_| bad())?;
    let den = num_traits::pow(num_bigint::BigInt::from(10), fp.len());
    let v = Q::new(num, den);
    Ok(if neg { -v } else { v })
}

fn parse_points(s: &str) -> R<Vec<C64>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| C64::from_str(p.trim()).map_err(|_| Fail::Usage(format!("not a point: '{p}'"))))
        .collect()
}

fn parse_usizes(s: &str, what: &str) -> R<Vec<usize>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| Fail::Usage(format!("bad {what} entry '{p}'"))))
        .collect()
}

fn points(v: &Option<String>) -> R<Vec<C64>> {
    v.as_deref().map(parse_points).transpose().map(Option::unwrap_or_default)
}

/// Inserts `--key value` for every config entry whose flag is not already on
/// the command line.
fn merge_config(args: Vec<String>) -> R<Vec<String>> {
    let Some(i) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = match args[i].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => args.get(i + 1).cloned().ok_or_else(|| Fail::Usage("--config needs a path".into()))?,
    };
    let text = fs::read_to_string(&path).map_err(|e| Fail::Usage(format!("{path}: {e}")))?;
    let mut out = args.clone();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, val)) = line.split_once('=') else {
            return usage(format!("{path}:{}: expected key = value", ln + 1));
        };
        let flag = format!("--{}", key.trim().trim_start_matches("--"));
        if flag == "--config" {
            continue;
        }
        let present = args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if !present {
            out.push(format!("{flag}={}", val.trim()));
        }
    }
    Ok(out)
}

fn method(p: &Params) -> R<Option<Method>> {
    p.method.as_deref().map(|m| Method::from_str(m).map_err(|e| Fail::Usage(e.to_string()))).transpose()
}

fn limit_spec(name: &str, p: &Params) -> R<LimitFunctionalSpec> {
    let kind = FunctionalKind::from_str(name).map_err(|e| Fail::Usage(e.to_string()))?;
    let k = || need(&p.k, "k");
    let spec = match kind {
        FunctionalKind::Ks => LimitFunctionalSpec::ks(k()?),
        FunctionalKind::Sc => LimitFunctionalSpec::sc(parse_q(&need(&p.rho, "rho")?)?, k()?),
        FunctionalKind::Zt => LimitFunctionalSpec::zt(parse_q(&need(&p.rho, "rho")?)?, k()?),
        FunctionalKind::Kr3g => LimitFunctionalSpec::kr3g(parse_q(&need(&p.c, "c")?)?, k()?),
        FunctionalKind::Mom => LimitFunctionalSpec::mom(k()?, need(&p.beta, "beta")?),
        FunctionalKind::VolB => LimitFunctionalSpec::vol_b(k()?),
        FunctionalKind::VolS => LimitFunctionalSpec::vol_s(k()?),
        FunctionalKind::Autocorr => LimitFunctionalSpec::autocorr(points(&p.x)?, points(&p.y)?),
        FunctionalKind::Ratio => LimitFunctionalSpec::ratio(k()?, points(&p.x)?, points(&p.y)?),
    };
    spec.map_err(|e| Fail::Usage(e.to_string()))
}

fn budget(p: &Params) -> R<Budget> {
    let mut b = Budget { seed: p.seed, method: method(p)?, ..Budget::default() };
    if let Some(t) = p.tol {
        b.tol = t;
    }
    if let Some(s) = p.samples {
        b.samples = s;
    }
    if b.method.is_some_and(Method::is_randomized) && b.seed.is_none() {
        return usage(format!("--method {} is randomized and needs --seed", b.method.unwrap().name()));
    }
    Ok(b)
}

fn with_spec_params(mut r: Report, spec: &LimitFunctionalSpec) -> Report {
    for (key, v) in spec.parameters() {
        r = r.with_param(&key, v);
    }
    r
}

fn cmd_exact(name: &str, p: &Params) -> R<Report> {
    let n = || need(&p.n, "N");
    let k = || need(&p.k, "k");
    let int = |kind: FunctionalKind, v: num_bigint::BigInt| Report::exact(kind.name(), kind.anchor(), "exact", &Q::from_integer(v));
    let r = match name.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "ks" => int(FunctionalKind::Ks, ks_moment(n()?, k()?)?).with_param("N", n()?).with_param("k", k()?),
        "sc" => {
            let m = need(&p.m, "m")?;
            int(FunctionalKind::Sc, secular_moment(n()?, m, k()?)?).with_param("N", n()?).with_param("m", m).with_param("k", k()?)
        }
        "kr3g" => {
            let m = need(&p.m, "m")?;
            int(FunctionalKind::Kr3g, kr3g_moment(n()?, m, k()?)?).with_param("N", n()?).with_param("m", m).with_param("k", k()?)
        }
        "mom" => {
            let b = need(&p.beta, "beta")?;
            int(FunctionalKind::Mom, mom_moment(n()?, k()?, b)?).with_param("N", n()?).with_param("k", k()?).with_param("beta", b)
        }
        "truncated" | "zt" => {
            let t = need(&p.t, "t")?;
            let lam = parse_q(&need(&p.lambda, "lambda")?)?;
            let v = truncated_moment_lambda(k()?, t, &(&lam * &lam))?;
            Report::exact("TRUNCATED", "Eq:HeapLindqvistTruncated", "exact", &v)
                .with_param("k", k()?)
                .with_param("t", t)
                .with_param("lambda", lam)
        }
        "dehaye" => {
            let r = need(&p.r, "r")?;
            Report::exact("DEHAYE", "Eq:POD:derivativeExpansion", "exact", &dehaye_derivative_ratio(n()?, k()?, r)?)
                .with_param("N", n()?)
                .with_param("k", k()?)
                .with_param("r", r)
        }
        "ratio" => {
            let (x, y) = (points(&p.x)?, points(&p.y)?);
            let v = ratio_moment(n()?, k()?, &x, &y)?;
            Report::approx("RATIO", "Eq:ExpectationRatiosAsSupersymSchur", "jacobi-trudi", v, 0.0)
                .with_param("N", n()?)
                .with_param("k", k()?)
                .with_param("x", p.x.clone().unwrap_or_default())
                .with_param("y", p.y.clone().unwrap_or_default())
        }
        "autocorr" => {
            let (x, y) = (points(&p.x)?, points(&p.y)?);
            let v = autocorr_det(n()?, &x, &y)?;
            Report::approx("AUTOCORR", "Eq:AutocorrelationsAsAQuotientOfDets", "determinant", v, 0.0)
                .with_param("N", n()?)
                .with_param("x", p.x.clone().unwrap_or_default())
                .with_param("y", p.y.clone().unwrap_or_default())
        }
        other => return usage(format!("unknown exact functional '{other}'")),
    };
    Ok(r)
}

fn cmd_limit(name: &str, p: &Params) -> R<Report> {
    let spec = limit_spec(name, p)?;
    let e = evaluate_constant(&spec, &budget(p)?)?;
    let mut r = match &e.exact {
        Some(q) => Report::exact(spec.kind.name(), spec.kind.anchor(), e.method.name(), q),
        None => Report::approx(spec.kind.name(), spec.kind.anchor(), e.method.name(), e.value, e.abs_error),
    };
    if e.method.is_randomized() {
        r.seed = e.diagnostics.seed;
    }
    let diag = serde_json::to_value(&e.diagnostics).unwrap_or_default();
    Ok(with_spec_params(r, &spec).with_extra("diagnostics", diag))
}

fn cmd_converge(name: &str, p: &Params) -> R<Report> {
    let spec = limit_spec(name, p)?;
    let ns = match &p.ns {
        Some(s) => parse_usizes(s, "--ns")?,
        None => vec![100, 200, 400],
    };
    let tol = p.tol.unwrap_or(0.05);
    let b = Budget { tol: 1e-4, ..budget(p)? };
    let cmp = compare(&spec, &ns, &b, tol)?;
    let x = &cmp.extrapolation;
    let r = Report::approx(spec.kind.name(), spec.kind.anchor(), "richardson", x.limit, x.error)
        .with_param("N", ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" "))
        .with_extra("exponent", cmp.table.exponent.into())
        .with_extra(
            "table",
            cmp.table
                .rows
                .iter()
                .map(|row| serde_json::json!({ "N": row.n, "re": row.rescaled.re, "im": row.rescaled.im }))
                .collect(),
        )
        .with_extra(
            "constant",
            serde_json::json!({
                "re": cmp.constant.value.re,
                "im": cmp.constant.value.im,
                "exact": cmp.constant.exact.as_ref().map(|q| q.to_string()),
                "method": cmp.constant.method.name(),
                "abs_error": cmp.constant.abs_error,
            }),
        )
        .with_extra("rel_diff", cmp.rel_diff.into())
        .with_extra("tolerance", tol.into())
        .with_extra("pass", cmp.pass.into());
    Ok(with_spec_params(r, &spec))
}

fn cmd_ehrhart(poly: &str, p: &Params) -> R<Report> {
    let t = need(&p.t, "t")?;
    let anchor = "Rk:BirkhoffWithH";
    let r = match poly.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "birkhoff" | "b" => {
            let k = need(&p.k, "k")?;
            Report::exact("EHRHART_B", anchor, "coefficient-extraction", &Q::from_integer(ehrhart_birkhoff(k, t)?))
                .with_param("k", k)
        }
        "subbirkhoff" | "s" => {
            let k = need(&p.k, "k")?;
            Report::exact("EHRHART_S", anchor, "coefficient-extraction", &Q::from_integer(ehrhart_subbirkhoff(k, t)?))
                .with_param("k", k)
        }
        "transport" | "transportation" | "t" => {
            let lam = Partition::new(parse_usizes(&need(&p.lambda, "lambda")?, "--lambda")?);
            let mu = Partition::new(parse_usizes(&need(&p.mu, "mu")?, "--mu")?);
            let v = ehrhart_transport(&lam, &mu, t)?;
            Report::exact("EHRHART_T", "Eq:EhrhartTransportationPolytope", "coefficient-extraction", &Q::from_integer(v))
                .with_param("lambda", lam)
                .with_param("mu", mu)
        }
        other => return usage(format!("unknown polytope '{other}' (birkhoff, subbirkhoff, transport)")),
    };
    Ok(r.with_param("t", t))
}

fn cmd_sample(obs: &str, p: &Params) -> R<Report> {
    let n = need(&p.n, "N")?;
    let seed = p.seed.ok_or_else(|| Fail::Usage("sampling is randomized and needs --seed".into()))?;
    let k = p.k.unwrap_or(1);
    let f = match obs.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "trace" => Observable::TraceAbs2,
        "charpoly" | "ks" => Observable::CharPolyAbs { k },
        "secular" | "sc" => Observable::SecularAbs { m: need(&p.m, "m")?, k },
        "truncated" | "zt" => {
            let lam = p.lambda.as_deref().map(parse_q).transpose()?.unwrap_or_else(|| Q::from_integer(1.into()));
            Observable::TruncatedAbs { t: need(&p.t, "t")?, k, lambda: cue_lab::limit_kernels::qf64(&lam) }
        }
        "ratio" => Observable::Ratio { k, x: points(&p.x)?, y: points(&p.y)? },
        other => return usage(format!("unknown observable '{other}' (trace, charpoly, secular, truncated, ratio)")),
    };
    let samples = p.samples.unwrap_or(100_000);
    let burn_in = p.burn_in.unwrap_or(1_000);
    let chains = p.chains.unwrap_or(1).max(1);
    let batches = p.batches.unwrap_or(100);
    let est: McEstimate = if chains == 1 {
        f.check(n)?;
        estimate_functional(sample_chain(n, burn_in + samples, burn_in, seed)?, &f, batches)?
    } else {
        estimate_parallel(n, &f, chains, samples, burn_in, batches.div_ceil(chains).max(2), seed)?
    };
    Ok(Report::monte_carlo("SAMPLE", "Eq:WeylHaarRealisationBis", est.mean, est.stderr, seed)
        .with_param("N", n)
        .with_param("f", f.describe())
        .with_param("samples", samples)
        .with_param("burn_in", burn_in)
        .with_param("chains", chains)
        .with_extra("acceptance", est.acceptance.into())
        .with_extra("batches", est.batches.into()))
}

fn cmd_selftest(criterion: Option<u8>) -> R<Vec<Report>> {
    let ids: Vec<u8> = match criterion {
        Some(c) if (1..=12).contains(&c) => vec![c],
        Some(c) => return usage(format!("no criterion {c} (1..=12)")),
        None => (1..=12).collect(),
    };
    let mut reports = vec![];
    for id in ids {
        let res = run_criterion(id);
        eprintln!("{}", res.line());
        let v = Q::from_integer(u8::from(res.pass).into());
        reports.push(
            Report::exact("SELFTEST", "acceptance", "selftest", &v)
                .with_param("criterion", id)
                .with_param("title", &res.title)
                .with_runtime(res.runtime_ms)
                .with_extra("pass", res.pass.into())
                .with_extra("assertive", res.assertive.into())
                .with_extra("details", res.details.clone().into()),
        );
    }
    Ok(reports)
}

fn workers(p: &Params) -> R<Option<usize>> {
    if let Some(w) = p.workers {
        return Ok(Some(w));
    }
    match std::env::var("CUE_LAB_WORKERS") {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| Fail::Usage(format!("CUE_LAB_WORKERS='{s}' is not a count"))),
        Err(_) => Ok(None),
    }
}

fn run(args: Vec<String>) -> R<()> {
    let args = merge_config(args)?;
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("usage error").trim_start_matches("error: ").to_string();
            return usage(first);
        }
    };
    let p = &cli.p;
    if let Some(w) = workers(p)? {
        if w == 0 {
            return usage("--workers must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global().ok();
    }
    let format = match &p.format {
        Some(f) => Format::from_str(f).map_err(|e| Fail::Usage(e.to_string()))?,
        None => Format::Json,
    };
    let start = Instant::now();
    let mut selftest_failed = false;
    let reports = match &cli.cmd {
        Cmd::Exact { functional } => vec![cmd_exact(functional, p)?],
        Cmd::Limit { functional } => vec![cmd_limit(functional, p)?],
        Cmd::Converge { functional } => vec![cmd_converge(functional, p)?],
        Cmd::Ehrhart { polytope } => vec![cmd_ehrhart(polytope, p)?],
        Cmd::Sample { observable } => vec![cmd_sample(observable, p)?],
        Cmd::Selftest { criterion } => {
            let rs = cmd_selftest(*criterion)?;
            selftest_failed = rs.iter().any(|r| r.extra.get("pass") == Some(&false.into()));
            rs
        }
    };
    let ms = start.elapsed().as_secs_f64() * 1000.0;
    let reports: Vec<Report> = reports
        .into_iter()
        .map(|r| if r.runtime_ms.is_zero() { r.with_runtime(ms) } else { r })
        .collect();
    match &p.out {
        Some(path) => emit_report(&reports, format, path)?,
        None => println!("{}", render(&reports, format)?),
    }
    if selftest_failed {
        return Err(Fail::Selftest);
    }
    Ok(())
}

fn main() -> ExitCode {
    // keeps clap's derive checks honest in debug builds
    debug_assert!({
        Cli::command().debug_assert();
        true
    });
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(1)
        }
        Err(Fail::Compute(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Fail::Selftest) => {
            eprintln!("selftest: some criteria failed");
            ExitCode::from(3)
        }
    }
}
