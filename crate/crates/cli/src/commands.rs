use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use serde::Serialize;

use wm_core::cf_dynamics::{cf_expand, sample_gauss_measure};
use wm_core::cotangent::{c0_sweep_sampled, c0_sweep_values};
use wm_core::moments::{gamma_ratio_sweep, MomentMethod, MomentOptions};
use wm_core::special_fn::{big_a_bounded, f_bounded, g_func, h_eval, phi2_bounded, GMethod};
use wm_core::verify::{run_suite, CriterionReport, VerifyOptions, SUITES};
use wm_core::wilton::wilton;
use wm_core::{Error, OrbitPrecision, ToleranceConfig};

use crate::output::{to_json, Cell, Table};
use crate::{Cli, Command, Format, Function, GRoute, MethodArg, PointArgs};

pub enum Failure {
    Usage(String),
    Computation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain { .. }
            | Error::InvalidInterval { .. }
            | Error::InvalidConfig(_)
            | Error::InvalidRational { .. }
            | Error::EmptyRange { .. } => Failure::Usage(e.to_string()),
            Error::EffectivelyRational { .. }
            | Error::NonConvergent { .. }
            | Error::RejectionRate { .. } => Failure::Computation(e.to_string()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// What a subcommand produced, ready for either output format.
struct Report {
    json: String,
    table: Table,
}

impl Report {
    fn new<T: Serialize + ?Sized>(value: &T, table: Table) -> Outcome<Self> {
        let json = to_json(value).map_err(|e| Failure::Computation(e.to_string()))?;
        Ok(Self { json, table })
    }
}

pub fn run(cli: &Cli) -> Outcome<ExitCode> {
    let g = &cli.global;
    let cfg = g.tolerance();
    cfg.validate().map_err(|e| usage(format!("{e} (see --abs-tol, --rel-tol, --max-terms, --max-orbit-depth, --rational-guard)")))?;
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Computation(e.to_string()))?;
    }

    if let Command::Verify { suite, all, moment_samples } = &cli.command {
        return verify(cli, &cfg, suite, *all, *moment_samples);
    }

    let format = match g.format {
        None | Some(Format::Json) => Format::Json,
        Some(Format::Csv) => Format::Csv,
        Some(Format::Table) => return Err(usage("--format table is only available for verify")),
    };
    let report = match &cli.command {
        Command::Eval { function, points, method } => eval(*function, points, *method, &cfg)?,
        Command::Cf { x, depth } => cf(*x, *depth, &cfg)?,
        Command::Wilton { x, samples } => wilton_rows(x, *samples, g.seed, &cfg)?,
        Command::Moment {
            k,
            sweep,
            samples,
            method,
            panels,
            rel_accuracy,
        } => {
            let ks = match (k, sweep) {
                (Some(k), _) => vec![*k],
                (None, Some(s)) => s.clone(),
                (None, None) => return Err(usage("one of --k or --sweep is required")),
            };
            let opts = MomentOptions {
                method: match method {
                    MethodArg::Mc => MomentMethod::McStratified,
                    MethodArg::Quad => MomentMethod::QuadLogSubstitution,
                },
                samples: *samples,
                panels: *panels,
                rel_accuracy: *rel_accuracy,
                ..MomentOptions::default()
            };
            moment(&ks, &opts, g.seed, &cfg)?
        }
        Command::CotangentDist {
            b,
            a0,
            a1,
            kmax,
            sample,
            values,
        } => cotangent_dist(*b, *a0, *a1, *kmax, *sample, values.as_deref(), g.seed)?,
        Command::Verify { .. } => unreachable!("handled above"),
    };
    let text = match format {
        Format::Csv => report.table.to_csv(),
        _ => report.json,
    };
    emit(&text, g.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn emit(text: &str, path: Option<&Path>) -> Outcome<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Computation(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Computation(e.to_string()))
        }
    }
}

fn points(p: &PointArgs) -> Outcome<Vec<f64>> {
    if let Some(grid) = &p.grid {
        if grid.len() != 3 {
            return Err(usage(format!("--grid takes lo,hi,n; got {} values", grid.len())));
        }
        let (lo, hi, n) = (grid[0], grid[1], grid[2]);
        if !(n >= 1.0 && n.fract() == 0.0) {
            return Err(usage(format!("--grid: point count must be a positive integer, got {n}")));
        }
        if !(lo <= hi) {
            return Err(usage(format!("--grid: need lo <= hi, got {lo} > {hi}")));
        }
        let n = n as usize;
        if n == 1 {
            return Ok(vec![lo]);
        }
        return Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect());
    }
    if p.x.is_empty() {
        return Err(usage("one of --x or --grid is required"));
    }
    Ok(p.x.clone())
}

#[derive(Serialize)]
struct EvalRow {
    function: &'static str,
    x: f64,
    value: f64,
    est_error: f64,
    method: &'static str,
}

fn eval(function: Function, p: &PointArgs, route: GRoute, cfg: &ToleranceConfig) -> Outcome<Report> {
    let xs = points(p)?;
    let mut rows = Vec::with_capacity(xs.len());
    for x in xs {
        let row = match function {
            Function::G => {
                let method = match route {
                    GRoute::WiltonPlusH => GMethod::WiltonPlusH,
                    GRoute::DirectSeries => GMethod::DirectSeries,
                };
                let e = g_func(x, method, cfg)?;
                EvalRow { function: "g", x, value: e.value, est_error: e.est_error, method: e.method.as_str() }
            }
            Function::W => {
                let mut w = wilton(x, cfg)?;
                if !w.truncated_rational && !cfg.accepts(w.total_error(), w.value) {
                    // Orbit rounding dominates at tight tolerances.
                    w = wilton(x, &cfg.with_precision(OrbitPrecision::DoubleDouble))?;
                }
                if w.truncated_rational {
                    return Err(Error::EffectivelyRational { point: x, depth: w.terms_used }.into());
                }
                if !cfg.accepts(w.total_error(), w.value) {
                    return Err(Error::NonConvergent { what: "wilton", point: x, bound: w.total_error(), tol: cfg.abs_tol }.into());
                }
                EvalRow { function: "W", x, value: w.value, est_error: w.total_error(), method: "alternating_series" }
            }
            Function::H => {
                let h = h_eval(x, cfg)?;
                EvalRow { function: "H", x, value: h.value, est_error: h.error, method: "orbit_series" }
            }
            Function::A => {
                let a = big_a_bounded(x, cfg.abs_tol)?;
                EvalRow { function: "A", x, value: a.value, est_error: a.error, method: "phi2_formula" }
            }
            Function::F => {
                let f = f_bounded(x, cfg.abs_tol)?;
                EvalRow { function: "F", x, value: f.value, est_error: f.error, method: "phi2_formula" }
            }
            Function::Phi2 => {
                if !x.is_finite() {
                    return Err(usage(format!("--x: Phi2 needs a finite argument, got {x}")));
                }
                let v = phi2_bounded(x, cfg.abs_tol);
                EvalRow { function: "Phi2", x, value: v.value, est_error: v.error, method: "convergent" }
            }
        };
        rows.push(row);
    }
    let mut table = Table::new(&["function", "x", "value", "est_error", "method"]);
    for r in &rows {
        table.push(vec![r.function.into(), r.x.into(), r.value.into(), r.est_error.into(), r.method.into()]);
    }
    Report::new(&rows, table)
}

fn cf(x: f64, depth: usize, cfg: &ToleranceConfig) -> Outcome<Report> {
    let exp = cf_expand(x, depth, cfg)?;
    let mut table = Table::new(&["k", "a_k", "alpha_k", "p_k", "q_k", "beta_k", "gamma_k"]);
    let blank = || Cell::Text(String::new());
    for k in 0..=exp.depth {
        let a = if k == 0 { blank() } else { exp.partial_quotients.get(k - 1).map_or_else(blank, |&a| a.into()) };
        let conv = exp.convergents.get(k);
        table.push(vec![
            k.into(),
            a,
            exp.iterates.get(k).map_or_else(blank, |&v| v.into()),
            conv.map_or_else(blank, |c| c.numerator.to_string().into()),
            conv.map_or_else(blank, |c| c.denominator.to_string().into()),
            exp.betas.get(k + 1).map_or_else(blank, |&v| v.into()),
            exp.gammas.get(k).map_or_else(blank, |&v| v.into()),
        ]);
    }
    Report::new(&exp, table)
}

fn wilton_rows(xs: &[f64], samples: Option<usize>, seed: u64, cfg: &ToleranceConfig) -> Outcome<Report> {
    let xs = match samples {
        Some(n) => sample_gauss_measure(n, seed),
        None if xs.is_empty() => return Err(usage("one of --x or --samples is required")),
        None => xs.to_vec(),
    };
    let evals = xs.iter().map(|&x| wilton(x, cfg)).collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["point", "value", "terms_used", "tail_bound"]);
    for e in &evals {
        table.push(vec![e.point.into(), e.value.into(), e.terms_used.into(), e.tail_bound.into()]);
    }
    Report::new(&evals, table)
}

fn moment(ks: &[f64], opts: &MomentOptions, seed: u64, cfg: &ToleranceConfig) -> Outcome<Report> {
    if ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("--sweep: K values must be strictly increasing"));
    }
    let est = gamma_ratio_sweep(ks, cfg, seed, opts)?;
    let mut table = Table::new(&["K", "value", "std_error", "gamma_ratio", "target_ratio", "rejections"]);
    for e in &est {
        table.push(vec![
            e.k.into(),
            e.value.into(),
            e.std_error.into(),
            e.gamma_ratio.into(),
            e.target_ratio.into(),
            e.rejections.into(),
        ]);
    }
    Report::new(&est, table)
}

fn cotangent_dist(
    b: u64,
    a0: f64,
    a1: f64,
    kmax: usize,
    sample: Option<usize>,
    values_path: Option<&Path>,
    seed: u64,
) -> Outcome<Report> {
    if kmax == 0 {
        return Err(usage("--kmax must be at least 1"));
    }
    let sweep = match sample {
        Some(0) => return Err(usage("--sample must be at least 1")),
        Some(n) => c0_sweep_sampled(b, a0, a1, kmax, n, seed)?,
        None => c0_sweep_values(b, a0, a1, kmax)?,
    };
    if let Some(path) = values_path {
        let mut rows = Table::new(&["r", "c0", "c0_over_b"]);
        for (&r, &v) in sweep.residues.iter().zip(&sweep.values) {
            rows.push(vec![r.into(), v.into(), (v / b as f64).into()]);
        }
        emit(&rows.to_csv(), Some(path))?;
    }
    let s = &sweep.summary;
    let mut table = Table::new(&["b", "a0", "a1", "count", "evaluated", "k", "normalized_moment", "first_abs_moment"]);
    for (i, &m) in s.normalized_moments.iter().enumerate() {
        table.push(vec![
            s.b.into(),
            s.a0.into(),
            s.a1.into(),
            s.count.into(),
            s.evaluated.into(),
            (i + 1).into(),
            m.into(),
            s.first_abs_moment.into(),
        ]);
    }
    Report::new(s, table)
}

fn verify(
    cli: &Cli,
    cfg: &ToleranceConfig,
    suites: &[String],
    all: bool,
    moment_samples: Option<u64>,
) -> Outcome<ExitCode> {
    let names: Vec<String> = if all {
        SUITES.iter().map(|s| s.to_string()).collect()
    } else {
        suites.to_vec()
    };
    for n in &names {
        if !SUITES.contains(&n.as_str()) {
            return Err(usage(format!("--suite: unknown suite '{n}' (known: {})", SUITES.join(", "))));
        }
    }
    let mut opts = VerifyOptions {
        cfg: *cfg,
        seed: cli.global.seed,
        ..VerifyOptions::default()
    };
    if let Some(n) = moment_samples {
        opts.moment_samples = n;
    }
    let reports: Vec<CriterionReport> = names
        .iter()
        .map(|n| run_suite(n, &opts).expect("checked above"))
        .collect();
    let text = match cli.global.format.unwrap_or(Format::Table) {
        Format::Json => to_json(&reports).map_err(|e| Failure::Computation(e.to_string()))?,
        Format::Csv => {
            let mut t = Table::new(&["id", "suite", "passed", "seconds", "detail"]);
            for r in &reports {
                t.push(vec![(r.id as u64).into(), r.suite.as_str().into(), r.passed.into(), r.seconds.into(), r.detail.as_str().into()]);
            }
            t.to_csv()
        }
        Format::Table => {
            let mut s = String::new();
            for r in &reports {
                s.push_str(&format!(
                    "{} {:>2} {:<24} {:>8.1}s  {}\n",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.id,
                    r.suite,
                    r.seconds,
                    r.detail
                ));
            }
            let passed = reports.iter().filter(|r| r.passed).count();
            s.push_str(&format!("{passed}/{} passed\n", reports.len()));
            s
        }
    };
    emit(&text, cli.global.output.as_deref())?;
    if reports.iter().all(|r| r.passed) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
