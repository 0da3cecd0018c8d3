//! The acceptance criteria as runnable checks, shared by the `verify`
//! subcommand and the acceptance test target.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::cf_dynamics::{cf_expand, gauss_cdf, gauss_map, sample_gauss_measure, sample_gauss_measure_stream};
use crate::cotangent::{c0_sweep, CotTable};
use crate::error::Result;
use crate::moments::{gamma_ratio_sweep, h_moment, log_moment_calibration, MomentMethod, MomentOptions};
use crate::special_fn::{
    a_one, big_a_bounded, decomposition_on, g_direct_series, g_wilton_plus_h, h_on, oracle,
    EULER_GAMMA,
};
use crate::tolerance::ToleranceConfig;
use crate::wilton::{ell, wilton};

/// Budgets for the verification suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub cfg: ToleranceConfig,
    pub seed: u64,
    /// Monte Carlo draws per `K` for the Γ-ratio trend.
    pub moment_samples: u64,
    /// Monte Carlo draws for `H₁`.
    pub h1_samples: u64,
    /// Tolerance used for `g` where only consistency with its own error
    /// estimate is checked.
    pub g_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            cfg: ToleranceConfig::default(),
            seed: 0,
            moment_samples: 1_000_000,
            h1_samples: 20_000,
            g_tol: 1e-6,
        }
    }
}

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u32,
    pub suite: String,
    pub passed: bool,
    /// Headline measurement against its threshold.
    pub detail: String,
    pub seconds: f64,
}

/// Suite names in criterion order.
pub const SUITES: [&str; 12] = [
    "quadrature-calibration",
    "a-one",
    "small-lambda",
    "functional-equation",
    "decomposition",
    "route-crosscheck",
    "contraction",
    "measure-invariance",
    "gamma-trend",
    "cotangent-antisymmetry",
    "distribution-link",
    "g-antisymmetry",
];

/// Runs the suite called `name`, or returns `None` for an unknown name.
pub fn run_suite(name: &str, opts: &VerifyOptions) -> Option<CriterionReport> {
    let id = SUITES.iter().position(|s| *s == name)? as u32 + 1;
    let start = Instant::now();
    let outcome = match id {
        1 => quadrature_calibration(),
        2 => a_one_closed_form(),
        3 => small_lambda(),
        4 => functional_equation(opts),
        5 => decomposition(opts),
        6 => route_crosscheck(opts),
        7 => contraction(opts),
        8 => measure_invariance(opts),
        9 => gamma_trend(opts),
        10 => cotangent_antisymmetry(),
        11 => distribution_link(opts),
        12 => g_antisymmetry(opts),
        _ => unreachable!("suite ids follow SUITES"),
    };
    let (passed, detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("computation failed: {e}")),
    };
    Some(CriterionReport {
        id,
        suite: name.to_string(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs every suite in order.
pub fn run_all(opts: &VerifyOptions) -> Vec<CriterionReport> {
    SUITES
        .iter()
        .map(|s| run_suite(s, opts).expect("listed suite"))
        .collect()
}

type Outcome = Result<(bool, String)>;

fn quadrature_calibration() -> Outcome {
    let mut worst: f64 = 0.0;
    for &k in &[0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
        let v = log_moment_calibration(k, MomentMethod::QuadLogSubstitution)?;
        let exact = gamma(k + 1.0);
        worst = worst.max(((v - exact) / exact).abs());
    }
    Ok((worst < 1e-6, format!("max relative error {worst:.3e} (limit 1e-6)")))
}

fn a_one_closed_form() -> Outcome {
    let exact = (2.0 * std::f64::consts::PI).ln() - EULER_GAMMA;
    let formula = big_a_bounded(1.0, 1e-12)?.value;
    let direct = oracle::big_a_quadrature(1.0, 1e4)?.value;
    let (ef, eq) = ((formula - exact).abs(), (direct - exact).abs());
    Ok((
        ef < 1e-8 && eq < 1e-4,
        format!("formula error {ef:.3e} (limit 1e-8), quadrature error {eq:.3e} (limit 1e-4)"),
    ))
}

fn small_lambda() -> Outcome {
    let a1 = a_one();
    let mut constants = Vec::new();
    for decade in 0..3 {
        let lo = 1e-4 * 10f64.powi(decade);
        let mut c: f64 = 0.0;
        for i in 0..50 {
            let lambda = lo * 10f64.powf(i as f64 / 49.0);
            let a = big_a_bounded(lambda, 1e-3 * lambda * lambda)?;
            let r = a.value - 0.5 * lambda * (1.0 / lambda).ln() - 0.5 * (1.0 + a1) * lambda;
            c = c.max(r.abs() / (lambda * lambda));
        }
        constants.push(c);
    }
    let max = constants.iter().cloned().fold(f64::MIN, f64::max);
    let min = constants.iter().cloned().fold(f64::MAX, f64::min);
    let ratio = max / min;
    Ok((
        ratio <= 2.0,
        format!(
            "fitted C per decade [{:.4}, {:.4}, {:.4}], max/min {ratio:.3} (limit 2)",
            constants[0], constants[1], constants[2]
        ),
    ))
}

fn functional_equation(opts: &VerifyOptions) -> Outcome {
    let xs = sample_gauss_measure(10_000, opts.seed);
    let results: Vec<Option<f64>> = xs
        .par_iter()
        .map(|&x| {
            let w = wilton(x, &opts.cfg).ok()?;
            let a = gauss_map(x).ok()?;
            let wa = wilton(a, &opts.cfg).ok()?;
            if w.truncated_rational || wa.truncated_rational {
                return None;
            }
            Some((w.value - ell(x).ok()? + x * wa.value).abs())
        })
        .collect();
    let rejected = results.iter().filter(|r| r.is_none()).count();
    let worst = results.iter().flatten().cloned().fold(0.0, f64::max);
    let rate = rejected as f64 / xs.len() as f64;
    Ok((
        worst < 1e-9 && rate < 1e-3,
        format!("max residual {worst:.3e} (limit 1e-9), rejected {rejected} of {}", xs.len()),
    ))
}

fn decomposition(opts: &VerifyOptions) -> Outcome {
    let xs = sample_gauss_measure_stream(1_000, opts.seed, 1);
    let cfg = &opts.cfg;
    let results: Vec<Option<f64>> = xs
        .par_iter()
        .map(|&x| {
            let exp = cf_expand(x, cfg.max_orbit_depth, cfg).ok()?;
            if exp.depth < 10 {
                return None;
            }
            let h = h_on(&exp, opts.g_tol).ok()?;
            let vals: Vec<f64> = [0usize, 2, 5, 9]
                .iter()
                .map(|&n| decomposition_on(&exp, n, h, cfg).map(|v| v.0))
                .collect::<Result<_>>()
                .ok()?;
            let spread = vals.iter().cloned().fold(f64::MIN, f64::max)
                - vals.iter().cloned().fold(f64::MAX, f64::min);
            Some(spread)
        })
        .collect();
    let rejected = results.iter().filter(|r| r.is_none()).count();
    let worst = results.iter().flatten().cloned().fold(0.0, f64::max);
    Ok((
        worst < 1e-8 && rejected == 0,
        format!("max pairwise spread {worst:.3e} (limit 1e-8), rejected {rejected} of {}", xs.len()),
    ))
}

fn route_crosscheck(opts: &VerifyOptions) -> Outcome {
    let xs = sample_gauss_measure_stream(100, opts.seed, 2);
    let diffs: Vec<std::result::Result<f64, String>> = xs
        .par_iter()
        .map(|&x| {
            let fast = g_wilton_plus_h(x, &opts.cfg, opts.g_tol).map_err(|e| e.to_string())?;
            let slow = g_direct_series(
                x,
                crate::special_fn::DIRECT_SERIES_TERMS,
                crate::special_fn::DIRECT_SERIES_CHECKPOINTS,
            )
            .map_err(|e| e.to_string())?;
            Ok((fast.value - slow.value).abs())
        })
        .collect();
    let failures = diffs.iter().filter(|d| d.is_err()).count();
    let worst = diffs.iter().flatten().cloned().fold(0.0, f64::max);
    Ok((
        worst < 1e-3 && failures == 0,
        format!("max route difference {worst:.3e} (limit 1e-3), evaluation failures {failures}"),
    ))
}

fn contraction(opts: &VerifyOptions) -> Outcome {
    const N_MAX: usize = 9;
    let xs = sample_gauss_measure_stream(100_000, opts.seed, 3);
    let cfg = &opts.cfg;
    let rows: Vec<Option<[f64; N_MAX + 1]>> = xs
        .par_iter()
        .map(|&x| {
            let exp = cf_expand(x, N_MAX, cfg).ok()?;
            if exp.depth < N_MAX {
                return None;
            }
            let mut row = [0.0; N_MAX + 1];
            for (n, slot) in row.iter_mut().enumerate() {
                // (T^n l)(x) = β_{n-1} l(α_n) = γ_n
                *slot = exp.gammas.get(n)?.powi(2);
            }
            Some(row)
        })
        .collect();
    let rejected = rows.iter().filter(|r| r.is_none()).count();
    let kept: Vec<[f64; N_MAX + 1]> = rows.into_iter().flatten().collect();
    let integrals: Vec<f64> = (0..=N_MAX)
        .map(|n| {
            let col: Vec<f64> = kept.iter().map(|r| r[n]).collect();
            crate::summation::pairwise_sum(&col) / col.len() as f64
        })
        .collect();
    let limit = ((5f64.sqrt() - 1.0) / 2.0).powi(2) + 0.05;
    let ratios: Vec<f64> = (2..=8).map(|n| integrals[n + 1] / integrals[n]).collect();
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    Ok((
        worst <= limit && rejected < xs.len() / 1000,
        format!(
            "max ratio I(n+1)/I(n) over n=2..8 is {worst:.4} (limit {limit:.4}), rejected {rejected}"
        ),
    ))
}

fn measure_invariance(opts: &VerifyOptions) -> Outcome {
    let xs = sample_gauss_measure_stream(1_000_000, opts.seed, 4);
    let mut pushed: Vec<f64> = xs.par_iter().filter_map(|&x| gauss_map(x).ok()).collect();
    let rejected = xs.len() - pushed.len();
    pushed.par_sort_unstable_by(|a, b| a.total_cmp(b));
    let n = pushed.len() as f64;
    let ks = pushed
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let f = gauss_cdf(y);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    Ok((
        ks < 0.002 && rejected == 0,
        format!("KS statistic {ks:.5} (limit 0.002), rejected {rejected}"),
    ))
}

fn gamma_trend(opts: &VerifyOptions) -> Outcome {
    let mopts = MomentOptions {
        samples: opts.moment_samples,
        ..MomentOptions::default()
    };
    let est = gamma_ratio_sweep(&[10.0, 15.0, 20.0], &opts.cfg, opts.seed, &mopts)?;
    let in_band = est.iter().all(|e| (0.45..=0.70).contains(&e.gamma_ratio));
    let mut trend_ok = true;
    for w in est.windows(2) {
        let allowance = 2.0 * (w[0].ratio_std_error().powi(2) + w[1].ratio_std_error().powi(2)).sqrt();
        if w[1].ratio_deviation() > w[0].ratio_deviation() + allowance {
            trend_ok = false;
        }
    }
    let rows: Vec<String> = est
        .iter()
        .map(|e| format!("K={} ratio {:.5}±{:.5}", e.k, e.gamma_ratio, e.ratio_std_error()))
        .collect();
    Ok((
        in_band && trend_ok,
        format!(
            "{} (band [0.45, 0.70], target {:.7}); trend {}",
            rows.join(", "),
            est[0].target_ratio,
            if trend_ok { "non-increasing" } else { "increasing" }
        ),
    ))
}

fn cotangent_antisymmetry() -> Outcome {
    let mut worst_scaled: f64 = 0.0;
    for &b in &[101u64, 1009, 10007] {
        let table = CotTable::new(b);
        let rs: Vec<u64> = (1..b).filter(|&r| gcd(r, b) == 1).collect();
        let w = rs
            .par_iter()
            .map(|&r| (table.c0(r) + table.c0(b - r)).abs() / b as f64)
            .reduce(|| 0.0, f64::max);
        worst_scaled = worst_scaled.max(w);
    }
    Ok((
        worst_scaled < 1e-9,
        format!("max |c0(r/b) + c0((b-r)/b)| / b = {worst_scaled:.3e} (limit 1e-9)"),
    ))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn distribution_link(opts: &VerifyOptions) -> Outcome {
    let sweep = c0_sweep(20011, 0.5, 1.0, 1)?;
    let mopts = MomentOptions {
        samples: opts.h1_samples,
        ..MomentOptions::default()
    };
    let h1 = h_moment(1, &opts.cfg, opts.seed, &mopts)?;
    let m2 = sweep.normalized_moments[0];
    let rel = (m2 - h1.value).abs() / h1.value;
    Ok((
        rel < 0.1,
        format!(
            "sweep moment {m2:.5}, Monte Carlo H1 {:.5}±{:.5}, relative gap {rel:.4} (limit 0.1)",
            h1.value, h1.std_error
        ),
    ))
}

fn g_antisymmetry(opts: &VerifyOptions) -> Outcome {
    let xs = sample_gauss_measure_stream(1_000, opts.seed, 5);
    let results: Vec<std::result::Result<(f64, f64), String>> = xs
        .par_iter()
        .map(|&x| {
            // 1 - y is exact for y in [1/2, 1].
            let y = x.max(1.0 - x);
            let a = g_wilton_plus_h(y, &opts.cfg, opts.g_tol).map_err(|e| e.to_string())?;
            let b = g_wilton_plus_h(1.0 - y, &opts.cfg, opts.g_tol).map_err(|e| e.to_string())?;
            Ok(((a.value + b.value).abs(), a.est_error + b.est_error))
        })
        .collect();
    let failures = results.iter().filter(|r| r.is_err()).count();
    let violations = results
        .iter()
        .flatten()
        .filter(|(d, e)| d >= e)
        .count();
    let worst = results.iter().flatten().map(|(d, _)| *d).fold(0.0, f64::max);
    let mean_err = results.iter().flatten().map(|(_, e)| *e).sum::<f64>() / (xs.len() - failures).max(1) as f64;
    Ok((
        violations == 0 && failures == 0,
        format!(
            "{violations} of {} points exceed their combined error (max |g(x)+g(1-x)| {worst:.3e}, mean bound {mean_err:.3e}), evaluation failures {failures}",
            xs.len()
        ),
    ))
}
