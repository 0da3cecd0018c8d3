//! `H`, `Φ₁` partial sums and the two routes to `g(x) = Σ (1 - 2{lx})/l`.

use serde::{Deserialize, Serialize};

use super::big_a::{a_one, f_bounded, sup_f};
use super::bernoulli::bernoulli1;
use super::phi2::Bounded;
use crate::cf_dynamics::{orbit_expand, CFExpansion};
use crate::error::{Error, Result};
use crate::summation::CompensatedSum;
use crate::tolerance::{OrbitPrecision, ToleranceConfig};
use crate::wilton::{wilton_on, OrbitRounding};

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// Terms of the direct series summed by default.
pub const DIRECT_SERIES_TERMS: u64 = 1 << 22;

/// Checkpoints averaged by the direct series, spread over `(N/2, N]`.
pub const DIRECT_SERIES_CHECKPOINTS: usize = 64;

/// Drift across the checkpoints beyond which the direct series is declared
/// divergent.
const DIRECT_SERIES_DRIFT_LIMIT: f64 = 1e-2;

/// How `g` was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GMethod {
    #[serde(rename = "wilton_plus_H")]
    WiltonPlusH,
    #[serde(rename = "direct_series")]
    DirectSeries,
}

impl GMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            GMethod::WiltonPlusH => "wilton_plus_H",
            GMethod::DirectSeries => "direct_series",
        }
    }
}

/// One evaluation of `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GEval {
    pub point: f64,
    pub value: f64,
    pub method: GMethod,
    pub est_error: f64,
}

/// Orbit deep enough for `𝒲` and `H` at tolerance `tol`.
pub(crate) fn orbit_for(x: f64, cfg: &ToleranceConfig, tol: f64) -> Result<CFExpansion> {
    orbit_expand(x, cfg, 1e-3 * tol)
}

/// `H(x) = 2 Σ_{j>=0} (-1)^j β_{j-1} F(α_j)` along an existing orbit.
///
/// The returned error covers the truncated tail, the per-term error of `F`
/// and the propagated orbit rounding.
pub fn h_on(exp: &CFExpansion, tol: f64) -> Result<Bounded> {
    let sup = sup_f();
    let a1_half = 0.5 * a_one();
    let mut acc = CompensatedSum::new();
    let mut error = 0.0;
    let mut rounding = OrbitRounding::new();
    // Σ_{k>=j} β_{k-1} <= 2(β_{j-1} + β_j) because β_{k+2} < β_k / 2.
    let remainder = |j: usize| {
        let b_prev = exp.beta(j as isize - 1);
        let b_here = if j <= exp.depth { exp.beta(j as isize) } else { b_prev };
        4.0 * sup * (b_prev + b_here)
    };
    let mut j = 0usize;
    loop {
        if j > exp.depth {
            if exp.truncated {
                return Err(Error::EffectivelyRational {
                    point: exp.point,
                    depth: exp.depth,
                });
            }
            error += remainder(j);
            break;
        }
        let rem = remainder(j);
        if j > 0 && rem <= 0.5 * tol {
            error += rem;
            break;
        }
        let alpha = exp.iterates[j];
        let b_prev = exp.beta(j as isize - 1);
        let abs_err = exp.iterate_errors[j] + UNIT_ROUNDOFF * alpha;
        let slope = 3.0 + a1_half + 0.5 * (-alpha.ln()) + 0.5 * (1.0 / abs_err).ln().max(0.0);
        if !rounding.add(exp, j, 2.0 * b_prev, sup, slope, 0.0) {
            error += rem;
            break;
        }
        let eps = tol / (2f64.powi(j as i32 + 3) * b_prev);
        let f = f_bounded(alpha, eps)?;
        let term = 2.0 * b_prev * f.value;
        acc.add(if j.is_multiple_of(2) { term } else { -term });
        error += 2.0 * b_prev * f.error;
        j += 1;
    }
    Ok(Bounded {
        value: acc.value(),
        error: error + rounding.total(),
    })
}

/// `H(x)` with its error bound.
pub fn h_eval(x: f64, cfg: &ToleranceConfig) -> Result<Bounded> {
    let h = retry_in_double_double(cfg, |c| {
        let exp = orbit_for(x, c, c.abs_tol)?;
        h_on(&exp, c.abs_tol)
    }, |h| (h.error, h.value))?;
    if !cfg.accepts(h.error, h.value) {
        return Err(Error::NonConvergent {
            what: "h_func",
            point: x,
            bound: h.error,
            tol: cfg.abs_tol,
        });
    }
    Ok(h)
}

/// Runs `eval` with `cfg`, and once more with a double-double orbit if the
/// error reported through `error_of` misses the request. Orbit rounding, not
/// truncation, is what limits a double orbit at tight tolerances.
pub(crate) fn retry_in_double_double<T>(
    cfg: &ToleranceConfig,
    eval: impl Fn(&ToleranceConfig) -> Result<T>,
    error_of: impl Fn(&T) -> (f64, f64),
) -> Result<T> {
    let first = eval(cfg);
    let retry = match &first {
        Ok(v) => {
            let (err, val) = error_of(v);
            !cfg.accepts(err, val)
        }
        Err(Error::EffectivelyRational { .. }) => true,
        Err(_) => false,
    };
    if !retry || cfg.precision == OrbitPrecision::DoubleDouble {
        return first;
    }
    match eval(&cfg.with_precision(OrbitPrecision::DoubleDouble)) {
        Ok(v) => Ok(v),
        Err(_) => first,
    }
}

/// `H(x) = 2 Σ_{j>=0} (-1)^j β_{j-1}(x) F(α_j(x))`.
pub fn h_func(x: f64, cfg: &ToleranceConfig) -> Result<f64> {
    Ok(h_eval(x, cfg)?.value)
}

/// `Σ_{n=1}^{N} B₁(nx)/n`.
pub fn phi1_partial(x: f64, n_terms: u64) -> f64 {
    let mut acc = CompensatedSum::new();
    for n in 1..=n_terms {
        acc.add(bernoulli1(n as f64 * x) / n as f64);
    }
    acc.value()
}

/// `g = 𝒲 - H` along an existing orbit, at tolerance `tol`.
pub(crate) fn g_wilton_on(exp: &CFExpansion, cfg: &ToleranceConfig, tol: f64) -> Result<GEval> {
    let wcfg = ToleranceConfig {
        abs_tol: tol,
        ..*cfg
    };
    let w = wilton_on(exp, 0, &wcfg)?;
    if w.truncated_rational || !w.tail_bound.is_finite() {
        return Err(Error::EffectivelyRational {
            point: exp.point,
            depth: exp.depth,
        });
    }
    let h = h_on(exp, tol)?;
    Ok(GEval {
        point: exp.point,
        value: w.value - h.value,
        method: GMethod::WiltonPlusH,
        est_error: w.total_error() + h.error + 4.0 * f64::EPSILON * (w.value.abs() + h.value.abs()),
    })
}

/// `g` through `𝒲 - H` at an explicit tolerance.
pub fn g_wilton_plus_h(x: f64, cfg: &ToleranceConfig, tol: f64) -> Result<GEval> {
    let exp = orbit_for(x, cfg, tol)?;
    g_wilton_on(&exp, cfg, tol)
}

/// `g(x) = l(x) - 2F(x) - x g(α)` for the point `x` whose first Gauss-map
/// iterate is `alpha1`. Lets callers evaluate `g` at points so close to 0
/// that `{1/x}` is not representable, by supplying `α(x)` directly.
pub fn g_first_step(x: f64, alpha1: f64, cfg: &ToleranceConfig, tol: f64) -> Result<GEval> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain {
            what: "g_first_step",
            value: x,
            domain: "(0, 1)",
        });
    }
    let f = f_bounded(x, 0.25 * tol)?;
    let inner = g_wilton_plus_h(alpha1, cfg, (0.5 * tol / x).min(1.0))?;
    let l = -x.ln();
    Ok(GEval {
        point: x,
        value: l - 2.0 * f.value - x * inner.value,
        method: GMethod::WiltonPlusH,
        est_error: 2.0 * f.error + x * inner.est_error + 4.0 * f64::EPSILON * l,
    })
}

/// `g = -2Φ₁` from the partial sums `S_l = Σ_{k<=l} (1 - 2{kx})/k`,
/// averaged over evenly spaced checkpoints in `(N/2, N]`.
///
/// The error estimate is heuristic: the checkpoint spread, the `1/N` size
/// of the next terms and the drift of the checkpoints against `log l`,
/// which is what a rational or nearly rational point produces.
pub fn g_direct_series(x: f64, n_terms: u64, checkpoints: usize) -> Result<GEval> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain {
            what: "g_func",
            value: x,
            domain: "(0, 1)",
        });
    }
    let cp = checkpoints.max(2) as u64;
    let n_terms = n_terms.max(2 * cp);
    let half = n_terms / 2;
    let step = (n_terms - half) / cp;
    let mut marks = Vec::with_capacity(cp as usize);
    let mut values = Vec::with_capacity(cp as usize);
    let mut acc = CompensatedSum::new();
    let mut next_mark = half + step;
    let end = half + step * cp;
    for l in 1..=end {
        let lf = l as f64;
        let t = lf * x;
        acc.add((1.0 - 2.0 * (t - t.floor())) / lf);
        if l == next_mark {
            marks.push(lf.ln());
            values.push(acc.value());
            next_mark += step;
        }
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let mean_log = marks.iter().sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (m, v) in marks.iter().zip(&values) {
        sxy += (m - mean_log) * (v - mean);
        sxx += (m - mean_log) * (m - mean_log);
    }
    let slope = sxy / sxx;
    let drift = slope.abs() * (marks[marks.len() - 1] - marks[0]);
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    if drift > DIRECT_SERIES_DRIFT_LIMIT {
        return Err(Error::NonConvergent {
            what: "direct_series",
            point: x,
            bound: drift,
            tol: DIRECT_SERIES_DRIFT_LIMIT,
        });
    }
    Ok(GEval {
        point: x,
        value: mean,
        method: GMethod::DirectSeries,
        est_error: var.sqrt() / k.sqrt() + 2.0 / end as f64 + drift,
    })
}

/// `g(x)` by the chosen route, at the configured absolute tolerance.
pub fn g_func(x: f64, method: GMethod, cfg: &ToleranceConfig) -> Result<GEval> {
    match method {
        GMethod::WiltonPlusH => {
            let g = retry_in_double_double(cfg, |c| g_wilton_plus_h(x, c, c.abs_tol), |g| (g.est_error, g.value))?;
            if !cfg.accepts(g.est_error, g.value) {
                return Err(Error::NonConvergent {
                    what: "g_func",
                    point: x,
                    bound: g.est_error,
                    tol: cfg.abs_tol,
                });
            }
            Ok(g)
        }
        GMethod::DirectSeries => {
            g_direct_series(x, DIRECT_SERIES_TERMS, DIRECT_SERIES_CHECKPOINTS)
        }
    }
}

/// `l(x) + D(x, n) + H(x) + (-1)^{n+1} (T^{n+1} 𝒲)(x)`, given `H(x)`
/// computed once for the orbit. Returns the value and an error estimate.
pub fn decomposition_on(
    exp: &CFExpansion,
    n: usize,
    h: Bounded,
    cfg: &ToleranceConfig,
) -> Result<(f64, f64)> {
    let partial = crate::wilton::partial_sums_on(exp, n)?;
    let (t_w, t_err) = crate::wilton::t_power_wilton_on(exp, n, cfg)?;
    let sign = if (n + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    let l = exp.gammas[0];
    let value = l + partial.d_value - h.value + sign * t_w;
    Ok((value, t_err + h.error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf_dynamics::{cf_expand, sample_gauss_measure};
    use crate::special_fn::big_a::f_bounded;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    fn cfg(tol: f64) -> ToleranceConfig {
        ToleranceConfig::default().with_abs_tol(tol)
    }

    #[test]
    fn h_at_golden_point_is_geometric() {
        let f = f_bounded(GOLDEN, 1e-12).unwrap();
        let expected = 2.0 * f.value / (1.0 + GOLDEN);
        let h = h_eval(GOLDEN, &cfg(1e-9)).unwrap();
        // The double nearest the golden ratio leaves the fixed-point orbit
        // after about 35 steps, where β is about 5e-8.
        assert!((h.value - expected).abs() < h.error + 1e-7, "{} vs {expected}", h.value);
        let coarse = h_eval(GOLDEN, &cfg(1e-5)).unwrap();
        assert!((coarse.value - expected).abs() < coarse.error);
    }

    #[test]
    fn h_near_zero_tends_to_a_one() {
        let a1 = a_one();
        for &x in &[1.7724538e-6, 3.1415927e-7, 1.2345678e-8] {
            let h = h_eval(x, &cfg(1e-9)).unwrap();
            assert!((h.value - a1).abs() < 1e-4, "x={x}: H={}", h.value);
        }
    }

    #[test]
    fn h_respects_bound() {
        let s = sup_f();
        for &x in &sample_gauss_measure(50, 3) {
            let exp = orbit_for(x, &cfg(1e-7), 1e-7).unwrap();
            let h = h_on(&exp, 1e-7).unwrap();
            let bound: f64 = 2.0 * s * exp.betas.iter().sum::<f64>();
            assert!(h.value.abs() <= bound);
        }
    }

    #[test]
    fn phi1_single_term() {
        assert!((phi1_partial(0.75, 1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn phi1_cesaro_average_matches_g() {
        let g = g_func(GOLDEN, GMethod::WiltonPlusH, &cfg(1e-9)).unwrap();
        let n = 1_000_000u64;
        let mut partial = CompensatedSum::new();
        let mut running = CompensatedSum::new();
        for k in 1..=n {
            partial.add(bernoulli1(k as f64 * GOLDEN) / k as f64);
            running.add(partial.value());
        }
        let cesaro = running.value() / n as f64;
        assert!((cesaro + 0.5 * g.value).abs() < 1e-3, "{cesaro} vs {}", -0.5 * g.value);
    }

    #[test]
    fn direct_series_flags_rationals() {
        assert!(g_direct_series(0.5, 1 << 16, 64).is_err());
        assert!(g_direct_series(1.0 / 3.0, 1 << 16, 64).is_err());
    }

    #[test]
    fn routes_agree_at_golden_point() {
        let fast = g_func(GOLDEN, GMethod::WiltonPlusH, &cfg(1e-10)).unwrap();
        let slow = g_func(GOLDEN, GMethod::DirectSeries, &cfg(1e-10)).unwrap();
        assert!((fast.value - slow.value).abs() < 1e-3f64.max(fast.est_error + slow.est_error));
    }

    #[test]
    fn g_is_antisymmetric() {
        let c = cfg(1e-8);
        for &x in &sample_gauss_measure(40, 11) {
            let x = 0.5 + 0.5 * x;
            let a = g_func(x, GMethod::WiltonPlusH, &c).unwrap();
            let b = g_func(1.0 - x, GMethod::WiltonPlusH, &c).unwrap();
            assert!((a.value + b.value).abs() < a.est_error + b.est_error, "x={x}");
        }
    }

    #[test]
    fn g_minus_log_near_zero() {
        let target = -a_one();
        let c = cfg(1e-9);
        for &x in &[2.7182818e-7, 2.5066283e-8, 7.7715611e-9] {
            let g = g_func(x, GMethod::WiltonPlusH, &c).unwrap();
            assert!((g.value - (-x.ln()) - target).abs() < 1e-4, "x={x}");
        }
    }

    #[test]
    fn first_step_identity() {
        let c = cfg(1e-8);
        for &x in &sample_gauss_measure(20, 8) {
            let direct = g_wilton_plus_h(x, &c, 1e-8).unwrap();
            let a1 = crate::cf_dynamics::gauss_map(x).unwrap();
            let step = g_first_step(x, a1, &c, 1e-8).unwrap();
            assert!(
                (direct.value - step.value).abs() < direct.est_error + step.est_error,
                "x={x}"
            );
        }
    }

    #[test]
    fn decomposition_is_independent_of_n() {
        let c = cfg(1e-10);
        for &x in &sample_gauss_measure(20, 5) {
            let exp = cf_expand(x, c.max_orbit_depth, &c).unwrap();
            let h = h_on(&exp, 1e-8).unwrap();
            let vals: Vec<f64> = [0usize, 2, 5, 9]
                .iter()
                .map(|&n| decomposition_on(&exp, n, h, &c).unwrap().0)
                .collect();
            for v in &vals {
                assert!((v - vals[0]).abs() < 1e-8);
            }
        }
    }
}
