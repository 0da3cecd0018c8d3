//! Wilton's function, the operator `T f(x) = x f(α(x))`, and the partial
//! sums `𝓛(x, n)` with remainder `D(x, n)`.

use serde::{Deserialize, Serialize};

use crate::cf_dynamics::{cf_expand, CFExpansion};
use crate::error::{Error, Result};
use crate::summation::CompensatedSum;
use crate::tolerance::ToleranceConfig;

/// Relative orbit uncertainty above which an iterate no longer says anything
/// about the true orbit.
pub(crate) const ORBIT_LOST: f64 = 0.05;

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// `l(x) = log(1/x)`.
pub fn ell(x: f64) -> Result<f64> {
    if x > 0.0 && x < 1.0 {
        Ok(-x.ln())
    } else {
        Err(Error::Domain {
            what: "ell",
            value: x,
            domain: "(0, 1)",
        })
    }
}

/// One evaluation of Wilton's function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WiltonEval {
    pub point: f64,
    pub value: f64,
    pub terms_used: usize,
    pub tail_bound: f64,
    pub truncated_rational: bool,
    /// Estimated effect of floating-point rounding along the orbit.
    pub rounding_error: f64,
}

impl WiltonEval {
    /// Truncation and rounding bounds combined.
    pub fn total_error(&self) -> f64 {
        self.tail_bound + self.rounding_error
    }
}

/// `𝓛(x, n)` and `D(x, n) = 𝓛(x, n) - l(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialSumEval {
    pub point: f64,
    pub n: usize,
    #[serde(rename = "L_value")]
    pub l_value: f64,
    #[serde(rename = "D_value")]
    pub d_value: f64,
}

fn expand_for(x: f64, cfg: &ToleranceConfig) -> Result<CFExpansion> {
    cf_expand(x, cfg.max_orbit_depth, cfg)
}

/// Requires the orbit of `exp` to reach depth `n`.
fn require_depth(exp: &CFExpansion, n: usize) -> Result<()> {
    if exp.depth < n {
        Err(Error::EffectivelyRational {
            point: exp.point,
            depth: exp.depth,
        })
    } else {
        Ok(())
    }
}

/// `(T^n f)(x) = β_{n-1}(x) f(α_n(x))` from an existing expansion.
pub fn apply_t_on<F: Fn(f64) -> f64>(exp: &CFExpansion, f: F, n: usize) -> Result<f64> {
    require_depth(exp, n)?;
    Ok(exp.beta(n as isize - 1) * f(exp.iterates[n]))
}

/// `(T^n f)(x)`.
pub fn apply_t<F: Fn(f64) -> f64>(f: F, x: f64, n: usize, cfg: &ToleranceConfig) -> Result<f64> {
    let exp = cf_expand(x, n.min(cfg.max_orbit_depth), cfg)?;
    if n > cfg.max_orbit_depth {
        return Err(Error::InvalidConfig(format!(
            "T^{n} needs orbit depth {n} > max_orbit_depth {}",
            cfg.max_orbit_depth
        )));
    }
    apply_t_on(&exp, f, n)
}

/// Running estimate of how rounding along a floating-point orbit perturbs
/// `Σ β_{k-1} φ(α_k)`, for terms starting at orbit index `start`.
pub(crate) struct OrbitRounding {
    beta_rel: f64,
    total: f64,
    lost: bool,
}

impl OrbitRounding {
    pub(crate) fn new() -> Self {
        Self {
            beta_rel: 0.0,
            total: 0.0,
            lost: false,
        }
    }

    /// Accounts for the term at orbit index `i`; `weight` is the β factor,
    /// `value` the term's magnitude before weighting, `slope` a bound on
    /// `|φ'|` near the iterate and `cap` a bound on `|φ|` used once the orbit
    /// is lost. Returns false once the orbit carries no more information.
    pub(crate) fn add(
        &mut self,
        exp: &CFExpansion,
        i: usize,
        weight: f64,
        value: f64,
        slope: f64,
        cap: f64,
    ) -> bool {
        if self.lost {
            return false;
        }
        let alpha = exp.iterates[i];
        let abs_err = exp.iterate_errors[i] + UNIT_ROUNDOFF * alpha;
        if abs_err / alpha > ORBIT_LOST {
            self.total += 2.0 * weight * cap;
            self.lost = true;
            return false;
        }
        self.total += weight * (slope * abs_err + self.beta_rel * value.abs());
        self.beta_rel += abs_err / alpha;
        true
    }

    pub(crate) fn total(&self) -> f64 {
        self.total
    }
}

/// `Σ_{k>=0} (-1)^k γ_k(α_start(x))`, i.e. `𝒲(α_start(x))`, reusing the
/// orbit of `x`.
pub fn wilton_on(exp: &CFExpansion, start: usize, cfg: &ToleranceConfig) -> Result<WiltonEval> {
    require_depth(exp, start)?;
    let scale = exp.beta(start as isize - 1);
    let term = |i: usize| exp.gammas[i] / scale;
    let mut acc = CompensatedSum::new();
    let mut rounding = OrbitRounding::new();
    let mut tail_bound = f64::INFINITY;
    let mut terms_used = 0;
    // The alternating tail bound needs the terms to decrease from the cut
    // onward; a large partial quotient further out breaks that.
    let mut decreasing = vec![true; exp.depth + 1];
    for k in (start..exp.depth).rev() {
        decreasing[k] = decreasing[k + 1] && term(k + 1) <= term(k);
    }
    let mut i = start;
    while i <= exp.depth && terms_used < cfg.max_terms {
        let t = term(i);
        if terms_used > 0 && t <= cfg.abs_tol && decreasing[i] {
            tail_bound = t;
            break;
        }
        if i == exp.depth && !exp.truncated {
            // Last available level: treat it as the first omitted term.
            tail_bound = t;
            break;
        }
        let sign = if (i - start).is_multiple_of(2) { 1.0 } else { -1.0 };
        acc.add(sign * t);
        let alpha = exp.iterates[i];
        let w = exp.beta(i as isize - 1) / scale;
        let l = -alpha.ln();
        rounding.add(exp, i, w, l, 1.0 / alpha, l + 2.0);
        terms_used += 1;
        i += 1;
    }
    if terms_used >= cfg.max_terms && tail_bound > cfg.abs_tol {
        return Err(Error::NonConvergent {
            what: "wilton",
            point: exp.iterates[start],
            bound: tail_bound,
            tol: cfg.abs_tol,
        });
    }
    Ok(WiltonEval {
        point: exp.iterates[start],
        value: acc.value(),
        terms_used,
        tail_bound,
        truncated_rational: exp.truncated && tail_bound.is_infinite(),
        rounding_error: rounding.total(),
    })
}

/// Wilton's function `𝒲(x) = Σ (-1)^k γ_k(x)`.
pub fn wilton(x: f64, cfg: &ToleranceConfig) -> Result<WiltonEval> {
    let exp = expand_for(x, cfg)?;
    wilton_on(&exp, 0, cfg)
}

/// `𝓛(x, n)` and `D(x, n)` from an existing expansion.
pub fn partial_sums_on(exp: &CFExpansion, n: usize) -> Result<PartialSumEval> {
    require_depth(exp, n)?;
    let mut acc = CompensatedSum::new();
    for v in 0..=n {
        let t = exp.gammas[v];
        acc.add(if v % 2 == 0 { t } else { -t });
    }
    let l_value = acc.value();
    Ok(PartialSumEval {
        point: exp.point,
        n,
        l_value,
        d_value: l_value - exp.gammas[0],
    })
}

/// `𝓛(x, n) = Σ_{v=0}^n (-1)^v (T^v l)(x)` and `D(x, n)`.
pub fn partial_sums(x: f64, n: usize, cfg: &ToleranceConfig) -> Result<PartialSumEval> {
    if n > cfg.max_orbit_depth {
        return Err(Error::InvalidConfig(format!(
            "n = {n} exceeds max_orbit_depth {}",
            cfg.max_orbit_depth
        )));
    }
    let exp = cf_expand(x, n, cfg)?;
    partial_sums_on(&exp, n)
}

/// `(T^{n+1} 𝒲)(x) = β_n(x) 𝒲(α_{n+1}(x))`, reusing the orbit. The returned
/// error is scaled by `β_n`.
pub fn t_power_wilton_on(exp: &CFExpansion, n: usize, cfg: &ToleranceConfig) -> Result<(f64, f64)> {
    let inner = wilton_on(exp, n + 1, cfg)?;
    let beta = exp.beta(n as isize);
    Ok((beta * inner.value, beta * inner.total_error()))
}
