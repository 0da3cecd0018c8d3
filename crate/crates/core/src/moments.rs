//! Moments `M(K) = ∫₀¹ |g(x)|^K dx` and their comparison with
//! `(e^γ/π) Γ(K+1)`.
//!
//! Both integrators work in `t = log(1/x)`, where `dx = e^{-t} dt` and the
//! mass of `|g|^K` sits near `t ≈ K`.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::cf_dynamics::seeded_stream;
use crate::error::{Error, Result};
use crate::special_fn::{g_first_step, g_wilton_plus_h, EULER_GAMMA};
use crate::summation::pairwise_sum;
use crate::tolerance::ToleranceConfig;

/// Largest tolerated fraction of rejected `g` evaluations.
pub const MAX_REJECTION_RATE: f64 = 0.01;

/// Share of draws taken from the defensive uniform-in-`x` component.
const DEFENSIVE_SHARE: f64 = 0.1;

const GL_NODES_MC: usize = 20;
const GL_NODES_G: usize = 4;

/// First Gauss-map iterate used by the quadrature nodes with large `t`.
const QUAD_FIRST_ITERATE: f64 = 0.618_033_988_749_894_9;

/// `e^γ / π`.
pub fn target_ratio() -> f64 {
    EULER_GAMMA.exp() / std::f64::consts::PI
}

/// Integration method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MomentMethod {
    #[serde(rename = "mc_stratified")]
    McStratified,
    #[serde(rename = "quad_log_substitution")]
    QuadLogSubstitution,
}

impl MomentMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            MomentMethod::McStratified => "mc_stratified",
            MomentMethod::QuadLogSubstitution => "quad_log_substitution",
        }
    }
}

/// Budget and method for one moment estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentOptions {
    pub method: MomentMethod,
    /// Total Monte Carlo draws, split over `streams` seeded streams.
    pub samples: u64,
    pub streams: u64,
    /// Quadrature panels in `t`.
    pub panels: usize,
    /// Relative accuracy asked of each integrand value, measured against
    /// `Γ(K+1)`. Sets the per-point tolerance for `g`.
    pub rel_accuracy: f64,
    /// Integrate over `(0, 1/2)` and double, using `|g(1-x)| = |g(x)|`.
    pub doubled: bool,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self {
            method: MomentMethod::McStratified,
            samples: 1_000_000,
            streams: 64,
            panels: 1 << 14,
            rel_accuracy: 1e-5,
            doubled: true,
        }
    }
}

/// One estimate of `∫₀¹ |g|^K dx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    #[serde(rename = "K")]
    pub k: f64,
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub method: MomentMethod,
    /// `value / Γ(K+1)`.
    pub gamma_ratio: f64,
    /// `e^γ / π`.
    pub target_ratio: f64,
    /// Draws or nodes dropped because `g` could not be evaluated there.
    pub rejections: u64,
}

impl MomentEstimate {
    fn new(k: f64, value: f64, std_error: f64, samples: u64, method: MomentMethod, rejections: u64) -> Self {
        Self {
            k,
            value,
            std_error,
            samples,
            method,
            gamma_ratio: (value.ln() - ln_gamma(k + 1.0)).exp(),
            target_ratio: target_ratio(),
            rejections,
        }
    }

    /// `|gamma_ratio - e^γ/π|`.
    pub fn ratio_deviation(&self) -> f64 {
        (self.gamma_ratio - self.target_ratio).abs()
    }

    /// Standard error of `gamma_ratio`.
    pub fn ratio_std_error(&self) -> f64 {
        (self.std_error.ln() - ln_gamma(self.k + 1.0)).exp()
    }
}

fn check_k(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "moment",
            value: k,
            domain: "(0, inf)",
        })
    }
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Mixture proposal in `t` on `(t_min, ∞)`: a `Gamma(K+1, 1)` law truncated
/// to `t > t_min`, plus a defensive share drawn uniformly in `x`.
struct Proposal {
    k: f64,
    t_min: f64,
    gamma: Gamma<f64>,
    /// `log Γ(K+1) + log P(T > t_min)`.
    gamma_log_norm: f64,
}

impl Proposal {
    fn new(k: f64, t_min: f64) -> Self {
        let a = k + 1.0;
        let tail = if t_min > 0.0 { gamma_ur(a, t_min) } else { 1.0 };
        Self {
            k,
            t_min,
            gamma: Gamma::new(a, 1.0).expect("shape is positive"),
            gamma_log_norm: ln_gamma(a) + tail.ln(),
        }
    }

    fn ln_pdf(&self, t: f64) -> f64 {
        let g = (1.0 - DEFENSIVE_SHARE).ln() + self.k * t.ln() - t - self.gamma_log_norm;
        // Uniform x on (0, e^{-t_min}) has density e^{t_min - t} in t.
        let u = DEFENSIVE_SHARE.ln() + self.t_min - t;
        log_sum_exp(g, u)
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        if u < DEFENSIVE_SHARE {
            let v: f64 = rng.sample(Open01);
            self.t_min - v.ln()
        } else {
            loop {
                let t = self.gamma.sample(rng);
                if t > self.t_min {
                    return t;
                }
            }
        }
    }
}

/// Per-point tolerance for `g` so that the error of `|g|^K w` stays below
/// `rel_accuracy · Γ(K+1)`, where `w` is the integration weight of the
/// point, using `l(x) + 2` as a stand-in for `|g(x)|`.
fn point_tolerance(k: f64, t: f64, ln_weight: f64, rel_accuracy: f64) -> f64 {
    let proxy = t + 2.0;
    let ln_tol = rel_accuracy.ln() + ln_gamma(k + 1.0) - k.max(1.0).ln() - (k - 1.0) * proxy.ln()
        - ln_weight;
    ln_tol.exp().clamp(1e-10, 1e-2)
}

/// Beyond this `t` the fractional part of `1/x = e^t` carries too few bits,
/// so the point is taken as `x = 1/(⌊e^t⌋ + u)` with an explicit `u`.
const FIRST_STEP_T: f64 = 18.0;

/// `|g(x)|` at the point `x = e^{-t}`, or at `1/(⌊e^t⌋ + u)` for large `t`;
/// `None` marks a rejected point.
fn g_abs(t: f64, u: f64, cfg: &ToleranceConfig, tol: f64) -> Option<f64> {
    let g = if t > FIRST_STEP_T {
        let a = t.exp().floor();
        let x = 1.0 / (a + u);
        if !(x > 0.0) {
            return None;
        }
        g_first_step(x, u, cfg, tol).ok()?
    } else {
        g_wilton_plus_h((-t).exp(), cfg, tol).ok()?
    };
    Some(g.value.abs())
}

fn check_rejections(rejected: u64, attempted: u64) -> Result<()> {
    let rate = rejected as f64 / attempted.max(1) as f64;
    if rate > MAX_REJECTION_RATE {
        Err(Error::RejectionRate {
            rate,
            rejected,
            attempted,
        })
    } else {
        Ok(())
    }
}

struct StreamResult {
    mean: f64,
    rejected: u64,
    attempted: u64,
}

/// Mixture-importance-sampling estimate of `∫_{t_min}^∞ f(t) dt` with
/// `f = exp(log_f)`. `log_f(t, log p(t), u)` gets an auxiliary uniform `u`
/// and returns `None` to reject and redraw the point.
fn mc_integrate<F>(k: f64, t_min: f64, opts: &MomentOptions, seed: u64, log_f: F) -> Result<(f64, f64, u64)>
where
    F: Fn(f64, f64, f64) -> Option<f64> + Sync,
{
    let streams = opts.streams.max(2);
    let proposal = Proposal::new(k, t_min);
    let per_stream = opts.samples / streams;
    let extra = opts.samples % streams;
    let results: Vec<StreamResult> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let n = per_stream + u64::from(s < extra);
            let mut rng = seeded_stream(seed, s);
            let mut weights = Vec::with_capacity(n as usize);
            let (mut rejected, mut attempted) = (0u64, 0u64);
            // A hard cap keeps a pathological integrand from looping forever;
            // the rejection check below then reports it.
            while (weights.len() as u64) < n && rejected <= n / 10 + 10 {
                let t = proposal.sample(&mut rng);
                let u: f64 = rng.sample(Open01);
                attempted += 1;
                let ln_p = proposal.ln_pdf(t);
                match log_f(t, ln_p, u) {
                    Some(ln_f) => weights.push((ln_f - ln_p).exp()),
                    None => rejected += 1,
                }
            }
            StreamResult {
                mean: pairwise_sum(&weights) / weights.len().max(1) as f64,
                rejected,
                attempted,
            }
        })
        .collect();
    let rejected: u64 = results.iter().map(|r| r.rejected).sum();
    let attempted: u64 = results.iter().map(|r| r.attempted).sum();
    check_rejections(rejected, attempted)?;
    let means: Vec<f64> = results.iter().map(|r| r.mean).collect();
    let m = streams as f64;
    let mean = pairwise_sum(&means) / m;
    let dev: Vec<f64> = means.iter().map(|v| (v - mean) * (v - mean)).collect();
    let std_error = (pairwise_sum(&dev) / (m - 1.0) / m).sqrt();
    Ok((mean, std_error, rejected))
}

fn calibration_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(GL_NODES_MC).expect("nonzero")))
}

fn g_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(GL_NODES_G).expect("nonzero")))
}

/// Upper end of the `t` range: the `Gamma(K+1)` mass beyond it is negligible.
fn t_upper(k: f64) -> f64 {
    k + 40.0 * (k + 1.0).sqrt() + 60.0
}

/// `∫₀¹ l(x)^K dx`, which equals `Γ(K+1)`; a calibration of both
/// integrators on the dominant part of `|g|^K`.
pub fn log_moment_calibration(k: f64, method: MomentMethod) -> Result<f64> {
    log_moment_calibration_with(k, method, &MomentOptions::default(), 0).map(|e| e.value)
}

/// As [`log_moment_calibration`], returning the full estimate.
pub fn log_moment_calibration_with(
    k: f64,
    method: MomentMethod,
    opts: &MomentOptions,
    seed: u64,
) -> Result<MomentEstimate> {
    check_k(k)?;
    match method {
        MomentMethod::QuadLogSubstitution => {
            let rule = calibration_rule();
            let f = |t: f64| if t > 0.0 { (k * t.ln() - t).exp() } else { 0.0 };
            let mut pieces = Vec::new();
            // Geometric panels toward the t^K endpoint behaviour at 0.
            let mut hi = 1.0f64;
            for _ in 0..80 {
                let lo = 0.5 * hi;
                pieces.push(rule.integrate(lo, hi, f));
                hi = lo;
            }
            let top = t_upper(k).ceil() as usize;
            for j in 1..top {
                pieces.push(rule.integrate(j as f64, j as f64 + 1.0, f));
            }
            let value = pairwise_sum(&pieces);
            let nodes = (pieces.len() * GL_NODES_MC) as u64;
            Ok(MomentEstimate::new(k, value, 0.0, nodes, method, 0))
        }
        MomentMethod::McStratified => {
            let (value, std_error, _) = mc_integrate(k, 0.0, opts, seed, |t, _, _| Some(k * t.ln() - t))?;
            Ok(MomentEstimate::new(k, value, std_error, opts.samples, method, 0))
        }
    }
}

/// `∫₀¹ |g(x)|^K dx` with the default budget.
pub fn moment(k: f64, cfg: &ToleranceConfig, seed: u64) -> Result<MomentEstimate> {
    moment_with(k, cfg, seed, &MomentOptions::default())
}

/// `∫₀¹ |g(x)|^K dx`.
pub fn moment_with(k: f64, cfg: &ToleranceConfig, seed: u64, opts: &MomentOptions) -> Result<MomentEstimate> {
    check_k(k)?;
    cfg.validate()?;
    let (t_min, factor) = if opts.doubled {
        (std::f64::consts::LN_2, 2.0)
    } else {
        (0.0, 1.0)
    };
    match opts.method {
        MomentMethod::McStratified => {
            let log_f = |t: f64, ln_p: f64, u: f64| {
                let ln_w = -t - ln_p;
                let tol = point_tolerance(k, t, ln_w, opts.rel_accuracy);
                let g = g_abs(t, u, cfg, tol)?;
                Some(k * g.ln() - t)
            };
            let (mean, std_error, rejected) = mc_integrate(k, t_min, opts, seed, log_f)?;
            Ok(MomentEstimate::new(
                k,
                factor * mean,
                factor * std_error,
                opts.samples,
                opts.method,
                rejected,
            ))
        }
        MomentMethod::QuadLogSubstitution => {
            let panels = opts.panels.max(2) & !1;
            let fine = quad_g(k, t_min, panels, cfg, opts.rel_accuracy)?;
            let coarse = quad_g(k, t_min, panels / 2, cfg, opts.rel_accuracy)?;
            let nodes = ((panels + panels / 2) * GL_NODES_G) as u64;
            Ok(MomentEstimate::new(
                k,
                factor * fine.0,
                factor * (fine.0 - coarse.0).abs(),
                nodes,
                opts.method,
                fine.1 + coarse.1,
            ))
        }
    }
}

/// Panel Gauss–Legendre rule for `∫_{t_min}^{T} |g(e^{-t})|^K e^{-t} dt`.
/// Returns the value and the number of dropped nodes.
fn quad_g(k: f64, t_min: f64, panels: usize, cfg: &ToleranceConfig, rel_accuracy: f64) -> Result<(f64, u64)> {
    let rule = g_rule();
    let top = t_upper(k);
    let width = (top - t_min) / panels as f64;
    let results: Vec<(f64, u64)> = (0..panels)
        .into_par_iter()
        .map(|i| {
            let lo = t_min + i as f64 * width;
            let mut dropped = 0u64;
            let v = rule.integrate(lo, lo + width, |t| {
                let ln_w = -t + (top - t_min).ln();
                let tol = point_tolerance(k, t, ln_w, rel_accuracy);
                match g_abs(t, QUAD_FIRST_ITERATE, cfg, tol) {
                    Some(g) => (k * g.ln() - t).exp(),
                    None => {
                        dropped += 1;
                        0.0
                    }
                }
            });
            (v, dropped)
        })
        .collect();
    let dropped: u64 = results.iter().map(|r| r.1).sum();
    check_rejections(dropped, (panels * GL_NODES_G) as u64)?;
    let values: Vec<f64> = results.iter().map(|r| r.0).collect();
    Ok((pairwise_sum(&values), dropped))
}

/// One estimate per `K`, each with the same options and seed.
pub fn gamma_ratio_sweep(
    ks: &[f64],
    cfg: &ToleranceConfig,
    seed: u64,
    opts: &MomentOptions,
) -> Result<Vec<MomentEstimate>> {
    if ks.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig("K values must be sorted".into()));
    }
    ks.iter().map(|&k| moment_with(k, cfg, seed, opts)).collect()
}

/// `H_k = ∫₀¹ (g/π)^{2k} dx = M(2k) / π^{2k}`. The returned estimate has
/// `K = 2k`, with value and error divided by `π^{2k}`.
pub fn h_moment(k: u32, cfg: &ToleranceConfig, seed: u64, opts: &MomentOptions) -> Result<MomentEstimate> {
    if k == 0 {
        return Err(Error::Domain {
            what: "h_moment",
            value: 0.0,
            domain: "k >= 1",
        });
    }
    let kk = 2.0 * k as f64;
    let m = moment_with(kk, cfg, seed, opts)?;
    let scale = std::f64::consts::PI.powi(2 * k as i32);
    Ok(MomentEstimate::new(
        kk,
        m.value / scale,
        m.std_error / scale,
        m.samples,
        m.method,
        m.rejections,
    ))
}
