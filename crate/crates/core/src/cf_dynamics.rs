//! Gauss-map orbits, continued-fraction data and the Gauss measure.

use std::f64::consts::LN_2;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::tolerance::{OrbitPrecision, ToleranceConfig, DEFAULT_RATIONAL_GUARD};

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;
const DD_UNIT_ROUNDOFF: f64 = 6.2e-33;

fn check_unit_open(what: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: x,
            domain: "(0, 1)",
        })
    }
}

/// The Gauss map `x -> {1/x}`, using the default rational guard.
pub fn gauss_map(x: f64) -> Result<f64> {
    gauss_map_guarded(x, DEFAULT_RATIONAL_GUARD)
}

/// The Gauss map; a result below `guard` signals an effectively rational input.
pub fn gauss_map_guarded(x: f64, guard: f64) -> Result<f64> {
    check_unit_open("gauss_map", x)?;
    let y = 1.0 / x;
    let next = y - y.floor();
    if next < guard {
        return Err(Error::EffectivelyRational { point: x, depth: 0 });
    }
    Ok(next)
}

/// A convergent `p_k / q_k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergent {
    #[serde(with = "decimal_string")]
    pub numerator: BigUint,
    #[serde(with = "decimal_string")]
    pub denominator: BigUint,
}

mod decimal_string {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        BigUint::parse_bytes(s.as_bytes(), 10).ok_or_else(|| D::Error::custom("invalid integer"))
    }
}

/// A point together with its Gauss-map orbit to a finite depth.
///
/// Index conventions: `iterates[k]` is `α_k` for `k = 0..=depth`,
/// `partial_quotients[k-1]` is `a_k`, `convergents[k]` is `p_k/q_k`,
/// `betas[k+1]` is `β_k` (so `betas[0] = β_{-1} = 1`) and `gammas[k]` is `γ_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CFExpansion {
    pub point: f64,
    pub depth: usize,
    pub partial_quotients: Vec<u64>,
    pub iterates: Vec<f64>,
    pub convergents: Vec<Convergent>,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Set when an iterate fell below the rational guard before the
    /// requested depth.
    pub truncated: bool,
    /// Propagated rounding uncertainty of each iterate (absolute).
    #[serde(skip)]
    pub iterate_errors: Vec<f64>,
}

impl CFExpansion {
    /// `β_k` for `k >= -1`.
    #[inline]
    pub fn beta(&self, k: isize) -> f64 {
        self.betas[(k + 1) as usize]
    }

    /// `a_k` for `k >= 1`.
    #[inline]
    pub fn partial_quotient(&self, k: usize) -> u64 {
        self.partial_quotients[k - 1]
    }
}

/// Expands `x` to `depth` levels of its continued fraction.
pub fn cf_expand(x: f64, depth: usize, cfg: &ToleranceConfig) -> Result<CFExpansion> {
    expand(x, depth, cfg, None, true)
}

/// Orbit-only expansion for the evaluators: no convergents, and the orbit
/// stops at the first depth `k >= 2` with `β_{k-1}` below `beta_floor`.
pub(crate) fn orbit_expand(x: f64, cfg: &ToleranceConfig, beta_floor: f64) -> Result<CFExpansion> {
    expand(x, cfg.max_orbit_depth, cfg, Some(beta_floor), false)
}

fn expand(
    x: f64,
    depth: usize,
    cfg: &ToleranceConfig,
    beta_floor: Option<f64>,
    with_convergents: bool,
) -> Result<CFExpansion> {
    check_unit_open("cf_expand", x)?;
    cfg.validate()?;
    if depth > cfg.max_orbit_depth {
        return Err(Error::InvalidConfig(format!(
            "requested depth {depth} exceeds max_orbit_depth {}",
            cfg.max_orbit_depth
        )));
    }

    let mut partial_quotients = Vec::with_capacity(depth);
    let mut iterates = Vec::with_capacity(depth + 1);
    let mut iterate_errors = Vec::with_capacity(depth + 1);
    iterates.push(x);
    iterate_errors.push(0.0);

    let mut truncated = false;
    match cfg.precision {
        OrbitPrecision::Double => {
            let mut a = x;
            let mut err = 0.0;
            let (mut beta_prev, mut beta) = (1.0, x);
            for k in 0..depth {
                if let Some(floor) = beta_floor {
                    if k >= 2 && beta_prev < floor {
                        break;
                    }
                }
                let y = 1.0 / a;
                let q = y.floor();
                let next = y - q;
                if next < cfg.rational_guard {
                    truncated = true;
                    break;
                }
                err = err / (a * a) + UNIT_ROUNDOFF * y;
                partial_quotients.push(q as u64);
                iterates.push(next);
                iterate_errors.push(err);
                beta_prev = beta;
                beta *= next;
                a = next;
            }
        }
        OrbitPrecision::DoubleDouble => {
            let mut a = DoubleDouble::from_f64(x);
            let mut err = 0.0;
            let (mut beta_prev, mut beta) = (1.0, x);
            for k in 0..depth {
                if let Some(floor) = beta_floor {
                    if k >= 2 && beta_prev < floor {
                        break;
                    }
                }
                let y = DoubleDouble::ONE.div(a);
                let q = y.floor();
                let next = y.sub(q);
                let next_f = next.to_f64();
                if next_f < cfg.rational_guard {
                    truncated = true;
                    break;
                }
                let af = a.to_f64();
                err = err / (af * af) + DD_UNIT_ROUNDOFF * y.hi;
                partial_quotients.push(q.to_f64() as u64);
                iterates.push(next_f);
                iterate_errors.push(err);
                beta_prev = beta;
                beta *= next_f;
                a = next;
            }
        }
    }
    let depth = iterates.len() - 1;

    let convergents = if with_convergents {
        convergents_of(&partial_quotients)
    } else {
        Vec::new()
    };

    let mut betas = Vec::with_capacity(depth + 2);
    let mut gammas = Vec::with_capacity(depth + 1);
    betas.push(1.0);
    for &alpha in &iterates {
        let prev = *betas.last().expect("betas starts non-empty");
        gammas.push(prev * (-alpha.ln()));
        betas.push(prev * alpha);
    }

    Ok(CFExpansion {
        point: x,
        depth,
        partial_quotients,
        iterates,
        convergents,
        betas,
        gammas,
        truncated,
        iterate_errors,
    })
}

fn convergents_of(partial_quotients: &[u64]) -> Vec<Convergent> {
    let mut convergents = Vec::with_capacity(partial_quotients.len() + 1);
    let (mut p_prev, mut q_prev) = (BigUint::one(), BigUint::zero());
    let (mut p, mut q) = (BigUint::zero(), BigUint::one());
    convergents.push(Convergent {
        numerator: p.clone(),
        denominator: q.clone(),
    });
    for &a in partial_quotients {
        let a = BigUint::from(a);
        let p_next = &a * &p + &p_prev;
        let q_next = &a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        convergents.push(Convergent {
            numerator: p.clone(),
            denominator: q.clone(),
        });
    }
    convergents
}

/// An interval `(lo, hi)` with `0 <= lo < hi <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo >= 0.0 && lo < hi && hi <= 1.0 {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidInterval { lo, hi })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

/// Gauss measure of an interval, `m((lo, hi))`.
pub fn gauss_measure(iv: Interval) -> f64 {
    (iv.hi.ln_1p() - iv.lo.ln_1p()) / LN_2
}

/// Distribution function of the Gauss measure on `[0, 1]`.
pub fn gauss_cdf(x: f64) -> f64 {
    x.clamp(0.0, 1.0).ln_1p() / LN_2
}

/// Inverse distribution function, `2^u - 1`, clamped into the open unit interval.
pub fn gauss_inverse_cdf(u: f64) -> f64 {
    let x = (u * LN_2).exp_m1();
    x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// A reproducible random stream for `(seed, stream)`.
pub fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` independent draws from the Gauss measure.
pub fn sample_gauss_measure(n: usize, seed: u64) -> Vec<f64> {
    sample_gauss_measure_stream(n, seed, 0)
}

/// As [`sample_gauss_measure`], on an independent sub-stream.
pub fn sample_gauss_measure_stream(n: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = seeded_stream(seed, stream);
    (0..n)
        .map(|_| gauss_inverse_cdf(rng.sample::<f64, _>(Open01)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;
    const SILVER: f64 = 0.414_213_562_373_095_03;

    fn ulps(a: f64, b: f64) -> u64 {
        (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
    }

    #[test]
    fn gauss_map_fixed_points() {
        assert!(ulps(gauss_map(GOLDEN).unwrap(), GOLDEN) <= 4);
        assert!(ulps(gauss_map(SILVER).unwrap(), SILVER) <= 4);
    }

    #[test]
    fn gauss_map_of_inverse_pi() {
        let x = std::f64::consts::FRAC_1_PI;
        let y = gauss_map(x).unwrap();
        assert!((y - (std::f64::consts::PI - 3.0)).abs() < 1e-14);
    }

    #[test]
    fn gauss_map_domain_and_rational_signal() {
        assert!(matches!(gauss_map(0.0), Err(Error::Domain { .. })));
        assert!(matches!(gauss_map(1.0), Err(Error::Domain { .. })));
        assert!(matches!(gauss_map(-0.3), Err(Error::Domain { .. })));
        assert!(matches!(gauss_map(0.5), Err(Error::EffectivelyRational { .. })));
        assert!(matches!(gauss_map(0.25), Err(Error::EffectivelyRational { .. })));
    }

    fn conv(e: &CFExpansion) -> Vec<(u64, u64)> {
        e.convergents
            .iter()
            .map(|c| {
                (
                    c.numerator.to_u64_digits().first().copied().unwrap_or(0),
                    c.denominator.to_u64_digits()[0],
                )
            })
            .collect()
    }

    #[test]
    fn golden_expansion() {
        let e = cf_expand(GOLDEN, 4, &ToleranceConfig::default()).unwrap();
        assert_eq!(e.partial_quotients, vec![1, 1, 1, 1]);
        assert_eq!(conv(&e), vec![(0, 1), (1, 1), (1, 2), (2, 3), (3, 5)]);
        for k in 0..=4 {
            let beta = GOLDEN.powi(k as i32 + 1);
            assert!((e.beta(k as isize) - beta).abs() < 1e-14);
            let gamma = GOLDEN.powi(k as i32) * (1.0 / GOLDEN).ln();
            assert!((e.gammas[k] - gamma).abs() < 1e-14);
        }
        assert_eq!(e.beta(-1), 1.0);
        assert!(!e.truncated);
    }

    #[test]
    fn silver_expansion() {
        let e = cf_expand(SILVER, 3, &ToleranceConfig::default()).unwrap();
        assert_eq!(e.partial_quotients, vec![2, 2, 2]);
        assert_eq!(conv(&e), vec![(0, 1), (1, 2), (2, 5), (5, 12)]);
    }

    #[test]
    fn expansion_truncates_on_rationals() {
        // 2/5 = [0; 2, 2]: 1/0.4 rounds to 2.5 and 1/0.5 = 2 exactly.
        let e = cf_expand(0.4, 10, &ToleranceConfig::default()).unwrap();
        assert!(e.truncated);
        assert_eq!(e.partial_quotients, vec![2]);
        assert_eq!(e.depth, 1);
        assert_eq!(e.iterates.len(), 2);
    }

    #[test]
    fn expansion_rejects_bad_input() {
        let cfg = ToleranceConfig::default();
        assert!(cf_expand(1.5, 3, &cfg).is_err());
        assert!(cf_expand(0.3, 41, &cfg).is_err());
    }

    #[test]
    fn double_double_orbit_agrees_early() {
        let x = std::f64::consts::FRAC_1_PI;
        let plain = cf_expand(x, 12, &ToleranceConfig::default()).unwrap();
        let cfg = ToleranceConfig::default().with_precision(OrbitPrecision::DoubleDouble);
        let ext = cf_expand(x, 12, &cfg).unwrap();
        assert_eq!(plain.partial_quotients, ext.partial_quotients);
        for k in 0..=12 {
            let d = (plain.iterates[k] - ext.iterates[k]).abs();
            assert!(d <= 2.0 * plain.iterate_errors[k] + 1e-16, "k={k} d={d:e}");
        }
        assert!(ext.iterate_errors[12] < plain.iterate_errors[12] * 1e-10);
    }

    #[test]
    fn measure_examples() {
        assert!((gauss_measure(Interval::new(0.0, 1.0).unwrap()) - 1.0).abs() < 1e-15);
        let half = gauss_measure(Interval::new(0.0, 0.5).unwrap());
        assert!((half - 0.584_962_500_721_156_2).abs() < 1e-12);
        let upper = gauss_measure(Interval::new(0.5, 1.0).unwrap());
        assert!((upper - 0.415_037_499_278_843_8).abs() < 1e-12);
        assert!(Interval::new(0.5, 0.5).is_err());
        assert!(Interval::new(-0.1, 0.5).is_err());
        assert!(Interval::new(0.2, 1.1).is_err());
    }

    #[test]
    fn inverse_cdf_edges() {
        assert!((gauss_inverse_cdf(0.5) - SILVER).abs() < 1e-15);
        assert!(gauss_inverse_cdf(0.0) > 0.0);
        assert!(gauss_inverse_cdf(1.0) < 1.0);
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = sample_gauss_measure(100, 42);
        let b = sample_gauss_measure(100, 42);
        assert_eq!(a, b);
        let c = sample_gauss_measure_stream(100, 42, 1);
        assert_ne!(a, c);
        assert!(a.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn sampled_mass_below_half() {
        let n = 1_000_000;
        let xs = sample_gauss_measure(n, 7);
        let frac = xs.iter().filter(|&&x| x < 0.5).count() as f64 / n as f64;
        let p = 0.584_962_500_721_156_2;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((frac - p).abs() < 3.0 * sigma, "frac {frac}");
    }
}
