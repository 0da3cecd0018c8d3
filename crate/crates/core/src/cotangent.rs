//! Cotangent sums `c₀(r/b) = -Σ_{m=1}^{b-1} (m/b) cot(π m r / b)` and their
//! empirical distribution over coprime residues.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf_dynamics::seeded_stream;
use crate::error::{Error, Result};
use crate::summation::{pairwise_sum, CompensatedSum};

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A reduced fraction `r/b` with `0 < r < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalPoint {
    r: u64,
    b: u64,
}

impl RationalPoint {
    pub fn new(r: u64, b: u64) -> Result<Self> {
        if r == 0 || r >= b || gcd(r, b) != 1 {
            return Err(Error::InvalidRational { r, b });
        }
        Ok(Self { r, b })
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn b(&self) -> u64 {
        self.b
    }
}

/// `cot(πk/b)` for `k = 0..b`, each from the reduced angle `π·(k/b)`.
/// Entry 0 is unused.
pub struct CotTable {
    b: u64,
    values: Vec<f64>,
}

impl CotTable {
    pub fn new(b: u64) -> Self {
        let values = (0..b)
            .map(|k| {
                if k == 0 {
                    return 0.0;
                }
                let theta = PI * (k as f64 / b as f64);
                theta.cos() / theta.sin()
            })
            .collect();
        Self { b, values }
    }

    /// `c₀(r/b)`; `r` must be coprime to `b`.
    pub fn c0(&self, r: u64) -> f64 {
        let b = self.b;
        let mut acc = CompensatedSum::new();
        let mut residue = 0u64;
        for m in 1..b {
            residue += r;
            if residue >= b {
                residue -= b;
            }
            debug_assert!(residue != 0, "m r = 0 mod b cannot occur for coprime r");
            acc.add(m as f64 * self.values[residue as usize]);
        }
        -acc.value() / b as f64
    }
}

/// `c₀(r/b)` by direct compensated summation.
pub fn c0(p: RationalPoint) -> f64 {
    CotTable::new(p.b).c0(p.r % p.b)
}

/// Empirical moments of `c₀(r/b)/b` over coprime `r` in `[a0 b, a1 b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub b: u64,
    pub a0: f64,
    pub a1: f64,
    /// Number of coprime residues in the range.
    pub count: u64,
    /// Number of residues actually evaluated (equals `count` for a full
    /// sweep).
    pub evaluated: u64,
    /// Entry `k-1` is the mean of `(c₀(r/b)/b)^{2k}`.
    pub normalized_moments: Vec<f64>,
    /// Mean of `|c₀(r/b)/b|`.
    pub first_abs_moment: f64,
}

/// `c₀(r/b)` values from a sweep, in increasing `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepValues {
    pub summary: DistributionSummary,
    pub residues: Vec<u64>,
    pub values: Vec<f64>,
}

fn residue_range(b: u64, a0: f64, a1: f64) -> Result<(u64, u64)> {
    if b < 3 {
        return Err(Error::InvalidConfig(format!("b = {b} must be at least 3")));
    }
    if !(a0 > 0.0 && a0 < a1 && a1 <= 1.0) {
        return Err(Error::InvalidInterval { lo: a0, hi: a1 });
    }
    let lo = ((a0 * b as f64).ceil() as u64).max(1);
    let hi = ((a1 * b as f64).floor() as u64).min(b - 1);
    Ok((lo, hi))
}

fn coprime_residues(b: u64, lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|&r| gcd(r, b) == 1).collect()
}

fn summarize(b: u64, a0: f64, a1: f64, count: u64, values: &[f64], k_max: usize) -> DistributionSummary {
    let n = values.len() as f64;
    let normalized: Vec<f64> = values.iter().map(|v| v / b as f64).collect();
    let squares: Vec<f64> = normalized.iter().map(|v| v * v).collect();
    let normalized_moments = (1..=k_max)
        .map(|k| {
            let powers: Vec<f64> = squares.iter().map(|s| s.powi(k as i32)).collect();
            pairwise_sum(&powers) / n
        })
        .collect();
    let abs: Vec<f64> = normalized.iter().map(|v| v.abs()).collect();
    DistributionSummary {
        b,
        a0,
        a1,
        count,
        evaluated: values.len() as u64,
        normalized_moments,
        first_abs_moment: pairwise_sum(&abs) / n,
    }
}

/// Full sweep over the coprime residues in `[a0 b, a1 b]`, keeping the values.
pub fn c0_sweep_values(b: u64, a0: f64, a1: f64, k_max: usize) -> Result<SweepValues> {
    let (lo, hi) = residue_range(b, a0, a1)?;
    let residues = coprime_residues(b, lo, hi);
    if residues.is_empty() {
        return Err(Error::EmptyRange { b, a0, a1 });
    }
    let table = CotTable::new(b);
    let values: Vec<f64> = residues.par_iter().map(|&r| table.c0(r)).collect();
    let summary = summarize(b, a0, a1, residues.len() as u64, &values, k_max);
    Ok(SweepValues {
        summary,
        residues,
        values,
    })
}

/// Even moments of `c₀(r/b)/b` up to order `2 k_max` over the coprime
/// residues in `[a0 b, a1 b]`.
pub fn c0_sweep(b: u64, a0: f64, a1: f64, k_max: usize) -> Result<DistributionSummary> {
    Ok(c0_sweep_values(b, a0, a1, k_max)?.summary)
}

/// As [`c0_sweep_values`], but over `samples` residues drawn uniformly (with
/// replacement) from the coprime range.
pub fn c0_sweep_sampled(
    b: u64,
    a0: f64,
    a1: f64,
    k_max: usize,
    samples: usize,
    seed: u64,
) -> Result<SweepValues> {
    let (lo, hi) = residue_range(b, a0, a1)?;
    let population = coprime_residues(b, lo, hi);
    if population.is_empty() {
        return Err(Error::EmptyRange { b, a0, a1 });
    }
    let mut rng = seeded_stream(seed, 0);
    let mut residues: Vec<u64> = (0..samples.max(1))
        .map(|_| population[rng.random_range(0..population.len())])
        .collect();
    residues.sort_unstable();
    let table = CotTable::new(b);
    let values: Vec<f64> = residues.par_iter().map(|&r| table.c0(r)).collect();
    let summary = summarize(b, a0, a1, population.len() as u64, &values, k_max);
    Ok(SweepValues {
        summary,
        residues,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_point_validation() {
        assert!(RationalPoint::new(1, 2).is_ok());
        assert!(RationalPoint::new(0, 5).is_err());
        assert!(RationalPoint::new(5, 5).is_err());
        assert!(RationalPoint::new(2, 4).is_err());
    }

    #[test]
    fn small_examples() {
        assert!(c0(RationalPoint::new(1, 2).unwrap()).abs() < 1e-16);
        let third = 1.0 / (3.0 * 3f64.sqrt());
        assert!((c0(RationalPoint::new(1, 3).unwrap()) - third).abs() < 1e-15);
        assert!((c0(RationalPoint::new(2, 3).unwrap()) + third).abs() < 1e-15);
    }

    /// Plain `cot` of the unreduced angle, for moderate `b` only.
    fn c0_naive(r: u64, b: u64) -> f64 {
        -(1..b)
            .map(|m| {
                let t = PI * (m * r) as f64 / b as f64;
                (m as f64 / b as f64) * t.cos() / t.sin()
            })
            .sum::<f64>()
    }

    #[test]
    fn matches_naive_summation() {
        for &(r, b) in &[(3u64, 7u64), (5, 12), (17, 101), (250, 1009)] {
            let p = RationalPoint::new(r, b).unwrap();
            let a = c0(p);
            let n = c0_naive(r, b);
            assert!((a - n).abs() < 1e-9 * (1.0 + n.abs()), "{r}/{b}: {a} vs {n}");
        }
    }

    #[test]
    fn antisymmetry() {
        for &b in &[101u64, 1009] {
            let table = CotTable::new(b);
            for r in 1..b / 2 {
                if gcd(r, b) == 1 {
                    assert!((table.c0(r) + table.c0(b - r)).abs() < 1e-9 * b as f64);
                }
            }
        }
    }

    #[test]
    fn sweep_enumeration() {
        let s = c0_sweep(5, 0.5, 1.0, 2).unwrap();
        assert_eq!(s.count, 2);
        let v = c0_sweep_values(5, 0.5, 1.0, 2).unwrap();
        assert_eq!(v.residues, vec![3, 4]);
        assert!(c0_sweep(6, 0.9, 0.95, 1).is_err());
        assert!(c0_sweep(7, 0.6, 0.5, 1).is_err());
    }

    #[test]
    fn jensen_and_finiteness() {
        for &b in &[97u64, 1000, 1009] {
            let s = c0_sweep(b, 0.1, 0.9, 3).unwrap();
            assert!(s.normalized_moments[0] >= s.first_abs_moment.powi(2));
            assert!(s.normalized_moments.iter().all(|m| m.is_finite() && *m >= 0.0));
        }
    }

    #[test]
    fn sampled_sweep_is_reproducible() {
        let a = c0_sweep_sampled(10007, 0.5, 1.0, 2, 200, 9).unwrap();
        let b = c0_sweep_sampled(10007, 0.5, 1.0, 2, 200, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.summary.evaluated, 200);
        assert_eq!(a.summary.count, 5003);
    }
}
