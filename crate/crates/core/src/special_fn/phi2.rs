//! `Φ₂(λ) = Σ B₂(nλ)/n²` and the tail integral `∫_X^∞ Φ₂(t) t⁻³ dt`.
//!
//! `Φ₂` is evaluated exactly at a nearby convergent `p/q` of `λ`,
//!
//! ```text
//! Φ₂(p/q) = q⁻² Σ_{r=1}^{q} B₂(rp/q) ψ'(r/q),
//! ```
//!
//! and the distance to `λ` is bounded through the Lipschitz constant of `B₂`:
//! `|Φ₂(λ) - Φ₂(p/q)| <= Σ_n min(n|δ|, 1/4)/n²`. This converges like `q⁻²`
//! rather than the `1/N` of the raw series.

use crate::special_fn::bernoulli::{bernoulli2, bernoulli_poly_3_to_7};
use crate::summation::CompensatedSum;

/// Largest denominator tried before falling back to the best one found.
const MAX_DENOMINATOR: u64 = 1 << 26;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `max |B₃|` on `[0, 1]`, i.e. `√3/36`.
const MAX_ABS_B3: f64 = 0.048_112_522_432_468_82;

/// Value with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounded {
    pub value: f64,
    pub error: f64,
}

/// Bernoulli numbers `B_2, B_4, …, B_16`.
const BERNOULLI_EVEN: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Trigamma `ψ'(z)` for `z > 0`.
pub fn trigamma(mut z: f64) -> f64 {
    let mut acc = 0.0;
    while z < 10.0 {
        acc += 1.0 / (z * z);
        z += 1.0;
    }
    // 1/z + 1/(2z²) + Σ_k B_{2k} / z^{2k+1}
    let w = 1.0 / z;
    let w2 = w * w;
    let mut series = 0.0;
    for b in BERNOULLI_EVEN.iter().rev() {
        series = series * w2 + b;
    }
    acc + w + 0.5 * w2 + w * w2 * series
}

/// `Φ₂(p/q)` for coprime `p`, `q`, exact up to rounding.
pub fn phi2_rational(p: u64, q: u64) -> f64 {
    let qf = q as f64;
    let mut acc = CompensatedSum::new();
    let p = p % q;
    let mut residue: u64 = 0;
    for r in 1..=q {
        residue += p;
        if residue >= q {
            residue -= q;
        }
        let f = residue as f64 / qf;
        let b2 = f * f - f + 1.0 / 6.0;
        acc.add(b2 * trigamma(r as f64 / qf));
    }
    acc.value() / (qf * qf)
}

/// Bound on `Σ_{n>=1} min(n|δ|, 1/4)/n²`.
pub(crate) fn lipschitz_bound(delta: f64) -> f64 {
    let d = delta.abs();
    if d == 0.0 {
        return 0.0;
    }
    let m = (0.25 / d).floor();
    if m < 1.0 {
        return 0.25 * std::f64::consts::PI.powi(2) / 6.0;
    }
    d * (m.ln() + 1.0) + 0.25 / m
}

/// `Φ₂(λ)` to within `tol`, through a convergent of `{λ}`.
pub fn phi2_bounded(lambda: f64, tol: f64) -> Bounded {
    let y = lambda - lambda.floor();
    if y == 0.0 {
        return Bounded {
            value: phi2_rational(0, 1),
            error: 0.0,
        };
    }
    // Convergents of y from its floating-point continued fraction; each
    // candidate p/q is exact, and δ = y - p/q is computed with one rounding.
    let (mut p_prev, mut q_prev) = (1u64, 0u64);
    let (mut p, mut q) = (0u64, 1u64);
    let mut alpha = y;
    let mut best: Option<(u64, u64, f64)> = None;
    loop {
        let inv = 1.0 / alpha;
        let a = inv.floor();
        if !a.is_finite() || a > 1e18 {
            break;
        }
        let a_int = a as u64;
        let (Some(p_next), Some(q_next)) = (
            a_int.checked_mul(p).and_then(|v| v.checked_add(p_prev)),
            a_int.checked_mul(q).and_then(|v| v.checked_add(q_prev)),
        ) else {
            break;
        };
        if q_next > MAX_DENOMINATOR {
            break;
        }
        (p_prev, q_prev, p, q) = (p, q, p_next, q_next);
        let delta = y.mul_add(q as f64, -(p as f64)) / q as f64;
        let bound = lipschitz_bound(delta);
        best = Some((p, q, bound));
        if bound <= tol {
            break;
        }
        alpha = inv - a;
        if alpha <= 0.0 {
            break;
        }
    }
    let (p, q, bound) = best.unwrap_or((0, 1, lipschitz_bound(y)));
    Bounded {
        value: phi2_rational(p, q),
        error: bound,
    }
}

/// Literal truncation of `Σ_{n<=N} B₂(nλ)/n²`, returned with the bound
/// `(1/6)/N` on the omitted tail.
pub fn phi2_truncated(lambda: f64, n_terms: u64) -> Bounded {
    let mut acc = CompensatedSum::new();
    for n in 1..=n_terms {
        let nf = n as f64;
        acc.add(bernoulli2(nf * lambda) / (nf * nf));
    }
    Bounded {
        value: acc.value(),
        error: 1.0 / (6.0 * n_terms as f64),
    }
}

/// `∫_k^∞ B₂({u}) u⁻³ du` for a positive integer `k`, which telescopes to
/// `ψ(k) - ln k + 1/(2k) + 1/(12k²)`.
fn integer_tail(k: u64) -> f64 {
    let kf = k as f64;
    if k >= 10 {
        let w = 1.0 / (kf * kf);
        return w
            * w
            * (1.0 / 120.0
                + w * (-1.0 / 252.0 + w * (1.0 / 240.0 + w * (-1.0 / 132.0 + w * 691.0 / 32760.0))));
    }
    let harmonic: f64 = (1..k).map(|j| 1.0 / j as f64).sum();
    -EULER_GAMMA + harmonic - kf.ln() + 0.5 / kf + 1.0 / (12.0 * kf * kf)
}

/// `J(Y) = ∫_Y^∞ B₂({u}) u⁻³ du` for `Y >= 1`.
pub fn bernoulli2_tail_integral(y: f64) -> f64 {
    debug_assert!(y >= 1.0);
    if y >= 64.0 {
        // Repeated integration by parts: J(Y) = -Σ_{m=3}^{7} B_m({Y})/(m Y^m)
        // + O(max|B₇| / (7 Y⁷)).
        let f = y - y.floor();
        let b = bernoulli_poly_3_to_7(f);
        let inv = 1.0 / y;
        let mut pow = inv * inv * inv;
        let mut acc = 0.0;
        for (i, bm) in b.iter().enumerate() {
            let m = (i + 3) as f64;
            acc -= bm * pow / m;
            pow *= inv;
        }
        return acc;
    }
    let k = y.floor();
    let k1 = k + 1.0;
    // Exact antiderivative on [k, k+1]:
    // ln u + (2k+1)/u - (k² + k + 1/6)/(2u²).
    let head = ((k1 - y) / y).ln_1p() + (2.0 * k + 1.0) * (1.0 / k1 - 1.0 / y)
        - 0.5 * (k * k + k + 1.0 / 6.0) * (1.0 / (k1 * k1) - 1.0 / (y * y));
    head + integer_tail(k1 as u64)
}

/// `∫_X^∞ Φ₂(t) t⁻³ dt = Σ_n J(nX)` for `X >= 1`.
pub fn phi2_tail_integral(x: f64, tol: f64) -> Bounded {
    debug_assert!(x >= 1.0);
    // |J(Y)| <= 2 max|B₃| / (3 Y³), so the tail after N terms is at most
    // (2 max|B₃| / 3) / (2 N² X³).
    let c = MAX_ABS_B3 / 3.0 / x.powi(3);
    let n = ((c / tol).sqrt().ceil() as u64).max(1);
    let mut acc = CompensatedSum::new();
    for k in 1..=n {
        acc.add(bernoulli2_tail_integral(k as f64 * x));
    }
    Bounded {
        value: acc.value(),
        error: c / (n as f64 * n as f64),
    }
}
