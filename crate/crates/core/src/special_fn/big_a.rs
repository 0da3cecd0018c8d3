//! `A(λ) = ∫₀^∞ {t}{λt} t⁻² dt` and `F(x) = ((x+1)/2)A(1) - A(x) - (x/2) log x`.

use std::sync::OnceLock;

use rayon::prelude::*;

use super::phi2::{phi2_bounded, phi2_rational, Bounded};
use crate::error::{Error, Result};
use crate::special_fn::phi2::{bernoulli2_tail_integral, phi2_tail_integral};
use crate::summation::CompensatedSum;
use crate::tolerance::ToleranceConfig;

/// Error attached to the cached `A(1)`.
pub const A_ONE_ERROR: f64 = 1e-15;

static A_ONE: OnceLock<f64> = OnceLock::new();
static SUP_F: OnceLock<f64> = OnceLock::new();

/// `A(1)` from the λ = 1 case of the Φ₂ formula,
/// `A(1) = 1 + Φ₂(1) - 2 ∫₁^∞ Φ₂(t) t⁻³ dt`.
///
/// At integer arguments the tail integral is `Σ_n J(n)` with
/// `J(n) ~ 1/(120 n⁴)`, so a plain sum plus its `n⁻³` tail is enough.
pub fn a_one() -> f64 {
    *A_ONE.get_or_init(|| {
        const N: u64 = 100_000;
        let mut acc = CompensatedSum::new();
        for n in (1..=N).rev() {
            acc.add(bernoulli2_tail_integral(n as f64));
        }
        let nf = N as f64;
        acc.add(1.0 / (360.0 * nf * nf * nf));
        1.0 + phi2_rational(0, 1) - 2.0 * acc.value()
    })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "big_a",
            value: lambda,
            domain: "[0, inf)",
        })
    }
}

/// Modulus of continuity of `A`: `|A(λ) - A(λ')| <= ω(|λ - λ'|)` for
/// `λ, λ' <= 1`.
fn a_modulus(d: f64) -> f64 {
    if d <= 0.0 {
        0.0
    } else {
        d * (2.0 + 0.5 * (1.0 / d).ln().max(0.0))
    }
}

/// `A(λ)` to within `tol`, with its error bound.
pub fn big_a_bounded(lambda: f64, tol: f64) -> Result<Bounded> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(Bounded { value: 0.0, error: 0.0 });
    }
    if lambda == 1.0 {
        return Ok(Bounded {
            value: a_one(),
            error: A_ONE_ERROR,
        });
    }
    if lambda > 1.0 {
        let mu = 1.0 / lambda;
        let inner = big_a_bounded(mu, tol / lambda)?;
        let rounding = a_modulus(mu * f64::EPSILON);
        return Ok(Bounded {
            value: lambda * inner.value,
            error: lambda * (inner.error + rounding),
        });
    }
    let x = 1.0 / lambda;
    let l2 = lambda * lambda;
    let phi = phi2_bounded(x, tol / l2);
    // 1/λ is rounded; Φ₂ moves by at most its own modulus over that step.
    let phi_rounding = super::phi2::lipschitz_bound(x * f64::EPSILON);
    let tail = phi2_tail_integral(x, tol / 2.0);
    let a1 = a_one();
    let value = 0.5 * lambda * (-lambda.ln()) + 0.5 * (1.0 + a1) * lambda + 0.5 * l2 * phi.value
        - tail.value;
    let error = 0.5 * l2 * (phi.error + phi_rounding)
        + tail.error
        + 0.5 * lambda * A_ONE_ERROR
        + 8.0 * f64::EPSILON * (lambda * (1.0 - lambda.ln()) + value.abs());
    Ok(Bounded { value, error })
}

/// `A(λ) = ∫₀^∞ {t}{λt} t⁻² dt` for `λ >= 0`.
pub fn big_a(lambda: f64, cfg: &ToleranceConfig) -> Result<f64> {
    Ok(big_a_bounded(lambda, cfg.abs_tol)?.value)
}

/// `F(x)` to within `tol`, for `0 < x <= 1`.
pub fn f_bounded(x: f64, tol: f64) -> Result<Bounded> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Domain {
            what: "f_func",
            value: x,
            domain: "(0, 1]",
        });
    }
    let a = big_a_bounded(x, tol)?;
    let a1 = a_one();
    let value = 0.5 * (x + 1.0) * a1 - a.value - 0.5 * x * x.ln();
    let error = a.error + A_ONE_ERROR + 4.0 * f64::EPSILON * (a1 + a.value.abs());
    Ok(Bounded {
        value,
        error: if x == 1.0 { 0.0 } else { error },
    })
}

/// `F(x) = ((x+1)/2)A(1) - A(x) - (x/2) log x` on `(0, 1]`.
pub fn f_func(x: f64, cfg: &ToleranceConfig) -> Result<f64> {
    Ok(f_bounded(x, cfg.abs_tol)?.value)
}

/// Bound on `sup |F|` over `(0, 1]`: a dense grid scan plus the endpoint
/// limits `F(0⁺) = A(1)/2` and `F(1) = 0`, with a 10% margin.
pub fn sup_f() -> f64 {
    *SUP_F.get_or_init(|| {
        const GRID: usize = 10_000;
        let scan = (0..GRID)
            .into_par_iter()
            .map(|i| {
                let x = (i as f64 + 0.5) / GRID as f64;
                let f = f_bounded(x, 1e-6).expect("grid point lies in (0, 1]");
                f.value.abs() + f.error
            })
            .reduce(|| 0.0, f64::max);
        1.1 * scan.max(0.5 * a_one())
    })
}

/// Slow reference evaluation of `A(λ)` straight from its defining integral.
pub mod oracle {
    use super::*;

    /// `∫_u^v (t - j)(λt - i) t⁻² dt`.
    fn cell(lambda: f64, u: f64, v: f64, j: f64, i: f64) -> f64 {
        let c = i + j * lambda;
        let log_term = if c == 0.0 { 0.0 } else { c * ((v - u) / u).ln_1p() };
        let recip = if i * j == 0.0 { 0.0 } else { i * j * (v - u) / (u * v) };
        lambda * (v - u) - log_term + recip
    }

    /// `∫_u^v (t - j)(λt - i) dt`.
    fn cell_mass(lambda: f64, u: f64, v: f64, j: f64, i: f64) -> f64 {
        let poly = |t: f64| lambda * t * t * t / 3.0 - 0.5 * (i + j * lambda) * t * t + i * j * t;
        poly(v) - poly(u)
    }

    /// Breakpoints of `{t}{λt}` in `[0, upto]`, visited cell by cell.
    fn for_each_cell(lambda: f64, upto: f64, mut f: impl FnMut(f64, f64, f64, f64)) {
        let mut u = 0.0f64;
        let mut next_int = 1.0f64;
        let mut next_mult = 1.0f64;
        while u < upto {
            let a = next_int;
            let b = next_mult / lambda;
            let v = a.min(b).min(upto);
            if v > u {
                let mid = 0.5 * (u + v);
                f(u, v, mid.floor(), (lambda * mid).floor());
            }
            if a <= v {
                next_int += 1.0;
            }
            if b <= v {
                next_mult += 1.0;
            }
            u = v;
        }
    }

    /// `A(λ)` by exact integration over the cells between consecutive
    /// breakpoints up to `t_max`, plus a mean-value estimate of the tail.
    pub fn big_a_quadrature(lambda: f64, t_max: f64) -> Result<Bounded> {
        check_lambda(lambda)?;
        if lambda == 0.0 {
            return Ok(Bounded { value: 0.0, error: 0.0 });
        }
        let mut acc = CompensatedSum::new();
        let mut first = CompensatedSum::new();
        let mut second = CompensatedSum::new();
        let (q1, q2) = (0.5 * t_max, 0.75 * t_max);
        for_each_cell(lambda, t_max, |u, v, j, i| {
            acc.add(cell(lambda, u, v, j, i));
            if u >= q1 {
                if v <= q2 {
                    first.add(cell_mass(lambda, u, v, j, i));
                } else if u >= q2 {
                    second.add(cell_mass(lambda, u, v, j, i));
                } else {
                    let m = cell_mass(lambda, u, q2, j, i);
                    first.add(m);
                    second.add(cell_mass(lambda, u, v, j, i) - m);
                }
            }
        });
        let quarter = 0.25 * t_max;
        let (m1, m2) = (first.value() / quarter, second.value() / quarter);
        let mean = 0.5 * (m1 + m2);
        Ok(Bounded {
            value: acc.value() + mean / t_max,
            error: (m1 - m2).abs() / t_max + 1.0 / (t_max * t_max),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::big_a_quadrature;
    use super::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    fn log_two_pi_minus_gamma() -> f64 {
        (2.0 * std::f64::consts::PI).ln() - EULER_GAMMA
    }

    #[test]
    fn a_one_closed_form() {
        assert!((a_one() - log_two_pi_minus_gamma()).abs() < 1e-13);
        let oracle = big_a_quadrature(1.0, 1e4).unwrap();
        assert!((oracle.value - log_two_pi_minus_gamma()).abs() < 1e-4);
        assert!(oracle.error < 1e-4);
    }

    #[test]
    fn a_at_zero_and_negative() {
        assert_eq!(big_a_bounded(0.0, 1e-10).unwrap().value, 0.0);
        assert!(big_a_bounded(-0.1, 1e-10).is_err());
        assert!(big_a_bounded(f64::NAN, 1e-10).is_err());
    }

    #[test]
    fn a_small_lambda() {
        let a1 = a_one();
        let l = 0.001f64;
        let leading = 0.5 * l * (1.0 / l).ln() + 0.5 * (1.0 + a1) * l;
        let a = big_a_bounded(l, 1e-12).unwrap();
        assert!((a.value - 0.004_584_2).abs() < 5e-7);
        assert!((a.value - leading).abs() < 1e-6);
    }

    #[test]
    fn formula_matches_quadrature_oracle() {
        for &l in &[0.1, 0.25, 0.5, 0.618_033_988_749_894_9, 0.9, 1.7, 3.2] {
            let fast = big_a_bounded(l, 1e-10).unwrap();
            let slow = big_a_quadrature(l, 1e4).unwrap();
            assert!(fast.error <= 1e-10 * l.max(1.0) * 1.01, "λ={l}");
            assert!(
                (fast.value - slow.value).abs() < slow.error + 1e-6,
                "λ={l}: {} vs {} (±{})",
                fast.value,
                slow.value,
                slow.error
            );
        }
    }

    #[test]
    fn scaling_identity_against_oracle() {
        for k in 1..10 {
            let l = k as f64 / 10.0;
            let a = big_a_bounded(l, 1e-11).unwrap();
            let inv = big_a_quadrature(1.0 / l, 2e4).unwrap();
            assert!((a.value - l * inv.value).abs() < l * inv.error + 1e-7, "λ={l}");
        }
    }

    #[test]
    fn f_endpoints() {
        assert_eq!(f_bounded(1.0, 1e-10).unwrap().value, 0.0);
        let near_zero = f_bounded(1e-9, 1e-10).unwrap().value;
        assert!((near_zero - 0.5 * a_one()).abs() < 1e-7);
        assert!(f_bounded(0.0, 1e-10).is_err());
        assert!(f_bounded(1.5, 1e-10).is_err());
    }

    #[test]
    fn f_half_against_oracle() {
        let a_half = big_a_quadrature(0.5, 1e4).unwrap();
        let expected = 0.75 * a_one() - a_half.value + 0.25 * 2f64.ln();
        let f = f_bounded(0.5, 1e-10).unwrap();
        assert!((f.value - expected).abs() < a_half.error + 1e-7);
    }

    #[test]
    fn sup_f_covers_endpoint_limit() {
        let s = sup_f();
        assert!(s >= 0.5 * a_one());
        assert!(s < 2.0);
    }
}
