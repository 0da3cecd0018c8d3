//! Periodic Bernoulli functions.

#[inline]
fn frac(t: f64) -> f64 {
    t - t.floor()
}

/// First periodic Bernoulli function, `{t} - 1/2`.
#[inline]
pub fn bernoulli1(t: f64) -> f64 {
    frac(t) - 0.5
}

/// Second periodic Bernoulli function, `{t}^2 - {t} + 1/6`.
#[inline]
pub fn bernoulli2(t: f64) -> f64 {
    let f = frac(t);
    f * f - f + 1.0 / 6.0
}

/// `B_m({t})` for `m = 3..=7`, evaluated on the fractional part `f`.
pub(crate) fn bernoulli_poly_3_to_7(f: f64) -> [f64; 5] {
    let f2 = f * f;
    let f3 = f2 * f;
    let f4 = f3 * f;
    let f5 = f4 * f;
    let f6 = f5 * f;
    let f7 = f6 * f;
    [
        f3 - 1.5 * f2 + 0.5 * f,
        f4 - 2.0 * f3 + f2 - 1.0 / 30.0,
        f5 - 2.5 * f4 + (5.0 / 3.0) * f3 - f / 6.0,
        f6 - 3.0 * f5 + 2.5 * f4 - 0.5 * f2 + 1.0 / 42.0,
        f7 - 3.5 * f6 + 3.5 * f5 - (7.0 / 6.0) * f3 + f / 6.0,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b1_examples() {
        assert_eq!(bernoulli1(0.75), 0.25);
        assert_eq!(bernoulli1(0.0), -0.5);
        assert_eq!(bernoulli1(2.25), -0.25);
        assert_eq!(bernoulli1(-0.25), 0.25);
    }

    #[test]
    fn b2_examples() {
        assert!((bernoulli2(0.0) - 1.0 / 6.0).abs() < 1e-16);
        assert!((bernoulli2(0.25) + 0.020_833_333_333_333_3).abs() < 1e-15);
        assert!((bernoulli2(0.5) + 1.0 / 12.0).abs() < 1e-16);
        assert!((bernoulli2(3.25) - bernoulli2(0.25)).abs() < 1e-15);
    }

    #[test]
    fn higher_polys_have_zero_mean_and_derivative_relation() {
        // ∫_0^1 B_m = 0 and B_m' = m B_{m-1}; checked by midpoint rule and
        // central differences.
        let n = 20_000;
        let mut means = [0.0; 5];
        for i in 0..n {
            let f = (i as f64 + 0.5) / n as f64;
            for (m, v) in bernoulli_poly_3_to_7(f).iter().enumerate() {
                means[m] += v / n as f64;
            }
        }
        for m in means {
            assert!(m.abs() < 1e-9);
        }
        let h = 1e-6;
        let f = 0.3;
        let up = bernoulli_poly_3_to_7(f + h);
        let dn = bernoulli_poly_3_to_7(f - h);
        let at = bernoulli_poly_3_to_7(f);
        let b2 = f * f - f + 1.0 / 6.0;
        assert!(((up[0] - dn[0]) / (2.0 * h) - 3.0 * b2).abs() < 1e-8);
        for m in 1..5 {
            let deriv = (up[m] - dn[m]) / (2.0 * h);
            assert!((deriv - (m as f64 + 3.0) * at[m - 1]).abs() < 1e-8);
        }
    }
}
