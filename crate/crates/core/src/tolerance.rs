use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iterates smaller than this are treated as a sign that the input was
/// (effectively) rational.
pub const DEFAULT_RATIONAL_GUARD: f64 = 1e-15;

/// Arithmetic used when iterating the Gauss map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitPrecision {
    #[default]
    Double,
    /// Double-double (about 106 bits); the orbit stays faithful roughly
    /// twice as deep.
    DoubleDouble,
}

/// Tolerances and truncation caps shared by every evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_terms: usize,
    pub max_orbit_depth: usize,
    pub rational_guard: f64,
    #[serde(default)]
    pub precision: OrbitPrecision,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_terms: 200,
            max_orbit_depth: 40,
            rational_guard: DEFAULT_RATIONAL_GUARD,
            precision: OrbitPrecision::Double,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.abs_tol) {
            return Err(Error::InvalidConfig(format!("abs_tol must be > 0, got {}", self.abs_tol)));
        }
        if !positive(self.rel_tol) {
            return Err(Error::InvalidConfig(format!("rel_tol must be > 0, got {}", self.rel_tol)));
        }
        if !positive(self.rational_guard) {
            return Err(Error::InvalidConfig(format!(
                "rational_guard must be > 0, got {}",
                self.rational_guard
            )));
        }
        if self.max_terms == 0 {
            return Err(Error::InvalidConfig("max_terms must be positive".into()));
        }
        if self.max_orbit_depth < 2 {
            return Err(Error::InvalidConfig(format!(
                "max_orbit_depth must be >= 2, got {}",
                self.max_orbit_depth
            )));
        }
        Ok(())
    }

    /// Whether an error estimate is close enough to the requested accuracy
    /// to report: within ten times `max(abs_tol, rel_tol |value|)`.
    pub fn accepts(&self, error: f64, value: f64) -> bool {
        error <= 10.0 * self.abs_tol.max(self.rel_tol * value.abs())
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_precision(mut self, precision: OrbitPrecision) -> Self {
        self.precision = precision;
        if precision == OrbitPrecision::DoubleDouble && self.max_orbit_depth < 64 {
            self.max_orbit_depth = 64;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = ToleranceConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.max_orbit_depth, 40);
        assert_eq!(cfg.max_terms, 200);
        assert_eq!(cfg.rational_guard, 1e-15);
    }

    #[test]
    fn rejects_bad_values() {
        let base = ToleranceConfig::default();
        assert!(base.with_abs_tol(0.0).validate().is_err());
        assert!(ToleranceConfig { max_orbit_depth: 1, ..base }.validate().is_err());
        assert!(ToleranceConfig { max_terms: 0, ..base }.validate().is_err());
        assert!(ToleranceConfig { rational_guard: -1.0, ..base }.validate().is_err());
        assert!(ToleranceConfig { rel_tol: f64::NAN, ..base }.validate().is_err());
    }
}
