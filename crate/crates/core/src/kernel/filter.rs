//! Spectral filters `F_τ` applied to singular values.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FilterSpec {
    #[serde(rename = "none")]
    NoFilter,
    Tikhonov { tau: f64 },
    Arctan { tau: f64 },
    /// Keep the `rank` largest singular values.
    Truncate { rank: usize },
}

impl FilterSpec {
    /// `Arctan` with `τ = 5σ_n`, `σ_n` the smallest positive singular value.
    pub fn default_for(sigma_min: f64) -> Self {
        FilterSpec::Arctan {
            tau: 5.0 * sigma_min,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            FilterSpec::Tikhonov { tau } | FilterSpec::Arctan { tau } if !(tau > 0.0 && tau.is_finite()) => {
                Err(invalid(format!("filter parameter must be positive, got {tau}")))
            }
            FilterSpec::Truncate { rank } if rank == 0 || rank > n => {
                Err(invalid(format!("truncation rank must lie in 1..={n}, got {rank}")))
            }
            _ => Ok(()),
        }
    }

    /// `F_τ(σ)` for the singular value of global rank `index` (0 = largest).
    pub fn value(&self, sigma: f64, index: usize) -> f64 {
        match *self {
            FilterSpec::NoFilter => 1.0,
            FilterSpec::Tikhonov { tau } => sigma * sigma / (sigma * sigma + tau),
            FilterSpec::Arctan { tau } => {
                if sigma == 0.0 {
                    0.0
                } else {
                    sigma / tau * (tau / sigma).atan()
                }
            }
            FilterSpec::Truncate { rank } => {
                if index < rank {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `F_τ(σ)/σ`, with exact zeros mapped to zero.
    pub fn factor(&self, sigma: f64, index: usize) -> f64 {
        if sigma == 0.0 {
            0.0
        } else {
            self.value(sigma, index) / sigma
        }
    }
}

/// Diagonal of `Σ_τ = diag(F_τ(σ_i)) S⁻¹` for non-increasing `sigma`.
pub fn filter_factors(f: &FilterSpec, sigma: &[f64]) -> Vec<f64> {
    sigma.iter().enumerate().map(|(i, &s)| f.factor(s, i)).collect()
}

/// `F_τ(σ_i)` for non-increasing `sigma`.
pub fn filter_values(f: &FilterSpec, sigma: &[f64]) -> Vec<f64> {
    sigma
        .iter()
        .enumerate()
        .map(|(i, &s)| if s == 0.0 { 0.0 } else { f.value(s, i) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arctan_at_tau() {
        let f = FilterSpec::Arctan { tau: 0.3 };
        assert!((f.value(0.3, 0) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn small_tau_limit() {
        let sigma = [10.0, 1.0, 1e-3, 1e-6];
        for f in [FilterSpec::Arctan { tau: 1e-12 }, FilterSpec::Tikhonov { tau: 1e-20 }] {
            for (i, &s) in sigma.iter().enumerate() {
                assert!((f.value(s, i) - 1.0).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn tikhonov_bound() {
        let tau: f64 = 1e-4;
        let f = FilterSpec::Tikhonov { tau };
        for k in 0..200 {
            let s = 10f64.powf(-6.0 + k as f64 * 0.04);
            assert!(f.factor(s, 0) <= 1.0 / (2.0 * tau.sqrt()) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn truncation_and_zeros() {
        let f = FilterSpec::Truncate { rank: 2 };
        assert_eq!(filter_factors(&f, &[4.0, 2.0, 1.0, 0.0]), vec![0.25, 0.5, 0.0, 0.0]);
        assert_eq!(filter_factors(&FilterSpec::NoFilter, &[2.0, 0.0]), vec![0.5, 0.0]);
        assert!(f.validate(1).is_err());
        assert!(FilterSpec::Arctan { tau: 0.0 }.validate(3).is_err());
    }
}
