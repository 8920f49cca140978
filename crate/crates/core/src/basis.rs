//! Radial basis functions and their Radon transforms.
//!
//! Wendland functions `φ_{2,k}` are built with the dimension-walk recurrence in
//! exact rational arithmetic. Their Radon transforms are sums of transforms of
//! truncated radial monomials `r^l χ_{r<α}`, which have closed forms.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Coefficients `d_0 … d_{3k+2}` of the Wendland polynomial
/// `φ_{2,k}(r) = Σ d_l r^l` on `[0, 1]`.
pub fn wendland_coefficients(k: u32) -> Vec<BigRational> {
    let n = k as usize + 2;
    let mut d: Vec<BigRational> = (0..=n)
        .map(|l| {
            let c = BigRational::from_integer(binomial(n, l));
            if l % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .collect();
    for _ in 0..k {
        let mut next = vec![BigRational::zero(); d.len() + 2];
        let mut d0 = BigRational::zero();
        for (l, c) in d.iter().enumerate() {
            d0 += c / BigRational::from_integer(BigInt::from(l + 2));
            next[l + 2] = -c / BigRational::from_integer(BigInt::from(l + 2));
        }
        next[0] = d0;
        d = next;
    }
    d
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

/// Wendland coefficients in `f64`, cached for the smoothness orders in use.
pub fn wendland_coefficients_f64(k: u32) -> &'static [f64] {
    const CACHED: usize = 16;
    static CACHE: [OnceLock<Vec<f64>>; CACHED] = [const { OnceLock::new() }; CACHED];
    let conv = |k| {
        wendland_coefficients(k)
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect::<Vec<_>>()
    };
    match CACHE.get(k as usize) {
        Some(cell) => cell.get_or_init(|| conv(k)),
        None => Box::leak(conv(k).into_boxed_slice()),
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

/// `φ_{2,k}(r/μ)`.
pub fn wendland_eval(r: f64, mu: f64, k: u32) -> f64 {
    let x = r / mu;
    if x >= 1.0 {
        return 0.0;
    }
    horner(wendland_coefficients_f64(k), x)
}

/// `∫_{R²} φ_{2,k}(‖x‖/μ) dx = 2πμ² Σ d_l/(l+2)`.
pub fn wendland_mass(mu: f64, k: u32) -> f64 {
    let c = wendland_coefficients_f64(k);
    let s: f64 = c.iter().enumerate().map(|(l, d)| d / (l + 2) as f64).sum();
    TWO_PI * mu * mu * s
}

/// `ln((α + √(α²−s²))/s)`, accurate near both `s → 0` and `s → α`.
fn arccosh_ratio(s: f64, alpha: f64, w: f64) -> f64 {
    ((alpha - s + w) / s).ln_1p()
}

/// Radon transform at offset `s` of `r^l` restricted to the disk of radius `α`.
///
/// Writes `R[r^l χ_α](s) = 2 J_{l+2}` with `J_k = |s|^{k-1} I_k`, which turns
/// the recurrence for `I_k` into
/// `J_{k+2} = (α^k √(α²−s²) + k s² J_k)/(k+1)` with `J_1 = arccosh(α/|s|)`
/// and `J_2 = √(α²−s²)`. Every term is non-negative, so the evaluation is
/// stable down to `s = 0`, where it reduces to `2α^{l+1}/(l+1)`.
pub fn radon_radial_monomial(s: f64, alpha: f64, l: i32) -> Result<f64> {
    if l < -1 {
        return Err(invalid(format!("monomial degree must be >= -1, got {l}")));
    }
    if !(alpha > 0.0) {
        return Err(invalid(format!("support radius must be positive, got {alpha}")));
    }
    let s = s.abs();
    if s >= alpha {
        return Ok(0.0);
    }
    if l == -1 && s == 0.0 {
        return Err(Error::Domain(
            "Radon transform of r^-1 diverges logarithmically at s = 0".into(),
        ));
    }
    if s == 0.0 {
        return Ok(2.0 * alpha.powi(l + 1) / (l + 1) as f64);
    }
    let target = (l + 2) as usize;
    let w = ((alpha - s) * (alpha + s)).sqrt();
    // Recurrence in steps of two starting from J_1 or J_2.
    let (mut k, mut j) = if target % 2 == 1 {
        (1usize, arccosh_ratio(s, alpha, w))
    } else {
        (2usize, w)
    };
    let s2 = s * s;
    while k < target {
        let ak = alpha.powi((k) as i32);
        j = (ak * w + k as f64 * s2 * j) / (k + 1) as f64;
        k += 2;
    }
    Ok(2.0 * j)
}

/// `2 J_{l+2}(s, α)` for every `l = 0..=lmax` in one pass.
pub(crate) fn radon_radial_monomials(s: f64, alpha: f64, lmax: usize, out: &mut Vec<f64>) {
    out.clear();
    out.resize(lmax + 1, 0.0);
    let s = s.abs();
    if s >= alpha {
        return;
    }
    let w = ((alpha - s) * (alpha + s)).sqrt();
    let s2 = s * s;
    // J indices 1..=lmax+2; keep the two interleaved chains.
    let mut j_odd = if s > 0.0 { arccosh_ratio(s, alpha, w) } else { 0.0 };
    let mut j_even = w;
    let mut ak = 1.0; // α^(k-1) at the top of the loop
    for k in 1..=lmax + 1 {
        // Advance the chain that ends at J_{k+1}.
        if k % 2 == 1 {
            // J_{k+1} from J_{k-1}; for k = 1 this is J_2 itself.
            if k > 1 {
                j_even = (ak * w + (k - 1) as f64 * s2 * j_even) / k as f64;
            }
            out[k - 1] = 2.0 * j_even;
        } else {
            // J_{k+1} from J_{k-1}, odd chain.
            j_odd = (ak * w + (k - 1) as f64 * s2 * j_odd) / k as f64;
            out[k - 1] = 2.0 * j_odd;
        }
        ak *= alpha;
    }
}

/// A radial (or pixel) basis function `φ(·; μ)` centred at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BasisSpec {
    /// Indicator of an axis-aligned square of side `side`.
    Pixel { side: f64 },
    /// `(2πμ)^{-1} exp(−‖x‖²/(2μ))`; `mu` is the variance.
    Gaussian { mu: f64 },
    /// `φ_{2,k}(‖x‖/μ)`, divided by its integral when `unit_mass` is set.
    Wendland {
        mu: f64,
        k: u32,
        #[serde(default)]
        unit_mass: bool,
    },
}

impl BasisSpec {
    pub fn wendland(mu: f64, k: u32) -> Self {
        BasisSpec::Wendland {
            mu,
            k,
            unit_mass: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BasisSpec::Pixel { side } if !(side > 0.0 && side.is_finite()) => {
                Err(invalid(format!("pixel side must be positive, got {side}")))
            }
            BasisSpec::Gaussian { mu } if !(mu > 0.0 && mu.is_finite()) => {
                Err(invalid(format!("Gaussian scale must be positive, got {mu}")))
            }
            BasisSpec::Wendland { mu, k, .. } if !(mu > 0.0 && mu.is_finite()) || k < 1 => {
                Err(invalid(format!("Wendland needs mu > 0 and k >= 1, got mu = {mu}, k = {k}")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self, BasisSpec::Pixel { .. })
    }

    /// Radius of the smallest disk containing the support, `None` for the
    /// Gaussian.
    pub fn support_radius(&self) -> Option<f64> {
        match *self {
            BasisSpec::Pixel { side } => Some(side * std::f64::consts::FRAC_1_SQRT_2),
            BasisSpec::Gaussian { .. } => None,
            BasisSpec::Wendland { mu, .. } => Some(mu),
        }
    }

    /// Radius beyond which the function is negligible (below `1e-14` of its
    /// peak for the Gaussian).
    pub fn effective_radius(&self) -> f64 {
        match *self {
            BasisSpec::Gaussian { mu } => 8.0 * mu.sqrt(),
            _ => self.support_radius().unwrap(),
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            BasisSpec::Wendland {
                mu,
                k,
                unit_mass: true,
            } => 1.0 / wendland_mass(mu, k),
            _ => 1.0,
        }
    }

    /// Value at radius `r`; the pixel basis is not radial and returns `None`.
    pub fn radial(&self, r: f64) -> Option<f64> {
        match *self {
            BasisSpec::Pixel { .. } => None,
            BasisSpec::Gaussian { mu } => Some((-r * r / (2.0 * mu)).exp() / (TWO_PI * mu)),
            BasisSpec::Wendland { mu, k, .. } => Some(self.scale() * wendland_eval(r, mu, k)),
        }
    }

    /// Value at offset `(dx, dy)` from the centre. The pixel square is
    /// half-open so that a tiling assigns every point to one pixel.
    pub fn eval(&self, dx: f64, dy: f64) -> f64 {
        match *self {
            BasisSpec::Pixel { side } => {
                let h = 0.5 * side;
                if (-h..h).contains(&dx) && (-h..h).contains(&dy) {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.radial(dx.hypot(dy)).unwrap(),
        }
    }

    pub fn integral(&self) -> f64 {
        match *self {
            BasisSpec::Pixel { side } => side * side,
            BasisSpec::Gaussian { .. } => 1.0,
            BasisSpec::Wendland { mu, k, unit_mass } => {
                if unit_mass {
                    1.0
                } else {
                    wendland_mass(mu, k)
                }
            }
        }
    }
}

/// Reusable evaluator for the 1D Radon profile of a radial basis.
#[derive(Clone, Debug)]
pub struct RadonProfile {
    spec: BasisSpec,
    coeffs: Vec<f64>,
    scratch: Vec<f64>,
}

impl RadonProfile {
    pub fn new(spec: BasisSpec) -> Result<Self> {
        spec.validate()?;
        let coeffs = match spec {
            BasisSpec::Pixel { .. } => {
                return Err(invalid("the pixel basis has no radial Radon profile"));
            }
            BasisSpec::Gaussian { .. } => Vec::new(),
            BasisSpec::Wendland { mu, k, .. } => {
                let scale = spec.scale();
                wendland_coefficients_f64(k)
                    .iter()
                    .enumerate()
                    .map(|(l, d)| scale * d * mu.powi(-(l as i32)))
                    .collect()
            }
        };
        Ok(RadonProfile {
            spec,
            coeffs,
            scratch: Vec::new(),
        })
    }

    pub fn eval(&mut self, t: f64) -> f64 {
        match self.spec {
            BasisSpec::Gaussian { mu } => (-t * t / (2.0 * mu)).exp() / (TWO_PI * mu).sqrt(),
            BasisSpec::Wendland { mu, .. } => {
                if t.abs() >= mu {
                    return 0.0;
                }
                radon_radial_monomials(t, mu, self.coeffs.len() - 1, &mut self.scratch);
                self.coeffs
                    .iter()
                    .zip(&self.scratch)
                    .map(|(c, m)| c * m)
                    .sum()
            }
            BasisSpec::Pixel { .. } => unreachable!(),
        }
    }
}

/// Exact Radon transform `R[φ](t)` of a radial basis centred at the origin.
pub fn radon_basis(b: &BasisSpec, t: f64) -> Result<f64> {
    Ok(RadonProfile::new(*b)?.eval(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn coefficient_base_cases() {
        assert_eq!(wendland_coefficients(0), vec![rat(1, 1), rat(-2, 1), rat(1, 1)]);
        let k1: Vec<_> = [1, 0, -10, 20, -15, 4].iter().map(|&n| rat(n, 20)).collect();
        assert_eq!(wendland_coefficients(1), k1);
    }

    #[test]
    fn smooth_at_support_edge() {
        for k in 0..=6 {
            let d = wendland_coefficients(k);
            let v: BigRational = d.iter().sum();
            let dv: BigRational = d
                .iter()
                .enumerate()
                .map(|(l, c)| c * BigRational::from_integer(l.into()))
                .sum();
            assert!(v.is_zero() && dv.is_zero(), "k = {k}");
            assert_eq!(d.len(), 3 * k as usize + 3);
        }
    }

    #[test]
    fn wendland_values() {
        assert!((wendland_eval(0.0, 1.0, 1) - 0.05).abs() < 1e-16);
        assert!((wendland_eval(0.5, 1.0, 1) - 0.009375).abs() < 1e-16);
        assert_eq!(wendland_eval(1.2, 1.0, 3), 0.0);
        assert!(wendland_eval(1.0 - 1e-9, 1.0, 1).abs() < 1e-30);
    }

    #[test]
    fn monomial_oracles() {
        let v = radon_radial_monomial(0.5, 1.0, 0).unwrap();
        assert!((v - 3f64.sqrt()).abs() < 1e-15);
        let v = radon_radial_monomial(0.5, 1.0, 2).unwrap();
        assert!((v - 0.8660254037844386).abs() < 1e-15);
        let v = radon_radial_monomial(0.5, 1.0, -1).unwrap();
        assert!((v - 2.0 * 2f64.acosh()).abs() < 1e-14);
        assert!((v - 2.6339157938496336).abs() < 1e-14);
        assert!(matches!(radon_radial_monomial(0.0, 1.0, -1), Err(Error::Domain(_))));
        assert_eq!(radon_radial_monomial(1.0, 1.0, 3).unwrap(), 0.0);
        let v = radon_radial_monomial(0.0, 0.7, 3).unwrap();
        assert!((v - 2.0 * 0.7f64.powi(4) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn batched_monomials_match_single() {
        let mut out = Vec::new();
        for s in [0.0, 1e-9, 0.3, 0.99] {
            radon_radial_monomials(s, 1.3, 17, &mut out);
            for (l, v) in out.iter().enumerate() {
                let single = radon_radial_monomial(s, 1.3, l as i32).unwrap();
                assert!((v - single).abs() <= 1e-14 * single.abs(), "s={s} l={l}");
            }
        }
    }

    #[test]
    fn gaussian_profile_peak() {
        let v = radon_basis(&BasisSpec::Gaussian { mu: 0.02 }, 0.0).unwrap();
        assert!((v - 2.8209479177387813).abs() < 1e-12);
        assert!(radon_basis(&BasisSpec::Pixel { side: 0.1 }, 0.0).is_err());
        assert_eq!(radon_basis(&BasisSpec::wendland(0.1, 1), 0.1).unwrap(), 0.0);
    }

    #[test]
    fn validation() {
        assert!(BasisSpec::wendland(0.1, 0).validate().is_err());
        assert!(BasisSpec::Gaussian { mu: -1.0 }.validate().is_err());
        assert!(BasisSpec::Pixel { side: 0.1 }.validate().is_ok());
    }
}
