//! Singular values of the continuous limited-angle Radon transform.
//!
//! For each degree `m` they are `σ_{ml} = 2 (π λ_l / (m+1))^{1/2}` where
//! `λ_l` are the eigenvalues of the `(m+1) × (m+1)` symmetric Toeplitz
//! matrix `A_m(Φ)` with `a₀ = 2Φ/π` and `a_l = sin(2lΦ)/(lπ)`. That matrix is
//! a prolate matrix: its symbol is the indicator of an arc, and most of its
//! eigenvalues are exponentially close to 0 or 1. Double precision cannot
//! resolve them, so the spectrum is computed in multiprecision arithmetic:
//!
//! * `0 < λ < 1` is certified for every level at once with two shifted
//!   `LDLᵀ` factorisations of the largest matrix (`A` and `I − A`), since
//!   leading principal submatrices of a positive definite matrix are positive
//!   definite.
//! * The eigenvalues themselves come from Householder tridiagonalisation and
//!   Sturm-sequence bisection (Newton-polished once isolated) at a working
//!   precision chosen so that both `λ` and `1 − λ` are resolved to about
//!   48 bits.

use std::f64::consts::PI;

use rug::float::Constant;
use rug::{Assign, Float};

use crate::error::{invalid, Error, Result};

/// Ceiling on the working precision in bits.
const MAX_PRECISION: u32 = 16_384;
/// Relative width at which bisection stops.
const BISECTION_BITS: i32 = 48;
/// Relative width below which an isolated eigenvalue is polished by Newton.
const NEWTON_START_BITS: i32 = 6;

/// Eigenvalues and singular values for one degree `m`, both non-increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct ToeplitzLevel {
    pub m: usize,
    pub eigenvalues: Vec<f64>,
    /// `1 − λ_l`, computed before rounding so that eigenvalues within an
    /// ulp of 1 keep their distance to 1.
    pub complements: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToeplitzSpectrum {
    /// Arc parameter `Φ` of the symbol.
    pub phi: f64,
    pub levels: Vec<ToeplitzLevel>,
    /// Working precision used for the eigenvalues.
    pub precision_bits: u32,
}

impl ToeplitzSpectrum {
    /// All `σ_{ml}`, non-increasing.
    pub fn sorted_sigma(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.levels.iter().flat_map(|l| l.sigma.iter().copied()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.levels
            .iter()
            .filter_map(|l| l.eigenvalues.last().copied())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.levels
            .iter()
            .filter_map(|l| l.eigenvalues.first().copied())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest `1 − λ` over all levels.
    pub fn min_complement(&self) -> f64 {
        self.levels
            .iter()
            .filter_map(|l| l.complements.first().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Spectrum of `A_m(Φ)` for `m = 0..=m_max`, with `Φ` taken literally as the
/// arc parameter of the symbol.
pub fn toeplitz_symbol_spectrum(m_max: usize, phi: f64) -> Result<ToeplitzSpectrum> {
    if !(phi > 0.0 && phi < PI) || !phi.is_finite() {
        return Err(invalid(format!("Toeplitz parameter must lie in (0, π), got {phi}")));
    }
    let n = m_max + 1;
    precheck_f64(n, phi)?;
    let p_low = certify(n, phi, false)?;
    let p_high = certify(n, phi, true)?;
    let prec = p_low.max(p_high) + 64;
    let mut levels = Vec::with_capacity(n);
    let mut p = prec;
    for m in 0..=m_max {
        let lambda = loop {
            match level_eigenvalues(m + 1, phi, p) {
                Ok(l) => break l,
                Err(Unresolved) if p < MAX_PRECISION => p += 64,
                Err(Unresolved) => {
                    return Err(Error::SpectrumOutOfRange { m, value: 0.0 });
                }
            }
        };
        let scale = PI / (m + 1) as f64;
        let sigma = lambda.iter().map(|&(l, _)| 2.0 * (scale * l).sqrt()).collect();
        levels.push(ToeplitzLevel {
            m,
            eigenvalues: lambda.iter().map(|p| p.0).collect(),
            complements: lambda.iter().map(|p| p.1).collect(),
            sigma,
        });
    }
    Ok(ToeplitzSpectrum {
        phi,
        levels,
        precision_bits: p,
    })
}

/// Singular values of the limited-angle Radon transform for a missing wedge
/// of width `phi_missing`. The symbol arc is half the measured range,
/// `Φ = (π − Φ_missing)/2`, so the spectrum degrades as the wedge grows and
/// matches the trend of the discrete SVD.
pub fn continuous_toeplitz_spectrum(m_max: usize, phi_missing: f64) -> Result<ToeplitzSpectrum> {
    if !(phi_missing > 0.0 && phi_missing < PI) {
        return Err(invalid(format!("missing wedge must lie in (0, π), got {phi_missing}")));
    }
    toeplitz_symbol_spectrum(m_max, 0.5 * (PI - phi_missing))
}

/// Least-squares slope of `ln σ_i` against `i` from the first index where
/// `σ_i ≤ σ_0/2` onwards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailFit {
    pub onset: usize,
    pub slope: f64,
}

pub fn exponential_tail(sigma_desc: &[f64]) -> Option<TailFit> {
    let first = *sigma_desc.first()?;
    let onset = sigma_desc.iter().position(|&s| s <= 0.5 * first)?;
    let tail = &sigma_desc[onset..];
    if tail.len() < 3 || tail.iter().any(|&s| s <= 0.0) {
        return None;
    }
    let k = tail.len() as f64;
    let xm = (k - 1.0) / 2.0;
    let ym = tail.iter().map(|s| s.ln()).sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, s) in tail.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (s.ln() - ym);
        sxx += dx * dx;
    }
    Some(TailFit {
        onset,
        slope: sxy / sxx,
    })
}

/// `a_0, …, a_{n-1}` at `prec` bits.
fn symbol_coefficients(n: usize, phi: f64, prec: u32) -> Vec<Float> {
    let pi = Float::with_val(prec, Constant::Pi);
    let phi = Float::with_val(prec, phi);
    let mut a = Vec::with_capacity(n);
    a.push(Float::with_val(prec, &phi * 2u32) / &pi);
    for l in 1..n {
        let mut s = Float::with_val(prec, &phi * (2 * l) as u64);
        s.sin_mut();
        let den = Float::with_val(prec, &pi * l as u64);
        a.push(s / den);
    }
    a
}

/// Cheap rejection of parameters whose spectrum clearly leaves `[0, 1]`.
fn precheck_f64(n: usize, phi: f64) -> Result<()> {
    let a: Vec<f64> = (0..n)
        .map(|l| {
            if l == 0 {
                2.0 * phi / PI
            } else {
                (2.0 * l as f64 * phi).sin() / (l as f64 * PI)
            }
        })
        .collect();
    let mat = faer::Mat::from_fn(n, n, |i, j| a[i.abs_diff(j)]);
    let ev = mat
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Factorization(format!("eigenvalues did not converge: {e:?}")))?;
    for &v in &ev {
        if !(-1e-10..=1.0 + 1e-10).contains(&v) {
            return Err(Error::SpectrumOutOfRange { m: n - 1, value: v });
        }
    }
    Ok(())
}

/// Smallest precision (in steps of 64 bits) at which the shifted `LDLᵀ` of
/// `A` (or of `I − A` when `complement`) has only positive pivots.
///
/// The shift `s = 16 n² 2^{-P}` dominates both the rounding error of the
/// entries and the backward error of the factorisation, so success proves
/// `λ_min > 0` for the exact matrix.
fn certify(n: usize, phi: f64, complement: bool) -> Result<u32> {
    let mut prec = 128u32;
    loop {
        let a = symbol_coefficients(n, phi, prec);
        let guard = (16.0 * (n * n) as f64).log2().ceil() as i32;
        let shift = Float::with_val(prec, 1) >> (prec as i32 - guard);
        match ldl_positive(&a, n, complement, &shift) {
            Ok(()) => return Ok(prec),
            Err(k) if prec >= MAX_PRECISION => {
                return Err(Error::SpectrumOutOfRange {
                    m: k,
                    value: if complement { 1.0 } else { 0.0 },
                })
            }
            Err(_) => prec += 64,
        }
    }
}

/// `Err(k)` if pivot `k` is not positive.
fn ldl_positive(a: &[Float], n: usize, complement: bool, shift: &Float) -> std::result::Result<(), usize> {
    let prec = a[0].prec();
    let entry = |i: usize, j: usize| -> Float {
        let mut v = Float::with_val(prec, &a[i.abs_diff(j)]);
        if complement {
            v = -v;
            if i == j {
                v += 1u32;
            }
        }
        if i == j {
            v -= shift;
        }
        v
    };
    // Row-major lower factor `L` with unit diagonal and pivots `d`.
    let mut l: Vec<Float> = Vec::with_capacity(n * n);
    l.resize(n * n, Float::new(prec));
    let mut d: Vec<Float> = Vec::with_capacity(n);
    let mut ld = vec![Float::new(prec); n];
    let mut t = Float::new(prec);
    for j in 0..n {
        // ld[k] = L[j,k] d[k]
        for k in 0..j {
            ld[k].assign(&l[j * n + k] * &d[k]);
        }
        let mut dj = entry(j, j);
        for k in 0..j {
            t.assign(&l[j * n + k] * &ld[k]);
            dj -= &t;
        }
        if dj.is_sign_negative() || dj.is_zero() {
            return Err(j);
        }
        for i in j + 1..n {
            let mut s = entry(i, j);
            for k in 0..j {
                t.assign(&l[i * n + k] * &ld[k]);
                s -= &t;
            }
            s /= &dj;
            l[i * n + j] = s;
        }
        d.push(dj);
    }
    Ok(())
}

/// The smallest eigenvalue lies below the resolution of the working precision.
struct Unresolved;

/// Eigenvalues of `A_{n-1}(Φ)` as `(λ, 1 − λ)` pairs, `λ` non-increasing.
fn level_eigenvalues(n: usize, phi: f64, prec: u32) -> std::result::Result<Vec<(f64, f64)>, Unresolved> {
    let a = symbol_coefficients(n, phi, prec);
    let mut mat: Vec<Float> = (0..n * n).map(|k| a[(k / n).abs_diff(k % n)].clone()).collect();
    let (d, e) = tridiagonalize(&mut mat, n, prec);
    let e2: Vec<Float> = e.iter().map(|x| Float::with_val(prec, x.square_ref())).collect();
    let sturm = Sturm { d, e2, prec };
    let floor = Float::with_val(prec, 1) >> (prec as i32 - 64);
    let lo = floor.clone();
    let hi = Float::with_val(prec, 1 - &floor);
    if sturm.count(&lo) != 0 || sturm.count(&hi) != n {
        return Err(Unresolved);
    }
    let mut out = Vec::with_capacity(n);
    let mut stack = vec![(lo, hi, 0usize, n)];
    while let Some((lo, hi, clo, chi)) = stack.pop() {
        if chi == clo {
            continue;
        }
        let scale = distance_scale(&lo, &hi);
        let mut width = Float::with_val(prec, &hi - &lo);
        width <<= BISECTION_BITS;
        if width <= scale {
            let mid = Float::with_val(prec, &lo + &hi) / 2u32;
            let pair = (mid.to_f64(), Float::with_val(prec, 1 - &mid).to_f64());
            out.extend(std::iter::repeat(pair).take(chi - clo));
            continue;
        }
        width >>= BISECTION_BITS - NEWTON_START_BITS;
        if chi - clo == 1 && width <= scale {
            let x = sturm.refine(lo, hi, clo);
            out.push((x.to_f64(), Float::with_val(prec, 1 - &x).to_f64()));
            continue;
        }
        let x = split_point(&lo, &hi);
        let cx = sturm.count(&x);
        stack.push((lo, x.clone(), clo, cx));
        stack.push((x, hi, cx, chi));
    }
    out.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    Ok(out)
}

/// `min(lo, 1 − hi)`: the scale on which an interval inside `(0, 1)` has to
/// be resolved so that both `λ` and `1 − λ` come out with full relative
/// accuracy.
fn distance_scale(lo: &Float, hi: &Float) -> Float {
    let up = Float::with_val(lo.prec(), 1 - hi);
    if up < *lo {
        up
    } else {
        lo.clone()
    }
}

/// Bisection point: geometric in `x` near 0, geometric in `1 − x` near 1 and
/// arithmetic otherwise. MPFR exponents put a value in `[2^{e-1}, 2^e)`, so a
/// power of two whose exponent lies strictly between two others is strictly
/// between the values.
fn split_point(lo: &Float, hi: &Float) -> Float {
    let prec = lo.prec();
    let exp = |x: &Float| x.get_exp().unwrap_or(0);
    let half = Float::with_val(prec, 0.5);
    if *hi <= half {
        let (elo, ehi) = (exp(lo), exp(hi));
        if ehi - elo >= 2 {
            return Float::with_val(prec, 1) << ((elo + ehi).div_euclid(2) - 1);
        }
    } else if *lo >= half {
        let ulo = Float::with_val(prec, 1 - hi);
        let uhi = Float::with_val(prec, 1 - lo);
        let (elo, ehi) = (exp(&ulo), exp(&uhi));
        if ehi - elo >= 2 {
            let u = Float::with_val(prec, 1) << ((elo + ehi).div_euclid(2) - 1);
            return Float::with_val(prec, 1 - u);
        }
    }
    Float::with_val(prec, lo + hi) / 2u32
}

/// Householder reduction of a symmetric matrix (full row-major storage, only
/// the lower triangle is read and updated) to tridiagonal form.
fn tridiagonalize(a: &mut [Float], n: usize, prec: u32) -> (Vec<Float>, Vec<Float>) {
    let at = |i: usize, j: usize| if i >= j { i * n + j } else { j * n + i };
    let mut e = vec![Float::new(prec); n.saturating_sub(1)];
    let mut t = Float::new(prec);
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let v0 = k + 1;
        let mut sigma2 = Float::new(prec);
        for i in v0..n {
            t.assign(a[at(i, k)].square_ref());
            sigma2 += &t;
        }
        if sigma2.is_zero() {
            e[k] = Float::new(prec);
            continue;
        }
        let norm = Float::with_val(prec, sigma2.sqrt_ref());
        let x0 = a[at(v0, k)].clone();
        let alpha = if x0.is_sign_negative() { norm } else { -norm };
        let mut v: Vec<Float> = (v0..n).map(|i| a[at(i, k)].clone()).collect();
        v[0] -= &alpha;
        // h = vᵀv / 2 = σ² − x₀ α
        let mut h = sigma2;
        t.assign(&x0 * &alpha);
        h -= &t;
        // p = B v / h
        let mut p = vec![Float::new(prec); len];
        for (ii, pi) in p.iter_mut().enumerate() {
            for (jj, vj) in v.iter().enumerate() {
                t.assign(&a[at(v0 + ii, v0 + jj)] * vj);
                *pi += &t;
            }
            *pi /= &h;
        }
        // K = vᵀp / (2h), w = p − K v
        let mut kk = Float::new(prec);
        for (vi, pi) in v.iter().zip(&p) {
            t.assign(vi * pi);
            kk += &t;
        }
        kk /= &h;
        kk /= 2u32;
        let w: Vec<Float> = p
            .iter()
            .zip(&v)
            .map(|(pi, vi)| {
                let mut x = Float::with_val(prec, vi * &kk);
                x -= pi;
                -x
            })
            .collect();
        // B -= v wᵀ + w vᵀ (lower triangle)
        for ii in 0..len {
            for jj in 0..=ii {
                t.assign(&v[ii] * &w[jj]);
                t += &w[ii] * &v[jj];
                a[at(v0 + ii, v0 + jj)] -= &t;
            }
        }
        e[k] = alpha;
    }
    if n >= 2 {
        e[n - 2] = a[at(n - 1, n - 2)].clone();
    }
    let d = (0..n).map(|i| a[at(i, i)].clone()).collect();
    (d, e)
}

struct Sturm {
    d: Vec<Float>,
    e2: Vec<Float>,
    prec: u32,
}

impl Sturm {
    /// Eigenvalue count below `x` and `d/dx ln|det(T − xI)|`.
    fn count_and_log_derivative(&self, x: &Float) -> (usize, Float) {
        let prec = self.prec;
        let tiny = Float::with_val(prec, 1) >> (4 * prec as i32);
        let mut q = Float::with_val(prec, &self.d[0] - x);
        if q.is_zero() {
            q.assign(&tiny);
        }
        // r = q'/q with q' the derivative of the pivot in x.
        let mut r = Float::with_val(prec, -1) / &q;
        let mut sum = r.clone();
        let mut c = usize::from(q.is_sign_negative());
        let mut t = Float::new(prec);
        let mut dq = Float::new(prec);
        for i in 1..self.d.len() {
            t.assign(&self.e2[i - 1] / &q);
            dq.assign(&t * &r);
            dq -= 1u32;
            q.assign(&self.d[i] - x);
            q -= &t;
            if q.is_zero() {
                q.assign(&tiny);
            }
            if q.is_sign_negative() {
                c += 1;
            }
            r.assign(&dq / &q);
            sum += &r;
        }
        (c, sum)
    }

    /// The single eigenvalue in `(lo, hi]`, `below` eigenvalues lying under
    /// `lo`. Newton steps on the characteristic polynomial, kept inside a
    /// bracket that every evaluation shrinks.
    fn refine(&self, mut lo: Float, mut hi: Float, below: usize) -> Float {
        let prec = self.prec;
        let mut x = Float::with_val(prec, &lo + &hi) / 2u32;
        for _ in 0..4 * BISECTION_BITS {
            let (c, s) = self.count_and_log_derivative(&x);
            if c == below {
                lo.assign(&x);
            } else {
                hi.assign(&x);
            }
            let scale = distance_scale(&lo, &hi);
            let mut width = Float::with_val(prec, &hi - &lo);
            width <<= BISECTION_BITS;
            if width <= scale {
                break;
            }
            let mut next = if s.is_zero() {
                Float::with_val(prec, &lo + &hi) / 2u32
            } else {
                Float::with_val(prec, &x - Float::with_val(prec, s.recip_ref()))
            };
            if next <= lo || next >= hi {
                next = Float::with_val(prec, &lo + &hi) / 2u32;
            }
            let mut step = Float::with_val(prec, &next - &x);
            step.abs_mut();
            step <<= BISECTION_BITS + 4;
            x = next;
            if step <= scale {
                return x;
            }
        }
        Float::with_val(prec, &lo + &hi) / 2u32
    }

    /// Number of eigenvalues strictly below `x`.
    fn count(&self, x: &Float) -> usize {
        let tiny = Float::with_val(self.prec, 1) >> (4 * self.prec as i32);
        let mut q = Float::with_val(self.prec, &self.d[0] - x);
        let mut t = Float::new(self.prec);
        let mut c = 0;
        for i in 0..self.d.len() {
            if i > 0 {
                if q.is_zero() {
                    q.assign(&tiny);
                }
                t.assign(&self.e2[i - 1] / &q);
                q.assign(&self.d[i] - x);
                q -= &t;
            }
            if q.is_sign_negative() && !q.is_zero() {
                c += 1;
            }
        }
        c
    }
}
