//! Fourier representation of periodic functions on the torus `[-π, π)`.
//!
//! Coefficients follow the normalized convention
//! `f̂(k) = (1/2π) ∫ f(x) e^{-ikx} dx`, so `‖e^{ikx}‖_{L²} = 1` and
//! Parseval carries no factors of 2π.

use std::cell::RefCell;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{parse_err, LabError, Result};

/// Largest padded grid any product is allowed to allocate.
pub const GRID_BUDGET: usize = 1 << 22;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Japanese bracket `⟨k⟩ = (1 + k²)^{1/2}`.
#[inline]
pub fn bracket(k: i64) -> f64 {
    let k = k as f64;
    (1.0 + k * k).sqrt()
}

/// A Sobolev regularity exponent. Any finite real is allowed.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SobolevIndex(pub f64);

impl From<f64> for SobolevIndex {
    fn from(s: f64) -> Self {
        SobolevIndex(s)
    }
}

/// Trigonometric polynomial `Σ_{|k|≤K} f̂(k) e^{ikx}` stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    cutoff: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(cutoff: usize) -> Self {
        SpectralField {
            cutoff,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * cutoff + 1],
        }
    }

    pub fn from_fn(cutoff: usize, mut f: impl FnMut(i64) -> Complex64) -> Self {
        let k0 = cutoff as i64;
        SpectralField {
            cutoff,
            coeffs: (-k0..=k0).map(&mut f).collect(),
        }
    }

    /// Coefficients listed from `k = -K` to `k = K`.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(LabError::Mismatch(format!(
                "coefficient vector of even length {}",
                coeffs.len()
            )));
        }
        Ok(SpectralField {
            cutoff: coeffs.len() / 2,
            coeffs,
        })
    }

    /// `amp · e^{ikx}` on a grid with the given cutoff.
    pub fn mode(cutoff: usize, k: i64, amp: Complex64) -> Self {
        let mut f = Self::zeros(cutoff.max(k.unsigned_abs() as usize));
        f.set(k, amp);
        f
    }

    pub fn constant(cutoff: usize, c: Complex64) -> Self {
        Self::mode(cutoff, 0, c)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient at `k`; zero outside the stored band.
    #[inline]
    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.cutoff as i64) as usize]
        }
    }

    /// Panics when `|k|` exceeds the cutoff.
    #[inline]
    pub fn set(&mut self, k: i64, value: Complex64) {
        assert!(
            k.unsigned_abs() as usize <= self.cutoff,
            "mode {k} outside cutoff {}",
            self.cutoff
        );
        self.coeffs[(k + self.cutoff as i64) as usize] = value;
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let k0 = self.cutoff as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - k0, c))
    }

    /// Zero-pad or truncate to a new cutoff.
    pub fn resized(&self, cutoff: usize) -> Self {
        Self::from_fn(cutoff, |k| self.coeff(k))
    }

    /// Apply a Fourier multiplier `k ↦ m(k)`.
    pub fn multiplier(&self, mut m: impl FnMut(i64) -> Complex64) -> Self {
        Self::from_fn(self.cutoff, |k| m(k) * self.coeff(k))
    }

    pub fn map_modes(&self, mut f: impl FnMut(i64, Complex64) -> Complex64) -> Self {
        Self::from_fn(self.cutoff, |k| f(k, self.coeff(k)))
    }

    pub fn scale(&self, a: Complex64) -> Self {
        self.map_modes(|_, c| a * c)
    }

    /// Coefficients of the pointwise complex conjugate: `k ↦ conj f̂(-k)`.
    pub fn conj(&self) -> Self {
        Self::from_fn(self.cutoff, |k| self.coeff(-k).conj())
    }

    /// Real part `(f + f̄)/2` as a field.
    pub fn re(&self) -> Self {
        let c = self.conj();
        (self + &c).scale(Complex64::new(0.5, 0.0))
    }

    /// Imaginary part `(f - f̄)/(2i)` as a field.
    pub fn im(&self) -> Self {
        let c = self.conj();
        (self - &c).scale(Complex64::new(0.0, -0.5))
    }

    /// `∂x`.
    pub fn dx(&self) -> Self {
        self.multiplier(|k| Complex64::new(0.0, k as f64))
    }

    /// `P₀f`, the mean.
    pub fn mean(&self) -> Complex64 {
        self.coeff(0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.modes()
            .map(|(k, c)| bracket(k).powf(2.0 * s) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest coefficient-wise distance; the fields may have different cutoffs.
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        let k0 = self.cutoff.max(other.cutoff) as i64;
        (-k0..=k0)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }

    /// `‖f - g‖_{H^s}` for fields of possibly different cutoffs.
    pub fn sobolev_distance(&self, other: &SpectralField, s: f64) -> f64 {
        let k0 = self.cutoff.max(other.cutoff) as i64;
        (-k0..=k0)
            .map(|k| bracket(k).powf(2.0 * s) * (self.coeff(k) - other.coeff(k)).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Samples `f(x_j)` at `x_j = 2πj/m`. Requires `m ≥ 2K + 1`.
    pub fn to_physical(&self, m: usize) -> Vec<Complex64> {
        assert!(m > 2 * self.cutoff, "grid of {m} points cannot hold cutoff {}", self.cutoff);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (k, c) in self.modes() {
            buf[k.rem_euclid(m as i64) as usize] = c;
        }
        PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(m).process(&mut buf));
        buf
    }

    /// Fourier coefficients `|k| ≤ cutoff` of uniform samples.
    pub fn from_physical(mut samples: Vec<Complex64>, cutoff: usize) -> Self {
        let m = samples.len();
        assert!(m > 2 * cutoff, "grid of {m} points cannot resolve cutoff {cutoff}");
        PLANNER.with(|p| p.borrow_mut().plan_fft_forward(m).process(&mut samples));
        let scale = 1.0 / m as f64;
        Self::from_fn(cutoff, |k| samples[k.rem_euclid(m as i64) as usize] * scale)
    }

    /// CSV rows `k,re,im` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,re,im\n");
        for (k, c) in self.modes() {
            let _ = writeln!(out, "{k},{:e},{:e}", c.re, c.im);
        }
        out
    }

    /// Inverse of [`SpectralField::to_csv`]. Missing modes are zero, the
    /// cutoff is the largest `|k|` present, and the header is optional.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut entries: Vec<(i64, Complex64)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if idx == 0 && line.replace(' ', "").eq_ignore_ascii_case("k,re,im") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(parse_err(idx + 1, format!("expected 3 columns, found {}", cols.len())));
            }
            let k: i64 = cols[0]
                .parse()
                .map_err(|_| parse_err(idx + 1, format!("bad mode index {:?}", cols[0])))?;
            if k.unsigned_abs() > (GRID_BUDGET / 2) as u64 {
                return Err(parse_err(idx + 1, format!("mode {k} beyond supported range")));
            }
            let re = parse_finite(cols[1], idx + 1)?;
            let im = parse_finite(cols[2], idx + 1)?;
            entries.push((k, Complex64::new(re, im)));
        }
        let cutoff = entries.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
        let mut f = SpectralField::zeros(cutoff);
        for (k, c) in entries {
            f.set(k, c);
        }
        Ok(f)
    }
}

pub(crate) fn parse_finite(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| parse_err(line, format!("bad number {s:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite number {s:?}")));
    }
    Ok(v)
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        SpectralField::from_fn(self.cutoff.max(rhs.cutoff), |k| self.coeff(k) + rhs.coeff(k))
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        SpectralField::from_fn(self.cutoff.max(rhs.cutoff), |k| self.coeff(k) - rhs.coeff(k))
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<Complex64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: Complex64) -> SpectralField {
        self.scale(rhs)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

/// `D^α f`, the multiplier `|k|^α`.
pub fn fractional_derivative(f: &SpectralField, alpha: f64) -> Result<SpectralField> {
    if alpha < 0.0 || alpha.is_nan() {
        return Err(LabError::NegativeOrder(alpha));
    }
    Ok(f.multiplier(|k| {
        if k == 0 && alpha > 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new((k.unsigned_abs() as f64).powf(alpha), 0.0)
        }
    }))
}

/// `⟨D⟩^s f`, the multiplier `(1 + k²)^{s/2}`.
pub fn bracket_power(f: &SpectralField, s: SobolevIndex) -> SpectralField {
    f.multiplier(|k| Complex64::new(bracket(k).powf(s.0), 0.0))
}

pub fn sobolev_norm(f: &SpectralField, s: SobolevIndex) -> f64 {
    f.sobolev_norm(s.0)
}

/// Fourier-support projections.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    Mean,
    NonMean,
    Plus,
    Minus,
}

pub fn project(f: &SpectralField, which: Projection) -> SpectralField {
    f.map_modes(|k, c| {
        let keep = match which {
            Projection::Mean => k == 0,
            Projection::NonMean => k != 0,
            Projection::Plus => k > 0,
            Projection::Minus => k < 0,
        };
        if keep {
            c
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Mean-free antiderivative `∂x^{-1}`: `f̂(k)/(ik)` for `k ≠ 0`, zero at `k = 0`.
pub fn antiderivative(f: &SpectralField) -> SpectralField {
    f.map_modes(|k, c| {
        if k == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            c / Complex64::new(0.0, k as f64)
        }
    })
}

/// How products are protected from aliasing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dealias {
    /// Pad for exactly the number of factors in the product.
    Exact,
    /// Pad for a polynomial of the given total degree.
    Degree(usize),
    /// No padding: the smallest grid holding the inputs.
    Aliased,
}

/// Grid length that evaluates a degree-`degree` product of fields with
/// cutoff `in_cutoff` exactly on modes `|k| ≤ out_cutoff`:
/// `2·pad·(K+1)` with `pad = (p+1)/2` when the cutoffs agree, rounded up to a
/// power of two.
pub fn padded_grid_len(degree: usize, in_cutoff: usize, out_cutoff: usize) -> Result<usize> {
    let exact = degree
        .saturating_mul(in_cutoff + 1)
        .saturating_add(out_cutoff + 1);
    let minimal = 2 * in_cutoff.max(out_cutoff) + 2;
    let needed = exact.max(minimal).next_power_of_two();
    if needed > GRID_BUDGET {
        return Err(LabError::DealiasBudget {
            needed,
            budget: GRID_BUDGET,
        });
    }
    Ok(needed)
}

/// Coefficients of `fg` on `|k| ≤ K`, `K` the larger input cutoff.
pub fn pointwise_product(f: &SpectralField, g: &SpectralField, dealias: Dealias) -> Result<SpectralField> {
    let cutoff = f.cutoff.max(g.cutoff);
    let m = match dealias {
        Dealias::Exact => padded_grid_len(2, cutoff, cutoff)?,
        Dealias::Degree(p) => padded_grid_len(p.max(2), cutoff, cutoff)?,
        Dealias::Aliased => 2 * cutoff + 2,
    };
    let a = f.to_physical(m);
    let b = g.to_physical(m);
    let prod = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    Ok(SpectralField::from_physical(prod, cutoff))
}

/// Exact mean of `Π_j f_j^{p_j}` where each factor is a band-limited field
/// (optionally conjugated). Used for energy densities whose integrals must
/// not alias.
pub fn exact_mean(factors: &[(&SpectralField, usize, bool)]) -> Result<Complex64> {
    let bandwidth: usize = factors.iter().map(|(f, p, _)| f.cutoff() * p).sum();
    let max_cut = factors.iter().map(|(f, _, _)| f.cutoff()).max().unwrap_or(0);
    let needed = (bandwidth + 1).max(2 * max_cut + 2).next_power_of_two();
    if needed > GRID_BUDGET {
        return Err(LabError::DealiasBudget {
            needed,
            budget: GRID_BUDGET,
        });
    }
    let mut acc = vec![Complex64::new(1.0, 0.0); needed];
    for (f, p, conj) in factors {
        if *p == 0 {
            continue;
        }
        let samples = f.to_physical(needed);
        for (a, s) in acc.iter_mut().zip(samples) {
            let s = if *conj { s.conj() } else { s };
            *a *= s.powu(*p as u32);
        }
    }
    Ok(acc.iter().sum::<Complex64>() / needed as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fractional_derivative_examples() {
        let e1 = SpectralField::mode(4, 1, c(1.0, 0.0));
        let d = fractional_derivative(&e1, 2.0).unwrap();
        assert!(d.max_abs_diff(&e1) < 1e-15);

        let k = SpectralField::constant(4, c(3.0, -1.0));
        assert!(fractional_derivative(&k, 0.7).unwrap().l2_norm() == 0.0);

        let e2 = SpectralField::mode(4, 2, c(1.0, 0.0));
        let d = fractional_derivative(&e2, 3.0).unwrap();
        assert!((d.coeff(2) - c(8.0, 0.0)).norm() < 1e-14);

        assert!(matches!(fractional_derivative(&e2, -0.5), Err(LabError::NegativeOrder(_))));
    }

    #[test]
    fn bracket_and_norms() {
        let e1 = SpectralField::mode(3, 1, c(1.0, 0.0));
        assert!((bracket_power(&e1, SobolevIndex(2.0)).coeff(1) - c(2.0, 0.0)).norm() < 1e-14);
        let k = SpectralField::constant(3, c(0.5, 0.5));
        assert_eq!(bracket_power(&k, SobolevIndex(-3.3)), k);
        assert!((sobolev_norm(&e1, SobolevIndex(1.0)) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(sobolev_norm(&SpectralField::zeros(5), SobolevIndex(2.0)), 0.0);
        let mut f = SpectralField::constant(2, c(3.0, 0.0));
        f.set(2, c(4.0, 0.0));
        assert!((sobolev_norm(&f, SobolevIndex(0.0)) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn projections_and_antiderivative() {
        let mut f = SpectralField::constant(2, c(2.0, 0.0));
        f.set(1, c(1.0, 0.0));
        assert_eq!(project(&f, Projection::Mean), SpectralField::constant(2, c(2.0, 0.0)));
        let e1 = SpectralField::mode(2, 1, c(1.0, 0.0));
        assert_eq!(project(&e1, Projection::Minus).l2_norm(), 0.0);

        let a = antiderivative(&e1);
        assert!((a.coeff(1) - c(0.0, -1.0)).norm() < 1e-15);
        assert_eq!(antiderivative(&SpectralField::constant(3, c(1.0, 2.0))).l2_norm(), 0.0);
    }

    #[test]
    fn product_examples() {
        let e1 = SpectralField::mode(4, 1, c(1.0, 0.0));
        let p = pointwise_product(&e1, &e1, Dealias::Exact).unwrap();
        assert!(p.max_abs_diff(&SpectralField::mode(4, 2, c(1.0, 0.0))) < 1e-14);

        let cosine = SpectralField::from_fn(4, |k| if k.abs() == 1 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let sq = pointwise_product(&cosine, &cosine, Dealias::Exact).unwrap();
        let expect = SpectralField::from_fn(4, |k| match k {
            0 => c(2.0, 0.0),
            2 | -2 => c(1.0, 0.0),
            _ => c(0.0, 0.0),
        });
        assert!(sq.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn aliased_product_differs_from_exact() {
        let hi = SpectralField::mode(8, 7, c(1.0, 0.0));
        let exact = pointwise_product(&hi, &hi, Dealias::Exact).unwrap();
        let aliased = pointwise_product(&hi, &hi, Dealias::Aliased).unwrap();
        assert!(exact.l2_norm() < 1e-14);
        assert!(aliased.l2_norm() > 0.5);
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            padded_grid_len(1 << 12, 1 << 12, 1 << 12),
            Err(LabError::DealiasBudget { .. })
        ));
    }

    #[test]
    fn grid_matches_padding_rule() {
        // (p+1)(K+1) for p = 3, K = 64 is 260, rounded to 512.
        assert_eq!(padded_grid_len(3, 64, 64).unwrap(), 512);
        assert_eq!(padded_grid_len(2, 15, 15).unwrap(), 64);
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let f = SpectralField::from_fn(3, |k| c(k as f64 * 0.25, 1.0 / (1.0 + k as f64 * k as f64)));
        let g = SpectralField::from_csv(&f.to_csv()).unwrap();
        assert_eq!(f, g);
        assert!(SpectralField::from_csv("0,1\n").is_err());
        assert!(SpectralField::from_csv("x,1,2\n").is_err());
        assert!(SpectralField::from_csv("1,nan,0\n").is_err());
        assert_eq!(SpectralField::from_csv("").unwrap().cutoff(), 0);
    }

    #[test]
    fn exact_mean_of_modulus_squared_is_parseval() {
        let f = SpectralField::from_fn(5, |k| c(1.0 / (1.0 + k.abs() as f64), 0.3 * k as f64));
        let m = exact_mean(&[(&f, 1, false), (&f, 1, true)]).unwrap();
        assert!((m.re - f.l2_norm().powi(2)).abs() < 1e-12);
        assert!(m.im.abs() < 1e-13);
    }
}
