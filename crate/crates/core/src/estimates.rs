//! Empirical checks of bilinear and commutator estimates on random and
//! adversarial trigonometric polynomials.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::evolution::fit_slope;
use crate::sampling;
use crate::spectral::{bracket_power, padded_grid_len, SobolevIndex, SpectralField};

/// `fg` with every mode of the product kept.
pub fn full_product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let out = f.cutoff() + g.cutoff();
    let m = padded_grid_len(2, f.cutoff().max(g.cutoff()), out)?;
    let a = f.to_physical(m);
    let b = g.to_physical(m);
    Ok(SpectralField::from_physical(a.iter().zip(&b).map(|(x, y)| x * y).collect(), out))
}

/// Whether `(s₀, s₁, s₂)` admits `‖fg‖_{H^{-s₀}} ≲ ‖f‖_{H^{s₁}}‖g‖_{H^{s₂}}`.
pub fn bilinear_admissible(s0: f64, s1: f64, s2: f64) -> bool {
    let m = (s0 + s1).min(s1 + s2).min(s2 + s0);
    let sum = s0 + s1 + s2;
    (m >= 0.0 && sum > 0.5) || (m > 0.0 && sum >= 0.5)
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `‖fg‖_{H^{-s₀}} / (‖f‖_{H^{s₁}} ‖g‖_{H^{s₂}})`, with `0/0 = 0`.
pub fn bilinear_ratio(s0: f64, s1: f64, s2: f64, f: &SpectralField, g: &SpectralField) -> Result<f64> {
    if !bilinear_admissible(s0, s1, s2) {
        return Err(LabError::BilinearHypothesis { s0, s1, s2 });
    }
    let fg = full_product(f, g)?;
    Ok(ratio(fg.sobolev_norm(-s0), f.sobolev_norm(s1) * g.sobolev_norm(s2)))
}

/// `[⟨D⟩^s, f] ∂x g = ⟨D⟩^s(f ∂x g) − f ⟨D⟩^s ∂x g`, alias-free.
pub fn commutator_bracket(s: f64, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let gx = g.dx();
    let a = bracket_power(&full_product(f, &gx)?, SobolevIndex(s));
    let b = full_product(f, &bracket_power(&gx, SobolevIndex(s)))?;
    Ok(&a - &b)
}

/// `R^s_f(g) = ⟨D⟩^s(fg) − f⟨D⟩^s g + s (∂x f) ⟨D⟩^{s−2} ∂x g`, alias-free.
pub fn refined_commutator(s: f64, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let a = bracket_power(&full_product(f, g)?, SobolevIndex(s));
    let b = full_product(f, &bracket_power(g, SobolevIndex(s)))?;
    let c = full_product(&f.dx(), &bracket_power(&g.dx(), SobolevIndex(s - 2.0)))?;
    Ok(&(&a - &b) + &(&c * s))
}

/// The estimates under test. `eps` is the slack in the Sobolev exponents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "estimate", rename_all = "snake_case")]
pub enum Estimate {
    Bilinear { s0: f64, s1: f64, s2: f64 },
    /// `s ≥ 0`: RHS `‖f‖_{H^{3/2+ε}}‖g‖_{H^s} + ‖f‖_{H^s}‖g‖_{H^{3/2+ε}}`.
    Commutator { s: f64, eps: f64 },
    /// `s < 0`: RHS `‖f‖_{H^{3/2+ε}}‖g‖_{L²}`.
    CommutatorNegative { s: f64, eps: f64 },
    /// `s > 2`: RHS `‖f‖_{H^{max(s,5/2+ε)}}‖g‖_{H^{min(s−2,1/2+ε)}} + ‖f‖_{H^{5/2+ε}}‖g‖_{H^{s−2}}`.
    RefinedCommutator { s: f64, eps: f64 },
}

impl Estimate {
    pub fn name(&self) -> &'static str {
        match self {
            Estimate::Bilinear { .. } => "bilinear",
            Estimate::Commutator { .. } => "commutator",
            Estimate::CommutatorNegative { .. } => "commutator_negative",
            Estimate::RefinedCommutator { .. } => "refined_commutator",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Estimate::Bilinear { s0, s1, s2 } if !bilinear_admissible(s0, s1, s2) => {
                Err(LabError::BilinearHypothesis { s0, s1, s2 })
            }
            Estimate::Commutator { s, .. } if s < 0.0 => Err(LabError::Config(format!("commutator needs s >= 0, got {s}"))),
            Estimate::CommutatorNegative { s, .. } if s >= 0.0 => {
                Err(LabError::Config(format!("negative commutator needs s < 0, got {s}")))
            }
            Estimate::RefinedCommutator { s, .. } if s <= 2.0 => {
                Err(LabError::Config(format!("refined commutator needs s > 2, got {s}")))
            }
            _ => Ok(()),
        }
    }

    /// LHS / RHS for one pair.
    pub fn ratio(&self, f: &SpectralField, g: &SpectralField) -> Result<f64> {
        match *self {
            Estimate::Bilinear { s0, s1, s2 } => bilinear_ratio(s0, s1, s2, f, g),
            Estimate::Commutator { s, eps } => {
                let lhs = commutator_bracket(s, f, g)?.l2_norm();
                let t = 1.5 + eps;
                Ok(ratio(lhs, f.sobolev_norm(t) * g.sobolev_norm(s) + f.sobolev_norm(s) * g.sobolev_norm(t)))
            }
            Estimate::CommutatorNegative { s, eps } => {
                let lhs = commutator_bracket(s, f, g)?.l2_norm();
                Ok(ratio(lhs, f.sobolev_norm(1.5 + eps) * g.l2_norm()))
            }
            Estimate::RefinedCommutator { s, eps } => {
                let lhs = refined_commutator(s, f, g)?.l2_norm();
                let t = 2.5 + eps;
                let rhs = f.sobolev_norm(s.max(t)) * g.sobolev_norm((s - 2.0).min(0.5 + eps))
                    + f.sobolev_norm(t) * g.sobolev_norm(s - 2.0);
                Ok(ratio(lhs, rhs))
            }
        }
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Estimate::Bilinear { s0, s1, s2 } => write!(f, "bilinear({s0},{s1},{s2})"),
            Estimate::Commutator { s, .. } => write!(f, "commutator(s={s})"),
            Estimate::CommutatorNegative { s, .. } => write!(f, "commutator_negative(s={s})"),
            Estimate::RefinedCommutator { s, .. } => write!(f, "refined_commutator(s={s})"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleSpec {
    pub cutoffs: Vec<usize>,
    pub samples_per_cutoff: usize,
    pub decay: f64,
    pub seed: u64,
    /// Adds the frequency-separated families to each cutoff.
    pub adversarial: bool,
}

impl EnsembleSpec {
    /// Dyadic cutoffs 16..=256, 32 Gaussian samples each, plus adversarial pairs.
    pub fn standard(decay: f64, seed: u64) -> Self {
        EnsembleSpec {
            cutoffs: vec![16, 32, 64, 128, 256],
            samples_per_cutoff: 32,
            decay,
            seed,
            adversarial: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.cutoffs.is_empty() || self.cutoffs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LabError::Config("cutoffs must be non-empty and increasing".into()));
        }
        if self.samples_per_cutoff == 0 {
            return Err(LabError::Config("need at least one sample per cutoff".into()));
        }
        Ok(())
    }
}

/// Frequency-separated pairs at cutoff `k`: low × high, high × low,
/// near-cancelling high × high, and lacunary spectra with random phases.
pub fn adversarial_pairs(rng: &mut impl Rng, k: usize, decay: f64) -> Vec<(SpectralField, SpectralField)> {
    let one = Complex64::new(1.0, 0.0);
    let ki = k as i64;
    let low = SpectralField::mode(k, 1, one);
    let high = SpectralField::mode(k, ki, one);
    let anti = SpectralField::mode(k, -(ki - 1), one);
    let mut lacunary = || {
        let mut f = SpectralField::zeros(k);
        let mut j = 1i64;
        while j <= ki {
            let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            f.set(j, Complex64::from_polar((j as f64).powf(-decay), theta));
            j *= 2;
        }
        f
    };
    let (la, lb) = (lacunary(), lacunary());
    vec![
        (low.clone(), high.clone()),
        (high.clone(), low),
        (high, anti),
        (la, lb),
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioRow {
    pub cutoff: usize,
    pub max_ratio: f64,
    pub median_ratio: f64,
    /// `max_ratio` over the previous row's.
    pub growth_factor: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioReport {
    pub estimate: String,
    pub rows: Vec<RatioRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Boundedness {
    pub burn_in: usize,
    pub max_growth: f64,
    pub slope: f64,
    pub bounded: bool,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl RatioReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("estimate,cutoff,max_ratio,median_ratio,growth_factor\n");
        out.push_str(&self.csv_rows());
        out
    }

    /// Data rows only, for concatenating several reports.
    pub fn csv_rows(&self) -> String {
        self.rows
            .iter()
            .map(|r| {
                let growth = r.growth_factor.map_or(String::new(), |g| format!("{g:e}"));
                format!("{},{},{:e},{:e},{growth}\n", self.estimate, r.cutoff, r.max_ratio, r.median_ratio)
            })
            .collect()
    }

    /// Growth factors between consecutive cutoffs starting at `burn_in` stay
    /// below `max_growth`, and the log-log slope of the max ratio over those
    /// cutoffs stays below `max_slope`.
    pub fn boundedness(&self, burn_in: usize, max_growth: f64, max_slope: f64) -> Boundedness {
        let tail: Vec<&RatioRow> = self.rows.iter().filter(|r| r.cutoff >= burn_in).collect();
        let growth = tail
            .iter()
            .skip(1)
            .filter_map(|r| r.growth_factor)
            .fold(0.0, f64::max);
        let points: Vec<(f64, f64)> = tail
            .iter()
            .filter(|r| r.max_ratio > 0.0)
            .map(|r| ((r.cutoff as f64).ln(), r.max_ratio.ln()))
            .collect();
        let slope = fit_slope(&points).unwrap_or(0.0);
        Boundedness {
            burn_in,
            max_growth: growth,
            slope,
            bounded: growth < max_growth && slope < max_slope,
        }
    }
}

/// Ratios of `estimate` over Gaussian fields `f̂(k) = z_k⟨k⟩^{-decay}` (and
/// adversarial pairs when requested), aggregated per cutoff.
pub fn run_ensemble(estimate: &Estimate, spec: &EnsembleSpec) -> Result<RatioReport> {
    estimate.validate()?;
    spec.validate()?;
    let mut rng = sampling::rng(spec.seed);
    let mut rows: Vec<RatioRow> = Vec::with_capacity(spec.cutoffs.len());
    for &k in &spec.cutoffs {
        let mut pairs: Vec<(SpectralField, SpectralField)> = (0..spec.samples_per_cutoff)
            .map(|_| {
                let f = sampling::gaussian_field(&mut rng, k, spec.decay);
                let g = sampling::gaussian_field(&mut rng, k, spec.decay);
                (f, g)
            })
            .collect();
        if spec.adversarial {
            pairs.extend(adversarial_pairs(&mut rng, k, spec.decay));
        }
        let mut ratios = pairs
            .par_iter()
            .map(|(f, g)| estimate.ratio(f, g))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(bad) = ratios.iter().find(|r| !r.is_finite()) {
            return Err(LabError::Mismatch(format!("non-finite ratio {bad} at cutoff {k}")));
        }
        let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
        let median_ratio = median(&mut ratios);
        let growth_factor = rows.last().map(|prev| ratio(max_ratio, prev.max_ratio));
        rows.push(RatioRow {
            cutoff: k,
            max_ratio,
            median_ratio,
            growth_factor,
        });
    }
    Ok(RatioReport {
        estimate: estimate.to_string(),
        rows,
    })
}

/// Fitted exponent of `‖R^s_f(g)‖_{L²}` against `K` for `f = e^{ix}`, `g = e^{iKx}`.
pub fn cancellation_exponent(s: f64, cutoffs: &[usize]) -> Result<f64> {
    let one = Complex64::new(1.0, 0.0);
    let points = cutoffs
        .iter()
        .map(|&k| {
            let f = SpectralField::mode(1, 1, one);
            let g = SpectralField::mode(k, k as i64, one);
            Ok(((k as f64).ln(), refined_commutator(s, &f, &g)?.l2_norm().ln()))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_slope(&points).ok_or_else(|| LabError::Config("need two distinct cutoffs".into()))
}
