//! Ill-posedness diagnostics: gauge shift, interaction variable, resonant
//! decomposition of the `v = ∂x u` equation, one-sided growth fits and the
//! paired-resolution verdict.
//!
//! A Galerkin system always has local solutions, so non-existence shows up
//! only as a signature: one-sided exponential growth at the rate
//! `−k · Im P₀Θ_ω` together with divergence under refinement.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::theta_mean;
use crate::error::{LabError, Result};
use crate::evolution::{fit_slope, integrate, sup_l2_gap, EvolutionConfig, TrajectoryRecord};
use crate::nonlinearity::{derived_system_rhs_to, evaluate, evaluate_tangent, evaluate_to, PolynomialNonlinearity, Variable};
use crate::sampling;
use crate::spectral::{fractional_derivative, Projection, SpectralField};

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Cumulative trapezoid integral of `Re P₀Θ_ω` over the recorded times.
pub fn gauge_shifts(traj: &TrajectoryRecord, f: &PolynomialNonlinearity) -> Result<Vec<f64>> {
    let means = traj
        .snapshots
        .par_iter()
        .map(|u| theta_mean(u, f).map(|m| m.re))
        .collect::<Result<Vec<f64>>>()?;
    let mut shifts = Vec::with_capacity(means.len());
    let mut acc = 0.0;
    for i in 0..means.len() {
        if i > 0 {
            acc += 0.5 * (means[i] + means[i - 1]) * (traj.times[i] - traj.times[i - 1]);
        }
        shifts.push(acc);
    }
    Ok(shifts)
}

/// `ũ(t, x) = u(t, x − ∫₀ᵗ Re P₀Θ_ω)`, i.e. `û(k) ↦ û(k) e^{−ik·shift(t)}`.
pub fn gauge_shift(traj: &TrajectoryRecord, f: &PolynomialNonlinearity) -> Result<TrajectoryRecord> {
    let shifts = gauge_shifts(traj, f)?;
    let snapshots = traj
        .snapshots
        .iter()
        .zip(&shifts)
        .map(|(u, &s)| {
            if s == 0.0 {
                u.clone()
            } else {
                u.multiplier(|k| Complex64::new(0.0, -(k as f64) * s).exp())
            }
        })
        .collect();
    Ok(TrajectoryRecord {
        snapshots,
        ..traj.clone()
    })
}

/// `V̂(t, k) = e^{i|k|^α t} v̂(t, k)` at one time.
pub fn interaction_snapshot(u: &SpectralField, t: f64, alpha: f64) -> SpectralField {
    u.dx().multiplier(|k| Complex64::new(0.0, (k.unsigned_abs() as f64).powf(alpha) * t).exp())
}

pub fn interaction_variable(traj: &TrajectoryRecord, alpha: f64) -> Vec<SpectralField> {
    traj.times
        .iter()
        .zip(&traj.snapshots)
        .map(|(&t, u)| interaction_snapshot(u, t, alpha))
        .collect()
}

/// Lower constant in `||k₁+k₂|^α − |k₂|^α| ≥ c |k₁| |k₂|^{α−1}` on `|k₁| < |k₂|/2`.
pub fn d2_lower_constant(alpha: f64) -> f64 {
    alpha * 2f64.powf(1.0 - alpha)
}

/// The seven pieces of the `V̂` equation at one time, on modes `|k| ≤ K`.
#[derive(Clone, Debug)]
pub struct ResonantParts {
    pub t: f64,
    pub n11: SpectralField,
    pub n21: SpectralField,
    pub n3: SpectralField,
    pub m1: SpectralField,
    pub m2: SpectralField,
    pub k1: SpectralField,
    pub k2: SpectralField,
    /// `Im P₀Θ_ω`, the coefficient of the resonant term `−(Im P₀Θ_ω) k V̂`.
    pub mean_im: f64,
}

impl ResonantParts {
    pub const NAMES: [&'static str; 7] = ["N11", "N21", "N3", "M1", "M2", "K1", "K2"];

    pub fn parts(&self) -> [&SpectralField; 7] {
        [&self.n11, &self.n21, &self.n3, &self.m1, &self.m2, &self.k1, &self.k2]
    }
}

/// Time derivative of the gauge-shifted Galerkin state, from the equation:
/// `∂t ũ = −iD^α ũ + ε∂x²ũ + P_K F(ũ) − (Re P₀Θ_ω) ∂x ũ`.
fn gauged_time_derivative(u: &SpectralField, f: &PolynomialNonlinearity, alpha: f64, eps: f64) -> Result<SpectralField> {
    let drift = theta_mean(u, f)?.re;
    let disp = fractional_derivative(u, alpha)?.scale(Complex64::new(0.0, -1.0));
    let heat = &u.dx().dx() * eps;
    let transport = &u.dx() * drift;
    Ok(&(&(&disp + &heat) + &evaluate(f, u)?) - &transport)
}

/// Literal convolution sums over `D₁(k)` and `D₂(k)` for a gauge-shifted
/// snapshot `u` at time `t`. Time derivatives inside `K₁, K₂` come from the
/// equation, not from differencing the trajectory.
pub fn resonant_decomposition(
    u: &SpectralField,
    t: f64,
    f: &PolynomialNonlinearity,
    alpha: f64,
    eps: f64,
) -> Result<ResonantParts> {
    let kmax = u.cutoff();
    let wide = 2 * kmax;
    let f_omega = f.wirtinger(Variable::Omega);
    let f_omega_bar = f.wirtinger(Variable::OmegaBar);

    let sys = derived_system_rhs_to(f, u, kmax)?;
    let theta = evaluate_to(&f_omega, u, wide)?;
    let theta_bar = evaluate_to(&f_omega_bar, u, wide)?;
    let mean_im = theta.mean().im;

    let du = gauged_time_derivative(u, f, alpha, eps)?;
    let dtheta = evaluate_tangent(&f_omega, u, &du, wide)?;
    let dtheta_bar = evaluate_tangent(&f_omega_bar, u, &du, wide)?;

    let big_v = interaction_snapshot(u, t, alpha);
    let pow = |k: i64| (k.unsigned_abs() as f64).powf(alpha);
    let dv = du.dx();
    let v = u.dx();
    // ∂t V̂ = e^{i|k|^α t}(∂t v̂ + i|k|^α v̂)
    let dbig_v = SpectralField::from_fn(kmax, |k| {
        Complex64::new(0.0, pow(k) * t).exp() * (dv.coeff(k) + Complex64::new(0.0, pow(k)) * v.coeff(k))
    });
    let i = Complex64::new(0.0, 1.0);
    let c_lo = d2_lower_constant(alpha);
    let ki = kmax as i64;

    let rows: Vec<[Complex64; 7]> = (-ki..=ki)
        .into_par_iter()
        .map(|k| {
            let mut acc = [zero(); 7];
            let pk = pow(k);
            for k2 in -ki..=ki {
                let k1 = k - k2;
                let p2 = pow(k2);
                let kf2 = k2 as f64;
                let th = if k1 == 0 { zero() } else { theta.coeff(k1) };
                let dth = if k1 == 0 { zero() } else { dtheta.coeff(k1) };
                let thb = theta_bar.coeff(k1);
                let dthb = dtheta_bar.coeff(k1);
                let vk2 = big_v.coeff(k2);
                let vbar = big_v.coeff(-k2).conj();
                let dvk2 = dbig_v.coeff(k2);
                let dvbar = dbig_v.coeff(-k2).conj();
                let minus_phase = Complex64::new(0.0, (pk - p2) * t).exp();
                let plus_phase = Complex64::new(0.0, (pk + p2) * t).exp();
                if 2 * k1.abs() >= k2.abs() {
                    acc[0] += i * minus_phase * th * kf2 * vk2;
                    acc[1] += i * plus_phase * thb * kf2 * vbar;
                } else {
                    if k1 != 0 {
                        let denom = pk - p2;
                        assert!(denom != 0.0, "vanishing denominator at k = {k}, k2 = {k2}");
                        assert!(
                            denom.abs() >= c_lo * (k1.abs() as f64) * (k2.abs() as f64).powf(alpha - 1.0) * (1.0 - 1e-12),
                            "denominator below the lower bound at k = {k}, k2 = {k2}"
                        );
                        let w = minus_phase / denom;
                        acc[3] += w * th * kf2 * vk2;
                        acc[5] -= w * kf2 * (dth * vk2 + th * dvk2);
                    }
                    let w = plus_phase / (pk + p2);
                    acc[4] += w * thb * kf2 * vbar;
                    acc[6] -= w * kf2 * (dthb * vbar + thb * dvbar);
                }
            }
            acc[2] = Complex64::new(0.0, pk * t).exp() * sys.remainder.coeff(k);
            acc
        })
        .collect();
    let column = |j: usize| SpectralField::from_fn(kmax, |k| rows[(k + ki) as usize][j]);
    Ok(ResonantParts {
        t,
        n11: column(0),
        n21: column(1),
        n3: column(2),
        m1: column(3),
        m2: column(4),
        k1: column(5),
        k2: column(6),
        mean_im,
    })
}

/// Decomposition at every recorded time of the gauge-shifted trajectory.
pub fn resonant_trajectory(traj: &TrajectoryRecord, f: &PolynomialNonlinearity) -> Result<Vec<ResonantParts>> {
    let shifted = gauge_shift(traj, f)?;
    let (alpha, eps) = (traj.config.alpha, traj.config.eps);
    shifted
        .times
        .iter()
        .zip(&shifted.snapshots)
        .map(|(&t, u)| resonant_decomposition(u, t, f, alpha, eps))
        .collect()
}

/// Sobolev weights of the seven parts, in [`ResonantParts::NAMES`] order.
pub fn resonant_weights(s: f64, alpha: f64) -> [f64; 7] {
    let n = s - 1.0;
    let m = s + alpha - 3.0;
    let k = s + (-1.0f64).min(alpha - 4.0);
    [n, n, n, m, m, k, k]
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonantRow {
    pub name: &'static str,
    pub weight: f64,
    pub initial: f64,
    pub sup: f64,
    /// `sup / initial`, with `0/0 = 0`.
    pub ratio: f64,
    pub bounded: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonantAudit {
    pub factor: f64,
    pub rows: Vec<ResonantRow>,
    pub bounded: bool,
}

/// Weighted `ℓ²` norms of the parts, sup over time, compared with the
/// initial value. A row is flagged when the ratio exceeds `factor`.
pub fn resonant_audit(parts: &[ResonantParts], s: f64, alpha: f64, factor: f64) -> Result<ResonantAudit> {
    let first = parts.first().ok_or_else(|| LabError::Mismatch("no decomposition snapshots".into()))?;
    let weights = resonant_weights(s, alpha);
    let rows: Vec<ResonantRow> = (0..7)
        .map(|j| {
            let initial = first.parts()[j].sobolev_norm(weights[j]);
            let sup = parts.iter().map(|p| p.parts()[j].sobolev_norm(weights[j])).fold(0.0, f64::max);
            let ratio = if sup == 0.0 {
                0.0
            } else if initial == 0.0 {
                f64::INFINITY
            } else {
                sup / initial
            };
            ResonantRow {
                name: ResonantParts::NAMES[j],
                weight: weights[j],
                initial,
                sup,
                ratio,
                bounded: ratio <= factor,
            }
        })
        .collect();
    let bounded = rows.iter().all(|r| r.bounded);
    Ok(ResonantAudit { factor, rows, bounded })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    fn contains(self, k: i64) -> bool {
        match self {
            Side::Plus => k > 0,
            Side::Minus => k < 0,
        }
    }

    pub fn projection(self) -> Projection {
        match self {
            Side::Plus => Projection::Plus,
            Side::Minus => Projection::Minus,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        })
    }
}

/// Default fit window `[0.05 T, 0.3 T]`.
pub fn default_window(horizon: f64) -> (f64, f64) {
    (0.05 * horizon, 0.3 * horizon)
}

/// Amplitudes below this are excluded from the fits.
pub const AMPLITUDE_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug, Serialize)]
pub struct ModeRate {
    pub k: i64,
    pub fitted_rate: f64,
    /// `−k · mean Im P₀Θ_ω`.
    pub predicted: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub side: Side,
    pub fit_window: (f64, f64),
    /// Window mean of `Im P₀Θ_ω`.
    pub predicted_slope: f64,
    pub mode_rates: Vec<ModeRate>,
    /// Sup-in-time `L²` gap to the paired refined run; infinite when exactly
    /// one of the two was truncated.
    pub divergence: Option<f64>,
}

impl GrowthReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,fitted_rate,predicted,relative_error\n");
        for m in &self.mode_rates {
            out.push_str(&format!("{},{:e},{:e},{:e}\n", m.k, m.fitted_rate, m.predicted, m.relative_error));
        }
        out
    }

    /// Longest run of consecutive `|k|` whose rate matches within `tol`.
    pub fn matching_run(&self, tol: f64) -> usize {
        let mut modes: Vec<(u64, bool)> = self
            .mode_rates
            .iter()
            .map(|m| (m.k.unsigned_abs(), m.relative_error <= tol))
            .collect();
        modes.sort_unstable();
        let (mut best, mut run, mut prev) = (0, 0, None);
        for (k, ok) in modes {
            run = if ok && prev.is_some_and(|p: (u64, bool)| p.1 && p.0 + 1 == k) {
                run + 1
            } else if ok {
                1
            } else {
                0
            };
            best = best.max(run);
            prev = Some((k, ok));
        }
        best
    }
}

fn pair_divergence(a: &TrajectoryRecord, b: &TrajectoryRecord) -> f64 {
    if a.truncated != b.truncated {
        f64::INFINITY
    } else {
        sup_l2_gap(a, b)
    }
}

/// Fits `log|û(t,k)|` against `t` on the window for every mode on `side` and
/// compares with the resonant prediction `−k · mean Im P₀Θ_ω`.
pub fn directional_growth(
    traj: &TrajectoryRecord,
    f: &PolynomialNonlinearity,
    side: Side,
    window: (f64, f64),
    paired: Option<&TrajectoryRecord>,
) -> Result<GrowthReport> {
    let (lo, hi) = window;
    if !(lo < hi) || lo < 0.0 {
        return Err(LabError::Config(format!("bad fit window ({lo}, {hi})")));
    }
    let idx: Vec<usize> = (0..traj.times.len())
        .filter(|&i| traj.times[i] >= lo - 1e-12 && traj.times[i] <= hi + 1e-12)
        .collect();
    if idx.len() < 2 {
        return Err(LabError::Config(format!(
            "fit window ({lo}, {hi}) holds {} recorded times",
            idx.len()
        )));
    }
    let means = idx
        .par_iter()
        .map(|&i| theta_mean(&traj.snapshots[i], f).map(|m| m.im))
        .collect::<Result<Vec<f64>>>()?;
    let span = traj.times[idx[idx.len() - 1]] - traj.times[idx[0]];
    let predicted_slope = (1..idx.len())
        .map(|j| 0.5 * (means[j] + means[j - 1]) * (traj.times[idx[j]] - traj.times[idx[j - 1]]))
        .sum::<f64>()
        / span;

    let kmax = traj.config.cutoff as i64;
    let mode_rates = (-kmax..=kmax)
        .filter(|&k| side.contains(k))
        .filter_map(|k| {
            let points: Vec<(f64, f64)> = idx
                .iter()
                .map(|&i| (traj.times[i], traj.snapshots[i].coeff(k).norm()))
                .collect();
            if points.iter().any(|p| p.1 < AMPLITUDE_FLOOR || !p.1.is_finite()) {
                return None;
            }
            let logs: Vec<(f64, f64)> = points.iter().map(|&(t, a)| (t, a.ln())).collect();
            let fitted_rate = fit_slope(&logs)?;
            let predicted = -(k as f64) * predicted_slope;
            let relative_error = if predicted == 0.0 {
                if fitted_rate == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (fitted_rate - predicted).abs() / predicted.abs()
            };
            Some(ModeRate {
                k,
                fitted_rate,
                predicted,
                relative_error,
            })
        })
        .collect();
    Ok(GrowthReport {
        side,
        fit_window: window,
        predicted_slope,
        mode_rates,
        divergence: paired.map(|p| pair_divergence(traj, p)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    ConsistentWellposed,
    DirectionalGrowthDetected,
    Inconclusive,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::ConsistentWellposed => "consistent_wellposed",
            Classification::DirectionalGrowthDetected => "directional_growth_detected",
            Classification::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictThresholds {
    pub rate_tolerance: f64,
    pub min_consecutive: usize,
    pub divergence: f64,
    pub agreement: f64,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        VerdictThresholds {
            rate_tolerance: 0.25,
            min_consecutive: 5,
            divergence: 1e-3,
            agreement: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub classification: Classification,
    pub side: Side,
    pub matching_run: usize,
    pub predicted_slope: f64,
    pub divergence: f64,
    pub control_divergence: Option<f64>,
    pub thresholds: VerdictThresholds,
}

impl Verdict {
    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Classifies a probe from its growth report (with paired divergence) and an
/// optional well-posed control refined the same way.
pub fn nonexistence_verdict(
    report: &GrowthReport,
    control: Option<&GrowthReport>,
    thresholds: &VerdictThresholds,
) -> Result<Verdict> {
    let divergence = report
        .divergence
        .ok_or_else(|| LabError::Mismatch("growth report lacks a paired refinement".into()))?;
    let control_divergence = match control {
        Some(c) => Some(
            c.divergence
                .ok_or_else(|| LabError::Mismatch("control report lacks a paired refinement".into()))?,
        ),
        None => None,
    };
    let matching_run = report.matching_run(thresholds.rate_tolerance);
    let control_ok = control_divergence.is_none_or(|d| d < thresholds.agreement);
    let classification = if divergence < thresholds.agreement {
        Classification::ConsistentWellposed
    } else if matching_run >= thresholds.min_consecutive && divergence > thresholds.divergence && control_ok {
        Classification::DirectionalGrowthDetected
    } else {
        Classification::Inconclusive
    };
    Ok(Verdict {
        classification,
        side: report.side,
        matching_run,
        predicted_slope: report.predicted_slope,
        divergence,
        control_divergence,
        thresholds: thresholds.clone(),
    })
}

/// Runs `φ` at cutoffs `K` and `2K` with the same step; `φ` is truncated to
/// `K` for the coarse run.
pub fn paired_runs(
    phi: &SpectralField,
    f: &PolynomialNonlinearity,
    cfg: &EvolutionConfig,
) -> Result<(TrajectoryRecord, TrajectoryRecord)> {
    let coarse_cfg = cfg.clone();
    let fine_cfg = cfg.clone().with_cutoff(2 * cfg.cutoff);
    let coarse_phi = phi.resized(cfg.cutoff.min(phi.cutoff()));
    let (a, b) = rayon::join(|| integrate(&coarse_phi, f, &coarse_cfg), || integrate(phi, f, &fine_cfg));
    Ok((a?, b?))
}

/// Probe data `ψ + amplitude · tail` with tail coefficients
/// `⟨k⟩^{−s−1/2−0.01} e^{iθ_k}` on one side, up to `cutoff`.
pub fn rough_probe_data(
    psi: &SpectralField,
    s: f64,
    cutoff: usize,
    side: Side,
    amplitude: f64,
    seed: u64,
) -> SpectralField {
    let tail = sampling::rough_tail(&mut sampling::rng(seed), cutoff, s + 0.51, side.projection());
    &psi.resized(cutoff.max(psi.cutoff())) + &(&tail * amplitude)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{Monomial, Preset};
    use crate::spectral::project;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn smooth(seed: u64, k: usize, amp: f64) -> SpectralField {
        &sampling::gaussian_field(&mut sampling::rng(seed), k, 3.0) * amp
    }

    #[test]
    fn gauge_shift_undoes_real_transport() {
        let phi = smooth(1, 8, 1.0);
        let f = PolynomialNonlinearity::from_terms([(Monomial::new(0, 1, 0, 0), c(1.0, 0.0))]);
        let cfg = EvolutionConfig::new(3.0, 0.0, 8, 0.5).unwrap().with_dt(1e-2).with_record_every(10);
        let rec = integrate(&phi, &f, &cfg).unwrap();
        let shifted = gauge_shift(&rec, &f).unwrap();
        for (t, (u, v)) in rec.times.iter().zip(rec.snapshots.iter().zip(&shifted.snapshots)) {
            let free = crate::evolution::linear_semigroup_apply(&phi, *t, 3.0, 0.0).unwrap();
            assert!(v.max_abs_diff(&free) < 1e-8);
            for k in -8..=8 {
                assert!((u.coeff(k).norm() - v.coeff(k).norm()).abs() < 1e-14);
            }
        }
        // Purely imaginary Θ_ω: nothing moves.
        let g = Preset::ExampleC { c: c(0.0, 1.0) }.nonlinearity();
        let rec = integrate(&(&phi * 0.2), &g, &cfg).unwrap();
        let shifted = gauge_shift(&rec, &g).unwrap();
        for (a, b) in rec.snapshots.iter().zip(&shifted.snapshots) {
            assert!(a.max_abs_diff(b) < 1e-14);
        }
    }

    #[test]
    fn interaction_variable_basics() {
        let phi = smooth(2, 6, 1.0);
        let cfg = EvolutionConfig::new(3.0, 0.0, 6, 0.3).unwrap().with_dt(1e-2).with_record_every(5);
        let rec = integrate(&phi, &PolynomialNonlinearity::zero(), &cfg).unwrap();
        let vs = interaction_variable(&rec, 3.0);
        assert_eq!(vs[0], phi.dx());
        for (v, u) in vs.iter().zip(&rec.snapshots) {
            assert!(v.max_abs_diff(&vs[0]) < 1e-10);
            for k in -6..=6 {
                assert!((v.coeff(k).norm() - u.dx().coeff(k).norm()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn omega_free_nonlinearity_has_no_transport_parts() {
        let u = smooth(3, 6, 0.5);
        let parts = resonant_decomposition(&u, 0.1, &Preset::Cubic { lambda: 1.0 }.nonlinearity(), 3.0, 0.0).unwrap();
        for p in [&parts.n11, &parts.m1, &parts.k1, &parts.n21, &parts.m2, &parts.k2] {
            assert_eq!(p.l2_norm(), 0.0);
        }
        assert!(parts.n3.l2_norm() > 0.0);
    }

    #[test]
    fn linear_example_collapses() {
        let u = smooth(4, 6, 1.0);
        let parts = resonant_decomposition(&u, 0.2, &Preset::LinearTransport.nonlinearity(), 3.0, 0.0).unwrap();
        for p in [&parts.n11, &parts.m1, &parts.k1, &parts.n21, &parts.m2, &parts.k2] {
            assert!(p.l2_norm() < 1e-14);
        }
        assert!((parts.mean_im - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_mode_m1_closed_form() {
        // F = ζ̄ ω: Θ_ω = ū, so for u = A e^{ix} only k₁ = −1 contributes.
        let a = c(0.7, 0.2);
        let (alpha, t) = (3.0, 0.4);
        let f = PolynomialNonlinearity::from_terms([(Monomial::new(0, 1, 1, 0), c(1.0, 0.0))]);
        let u = SpectralField::mode(4, 1, a);
        let parts = resonant_decomposition(&u, t, &f, alpha, 0.0).unwrap();
        // k₂ = 1, k₁ = −1 is in D₁; D₂ is empty for every k, so M₁ vanishes.
        assert_eq!(parts.m1.l2_norm(), 0.0);
        // N11 at k = 0: i e^{−i t} conj(A) · 1 · (i A e^{i t}) = −|A|².
        assert!((parts.n11.coeff(0) - c(-a.norm_sqr(), 0.0)).norm() < 1e-14);

        // u = A e^{4ix} + B e^{ix}: Θ̂_ω(−1) = conj B, V̂(4) = 4iA e^{i 64 t}; (−1, 4) ∈ D₂(3).
        let b = c(0.1, -0.3);
        let mut u = SpectralField::mode(4, 4, a);
        u.set(1, b);
        let parts = resonant_decomposition(&u, t, &f, alpha, 0.0).unwrap();
        let pk = 27.0;
        let p2 = 64.0;
        let v4 = c(0.0, 4.0) * a * c(0.0, p2 * t).exp();
        // Other D₂ pairs for k = 3 need Θ̂_ω(k₁) with k₁ ∈ {−4, 4, ...}: Θ̂_ω(−4) = conj A pairs with k₂ = 7, outside K.
        let expect = c(0.0, (pk - p2) * t).exp() / (pk - p2) * b.conj() * 4.0 * v4;
        assert!((parts.m1.coeff(3) - expect).norm() < 1e-14, "{:?} vs {expect:?}", parts.m1.coeff(3));
    }

    #[test]
    fn decomposition_is_linear_in_v_at_fixed_theta() {
        // Scaling V̂ alone scales N11, M1; checked by building the sums by hand on two modes.
        let f = Preset::ExampleC { c: c(0.0, 1.0) }.nonlinearity();
        let u = smooth(5, 5, 0.4);
        let base = resonant_decomposition(&u, 0.1, &f, 3.0, 0.0).unwrap();
        // Θ_ω = 2i|u|² is invariant under u ↦ e^{iφ}u while V̂ rotates by e^{iφ}.
        let rot = c(0.0, 0.9).exp();
        let rotated = resonant_decomposition(&u.scale(rot), 0.1, &f, 3.0, 0.0).unwrap();
        for (a, b) in [(&base.n11, &rotated.n11), (&base.m1, &rotated.m1), (&base.k1, &rotated.k1)] {
            assert!((&a.scale(rot) - b).l2_norm() < 1e-12 * (1.0 + a.l2_norm()));
        }
    }

    #[test]
    fn linear_transport_growth_and_verdict() {
        let kmax = 16usize;
        let phi = SpectralField::from_fn(2 * kmax, |k| c((-(k.abs() as f64)).exp(), 0.0));
        let cfg = EvolutionConfig::new(3.0, 0.0, kmax, 1.0).unwrap().with_dt(1e-3).with_record_every(10);
        let f = Preset::LinearTransport.nonlinearity();
        let (coarse, fine) = paired_runs(&phi, &f, &cfg).unwrap();
        let rep = directional_growth(&coarse, &f, Side::Minus, default_window(1.0), Some(&fine)).unwrap();
        assert!((rep.predicted_slope - 1.0).abs() < 1e-12);
        for m in &rep.mode_rates {
            assert!((m.fitted_rate - (-m.k as f64)).abs() < 1e-6, "{m:?}");
        }
        let v = nonexistence_verdict(&rep, None, &VerdictThresholds::default()).unwrap();
        assert_eq!(v.classification, Classification::DirectionalGrowthDetected);
        assert!(v.to_json_line().unwrap().contains("\"directional_growth_detected\""));
    }

    #[test]
    fn cubic_probe_is_consistent() {
        let kmax = 16usize;
        let phi = &SpectralField::from_fn(kmax, |k| c((-(k.abs() as f64)).exp(), 0.0)) * 0.1;
        let cfg = EvolutionConfig::new(3.0, 0.0, kmax, 0.5).unwrap().with_dt(1e-3).with_record_every(10);
        let f = Preset::Cubic { lambda: 1.0 }.nonlinearity();
        let (coarse, fine) = paired_runs(&phi, &f, &cfg).unwrap();
        let rep = directional_growth(&coarse, &f, Side::Minus, default_window(0.5), Some(&fine)).unwrap();
        for m in &rep.mode_rates {
            assert!(m.fitted_rate.abs() <= 0.05 * m.k.abs() as f64, "{m:?}");
        }
        let v = nonexistence_verdict(&rep, None, &VerdictThresholds::default()).unwrap();
        assert_eq!(v.classification, Classification::ConsistentWellposed);
    }

    #[test]
    fn matching_runs_count_consecutive_modes() {
        let rep = GrowthReport {
            side: Side::Minus,
            fit_window: (0.0, 1.0),
            predicted_slope: 1.0,
            mode_rates: [1, 2, 3, 5, 6, 7, 8, 9, 10]
                .iter()
                .map(|&k| ModeRate {
                    k: -k,
                    fitted_rate: k as f64,
                    predicted: k as f64,
                    relative_error: if k == 8 { 0.5 } else { 0.0 },
                })
                .collect(),
            divergence: Some(0.5),
        };
        assert_eq!(rep.matching_run(0.25), 3);
        let v = nonexistence_verdict(&rep, None, &VerdictThresholds::default()).unwrap();
        assert_eq!(v.classification, Classification::Inconclusive);
        assert!(rep.to_csv().starts_with("k,fitted_rate,predicted,relative_error\n"));
    }

    #[test]
    fn weights() {
        let w = resonant_weights(2.6, 3.0);
        assert!((w[5] - 1.6).abs() < 1e-15);
        assert!((w[3] - 2.6).abs() < 1e-15);
        assert!((resonant_weights(2.6, 2.5)[6] - 1.1).abs() < 1e-15);
    }

    #[test]
    fn zero_solution_audit() {
        let f = Preset::ExampleC { c: c(1.0, 0.0) }.nonlinearity();
        let parts = vec![resonant_decomposition(&SpectralField::zeros(4), 0.0, &f, 3.0, 0.0).unwrap()];
        let audit = resonant_audit(&parts, 2.6, 3.0, 10.0).unwrap();
        assert!(audit.bounded);
        assert!(audit.rows.iter().all(|r| r.sup == 0.0 && r.ratio == 0.0));
    }

    #[test]
    fn probe_data_tail_side() {
        let psi = SpectralField::constant(0, c(1.0, 0.0));
        let phi = rough_probe_data(&psi, 2.6, 16, Side::Minus, 0.1, 3);
        assert_eq!(project(&phi, Projection::Plus).l2_norm(), 0.0);
        assert_eq!(phi.coeff(0), c(1.0, 0.0));
        assert!((phi.coeff(-4).norm() - 0.1 * 17f64.sqrt().powf(-3.11)).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn d2_denominator_bound(alpha in 2.01f64..6.0, k2 in -200i64..200, k1 in -100i64..100) {
            prop_assume!(k1 != 0 && 2 * k1.abs() < k2.abs());
            let d = ((k1 + k2).abs() as f64).powf(alpha) - (k2.abs() as f64).powf(alpha);
            let bound = d2_lower_constant(alpha) * k1.abs() as f64 * (k2.abs() as f64).powf(alpha - 1.0);
            prop_assert!(d.abs() >= bound * (1.0 - 1e-12));
        }
    }
}
