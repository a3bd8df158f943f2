//! Modified energy with correction ladder `L_n`, flux terms `K_n` and audits.
//!
//! For `v = ∂x u`, `Θ_ω = F_ω(u, v, ū, v̄)` and `w = ∂x^{-1} Im Θ_ω`,
//!
//! ```text
//! L_n = c_n ∫ w^n |⟨D⟩^{r−1−(α−2)n/2} v|²,        c_n = 2^n / (α^n n!)
//! E²  = ‖u‖²_{H^{r−1}} + ‖v‖²_{H^{r−1}} + Σ_{n≤N} L_n + a ‖u‖²_{H^{r−1}} ‖Θ_ω‖^{2N}_{L²}
//! ```
//!
//! Integrals are means over the torus, matching the Parseval normalization
//! of [`SpectralField`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::evolution::TrajectoryRecord;
use crate::nonlinearity::{evaluate_full, PolynomialNonlinearity, Variable};
use crate::spectral::{antiderivative, bracket_power, exact_mean, project, Projection, SobolevIndex, SpectralField};

/// Smallest `N` with `1/(α−2) ≤ N`.
pub fn ladder_depth(alpha: f64) -> Result<usize> {
    if !(alpha > 2.0) || !alpha.is_finite() {
        return Err(LabError::DispersionOrder(alpha));
    }
    let x = 1.0 / (alpha - 2.0);
    let mut n = x.ceil().max(1.0) as usize;
    // Guard against ceil landing one above an exact integer quotient.
    if n > 1 && ((n - 1) as f64) >= x {
        n -= 1;
    }
    Ok(n)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|j| j as f64).product()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrectionLadder {
    pub alpha: f64,
    pub r: f64,
    pub depth: usize,
    /// `c_1..c_N`.
    pub c: Vec<f64>,
    /// Young constants `a_1..a_N`.
    pub a_terms: Vec<f64>,
    pub a: f64,
}

/// Young constant for the `n`-th correction of a depth-`N` ladder with
/// coefficient `c`. With `θ = n/(2N)` and `δ` fixed so the `‖v‖²` share is
/// `1/(10n²)`, `x^θ y^{1−θ} ≤ θδ^{1/θ}x + (1−θ)δ^{−1/(1−θ)}y` gives
/// `|L_n| ≤ ‖v‖²/(10n²) + a_n ‖u‖² ‖Θ_ω‖^{2N}`, using
/// `‖∂x^{-1}g‖_∞ ≤ (π/√3)‖g‖_{L²}` for mean-free `g`.
pub fn young_constant(c: f64, n: usize, depth: usize) -> f64 {
    let theta = n as f64 / (2.0 * depth as f64);
    let delta = (10.0 * (n * n) as f64 * c * (1.0 - theta)).powf(1.0 - theta);
    c * theta * delta.powf(1.0 / theta) * (PI * PI / 3.0).powi(depth as i32)
}

impl CorrectionLadder {
    pub fn new(alpha: f64, r: f64) -> Result<Self> {
        if !(r >= 1.0) {
            return Err(LabError::Config(format!("energy regularity r must be at least 1, got {r}")));
        }
        let depth = ladder_depth(alpha)?;
        let c: Vec<f64> = (1..=depth).map(|n| (2.0 / alpha).powi(n as i32) / factorial(n)).collect();
        let a_terms: Vec<f64> = c.iter().enumerate().map(|(i, &cn)| young_constant(cn, i + 1, depth)).collect();
        let a = a_terms.iter().sum();
        Ok(CorrectionLadder {
            alpha,
            r,
            depth,
            c,
            a_terms,
            a,
        })
    }

    /// Diagnostic ladder at `α = 2`: coefficients `1/n!`, all exponents `r − 1`,
    /// no Young term.
    pub fn gauge_limit(terms: usize, r: f64) -> Self {
        CorrectionLadder {
            alpha: 2.0,
            r,
            depth: terms,
            c: (1..=terms).map(|n| 1.0 / factorial(n)).collect(),
            a_terms: vec![0.0; terms],
            a: 0.0,
        }
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.depth {
            Err(LabError::LadderIndex { index: n, depth: self.depth })
        } else {
            Ok(())
        }
    }

    /// `r − 1 − (α−2)n/2`.
    pub fn correction_exponent(&self, n: usize) -> f64 {
        self.r - 1.0 - (self.alpha - 2.0) * n as f64 / 2.0
    }

    /// `r − 1 − (α−2)(n−1)/2`.
    pub fn flux_exponent(&self, n: usize) -> f64 {
        self.correction_exponent(n - 1)
    }
}

/// Quantities shared by every term at one time.
struct Frame {
    v: SpectralField,
    /// `Θ_ω` at full bandwidth.
    theta: SpectralField,
    /// `P≠0 Im Θ_ω`.
    im_theta: SpectralField,
    w: SpectralField,
}

impl Frame {
    fn new(u: &SpectralField, f: &PolynomialNonlinearity) -> Result<Self> {
        let f_omega = f.wirtinger(Variable::Omega);
        let theta = if f_omega.is_zero() {
            SpectralField::zeros(0)
        } else {
            evaluate_full(&f_omega, u)?
        };
        let im_theta = project(&theta.im(), Projection::NonMean);
        let w = antiderivative(&im_theta);
        Ok(Frame {
            v: u.dx(),
            theta,
            im_theta,
            w,
        })
    }

    fn correction(&self, ladder: &CorrectionLadder, n: usize) -> Result<f64> {
        if self.w.l2_norm() == 0.0 {
            return Ok(0.0);
        }
        let g = bracket_power(&self.v, SobolevIndex(ladder.correction_exponent(n)));
        let mean = exact_mean(&[(&self.w, n, false), (&g, 1, false), (&g, 1, true)])?;
        Ok(ladder.c[n - 1] * mean.re)
    }

    fn flux(&self, ladder: &CorrectionLadder, n: usize) -> Result<f64> {
        if self.w.l2_norm() == 0.0 {
            return Ok(0.0);
        }
        let s = SobolevIndex(ladder.flux_exponent(n));
        let g = bracket_power(&self.v, s);
        let gx = g.dx();
        // ∂x(w^n) = n w^{n−1} ∂x w
        let mean = exact_mean(&[
            (&self.w, n - 1, false),
            (&self.im_theta, 1, false),
            (&gx, 1, false),
            (&g, 1, true),
        ])?;
        Ok(-ladder.alpha * ladder.c[n - 1] * n as f64 * mean.im)
    }
}

/// `L_n` at the state `u`.
pub fn correction_term(ladder: &CorrectionLadder, n: usize, u: &SpectralField, f: &PolynomialNonlinearity) -> Result<f64> {
    ladder.check_index(n)?;
    Frame::new(u, f)?.correction(ladder, n)
}

/// `K_n = −α c_n Im ∫ ∂x(w^n) (⟨D⟩^σ ∂x v) conj(⟨D⟩^σ v)` with
/// `σ = r − 1 − (α−2)(n−1)/2`. Defined for every `n ≥ 1`, so `K_{N+1}` is
/// available to the telescoping identity.
pub fn flux_term(ladder: &CorrectionLadder, n: usize, u: &SpectralField, f: &PolynomialNonlinearity) -> Result<f64> {
    if n == 0 {
        return Err(LabError::LadderIndex { index: n, depth: ladder.depth });
    }
    let mut ext = ladder.clone();
    while ext.c.len() < n {
        let m = ext.c.len() + 1;
        ext.c.push((2.0 / ext.alpha).powi(m as i32) / factorial(m));
    }
    Frame::new(u, f)?.flux(&ext, n)
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyBreakdown {
    pub energy: f64,
    pub energy_sq: f64,
    /// `‖u‖_{H^{r−1}}`.
    pub norm_u: f64,
    /// `‖v‖_{H^{r−1}}`.
    pub norm_v: f64,
    pub corrections: Vec<f64>,
    pub theta_l2: f64,
    /// `Im P₀Θ_ω`.
    pub mean_im: f64,
    pub lower: f64,
    pub upper: f64,
    pub coercivity_ok: bool,
}

/// `E` and its pieces, with the two-sided coercivity check.
pub fn modified_energy(u: &SpectralField, f: &PolynomialNonlinearity, ladder: &CorrectionLadder) -> Result<EnergyBreakdown> {
    let frame = Frame::new(u, f)?;
    let s = ladder.r - 1.0;
    let norm_u = u.sobolev_norm(s);
    let norm_v = frame.v.sobolev_norm(s);
    let corrections = (1..=ladder.depth)
        .map(|n| frame.correction(ladder, n))
        .collect::<Result<Vec<f64>>>()?;
    let theta_l2 = frame.theta.l2_norm();
    let (u2, v2) = (norm_u * norm_u, norm_v * norm_v);
    let young = u2 * theta_l2.powi(2 * ladder.depth as i32);
    let energy_sq = u2 + v2 + corrections.iter().sum::<f64>() + ladder.a * young;
    let scale = u2 + v2 + ladder.a * young;
    if energy_sq < -1e-13 * scale || !energy_sq.is_finite() {
        return Err(LabError::NegativeRadicand(energy_sq));
    }
    let energy_sq = energy_sq.max(0.0);
    let lower = u2 + 0.5 * v2;
    let upper = u2 + 1.5 * v2 + 2.0 * ladder.a * young;
    let slack = 1e-12 * scale;
    Ok(EnergyBreakdown {
        energy: energy_sq.sqrt(),
        energy_sq,
        norm_u,
        norm_v,
        corrections,
        theta_l2,
        mean_im: frame.theta.mean().im,
        lower,
        upper,
        coercivity_ok: lower <= energy_sq + slack && energy_sq <= upper + slack,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugeLimitReport {
    pub partial_sum: f64,
    pub exponential: f64,
    pub relative_error: f64,
    pub sup_weight: f64,
}

/// Compares `‖⟨D⟩^{r−1}v‖² + Σ_{n≤terms} L_n` of the `α = 2` ladder with
/// `∫ exp(w) |⟨D⟩^{r−1}v|²`, the latter by quadrature on `grid` points.
pub fn gauge_limit_check(
    u: &SpectralField,
    f: &PolynomialNonlinearity,
    r: f64,
    terms: usize,
    grid: usize,
) -> Result<GaugeLimitReport> {
    let ladder = CorrectionLadder::gauge_limit(terms, r);
    let frame = Frame::new(u, f)?;
    let g = bracket_power(&frame.v, SobolevIndex(r - 1.0));
    let mut partial_sum = g.l2_norm().powi(2);
    for n in 1..=terms {
        partial_sum += frame.correction(&ladder, n)?;
    }
    let w = frame.w.to_physical(grid);
    let gs = g.to_physical(grid);
    let exponential = w.iter().zip(&gs).map(|(w, g)| w.re.exp() * g.norm_sqr()).sum::<f64>() / grid as f64;
    Ok(GaugeLimitReport {
        partial_sum,
        exponential,
        relative_error: (partial_sum - exponential).abs() / exponential.abs(),
        sup_weight: w.iter().map(|z| z.re.abs()).fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub norm_u: Vec<f64>,
    pub norm_v: Vec<f64>,
    pub l_terms: Vec<Vec<f64>>,
    pub mean_im: Vec<f64>,
    pub coercivity_ok: Vec<bool>,
}

impl EnergyTrace {
    pub fn to_csv(&self) -> String {
        let depth = self.l_terms.first().map_or(0, Vec::len);
        let mut out = String::from("t,E,norm_u,norm_v");
        for n in 1..=depth {
            out.push_str(&format!(",L_{n}"));
        }
        out.push_str(",mean_im,coercivity_ok\n");
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e}",
                self.times[i], self.energy[i], self.norm_u[i], self.norm_v[i]
            ));
            for l in &self.l_terms[i] {
                out.push_str(&format!(",{l:e}"));
            }
            out.push_str(&format!(",{:e},{}\n", self.mean_im[i], self.coercivity_ok[i]));
        }
        out
    }

    pub fn coercivity_violations(&self) -> usize {
        self.coercivity_ok.iter().filter(|ok| !**ok).count()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyAudit {
    pub eps: f64,
    pub trace: EnergyTrace,
    /// `max_t |d/dt log(1 + E(t))|` by finite differences.
    pub lipschitz: f64,
    pub nonincreasing: bool,
}

/// Centered differences inside, one-sided at the ends.
pub fn finite_difference(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = times.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            (values[b] - values[a]) / (times[b] - times[a])
        })
        .collect()
}

/// Modified energy along every snapshot (in parallel) with the
/// Lipschitz constant of `log(1 + E)`.
pub fn energy_audit(traj: &TrajectoryRecord, f: &PolynomialNonlinearity, r: f64) -> Result<EnergyAudit> {
    if traj.snapshots.is_empty() || traj.snapshots.len() != traj.times.len() {
        return Err(LabError::Mismatch("trajectory has no consistent snapshots".into()));
    }
    if let Some(bad) = traj.snapshots.iter().find(|s| s.cutoff() != traj.config.cutoff) {
        return Err(LabError::Mismatch(format!(
            "snapshot cutoff {} differs from configured {}",
            bad.cutoff(),
            traj.config.cutoff
        )));
    }
    let ladder = CorrectionLadder::new(traj.config.alpha, r)?;
    let rows = traj
        .snapshots
        .par_iter()
        .map(|u| modified_energy(u, f, &ladder))
        .collect::<Result<Vec<_>>>()?;
    let energy: Vec<f64> = rows.iter().map(|b| b.energy).collect();
    let log1p: Vec<f64> = energy.iter().map(|e| e.ln_1p()).collect();
    let lipschitz = finite_difference(&traj.times, &log1p)
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max);
    let nonincreasing = energy.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-12));
    Ok(EnergyAudit {
        eps: traj.config.eps,
        trace: EnergyTrace {
            times: traj.times.clone(),
            energy,
            norm_u: rows.iter().map(|b| b.norm_u).collect(),
            norm_v: rows.iter().map(|b| b.norm_v).collect(),
            l_terms: rows.iter().map(|b| b.corrections.clone()).collect(),
            mean_im: rows.iter().map(|b| b.mean_im).collect(),
            coercivity_ok: rows.iter().map(|b| b.coercivity_ok).collect(),
        },
        lipschitz,
        nonincreasing,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformityReport {
    pub eps: Vec<f64>,
    pub lipschitz: Vec<f64>,
    /// `max / min` of the constants.
    pub spread: f64,
    pub uniform: bool,
}

/// Whether the Lipschitz constants of a family agree within `factor`.
pub fn lipschitz_uniformity(audits: &[EnergyAudit], factor: f64) -> Result<UniformityReport> {
    if audits.is_empty() {
        return Err(LabError::Mismatch("empty audit family".into()));
    }
    let lipschitz: Vec<f64> = audits.iter().map(|a| a.lipschitz).collect();
    let max = lipschitz.iter().copied().fold(0.0, f64::max);
    let min = lipschitz.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if max == 0.0 { 1.0 } else { max / min };
    Ok(UniformityReport {
        eps: audits.iter().map(|a| a.eps).collect(),
        lipschitz,
        spread,
        uniform: spread <= factor,
    })
}

/// Energy audits over a family of trajectories that must share `α` and `K`.
pub fn family_audit(trajs: &[TrajectoryRecord], f: &PolynomialNonlinearity, r: f64) -> Result<Vec<EnergyAudit>> {
    let first = trajs.first().ok_or_else(|| LabError::Mismatch("empty trajectory family".into()))?;
    if trajs
        .iter()
        .any(|t| t.config.alpha != first.config.alpha || t.config.cutoff != first.config.cutoff)
    {
        return Err(LabError::Mismatch("trajectory family mixes dispersion orders or cutoffs".into()));
    }
    trajs.iter().map(|t| energy_audit(t, f, r)).collect()
}

/// Mean of `|⟨D⟩^σ v|²` weighted by `w^n`, evaluated by quadrature on `grid`
/// points; used to cross-check the alias-free path.
pub fn quadrature_correction(w: &SpectralField, g: &SpectralField, n: usize, grid: usize) -> f64 {
    let ws = w.to_physical(grid);
    let gs = g.to_physical(grid);
    ws.iter()
        .zip(&gs)
        .map(|(w, g)| w.re.powi(n as i32) * g.norm_sqr())
        .sum::<f64>()
        / grid as f64
}

/// `∂x^{-1} Im Θ_ω` at full bandwidth.
pub fn correction_weight(u: &SpectralField, f: &PolynomialNonlinearity) -> Result<SpectralField> {
    Ok(Frame::new(u, f)?.w)
}

/// Complex mean `∫ Θ_ω` at full bandwidth.
pub fn theta_mean(u: &SpectralField, f: &PolynomialNonlinearity) -> Result<Complex64> {
    Ok(Frame::new(u, f)?.theta.mean())
}
