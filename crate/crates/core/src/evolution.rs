//! Time integration of `∂t u + iD^α u − ε∂x²u = F(u, ∂x u, ū, conj ∂x u)`.
//!
//! The Galerkin system on modes `|k| ≤ K` is advanced with a Lawson
//! (integrating-factor) RK4 scheme. The linear symbol `−i|k|^α − εk²`,
//! together with any `aζ + bω` part of `F`, is propagated exactly.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{parse_err, LabError, Result};
use crate::nonlinearity::{evaluate, PolynomialNonlinearity};
use crate::spectral::{parse_finite, SpectralField};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Ifrk4,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ifrk4")
    }
}

impl FromStr for Scheme {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ifrk4" => Ok(Scheme::Ifrk4),
            other => Err(LabError::Config(format!("unknown scheme {other:?}"))),
        }
    }
}

pub const DEFAULT_BLOWUP_CEILING: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub alpha: f64,
    pub eps: f64,
    pub cutoff: usize,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub record_every: usize,
    /// Runs stop once `‖u‖_{H¹}` exceeds this.
    pub blowup_ceiling: f64,
}

/// `1e-3`, reduced like `K^{-α/2}` for the inviscid flow.
pub fn default_dt(alpha: f64, eps: f64, cutoff: usize) -> f64 {
    if eps > 0.0 {
        1e-3
    } else {
        1e-3_f64.min(0.25 * (cutoff.max(1) as f64).powf(-alpha / 2.0))
    }
}

impl EvolutionConfig {
    pub fn new(alpha: f64, eps: f64, cutoff: usize, horizon: f64) -> Result<Self> {
        let cfg = EvolutionConfig {
            alpha,
            eps,
            cutoff,
            dt: default_dt(alpha, eps, cutoff),
            horizon,
            scheme: Scheme::Ifrk4,
            record_every: 1,
            blowup_ceiling: DEFAULT_BLOWUP_CEILING,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 2.0) || !self.alpha.is_finite() {
            return Err(LabError::DispersionOrder(self.alpha));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(LabError::Config(format!("eps must be finite and non-negative, got {}", self.eps)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(LabError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return Err(LabError::Config(format!(
                "horizon {} must be finite and at least dt = {}",
                self.horizon, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(LabError::Config("record_every must be at least 1".into()));
        }
        if !(self.blowup_ceiling > 0.0) {
            return Err(LabError::Config("blowup_ceiling must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps; the effective step is `horizon / steps`.
    pub fn steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }

    pub fn effective_dt(&self) -> f64 {
        self.horizon / self.steps() as f64
    }

    /// Parses `key = value` lines. Keys: `alpha`, `eps`, `modes` (or
    /// `cutoff`), `dt`, `horizon` (or `T`), `scheme`, `record_every`,
    /// `blowup_ceiling`. `alpha`, `modes` and `horizon` are required.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut alpha = None;
        let mut eps = 0.0;
        let mut cutoff = None;
        let mut dt = None;
        let mut horizon = None;
        let mut scheme = Scheme::Ifrk4;
        let mut record_every = 1usize;
        let mut ceiling = DEFAULT_BLOWUP_CEILING;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let n = idx + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(n, "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            let int = |v: &str| v.parse::<usize>().map_err(|_| parse_err(n, format!("bad integer {v:?}")));
            match key {
                "alpha" => alpha = Some(parse_finite(value, n)?),
                "eps" => eps = parse_finite(value, n)?,
                "modes" | "cutoff" => cutoff = Some(int(value)?),
                "dt" => dt = Some(parse_finite(value, n)?),
                "horizon" | "T" => horizon = Some(parse_finite(value, n)?),
                "scheme" => scheme = value.parse().map_err(|_| parse_err(n, format!("unknown scheme {value:?}")))?,
                "record_every" => record_every = int(value)?,
                "blowup_ceiling" => ceiling = parse_finite(value, n)?,
                other => return Err(parse_err(n, format!("unknown key {other:?}"))),
            }
        }
        let alpha = alpha.ok_or_else(|| LabError::Config("missing key alpha".into()))?;
        let cutoff = cutoff.ok_or_else(|| LabError::Config("missing key modes".into()))?;
        let horizon = horizon.ok_or_else(|| LabError::Config("missing key horizon".into()))?;
        let cfg = EvolutionConfig {
            alpha,
            eps,
            cutoff,
            dt: dt.unwrap_or_else(|| default_dt(alpha, eps, cutoff)),
            horizon,
            scheme,
            record_every,
            blowup_ceiling: ceiling,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        format!(
            "alpha = {}\neps = {}\nmodes = {}\ndt = {}\nhorizon = {}\nscheme = {}\nrecord_every = {}\nblowup_ceiling = {}\n",
            self.alpha, self.eps, self.cutoff, self.dt, self.horizon, self.scheme, self.record_every, self.blowup_ceiling
        )
    }
}

/// Linear symbol `−i|k|^α − εk²` at mode `k`.
pub fn linear_symbol(k: i64, alpha: f64, eps: f64) -> Complex64 {
    let kf = k as f64;
    Complex64::new(-eps * kf * kf, -kf.abs().powf(alpha))
}

/// `e^{t(−iD^α + ε∂x²)} f`.
pub fn linear_semigroup_apply(f: &SpectralField, t: f64, alpha: f64, eps: f64) -> Result<SpectralField> {
    if eps > 0.0 && t < 0.0 {
        return Err(LabError::BackwardHeat { t, eps });
    }
    if !(alpha >= 0.0) {
        return Err(LabError::NegativeOrder(alpha));
    }
    Ok(f.multiplier(|k| (linear_symbol(k, alpha, eps) * t).exp()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub snapshots: Vec<SpectralField>,
    pub config: EvolutionConfig,
    /// Set when the run stopped early on a non-finite or oversized state.
    pub truncated: bool,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    config: EvolutionConfig,
    truncated: bool,
    snapshots: usize,
    final_time: f64,
}

impl TrajectoryRecord {
    pub fn final_state(&self) -> &SpectralField {
        self.snapshots.last().expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial time")
    }

    /// Long format `t,k,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,k,re,im\n");
        for (t, snap) in self.times.iter().zip(&self.snapshots) {
            for (k, c) in snap.modes() {
                out.push_str(&format!("{t:e},{k},{:e},{:e}\n", c.re, c.im));
            }
        }
        out
    }

    /// Reads the long CSV format back. Rows for one time must be contiguous.
    pub fn from_csv(text: &str, config: EvolutionConfig) -> Result<Self> {
        let cutoff = config.cutoff as i64;
        let mut times: Vec<f64> = Vec::new();
        let mut snapshots: Vec<SpectralField> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let n = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line == "t,k,re,im" {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(parse_err(n, format!("expected 4 fields, found {}", cols.len())));
            }
            let t = parse_finite(cols[0], n)?;
            let k: i64 = cols[1].parse().map_err(|_| parse_err(n, format!("bad mode {:?}", cols[1])))?;
            if k.abs() > cutoff {
                return Err(parse_err(n, format!("mode {k} outside cutoff {cutoff}")));
            }
            let c = Complex64::new(parse_finite(cols[2], n)?, parse_finite(cols[3], n)?);
            if times.last() != Some(&t) {
                if times.last().is_some_and(|&last| t <= last) {
                    return Err(parse_err(n, "times must increase"));
                }
                times.push(t);
                snapshots.push(SpectralField::zeros(config.cutoff));
            }
            snapshots.last_mut().expect("pushed above").set(k, c);
        }
        if times.is_empty() {
            return Err(parse_err(0, "no rows"));
        }
        Ok(TrajectoryRecord {
            times,
            snapshots,
            config,
            truncated: false,
        })
    }

    pub fn sidecar_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Sidecar {
            config: self.config.clone(),
            truncated: self.truncated,
            snapshots: self.snapshots.len(),
            final_time: self.final_time(),
        })?)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        let csv = dir.join(format!("{stem}.csv"));
        let json = dir.join(format!("{stem}.json"));
        fs::write(&csv, self.to_csv())?;
        fs::write(&json, self.sidecar_json()? + "\n")?;
        Ok((csv, json))
    }

    /// Reads a pair written by [`TrajectoryRecord::write`].
    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        let mut rec = Self::from_csv(&fs::read_to_string(dir.join(format!("{stem}.csv")))?, sidecar.config)?;
        rec.truncated = sidecar.truncated;
        Ok(rec)
    }
}

struct Stepper<'a> {
    rest: &'a PolynomialNonlinearity,
    cutoff: usize,
    full: Vec<Complex64>,
    half: Vec<Complex64>,
    h: f64,
}

impl Stepper<'_> {
    fn rhs(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.rest.is_zero() {
            return Ok(vec![Complex64::new(0.0, 0.0); u.len()]);
        }
        let field = SpectralField::from_coeffs(u.to_vec())?;
        Ok(evaluate(self.rest, &field)?.coeffs().to_vec())
    }

    fn step(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        let (h, e1, e2) = (self.h, &self.full, &self.half);
        let n = u.len();
        let k1 = self.rhs(u)?;
        let a: Vec<_> = (0..n).map(|j| e2[j] * (u[j] + k1[j] * (h / 2.0))).collect();
        let k2 = self.rhs(&a)?;
        let b: Vec<_> = (0..n).map(|j| e2[j] * u[j] + k2[j] * (h / 2.0)).collect();
        let k3 = self.rhs(&b)?;
        let c: Vec<_> = (0..n).map(|j| e1[j] * u[j] + e2[j] * k3[j] * h).collect();
        let k4 = self.rhs(&c)?;
        Ok((0..n)
            .map(|j| e1[j] * u[j] + (e1[j] * k1[j] + e2[j] * (k2[j] + k3[j]) * 2.0 + k4[j]) * (h / 6.0))
            .collect())
    }
}

/// Advances `φ` under the Galerkin flow with `|k| ≤ cfg.cutoff`.
pub fn integrate(phi: &SpectralField, f: &PolynomialNonlinearity, cfg: &EvolutionConfig) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    if phi.cutoff() > cfg.cutoff {
        return Err(LabError::Mismatch(format!(
            "initial cutoff {} exceeds run cutoff {}",
            phi.cutoff(),
            cfg.cutoff
        )));
    }
    let (a, b, rest) = f.split_diagonal_linear();
    let steps = cfg.steps();
    let h = cfg.effective_dt();
    let symbol = |k: i64| linear_symbol(k, cfg.alpha, cfg.eps) + a + b * Complex64::new(0.0, k as f64);
    let k0 = cfg.cutoff as i64;
    let stepper = Stepper {
        rest: &rest,
        cutoff: cfg.cutoff,
        full: (-k0..=k0).map(|k| (symbol(k) * h).exp()).collect(),
        half: (-k0..=k0).map(|k| (symbol(k) * (h / 2.0)).exp()).collect(),
        h,
    };

    let start = phi.resized(cfg.cutoff);
    let mut u = start.coeffs().to_vec();
    let mut rec = TrajectoryRecord {
        times: vec![0.0],
        snapshots: vec![start],
        config: cfg.clone(),
        truncated: false,
    };
    for n in 1..=steps {
        u = stepper.step(&u)?;
        let field = SpectralField::from_coeffs(u.clone())?;
        debug_assert_eq!(field.cutoff(), stepper.cutoff);
        if !field.is_finite() || field.sobolev_norm(1.0) > cfg.blowup_ceiling {
            rec.truncated = true;
            break;
        }
        if n % cfg.record_every == 0 || n == steps {
            rec.times.push(n as f64 * h);
            rec.snapshots.push(field);
        }
    }
    Ok(rec)
}

/// `sup_t ‖a(t) − b(t)‖_{H^s}` over the times both records share.
/// Records of different cutoffs are compared after zero padding.
pub fn sup_sobolev_gap(a: &TrajectoryRecord, b: &TrajectoryRecord, s: f64) -> f64 {
    let cutoff = a.config.cutoff.max(b.config.cutoff);
    let (mut i, mut j) = (0, 0);
    let mut gap: f64 = 0.0;
    while i < a.times.len() && j < b.times.len() {
        let (ta, tb) = (a.times[i], b.times[j]);
        if (ta - tb).abs() <= 1e-9 * ta.abs().max(1.0) {
            let d = a.snapshots[i].resized(cutoff).sobolev_distance(&b.snapshots[j].resized(cutoff), s);
            gap = gap.max(d);
            i += 1;
            j += 1;
        } else if ta < tb {
            i += 1;
        } else {
            j += 1;
        }
    }
    gap
}

pub fn sup_l2_gap(a: &TrajectoryRecord, b: &TrajectoryRecord) -> f64 {
    sup_sobolev_gap(a, b, 0.0)
}

fn require_complete(rec: &TrajectoryRecord) -> Result<()> {
    if rec.truncated {
        Err(LabError::Blowup { t: rec.final_time() })
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsStudy {
    pub eps: Vec<f64>,
    /// `(i, j, sup_t ‖u^{ε_i} − u^{ε_j}‖_{L²})` for `i < j`.
    pub differences: Vec<(usize, usize, f64)>,
    /// Least-squares slope of `log diff` against `log |ε_i − ε_j|`.
    pub beta: Option<f64>,
}

/// Least-squares slope of `y` against `x`; `None` for fewer than two distinct `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 1e-300).then(|| sxy / sxx)
}

/// Runs one trajectory per viscosity (in parallel) and compares all pairs.
pub fn convergence_study_eps(
    phi: &SpectralField,
    f: &PolynomialNonlinearity,
    cfg: &EvolutionConfig,
    eps_list: &[f64],
) -> Result<EpsStudy> {
    if eps_list.len() < 2 {
        return Err(LabError::Config("need at least two viscosities".into()));
    }
    let runs = eps_list
        .par_iter()
        .map(|&eps| integrate(phi, f, &cfg.clone().with_eps(eps)))
        .collect::<Result<Vec<_>>>()?;
    runs.iter().try_for_each(require_complete)?;
    let mut differences = Vec::new();
    let mut points = Vec::new();
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            let d = sup_l2_gap(&runs[i], &runs[j]);
            differences.push((i, j, d));
            let de = (eps_list[i] - eps_list[j]).abs();
            if de > 0.0 && d > 0.0 {
                points.push((de.ln(), d.ln()));
            }
        }
    }
    Ok(EpsStudy {
        eps: eps_list.to_vec(),
        differences,
        beta: fit_slope(&points),
    })
}

/// Empirical Lipschitz ratio `sup_t ‖u[φ+δψ] − u[φ]‖_{H¹} / ‖δψ‖_{H¹}`;
/// zero when `δψ = 0`.
pub fn continuity_probe(
    phi: &SpectralField,
    delta: &SpectralField,
    f: &PolynomialNonlinearity,
    cfg: &EvolutionConfig,
) -> Result<f64> {
    let size = delta.sobolev_norm(1.0);
    if size == 0.0 {
        return Ok(0.0);
    }
    let cutoff = phi.cutoff().max(delta.cutoff());
    let perturbed = &phi.resized(cutoff) + &delta.resized(cutoff);
    let (base, moved) = rayon::join(|| integrate(phi, f, cfg), || integrate(&perturbed, f, cfg));
    let (base, moved) = (base?, moved?);
    require_complete(&base)?;
    require_complete(&moved)?;
    Ok(sup_sobolev_gap(&base, &moved, 1.0) / size)
}

/// Sharp truncation to `|k| ≤ μ`, keeping the cutoff.
pub fn bona_smith_truncate(phi: &SpectralField, mu: usize) -> SpectralField {
    phi.map_modes(|k, c| if k.unsigned_abs() as usize <= mu { c } else { Complex64::new(0.0, 0.0) })
}
