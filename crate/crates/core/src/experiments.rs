//! Named experiment presets, artifact directories and parameter sweeps.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{energy_audit, ladder_depth};
use crate::error::{parse_err, LabError, Result};
use crate::estimates::{cancellation_exponent, run_ensemble, EnsembleSpec, Estimate, RatioReport};
use crate::evolution::{convergence_study_eps, default_dt, integrate, linear_symbol, EpsStudy, EvolutionConfig};
use crate::illposed::{
    default_window, directional_growth, nonexistence_verdict, paired_runs, rough_probe_data, Classification, Side,
    VerdictThresholds,
};
use crate::nonlinearity::{
    check_wellposedness_condition, parse_complex, regularity_threshold, CriterionOptions, CriterionVerdict,
    PolynomialNonlinearity, Preset,
};
use crate::sampling;
use crate::spectral::SpectralField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Criterion,
    Energy,
    Growth,
    Exact,
    Estimates,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::Criterion => "criterion",
            Analysis::Energy => "energy",
            Analysis::Growth => "growth",
            Analysis::Exact => "exact",
            Analysis::Estimates => "estimates",
        }
    }
}

impl FromStr for Analysis {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "criterion" => Analysis::Criterion,
            "energy" => Analysis::Energy,
            "growth" => Analysis::Growth,
            "exact" => Analysis::Exact,
            "estimates" => Analysis::Estimates,
            other => return Err(LabError::Config(format!("unknown analysis {other:?}"))),
        })
    }
}

/// How the initial datum is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DataRecipe {
    /// `exponential` for the linear example, `witness` when the criterion
    /// fails, `smooth` otherwise.
    Auto,
    /// Gaussian trigonometric polynomial on `|k| ≤ 8`, `⟨k⟩^{-3}` decay,
    /// rescaled to `L²` norm `amplitude`.
    Smooth,
    /// Criterion witness plus a rough one-sided tail of size `tail`.
    Witness,
    /// `φ̂(k) = e^{-|k|}` up to `2K`.
    Exponential,
}

impl FromStr for DataRecipe {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "auto" => DataRecipe::Auto,
            "smooth" => DataRecipe::Smooth,
            "witness" => DataRecipe::Witness,
            "exponential" => DataRecipe::Exponential,
            other => return Err(LabError::Config(format!("unknown data recipe {other:?}"))),
        })
    }
}

impl fmt::Display for DataRecipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataRecipe::Auto => "auto",
            DataRecipe::Smooth => "smooth",
            DataRecipe::Witness => "witness",
            DataRecipe::Exponential => "exponential",
        })
    }
}

const SMOOTH_BAND: usize = 8;

#[derive(Clone, Debug)]
pub struct ExperimentPreset {
    pub name: String,
    pub preset: Option<Preset>,
    pub nonlinearity: PolynomialNonlinearity,
    pub alpha: f64,
    pub eps: f64,
    pub modes: usize,
    /// `None` picks `default_dt`.
    pub dt: Option<f64>,
    pub horizon: f64,
    pub seed: u64,
    /// Approximate number of stored snapshots.
    pub records: usize,
    pub data: DataRecipe,
    pub amplitude: f64,
    pub tail: f64,
    pub analyses: Vec<Analysis>,
}

impl ExperimentPreset {
    /// A preset by name, e.g. `example_c`, `example_c(i)` or `cubic(2)`.
    pub fn named(spec: &str) -> Result<Self> {
        let preset: Preset = spec.parse()?;
        let analyses = match preset {
            Preset::LinearTransport => vec![Analysis::Criterion, Analysis::Exact, Analysis::Growth],
            _ => vec![Analysis::Criterion, Analysis::Energy, Analysis::Growth],
        };
        Ok(ExperimentPreset {
            name: preset.name().to_string(),
            nonlinearity: preset.nonlinearity(),
            preset: Some(preset),
            alpha: 3.0,
            eps: 0.0,
            modes: 32,
            dt: None,
            horizon: 0.3,
            seed: 0,
            records: 200,
            data: DataRecipe::Auto,
            amplitude: 0.3,
            tail: 0.1,
            analyses,
        })
    }

    /// Parses a flat `key = value` file. A `preset` key, if present, is
    /// applied first; without it the base is `cubic`.
    pub fn from_kv(text: &str) -> Result<Self> {
        let pairs = kv_pairs(text)?;
        let base = pairs.iter().find(|p| p.1 == "preset").map_or("cubic", |p| p.2.as_str());
        let mut exp = Self::named(base)?;
        exp.apply_pairs(&pairs)?;
        Ok(exp)
    }

    /// Applies every key of a `key = value` file except `preset`.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        self.apply_pairs(&kv_pairs(text)?)
    }

    fn apply_pairs(&mut self, pairs: &[(usize, String, String)]) -> Result<()> {
        for (line, k, v) in pairs {
            if k != "preset" {
                self.set(k, v).map_err(|e| parse_err(*line, e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Replaces the nonlinearity by a user polynomial, renaming the run `custom`.
    pub fn with_nonlinearity(mut self, f: PolynomialNonlinearity) -> Self {
        self.name = "custom".into();
        self.preset = None;
        self.nonlinearity = f;
        self
    }

    /// Overrides one parameter by key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let float = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| LabError::Config(format!("{key}: expected a finite number, got {v:?}")))
        };
        let int = |v: &str| -> Result<u64> {
            v.parse::<u64>()
                .map_err(|_| LabError::Config(format!("{key}: expected a non-negative integer, got {v:?}")))
        };
        let complex = |v: &str| parse_complex(v).map_err(|e| LabError::Config(format!("{key}: {e}")));
        match key {
            "alpha" => self.alpha = float(value)?,
            "eps" => self.eps = float(value)?,
            "modes" | "cutoff" => self.modes = int(value)? as usize,
            "dt" => self.dt = Some(float(value)?),
            "horizon" | "T" => self.horizon = float(value)?,
            "seed" => self.seed = int(value)?,
            "records" => self.records = int(value)? as usize,
            "data" => self.data = value.parse()?,
            "amplitude" => self.amplitude = float(value)?,
            "tail" => self.tail = float(value)?,
            "analyses" => {
                self.analyses = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "lambda" | "c" | "m" | "c1" | "c2" => {
                let preset = match (self.preset, key) {
                    (Some(Preset::Cubic { .. }), "lambda") => Preset::Cubic { lambda: float(value)? },
                    (Some(Preset::ExampleB { m, .. }), "c") => Preset::ExampleB { c: complex(value)?, m },
                    (Some(Preset::ExampleB { c, .. }), "m") => {
                        let m = u32::try_from(int(value)?)
                            .map_err(|_| LabError::Config(format!("m out of range: {value}")))?;
                        Preset::ExampleB { c, m }
                    }
                    (Some(Preset::ExampleC { .. }), "c") => Preset::ExampleC { c: complex(value)? },
                    (Some(Preset::ExampleD { c2, .. }), "c1") => Preset::ExampleD { c1: complex(value)?, c2 },
                    (Some(Preset::ExampleD { c1, .. }), "c2") => Preset::ExampleD { c1, c2: complex(value)? },
                    _ => {
                        return Err(LabError::Config(format!(
                            "parameter {key} does not apply to preset {}",
                            self.name
                        )))
                    }
                };
                self.nonlinearity = preset.nonlinearity();
                self.preset = Some(preset);
            }
            other => return Err(LabError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn evolution_config(&self) -> Result<EvolutionConfig> {
        let dt = self.dt.unwrap_or_else(|| default_dt(self.alpha, self.eps, self.modes));
        let mut cfg = EvolutionConfig::new(self.alpha, self.eps, self.modes, self.horizon)?.with_dt(dt);
        cfg.validate()?;
        cfg.record_every = (cfg.steps() / self.records.max(1)).max(1);
        Ok(cfg)
    }

    /// Every parameter, defaults included, in a stable order.
    pub fn echo(&self) -> Result<BTreeMap<String, String>> {
        let cfg = self.evolution_config()?;
        let mut out = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            out.insert(k.to_string(), v);
        };
        put("preset", self.preset.map_or_else(|| self.name.clone(), |p| p.to_string()));
        put("nonlinearity", self.nonlinearity.to_string().trim_end().replace('\n', "; "));
        put("alpha", self.alpha.to_string());
        put("eps", self.eps.to_string());
        put("modes", self.modes.to_string());
        put("dt", cfg.dt.to_string());
        put("horizon", self.horizon.to_string());
        put("record_every", cfg.record_every.to_string());
        put("blowup_ceiling", cfg.blowup_ceiling.to_string());
        put("seed", self.seed.to_string());
        put("records", self.records.to_string());
        put("data", self.data.to_string());
        put("amplitude", self.amplitude.to_string());
        put("tail", self.tail.to_string());
        put(
            "analyses",
            self.analyses.iter().map(|a| a.name()).collect::<Vec<_>>().join(","),
        );
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(LabError::Config("modes must be at least 1".into()));
        }
        if self.analyses.is_empty() {
            return Err(LabError::Config("no analyses selected".into()));
        }
        let mut seen = self.analyses.clone();
        seen.dedup();
        if seen.len() != self.analyses.len() {
            return Err(LabError::Config("analyses listed twice".into()));
        }
        self.evolution_config().map(|_| ())
    }

    fn resolved_recipe(&self, criterion: &CriterionVerdict) -> DataRecipe {
        match self.data {
            DataRecipe::Auto if self.preset == Some(Preset::LinearTransport) => DataRecipe::Exponential,
            DataRecipe::Auto if !criterion.satisfied => DataRecipe::Witness,
            DataRecipe::Auto => DataRecipe::Smooth,
            other => other,
        }
    }

    /// Initial datum and the side where growth is expected.
    pub fn initial_data(&self, criterion: &CriterionVerdict) -> (SpectralField, Side) {
        let side = if criterion.witness_value < 0.0 { Side::Plus } else { Side::Minus };
        let k = self.modes;
        match self.resolved_recipe(criterion) {
            DataRecipe::Exponential => (
                SpectralField::from_fn(2 * k, |m| Complex64::new((-(m.unsigned_abs() as f64)).exp(), 0.0)),
                side,
            ),
            DataRecipe::Witness => {
                let psi = criterion
                    .witness
                    .clone()
                    .unwrap_or_else(|| SpectralField::constant(0, Complex64::new(1.0, 0.0)));
                let s = regularity_threshold(self.alpha) + 0.1;
                (rough_probe_data(&psi, s, k, side, self.tail, self.seed), side)
            }
            _ => {
                let g = sampling::gaussian_field(&mut sampling::rng(self.seed), SMOOTH_BAND.min(k), 3.0);
                let norm = g.l2_norm();
                let phi = if norm > 0.0 { &g * (self.amplitude / norm) } else { g };
                (phi.resized(k), side)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisResult {
    pub name: String,
    pub pass: bool,
    pub metrics: BTreeMap<String, f64>,
}

fn result(name: &str, pass: bool, metrics: &[(&str, f64)]) -> AnalysisResult {
    AnalysisResult {
        name: name.to_string(),
        pass,
        metrics: metrics.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub preset: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub analyses: Vec<AnalysisResult>,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.analyses.iter().all(|a| a.pass)
    }

    pub fn analysis(&self, name: &str) -> Option<&AnalysisResult> {
        self.analyses.iter().find(|a| a.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Summary plus the named files of one run, all held in memory.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub summary: Summary,
    pub artifacts: Vec<(String, String)>,
}

impl Outcome {
    pub fn artifact(&self, name: &str) -> Option<&str> {
        self.artifacts.iter().find(|a| a.0 == name).map(|a| a.1.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, body) in &self.artifacts {
            fs::write(dir.join(name), body)?;
        }
        fs::write(dir.join("summary.json"), self.summary.to_json()?)?;
        Ok(())
    }
}

/// Estimate configurations used by the `estimates` analysis and verb.
pub fn standard_estimates() -> Vec<Estimate> {
    vec![
        Estimate::Bilinear { s0: 0.0, s1: 0.6, s2: 0.6 },
        Estimate::Commutator { s: 1.0, eps: 0.1 },
        Estimate::CommutatorNegative { s: -1.0, eps: 0.1 },
        Estimate::RefinedCommutator { s: 3.0, eps: 0.1 },
    ]
}

/// Ensemble decay used with [`standard_estimates`].
pub const ESTIMATE_DECAY: f64 = 1.0;

pub fn estimate_suite(spec: &EnsembleSpec) -> Result<Vec<RatioReport>> {
    standard_estimates().par_iter().map(|e| run_ensemble(e, spec)).collect()
}

pub fn estimates_csv(reports: &[RatioReport]) -> String {
    let mut out = String::from("estimate,cutoff,max_ratio,median_ratio,growth_factor\n");
    for r in reports {
        out.push_str(&r.csv_rows());
    }
    out
}

const ENERGY_GP: &str = "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\nset ylabel 'E'\nplot 'energy.csv' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines\npause -1\n";
const GROWTH_GP: &str = "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'k'\nset ylabel 'rate'\nplot 'growth.csv' using 1:2 with points, '' using 1:3 with lines\npause -1\n";
const EXACT_GP: &str = "set datafile separator ','\nset key autotitle columnhead\nset logscale y\nset xlabel 't'\nplot 'exact.csv' using 1:2 with lines\npause -1\n";

/// Runs every selected analysis; blowup is recorded, not raised.
pub fn evaluate(exp: &ExperimentPreset) -> Result<Outcome> {
    exp.validate()?;
    let cfg = exp.evolution_config()?;
    let f = &exp.nonlinearity;
    let mut artifacts = vec![("config.kv".to_string(), kv_text(&exp.echo()?))];
    let mut analyses = Vec::new();

    let mut opts = CriterionOptions::for_alpha(exp.alpha);
    opts.seed = exp.seed;
    let criterion = check_wellposedness_condition(f, &opts)?;
    let (phi, side) = exp.initial_data(&criterion);
    let wants = |a: Analysis| exp.analyses.contains(&a);

    if wants(Analysis::Criterion) {
        let witness = criterion.witness.as_ref().map(|w| w.to_csv());
        artifacts.push(("criterion.json".into(), criterion_json(&criterion)?));
        if let Some(w) = witness {
            artifacts.push(("witness.csv".into(), w));
        }
        analyses.push(result(
            "criterion",
            criterion.satisfied,
            &[
                ("witness_value", criterion.witness_value),
                ("trials", criterion.trials as f64),
                ("tolerance", criterion.tolerance),
            ],
        ));
    }

    let needs_paired = wants(Analysis::Growth);
    let (coarse, fine) = if needs_paired {
        let (a, b) = paired_runs(&phi, f, &cfg)?;
        (a, Some(b))
    } else {
        (integrate(&phi.resized(cfg.cutoff.min(phi.cutoff())), f, &cfg)?, None)
    };
    artifacts.push(("trajectory.csv".into(), coarse.to_csv()));
    artifacts.push(("trajectory.json".into(), coarse.sidecar_json()? + "\n"));

    if wants(Analysis::Energy) && criterion.satisfied {
        let r = regularity_threshold(exp.alpha) + 0.1;
        let audit = energy_audit(&coarse, f, r)?;
        let violations = audit.trace.coercivity_violations();
        artifacts.push(("energy.csv".into(), audit.trace.to_csv()));
        artifacts.push(("energy.gp".into(), ENERGY_GP.into()));
        analyses.push(result(
            "energy",
            violations == 0 && !coarse.truncated,
            &[
                ("ladder_depth", ladder_depth(exp.alpha)? as f64),
                ("r", r),
                ("lipschitz", audit.lipschitz),
                ("coercivity_violations", violations as f64),
                ("nonincreasing", flag(audit.nonincreasing)),
                ("energy_initial", audit.trace.energy[0]),
                ("energy_final", *audit.trace.energy.last().unwrap_or(&f64::NAN)),
                ("truncated", flag(coarse.truncated)),
            ],
        ));
    }

    if wants(Analysis::Exact) {
        let (max_err, table) = exact_transport_error(&coarse, &phi);
        artifacts.push(("exact.csv".into(), table));
        artifacts.push(("exact.gp".into(), EXACT_GP.into()));
        analyses.push(result(
            "exact",
            max_err <= 1e-8,
            &[("max_relative_error", max_err), ("tolerance", 1e-8)],
        ));
    }

    if let Some(fine) = fine.as_ref() {
        let report = directional_growth(&coarse, f, side, default_window(exp.horizon), Some(fine))?;
        let verdict = nonexistence_verdict(&report, None, &VerdictThresholds::default())?;
        artifacts.push(("growth.csv".into(), report.to_csv()));
        artifacts.push(("growth.gp".into(), GROWTH_GP.into()));
        artifacts.push(("verdict.json".into(), verdict.to_json_line()? + "\n"));
        let expected = if criterion.satisfied {
            Classification::ConsistentWellposed
        } else {
            Classification::DirectionalGrowthDetected
        };
        analyses.push(result(
            "growth",
            verdict.classification == expected,
            &[
                ("side_plus", flag(side == Side::Plus)),
                ("matching_run", verdict.matching_run as f64),
                ("predicted_slope", verdict.predicted_slope),
                ("divergence", verdict.divergence),
                ("detected", flag(verdict.classification == Classification::DirectionalGrowthDetected)),
                ("consistent", flag(verdict.classification == Classification::ConsistentWellposed)),
                ("coarse_truncated", flag(coarse.truncated)),
                ("fine_truncated", flag(fine.truncated)),
            ],
        ));
    }

    if wants(Analysis::Estimates) {
        let spec = EnsembleSpec {
            cutoffs: vec![16, 32, 64, 128],
            samples_per_cutoff: 8,
            decay: ESTIMATE_DECAY,
            seed: exp.seed,
            adversarial: true,
        };
        let reports = estimate_suite(&spec)?;
        let mut metrics = Vec::new();
        let mut pass = true;
        let names: Vec<String> = reports.iter().map(|r| r.estimate.clone()).collect();
        for (r, name) in reports.iter().zip(&names) {
            let b = r.boundedness(64, 2.0, 0.15);
            pass &= b.bounded;
            metrics.push((name.as_str(), b.slope));
        }
        let s = 3.0;
        let exponent = cancellation_exponent(s, &[16, 32, 64, 128, 256])?;
        pass &= exponent <= s - 2.0 + 0.2;
        metrics.push(("cancellation_exponent", exponent));
        artifacts.push(("estimates.csv".into(), estimates_csv(&reports)));
        analyses.push(result("estimates", pass, &metrics));
    }

    Ok(Outcome {
        summary: Summary {
            preset: exp.name.clone(),
            seed: exp.seed,
            config: exp.echo()?,
            analyses,
        },
        artifacts,
    })
}

/// Evaluates and writes the artifact directory.
pub fn run(exp: &ExperimentPreset, dir: &Path) -> Result<Summary> {
    let outcome = evaluate(exp)?;
    outcome.write(dir)?;
    Ok(outcome.summary)
}

/// The `preset` value of a `key = value` file, if any.
pub fn kv_preset(text: &str) -> Result<Option<String>> {
    Ok(kv_pairs(text)?.into_iter().find(|p| p.1 == "preset").map(|p| p.2))
}

fn kv_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| parse_err(idx + 1, "expected key = value"))?;
        pairs.push((idx + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

fn kv_text(map: &BTreeMap<String, String>) -> String {
    map.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

fn criterion_json(v: &CriterionVerdict) -> Result<String> {
    #[derive(Serialize)]
    struct Row {
        satisfied: bool,
        witness_value: f64,
        trials: usize,
        tolerance: f64,
        witness: Option<Vec<(i64, Complex64)>>,
    }
    let witness = v.witness.as_ref().map(|w| w.modes().collect());
    Ok(serde_json::to_string_pretty(&Row {
        satisfied: v.satisfied,
        witness_value: v.witness_value,
        trials: v.trials,
        tolerance: v.tolerance,
        witness,
    })? + "\n")
}

/// Sup-`k` relative error against `φ̂(k) e^{(−i|k|^α − εk² − k)t}`, per
/// snapshot and overall.
fn exact_transport_error(traj: &crate::evolution::TrajectoryRecord, phi: &SpectralField) -> (f64, String) {
    let cfg = &traj.config;
    let mut table = String::from("t,max_relative_error\n");
    let mut worst: f64 = 0.0;
    for (t, u) in traj.times.iter().zip(&traj.snapshots) {
        let mut err: f64 = 0.0;
        for (k, c) in u.modes() {
            let sym = linear_symbol(k, cfg.alpha, cfg.eps) - Complex64::new(k as f64, 0.0);
            let exact = phi.coeff(k) * (sym * *t).exp();
            if exact.norm() > 0.0 {
                err = err.max((c - exact).norm() / exact.norm());
            }
        }
        worst = worst.max(err);
        table.push_str(&format!("{t},{err:e}\n"));
    }
    (worst, table)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub value: String,
    /// `None` when `α ≤ 2`.
    pub ladder_depth: Option<usize>,
    pub summary: Option<Summary>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepTable {
    pub axis: String,
    pub rows: Vec<SweepRow>,
    /// Pairwise viscosity study, for an `eps` axis with two or more values.
    pub eps_study: Option<EpsStudy>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis,value,ladder_depth,analysis,pass,error\n");
        for row in &self.rows {
            let depth = row.ladder_depth.map_or(String::new(), |d| d.to_string());
            match (&row.summary, &row.error) {
                (Some(s), _) => {
                    for a in &s.analyses {
                        out.push_str(&format!("{},{},{depth},{},{},\n", self.axis, row.value, a.name, a.pass));
                    }
                }
                (None, e) => {
                    let msg = e.as_deref().unwrap_or("").replace([',', '\n'], ";");
                    out.push_str(&format!("{},{},{depth},,false,{msg}\n", self.axis, row.value));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

pub const SWEEP_AXES: [&str; 12] = [
    "alpha", "eps", "modes", "dt", "horizon", "seed", "amplitude", "tail", "lambda", "c", "c1", "c2",
];

/// Runs `base` once per value of `axis` in parallel. Failures are kept per
/// row; an empty value list gives an empty table.
pub fn sweep(base: &ExperimentPreset, axis: &str, values: &[String]) -> Result<SweepTable> {
    if !SWEEP_AXES.contains(&axis) {
        return Err(LabError::Config(format!("cannot sweep over {axis:?}")));
    }
    let rows = values
        .par_iter()
        .map(|v| {
            let mut exp = base.clone();
            let outcome = exp.set(axis, v).and_then(|_| evaluate(&exp));
            let (summary, error) = match outcome {
                Ok(o) => (Some(o.summary), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SweepRow {
                value: v.clone(),
                ladder_depth: ladder_depth(exp.alpha).ok(),
                summary,
                error,
            }
        })
        .collect();
    let eps_study = if axis == "eps" && values.len() >= 2 {
        let eps = values
            .iter()
            .map(|v| v.parse::<f64>().map_err(|_| LabError::Config(format!("bad eps value {v:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let mut smooth = base.clone();
        smooth.data = DataRecipe::Smooth;
        let criterion = CriterionVerdict {
            satisfied: true,
            witness: None,
            witness_value: 0.0,
            trials: 0,
            tolerance: 0.0,
        };
        let (phi, _) = smooth.initial_data(&criterion);
        let cfg = smooth.evolution_config()?;
        Some(convergence_study_eps(&phi, &smooth.nonlinearity, &cfg, &eps)?)
    } else {
        None
    };
    Ok(SweepTable {
        axis: axis.to_string(),
        rows,
        eps_study,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_and_echo() {
        let mut e = ExperimentPreset::named("example_c").unwrap();
        e.set("c", "i").unwrap();
        e.set("modes", "16").unwrap();
        assert_eq!(e.preset, Some(Preset::ExampleC { c: Complex64::new(0.0, 1.0) }));
        let echo = e.echo().unwrap();
        assert_eq!(echo["modes"], "16");
        assert_eq!(echo["preset"], "example_c(1i)");
        assert!(e.set("m", "2").is_err());
        assert!(e.set("bogus", "1").is_err());
        assert!(e.set("alpha", "nan").is_err());
    }

    #[test]
    fn kv_file_applies_preset_first() {
        let e = ExperimentPreset::from_kv("modes = 8\npreset = example_b\nc = 2\nm = 3\n").unwrap();
        assert_eq!(e.preset, Some(Preset::ExampleB { c: Complex64::new(2.0, 0.0), m: 3 }));
        assert_eq!(e.modes, 8);
        let err = ExperimentPreset::from_kv("alpha = 3\nfoo = 1\n").unwrap_err();
        assert!(matches!(err, LabError::Parse { line: 2, .. }));
    }

    #[test]
    fn empty_sweep_is_empty() {
        let e = ExperimentPreset::named("cubic").unwrap();
        let t = sweep(&e, "eps", &[]).unwrap();
        assert!(t.rows.is_empty());
        assert!(t.eps_study.is_none());
        assert_eq!(t.to_csv().lines().count(), 1);
    }

    #[test]
    fn alpha_sweep_reports_depths() {
        let mut e = ExperimentPreset::named("cubic").unwrap();
        e.modes = 8;
        e.horizon = 0.05;
        e.analyses = vec![Analysis::Criterion, Analysis::Energy];
        let values: Vec<String> = ["2.5", "3", "4"].iter().map(|s| s.to_string()).collect();
        let t = sweep(&e, "alpha", &values).unwrap();
        let depths: Vec<Option<usize>> = t.rows.iter().map(|r| r.ladder_depth).collect();
        assert_eq!(depths, vec![Some(2), Some(1), Some(1)]);
        assert!(t.rows.iter().all(|r| r.summary.as_ref().is_some_and(Summary::all_pass)));
    }

    #[test]
    fn sweep_isolates_failures() {
        let mut e = ExperimentPreset::named("cubic").unwrap();
        e.modes = 4;
        e.horizon = 0.02;
        e.analyses = vec![Analysis::Criterion];
        let values: Vec<String> = ["1.5", "3"].iter().map(|s| s.to_string()).collect();
        let t = sweep(&e, "alpha", &values).unwrap();
        assert!(t.rows[0].error.is_some());
        assert!(t.rows[1].summary.is_some());
    }

    #[test]
    fn witness_side_follows_sign() {
        let e = ExperimentPreset::named("example_c(i)").unwrap();
        let mut v = check_wellposedness_condition(&e.nonlinearity, &CriterionOptions::default()).unwrap();
        assert!(!v.satisfied);
        assert_eq!(e.initial_data(&v).1, Side::Minus);
        v.witness_value = -v.witness_value;
        assert_eq!(e.initial_data(&v).1, Side::Plus);
    }
}
