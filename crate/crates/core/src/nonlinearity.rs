//! Polynomial nonlinearities `F(ζ, ω, ζ̄, ω̄)` and the well-posedness criterion.
//!
//! A nonlinearity is stored as a finite map from exponent multi-indices
//! `(a, b, c, d)` to complex coefficients, representing
//! `Σ C_{abcd} ζ^a ω^b ζ̄^c ω̄^d`. Wirtinger derivatives act on the formal
//! polynomial with the four variables treated as independent. Along a field
//! `u` the variables are substituted by `u, ∂x u, ū, conj(∂x u)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{parse_err, LabError, Result};
use crate::sampling;
use crate::spectral::{padded_grid_len, parse_finite, SpectralField};

/// Exponents of `ζ, ω, ζ̄, ω̄`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Monomial {
    pub zeta: u32,
    pub omega: u32,
    pub zeta_bar: u32,
    pub omega_bar: u32,
}

impl Monomial {
    pub const fn new(zeta: u32, omega: u32, zeta_bar: u32, omega_bar: u32) -> Self {
        Monomial {
            zeta,
            omega,
            zeta_bar,
            omega_bar,
        }
    }

    pub fn degree(&self) -> u32 {
        self.zeta + self.omega + self.zeta_bar + self.omega_bar
    }

    fn exponent(&self, var: Variable) -> u32 {
        match var {
            Variable::Zeta => self.zeta,
            Variable::Omega => self.omega,
            Variable::ZetaBar => self.zeta_bar,
            Variable::OmegaBar => self.omega_bar,
        }
    }

    fn lowered(&self, var: Variable) -> Monomial {
        let mut m = *self;
        match var {
            Variable::Zeta => m.zeta -= 1,
            Variable::Omega => m.omega -= 1,
            Variable::ZetaBar => m.zeta_bar -= 1,
            Variable::OmegaBar => m.omega_bar -= 1,
        }
        m
    }

    #[inline]
    fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        z.powu(self.zeta) * w.powu(self.omega) * z.conj().powu(self.zeta_bar) * w.conj().powu(self.omega_bar)
    }
}

/// The four formal variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variable {
    Zeta,
    Omega,
    ZetaBar,
    OmegaBar,
}

impl Variable {
    pub const ALL: [Variable; 4] = [Variable::Zeta, Variable::Omega, Variable::ZetaBar, Variable::OmegaBar];
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolynomialNonlinearity {
    terms: BTreeMap<Monomial, Complex64>,
}

impl PolynomialNonlinearity {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Complex64)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Accumulates `c · m`; coefficients that cancel to zero are removed.
    pub fn add_term(&mut self, m: Monomial, c: Complex64) {
        let entry = self.terms.entry(m).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if *entry == Complex64::new(0.0, 0.0) {
            self.terms.remove(&m);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: Monomial) -> Complex64 {
        self.terms.get(&m).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree `max(a+b+c+d)`; zero for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|m| m.degree() as usize).max().unwrap_or(0)
    }

    pub fn depends_on(&self, var: Variable) -> bool {
        self.terms.keys().any(|m| m.exponent(var) > 0)
    }

    pub fn wirtinger(&self, var: Variable) -> Self {
        Self::from_terms(self.terms.iter().filter_map(|(m, &c)| {
            let e = m.exponent(var);
            (e > 0).then(|| (m.lowered(var), c * e as f64))
        }))
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, &c)| (*m, a * c)))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().chain(other.terms.iter()).map(|(m, &c)| (*m, c)))
    }

    /// Same monomials with conjugated coefficients.
    pub fn conjugate(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, &c)| (*m, c.conj())))
    }

    /// Splits off the terms `a ζ + b ω`, which act diagonally in Fourier space.
    pub fn split_diagonal_linear(&self) -> (Complex64, Complex64, Self) {
        let zeta = Monomial::new(1, 0, 0, 0);
        let omega = Monomial::new(0, 1, 0, 0);
        let rest = Self::from_terms(
            self.terms
                .iter()
                .filter(|(m, _)| **m != zeta && **m != omega)
                .map(|(m, &c)| (*m, c)),
        );
        (self.coefficient(zeta), self.coefficient(omega), rest)
    }

    /// Value at a single point.
    pub fn eval_point(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.terms.iter().map(|(m, &c)| c * m.eval(z, w)).sum()
    }

    /// Parses the one-term-per-line text format `a b c d re im`.
    /// Blank lines and `#` comments are ignored.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut p = Self::zero();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 6 {
                return Err(parse_err(idx + 1, format!("expected 6 fields, found {}", cols.len())));
            }
            let mut exps = [0u32; 4];
            for (e, col) in exps.iter_mut().zip(&cols[..4]) {
                *e = col
                    .parse()
                    .map_err(|_| parse_err(idx + 1, format!("bad exponent {col:?}")))?;
                if *e > MAX_EXPONENT {
                    return Err(parse_err(idx + 1, format!("exponent {e} exceeds {MAX_EXPONENT}")));
                }
            }
            let re = parse_finite(cols[4], idx + 1)?;
            let im = parse_finite(cols[5], idx + 1)?;
            p.add_term(Monomial::new(exps[0], exps[1], exps[2], exps[3]), Complex64::new(re, im));
        }
        Ok(p)
    }

    /// Samples of `F(u, ∂x u, ū, conj ∂x u)` on a grid of length `m`.
    fn sample(&self, u: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
        u.iter().zip(v).map(|(&z, &w)| self.eval_point(z, w)).collect()
    }
}

/// Largest exponent accepted by the text parser.
pub const MAX_EXPONENT: u32 = 16;

impl fmt::Display for PolynomialNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (m, c) in &self.terms {
            writeln!(
                f,
                "{} {} {} {} {:e} {:e}",
                m.zeta, m.omega, m.zeta_bar, m.omega_bar, c.re, c.im
            )?;
        }
        Ok(())
    }
}

/// Physical samples of `u` and `∂x u` on a shared grid.
struct Sampled {
    m: usize,
    u: Vec<Complex64>,
    v: Vec<Complex64>,
}

impl Sampled {
    fn new(u: &SpectralField, m: usize) -> Self {
        Sampled {
            m,
            u: u.to_physical(m),
            v: u.dx().to_physical(m),
        }
    }
}

/// `F(u, ∂x u, ū, conj ∂x u)` with modes `|k| ≤ u.cutoff()`, alias-free.
pub fn evaluate(f: &PolynomialNonlinearity, u: &SpectralField) -> Result<SpectralField> {
    evaluate_to(f, u, u.cutoff())
}

/// As [`evaluate`], keeping modes `|k| ≤ out_cutoff`. With
/// `out_cutoff = degree · K` nothing is truncated.
pub fn evaluate_to(f: &PolynomialNonlinearity, u: &SpectralField, out_cutoff: usize) -> Result<SpectralField> {
    if f.is_zero() {
        return Ok(SpectralField::zeros(out_cutoff));
    }
    let m = padded_grid_len(f.degree().max(1), u.cutoff(), out_cutoff)?;
    let s = Sampled::new(u, m);
    Ok(SpectralField::from_physical(f.sample(&s.u, &s.v), out_cutoff))
}

/// Full-bandwidth evaluation: every mode of the product is kept.
pub fn evaluate_full(f: &PolynomialNonlinearity, u: &SpectralField) -> Result<SpectralField> {
    evaluate_to(f, u, f.degree().max(1) * u.cutoff())
}

/// Directional derivative `d/dh G(u + h w)|_{h=0}`
/// `= G_ζ w + G_ω ∂x w + G_ζ̄ w̄ + G_ω̄ conj(∂x w)` along `u`.
pub fn evaluate_tangent(
    g: &PolynomialNonlinearity,
    u: &SpectralField,
    w: &SpectralField,
    out_cutoff: usize,
) -> Result<SpectralField> {
    let cutoff = u.cutoff().max(w.cutoff());
    if g.is_zero() {
        return Ok(SpectralField::zeros(out_cutoff));
    }
    let m = padded_grid_len(g.degree().max(1), cutoff, out_cutoff)?;
    let s = Sampled::new(u, m);
    let wz = w.to_physical(m);
    let ww = w.dx().to_physical(m);
    let parts = Variable::ALL.map(|var| g.wirtinger(var));
    let samples = (0..s.m)
        .map(|j| {
            let (z, o) = (s.u[j], s.v[j]);
            parts[0].eval_point(z, o) * wz[j]
                + parts[1].eval_point(z, o) * ww[j]
                + parts[2].eval_point(z, o) * wz[j].conj()
                + parts[3].eval_point(z, o) * ww[j].conj()
        })
        .collect();
    Ok(SpectralField::from_physical(samples, out_cutoff))
}

/// Coefficient fields of the equation for `v = ∂x u`:
/// `∂t v + iD^α v = Θ_ω ∂x v + Θ_ω̄ conj(∂x v) + R` with `R = Θ_ζ v + Θ_ζ̄ v̄`.
#[derive(Clone, Debug)]
pub struct DerivedSystem {
    pub theta_omega: SpectralField,
    pub theta_omega_bar: SpectralField,
    pub remainder: SpectralField,
}

pub fn derived_system_rhs(f: &PolynomialNonlinearity, u: &SpectralField) -> Result<DerivedSystem> {
    derived_system_rhs_to(f, u, u.cutoff())
}

pub fn derived_system_rhs_to(f: &PolynomialNonlinearity, u: &SpectralField, out_cutoff: usize) -> Result<DerivedSystem> {
    let f_omega = f.wirtinger(Variable::Omega);
    let f_omega_bar = f.wirtinger(Variable::OmegaBar);
    let f_zeta = f.wirtinger(Variable::Zeta);
    let f_zeta_bar = f.wirtinger(Variable::ZetaBar);
    let m = padded_grid_len(f.degree().max(1), u.cutoff(), out_cutoff)?;
    let s = Sampled::new(u, m);
    let rem: Vec<Complex64> = (0..m)
        .map(|j| {
            let (z, o) = (s.u[j], s.v[j]);
            f_zeta.eval_point(z, o) * o + f_zeta_bar.eval_point(z, o) * o.conj()
        })
        .collect();
    Ok(DerivedSystem {
        theta_omega: SpectralField::from_physical(f_omega.sample(&s.u, &s.v), out_cutoff),
        theta_omega_bar: SpectralField::from_physical(f_omega_bar.sample(&s.u, &s.v), out_cutoff),
        remainder: SpectralField::from_physical(rem, out_cutoff),
    })
}

/// `G(ψ) = ∫_T Im F_ω(ψ, ∂x ψ, ψ̄, conj ∂x ψ) dx`, the mean of `Im F_ω` along `ψ`.
pub fn criterion_functional(f: &PolynomialNonlinearity, psi: &SpectralField) -> Result<f64> {
    let f_omega = f.wirtinger(Variable::Omega);
    criterion_of_derivative(&f_omega, psi)
}

fn criterion_of_derivative(f_omega: &PolynomialNonlinearity, psi: &SpectralField) -> Result<f64> {
    if f_omega.is_zero() {
        return Ok(0.0);
    }
    Ok(evaluate_to(f_omega, psi, 0)?.mean().im)
}

/// Regularity threshold `s₀(α) = max(α/2 + 1, 5/2)`.
pub fn regularity_threshold(alpha: f64) -> f64 {
    (alpha / 2.0 + 1.0).max(2.5)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionOptions {
    /// Random trials per cutoff.
    pub trials: usize,
    pub cutoffs: Vec<usize>,
    pub tol: f64,
    pub seed: u64,
    /// Random coefficients decay like `⟨k⟩^{-decay}`.
    pub decay: f64,
}

impl CriterionOptions {
    pub fn for_alpha(alpha: f64) -> Self {
        CriterionOptions {
            trials: 64,
            cutoffs: vec![2, 4, 8],
            tol: 1e-9,
            seed: 0,
            decay: regularity_threshold(alpha) + 1.0,
        }
    }
}

impl Default for CriterionOptions {
    fn default() -> Self {
        Self::for_alpha(3.0)
    }
}

#[derive(Clone, Debug)]
pub struct CriterionVerdict {
    pub satisfied: bool,
    pub witness: Option<SpectralField>,
    pub witness_value: f64,
    /// Number of functional evaluations performed.
    pub trials: usize,
    pub tolerance: f64,
}

fn unit(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// Human-readable witness families, tried tier by tier.
fn structured_tiers(max_cutoff: usize) -> Vec<Vec<SpectralField>> {
    use std::f64::consts::PI;
    let angles16: Vec<f64> = (0..16).map(|j| j as f64 * PI / 8.0).collect();
    let angles8: Vec<f64> = (0..8).map(|j| j as f64 * PI / 4.0).collect();
    let unit_constants = angles16
        .iter()
        .map(|&t| SpectralField::constant(0, unit(t)))
        .collect();
    let scaled_constants = [0.5, 2.0]
        .iter()
        .flat_map(|&r| angles16.iter().map(move |&t| SpectralField::constant(0, unit(t) * r)))
        .collect();
    let first_modes = [1i64, -1]
        .iter()
        .flat_map(|&k| angles8.iter().map(move |&t| SpectralField::mode(1, k, unit(t))))
        .collect();
    let higher_modes = (2..=max_cutoff.max(2) as i64)
        .flat_map(|n| [n, -n])
        .flat_map(|k| angles8.iter().map(move |&t| SpectralField::mode(k.unsigned_abs() as usize, k, unit(t))))
        .collect();
    let mut pairs = Vec::new();
    for k1 in -2i64..=2 {
        for k2 in (k1 + 1)..=2 {
            for b in [unit(0.0), unit(PI / 2.0), unit(PI), unit(1.5 * PI)] {
                let mut f = SpectralField::zeros(2);
                f.set(k1, Complex64::new(1.0, 0.0));
                f.set(k2, b);
                pairs.push(f);
            }
        }
    }
    vec![unit_constants, scaled_constants, first_modes, higher_modes, pairs]
}

/// Index and value of the largest `|G|`, ties resolved toward the first.
fn argmax_abs(values: &[f64]) -> Option<(usize, f64)> {
    values
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &g)| match best {
            Some((_, b)) if b.abs() >= g.abs() => best,
            _ => Some((i, g)),
        })
}

/// Randomized test of `∫ Im F_ω(ψ, ...) dx = 0` for all `ψ`.
///
/// Structured witnesses (constants, single modes, two-mode sums) are tried
/// first; within the first family that contains a violation the maximizing
/// witness is returned. Otherwise random trigonometric polynomials are drawn
/// at each cutoff. `satisfied` holds iff every evaluated `|G|` is within
/// `tol`; on that side the verdict is probabilistic.
pub fn check_wellposedness_condition(f: &PolynomialNonlinearity, opts: &CriterionOptions) -> Result<CriterionVerdict> {
    let f_omega = f.wirtinger(Variable::Omega);
    let mut evaluations = 0usize;
    let max_cutoff = opts.cutoffs.iter().copied().max().unwrap_or(2);

    for tier in structured_tiers(max_cutoff) {
        let values = tier
            .par_iter()
            .map(|psi| criterion_of_derivative(&f_omega, psi))
            .collect::<Result<Vec<f64>>>()?;
        evaluations += values.len();
        if let Some((i, g)) = argmax_abs(&values) {
            if g.abs() > opts.tol {
                return Ok(CriterionVerdict {
                    satisfied: false,
                    witness: Some(tier[i].clone()),
                    witness_value: g,
                    trials: evaluations,
                    tolerance: opts.tol,
                });
            }
        }
    }

    let mut rng = sampling::rng(opts.seed);
    let samples: Vec<SpectralField> = opts
        .cutoffs
        .iter()
        .flat_map(|&k| (0..opts.trials).map(move |_| k))
        .map(|k| sampling::gaussian_field(&mut rng, k, opts.decay))
        .collect();
    let values = samples
        .par_iter()
        .map(|psi| criterion_of_derivative(&f_omega, psi))
        .collect::<Result<Vec<f64>>>()?;
    evaluations += values.len();
    let best = argmax_abs(&values);
    let (satisfied, witness, witness_value) = match best {
        Some((i, g)) if g.abs() > opts.tol => (false, Some(samples[i].clone()), g),
        Some((_, g)) => (true, None, g),
        None => (true, None, 0.0),
    };
    Ok(CriterionVerdict {
        satisfied,
        witness,
        witness_value,
        trials: evaluations,
        tolerance: opts.tol,
    })
}

/// Parses complex literals such as `1.5`, `-i`, `2i`, `3-4i`, `1e-3+2.5j`.
pub fn parse_complex(text: &str) -> std::result::Result<Complex64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty complex literal".into());
    }
    let parse_real = |t: &str| -> std::result::Result<f64, String> {
        let v: f64 = t.parse().map_err(|_| format!("bad number {t:?}"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite number {t:?}"))
        }
    };
    let parse_imag = |t: &str| -> std::result::Result<f64, String> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => parse_real(t),
        }
    };
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return Ok(Complex64::new(parse_real(&s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => Ok(Complex64::new(parse_real(&body[..i])?, parse_imag(&body[i..])?)),
        None => Ok(Complex64::new(0.0, parse_imag(body)?)),
    }
}

pub fn format_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else if c.im < 0.0 {
        format!("{}{}i", c.re, c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}

/// The named nonlinearities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset")]
pub enum Preset {
    /// `iλ|u|²u`, i.e. `iλ ζ²ζ̄`.
    Cubic { lambda: f64 },
    /// `c u^m ∂x u`, i.e. `c ζ^m ω`.
    ExampleB { c: Complex64, m: u32 },
    /// `c ∂x(|u|²u)`, i.e. `2c|ζ|²ω + cζ²ω̄`.
    ExampleC { c: Complex64 },
    /// `c₁(∂x u)²ū + c₂|∂x u|²u`, i.e. `c₁ω²ζ̄ + c₂|ω|²ζ`.
    ExampleD { c1: Complex64, c2: Complex64 },
    /// `i∂x u`, i.e. `iω`.
    LinearTransport,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Cubic { .. } => "cubic",
            Preset::ExampleB { .. } => "example_b",
            Preset::ExampleC { .. } => "example_c",
            Preset::ExampleD { .. } => "example_d",
            Preset::LinearTransport => "linear_transport",
        }
    }

    pub fn nonlinearity(&self) -> PolynomialNonlinearity {
        let one = Complex64::new(1.0, 0.0);
        match *self {
            Preset::Cubic { lambda } => {
                PolynomialNonlinearity::from_terms([(Monomial::new(2, 0, 1, 0), Complex64::new(0.0, lambda))])
            }
            Preset::ExampleB { c, m } => PolynomialNonlinearity::from_terms([(Monomial::new(m, 1, 0, 0), c)]),
            Preset::ExampleC { c } => PolynomialNonlinearity::from_terms([
                (Monomial::new(1, 1, 1, 0), c * 2.0),
                (Monomial::new(2, 0, 0, 1), c),
            ]),
            Preset::ExampleD { c1, c2 } => PolynomialNonlinearity::from_terms([
                (Monomial::new(0, 2, 1, 0), c1),
                (Monomial::new(1, 1, 0, 1), c2),
            ]),
            Preset::LinearTransport => PolynomialNonlinearity::from_terms([(Monomial::new(0, 1, 0, 0), one * Complex64::i())]),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Preset::Cubic { lambda } => write!(f, "cubic({lambda})"),
            Preset::ExampleB { c, m } => write!(f, "example_b({},{m})", format_complex(c)),
            Preset::ExampleC { c } => write!(f, "example_c({})", format_complex(c)),
            Preset::ExampleD { c1, c2 } => write!(f, "example_d({},{})", format_complex(c1), format_complex(c2)),
            Preset::LinearTransport => write!(f, "linear_transport"),
        }
    }
}

impl FromStr for Preset {
    type Err = LabError;

    /// `cubic`, `cubic(λ)`, `example_b(c,m)`, `example_c(c)`,
    /// `example_d(c1,c2)`, `linear_transport`. Omitted arguments take the
    /// defaults `λ = 1`, `c = 1`, `m = 1`, `c₁ = 1`, `c₂ = 2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let close = s
                    .strip_suffix(')')
                    .ok_or_else(|| parse_err(1, "missing closing parenthesis"))?;
                (&s[..open], close[open + 1..].split(',').map(str::trim).collect::<Vec<_>>())
            }
            None => (s, Vec::new()),
        };
        let complex_arg = |i: usize, default: Complex64| -> Result<Complex64> {
            match args.get(i) {
                Some(a) => parse_complex(a).map_err(|e| parse_err(1, e)),
                None => Ok(default),
            }
        };
        let arity = |max: usize| -> Result<()> {
            if args.len() > max {
                Err(parse_err(1, format!("{name} takes at most {max} arguments")))
            } else {
                Ok(())
            }
        };
        let one = Complex64::new(1.0, 0.0);
        match name {
            "cubic" => {
                arity(1)?;
                let lambda = complex_arg(0, one)?;
                if lambda.im != 0.0 {
                    return Err(parse_err(1, "cubic coupling must be real"));
                }
                Ok(Preset::Cubic { lambda: lambda.re })
            }
            "example_b" => {
                arity(2)?;
                let c = complex_arg(0, one)?;
                let m = match args.get(1) {
                    Some(a) => a.parse::<u32>().map_err(|_| parse_err(1, format!("bad power {a:?}")))?,
                    None => 1,
                };
                if m == 0 || m > MAX_EXPONENT {
                    return Err(parse_err(1, format!("power must lie in 1..={MAX_EXPONENT}")));
                }
                Ok(Preset::ExampleB { c, m })
            }
            "example_c" => {
                arity(1)?;
                Ok(Preset::ExampleC { c: complex_arg(0, one)? })
            }
            "example_d" => {
                arity(2)?;
                Ok(Preset::ExampleD {
                    c1: complex_arg(0, one)?,
                    c2: complex_arg(1, one * 2.0)?,
                })
            }
            "linear_transport" => {
                arity(0)?;
                Ok(Preset::LinearTransport)
            }
            other => Err(parse_err(1, format!("unknown preset {other:?}"))),
        }
    }
}
