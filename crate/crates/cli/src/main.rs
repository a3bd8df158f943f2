use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fnls_core::energy::energy_audit;
use fnls_core::estimates::EnsembleSpec;
use fnls_core::experiments::{self, kv_preset, ExperimentPreset, ESTIMATE_DECAY};
use fnls_core::nonlinearity::{check_wellposedness_condition, regularity_threshold, CriterionOptions};
use fnls_core::{PolynomialNonlinearity, TrajectoryRecord};

#[derive(Parser)]
#[command(name = "fnls", version, about = "Numerical laboratory for derivative fractional NLS on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test the well-posedness criterion for a nonlinearity.
    Check(Setup),
    /// Run a preset and write its artifact directory.
    Run {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Exit with status 2 when any analysis fails.
        #[arg(long)]
        strict: bool,
    },
    /// Run a preset once per value of one parameter.
    Sweep {
        #[command(flatten)]
        setup: Setup,
        /// Parameter to vary (alpha, eps, modes, dt, horizon, seed, ...).
        #[arg(long)]
        axis: String,
        /// Comma-separated values; may be empty.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        values: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Ratio ensembles for the bilinear and commutator estimates.
    Estimates {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = ESTIMATE_DECAY)]
        decay: f64,
        #[arg(long, default_value_t = 32)]
        samples: usize,
        /// Comma-separated increasing cutoffs.
        #[arg(long, default_value = "16,32,64,128,256")]
        cutoffs: String,
        #[arg(long)]
        no_adversarial: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Modified-energy audit of a stored trajectory.
    Audit {
        #[command(flatten)]
        setup: Setup,
        /// Directory holding `<stem>.csv` and `<stem>.json`.
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long, default_value = "trajectory")]
        stem: String,
        /// Energy regularity; defaults to s₀(α) + 0.1.
        #[arg(long)]
        r: Option<f64>,
        /// Where to write energy.csv; defaults to the trajectory directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Setup {
    /// Preset such as cubic, example_b, example_c, example_d, linear_transport.
    preset_arg: Option<String>,
    #[arg(long)]
    preset: Option<String>,
    /// Flat key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Polynomial file with lines `a b c d re im`.
    #[arg(long)]
    nonlinearity: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    modes: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c2: Option<String>,
    #[arg(long)]
    m: Option<String>,
    /// Extra `key=value` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    extra: Vec<String>,
}

impl Setup {
    fn build(&self) -> Result<ExperimentPreset> {
        let config = match &self.config {
            Some(p) => Some(fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
            None => None,
        };
        let name = match (&self.preset_arg, &self.preset) {
            (Some(a), Some(b)) if a != b => bail!("preset given twice: {a} and {b}"),
            (Some(a), _) | (None, Some(a)) => Some(a.clone()),
            (None, None) => config.as_deref().map(kv_preset).transpose()?.flatten(),
        };
        let mut exp = ExperimentPreset::named(name.as_deref().unwrap_or("cubic"))?;
        if let Some(text) = &config {
            exp.apply_kv(text)?;
        }
        if let Some(path) = &self.nonlinearity {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            exp = exp.with_nonlinearity(PolynomialNonlinearity::parse_text(&text)?);
        }
        let flags = [
            ("alpha", &self.alpha),
            ("eps", &self.eps),
            ("modes", &self.modes),
            ("dt", &self.dt),
            ("horizon", &self.horizon),
            ("seed", &self.seed),
            ("lambda", &self.lambda),
            ("c", &self.c),
            ("c1", &self.c1),
            ("c2", &self.c2),
            ("m", &self.m),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                exp.set(key, v)?;
            }
        }
        for kv in &self.extra {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
            exp.set(k.trim(), v.trim())?;
        }
        Ok(exp)
    }
}

fn parse_list(text: &str) -> Vec<String> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn check(setup: &Setup) -> Result<ExitCode> {
    let exp = setup.build()?;
    let mut opts = CriterionOptions::for_alpha(exp.alpha);
    opts.seed = exp.seed;
    let v = check_wellposedness_condition(&exp.nonlinearity, &opts)?;
    if v.satisfied {
        println!("criterion satisfied ({} trials, tolerance {:e})", v.trials, v.tolerance);
    } else {
        println!("criterion violated: G = {} after {} trials", v.witness_value, v.trials);
        if let Some(w) = &v.witness {
            print!("witness:\n{}", w.to_csv());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(setup: &Setup, out: &Path, strict: bool) -> Result<ExitCode> {
    let exp = setup.build()?;
    let summary = experiments::run(&exp, out)?;
    for a in &summary.analyses {
        println!("{} {}", if a.pass { "PASS" } else { "FAIL" }, a.name);
    }
    println!("wrote {}", out.join("summary.json").display());
    Ok(if strict && !summary.all_pass() { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn sweep(setup: &Setup, axis: &str, values: &str, out: &Path) -> Result<ExitCode> {
    let exp = setup.build()?;
    let table = experiments::sweep(&exp, axis, &parse_list(values))?;
    fs::create_dir_all(out)?;
    fs::write(out.join("sweep.csv"), table.to_csv())?;
    fs::write(out.join("sweep.json"), table.to_json()?)?;
    for row in &table.rows {
        let depth = row.ladder_depth.map_or("-".to_string(), |d| d.to_string());
        let status = match (&row.summary, &row.error) {
            (Some(s), _) => s
                .analyses
                .iter()
                .map(|a| format!("{}={}", a.name, if a.pass { "pass" } else { "fail" }))
                .collect::<Vec<_>>()
                .join(" "),
            (None, e) => format!("error: {}", e.as_deref().unwrap_or("")),
        };
        println!("{axis}={} depth={depth} {status}", row.value);
    }
    if let Some(beta) = table.eps_study.as_ref().and_then(|s| s.beta) {
        println!("beta = {beta}");
    }
    println!("{} rows written to {}", table.rows.len(), out.join("sweep.csv").display());
    Ok(ExitCode::SUCCESS)
}

fn estimates(spec: &EnsembleSpec, out: &Path) -> Result<ExitCode> {
    let reports = experiments::estimate_suite(spec)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("estimates.csv"), experiments::estimates_csv(&reports))?;
    for r in &reports {
        let b = r.boundedness(64, 2.0, 0.15);
        println!(
            "{} {}: max growth {:.3}, slope {:.3}",
            if b.bounded { "BOUNDED" } else { "GROWING" },
            r.estimate,
            b.max_growth,
            b.slope
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn audit(setup: &Setup, dir: &Path, stem: &str, r: Option<f64>, out: Option<&Path>) -> Result<ExitCode> {
    let exp = setup.build()?;
    let traj = TrajectoryRecord::read(dir, stem).with_context(|| format!("reading {stem} in {}", dir.display()))?;
    let r = r.unwrap_or_else(|| regularity_threshold(traj.config.alpha) + 0.1);
    let a = energy_audit(&traj, &exp.nonlinearity, r)?;
    let out = out.unwrap_or(dir);
    fs::create_dir_all(out)?;
    fs::write(out.join("energy.csv"), a.trace.to_csv())?;
    println!(
        "snapshots {}, Lipschitz {:.6e}, coercivity violations {}, nonincreasing {}",
        a.trace.energy.len(),
        a.lipschitz,
        a.trace.coercivity_violations(),
        a.nonincreasing
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(setup) => check(setup),
        Command::Run { setup, out, strict } => run(setup, out, *strict),
        Command::Sweep { setup, axis, values, out } => sweep(setup, axis, values, out),
        Command::Estimates {
            seed,
            decay,
            samples,
            cutoffs,
            no_adversarial,
            out,
        } => parse_list(cutoffs)
            .iter()
            .map(|c| c.parse::<usize>().with_context(|| format!("bad cutoff {c:?}")))
            .collect::<Result<Vec<_>>>()
            .and_then(|cutoffs| {
                let spec = EnsembleSpec {
                    cutoffs,
                    samples_per_cutoff: *samples,
                    decay: *decay,
                    seed: *seed,
                    adversarial: !no_adversarial,
                };
                estimates(&spec, out)
            }),
        Command::Audit {
            setup,
            trajectory,
            stem,
            r,
            out,
        } => audit(setup, trajectory, stem, *r, out.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
