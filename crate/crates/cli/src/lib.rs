//! Command-line front end: configuration, experiment orchestration and
//! report writing on top of `besovlab-core`.

pub mod config;
pub mod experiments;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use besovlab_core::fields::jump_set_of;
use besovlab_core::jumps::jump_variation;
use besovlab_core::limits::Model;
use besovlab_core::quadrature::Tolerance;
use besovlab_core::seminorms::{
    besov_constant_at, besov_seminorm_q, brq_double_integral, default_shift_grid, directional_variation,
    gagliardo_constant_at, gagliardo_seminorm_q, line_tolerance, spherical_variation, FunctionalValue,
};
use besovlab_core::{Epsilon, RadialKernelFamily, SphereRule};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind, Resolved};
use crate::report::{num, sweep_csv};

#[derive(Debug, Parser)]
#[command(name = "besovlab", version, about = "Nonlocal seminorms, epsilon sweeps and limit-chain verdicts")]
pub struct Cli {
    /// Experiment config (TOML); defaults are used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for data-parallel loops.
    #[arg(long, global = true, value_name = "K")]
    pub threads: Option<usize>,
    /// Seed for randomized quadrature; overrides `seed`.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mass, support-tail and moment audit of the configured kernels (CSV).
    KernelCheck,
    /// Dimensional sphere constants as aligned text and JSON.
    Constants {
        /// Dimensions to print; defaults to `constants.dims`.
        #[arg(long)]
        dim: Vec<usize>,
    },
    /// Evaluate one functional at one scale and print a JSON record.
    Seminorm {
        #[arg(long, value_enum)]
        functional: Functional,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Index into `kernels` for Besov constants.
        #[arg(long, default_value_t = 0)]
        kernel: usize,
    },
    /// Sweep one functional over the configured grid (CSV).
    Sweep {
        #[arg(long, value_enum)]
        functional: Functional,
        #[arg(long, default_value_t = 0)]
        kernel: usize,
    },
    /// Run the configured experiment and write its report.
    Experiment {
        /// Override the experiment kind of the config.
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
    },
    /// Print the default configuration as TOML.
    PrintDefaults {
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Functional {
    GagliardoSeminorm,
    BesovSeminorm,
    Brq,
    DirectionalVariation,
    SphericalVariation,
    BesovConstant,
    GagliardoConstant,
    JumpVariation,
}

impl Functional {
    fn needs_epsilon(self) -> bool {
        !matches!(self, Functional::GagliardoSeminorm | Functional::BesovSeminorm | Functional::JumpVariation)
    }

    fn name(self) -> &'static str {
        match self {
            Functional::GagliardoSeminorm => "gagliardo_seminorm",
            Functional::BesovSeminorm => "besov_seminorm",
            Functional::Brq => "brq",
            Functional::DirectionalVariation => "directional_variation",
            Functional::SphericalVariation => "spherical_variation",
            Functional::BesovConstant => "besov_constant",
            Functional::GagliardoConstant => "gagliardo_constant",
            Functional::JumpVariation => "jump_variation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    KernelAudit,
    Constants,
    Sandwich,
    KernelEquivalence,
    JumpChain,
    Interpolation,
    TruncationConvergence,
    BoundsAudit,
}

impl From<KindArg> for ExperimentKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::KernelAudit => ExperimentKind::KernelAudit,
            KindArg::Constants => ExperimentKind::Constants,
            KindArg::Sandwich => ExperimentKind::Sandwich,
            KindArg::KernelEquivalence => ExperimentKind::KernelEquivalence,
            KindArg::JumpChain => ExperimentKind::JumpChain,
            KindArg::Interpolation => ExperimentKind::Interpolation,
            KindArg::TruncationConvergence => ExperimentKind::TruncationConvergence,
            KindArg::BoundsAudit => ExperimentKind::BoundsAudit,
        }
    }
}

/// Exit status when every verdict passes.
pub const EXIT_PASS: i32 = 0;
/// Exit status when a verdict or check fails.
pub const EXIT_FAIL: i32 = 1;
/// Exit status for invalid input or runtime errors.
pub const EXIT_ERROR: i32 = 2;

/// The JSON record printed by `seminorm`.
#[derive(Debug, Clone, Serialize)]
pub struct SeminormRecord {
    pub functional: String,
    pub params: std::collections::BTreeMap<String, String>,
    pub epsilon: Option<f64>,
    pub value: f64,
    pub error: f64,
}

fn load_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::from_toml(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.display().to_string();
    }
    Ok(cfg)
}

/// Run `f` on a pool of `threads` workers (or the default pool).
fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> anyhow::Result<R> {
    match threads {
        Some(0) => Err(anyhow!("--threads must be positive")),
        #[cfg(feature = "parallel")]
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(k).build()?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

fn emit(out: Option<&Path>, file: &str, text: &str, stdout: &mut dyn Write) -> anyhow::Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(file);
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            Ok(())
        }
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn evaluate(cfg: &ExperimentConfig, res: &Resolved, which: Functional, eps: Option<f64>, kernel: usize) -> anyhow::Result<FunctionalValue> {
    let tol: Tolerance = line_tolerance(&res.budget);
    let (f, p) = (&res.field, &res.params);
    let need = || eps.ok_or_else(|| anyhow!("{} needs --epsilon", which.name()));
    let kernel_kind = || cfg.kernels.get(kernel).copied().ok_or_else(|| anyhow!("kernels[{kernel}] does not exist"));
    Ok(match which {
        Functional::GagliardoSeminorm => gagliardo_seminorm_q(f, p, &res.budget, res.method)?,
        Functional::BesovSeminorm => besov_seminorm_q(f, p, &default_shift_grid(f)?, tol)?,
        Functional::Brq => brq_double_integral(f, p, need()?, &res.budget, res.method)?,
        Functional::DirectionalVariation => {
            let n = cfg.directional.directions_for(f.dim).remove(0);
            directional_variation(f, p, &n, need()?, tol)?
        }
        Functional::SphericalVariation => spherical_variation(f, p, need()?, SphereRule::default_for(f.dim), tol)?,
        Functional::BesovConstant => {
            let k = RadialKernelFamily::new(kernel_kind()?, f.dim)?;
            besov_constant_at(f, p, &k, Epsilon::new(need()?)?, &res.budget, res.method)?
        }
        Functional::GagliardoConstant => gagliardo_constant_at(f, &res.mollifier, p, need()?, &res.budget, res.method)?,
        Functional::JumpVariation => {
            let js = jump_set_of(f)?;
            let v = jump_variation(&js, p.q, &p.region)?;
            let mut fv = exact_value(v);
            fv.provenance.params.insert("field".into(), f.id.clone());
            fv.provenance.params.insert("q".into(), num(p.q));
            fv.provenance.params.insert("region".into(), format!("{:?}", p.region));
            fv
        }
    })
}

fn exact_value(value: f64) -> FunctionalValue {
    FunctionalValue {
        value,
        error_estimate: 0.0,
        evaluations_used: 0,
        low_confidence: false,
        provenance: besovlab_core::seminorms::Provenance { operation: "jump_variation".into(), params: Default::default() },
    }
}

fn run_command(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> anyhow::Result<i32> {
    if let Command::PrintDefaults { kind } = &cli.command {
        let mut cfg = ExperimentConfig::default();
        if let Some(k) = kind {
            cfg.kind = (*k).into();
        }
        stdout.write_all(cfg.to_toml().as_bytes())?;
        return Ok(EXIT_PASS);
    }
    let mut cfg = load_config(cli)?;
    let out_dir = cli.out.as_deref();
    match &cli.command {
        Command::PrintDefaults { .. } => unreachable!(),
        Command::KernelCheck => {
            let budget = cfg.quad_budget()?;
            let tables = with_threads(cli.threads, || experiments::audit_tables(&cfg, &budget))??;
            let rows: Vec<_> = tables.into_iter().flat_map(|(_, r)| r).collect();
            emit(out_dir, "kernel_check.csv", &experiments::audit_csv(&rows)?, stdout)?;
        }
        Command::Constants { dim } => {
            if !dim.is_empty() {
                cfg.constants.dims = dim.clone();
            }
            let tables = experiments::constants_tables(&cfg)?;
            let json = serde_json::to_string_pretty(&tables)? + "\n";
            let text = experiments::constants_text(&tables);
            match out_dir {
                Some(_) => {
                    emit(out_dir, "constants.txt", &text, stdout)?;
                    emit(out_dir, "constants.json", &json, stdout)?;
                }
                None => {
                    stdout.write_all(text.as_bytes())?;
                    stdout.write_all(json.as_bytes())?;
                }
            }
        }
        Command::Seminorm { functional, epsilon, kernel } => {
            let res = cfg.resolve()?;
            if functional.needs_epsilon() && epsilon.is_none() {
                return Err(anyhow!("{} needs --epsilon", functional.name()));
            }
            let v = with_threads(cli.threads, || evaluate(&cfg, &res, *functional, *epsilon, *kernel))??;
            let rec = SeminormRecord {
                functional: functional.name().into(),
                params: v.provenance.params,
                epsilon: if functional.needs_epsilon() { *epsilon } else { None },
                value: v.value,
                error: v.error_estimate,
            };
            emit(out_dir, "seminorm.json", &(serde_json::to_string(&rec)? + "\n"), stdout)?;
        }
        Command::Sweep { functional, kernel } => {
            if !functional.needs_epsilon() {
                return Err(anyhow!("{} does not depend on epsilon", functional.name()));
            }
            let res = cfg.resolve()?;
            let (grid, model) = match functional {
                Functional::GagliardoConstant => (cfg.gagliardo_grid, Model::InverseLog),
                _ => (cfg.grid, Model::ConstantTail),
            };
            let s = with_threads(cli.threads, || {
                besovlab_core::limits::epsilon_sweep(functional.name(), Default::default(), &grid, model, |e| {
                    Ok(evaluate(&cfg, &res, *functional, Some(e.value()), *kernel).map_err(|e| besovlab_core::Error::Input(e.to_string()))?.quad())
                })
            })??;
            emit(out_dir, &format!("sweep_{}.csv", functional.name()), &sweep_csv(&s)?, stdout)?;
        }
        Command::Experiment { kind } => {
            if let Some(k) = kind {
                cfg.kind = (*k).into();
            }
            let rep = with_threads(cli.threads, || experiments::run(&cfg))??;
            let dir = PathBuf::from(&cfg.output.dir);
            rep.write(&dir)?;
            for v in &rep.verdicts {
                writeln!(stderr, "{:<22} {} worst_violation={} tolerance={}", format!("{:?}", v.chain), if v.pass { "PASS" } else { "FAIL" }, num(v.worst_violation), num(v.tolerance))?;
            }
            for c in &rep.checks {
                writeln!(stderr, "{:<48} {} measured={} reference={}", c.name, if c.pass { "PASS" } else { "FAIL" }, num(c.measured), num(c.reference))?;
            }
            writeln!(stdout, "{}", dir.join("report.json").display())?;
            return Ok(if rep.pass { EXIT_PASS } else { EXIT_FAIL });
        }
    }
    Ok(EXIT_PASS)
}

/// Parse `args`, run, and return the process exit status. Errors are
/// printed to `stderr`.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
        }
    };
    match run_command(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            EXIT_ERROR
        }
    }
}
