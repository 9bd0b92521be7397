//! `nullseries`: construct, verify and audit null series from the command line.

mod config;
mod files;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nullseries_core::cantor::{generate, CantorSet, OffsetMode};
use nullseries_core::pla::{
    build_pla, construct, decay_report, escaped_probes, moment_experiment, null_check, verify_smoothness, MomentRecipe,
    NullSeries, MIN_TRIALS,
};
use nullseries_core::profile::ProfileFamily;
use nullseries_core::uniqueness::{
    audit_theorem2, harmonic_measure, BoundaryTarget, LaurentData, WosParams, AUDIT_ANGLES,
};
use nullseries_core::weights::{build_schedule, derive_omega2, WeightSpec};
use nullseries_core::Complex64;
use serde::Serialize;
use serde_json::json;

use config::{parse_omega, parse_pair, parse_target, DomainFile, RunConfig};
use files::{ensure_dir, read_series, write_json, write_series, write_table, Fitted, Report, Sidecar, CODE_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("{0}")]
    Core(#[from] nullseries_core::Error),
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("decay check failed: {0}")]
    Decay(String),
    #[error("check failed: {0}")]
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        use nullseries_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Contract(_) | E::Domain(_)) => 2,
            CliError::Core(E::Resolution(_) | E::Capability(_)) => 3,
            CliError::Core(E::Triviality(_) | E::Precondition(_)) | CliError::Degenerate(_) => 4,
            CliError::Decay(_) => 5,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "nullseries", version, about = "Null trigonometric series on random Cantor sets")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root; runs go to OUT/<run-id>/.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the series and write it with its decay report.
    Construct {
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        grid_exp: Option<u32>,
        #[arg(long)]
        m_max: Option<usize>,
        /// t_log2 | power:P | t_log_pow:P | JSON
        #[arg(long, value_parser = parse_omega)]
        omega: Option<WeightSpec>,
    },
    /// Re-check a written series.
    Verify {
        #[arg(value_enum)]
        which: Check,
        #[arg(long)]
        series: PathBuf,
        /// Moment trials (default from config).
        #[arg(long)]
        trials: Option<usize>,
    },
    /// ε_k recursion audit on a written or synthetic series.
    Audit {
        #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
        series: Option<PathBuf>,
        /// Use c(−n) = e^{−ω(log₂ n)} instead of a file.
        #[arg(long)]
        synthetic: bool,
        #[arg(long, value_parser = parse_omega)]
        omega: Option<WeightSpec>,
        /// δ = 2^−j for each j.
        #[arg(long, value_delimiter = ',', default_values_t = [4u32, 6, 8])]
        delta_exp: Vec<u32>,
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Harmonic measure by walk-on-spheres.
    Hm {
        #[arg(long)]
        domain: PathBuf,
        /// Start point "re,im".
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        z: (f64, f64),
        /// all | unit | inner | privalov | arc:START,LEN
        #[arg(long, value_parser = parse_target, default_value = "unit")]
        target: BoundaryTarget,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long)]
        eps_stop: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Decay,
    Null,
    Moments,
    Smoothness,
}

impl Check {
    fn name(self) -> &'static str {
        match self {
            Check::Decay => "decay",
            Check::Null => "null",
            Check::Moments => "moments",
            Check::Smoothness => "smoothness",
        }
    }
}

struct Ctx {
    cfg: RunConfig,
    quiet: bool,
}

impl Ctx {
    fn say(&self, s: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", s.as_ref());
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nullseries: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    let mut ctx = Ctx { cfg, quiet: cli.quiet };
    match cli.cmd {
        Cmd::Construct { n_max, grid_exp, m_max, omega } => {
            let c = &mut ctx.cfg;
            c.n_max = n_max.unwrap_or(c.n_max);
            c.grid_exp = grid_exp.unwrap_or(c.grid_exp);
            c.m_max = m_max.unwrap_or(c.m_max);
            if let Some(w) = omega {
                c.omega = w;
            }
            cmd_construct(&ctx)
        }
        Cmd::Verify { which, series, trials } => cmd_verify(&ctx, which, &series, trials),
        Cmd::Audit { series, synthetic: _, omega, delta_exp, k_max } => {
            cmd_audit(&ctx, series.as_deref(), omega, &delta_exp, k_max)
        }
        Cmd::Hm { domain, z, target, paths, eps_stop } => {
            let seed = ctx.cfg.seed;
            cmd_hm(&ctx, &domain, Complex64::new(z.0, z.1), &target, paths, seed, eps_stop)
        }
    }
}

fn decay_window(m_max: usize) -> (u64, u64) {
    (64.min(m_max as u64), m_max as u64)
}

fn write_report<T: Serialize>(
    ctx: &Ctx,
    dir: &Path,
    command: &str,
    pass: bool,
    report: &T,
) -> Result<PathBuf, CliError> {
    let p = dir.join(format!("report-{command}.json"));
    let r = Report { command, code_version: CODE_VERSION, tolerances: &ctx.cfg.tolerances, pass, report };
    write_json(&p, &r)?;
    Ok(p)
}

fn cmd_construct(ctx: &Ctx) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    cfg.validate()?;
    let dir = cfg.run_dir();
    let plots = dir.join("plots");
    ensure_dir(&plots)?;

    let w2 = derive_omega2(&cfg.omega)?;
    let sched = build_schedule(&w2, cfg.n_max)?;
    write_json(
        &dir.join("schedule.json"),
        &json!({
            "omega": cfg.omega,
            "omega2": w2,
            "n_max": cfg.n_max,
            "phi": sched.phi,
            "sigma": sched.sigma,
            "tau": sched.tau,
        }),
    )?;
    write_table(
        &plots.join("schedule.csv"),
        &["n", "phi", "sigma", "tau"],
        (1..=cfg.n_max).map(|n| vec![n as f64, sched.phi[n], sched.sigma[n], sched.tau(n)]),
    )?;

    let c = construct(&cfg.omega, cfg.n_max, cfg.grid(), cfg.m_max, cfg.seed, &cfg.pla())?;
    let s = &c.series;
    let (lo, hi) = decay_window(cfg.m_max);
    let d = decay_report(s, &cfg.omega, lo, hi, cfg.tolerances.c_hat_min)?;

    write_series(&dir.join("series.csv"), s)?;
    let side = Sidecar {
        config: cfg.clone(),
        code_version: CODE_VERSION.into(),
        tolerances: cfg.tolerances.clone(),
        meta: s.meta.clone(),
        fitted: Fitted {
            c_hat: d.c_hat,
            plateau: c.deepest.plateau,
            max_abs: s.max_abs(),
            max_abs_negative: s.max_abs_negative(),
            interior_leakage: c.deepest.interior_leakage,
            boundary_leakage: c.deepest.boundary_leakage,
            g_dc_sampled: c.deepest.g_dc_sampled,
        },
    };
    write_json(&dir.join("series.json"), &side)?;
    write_report(ctx, &dir, "decay", d.pass, &d)?;
    write_decay_plot(&plots, &d)?;
    let m = s.m_max as i64;
    write_table(&plots.join("coefficients.csv"), &["n", "abs"], (-m..=m).map(|n| vec![n as f64, s.get(n).norm()]))?;
    let f = &c.deepest.boundary.values;
    let step = (f.len() / 4096).max(1);
    let h = std::f64::consts::TAU / f.len() as f64;
    write_table(
        &plots.join("boundary.csv"),
        &["t", "g", "abs_f", "arg_f"],
        (0..f.len()).step_by(step).map(|j| vec![j as f64 * h, c.deepest.g.values[j].re, f[j].norm(), f[j].arg()]),
    )?;

    ctx.say(format!("wrote {}", dir.display()));
    ctx.say(format!("max|c(n)| {:.4e}, max over n<0 {:.4e}", s.max_abs(), s.max_abs_negative()));
    ctx.say(format!("decay: ĉ = {:.6} (min {}) {}", d.c_hat, d.c_min, if d.pass { "PASS" } else { "FAIL" }));
    if d.pass {
        Ok(())
    } else {
        Err(CliError::Decay(format!("ĉ = {:.6} < {}", d.c_hat, d.c_min)))
    }
}

fn write_decay_plot(plots: &Path, d: &nullseries_core::pla::DecayReport) -> Result<(), CliError> {
    write_table(
        &plots.join("decay.csv"),
        &["m", "abs_c", "neg_log", "omega_log", "ratio"],
        d.rows.iter().map(|r| vec![r.m as f64, r.abs_c, r.neg_log, r.omega_log, r.ratio]),
    )
}

/// Regenerates the Cantor set the series was built on.
fn regenerate_set(cfg: &RunConfig, depth: usize) -> Result<CantorSet, CliError> {
    let w2 = derive_omega2(&cfg.omega)?;
    let sched = build_schedule(&w2, depth)?;
    Ok(generate(&sched, depth, cfg.seed, OffsetMode::Random)?)
}

fn load_series(path: &Path) -> Result<(NullSeries, RunConfig), CliError> {
    let (s, side) = read_series(path)?;
    let cfg = side.config;
    cfg.validate()?;
    if side.meta.seed != cfg.seed || side.meta.depth != cfg.n_max {
        return Err(CliError::Config(format!("sidecar of {} disagrees with its own config", path.display())));
    }
    Ok((s, cfg))
}

fn cmd_verify(ctx: &Ctx, which: Check, series: &Path, trials: Option<usize>) -> Result<(), CliError> {
    let (s, cfg) = load_series(series)?;
    let dir = series.parent().map(Path::to_path_buf).unwrap_or_default();
    let ctx = Ctx { cfg, quiet: ctx.quiet };
    let cfg = &ctx.cfg;
    let name = which.name();
    let (pass, failure) = match which {
        Check::Decay => {
            let (lo, hi) = decay_window(s.m_max);
            let d = decay_report(&s, &cfg.omega, lo, hi, cfg.tolerances.c_hat_min)?;
            write_report(&ctx, &dir, name, d.pass, &d)?;
            ensure_dir(&dir.join("plots"))?;
            write_decay_plot(&dir.join("plots"), &d)?;
            ctx.say(format!("ĉ = {:.6} (min {}), tail trend {:+.3e}", d.c_hat, d.c_min, d.tail_trend));
            (d.pass, CliError::Decay(format!("ĉ = {:.6} < {}", d.c_hat, d.c_min)))
        }
        Check::Null => {
            let set = regenerate_set(cfg, s.meta.depth)?;
            let probes = escaped_probes(&set, s.meta.depth, 10, 0.1, cfg.seed)?;
            let top = (s.m_max as f64).log2().floor() as u32;
            let orders: Vec<usize> = (0..=top).map(|j| 1usize << j).collect();
            let r = null_check(&s, &set, &probes, &orders)?;
            write_report(&ctx, &dir, name, r.pass, &r)?;
            if r.degenerate {
                return Err(CliError::Degenerate("the series is identically zero".into()));
            }
            let worst = r.rows.iter().map(|x| x.drop).fold(f64::INFINITY, f64::min);
            ctx.say(format!("{} escaped points, smallest drop {worst:.2}×", r.rows.len()));
            (r.pass, CliError::Failed(format!("smallest partial-sum drop {worst:.2}×")))
        }
        Check::Moments => {
            let trials = trials.unwrap_or(cfg.moment_trials);
            let recipe =
                MomentRecipe { omega: cfg.omega.clone(), grid: cfg.grid(), depth_cap: None, config: cfg.pla() };
            let ms: Vec<u64> = (8..=13).map(|j| 1u64 << j).filter(|&m| (m as usize) < cfg.grid() / 4).collect();
            let r = moment_experiment(&recipe, &ms, trials, cfg.seed)?;
            write_report(&ctx, &dir, name, r.pass, &r)?;
            if let Some(w) = &r.warning {
                ctx.say(format!("warning: {w}"));
            }
            ctx.say(format!(
                "slope {:.3} (direct {:.3}), {} trials (min {MIN_TRIALS})",
                r.slope, r.slope_direct, r.trials
            ));
            (r.pass, CliError::Failed(format!("moment slope {:.3}", r.slope)))
        }
        Check::Smoothness => {
            let set = regenerate_set(cfg, s.meta.depth)?;
            let probes = escaped_probes(&set, s.meta.depth, 16, 0.1, cfg.seed)?;
            let p = ProfileFamily::new(set, cfg.omega.clone())?;
            let f = build_pla(&p, s.meta.depth, cfg.grid(), &cfg.pla())?;
            let r = verify_smoothness(&f, &p.set, &probes, 4, 1)?;
            write_report(&ctx, &dir, name, r.pass, &r)?;
            ctx.say(format!("C' = {:.3} over {} rows, {} probes excluded", r.c_fit, r.rows.len(), r.excluded.len()));
            (r.pass, CliError::Failed("smoothness bounds".into()))
        }
    };
    ctx.say(format!("verify {name}: {}", if pass { "PASS" } else { "FAIL" }));
    if pass {
        Ok(())
    } else {
        Err(failure)
    }
}

fn cmd_audit(
    ctx: &Ctx,
    series: Option<&Path>,
    omega: Option<WeightSpec>,
    delta_exp: &[u32],
    k_max: Option<usize>,
) -> Result<(), CliError> {
    if delta_exp.is_empty() || delta_exp.iter().any(|&j| j == 0 || j > 30) {
        return Err(CliError::Config("delta exponents must lie in 1..=30".into()));
    }
    let k_max = k_max.unwrap_or(delta_exp.iter().map(|&j| j as usize + 1).max().unwrap_or(0) + 1);
    let (data, w, dir, source) = match series {
        Some(p) => {
            let (s, cfg) = load_series(p)?;
            let w = omega.unwrap_or(cfg.omega);
            let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
            (LaurentData::from_centered(&s.coeffs, s.m_max)?, w, dir, p.display().to_string())
        }
        None => {
            let w = match omega {
                Some(w) => w,
                None => WeightSpec::power(2.0)?,
            };
            let data = LaurentData::synthetic_tail(&w, 1usize << (k_max + 1))?;
            (data, w, ctx.cfg.out.join("audit-synthetic"), "synthetic".into())
        }
    };
    let mut audits = Vec::new();
    for &j in delta_exp {
        let a = audit_theorem2(&data, &w, 0.5f64.powi(j as i32), k_max, &AUDIT_ANGLES)?;
        ctx.say(format!(
            "δ = 2^-{j}: k₀ {}, recursion {}, ε_k0/√δ {:.3}, c {:+.4}{}",
            a.k0,
            if a.recursion_pass { "PASS" } else { "FAIL" },
            a.eps_k0_over_sqrt_delta,
            a.c_fit,
            if a.chain_positive { "" } else { " (no collapse: c ≤ 0)" }
        ));
        audits.push(a);
    }
    let pass = audits.iter().all(|a| a.recursion_pass);
    let notes: Vec<String> = audits
        .iter()
        .filter(|a| !a.chain_positive)
        .map(|a| format!("δ = {}: fitted c = {:.4} ≤ 0, the chain does not collapse at this depth", a.delta, a.c_fit))
        .collect();
    ensure_dir(&dir)?;
    write_report(
        ctx,
        &dir,
        "audit",
        pass,
        &json!({ "source": source, "omega": w, "k_max": k_max, "audits": audits, "notes": notes }),
    )?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Failed("a recursion inequality failed".into()))
    }
}

fn cmd_hm(
    ctx: &Ctx,
    domain: &Path,
    z: Complex64,
    target: &BoundaryTarget,
    paths: usize,
    seed: u64,
    eps_stop: Option<f64>,
) -> Result<(), CliError> {
    let dom = DomainFile::load(domain)?;
    let mut p = WosParams::default();
    if let Some(e) = eps_stop {
        if !(e > 0.0 && e < 0.1) {
            return Err(CliError::Config(format!("eps_stop = {e} outside (0, 0.1)")));
        }
        p.eps_stop = e;
    }
    let est = harmonic_measure(&dom, z, target, paths, seed, &p)?;
    let dir = ctx.cfg.out.join("hm");
    ensure_dir(&dir)?;
    write_json(
        &dir.join(format!("hm-seed{seed}.json")),
        &json!({
            "domain": dom,
            "z": [z.re, z.im],
            "target": target,
            "paths": est.paths,
            "seed": est.seed,
            "eps_stop": p.eps_stop,
            "step_factor": p.step_factor,
            "value": est.value,
            "stderr": est.stderr,
            "ambiguous": est.ambiguous,
            "code_version": CODE_VERSION,
        }),
    )?;
    if !ctx.quiet {
        println!("{:.6} ± {:.6}", est.value, est.stderr);
    }
    if !est.ambiguity_ok() {
        eprintln!("warning: {} of {} paths ended ambiguously", est.ambiguous, est.paths);
    }
    Ok(())
}
