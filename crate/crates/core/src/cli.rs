//! Command-line front end.
//!
//! `varmatern <command> [--config FILE] [--dotted.key VALUE | --alias VALUE]...`
//!
//! Overrides apply in order after the config file; `--profile KIND` switches the profile block
//! to the defaults of KIND before any other override. Exit status: 0 success, 1 configuration
//! error, 2 numerical or I/O failure.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::assembly::{assemble_stiffness, AssembledSystem, AssemblyOptions};
use crate::config::RunConfig;
use crate::convergence::estimate_rate;
use crate::error::{Error, Result};
use crate::io::{write_csv, write_vwm1};
use crate::kernel::check::{bessel_bound_sweep, two_regime_sweep};
use crate::reference::{matern_curve, MaternParams};
use crate::sampler::{analytic_covariance, covariance_slice, empirical_covariance, sample_fields};

pub const USAGE: &str = "\
usage: varmatern <command> [--config FILE] [options]

commands:
  assemble       assemble A and M, write them in VWM1 form
  sample         draw sampling.m fields, write the first sampling.emit to samples.csv
  covariance     write covariance slices C(x0, y) for covariance.slices
  matern         write the closed-form Matérn reference curve
  converge       estimate the strong convergence rate on three levels
  kernel-check   record the kernel's two-regime and Bessel bound constants

options:
  --config FILE          JSON configuration (defaults are built in)
  --<section>.<key> V    override any configuration key, e.g. --kernel.kappa 2.5
  --profile KIND         constant | step | gaussian_bump | oscillatory_ramp
  --s, --s-lower, --s-upper, --kappa, --mu, --level, --m, --seed,
  --slices LIST, --levels LIST, --out DIR, --threads N, --norm KIND
                         shorthands for the matching configuration keys

environment:
  VARMATERN_THREADS      worker threads when assembly.threads is unset
";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Assemble,
    Sample,
    Covariance,
    Matern,
    Converge,
    KernelCheck,
}

impl Command {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "assemble" => Command::Assemble,
            "sample" => Command::Sample,
            "covariance" => Command::Covariance,
            "matern" => Command::Matern,
            "converge" => Command::Converge,
            "kernel-check" => Command::KernelCheck,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::Assemble => "assemble",
            Command::Sample => "sample",
            Command::Covariance => "covariance",
            Command::Matern => "matern",
            Command::Converge => "converge",
            Command::KernelCheck => "kernel-check",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: RunConfig,
}

fn alias(flag: &str) -> Option<&'static str> {
    Some(match flag {
        "kappa" => "kernel.kappa",
        "mu" => "kernel.mu",
        "level" => "domain.level",
        "m" => "sampling.m",
        "seed" => "sampling.seed",
        "slices" => "covariance.slices",
        "levels" => "convergence.levels",
        "out" => "outputs.directory",
        "threads" => "assembly.threads",
        "norm" => "convergence.norm",
        _ => return None,
    })
}

/// Profile shorthands depend on the active kind.
fn profile_alias(flag: &str, cfg: &RunConfig) -> Option<&'static str> {
    let constant = matches!(cfg.profile, crate::smoothness::ProfileSpec::Constant { .. });
    Some(match flag {
        "s" if constant => "profile.s",
        "s-lower" if !constant => "profile.s_lower",
        "s-upper" if !constant => "profile.s_upper",
        _ => return None,
    })
}

/// Parses the arguments after the program name.
pub fn parse_args(args: &[String]) -> Result<Invocation> {
    let mut it = args.iter();
    let cmd = it.next().ok_or_else(|| Error::config("missing command"))?;
    let command =
        Command::parse(cmd).ok_or_else(|| Error::config(format!("unknown command `{cmd}`")))?;
    let mut pairs: Vec<(String, String)> = Vec::new();
    while let Some(flag) = it.next() {
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| Error::config(format!("unexpected argument `{flag}`")))?;
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| Error::config(format!("missing value for --{key}")))?;
                (key.to_string(), v.clone())
            }
        };
        pairs.push((key, value));
    }

    let mut config = match pairs.iter().find(|(k, _)| k == "config") {
        Some((_, path)) => RunConfig::from_file(Path::new(path))?,
        None => RunConfig::default(),
    };
    if let Some((_, kind)) = pairs.iter().rev().find(|(k, _)| k == "profile") {
        config.set_profile_kind(kind)?;
    }
    for (key, value) in &pairs {
        if key == "config" || key == "profile" {
            continue;
        }
        let path = if key.contains('.') {
            key.as_str()
        } else if let Some(p) = alias(key).or_else(|| profile_alias(key, &config)) {
            p
        } else {
            return Err(Error::config(format!("unknown option --{key}")));
        };
        config.set(path, value)?;
    }
    config.validate()?;
    Ok(Invocation { command, config })
}

/// Files written by a run and the stage timings.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub timings: Vec<(String, f64)>,
    /// Headline values printed to stdout.
    pub lines: Vec<String>,
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    dir: PathBuf,
    summary: RunSummary,
    clock: Instant,
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self> {
        let dir = cfg.outputs.directory.clone();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { cfg, dir, summary: RunSummary::default(), clock: Instant::now() })
    }

    fn lap(&mut self, stage: &str) {
        let t = self.clock.elapsed().as_secs_f64();
        self.summary.timings.push((stage.to_string(), t));
        self.clock = Instant::now();
    }

    /// Echo carried by every output file: configuration and seed, nothing run-dependent.
    fn echo(&self) -> Value {
        json!({ "config": self.cfg.to_json(), "seed": self.cfg.sampling.seed })
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let path = self.dir.join(name);
        write_csv(&path, &self.echo(), header, rows)?;
        self.summary.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, serde_json::to_string_pretty(value)?)?;
        self.summary.files.push(path);
        Ok(())
    }

    fn system(&mut self) -> Result<AssembledSystem> {
        let cfg = self.cfg;
        let mesh = cfg.mesh()?;
        let ctx = cfg.kernel_context()?;
        let opts = AssemblyOptions { threads: None, ..cfg.assembly.clone() };
        let sys = assemble_stiffness(&mesh, &ctx, &cfg.quadrature, &opts)
            .map_err(|e| e.in_stage("assembly"))?;
        self.lap("assembly");
        Ok(sys)
    }
}

fn slice_name(x0: f64) -> String {
    format!("covariance_x0_{}.csv", format!("{x0}").replace('-', "m"))
}

fn execute(cmd: Command, runner: &mut Runner<'_>) -> Result<()> {
    let cfg = runner.cfg;
    match cmd {
        Command::Assemble => {
            let sys = runner.system()?;
            let side = json!({
                "config": cfg.to_json(),
                "n": sys.mesh.n_unknowns(),
                "quadrature": sys.quadrature,
                "mesh": sys.mesh.info(),
            });
            for (name, m) in [("stiffness.vwm1", &sys.a), ("mass.vwm1", &sys.m)] {
                let path = runner.dir.join(name);
                write_vwm1(&path, m, &side)?;
                runner.summary.files.push(path);
            }
            runner.summary.lines.push(format!(
                "N = {}, quadrature order {}, smallest pivot {:.6e}",
                sys.mesh.n_unknowns(),
                sys.quadrature.orders.n_identical,
                sys.chol_a.min_pivot()
            ));
        }
        Command::Sample => {
            let sys = runner.system()?;
            let batch = sample_fields(&sys, cfg.sampling.m, cfg.sampling.seed)
                .map_err(|e| e.in_stage("sampling"))?;
            runner.lap("sampling");
            let emit = cfg.sampling.emit.min(batch.len());
            let names: Vec<String> = (1..=emit).map(|k| format!("u_{k}")).collect();
            let mut header = vec!["node_x"];
            header.extend(names.iter().map(String::as_str));
            let rows: Vec<Vec<f64>> = (0..batch.dim())
                .map(|i| {
                    let mut r = vec![batch.coords[i]];
                    r.extend(batch.samples[..emit].iter().map(|u| u[i]));
                    r
                })
                .collect();
            runner.csv("samples.csv", &header, &rows)?;
            runner.summary.lines.push(format!("{} samples drawn, {emit} written", batch.len()));
        }
        Command::Covariance => {
            let sys = runner.system()?;
            let exact = analytic_covariance(&sys).map_err(|e| e.in_stage("covariance"))?;
            runner.lap("covariance");
            let empirical = if cfg.covariance.empirical {
                let b = sample_fields(&sys, cfg.sampling.m, cfg.sampling.seed)
                    .map_err(|e| e.in_stage("sampling"))?;
                let e = empirical_covariance(&sys, &b)?;
                runner.lap("sampling");
                Some(e)
            } else {
                None
            };
            for &x0 in &cfg.covariance.slices {
                let s = covariance_slice(&exact, x0)?;
                let col = format!("C_{}_y", s.x0);
                let mut header = vec!["y", col.as_str()];
                let emp = empirical.as_ref().map(|e| covariance_slice(e, x0)).transpose()?;
                if emp.is_some() {
                    header.push("C_empirical");
                }
                let rows: Vec<Vec<f64>> = (0..s.coords.len())
                    .map(|i| {
                        let mut r = vec![s.coords[i], s.values[i]];
                        if let Some(e) = &emp {
                            r.push(e.values[i]);
                        }
                        r
                    })
                    .collect();
                runner.csv(&slice_name(s.x0), &header, &rows)?;
                runner.summary.lines.push(format!("C({}, {}) = {:.6e}", s.x0, s.x0, s.values[s.index]));
            }
            if cfg.outputs.binary {
                let path = runner.dir.join("covariance.vwm1");
                write_vwm1(&path, &exact.matrix, &json!({"config": cfg.to_json(), "meta": exact.meta}))?;
                runner.summary.files.push(path);
            }
        }
        Command::Matern => {
            let p = cfg.smoothness()?;
            let r = cfg.domain.r_int;
            let s_avg = p.average_s(-r, r)?;
            let params = MaternParams::from_order(s_avg, cfg.kernel.kappa, cfg.kernel.mu)
                .map_err(|e| e.in_stage("matern"))?;
            let rows: Vec<Vec<f64>> = matern_curve(&params, cfg.matern.r_max, cfg.matern.points)
                .into_iter()
                .map(|(r, v)| vec![r, v])
                .collect();
            runner.csv("matern.csv", &["r", "rho"], &rows)?;
            runner.summary.lines.push(format!(
                "nu = {:.6}, sigma2 = {:.6e} (average s = {:.6})",
                params.nu, params.sigma2, s_avg
            ));
        }
        Command::Converge => {
            let ctx = cfg.kernel_context()?;
            let opts = AssemblyOptions { threads: None, ..cfg.assembly.clone() };
            let report = estimate_rate(
                cfg.domain.r_int,
                cfg.domain.r_ext,
                &ctx,
                &cfg.quadrature,
                &opts,
                &cfg.convergence,
            )?;
            runner.lap("convergence");
            let mut v = serde_json::to_value(&report)?;
            v["config"] = cfg.to_json();
            runner.json("rate_report.json", &v)?;
            let rows: Vec<Vec<f64>> = report
                .per_sample
                .iter()
                .enumerate()
                .map(|(k, e)| vec![k as f64, e[0], e[1]])
                .collect();
            runner.csv("rate_samples.csv", &["sample", "err2_fine", "err2_mid"], &rows)?;
            runner.summary.lines.push(format!(
                "levels {:?}: E = {:.6e}, {:.6e}; rate = {:.4}",
                report.levels, report.errors[0], report.errors[1], report.rate
            ));
        }
        Command::KernelCheck => {
            let ctx = cfg.kernel_context()?;
            let kc = &cfg.kernel_check;
            let two = two_regime_sweep(&ctx, cfg.domain.r_ext, kc.pairs, kc.z0, kc.seed);
            let nus: Vec<f64> = (0..=10).map(|i| 0.5 + 0.1 * i as f64).collect();
            let bessel = bessel_bound_sweep(&nus, kc.z0, 50.0);
            runner.lap("kernel-check");
            runner.json("kernel_check.json", &json!({
                "config": cfg.to_json(),
                "two_regime": two,
                "bessel_bounds": bessel,
            }))?;
            runner.summary.lines.push(format!(
                "near ratio {:.4}, far ratio {:.4}, limit error {:.3e}",
                two.near.ratio(),
                two.far.ratio(),
                two.limit_max_rel_err
            ));
        }
    }
    Ok(())
}

fn thread_count(cfg: &RunConfig) -> Result<Option<usize>> {
    if let Some(n) = cfg.assembly.threads {
        return Ok(Some(n));
    }
    match std::env::var("VARMATERN_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::config(format!("VARMATERN_THREADS = {v:?} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

/// Runs a parsed invocation and writes the manifest.
pub fn run(inv: &Invocation) -> Result<RunSummary> {
    let cfg = &inv.config;
    let threads = thread_count(cfg)?;
    let mut runner = Runner::new(cfg)?;
    let total = Instant::now();
    let body = |runner: &mut Runner<'_>| execute(inv.command, runner);
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(format!("cannot build thread pool: {e}")))?;
            pool.install(|| body(&mut runner))?;
        }
        None => body(&mut runner)?,
    }
    runner.summary.timings.push(("total".into(), total.elapsed().as_secs_f64()));
    let manifest = json!({
        "command": inv.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg.to_json(),
        "seed": cfg.sampling.seed,
        "threads": threads,
        "files": runner.summary.files,
        "timings": runner.summary.timings.iter().map(|(k, v)| json!({"stage": k, "seconds": v})).collect::<Vec<_>>(),
    });
    let path = runner.dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    runner.summary.files.push(path);
    Ok(runner.summary)
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        1
    } else {
        2
    }
}

/// Entry point used by the binary; returns the process exit status.
pub fn main_with_args(args: &[String]) -> i32 {
    if args.is_empty() || args.iter().any(|a| a == "--help" || a == "-h" || a == "help") {
        print!("{USAGE}");
        return if args.is_empty() { 1 } else { 0 };
    }
    let result = parse_args(args).and_then(|inv| run(&inv));
    match result {
        Ok(summary) => {
            for l in &summary.lines {
                println!("{l}");
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
