//! `netsim`: analytic and Monte Carlo evaluation of base-station switch-off strategies.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use netsim_core::exec::Exec;
use netsim_core::experiment::{
    compare_engines, gnuplot_script, run_sweep, Config, Engine, SweepOutput, SweepSection, SweptParam,
};
use netsim_core::metrics::Strategy;
use netsim_core::simulator::{finite_m_validation, FiniteMConfig};

const EXIT_ERROR: u8 = 1;
const EXIT_TREND: u8 = 2;

#[derive(Parser)]
#[command(name = "netsim", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic metrics at a single point
    Analytic(Common),
    /// Monte Carlo metrics at a single point
    Simulate(Common),
    /// Sweep one parameter as described by the `[sweep]` table of the config
    Sweep(Common),
    /// Analytic values against Monte Carlo estimates at a single point
    Compare(Common),
    /// Finite-antenna desired-power error table
    ValidateAsymptotics(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; absent keys take their defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides `seed`)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; without it results go to stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Switch-off strategy (overrides `strategy`; restricts a sweep to it)
    #[arg(long, value_parser = ["ppp", "matern", "random"])]
    strategy: Option<String>,
    /// Engine of a sweep
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Analytic,
    Mc,
    Both,
}

impl EngineArg {
    fn engines(self) -> Vec<Engine> {
        match self {
            EngineArg::Analytic => vec![Engine::Analytic],
            EngineArg::Mc => vec![Engine::Montecarlo],
            EngineArg::Both => vec![Engine::Analytic, Engine::Montecarlo],
        }
    }
}

impl Common {
    fn load(&self) -> anyhow::Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(s) = &self.strategy {
            cfg.strategy = s.parse()?;
        }
        Ok(cfg)
    }

    fn strategy(&self) -> anyhow::Result<Option<Strategy>> {
        Ok(self.strategy.as_deref().map(str::parse).transpose()?)
    }

    fn reject_engine(&self, cmd: &str) -> anyhow::Result<()> {
        if self.engine.is_some() {
            bail!("--engine does not apply to `{cmd}`");
        }
        Ok(())
    }
}

fn exec() -> anyhow::Result<Exec> {
    let Ok(v) = std::env::var("NETSIM_THREADS") else {
        return Ok(Exec::Parallel);
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("NETSIM_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(if n == 1 { Exec::Sequential } else { Exec::Parallel })
}

fn write(dir: &Path, name: &str, body: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, cfg: &Config, res: &SweepOutput, gnuplot: Option<SweptParam>) -> anyhow::Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            write(dir, "results.csv", &res.csv())?;
            write(dir, "summary.json", &res.summary_json(cfg))?;
            if let Some(p) = gnuplot {
                write(dir, "plot.gp", &gnuplot_script(p, "results.csv"))?;
            }
        }
        None => print!("{}", res.csv()),
    }
    for r in res.rows.iter().filter(|r| r.failure.is_some()) {
        eprintln!(
            "failed: {} {} {}={}: {}",
            r.strategy,
            r.engine,
            r.param,
            r.value,
            r.failure.as_deref().unwrap_or_default()
        );
    }
    for t in &res.trends {
        eprintln!("[{}] {}: {}", if t.passed { "PASS" } else { "FAIL" }, t.name, t.detail);
    }
    Ok(())
}

/// A single point is a one-value sweep over `delta` at its configured value.
fn point(c: &Common, engine: Engine) -> anyhow::Result<u8> {
    let mut cfg = c.load()?;
    cfg.sweep = Some(SweepSection {
        param: SweptParam::Delta,
        values: vec![cfg.delta_m],
        strategies: vec![cfg.strategy],
        engines: vec![engine],
    });
    let res = run_sweep(&cfg, exec()?)?;
    emit(c.out.as_deref(), &cfg, &res, None)?;
    Ok(if res.rows.iter().any(|r| r.failure.is_some()) { EXIT_ERROR } else { 0 })
}

fn sweep(c: &Common) -> anyhow::Result<u8> {
    let mut cfg = c.load()?;
    let strategy = c.strategy()?;
    let Some(spec) = cfg.sweep.as_mut() else {
        bail!("config has no [sweep] table");
    };
    if let Some(st) = strategy {
        spec.strategies = vec![st];
    }
    if let Some(e) = c.engine {
        spec.engines = e.engines();
    }
    let param = spec.param;
    let res = run_sweep(&cfg, exec()?)?;
    emit(c.out.as_deref(), &cfg, &res, Some(param))?;
    Ok(if res.trends_passed() { 0 } else { EXIT_TREND })
}

fn compare(c: &Common) -> anyhow::Result<u8> {
    c.reject_engine("compare")?;
    let cfg = c.load()?;
    let exec = exec()?;
    let report = compare_engines(&cfg.scenario()?, &cfg.mc_config()?.with_exec(exec), cfg.traffic_mode, exec)?;
    print!("{report}");
    if let Some(dir) = &c.out {
        fs::create_dir_all(dir)?;
        write(dir, "compare.json", &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(0)
}

fn validate_asymptotics(c: &Common) -> anyhow::Result<u8> {
    c.reject_engine("validate-asymptotics")?;
    let cfg = c.load()?;
    let fm = FiniteMConfig {
        alpha: cfg.alpha,
        p_f: cfg.p_f_w,
        p_p: cfg.p_p_w,
        master_seed: cfg.seed,
        ..FiniteMConfig::default()
    };
    let rows = finite_m_validation(&fm, exec()?)?;
    let mut csv = String::from("m,median_rel_error,mean_rel_error,median_diag_error\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{:?},{:?},{:?}\n",
            r.m, r.median_rel_error, r.mean_rel_error, r.median_diag_error
        ));
    }
    match &c.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write(dir, "finite_m.csv", &csv)?;
        }
        None => print!("{csv}"),
    }
    let decreasing = rows.windows(2).all(|w| w[1].median_rel_error < w[0].median_rel_error);
    eprintln!(
        "[{}] median relative error decreasing in M",
        if decreasing { "PASS" } else { "FAIL" }
    );
    Ok(if decreasing { 0 } else { EXIT_TREND })
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match &cli.command {
        Command::Analytic(c) => {
            c.reject_engine("analytic")?;
            point(c, Engine::Analytic)
        }
        Command::Simulate(c) => {
            c.reject_engine("simulate")?;
            point(c, Engine::Montecarlo)
        }
        Command::Sweep(c) => sweep(c),
        Command::Compare(c) => compare(c),
        Command::ValidateAsymptotics(c) => validate_asymptotics(c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
