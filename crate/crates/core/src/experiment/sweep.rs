use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::metrics::{AnalyticModel, GeometryProfile, Scenario, Strategy};
use crate::simulator::{estimate_ce, estimate_ee, CeThreshold, SinrMode};

use super::config::{Config, Engine, SweepSection, SweptParam};

pub const CSV_HEADER: &str = "strategy,engine,param,value,lambda_star_density,lambda_star_fit,k_ue,ee,ce,ci_ee,ci_ce,seed";

/// Standard errors per reported confidence half-width (95 % normal interval).
pub const CI_Z: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub strategy: Strategy,
    pub engine: Engine,
    pub param: SweptParam,
    pub value: f64,
    pub lambda_star_density: f64,
    pub lambda_star_fit: f64,
    pub k_ue: f64,
    pub ee: f64,
    pub ce: f64,
    pub ci_ee: f64,
    pub ci_ce: f64,
    pub seed: u64,
    /// Reason the point could not be evaluated; metrics are NaN then.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Shortest decimal that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

impl ResultRow {
    pub fn csv_line(&self) -> String {
        [
            self.strategy.name().to_string(),
            self.engine.name().to_string(),
            self.param.name().to_string(),
            num(self.value),
            num(self.lambda_star_density),
            num(self.lambda_star_fit),
            num(self.k_ue),
            num(self.ee),
            num(self.ce),
            num(self.ci_ee),
            num(self.ci_ce),
            self.seed.to_string(),
        ]
        .join(",")
    }
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(128 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub trends: Vec<TrendCheck>,
    pub wall_clock_s: f64,
}

impl SweepOutput {
    pub fn trends_passed(&self) -> bool {
        self.trends.iter().all(|t| t.passed)
    }

    pub fn csv(&self) -> String {
        to_csv(&self.rows)
    }

    /// JSON summary: config echo, content hash, wall-clock, failures and trend verdicts.
    pub fn summary_json(&self, cfg: &Config) -> String {
        let failures: Vec<_> = self
            .rows
            .iter()
            .filter_map(|r| {
                r.failure.as_ref().map(|f| {
                    serde_json::json!({
                        "strategy": r.strategy.name(),
                        "engine": r.engine.name(),
                        "value": r.value,
                        "reason": f,
                    })
                })
            })
            .collect();
        let v = serde_json::json!({
            "config": cfg,
            "content_hash": content_hash(cfg),
            "wall_clock_s": self.wall_clock_s,
            "rows": self.rows.len(),
            "failures": failures,
            "trends": self.trends,
            "trends_passed": self.trends_passed(),
        });
        serde_json::to_string_pretty(&v).expect("summary serializes")
    }
}

/// Git-style object hash of the canonical configuration:
/// `sha256("blob <len>\0" + toml)`.
pub fn content_hash(cfg: &Config) -> String {
    let body = cfg.to_toml();
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", body.len()).as_bytes());
    h.update(body.as_bytes());
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn failed_row(strategy: Strategy, engine: Engine, param: SweptParam, value: f64, seed: u64, e: &Error) -> ResultRow {
    ResultRow {
        strategy,
        engine,
        param,
        value,
        lambda_star_density: f64::NAN,
        lambda_star_fit: f64::NAN,
        k_ue: f64::NAN,
        ee: f64::NAN,
        ce: f64::NAN,
        ci_ee: f64::NAN,
        ci_ce: f64::NAN,
        seed,
        failure: Some(e.to_string()),
    }
}

/// Geometry profiles shared by points that differ only in radio parameters.
type ProfileCache = HashMap<(Strategy, u64), Arc<GeometryProfile>>;

fn evaluate(
    s: &Scenario,
    engine: Engine,
    cfg: &Config,
    profile: Option<Arc<GeometryProfile>>,
    exec: Exec,
) -> Result<(f64, f64, f64, f64, f64)> {
    let fit = s.serving_distance()?.lambda_star_fit();
    match engine {
        Engine::Analytic => {
            let m = match profile {
                Some(p) => AnalyticModel::with_profile(s, p)?,
                None => AnalyticModel::new(s, exec)?,
            };
            Ok((fit, m.energy_efficiency()?, m.coverage_efficiency_traffic(cfg.traffic_mode)?, 0.0, 0.0))
        }
        Engine::Montecarlo => {
            let mc = cfg.mc_config()?.with_exec(exec);
            let ee = estimate_ee(s, &mc)?;
            let ce = estimate_ce(s, &mc, CeThreshold::Traffic(cfg.traffic_mode), SinrMode::Instantaneous)?;
            Ok((fit, ee.ee.mean, ce.mean, CI_Z * ee.ee.std_error, CI_Z * ce.std_error))
        }
    }
}

/// One row per (strategy, engine, value) in that nesting order. Points run
/// through `exec`; rows come back in table order regardless of scheduling.
pub fn run_sweep(cfg: &Config, exec: Exec) -> Result<SweepOutput> {
    let spec: &SweepSection = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
    spec.validate()?;
    let start = Instant::now();
    let base = cfg.scenario()?;
    let mut jobs = Vec::new();
    for &strategy in &spec.strategies {
        for &engine in &spec.engines {
            for &value in &spec.values {
                jobs.push((strategy, engine, value));
            }
        }
    }
    // one profile per strategy for every M
    let mut cache = ProfileCache::new();
    if spec.param == SweptParam::AntennasM && spec.engines.contains(&Engine::Analytic) {
        let built = exec.map_slice(&spec.strategies, |&st| GeometryProfile::build(&base.with_strategy(st), exec));
        for (&st, p) in spec.strategies.iter().zip(built) {
            if let Ok(p) = p {
                cache.insert((st, 0), Arc::new(p));
            }
        }
    }
    let rows = exec.map_slice(&jobs, |&(strategy, engine, value)| {
        let point = spec
            .param
            .apply(&base.with_strategy(strategy), value)
            .and_then(|s| {
                let profile = match engine {
                    Engine::Analytic => cache.get(&(strategy, 0)).cloned(),
                    Engine::Montecarlo => None,
                };
                evaluate(&s, engine, cfg, profile, exec).map(|m| (s, m))
            });
        match point {
            Ok((s, (fit, ee, ce, ci_ee, ci_ce))) => ResultRow {
                strategy,
                engine,
                param: spec.param,
                value,
                lambda_star_density: s.active_density(),
                lambda_star_fit: fit,
                k_ue: s.k_ue(),
                ee,
                ce,
                ci_ee,
                ci_ce,
                seed: cfg.seed,
                failure: None,
            },
            Err(e) => failed_row(strategy, engine, spec.param, value, cfg.seed, &e),
        }
    });
    let trends = trend_checks(spec.param, &rows);
    Ok(SweepOutput {
        rows,
        trends,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

fn series(rows: &[ResultRow], strategy: Strategy, engine: Engine) -> Vec<&ResultRow> {
    rows.iter()
        .filter(|r| r.strategy == strategy && r.engine == engine)
        .collect()
}

fn fmt_series(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Built-in trend assertions on the analytic rows:
///
/// * `lambda_b`: EE strictly increasing for the hard-core strategy, CE non-decreasing;
/// * `delta`: EE strictly increasing for the hard-core and random strategies,
///   and the ordering hard-core > random > all-on at every value;
/// * `antennas_m`: EE strictly decreasing for every strategy, CE spread below 1 %.
pub fn trend_checks(param: SweptParam, rows: &[ResultRow]) -> Vec<TrendCheck> {
    let mut out = Vec::new();
    let engine = Engine::Analytic;
    let present = |st: Strategy| !series(rows, st, engine).is_empty();
    let mut monotone = |st: Strategy, metric: &str, increasing: bool, strict: bool| {
        let s = series(rows, st, engine);
        if s.len() < 2 {
            return;
        }
        let v: Vec<f64> = s.iter().map(|r| if metric == "ee" { r.ee } else { r.ce }).collect();
        let ok = v.windows(2).all(|w| match (increasing, strict) {
            (true, true) => w[1] > w[0],
            (false, true) => w[1] < w[0],
            (true, false) => w[1] >= w[0] - 1e-6,
            (false, false) => w[1] <= w[0] + 1e-6,
        });
        let dir = match (increasing, strict) {
            (true, true) => "strictly increasing",
            (false, true) => "strictly decreasing",
            (true, false) => "non-decreasing",
            (false, false) => "non-increasing",
        };
        out.push(TrendCheck {
            name: format!("{metric} {dir} in {param} ({st})"),
            passed: ok,
            detail: fmt_series(&v),
        });
    };
    match param {
        SweptParam::LambdaB => {
            if present(Strategy::MaternII) {
                monotone(Strategy::MaternII, "ee", true, true);
                monotone(Strategy::MaternII, "ce", true, false);
            }
        }
        SweptParam::Delta => {
            for st in [Strategy::MaternII, Strategy::RandomThin] {
                if present(st) {
                    monotone(st, "ee", true, true);
                }
            }
        }
        SweptParam::AntennasM => {
            for st in Strategy::ALL {
                if present(st) {
                    monotone(st, "ee", false, true);
                }
            }
        }
    }
    if param == SweptParam::AntennasM {
        for st in Strategy::ALL {
            let s = series(rows, st, engine);
            if s.len() < 2 {
                continue;
            }
            let v: Vec<f64> = s.iter().map(|r| r.ce).collect();
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            out.push(TrendCheck {
                name: format!("ce spread below 1% in {param} ({st})"),
                passed: hi - lo < 0.01 * hi,
                detail: fmt_series(&v),
            });
        }
    }
    if param == SweptParam::Delta && Strategy::ALL.iter().all(|&s| present(s)) {
        let m = series(rows, Strategy::MaternII, engine);
        let r = series(rows, Strategy::RandomThin, engine);
        let p = series(rows, Strategy::AlwaysOn, engine);
        let bad: Vec<f64> = m
            .iter()
            .zip(&r)
            .zip(&p)
            .filter(|((a, b), c)| !(a.ee > b.ee && b.ee > c.ee))
            .map(|((a, _), _)| a.value)
            .collect();
        out.push(TrendCheck {
            name: "ee ordering matern > random > ppp".into(),
            passed: bad.is_empty(),
            detail: if bad.is_empty() {
                "holds at every value".into()
            } else {
                format!("violated at {bad:?}")
            },
        });
    }
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| r.failure.is_some())
        .map(|r| format!("{}/{}@{}", r.strategy, r.engine, r.value))
        .collect();
    if !failed.is_empty() {
        out.push(TrendCheck {
            name: "every point evaluated".into(),
            passed: false,
            detail: failed.join(", "),
        });
    }
    out
}

/// Gnuplot script plotting EE and CE against the swept parameter from `csv_name`.
pub fn gnuplot_script(param: SweptParam, csv_name: &str) -> String {
    let log = if param == SweptParam::LambdaB { "set logscale x\n" } else { "" };
    format!(
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel '{p}'\n{log}\
set terminal pngcairo size 1200,500\nset output 'sweep.png'\nset multiplot layout 1,2\n\
set ylabel 'EE (bit/s/Hz/W)'\nset logscale y\n\
plot for [s in 'matern random ppp'] '{csv}' using ($4):(strcol(1) eq s && strcol(2) eq 'analytic' ? $8 : 1/0) with linespoints title s\n\
unset logscale y\nset ylabel 'CE'\n\
plot for [s in 'matern random ppp'] '{csv}' using ($4):(strcol(1) eq s && strcol(2) eq 'analytic' ? $9 : 1/0) with linespoints title s\n\
unset multiplot\n",
        p = param.name(),
        csv = csv_name,
    )
}
