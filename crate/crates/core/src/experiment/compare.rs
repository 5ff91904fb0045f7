use std::fmt;

use serde::Serialize;

use crate::error::Result;
use crate::exec::Exec;
use crate::metrics::{AnalyticModel, Scenario, TrafficMode};
use crate::simulator::{estimate_at_distance, estimate_ce, estimate_ee, CeThreshold, McConfig, McEstimate, SinrMode};

/// How an analytic value is judged against a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tolerance {
    /// `|mc - analytic| <= 3 SE`.
    ThreeSe,
    /// Analytic value is a lower bound: `analytic <= mc + 3 SE`.
    LowerBound,
    /// Reported only.
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareLine {
    pub quantity: String,
    pub analytic: f64,
    pub mc: McEstimate,
    pub tolerance: Tolerance,
    /// Sign of `mc - analytic` for rate-derived quantities: `true` when the
    /// estimate sits on or above the analytic lower bound.
    pub jensen_ok: Option<bool>,
    pub z: f64,
    pub agrees: bool,
}

impl CompareLine {
    fn new(quantity: &str, analytic: f64, mc: McEstimate, tolerance: Tolerance) -> Self {
        let z = (mc.mean - analytic) / mc.std_error;
        let jensen_ok = (tolerance == Tolerance::LowerBound).then_some(mc.mean >= analytic);
        let agrees = match tolerance {
            Tolerance::ThreeSe => mc.agrees_with(analytic, 3.0),
            Tolerance::LowerBound => analytic <= mc.mean + 3.0 * mc.std_error,
            Tolerance::Informational => true,
        };
        Self {
            quantity: quantity.into(),
            analytic,
            mc,
            tolerance,
            jensen_ok,
            z,
            agrees,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub lines: Vec<CompareLine>,
}

impl CompareReport {
    pub fn all_agree(&self) -> bool {
        self.lines.iter().all(|l| l.agrees)
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<28} {:>13} {:>13} {:>11} {:>7} {:>7} {:>8}",
            "quantity", "analytic", "mc_mean", "ci95", "z", "jensen", "verdict"
        )?;
        for l in &self.lines {
            let jensen = match l.jensen_ok {
                Some(true) => "ok",
                Some(false) => "VIOL",
                None => "-",
            };
            let verdict = match (l.tolerance, l.agrees) {
                (Tolerance::Informational, _) => "info",
                (_, true) => "agree",
                (_, false) => "DISAGREE",
            };
            writeln!(
                f,
                "{:<28} {:>13.6e} {:>13.6e} {:>11.3e} {:>7.2} {:>7} {:>8}",
                l.quantity,
                l.analytic,
                l.mc.mean,
                l.mc.ci_halfwidth(1.96),
                l.z,
                jensen,
                verdict
            )?;
        }
        Ok(())
    }
}

/// Serving distance (m) of the interference and rate comparison.
pub const COMPARE_DISTANCE: f64 = 100.0;

/// Analytic values against Monte Carlo estimates at a single scenario.
pub fn compare_engines(s: &Scenario, cfg: &McConfig, traffic_mode: TrafficMode, exec: Exec) -> Result<CompareReport> {
    let model = AnalyticModel::new(s, exec)?;
    let r = COMPARE_DISTANCE;
    let at_r = estimate_at_distance(s, cfg, r)?;
    let ee = estimate_ee(s, cfg)?;
    let traffic = CeThreshold::Traffic(traffic_mode);
    let ce_mean = estimate_ce(s, cfg, traffic, SinrMode::MeanInterference(&model))?;
    let ce_inst = estimate_ce(s, cfg, traffic, SinrMode::Instantaneous)?;
    let ce_analytic = model.coverage_efficiency_traffic(traffic_mode)?;
    Ok(CompareReport {
        lines: vec![
            CompareLine::new("interference@100m", model.avg_interference(r), at_r.interference, Tolerance::ThreeSe),
            CompareLine::new("rate@100m", model.rate_lower_bound(r), at_r.rate, Tolerance::LowerBound),
            CompareLine::new("ee", model.energy_efficiency()?, ee.ee, Tolerance::LowerBound),
            CompareLine::new("ce(mean-interference)", ce_analytic, ce_mean, Tolerance::ThreeSe),
            CompareLine::new("ce(instantaneous)", ce_analytic, ce_inst, Tolerance::Informational),
        ],
    })
}
