//! Flat TOML configuration of a scenario, a Monte Carlo run and an optional sweep.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Window;
use crate::hcpp::HcppParams;
use crate::metrics::{OmegaBar, RandomReading, Regularization, Scenario, Strategy, TrafficMode};
use crate::propagation::{dbm_to_watts, RadioParams, ShadowingConvention, ShadowingModel, TrafficModel};
use crate::simulator::McConfig;

/// Which engine produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Analytic,
    #[serde(alias = "mc")]
    Montecarlo,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Montecarlo => "montecarlo",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Engine::Analytic),
            "mc" | "montecarlo" => Ok(Engine::Montecarlo),
            other => Err(Error::Config(format!(
                "unknown engine `{other}` (expected analytic or mc)"
            ))),
        }
    }
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptParam {
    LambdaB,
    Delta,
    AntennasM,
}

impl SweptParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweptParam::LambdaB => "lambda_b",
            SweptParam::Delta => "delta",
            SweptParam::AntennasM => "antennas_m",
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(&self, base: &Scenario, value: f64) -> Result<Scenario> {
        match self {
            SweptParam::LambdaB => base.with_hcpp(value, base.delta()),
            SweptParam::Delta => base.with_hcpp(base.lambda_b(), value),
            SweptParam::AntennasM => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                    return Err(Error::param("antennas_m", "must be a positive integer"));
                }
                Ok(base.with_antennas(value as u32))
            }
        }
    }
}

impl fmt::Display for SweptParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub param: SweptParam,
    pub values: Vec<f64>,
    #[serde(default = "all_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "analytic_only")]
    pub engines: Vec<Engine>,
}

fn all_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}

fn analytic_only() -> Vec<Engine> {
    vec![Engine::Analytic]
}

impl SweepSection {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep.values must not be empty".into()));
        }
        if self.values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("sweep.values must be strictly increasing".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("sweep.strategies must not be empty".into()));
        }
        if self.engines.is_empty() {
            return Err(Error::Config("sweep.engines must not be empty".into()));
        }
        Ok(())
    }
}

/// Every key is optional; absent keys take the default parameter table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub lambda_b: f64,
    pub delta_m: f64,
    pub antennas_m: u32,
    pub ues_per_cell_l: f64,
    pub sigma_s: f64,
    pub noise_dbm: f64,
    pub alpha: f64,
    pub p_f_w: f64,
    pub p_p_w: f64,
    pub eta: f64,
    pub p_rf_chain_w: f64,
    pub p_sta_w: f64,
    pub theta: f64,
    pub rho_min: f64,
    /// Side of the measurement square (m).
    pub window_m: f64,
    pub guard_m: f64,
    pub realizations: usize,
    pub seed: u64,
    pub strategy: Strategy,
    pub regularization: String,
    pub traffic_mode: TrafficMode,
    pub shadowing_convention: ShadowingConvention,
    pub random_reading: RandomReading,
    pub omega_bar: OmegaBar,
    pub near_field_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl Default for Config {
    fn default() -> Self {
        let r = RadioParams::default();
        let t = TrafficModel::default();
        Self {
            lambda_b: 1e-4,
            delta_m: 200.0,
            antennas_m: r.antennas_m,
            ues_per_cell_l: 5.0,
            sigma_s: 6.0,
            noise_dbm: -174.0,
            alpha: r.alpha,
            p_f_w: r.p_f,
            p_p_w: r.p_p,
            eta: r.eta,
            p_rf_chain_w: r.p_rf_chain,
            p_sta_w: r.p_sta,
            theta: t.theta,
            rho_min: t.rho_min,
            window_m: 5000.0,
            guard_m: 500.0,
            realizations: 200,
            seed: 1,
            strategy: Strategy::MaternII,
            regularization: Regularization::ExclusionBall.to_string(),
            traffic_mode: TrafficMode::AtMean,
            shadowing_convention: ShadowingConvention::PaperMoments,
            random_reading: RandomReading::Retain,
            omega_bar: OmegaBar::SecondMoment,
            near_field_m: 1.0,
            sweep: None,
        }
    }
}

const KEYS: [&str; 26] = [
    "lambda_b",
    "delta_m",
    "antennas_m",
    "ues_per_cell_l",
    "sigma_s",
    "noise_dbm",
    "alpha",
    "p_f_w",
    "p_p_w",
    "eta",
    "p_rf_chain_w",
    "p_sta_w",
    "theta",
    "rho_min",
    "window_m",
    "guard_m",
    "realizations",
    "seed",
    "strategy",
    "regularization",
    "traffic_mode",
    "shadowing_convention",
    "random_reading",
    "omega_bar",
    "near_field_m",
    "sweep",
];

fn check(ok: bool, key: &'static str, constraint: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Parameter {
            name: key,
            constraint: constraint.to_string(),
        })
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let unknown: Vec<&str> = table
            .keys()
            .map(String::as_str)
            .filter(|k| !KEYS.contains(k))
            .collect();
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        let cfg: Config = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn regularization(&self) -> Result<Regularization> {
        self.regularization.parse()
    }

    pub fn validate(&self) -> Result<()> {
        check(self.lambda_b.is_finite() && self.lambda_b > 0.0, "lambda_b", "must be finite and > 0")?;
        check(self.delta_m.is_finite() && self.delta_m >= 0.0, "delta_m", "must be finite and >= 0")?;
        check(self.sigma_s.is_finite() && self.sigma_s >= 0.0, "sigma_s", "must be finite and >= 0")?;
        check(self.noise_dbm < f64::INFINITY && !self.noise_dbm.is_nan(), "noise_dbm", "must be < inf (use -inf for no noise)")?;
        check(self.window_m.is_finite() && self.window_m > 0.0, "window_m", "must be finite and > 0")?;
        check(self.guard_m.is_finite() && self.guard_m > 0.0, "guard_m", "must be finite and > 0")?;
        check(self.realizations >= 2, "realizations", "must be >= 2")?;
        check(self.near_field_m.is_finite() && self.near_field_m >= 0.0, "near_field_m", "must be finite and >= 0")?;
        self.regularization()?;
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        self.scenario()?;
        Ok(())
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let radio = RadioParams {
            p_f: self.p_f_w,
            p_p: self.p_p_w,
            noise_power: dbm_to_watts(self.noise_dbm),
            antennas_m: self.antennas_m,
            alpha: self.alpha,
            eta: self.eta,
            p_rf_chain: self.p_rf_chain_w,
            p_sta: self.p_sta_w,
        };
        let s = Scenario {
            hcpp: HcppParams::new(self.lambda_b, self.delta_m)?,
            radio,
            shadowing: ShadowingModel::new(self.sigma_s, self.shadowing_convention)?,
            traffic: TrafficModel {
                theta: self.theta,
                rho_min: self.rho_min,
            },
            ues_per_cell_l: self.ues_per_cell_l,
            strategy: self.strategy,
            regularization: self.regularization()?,
            random_reading: self.random_reading,
            omega_bar: self.omega_bar,
            near_field: self.near_field_m,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn window(&self) -> Result<Window> {
        Window::new(0.5 * self.window_m, self.guard_m)
    }

    pub fn mc_config(&self) -> Result<McConfig> {
        Ok(McConfig::new(self.window()?, self.realizations, self.seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default_table() {
        let c = Config::parse("").unwrap();
        assert_eq!(c, Config::default());
        let s = c.scenario().unwrap();
        assert_eq!(s, Scenario::default());
    }

    #[test]
    fn eta_out_of_range() {
        let e = Config::parse("eta = 1.5").unwrap_err();
        assert!(e.to_string().contains("eta must be in (0,1]"), "{e}");
    }

    #[test]
    fn unknown_keys_are_listed() {
        let e = Config::parse("foo = 1\nlambda_b = 2e-4\nbar = 'x'").unwrap_err();
        let m = e.to_string();
        assert!(m.contains("foo") && m.contains("bar") && !m.contains("lambda_b"), "{m}");
    }

    #[test]
    fn round_trip() {
        let text = r#"
lambda_b = 2.5e-5
delta_m = 250.0
noise_dbm = -inf
regularization = "min-distance:3"
traffic_mode = "marginalized"
strategy = "random"

[sweep]
param = "delta"
values = [100.0, 150.0, 200.0]
engines = ["analytic", "mc"]
"#;
        let c = Config::parse(text).unwrap();
        assert_eq!(c.scenario().unwrap().radio.noise_power, 0.0);
        let again = Config::parse(&c.to_toml()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn sweep_values_must_increase() {
        let e = Config::parse("[sweep]\nparam = 'delta'\nvalues = [200.0, 100.0]").unwrap_err();
        assert!(e.to_string().contains("strictly increasing"));
    }
}
