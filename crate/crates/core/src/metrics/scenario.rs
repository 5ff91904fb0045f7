use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hcpp::{zeta1, HcppParams, NearestPdfModel, ServingDistance};
use crate::propagation::{RadioParams, ShadowingConvention, ShadowingModel, TrafficModel};

use super::kernel::Kernel;

/// Which base stations stay on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Every base station active.
    #[serde(rename = "ppp")]
    AlwaysOn,
    /// Keep the locally largest traffic mark within `delta`.
    #[serde(rename = "matern")]
    MaternII,
    /// Independent thinning at the same active density.
    #[serde(rename = "random")]
    RandomThin,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::MaternII, Strategy::RandomThin, Strategy::AlwaysOn];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::AlwaysOn => "ppp",
            Strategy::MaternII => "matern",
            Strategy::RandomThin => "random",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ppp" | "always-on" => Ok(Strategy::AlwaysOn),
            "matern" | "matern-ii" | "hcpp" => Ok(Strategy::MaternII),
            "random" => Ok(Strategy::RandomThin),
            other => Err(Error::Config(format!(
                "unknown strategy `{other}` (expected ppp, matern or random)"
            ))),
        }
    }
}

/// Treatment of interferers arbitrarily close to the user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularization {
    /// No interferer closer than the serving station (nearest-BS association).
    ExclusionBall,
    /// Interferers closer than `epsilon` are dropped.
    MinDistance(f64),
    /// The raw integral; diverges whenever the pair density is positive at the user.
    Disabled,
}

impl fmt::Display for Regularization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regularization::ExclusionBall => f.write_str("exclusion-ball"),
            Regularization::MinDistance(e) => write!(f, "min-distance:{e}"),
            Regularization::Disabled => f.write_str("none"),
        }
    }
}

impl FromStr for Regularization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exclusion-ball" => Ok(Regularization::ExclusionBall),
            "none" | "disabled" => Ok(Regularization::Disabled),
            _ => {
                let eps = s
                    .strip_prefix("min-distance:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|e| e.is_finite() && *e > 0.0)
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "unknown regularization `{s}` (expected exclusion-ball, min-distance:<m> with m > 0, or none)"
                        ))
                    })?;
                Ok(Regularization::MinDistance(eps))
            }
        }
    }
}

/// How the random strategy's probability `zeta1 / lambda_b` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomReading {
    /// Keep each station with probability `zeta1 / lambda_b` (matched density).
    #[default]
    Retain,
    /// Switch each station off with probability `zeta1 / lambda_b`.
    SwitchOff,
}

/// Shadowing weight of the serving link in the distance-only SINR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaBar {
    #[default]
    SecondMoment,
    Unity,
}

/// Treatment of the traffic threshold in the coverage metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrafficMode {
    #[default]
    AtMean,
    Marginalized,
}

impl FromStr for TrafficMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "at-mean" => Ok(TrafficMode::AtMean),
            "marginalized" => Ok(TrafficMode::Marginalized),
            other => Err(Error::Config(format!(
                "unknown traffic_mode `{other}` (expected at-mean or marginalized)"
            ))),
        }
    }
}

impl fmt::Display for TrafficMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrafficMode::AtMean => "at-mean",
            TrafficMode::Marginalized => "marginalized",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub hcpp: HcppParams,
    pub radio: RadioParams,
    pub shadowing: ShadowingModel,
    pub traffic: TrafficModel,
    /// Users per original (pre-switch-off) cell.
    pub ues_per_cell_l: f64,
    pub strategy: Strategy,
    pub regularization: Regularization,
    pub random_reading: RandomReading,
    pub omega_bar: OmegaBar,
    /// Distance floor (m) for user-to-station links in the power integrals.
    pub near_field: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            hcpp: HcppParams::new(1e-4, 200.0).expect("static defaults"),
            radio: RadioParams::default(),
            shadowing: ShadowingModel::new(6.0, ShadowingConvention::PaperMoments).expect("static defaults"),
            traffic: TrafficModel::default(),
            ues_per_cell_l: 5.0,
            strategy: Strategy::MaternII,
            regularization: Regularization::ExclusionBall,
            random_reading: RandomReading::Retain,
            omega_bar: OmegaBar::SecondMoment,
            near_field: 1.0,
        }
    }
}

impl Scenario {
    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_hcpp(mut self, lambda_b: f64, delta: f64) -> Result<Self> {
        self.hcpp = HcppParams::new(lambda_b, delta)?;
        Ok(self)
    }

    pub fn with_antennas(mut self, m: u32) -> Self {
        self.radio.antennas_m = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        self.traffic.validate()?;
        if !(self.ues_per_cell_l.is_finite() && self.ues_per_cell_l >= 0.0) {
            return Err(Error::param("ues_per_cell_l", "must be finite and >= 0"));
        }
        if !(self.near_field.is_finite() && self.near_field >= 0.0) {
            return Err(Error::param("near_field", "must be finite and >= 0"));
        }
        if let Regularization::MinDistance(e) = self.regularization {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::param("regularization", "must use a min-distance > 0"));
            }
        }
        let p = self.retain_probability();
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("random_reading", "must give a retain probability in [0,1]"));
        }
        Ok(())
    }

    pub fn lambda_b(&self) -> f64 {
        self.hcpp.lambda_b()
    }

    pub fn delta(&self) -> f64 {
        self.hcpp.delta()
    }

    /// Retention probability of the independent thinning used by the random strategy.
    pub fn retain_probability(&self) -> f64 {
        let q = zeta1(&self.hcpp) / self.lambda_b();
        match self.random_reading {
            RandomReading::Retain => q,
            RandomReading::SwitchOff => 1.0 - q,
        }
    }

    /// Density of active stations under the strategy.
    pub fn active_density(&self) -> f64 {
        match self.strategy {
            Strategy::AlwaysOn => self.lambda_b(),
            Strategy::MaternII => zeta1(&self.hcpp),
            Strategy::RandomThin => self.retain_probability() * self.lambda_b(),
        }
    }

    /// Users per active cell, `L lambda_b / lambda*`.
    pub fn k_ue(&self) -> f64 {
        self.ues_per_cell_l * self.lambda_b() / self.active_density()
    }

    pub fn kernel(&self) -> Kernel {
        match self.strategy {
            Strategy::MaternII => Kernel::HardCore(self.hcpp),
            _ => Kernel::Poisson {
                density: self.active_density(),
            },
        }
    }

    pub fn serving_distance(&self) -> Result<ServingDistance> {
        match self.strategy {
            Strategy::MaternII => Ok(ServingDistance::HardCore(NearestPdfModel::fit(self.hcpp)?)),
            _ => Ok(ServingDistance::Rayleigh {
                intensity: self.active_density(),
            }),
        }
    }

    /// `ln` of the serving-link shadowing weight in the distance-only SINR.
    pub fn ln_omega_bar_sq(&self) -> f64 {
        match self.omega_bar {
            OmegaBar::SecondMoment => self.shadowing.second_moment().ln(),
            OmegaBar::Unity => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("all".parse::<Strategy>().is_err());
        for r in [
            Regularization::ExclusionBall,
            Regularization::MinDistance(2.5),
            Regularization::Disabled,
        ] {
            assert_eq!(r.to_string().parse::<Regularization>().unwrap(), r);
        }
        assert!("min-distance:-1".parse::<Regularization>().is_err());
    }

    #[test]
    fn matched_density_and_k() {
        let s = Scenario::default();
        let m = s.with_strategy(Strategy::MaternII);
        let r = s.with_strategy(Strategy::RandomThin);
        let p = s.with_strategy(Strategy::AlwaysOn);
        assert_eq!(m.active_density(), r.active_density());
        assert_eq!(p.k_ue(), 5.0);
        assert!((m.k_ue() - 5.0 * 1e-4 / zeta1(&s.hcpp)).abs() < 1e-12);
        let mut off = r;
        off.random_reading = RandomReading::SwitchOff;
        assert!((off.active_density() - (1e-4 - zeta1(&s.hcpp))).abs() < 1e-18);
    }
}
