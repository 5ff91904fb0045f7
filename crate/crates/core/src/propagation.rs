//! Shadowing, path loss, noise and the Pareto traffic model.

use std::f64::consts::{LN_10, PI};

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// How the dispersion parameter maps to the log-normal law of `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShadowingConvention {
    /// `ln omega ~ N(0, sigma^2)`, giving `E[omega] = e^{sigma^2/2}`, `E[omega^2] = e^{2 sigma^2}`.
    #[default]
    PaperMoments,
    /// `sigma` in dB: `omega = 10^{s/10}`, `s ~ N(0, sigma^2)`.
    DbStd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowingModel {
    sigma_s: f64,
    convention: ShadowingConvention,
}

impl ShadowingModel {
    /// `sigma_s = 0` is accepted as the deterministic limit `omega = 1`.
    pub fn new(sigma_s: f64, convention: ShadowingConvention) -> Result<Self> {
        if !(sigma_s.is_finite() && sigma_s >= 0.0) {
            return Err(Error::param("sigma_s", "must be finite and >= 0"));
        }
        Ok(Self { sigma_s, convention })
    }

    pub fn sigma_s(&self) -> f64 {
        self.sigma_s
    }

    pub fn convention(&self) -> ShadowingConvention {
        self.convention
    }

    /// Standard deviation of `ln omega`.
    pub fn sigma_ln(&self) -> f64 {
        match self.convention {
            ShadowingConvention::PaperMoments => self.sigma_s,
            ShadowingConvention::DbStd => self.sigma_s * LN_10 / 10.0,
        }
    }

    /// `E[omega^order]` for order 1 or 2.
    pub fn moment(&self, order: u32) -> Result<f64> {
        shadowing_moment(self, order)
    }

    pub fn mean(&self) -> f64 {
        (0.5 * self.sigma_ln().powi(2)).exp()
    }

    pub fn second_moment(&self) -> f64 {
        (2.0 * self.sigma_ln().powi(2)).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let s = self.sigma_ln();
        if s == 0.0 {
            return 1.0;
        }
        let z: f64 = rand_distr::StandardNormal.sample(rng);
        (s * z).exp()
    }

    /// Density of `omega` under this convention.
    pub fn pdf(&self, omega: f64) -> f64 {
        lognormal_pdf(omega, self.sigma_ln())
    }
}

fn lognormal_pdf(omega: f64, s: f64) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    let l = omega.ln();
    (-(l * l) / (2.0 * s * s)).exp() / (omega * s * (2.0 * PI).sqrt())
}

/// The shadowing density exactly as printed alongside the moment formulas:
/// `5 / (omega sqrt(2 pi) sigma) exp(-25 ln^2 omega / (2 sigma^2))`,
/// i.e. `ln omega ~ N(0, (sigma/5)^2)`.
pub fn printed_shadowing_pdf(omega: f64, sigma_s: f64) -> f64 {
    lognormal_pdf(omega, sigma_s / 5.0)
}

pub fn shadowing_sample(model: &ShadowingModel, seed: u64) -> f64 {
    model.sample(&mut rng_from_seed(seed))
}

pub fn shadowing_moment(model: &ShadowingModel, order: u32) -> Result<f64> {
    match order {
        1 => Ok(model.mean()),
        2 => Ok(model.second_moment()),
        _ => Err(Error::param("order", "must be 1 or 2")),
    }
}

/// `beta = omega * r^{-alpha}`.
pub fn large_scale_coeff(omega: f64, r: f64, alpha: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::param("r", "must be > 0"));
    }
    Ok(omega * r.powf(-alpha))
}

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub p_f: f64,
    pub p_p: f64,
    pub noise_power: f64,
    pub antennas_m: u32,
    pub alpha: f64,
    pub eta: f64,
    pub p_rf_chain: f64,
    pub p_sta: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            p_f: 7.7,
            p_p: 0.13,
            noise_power: dbm_to_watts(-174.0),
            antennas_m: 128,
            alpha: 4.0,
            eta: 0.38,
            p_rf_chain: 0.048,
            p_sta: 4.3,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_f_w", self.p_f),
            ("p_p_w", self.p_p),
            ("noise_power", self.noise_power),
            ("p_rf_chain_w", self.p_rf_chain),
            ("p_sta_w", self.p_sta),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, "must be finite and >= 0"));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::param("eta", "must be in (0,1]"));
        }
        if self.antennas_m < 1 {
            return Err(Error::param("antennas_m", "must be >= 1"));
        }
        if !(self.alpha.is_finite() && self.alpha > 1.0) {
            return Err(Error::param("alpha", "must be > 1"));
        }
        if self.p_rf_chain == 0.0 && self.p_sta == 0.0 {
            return Err(Error::param("p_sta_w", "must be > 0 when p_rf_chain_w is 0"));
        }
        Ok(())
    }

    pub fn m(&self) -> f64 {
        self.antennas_m as f64
    }

    /// `M^2 P_f P_p`, the array gain applied to every received power.
    pub fn array_gain(&self) -> f64 {
        self.m() * self.m() * self.p_f * self.p_p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficModel {
    pub theta: f64,
    pub rho_min: f64,
}

impl Default for TrafficModel {
    fn default() -> Self {
        Self {
            theta: 1.5,
            rho_min: 1.0,
        }
    }
}

impl TrafficModel {
    pub fn new(theta: f64, rho_min: f64) -> Result<Self> {
        let t = Self { theta, rho_min };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 1.0 && self.theta <= 2.0) {
            return Err(Error::param("theta", "must be in (1,2]"));
        }
        if !(self.rho_min.is_finite() && self.rho_min > 0.0) {
            return Err(Error::param("rho_min", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.rho_min {
            0.0
        } else {
            self.theta * self.rho_min.powf(self.theta) / x.powf(self.theta + 1.0)
        }
    }

    pub fn ccdf(&self, x: f64) -> f64 {
        if x <= self.rho_min {
            1.0
        } else {
            (self.rho_min / x).powf(self.theta)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // 1 - U lies in (0, 1], which keeps the power finite
        let u: f64 = 1.0 - rng.random::<f64>();
        self.rho_min * u.powf(-1.0 / self.theta)
    }
}

pub fn pareto_mean(t: &TrafficModel) -> Result<f64> {
    if !(t.theta > 1.0) {
        return Err(Error::param("theta", "must be > 1 for a finite mean"));
    }
    Ok(t.theta * t.rho_min / (t.theta - 1.0))
}

pub fn pareto_sample(t: &TrafficModel, seed: u64) -> f64 {
    t.sample(&mut rng_from_seed(seed))
}
