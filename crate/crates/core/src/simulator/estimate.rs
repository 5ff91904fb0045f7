use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{nearest_distance, Point2D, Window};
use crate::metrics::{AnalyticModel, RateCurve, Scenario, Strategy, TrafficMode};
use crate::numeric::softplus;
use crate::propagation::pareto_mean;
use crate::rng::{derive_seed, rng_from_seed, STREAM_TRAFFIC};

use super::realization::{active_stations, check_window, ln_add_exp, run_with_curve, typical_user};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(realization_count)`.
    pub std_error: f64,
    pub realization_count: usize,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::param("realizations", "must be >= 2"));
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            realization_count: n,
        })
    }

    /// Half-width of the normal-approximation interval at `z` standard errors.
    pub fn ci_halfwidth(&self, z: f64) -> f64 {
        z * self.std_error
    }

    /// `|mean - value| <= k * std_error`.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

/// Window, sample size, seed and execution mode of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub window: Window,
    pub realizations: usize,
    pub master_seed: u64,
    pub exec: Exec,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            window: Window::new(2500.0, 500.0).expect("static defaults"),
            realizations: 200,
            master_seed: 1,
            exec: Exec::default(),
        }
    }
}

impl McConfig {
    pub fn new(window: Window, realizations: usize, master_seed: u64) -> Self {
        Self {
            window,
            realizations,
            master_seed,
            exec: Exec::default(),
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.realizations < 2 {
            return Err(Error::param("realizations", "must be >= 2"));
        }
        Ok(())
    }

    fn seed(&self, i: usize) -> u64 {
        derive_seed(self.master_seed, i as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EeEstimate {
    /// Ratio of mean area rate to mean area power, delta-method error.
    pub ee: McEstimate,
    pub area_rate: McEstimate,
    pub area_power: McEstimate,
    pub mean_active_density: f64,
    /// Realizations without any active station.
    pub no_coverage: usize,
}

/// Energy efficiency as (mean area rate) / (mean area power).
pub fn estimate_ee(s: &Scenario, cfg: &McConfig) -> Result<EeEstimate> {
    cfg.check()?;
    check_window(s, &cfg.window)?;
    let curve = RateCurve::new(s.shadowing.sigma_ln());
    let rows = cfg
        .exec
        .map_indexed(cfg.realizations, |i| -> Result<(f64, f64, f64, bool)> {
            let st = run_with_curve(s, &cfg.window, cfg.seed(i), &curve)?;
            Ok((st.area_rate(), st.area_power(s), st.retained_density, st.no_coverage()))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len() as f64;
    let a: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let area_rate = McEstimate::from_samples(&a)?;
    let area_power = McEstimate::from_samples(&b)?;
    let ratio = area_rate.mean / area_power.mean;
    let cov = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - area_rate.mean) * (y - area_power.mean))
        .sum::<f64>()
        / (n - 1.0);
    let var_a = (area_rate.std_error.powi(2)) * n;
    let var_b = (area_power.std_error.powi(2)) * n;
    let var = (var_a - 2.0 * ratio * cov + ratio * ratio * var_b).max(0.0) / (n * area_power.mean.powi(2));
    Ok(EeEstimate {
        ee: McEstimate {
            mean: ratio,
            std_error: var.sqrt(),
            realization_count: rows.len(),
        },
        area_rate,
        area_power,
        mean_active_density: rows.iter().map(|r| r.2).sum::<f64>() / n,
        no_coverage: rows.iter().filter(|r| r.3).count(),
    })
}

/// Interference entering the SINR of the coverage estimator.
#[derive(Debug, Clone, Copy)]
pub enum SinrMode<'a> {
    /// Realized interferer geometry.
    Instantaneous,
    /// Mean interference at the realized serving distance.
    MeanInterference(&'a AnalyticModel),
}

/// Rate threshold of the coverage estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CeThreshold {
    Traffic(TrafficMode),
    Fixed(f64),
}

/// Fraction of realizations in which the user at the window center meets
/// the threshold with the distance-only SINR. Realizations without an
/// active station count as not covered.
pub fn estimate_ce(s: &Scenario, cfg: &McConfig, threshold: CeThreshold, mode: SinrMode<'_>) -> Result<McEstimate> {
    cfg.check()?;
    if let SinrMode::MeanInterference(m) = mode {
        if m.scenario() != s {
            return Err(Error::Model("analytic model built for a different scenario".into()));
        }
    }
    let fixed = match threshold {
        CeThreshold::Fixed(rho) if rho.is_finite() && rho >= 0.0 => Some(rho),
        CeThreshold::Fixed(_) => return Err(Error::param("rho", "must be finite and >= 0")),
        CeThreshold::Traffic(TrafficMode::AtMean) => Some(pareto_mean(&s.traffic)?),
        CeThreshold::Traffic(TrafficMode::Marginalized) => None,
    };
    let ln_m2 = s.shadowing.second_moment().ln();
    let ln_noise = (s.radio.noise_power / s.radio.array_gain()).ln();
    let beta = 2.0 * s.radio.alpha;
    let hits = cfg
        .exec
        .map_indexed(cfg.realizations, |i| -> Result<f64> {
            let seed = cfg.seed(i);
            let Some((r, s2)) = typical_user(s, &cfg.window, seed)? else {
                return Ok(0.0);
            };
            let ln_sinr = match mode {
                SinrMode::Instantaneous => s.ln_omega_bar_sq() - beta * r.ln() - ln_add_exp(ln_m2 + s2.ln(), ln_noise),
                SinrMode::MeanInterference(m) => m.ln_sinr(r.ln()).0,
            };
            let rho = match fixed {
                Some(rho) => rho,
                None => s.traffic.sample(&mut rng_from_seed(derive_seed(seed, STREAM_TRAFFIC))),
            };
            Ok(if softplus(ln_sinr) / LN_2 > rho { 1.0 } else { 0.0 })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    McEstimate::from_samples(&hits)
}

/// Histogram of the serving distance of the user at the window center.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Samples beyond the last edge or without any active station.
    pub overflow: u64,
    pub total: u64,
}

impl Histogram {
    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Probability mass per bin.
    pub fn mass(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.total as f64).collect()
    }

    /// Density per bin; together with the overflow fraction it integrates to one.
    pub fn density(&self) -> Vec<f64> {
        self.mass().iter().zip(self.widths()).map(|(m, w)| m / w).collect()
    }

    /// Binomial standard error of each bin's density.
    pub fn density_std_error(&self) -> Vec<f64> {
        let n = self.total as f64;
        self.mass()
            .iter()
            .zip(self.widths())
            .map(|(p, w)| (p * (1.0 - p) / n).sqrt() / w)
            .collect()
    }

    pub fn overflow_fraction(&self) -> f64 {
        self.overflow as f64 / self.total as f64
    }
}

pub fn empirical_nearest_pdf(s: &Scenario, cfg: &McConfig, edges: &[f64]) -> Result<Histogram> {
    if cfg.realizations < 100 {
        return Err(Error::param("realizations", "must be >= 100"));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) || edges[0] < 0.0 {
        return Err(Error::param("edges", "must be at least two strictly increasing values >= 0"));
    }
    s.validate()?;
    if s.strategy == Strategy::MaternII && cfg.window.guard() < s.delta() {
        return Err(Error::param("guard", "must be >= delta"));
    }
    let dists = cfg
        .exec
        .map_indexed(cfg.realizations, |i| -> Result<Option<f64>> {
            let active = active_stations(s, &cfg.window, cfg.seed(i))?;
            Ok(nearest_distance(&Point2D::ORIGIN, &active).ok())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0u64; edges.len() - 1];
    let mut overflow = 0;
    for d in dists {
        match d {
            Some(d) if d >= edges[0] && d < edges[edges.len() - 1] => {
                let k = edges.partition_point(|&e| e <= d) - 1;
                counts[k] += 1;
            }
            _ => overflow += 1,
        }
    }
    Ok(Histogram {
        edges: edges.to_vec(),
        counts,
        overflow,
        total: cfg.realizations as u64,
    })
}
