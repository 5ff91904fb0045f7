//! Realizations conditioned on a serving station at a fixed distance from
//! the user (Palm sampling), the Monte Carlo counterpart of the profile
//! integrals.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::geometry::{matern_ii_retained, sample_ppp, MarkedPoint, MarkedPointSet, Point2D, Window};
use crate::metrics::{expected_log_rate, Regularization, Scenario, SecondMoment, Strategy};
use crate::rng::{derive_seed, rng_from_seed, STREAM_BS, STREAM_MARKS, STREAM_PROBES};

use super::estimate::{McConfig, McEstimate};
use super::realization::{active_stations, check_window, power_law_tail};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PalmSample {
    /// Interference power (W), averaged over the interferers' shadowing.
    pub interference: f64,
    /// Mean rate over the serving-link shadowing given the realized interference.
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceEstimate {
    pub interference: McEstimate,
    pub rate: McEstimate,
}

fn interferer_floor(s: &Scenario, r: f64) -> Result<f64> {
    match s.regularization {
        Regularization::ExclusionBall => Ok(r.max(s.near_field)),
        Regularization::MinDistance(e) => Ok(e.max(s.near_field)),
        Regularization::Disabled => {
            let hc = s.kernel().hard_core();
            if r >= hc {
                return Err(Error::Divergence(format!(
                    "unregularized interference at r_int = {r} m: interferers can sit at the user"
                )));
            }
            Ok(0.0)
        }
    }
}

/// Active interferers of a realization whose serving station sits at
/// `(r, 0)` and is active. Under dependent thinning the serving station's
/// retention is imposed by rejection on its own `delta`-disk, which leaves
/// the rest of the process untouched.
fn palm_interferers(s: &Scenario, window: &Window, r: f64, seed: u64) -> Result<Vec<Point2D>> {
    if s.strategy != Strategy::MaternII {
        return Ok(active_stations(s, window, seed)?.points);
    }
    let x_int = Point2D::new(r, 0.0);
    let delta = s.delta();
    let all = sample_ppp(s.lambda_b(), window, derive_seed(seed, STREAM_BS))?;
    let mut mark_rng = rng_from_seed(derive_seed(seed, STREAM_MARKS));
    let d2 = delta * delta;
    let mut points: Vec<MarkedPoint> = all
        .iter()
        .map(|&point| MarkedPoint {
            point,
            mark: mark_rng.random::<f64>(),
        })
        .filter(|m| m.point.dist2(&x_int) > d2)
        .collect();

    let mut rng = rng_from_seed(derive_seed(seed, STREAM_PROBES));
    let disk_mean = s.lambda_b() * PI * d2;
    let count = Poisson::new(disk_mean).map_err(|e| Error::param("lambda_b", e.to_string()))?;
    let (disk, own_mark) = loop {
        let n = count.sample(&mut rng) as usize;
        let disk: Vec<MarkedPoint> = (0..n)
            .map(|_| {
                let rad = delta * rng.random::<f64>().sqrt();
                let ang = 2.0 * PI * rng.random::<f64>();
                MarkedPoint {
                    point: Point2D::new(x_int.x + rad * ang.cos(), x_int.y + rad * ang.sin()),
                    mark: rng.random::<f64>(),
                }
            })
            .collect();
        let top = disk.iter().map(|m| m.mark).fold(0.0, f64::max);
        let own: f64 = rng.random();
        if own > top {
            break (disk, own);
        }
    };
    points.extend(disk);
    let serving = points.len();
    points.push(MarkedPoint {
        point: x_int,
        mark: own_mark,
    });
    let marked = MarkedPointSet { points };
    let kept = matern_ii_retained(&marked, delta)?;
    debug_assert!(kept.contains(&serving));
    Ok(kept
        .into_iter()
        .filter(|&i| i != serving)
        .map(|i| marked.points[i].point)
        .collect())
}

/// One Palm realization with the serving station at distance `r` from the
/// user at the window center. Interferers beyond `window.half_width()` are
/// replaced by the constant-kernel tail.
pub fn sample_at_distance(s: &Scenario, window: &Window, r: f64, seed: u64) -> Result<PalmSample> {
    check_window(s, window)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::param("r_int", "must be finite and > 0"));
    }
    let radius = window.half_width();
    let sat = s.kernel().saturation();
    if r + sat > radius {
        return Err(Error::param("half_width", "must be >= r_int + 2 delta"));
    }
    let floor = interferer_floor(s, r)?;
    let beta = 2.0 * s.radio.alpha;
    let (floor2, radius2) = (floor * floor, radius * radius);
    let mut sum = 0.0;
    for p in palm_interferers(s, window, r, seed)? {
        let d2 = p.dist2(&Point2D::ORIGIN);
        if d2 >= floor2 && d2 <= radius2 {
            sum += d2.powf(-0.5 * beta);
        }
    }
    sum += power_law_tail(s.kernel().density(), radius, beta);
    let ln_m2 = s.shadowing.second_moment().ln();
    let g = s.radio.array_gain();
    let ln_i = ln_m2 + sum.ln();
    let ln_imp = super::realization::ln_add_exp(ln_i, (s.radio.noise_power / g).ln());
    let ln_a = -beta * r.ln() - ln_imp;
    Ok(PalmSample {
        interference: g * ln_i.exp(),
        rate: expected_log_rate(ln_a, s.shadowing.sigma_ln()),
    })
}

/// Mean interference and mean rate at serving distance `r` over
/// `cfg.realizations` Palm realizations.
pub fn estimate_at_distance(s: &Scenario, cfg: &McConfig, r: f64) -> Result<DistanceEstimate> {
    cfg.check()?;
    let rows = cfg
        .exec
        .map_indexed(cfg.realizations, |i| {
            sample_at_distance(s, &cfg.window, r, derive_seed(cfg.master_seed, i as u64))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let i: Vec<f64> = rows.iter().map(|p| p.interference).collect();
    let rate: Vec<f64> = rows.iter().map(|p| p.rate).collect();
    Ok(DistanceEstimate {
        interference: McEstimate::from_samples(&i)?,
        rate: McEstimate::from_samples(&rate)?,
    })
}
