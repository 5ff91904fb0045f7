use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::geometry::{assign_marks, matern_ii_thin, random_thin, sample_ppp, GridIndex, Point2D, PointSet, Window};
use crate::metrics::{RateCurve, Regularization, Scenario, SecondMoment, Strategy};
use crate::numeric::softplus;
use crate::rng::{derive_seed, rng_from_seed, SimRng, STREAM_BS, STREAM_MARKS, STREAM_RANDOM_THIN, STREAM_SHADOWING, STREAM_UE};

/// One user evaluated against a realized set of active stations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeRecord {
    pub position: Point2D,
    pub serving_distance: f64,
    /// Interference power (W), averaged over the interferers' shadowing.
    pub interference: f64,
    /// SINR with a sampled serving-link shadowing weight.
    pub sinr: f64,
    /// `log2(1 + sinr)`.
    pub rate: f64,
    /// Mean of `rate` over the serving-link shadowing given the geometry.
    pub mean_rate: f64,
    /// Transmit power (W) this user's pilot draws from non-serving stations.
    pub tx_power_caused: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationStats {
    /// Active stations inside the measurement square.
    pub active_count: usize,
    pub retained_density: f64,
    /// User at the window center; `None` when no station is active.
    pub typical: Option<UeRecord>,
    /// Users of the measurement square (Poisson with density `L lambda_b`).
    pub ues: Vec<UeRecord>,
    pub unserved_ues: usize,
    pub measurement_area: f64,
}

impl RealizationStats {
    pub fn no_coverage(&self) -> bool {
        self.typical.is_none()
    }

    /// Sum over measured users of the power they draw; by stationarity its
    /// mean equals the summed transmit power of the measured stations.
    pub fn tx_power_total(&self) -> f64 {
        self.ues.iter().map(|u| u.tx_power_caused).sum()
    }

    /// Sum of shadowing-averaged rates per unit area (bit/s/Hz/m^2).
    pub fn area_rate(&self) -> f64 {
        self.ues.iter().map(|u| u.mean_rate).sum::<f64>() / self.measurement_area
    }

    /// Consumed power per unit area (W/m^2).
    pub fn area_power(&self, s: &Scenario) -> f64 {
        let r = &s.radio;
        let static_part = self.active_count as f64 * (r.m() * r.p_rf_chain + r.p_sta);
        (self.tx_power_total() / r.eta + static_part) / self.measurement_area
    }
}

/// Base stations left on by the scenario's strategy.
pub fn active_stations(s: &Scenario, window: &Window, seed: u64) -> Result<PointSet> {
    let all = sample_ppp(s.lambda_b(), window, derive_seed(seed, STREAM_BS))?;
    match s.strategy {
        Strategy::AlwaysOn => Ok(all),
        Strategy::MaternII => matern_ii_thin(&assign_marks(&all, derive_seed(seed, STREAM_MARKS)), s.delta()),
        Strategy::RandomThin => random_thin(&all, s.retain_probability(), derive_seed(seed, STREAM_RANDOM_THIN)),
    }
}

/// Constant-kernel tail `2 pi density R^{2-beta} / (beta - 2)` of an interferer sum.
pub(crate) fn power_law_tail(density: f64, radius: f64, beta: f64) -> f64 {
    2.0 * PI * density * radius.powf(2.0 - beta) / (beta - 2.0)
}

/// Smallest interferer distance kept by the regularization.
pub(crate) fn link_floor(s: &Scenario) -> f64 {
    match s.regularization {
        Regularization::ExclusionBall => s.near_field,
        Regularization::MinDistance(e) => e.max(s.near_field),
        Regularization::Disabled => 0.0,
    }
}

pub(crate) fn check_window(s: &Scenario, window: &Window) -> Result<()> {
    s.validate()?;
    if !(s.radio.alpha > 2.0) {
        return Err(Error::Divergence(format!(
            "transmit power needs alpha > 2, got {}",
            s.radio.alpha
        )));
    }
    if !(window.guard() > 0.0) {
        return Err(Error::param("guard", "must be > 0 (it is the truncation radius)"));
    }
    if s.strategy == Strategy::MaternII && window.guard() < s.delta() {
        return Err(Error::param("guard", "must be >= delta"));
    }
    Ok(())
}

pub(crate) fn grid_cell(density: f64) -> f64 {
    if density > 0.0 {
        (1.0 / density).sqrt().clamp(5.0, 1e4)
    } else {
        1e4
    }
}

/// Per-user evaluation constants.
struct Links {
    alpha: f64,
    floor: f64,
    density: f64,
    ln_m2: f64,
    ln_noise: f64,
    tx_scale: f64,
}

impl Links {
    fn new(s: &Scenario) -> Self {
        let r = &s.radio;
        Self {
            alpha: r.alpha,
            floor: link_floor(s),
            density: s.kernel().density(),
            ln_m2: s.shadowing.second_moment().ln(),
            ln_noise: (r.noise_power / r.array_gain()).ln(),
            tx_scale: r.m() * r.p_p * s.shadowing.mean(),
        }
    }

    /// `(sum d^{-2 alpha}, sum d^{-alpha})` over non-serving stations, truncated
    /// at `radius` and completed with the tails.
    fn sums(&self, grid: &GridIndex<'_>, p: &Point2D, serving: usize, radius: f64) -> (f64, f64) {
        let floor2 = self.floor * self.floor;
        let (mut s2, mut s1) = (0.0, 0.0);
        let half = -0.5 * self.alpha;
        grid.for_each_within(p, radius, |i, d2| {
            if i != serving && d2 >= floor2 {
                let t = d2.powf(half);
                s1 += t;
                s2 += t * t;
            }
        });
        (
            s2 + power_law_tail(self.density, radius, 2.0 * self.alpha),
            s1 + power_law_tail(self.density, radius, self.alpha),
        )
    }
}

fn evaluate(
    s: &Scenario,
    links: &Links,
    grid: &GridIndex<'_>,
    p: Point2D,
    radius: f64,
    curve: &RateCurve,
    rng: &mut SimRng,
) -> Option<UeRecord> {
    let (serving, r) = grid.nearest(&p)?;
    let (s2, s1) = links.sums(grid, &p, serving, radius);
    let omega = s.shadowing.sample(rng);
    let ln_i = links.ln_m2 + s2.ln();
    let ln_imp = ln_add_exp(ln_i, links.ln_noise);
    let ln_a = -2.0 * links.alpha * r.ln() - ln_imp;
    let ln_sinr = 2.0 * omega.ln() + ln_a;
    Some(UeRecord {
        position: p,
        serving_distance: r,
        interference: s.radio.array_gain() * ln_i.exp(),
        sinr: ln_sinr.exp(),
        rate: softplus(ln_sinr) / LN_2,
        mean_rate: curve.eval(ln_a),
        tx_power_caused: links.tx_scale * s1,
    })
}

pub(crate) fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Serving distance and realized interference-sum of the user at the window
/// center, without sampling other users. `None` without active stations.
pub fn typical_user(s: &Scenario, window: &Window, seed: u64) -> Result<Option<(f64, f64)>> {
    check_window(s, window)?;
    let active = active_stations(s, window, seed)?;
    let grid = GridIndex::new(&active.points, grid_cell(s.active_density()));
    let links = Links::new(s);
    Ok(grid.nearest(&Point2D::ORIGIN).map(|(j, r)| {
        let (s2, _) = links.sums(&grid, &Point2D::ORIGIN, j, window.half_width());
        (r, s2)
    }))
}

/// One realization: active stations, the typical user at the window center
/// and a Poisson population of users over the measurement square, each
/// served by its nearest active station.
pub fn run_realization(s: &Scenario, window: &Window, seed: u64) -> Result<RealizationStats> {
    check_window(s, window)?;
    run_with_curve(s, window, seed, &RateCurve::new(s.shadowing.sigma_ln()))
}

pub(crate) fn run_with_curve(s: &Scenario, window: &Window, seed: u64, curve: &RateCurve) -> Result<RealizationStats> {
    let active = active_stations(s, window, seed)?;
    let grid = GridIndex::new(&active.points, grid_cell(s.active_density()));
    let links = Links::new(s);
    let mut rng = rng_from_seed(derive_seed(seed, STREAM_SHADOWING));

    let typical = evaluate(s, &links, &grid, Point2D::ORIGIN, window.half_width(), curve, &mut rng);
    let ue_window = Window::new(window.half_width(), 0.0)?;
    let users = sample_ppp(s.ues_per_cell_l * s.lambda_b(), &ue_window, derive_seed(seed, STREAM_UE))?;
    let mut ues = Vec::with_capacity(users.len());
    let mut unserved = 0;
    for &p in users.iter() {
        match evaluate(s, &links, &grid, p, window.guard(), curve, &mut rng) {
            Some(rec) => ues.push(rec),
            None => unserved += 1,
        }
    }
    let active_count = active.count_in_measurement(window);
    Ok(RealizationStats {
        active_count,
        retained_density: active_count as f64 / window.measurement_area(),
        typical,
        ues,
        unserved_ues: unserved,
        measurement_area: window.measurement_area(),
    })
}
