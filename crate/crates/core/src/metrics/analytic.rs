//! Closed-form engine: rate bound, transmit power, energy efficiency and
//! coverage efficiency of a [`Scenario`].

use std::f64::consts::LN_2;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hcpp::ServingDistance;
use crate::numeric::{bisect, log_grid, softplus, std_normal_pdf, CubicHermite, Quad};
use crate::propagation::pareto_mean;

use super::kernel::{palm_integral, Kernel, SecondMoment};
use super::scenario::{Regularization, Scenario, TrafficMode};

const GRID_POINTS: usize = 400;

fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Tabulated `ln J(r, 2 alpha)` and `ln J(r, alpha)` over a log-spaced grid
/// of serving distances. Depends only on the geometry, so one profile serves
/// every antenna count, power setting and shadowing level.
#[derive(Debug, Clone)]
pub struct GeometryProfile {
    kernel: Kernel,
    regularization: Regularization,
    near_field: f64,
    alpha: f64,
    ln_r: Vec<f64>,
    interference: CubicHermite,
    power: Option<CubicHermite>,
}

impl GeometryProfile {
    pub fn build(s: &Scenario, exec: Exec) -> Result<Self> {
        let kernel = s.kernel();
        let alpha = s.radio.alpha;
        let scale = 1.0 / (std::f64::consts::PI * kernel.density()).sqrt();
        let mut rs = log_grid(1e-3 * scale, 30.0 * scale, GRID_POINTS);
        // J has kinks where the binding constraint on the nearest interferer switches
        let hc = kernel.hard_core();
        let (lo, hi) = (rs[0], rs[rs.len() - 1]);
        let mut extras = vec![s.near_field];
        // (point, refinement depth); the strongest feature sits at hc / 2,
        // where the pair-density jump first reaches the exclusion ball
        for (k, depth) in [(0.5 * hc, 30), (hc, 16), (1.5 * hc, 16), (2.0 * hc, 16)] {
            if k > 0.0 {
                extras.push(k);
                // geometric refinement toward the feature on both sides
                for j in 3..depth {
                    let h = 0.5f64.powf(0.5 * j as f64);
                    extras.push(k * (1.0 - h));
                    extras.push(k * (1.0 + h));
                }
            }
        }
        for extra in extras {
            if extra > lo && extra < hi {
                rs.push(extra);
            }
        }
        rs.sort_by(f64::total_cmp);
        rs.dedup_by(|a, b| (*a / *b - 1.0).abs() < 1e-9);
        let reg = s.regularization;
        let nf = s.near_field;
        let rows = exec.map_slice(&rs, |&r| -> Result<(f64, Option<f64>)> {
            let ji = palm_integral(&kernel, r, 2.0 * alpha, reg, nf)?;
            let jp = if alpha > 2.0 {
                Some(palm_integral(&kernel, r, alpha, reg, nf)?)
            } else {
                None
            };
            Ok((ji, jp))
        });
        let mut ji = Vec::with_capacity(rs.len());
        let mut jp = Vec::with_capacity(rs.len());
        for row in rows {
            let (a, b) = row?;
            ji.push(a.ln());
            jp.push(b.map(f64::ln));
        }
        let ln_r: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
        let power = if jp.iter().all(Option::is_some) {
            Some(CubicHermite::centered(ln_r.clone(), jp.into_iter().flatten().collect()))
        } else {
            None
        };
        Ok(Self {
            kernel,
            regularization: reg,
            near_field: nf,
            alpha,
            interference: CubicHermite::centered(ln_r.clone(), ji),
            ln_r,
            power,
        })
    }

    /// Whether this profile was built for the geometry of `s`.
    pub fn fits(&self, s: &Scenario) -> bool {
        self.kernel == s.kernel()
            && self.regularization == s.regularization
            && self.near_field == s.near_field
            && self.alpha == s.radio.alpha
    }

    pub fn r_min(&self) -> f64 {
        self.ln_r[0].exp()
    }

    pub fn r_max(&self) -> f64 {
        self.ln_r[self.ln_r.len() - 1].exp()
    }

    pub fn ln_r_grid(&self) -> &[f64] {
        &self.ln_r
    }

    /// `ln J(r, 2 alpha)` and its derivative with respect to `ln r`.
    pub fn ln_interference(&self, ln_r: f64) -> (f64, f64) {
        self.interference.eval_with_derivative(ln_r)
    }

    pub fn ln_power(&self, ln_r: f64) -> Result<f64> {
        self.power
            .as_ref()
            .map(|p| p.eval(ln_r))
            .ok_or_else(|| Error::Divergence(format!("transmit power needs alpha > 2, got {}", self.alpha)))
    }
}

/// Outcome of inverting the distance-to-SINR map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub r: f64,
    /// The requested SINR lies outside the tabulated range and `r` is clamped.
    pub clamped: bool,
}

/// Rate bound `E_omega[log2(1 + omega^2 a)]` for `ln omega ~ N(0, sigma_ln^2)`.
pub fn expected_log_rate(ln_a: f64, sigma_ln: f64) -> f64 {
    if sigma_ln == 0.0 {
        return softplus(ln_a) / LN_2;
    }
    let two_s = 2.0 * sigma_ln;
    let kink = -ln_a / two_s;
    let lo = -12.0;
    let hi = 12.0 + two_s;
    let mut breaks = vec![lo, hi, 0.0, two_s];
    if kink > lo && kink < hi {
        breaks.push(kink);
    }
    let q = Quad {
        abs_tol: 1e-300,
        rel_tol: 1e-11,
        max_intervals: 500,
    };
    q.integrate_with_breaks(|z: f64| softplus(ln_a + two_s * z) * std_normal_pdf(z), &breaks)
        .value
        / LN_2
}

/// [`expected_log_rate`] at fixed `sigma_ln`, tabulated in `ln a` for bulk
/// evaluation. Outside the table the exact asymptotes take over:
/// `E[omega^2] a / ln 2` far below and `ln a / ln 2` far above.
#[derive(Debug, Clone)]
pub struct RateCurve {
    sigma_ln: f64,
    lo: f64,
    hi: f64,
    ln_rate: Option<CubicHermite>,
}

impl RateCurve {
    const NODES: usize = 6000;

    pub fn new(sigma_ln: f64) -> Self {
        let v = sigma_ln * sigma_ln;
        // beyond these the next terms of the asymptotes fall below e^-36
        let lo = -(6.0 * v + 12.0 * sigma_ln + 40.0);
        let hi = 2.0 * v + 12.0 * sigma_ln + 40.0;
        if sigma_ln == 0.0 {
            return Self {
                sigma_ln,
                lo,
                hi,
                ln_rate: None,
            };
        }
        let step = (hi - lo) / (Self::NODES - 1) as f64;
        let xs: Vec<f64> = (0..Self::NODES).map(|i| lo + i as f64 * step).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| expected_log_rate(x, sigma_ln).ln()).collect();
        Self {
            sigma_ln,
            lo,
            hi,
            ln_rate: Some(CubicHermite::centered(xs, ys)),
        }
    }

    pub fn sigma_ln(&self) -> f64 {
        self.sigma_ln
    }

    pub fn eval(&self, ln_a: f64) -> f64 {
        let Some(t) = &self.ln_rate else {
            return softplus(ln_a) / LN_2;
        };
        if ln_a <= self.lo {
            (ln_a + 2.0 * self.sigma_ln * self.sigma_ln).exp() / LN_2
        } else if ln_a >= self.hi {
            ln_a / LN_2
        } else {
            t.eval(ln_a).exp()
        }
    }
}

/// Analytic model of one scenario: geometry profile, serving-distance law
/// and the derived metrics.
#[derive(Debug, Clone)]
pub struct AnalyticModel {
    scenario: Scenario,
    profile: Arc<GeometryProfile>,
    serving: ServingDistance,
    ln_omega2: f64,
    ln_noise: f64,
}

impl AnalyticModel {
    pub fn new(s: &Scenario, exec: Exec) -> Result<Self> {
        s.validate()?;
        let profile = Arc::new(GeometryProfile::build(s, exec)?);
        Self::with_profile(s, profile)
    }

    /// Reuses a profile built for the same geometry (e.g. across antenna counts).
    pub fn with_profile(s: &Scenario, profile: Arc<GeometryProfile>) -> Result<Self> {
        s.validate()?;
        if !profile.fits(s) {
            return Err(Error::Model("geometry profile built for a different scenario".into()));
        }
        let serving = s.serving_distance()?;
        let ln_noise = (s.radio.noise_power / s.radio.array_gain()).ln();
        let model = Self {
            scenario: *s,
            profile,
            serving,
            ln_omega2: s.shadowing.second_moment().ln(),
            ln_noise,
        };
        model.check_sinr_monotone()?;
        Ok(model)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn profile(&self) -> &Arc<GeometryProfile> {
        &self.profile
    }

    pub fn serving(&self) -> &ServingDistance {
        &self.serving
    }

    /// `ln((I_avg + noise) / (M^2 P_f P_p))` at serving distance `e^{ln_r}`,
    /// with its `ln r` derivative.
    fn ln_impairment(&self, ln_r: f64) -> (f64, f64) {
        let (lj, dlj) = self.profile.ln_interference(ln_r);
        let li = self.ln_omega2 + lj;
        let total = ln_add_exp(li, self.ln_noise);
        // share of interference in the impairment
        let w = (li - total).exp();
        (total, w * dlj)
    }

    /// Mean interference power (W) at serving distance `r`.
    pub fn avg_interference(&self, r: f64) -> f64 {
        let (lj, _) = self.profile.ln_interference(r.ln());
        self.scenario.radio.array_gain() * (self.ln_omega2 + lj).exp()
    }

    /// `ln` of the distance-only SINR and its derivative in `ln r`.
    pub fn ln_sinr(&self, ln_r: f64) -> (f64, f64) {
        let (li, dli) = self.ln_impairment(ln_r);
        let a = 2.0 * self.scenario.radio.alpha;
        (self.scenario.ln_omega_bar_sq() - a * ln_r - li, -a - dli)
    }

    pub fn sinr(&self, r: f64) -> f64 {
        self.ln_sinr(r.ln()).0.exp()
    }

    fn check_sinr_monotone(&self) -> Result<()> {
        let vals: Vec<f64> = self.profile.ln_r_grid().iter().map(|&l| self.ln_sinr(l).0).collect();
        if let Some(i) = vals.windows(2).position(|w| !(w[1] < w[0])) {
            return Err(Error::Model(format!(
                "SINR is not strictly decreasing near r = {:.4e} m; inversion undefined",
                self.profile.ln_r_grid()[i].exp()
            )));
        }
        Ok(())
    }

    /// Serving distance at which the distance-only SINR equals `gamma`.
    pub fn invert_sinr(&self, gamma: f64) -> Inversion {
        let grid = self.profile.ln_r_grid();
        let (lo, hi) = (grid[0], grid[grid.len() - 1]);
        let target = gamma.ln();
        if target >= self.ln_sinr(lo).0 {
            return Inversion {
                r: lo.exp(),
                clamped: true,
            };
        }
        if target <= self.ln_sinr(hi).0 {
            return Inversion {
                r: hi.exp(),
                clamped: true,
            };
        }
        let root = bisect(|l| self.ln_sinr(l).0 - target, lo, hi, 1e-14, 200).expect("bracketed by the range checks");
        Inversion {
            r: root.x.exp(),
            clamped: false,
        }
    }

    /// Jensen lower bound on the mean rate at serving distance `r`.
    pub fn rate_lower_bound(&self, r: f64) -> f64 {
        let ln_r = r.ln();
        let (li, _) = self.ln_impairment(ln_r);
        let ln_a = -2.0 * self.scenario.radio.alpha * ln_r - li;
        expected_log_rate(ln_a, self.scenario.shadowing.sigma_ln())
    }

    fn serving_breaks(&self) -> Vec<f64> {
        let top = self.serving.upper_limit();
        let mut b = vec![0.0, top];
        b.extend(self.serving.breakpoints().into_iter().filter(|&v| v > 0.0 && v < top));
        if self.scenario.near_field > 0.0 && self.scenario.near_field < top {
            b.push(self.scenario.near_field);
        }
        b
    }

    /// `integral R(r) f(r) dr`, the mean rate of one user.
    pub fn mean_user_rate(&self) -> f64 {
        let q = Quad {
            abs_tol: 1e-300,
            rel_tol: 1e-9,
            max_intervals: 1000,
        };
        q.integrate_with_breaks(|r| self.rate_lower_bound(r) * self.serving.pdf(r), &self.serving_breaks())
            .value
    }

    /// Mean sum rate of an active cell, `K * integral R f`.
    pub fn avg_cell_rate(&self) -> f64 {
        let k = self.scenario.k_ue();
        if k == 0.0 {
            return 0.0;
        }
        k * self.mean_user_rate()
    }

    /// Mean transmit power (W) of an active station.
    pub fn avg_tx_power(&self) -> Result<f64> {
        let s = &self.scenario;
        let k = s.k_ue();
        if k == 0.0 {
            return Ok(0.0);
        }
        self.profile.ln_power(0.0)?;
        let q = Quad {
            abs_tol: 1e-300,
            rel_tol: 1e-9,
            max_intervals: 1000,
        };
        let e = q
            .integrate_with_breaks(
                |r| self.profile.ln_power(r.ln()).map(f64::exp).unwrap_or(0.0) * self.serving.pdf(r),
                &self.serving_breaks(),
            )
            .value;
        Ok(s.radio.m() * s.radio.p_p * k * s.shadowing.mean() * e)
    }

    pub fn bs_power(&self, p_tx: f64) -> f64 {
        bs_power(&self.scenario, p_tx)
    }

    /// Area rate over area power consumption (bit/s/Hz/W).
    pub fn energy_efficiency(&self) -> Result<f64> {
        let p = self.bs_power(self.avg_tx_power()?);
        let s = &self.scenario;
        // L lambda_b E[R_user] / (lambda* P_BS), identical to cell rate / P_BS
        Ok(s.ues_per_cell_l * s.lambda_b() * self.mean_user_rate() / (s.active_density() * p))
    }

    /// Coverage as the serving-distance CDF at `g^{-1}(2^rho - 1)`.
    pub fn coverage_cdf(&self, rho: f64) -> f64 {
        let gamma = rho.exp2() - 1.0;
        if gamma <= 0.0 {
            return 1.0;
        }
        let inv = self.invert_sinr(gamma);
        self.serving.mass(0.0, inv.r).clamp(0.0, 1.0)
    }

    /// Coverage as an integral over the SINR level `u = ln gamma` of the
    /// distance density pushed through `g^{-1}`.
    pub fn coverage_integral(&self, rho: f64) -> f64 {
        let gamma = rho.exp2() - 1.0;
        if gamma <= 0.0 {
            return 1.0;
        }
        let grid = self.profile.ln_r_grid();
        let l_lo = grid[0];
        let u_top = self.ln_sinr(l_lo).0;
        let u0 = gamma.ln();
        let head = self.serving.mass(0.0, l_lo.exp());
        if u0 >= u_top {
            return head.clamp(0.0, 1.0);
        }
        let u_bottom = self.ln_sinr(grid[grid.len() - 1]).0;
        let mut breaks = vec![u0.max(u_bottom), u_top];
        for b in self.serving.breakpoints() {
            if b > 0.0 {
                let u = self.ln_sinr(b.ln()).0;
                if u > u0 && u < u_top {
                    breaks.push(u);
                }
            }
        }
        let q = Quad {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_intervals: 2000,
        };
        let body = q
            .integrate_with_breaks(
                |u| {
                    let r = self.invert_sinr(u.exp()).r;
                    let (_, slope) = self.ln_sinr(r.ln());
                    self.serving.pdf(r) * r / slope.abs()
                },
                &breaks,
            )
            .value;
        // mass beyond the tabulated range when gamma is below it
        let tail = if u0 < u_bottom {
            self.serving.mass(grid[grid.len() - 1].exp(), self.serving.upper_limit().max(grid[grid.len() - 1].exp()))
        } else {
            0.0
        };
        (head + body + tail).clamp(0.0, 1.0)
    }

    /// Coverage efficiency at traffic threshold `rho`; both forms are
    /// evaluated and must agree.
    pub fn coverage_efficiency(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::param("rho", "must be > 0"));
        }
        let a = self.coverage_integral(rho);
        let b = self.coverage_cdf(rho);
        if (a - b).abs() > 1e-6 {
            return Err(Error::Model(format!(
                "coverage forms disagree at rho = {rho}: integral {a:.9}, cdf {b:.9}"
            )));
        }
        Ok(b)
    }

    pub fn coverage_efficiency_traffic(&self, mode: TrafficMode) -> Result<f64> {
        let t = self.scenario.traffic;
        match mode {
            TrafficMode::AtMean => self.coverage_efficiency(pareto_mean(&t)?),
            TrafficMode::Marginalized => {
                // rho = rho_min U^{-1/theta} with U uniform; coverage is
                // negligible once 2^rho - 1 exceeds the tabulated SINR range
                let grid = self.profile.ln_r_grid();
                let ln_g_max = self.ln_sinr(grid[0]).0;
                let rho_cap = (ln_g_max.exp().ln_1p() / LN_2).min(1000.0);
                let rho_cut = (t.rho_min * 1e8f64.powf(1.0 / t.theta)).min(rho_cap.max(t.rho_min));
                let u_cut = (t.rho_min / rho_cut).powf(t.theta);
                let q = Quad {
                    abs_tol: 1e-11,
                    rel_tol: 1e-9,
                    max_intervals: 500,
                };
                let body = q
                    .integrate(|u: f64| self.coverage_cdf(t.rho_min * u.powf(-1.0 / t.theta)), u_cut, 1.0)
                    .value;
                // beyond rho_cut coverage is at most its value there
                let tail = u_cut * self.coverage_cdf(rho_cut);
                Ok((body + tail).clamp(0.0, 1.0))
            }
        }
    }

    /// Distance-only SINR threshold for rate `rho`.
    pub fn sinr_threshold(rho: f64) -> f64 {
        rho.exp2() - 1.0
    }
}

/// Mean interference (W) at serving distance `r_int`, integrated directly.
pub fn avg_interference(r_int: f64, s: &Scenario) -> Result<f64> {
    if !(r_int > 0.0) {
        return Err(Error::param("r_int", "must be > 0"));
    }
    let j = palm_integral(&s.kernel(), r_int, 2.0 * s.radio.alpha, s.regularization, s.near_field)?;
    Ok(s.radio.array_gain() * s.shadowing.second_moment() * j)
}

/// Jensen lower bound on the mean rate at serving distance `r_int`, integrated directly.
pub fn rate_lower_bound(r_int: f64, s: &Scenario) -> Result<f64> {
    let i = avg_interference(r_int, s)?;
    let g = s.radio.array_gain();
    let ln_a = -2.0 * s.radio.alpha * r_int.ln() - ((i + s.radio.noise_power) / g).ln();
    Ok(expected_log_rate(ln_a, s.shadowing.sigma_ln()))
}

/// Distance-only SINR at `r`, integrated directly.
pub fn sinr_of_distance(r: f64, s: &Scenario) -> Result<f64> {
    let i = avg_interference(r, s)?;
    let g = s.radio.array_gain();
    Ok((s.ln_omega_bar_sq() - 2.0 * s.radio.alpha * r.ln()).exp() * g / (i + s.radio.noise_power))
}

/// Linear power model: `p_tx / eta + M P_rf + P_sta`.
pub fn bs_power(s: &Scenario, p_tx: f64) -> f64 {
    p_tx / s.radio.eta + s.radio.m() * s.radio.p_rf_chain + s.radio.p_sta
}

pub fn avg_cell_rate(s: &Scenario) -> Result<f64> {
    Ok(AnalyticModel::new(s, Exec::default())?.avg_cell_rate())
}

pub fn avg_tx_power(s: &Scenario) -> Result<f64> {
    AnalyticModel::new(s, Exec::default())?.avg_tx_power()
}

pub fn energy_efficiency(s: &Scenario) -> Result<f64> {
    AnalyticModel::new(s, Exec::default())?.energy_efficiency()
}

pub fn coverage_efficiency(rho: f64, s: &Scenario) -> Result<f64> {
    AnalyticModel::new(s, Exec::default())?.coverage_efficiency(rho)
}

pub fn coverage_efficiency_traffic(s: &Scenario, mode: TrafficMode) -> Result<f64> {
    AnalyticModel::new(s, Exec::default())?.coverage_efficiency_traffic(mode)
}
