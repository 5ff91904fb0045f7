//! Closed-form moments of the type II hard-core process and the approximate
//! law of the distance from a user to its nearest active base station.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numeric::{brent, one_minus_exp_over, Quad};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HcppParams {
    lambda_b: f64,
    delta: f64,
}

impl HcppParams {
    pub fn new(lambda_b: f64, delta: f64) -> Result<Self> {
        if !(lambda_b.is_finite() && lambda_b > 0.0) {
            return Err(Error::param("lambda_b", "must be finite and > 0"));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::param("delta", "must be finite and >= 0"));
        }
        Ok(Self { lambda_b, delta })
    }

    pub fn lambda_b(&self) -> f64 {
        self.lambda_b
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Mean number of parent points in a hard-core disk, `lambda_b * pi * delta^2`.
    pub fn disk_load(&self) -> f64 {
        self.lambda_b * PI * self.delta * self.delta
    }

    /// `1 - exp(-lambda_b * pi * delta^2)`: the retention probability times
    /// the disk load.
    fn retained_mass(&self) -> f64 {
        -(-self.disk_load()).exp_m1()
    }
}

/// First-order product density (intensity of retained points).
pub fn zeta1(p: &HcppParams) -> f64 {
    p.lambda_b * one_minus_exp_over(p.disk_load())
}

/// Area of the union of two disks of radius `delta` whose centers are `r` apart.
pub fn union_area(r: f64, delta: f64) -> f64 {
    let d2 = delta * delta;
    if r >= 2.0 * delta {
        return 2.0 * PI * d2;
    }
    2.0 * PI * d2 - 2.0 * d2 * (r / (2.0 * delta)).acos() + r * (d2 - 0.25 * r * r).max(0.0).sqrt()
}

// Divided difference of E(z) = (1 - e^{-z}) / z between x and y (> x).
// The pair kernel equals -2 E[x, y]; near zero the direct difference
// cancels, so a series is used there.
fn retention_divided_difference(x: f64, y: f64) -> f64 {
    if y < 0.5 {
        // E(z) = sum_n (-z)^n / (n+1)!,  (y^n - x^n)/(y - x) = sum_k x^k y^{n-1-k}
        let mut total = 0.0;
        let mut fact = 1.0;
        let mut h = 0.0;
        let mut x_pow = 1.0;
        for n in 1..40 {
            fact *= (n + 1) as f64;
            // h_n = sum_{k<n} x^k y^{n-1-k} = y h_{n-1} + x^{n-1}
            h = h * y + x_pow;
            x_pow *= x;
            let sign = if n % 2 == 1 { -1.0 } else { 1.0 };
            let term = sign * h / fact;
            total += term;
            if term.abs() < 1e-18 * total.abs() {
                break;
            }
        }
        total
    } else {
        (one_minus_exp_over(y) - one_minus_exp_over(x)) / (y - x)
    }
}

/// Probability-like pair kernel: `zeta2(r) / lambda_b^2`. Zero for `r <= delta`.
pub fn phi(r: f64, p: &HcppParams) -> f64 {
    if p.delta == 0.0 {
        return 1.0;
    }
    if r <= p.delta {
        return 0.0;
    }
    let a = PI * p.delta * p.delta;
    let v = union_area(r, p.delta);
    let x = p.lambda_b * a;
    let y = p.lambda_b * v;
    -2.0 * retention_divided_difference(x, y)
}

/// Second-order product density of the retained points at separation `r`.
pub fn zeta2(r: f64, p: &HcppParams) -> f64 {
    p.lambda_b * p.lambda_b * phi(r, p)
}

/// Excluded-area term of the nearest-distance approximation. Zero for
/// `r <= delta / 2`.
pub fn excluded_area(r: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        // limit of the r > delta/2 branch
        return 0.5 * PI * r * r;
    }
    if r <= 0.5 * delta {
        return 0.0;
    }
    let u = (delta / (2.0 * r)).min(1.0);
    let val = PI * r * r - (2.0 * u.asin() + u.acos()) * r * r + delta * (r * r - 0.25 * delta * delta).max(0.0).sqrt();
    val.max(0.0)
}

/// Fitted approximate law of the user-to-nearest-active-BS distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestPdfModel {
    pub params: HcppParams,
    pub lambda_star_fit: f64,
}

fn nearest_prefactor(p: &HcppParams) -> f64 {
    if p.delta == 0.0 {
        2.0 * PI * p.lambda_b
    } else {
        2.0 * p.retained_mass() / (p.delta * p.delta)
    }
}

fn nearest_pdf_raw(r: f64, p: &HcppParams, lambda_star: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    nearest_prefactor(p) * r * (-lambda_star * excluded_area(r, p.delta)).exp()
}

/// Upper integration limit past which the density is below 1e-17 of its peak.
fn nearest_upper_limit(p: &HcppParams, lambda_star: f64) -> f64 {
    let mut r = (0.5 * p.delta).max(1.0 / (lambda_star * PI).sqrt() * 0.25);
    let mut peak: f64 = 0.0;
    let mut past_peak = false;
    for _ in 0..200 {
        let v = nearest_pdf_raw(r, p, lambda_star);
        if v < peak {
            past_peak = true;
        }
        peak = peak.max(v);
        if past_peak && v < 1e-17 * peak {
            return r;
        }
        r *= 1.25;
    }
    r
}

fn quad() -> Quad {
    Quad {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_intervals: 4000,
    }
}

fn nearest_cdf_raw(r: f64, p: &HcppParams, lambda_star: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let half = 0.5 * p.delta;
    // below delta/2 the density is the pure linear prefactor
    let inner = 0.5 * nearest_prefactor(p) * r.min(half).powi(2);
    if r <= half {
        return inner;
    }
    let mut breaks = vec![half, r];
    if p.delta > half && p.delta < r {
        breaks.push(p.delta);
    }
    inner + quad().integrate_with_breaks(|t| nearest_pdf_raw(t, p, lambda_star), &breaks).value
}

/// `N(lambda*) = integral of the approximate density - 1`.
pub fn normalization_residual(p: &HcppParams, lambda_star: f64) -> f64 {
    let top = nearest_upper_limit(p, lambda_star);
    nearest_cdf_raw(top, p, lambda_star) - 1.0
}

/// Solves for the constant that makes the nearest-distance density integrate
/// to one. The residual is strictly decreasing in `lambda*`, so any sign
/// change on the bracket isolates the unique root.
pub fn fit_lambda_star(p: &HcppParams) -> Result<f64> {
    let lo = 1e-12;
    let hi = p.lambda_b * 10.0;
    let n_lo = normalization_residual(p, lo);
    let n_hi = normalization_residual(p, hi);
    let fail = |reason: &str| Error::Fit {
        reason: reason.to_string(),
        lo,
        hi,
        n_lo,
        n_hi,
    };
    if !(n_lo > 0.0 && n_hi < 0.0) {
        return Err(fail("root not bracketed"));
    }
    // the residual is smooth in log(lambda*), which keeps Brent's steps sane
    let root = brent(
        |u: f64| normalization_residual(p, u.exp()),
        lo.ln(),
        hi.ln(),
        1e-15,
        200,
    )
    .ok_or_else(|| fail("bracket lost during iteration"))?;
    let lambda_star = root.x.exp();
    let resid = normalization_residual(p, lambda_star);
    if resid.abs() > 1e-9 {
        return Err(fail(&format!("residual {resid:e} above 1e-9 at {lambda_star:e}")));
    }
    Ok(lambda_star)
}

impl NearestPdfModel {
    pub fn fit(params: HcppParams) -> Result<Self> {
        Ok(Self {
            params,
            lambda_star_fit: fit_lambda_star(&params)?,
        })
    }

    pub fn pdf(&self, r: f64) -> f64 {
        nearest_pdf(r, self)
    }

    pub fn cdf(&self, r: f64) -> f64 {
        nearest_cdf_raw(r, &self.params, self.lambda_star_fit).min(1.0)
    }

    pub fn upper_limit(&self) -> f64 {
        nearest_upper_limit(&self.params, self.lambda_star_fit)
    }

    pub fn total_mass(&self) -> f64 {
        nearest_cdf_raw(self.upper_limit(), &self.params, self.lambda_star_fit)
    }
}

pub fn nearest_pdf(r: f64, model: &NearestPdfModel) -> f64 {
    nearest_pdf_raw(r, &model.params, model.lambda_star_fit)
}

/// Contact-distance density of a Poisson process (Rayleigh law).
pub fn ppp_nearest_pdf(r: f64, intensity: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    2.0 * PI * intensity * r * (-intensity * PI * r * r).exp()
}

pub fn ppp_nearest_cdf(r: f64, intensity: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    -(-intensity * PI * r * r).exp_m1()
}

/// Serving-distance law used by a strategy's analytic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServingDistance {
    Rayleigh { intensity: f64 },
    HardCore(NearestPdfModel),
}

impl ServingDistance {
    pub fn pdf(&self, r: f64) -> f64 {
        match self {
            ServingDistance::Rayleigh { intensity } => ppp_nearest_pdf(r, *intensity),
            ServingDistance::HardCore(m) => m.pdf(r),
        }
    }

    pub fn cdf(&self, r: f64) -> f64 {
        match self {
            ServingDistance::Rayleigh { intensity } => ppp_nearest_cdf(r, *intensity),
            ServingDistance::HardCore(m) => m.cdf(r),
        }
    }

    /// Mass of `[lo, hi]`, integrated directly rather than as a CDF difference.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        match self {
            ServingDistance::Rayleigh { intensity } => {
                let l = intensity * PI;
                (-l * lo * lo).exp() * -(-l * (hi * hi - lo * lo)).exp_m1()
            }
            ServingDistance::HardCore(m) => {
                let half = 0.5 * m.params.delta;
                let mut breaks = vec![lo, hi];
                for b in [half, m.params.delta] {
                    if b > lo && b < hi {
                        breaks.push(b);
                    }
                }
                quad().integrate_with_breaks(|t| m.pdf(t), &breaks).value
            }
        }
    }

    /// Radius beyond which the density is negligible (< 1e-17 of its peak).
    pub fn upper_limit(&self) -> f64 {
        match self {
            ServingDistance::Rayleigh { intensity } => (45.0 / (PI * intensity)).sqrt(),
            ServingDistance::HardCore(m) => m.upper_limit(),
        }
    }

    /// Points where the density changes analytic form.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            ServingDistance::Rayleigh { intensity } => vec![1.0 / (2.0 * PI * intensity).sqrt()],
            ServingDistance::HardCore(m) => vec![0.5 * m.params.delta, m.params.delta],
        }
    }

    /// Fitted constant of the hard-core law; for the Rayleigh law, its intensity.
    pub fn lambda_star_fit(&self) -> f64 {
        match self {
            ServingDistance::Rayleigh { intensity } => *intensity,
            ServingDistance::HardCore(m) => m.lambda_star_fit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn defaults() -> HcppParams {
        HcppParams::new(1e-4, 200.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn zeta1_values() {
        // high-precision references (mpmath, 30 digits)
        assert!(rel(zeta1(&defaults()), 7.957_719_403_206_055e-6) < 1e-12);
        let p100 = HcppParams::new(1e-4, 100.0).unwrap();
        assert!(rel(zeta1(&p100), 3.045_544_687_796_937e-5) < 1e-12);
        assert_eq!(zeta1(&HcppParams::new(1e-4, 0.0).unwrap()), 1e-4);
        assert!(rel(zeta1(&HcppParams::new(1e-4, 1e-6).unwrap()), 1e-4) < 1e-12);
    }

    #[test]
    fn union_area_values() {
        let d = 3.0;
        assert!(rel(union_area(0.0, d), PI * d * d) < 1e-15);
        assert!(rel(union_area(2.0 * d, d), 2.0 * PI * d * d) < 1e-15);
        let expected = 2.0 * PI - 2.0 * 0.5f64.acos() + 3f64.sqrt() / 2.0;
        assert!((union_area(1.0, 1.0) - expected).abs() < 1e-14);
        assert!((union_area(1.0, 1.0) - 5.0548).abs() < 1e-4);
    }

    #[test]
    fn phi_branches() {
        let p = defaults();
        assert_eq!(phi(200.0, &p), 0.0);
        let sat = (zeta1(&p) / p.lambda_b()).powi(2);
        for r in [400.0, 500.0, 1e4] {
            assert!(rel(phi(r, &p), sat) < 1e-12);
        }
    }

    #[test]
    fn zeta2_ppp_limit() {
        let p = HcppParams::new(1e-4, 0.0).unwrap();
        assert_eq!(zeta2(50.0, &p), 1e-8);
        let tiny = HcppParams::new(1e-4, 1e-3).unwrap();
        assert!(rel(zeta2(10.0, &tiny), 1e-8) < 1e-9);
    }

    #[test]
    fn zeta2_saturated_value() {
        let v = zeta2(500.0, &defaults());
        assert!(rel(v, 6.332e-11) < 1e-3);
    }

    #[test]
    fn series_and_direct_agree_near_switch() {
        for (x, y) in [(0.1, 0.49), (0.2, 0.4999)] {
            let series = retention_divided_difference(x, y);
            let direct = (one_minus_exp_over(y) - one_minus_exp_over(x)) / (y - x);
            assert!(rel(series, direct) < 1e-10, "{series} {direct}");
        }
    }

    #[test]
    fn excluded_area_values() {
        assert_eq!(excluded_area(100.0, 200.0), 0.0);
        // mpmath evaluation of the closed form at r = 300, delta = 200
        assert!(rel(excluded_area(300.0, 200.0), 167_354.890_055_593_5) < 1e-12);
        // grows like pi r^2 / 2 + delta r / 2
        let r = 1e6;
        assert!(rel(excluded_area(r, 200.0), 0.5 * PI * r * r + 100.0 * r) < 1e-6);
    }

    #[test]
    fn nearest_pdf_zero_at_origin() {
        let m = NearestPdfModel::fit(defaults()).unwrap();
        assert_eq!(m.pdf(0.0), 0.0);
        assert!((m.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fitted_value_defaults() {
        // scipy brentq + quad reference
        let m = NearestPdfModel::fit(defaults()).unwrap();
        assert!(rel(m.lambda_star_fit, 1.404_342_809_413_74e-5) < 1e-7, "{}", m.lambda_star_fit);
    }

    #[test]
    fn residual_is_decreasing() {
        let p = defaults();
        let grid = [1e-7, 1e-6, 5e-6, 1e-5, 2e-5, 1e-4, 1e-3];
        let vals: Vec<f64> = grid.iter().map(|&l| normalization_residual(&p, l)).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
    }

    #[test]
    fn small_delta_recovers_rayleigh() {
        let p = HcppParams::new(1e-4, 0.05).unwrap();
        let m = NearestPdfModel::fit(p).unwrap();
        for r in [10.0, 50.0, 100.0, 200.0] {
            assert!(rel(m.pdf(r), ppp_nearest_pdf(r, 1e-4)) < 1e-2, "{r}");
        }
        // the excluded area tends to pi r^2 / 2, hence the fitted constant to 2 lambda_b
        assert!(rel(m.lambda_star_fit, 2e-4) < 1e-3);
    }

    #[test]
    fn rayleigh_mode() {
        let l = 1e-4;
        let mode = 1.0 / (2.0 * PI * l).sqrt();
        let f0 = ppp_nearest_pdf(mode, l);
        assert!(ppp_nearest_pdf(mode * 0.99, l) < f0);
        assert!(ppp_nearest_pdf(mode * 1.01, l) < f0);
        let sd = ServingDistance::Rayleigh { intensity: l };
        assert!((sd.mass(0.0, sd.upper_limit()) - 1.0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn zeta1_bounds_and_monotonicity(l in 1e-6f64..1e-2, d in 1.0f64..500.0) {
            let p = HcppParams::new(l, d).unwrap();
            let z = zeta1(&p);
            prop_assert!(z > 0.0);
            prop_assert!(z <= l.min(1.0 / (PI * d * d)) * (1.0 + 1e-12));
            prop_assert!(zeta1(&HcppParams::new(l, d * 1.1).unwrap()) < z);
            // saturates once the disk load makes e^{-x} negligible
            let up = zeta1(&HcppParams::new(l * 1.1, d).unwrap());
            if p.disk_load() < 20.0 {
                prop_assert!(up > z);
            } else {
                prop_assert!(up >= z * (1.0 - 1e-14));
            }
        }

        #[test]
        fn moment_identity(l in 1e-6f64..1e-2, d in 1.0f64..500.0, k in 2.0f64..20.0) {
            let p = HcppParams::new(l, d).unwrap();
            let z1 = zeta1(&p);
            prop_assert!(rel(zeta2(k * d, &p), z1 * z1) < 1e-10);
            prop_assert_eq!(zeta2(d * (k / 20.0), &p), 0.0);
        }

        #[test]
        fn union_area_continuous(d in 1.0f64..500.0, t in 0.0f64..2.0) {
            let r = t * d;
            let a = union_area(r, d);
            let b = union_area(r + 1e-9 * d, d);
            prop_assert!((a - b).abs() <= 1e-6 * d * d);
            prop_assert!(a >= PI * d * d * (1.0 - 1e-12) && a <= 2.0 * PI * d * d * (1.0 + 1e-12));
        }

        #[test]
        fn excluded_area_monotone(d in 1.0f64..500.0, t in 0.0f64..10.0) {
            let r = t * d;
            let a = excluded_area(r, d);
            prop_assert!(a >= 0.0);
            prop_assert!(excluded_area(r + 0.01 * d, d) >= a);
        }
    }
}
