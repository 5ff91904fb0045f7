//! Second-moment kernels and the Palm-weighted power-law integral
//!
//! `J(r, beta) = (1/zeta1) * integral over R^2 of zeta2(|x|) |x + x_int|^{-beta} dx`
//!
//! with `|x_int| = r`, the building block of the mean interference
//! (`beta = 2 alpha`) and the mean transmit power (`beta = alpha`).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hcpp::{zeta1, zeta2, HcppParams};
use crate::numeric::Quad;

use super::scenario::Regularization;

/// Radial second-order product density together with its first-order density.
pub trait SecondMoment {
    /// First-order density `zeta1`.
    fn density(&self) -> f64;
    /// `zeta2(r)`.
    fn pair(&self, r: f64) -> f64;
    /// `zeta2` vanishes on `[0, hard_core]`.
    fn hard_core(&self) -> f64;
    /// `zeta2` equals `density^2` on `[saturation, inf)`.
    fn saturation(&self) -> f64;
    /// Separations where `zeta2` changes analytic form.
    fn breakpoints(&self) -> Vec<f64> {
        let mut b = vec![self.hard_core(), self.saturation()];
        b.retain(|v| *v > 0.0);
        b.dedup();
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// Poisson process (all-on or independently thinned): `zeta2 = density^2`.
    Poisson { density: f64 },
    /// Type II hard-core process.
    HardCore(HcppParams),
}

impl SecondMoment for Kernel {
    fn density(&self) -> f64 {
        match self {
            Kernel::Poisson { density } => *density,
            Kernel::HardCore(p) => zeta1(p),
        }
    }

    fn pair(&self, r: f64) -> f64 {
        match self {
            Kernel::Poisson { density } => density * density,
            Kernel::HardCore(p) => zeta2(r, p),
        }
    }

    fn hard_core(&self) -> f64 {
        match self {
            Kernel::Poisson { .. } => 0.0,
            Kernel::HardCore(p) => p.delta(),
        }
    }

    fn saturation(&self) -> f64 {
        match self {
            Kernel::Poisson { .. } => 0.0,
            Kernel::HardCore(p) => 2.0 * p.delta(),
        }
    }
}

/// Angular integral `A(t) = integral_0^{2 pi} zeta2(|y - x_int|) dtheta` over the
/// circle of radius `t` around the user.
fn angular<K: SecondMoment + ?Sized>(k: &K, t: f64, r: f64, quad: &Quad) -> f64 {
    let full = 2.0 * PI;
    let hc = k.hard_core();
    let sat = k.saturation();
    let limit = k.density() * k.density();
    if t + r <= hc {
        return 0.0;
    }
    if (t - r).abs() >= sat {
        return full * limit;
    }
    if r == 0.0 || t == 0.0 {
        return full * k.pair(t.max(r));
    }
    let mut breaks = vec![0.0, PI];
    for b in k.breakpoints() {
        let c = (t * t + r * r - b * b) / (2.0 * t * r);
        if c > -1.0 && c < 1.0 {
            breaks.push(c.acos());
        }
    }
    let two_tr = 2.0 * t * r;
    let sum_sq = t * t + r * r;
    let res = quad.integrate_with_breaks(|th: f64| k.pair((sum_sq - two_tr * th.cos()).max(0.0).sqrt()), &breaks);
    2.0 * res.value
}

/// `J(r, beta)` under the given regularization. Distances below `near_field`
/// are excluded unless the regularization is disabled.
pub fn palm_integral<K: SecondMoment + ?Sized>(
    k: &K,
    r: f64,
    beta: f64,
    reg: Regularization,
    near_field: f64,
) -> Result<f64> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::param("r_int", "must be finite and >= 0"));
    }
    if beta <= 2.0 {
        return Err(Error::Divergence(format!(
            "path-loss exponent {beta} <= 2: the far-field sum grows without bound"
        )));
    }
    let z1 = k.density();
    if z1 == 0.0 {
        return Ok(0.0);
    }
    let t0 = match reg {
        Regularization::ExclusionBall => r.max(near_field),
        Regularization::MinDistance(eps) => eps.max(near_field),
        Regularization::Disabled => {
            if r >= k.hard_core() {
                return Err(Error::Divergence(format!(
                    "unregularized integral at r_int = {r} m: pair density is positive at the user (hard-core {} m)",
                    k.hard_core()
                )));
            }
            // the pair density already vanishes within hard_core - r of the user
            k.hard_core() - r
        }
    };
    // the pair density vanishes for t + r <= hard_core
    let t0 = t0.max(k.hard_core() - r);
    let limit = z1 * z1;
    let t_sat = (r + k.saturation()).max(t0);
    if t_sat <= 0.0 {
        return Err(Error::Divergence("integral starts at the user location".into()));
    }
    let tail = 2.0 * PI * limit * t_sat.powf(2.0 - beta) / (beta - 2.0);
    if t_sat <= t0 {
        return Ok(tail / z1);
    }

    let inner = Quad {
        abs_tol: 1e-12 * 2.0 * PI * limit,
        rel_tol: 1e-10,
        max_intervals: 200,
    };
    // breakpoints in t where an angular breakpoint enters or leaves
    let mut t_breaks = vec![t0, t_sat];
    for b in k.breakpoints() {
        for t in [r - b, r + b, b - r] {
            if t > t0 && t < t_sat {
                t_breaks.push(t);
            }
        }
    }
    // integrate in s = ln t, where the power law is gentle
    let s_breaks: Vec<f64> = t_breaks.iter().map(|t| t.ln()).collect();
    let scale = 2.0 * PI * limit * t0.powf(2.0 - beta);
    let outer = Quad {
        abs_tol: 1e-11 * scale.max(tail),
        rel_tol: 1e-9,
        max_intervals: 400,
    };
    let body = outer.integrate_with_breaks(
        |s: f64| {
            let t = s.exp();
            t.powf(2.0 - beta) * angular(k, t, r, &inner)
        },
        &s_breaks,
    );
    Ok((body.value + tail) / z1)
}

/// Closed form of [`palm_integral`] for a Poisson kernel under the
/// exclusion ball: `2 pi lambda r0^{2-beta} / (beta - 2)`, `r0 = max(r, near_field)`.
pub fn poisson_palm_closed_form(density: f64, r: f64, beta: f64, near_field: f64) -> f64 {
    2.0 * PI * density * r.max(near_field).powf(2.0 - beta) / (beta - 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Poisson kernel that claims a late saturation so the quadrature path runs.
    struct SlowPoisson(f64);

    impl SecondMoment for SlowPoisson {
        fn density(&self) -> f64 {
            self.0
        }
        fn pair(&self, _r: f64) -> f64 {
            self.0 * self.0
        }
        fn hard_core(&self) -> f64 {
            0.0
        }
        fn saturation(&self) -> f64 {
            900.0
        }
    }

    #[test]
    fn constant_kernel_matches_closed_form() {
        for (r, beta) in [(50.0, 8.0), (100.0, 8.0), (3.0, 4.0), (700.0, 5.0)] {
            let q = palm_integral(&SlowPoisson(1e-4), r, beta, Regularization::ExclusionBall, 0.0).unwrap();
            let c = poisson_palm_closed_form(1e-4, r, beta, 0.0);
            assert!((q / c - 1.0).abs() < 1e-8, "{r} {beta} {q} {c}");
        }
    }

    #[test]
    fn zero_kernel_gives_zero() {
        let k = Kernel::Poisson { density: 0.0 };
        assert_eq!(palm_integral(&k, 10.0, 8.0, Regularization::ExclusionBall, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn divergence_without_regularization() {
        let k = Kernel::HardCore(HcppParams::new(1e-4, 200.0).unwrap());
        let err = palm_integral(&k, 250.0, 8.0, Regularization::Disabled, 0.0).unwrap_err();
        assert!(matches!(err, Error::Divergence(_)));
        assert!(palm_integral(&k, 150.0, 8.0, Regularization::Disabled, 0.0).is_ok());
        assert!(palm_integral(&k, 250.0, 2.0, Regularization::ExclusionBall, 0.0).is_err());
    }

    #[test]
    fn hard_core_below_delta_needs_no_ball() {
        // with r well inside delta, interferers sit beyond delta - r anyway
        let k = Kernel::HardCore(HcppParams::new(1e-4, 200.0).unwrap());
        let a = palm_integral(&k, 20.0, 8.0, Regularization::Disabled, 0.0).unwrap();
        let b = palm_integral(&k, 20.0, 8.0, Regularization::ExclusionBall, 0.0).unwrap();
        assert!((a / b - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hard_core_shape_in_r() {
        // interference grows toward the cell edge, then falls off
        let k = Kernel::HardCore(HcppParams::new(1e-4, 200.0).unwrap());
        let j = |r: f64| palm_integral(&k, r, 8.0, Regularization::ExclusionBall, 1.0).unwrap();
        let rising: Vec<f64> = [10.0, 50.0, 90.0].iter().map(|&r| j(r)).collect();
        let falling: Vec<f64> = [150.0, 199.0, 201.0, 300.0, 600.0].iter().map(|&r| j(r)).collect();
        assert!(rising.windows(2).all(|w| w[1] > w[0]), "{rising:?}");
        assert!(falling.windows(2).all(|w| w[1] < w[0]), "{falling:?}");
    }
}
