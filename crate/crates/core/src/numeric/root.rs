//! Bracketed scalar root finding.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Brent's method on a sign-changing bracket. Returns `None` if `f(lo)` and
/// `f(hi)` share a sign.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Option<Root> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some(Root { x: a, fx: fa, iterations: 0 });
    }
    if fb == 0.0 {
        return Some(Root { x: b, fx: fb, iterations: 0 });
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for it in 1..=max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Some(Root { x: b, fx: fb, iterations: it });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Some(Root { x: b, fx: fb, iterations: max_iter })
}

/// Plain bisection, used where the caller needs the bracket to shrink
/// monotonically (e.g. to a relative width in log space).
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Option<Root> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo.signum() == fhi.signum() {
        return None;
    }
    let mut it = 0;
    while it < max_iter && (hi - lo).abs() > xtol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(Root { x: mid, fx: 0.0, iterations: it });
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        it += 1;
    }
    let x = 0.5 * (lo + hi);
    Some(Root { x, fx: f(x), iterations: it })
}
