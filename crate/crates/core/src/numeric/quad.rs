//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.
//!
//! Semi-infinite integrals are handled by the callers, which know where
//! their integrands become negligible or have closed-form tails.

use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quad {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let s = f(center - dx) + f(center + dx);
        k += w * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    let value = k * half;
    let error = ((k - g) * half).abs();
    (value, error)
}

impl Quad {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, f: F, a: f64, b: f64) -> QuadResult {
        self.integrate_with_breaks(f, &[a, b])
    }

    /// Integrates across the sorted list of points `[p0, p1, ..., pn]`, using
    /// every interior point as an initial subdivision. Unsorted or repeated
    /// points are tolerated.
    pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(&self, mut f: F, points: &[f64]) -> QuadResult {
        let mut pts: Vec<f64> = points.iter().copied().filter(|p| p.is_finite()).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        if pts.len() < 2 {
            return QuadResult {
                value: 0.0,
                error: 0.0,
                intervals: 0,
                converged: true,
            };
        }
        let mut heap = BinaryHeap::new();
        let mut total = 0.0;
        let mut total_err = 0.0;
        for w in pts.windows(2) {
            let (value, error) = kronrod(&mut f, w[0], w[1]);
            total += value;
            total_err += error;
            heap.push(Segment {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
        let mut intervals = heap.len();
        loop {
            let tol = self.abs_tol.max(self.rel_tol * total.abs());
            if total_err <= tol {
                return QuadResult {
                    value: total,
                    error: total_err,
                    intervals,
                    converged: true,
                };
            }
            if intervals >= self.max_intervals {
                break;
            }
            let Some(worst) = heap.pop() else { break };
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // interval exhausted at machine precision
                heap.push(Segment {
                    error: 0.0,
                    ..worst
                });
                total_err -= worst.error;
                continue;
            }
            let (v1, e1) = kronrod(&mut f, worst.a, mid);
            let (v2, e2) = kronrod(&mut f, mid, worst.b);
            total += v1 + v2 - worst.value;
            total_err += e1 + e2 - worst.error;
            heap.push(Segment {
                a: worst.a,
                b: mid,
                value: v1,
                error: e1,
            });
            heap.push(Segment {
                a: mid,
                b: worst.b,
                value: v2,
                error: e2,
            });
            intervals += 1;
        }
        // re-sum to shed accumulated rounding from the running updates
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        QuadResult {
            value,
            error,
            intervals,
            converged: error <= self.abs_tol.max(self.rel_tol * value.abs()),
        }
    }
}
