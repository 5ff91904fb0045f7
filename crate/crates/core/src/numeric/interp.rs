//! Piecewise cubic Hermite interpolation with either shape-preserving
//! (Fritsch–Carlson) or centered three-point slopes.

#[derive(Debug, Clone)]
pub struct CubicHermite {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl CubicHermite {
    /// Centered slopes: third-order accurate on smooth data, may overshoot
    /// near sharp features. `xs` strictly increasing, at least two nodes.
    pub fn centered(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert!(xs.len() >= 2 && xs.len() == ys.len());
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes = vec![secants[0]; 2];
        } else {
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                slopes[i] = (h1 * secants[i - 1] + h0 * secants[i]) / (h0 + h1);
            }
            // one-sided three-point ends
            let (h0, h1) = (xs[1] - xs[0], xs[2] - xs[1]);
            slopes[0] = ((2.0 * h0 + h1) * secants[0] - h0 * secants[1]) / (h0 + h1);
            let (h0, h1) = (xs[n - 2] - xs[n - 3], xs[n - 1] - xs[n - 2]);
            slopes[n - 1] = ((2.0 * h1 + h0) * secants[n - 2] - h1 * secants[n - 3]) / (h0 + h1);
        }
        Self { xs, ys, slopes }
    }

    /// Fritsch–Carlson slopes: monotone data gives a monotone interpolant.
    /// `xs` strictly increasing, at least two nodes.
    pub fn monotone(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert!(xs.len() >= 2 && xs.len() == ys.len());
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (s0, s1) = (secants[i - 1], secants[i]);
            slopes[i] = if s0 * s1 <= 0.0 {
                0.0
            } else {
                // weighted harmonic mean keeps each piece monotone
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w0 = 2.0 * h1 + h0;
                let w1 = h1 + 2.0 * h0;
                (w0 + w1) / (w0 / s0 + w1 / s1)
            };
        }
        Self { xs, ys, slopes }
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    fn locate(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    /// Value and first derivative. Outside the node range the end tangent is
    /// extended linearly.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let n = self.xs.len();
        if x <= self.xs[0] {
            let d = self.slopes[0];
            return (self.ys[0] + d * (x - self.xs[0]), d);
        }
        if x >= self.xs[n - 1] {
            let d = self.slopes[n - 1];
            return (self.ys[n - 1] + d * (x - self.xs[n - 1]), d);
        }
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let dvalue = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        (value, dvalue)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_derivative(x).0
    }
}
