//! Monotone piecewise-cubic Hermite interpolation (Fritsch–Carlson).

#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// `xs` strictly increasing, `ys` monotone; at least two nodes.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert!(xs.len() >= 2 && xs.len() == ys.len());
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            slopes[i] = if secants[i - 1] * secants[i] <= 0.0 {
                0.0
            } else {
                // weighted harmonic mean keeps the interpolant monotone
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w0 = 2.0 * h1 + h0;
                let w1 = h1 + 2.0 * h0;
                (w0 + w1) / (w0 / secants[i - 1] + w1 / secants[i])
            };
        }
        Self { xs, ys, slopes }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_nodes_and_cubic_accuracy() {
        let xs: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        let m = MonotoneCubic::new(xs.clone(), ys.clone());
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(m.eval(*x), *y);
        }
        assert!((m.eval(0.503) - 0.503f64.exp()).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn stays_monotone(steps in proptest::collection::vec(0.0f64..5.0, 3..40), probes in proptest::collection::vec(0.0f64..1.0, 20)) {
            let n = steps.len();
            let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let mut ys = Vec::with_capacity(n);
            let mut acc = 0.0;
            for s in &steps { acc += s; ys.push(acc); }
            let m = MonotoneCubic::new(xs, ys);
            let mut pts: Vec<f64> = probes.iter().map(|p| p * (n - 1) as f64).collect();
            pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for w in pts.windows(2) {
                prop_assert!(m.eval(w[0]) <= m.eval(w[1]) + 1e-9);
            }
        }
    }
}
