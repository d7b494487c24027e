//! Piecewise Chebyshev interpolation of smooth profiles.

use std::f64::consts::PI;

/// Interpolant built from values at Chebyshev points of the second kind on
/// each panel, evaluated by the barycentric formula.  It vanishes outside
/// `[breaks[0], breaks[n]]`.
#[derive(Debug, Clone)]
pub struct ChebyshevPanels {
    breaks: Vec<f64>,
    /// Reference nodes on `[−1, 1]`, shared by every panel.
    reference: Vec<f64>,
    weights: Vec<f64>,
    /// `values[panel][k]`.
    values: Vec<Vec<f64>>,
}

impl ChebyshevPanels {
    /// Sample `f` at `points` Chebyshev nodes on each panel.
    pub fn build(breaks: &[f64], points: usize, mut f: impl FnMut(f64) -> f64) -> Self {
        assert!(breaks.len() >= 2 && points >= 2);
        let n = points - 1;
        let reference: Vec<f64> = (0..=n).map(|k| -(PI * k as f64 / n as f64).cos()).collect();
        let weights: Vec<f64> = (0..=n)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                if k == 0 || k == n {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        let values = breaks
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                reference.iter().map(|x| f(0.5 * (a + b) + 0.5 * (b - a) * x)).collect()
            })
            .collect();
        ChebyshevPanels {
            breaks: breaks.to_vec(),
            reference,
            weights,
            values,
        }
    }

    /// All sample abscissae, panel by panel.
    pub fn nodes(breaks: &[f64], points: usize) -> Vec<f64> {
        let mut xs = Vec::new();
        let _ = Self::build(breaks, points, |x| {
            xs.push(x);
            0.0
        });
        xs
    }

    pub fn lower(&self) -> f64 {
        self.breaks[0]
    }

    pub fn upper(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        if !(x >= self.lower() && x <= self.upper()) {
            return 0.0;
        }
        let k = (self.breaks.partition_point(|b| *b <= x).max(1) - 1).min(self.values.len() - 1);
        let (a, b) = (self.breaks[k], self.breaks[k + 1]);
        let t = (2.0 * x - a - b) / (b - a);
        let vals = &self.values[k];
        let mut num = 0.0;
        let mut den = 0.0;
        for ((xk, wk), fk) in self.reference.iter().zip(&self.weights).zip(vals) {
            let d = t - xk;
            if d == 0.0 {
                return *fk;
            }
            let c = wk / d;
            num += c * fk;
            den += c;
        }
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_smooth_functions() {
        let breaks: Vec<f64> = (0..=8).map(|k| k as f64).collect();
        let p = ChebyshevPanels::build(&breaks, 14, |x| (-x * x / 3.0).exp() * x.cos());
        for k in 0..200 {
            let x = 8.0 * k as f64 / 199.0;
            let exact = (-x * x / 3.0).exp() * x.cos();
            assert!((p.eval(x) - exact).abs() < 1e-10, "{x}");
        }
        assert_eq!(p.eval(8.5), 0.0);
        assert_eq!(ChebyshevPanels::nodes(&breaks, 14).len(), 8 * 14);
    }
}
