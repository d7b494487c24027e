//! Quadrature building blocks: Gauss–Legendre rules, composite node sets,
//! adaptive Gauss–Kronrod integration (scalar and vector valued), periodic
//! trapezoid sums and a logarithmic map for exponentially decaying tails.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    fn compute(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut derivative = 0.0;
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                derivative = dp;
                let step = p / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            if derivative == 0.0 {
                derivative = legendre_with_derivative(n, x).1;
            }
            let w = 2.0 / ((1.0 - x * x) * derivative * derivative);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    /// Shared, cached rule of the requested order.
    pub fn of_order(n: usize) -> Arc<GaussRule> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("gauss rule cache poisoned");
        guard.entry(n).or_insert_with(|| Arc::new(GaussRule::compute(n))).clone()
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// A fixed list of quadrature nodes with weights, typically built from
/// Gauss panels between breakpoints.
#[derive(Debug, Clone, Default)]
pub struct NodeSet {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NodeSet {
    /// Gauss–Legendre rule of `order` on every panel `[breaks[k], breaks[k+1]]`.
    pub fn gauss_panels(breaks: &[f64], order: usize) -> Self {
        let rule = GaussRule::of_order(order);
        let mut set = NodeSet::default();
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                set.nodes.push(mid + half * x);
                set.weights.push(w * half);
            }
        }
        set
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sum(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Breakpoints `a, a+h0, a+h0(1+q), ...` growing geometrically with ratio `q`
/// until the panel width reaches `max_width`, then uniform, ending at `b`.
pub fn graded_breaks(a: f64, b: f64, first_width: f64, ratio: f64, max_width: f64) -> Vec<f64> {
    let mut breaks = vec![a];
    if b <= a {
        return breaks;
    }
    let mut width = first_width.max(f64::MIN_POSITIVE).min(b - a);
    let mut x = a;
    loop {
        let next = x + width;
        if next >= b * (1.0 - 1e-14) - 1e-300 {
            breaks.push(b);
            break;
        }
        breaks.push(next);
        x = next;
        width = (width * ratio).min(max_width);
    }
    breaks
}

/// Merge sorted breakpoint lists, dropping duplicates closer than `1e-14` relative.
pub fn merge_breaks(mut points: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    points.retain(|x| x.is_finite() && *x >= lo && *x <= hi);
    points.push(lo);
    points.push(hi);
    points.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    points.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + x.abs()));
    points
}

/// Tolerances for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            max_intervals: 400,
        }
    }

    pub const fn with_max_intervals(mut self, max_intervals: usize) -> Self {
        self.max_intervals = max_intervals;
        self
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::new(1e-300, 1e-10)
    }
}

/// Result of an integration: value, error estimate and whether the
/// requested tolerance was met.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

impl Quadrature {
    pub fn into_result(self) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::Convergence {
                estimate: self.value,
                error: self.error,
            })
        }
    }
}

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

/// One Gauss–Kronrod 7/15 pass on `[a, b]` for a vector-valued integrand.
fn kronrod_segment(f: &mut impl FnMut(f64, &mut [f64]), a: f64, b: f64, dim: usize, scratch: &mut [Vec<f64>; 15]) -> Segment {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    f(mid, &mut scratch[7]);
    for j in 0..7 {
        let dx = half * XGK[j];
        f(mid - dx, &mut scratch[j]);
        f(mid + dx, &mut scratch[14 - j]);
    }
    let mut value = vec![0.0; dim];
    let mut error: f64 = 0.0;
    for c in 0..dim {
        let centre = scratch[7][c];
        let mut kronrod = WGK[7] * centre;
        let mut gauss = WG[3] * centre;
        let mut abs_sum = WGK[7] * centre.abs();
        for j in 0..7 {
            let pair = scratch[j][c] + scratch[14 - j][c];
            kronrod += WGK[j] * pair;
            abs_sum += WGK[j] * (scratch[j][c].abs() + scratch[14 - j][c].abs());
            if j % 2 == 1 {
                gauss += WG[j / 2] * pair;
            }
        }
        let mean = 0.5 * kronrod;
        let mut asc = WGK[7] * (centre - mean).abs();
        for j in 0..7 {
            asc += WGK[j] * ((scratch[j][c] - mean).abs() + (scratch[14 - j][c] - mean).abs());
        }
        let result = kronrod * half;
        let resabs = abs_sum * half.abs();
        let resasc = asc * half.abs();
        let mut err = ((kronrod - gauss) * half).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * resabs);
        }
        if !result.is_finite() {
            err = f64::INFINITY;
        }
        value[c] = result;
        error = error.max(err);
    }
    Segment { a, b, value, error }
}

/// Adaptive integration of a vector-valued integrand over consecutive
/// panels given by `breaks`.  The error is measured in the max norm.
pub fn adaptive_vec(dim: usize, breaks: &[f64], tol: Tolerance, mut f: impl FnMut(f64, &mut [f64])) -> (Vec<f64>, f64, bool) {
    let mut scratch: [Vec<f64>; 15] = std::array::from_fn(|_| vec![0.0; dim]);
    let mut segments: Vec<Segment> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod_segment(&mut f, w[0], w[1], dim, &mut scratch))
        .collect();
    if segments.is_empty() {
        return (vec![0.0; dim], 0.0, true);
    }
    loop {
        let mut total = vec![0.0; dim];
        let mut error = 0.0;
        for s in &segments {
            for (t, v) in total.iter_mut().zip(&s.value) {
                *t += v;
            }
            error += s.error;
        }
        let scale = total.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let target = tol.abs.max(tol.rel * scale);
        if error <= target {
            return (total, error, true);
        }
        if segments.len() >= tol.max_intervals || !error.is_finite() && segments.len() > 64 {
            return (total, error, false);
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, s)| if s.error > be { (i, s.error) } else { (bi, be) });
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            return (total, error, false);
        }
        segments.push(kronrod_segment(&mut f, seg.a, mid, dim, &mut scratch));
        segments.push(kronrod_segment(&mut f, mid, seg.b, dim, &mut scratch));
    }
}

/// Scalar adaptive Gauss–Kronrod integration over the panels in `breaks`.
pub fn adaptive(breaks: &[f64], tol: Tolerance, mut f: impl FnMut(f64) -> f64) -> Quadrature {
    let (value, error, converged) = adaptive_vec(1, breaks, tol, |x, out| out[0] = f(x));
    Quadrature {
        value: value[0],
        error,
        converged,
    }
}

/// Mean of a `2π`-periodic function by the trapezoid rule, doubling the
/// number of points until two successive sums agree to `rel_tol`.
pub fn periodic_mean(mut f: impl FnMut(f64) -> f64, start_points: usize, rel_tol: f64, max_points: usize) -> f64 {
    let mut n = start_points.max(4);
    let mut sum: f64 = (0..n).map(|j| f(std::f64::consts::TAU * j as f64 / n as f64)).sum();
    let mut mean = sum / n as f64;
    while n < max_points {
        let added: f64 = (0..n).map(|j| f(std::f64::consts::TAU * (j as f64 + 0.5) / n as f64)).sum();
        sum += added;
        n *= 2;
        let next = sum / n as f64;
        let scale = next.abs().max(added.abs() / (n as f64 / 2.0)).max(f64::MIN_POSITIVE);
        let converged = (next - mean).abs() <= rel_tol * scale;
        mean = next;
        if converged {
            break;
        }
    }
    mean
}

/// Vector form of [`periodic_mean`]: `f(angle, out)` fills `out`.
pub fn periodic_mean_vec(
    dim: usize,
    mut f: impl FnMut(f64, &mut [f64]),
    start_points: usize,
    rel_tol: f64,
    max_points: usize,
    out: &mut [f64],
) {
    let mut buf = vec![0.0; dim];
    let mut sum = vec![0.0; dim];
    let mut n = start_points.max(4);
    for j in 0..n {
        f(std::f64::consts::TAU * j as f64 / n as f64, &mut buf);
        for (s, b) in sum.iter_mut().zip(&buf) {
            *s += b;
        }
    }
    let mut mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
    while n < max_points {
        for j in 0..n {
            f(std::f64::consts::TAU * (j as f64 + 0.5) / n as f64, &mut buf);
            for (s, b) in sum.iter_mut().zip(&buf) {
                *s += b;
            }
        }
        n *= 2;
        let next: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let scale = next.iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
        let change = next.iter().zip(&mean).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        mean = next;
        if change <= rel_tol * scale {
            break;
        }
    }
    out.copy_from_slice(&mean);
}

/// Integral over `[from, ∞)` of a function decaying at least like
/// `exp(-x / scale)`, computed on the unit interval through
/// `x = from - scale·ln u`.  The map carries the exponential decay into a
/// polynomially bounded integrand in `u`.
pub fn exp_tail(from: f64, scale: f64, cutoff: f64, tol: Tolerance, mut f: impl FnMut(f64) -> f64) -> Quadrature {
    let u_min = (-(cutoff - from).max(0.0) / scale).exp();
    let mut breaks = vec![u_min];
    let mut b = 1e-12_f64.max(u_min);
    while b < 1.0 {
        if b > u_min {
            breaks.push(b);
        }
        b *= 100.0;
    }
    breaks.push(1.0);
    adaptive(&breaks, tol, |u| {
        let x = from - scale * u.ln();
        f(x) * scale / u
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let rule = GaussRule::of_order(6);
        let value = rule.integrate(0.0, 2.0, |x| x.powi(11));
        assert_relative_eq!(value, 2f64.powi(12) / 12.0, max_relative = 1e-13);
        let total: f64 = rule.weights.iter().sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let q = adaptive(&[0.0, 1.0], Tolerance::new(1e-14, 1e-12).with_max_intervals(2000), |x| x.powf(-0.5));
        assert!(q.converged);
        assert_relative_eq!(q.value, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn vector_integrand_matches_components() {
        let (v, _, ok) = adaptive_vec(2, &[0.0, std::f64::consts::PI], Tolerance::default(), |x, out| {
            out[0] = x.sin();
            out[1] = x.cos().powi(2);
        });
        assert!(ok);
        assert_relative_eq!(v[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(v[1], std::f64::consts::FRAC_PI_2, max_relative = 1e-12);
    }

    #[test]
    fn periodic_trapezoid_is_spectral() {
        let mean = periodic_mean(|t| (3.0 * t.cos()).exp(), 8, 1e-15, 4096);
        // I0(3)
        assert_relative_eq!(mean, 4.880_792_585_865_024, max_relative = 1e-14);
    }

    #[test]
    fn exponential_tail_integral() {
        let q = exp_tail(0.0, 1.0, 80.0, Tolerance::new(1e-300, 1e-12), |x| x * x * (-x).exp());
        assert_relative_eq!(q.value, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn graded_breaks_cover_interval() {
        let b = graded_breaks(1.0, 5.0, 1e-3, 2.0, 0.5);
        assert_eq!(b[0], 1.0);
        assert_eq!(*b.last().unwrap(), 5.0);
        assert!(b.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.5 + 1e-12));
    }
}
