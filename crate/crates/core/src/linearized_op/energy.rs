//! Energy kernels `κ_i`, its modulated form `κ̃_i`, and the mirrored `κ̃₃`.
//!
//! `κ_i(I, J) = ∫_{(J−I)₊}^∞ e^{(J−I−2I*)/2k_BT_i} b_i(I, I*) dμ(I*)`.  With the
//! modulation `m(I, I*, J) ≤ 1` inside `B₀`, the velocity and energy parts of
//! `κ₂` separate exactly as `κ₂ = κ_k·κ̃_i` with
//! `κ̃_i(I, J) = ∫ e^{(J−I−2I*)/2k_BT_i} b_i m dμ(I*)`.

use crate::cross_section::CrossSectionModel;
use crate::quad::{graded_breaks, merge_breaks, NodeSet};

/// `e^{−46}` is below double-precision resolution.
const EXP_CUT: f64 = 46.0;

/// Energy-side kernels at internal temperature `k_B T_i`.
#[derive(Debug, Clone)]
pub struct EnergyKernel<'a> {
    pub model: &'a CrossSectionModel,
    pub ki: f64,
    pub order: usize,
}

/// Which energy kernel to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyKernelKind {
    /// `κ_i`, without modulation.
    Bound,
    /// `κ̃_i`, the exact energy factor of `κ₂`.
    Modulated,
    /// `κ̃₃`, the energy factor of `K₃` once folded onto `K₂`'s variables.
    Mirrored,
}

impl<'a> EnergyKernel<'a> {
    pub fn new(model: &'a CrossSectionModel, ki: f64, order: usize) -> Self {
        EnergyKernel { model, ki, order }
    }

    /// Breakpoints on `[lo, ∞)` for an integrand with scale `scale` near
    /// `lo`, decaying like `e^{−x/rate_scale}`; `singular` grades deeply
    /// toward `lo`.
    fn breaks(&self, lo: f64, scale: f64, rate_scale: f64, singular: bool, extra: &[f64]) -> Vec<f64> {
        let d = scale.min(rate_scale).max(1e-300);
        let levels = if singular { 14 } else { 4 };
        let mut points: Vec<f64> = (0..=levels).map(|k| lo + d * 0.25f64.powi(k)).collect();
        let hi = lo + EXP_CUT * rate_scale;
        if !singular && lo < d {
            // `ρ` may be singular at 0, a distance `lo` below the interval
            points.extend(graded_breaks(lo, lo + d, lo, 2.0, d));
        }
        points.extend(graded_breaks(lo + d, hi, d, 2.0, 4.0 * rate_scale));
        points.extend_from_slice(extra);
        merge_breaks(points, lo, hi)
    }

    /// `I*` nodes for `κ_i(I, J)`, weights carrying `ρ(I*)` and the
    /// exponential factor.
    pub(crate) fn istar_nodes(&self, i: f64, j: f64) -> Vec<(f64, f64)> {
        let law = &self.model.law;
        let lo = (j - i).max(0.0);
        let mut extra: Vec<f64> = Vec::new();
        for b in law.breakpoints() {
            extra.push(b);
            extra.push(b - i);
        }
        if self.model.modulation > 0.0 {
            extra.push(i);
            extra.push(2.0 * j - i);
        }
        let singular = lo == 0.0 || i + lo == 0.0;
        let scale = if lo == 0.0 && i > 0.0 { i } else { i + lo };
        let breaks = self.breaks(lo, scale.max(1e-12 * self.ki), self.ki, singular, &extra);
        let set = NodeSet::gauss_panels(&breaks, self.order);
        set.iter()
            .filter_map(|(x, w)| {
                let weight = w * law.rho(x) * ((j - i - 2.0 * x) / (2.0 * self.ki)).exp();
                (weight != 0.0).then_some((x, weight))
            })
            .collect()
    }

    /// One of the energy kernels at `(I, J)`.
    pub fn eval(&self, kind: EnergyKernelKind, i: f64, j: f64) -> f64 {
        let model = self.model;
        let rho_j = model.law.rho(j);
        self.istar_nodes(i, j)
            .into_iter()
            .map(|(x, w)| {
                let bi = model.b_i(i, x);
                match kind {
                    EnergyKernelKind::Bound => w * bi,
                    EnergyKernelKind::Modulated => w * bi * model.modulation_factor(i, x, j),
                    EnergyKernelKind::Mirrored => {
                        let s = i + x;
                        w * bi * model.modulation_factor(i, x, j) * model.law.rho((s - j).max(0.0)) / rho_j
                    }
                }
            })
            .sum()
    }

    /// `(κ̃_i(I, J), κ̃₃(I, J))` on shared nodes.
    pub fn modulated_pair(&self, i: f64, j: f64) -> (f64, f64) {
        let model = self.model;
        let rho_j = model.law.rho(j);
        let mut pair = (0.0, 0.0);
        for (x, w) in self.istar_nodes(i, j) {
            let t = w * model.b_i(i, x) * model.modulation_factor(i, x, j);
            pair.0 += t;
            pair.1 += t * model.law.rho((i + x - j).max(0.0)) / rho_j;
        }
        pair
    }

    /// `κ_i(I, J)`.
    pub fn kappa_i(&self, i: f64, j: f64) -> f64 {
        self.eval(EnergyKernelKind::Bound, i, j)
    }

    /// `κ̃_i(I, J)`.
    pub fn kappa_i_modulated(&self, i: f64, j: f64) -> f64 {
        self.eval(EnergyKernelKind::Modulated, i, j)
    }

    /// `κ̃₃(I, J)`; equal to `κ̃_i` for Lebesgue `μ`.
    pub fn kappa_3(&self, i: f64, j: f64) -> f64 {
        self.eval(EnergyKernelKind::Mirrored, i, j)
    }

    /// `J` nodes for `∫ h(J) κ(I, J) dμ(J)`, weights carrying `ρ(J)`;
    /// `cutoff` truncates the support of `h`.
    pub fn j_nodes(&self, i: f64, cutoff: Option<f64>) -> NodeSet {
        let law = &self.model.law;
        let rate = 2.0 * self.ki;
        let hi = cutoff.unwrap_or(f64::INFINITY).min(i + EXP_CUT * rate);
        let mut points = vec![0.0, i, hi];
        let d0 = i.min(self.ki).max(1e-12 * self.ki);
        points.extend((0..=10).map(|k| d0 * 0.25f64.powi(k)));
        points.extend(graded_breaks(0.0, i, d0, 2.0, self.ki));
        if i > 0.0 {
            points.extend(graded_breaks(i, i + EXP_CUT * rate, (0.25 * i).min(self.ki), 2.0, 4.0 * self.ki));
        } else {
            points.extend(graded_breaks(0.0, EXP_CUT * rate, d0, 2.0, 4.0 * self.ki));
        }
        if i > 0.0 {
            // kinks at J = I and, under modulation, where a crease of `m`
            // meets the lower limit: I* = 2J − I at J = I/2, I* = I at J = 2I
            let d1 = (0.25 * i).min(self.ki);
            // (J − I)^{1+α} behaviour above I needs deep grading
            let mut centres = vec![(i, 2, 10)];
            if self.model.modulation > 0.0 {
                centres.extend([(0.5 * i, 3, 3), (2.0 * i, 3, 3)]);
            }
            for (c, below, above) in centres {
                points.push(c);
                points.extend((1..=below).map(|k| c - d1 * 0.25f64.powi(k)));
                points.extend((1..=above).map(|k| c + d1 * 0.25f64.powi(k)));
            }
        }
        points.extend(law.breakpoints());
        let breaks = merge_breaks(points, 0.0, hi);
        let mut set = NodeSet::gauss_panels(&breaks, self.order);
        for (x, w) in set.nodes.iter().zip(set.weights.iter_mut()) {
            *w *= law.rho(*x);
        }
        set
    }

    /// `∫ h(J) κ(I, J) dμ(J)`.
    pub fn apply(&self, kind: EnergyKernelKind, i: f64, cutoff: Option<f64>, h: impl Fn(f64) -> f64) -> f64 {
        self.j_nodes(i, cutoff)
            .iter()
            .map(|(j, w)| {
                let hj = h(j);
                if hj == 0.0 {
                    0.0
                } else {
                    w * hj * self.eval(kind, i, j)
                }
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross_section::{InternalForm, KineticForm};
    use crate::energy_law::EnergyLaw;
    use crate::quad::{adaptive, Tolerance};

    fn reference(model: &CrossSectionModel, ki: f64, i: f64, j: f64) -> f64 {
        let lo = (j - i).max(0.0);
        let mut breaks: Vec<f64> = (0..30).map(|k| lo + 0.5f64.powi(30 - k)).collect();
        breaks.insert(0, lo);
        breaks.extend((1..=60).map(|k| lo + k as f64));
        breaks.push(i);
        breaks.push(2.0 * j - i);
        let breaks = merge_breaks(breaks, lo, lo + 60.0);
        adaptive(&breaks, Tolerance::new(1e-300, 1e-13).with_max_intervals(20000), |x| {
            ((j - i - 2.0 * x) / (2.0 * ki)).exp() * model.b_i(i, x) * model.modulation_factor(i, x, j) * model.law.rho(x)
        })
        .value
    }

    #[test]
    fn modulated_kernel_matches_adaptive_reference() {
        let law = EnergyLaw::power(0.5, 1.0).unwrap();
        let model = CrossSectionModel::new(KineticForm::Power { exponent: 1.0 }, InternalForm::Normalized, 1.0, law)
            .unwrap()
            .with_modulation(0.3)
            .unwrap();
        let k = EnergyKernel::new(&model, 1.0, 10);
        for &(i, j) in &[(0.3, 0.1), (0.3, 2.0), (5.0, 4.0), (1e-3, 0.5), (2.0, 10.0)] {
            let a = k.kappa_i_modulated(i, j);
            let b = reference(&model, 1.0, i, j);
            assert!((a - b).abs() <= 1e-10 * b, "({i}, {j}): {a} vs {b}");
            assert!(a < k.kappa_i(i, j));
        }
    }

    #[test]
    fn mirrored_kernel_is_modulated_kernel_for_lebesgue() {
        let model = CrossSectionModel::new(
            KineticForm::Power { exponent: 0.0 },
            InternalForm::Normalized,
            0.0,
            EnergyLaw::lebesgue(),
        )
        .unwrap()
        .with_modulation(0.2)
        .unwrap();
        let k = EnergyKernel::new(&model, 1.3, 10);
        for &(i, j) in &[(0.5, 0.2), (1.0, 3.0)] {
            let a = k.kappa_3(i, j);
            let b = k.kappa_i_modulated(i, j);
            assert!((a - b).abs() <= 1e-14 * b);
        }
    }

    #[test]
    fn mirrored_kernel_differs_for_power_law() {
        let model = CrossSectionModel::new(
            KineticForm::Power { exponent: 0.0 },
            InternalForm::Normalized,
            0.0,
            EnergyLaw::power(0.5, 1.0).unwrap(),
        )
        .unwrap();
        let k = EnergyKernel::new(&model, 1.0, 10);
        let (a, b) = (k.kappa_3(1.0, 0.3), k.kappa_i_modulated(1.0, 0.3));
        assert!((a - b).abs() > 1e-3 * b, "{a} vs {b}");
    }
}
