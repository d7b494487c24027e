//! Cross-section models `B = b_k·b_i·m·1{I′ ≤ I+I*}` and their checks.
//!
//! `b_k(ρ, |cos θ|)` depends on the relative speed and the deflection angle,
//! `b_i(I, I*)` on the pre-collision energies, and `m` is an optional
//! symmetric modulation `exp(−κ|I−I*||I′−I′*|)` that couples the
//! post-collision energy.  With `κ = 0` the energy factor does not depend on
//! `I′`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::energy_law::EnergyLaw;
use crate::error::{argument, domain, Error, Result};
use crate::mc::{estimate, uniform_sphere, Estimate, McRng, MonteCarloConfig};
use crate::quad::{adaptive, GaussRule, Tolerance};
use crate::report::{Check, GrowthEnd, RatioCriterion, VerificationReport};
use crate::special_fn::sup_profile;
use crate::Vec3;

/// Envelopes count as finite below this cap.
pub const ENVELOPE_CAP: f64 = 1e12;

/// Kinetic factor `b_k(ρ, |cos θ|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KineticForm {
    /// `ρ^exponent`.
    Power { exponent: f64 },
    /// `|sin θ|^angle_exponent · ρ^exponent`.
    AngularPower { angle_exponent: f64, exponent: f64 },
    /// `|sin θ|^α ρ^{1+α}`.
    Interpolated { alpha: f64 },
}

impl KineticForm {
    /// `(angle exponent, speed exponent)`.
    pub fn exponents(&self) -> (f64, f64) {
        match *self {
            KineticForm::Power { exponent } => (0.0, exponent),
            KineticForm::AngularPower { angle_exponent, exponent } => (angle_exponent, exponent),
            KineticForm::Interpolated { alpha } => (alpha, 1.0 + alpha),
        }
    }

    /// `b_k` at relative speed `rho` and `coscos = |cos θ|`.
    #[inline]
    pub fn eval(&self, rho: f64, coscos: f64) -> f64 {
        let (a, e) = self.exponents();
        let speed = if e == 0.0 { 1.0 } else { rho.powf(e) };
        if a == 0.0 {
            speed
        } else {
            let sin2 = ((1.0 - coscos) * (1.0 + coscos)).max(0.0);
            speed * sin2.powf(0.5 * a)
        }
    }

    /// Same as [`eval`](Self::eval) with `|sin θ|` supplied directly, which
    /// avoids cancellation near grazing angles.
    #[inline]
    pub(crate) fn eval_sin(&self, rho: f64, sin: f64) -> f64 {
        let (a, e) = self.exponents();
        let speed = if e == 0.0 { 1.0 } else { rho.powf(e) };
        if a == 0.0 {
            speed
        } else {
            speed * sin.powf(a)
        }
    }

    /// Sphere average `A_k(ρ) = ∫_{S²} b_k dσ`, in closed form.
    pub fn sphere_average(&self, rho: f64) -> f64 {
        self.angular_constant() * self.speed_part(rho)
    }

    /// `∫_{S²} |sin θ|^a dσ = 2π B(1/2, a/2 + 1)`.
    pub fn angular_constant(&self) -> f64 {
        let (a, _) = self.exponents();
        if a == 0.0 {
            4.0 * PI
        } else {
            TAU * PI.sqrt() * gamma(0.5 * a + 1.0) / gamma(0.5 * a + 1.5)
        }
    }

    #[inline]
    pub fn speed_part(&self, rho: f64) -> f64 {
        let (_, e) = self.exponents();
        if e == 0.0 {
            1.0
        } else {
            rho.powf(e)
        }
    }

    fn validate(&self) -> Result<()> {
        let (a, e) = self.exponents();
        if !(a >= 0.0 && a.is_finite()) {
            return Err(argument(format!("angular exponent must be >= 0, got {a}")));
        }
        if !(e > -1.0 && e.is_finite()) {
            return Err(argument(format!("speed exponent must exceed -1, got {e}")));
        }
        Ok(())
    }
}

/// Energy factor `b_i(I, I*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InternalForm {
    /// `(I+I*)^{γ/2} / μ[0, I+I*]`, with `γ` taken from the model.
    Normalized,
    /// `(1 + (I+I*)^{γ/2}) / μ[0, I+I*]`.
    Combination,
    /// `I`: not symmetric, kept as a counterexample.
    Asymmetric,
}

/// How the energy average `∫ b_i·m dμ(I′)` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EnergyAverage {
    Closed,
    Quadrature,
}

/// Named parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `b_k ≡ 1`.
    Maxwell,
    /// `b_k = ρ`.
    HardSphereLike,
    /// `b_k = |sin θ|^{1/2} ρ^{3/2}`.
    InterpolatedAlpha,
}

/// Serializable model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossSectionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinetic: Option<KineticForm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub internal: Option<InternalForm>,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub delta1: f64,
    #[serde(default)]
    pub delta2: f64,
    #[serde(default = "one")]
    pub envelope_constant: f64,
    #[serde(default)]
    pub modulation: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for CrossSectionSpec {
    fn default() -> Self {
        CrossSectionSpec {
            preset: Some(Preset::HardSphereLike),
            kinetic: None,
            internal: None,
            gamma: 0.0,
            delta1: 0.0,
            delta2: 0.0,
            envelope_constant: 1.0,
            modulation: 0.0,
        }
    }
}

impl CrossSectionSpec {
    pub fn build(&self, law: EnergyLaw) -> Result<CrossSectionModel> {
        let kinetic = match (self.kinetic, self.preset) {
            (Some(k), _) => k,
            (None, Some(p)) => p.kinetic(),
            (None, None) => return Err(argument("cross section needs a preset or a kinetic form")),
        };
        let model = CrossSectionModel::new(kinetic, self.internal.unwrap_or(InternalForm::Normalized), self.gamma, law)?
            .with_envelope(self.delta1, self.delta2, self.envelope_constant)?
            .with_modulation(self.modulation)?;
        Ok(model)
    }
}

impl Preset {
    pub fn kinetic(self) -> KineticForm {
        match self {
            Preset::Maxwell => KineticForm::Power { exponent: 0.0 },
            Preset::HardSphereLike => KineticForm::Power { exponent: 1.0 },
            Preset::InterpolatedAlpha => KineticForm::Interpolated { alpha: 0.5 },
        }
    }
}

/// Cross section with its envelope parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSectionModel {
    pub kinetic: KineticForm,
    pub internal: InternalForm,
    pub delta1: f64,
    pub delta2: f64,
    pub gamma: f64,
    pub envelope_constant: f64,
    /// `κ ≥ 0` in `m = exp(−κ|I−I*||I′−I′*|)`.
    pub modulation: f64,
    pub law: EnergyLaw,
}

impl CrossSectionModel {
    pub fn new(kinetic: KineticForm, internal: InternalForm, gamma: f64, law: EnergyLaw) -> Result<Self> {
        kinetic.validate()?;
        if !(0.0..2.0).contains(&gamma) {
            return Err(argument(format!("gamma must lie in [0, 2), got {gamma}")));
        }
        Ok(CrossSectionModel {
            kinetic,
            internal,
            delta1: 0.0,
            delta2: 0.0,
            gamma,
            envelope_constant: 1.0,
            modulation: 0.0,
            law,
        })
    }

    /// Preset kinetic factor with the normalized energy factor.
    pub fn preset(preset: Preset, gamma: f64, law: EnergyLaw) -> Result<Self> {
        Self::new(preset.kinetic(), InternalForm::Normalized, gamma, law)
    }

    pub fn with_envelope(mut self, delta1: f64, delta2: f64, constant: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&delta1) {
            return Err(argument(format!("delta1 must lie in [0, 1), got {delta1}")));
        }
        if !(0.0..0.5).contains(&delta2) {
            return Err(argument(format!("delta2 must lie in [0, 1/2), got {delta2}")));
        }
        if !(constant > 0.0) {
            return Err(argument("envelope constant must be positive"));
        }
        self.delta1 = delta1;
        self.delta2 = delta2;
        self.envelope_constant = constant;
        Ok(self)
    }

    pub fn with_modulation(mut self, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(argument(format!("modulation must be finite and >= 0, got {kappa}")));
        }
        self.modulation = kappa;
        Ok(self)
    }

    pub fn with_kinetic(mut self, kinetic: KineticForm) -> Result<Self> {
        kinetic.validate()?;
        self.kinetic = kinetic;
        Ok(self)
    }

    pub fn with_internal(mut self, internal: InternalForm) -> Self {
        self.internal = internal;
        self
    }

    /// `b_k(ρ, |cos θ|)`.
    #[inline]
    pub fn b_k(&self, rho: f64, coscos: f64) -> f64 {
        self.kinetic.eval(rho, coscos)
    }

    /// `b_i(I, I*)`; zero when `I + I* = 0`.
    pub fn b_i(&self, i: f64, i_star: f64) -> f64 {
        let s = i + i_star;
        match self.internal {
            InternalForm::Asymmetric => i,
            InternalForm::Normalized | InternalForm::Combination => {
                let mass = self.law.mass_unchecked(s);
                if !(mass > 0.0) {
                    return 0.0;
                }
                let head = if self.gamma == 0.0 { 1.0 } else { s.powf(0.5 * self.gamma) };
                match self.internal {
                    InternalForm::Normalized => head / mass,
                    _ => (1.0 + head) / mass,
                }
            }
        }
    }

    /// Energy modulation `m(I, I*, I′)`.
    #[inline]
    pub fn modulation_factor(&self, i: f64, i_star: f64, i_prime: f64) -> f64 {
        if self.modulation == 0.0 {
            return 1.0;
        }
        let s = i + i_star;
        (-self.modulation * (i - i_star).abs() * (2.0 * i_prime - s).abs()).exp()
    }

    /// `B₀(ρ, |cos θ|, I, I*, I′)` restricted to the support.
    #[inline]
    pub fn b0(&self, rho: f64, coscos: f64, i: f64, i_star: f64, i_prime: f64) -> f64 {
        if !(i_prime >= 0.0 && i_prime <= i + i_star) {
            return 0.0;
        }
        self.b_k(rho, coscos) * self.b_i(i, i_star) * self.modulation_factor(i, i_star, i_prime)
    }

    /// `B(v, v*, I, I*, I′, σ)`.
    pub fn eval_b(&self, v: Vec3, v_star: Vec3, i: f64, i_star: f64, i_prime: f64, sigma: Vec3) -> Result<f64> {
        if (sigma.norm() - 1.0).abs() > 1e-12 {
            return Err(argument("sigma must be a unit vector"));
        }
        if !(i >= 0.0 && i_star >= 0.0) {
            return Err(domain("energies must be nonnegative"));
        }
        Ok(self.eval_b_unchecked(v, v_star, i, i_star, i_prime, sigma))
    }

    #[inline]
    pub(crate) fn eval_b_unchecked(&self, v: Vec3, v_star: Vec3, i: f64, i_star: f64, i_prime: f64, sigma: Vec3) -> f64 {
        let rel = v - v_star;
        let rho = rel.norm();
        let coscos = if rho > 0.0 { (rel.dot(&sigma) / rho).abs().min(1.0) } else { 1.0 };
        self.b0(rho, coscos, i, i_star, i_prime)
    }

    fn energy_average_mode(&self) -> EnergyAverage {
        if self.modulation == 0.0 || self.law.is_lebesgue() {
            EnergyAverage::Closed
        } else {
            EnergyAverage::Quadrature
        }
    }

    /// `E(I, I*) = ∫_0^{I+I*} b_i·m dμ(I′)`.
    pub fn energy_average(&self, i: f64, i_star: f64) -> f64 {
        let s = i + i_star;
        if !(s > 0.0) {
            return 0.0;
        }
        let bi = self.b_i(i, i_star);
        if bi == 0.0 {
            return 0.0;
        }
        let d = (i - i_star).abs();
        let k = self.modulation * d;
        match self.energy_average_mode() {
            _ if k == 0.0 => bi * self.law.mass_unchecked(s),
            EnergyAverage::Closed => {
                // Lebesgue: ∫_0^S e^{−k|2x−S|} dx = −expm1(−kS)/k
                let scale = self.law.mass_unchecked(1.0);
                bi * scale * (-(-k * s).exp_m1()) / k
            }
            EnergyAverage::Quadrature => {
                let half = 0.5 * s;
                let f = |x: f64| (-k * (2.0 * x - s).abs()).exp();
                let rule = GaussRule::of_order(20);
                let lower = self.law.gauss_mass_weighted(half, 20, f);
                let upper = rule.integrate(half, s, |x| f(x) * self.law.rho(x));
                bi * (lower + upper)
            }
        }
    }

    /// `B̄(v, v*, I, I*) = A_k(|v−v*|)·E(I, I*)`.
    pub fn bbar(&self, rho: f64, i: f64, i_star: f64) -> f64 {
        self.kinetic.sphere_average(rho) * self.energy_average(i, i_star)
    }

    /// `B̄₀ = ∫ B₀ dμ(I′)` at fixed angle.
    pub fn bbar0(&self, rho: f64, coscos: f64, i: f64, i_star: f64) -> f64 {
        self.b_k(rho, coscos) * self.energy_average(i, i_star)
    }

    /// Envelope `|sin θ|(ρ²+ρ⁻¹) + ρ + ρ^{−δ₁} + |sin θ|^{−δ₂}`.
    pub fn bk_envelope(&self, rho: f64, theta: f64) -> f64 {
        let s = theta.sin().abs();
        s * (rho * rho + 1.0 / rho) + rho + rho.powf(-self.delta1) + s.powf(-self.delta2)
    }

    /// `b_k(ρ, |cos θ|)` over its envelope on a `(ρ, θ)` grid, watched as
    /// `ρ → ∞` and `ρ → 0`.
    pub fn bk_envelope_check(&self, grid: &[(f64, f64)]) -> Result<VerificationReport> {
        if grid.is_empty() {
            return Err(argument("b_k envelope grid is empty"));
        }
        let (xs, sups) = sup_profile(grid, |rho, theta| {
            self.kinetic.eval_sin(rho, theta.sin().abs()) / self.bk_envelope(rho, theta)
        });
        let verdict = RatioCriterion::bounded(ENVELOPE_CAP).evaluate(&xs, &sups);
        let mut report = VerificationReport::new("bk-envelope");
        report.push(Check::ratio("b_k / envelope", verdict.max, ENVELOPE_CAP, verdict.pass).with_detail(verdict.describe()));
        Ok(report)
    }

    /// `b_i·μ[0,I+I*] / (I+I*)^{γ/2}` on an `(I, I*)` grid, profiled in `I+I*`.
    pub fn bi_envelope_check(&self, grid: &[(f64, f64)]) -> Result<VerificationReport> {
        if grid.is_empty() {
            return Err(argument("b_i envelope grid is empty"));
        }
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(grid.len());
        for &(i, i_star) in grid {
            if !(i > 0.0 && i_star > 0.0) {
                return Err(domain("b_i envelope grid needs positive energies"));
            }
            pairs.push((i + i_star, i));
        }
        let (xs, sups) = sup_profile(&pairs, |s, i| {
            self.b_i(i, s - i) * self.law.mass_unchecked(s) / s.powf(0.5 * self.gamma)
        });
        let (ys, infs) = sup_profile(&pairs, |s, i| {
            -(self.b_i(i, s - i) * self.law.mass_unchecked(s) / s.powf(0.5 * self.gamma))
        });
        let infs: Vec<f64> = infs.iter().map(|v| -v).collect();
        let upper = RatioCriterion::bounded(ENVELOPE_CAP).at_end(GrowthEnd::Both).evaluate(&xs, &sups);
        let mut report = VerificationReport::new("bi-envelope");
        report.push(Check::ratio("b_i mu / (I+I*)^(gamma/2)", upper.max, ENVELOPE_CAP, upper.pass).with_detail(upper.describe()));
        let nonneg = infs.iter().all(|v| *v >= 0.0);
        report.push(Check::flag("b_i nonnegative", ys.len() as f64, 0.0, nonneg));
        Ok(report)
    }

    /// Largest symmetry and micro-reversibility residuals over random
    /// arguments.  The reversed collision uses `σ_rev = (v−v*)/|v−v*|`.
    pub fn check_symmetry(&self, samples: usize, rng: &mut McRng) -> Result<VerificationReport> {
        if samples == 0 {
            return Err(argument("symmetry check needs at least one sample"));
        }
        let mut sym: f64 = 0.0;
        let mut rev: f64 = 0.0;
        for _ in 0..samples {
            let v = crate::mc::gaussian_vec(rng, Vec3::zeros(), 2.0);
            let v_star = crate::mc::gaussian_vec(rng, Vec3::zeros(), 2.0);
            let sigma = uniform_sphere(rng);
            let i = 3.0 * rng.random::<f64>();
            let i_star = 3.0 * rng.random::<f64>();
            let s = i + i_star;
            let i_prime = s * rng.random::<f64>();
            let i_prime_star = (s - i_prime).max(0.0);
            let b = self.eval_b_unchecked(v, v_star, i, i_star, i_prime, sigma);
            let swapped = self.eval_b_unchecked(v_star, v, i_star, i, i_prime_star, sigma);
            let (vp, vps) = crate::kinematics::post_velocities_unchecked(v, v_star, sigma);
            let rel = v - v_star;
            let sigma_rev = rel / rel.norm();
            let reversed = self.eval_b_unchecked(vp, vps, i_prime, i_prime_star, i, sigma_rev);
            let scale = b.abs().max(1.0);
            sym = sym.max((swapped - b).abs() / scale);
            rev = rev.max((reversed - b).abs() / scale);
        }
        let mut report = VerificationReport::new("cross-section-symmetry");
        report.push(Check::at_most("symmetry residual", sym, 1e-12));
        report.push(Check::at_most("micro-reversibility residual", rev, 1e-12));
        Ok(report)
    }

    /// `B̄` by tensor quadrature: Gauss–Legendre in `θ` (with the `sin θ`
    /// weight), trapezoid in `φ` about the relative velocity, and Gauss on
    /// `[0, I+I*]` against `μ`.
    pub fn averaged_bbar(&self, v: Vec3, v_star: Vec3, i: f64, i_star: f64, order: usize) -> Result<f64> {
        let rel = v - v_star;
        let rho = rel.norm();
        let s = i + i_star;
        if !(s > 0.0) {
            return Ok(0.0);
        }
        let axis = if rho > 0.0 { rel / rho } else { Vec3::z() };
        let (e1, e2) = crate::kinematics::plane_frame(&axis);
        let rule = GaussRule::of_order(order);
        let n_phi = 2 * order;
        let mut sphere = 0.0;
        for (half_lo, half_hi) in [(0.0, 0.5 * PI), (0.5 * PI, PI)] {
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let theta = 0.5 * (half_lo + half_hi) + 0.5 * (half_hi - half_lo) * x;
                let wt = 0.5 * (half_hi - half_lo) * w * theta.sin();
                let mut ring = 0.0;
                for k in 0..n_phi {
                    let phi = TAU * k as f64 / n_phi as f64;
                    let sigma = theta.cos() * axis + theta.sin() * (phi.cos() * e1 + phi.sin() * e2);
                    let coscos = if rho > 0.0 { sigma.dot(&axis).abs().min(1.0) } else { 1.0 };
                    ring += self.b_k(rho, coscos);
                }
                sphere += wt * ring * TAU / n_phi as f64;
            }
        }
        let bi = self.b_i(i, i_star);
        let tol = Tolerance::new(1e-300, 1e-12);
        let mid = 0.5 * s;
        let energy = adaptive(&[0.0, mid, s], tol, |x| bi * self.modulation_factor(i, i_star, x) * self.law.rho(x));
        if !energy.converged {
            return Err(Error::Convergence {
                estimate: energy.value,
                error: energy.error,
            });
        }
        Ok(sphere * energy.value)
    }

    /// Monte Carlo oracle for `B̄`: `σ` uniform, `I′` uniform in μ on `[0, I+I*]`.
    pub fn averaged_bbar_mc(&self, v: Vec3, v_star: Vec3, i: f64, i_star: f64, mc: &MonteCarloConfig) -> Result<Estimate> {
        let s = i + i_star;
        let total = self.law.mass_unchecked(s);
        if !(total > 0.0) {
            return Ok(Estimate::exact(0.0));
        }
        let e = estimate(mc, |d| {
            let sigma = uniform_sphere(d.rng);
            let u = d.stratified_uniform();
            let i_prime = self.law.sample_uniform_in(s, u);
            self.eval_b_unchecked(v, v_star, i, i_star, i_prime, sigma)
        })?;
        Ok(e.scaled(4.0 * PI * total))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn default_model() -> CrossSectionModel {
        CrossSectionModel::preset(Preset::HardSphereLike, 0.0, EnergyLaw::lebesgue()).unwrap()
    }

    #[test]
    fn default_value_example() {
        let m = default_model();
        let b = m.eval_b(Vec3::new(2.0, 0.0, 0.0), Vec3::zeros(), 0.5, 0.5, 0.3, Vec3::y()).unwrap();
        assert_relative_eq!(b, 2.0, epsilon = 1e-15);
        assert_eq!(m.eval_b(Vec3::x(), Vec3::zeros(), 0.5, 0.5, 2.0, Vec3::y()).unwrap(), 0.0);
        assert_eq!(m.eval_b(Vec3::x(), Vec3::x(), 0.5, 0.5, 0.2, Vec3::y()).unwrap(), 0.0);
    }

    #[test]
    fn angular_constants() {
        let k = KineticForm::Interpolated { alpha: 0.0 };
        assert_relative_eq!(k.angular_constant(), 4.0 * PI, max_relative = 1e-14);
        let k = KineticForm::AngularPower {
            angle_exponent: 2.0,
            exponent: 0.0,
        };
        // ∫ sin²θ dσ = 8π/3
        assert_relative_eq!(k.angular_constant(), 8.0 * PI / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn tensor_quadrature_matches_closed_form() {
        let law = EnergyLaw::power(1.0, 1.0).unwrap();
        let m = CrossSectionModel::new(KineticForm::Interpolated { alpha: 0.5 }, InternalForm::Normalized, 1.0, law)
            .unwrap()
            .with_modulation(0.7)
            .unwrap();
        let v = Vec3::new(0.3, -1.0, 0.5);
        let vs = Vec3::new(-0.2, 0.4, 1.1);
        let q = m.averaged_bbar(v, vs, 0.8, 1.7, 24).unwrap();
        let closed = m.bbar((v - vs).norm(), 0.8, 1.7);
        assert_relative_eq!(q, closed, max_relative = 1e-6);
    }

    #[test]
    fn asymmetric_energy_factor_fails_symmetry() {
        let m = default_model().with_internal(InternalForm::Asymmetric);
        let mut rng = McRng::seed_from_u64(3);
        let r = m.check_symmetry(200, &mut rng).unwrap();
        assert!(!r.pass);
        assert!(r.checks[0].estimate > 0.0);
    }
}
