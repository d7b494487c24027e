//! The quadratic collision operator `Q(f, f)`, its weak form and the
//! entropy-dissipation functional, all by importance-sampled Monte Carlo.
//!
//! Partners `(v*, I*)` are drawn from a Gaussian–Gibbs proposal (or a
//! mixture of them), the post-collision energy uniformly in μ on
//! `[0, I+I*]` and `σ` uniformly on the sphere.  Every weight is exact, so
//! the estimators are unbiased.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;

use crate::cross_section::CrossSectionModel;
use crate::energy_law::{Domain, EnergyLaw, Envelope, LawKind};
use crate::equilibrium::Maxwellian;
use crate::error::{argument, Error, Result};
use crate::kinematics::post_velocities_unchecked;
use crate::mc::{estimate_vec, gaussian_vec, uniform_sphere, Draw, Estimate, MonteCarloConfig};
use crate::Vec3;

pub type Evaluator = Arc<dyn Fn(Vec3, f64) -> f64 + Send + Sync>;

/// Truncation region `{|v| ≤ velocity_radius, I ≤ energy_cutoff}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportHint {
    pub velocity_radius: f64,
    pub energy_cutoff: f64,
}

impl SupportHint {
    pub const UNBOUNDED: SupportHint = SupportHint {
        velocity_radius: f64::INFINITY,
        energy_cutoff: f64::INFINITY,
    };

    #[inline]
    pub fn contains(&self, v: Vec3, i: f64) -> bool {
        v.norm_squared() <= self.velocity_radius * self.velocity_radius && i <= self.energy_cutoff
    }
}

/// A nonnegative function of `(v, I)`.
#[derive(Clone)]
pub struct DensityFunction {
    evaluator: Evaluator,
    log_evaluator: Option<Evaluator>,
    pub support_hint: SupportHint,
    pub log_safe: bool,
    proposal: Option<Proposal>,
}

impl std::fmt::Debug for DensityFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DensityFunction")
            .field("support_hint", &self.support_hint)
            .field("log_safe", &self.log_safe)
            .finish_non_exhaustive()
    }
}

impl DensityFunction {
    pub fn new(evaluator: impl Fn(Vec3, f64) -> f64 + Send + Sync + 'static, support_hint: SupportHint) -> Self {
        DensityFunction {
            evaluator: Arc::new(evaluator),
            log_evaluator: None,
            support_hint,
            log_safe: false,
            proposal: None,
        }
    }

    /// Declare the function strictly positive on its support, with an
    /// accurate logarithm.
    pub fn with_log(mut self, ln: impl Fn(Vec3, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.log_evaluator = Some(Arc::new(ln));
        self.log_safe = true;
        self
    }

    pub fn with_proposal(mut self, proposal: Proposal) -> Self {
        self.proposal = Some(proposal);
        self
    }

    pub fn zero() -> Self {
        DensityFunction::new(|_, _| 0.0, SupportHint::UNBOUNDED)
    }

    pub fn maxwellian(m: &Maxwellian) -> Self {
        Self::mixture(&[(1.0, m.clone())])
    }

    /// `Σ w_k M_k`, positive weights.
    pub fn mixture(components: &[(f64, Maxwellian)]) -> Self {
        let parts: Vec<(f64, Maxwellian)> = components.to_vec();
        let for_eval = parts.clone();
        let for_log = parts.clone();
        let proposal = Proposal::mixture(
            &parts
                .iter()
                .map(|(w, m)| (w * m.n, GaussGibbs::from_maxwellian(m)))
                .collect::<Vec<_>>(),
        );
        DensityFunction::new(
            move |v, i| for_eval.iter().map(|(w, m)| w * m.eval(v, i)).sum(),
            SupportHint::UNBOUNDED,
        )
        .with_log(move |v, i| log_sum_exp(for_log.iter().map(|(w, m)| w.ln() + m.ln_eval(v, i))))
        .with_proposal(proposal)
    }

    /// `M(1 + ε h)`.
    pub fn perturbed(m: &Maxwellian, epsilon: f64, h: impl Fn(Vec3, f64) -> f64 + Send + Sync + 'static) -> Self {
        let h = Arc::new(h);
        let (m1, m2) = (m.clone(), m.clone());
        let h1 = h.clone();
        DensityFunction::new(move |v, i| m1.eval(v, i) * (1.0 + epsilon * h1(v, i)), SupportHint::UNBOUNDED)
            .with_log(move |v, i| m2.ln_eval(v, i) + (epsilon * h(v, i)).ln_1p())
            .with_proposal(Proposal::single(GaussGibbs::from_maxwellian(m)))
    }

    #[inline]
    pub fn eval(&self, v: Vec3, i: f64) -> f64 {
        if self.support_hint.contains(v, i) {
            (self.evaluator)(v, i)
        } else {
            0.0
        }
    }

    /// `ln f`, or `−∞` outside the support.
    #[inline]
    pub fn ln(&self, v: Vec3, i: f64) -> f64 {
        if !self.support_hint.contains(v, i) {
            return f64::NEG_INFINITY;
        }
        match &self.log_evaluator {
            Some(ln) => ln(v, i),
            None => (self.evaluator)(v, i).ln(),
        }
    }

    pub fn proposal(&self) -> Option<&Proposal> {
        self.proposal.as_ref()
    }
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

/// Gaussian velocity times Gibbs energy, normalized against `dv dμ(I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussGibbs {
    pub u: Vec3,
    /// Velocity variance `k_B T_k`.
    pub kt: f64,
    /// Energy scale `k_B T_i`.
    pub ki: f64,
    pub law: EnergyLaw,
    ln_q: f64,
}

impl GaussGibbs {
    pub fn new(u: Vec3, kt: f64, ki: f64, law: EnergyLaw) -> Result<Self> {
        let q = law.partition(ki, 1.0)?;
        Ok(GaussGibbs {
            u,
            kt,
            ki,
            law,
            ln_q: q.ln(),
        })
    }

    pub fn from_maxwellian(m: &Maxwellian) -> Self {
        GaussGibbs {
            u: m.u,
            kt: m.kt(),
            ki: m.ki(),
            law: m.law.clone(),
            ln_q: m.partition().ln(),
        }
    }

    #[inline]
    pub fn ln_density(&self, v: Vec3, i: f64) -> f64 {
        -1.5 * (2.0 * PI * self.kt).ln() - (v - self.u).norm_squared() / (2.0 * self.kt) - i / self.ki - self.ln_q
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Result<(Vec3, f64)> {
        Ok((gaussian_vec(rng, self.u, self.kt), self.law.sample_gibbs(self.ki, rng)?))
    }
}

/// Importance-sampling density for partner states.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    components: Vec<(f64, GaussGibbs)>,
}

impl Proposal {
    pub fn single(c: GaussGibbs) -> Self {
        Proposal {
            components: vec![(1.0, c)],
        }
    }

    /// Mixture with weights proportional to the given masses.
    pub fn mixture(components: &[(f64, GaussGibbs)]) -> Self {
        let total: f64 = components.iter().map(|(w, _)| *w).sum();
        Proposal {
            components: components.iter().map(|(w, c)| (w / total, c.clone())).collect(),
        }
    }

    pub fn components(&self) -> &[(f64, GaussGibbs)] {
        &self.components
    }

    pub fn ln_density(&self, v: Vec3, i: f64) -> f64 {
        if self.components.len() == 1 {
            return self.components[0].1.ln_density(v, i);
        }
        log_sum_exp(self.components.iter().map(|(w, c)| w.ln() + c.ln_density(v, i)))
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Result<(Vec3, f64)> {
        let mut u: f64 = rng.random();
        for (w, c) in &self.components {
            if u < *w {
                return c.sample(rng);
            }
            u -= w;
        }
        self.components[self.components.len() - 1].1.sample(rng)
    }

    /// Gaussian–Gibbs proposal whose mass-weighted mean velocity, kinetic
    /// temperature and mean internal energy match those of `f`, estimated
    /// by a pilot run against a wide reference density.
    pub fn pilot(f: &DensityFunction, law: &EnergyLaw, reference: &GaussGibbs, mc: &MonteCarloConfig) -> Result<Self> {
        let failures = AtomicU64::new(0);
        let moments = estimate_vec::<6, _>(mc, |d| {
            let Ok((v, i)) = reference.sample(d.rng) else {
                failures.fetch_add(1, Ordering::Relaxed);
                return [0.0; 6];
            };
            let w = f.eval(v, i) * (-reference.ln_density(v, i)).exp();
            [w, w * v.x, w * v.y, w * v.z, w * v.norm_squared(), w * i]
        })?;
        if failures.into_inner() > 0 {
            return Err(Error::Sampling { attempts: mc.samples });
        }
        let mass = moments[0].mean;
        if !(mass > 0.0) {
            return Err(argument("pilot run found no mass"));
        }
        let u = Vec3::new(moments[1].mean, moments[2].mean, moments[3].mean) / mass;
        let kt = ((moments[4].mean / mass - u.norm_squared()) / 3.0).max(1e-6);
        let mean_i = (moments[5].mean / mass).max(1e-9);
        let ki = gibbs_scale_for_mean(law, mean_i)?;
        Ok(Proposal::single(GaussGibbs::new(u, kt, ki, law.clone())?))
    }
}

/// Energy scale whose Gibbs distribution under μ has the given mean.
pub fn gibbs_scale_for_mean(law: &EnergyLaw, mean: f64) -> Result<f64> {
    if let LawKind::Power { alpha, .. } = law.kind() {
        return Ok(mean / (alpha + 1.0));
    }
    let gibbs_mean = |ki: f64| -> Result<f64> {
        let env = Envelope {
            amplitude: 1.0,
            rate: 0.5 / ki,
        };
        let num = law.integrate(|i| i * (-i / ki).exp(), Domain::Tail { from: 0.0, envelope: env }, 1e-10)?;
        Ok(num / law.partition(ki, 1.0)?)
    };
    let (mut lo, mut hi) = (1e-4 * mean, 1e2 * mean);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if gibbs_mean(mid)? < mean {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-10 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Monte Carlo value with the magnitude of the terms that cancel in it, for
/// judging estimates whose exact value is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEstimate {
    pub estimate: f64,
    pub std_err: f64,
    /// Mean absolute size of the loss term.
    pub scale: f64,
    pub samples: u64,
}

impl CollisionEstimate {
    fn from(value: Estimate, scale: Estimate) -> Self {
        CollisionEstimate {
            estimate: value.mean,
            std_err: value.std_err,
            scale: scale.mean.abs(),
            samples: value.samples,
        }
    }

    pub fn as_estimate(&self) -> Estimate {
        Estimate {
            mean: self.estimate,
            std_err: self.std_err,
            samples: self.samples,
        }
    }

    /// `|estimate| ≤ k·std_err + 1e-12·scale`: zero up to noise and rounding.
    pub fn is_zero_within(&self, k: f64) -> bool {
        self.estimate.abs() <= k * self.std_err + 1e-12 * self.scale
    }
}

/// A collision between sampled states with its measure weight
/// `μ[0, I+I*]·4π / p(·)` already folded in.
struct SampledCollision {
    v: Vec3,
    i: f64,
    v_star: Vec3,
    i_star: f64,
    v_prime: Vec3,
    v_prime_star: Vec3,
    i_prime: f64,
    i_prime_star: f64,
    b: f64,
    weight: f64,
}

#[allow(clippy::too_many_arguments)]
fn draw_collision(
    d: &mut Draw<'_>,
    v: Vec3,
    i: f64,
    v_star: Vec3,
    i_star: f64,
    model: &CrossSectionModel,
    law: &EnergyLaw,
    partner_weight: f64,
) -> Option<SampledCollision> {
    let sigma = uniform_sphere(d.rng);
    let s = i + i_star;
    let total = law.mass_unchecked(s);
    if !(total > 0.0) {
        return None;
    }
    let u = d.stratified_uniform();
    let i_prime = law.sample_uniform_in(s, u).min(s);
    let i_prime_star = (s - i_prime).max(0.0);
    let (v_prime, v_prime_star) = post_velocities_unchecked(v, v_star, sigma);
    let b = model.eval_b_unchecked(v, v_star, i, i_star, i_prime, sigma);
    Some(SampledCollision {
        v,
        i,
        v_star,
        i_star,
        v_prime,
        v_prime_star,
        i_prime,
        i_prime_star,
        b,
        weight: partner_weight * total * 4.0 * PI,
    })
}

fn proposal_for(f: &DensityFunction, law: &EnergyLaw, mc: &MonteCarloConfig) -> Result<Proposal> {
    match f.proposal() {
        Some(p) => Ok(p.clone()),
        None => {
            let r = f.support_hint.velocity_radius.min(8.0);
            let e = f.support_hint.energy_cutoff.min(20.0);
            let reference = GaussGibbs::new(Vec3::zeros(), (r / 3.0).powi(2), e / 6.0, law.clone())?;
            Proposal::pilot(f, law, &reference, &mc.derived(0x9170).with_samples(mc.samples.clamp(1, 50_000)))
        }
    }
}

/// `Q(f, f)(v, I)`.
pub fn q_eval(
    f: &DensityFunction,
    v: Vec3,
    i: f64,
    model: &CrossSectionModel,
    law: &EnergyLaw,
    mc: &MonteCarloConfig,
) -> Result<CollisionEstimate> {
    if !(i >= 0.0) {
        return Err(argument("internal energy must be nonnegative"));
    }
    let proposal = proposal_for(f, law, mc)?;
    let failures = AtomicU64::new(0);
    let fv = f.eval(v, i);
    let ln_fv = f.ln(v, i);
    let [value, scale] = estimate_vec::<2, _>(mc, |d| {
        let Ok((v_star, i_star)) = proposal.sample(d.rng) else {
            failures.fetch_add(1, Ordering::Relaxed);
            return [0.0, 0.0];
        };
        let pw = (-proposal.ln_density(v_star, i_star)).exp();
        let Some(c) = draw_collision(d, v, i, v_star, i_star, model, law, pw) else {
            return [0.0, 0.0];
        };
        if c.b == 0.0 {
            return [0.0, 0.0];
        }
        let loss = fv * f.eval(c.v_star, c.i_star);
        let diff = if f.log_safe && loss > 0.0 {
            let delta = f.ln(c.v_prime, c.i_prime) + f.ln(c.v_prime_star, c.i_prime_star) - ln_fv - f.ln(c.v_star, c.i_star);
            loss * delta.exp_m1()
        } else {
            f.eval(c.v_prime, c.i_prime) * f.eval(c.v_prime_star, c.i_prime_star) - loss
        };
        [diff * c.b * c.weight, loss * c.b * c.weight]
    })?;
    if failures.into_inner() > 0 {
        return Err(Error::Sampling { attempts: mc.samples });
    }
    Ok(CollisionEstimate::from(value, scale))
}

/// Test function `φ(v, I)` for the weak form.
#[derive(Clone)]
pub enum TestFunction {
    Mass,
    Momentum(usize),
    KineticEnergy,
    InternalEnergy,
    Custom(Arc<dyn Fn(Vec3, f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TestFunction::Mass => write!(f, "Mass"),
            TestFunction::Momentum(k) => write!(f, "Momentum({k})"),
            TestFunction::KineticEnergy => write!(f, "KineticEnergy"),
            TestFunction::InternalEnergy => write!(f, "InternalEnergy"),
            TestFunction::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl TestFunction {
    /// The six collision invariants.
    pub fn invariants() -> Vec<TestFunction> {
        vec![
            TestFunction::Mass,
            TestFunction::Momentum(0),
            TestFunction::Momentum(1),
            TestFunction::Momentum(2),
            TestFunction::KineticEnergy,
            TestFunction::InternalEnergy,
        ]
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::Mass => "1".into(),
            TestFunction::Momentum(k) => format!("v{}", k + 1),
            TestFunction::KineticEnergy => "|v|^2".into(),
            TestFunction::InternalEnergy => "I".into(),
            TestFunction::Custom(_) => "custom".into(),
        }
    }

    #[inline]
    pub fn eval(&self, v: Vec3, i: f64) -> f64 {
        match self {
            TestFunction::Mass => 1.0,
            TestFunction::Momentum(k) => v[*k],
            TestFunction::KineticEnergy => v.norm_squared(),
            TestFunction::InternalEnergy => i,
            TestFunction::Custom(phi) => phi(v, i),
        }
    }
}

/// `∬ Q(f,f) φ dv dμ(I)` in the plain form `(f′f′* − ff*)φ` and in the
/// symmetrized form `½ ff* (φ′ + φ′* − φ − φ*)`, from the same samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakMoment {
    pub plain: CollisionEstimate,
    pub symmetrized: CollisionEstimate,
}

pub fn weak_moment(
    f: &DensityFunction,
    phi: &TestFunction,
    model: &CrossSectionModel,
    law: &EnergyLaw,
    mc: &MonteCarloConfig,
) -> Result<WeakMoment> {
    let proposal = proposal_for(f, law, mc)?;
    let failures = AtomicU64::new(0);
    let [plain, sym, scale] = estimate_vec::<3, _>(mc, |d| {
        let (Ok((v, i)), Ok((v_star, i_star))) = (proposal.sample(d.rng), proposal.sample(d.rng)) else {
            failures.fetch_add(1, Ordering::Relaxed);
            return [0.0; 3];
        };
        let pw = (-proposal.ln_density(v, i) - proposal.ln_density(v_star, i_star)).exp();
        let Some(c) = draw_collision(d, v, i, v_star, i_star, model, law, pw) else {
            return [0.0; 3];
        };
        if c.b == 0.0 {
            return [0.0; 3];
        }
        let loss = f.eval(c.v, c.i) * f.eval(c.v_star, c.i_star);
        let gain = f.eval(c.v_prime, c.i_prime) * f.eval(c.v_prime_star, c.i_prime_star);
        let phi0 = phi.eval(c.v, c.i);
        let change = phi.eval(c.v_prime, c.i_prime) + phi.eval(c.v_prime_star, c.i_prime_star) - phi0 - phi.eval(c.v_star, c.i_star);
        let w = c.b * c.weight;
        [(gain - loss) * phi0 * w, 0.5 * loss * change * w, loss * phi0.abs() * w]
    })?;
    if failures.into_inner() > 0 {
        return Err(Error::Sampling { attempts: mc.samples });
    }
    Ok(WeakMoment {
        plain: CollisionEstimate::from(plain, scale),
        symmetrized: CollisionEstimate::from(sym, scale),
    })
}

/// `∬ Q(f,f) ln f dv dμ(I)` estimated from the doubly symmetrized form
/// `−¼ (f′f′* − ff*) ln(f′f′*/(ff*))`, which is nonpositive sample by
/// sample.  `plain` is the same quantity from `(f′f′* − ff*) ln f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyDissipation {
    pub symmetrized: CollisionEstimate,
    pub plain: CollisionEstimate,
}

pub fn entropy_dissipation(
    f: &DensityFunction,
    model: &CrossSectionModel,
    law: &EnergyLaw,
    mc: &MonteCarloConfig,
) -> Result<EntropyDissipation> {
    if !f.log_safe {
        return Err(argument("entropy dissipation needs a strictly positive density with a logarithm"));
    }
    let proposal = proposal_for(f, law, mc)?;
    let failures = AtomicU64::new(0);
    let [sym, plain, scale] = estimate_vec::<3, _>(mc, |d| {
        let (Ok((v, i)), Ok((v_star, i_star))) = (proposal.sample(d.rng), proposal.sample(d.rng)) else {
            failures.fetch_add(1, Ordering::Relaxed);
            return [0.0; 3];
        };
        let ln_p = proposal.ln_density(v, i) + proposal.ln_density(v_star, i_star);
        let Some(c) = draw_collision(d, v, i, v_star, i_star, model, law, 1.0) else {
            return [0.0; 3];
        };
        if c.b == 0.0 {
            return [0.0; 3];
        }
        let (l, ls) = (f.ln(c.v, c.i), f.ln(c.v_star, c.i_star));
        let (lp, lps) = (f.ln(c.v_prime, c.i_prime), f.ln(c.v_prime_star, c.i_prime_star));
        if !(l.is_finite() && ls.is_finite() && lp.is_finite() && lps.is_finite()) {
            return [0.0; 3];
        }
        let loss = (l + ls - ln_p).exp();
        let delta = lp + lps - l - ls;
        let w = c.b * c.weight;
        [
            -0.25 * loss * delta.exp_m1() * delta * w,
            loss * delta.exp_m1() * l * w,
            loss * l.abs() * w,
        ]
    })?;
    if failures.into_inner() > 0 {
        return Err(Error::Sampling { attempts: mc.samples });
    }
    Ok(EntropyDissipation {
        symmetrized: CollisionEstimate::from(sym, scale),
        plain: CollisionEstimate::from(plain, scale),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross_section::Preset;

    fn setup() -> (Maxwellian, CrossSectionModel, EnergyLaw) {
        let law = EnergyLaw::lebesgue();
        let m = Maxwellian::centered(1.0, 1.0, 1.0, law.clone()).unwrap();
        let model = CrossSectionModel::preset(Preset::HardSphereLike, 0.0, law.clone()).unwrap();
        (m, model, law)
    }

    #[test]
    fn zero_density_gives_exact_zero() {
        let (_, model, law) = setup();
        let f = DensityFunction::zero().with_proposal(Proposal::single(GaussGibbs::new(Vec3::zeros(), 1.0, 1.0, law.clone()).unwrap()));
        let q = q_eval(&f, Vec3::x(), 0.5, &model, &law, &MonteCarloConfig::new(1000, 1)).unwrap();
        assert_eq!(q.estimate, 0.0);
        assert_eq!(q.std_err, 0.0);
    }

    #[test]
    fn maxwellian_is_a_fixed_point() {
        let (m, model, law) = setup();
        let f = DensityFunction::maxwellian(&m);
        let q = q_eval(&f, Vec3::new(0.5, -0.2, 1.0), 0.7, &model, &law, &MonteCarloConfig::new(20_000, 3)).unwrap();
        assert!(q.is_zero_within(3.0), "{q:?}");
    }

    #[test]
    fn non_log_safe_density_is_rejected_by_entropy() {
        let (_, model, law) = setup();
        let f = DensityFunction::new(|_, _| 1.0, SupportHint::UNBOUNDED);
        assert!(entropy_dissipation(&f, &model, &law, &MonteCarloConfig::new(10, 1)).is_err());
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let v = log_sum_exp([-1000.0, -1000.0].into_iter());
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
