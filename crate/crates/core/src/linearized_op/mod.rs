//! The linearized operator `L = K − ν̄·Id` around a centred two-temperature
//! Maxwellian, the split `K = K₁ + K₂ + K₃`, and the kernel forms of its parts.
//!
//! Conventions: `g` is the perturbation in `f = M + M^{1/2} g`, the molecular
//! mass is one and `J` denotes the post-collisional internal energy `I′`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cross_section::CrossSectionModel;
use crate::energy_law::EnergyLaw;
use crate::equilibrium::Maxwellian;
use crate::error::{argument, Error, Result};
use crate::quad::{adaptive, graded_breaks, merge_breaks, GaussRule, NodeSet, Tolerance};
use crate::Vec3;

mod bounds;
mod energy;
mod k2;
mod monatomic;
mod velocity;

pub use bounds::*;
pub use energy::{EnergyKernel, EnergyKernelKind};
pub use k2::*;
pub use monatomic::*;
pub use velocity::{EtaNode, EtaRule, VelocityKernel};

/// Quadrature resolution shared by the kernel evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSettings {
    pub rho_order: usize,
    pub rho_panel: f64,
    pub t_order: usize,
    pub phi_points: usize,
    pub r_order: usize,
    pub energy_order: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        let eta = EtaRule::default();
        QuadratureSettings {
            rho_order: eta.rho_order,
            rho_panel: eta.rho_panel,
            t_order: eta.t_order,
            phi_points: eta.phi_points,
            r_order: eta.r_order,
            energy_order: 10,
        }
    }
}

impl QuadratureSettings {
    pub fn eta_rule(&self) -> EtaRule {
        EtaRule {
            rho_order: self.rho_order,
            rho_panel: self.rho_panel,
            t_order: self.t_order,
            t_density: EtaRule::default().t_density,
            phi_points: self.phi_points,
            r_order: self.r_order,
        }
    }

    /// Roughly three quarters of the nodes in every direction; the change
    /// against the base rule serves as a quadrature error estimate.
    pub fn coarser(&self) -> QuadratureSettings {
        let eta = self.eta_rule().coarser();
        QuadratureSettings {
            rho_order: eta.rho_order,
            rho_panel: eta.rho_panel,
            t_order: eta.t_order,
            phi_points: eta.phi_points,
            r_order: eta.r_order,
            energy_order: (self.energy_order * 3 / 4).max(4),
        }
    }

    fn validate(&self) -> Result<()> {
        let orders = [self.rho_order, self.t_order, self.r_order, self.energy_order];
        if orders.iter().any(|o| !(2..=64).contains(o)) {
            return Err(argument("quadrature orders must lie in [2, 64]"));
        }
        if self.phi_points < 4 {
            return Err(argument("at least 4 azimuthal points are needed"));
        }
        if !(self.rho_panel > 0.0 && self.rho_panel <= 8.0) {
            return Err(argument("rho panel width must lie in (0, 8]"));
        }
        Ok(())
    }
}

/// Everything the linearized operator depends on.
#[derive(Debug, Clone)]
pub struct LinearizedContext {
    pub maxwellian: Maxwellian,
    pub model: CrossSectionModel,
    pub law: EnergyLaw,
    /// Envelope parameter `a ∈ (0, 1 − γ/2)`.
    pub a_exponent: f64,
    /// `α ∈ (0, (1 − a)/2)`, used when `γ = 0`.
    pub alpha_exponent: f64,
    pub quadrature: QuadratureSettings,
}

impl LinearizedContext {
    pub fn new(maxwellian: Maxwellian, model: CrossSectionModel) -> Result<Self> {
        Self::with_exponents(maxwellian, model, 0.25, 0.2)
    }

    pub fn with_exponents(maxwellian: Maxwellian, model: CrossSectionModel, a: f64, alpha: f64) -> Result<Self> {
        if maxwellian.u.norm() != 0.0 {
            return Err(argument("the linearization is taken around a centred Maxwellian"));
        }
        if maxwellian.law != model.law {
            return Err(argument("Maxwellian and cross section use different energy laws"));
        }
        let gamma = model.gamma;
        if !(a > 0.0 && a < 1.0 - 0.5 * gamma) {
            return Err(argument(format!(
                "a must lie in (0, 1 - gamma/2) = (0, {}), got {a}",
                1.0 - 0.5 * gamma
            )));
        }
        if gamma == 0.0 && !(alpha > 0.0 && alpha < 0.5 * (1.0 - a)) {
            return Err(argument(format!(
                "alpha must lie in (0, (1-a)/2) = (0, {}), got {alpha}",
                0.5 * (1.0 - a)
            )));
        }
        let law = model.law.clone();
        Ok(LinearizedContext {
            maxwellian,
            model,
            law,
            a_exponent: a,
            alpha_exponent: alpha,
            quadrature: QuadratureSettings::default(),
        })
    }

    pub fn with_quadrature(mut self, quadrature: QuadratureSettings) -> Result<Self> {
        quadrature.validate()?;
        self.quadrature = quadrature;
        Ok(self)
    }

    pub fn kt(&self) -> f64 {
        self.maxwellian.kt()
    }

    pub fn ki(&self) -> f64 {
        self.maxwellian.ki()
    }

    /// `c` in `M = c e^{−|v|²/2k_BT_k − I/k_BT_i}`.
    pub fn prefactor(&self) -> f64 {
        self.maxwellian.prefactor()
    }

    pub fn velocity_kernel(&self) -> VelocityKernel {
        VelocityKernel::new(self.model.kinetic, self.kt(), self.prefactor()).with_rule(self.quadrature.eta_rule())
    }

    pub fn energy_kernel(&self) -> EnergyKernel<'_> {
        EnergyKernel::new(&self.model, self.ki(), self.quadrature.energy_order)
    }

    /// Decay exponent of the tail bound: `1 − γ/2 − a` for `γ > 0` and
    /// `1 − α − a` for `γ = 0`.
    pub fn tail_exponent(&self) -> f64 {
        if self.model.gamma > 0.0 {
            1.0 - 0.5 * self.model.gamma - self.a_exponent
        } else {
            1.0 - self.alpha_exponent - self.a_exponent
        }
    }

    fn check_state(&self, v: Vec3, i: f64) -> Result<()> {
        if !(i >= 0.0 && i.is_finite()) || !v.iter().all(|c| c.is_finite()) {
            return Err(argument(format!("invalid state (|v| = {}, I = {i})", v.norm())));
        }
        Ok(())
    }
}

pub type VelocityFn = Arc<dyn Fn(Vec3) -> f64 + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type PhaseFn = Arc<dyn Fn(Vec3, f64) -> f64 + Send + Sync>;

/// A real (possibly signed) function of `(v, I)` with the structure the
/// kernel quadratures can exploit.
#[derive(Clone)]
pub enum PhaseFunction {
    General(PhaseFn),
    /// `g(v, I) = velocity(v)·energy(I)`.
    Product {
        velocity: VelocityFn,
        energy: ScalarFn,
    },
    /// `g(v, I) = velocity(|v|)·energy(I)`, vanishing for `|v| > velocity_support`
    /// and `I > energy_support`.
    Radial {
        velocity: ScalarFn,
        energy: ScalarFn,
        velocity_support: Option<f64>,
        energy_support: Option<f64>,
    },
}

impl std::fmt::Debug for PhaseFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PhaseFunction::General(_) => write!(f, "PhaseFunction::General"),
            PhaseFunction::Product { .. } => write!(f, "PhaseFunction::Product"),
            PhaseFunction::Radial {
                velocity_support,
                energy_support,
                ..
            } => write!(f, "PhaseFunction::Radial({velocity_support:?}, {energy_support:?})"),
        }
    }
}

impl PhaseFunction {
    pub fn zero() -> Self {
        PhaseFunction::Radial {
            velocity: Arc::new(|_| 0.0),
            energy: Arc::new(|_| 0.0),
            velocity_support: Some(0.0),
            energy_support: Some(0.0),
        }
    }

    pub fn general(f: impl Fn(Vec3, f64) -> f64 + Send + Sync + 'static) -> Self {
        PhaseFunction::General(Arc::new(f))
    }

    /// `exp(−|v−center|²/2w² − I/θ)`.
    pub fn gaussian(center: Vec3, width: f64, energy_scale: f64) -> Self {
        let w2 = 2.0 * width * width;
        PhaseFunction::Product {
            velocity: Arc::new(move |v: Vec3| (-(v - center).norm_squared() / w2).exp()),
            energy: Arc::new(move |i: f64| (-i / energy_scale).exp()),
        }
    }

    /// Centred form of [`gaussian`](Self::gaussian).
    pub fn radial_gaussian(width: f64, energy_scale: f64) -> Self {
        let w2 = 2.0 * width * width;
        PhaseFunction::Radial {
            velocity: Arc::new(move |s: f64| (-s * s / w2).exp()),
            energy: Arc::new(move |i: f64| (-i / energy_scale).exp()),
            velocity_support: None,
            energy_support: None,
        }
    }

    /// Smooth bump `(1 − |v|²/R²)³(1 − I/E)³` supported in `|v| < R`, `I < E`.
    pub fn bump(radius: f64, energy_cutoff: f64) -> Self {
        PhaseFunction::Radial {
            velocity: Arc::new(move |s: f64| {
                let x = 1.0 - (s / radius).powi(2);
                if x > 0.0 {
                    x.powi(3)
                } else {
                    0.0
                }
            }),
            energy: Arc::new(move |i: f64| {
                let x = 1.0 - i / energy_cutoff;
                if x > 0.0 {
                    x.powi(3)
                } else {
                    0.0
                }
            }),
            velocity_support: Some(radius),
            energy_support: Some(energy_cutoff),
        }
    }

    /// `M^{1/2}`.
    pub fn sqrt_maxwellian(m: &Maxwellian) -> Self {
        let sc = m.prefactor().sqrt();
        let (kt, ki) = (m.kt(), m.ki());
        PhaseFunction::Radial {
            velocity: Arc::new(move |s: f64| sc * (-s * s / (4.0 * kt)).exp()),
            energy: Arc::new(move |i: f64| (-i / (2.0 * ki)).exp()),
            velocity_support: None,
            energy_support: None,
        }
    }

    /// `g` scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self.clone() {
            PhaseFunction::General(f) => PhaseFunction::General(Arc::new(move |v, i| factor * f(v, i))),
            PhaseFunction::Product { velocity, energy } => PhaseFunction::Product {
                velocity: Arc::new(move |v| factor * velocity(v)),
                energy,
            },
            PhaseFunction::Radial {
                velocity,
                energy,
                velocity_support,
                energy_support,
            } => PhaseFunction::Radial {
                velocity: Arc::new(move |s| factor * velocity(s)),
                energy,
                velocity_support,
                energy_support,
            },
        }
    }

    pub fn eval(&self, v: Vec3, i: f64) -> f64 {
        match self {
            PhaseFunction::General(f) => f(v, i),
            PhaseFunction::Product { velocity, energy } => velocity(v) * energy(i),
            PhaseFunction::Radial {
                velocity,
                energy,
                velocity_support,
                energy_support,
            } => {
                let s = v.norm();
                if velocity_support.is_some_and(|r| s > r) || energy_support.is_some_and(|e| i > e) {
                    0.0
                } else {
                    velocity(s) * energy(i)
                }
            }
        }
    }

    pub fn is_separable(&self) -> bool {
        !matches!(self, PhaseFunction::General(_))
    }

    /// Velocity factor of a separable function; `None` for `General`.
    pub fn velocity_factor(&self, v: Vec3) -> Option<f64> {
        match self {
            PhaseFunction::General(_) => None,
            PhaseFunction::Product { velocity, .. } => Some(velocity(v)),
            PhaseFunction::Radial {
                velocity,
                velocity_support,
                ..
            } => {
                let s = v.norm();
                Some(if velocity_support.is_some_and(|r| s > r) {
                    0.0
                } else {
                    velocity(s)
                })
            }
        }
    }

    /// Energy factor of a separable function; `None` for `General`.
    pub fn energy_factor(&self, i: f64) -> Option<f64> {
        match self {
            PhaseFunction::General(_) => None,
            PhaseFunction::Product { energy, .. } => Some(energy(i)),
            PhaseFunction::Radial {
                energy, energy_support, ..
            } => Some(if energy_support.is_some_and(|e| i > e) { 0.0 } else { energy(i) }),
        }
    }

    /// `Σ_a Σ_b w_a w_b g(v_a, I_b)` over a tensor grid, in `O(n_v + n_I)`
    /// operations when `g` separates.
    pub(crate) fn tensor_sum(&self, velocity: &[(Vec3, f64)], energy: &[(f64, f64)]) -> f64 {
        if self.is_separable() {
            let e: f64 = energy.iter().map(|&(x, w)| w * self.energy_factor(x).unwrap_or(0.0)).sum();
            if e == 0.0 {
                return 0.0;
            }
            let v: f64 = velocity.iter().map(|&(p, w)| w * self.velocity_factor(p).unwrap_or(0.0)).sum();
            v * e
        } else {
            energy
                .iter()
                .map(|&(x, we)| we * velocity.iter().map(|&(p, wv)| wv * self.eval(p, x)).sum::<f64>())
                .sum()
        }
    }
}

/// `∫ ρ²A_k(ρ)·∫_{S²} e^{−|v+ρω|²/2k_BT_k} dω dρ` at `|v| = s`.
fn nu_velocity(ctx: &LinearizedContext, s: f64) -> Result<f64> {
    let kt = ctx.kt();
    let sd = kt.sqrt();
    let kinetic = ctx.model.kinetic;
    let angular = move |rho: f64| -> f64 {
        let x = s * rho;
        if x == 0.0 {
            4.0 * PI * (-(s * s + rho * rho) / (2.0 * kt)).exp()
        } else {
            2.0 * PI * kt / x * (-(s - rho).powi(2) / (2.0 * kt)).exp() * (-(-2.0 * x / kt).exp_m1())
        }
    };
    let hi = s + 12.0 * sd;
    let mut points = vec![0.0, (s - 12.0 * sd).max(0.0), s, hi, 1e-3 * sd, 0.1 * sd];
    let mut x = 0.0;
    while x < hi {
        points.push(x);
        x += 2.0 * sd;
    }
    let breaks = merge_breaks(points, 0.0, hi);
    adaptive(&breaks, Tolerance::new(1e-300, 1e-13), |rho| {
        rho * rho * kinetic.sphere_average(rho) * angular(rho)
    })
    .into_result()
}

/// Breakpoints for a `μ` integral on `[0, ∞)` with integrand decaying like
/// `e^{−x/scale}` and a feature at `center`.
pub(crate) fn energy_breaks(law: &EnergyLaw, scale: f64, center: f64, cut: f64) -> Vec<f64> {
    let hi = center + cut * scale;
    let mut points: Vec<f64> = (0..=14).map(|k| scale * 0.1f64.powi(k)).collect();
    points.push(center);
    points.extend(graded_breaks(0.0, hi, 0.1 * scale, 2.0, scale));
    if center > 0.0 {
        points.extend((1..=8).map(|k| center * (1.0 - 0.5f64.powi(k))));
    }
    points.extend(law.breakpoints());
    merge_breaks(points, 0.0, hi)
}

/// `∫ e^{−I*/k_BT_i} E(I, I*) dμ(I*)`.
fn nu_energy(ctx: &LinearizedContext, i: f64) -> Result<f64> {
    let ki = ctx.ki();
    let breaks = energy_breaks(&ctx.law, ki, i, 60.0);
    let model = &ctx.model;
    adaptive(&breaks, Tolerance::new(1e-300, 1e-13).with_max_intervals(4000), |x| {
        (-x / ki).exp() * model.energy_average(i, x) * ctx.law.rho(x)
    })
    .into_result()
}

/// Collision frequency `ν̄(v, I) = ∬ M(v*, I*) B̄(v, v*, I, I*) dv* dμ(I*)`.
pub fn nu_bar(ctx: &LinearizedContext, v: Vec3, i: f64) -> Result<f64> {
    ctx.check_state(v, i)?;
    Ok(ctx.prefactor() * nu_velocity(ctx, v.norm())? * nu_energy(ctx, i)?)
}

/// `κ₁(v, I, v*, I*) = −M^{1/2}(v, I) M^{1/2}(v*, I*) B̄(v, v*, I, I*)`.
pub fn kappa1_eval(ctx: &LinearizedContext, v: Vec3, i: f64, v_star: Vec3, i_star: f64) -> f64 {
    kappa1_velocity(ctx, v, v_star) * kappa1_energy(ctx, i, ctx.model.energy_average(i, i_star), i_star)
}

/// Velocity factor `−n^{1/2}(M_v(v)M_v(v*))^{1/2} A_k(|v − v*|)` of `κ₁`.
fn kappa1_velocity(ctx: &LinearizedContext, v: Vec3, v_star: Vec3) -> f64 {
    let m = &ctx.maxwellian;
    -(m.n * m.velocity_part(v) * m.velocity_part(v_star)).sqrt() * ctx.model.kinetic.sphere_average((v - v_star).norm())
}

/// Energy factor of `κ₁` given `E(I, I*)`.
fn kappa1_energy(ctx: &LinearizedContext, i: f64, average: f64, i_star: f64) -> f64 {
    let m = &ctx.maxwellian;
    (m.internal_part(i) * m.internal_part(i_star)).sqrt() * average
}

/// `I*` nodes for integrals against `M^{1/2}(·, I*)`, weights carrying `ρ(I*)`.
fn half_gibbs_nodes(ctx: &LinearizedContext, order: usize, i: f64) -> NodeSet {
    let breaks = energy_breaks(&ctx.law, 2.0 * ctx.ki(), i, 46.0);
    let mut set = NodeSet::gauss_panels(&breaks, order);
    for (x, w) in set.nodes.iter().zip(set.weights.iter_mut()) {
        *w *= ctx.law.rho(*x);
    }
    set
}

/// Azimuth ring `(cos φ, sin φ)` with equal weights.
pub(crate) fn azimuth_ring(points: usize) -> Vec<(f64, f64)> {
    (0..points)
        .map(|k| {
            let phi = std::f64::consts::TAU * k as f64 / points as f64;
            (phi.cos(), phi.sin())
        })
        .collect()
}

/// `K₁g(v, I) = −∬ g(v*, I*) M^{1/2}M*^{1/2} B̄ dv* dμ(I*)`, in spherical
/// coordinates `v* = v + ρω` centred at `v`.
pub fn k1_direct(ctx: &LinearizedContext, g: &PhaseFunction, v: Vec3, i: f64) -> Result<f64> {
    ctx.check_state(v, i)?;
    let kt = ctx.kt();
    let sd = kt.sqrt();
    let s = v.norm();
    let m = &ctx.maxwellian;
    let q = &ctx.quadrature;
    let e_nodes = half_gibbs_nodes(ctx, q.energy_order, i);
    let energy: Vec<(f64, f64)> = e_nodes
        .iter()
        .map(|(x, w)| (x, w * (-x / (2.0 * ctx.ki())).exp() * ctx.model.energy_average(i, x)))
        .collect();
    let cut = 4.0 * kt * 46.0;
    let rho_hi = s + cut.sqrt();
    let rho_set = NodeSet::gauss_panels(&graded_breaks(0.0, rho_hi, 0.5 * sd, 1.5, 1.5 * sd), q.rho_order);
    let axis = if s > 0.0 { v / s } else { Vec3::z() };
    let (e1, e2) = crate::kinematics::plane_frame(&axis);
    let ring = azimuth_ring(q.phi_points);
    let t_rule = GaussRule::of_order(q.t_order);
    let sc = m.prefactor().sqrt();
    let mut velocity: Vec<(Vec3, f64)> = Vec::new();
    for (rho, w_rho) in rho_set.iter() {
        let a = ctx.model.kinetic.sphere_average(rho);
        let t_hi = if s * rho > 0.0 {
            ((cut - s * s - rho * rho) / (2.0 * s * rho)).min(1.0)
        } else {
            1.0
        };
        if t_hi <= -1.0 {
            continue;
        }
        let spread = s * rho * (t_hi + 1.0) / (2.0 * kt);
        let panels = (spread / 2.0).ceil().max(2.0) as usize;
        let h = (t_hi + 1.0) / panels as f64;
        for p in 0..panels {
            let mid = -1.0 + (p as f64 + 0.5) * h;
            for (x, w) in t_rule.nodes.iter().zip(&t_rule.weights) {
                let t = mid + 0.5 * h * x;
                let sin = ((1.0 - t) * (1.0 + t)).max(0.0).sqrt();
                let base = w_rho * rho * rho * a * 0.5 * h * w * std::f64::consts::TAU / ring.len() as f64;
                for &(c, sn) in &ring {
                    let vs = v + rho * (t * axis + sin * (c * e1 + sn * e2));
                    let gauss = sc * (-vs.norm_squared() / (4.0 * kt)).exp();
                    velocity.push((vs, base * gauss));
                }
            }
        }
    }
    Ok(-m.sqrt_eval(v, i) * g.tensor_sum(&velocity, &energy))
}

/// `∬ g κ₁ dv* dμ(I*)` with the factors of [`kappa1_eval`], in spherical
/// coordinates about the origin.
pub fn k1_kernel(ctx: &LinearizedContext, g: &PhaseFunction, v: Vec3, i: f64) -> Result<f64> {
    ctx.check_state(v, i)?;
    let kt = ctx.kt();
    let sd = kt.sqrt();
    let q = &ctx.quadrature;
    let order = q.energy_order + 2;
    let e_nodes = half_gibbs_nodes(ctx, order, i);
    let r_hi = (4.0 * kt * 46.0).sqrt();
    let s = v.norm();
    let mut r_points = vec![0.0, r_hi, s];
    r_points.extend(graded_breaks(0.0, r_hi, 0.5 * sd, 1.5, sd));
    // `|v − v*|` has a conical point at `v* = v`: grade toward `r = |v|`, `t = 1`
    r_points.extend((1..=12).flat_map(|k| {
        let h = 0.5 * sd * 0.25f64.powi(k);
        [s - h, s + h]
    }));
    let r_set = NodeSet::gauss_panels(&merge_breaks(r_points, 0.0, r_hi), q.rho_order + 2);
    let axis = if v.norm() > 0.0 { v.normalize() } else { Vec3::z() };
    let (e1, e2) = crate::kinematics::plane_frame(&axis);
    let ring = azimuth_ring(q.phi_points + 8);
    let mut t_points: Vec<f64> = (0..=8).map(|k| -1.0 + 0.25 * k as f64).collect();
    t_points.extend((1..=12).map(|k| 1.0 - 0.25 * 0.25f64.powi(k)));
    let t_set = NodeSet::gauss_panels(&merge_breaks(t_points, -1.0, 1.0), q.t_order);
    let mut velocity = Vec::with_capacity(r_set.len() * t_set.len() * ring.len());
    for (r, wr) in r_set.iter() {
        for (t, wt) in t_set.iter() {
            let sin = ((1.0 - t) * (1.0 + t)).max(0.0).sqrt();
            for &(c, sn) in &ring {
                let vs = r * (t * axis + sin * (c * e1 + sn * e2));
                let w = wr * wt * r * r * std::f64::consts::TAU / ring.len() as f64;
                velocity.push((vs, w * kappa1_velocity(ctx, v, vs)));
            }
        }
    }
    let energy: Vec<(f64, f64)> = e_nodes
        .iter()
        .map(|(x, w)| (x, w * kappa1_energy(ctx, i, ctx.model.energy_average(i, x), x)))
        .collect();
    Ok(g.tensor_sum(&velocity, &energy))
}

/// One refinement level of [`hs_norm_kappa1`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel {
    pub level: u32,
    pub nodes: usize,
    pub estimate: f64,
    /// `|est_h − est_{2h}| / est_h`; infinite at the coarsest level.
    pub increment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub levels: Vec<RefinementLevel>,
}

impl ConvergenceRecord {
    pub fn final_increment(&self) -> f64 {
        self.levels.last().map_or(f64::INFINITY, |l| l.increment)
    }
}

/// Squared Hilbert–Schmidt norm `∬∬ κ₁² dv dμ(I) dv* dμ(I*)`, evaluated in the
/// coordinates `V = v − v*`, `ξ = v + v*` where the velocity part splits into
/// `(1/8)(4πk_BT_k)^{3/2}·4π∫ρ²e^{−ρ²/4k_BT_k}A_k(ρ)² dρ`, times the energy
/// integral `∬ e^{−(I+I*)/k_BT_i} E(I, I*)² dμ(I) dμ(I*)`.
pub fn hs_norm_kappa1(ctx: &LinearizedContext) -> Result<(f64, ConvergenceRecord)> {
    const MAX_LEVEL: u32 = 4;
    const TARGET: f64 = 1e-7;
    let kt = ctx.kt();
    let ki = ctx.ki();
    let sd = kt.sqrt();
    let c = ctx.prefactor();
    let kinetic = ctx.model.kinetic;
    let law = &ctx.law;
    let model = &ctx.model;
    let rho_hi = (4.0 * kt * 46.0).sqrt();
    let rho_base: Vec<f64> = merge_breaks(vec![0.1 * sd, 0.5 * sd, sd, 2.0 * sd, 4.0 * sd, 8.0 * sd], 0.0, rho_hi);
    let e_hi = 46.0 * ki;
    let mut e_points: Vec<f64> = (0..=10).map(|k| ki * 0.1f64.powi(k)).collect();
    e_points.extend([2.0 * ki, 4.0 * ki, 8.0 * ki, 16.0 * ki, 32.0 * ki]);
    e_points.extend(law.breakpoints());
    let e_base = merge_breaks(e_points, 0.0, e_hi);
    let u_base: Vec<f64> = merge_breaks((0..=12).map(|k| 0.1f64.powi(k)).collect(), 0.0, 1.0);
    let mut levels: Vec<RefinementLevel> = Vec::new();
    let mut estimate = f64::NAN;
    for level in 0..=MAX_LEVEL {
        let refine = |b: &[f64]| -> Vec<f64> {
            let mut out = vec![b[0]];
            let parts = 1usize << level;
            for w in b.windows(2) {
                for p in 1..=parts {
                    out.push(w[0] + (w[1] - w[0]) * p as f64 / parts as f64);
                }
            }
            out
        };
        let rho_set = NodeSet::gauss_panels(&refine(&rho_base), 6);
        let vel = rho_set.sum(|r| r * r * (-r * r / (4.0 * kt)).exp() * kinetic.sphere_average(r).powi(2));
        let vel = 0.125 * (4.0 * PI * kt).powf(1.5) * 4.0 * PI * vel;
        let e_set = NodeSet::gauss_panels(&refine(&e_base), 6);
        let u_set = NodeSet::gauss_panels(&refine(&u_base), 6);
        // both triangles I* = u·I and I = u·I*
        let mut en = 0.0;
        for (x, wx) in e_set.iter() {
            let rx = law.rho(x);
            let mut inner = 0.0;
            for (u, wu) in u_set.iter() {
                let y = u * x;
                let w = wu * x * law.rho(y) * (-(x + y) / ki).exp();
                inner += w * (model.energy_average(x, y).powi(2) + model.energy_average(y, x).powi(2));
            }
            en += wx * rx * inner;
        }
        let next = c * c * vel * en;
        if !next.is_finite() {
            return Err(Error::Overflow("Hilbert-Schmidt estimate is not finite".into()));
        }
        let increment = if estimate.is_finite() {
            (next - estimate).abs() / next
        } else {
            f64::INFINITY
        };
        levels.push(RefinementLevel {
            level,
            nodes: rho_set.len() + e_set.len() * u_set.len(),
            estimate: next,
            increment,
        });
        estimate = next;
        if increment < TARGET {
            break;
        }
    }
    let record = ConvergenceRecord { levels };
    if !(record.final_increment() < 1e-4) {
        return Err(Error::Convergence {
            estimate,
            error: record.final_increment() * estimate,
        });
    }
    Ok((estimate, record))
}

#[cfg(test)]
mod tests;
