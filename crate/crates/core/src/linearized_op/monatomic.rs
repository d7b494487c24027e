//! The monatomic operator `K₂^m h(v) = ∫ h(η) κ^m(v, η) dη` for a cross
//! section `B^m(ρ, |cos θ|)` with no internal energy.

use std::f64::consts::{PI, TAU};

use super::velocity::{EtaRule, VelocityKernel};
use super::LinearizedContext;
use crate::cross_section::KineticForm;
use crate::error::{argument, Result};
use crate::kinematics::{plane_frame, post_velocities_unchecked};
use crate::mc::{estimate, gaussian_vec, uniform_sphere, Estimate, MonteCarloConfig};
use crate::quad::NodeSet;
use crate::report::{Check, GrowthEnd, RatioCriterion, VerificationReport};
use crate::Vec3;

/// A monatomic gas at equilibrium `M(v) = n(2πk_BT)^{−3/2} e^{−|v|²/2k_BT}`.
#[derive(Debug, Clone)]
pub struct MonatomicContext {
    pub cross_section: KineticForm,
    pub n: f64,
    pub kt: f64,
    /// Envelope exponent `δ₂` of `|sin θ|^{−δ₂}`.
    pub delta2: f64,
    pub rule: EtaRule,
}

impl MonatomicContext {
    pub fn new(cross_section: KineticForm, n: f64, kt: f64) -> Result<Self> {
        if !(n > 0.0 && kt > 0.0) {
            return Err(argument("monatomic context needs n > 0 and k_B T > 0"));
        }
        Ok(MonatomicContext {
            cross_section,
            n,
            kt,
            delta2: 0.0,
            rule: EtaRule::default(),
        })
    }

    /// The velocity part of a polyatomic context, with `B^m = b_k`.
    pub fn from_linearized(ctx: &LinearizedContext) -> Result<Self> {
        let mut m = Self::new(ctx.model.kinetic, ctx.maxwellian.n, ctx.kt())?;
        m.delta2 = ctx.model.delta2;
        m.rule = ctx.quadrature.eta_rule();
        Ok(m)
    }

    pub fn with_rule(mut self, rule: EtaRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn prefactor(&self) -> f64 {
        self.n * (TAU * self.kt).powf(-1.5)
    }

    pub fn kernel(&self) -> VelocityKernel {
        VelocityKernel::new(self.cross_section, self.kt, self.prefactor()).with_rule(self.rule)
    }
}

/// `ψ^m(v, p)`.
pub fn psi_m_eval(ctx: &MonatomicContext, v: Vec3, p: Vec3) -> Result<f64> {
    ctx.kernel().psi_vec(v, p)
}

/// `κ^m(v, η)`.
pub fn kappa_m_eval(ctx: &MonatomicContext, v: Vec3, eta: Vec3) -> Result<f64> {
    ctx.kernel().kappa(v, eta)
}

/// `∫ h(η) κ^m(v, η) dη` in spherical coordinates centred at `v`.
pub fn k2m_kernel(ctx: &MonatomicContext, h: impl Fn(Vec3) -> f64, v: Vec3) -> f64 {
    ctx.kernel().apply(v, h)
}

/// Direct Monte Carlo of `∬ h(v′) M(v′)^{−1/2} M(v)^{1/2} M(v*) B^m dσ dv*`.
pub fn k2m_direct(ctx: &MonatomicContext, h: impl Fn(Vec3) -> f64 + Sync, v: Vec3, mc: &MonteCarloConfig) -> Result<Estimate> {
    let b = ctx.cross_section;
    let kt = ctx.kt;
    let n = ctx.n;
    estimate(mc, |d| {
        let v_star = gaussian_vec(d.rng, Vec3::zeros(), kt);
        let sigma = uniform_sphere(d.rng);
        let rel = v - v_star;
        let rho = rel.norm();
        if rho == 0.0 {
            return 0.0;
        }
        let coscos = (rel.dot(&sigma) / rho).abs().min(1.0);
        let (vp, _) = post_velocities_unchecked(v, v_star, sigma);
        let hv = h(vp);
        if hv == 0.0 {
            return 0.0;
        }
        n * 4.0 * PI * b.eval(rho, coscos) * hv * ((vp.norm_squared() - v.norm_squared()) / (4.0 * kt)).exp()
    })
}

/// `∫ κ^m(v, η) dη` at `|v| = s`.
pub fn kappa_m_row_integral(ctx: &MonatomicContext, s: f64) -> f64 {
    let mut out = [0.0];
    ctx.kernel().apply_radial(s, None, |_, buf| buf[0] = 1.0, &mut out);
    out[0]
}

/// `∫ κ^m(v, η) dv` at `|η| = s`, integrating over the first argument with
/// `v = η + ρω`; the azimuth about `η` is trivial.
pub fn kappa_m_column_integral(ctx: &MonatomicContext, s: f64) -> Result<f64> {
    let k = ctx.kernel();
    let eta = Vec3::new(0.0, 0.0, s);
    let axis = Vec3::z();
    let (e1, _) = plane_frame(&axis);
    let mut total = 0.0;
    for node in k.eta_nodes(s, None) {
        let sin = ((1.0 - node.t) * (1.0 + node.t)).max(0.0).sqrt();
        let v = eta + node.rho * (node.t * axis + sin * e1);
        total += node.weight * TAU * k.kappa(v, eta)?;
    }
    Ok(total)
}

/// `∫_{|v| ≤ R} ∫ κ^m(v, η)² dη dv` with the `η` rule `rule`.
pub fn kappa_m_local_l2(ctx: &MonatomicContext, radius: f64, rule: EtaRule) -> f64 {
    let k = ctx.kernel().with_rule(rule);
    let breaks: Vec<f64> = (0..=radius.ceil() as usize).map(|j| (j as f64).min(radius)).collect();
    let s_set = NodeSet::gauss_panels(&breaks, rule.rho_order);
    s_set.sum(|s| {
        let inner: f64 = k
            .eta_nodes(s, None)
            .iter()
            .map(|node| node.weight * TAU * node.kappa * node.kappa)
            .sum();
        4.0 * PI * s * s * inner
    })
}

/// Integral and local-`L²` bounds on `κ^m`:
/// `(1+|v|)∫κ^m dη`, `∫κ^m dv` bounded, and `∬_{|v|≤R} κ^m²` finite and
/// stable under refinement of the `η` rule.
pub fn kappa_m_bounds_check(ctx: &MonatomicContext, v_grid: &[f64], eta_grid: &[f64], l2_radius: f64) -> Result<VerificationReport> {
    if v_grid.is_empty() || eta_grid.is_empty() || !(l2_radius > 0.0) {
        return Err(argument("kappa_m bounds need nonempty grids and a positive radius"));
    }
    let cap = 1e6;
    let criterion = RatioCriterion::bounded(cap).at_end(GrowthEnd::Upper).strictly_positive();
    let mut report = VerificationReport::new("kappa-m-bounds");
    let rows: Vec<f64> = v_grid.iter().map(|&s| (1.0 + s) * kappa_m_row_integral(ctx, s)).collect();
    let verdict = criterion.evaluate(v_grid, &rows);
    report.push(Check::ratio("(1+|v|) * int kappa_m d eta", verdict.max, cap, verdict.pass).with_detail(verdict.describe()));
    let cols: Vec<f64> = eta_grid.iter().map(|&s| kappa_m_column_integral(ctx, s)).collect::<Result<_>>()?;
    let verdict = criterion.evaluate(eta_grid, &cols);
    report.push(Check::ratio("int kappa_m dv", verdict.max, cap, verdict.pass).with_detail(verdict.describe()));
    let coarse = kappa_m_local_l2(ctx, l2_radius, ctx.rule.coarser());
    let base = kappa_m_local_l2(ctx, l2_radius, ctx.rule);
    let fine_rule = EtaRule {
        rho_order: ctx.rule.rho_order + 4,
        t_order: ctx.rule.t_order + 4,
        r_order: ctx.rule.r_order + 4,
        ..ctx.rule
    };
    let fine = kappa_m_local_l2(ctx, l2_radius, fine_rule);
    let increment = (fine - base).abs() / fine;
    report.push(
        Check::at_most(
            format!("local L2 of kappa_m on |v| <= {l2_radius}: refinement increment"),
            increment,
            1e-3,
        )
        .with_detail(format!("coarse {coarse:.10e}, base {base:.10e}, fine {fine:.10e}")),
    );
    report.push(Check::flag(
        "local L2 of kappa_m finite",
        fine,
        f64::INFINITY,
        fine.is_finite() && fine > 0.0,
    ));
    Ok(report)
}

/// `ψ^m(v, p) ≤ C(|p| + |p|^{−δ₂})`: for each `|p|` on a log grid the
/// supremum of the ratio over `per_point` random `(v, p̂)`, watched at both ends.
pub fn psi_m_bound_check(ctx: &MonatomicContext, p_grid: &[f64], per_point: usize, seed: u64) -> Result<VerificationReport> {
    use rand::{Rng, SeedableRng};
    if p_grid.is_empty() || per_point == 0 || p_grid.iter().any(|p| !(*p > 0.0)) {
        return Err(argument("psi_m bound check needs a positive |p| grid and samples"));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let k = ctx.kernel();
    let sd = ctx.kt.sqrt();
    let mut sups = Vec::with_capacity(p_grid.len());
    for &pn in p_grid {
        let mut sup = 0.0_f64;
        for _ in 0..per_point {
            let v = uniform_sphere(&mut rng) * (10.0 * sd * rng.random::<f64>());
            let p = uniform_sphere(&mut rng) * pn;
            sup = sup.max(k.psi_vec(v, p)? / (pn + pn.powf(-ctx.delta2)));
        }
        sups.push(sup);
    }
    let cap = 1e6;
    let verdict = RatioCriterion::bounded(cap).strictly_positive().evaluate(p_grid, &sups);
    let mut report = VerificationReport::new("psi-m-bound");
    report.push(Check::ratio("psi_m / (|p| + |p|^-delta2)", verdict.max, cap, verdict.pass).with_detail(verdict.describe()));
    Ok(report)
}
