//! `K₂` and `K₃`: kernel forms, direct Monte Carlo estimators, and the full
//! operator `K = K₁ + K₂ + K₃`.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{k1_kernel, EnergyKernelKind, LinearizedContext, PhaseFunction};
use crate::error::{argument, Error, Result};
use crate::kinematics::post_velocities_unchecked;
use crate::mc::{estimate, estimate_vec, gaussian_vec, uniform_sphere, Estimate, MonteCarloConfig};
use crate::report::{Check, VerificationReport};
use crate::Vec3;

/// `ψ(v, p, I, I*, J)`, the `r`-integral with `B₀` in place of `b_k`.
pub fn psi_eval(ctx: &LinearizedContext, v: Vec3, p: Vec3, i: f64, i_star: f64, j: f64) -> Result<f64> {
    let pn = p.norm();
    if pn == 0.0 {
        return Err(Error::Singular("psi is singular at p = 0".into()));
    }
    let lambda = v.cross(&p).norm() / pn;
    let vk = ctx.velocity_kernel();
    Ok(vk
        .r_nodes(lambda, pn)
        .iter()
        .map(|&(w, rho, coscos, _)| w * ctx.model.b0(rho, coscos, i, i_star, j))
        .sum())
}

/// `e^{−|p|²/8k_BT_k} e^{−(|η|²−|v|²)²/8k_BT_k|p|²}` and `(λ, |p|)` for `p = η − v`.
fn gauss_geometry(kt: f64, v: Vec3, eta: Vec3) -> Result<(f64, f64, f64)> {
    let p = eta - v;
    let rho = p.norm();
    if rho == 0.0 {
        return Err(Error::Singular("kernel is singular on the diagonal eta = v".into()));
    }
    let u = (eta.norm_squared() - v.norm_squared()) / rho;
    let gauss = (-(rho * rho + u * u) / (8.0 * kt)).exp();
    Ok((gauss, v.cross(&p).norm() / rho, rho))
}

/// `κ₂(v, I, η, J)`: the `I*` integral of the exponential weight times
/// `ψ(v, η − v, I, I*, J)`, with `B₀` evaluated on the full `(r, I*)` grid.
pub fn kappa2_eval(ctx: &LinearizedContext, v: Vec3, i: f64, eta: Vec3, j: f64) -> Result<f64> {
    let (gauss, lambda, rho) = gauss_geometry(ctx.kt(), v, eta)?;
    if !(i >= 0.0 && j >= 0.0) {
        return Err(argument("energies must be nonnegative"));
    }
    let r_nodes = ctx.velocity_kernel().r_nodes(lambda, rho);
    let model = &ctx.model;
    let mut total = 0.0;
    for (x, w) in ctx.energy_kernel().istar_nodes(i, j) {
        let psi: f64 = r_nodes.iter().map(|&(wr, rr, coscos, _)| wr * model.b0(rr, coscos, i, x, j)).sum();
        total += w * psi;
    }
    Ok(gauss / rho * total)
}

/// `κ_k(v, η)`.
pub fn kappa_k_eval(ctx: &LinearizedContext, v: Vec3, eta: Vec3) -> Result<f64> {
    ctx.velocity_kernel().kappa(v, eta)
}

/// `κ_i(I, J)`.
pub fn kappa_i_eval(ctx: &LinearizedContext, i: f64, j: f64) -> Result<f64> {
    if !(i >= 0.0 && j >= 0.0) {
        return Err(argument("energies must be nonnegative"));
    }
    Ok(ctx.energy_kernel().kappa_i(i, j))
}

/// `∬ g(η, J) κ_k(v, η) κ(I, J) dη dμ(J)` for one of the energy kernels.
fn separated_apply(ctx: &LinearizedContext, g: &PhaseFunction, v: Vec3, i: f64, kind: EnergyKernelKind) -> Result<f64> {
    ctx.check_state(v, i)?;
    let vk = ctx.velocity_kernel();
    let ek = ctx.energy_kernel();
    Ok(match g {
        PhaseFunction::Product { velocity, energy } => {
            let e = ek.apply(kind, i, None, |j| energy(j));
            if e == 0.0 {
                0.0
            } else {
                vk.apply(v, |eta| velocity(eta)) * e
            }
        }
        PhaseFunction::Radial {
            velocity,
            energy,
            velocity_support,
            energy_support,
        } => {
            let e = ek.apply(kind, i, *energy_support, |j| energy(j));
            if e == 0.0 {
                0.0
            } else {
                let mut out = [0.0];
                vk.apply_radial(v.norm(), *velocity_support, |r, buf| buf[0] = velocity(r), &mut out);
                out[0] * e
            }
        }
        PhaseFunction::General(f) => {
            let nodes: Vec<(f64, f64)> = ek
                .j_nodes(i, None)
                .iter()
                .map(|(j, w)| (j, w * ek.eval(kind, i, j)))
                .filter(|(_, w)| *w != 0.0)
                .collect();
            vk.apply(v, |eta| nodes.iter().map(|&(j, w)| w * f(eta, j)).sum())
        }
    })
}

/// `K₂g(v, I) = ∬ g(η, J) κ₂(v, I, η, J) dη dμ(J)`, using the exact
/// separation `κ₂ = κ_k·κ̃_i`, in spherical coordinates centred at `v`.
pub fn k2_kernel(ctx: &LinearizedContext, g: &PhaseFunction, v: Vec3, i: f64) -> Result<f64> {
    separated_apply(ctx, g, v, i, EnergyKernelKind::Modulated)
}

/// `K₃g(v, I)` in kernel form, `κ₃ = κ_k·κ̃₃`.
pub fn k3_kernel(ctx: &LinearizedContext, g: &PhaseFunction, v: Vec3, i: f64) -> Result<f64> {
    separated_apply(ctx, g, v, i, EnergyKernelKind::Mirrored)
}

/// `Kg = K₁g + K₂g + K₃g`, each in kernel form.
pub fn k_kernel(ctx: &LinearizedContext, g: &PhaseFunction, v: Vec3, i: f64) -> Result<f64> {
    Ok(k1_kernel(ctx, g, v, i)? + k2_kernel(ctx, g, v, i)? + k3_kernel(ctx, g, v, i)?)
}

/// One sampled pre-collision partner and collision parameters.
struct Sample {
    v_star: Vec3,
    i_star: f64,
    sigma: Vec3,
    j: f64,
    /// `μ[0, I + I*]`.
    mass: f64,
}

fn draw(ctx: &LinearizedContext, i: f64, rng: &mut impl Rng) -> Sample {
    let v_star = gaussian_vec(rng, Vec3::zeros(), ctx.kt());
    let i_star = ctx.law.sample_gibbs(ctx.ki(), rng).unwrap_or(f64::NAN);
    let sigma = uniform_sphere(rng);
    let s = i + i_star;
    let j = ctx.law.sample_uniform_in(s, rng.random());
    Sample {
        v_star,
        i_star,
        sigma,
        j,
        mass: ctx.law.mass_unchecked(s),
    }
}

/// `n·4π·μ[0, S]·B·g(w, E)·(M(v, I)/M(w, E))^{1/2}`: the generic weight of a
/// gain-type term with post-collisional argument `(w, E)`.
#[inline]
#[allow(clippy::too_many_arguments)]
fn gain_weight(ctx: &LinearizedContext, g: &PhaseFunction, v: Vec3, i: f64, b: f64, mass: f64, w: Vec3, e: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    let gw = g.eval(w, e);
    if gw == 0.0 {
        return 0.0;
    }
    let log_ratio = (w.norm_squared() - v.norm_squared()) / (4.0 * ctx.kt()) + (e - i) / (2.0 * ctx.ki());
    ctx.maxwellian.n * 4.0 * PI * mass * b * gw * log_ratio.exp()
}

fn finite(e: Estimate) -> Result<Estimate> {
    if e.mean.is_finite() && e.std_err.is_finite() {
        Ok(e)
    } else {
        Err(Error::Sampling { attempts: e.samples })
    }
}

/// Direct Monte Carlo of `∫ g(v′, J) M(v′, J)^{−1/2} M(v, I)^{1/2} M(v*, I*) B
/// dv* dμ(I*) dμ(J) dσ` with `v*, I*` drawn from `M` and `σ, J` uniform.
pub fn k2_direct(ctx: &LinearizedContext, g: &PhaseFunction, v: Vec3, i: f64, mc: &MonteCarloConfig) -> Result<Estimate> {
    ctx.check_state(v, i)?;
    finite(estimate(mc, |d| {
        let s = draw(ctx, i, d.rng);
        let (vp, _) = post_velocities_unchecked(v, s.v_star, s.sigma);
        let b = ctx.model.eval_b_unchecked(v, s.v_star, i, s.i_star, s.j, s.sigma);
        gain_weight(ctx, g, v, i, b, s.mass, vp, s.j)
    })?)
}

/// How [`k3_direct`] samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum K3Sampling {
    /// The `K₂` sample path pushed through `σ ↦ −σ`, `J ↦ I + I* − J`, with
    /// the density ratio `ρ(I + I* − J)/ρ(J)`.
    Mirrored,
    /// Fresh samples of the `K₃` integrand under a derived seed.
    Independent,
}

/// The `K₃` integrand `g(v′*, I′*) M(v′*, I′*)^{−1/2} M^{1/2} M* B` at
/// `(σ, I′)`, as a Monte Carlo weight.
fn k3_weight(ctx: &LinearizedContext, g: &PhaseFunction, v: Vec3, i: f64, s: &Sample, sigma: Vec3, i_prime: f64) -> f64 {
    let (_, vps) = post_velocities_unchecked(v, s.v_star, sigma);
    let b = ctx.model.eval_b_unchecked(v, s.v_star, i, s.i_star, i_prime, sigma);
    let total = i + s.i_star;
    gain_weight(ctx, g, v, i, b, s.mass, vps, total - i_prime)
}

/// Direct Monte Carlo of `K₃g(v, I)`.
pub fn k3_direct(
    ctx: &LinearizedContext,
    g: &PhaseFunction,
    v: Vec3,
    i: f64,
    mc: &MonteCarloConfig,
    sampling: K3Sampling,
) -> Result<Estimate> {
    ctx.check_state(v, i)?;
    let law = &ctx.law;
    finite(match sampling {
        K3Sampling::Mirrored => estimate(mc, |d| {
            let s = draw(ctx, i, d.rng);
            let total = i + s.i_star;
            let mirrored = total - s.j;
            let density = law.rho(mirrored) / law.rho(s.j);
            let w = k3_weight(ctx, g, v, i, &s, -s.sigma, mirrored);
            if w == 0.0 {
                0.0
            } else {
                w * density
            }
        })?,
        K3Sampling::Independent => estimate(&mc.derived(0x3b), |d| {
            let s = draw(ctx, i, d.rng);
            k3_weight(ctx, g, v, i, &s, s.sigma, s.j)
        })?,
    })
}

/// Direct Monte Carlo of `Kg(v, I) = ∫ M^{1/2} M* B (h′ + h′* − h*)` with
/// `h = g/M^{1/2}`, all three terms on one sample path.  The components of
/// the returned array are `(K₁g, K₂g, K₃g, Kg)`.
pub fn k_direct(ctx: &LinearizedContext, g: &PhaseFunction, v: Vec3, i: f64, mc: &MonteCarloConfig) -> Result<[Estimate; 4]> {
    ctx.check_state(v, i)?;
    let est = estimate_vec::<4, _>(mc, |d| {
        let s = draw(ctx, i, d.rng);
        let (vp, vps) = post_velocities_unchecked(v, s.v_star, s.sigma);
        let b = ctx.model.eval_b_unchecked(v, s.v_star, i, s.i_star, s.j, s.sigma);
        let w2 = gain_weight(ctx, g, v, i, b, s.mass, vp, s.j);
        let w3 = gain_weight(ctx, g, v, i, b, s.mass, vps, i + s.i_star - s.j);
        let w1 = -gain_weight(ctx, g, v, i, b, s.mass, s.v_star, s.i_star);
        [w1, w2, w3, w1 + w2 + w3]
    })?;
    for e in est {
        finite(e)?;
    }
    Ok(est)
}

/// Direct Monte Carlo of `⟨f, Kg⟩ = ∬ f·Kg dv dμ(I)` with `(v, I)` drawn
/// from `M/n` and one collision per draw; components as in [`k_direct`].
pub fn pairing_direct(ctx: &LinearizedContext, f: &PhaseFunction, g: &PhaseFunction, mc: &MonteCarloConfig) -> Result<[Estimate; 4]> {
    let m = &ctx.maxwellian;
    if !(m.n > 0.0) {
        return Err(argument("pairing needs a positive density"));
    }
    let est = estimate_vec::<4, _>(mc, |d| {
        let v = gaussian_vec(d.rng, Vec3::zeros(), ctx.kt());
        let i = ctx.law.sample_gibbs(ctx.ki(), d.rng).unwrap_or(f64::NAN);
        let fv = f.eval(v, i);
        if fv == 0.0 {
            return [0.0; 4];
        }
        let scale = fv / (m.velocity_part(v) * m.internal_part(i));
        let s = draw(ctx, i, d.rng);
        let (vp, vps) = post_velocities_unchecked(v, s.v_star, s.sigma);
        let b = ctx.model.eval_b_unchecked(v, s.v_star, i, s.i_star, s.j, s.sigma);
        let w2 = gain_weight(ctx, g, v, i, b, s.mass, vp, s.j);
        let w3 = gain_weight(ctx, g, v, i, b, s.mass, vps, i + s.i_star - s.j);
        let w1 = -gain_weight(ctx, g, v, i, b, s.mass, s.v_star, s.i_star);
        [scale * w1, scale * w2, scale * w3, scale * (w1 + w2 + w3)]
    })?;
    for e in est {
        finite(e)?;
    }
    Ok(est)
}

/// Exact check of `κ₂ ≤ κ_k·κ_i` on `count` random tuples `(v, I, η, J)`.
/// Both sides are evaluated on shared node sets, so the comparison is
/// between discrete sums and carries no statistical slack.
pub fn tensor_bound_check(ctx: &LinearizedContext, count: usize, seed: u64) -> Result<VerificationReport> {
    if count == 0 {
        return Err(argument("tensor bound check needs at least one tuple"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = ctx.kt().sqrt();
    let ki = ctx.ki();
    let mut violations = 0usize;
    let mut worst = 0.0_f64;
    let mut positive = 0usize;
    for _ in 0..count {
        let v = uniform_sphere(&mut rng) * (4.0 * sd * rng.random::<f64>());
        let p = uniform_sphere(&mut rng) * (sd * 10f64.powf(-2.0 + 3.0 * rng.random::<f64>()));
        let eta = v + p;
        let i = ki * 10f64.powf(-3.0 + 4.0 * rng.random::<f64>());
        let j = ki * 10f64.powf(-3.0 + 4.0 * rng.random::<f64>());
        let k2 = kappa2_eval(ctx, v, i, eta, j)?;
        let bound = kappa_k_eval(ctx, v, eta)? * kappa_i_eval(ctx, i, j)?;
        if bound > 0.0 {
            positive += 1;
            worst = worst.max(k2 / bound);
        }
        if !(k2 <= bound) {
            violations += 1;
        }
    }
    let mut report = VerificationReport::new("tensor-bound");
    report.push(
        Check::flag("kappa2 <= kappa_k * kappa_i violations", violations as f64, 0.0, violations == 0)
            .with_detail(format!("{count} tuples, {positive} with positive bound, max ratio {worst:.6}")),
    );
    Ok(report)
}
