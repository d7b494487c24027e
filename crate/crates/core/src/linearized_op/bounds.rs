//! Empirical envelope checks on `κ_i`, `φ_α`, the tail of `K₂g` outside
//! large balls, and the continuity of `K₂g` under translations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{energy_breaks, EnergyKernelKind, LinearizedContext, PhaseFunction};
use crate::error::{argument, Result};
use crate::interp::ChebyshevPanels;
use crate::quad::{graded_breaks, merge_breaks, GaussRule, NodeSet};
use crate::report::{Check, GrowthEnd, RatioCriterion, VerificationReport};
use crate::special_fn::{phi_alpha, sup_profile};

const CAP: f64 = 1e6;

/// Pointwise envelope of `κ_i(I, J)`: `e^{−|J−I|/4k_BT_i}(1+I)^{γ/2−β₂+a−1}`
/// for `γ > 0`, `e^{−|J−I|/4k_BT_i} I^{−α}(1+I)^{α−β₂+a−1}` for `γ = 0`.
pub fn kappa_i_envelope(ctx: &LinearizedContext, i: f64, j: f64) -> f64 {
    let g = ctx.model.gamma;
    let a = ctx.a_exponent;
    let b2 = ctx.law.declared_beta2();
    let decay = (-(j - i).abs() / (4.0 * ctx.ki())).exp();
    if g > 0.0 {
        decay * (1.0 + i).powf(0.5 * g - b2 + a - 1.0)
    } else {
        let al = ctx.alpha_exponent;
        decay * i.powf(-al) * (1.0 + i).powf(al - b2 + a - 1.0)
    }
}

fn push_profile(report: &mut VerificationReport, name: &str, xs: &[f64], values: &[f64], end: GrowthEnd) {
    let verdict = RatioCriterion::bounded(CAP).at_end(end).strictly_positive().evaluate(xs, values);
    report.push(Check::ratio(name, verdict.max, CAP, verdict.pass).with_detail(verdict.describe()));
}

/// `κ_i / envelope` on the grid `i_grid × j_grid`, as suprema over `J` per
/// `I` and over `I` per `J`.
pub fn kappa_i_bound_check(ctx: &LinearizedContext, i_grid: &[f64], j_grid: &[f64]) -> Result<VerificationReport> {
    if i_grid.is_empty() || j_grid.is_empty() || i_grid.iter().chain(j_grid).any(|x| !(*x > 0.0)) {
        return Err(argument("kappa_i bounds need positive, nonempty grids"));
    }
    let ek = ctx.energy_kernel();
    let mut pairs = Vec::with_capacity(i_grid.len() * j_grid.len());
    let mut ratio = std::collections::HashMap::new();
    for &i in i_grid {
        for &j in j_grid {
            pairs.push((i, j));
            ratio.insert((i.to_bits(), j.to_bits()), ek.kappa_i(i, j) / kappa_i_envelope(ctx, i, j));
        }
    }
    let lookup = |i: f64, j: f64| ratio[&(i.to_bits(), j.to_bits())];
    let mut report = VerificationReport::new("kappa-i-bound");
    let (xs, sups) = sup_profile(&pairs, lookup);
    push_profile(&mut report, "kappa_i / envelope, sup over J", &xs, &sups, GrowthEnd::Both);
    let swapped: Vec<(f64, f64)> = pairs.iter().map(|&(i, j)| (j, i)).collect();
    let (xs, sups) = sup_profile(&swapped, |j, i| lookup(i, j));
    push_profile(&mut report, "kappa_i / envelope, sup over I", &xs, &sups, GrowthEnd::Both);
    Ok(report)
}

/// `∫ κ_i(I, J) dμ(J)` against `C(1+I)^{γ/2+a−1}` (`γ > 0`) or
/// `C I^{−α}(1+I)^{α+a−1}` (`γ = 0`), and `∫ w(I) κ_i(I, J) dμ(I) ≤ C` with
/// `w = 1` (`γ > 0`) or `w = I^{−α}` (`γ = 0`).
pub fn kappa_i_integral_check(ctx: &LinearizedContext, i_grid: &[f64], j_grid: &[f64]) -> Result<VerificationReport> {
    if i_grid.is_empty() || j_grid.is_empty() || i_grid.iter().chain(j_grid).any(|x| !(*x > 0.0)) {
        return Err(argument("kappa_i integrals need positive, nonempty grids"));
    }
    let ek = ctx.energy_kernel();
    let g = ctx.model.gamma;
    let (a, al) = (ctx.a_exponent, ctx.alpha_exponent);
    let rows: Vec<f64> = i_grid
        .iter()
        .map(|&i| {
            let env = if g > 0.0 {
                (1.0 + i).powf(0.5 * g + a - 1.0)
            } else {
                i.powf(-al) * (1.0 + i).powf(al + a - 1.0)
            };
            ek.apply(EnergyKernelKind::Bound, i, None, |_| 1.0) / env
        })
        .collect();
    let cols: Vec<f64> = j_grid
        .iter()
        .map(|&j| {
            // nodes in I around J: the same kinks and decay as the J nodes around I
            ek.j_nodes(j, None).sum(|i| {
                let w = if g > 0.0 { 1.0 } else { i.powf(-al) };
                w * ek.kappa_i(i, j)
            })
        })
        .collect();
    let mut report = VerificationReport::new("kappa-i-integrals");
    push_profile(&mut report, "int kappa_i dmu(J) / envelope(I)", i_grid, &rows, GrowthEnd::Both);
    let name = if g > 0.0 {
        "int kappa_i dmu(I)"
    } else {
        "int I^-alpha kappa_i dmu(I)"
    };
    push_profile(&mut report, name, j_grid, &cols, GrowthEnd::Both);
    Ok(report)
}

/// Partial norm `∬_{[0,E]²} κ_i² dμ(I) dμ(J)` at one cutoff.
fn kappa_i_partial_norm(ctx: &LinearizedContext, cutoff: f64) -> f64 {
    let ek = ctx.energy_kernel();
    let ki = ctx.ki();
    let mut points = vec![0.0, cutoff];
    points.extend((0..=10).map(|k| ki * 0.25f64.powi(k)));
    points.extend(graded_breaks(0.0, cutoff, 1e-3 * ki, 2.0, ki));
    points.extend(ctx.law.breakpoints());
    let breaks = merge_breaks(points, 0.0, cutoff);
    NodeSet::gauss_panels(&breaks, ek.order).sum(|i| {
        let inner = ek.j_nodes(i, Some(cutoff)).sum(|j| ek.kappa_i(i, j).powi(2));
        inner * ctx.law.rho(i)
    })
}

/// Global square integrability of `κ_i`, expected for `γ < 1`: the partial
/// norms over `[0, E]²` grow by increments that shrink along the doubling
/// ladder `cutoffs`.  For `γ ≥ 1` no such claim is made and the check only
/// records the profile.
pub fn kappa_i_l2_check(ctx: &LinearizedContext, cutoffs: &[f64]) -> Result<(VerificationReport, Vec<(f64, f64)>)> {
    if cutoffs.len() < 3 || cutoffs.windows(2).any(|w| !(w[1] > w[0])) || !(cutoffs[0] > 0.0) {
        return Err(argument("kappa_i L2 check needs at least three increasing positive cutoffs"));
    }
    let norms: Vec<(f64, f64)> = cutoffs.iter().map(|&e| (e, kappa_i_partial_norm(ctx, e))).collect();
    let increments: Vec<f64> = norms.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let contraction = increments.windows(2).map(|w| w[1] / w[0]).fold(0.0_f64, f64::max);
    let finite = norms.iter().all(|(_, n)| n.is_finite() && *n > 0.0);
    let applies = ctx.model.gamma < 1.0;
    let mut report = VerificationReport::new("kappa-i-l2");
    let detail = format!(
        "partial norms {}; largest increment ratio {contraction:.4}{}",
        norms.iter().map(|(e, n)| format!("E={e}: {n:.6e}")).collect::<Vec<_>>().join(", "),
        if applies { "" } else { " (gamma >= 1: informational)" }
    );
    report.push(
        Check::flag(
            "kappa_i increments shrink along the cutoff ladder",
            contraction,
            1.0,
            finite && (!applies || contraction < 1.0),
        )
        .with_detail(detail),
    );
    Ok((report, norms))
}

/// `φ_α(λ)` bounded uniformly in `λ` for each `α`.
pub fn phi_alpha_bound_check(alphas: &[f64], lambdas: &[f64], kt: f64) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("phi-alpha-bound");
    for &alpha in alphas {
        let values: Vec<f64> = lambdas.iter().map(|&l| phi_alpha(l, alpha, kt)).collect::<Result<_>>()?;
        push_profile(
            &mut report,
            &format!("phi_alpha, alpha={alpha}"),
            lambdas,
            &values,
            GrowthEnd::Upper,
        );
    }
    Ok(report)
}

/// `K₂g(v, I) = K_v(|v|)·K_e(I)` for a radial product `g`, tabulated.
#[derive(Debug, Clone)]
pub struct RadialImage {
    pub velocity: ChebyshevPanels,
    pub energy: ChebyshevPanels,
    /// `‖g‖²_{L²(dη dμ(J))}`.
    pub g_norm_sq: f64,
}

impl RadialImage {
    pub fn eval(&self, s: f64, i: f64) -> f64 {
        self.velocity.eval(s) * self.energy.eval(i)
    }
}

/// Tabulate `K₂g` for a radial `g`.  The energy factor is tabulated from
/// `I = 10⁻⁹ k_BT_i` upward and taken as zero below.
pub fn radial_image(ctx: &LinearizedContext, g: &PhaseFunction) -> Result<RadialImage> {
    let PhaseFunction::Radial {
        velocity,
        energy,
        velocity_support,
        energy_support,
    } = g
    else {
        return Err(argument("the factorized image needs a radial product test function"));
    };
    let sd = ctx.kt().sqrt();
    let ki = ctx.ki();
    let vk = ctx.velocity_kernel();
    let ek = ctx.energy_kernel();
    let reach = velocity_support.unwrap_or(4.0 * sd);
    let s_max = reach + 16.0 * sd;
    let s_breaks: Vec<f64> = merge_breaks((0..=(s_max / sd).ceil() as usize).map(|k| k as f64 * sd).collect(), 0.0, s_max);
    let kv = ChebyshevPanels::build(&s_breaks, 12, |s| {
        let mut out = [0.0];
        vk.apply_radial(s, *velocity_support, |r, buf| buf[0] = velocity(r), &mut out);
        out[0]
    });
    let i_min = 1e-9 * ki;
    let i_max = energy_support.unwrap_or(8.0 * ki) + 60.0 * ki;
    let mut i_points: Vec<f64> = (0..=8).map(|k| ki * 0.1f64.powi(k)).collect();
    i_points.extend((1..=(i_max / ki).ceil() as usize).map(|k| k as f64 * ki));
    i_points.extend(ctx.law.breakpoints());
    if let Some(e) = energy_support {
        i_points.push(*e);
    }
    let i_breaks = merge_breaks(i_points, i_min, i_max);
    let ke = ChebyshevPanels::build(&i_breaks, 12, |i| {
        ek.apply(EnergyKernelKind::Modulated, i, *energy_support, |j| energy(j))
    });
    // ‖g‖²
    let vel_hi = velocity_support.unwrap_or(40.0 * sd);
    let v_breaks = merge_breaks((0..=40).map(|k| vel_hi * k as f64 / 40.0).collect(), 0.0, vel_hi);
    let gv = NodeSet::gauss_panels(&v_breaks, 10).sum(|s| 4.0 * PI * s * s * velocity(s).powi(2));
    let e_breaks = energy_breaks(&ctx.law, ki, 0.0, 80.0);
    let e_breaks = match energy_support {
        Some(e) => merge_breaks(e_breaks.into_iter().filter(|x| x < e).collect(), 0.0, *e),
        None => e_breaks,
    };
    let ge = NodeSet::gauss_panels(&e_breaks, 10).sum(|i| energy(i).powi(2) * ctx.law.rho(i));
    Ok(RadialImage {
        velocity: kv,
        energy: ke,
        g_norm_sq: gv * ge,
    })
}

/// One row of [`tail_decay_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub radius: f64,
    /// `‖K₂g‖²_{L²(B_R^c)}`.
    pub norm_sq: f64,
    /// `norm_sq·(1+R)^{tail exponent}/‖g‖²`.
    pub ratio: f64,
}

/// `∫_x^∞ K_e(I)² dμ(I)`.
fn energy_tail(ctx: &LinearizedContext, image: &RadialImage, from: f64, rule: &GaussRule) -> f64 {
    let hi = image.energy.upper();
    if from >= hi {
        return 0.0;
    }
    let lo = from.max(image.energy.lower());
    let mut points: Vec<f64> = (0..=60)
        .map(|k| image.energy.lower() + (hi - image.energy.lower()) * k as f64 / 60.0)
        .collect();
    points.extend((0..=8).map(|k| ctx.ki() * 0.1f64.powi(k)));
    points.extend(ctx.law.breakpoints());
    let breaks = merge_breaks(points, lo, hi);
    breaks
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], |i| image.energy.eval(i).powi(2) * ctx.law.rho(i)))
        .sum()
}

/// `‖K₂g‖²` on `B_R^c = {|v| + I ≥ R}`.
pub fn tail_norm_sq(ctx: &LinearizedContext, image: &RadialImage, radius: f64) -> f64 {
    let rule = GaussRule::of_order(10);
    let s_max = image.velocity.upper();
    let mut points: Vec<f64> = (0..=80).map(|k| s_max * k as f64 / 80.0).collect();
    points.push(radius);
    let breaks = merge_breaks(points, 0.0, s_max);
    let set = NodeSet::gauss_panels(&breaks, 10);
    set.sum(|s| {
        let kv = image.velocity.eval(s);
        4.0 * PI * s * s * kv * kv * energy_tail(ctx, image, (radius - s).max(0.0), &rule)
    })
}

/// `‖K₂g‖²_{L²(B_R^c)}` over increasing `R`: nonincreasing, with bounded
/// ratio to `‖g‖²/(1+R)^{tail exponent}`.
pub fn tail_decay_check(ctx: &LinearizedContext, g: &PhaseFunction, radii: &[f64]) -> Result<(VerificationReport, Vec<TailRow>)> {
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] > w[0])) || radii[0] <= 0.0 {
        return Err(argument("tail check needs at least two increasing positive radii"));
    }
    let image = radial_image(ctx, g)?;
    let exponent = ctx.tail_exponent();
    let rows: Vec<TailRow> = radii
        .iter()
        .map(|&r| {
            let norm_sq = tail_norm_sq(ctx, &image, r);
            TailRow {
                radius: r,
                norm_sq,
                ratio: norm_sq * (1.0 + r).powf(exponent) / image.g_norm_sq,
            }
        })
        .collect();
    let mut report = VerificationReport::new("tail-decay");
    let worst_step = rows
        .windows(2)
        .map(|w| w[1].norm_sq - w[0].norm_sq)
        .fold(f64::NEG_INFINITY, f64::max);
    report.push(
        Check::flag("||K2 g||^2 on B_R^c nonincreasing in R", worst_step, 0.0, worst_step <= 0.0).with_detail(
            rows.iter()
                .map(|r| format!("R={}: {:.6e}", r.radius, r.norm_sq))
                .collect::<Vec<_>>()
                .join(", "),
        ),
    );
    let xs: Vec<f64> = rows.iter().map(|r| r.radius).collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let verdict = RatioCriterion::bounded(CAP).at_end(GrowthEnd::Upper).evaluate(&xs, &ratios);
    report.push(
        Check::ratio(
            format!("(1+R)^{exponent:.4} ||K2 g||^2_{{B_R^c}} / ||g||^2"),
            verdict.max,
            CAP,
            verdict.pass,
        )
        .with_detail(verdict.describe()),
    );
    Ok((report, rows))
}

/// One rung of [`translation_continuity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranslationRow {
    /// `|w| + H`.
    pub shift: f64,
    /// `‖(τ_{(w,H)} − Id)K₂g‖ / ‖g‖`.
    pub relative_norm: f64,
}

/// `‖(τ_{(w,H)} − Id)K₂g‖` along the ladder `(w, H) = (s/2·e₃, s/2)`, which
/// must decrease strictly as `s` shrinks.
pub fn translation_continuity_check(
    ctx: &LinearizedContext,
    g: &PhaseFunction,
    shifts: &[f64],
) -> Result<(VerificationReport, Vec<TranslationRow>)> {
    if shifts.len() < 2 || shifts.iter().any(|s| !(*s > 0.0)) {
        return Err(argument("translation check needs at least two positive shifts"));
    }
    let image = radial_image(ctx, g)?;
    let rows: Vec<TranslationRow> = shifts
        .iter()
        .map(|&s| TranslationRow {
            shift: s,
            relative_norm: (translation_norm_sq(ctx, &image, 0.5 * s, 0.5 * s).max(0.0) / image.g_norm_sq).sqrt(),
        })
        .collect();
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| b.shift.partial_cmp(&a.shift).unwrap());
    let decreasing = sorted.windows(2).all(|w| w[1].relative_norm < w[0].relative_norm);
    let mut report = VerificationReport::new("translation-continuity");
    report.push(
        Check::flag(
            "||(tau - Id) K2 g|| decreases along the shift ladder",
            sorted.last().map_or(f64::NAN, |r| r.relative_norm),
            0.0,
            decreasing,
        )
        .with_detail(
            sorted
                .iter()
                .map(|r| format!("shift {}: {:.6e}", r.shift, r.relative_norm))
                .collect::<Vec<_>>()
                .join(", "),
        ),
    );
    Ok((report, rows))
}

/// `∬ (K₂g(v+w, I+H) − K₂g(v, I))² dv dμ(I)` with `w = w_len·e₃`.
fn translation_norm_sq(ctx: &LinearizedContext, image: &RadialImage, w_len: f64, h: f64) -> f64 {
    let s_hi = image.velocity.upper() + w_len;
    let s_set = NodeSet::gauss_panels(&merge_breaks((0..=80).map(|k| s_hi * k as f64 / 80.0).collect(), 0.0, s_hi), 10);
    let t_set = NodeSet::gauss_panels(&[-1.0, -0.5, 0.0, 0.5, 1.0], 12);
    let (mut vaa, mut vab, mut vbb) = (0.0, 0.0, 0.0);
    for (s, ws) in s_set.iter() {
        let b = image.velocity.eval(s);
        for (t, wt) in t_set.iter() {
            let shifted = (s * s + w_len * w_len + 2.0 * s * w_len * t).max(0.0).sqrt();
            let a = image.velocity.eval(shifted);
            let w = ws * wt * 2.0 * PI * s * s;
            vaa += w * a * a;
            vab += w * a * b;
            vbb += w * b * b;
        }
    }
    let lo = image.energy.lower();
    let hi = image.energy.upper();
    let mut points: Vec<f64> = (0..=60).map(|k| lo + (hi - lo) * k as f64 / 60.0).collect();
    points.extend((0..=8).map(|k| ctx.ki() * 0.1f64.powi(k)));
    points.extend(ctx.law.breakpoints());
    points.push(hi - h);
    let e_set = NodeSet::gauss_panels(&merge_breaks(points, lo, hi), 10);
    let (mut eaa, mut eab, mut ebb) = (0.0, 0.0, 0.0);
    for (i, wi) in e_set.iter() {
        let b = image.energy.eval(i);
        let a = image.energy.eval(i + h);
        let w = wi * ctx.law.rho(i);
        eaa += w * a * a;
        eab += w * a * b;
        ebb += w * b * b;
    }
    vaa * eaa - 2.0 * vab * eab + vbb * ebb
}
