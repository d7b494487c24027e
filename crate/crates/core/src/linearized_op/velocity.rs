//! Velocity kernels `ψ_k` and `κ_k` and quadrature of `∫ h(η) κ_k(v, η) dη`.
//!
//! `ψ_k(λ, P) = 8πc ∫₀^∞ e^{−(r−λ)²/2T} e^{−rλ/T}I₀(rλ/T) b_k(√(r²+P²), ·) r/√(r²+P²) dr`
//! with `λ = |v||sin(v, p)|` and `P = |p|`, and
//! `κ_k(v, v+ρω) = e^{−ρ²/8T} e^{−(2|v|t+ρ)²/8T} ρ⁻¹ ψ_k(|v|√(1−t²), ρ)` where
//! `t = cos(v, ω)`.  The integration over `η = v + ρω` is carried out in
//! spherical coordinates centred at `v`, so the Jacobian `ρ²` absorbs the
//! `ρ⁻¹` singularity.

use std::f64::consts::{PI, TAU};

use crate::cross_section::KineticForm;
use crate::error::{Error, Result};
use crate::quad::{GaussRule, NodeSet};
use crate::special_fn::BesselConfig;
use crate::Vec3;

/// `e^{−46}` is below the double-precision resolution of every integrand here.
const GAUSS_CUT: f64 = 46.0;

/// Resolution of the `η` quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaRule {
    pub rho_order: usize,
    /// Panel width in `ρ`, in units of `√T`.
    pub rho_panel: f64,
    pub t_order: usize,
    /// Minimum number of `t` panels per unit length of `t`.
    pub t_density: f64,
    /// Trapezoid points in the azimuth.
    pub phi_points: usize,
    pub r_order: usize,
}

impl Default for EtaRule {
    fn default() -> Self {
        EtaRule {
            rho_order: 8,
            rho_panel: 1.5,
            t_order: 8,
            t_density: 2.0,
            phi_points: 32,
            r_order: 10,
        }
    }
}

impl EtaRule {
    /// A rule with roughly half the nodes in every direction, for error estimates.
    pub fn coarser(&self) -> EtaRule {
        EtaRule {
            rho_order: (self.rho_order * 3 / 4).max(4),
            rho_panel: self.rho_panel * 1.5,
            t_order: (self.t_order * 3 / 4).max(4),
            t_density: self.t_density,
            phi_points: (self.phi_points * 3 / 4).max(8),
            r_order: (self.r_order * 3 / 4).max(5),
        }
    }
}

/// One node of the `η` quadrature around `v`.
#[derive(Debug, Clone, Copy)]
pub struct EtaNode {
    pub rho: f64,
    pub t: f64,
    /// `w_ρ w_t ρ²`: the measure of the node excluding the azimuth.
    pub weight: f64,
    /// `κ_k(v, v+ρω)`.
    pub kappa: f64,
}

/// `ψ_k` and `κ_k` for one kinetic factor at kinetic temperature `T`.
#[derive(Debug, Clone)]
pub struct VelocityKernel {
    pub kinetic: KineticForm,
    pub kt: f64,
    /// Maxwellian prefactor `c`.
    pub c: f64,
    pub bessel: BesselConfig,
    pub rule: EtaRule,
}

impl VelocityKernel {
    pub fn new(kinetic: KineticForm, kt: f64, c: f64) -> Self {
        VelocityKernel {
            kinetic,
            kt,
            c,
            bessel: BesselConfig::default(),
            rule: EtaRule::default(),
        }
    }

    pub fn with_rule(mut self, rule: EtaRule) -> Self {
        self.rule = rule;
        self
    }

    /// Gauss nodes in `r` for `ψ` at `(λ, P)`, with the Gaussian factor,
    /// scaled Bessel factor and `8πc r/√(r²+P²)` folded into the weights.
    /// Each node also carries `(√(r²+P²), |r²−P²|/(r²+P²), 2rP/(r²+P²))`.
    pub(crate) fn r_nodes(&self, lambda: f64, p: f64) -> Vec<(f64, f64, f64, f64)> {
        let sd = self.kt.sqrt();
        let width = (2.0 * GAUSS_CUT).sqrt() * sd;
        let lo = (lambda - width).max(0.0);
        let hi = lambda + width;
        let mut breaks = vec![lo, hi];
        if lo == 0.0 {
            let scale = p.min(sd).max(1e-12 * sd);
            for k in 0..5 {
                breaks.push(scale * 10f64.powi(-k));
            }
            breaks.push((0.25 * p).min(hi));
            breaks.extend(crate::quad::graded_breaks(p.min(sd), sd, p.min(sd), 2.0, sd));
        }
        let mut x = lambda - 4.0 * sd;
        while x < hi {
            breaks.push(x);
            x += 2.0 * sd;
        }
        breaks.retain(|b| *b >= lo && *b <= hi);
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
        let set = NodeSet::gauss_panels(&breaks, self.rule.r_order);
        let mut out = Vec::with_capacity(set.len());
        for (r, w) in set.iter() {
            let r2 = r * r;
            let p2 = p * p;
            let sum = r2 + p2;
            let rho = sum.sqrt();
            let g = -(r - lambda).powi(2) / (2.0 * self.kt);
            let weight = w * 8.0 * PI * self.c * g.exp() * self.bessel.i0_scaled(r * lambda / self.kt) * r / rho;
            if weight == 0.0 {
                continue;
            }
            let coscos = (r2 - p2).abs() / sum;
            let sin = 2.0 * r * p / sum;
            out.push((weight, rho, coscos, sin.min(1.0)));
        }
        out
    }

    /// `ψ_k(λ, P)`.
    pub fn psi(&self, lambda: f64, p: f64) -> f64 {
        self.r_nodes(lambda, p)
            .iter()
            .map(|&(w, rho, _, sin)| w * self.kinetic.eval_sin(rho, sin))
            .sum()
    }

    /// `ψ_k(v, p)` from vectors.
    pub fn psi_vec(&self, v: Vec3, p: Vec3) -> Result<f64> {
        let pn = p.norm();
        if pn == 0.0 {
            return Err(Error::Singular("psi is singular at p = 0".into()));
        }
        Ok(self.psi(v.cross(&p).norm() / pn, pn))
    }

    /// `κ_k(v, v+ρω)` with `s = |v|`, `t = cos(v, ω)`.
    pub fn kappa_polar(&self, s: f64, t: f64, rho: f64) -> f64 {
        let lambda = s * ((1.0 - t) * (1.0 + t)).max(0.0).sqrt();
        self.gauss_factor(s, t, rho) / rho * self.psi(lambda, rho)
    }

    #[inline]
    fn gauss_factor(&self, s: f64, t: f64, rho: f64) -> f64 {
        let u = 2.0 * s * t + rho;
        (-(rho * rho + u * u) / (8.0 * self.kt)).exp()
    }

    /// `κ_k(v, η)`.
    pub fn kappa(&self, v: Vec3, eta: Vec3) -> Result<f64> {
        let p = eta - v;
        let rho = p.norm();
        if rho == 0.0 {
            return Err(Error::Singular("kappa is singular on the diagonal eta = v".into()));
        }
        let lambda = v.cross(&p).norm() / rho;
        let u2 = (eta.norm_squared() - v.norm_squared()).powi(2) / (rho * rho);
        Ok((-(rho * rho + u2) / (8.0 * self.kt)).exp() / rho * self.psi(lambda, rho))
    }

    fn rho_breaks(&self) -> Vec<f64> {
        let sd = self.kt.sqrt();
        let rho_max = (8.0 * GAUSS_CUT).sqrt() * sd;
        let mut breaks = vec![0.0, 1e-4 * sd, 1e-3 * sd, 1e-2 * sd, 0.1 * sd, 0.5 * sd];
        let mut x = 0.5 * sd + self.rule.rho_panel * sd;
        while x < rho_max {
            breaks.push(x);
            x += self.rule.rho_panel * sd;
        }
        breaks.push(rho_max);
        breaks
    }

    /// Quadrature nodes of `∫ dη` around `v` with `|v| = s`, excluding the
    /// azimuth.  `radial_support` restricts the nodes to `|η| ≤ R`.
    pub fn eta_nodes(&self, s: f64, radial_support: Option<f64>) -> Vec<EtaNode> {
        let sd = self.kt.sqrt();
        let u_cut = (8.0 * GAUSS_CUT).sqrt() * sd;
        let rho_set = NodeSet::gauss_panels(&self.rho_breaks(), self.rule.rho_order);
        let t_rule = GaussRule::of_order(self.rule.t_order);
        let mut nodes = Vec::new();
        for (rho, w_rho) in rho_set.iter() {
            let (mut t_lo, mut t_hi) = (-1.0_f64, 1.0_f64);
            if s > 0.0 {
                t_lo = t_lo.max((-u_cut - rho) / (2.0 * s));
                t_hi = t_hi.min((u_cut - rho) / (2.0 * s));
            }
            if let Some(r) = radial_support {
                if s == 0.0 {
                    if rho > r {
                        continue;
                    }
                } else {
                    t_hi = t_hi.min((r * r - s * s - rho * rho) / (2.0 * s * rho));
                    if rho < (s - r).abs() || rho > s + r {
                        continue;
                    }
                }
            }
            if t_hi <= t_lo {
                continue;
            }
            let span_u = 2.0 * s * (t_hi - t_lo);
            let panels = ((span_u / (4.0 * sd)).ceil().max(((t_hi - t_lo) * self.rule.t_density).ceil()) as usize).clamp(1, 64);
            let h = (t_hi - t_lo) / panels as f64;
            for k in 0..panels {
                let a = t_lo + k as f64 * h;
                let mid = a + 0.5 * h;
                for (x, w) in t_rule.nodes.iter().zip(&t_rule.weights) {
                    let t = mid + 0.5 * h * x;
                    let kappa = self.kappa_polar(s, t, rho);
                    if kappa == 0.0 {
                        continue;
                    }
                    nodes.push(EtaNode {
                        rho,
                        t,
                        weight: w_rho * 0.5 * h * w * rho * rho,
                        kappa,
                    });
                }
            }
        }
        nodes
    }

    /// `∫ h(η) κ_k(v, η) dη` for a general `h`, azimuth by trapezoid rule.
    pub fn apply(&self, v: Vec3, h: impl Fn(Vec3) -> f64) -> f64 {
        let s = v.norm();
        let axis = if s > 0.0 { v / s } else { Vec3::z() };
        let (e1, e2) = crate::kinematics::plane_frame(&axis);
        let n_phi = self.rule.phi_points;
        let ring: Vec<(f64, f64)> = (0..n_phi)
            .map(|k| {
                let phi = TAU * k as f64 / n_phi as f64;
                (phi.cos(), phi.sin())
            })
            .collect();
        let mut total = 0.0;
        for node in self.eta_nodes(s, None) {
            let sin = ((1.0 - node.t) * (1.0 + node.t)).max(0.0).sqrt();
            let mut acc = 0.0;
            for &(c, sn) in &ring {
                let omega = node.t * axis + sin * (c * e1 + sn * e2);
                acc += h(v + node.rho * omega);
            }
            total += node.weight * node.kappa * acc * TAU / n_phi as f64;
        }
        total
    }

    /// `∫ h(|η|) κ_k(v, η) dη` for a radial `h`, evaluated for several
    /// radial functions at once; the azimuth integrates exactly.
    pub fn apply_radial(&self, s: f64, radial_support: Option<f64>, h: impl Fn(f64, &mut [f64]), out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut buf = vec![0.0; out.len()];
        for node in self.eta_nodes(s, radial_support) {
            let r2 = s * s + node.rho * node.rho + 2.0 * s * node.rho * node.t;
            h(r2.max(0.0).sqrt(), &mut buf);
            let w = TAU * node.weight * node.kappa;
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += w * b;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{adaptive, Tolerance};

    fn psi_reference(k: &VelocityKernel, lambda: f64, p: f64) -> f64 {
        let breaks: Vec<f64> = (0..=40).map(|j| j as f64 * (lambda + 12.0) / 40.0).collect();
        let q = adaptive(&breaks, Tolerance::new(1e-300, 1e-13), |r| {
            let bes = k.bessel.i0_scaled(r * lambda / k.kt);
            let sum = r * r + p * p;
            8.0 * PI * k.c * (-(r - lambda).powi(2) / (2.0 * k.kt)).exp() * bes * k.kinetic.eval_sin(sum.sqrt(), 2.0 * r * p / sum) * r
                / sum.sqrt()
        });
        q.value
    }

    #[test]
    fn psi_matches_adaptive_reference() {
        for kinetic in [
            KineticForm::Power { exponent: 1.0 },
            KineticForm::Power { exponent: 0.0 },
            KineticForm::Interpolated { alpha: 0.5 },
        ] {
            let k = VelocityKernel::new(kinetic, 1.0, 0.0635);
            for &(lambda, p) in &[(0.0, 1.0), (0.7, 0.05), (3.0, 2.5), (12.0, 0.4), (0.2, 6.0)] {
                let a = k.psi(lambda, p);
                let b = psi_reference(&k, lambda, p);
                assert!((a - b).abs() <= 1e-9 * b.abs(), "{kinetic:?} {lambda} {p}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn kappa_is_symmetric() {
        let k = VelocityKernel::new(KineticForm::Power { exponent: 1.0 }, 1.0, 0.0635);
        let v = Vec3::new(0.3, -1.2, 0.8);
        let eta = Vec3::new(-0.5, 0.4, 2.0);
        let a = k.kappa(v, eta).unwrap();
        let b = k.kappa(eta, v).unwrap();
        assert!((a - b).abs() <= 1e-13 * a);
        assert!(k.kappa(v, v).is_err());
    }
}
