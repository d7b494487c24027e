//! Internal-energy measures `dμ(I) = ρ(I) dI` and integration against them.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_li, gamma_ui};

use crate::error::{argument, domain, Error, Result};
use crate::quad::{adaptive, exp_tail, GaussRule, Tolerance};
use crate::report::{Check, GrowthEnd, RatioCriterion, VerificationReport};

/// Shape of the density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawKind {
    /// `ρ(I) = scale · I^alpha`.
    Power {
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `ρ(I) = c · I^beta1` on `[0, 1]` and `c · I^beta2` beyond.
    TwoRegime { beta1: f64, beta2: f64, c_low: f64, c_high: f64 },
    /// Piecewise-linear through `(grid, values)`, constant `values[0]` below
    /// the first node and `values[n-1]·(I/grid[n-1])^tail_exponent` beyond
    /// the last.
    Tabulated {
        grid: Vec<f64>,
        values: Vec<f64>,
        tail_exponent: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LawSpec {
    #[serde(flatten)]
    kind: LawKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declared_beta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declared_beta2: Option<f64>,
}

/// An admissible internal-energy measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawSpec", into = "LawSpec")]
pub struct EnergyLaw {
    kind: LawKind,
    declared_beta1: f64,
    declared_beta2: f64,
}

impl TryFrom<LawSpec> for EnergyLaw {
    type Error = Error;

    fn try_from(spec: LawSpec) -> Result<Self> {
        let law = EnergyLaw::new(spec.kind)?;
        let beta1 = spec.declared_beta1.unwrap_or(law.declared_beta1);
        let beta2 = spec.declared_beta2.unwrap_or(law.declared_beta2);
        law.with_declared(beta1, beta2)
    }
}

impl From<EnergyLaw> for LawSpec {
    fn from(law: EnergyLaw) -> Self {
        LawSpec {
            kind: law.kind,
            declared_beta1: Some(law.declared_beta1),
            declared_beta2: Some(law.declared_beta2),
        }
    }
}

/// Integration domain for [`EnergyLaw::integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Finite {
        from: f64,
        to: f64,
    },
    /// `[from, ∞)` for an integrand with `|f(I)| ≤ amplitude · e^{−rate·I}`.
    Tail {
        from: f64,
        envelope: Envelope,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub amplitude: f64,
    pub rate: f64,
}

/// Value of a certified integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Quadrature error estimate on the truncated domain.
    pub error: f64,
    /// Rigorous bound on the discarded tail beyond the truncation point.
    pub remainder: f64,
}

impl EnergyLaw {
    pub fn new(kind: LawKind) -> Result<Self> {
        let (b1, b2) = match &kind {
            LawKind::Power { alpha, scale } => {
                if !(*alpha >= 0.0) || !alpha.is_finite() {
                    return Err(argument("power law needs alpha >= 0"));
                }
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(argument("power law needs scale > 0"));
                }
                (*alpha, *alpha)
            }
            LawKind::TwoRegime {
                beta1,
                beta2,
                c_low,
                c_high,
            } => {
                if !(*beta1 >= 0.0 && *beta2 >= 0.0) {
                    return Err(argument("two-regime law needs beta1, beta2 >= 0"));
                }
                if !(*c_low > 0.0 && *c_high > 0.0) {
                    return Err(argument("two-regime law needs positive constants"));
                }
                if (c_low - c_high).abs() > 1e-12 * c_low.max(*c_high) {
                    return Err(argument("two-regime law must be continuous at I = 1 (c_low = c_high)"));
                }
                (*beta1, *beta2)
            }
            LawKind::Tabulated {
                grid,
                values,
                tail_exponent,
            } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return Err(argument("tabulated law needs matching grid and values of length >= 2"));
                }
                if !(grid[0] > 0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(argument("tabulated grid must be positive and increasing"));
                }
                if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(argument("tabulated values must be finite and nonnegative"));
                }
                if !(values[0] > 0.0 && values[values.len() - 1] > 0.0) {
                    return Err(argument("tabulated end values must be positive"));
                }
                if !tail_exponent.is_finite() || *tail_exponent <= -1.0 {
                    return Err(argument("tail exponent must exceed -1"));
                }
                (0.0, tail_exponent.max(0.0))
            }
        };
        Ok(EnergyLaw {
            kind,
            declared_beta1: b1,
            declared_beta2: b2,
        })
    }

    /// `ρ(I) = scale · I^alpha`.
    pub fn power(alpha: f64, scale: f64) -> Result<Self> {
        EnergyLaw::new(LawKind::Power { alpha, scale })
    }

    /// Lebesgue measure on `[0, ∞)`.
    pub fn lebesgue() -> Self {
        EnergyLaw::power(0.0, 1.0).expect("valid")
    }

    pub fn with_declared(mut self, beta1: f64, beta2: f64) -> Result<Self> {
        if !(beta1 >= 0.0 && beta2 >= 0.0) {
            return Err(argument("declared exponents must be nonnegative"));
        }
        self.declared_beta1 = beta1;
        self.declared_beta2 = beta2;
        Ok(self)
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn declared_beta1(&self) -> f64 {
        self.declared_beta1
    }

    pub fn declared_beta2(&self) -> f64 {
        self.declared_beta2
    }

    /// True when `μ` is a multiple of Lebesgue measure.
    pub fn is_lebesgue(&self) -> bool {
        matches!(self.kind, LawKind::Power { alpha, .. } if alpha == 0.0)
    }

    /// `dμ/dI`.
    pub fn density(&self, i: f64) -> Result<f64> {
        if !(i >= 0.0) {
            return Err(domain(format!("density at negative energy {i}")));
        }
        Ok(self.rho(i))
    }

    /// `dμ/dI` without validation; `I ≥ 0` is the caller's contract.
    #[inline]
    pub fn rho(&self, i: f64) -> f64 {
        match &self.kind {
            LawKind::Power { alpha, scale } => {
                if *alpha == 0.0 {
                    *scale
                } else {
                    scale * i.powf(*alpha)
                }
            }
            LawKind::TwoRegime { beta1, beta2, c_low, .. } => {
                if i <= 1.0 {
                    c_low * i.powf(*beta1)
                } else {
                    c_low * i.powf(*beta2)
                }
            }
            LawKind::Tabulated {
                grid,
                values,
                tail_exponent,
            } => {
                let n = grid.len();
                if i <= grid[0] {
                    values[0]
                } else if i >= grid[n - 1] {
                    values[n - 1] * (i / grid[n - 1]).powf(*tail_exponent)
                } else {
                    let k = grid.partition_point(|g| *g <= i) - 1;
                    let t = (i - grid[k]) / (grid[k + 1] - grid[k]);
                    values[k] + t * (values[k + 1] - values[k])
                }
            }
        }
    }

    /// Points where the density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            LawKind::Power { .. } => Vec::new(),
            LawKind::TwoRegime { .. } => vec![1.0],
            LawKind::Tabulated { grid, .. } => grid.clone(),
        }
    }

    /// `μ[0, E]`.
    pub fn mass(&self, e: f64) -> Result<f64> {
        if !e.is_finite() {
            return Err(domain("mass of a non-finite interval"));
        }
        if e < 0.0 {
            return Err(domain(format!("mass at negative energy {e}")));
        }
        Ok(self.mass_unchecked(e))
    }

    pub(crate) fn mass_unchecked(&self, e: f64) -> f64 {
        match &self.kind {
            LawKind::Power { alpha, scale } => scale * e.powf(alpha + 1.0) / (alpha + 1.0),
            LawKind::TwoRegime { beta1, beta2, c_low, .. } => {
                if e <= 1.0 {
                    c_low * e.powf(beta1 + 1.0) / (beta1 + 1.0)
                } else {
                    c_low / (beta1 + 1.0) + c_low * (e.powf(beta2 + 1.0) - 1.0) / (beta2 + 1.0)
                }
            }
            LawKind::Tabulated {
                grid,
                values,
                tail_exponent,
            } => {
                let n = grid.len();
                if e <= grid[0] {
                    return values[0] * e;
                }
                let mut m = values[0] * grid[0];
                for k in 0..n - 1 {
                    let (a, b) = (grid[k], grid[k + 1]);
                    if e <= a {
                        break;
                    }
                    let top = e.min(b);
                    let vt = self.rho(top);
                    m += 0.5 * (values[k] + vt) * (top - a);
                }
                if e > grid[n - 1] {
                    let (g, v, p) = (grid[n - 1], values[n - 1], *tail_exponent);
                    m += v * g * ((e / g).powf(p + 1.0) - 1.0) / (p + 1.0);
                }
                m
            }
        }
    }

    /// Smallest `E` with `μ[0, E] ≥ m`.
    pub fn inverse_mass(&self, m: f64) -> Result<f64> {
        if !(m >= 0.0) || !m.is_finite() {
            return Err(domain("inverse mass needs a finite nonnegative mass"));
        }
        if m == 0.0 {
            return Ok(0.0);
        }
        if let LawKind::Power { alpha, scale } = self.kind {
            return Ok(((alpha + 1.0) * m / scale).powf(1.0 / (alpha + 1.0)));
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.mass_unchecked(hi) < m {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return Err(domain("mass not attained"));
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = self.mass_unchecked(x) - m;
            if f.abs() <= 1e-15 * m {
                break;
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.rho(x);
            let newton = x - f / d;
            x = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(x)
    }

    /// `ρ(I) ≤ Σ coef·I^power` for every `I ≥ 0`.
    fn dominating_powers(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            LawKind::Power { alpha, scale } => vec![(*scale, *alpha)],
            LawKind::TwoRegime { beta1, beta2, c_low, .. } => vec![(*c_low, *beta1), (*c_low, *beta2)],
            LawKind::Tabulated {
                grid,
                values,
                tail_exponent,
            } => {
                let vmax = values.iter().cloned().fold(0.0, f64::max);
                let (g, v) = (grid[grid.len() - 1], values[values.len() - 1]);
                if *tail_exponent > 0.0 {
                    vec![(vmax, 0.0), (v / g.powf(*tail_exponent), *tail_exponent)]
                } else {
                    vec![(vmax, 0.0)]
                }
            }
        }
    }

    /// Power-law form `ρ(I) = coef·I^power` valid for `I ≥ from`, if any.
    fn tail_power(&self, from: f64) -> Option<(f64, f64)> {
        match &self.kind {
            LawKind::Power { alpha, scale } => Some((*scale, *alpha)),
            LawKind::TwoRegime { beta2, c_low, .. } if from >= 1.0 => Some((*c_low, *beta2)),
            LawKind::Tabulated {
                grid,
                values,
                tail_exponent,
            } if from >= grid[grid.len() - 1] => {
                let (g, v) = (grid[grid.len() - 1], values[values.len() - 1]);
                Some((v / g.powf(*tail_exponent), *tail_exponent))
            }
            _ => None,
        }
    }

    /// `∫_X^∞ A e^{−rI} dμ(I)` for `X` inside the power-law tail.
    pub fn exp_tail_mass(&self, x: f64, envelope: Envelope) -> f64 {
        let (coef, p) = self
            .tail_power(x)
            .expect("exp_tail_mass needs the truncation point inside the power tail");
        let r = envelope.rate;
        envelope.amplitude * coef * gamma_ui(p + 1.0, r * x) / r.powf(p + 1.0)
    }

    /// `∫ f dμ` over `domain` with relative tolerance `tol`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, domain: Domain, tol: f64) -> Result<f64> {
        Ok(self.integrate_certified(f, domain, tol)?.value)
    }

    /// `∫ f dμ` with an error estimate and, for unbounded domains, a rigorous
    /// bound on the truncated tail.
    pub fn integrate_certified(&self, f: impl Fn(f64) -> f64, domain: Domain, tol: f64) -> Result<Integral> {
        self.integrate_dyn(&f, domain, tol)
    }

    fn integrate_dyn(&self, f: &dyn Fn(f64) -> f64, domain: Domain, tol: f64) -> Result<Integral> {
        let tolerance = Tolerance::new(1e-300, tol).with_max_intervals(2000);
        match domain {
            Domain::Finite { from, to } => {
                if !(from >= 0.0) || !(to >= from) || !to.is_finite() {
                    return Err(domain_err(from, to));
                }
                let breaks = self.segment_breaks(from, to);
                let q = adaptive(&breaks, tolerance, |i| f(i) * self.rho(i));
                if !q.converged {
                    return Err(Error::Convergence {
                        estimate: q.value,
                        error: q.error,
                    });
                }
                Ok(Integral {
                    value: q.value,
                    error: q.error,
                    remainder: 0.0,
                })
            }
            Domain::Tail { from, envelope } => {
                if !(from >= 0.0) || !from.is_finite() {
                    return Err(domain_err(from, f64::INFINITY));
                }
                if !(envelope.rate > 0.0) || !(envelope.amplitude >= 0.0) {
                    return Err(argument("exponential envelope needs positive rate"));
                }
                // the truncation point sits beyond every breakpoint
                let last_break = self.breakpoints().last().copied().unwrap_or(0.0).max(from);
                let mut cutoff = last_break.max(from) + 40.0 / envelope.rate;
                let body_scale = |value: f64| value.abs().max(1e-300);
                let mut head = self.integrate_dyn(f, Domain::Finite { from, to: last_break }, tol)?;
                if last_break == from {
                    head = Integral {
                        value: 0.0,
                        error: 0.0,
                        remainder: 0.0,
                    };
                }
                loop {
                    let body = exp_tail(last_break, 1.0 / envelope.rate, cutoff, tolerance, |i| f(i) * self.rho(i));
                    if !body.converged {
                        return Err(Error::Convergence {
                            estimate: head.value + body.value,
                            error: body.error,
                        });
                    }
                    let value = head.value + body.value;
                    let remainder = self.exp_tail_mass(cutoff, envelope);
                    if remainder <= tol * body_scale(value) || cutoff > 1e6 / envelope.rate {
                        return Ok(Integral {
                            value,
                            error: head.error + body.error,
                            remainder,
                        });
                    }
                    cutoff += 40.0 / envelope.rate;
                }
            }
        }
    }

    fn segment_breaks(&self, from: f64, to: f64) -> Vec<f64> {
        let mut breaks = vec![from];
        breaks.extend(self.breakpoints().into_iter().filter(|b| *b > from && *b < to));
        breaks.push(to);
        breaks
    }

    /// `q(T) = ∫ e^{−I/(k_B T)} dμ(I)`.
    pub fn partition(&self, t: f64, k_b: f64) -> Result<f64> {
        if !(t > 0.0) || !(k_b > 0.0) {
            return Err(domain("partition function needs T > 0 and k_B > 0"));
        }
        let kt = k_b * t;
        Ok(match &self.kind {
            LawKind::Power { alpha, scale } => scale * gamma(alpha + 1.0) * kt.powf(alpha + 1.0),
            LawKind::TwoRegime { beta1, beta2, c_low, .. } => {
                let x = 1.0 / kt;
                c_low * kt.powf(beta1 + 1.0) * gamma_li(beta1 + 1.0, x) + c_low * kt.powf(beta2 + 1.0) * gamma_ui(beta2 + 1.0, x)
            }
            LawKind::Tabulated { .. } => self.integrate(
                |i| (-i / kt).exp(),
                Domain::Tail {
                    from: 0.0,
                    envelope: Envelope {
                        amplitude: 1.0,
                        rate: 1.0 / kt,
                    },
                },
                1e-12,
            )?,
        })
    }

    /// Draw `I` with density proportional to `e^{−I/kT} ρ(I)`: exact Gamma
    /// draws for power laws and rejection from a Gamma mixture otherwise.
    pub fn sample_gibbs(&self, kt: f64, rng: &mut impl Rng) -> Result<f64> {
        if let LawKind::Power { alpha, .. } = self.kind {
            let g = Gamma::new(alpha + 1.0, kt).map_err(|e| argument(e.to_string()))?;
            return Ok(g.sample(rng));
        }
        let powers = self.dominating_powers();
        let weights: Vec<f64> = powers.iter().map(|(c, p)| c * gamma(p + 1.0) * kt.powf(p + 1.0)).collect();
        let total: f64 = weights.iter().sum();
        let components: Vec<Gamma<f64>> = powers.iter().map(|(_, p)| Gamma::new(p + 1.0, kt).expect("valid gamma")).collect();
        const BUDGET: u64 = 10_000;
        for _ in 0..BUDGET {
            let mut u: f64 = rng.random::<f64>() * total;
            let mut k = 0;
            while k + 1 < weights.len() && u > weights[k] {
                u -= weights[k];
                k += 1;
            }
            let i = components[k].sample(rng);
            let envelope: f64 = powers.iter().map(|(c, p)| c * i.powf(*p)).sum();
            if envelope <= 0.0 {
                continue;
            }
            let accept: f64 = rng.random();
            if accept * envelope <= self.rho(i) {
                return Ok(i);
            }
        }
        Err(Error::Sampling { attempts: BUDGET })
    }

    /// Draw `I′ ∈ [0, E]` uniform in `μ`, by inverting the cumulative mass.
    pub fn sample_uniform_in(&self, e: f64, u: f64) -> f64 {
        let m = self.mass_unchecked(e);
        match self.kind {
            LawKind::Power { alpha, .. } => e * u.powf(1.0 / (alpha + 1.0)),
            _ => self.inverse_mass(u * m).unwrap_or(e).min(e),
        }
    }

    /// Empirical admissibility test on `grid`, which must reach below and
    /// above `I = 1`.  Reports the bands of `ρ/I^β₁` on `(0, 1]`, `ρ/I^β₂` on
    /// `[1, ∞)`, and of `I^{β₂−a}/ρ` for each `a`.
    pub fn admissibility_check(&self, a_values: &[f64], grid: &[f64]) -> Result<VerificationReport> {
        if grid.is_empty() {
            return Err(argument("admissibility check needs a nonempty grid"));
        }
        if a_values.iter().any(|a| !(*a > 0.0)) {
            return Err(argument("a values must be positive"));
        }
        let low: Vec<f64> = grid.iter().cloned().filter(|i| *i > 0.0 && *i <= 1.0).collect();
        let high: Vec<f64> = grid.iter().cloned().filter(|i| *i >= 1.0).collect();
        if low.is_empty() || high.is_empty() {
            return Err(argument("grid must cover both (0, 1] and [1, I_max]"));
        }
        let (b1, b2) = (self.declared_beta1, self.declared_beta2);
        let cap = 1e12;
        let mut report = VerificationReport::new("admissibility");
        let mut band = |name: String, xs: &[f64], vals: Vec<f64>, end: GrowthEnd| {
            let verdict = RatioCriterion::bounded(cap).strictly_positive().at_end(end).evaluate(xs, &vals);
            report.push(Check::ratio(name, verdict.max, cap, verdict.pass).with_detail(verdict.describe()));
            verdict
        };
        let r1: Vec<f64> = low.iter().map(|i| self.rho(*i) / i.powf(b1)).collect();
        let inv1: Vec<f64> = r1.iter().map(|r| 1.0 / r).collect();
        band("upper band rho/I^beta1 on (0,1]".into(), &low, r1, GrowthEnd::Lower);
        band("lower band I^beta1/rho on (0,1]".into(), &low, inv1, GrowthEnd::Lower);
        let r2: Vec<f64> = high.iter().map(|i| self.rho(*i) / i.powf(b2)).collect();
        band("upper band rho/I^beta2 on [1,inf)".into(), &high, r2, GrowthEnd::Upper);
        for &a in a_values {
            let inv: Vec<f64> = high.iter().map(|i| i.powf(b2 - a) / self.rho(*i)).collect();
            band(
                format!("lower band I^(beta2-a)/rho on [1,inf), a={a}"),
                &high,
                inv,
                GrowthEnd::Upper,
            );
        }
        Ok(report)
    }

    /// Integral of `f(I)·ρ(I)` on `[0, E]` with a fixed Gauss rule on
    /// panels graded geometrically toward zero; used in hot loops.
    pub(crate) fn gauss_mass_weighted(&self, e: f64, order: usize, f: impl Fn(f64) -> f64) -> f64 {
        let rule = GaussRule::of_order(order);
        let mut sum = 0.0;
        let mut hi = e;
        for _ in 0..5 {
            let lo = 0.1 * hi;
            sum += rule.integrate(lo, hi, |i| f(i) * self.rho(i));
            hi = lo;
        }
        sum + rule.integrate(0.0, hi, |i| f(i) * self.rho(i))
    }
}

fn domain_err(from: f64, to: f64) -> Error {
    domain(format!("invalid integration domain [{from}, {to}]"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_law_closed_forms() {
        let law = EnergyLaw::power(0.5, 1.0).unwrap();
        assert_eq!(law.density(4.0).unwrap(), 2.0);
        assert!(law.density(-1.0).is_err());
        let law1 = EnergyLaw::power(1.0, 1.0).unwrap();
        assert_relative_eq!(law1.mass(1.0).unwrap(), 0.5);
        assert_relative_eq!(law1.partition(2.0, 1.0).unwrap(), 4.0, max_relative = 1e-14);
    }

    #[test]
    fn two_regime_rejects_discontinuity() {
        let bad = EnergyLaw::new(LawKind::TwoRegime {
            beta1: 0.0,
            beta2: 1.0,
            c_low: 1.0,
            c_high: 2.0,
        });
        assert!(bad.is_err());
    }

    #[test]
    fn two_regime_mass_and_partition_match_quadrature() {
        let law = EnergyLaw::new(LawKind::TwoRegime {
            beta1: 0.5,
            beta2: 1.5,
            c_low: 2.0,
            c_high: 2.0,
        })
        .unwrap();
        let m = law.integrate(|_| 1.0, Domain::Finite { from: 0.0, to: 3.0 }, 1e-12).unwrap();
        assert_relative_eq!(law.mass(3.0).unwrap(), m, max_relative = 1e-10);
        let q = law
            .integrate(
                |i| (-i / 1.5).exp(),
                Domain::Tail {
                    from: 0.0,
                    envelope: Envelope {
                        amplitude: 1.0,
                        rate: 1.0 / 1.5,
                    },
                },
                1e-12,
            )
            .unwrap();
        assert_relative_eq!(law.partition(1.5, 1.0).unwrap(), q, max_relative = 1e-9);
    }

    #[test]
    fn inverse_mass_roundtrip() {
        let law = EnergyLaw::new(LawKind::Tabulated {
            grid: vec![0.5, 1.0, 2.0, 4.0],
            values: vec![1.0, 1.5, 1.2, 2.0],
            tail_exponent: 0.5,
        })
        .unwrap();
        for e in [0.1, 0.7, 1.9, 3.3, 10.0] {
            let m = law.mass(e).unwrap();
            assert_relative_eq!(law.inverse_mass(m).unwrap(), e, max_relative = 1e-12);
        }
    }

    #[test]
    fn tabulated_mass_matches_trapezoid_oracle() {
        let law = EnergyLaw::new(LawKind::Tabulated {
            grid: vec![0.5, 1.0, 2.0, 4.0],
            values: vec![1.0, 1.5, 1.2, 2.0],
            tail_exponent: 0.5,
        })
        .unwrap();
        // composite trapezoid on a fine uniform grid that contains every node
        let trapezoid = |e: f64| {
            let n = 400_000;
            let h = e / n as f64;
            let sum: f64 = (1..n).map(|k| law.rho(k as f64 * h)).sum();
            h * (sum + 0.5 * (law.rho(0.0) + law.rho(e)))
        };
        for e in [0.3, 1.5, 4.0, 6.0] {
            assert_relative_eq!(law.mass(e).unwrap(), trapezoid(e), max_relative = 1e-8);
        }
    }

    #[test]
    fn certified_tail_remainder_is_small() {
        let law = EnergyLaw::lebesgue();
        let r = law
            .integrate_certified(
                |i| (-i).exp(),
                Domain::Tail {
                    from: 0.0,
                    envelope: Envelope { amplitude: 1.0, rate: 1.0 },
                },
                1e-12,
            )
            .unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-10);
        assert!(r.remainder < 1e-12);
    }
}
