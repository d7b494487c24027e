//! Structured verification records and the bounded-ratio criterion.

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// One verified quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    /// Error bar (Monte Carlo standard error or quadrature estimate), if any.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<f64>,
    /// Empirical ratio for envelope-type checks.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ratio: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub detail: String,
}

impl Check {
    /// `|estimate − expected| ≤ tolerance`.
    pub fn close(name: impl Into<String>, estimate: f64, expected: f64, error: Option<f64>, tolerance: f64) -> Check {
        let pass = (estimate - expected).abs() <= tolerance;
        Check {
            name: name.into(),
            estimate,
            error,
            ratio: None,
            tolerance,
            pass,
            detail: format!("expected {expected:.12e}, deviation {:.3e}", (estimate - expected).abs()),
        }
    }

    /// `estimate ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, estimate: f64, tolerance: f64) -> Check {
        Check {
            name: name.into(),
            estimate,
            error: None,
            ratio: None,
            tolerance,
            pass: estimate <= tolerance,
            detail: String::new(),
        }
    }

    /// An empirical ratio with an externally decided verdict.
    pub fn ratio(name: impl Into<String>, ratio: f64, cap: f64, pass: bool) -> Check {
        Check {
            name: name.into(),
            estimate: ratio,
            error: None,
            ratio: Some(ratio),
            tolerance: cap,
            pass,
            detail: String::new(),
        }
    }

    /// A boolean property with a numeric witness.
    pub fn flag(name: impl Into<String>, witness: f64, tolerance: f64, pass: bool) -> Check {
        Check {
            name: name.into(),
            estimate: witness,
            error: None,
            ratio: None,
            tolerance,
            pass,
            detail: String::new(),
        }
    }

    pub fn with_error(mut self, error: f64) -> Check {
        self.error = Some(error);
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Check {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub timestamp_unix: u64,
    pub wall_time_s: f64,
}

/// Pass/fail record of a suite.  Overall `pass` is the conjunction of every
/// check and every nested suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub suite: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub pass: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub suites: Vec<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timing: Option<Timing>,
}

impl VerificationReport {
    pub fn new(suite: impl Into<String>) -> Self {
        VerificationReport {
            schema_version: SCHEMA_VERSION,
            suite: suite.into(),
            seed: None,
            pass: true,
            checks: Vec::new(),
            suites: Vec::new(),
            timing: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn push(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    /// Append the checks of another report, prefixing their names.
    pub fn absorb(&mut self, prefix: &str, other: VerificationReport) {
        for mut check in other.checks {
            check.name = format!("{prefix}: {}", check.name);
            self.push(check);
        }
        for nested in other.suites {
            self.pass &= nested.pass;
            self.suites.push(nested);
        }
    }

    pub fn nest(&mut self, other: VerificationReport) {
        self.pass &= other.pass;
        self.suites.push(other);
    }

    /// Every check of this report and its nested suites, depth first.
    pub fn all_checks(&self) -> Vec<&Check> {
        let mut out: Vec<&Check> = self.checks.iter().collect();
        for s in &self.suites {
            out.extend(s.all_checks());
        }
        out
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.all_checks().into_iter().filter(|c| !c.pass).collect()
    }

    /// Recompute `pass` from the leaves.
    pub fn recompute(&mut self) -> bool {
        let mut pass = self.checks.iter().all(|c| c.pass);
        for s in &mut self.suites {
            pass &= s.recompute();
        }
        self.pass = pass;
        pass
    }

    /// Clear timing information recursively, leaving only reproducible content.
    pub fn without_timing(mut self) -> Self {
        self.timing = None;
        self.suites = self.suites.into_iter().map(|s| s.without_timing()).collect();
        self
    }
}

/// Which end of the grid the "no growth" condition is examined at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrowthEnd {
    /// Largest abscissae (behaviour as `x → ∞`).
    Upper,
    /// Smallest abscissae (behaviour as `x → 0`).
    Lower,
    /// Both ends.
    Both,
}

/// Bounded-ratio criterion: every value finite, positive and below `cap`,
/// and no growth trend over the last decade of abscissae at the watched end.
/// A growth trend means strictly increasing values (toward that end) whose
/// total increase across the decade exceeds `growth_factor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioCriterion {
    pub cap: f64,
    pub growth_factor: f64,
    pub end: GrowthEnd,
    /// Zero values are tolerated (the ratio of a vanishing quantity).
    pub allow_zero: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioVerdict {
    pub max: f64,
    pub min: f64,
    pub growth: f64,
    pub finite: bool,
    pub trend: bool,
    pub pass: bool,
}

impl RatioVerdict {
    pub fn describe(&self) -> String {
        format!(
            "max {:.6e}, min {:.6e}, final-decade growth {:.4}{}",
            self.max,
            self.min,
            self.growth,
            if self.trend { " (growth trend)" } else { "" }
        )
    }
}

impl RatioCriterion {
    pub const fn bounded(cap: f64) -> Self {
        RatioCriterion {
            cap,
            growth_factor: 1.5,
            end: GrowthEnd::Both,
            allow_zero: true,
        }
    }

    pub const fn at_end(mut self, end: GrowthEnd) -> Self {
        self.end = end;
        self
    }

    pub const fn strictly_positive(mut self) -> Self {
        self.allow_zero = false;
        self
    }

    /// Evaluate the criterion on a profile `values[k]` at abscissae `xs[k]`.
    pub fn evaluate(&self, xs: &[f64], values: &[f64]) -> RatioVerdict {
        assert_eq!(xs.len(), values.len());
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
        let xs: Vec<f64> = order.iter().map(|&k| xs[k]).collect();
        let vs: Vec<f64> = order.iter().map(|&k| values[k]).collect();
        let max = vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = vs.iter().cloned().fold(f64::INFINITY, f64::min);
        let finite = !vs.is_empty() && vs.iter().all(|v| v.is_finite() && (*v > 0.0 || (self.allow_zero && *v == 0.0))) && max < self.cap;
        let (up_trend, up_growth) = growth_toward_upper(&xs, &vs, self.growth_factor);
        let (low_trend, low_growth) = growth_toward_lower(&xs, &vs, self.growth_factor);
        let (trend, growth) = match self.end {
            GrowthEnd::Upper => (up_trend, up_growth),
            GrowthEnd::Lower => (low_trend, low_growth),
            GrowthEnd::Both => (up_trend || low_trend, up_growth.max(low_growth)),
        };
        RatioVerdict {
            max,
            min,
            growth,
            finite,
            trend,
            pass: finite && !trend,
        }
    }
}

fn growth_toward_upper(xs: &[f64], vs: &[f64], factor: f64) -> (bool, f64) {
    let Some(&last) = xs.last() else { return (false, 1.0) };
    let start = if last > 0.0 { last / 10.0 } else { last - 1.0 };
    let idx: Vec<usize> = (0..xs.len()).filter(|&k| xs[k] >= start).collect();
    decade_trend(&idx.iter().map(|&k| vs[k]).collect::<Vec<_>>(), factor)
}

fn growth_toward_lower(xs: &[f64], vs: &[f64], factor: f64) -> (bool, f64) {
    let Some(&first) = xs.first() else { return (false, 1.0) };
    let end = if first > 0.0 { first * 10.0 } else { first + 1.0 };
    let mut seq: Vec<f64> = (0..xs.len()).filter(|&k| xs[k] <= end).map(|k| vs[k]).collect();
    seq.reverse();
    decade_trend(&seq, factor)
}

/// `seq` is ordered toward the watched end.
fn decade_trend(seq: &[f64], factor: f64) -> (bool, f64) {
    if seq.len() < 2 {
        return (false, 1.0);
    }
    let first = seq[0];
    let last = seq[seq.len() - 1];
    let growth = if first > 0.0 {
        last / first
    } else if last > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    let increasing = seq.windows(2).all(|w| w[1] > w[0]);
    (increasing && growth > factor, growth)
}

/// Log-spaced grid of `count` points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_is_conjunction() {
        let mut r = VerificationReport::new("t");
        r.push(Check::at_most("a", 1.0, 2.0));
        assert!(r.pass);
        r.push(Check::at_most("b", 3.0, 2.0));
        assert!(!r.pass);
        assert_eq!(r.failures().len(), 1);
    }

    #[test]
    fn growth_trend_detection() {
        let xs = log_grid(1e-6, 1.0, 25);
        let decaying: Vec<f64> = xs.iter().map(|x| x.powf(-1.5)).collect();
        let c = RatioCriterion::bounded(1e12);
        let v = c.evaluate(&xs, &decaying);
        assert!(v.finite && v.trend && !v.pass);
        let flat: Vec<f64> = xs.iter().map(|_| 3.0).collect();
        assert!(c.evaluate(&xs, &flat).pass);
        let saturating: Vec<f64> = xs.iter().map(|x| x / (1e-3 + x)).collect();
        assert!(c.at_end(GrowthEnd::Upper).evaluate(&xs, &saturating).pass);
    }

    #[test]
    fn report_roundtrips_through_json() {
        let mut r = VerificationReport::new("x").with_seed(3);
        r.push(Check::close("c", 1.0, 1.0, Some(0.1), 0.3));
        let text = serde_json::to_string(&r).unwrap();
        let back: VerificationReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
