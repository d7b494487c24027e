//! Two-temperature Maxwellian equilibria.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::energy_law::EnergyLaw;
use crate::error::{argument, Result};
use crate::kinematics::State;
use crate::mc::gaussian_vec;
use crate::Vec3;

/// Serializable equilibrium parameters; the mean velocity is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxwellianSpec {
    pub n: f64,
    pub t_k: f64,
    pub t_i: f64,
}

impl Default for MaxwellianSpec {
    fn default() -> Self {
        MaxwellianSpec {
            n: 1.0,
            t_k: 1.0,
            t_i: 1.0,
        }
    }
}

/// `M(v, I) = n/q(T_i)·(2π k_B T_k)^{−3/2}·exp(−|v−u|²/(2k_B T_k) − I/(k_B T_i))`
/// with unit molecular mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Maxwellian {
    pub n: f64,
    pub u: Vec3,
    pub t_k: f64,
    pub t_i: f64,
    pub k_b: f64,
    pub law: EnergyLaw,
    q: f64,
}

impl Maxwellian {
    pub fn new(n: f64, u: Vec3, t_k: f64, t_i: f64, k_b: f64, law: EnergyLaw) -> Result<Self> {
        if !(n >= 0.0 && n.is_finite()) {
            return Err(argument(format!("density must be finite and >= 0, got {n}")));
        }
        if !(t_k > 0.0 && t_i > 0.0 && k_b > 0.0) {
            return Err(argument("temperatures and k_B must be positive"));
        }
        if !u.iter().all(|c| c.is_finite()) {
            return Err(argument("mean velocity must be finite"));
        }
        let q = law.partition(t_i, k_b)?;
        Ok(Maxwellian {
            n,
            u,
            t_k,
            t_i,
            k_b,
            law,
            q,
        })
    }

    /// Zero-mean equilibrium with `k_B = 1`.
    pub fn centered(n: f64, t_k: f64, t_i: f64, law: EnergyLaw) -> Result<Self> {
        Self::new(n, Vec3::zeros(), t_k, t_i, 1.0, law)
    }

    pub fn from_spec(spec: &MaxwellianSpec, k_b: f64, law: EnergyLaw) -> Result<Self> {
        Self::new(spec.n, Vec3::zeros(), spec.t_k, spec.t_i, k_b, law)
    }

    pub fn with_density(&self, n: f64) -> Result<Self> {
        Self::new(n, self.u, self.t_k, self.t_i, self.k_b, self.law.clone())
    }

    /// `k_B T_k`.
    #[inline]
    pub fn kt(&self) -> f64 {
        self.k_b * self.t_k
    }

    /// `k_B T_i`.
    #[inline]
    pub fn ki(&self) -> f64 {
        self.k_b * self.t_i
    }

    /// `q(T_i)`.
    pub fn partition(&self) -> f64 {
        self.q
    }

    /// `c = n/q(T_i)·(2π k_B T_k)^{−3/2}`.
    pub fn prefactor(&self) -> f64 {
        self.n / self.q * (2.0 * PI * self.kt()).powf(-1.5)
    }

    pub fn eval(&self, v: Vec3, i: f64) -> f64 {
        if self.n == 0.0 {
            return 0.0;
        }
        self.ln_eval(v, i).exp()
    }

    /// `ln M(v, I)`; `−∞` when `n = 0`.
    pub fn ln_eval(&self, v: Vec3, i: f64) -> f64 {
        self.prefactor().ln() - (v - self.u).norm_squared() / (2.0 * self.kt()) - i / self.ki()
    }

    /// `√M(v, I)`.
    pub fn sqrt_eval(&self, v: Vec3, i: f64) -> f64 {
        if self.n == 0.0 {
            return 0.0;
        }
        (0.5 * self.ln_eval(v, i)).exp()
    }

    /// `(2π k_B T_k)^{−3/2} exp(−|v−u|²/(2k_B T_k))`.
    pub fn velocity_part(&self, v: Vec3) -> f64 {
        (2.0 * PI * self.kt()).powf(-1.5) * (-(v - self.u).norm_squared() / (2.0 * self.kt())).exp()
    }

    /// `exp(−I/(k_B T_i))/q(T_i)`, a probability density against μ.
    pub fn internal_part(&self, i: f64) -> f64 {
        (-i / self.ki()).exp() / self.q
    }

    /// One draw: Gaussian velocity, Gibbs internal energy.
    pub fn sample_one(&self, rng: &mut impl Rng) -> Result<State> {
        let v = gaussian_vec(rng, self.u, self.kt());
        let i = self.law.sample_gibbs(self.ki(), rng)?;
        Ok(State { v, i })
    }

    pub fn sample(&self, count: usize, rng: &mut impl Rng) -> Result<Vec<State>> {
        if count == 0 {
            return Err(argument("sample count must be at least 1"));
        }
        if !(self.n > 0.0) {
            return Err(argument("cannot sample a Maxwellian with zero density"));
        }
        (0..count).map(|_| self.sample_one(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn peak_value() {
        let law = EnergyLaw::power(1.0, 1.0).unwrap();
        let m = Maxwellian::centered(2.0, 1.5, 0.7, law.clone()).unwrap();
        let q = law.partition(0.7, 1.0).unwrap();
        assert_relative_eq!(
            m.eval(Vec3::zeros(), 0.0),
            2.0 / q * (2.0 * PI * 1.5f64).powf(-1.5),
            max_relative = 1e-14
        );
        let v = Vec3::new(0.3, 0.2, -1.0);
        assert_relative_eq!(m.eval(v, 1.3) / m.eval(v, 0.0), (-1.3f64 / 0.7).exp(), max_relative = 1e-13);
    }
}
