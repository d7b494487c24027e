//! Resonant collision rules and the `(z, A)` parametrisation of pairs of
//! unit vectors.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::error::{argument, domain, Error, Result};
use crate::mc::{estimate, estimate_vec, uniform_ball, uniform_sphere, Estimate, MonteCarloConfig};
use crate::Vec3;

const UNIT_TOL: f64 = 1e-12;

/// Velocity and internal energy of one molecule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub v: Vec3,
    pub i: f64,
}

impl State {
    pub fn new(v: Vec3, i: f64) -> Result<Self> {
        if !(i >= 0.0) || !i.is_finite() {
            return Err(domain(format!("internal energy must be finite and >= 0, got {i}")));
        }
        if !v.iter().all(|c| c.is_finite()) {
            return Err(domain("velocity must be finite"));
        }
        Ok(State { v, i })
    }
}

/// Free parameters of one collision: scattering direction and the
/// post-collision internal energy of the first molecule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionParams {
    pub sigma: Vec3,
    pub i_prime: f64,
}

/// Midpoint `z = (Θ+σ)/2` of two unit vectors and the circle angle `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZAPoint {
    pub z: Vec3,
    pub a: f64,
}

fn check_unit(sigma: &Vec3, what: &str) -> Result<()> {
    if (sigma.norm() - 1.0).abs() > UNIT_TOL {
        return Err(argument(format!("{what} must be a unit vector (|{what}| = {})", sigma.norm())));
    }
    Ok(())
}

/// `v′ = (v+v*)/2 + |v−v*|σ/2`, `v′* = (v+v*)/2 − |v−v*|σ/2`.
pub fn post_velocities(v: Vec3, v_star: Vec3, sigma: Vec3) -> Result<(Vec3, Vec3)> {
    check_unit(&sigma, "sigma")?;
    Ok(post_velocities_unchecked(v, v_star, sigma))
}

#[inline]
pub(crate) fn post_velocities_unchecked(v: Vec3, v_star: Vec3, sigma: Vec3) -> (Vec3, Vec3) {
    let centre = 0.5 * (v + v_star);
    let half = 0.5 * (v - v_star).norm();
    (centre + half * sigma, centre - half * sigma)
}

/// `I′* = I + I* − I′`.
pub fn post_energies(i: f64, i_star: f64, i_prime: f64) -> Result<f64> {
    let total = i + i_star;
    if !(i >= 0.0 && i_star >= 0.0) {
        return Err(domain("pre-collision energies must be nonnegative"));
    }
    if !(i_prime >= 0.0 && i_prime <= total) {
        return Err(domain(format!("I' = {i_prime} outside [0, {total}]")));
    }
    Ok((total - i_prime).max(0.0))
}

/// Absolute residuals of momentum (norm), kinetic energy and internal
/// energy across one collision.
pub fn conservation_residuals(pre: (State, State), params: CollisionParams) -> Result<(f64, f64, f64)> {
    let (a, b) = pre;
    let (va, vb) = post_velocities(a.v, b.v, params.sigma)?;
    let ib = post_energies(a.i, b.i, params.i_prime)?;
    let momentum = ((va + vb) - (a.v + b.v)).norm();
    let kinetic = ((va.norm_squared() + vb.norm_squared()) - (a.v.norm_squared() + b.v.norm_squared())).abs();
    let internal = ((params.i_prime + ib) - (a.i + b.i)).abs();
    Ok((momentum, kinetic, internal))
}

/// Orthonormal basis of the plane `z⊥`: Gram–Schmidt of the coordinate axis
/// least aligned with `z`, then the cross product.
pub fn plane_frame(z: &Vec3) -> (Vec3, Vec3) {
    let u = z.normalize();
    let abs = u.abs();
    let axis = if abs.x <= abs.y && abs.x <= abs.z {
        Vec3::x()
    } else if abs.y <= abs.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let e1 = (axis - axis.dot(&u) * u).normalize();
    let e2 = u.cross(&e1);
    (e1, e2)
}

/// `(Θ, σ) ↦ (z, A)`.
pub fn za_forward(theta: Vec3, sigma: Vec3) -> Result<ZAPoint> {
    check_unit(&theta, "Theta")?;
    check_unit(&sigma, "sigma")?;
    if (theta - sigma).norm() <= UNIT_TOL || (theta + sigma).norm() <= UNIT_TOL {
        return Err(Error::Degenerate("sigma = ±Theta has no (z, A) image".into()));
    }
    let z = 0.5 * (theta + sigma);
    let perp = 0.5 * (theta - sigma);
    let (e1, e2) = plane_frame(&z);
    let a = perp.dot(&e2).atan2(perp.dot(&e1)).rem_euclid(TAU);
    Ok(ZAPoint { z, a })
}

/// `(z, A) ↦ (Θ, σ) = (z + z^{⊥A}, z − z^{⊥A})`.
pub fn za_inverse(p: ZAPoint) -> Result<(Vec3, Vec3)> {
    let r = p.z.norm();
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Degenerate(format!("|z| = {r} outside (0, 1)")));
    }
    let (e1, e2) = plane_frame(&p.z);
    let radius = ((1.0 - r) * (1.0 + r)).sqrt();
    let perp = radius * (p.a.cos() * e1 + p.a.sin() * e2);
    Ok((p.z + perp, p.z - perp))
}

/// Jacobian `4/|z|` of the `(z, A)` change of variables.
pub fn za_jacobian(z: Vec3) -> Result<f64> {
    let r = z.norm();
    if r == 0.0 {
        return Err(Error::Singular("Jacobian 4/|z| is singular at z = 0".into()));
    }
    if !(r <= 1.0) {
        return Err(domain(format!("|z| = {r} exceeds 1")));
    }
    Ok(4.0 / r)
}

/// Area `2π(2 − 2r²)` of `{σ ∈ S² : e₃·σ > 2r² − 1}`.
pub fn sphere_cap_area(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(domain(format!("cap parameter r = {r} outside (0, 1)")));
    }
    Ok(TAU * (2.0 - 2.0 * r * r))
}

/// Monte Carlo estimate of `S(r) = ∬ 1{|Θ+σ|/2 ≤ r} dΘ dσ` over `(S²)²`.
pub fn midpoint_ball_measure(r: f64, mc: &MonteCarloConfig) -> Result<Estimate> {
    let e = estimate(mc, |d| {
        let theta = uniform_sphere(d.rng);
        let sigma = uniform_sphere(d.rng);
        f64::from(u8::from(0.5 * (theta + sigma).norm() <= r))
    })?;
    Ok(e.scaled(16.0 * PI * PI))
}

/// Monte Carlo estimate of the cap area at parameter `r`.
pub fn cap_area_estimate(r: f64, mc: &MonteCarloConfig) -> Result<Estimate> {
    let threshold = 2.0 * r * r - 1.0;
    let e = estimate(mc, |d| f64::from(u8::from(uniform_sphere(d.rng).z > threshold)))?;
    Ok(e.scaled(4.0 * PI))
}

/// Both sides of `∬ F dΘ dσ = ∫_B ∫_{S¹} F(Θ(z,A), σ(z,A)) 4|z|⁻¹ dA dz`,
/// each by independent Monte Carlo.
pub fn pushforward_estimates<F>(f: F, mc: &MonteCarloConfig) -> Result<(Estimate, Estimate)>
where
    F: Fn(Vec3, Vec3) -> f64 + Sync,
{
    let direct = estimate(mc, |d| {
        let theta = uniform_sphere(d.rng);
        let sigma = uniform_sphere(d.rng);
        f(theta, sigma)
    })?
    .scaled(16.0 * PI * PI);
    let volume = 4.0 * PI / 3.0 * TAU;
    let mapped = estimate(&mc.derived(0x5a), |d| {
        let z = uniform_ball(d.rng);
        let a = d.rng.random::<f64>() * TAU;
        match za_inverse(ZAPoint { z, a }) {
            Ok((theta, sigma)) => f(theta, sigma) * 4.0 / z.norm(),
            Err(_) => 0.0,
        }
    })?
    .scaled(volume);
    Ok((direct, mapped))
}

/// Largest conservation residuals over `count` random collisions.
pub fn max_residuals(count: u64, mc: &MonteCarloConfig) -> Result<(f64, f64, f64)> {
    let cfg = mc.with_samples(count);
    // the maximum is carried through the mean accumulator shard by shard
    let maxima = std::sync::Mutex::new((0.0_f64, 0.0_f64, 0.0_f64));
    let failures = std::sync::atomic::AtomicU64::new(0);
    estimate_vec::<1, _>(&cfg, |d| {
        let scale = 1.0 + 4.0 * d.rng.random::<f64>();
        let va = crate::mc::gaussian_vec(d.rng, Vec3::zeros(), scale);
        let vb = crate::mc::gaussian_vec(d.rng, Vec3::zeros(), scale);
        let ia = 3.0 * d.rng.random::<f64>();
        let ib = 3.0 * d.rng.random::<f64>();
        let sigma = uniform_sphere(d.rng);
        let i_prime = d.rng.random::<f64>() * (ia + ib);
        let pre = (State { v: va, i: ia }, State { v: vb, i: ib });
        match conservation_residuals(pre, CollisionParams { sigma, i_prime }) {
            Ok(r) => {
                let mut m = maxima.lock().expect("residual lock");
                m.0 = m.0.max(r.0);
                m.1 = m.1.max(r.1);
                m.2 = m.2.max(r.2);
            }
            Err(_) => {
                failures.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            }
        }
        [0.0]
    })?;
    if failures.into_inner() > 0 {
        return Err(argument("invalid collision drawn while checking residuals"));
    }
    Ok(maxima.into_inner().expect("residual lock"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn head_on_example() {
        let (a, b) = post_velocities(Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0), Vec3::y()).unwrap();
        assert_relative_eq!(a, Vec3::y(), epsilon = 1e-15);
        assert_relative_eq!(b, -Vec3::y(), epsilon = 1e-15);
    }

    #[test]
    fn energies() {
        assert_eq!(post_energies(1.0, 2.0, 0.0).unwrap(), 3.0);
        assert_eq!(post_energies(1.0, 2.0, 3.0).unwrap(), 0.0);
        assert_relative_eq!(post_energies(0.7, 0.3, 0.4).unwrap(), 0.6, epsilon = 1e-15);
        assert!(post_energies(1.0, 2.0, 3.5).is_err());
    }

    #[test]
    fn non_unit_sigma_rejected() {
        assert!(post_velocities(Vec3::x(), Vec3::zeros(), Vec3::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn degenerate_collision_has_zero_residuals() {
        let s = State {
            v: Vec3::new(0.3, 0.1, 2.0),
            i: 0.0,
        };
        let r = conservation_residuals(
            (s, s),
            CollisionParams {
                sigma: Vec3::z(),
                i_prime: 0.0,
            },
        )
        .unwrap();
        assert_eq!(r, (0.0, 0.0, 0.0));
    }

    #[test]
    fn za_midpoint_example() {
        let p = za_forward(Vec3::x(), Vec3::y()).unwrap();
        assert_relative_eq!(p.z, Vec3::new(0.5, 0.5, 0.0), epsilon = 1e-15);
        assert!(za_forward(Vec3::x(), -Vec3::x()).is_err());
        assert!(za_forward(Vec3::x(), Vec3::x()).is_err());
    }

    #[test]
    fn jacobian_values() {
        assert_eq!(za_jacobian(Vec3::new(0.5, 0.0, 0.0)).unwrap(), 8.0);
        assert_eq!(za_jacobian(Vec3::new(0.0, 1.0, 0.0)).unwrap(), 4.0);
        assert!(matches!(za_jacobian(Vec3::zeros()), Err(Error::Singular(_))));
    }

    #[test]
    fn cap_area_values() {
        assert_relative_eq!(sphere_cap_area(0.5f64.sqrt()).unwrap(), TAU, max_relative = 1e-14);
        assert!(sphere_cap_area(1.0 - 1e-9).unwrap() < 1e-7);
        assert!(sphere_cap_area(1.0).is_err());
    }
}
