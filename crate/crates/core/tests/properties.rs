use proptest::prelude::*;
use resonant_kinetics::cross_section::{CrossSectionModel, InternalForm, KineticForm, Preset};
use resonant_kinetics::energy_law::EnergyLaw;
use resonant_kinetics::equilibrium::Maxwellian;
use resonant_kinetics::kinematics::{
    conservation_residuals, post_energies, post_velocities, za_forward, za_inverse, za_jacobian, CollisionParams, State,
};
use resonant_kinetics::linearized_op::{kappa2_eval, kappa_i_eval, kappa_k_eval, LinearizedContext};
use resonant_kinetics::report::{Check, RatioCriterion, VerificationReport};
use resonant_kinetics::special_fn::{bessel_i0, bessel_i0_scaled, i0_scaled_by_definition};
use resonant_kinetics::Vec3;

fn velocity() -> impl Strategy<Value = Vec3> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn direction() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(|(c, phi)| {
        let s = (1.0 - c * c).sqrt();
        Vec3::new(s * phi.cos(), s * phi.sin(), c)
    })
}

fn hard_sphere_context(gamma: f64, modulation: f64) -> LinearizedContext {
    let law = EnergyLaw::power(0.5, 1.0).unwrap();
    let m = Maxwellian::centered(1.0, 1.0, 1.0, law.clone()).unwrap();
    let model = CrossSectionModel::new(KineticForm::Power { exponent: 1.0 }, InternalForm::Normalized, gamma, law)
        .unwrap()
        .with_modulation(modulation)
        .unwrap();
    LinearizedContext::new(m, model).unwrap()
}

proptest! {
    #[test]
    fn collisions_conserve_momentum_and_both_energies(
        v in velocity(), w in velocity(), sigma in direction(),
        i in 0.0..10.0f64, j in 0.0..10.0f64, share in 0.0..=1.0f64,
    ) {
        let pre = (State::new(v, i).unwrap(), State::new(w, j).unwrap());
        let (p, k, e) = conservation_residuals(pre, CollisionParams { sigma, i_prime: share * (i + j) }).unwrap();
        let scale = 1.0 + v.norm_squared() + w.norm_squared();
        prop_assert!(p < 1e-13 * scale.sqrt());
        prop_assert!(k < 1e-13 * scale);
        prop_assert!(e <= 4.0 * f64::EPSILON * (1.0 + i + j));
    }

    #[test]
    fn maxwellian_product_is_a_collision_invariant(
        v in velocity(), w in velocity(), sigma in direction(),
        i in 0.0..10.0f64, j in 0.0..10.0f64, share in 0.0..=1.0f64,
        t_k in 0.3..3.0f64, t_i in 0.3..3.0f64,
    ) {
        let m = Maxwellian::centered(1.0, t_k, t_i, EnergyLaw::power(1.0, 1.0).unwrap()).unwrap();
        let (vp, wp) = post_velocities(v, w, sigma).unwrap();
        let ip = share * (i + j);
        let jp = post_energies(i, j, ip).unwrap();
        let before = m.ln_eval(v, i) + m.ln_eval(w, j);
        let after = m.ln_eval(vp, ip) + m.ln_eval(wp, jp);
        prop_assert!((before - after).abs() < 1e-12 * (1.0 + before.abs()));
    }

    #[test]
    fn za_parametrization_round_trips(theta in direction(), sigma in direction()) {
        prop_assume!((theta - sigma).norm() > 1e-6 && (theta + sigma).norm() > 1e-6);
        let p = za_forward(theta, sigma).unwrap();
        prop_assert!(p.z.norm() < 1.0);
        prop_assert!((0.0..std::f64::consts::TAU).contains(&p.a));
        let (t, s) = za_inverse(p).unwrap();
        prop_assert!((t - theta).norm() < 1e-12 && (s - sigma).norm() < 1e-12);
        prop_assert!((za_jacobian(p.z).unwrap() * p.z.norm() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn bessel_matches_its_integral_definition(x in 0.0..50.0f64) {
        let reference = i0_scaled_by_definition(x);
        prop_assert!((bessel_i0_scaled(x) - reference).abs() <= 1e-12 * reference);
        prop_assert_eq!(bessel_i0(x).unwrap(), bessel_i0(-x).unwrap());
    }

    #[test]
    fn bessel_is_increasing(x in 0.0..40.0f64, dx in 1e-3..5.0f64) {
        prop_assert!(bessel_i0(x + dx).unwrap() > bessel_i0(x).unwrap());
    }

    #[test]
    fn cross_section_is_symmetric_and_micro_reversible(
        v in velocity(), w in velocity(), sigma in direction(),
        i in 0.01..5.0f64, j in 0.01..5.0f64, share in 0.0..=1.0f64,
        preset in prop_oneof![Just(Preset::Maxwell), Just(Preset::HardSphereLike), Just(Preset::InterpolatedAlpha)],
        gamma in 0.0..1.5f64, modulation in 0.0..1.0f64,
    ) {
        prop_assume!((v - w).norm() > 1e-6);
        let law = EnergyLaw::power(0.5, 1.0).unwrap();
        let model = CrossSectionModel::preset(preset, gamma, law).unwrap().with_modulation(modulation).unwrap();
        let ip = share * (i + j);
        let jp = i + j - ip;
        let b = model.eval_b(v, w, i, j, ip, sigma).unwrap();
        prop_assert!(b >= 0.0);
        let swapped = model.eval_b(w, v, j, i, jp, sigma).unwrap();
        prop_assert!((swapped - b).abs() <= 1e-12 * b.max(1.0));
        let (vp, wp) = post_velocities(v, w, sigma).unwrap();
        let rel = v - w;
        let reversed = model.eval_b(vp, wp, ip, jp, i, rel / rel.norm()).unwrap();
        prop_assert!((reversed - b).abs() <= 1e-12 * b.max(1.0));
    }

    #[test]
    fn energy_mass_is_monotone_and_invertible(alpha in 0.0..2.0f64, scale in 0.1..5.0f64, e in 1e-4..50.0f64, de in 1e-3..10.0f64) {
        let law = EnergyLaw::power(alpha, scale).unwrap();
        let m = law.mass(e).unwrap();
        prop_assert!(law.mass(e + de).unwrap() > m);
        let back = law.inverse_mass(m).unwrap();
        prop_assert!((back - e).abs() <= 1e-9 * e);
    }

    #[test]
    fn report_pass_is_the_conjunction(verdicts in proptest::collection::vec(any::<bool>(), 0..12)) {
        let mut report = VerificationReport::new("p");
        for (k, pass) in verdicts.iter().enumerate() {
            report.push(Check::flag(format!("c{k}"), 0.0, 0.0, *pass));
        }
        prop_assert_eq!(report.pass, verdicts.iter().all(|p| *p));
        prop_assert_eq!(report.clone().recompute(), report.pass);
    }

    #[test]
    fn constant_profiles_are_bounded(level in 1e-6..1e5f64, n in 3usize..30) {
        let xs: Vec<f64> = (0..n).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / (n - 1) as f64)).collect();
        let values = vec![level; n];
        prop_assert!(RatioCriterion::bounded(1e6).evaluate(&xs, &values).pass);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// With the modulation switched on the tensor bound is strict.
    #[test]
    fn kappa2_below_tensor_product(
        v in velocity(), offset in velocity(), i in 1e-3..5.0f64, j in 1e-3..5.0f64, gamma in prop_oneof![Just(0.0), Just(1.0)],
    ) {
        prop_assume!(offset.norm() > 1e-3);
        let ctx = hard_sphere_context(gamma, 0.3);
        let eta = v + offset * 0.5;
        let k2 = kappa2_eval(&ctx, v, i, eta, j).unwrap();
        let bound = kappa_k_eval(&ctx, v, eta).unwrap() * kappa_i_eval(&ctx, i, j).unwrap();
        prop_assert!(k2 >= 0.0);
        prop_assert!(k2 <= bound, "{} > {}", k2, bound);
    }
}
