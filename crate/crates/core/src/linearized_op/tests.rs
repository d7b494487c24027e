use super::*;
use crate::cross_section::{InternalForm, KineticForm};
use crate::mc::MonteCarloConfig;

fn context(kinetic: KineticForm, gamma: f64, alpha: f64, modulation: f64) -> LinearizedContext {
    let law = EnergyLaw::power(alpha, 1.0).unwrap();
    let m = Maxwellian::centered(1.0, 1.0, 1.0, law.clone()).unwrap();
    let model = CrossSectionModel::new(kinetic, InternalForm::Normalized, gamma, law)
        .unwrap()
        .with_modulation(modulation)
        .unwrap();
    LinearizedContext::new(m, model).unwrap()
}

fn hard_sphere(gamma: f64, alpha: f64) -> LinearizedContext {
    context(KineticForm::Power { exponent: 1.0 }, gamma, alpha, 0.2)
}

#[test]
fn context_validates_exponents() {
    let ctx = hard_sphere(1.0, 0.0);
    assert!(LinearizedContext::with_exponents(ctx.maxwellian.clone(), ctx.model.clone(), 0.6, 0.2).is_err());
    let ctx0 = hard_sphere(0.0, 0.0);
    assert!(LinearizedContext::with_exponents(ctx0.maxwellian.clone(), ctx0.model.clone(), 0.25, 0.4).is_err());
    assert!(LinearizedContext::with_exponents(ctx0.maxwellian.clone(), ctx0.model.clone(), 0.25, 0.3).is_ok());
}

#[test]
fn nu_bar_matches_monte_carlo() {
    let ctx = hard_sphere(1.0, 0.5);
    let v = Vec3::new(0.4, -1.1, 0.3);
    let i = 0.7;
    let exact = nu_bar(&ctx, v, i).unwrap();
    let mc = MonteCarloConfig::new(400_000, 3);
    let law = ctx.law.clone();
    let est = crate::mc::estimate(&mc, |d| {
        let s = ctx.maxwellian.sample_one(d.rng).unwrap();
        ctx.model.bbar((v - s.v).norm(), i, s.i)
    })
    .unwrap();
    let est = est.scaled(ctx.maxwellian.n);
    assert!(
        (est.mean - exact).abs() < 4.0 * est.std_err,
        "{} +- {} vs {exact}",
        est.mean,
        est.std_err
    );
    assert!(law.is_lebesgue() || exact > 0.0);
    let rotated = Vec3::new(-1.1, 0.3, 0.4);
    assert!((nu_bar(&ctx, rotated, i).unwrap() - exact).abs() < 1e-12 * exact);
}

#[test]
fn k2_of_sqrt_maxwellian_collapses_to_nu_bar() {
    let ctx = hard_sphere(1.0, 0.5);
    let g = PhaseFunction::sqrt_maxwellian(&ctx.maxwellian);
    let v = Vec3::new(0.9, 0.2, -0.4);
    let i = 0.6;
    let expected = ctx.maxwellian.sqrt_eval(v, i) * nu_bar(&ctx, v, i).unwrap();
    let kernel = k2_kernel(&ctx, &g, v, i).unwrap();
    assert!((kernel - expected).abs() < 1e-6 * expected, "{kernel} vs {expected}");
    let direct = k2_direct(&ctx, &g, v, i, &MonteCarloConfig::new(200_000, 11)).unwrap();
    assert!((direct.mean - expected).abs() < 4.0 * direct.std_err);
}

#[test]
fn k2_kernel_matches_direct_for_gaussian() {
    for alpha in [0.0, 1.0] {
        let ctx = hard_sphere(1.0, alpha);
        let g = PhaseFunction::gaussian(Vec3::new(0.5, -0.3, 0.8), 1.0, 1.0);
        let v = Vec3::new(-0.7, 0.4, 1.2);
        let i = 0.8;
        let kernel = k2_kernel(&ctx, &g, v, i).unwrap();
        let direct = k2_direct(&ctx, &g, v, i, &MonteCarloConfig::new(400_000, 5)).unwrap();
        assert!(
            (direct.mean - kernel).abs() < 4.0 * direct.std_err,
            "alpha {alpha}: {} +- {} vs {kernel}",
            direct.mean,
            direct.std_err
        );
    }
}

#[test]
fn k3_mirrored_estimator_matches_k2_for_lebesgue() {
    let ctx = hard_sphere(1.0, 0.0);
    let g = PhaseFunction::gaussian(Vec3::new(0.2, 0.1, -0.5), 1.0, 1.5);
    let v = Vec3::new(0.3, 0.3, 0.3);
    let mc = MonteCarloConfig::new(20_000, 9);
    let k2 = k2_direct(&ctx, &g, v, 0.4, &mc).unwrap();
    let k3 = k3_direct(&ctx, &g, v, 0.4, &mc, K3Sampling::Mirrored).unwrap();
    assert!((k2.mean - k3.mean).abs() <= 1e-12 * k2.mean.abs());
    assert!(
        k3_direct(&ctx, &PhaseFunction::zero(), v, 0.4, &mc, K3Sampling::Mirrored)
            .unwrap()
            .mean
            == 0.0
    );
}

#[test]
fn k1_direct_and_kernel_agree() {
    let ctx = hard_sphere(1.0, 0.5);
    let g = PhaseFunction::gaussian(Vec3::new(0.5, -0.3, 0.8), 1.0, 1.0);
    let v = Vec3::new(-0.7, 0.4, 1.2);
    let a = k1_direct(&ctx, &g, v, 0.8).unwrap();
    let b = k1_kernel(&ctx, &g, v, 0.8).unwrap();
    assert!((a - b).abs() < 1e-6 * a.abs(), "{a} vs {b}");
    let gm = PhaseFunction::sqrt_maxwellian(&ctx.maxwellian);
    let c = k1_direct(&ctx, &gm, v, 0.8).unwrap();
    let expected = -ctx.maxwellian.sqrt_eval(v, 0.8) * nu_bar(&ctx, v, 0.8).unwrap();
    assert!((c - expected).abs() < 1e-8 * expected.abs(), "{c} vs {expected}");
}

#[test]
fn tensor_bound_holds_on_sample() {
    let ctx = hard_sphere(1.0, 0.5);
    let report = tensor_bound_check(&ctx, 50, 1).unwrap();
    assert!(report.pass, "{:?}", report.checks);
}

#[test]
fn hs_norm_is_quadratic_in_density() {
    let ctx = hard_sphere(1.0, 0.5);
    let (a, record) = hs_norm_kappa1(&ctx).unwrap();
    assert!(record.final_increment() < 1e-4);
    let m2 = ctx.maxwellian.with_density(2.0).unwrap();
    let ctx2 = LinearizedContext::new(m2, ctx.model.clone()).unwrap();
    let (b, _) = hs_norm_kappa1(&ctx2).unwrap();
    assert!((b / a - 4.0).abs() < 1e-8);
}

#[test]
fn monatomic_direct_matches_kernel() {
    for kinetic in [KineticForm::Power { exponent: 1.0 }, KineticForm::Interpolated { alpha: 0.5 }] {
        let mono = MonatomicContext::new(kinetic, 1.0, 1.0).unwrap();
        let h = |x: Vec3| (-(x - Vec3::new(0.3, 0.0, -0.2)).norm_squared() / 2.0).exp();
        let v = Vec3::new(1.0, -0.5, 0.2);
        let kernel = k2m_kernel(&mono, h, v);
        let direct = k2m_direct(&mono, h, v, &MonteCarloConfig::new(400_000, 2)).unwrap();
        assert!(
            (direct.mean - kernel).abs() < 4.0 * direct.std_err,
            "{kinetic:?}: {} +- {} vs {kernel}",
            direct.mean,
            direct.std_err
        );
    }
}

#[test]
fn zero_function_gives_zero() {
    let ctx = hard_sphere(1.0, 0.5);
    let z = PhaseFunction::zero();
    let v = Vec3::new(0.1, 0.2, 0.3);
    assert_eq!(k2_kernel(&ctx, &z, v, 0.5).unwrap(), 0.0);
    assert_eq!(k1_direct(&ctx, &z, v, 0.5).unwrap(), 0.0);
    assert_eq!(k2_direct(&ctx, &z, v, 0.5, &MonteCarloConfig::new(1000, 1)).unwrap().mean, 0.0);
}

#[test]
fn k3_kernel_matches_direct() {
    for alpha in [0.5, 1.0] {
        let ctx = hard_sphere(1.0, alpha);
        let g = PhaseFunction::gaussian(Vec3::new(0.5, -0.3, 0.8), 1.0, 1.0);
        let v = Vec3::new(-0.7, 0.4, 1.2);
        let i = 0.8;
        let kernel = k3_kernel(&ctx, &g, v, i).unwrap();
        let mc = MonteCarloConfig::new(400_000, 17);
        for sampling in [K3Sampling::Mirrored, K3Sampling::Independent] {
            let direct = k3_direct(&ctx, &g, v, i, &mc, sampling).unwrap();
            assert!(
                (direct.mean - kernel).abs() < 4.0 * direct.std_err,
                "alpha {alpha} {sampling:?}: {} +- {} vs {kernel}",
                direct.mean,
                direct.std_err
            );
        }
    }
}
