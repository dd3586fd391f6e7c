use std::sync::Arc;

use isofcq::detect::{
    cmc_test, musso_nicolodi_test, type2_conformal_test, type_d_norm_test, type_d_ratio_test,
};
use isofcq::fcq::extend_signed;
use isofcq::profiles::{generate_with_order, ElasticOde, Formula};
use isofcq::*;
use proptest::prelude::*;

fn kind_strategy() -> impl Strategy<Value = (SurfaceKind, Option<f64>)> {
    prop_oneof![
        (-2.0..-0.5f64).prop_map(|c| (SurfaceKind::Revolution, Some(c))),
        (0.5..2.0f64).prop_map(|c| (SurfaceKind::Cone, Some(c))),
        Just((SurfaceKind::Cylinder, None)),
    ]
}

fn sine_strategy() -> impl Strategy<Value = Formula> {
    (0.8..1.5f64, 0.05..0.3f64, 0.5..1.5f64, 0.0..3.0f64).prop_map(|(offset, amplitude, frequency, phase)| {
        Formula::Sine {
            offset,
            amplitude,
            frequency,
            phase,
        }
    })
}

fn elastic(alpha: f64, k0: f64, dk0: f64, forcing: f64) -> ProfileSpec {
    ProfileSpec::Elastic {
        c: None,
        alpha,
        k0,
        dk0,
        forcing,
    }
}

fn build(kind: SurfaceKind, c: Option<f64>, profile: ProfileSpec, n: usize) -> FrameBundle {
    build_frame(&SurfaceSpec {
        kind,
        c,
        profile,
        grid: GridSpec::unit(n).unwrap(),
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn repeated_first_derivative_matches_second(f in sine_strategy()) {
        let g = GridSpec::unit(256).unwrap();
        let vals: Vec<f64> = g.points().iter().map(|&u| f.derivative_at(0, u)).collect();
        let s = ScalarField::from_samples(g, vals).unwrap();
        let twice = s.differentiate(1).unwrap().differentiate(1).unwrap();
        let once = s.differentiate(2).unwrap();
        let h = g.spacing();
        let gap = twice.sub(&once).unwrap().max_abs();
        prop_assert!(gap < 50.0 * h.powi(4) * 5f64.powi(6), "gap {gap}");
    }

    #[test]
    fn analytic_and_stencil_paths_agree(f in sine_strategy(), order in 1usize..=4) {
        let g = GridSpec::unit(256).unwrap();
        let exact = generate_with_order(&ProfileSpec::Formula { formula: f.clone() }, &g, 8).unwrap();
        let sampled = ScalarField::from_samples(g, exact.values().to_vec()).unwrap();
        let fd = sampled.differentiate(order).unwrap();
        let an = exact.differentiate(order).unwrap();
        // |f⁽⁵⁾| ≤ amplitude · frequency⁵ for the sine family
        let Formula::Sine { amplitude, frequency, .. } = f else { unreachable!() };
        let h = g.spacing();
        let truncation = 100.0 * h.powi(4) * amplitude * frequency.powi(4 + order as i32);
        let rounding = 1e3 * f64::EPSILON * exact.max_abs() / h.powi(order as i32);
        let gap = fd.sub(&an).unwrap().max_abs();
        prop_assert!(gap < truncation + rounding, "gap {gap:.3e} truncation {truncation:.3e} rounding {rounding:.3e}");
    }

    #[test]
    fn elastic_profiles_solve_their_ode(
        (kind, c) in kind_strategy(),
        alpha in -1.0..1.0f64,
        k0 in 0.5..1.5f64,
        dk0 in -0.5..0.5f64,
    ) {
        let fb = build(kind, c, elastic(alpha, k0, dk0, 0.0), 256);
        let linear = c.map_or(0.0, |c| 1.0 / c) + alpha;
        let ode = ElasticOde { linear, forcing: 0.0 };
        let k = fb.curvature.values();
        let dk = fb.curvature.derivative_samples(1).unwrap();
        let ddk = fb.curvature.derivative_samples(2).unwrap();
        let e0 = ode.energy(k[0], dk[0]);
        for i in 0..k.len() {
            prop_assert!((ddk[i] + linear * k[i] + 0.5 * k[i].powi(3)).abs() < 1e-9);
            prop_assert!((ode.energy(k[i], dk[i]) - e0).abs() < 1e-9);
        }
    }

    #[test]
    fn frames_satisfy_gram_and_eta_relations((kind, c) in kind_strategy(), f in sine_strategy()) {
        let fb = build(kind, c, ProfileSpec::Formula { formula: f }, 256);
        prop_assert!(fb.gram_deviation() < 1e-10);
        if kind != SurfaceKind::Cylinder {
            prop_assert!(fb.eta_form_mismatch().unwrap() < 1e-12);
        }
        prop_assert!(fb.closedness_residual().unwrap() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flipping_the_normal_negates_every_coefficient(
        (kind, c) in kind_strategy(),
        f in sine_strategy(),
        r1 in -1.0..1.0f64,
        r0 in 0.2..3.0f64,
    ) {
        let fb = Arc::new(build(kind, c, ProfileSpec::Formula { formula: f }, 128));
        let r = RSeries::new(vec![r0, r1]).unwrap();
        let a = extend_signed(fb.clone(), &r, 4, false).unwrap();
        let b = extend_signed(fb, &r, 4, true).unwrap();
        for i in -4..=0 {
            for (x, y) in a.p(i).unwrap().samples().iter().zip(b.p(i).unwrap().samples()) {
                prop_assert_eq!(*x, -*y);
            }
        }
        let verdicts = |s: &FcqSeries| -> Vec<(String, Verdict)> {
            detect(s, 1e-6).unwrap().checks.into_iter().map(|c| (c.check, c.verdict)).collect()
        };
        prop_assert_eq!(verdicts(&a), verdicts(&b));
    }

    #[test]
    fn shifting_preserves_the_residual_checks(
        (kind, c) in kind_strategy(),
        f in sine_strategy(),
        s in -2.0..2.0f64,
        lag in 1usize..=2,
    ) {
        let fb = Arc::new(build(kind, c, ProfileSpec::Formula { formula: f }, 256));
        let base = extend(fb, &RSeries::new(vec![1.0, 0.3]).unwrap(), 5).unwrap();
        let shifted = base.shift(s, lag).unwrap();
        for row in shifted.conservation_residual().unwrap() {
            prop_assert!(row.deviation < 1e-8, "{row:?}");
        }
        for row in shifted.parallelism_residual().unwrap() {
            prop_assert!(row.u < 1e-6 && row.v < 1e-6, "{row:?}");
        }
    }

    #[test]
    fn cmc_and_musso_nicolodi_agree(
        (kind, c) in kind_strategy(),
        h in -1.0..1.0f64,
        k0 in 0.6..1.4f64,
        dk0 in -0.5..0.5f64,
        forcing in prop_oneof![Just(0.0), 1.0..2.0f64, -2.0..-1.0f64],
    ) {
        let fb = build(kind, c, elastic(-2.0 * h, k0, dk0, forcing), 256);
        let a = cmc_test(&fb, 1e-6).unwrap();
        let b = musso_nicolodi_test(&fb, 1e-6).unwrap();
        prop_assert_eq!(a.verdict, b.verdict, "cmc {:?} mn {:?}", a, b);
        prop_assert_eq!(a.verdict.passed(), forcing == 0.0);
    }

    #[test]
    fn ratio_and_norm_tests_agree_when_conclusive(
        (kind, c) in kind_strategy(),
        alpha in -1.0..1.0f64,
        k0 in 0.6..1.4f64,
        wavy in any::<bool>(),
    ) {
        let profile = if wavy {
            ProfileSpec::Formula { formula: Formula::Sine { offset: k0, amplitude: 0.3, frequency: 1.5, phase: alpha } }
        } else {
            elastic(alpha, k0, 0.3, 0.0)
        };
        let s = extend(Arc::new(build(kind, c, profile, 256)), &RSeries::default(), 3).unwrap();
        let ratio = type_d_ratio_test(&s, 1, 1e-6).unwrap().check;
        let norm = type_d_norm_test(&s, 1, 1e-6).unwrap();
        if ratio.verdict != Verdict::Inconclusive && norm.verdict != Verdict::Inconclusive {
            prop_assert_eq!(ratio.verdict, norm.verdict);
        }
    }

    #[test]
    fn type_one_profiles_pass_type_two(
        (kind, c) in kind_strategy(),
        alpha in -1.0..1.0f64,
        k0 in 0.6..1.4f64,
        dk0 in -0.5..0.5f64,
    ) {
        let fb = build(kind, c, elastic(alpha, k0, dk0, 0.0), 256);
        let s = extend(Arc::new(fb), &RSeries::default(), 3).unwrap();
        let d = detect(&s, 1e-6).unwrap();
        prop_assert_eq!(d.type_verdict(1), Some(Verdict::Pass));
        prop_assert_eq!(d.type_verdict(2), Some(Verdict::Pass));
        prop_assert!(type2_conformal_test(s.frame(), 1e-6).unwrap().verdict.passed());
    }
}
