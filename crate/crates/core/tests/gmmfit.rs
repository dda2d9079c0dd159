use igk::gmmfit::{
    builtin_params, fit_kernel_gmm, l1_distance, optimal_scale_correction, shape_errors, FitConfig, FitTarget,
    GmmApprox, GmmLabel,
};
use igk::kernels::LOP_SIGMA2;
use igk::specfun::{gamma, integrate_with_breaks, QuadOptions};
use proptest::prelude::*;
use std::f64::consts::PI;

const LABELS: [GmmLabel; 3] = [GmmLabel::Clop, GmmLabel::Ours, GmmLabel::OursConsistent];

#[test]
fn builtin_parameter_sets() {
    let clop = builtin_params(GmmLabel::Clop).unwrap();
    assert_eq!(clop.components()[0], (97.761, 0.01010));
    let ours = builtin_params(GmmLabel::Ours).unwrap();
    assert_eq!(ours.components()[2], (5.069, 0.15700));
    let consistent = builtin_params(GmmLabel::OursConsistent).unwrap();
    assert_eq!(consistent.sigmas()[2], (1.0f64 / 32.0).sqrt());
    assert!("nope".parse::<GmmLabel>().is_err());
}

#[test]
fn published_standard_deviation_ratios() {
    let cases = [
        (GmmLabel::Clop, Some(1), 0.7931),
        (GmmLabel::Ours, Some(3), 0.9737),
        (GmmLabel::OursConsistent, None, 1.0),
    ];
    for (label, d, want) in cases {
        let r = builtin_params(label).unwrap().std_ratio(d);
        assert!((r - want).abs() < 5e-4, "{label} {d:?}: {r}");
    }
}

#[test]
fn underestimation_pattern() {
    for d in 1..=4 {
        assert!(builtin_params(GmmLabel::Clop).unwrap().std_ratio(Some(d)) < 1.0);
        assert!(builtin_params(GmmLabel::Ours).unwrap().std_ratio(Some(d)) < 1.0);
        assert!(builtin_params(GmmLabel::OursConsistent).unwrap().std_ratio(Some(d)) > 1.0);
    }
}

#[test]
fn approximations_are_normalized() {
    let opts = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_intervals: 10_000,
    };
    for label in LABELS {
        let g = builtin_params(label).unwrap();
        for dim in 1..=3 {
            let d = dim as f64;
            let area = 2.0 * PI.powf(d / 2.0) / gamma(d / 2.0).unwrap();
            let breaks = [0.02, 0.05, 0.1, 0.2, 0.4];
            let mass = integrate_with_breaks(|r| g.kernel_eval_radial(dim, r) * r.powi(dim as i32 - 1), 0.0, 3.0, &breaks, opts)
                .unwrap()
                .value
                * area;
            assert!((mass - 1.0).abs() < 1e-8, "{label} d {dim}: {mass}");
        }
    }
}

#[test]
fn refit_is_close_to_published_fit() {
    let fit = fit_kernel_gmm(&FitConfig::default()).unwrap();
    let (ours_linf, _) = shape_errors(&builtin_params(GmmLabel::Ours).unwrap(), FitTarget::Lop, (0.0, 1.0));
    assert!(fit.linf <= 2.0 * ours_linf, "{} vs {ours_linf}", fit.linf);
    assert!(fit.l1.is_finite() && fit.rms.is_finite());
}

#[test]
fn fixed_sigma3_is_kept_exactly() {
    let s3 = (1.0f64 / 32.0).sqrt();
    let config = FitConfig {
        n_samples: 20_000,
        fix_sigma3: Some(s3),
        ..FitConfig::default()
    };
    let fit = fit_kernel_gmm(&config).unwrap();
    assert_eq!(fit.approx.sigmas()[2], s3);
}

#[test]
fn gaussian_target_is_recovered() {
    let config = FitConfig {
        n_samples: 5_000,
        target: FitTarget::Gaussian(0.2),
        ..FitConfig::default()
    };
    let fit = fit_kernel_gmm(&config).unwrap();
    assert!(fit.rms < 1e-10, "rms {}", fit.rms);
}

#[test]
fn scale_correction_examples() {
    let clop = builtin_params(GmmLabel::Clop).unwrap();
    let sc = optimal_scale_correction(&clop, 1).unwrap();
    let ratio = clop.std_ratio(Some(1));
    assert!((sc.b_opt - ratio).abs() < 0.05, "b_opt {} ratio {ratio}", sc.b_opt);
    for label in LABELS {
        for d in 1..=3 {
            let sc = optimal_scale_correction(&builtin_params(label).unwrap(), d).unwrap();
            assert!(sc.l1_after <= sc.l1_before);
            assert!((0.5..=2.0).contains(&sc.b_opt));
        }
    }
}

#[test]
fn scale_correction_of_corrected_kernel_is_one() {
    let ours = builtin_params(GmmLabel::Ours).unwrap();
    let sc = optimal_scale_correction(&ours, 2).unwrap();
    let corrected = ours.scaled_sigmas(1.0 / sc.b_opt).unwrap();
    let again = optimal_scale_correction(&corrected, 2).unwrap();
    assert!((again.b_opt - 1.0).abs() < 1e-3, "{}", again.b_opt);
    assert!((l1_distance(&corrected, 2, 1.0) - sc.l1_after).abs() < 1e-9);
}

#[test]
fn variance_limit_is_widest_component() {
    for label in LABELS {
        let g = builtin_params(label).unwrap();
        let big = g.variance(10_000);
        assert!((big - g.variance_limit()).abs() < 1e-3 * g.variance_limit());
    }
    assert!((builtin_params(GmmLabel::OursConsistent).unwrap().variance_limit() - LOP_SIGMA2).abs() < 1e-16);
}

proptest! {
    #[test]
    fn text_round_trip(
        w in prop::array::uniform3(1e-3f64..1e3),
        s in prop::array::uniform3(1e-3f64..1.0),
        li in 0usize..4,
    ) {
        let label = [GmmLabel::Clop, GmmLabel::Ours, GmmLabel::OursConsistent, GmmLabel::Custom][li];
        let g = GmmApprox::new([(w[0], s[0]), (w[1], s[1]), (w[2], s[2])], label).unwrap();
        let back = GmmApprox::from_text(&g.to_text()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn shadow_is_positive_and_decreasing(x in 0.0f64..2.0, dx in 1e-4f64..0.5, li in 0usize..3) {
        let g = builtin_params(LABELS[li]).unwrap();
        prop_assert!(g.shadow_eval(x) > 0.0);
        prop_assert!(g.shadow_eval(x + dx) < g.shadow_eval(x));
        prop_assert!(g.kernel_shape(x) <= 1.0);
    }
}
