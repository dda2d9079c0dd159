use igk::kernels::{
    characteristic_fn, is_strictly_positive_definite, kernel_covariance, kernel_eval, kernel_mean,
    kernel_value_with_gradient, normalization_constant_g, profile_convexity_threshold, profile_g, profile_k,
    KernelParams, LOP_SIGMA2,
};
use igk::specfun::{gamma, integrate_with_breaks, QuadOptions};
use proptest::prelude::*;
use std::f64::consts::PI;

fn sphere_area(dim: usize) -> f64 {
    let d = dim as f64;
    2.0 * PI.powf(d / 2.0) / gamma(d / 2.0).unwrap()
}

/// `∫_{ℝᵈ} f(‖x‖) dx` by radial quadrature.
fn radial_integral<F: Fn(f64) -> f64>(dim: usize, f: F, upper: f64) -> f64 {
    let breaks = [1e-6, 1e-3, 0.05, 0.2, 0.5, 1.0, 2.0];
    let opts = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-12,
        max_intervals: 20_000,
    };
    let pts: Vec<f64> = breaks.iter().copied().filter(|&b| b < upper).collect();
    integrate_with_breaks(|r| f(r) * r.powi(dim as i32 - 1), 0.0, upper, &pts, opts).unwrap().value
        * sphere_area(dim)
}

#[test]
fn covariance_examples() {
    let k = KernelParams::new(2, 2.0, 0.7).unwrap();
    assert!((kernel_covariance(&k) - 0.7).abs() < 1e-15);
    let k = KernelParams::lop(1);
    assert!((kernel_covariance(&k) - 1.0 / 48.0).abs() < 1e-15);
    let k = KernelParams::lop(3);
    assert!((kernel_covariance(&k) - 1.0 / 40.0).abs() < 1e-15);
    assert_eq!(kernel_mean(&k), vec![0.0; 3]);
}

#[test]
fn covariance_matches_radial_second_moment() {
    for dim in 1..=3 {
        for &p in &[0.5, 1.0, 2.0] {
            let k = KernelParams::new(dim, p, LOP_SIGMA2).unwrap();
            let second = radial_integral(dim, |r| r * r * k.eval_sq(r * r), 3.0) / dim as f64;
            assert!((second - kernel_covariance(&k)).abs() < 1e-8, "d {dim} p {p}: {second}");
        }
    }
}

#[test]
fn kernels_integrate_to_one() {
    for dim in 1..=3 {
        for &(p, s2) in &[(0.5, 0.1), (1.0, LOP_SIGMA2), (2.0, 0.25), (3.0, 0.05)] {
            let k = KernelParams::new(dim, p, s2).unwrap();
            let mass = radial_integral(dim, |r| k.eval_sq(r * r), 12.0 * s2.sqrt() + 2.0);
            assert!((mass - 1.0).abs() < 1e-6, "d {dim} p {p}: {mass}");
        }
    }
}

#[test]
fn convexity_threshold_examples() {
    assert_eq!(profile_convexity_threshold(&KernelParams::new(2, 2.0, 0.3).unwrap()), 0.0);
    assert_eq!(profile_convexity_threshold(&KernelParams::lop(2)), 0.0);
    let k = KernelParams::new(2, 4.0, 0.5).unwrap();
    assert!((profile_convexity_threshold(&k) - 1.0).abs() < 1e-15);
    let second = |u: f64| {
        let e = 1e-3;
        profile_k(&k, u + e).unwrap() - 2.0 * profile_k(&k, u).unwrap() + profile_k(&k, u - e).unwrap()
    };
    assert!(second(0.5) < 0.0);
    assert!(second(1.5) > 0.0);
}

#[test]
fn positive_definiteness_flag() {
    assert!(is_strictly_positive_definite(&KernelParams::lop(3)));
    assert!(is_strictly_positive_definite(&KernelParams::new(3, 2.0, 1.0).unwrap()));
    assert!(!is_strictly_positive_definite(&KernelParams::new(3, 3.0, 1.0).unwrap()));
    let truncated = KernelParams::lop(3).with_truncation(0.5).unwrap();
    assert!(is_strictly_positive_definite(&truncated));
}

#[test]
fn shadow_normalization_domain() {
    assert!(normalization_constant_g(&KernelParams::new(1, 1.0, 0.1).unwrap()).is_err());
    assert!(normalization_constant_g(&KernelParams::new(1, 0.5, 0.1).unwrap()).is_err());
    let k = KernelParams::new(2, 1.0, 0.1).unwrap();
    let c = normalization_constant_g(&k).unwrap();
    let mass = c * radial_integral(2, |r| if r > 0.0 { profile_g(&k, r * r).unwrap() } else { 0.0 }, 4.0);
    assert!((mass - 1.0).abs() < 1e-6, "{mass}");
}

#[test]
fn characteristic_function_dominance() {
    for dim in 1..=3 {
        let lop = KernelParams::lop(dim);
        let gauss = KernelParams::gaussian(dim, LOP_SIGMA2).unwrap();
        for i in 0..=200 {
            let w = 20.0 * i as f64 / 200.0;
            let mut omega = vec![0.0; dim];
            omega[0] = w;
            let a = characteristic_fn(&lop, &omega).unwrap();
            let b = characteristic_fn(&gauss, &omega).unwrap();
            assert!(a.abs() >= b.abs() - 1e-15, "d {dim} w {w}");
        }
    }
}

#[test]
fn complete_monotonicity_spot_check() {
    for &p in &[0.5, 1.0, 1.5, 2.0] {
        let k = KernelParams::new(2, p, 0.5).unwrap();
        let step = 0.05;
        let mut x = 0.1;
        while x + 4.0 * step <= 5.0 {
            let v: Vec<f64> = (0..5).map(|j| profile_k(&k, x + j as f64 * step).unwrap()).collect();
            let mut diff = v.clone();
            for n in 1..=4 {
                diff = diff.windows(2).map(|w| w[1] - w[0]).collect();
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!(sign * diff[0] >= -1e-9, "p {p} x {x} n {n}");
            }
            x += step;
        }
    }
}

fn params() -> impl Strategy<Value = KernelParams> {
    (1usize..=3, 0.2f64..3.0, 0.01f64..2.0).prop_map(|(d, p, s2)| KernelParams::new(d, p, s2).unwrap())
}

proptest! {
    #[test]
    fn profile_strictly_decreasing(k in params(), u in 0.0f64..10.0, du in 1e-3f64..1.0) {
        prop_assert!(profile_k(&k, u + du).unwrap() < profile_k(&k, u).unwrap()
            || profile_k(&k, u).unwrap() == 0.0);
    }

    #[test]
    fn kernel_is_radial(k in params(), x in prop::collection::vec(-1.0f64..1.0, 3)) {
        let x = &x[..k.dim()];
        let flipped: Vec<f64> = x.iter().rev().map(|v| -v).collect();
        prop_assert!((kernel_eval(&k, x) - kernel_eval(&k, &flipped)).abs() <= 1e-14 * kernel_eval(&k, x).abs());
    }

    #[test]
    fn gradient_matches_finite_differences(k in params(), x in prop::collection::vec(-1.0f64..1.0, 3)) {
        let x = &x[..k.dim()];
        let r2: f64 = x.iter().map(|v| v * v).sum();
        prop_assume!(r2 > 0.01);
        let vg = kernel_value_with_gradient(&k, x);
        for i in 0..x.len() {
            let e = 1e-6 * (1.0 + x[i].abs());
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += e;
            b[i] -= e;
            let fd = (kernel_eval(&k, &a) - kernel_eval(&k, &b)) / (2.0 * e);
            let scale = vg.gradient.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(1e-10);
            prop_assert!((fd - vg.gradient[i]).abs() <= 1e-5 * scale, "{} vs {}", fd, vg.gradient[i]);
        }
    }

    #[test]
    fn truncation_zeroes_outside(k in params(), r in 0.1f64..2.0, x in 0.0f64..3.0) {
        let t = k.clone().with_truncation(r).unwrap();
        let v = kernel_eval(&t, &{ let mut v = vec![0.0; t.dim()]; v[0] = x; v });
        if x > r {
            prop_assert_eq!(v, 0.0);
        } else {
            prop_assert!(v > 0.0 || k.eval_sq(x * x) == 0.0);
        }
    }
}
