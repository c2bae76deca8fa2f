mod common;

use std::f64::consts::PI;

use fpam_core::analysis::{self, lacunary_field};
use fpam_core::spectral::{cauchy_semigroup, circular_convolve, half_laplacian, periodize};
use fpam_core::{GridFunction, GridSpec};
use proptest::prelude::*;

fn random_field(spec: GridSpec, amps: &[f64]) -> GridFunction {
    let l = spec.period();
    GridFunction::from_fn(spec, |x| {
        amps.iter()
            .enumerate()
            .map(|(m, a)| {
                let k = (m / 2 + 1) as f64;
                let arg = 2.0 * PI * k * x / l;
                if m % 2 == 0 {
                    a * arg.cos()
                } else {
                    a * arg.sin()
                }
            })
            .sum()
    })
    .unwrap()
}

proptest! {
    #[test]
    fn parseval(values in prop::collection::vec(-10.0f64..10.0, 64)) {
        let spec = GridSpec::new(8.0, 64).unwrap();
        let f = GridFunction::new(spec, values).unwrap();
        let lhs: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * spec.dx();
        let rhs = f.to_spectral().energy();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.max(1e-300));
    }

    #[test]
    fn round_trip(values in prop::collection::vec(-10.0f64..10.0, 128)) {
        let spec = GridSpec::new(6.0, 128).unwrap();
        let f = GridFunction::new(spec, values).unwrap();
        let back = f.to_spectral().to_physical();
        let scale = f.max_norm().max(1e-300);
        prop_assert!(back.sub(&f).unwrap().max_norm() <= 1e-12 * scale);
    }

    #[test]
    fn semigroup_law(amps in prop::collection::vec(-1.0f64..1.0, 12), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let spec = GridSpec::new(8.0, 64).unwrap();
        let f = random_field(spec, &amps).to_spectral();
        let a = cauchy_semigroup(&cauchy_semigroup(&f, s).unwrap(), t).unwrap().to_physical();
        let b = cauchy_semigroup(&f, s + t).unwrap().to_physical();
        prop_assert!(a.sub(&b).unwrap().max_norm() <= 1e-12 * (1.0 + b.max_norm()));
    }

    #[test]
    fn convolution_is_linear(
        a in prop::collection::vec(-1.0f64..1.0, 32),
        b in prop::collection::vec(-1.0f64..1.0, 32),
        k in prop::collection::vec(-1.0f64..1.0, 32),
        alpha in -3.0f64..3.0,
    ) {
        let spec = GridSpec::new(5.0, 32).unwrap();
        let fa = GridFunction::new(spec, a).unwrap();
        let fb = GridFunction::new(spec, b).unwrap();
        let kk = GridFunction::new(spec, k).unwrap();
        let lhs = circular_convolve(&fa.scale(alpha).add(&fb).unwrap(), &kk).unwrap();
        let rhs = circular_convolve(&fa, &kk).unwrap().scale(alpha)
            .add(&circular_convolve(&fb, &kk).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_norm() <= 1e-12 * (1.0 + rhs.max_norm()));
    }

    #[test]
    fn laplacian_commutes_with_semigroup(amps in prop::collection::vec(-1.0f64..1.0, 10), t in 0.0f64..2.0) {
        let spec = GridSpec::new(8.0, 64).unwrap();
        let f = random_field(spec, &amps).to_spectral();
        let a = half_laplacian(&cauchy_semigroup(&f, t).unwrap()).to_physical();
        let b = cauchy_semigroup(&half_laplacian(&f), t).unwrap().to_physical();
        prop_assert!(a.sub(&b).unwrap().max_norm() <= 1e-12 * (1.0 + a.max_norm()));
    }
}

#[test]
fn convolution_of_even_functions_is_even() {
    let spec = GridSpec::new(8.0, 128).unwrap();
    let f = periodize(|x| (-x * x).exp(), 4.0, spec).unwrap();
    let g = periodize(|x| 1.0 / (1.0 + x * x), 4.0, spec).unwrap();
    let h = circular_convolve(&f, &g).unwrap();
    let v = h.values();
    for j in 1..128 {
        assert!((v[j] - v[128 - j]).abs() < 1e-13);
    }
}

#[test]
fn periodization_of_g_star_g_support() {
    let spec = GridSpec::new(8.0, 256).unwrap();
    let bump = |x: f64| if x.abs() < 2.0 { (4.0 - x * x).powi(3) } else { 0.0 };
    let p = periodize(bump, 2.0, spec).unwrap();
    for j in 0..256 {
        let x = spec.centered(j);
        assert_eq!(p.values()[j], bump(x));
    }
}

#[test]
fn time_derivative_of_semigroup_is_the_half_laplacian() {
    let spec = GridSpec::new(8.0, 128).unwrap();
    let f = random_field(spec, &[0.3, -0.7, 0.2, 0.9, -0.4, 0.1]).to_spectral();
    let t = 0.3;
    let h = 1e-4;
    let plus = cauchy_semigroup(&f, t + h).unwrap().to_physical();
    let minus = cauchy_semigroup(&f, t - h).unwrap().to_physical();
    let fd = plus.sub(&minus).unwrap().scale(0.5 / h);
    let exact = half_laplacian(&cauchy_semigroup(&f, t).unwrap()).to_physical();
    let err = fd.sub(&exact).unwrap().max_norm() / exact.max_norm();
    assert!(err <= 1e-6, "{err:e}");
}

#[test]
fn schauder_decay_of_the_cauchy_semigroup() {
    let spec = GridSpec::new(8.0, 1 << 14).unwrap();
    for (alpha, beta) in [(-0.55, 0.4), (0.1, 0.6), (-0.3, 0.2)] {
        let slopes: Vec<f64> = (0..10)
            .map(|seed| {
                let f = lacunary_field(spec, alpha, seed);
                analysis::semigroup_decay_slope(&f, alpha, beta, (1e-3, 1e-1), 21).unwrap()
            })
            .collect();
        let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
        assert!((mean + (beta - alpha)).abs() <= 0.1, "({alpha}, {beta}): {mean}");
    }
}
