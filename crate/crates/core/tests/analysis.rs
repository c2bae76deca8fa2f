mod common;

use fpam_core::analysis::{self, besov_norm, mc_run_noise, pair_with_bump, EtaProfile};
use fpam_core::kernels::smoothstep;
use fpam_core::noise;
use fpam_core::{GridFunction, GridSpec};
use proptest::prelude::*;

#[test]
fn pairing_of_a_cubic_matches_quadrature() {
    let spec = GridSpec::new(8.0, 4096).unwrap();
    let cubic = |x: f64| 0.5 - 1.2 * x + 0.7 * x * x + 0.9 * x * x * x;
    let f = GridFunction::from_fn(spec, cubic).unwrap();
    let (x0, lambda) = (2.3, 0.25);
    let got = pair_with_bump(&f, x0, lambda, EtaProfile::Smoothstep).unwrap();
    let eta = |y: f64| (1.0 - smoothstep(((y - x0) / lambda).abs())) / lambda;
    let exact = common::piecewise(|y| cubic(y) * eta(y), &[x0 - lambda, x0, x0 + lambda]);
    assert!((got - exact).abs() <= 1e-8, "{got} vs {exact}");
}

proptest! {
    #[test]
    fn besov_norm_is_a_norm(
        a in prop::collection::vec(-5.0f64..5.0, 256),
        b in prop::collection::vec(-5.0f64..5.0, 256),
        c in -4.0f64..4.0,
        alpha in -1.0f64..1.0,
    ) {
        let spec = GridSpec::new(8.0, 256).unwrap();
        let fa = GridFunction::new(spec, a).unwrap();
        let fb = GridFunction::new(spec, b).unwrap();
        let na = besov_norm(&fa.to_spectral(), alpha).norm;
        let nb = besov_norm(&fb.to_spectral(), alpha).norm;
        let nab = besov_norm(&fa.add(&fb).unwrap().to_spectral(), alpha).norm;
        let nca = besov_norm(&fa.scale(c).to_spectral(), alpha).norm;
        prop_assert!(nab <= (na + nb) * (1.0 + 1e-12));
        prop_assert!((nca - c.abs() * na).abs() <= 1e-10 * na.max(1e-300));
    }

    #[test]
    fn one_mode_changes_one_block(k in 1i64..128, amp in 0.1f64..3.0, seed in 0u64..100) {
        let spec = GridSpec::new(8.0, 256).unwrap();
        let base = noise::sample_white_noise(seed, spec).xi_values();
        let l = spec.period();
        let mode = GridFunction::from_fn(spec, |x| amp * (2.0 * std::f64::consts::PI * k as f64 * x / l).cos()).unwrap();
        let before = besov_norm(&base.to_spectral(), 0.0).block_norms;
        let after = besov_norm(&base.add(&mode).unwrap().to_spectral(), 0.0).block_norms;
        let own = analysis::block_index(2.0 * std::f64::consts::PI * k as f64 / l);
        for (x, y) in before.iter().zip(&after) {
            if x.0 != own {
                prop_assert!((x.1 - y.1).abs() <= 1e-12 * x.1);
            }
        }
    }
}

#[test]
fn mc_summary_does_not_depend_on_the_pool_size() {
    let spec = GridSpec::new(8.0, 256).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                mc_run_noise(&["a", "b"], 500, 12, spec, |n| {
                    let x = n.xi_values();
                    Ok(vec![x.values()[3], x.values()[3].powi(2) * 1e8])
                })
                .unwrap()
            })
    };
    let one = run(1);
    let many = run(7);
    assert_eq!(one, many);
    assert_eq!(one.seeds(), 12..512);
    for i in 0..2 {
        assert!((one.standard_error[i] - (one.variance[i] / 500.0).sqrt()).abs() <= 1e-15 * one.standard_error[i]);
    }
}

#[test]
fn median_and_fit_helpers() {
    assert_eq!(analysis::median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(analysis::median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    let (b, a) = analysis::linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
    assert!((b - 2.0).abs() < 1e-15 && (a - 1.0).abs() < 1e-15);
}
