mod common;

use std::f64::consts::{LN_2, PI};

use common::{piecewise, rel, Setup};
use fpam_core::analysis::{self, besov_norm, lacunary_field, mc_run_noise};
use fpam_core::coefficients::compute_s_from_noise;
use fpam_core::kernels::{self, green};
use fpam_core::noise::Mollifier;
use fpam_core::{GridFunction, GridSpec};

const K_SE: f64 = 4.0;

#[test]
fn f_convolution_of_a_single_mode() {
    let l = 8.0;
    let spec = GridSpec::new(l, 4096).unwrap();
    let k = kernels::build_g(spec);
    let w = 2.0 * PI / l;
    let g1 = piecewise(|x| green(x) * (w * x).cos(), &[-1.0, -0.5, 0.0, 0.5, 1.0]) / l;
    let factor = -w * l * g1 - 1.0;
    let g = GridFunction::from_fn(spec, |x| (w * x).cos()).unwrap();
    let got = k.f_convolve(&g).unwrap();
    let expected = g.scale(factor);
    let err = got.sub(&expected).unwrap().max_norm();
    assert!(err <= 1e-6, "{err:e}");
}

#[test]
fn f_convolution_is_linear() {
    let spec = GridSpec::new(8.0, 512).unwrap();
    let k = kernels::build_g(spec);
    let a = GridFunction::from_fn(spec, |x| (x * 0.785).sin() + 0.1).unwrap();
    let b = GridFunction::from_fn(spec, |x| (3.0 * x * 0.785).cos()).unwrap();
    let lhs = k.f_convolve(&a.scale(2.5).add(&b).unwrap()).unwrap();
    let rhs = k.f_convolve(&a).unwrap().scale(2.5).add(&k.f_convolve(&b).unwrap()).unwrap();
    assert!(lhs.sub(&rhs).unwrap().max_norm() <= 1e-12);
}

#[test]
fn green_function_inverts_the_half_laplacian_weakly() {
    let spec = GridSpec::new(8.0, 1 << 14).unwrap();
    let k = kernels::build_g(spec);
    let phi = GridFunction::from_fn(spec, |x| {
        let c = if x > 4.0 { x - 8.0 } else { x };
        (-(c - 0.2).powi(2) / 0.1).exp()
    })
    .unwrap();
    let lg = fpam_core::spectral::half_laplacian(k.g_hat());
    let lhs: f64 = spec.period()
        * lg.coeffs().iter().zip(phi.to_spectral().coeffs()).map(|(a, b)| (a * b.conj()).re).sum::<f64>();
    let rhs = phi.values()[0] + k.f_per().mul(&phi).unwrap().integral();
    assert!(rel(lhs, rhs) <= 1e-3, "{lhs} vs {rhs}");
}

/// C_1 by nested quadrature: G₁ = G*ρ tabulated by tanh-sinh, Q = G₁*G₁ by
/// the trapezoid rule on the table, then (1/π)∫_R (PQ(0) − PQ(y))/y² dy.
fn c_one_oracle(l: f64) -> f64 {
    let rho = Mollifier::standard();
    let h = 1.0 / 256.0;
    let m = 512_i64; // G₁ lives on [−2, 2]
    let g1: Vec<f64> = (-m..=m)
        .map(|i| {
            let x = i as f64 * h;
            let mut br: Vec<f64> = [-1.0, 1.0, x, x - 0.5, x + 0.5, x - 1.0, x + 1.0]
                .into_iter()
                .filter(|b| (-1.0..=1.0).contains(b))
                .collect();
            br.sort_by(f64::total_cmp);
            br.dedup();
            piecewise(|z| rho.eval(z) * green(x - z), &br)
        })
        .collect();
    let at = |i: i64| if i.abs() <= m { g1[(i + m) as usize] } else { 0.0 };
    let q: Vec<f64> = (0..=2 * m)
        .map(|y| h * (-m..=m).map(|i| at(i) * at(y - i)).sum::<f64>())
        .collect();
    let q0 = q[0];
    let q2 = 2.0 * (q[1] - q0) / (h * h);
    // Core: trapezoid on [−4, 4] of (Q0 − Q)/y², even integrand.
    let n = 2 * m as usize;
    let mut core = -0.5 * q2;
    for (j, &qj) in q.iter().enumerate().skip(1) {
        let y = j as f64 * h;
        let w = if j == n { 0.5 } else { 1.0 };
        core += 2.0 * w * (q0 - qj) / (y * y);
    }
    core *= h;
    let tail = 2.0 * q0 / (n as f64 * h);
    // Periodic images: −Σ_{m≠0} ∫ Q(z)/(z − mL)² dz.
    let images: f64 = (-(n as i64)..=n as i64)
        .map(|j| {
            let z = j as f64 * h;
            let qz = q[j.unsigned_abs() as usize];
            let w = if j.unsigned_abs() as usize == n { 0.5 } else { 1.0 };
            let k: f64 = (1..=2000)
                .map(|mm| {
                    let a = z - mm as f64 * l;
                    let b = z + mm as f64 * l;
                    1.0 / (a * a) + 1.0 / (b * b)
                })
                .sum::<f64>()
                + 2.0 / (l * l * 2000.5);
            w * qz * k
        })
        .sum::<f64>()
        * h;
    (core + tail - images) / PI
}

#[test]
fn renormalization_constant_at_unit_scale_matches_quadrature() {
    let setup = Setup::new(8.0, 1 << 14, 1.0);
    let oracle = c_one_oracle(8.0);
    let spectral = kernels::renorm_constant_spectral(&setup.h);
    let integral = kernels::renorm_constant_integral(&setup.h, 64).unwrap();
    assert!(rel(spectral, oracle) <= 1e-3, "{spectral} vs {oracle}");
    assert!(rel(integral, oracle) <= 1e-3, "{integral} vs {oracle}");
}

#[test]
fn renormalization_constant_two_routes_and_drift() {
    let spec = GridSpec::new(8.0, 1 << 14).unwrap();
    let k = kernels::build_g(spec);
    let rho = Mollifier::standard();
    let ladder = [0.4, 0.2, 0.1, 0.05, 0.025];
    let cs: Vec<_> = ladder
        .iter()
        .map(|&e| kernels::renorm_constant(&kernels::build_h(&k, e, &rho).unwrap(), 64).unwrap())
        .collect();
    for c in &cs {
        assert!(c.relative_gap() <= 1e-3, "eps {}: {}", c.eps, c.relative_gap());
        assert!(c.drift().abs() < 1.0);
    }
    assert!(cs.windows(2).all(|w| w[1].value_spectral > w[0].value_spectral));
    // Successive differences C_{ε/2} − C_ε for ε ∈ {0.2, 0.1, 0.05}.
    let target = LN_2 / PI;
    let dev: Vec<f64> = cs[1..]
        .windows(2)
        .map(|w| (w[1].value_spectral - w[0].value_spectral - target).abs())
        .collect();
    assert!(dev.iter().all(|&d| d <= 0.03), "{dev:?}");
    assert!(dev.windows(2).all(|w| w[1] < w[0]), "{dev:?}");
}

#[test]
fn integral_route_converges_in_the_translate_budget() {
    let setup = Setup::new(8.0, 4096, 0.1);
    let c = kernels::renorm_constant_spectral(&setup.h);
    // With the periodic-mean tail the budget barely matters; without it the
    // truncation error would be about f̄/(π·M·L).
    let c4 = kernels::renorm_constant_integral(&setup.h, 4).unwrap();
    let c16 = kernels::renorm_constant_integral(&setup.h, 16).unwrap();
    let c64 = kernels::renorm_constant_integral(&setup.h, 64).unwrap();
    let fbar = 2.0 * (setup.h.at_zero() - setup.h.spectrum().coeffs()[0].re);
    assert!((c64 - c16).abs() < 1e-2 * fbar / (PI * 64.0 * 8.0), "{c4} {c16} {c64}");
    assert!((c64 - c4).abs() < 1e-2 * fbar / (PI * 16.0 * 8.0), "{c4} {c16} {c64}");
    assert!(rel(c64, c) <= 1e-3);
    assert!(-setup.h.second_difference_at_zero() >= 0.0);
}

#[test]
fn increment_variance_is_twice_the_autocorrelation_drop() {
    let setup = Setup::new(8.0, 1024, 0.1);
    let j = 128; // y = 1.0
    let h = &setup.h;
    let s = mc_run_noise(&["s2"], 10_000, 500, setup.spec, |n| {
        let s = compute_s_from_noise(n, h)?;
        Ok(vec![(s.values()[j] - s.values()[0]).powi(2)])
    })
    .unwrap();
    let exact = h.increment_variance(j as i64);
    assert!(s.within(0, exact, K_SE), "{} ± {} vs {exact}", s.mean[0], s.standard_error[0]);
}

#[test]
fn increment_covariance_is_the_box_difference() {
    let setup = Setup::new(8.0, 1024, 0.1);
    let h = &setup.h;
    let (x, y, w, z) = (40_i64, 95, 60, 150);
    let s = mc_run_noise(&["sq"], 10_000, 900, setup.spec, |n| {
        let s = compute_s_from_noise(n, h)?;
        let v = s.values();
        let at = |i: i64| v[i as usize];
        Ok(vec![(at(x) - at(y)) * (at(w) - at(z))])
    })
    .unwrap();
    let exact = h.box_difference(x - w, x - y, z - w);
    assert!(s.within(0, exact, K_SE), "{} ± {} vs {exact}", s.mean[0], s.standard_error[0]);
}

#[test]
fn green_convolution_gains_one_derivative() {
    let spec = GridSpec::new(8.0, 1 << 14).unwrap();
    let k = kernels::build_g(spec);
    let alpha = -0.6;
    let mut ratios = Vec::new();
    let mut gains = Vec::new();
    for seed in 0..100 {
        let f = lacunary_field(spec, alpha, seed);
        let gf = k.g_convolve(&f).unwrap();
        let nf = besov_norm(&f, alpha);
        let ng = besov_norm(&gf, alpha + 1.0);
        ratios.push(ng.norm / nf.norm);
        gains.push(ng.fitted_exponent - nf.fitted_exponent);
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max / min < 4.0, "{min} .. {max}");
    let gain = gains.iter().sum::<f64>() / gains.len() as f64;
    assert!((gain - 1.0).abs() <= 0.1, "{gain}");
    let _ = analysis::median(&ratios);
}
