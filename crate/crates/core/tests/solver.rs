mod common;

use std::time::Instant;

use common::Setup;
use fpam_core::solver::{self, NormKind, SolverConfig};
use fpam_core::{spectral, GridFunction};

fn full_cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn picard_matches_the_exponential_stepper() {
    let setup = Setup::new(8.0, 4096, 0.1);
    let (_, cov, op) = setup.transformed(11);
    let v0 = cov.exp_neg_s.clone();
    let cfg = full_cfg();
    let t0 = Instant::now();
    let picard = solver::solve_transformed(&cov, &op, &v0, &cfg).unwrap();
    let t1 = Instant::now();
    let stepper = solver::solve_transformed_stepper(&cov, &op, &v0, &cfg).unwrap();
    eprintln!("picard {:?} stepper {:?} iters {:?}", t1 - t0, t1.elapsed(), picard.picard_iterations);
    let (_, a) = picard.last().unwrap();
    let (_, b) = stepper.last().unwrap();
    let err = a.sub(b).unwrap().max_norm() / a.max_norm();
    eprintln!("picard vs stepper {err:e}");
    assert!(err <= 1e-3);
}

#[test]
fn change_of_variables_reproduces_the_direct_solution() {
    let setup = Setup::new(8.0, 4096, 0.1);
    let (xe, cov, op) = setup.transformed(5);
    let cfg = full_cfg();
    let one = GridFunction::constant(setup.spec, 1.0);
    let direct = solver::solve_direct(&xe, cov.c_eps, &one, &cfg).unwrap();
    let v = solver::solve_transformed(&cov, &op, &cov.exp_neg_s, &cfg).unwrap();
    let u = solver::reconstruct_u(&cov, &v).unwrap();
    let err = direct.max_relative_difference(&u).unwrap();
    eprintln!("direct vs reconstructed {err:e}");
    assert!(err <= 1e-2);
    for (_, f) in direct.iter() {
        assert!(f.values().iter().all(|&x| x > 0.0));
    }
}

#[test]
fn xnorm_of_a_decaying_mode() {
    let spec = fpam_core::GridSpec::new(8.0, 16).unwrap();
    let k = 2.0 * 2.0 * std::f64::consts::PI / 8.0;
    let v0 = GridFunction::from_fn(spec, |x| (k * x).cos()).unwrap().to_spectral();
    let dt = 1e-4;
    let times: Vec<f64> = (1..=10_000).map(|n| n as f64 * dt).collect();
    let fields = times
        .iter()
        .map(|&t| spectral::cauchy_semigroup(&v0, t).unwrap().to_physical())
        .collect();
    let record = solver::EvolutionRecord::new(times, fields).unwrap();
    let t_star = (0.9 / k).min(1.0);
    let exact = t_star.powf(0.9) * (-t_star * k).exp();
    let got = solver::xnorm(&record, 0.1, NormKind::Max);
    assert!((got - exact).abs() <= 1e-6, "{got} vs {exact}");
}

#[test]
fn exponential_euler_is_first_order() {
    let setup = Setup::new(8.0, 1024, 0.1);
    let (xe, cov, _) = setup.transformed(3);
    let one = GridFunction::constant(setup.spec, 1.0);
    let end = |dt: f64| {
        let cfg = SolverConfig {
            dt,
            record_every: (0.5 / dt).round() as usize,
            richardson: false,
            ..full_cfg()
        };
        let rec = solver::solve_direct(&xe, cov.c_eps, &one, &cfg).unwrap();
        rec.last().unwrap().1.clone()
    };
    let u: Vec<GridFunction> = [2e-3, 1e-3, 5e-4].iter().map(|&dt| end(dt)).collect();
    let ratio = u[0].sub(&u[1]).unwrap().max_norm() / u[1].sub(&u[2]).unwrap().max_norm();
    assert!((1.7..=2.3).contains(&ratio), "{ratio}");
}

#[test]
fn contraction_window_shrinks_as_g_grows() {
    let setup = Setup::new(8.0, 512, 0.1);
    let (_, cov, _) = setup.transformed(9);
    let zero = fpam_core::coefficients::NonlocalOperator::zero(setup.spec);
    let cfg = SolverConfig {
        t_final: 0.4,
        picard_max_iters: 12,
        ..full_cfg()
    };
    let candidates = [0.4, 0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003];
    let windows: Vec<f64> = [1.0, 4.0, 16.0, 64.0]
        .iter()
        .map(|&a| {
            solver::largest_convergent_subinterval(&cov.g.scale(a), &zero, &cov.exp_neg_s, &candidates, &cfg)
                .unwrap()
                .unwrap_or(0.0)
        })
        .collect();
    assert!(windows.windows(2).all(|w| w[1] <= w[0]), "{windows:?}");
    assert!(windows[3] < windows[0], "{windows:?}");
}

#[test]
fn picard_solution_satisfies_the_differential_form() {
    let setup = Setup::new(8.0, 1024, 0.1);
    let (_, cov, op) = setup.transformed(17);
    let cfg = SolverConfig {
        t_final: 0.1,
        record_every: 1,
        ..full_cfg()
    };
    let v = solver::solve_transformed(&cov, &op, &cov.exp_neg_s, &cfg).unwrap();
    let dt = cfg.dt;
    let f = v.fields();
    let mut worst: f64 = 0.0;
    for n in [10usize, 40, 70] {
        // (∂_t − Λ)v at t_n, with the Λ-flow factored out of the difference quotient.
        let fwd = f[n + 1].to_spectral().apply_multiplier(|k| (dt * k.abs()).exp());
        let bwd = spectral::cauchy_semigroup(&f[n - 1].to_spectral(), dt).unwrap();
        let lhs = fwd.add(&bwd.scale(-1.0)).unwrap().scale(0.5 / dt).to_physical();
        let rhs = cov.g.mul(&f[n]).unwrap().add(&op.apply(&f[n]).unwrap()).unwrap();
        worst = worst.max(lhs.sub(&rhs).unwrap().max_norm() / rhs.max_norm());
    }
    assert!(worst <= 1e-2, "{worst:e}");
}

#[test]
fn renormalization_routes_give_the_same_solution() {
    let setup = Setup::new(8.0, 1024, 0.1);
    let (xe, _, _) = setup.transformed(23);
    let c = fpam_core::kernels::renorm_constant(&setup.h, 64).unwrap();
    let dc = (c.value_integral - c.value_spectral).abs();
    assert!(dc <= 1e-3 * c.value_spectral.abs());
    let cfg = SolverConfig {
        richardson: false,
        ..full_cfg()
    };
    let one = GridFunction::constant(setup.spec, 1.0);
    let a = solver::solve_direct(&xe, c.value_integral, &one, &cfg).unwrap();
    let b = solver::solve_direct(&xe, c.value_spectral, &one, &cfg).unwrap();
    let bound = (cfg.t_final * dc).exp_m1();
    let err = a.max_relative_difference(&b).unwrap();
    assert!(err <= bound * (1.0 + 1e-6) + 1e-13, "{err:e} vs {bound:e}");
}
