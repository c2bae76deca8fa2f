//! The five studies. Each returns a [`Report`] whose tables depend only on
//! the configuration, never on scheduling.

use std::f64::consts::PI;
use std::sync::Arc;

use fpam_core::analysis::{self, BlockRange, McSummary};
use fpam_core::coefficients::{
    compute_s, compute_s_from_noise, compute_u, compute_ztilde, ChangeOfVariables, NonlocalOperator, PvQuadrature,
};
use fpam_core::kernels::{self, Autocorrelation, KernelSet};
use fpam_core::noise::{self, Mollifier, NoiseRealization};
use fpam_core::solver::{self, EvolutionRecord, NormKind, SolverConfig};
use fpam_core::spectral::{self, half_laplacian};
use fpam_core::{GridFunction, GridSpec, Result};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExportKind, NoiseMode, SolverKind};
use crate::report::{fmt_f64, Attachment, Check, Relation, Report, Table};

/// Standard errors allowed between an MC mean and its exact target.
pub const K_SE: f64 = 4.0;

fn noise_for(cfg: &ExperimentConfig, seed: u64, spec: GridSpec) -> NoiseRealization {
    match cfg.noise {
        NoiseMode::White => noise::sample_white_noise(seed, spec),
        NoiseMode::Zero => NoiseRealization::zero(spec),
    }
}

fn autocorrelations(kernels: &KernelSet, scales: &[f64]) -> Result<Vec<Autocorrelation>> {
    let rho = Mollifier::standard();
    scales.par_iter().map(|&e| kernels::build_h(kernels, e, &rho)).collect()
}

fn f(x: f64) -> String {
    fmt_f64(x)
}

/// Strictly decreasing sequence: `max_i (a_{i+1} − a_i) < 0`.
fn largest_increase(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max)
}

fn solver_config(cfg: &ExperimentConfig) -> SolverConfig {
    let mut s = SolverConfig {
        kappa: cfg.kappa,
        t_final: cfg.t_final,
        dt: cfg.dt,
        ..SolverConfig::default()
    };
    let steps = s.steps();
    s.record_every = (1..=s.record_every).rev().find(|d| steps % d == 0).unwrap_or(1);
    s
}

pub fn run_renorm(cfg: &ExperimentConfig) -> Result<Report> {
    let spec = GridSpec::new(cfg.period, cfg.points)?;
    let kernels = kernels::build_g(spec);
    let hs = autocorrelations(&kernels, &cfg.eps_ladder)?;
    let cs = hs
        .par_iter()
        .map(|h| kernels::renorm_constant(h, cfg.translates))
        .collect::<Result<Vec<_>>>()?;

    let gap_tol = cfg.tolerance("relative_gap", 1e-3);
    let diff_tol = cfg.tolerance("difference", 0.03);
    let mut report = Report::new("renorm");
    let mut table = Table::new(
        "renorm",
        &[
            "eps",
            "c_spectral",
            "c_integral",
            "asymptote",
            "drift",
            "relative_gap",
            "difference",
            "expected_difference",
            "deviation",
        ],
    );
    let mut deviations = Vec::new();
    for (i, c) in cs.iter().enumerate() {
        let (diff, expected, dev) = match i.checked_sub(1).map(|p| &cs[p]) {
            Some(prev) => {
                let d = c.value_spectral - prev.value_spectral;
                let e = (prev.eps / c.eps).ln() / PI;
                (d, e, (d - e).abs())
            }
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        table.push(vec![
            f(c.eps),
            f(c.value_spectral),
            f(c.value_integral),
            f(c.asymptote),
            f(c.drift()),
            f(c.relative_gap()),
            f(diff),
            f(expected),
            f(dev),
        ]);
        report.checks.push(Check::new(
            format!("relative_gap eps={}", c.eps),
            c.relative_gap(),
            Relation::AtMost,
            gap_tol,
        ));
        if i > 0 {
            deviations.push(dev);
            report.checks.push(Check::new(
                format!("difference_deviation eps={}", c.eps),
                dev,
                Relation::AtMost,
                diff_tol,
            ));
        }
    }
    if deviations.len() >= 2 {
        report.checks.push(Check::new(
            "deviation_decreasing",
            largest_increase(&deviations),
            Relation::Below,
            0.0,
        ));
    }
    let drifts: Vec<f64> = cs.iter().map(|c| c.drift()).collect();
    let spread = drifts.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - drifts.iter().cloned().fold(f64::INFINITY, f64::min);
    report.checks.push(Check::info(
        "drift_spread",
        spread,
        Relation::AtMost,
        diff_tol * deviations.len() as f64,
    ));
    report.tables.push(table);
    Ok(report)
}

struct Rung {
    u: EvolutionRecord,
    v: EvolutionRecord,
}

struct SeedRun {
    seed: u64,
    failures: Vec<(usize, String)>,
}

struct ConvergeSetup {
    spec: GridSpec,
    kernels: KernelSet,
    hs: Vec<Autocorrelation>,
    quad: Arc<PvQuadrature>,
    solver: SolverConfig,
}

fn solve_rung(cfg: &ExperimentConfig, setup: &ConvergeSetup, noise: &NoiseRealization, i: usize) -> Result<Rung> {
    let h = &setup.hs[i];
    let xi_eps = noise::mollify(noise, h.eps(), &Mollifier::standard())?;
    let one = GridFunction::constant(setup.spec, 1.0);
    match cfg.solver {
        SolverKind::Direct => {
            let s = compute_s(&xi_eps, &setup.kernels)?;
            // Without noise there is nothing to renormalize.
            let c = match cfg.noise {
                NoiseMode::White => kernels::renorm_constant_spectral(h),
                NoiseMode::Zero => 0.0,
            };
            let u = solver::solve_direct(&xi_eps, c, &one, &setup.solver)?;
            let e = s.map(|x| (-x).exp());
            let v = u.map(|f| e.mul(f))?;
            Ok(Rung { u, v })
        }
        SolverKind::Transformed => {
            let (mut cov, op) = ChangeOfVariables::assemble(&xi_eps, &setup.kernels, h, setup.quad.clone())?;
            if cfg.noise == NoiseMode::Zero {
                // g = Z = −C_ε at zero noise; drop the renormalization as above.
                cov.g = cov.g.map(|x| x + cov.c_eps);
                cov.c_eps = 0.0;
            }
            let v = solver::solve_transformed(&cov, &op, &cov.exp_neg_s.mul(&one)?, &setup.solver)?;
            let u = solver::reconstruct_u(&cov, &v)?;
            Ok(Rung { u, v })
        }
    }
}

pub fn run_converge(cfg: &ExperimentConfig) -> Result<Report> {
    let spec = GridSpec::new(cfg.period, cfg.points)?;
    let kernels = kernels::build_g(spec);
    let hs = autocorrelations(&kernels, &cfg.eps_ladder)?;
    let setup = ConvergeSetup {
        spec,
        kernels,
        hs,
        quad: Arc::new(PvQuadrature::new(spec)),
        solver: solver_config(cfg),
    };
    setup.solver.validate()?;
    let kappa = cfg.kappa;
    let norms = [
        ("d_max", NormKind::Max),
        ("d_besov_u", NormKind::Besov(0.5 - kappa)),
        ("d_besov_v", NormKind::Besov(0.5 + kappa)),
    ];
    let pairs = cfg.eps_ladder.len() - 1;

    let seeds: Vec<u64> = (0..cfg.n_samples as u64).map(|i| cfg.seed0 + i).collect();
    // Per seed: per rung pair, the three distances (None if a solve failed).
    let results: Vec<(SeedRun, Vec<Option<[f64; 3]>>)> = seeds
        .par_iter()
        .map(|&seed| {
            let noise = noise_for(cfg, seed, spec);
            let rungs: Vec<_> = (0..cfg.eps_ladder.len())
                .map(|i| solve_rung(cfg, &setup, &noise, i).map_err(|e| e.to_string()))
                .collect();
            let d = (0..pairs)
                .map(|i| match (&rungs[i], &rungs[i + 1]) {
                    (Ok(a), Ok(b)) => {
                        let du = a.u.difference(&b.u).ok()?;
                        let dv = a.v.difference(&b.v).ok()?;
                        Some([
                            solver::xnorm(&du, kappa, norms[0].1),
                            solver::xnorm(&du, kappa, norms[1].1),
                            solver::xnorm(&dv, kappa, norms[2].1),
                        ])
                    }
                    _ => None,
                })
                .collect();
            // Records are large; keep only the failures.
            let failures = rungs
                .into_iter()
                .enumerate()
                .filter_map(|(i, r)| r.err().map(|e| (i, e)))
                .collect();
            (SeedRun { seed, failures }, d)
        })
        .collect();

    let mut report = Report::new("converge");
    let mut per_seed = Table::new("per_seed", &["seed", "eps", "eps_next", "d_max", "d_besov_u", "d_besov_v"]);
    let mut failures = Table::new("failures", &["seed", "eps", "error"]);
    let mut columns: Vec<[Vec<f64>; 3]> = vec![Default::default(); pairs];
    for (run, d) in &results {
        for (i, e) in &run.failures {
            failures.push(vec![run.seed.to_string(), f(cfg.eps_ladder[*i]), e.clone()]);
        }
        for (i, di) in d.iter().enumerate() {
            let cells = match di {
                Some(v) => {
                    for k in 0..3 {
                        columns[i][k].push(v[k]);
                    }
                    v.iter().map(|&x| f(x)).collect()
                }
                None => vec!["NaN".to_string(); 3],
            };
            let mut row = vec![run.seed.to_string(), f(cfg.eps_ladder[i]), f(cfg.eps_ladder[i + 1])];
            row.extend(cells);
            per_seed.push(row);
        }
    }
    let mut medians = Table::new(
        "median",
        &["eps", "eps_next", "median_d_max", "median_d_besov_u", "median_d_besov_v", "n_ok"],
    );
    let mut med: [Vec<f64>; 3] = Default::default();
    for (i, col) in columns.iter().enumerate() {
        let m: Vec<f64> = col
            .iter()
            .map(|c| if c.is_empty() { f64::NAN } else { analysis::median(c) })
            .collect();
        for k in 0..3 {
            med[k].push(m[k]);
        }
        medians.push(vec![
            f(cfg.eps_ladder[i]),
            f(cfg.eps_ladder[i + 1]),
            f(m[0]),
            f(m[1]),
            f(m[2]),
            col[0].len().to_string(),
        ]);
    }

    match cfg.noise {
        NoiseMode::White => {
            report.checks.push(Check::new(
                "median_d_max_decreasing",
                largest_increase(&med[0]),
                Relation::Below,
                0.0,
            ));
            for (k, label) in [(1, "median_d_besov_u_decreasing"), (2, "median_d_besov_v_decreasing")] {
                report
                    .checks
                    .push(Check::info(label, largest_increase(&med[k]), Relation::Below, 0.0));
            }
        }
        NoiseMode::Zero => {
            let worst = columns.iter().flatten().flatten().cloned().fold(0.0, f64::max);
            report.checks.push(Check::new(
                "d_identically_zero",
                worst,
                Relation::AtMost,
                cfg.tolerance("zero_noise", 1e-12),
            ));
        }
    }
    report.checks.push(Check::info(
        "solve_failures",
        failures.rows.len() as f64,
        Relation::AtMost,
        0.0,
    ));
    report.tables.extend([per_seed, medians, failures]);
    Ok(report)
}

fn rel_max(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    Ok(a.sub(b)?.max_norm() / a.max_norm().max(f64::MIN_POSITIVE))
}

/// `e^{−S}Λ(e^S v)` against `Λv + vΛS + Ξv + Z̃v` on smooth inputs.
fn operator_identity_error(spec: GridSpec, quad: &Arc<PvQuadrature>) -> Result<f64> {
    let w = 2.0 * PI / spec.period();
    let s = GridFunction::from_fn(spec, |x| 0.6 * (w * x).cos() + 0.3 * (3.0 * w * x).sin())?;
    let v = GridFunction::from_fn(spec, |x| 1.0 + 0.5 * (2.0 * w * x).sin() + 0.2 * (w * x).cos())?;
    let lhs = half_laplacian(&s.map(f64::exp).mul(&v)?.to_spectral())
        .to_physical()
        .mul(&s.map(|x| (-x).exp()))?;
    let lv = half_laplacian(&v.to_spectral()).to_physical();
    let ls = half_laplacian(&s.to_spectral()).to_physical();
    let xi_v = NonlocalOperator::new(&s, quad.clone(), None)?.apply(&v)?;
    let zt = compute_ztilde(&s, quad)?;
    let rhs = lv.add(&v.mul(&ls)?)?.add(&xi_v)?.add(&zt.mul(&v)?)?;
    rel_max(&lhs, &rhs)
}

/// Worst errors of the spectral batteries on a field built from `noise`:
/// semigroup law, Parseval, linearity of convolution, FFT round trip.
fn spectral_batteries(noise: &NoiseRealization) -> Result<[f64; 4]> {
    let spec = noise.spec();
    let xi = noise.xi();
    let base = if xi.energy() > 0.0 {
        spectral::cauchy_semigroup(xi, 0.05)?
    } else {
        fpam_core::analysis::lacunary_field(spec, 0.0, noise.seed())
    };
    let field = base.to_physical();
    let scale = field.max_norm();

    let (s, t) = (0.013, 0.07);
    let two = spectral::cauchy_semigroup(&spectral::cauchy_semigroup(&base, s)?, t)?.to_physical();
    let one = spectral::cauchy_semigroup(&base, s + t)?.to_physical();
    let semigroup = two.sub(&one)?.max_norm() / scale;

    let plancherel = base.energy();
    let direct = field.map(|x| x * x).integral();
    let parseval = (plancherel - direct).abs() / direct;

    let g = field.map(|x| x.tanh());
    let k = spectral::cauchy_semigroup(&base, 0.3)?.to_physical();
    let (a, b) = (1.7, -0.4);
    let lhs = spectral::circular_convolve(&field.scale(a).add(&g.scale(b))?, &k)?;
    let rhs = spectral::circular_convolve(&field, &k)?
        .scale(a)
        .add(&spectral::circular_convolve(&g, &k)?.scale(b))?;
    let linearity = lhs.sub(&rhs)?.max_norm() / lhs.max_norm().max(f64::MIN_POSITIVE);

    let round_trip = field.to_spectral().to_physical().sub(&field)?.max_norm() / scale;
    Ok([semigroup, parseval, linearity, round_trip])
}

pub fn run_identity(cfg: &ExperimentConfig) -> Result<Report> {
    let spec = GridSpec::new(cfg.period, cfg.points)?;
    let kernels = kernels::build_g(spec);
    let h = kernels::build_h(&kernels, cfg.eps, &Mollifier::standard())?;
    let quad = Arc::new(PvQuadrature::new(spec));
    let noise = noise_for(cfg, cfg.seed0, spec);
    let xi_eps = noise::mollify(&noise, cfg.eps, &Mollifier::standard())?;
    let (cov, op) = ChangeOfVariables::assemble(&xi_eps, &kernels, &h, quad.clone())?;
    let scfg = solver_config(cfg);

    let one = GridFunction::constant(spec, 1.0);
    let v0 = cov.exp_neg_s.clone();
    let ((direct, picard), stepper) = rayon::join(
        || {
            rayon::join(
                || solver::solve_direct(&xi_eps, cov.c_eps, &one, &scfg),
                || solver::solve_transformed(&cov, &op, &v0, &scfg),
            )
        },
        || solver::solve_transformed_stepper(&cov, &op, &v0, &scfg),
    );
    let (direct, picard, stepper) = (direct?, picard?, stepper?);
    let reconstructed = solver::reconstruct_u(&cov, &picard)?;

    let zt = compute_ztilde(&cov.s, &quad)?;
    let z_split = zt.map(|z| z - cov.c_eps).sub(&cov.z()?)?.max_norm() / (1.0 + zt.max_norm());
    let [semigroup, parseval, linearity, round_trip] = spectral_batteries(&noise)?;
    let picard_vs_stepper = rel_max(picard.last().expect("nonempty").1, stepper.last().expect("nonempty").1)?;

    let mut report = Report::new("identity");
    let t = |name: &str, default: f64| cfg.tolerance(name, default);
    report.checks.extend([
        Check::new(
            "operator_identity",
            operator_identity_error(spec, &quad)?,
            Relation::AtMost,
            t("operator_identity", 1e-3),
        ),
        Check::new("z_assembly", z_split, Relation::AtMost, t("z_assembly", 1e-8)),
        Check::new(
            "direct_vs_transformed",
            direct.max_relative_difference(&reconstructed)?,
            Relation::AtMost,
            t("direct_vs_transformed", 1e-2),
        ),
        Check::new("picard_vs_stepper", picard_vs_stepper, Relation::AtMost, t("picard_vs_stepper", 1e-3)),
        Check::new("semigroup_law", semigroup, Relation::AtMost, t("semigroup_law", 1e-12)),
        Check::new("parseval", parseval, Relation::AtMost, t("parseval", 1e-12)),
        Check::new("linearity", linearity, Relation::AtMost, t("linearity", 1e-12)),
        Check::new("fft_round_trip", round_trip, Relation::AtMost, t("fft_round_trip", 1e-12)),
        Check::info("s_max_norm", cov.s.max_norm(), Relation::AtLeast, 0.0),
        Check::info(
            "picard_max_iterations",
            picard.picard_iterations.iter().copied().max().unwrap_or(0) as f64,
            Relation::AtMost,
            scfg.picard_max_iters as f64,
        ),
    ]);

    report.attachments.push(Attachment::Noise(noise));
    if cfg.export != ExportKind::None {
        report.attachments.push(Attachment::Record {
            name: "u_direct".into(),
            record: direct,
            kind: cfg.export,
        });
        report.attachments.push(Attachment::Record {
            name: "v_picard".into(),
            record: picard,
            kind: cfg.export,
        });
    }
    Ok(report)
}

const INCREMENT_OFFSETS: [f64; 5] = [0.05, 0.1, 0.25, 0.5, 1.0];
const ISSERLIS_NODES: [f64; 4] = [0.3, 0.9, 0.6, 1.7];
pub const LAMBDAS: [f64; 3] = [1.0, 0.5, 0.25];

fn node(spec: GridSpec, x: f64) -> i64 {
    (x / spec.dx()).round() as i64
}

pub fn run_chaos(cfg: &ExperimentConfig) -> Result<Report> {
    let spec = GridSpec::new(cfg.period, cfg.points)?;
    let kernels = kernels::build_g(spec);
    let hs = autocorrelations(&kernels, &cfg.eps_ladder)?;
    let focus = kernels::build_h(&kernels, cfg.eps, &Mollifier::standard())?;
    let quad = PvQuadrature::new(spec);
    let bumps = LAMBDAS
        .iter()
        .map(|&l| analysis::bump_weights(spec, 0.0, l, cfg.eta))
        .collect::<Result<Vec<_>>>()?;
    let pair = |u: &GridFunction, b: &[(usize, f64)]| analysis::neumaier_sum(b.iter().map(|&(j, w)| w * u.values()[j]));

    let inc: Vec<i64> = INCREMENT_OFFSETS.iter().map(|&y| node(spec, y)).collect();
    let [x, y, z, w] = ISSERLIS_NODES.map(|p| node(spec, p));
    let mu_a = focus.increment_variance(y - x);
    let mu_b = focus.increment_variance(w - z);
    let n = spec.points() as i64;
    let at = |s: &GridFunction, j: i64| s.values()[j.rem_euclid(n) as usize];

    let mut names: Vec<String> = INCREMENT_OFFSETS.iter().map(|y| format!("increment_sq y={y}")).collect();
    names.push("isserlis".into());
    names.extend(LAMBDAS.iter().map(|l| format!("u_pair lambda={l}")));
    names.extend(LAMBDAS.iter().map(|l| format!("u_pair_sq lambda={l}")));
    let pairs = cfg.eps_ladder.len().saturating_sub(1);
    for i in 0..pairs {
        for l in LAMBDAS {
            names.push(format!(
                "u_diff_sq eps={} eps_next={} lambda={l}",
                cfg.eps_ladder[i],
                cfg.eps_ladder[i + 1]
            ));
        }
    }
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();

    let summary = analysis::mc_run(&name_refs, cfg.n_samples, cfg.seed0, |seed| {
        let noise = noise_for(cfg, seed, spec);
        let s = compute_s_from_noise(&noise, &focus)?;
        let u = compute_u(&s, &focus, &quad)?;
        let mut row = Vec::with_capacity(names.len());
        row.extend(inc.iter().map(|&j| (at(&s, j) - at(&s, 0)).powi(2)));
        let a = (at(&s, y) - at(&s, x)).powi(2);
        let b = (at(&s, w) - at(&s, z)).powi(2);
        row.push((a - mu_a) * (b - mu_b));
        let up: Vec<f64> = bumps.iter().map(|b| pair(&u, b)).collect();
        row.extend(up.iter().copied());
        row.extend(up.iter().map(|p| p * p));
        let us = hs
            .iter()
            .map(|h| compute_u(&compute_s_from_noise(&noise, h)?, h, &quad))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..pairs {
            let d = us[i].sub(&us[i + 1])?;
            row.extend(bumps.iter().map(|b| pair(&d, b).powi(2)));
        }
        Ok(row)
    })?;

    let mut report = Report::new("chaos");
    let k = cfg.tolerance("standard_errors", K_SE);
    let mut mc = Table::new("mc_summary", &["statistic", "n", "mean", "stderr", "target", "z"]);
    let mut push_mc = |i: usize, target: Option<f64>| {
        let z = target.map_or(f64::NAN, |t| summary.z_score(i, t));
        mc.push(vec![
            summary.names[i].clone(),
            summary.n.to_string(),
            f(summary.mean[i]),
            f(summary.standard_error[i]),
            target.map_or_else(String::new, f),
            f(z),
        ]);
        z
    };

    let mut idx = 0;
    let mut increments = Table::new("increments", &["y", "node_offset", "mc_mean", "stderr", "exact"]);
    for (yv, &j) in INCREMENT_OFFSETS.iter().zip(&inc) {
        let exact = focus.increment_variance(j);
        let z = push_mc(idx, Some(exact));
        increments.push(vec![
            f(*yv),
            j.to_string(),
            f(summary.mean[idx]),
            f(summary.standard_error[idx]),
            f(exact),
        ]);
        report
            .checks
            .push(Check::new(format!("increment_variance y={yv}"), z.abs(), Relation::AtMost, k));
        idx += 1;
    }
    let exact = 2.0 * focus.box_difference(x - w, x - y, z - w).powi(2);
    let zi = push_mc(idx, Some(exact));
    report
        .checks
        .push(Check::new("isserlis", zi.abs(), Relation::AtMost, k));
    idx += 1;
    for l in LAMBDAS {
        let z = push_mc(idx, Some(0.0));
        report
            .checks
            .push(Check::new(format!("u_centred lambda={l}"), z.abs(), Relation::AtMost, k));
        idx += 1;
    }
    let mut moments = Table::new("u_moments", &["lambda", "second_moment", "stderr"]);
    let mut second = Vec::new();
    for l in LAMBDAS {
        push_mc(idx, None);
        moments.push(vec![f(l), f(summary.mean[idx]), f(summary.standard_error[idx])]);
        second.push(summary.mean[idx]);
        idx += 1;
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = LAMBDAS.iter().zip(&second).map(|(l, m)| (l.ln(), m.ln())).unzip();
    let slope = analysis::linear_fit(&lx, &ly).map_or(f64::NAN, |p| p.0);
    report.checks.push(Check::new(
        "u_second_moment_slope",
        slope,
        Relation::AtLeast,
        cfg.tolerance("u_second_moment_slope", -0.3),
    ));

    let mut diffs = Table::new("u_differences", &["eps", "eps_next", "lambda", "second_moment", "stderr"]);
    let mut by_lambda = vec![Vec::new(); LAMBDAS.len()];
    for i in 0..pairs {
        for (li, l) in LAMBDAS.iter().enumerate() {
            push_mc(idx, None);
            diffs.push(vec![
                f(cfg.eps_ladder[i]),
                f(cfg.eps_ladder[i + 1]),
                f(*l),
                f(summary.mean[idx]),
                f(summary.standard_error[idx]),
            ]);
            by_lambda[li].push(summary.mean[idx]);
            idx += 1;
        }
    }
    if pairs >= 2 {
        for (li, l) in LAMBDAS.iter().enumerate() {
            report.checks.push(Check::new(
                format!("u_difference_decreasing lambda={l}"),
                largest_increase(&by_lambda[li]),
                Relation::Below,
                0.0,
            ));
        }
    }
    report.checks.push(Check::info(
        "max_relative_stderr_of_moments",
        max_relative_se(&summary, INCREMENT_OFFSETS.len() + 1 + LAMBDAS.len()),
        Relation::AtMost,
        cfg.tolerance("relative_stderr", 0.05),
    ));
    report.tables.extend([mc, increments, moments, diffs]);
    Ok(report)
}

/// Largest stderr/|mean| over the statistics from index `from` on.
fn max_relative_se(s: &McSummary, from: usize) -> f64 {
    (from..s.names.len())
        .map(|i| s.standard_error[i] / s.mean[i].abs())
        .fold(0.0, f64::max)
}

pub const SCHAUDER_ALPHA: f64 = -0.55;
pub const SCHAUDER_BETA: f64 = 0.4;

pub fn run_regularity(cfg: &ExperimentConfig) -> Result<Report> {
    let spec = GridSpec::new(cfg.period, cfg.points)?;
    let kernels = kernels::build_g(spec);
    let h = kernels::build_h(&kernels, cfg.eps, &Mollifier::standard())?;
    let xi_range = BlockRange::default_for(spec);
    let s_range = BlockRange::below_scale(cfg.eps);

    let rows = analysis::mc_collect(cfg.n_samples, cfg.seed0, |seed| {
        let noise = noise_for(cfg, seed, spec);
        let xi = analysis::regularity_exponent(noise.xi(), xi_range)?;
        let s = compute_s_from_noise(&noise, &h)?;
        let se = analysis::regularity_exponent(&s.to_spectral(), s_range)?;
        let lac = analysis::lacunary_field(spec, SCHAUDER_ALPHA, seed);
        let slope = analysis::semigroup_decay_slope(&lac, SCHAUDER_ALPHA, SCHAUDER_BETA, (1e-3, 1e-1), 21)?;
        Ok([xi, se, slope])
    })?;

    let mut per_seed = Table::new("per_seed", &["seed", "xi_exponent", "s_exponent", "schauder_slope"]);
    for (i, r) in rows.iter().enumerate() {
        per_seed.push(vec![(cfg.seed0 + i as u64).to_string(), f(r[0]), f(r[1]), f(r[2])]);
    }
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    let summary = analysis::summarize(&["xi_exponent", "s_exponent", "schauder_slope"], cfg.seed0, &rows);
    let slope = -(SCHAUDER_BETA - SCHAUDER_ALPHA);
    let targets = [
        ("xi_exponent", -0.65, -0.45),
        ("s_exponent", 0.35, 0.55),
        ("schauder_slope", slope - 0.1, slope + 0.1),
    ];
    let mut table = Table::new("summary", &["quantity", "mean", "stderr", "target_lo", "target_hi"]);
    let mut report = Report::new("regularity");
    for (i, &(name, lo, hi)) in targets.iter().enumerate() {
        let lo = cfg.tolerance(&format!("{name}_lo"), lo);
        let hi = cfg.tolerance(&format!("{name}_hi"), hi);
        let mean = summary.mean[i];
        table.push(vec![name.to_string(), f(mean), f(summary.standard_error[i]), f(lo), f(hi)]);
        report.checks.push(Check::new(format!("{name}_lo"), mean, Relation::AtLeast, lo));
        report.checks.push(Check::new(format!("{name}_hi"), mean, Relation::AtMost, hi));
    }

    let noise = noise_for(cfg, cfg.seed0, spec);
    let s = compute_s_from_noise(&noise, &h)?;
    let mut blocks = Table::new("blocks", &["field", "alpha", "j", "block_sup", "weighted"]);
    for (name, field, alpha) in [("xi", noise.xi().clone(), -0.5), ("s", s.to_spectral(), 0.5)] {
        for (j, sup, weighted) in analysis::besov_norm(&field, alpha).weighted() {
            blocks.push(vec![name.to_string(), f(alpha), j.to_string(), f(sup), f(weighted)]);
        }
    }
    report.tables.extend([table, per_seed, blocks]);
    Ok(report)
}
