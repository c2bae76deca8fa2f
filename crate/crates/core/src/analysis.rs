//! Norm estimators on dyadic Fourier blocks, bump pairings, small regression
//! helpers, and the Monte Carlo engine.

use std::ops::RangeInclusive;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{self, GridFunction, GridSpec, SpectralFunction};
use crate::noise::{self, NoiseRealization};

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Ordinary least squares `y ≈ a + b·x`; returns `(b, a)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = neumaier_sum(xs.iter().copied()) / n;
    let my = neumaier_sum(ys.iter().copied()) / n;
    let sxx = neumaier_sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let sxy = neumaier_sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Dyadic block containing angular wavenumber κ: `−1` for `|κ| < 1`,
/// otherwise `j` with `2^j ≤ |κ| < 2^{j+1}`.
pub fn block_index(kappa: f64) -> i32 {
    let a = kappa.abs();
    if a < 1.0 {
        -1
    } else {
        a.log2().floor() as i32
    }
}

/// Highest block touched by the grid.
pub fn max_block(spec: GridSpec) -> i32 {
    block_index(spec.wavenumber(spec.nyquist_index()))
}

/// Inclusive range of blocks used for exponent regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRange {
    pub lo: i32,
    pub hi: i32,
}

impl BlockRange {
    pub fn new(lo: i32, hi: i32) -> Self {
        Self { lo, hi }
    }

    /// `[3, j_max − 2]`: drops the low blocks carrying the periodization and
    /// the top two carrying aliasing.
    pub fn default_for(spec: GridSpec) -> Self {
        Self::new(3, max_block(spec) - 2)
    }

    /// `[1, ⌊log₂(1/ε)⌋]`: blocks below the mollification scale but above the
    /// unit scale where compactly supported kernels flatten out.
    pub fn below_scale(eps: f64) -> Self {
        Self::new(1, (1.0 / eps).log2().floor() as i32)
    }

    pub fn contains(&self, j: i32) -> bool {
        (self.lo..=self.hi).contains(&j)
    }

    pub fn iter(&self) -> RangeInclusive<i32> {
        self.lo..=self.hi
    }
}

/// Block sup-norms `‖Δ_j f‖_∞` for `j = −1..=j_max`.
pub fn block_sups(f: &SpectralFunction) -> Vec<(i32, f64)> {
    let spec = f.spec();
    let blocks: Vec<i32> = (-1..=max_block(spec)).collect();
    let index: Vec<i32> = (0..spec.points()).map(|i| block_index(spec.wavenumber(i))).collect();
    let mask = |j: i32| -> Vec<Complex64> {
        f.coeffs()
            .iter()
            .zip(&index)
            .map(|(&c, &b)| if b == j { c } else { Complex64::new(0.0, 0.0) })
            .collect()
    };
    let sup = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut out = Vec::with_capacity(blocks.len());
    for pair in blocks.chunks(2) {
        match *pair {
            [a, b] => {
                let (fa, fb) = grid::inverse_pair(&mask(a), &mask(b));
                out.push((a, sup(&fa)));
                out.push((b, sup(&fb)));
            }
            [a] => out.push((a, sup(&grid::inverse(&mask(a))))),
            _ => unreachable!(),
        }
    }
    out
}

/// Blocks below this fraction of the largest block are treated as empty
/// (transform round-off).
const EMPTY_BLOCK: f64 = 1e-12;

/// Negative least-squares slope of `log₂ sup_j` against `j` over the nonzero
/// blocks in `range`: a field with `‖Δ_j f‖ ~ 2^{−jα}` gets exponent α.
/// `+∞` when fewer than two blocks in range carry energy.
pub fn fit_exponent(blocks: &[(i32, f64)], range: BlockRange) -> f64 {
    let floor = EMPTY_BLOCK * blocks.iter().fold(0.0_f64, |m, b| m.max(b.1));
    let (xs, ys): (Vec<f64>, Vec<f64>) = blocks
        .iter()
        .filter(|(j, s)| range.contains(*j) && *s > floor && *s > 0.0)
        .map(|&(j, s)| (j as f64, s.log2()))
        .unzip();
    match linear_fit(&xs, &ys) {
        Some((slope, _)) => -slope,
        None => f64::INFINITY,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BesovEstimate {
    pub alpha: f64,
    pub block_norms: Vec<(i32, f64)>,
    /// `sup_j 2^{jα}‖Δ_j f‖_∞`.
    pub norm: f64,
    /// NaN for the zero field, `+∞` for a field with no energy in `range`.
    pub fitted_exponent: f64,
    pub range: BlockRange,
}

impl BesovEstimate {
    pub fn weighted(&self) -> impl Iterator<Item = (i32, f64, f64)> + '_ {
        self.block_norms
            .iter()
            .map(move |&(j, s)| (j, s, (j as f64 * self.alpha).exp2() * s))
    }

    pub fn refit(&self, range: BlockRange) -> Self {
        let mut out = self.clone();
        out.range = range;
        out.fitted_exponent = fitted_or_sentinel(&self.block_norms, range);
        out
    }
}

fn fitted_or_sentinel(blocks: &[(i32, f64)], range: BlockRange) -> f64 {
    if blocks.iter().all(|&(_, s)| s == 0.0) {
        f64::NAN
    } else {
        fit_exponent(blocks, range)
    }
}

pub fn besov_norm(f: &SpectralFunction, alpha: f64) -> BesovEstimate {
    besov_norm_in(f, alpha, BlockRange::default_for(f.spec()))
}

pub fn besov_norm_in(f: &SpectralFunction, alpha: f64, range: BlockRange) -> BesovEstimate {
    let block_norms = block_sups(f);
    let norm = block_norms
        .iter()
        .map(|&(j, s)| (j as f64 * alpha).exp2() * s)
        .fold(0.0, f64::max);
    let fitted_exponent = fitted_or_sentinel(&block_norms, range);
    BesovEstimate {
        alpha,
        block_norms,
        norm,
        fitted_exponent,
        range,
    }
}

/// Fitted exponent of a nonzero field; errors on the zero field.
pub fn regularity_exponent(f: &SpectralFunction, range: BlockRange) -> Result<f64> {
    let est = besov_norm_in(f, 0.0, range);
    if est.fitted_exponent.is_nan() {
        return Err(Error::Degenerate("regularity exponent of the zero field"));
    }
    Ok(est.fitted_exponent)
}

/// Random lacunary field: in every block `0 ≤ j ≤ j_max − 1` one mode
/// `|κ|^{−α}·cos(κx + φ)` with uniformly drawn frequency and phase. Its block
/// sups are exactly `|κ_j|^{−α} ≍ 2^{−jα}`, so it sits on the boundary of `B^α`.
pub fn lacunary_field(spec: GridSpec, alpha: f64, seed: u64) -> SpectralFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.points();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    let base = 2.0 * std::f64::consts::PI / spec.period();
    for j in 0..max_block(spec) {
        let lo = ((j as f64).exp2() / base).ceil().max(1.0) as usize;
        let hi = (((j + 1) as f64).exp2() / base).ceil() as usize;
        let hi = hi.min(n / 2);
        if lo >= hi {
            continue;
        }
        let k = rng.random_range(lo..hi);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let z = Complex64::from_polar(0.5 * (base * k as f64).powf(-alpha), phase);
        coeffs[k] = z;
        coeffs[n - k] = z.conj();
    }
    SpectralFunction::new(spec, coeffs).expect("finite coefficients")
}

/// Log-log slope of `‖P_t f‖_{B^β}/‖f‖_{B^α}` against t over `points`
/// log-spaced times in `[t_lo, t_hi]`. Schauder predicts `−(β − α)`.
pub fn semigroup_decay_slope(
    f: &SpectralFunction,
    alpha: f64,
    beta: f64,
    (t_lo, t_hi): (f64, f64),
    points: usize,
) -> Result<f64> {
    if !(0.0 < t_lo && t_lo < t_hi) || points < 2 {
        return Err(crate::error::invalid("times", "need 0 < t_lo < t_hi and at least 2 points"));
    }
    let base = besov_norm(f, alpha).norm;
    if base == 0.0 {
        return Err(Error::Degenerate("semigroup decay of the zero field"));
    }
    let (lo, hi) = (t_lo.ln(), t_hi.ln());
    let mut ts = Vec::with_capacity(points);
    let mut rs = Vec::with_capacity(points);
    for i in 0..points {
        let lt = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let pt = crate::spectral::cauchy_semigroup(f, lt.exp())?;
        ts.push(lt);
        rs.push((besov_norm(&pt, beta).norm / base).ln());
    }
    linear_fit(&ts, &rs)
        .map(|(slope, _)| slope)
        .ok_or(Error::Degenerate("semigroup decay fit"))
}

/// Test-function profiles η, each even with unit mass and support [−1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaProfile {
    /// The mollifier bump.
    StandardBump,
    /// `1 − S(|x|)` with the quintic smoothstep S.
    Smoothstep,
}

impl EtaProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            EtaProfile::StandardBump => noise::Mollifier::standard().eval(x),
            EtaProfile::Smoothstep => 1.0 - crate::kernels::smoothstep(x.abs()),
        }
    }
}

/// Minimum number of nodes across the support of η^λ.
pub const MIN_BUMP_POINTS: f64 = 8.0;

/// `∫ f·η_{x0}^λ` by the trapezoid rule, with `η_x^λ(y) = λ⁻¹η(λ⁻¹(y−x))`
/// wrapped periodically.
pub fn pair_with_bump(f: &GridFunction, x0: f64, lambda: f64, eta: EtaProfile) -> Result<f64> {
    let spec = f.spec();
    let weights = bump_weights(spec, x0, lambda, eta)?;
    let v = f.values();
    Ok(neumaier_sum(weights.iter().map(|&(j, w)| w * v[j])))
}

/// Nonzero trapezoid weights `dx·η_{x0}^λ(x_j)` as `(node, weight)` pairs.
pub fn bump_weights(
    spec: GridSpec,
    x0: f64,
    lambda: f64,
    eta: EtaProfile,
) -> Result<Vec<(usize, f64)>> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(crate::error::invalid("lambda", format!("{lambda} not in (0, 1]")));
    }
    let dx = spec.dx();
    if 2.0 * lambda / dx < MIN_BUMP_POINTS {
        return Err(crate::error::invalid(
            "lambda",
            format!("bump of width {} spans fewer than 8 nodes at dx = {dx}", 2.0 * lambda),
        ));
    }
    let n = spec.points() as i64;
    let l = spec.period();
    let j0 = ((x0 - lambda) / dx).floor() as i64;
    let j1 = ((x0 + lambda) / dx).ceil() as i64;
    let mut out = Vec::new();
    for j in j0..=j1 {
        let w = dx * eta.eval((j as f64 * dx - x0) / lambda) / lambda;
        if w != 0.0 {
            out.push(((j.rem_euclid(n)) as usize, w));
        }
    }
    debug_assert!(2.0 * lambda < l);
    Ok(out)
}

/// Per-statistic Monte Carlo summary over seeds `seed0..seed0+n`.
#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub names: Vec<String>,
    pub n: usize,
    pub seed0: u64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub standard_error: Vec<f64>,
}

impl McSummary {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// `(mean − target)/standard_error` for statistic `i`; 0 when both the
    /// deviation and the error vanish.
    pub fn z_score(&self, i: usize, target: f64) -> f64 {
        let d = self.mean[i] - target;
        if d == 0.0 {
            0.0
        } else {
            d / self.standard_error[i]
        }
    }

    pub fn within(&self, i: usize, target: f64, k: f64) -> bool {
        self.z_score(i, target).abs() <= k
    }

    pub fn seeds(&self) -> std::ops::Range<u64> {
        self.seed0..self.seed0 + self.n as u64
    }
}

/// Evaluate `statistic(seed)` for every seed in parallel and summarize.
/// Results are gathered in seed order and reduced with compensated sums, so
/// the summary does not depend on the thread count.
pub fn mc_run<F>(names: &[&str], n: usize, seed0: u64, statistic: F) -> Result<McSummary>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    let rows = mc_collect(n, seed0, |seed| {
        let row = statistic(seed)?;
        if row.len() != names.len() {
            return Err(Error::LengthMismatch {
                expected: names.len(),
                got: row.len(),
            });
        }
        Ok(row)
    })?;
    Ok(summarize(names, seed0, &rows))
}

/// Like [`mc_run`], with the white-noise realization for each seed sampled on `spec`.
pub fn mc_run_noise<F>(
    names: &[&str],
    n: usize,
    seed0: u64,
    spec: GridSpec,
    statistic: F,
) -> Result<McSummary>
where
    F: Fn(&NoiseRealization) -> Result<Vec<f64>> + Sync,
{
    mc_run(names, n, seed0, |seed| statistic(&noise::sample_white_noise(seed, spec)))
}

/// Raw per-seed results in seed order.
pub fn mc_collect<T, F>(n: usize, seed0: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    if n < 2 {
        return Err(crate::error::invalid("n_samples", format!("{n} < 2")));
    }
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let seed = seed0 + i;
            f(seed).map_err(|e| Error::Worker {
                seed,
                source: Box::new(e),
            })
        })
        .collect()
}

pub fn summarize(names: &[&str], seed0: u64, rows: &[Vec<f64>]) -> McSummary {
    let n = rows.len();
    let k = names.len();
    let nf = n as f64;
    let mut mean = Vec::with_capacity(k);
    let mut variance = Vec::with_capacity(k);
    let mut standard_error = Vec::with_capacity(k);
    for i in 0..k {
        let m = neumaier_sum(rows.iter().map(|r| r[i])) / nf;
        let v = neumaier_sum(rows.iter().map(|r| (r[i] - m) * (r[i] - m))) / (nf - 1.0);
        mean.push(m);
        variance.push(v);
        standard_error.push((v / nf).sqrt());
    }
    McSummary {
        names: names.iter().map(|s| s.to_string()).collect(),
        n,
        seed0,
        mean,
        variance,
        standard_error,
    }
}
