//! Uniform periodic grids and the two representations of a real field on them.
//!
//! Fourier convention: `f(x) = Σ_k f̂_k e^{2πikx/L}` with `k ∈ {−N/2, …, N/2−1}`.
//! Coefficients are stored in FFT order, so index `i` holds `k = i` for
//! `i < N/2` and `k = i − N` otherwise; index `N/2` is the Nyquist mode.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    period: f64,
    points: usize,
}

impl GridSpec {
    pub const MIN_POINTS: usize = 16;
    /// Periods must exceed this so that supp G ⊂ [−1,1] and supp G*G ⊂ [−2,2]
    /// fit in one period without self-overlap.
    pub const MIN_PERIOD: f64 = 4.0;

    pub fn new(period: f64, points: usize) -> Result<Self> {
        if !period.is_finite() || period <= Self::MIN_PERIOD {
            return Err(Error::InvalidGrid(format!(
                "period L = {period} must exceed {}",
                Self::MIN_PERIOD
            )));
        }
        if points < Self::MIN_POINTS || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "N = {points} must be a power of two >= {}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self { period, points })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        self.period / self.points as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    /// Node `j` as a representative in `[−L/2, L/2)`.
    pub fn centered(&self, j: usize) -> f64 {
        let x = self.node(j);
        if j < self.points / 2 {
            x
        } else {
            x - self.period
        }
    }

    /// Integer frequency held at FFT index `i`.
    pub fn frequency(&self, i: usize) -> i64 {
        if i < self.points / 2 {
            i as i64
        } else {
            i as i64 - self.points as i64
        }
    }

    /// Angular wavenumber `2πk/L` at FFT index `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * PI * self.frequency(i) as f64 / self.period
    }

    pub fn nyquist_index(&self) -> usize {
        self.points / 2
    }

    /// FFT index of integer frequency `k` (taken modulo N).
    pub fn index_of(&self, k: i64) -> usize {
        k.rem_euclid(self.points as i64) as usize
    }

    pub fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(*self, *other))
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L={}, N={}", self.period, self.points)
    }
}

type PlanKey = (usize, bool);

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let key = (len, direction == FftDirection::Forward);
    let mut plans = PLANS
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner());
    plans
        .entry(key)
        .or_insert_with(|| FftPlanner::new().plan_fft(len, direction))
        .clone()
}

/// Forward transform normalized to Fourier-series coefficients (divides by N).
pub(crate) fn forward(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(n, FftDirection::Forward).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Synthesis `Σ_k f̂_k e^{2πijk/N}`, keeping the real part.
pub(crate) fn inverse(coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    plan(buf.len(), FftDirection::Inverse).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// In-place forward transform of complex data, divided by N.
pub(crate) fn forward_complex(buf: &mut [Complex64]) {
    let n = buf.len();
    plan(n, FftDirection::Forward).process(buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
}

/// In-place unnormalized inverse transform of complex data.
pub(crate) fn inverse_complex(buf: &mut [Complex64]) {
    plan(buf.len(), FftDirection::Inverse).process(buf);
}

/// Two real fields synthesized with one complex transform.
pub(crate) fn inverse_pair(a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let i = Complex64::new(0.0, 1.0);
    let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| x + i * y).collect();
    plan(buf.len(), FftDirection::Inverse).process(&mut buf);
    buf.into_iter().map(|c| (c.re, c.im)).unzip()
}

/// A real field sampled at the nodes `x_j = j·dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.points() {
            return Err(Error::LengthMismatch {
                expected: spec.points(),
                got: values.len(),
            });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(j));
        }
        Ok(Self { spec, values })
    }

    /// Internal constructor for values produced by finite arithmetic on finite input.
    pub(crate) fn from_vec(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.points());
        Self { spec, values }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..spec.points()).map(|j| f(spec.node(j))).collect();
        Self::new(spec, values)
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        Self::from_vec(spec, vec![c; spec.points()])
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn to_spectral(&self) -> SpectralFunction {
        SpectralFunction {
            spec: self.spec,
            coeffs: forward(&self.values),
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoid (equivalently rectangle) rule over one period.
    pub fn integral(&self) -> f64 {
        self.spec.dx() * crate::analysis::neumaier_sum(self.values.iter().copied())
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.spec.ensure_same(&other.spec)?;
        Ok(Self::from_vec(
            self.spec,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridFunction) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Value at the node nearest to `x` (periodically wrapped).
    pub fn at(&self, x: f64) -> f64 {
        let n = self.spec.points() as i64;
        let j = (x / self.spec.dx()).round() as i64;
        self.values[j.rem_euclid(n) as usize]
    }
}

/// Fourier coefficients of a field on a [`GridSpec`], in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    spec: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralFunction {
    pub fn new(spec: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != spec.points() {
            return Err(Error::LengthMismatch {
                expected: spec.points(),
                got: coeffs.len(),
            });
        }
        if let Some(j) = coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite(j));
        }
        Ok(Self { spec, coeffs })
    }

    pub(crate) fn from_vec(spec: GridSpec, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), spec.points());
        Self { spec, coeffs }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::from_vec(spec, vec![Complex64::new(0.0, 0.0); spec.points()])
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of integer frequency `k` (aliased modulo N).
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs[self.spec.index_of(k)]
    }

    /// Synthesize grid values. Only the real part is kept, so this assumes
    /// conjugate-symmetric data.
    pub fn to_physical(&self) -> GridFunction {
        GridFunction::from_vec(self.spec, inverse(&self.coeffs))
    }

    /// Multiply each coefficient by `symbol(κ)` with κ = 2πk/L. The Nyquist
    /// coefficient is forced real afterwards.
    pub fn apply_multiplier(&self, symbol: impl Fn(f64) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * symbol(self.spec.wavenumber(i)))
            .collect();
        let mut out = Self::from_vec(self.spec, coeffs);
        out.enforce_real_nyquist();
        out
    }

    pub(crate) fn enforce_real_nyquist(&mut self) {
        let ny = self.spec.nyquist_index();
        self.coeffs[ny].im = 0.0;
    }

    /// Spectral derivative of the given order. Odd orders annihilate the
    /// Nyquist mode, whose derivative vanishes at every node.
    pub fn derivative(&self, order: u32) -> Self {
        let ny = self.spec.nyquist_index();
        let i = Complex64::new(0.0, 1.0);
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| {
                if idx == ny && order % 2 == 1 {
                    return Complex64::new(0.0, 0.0);
                }
                c * (i * self.spec.wavenumber(idx)).powu(order)
            })
            .collect();
        let mut out = Self::from_vec(self.spec, coeffs);
        out.enforce_real_nyquist();
        out
    }

    pub fn add(&self, other: &SpectralFunction) -> Result<Self> {
        self.spec.ensure_same(&other.spec)?;
        Ok(Self::from_vec(
            self.spec,
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_vec(self.spec, self.coeffs.iter().map(|z| z * c).collect())
    }

    /// `L·Σ|f̂_k|²`, which equals `∫₀^L f²` for band-limited f.
    pub fn energy(&self) -> f64 {
        self.spec.period()
            * crate::analysis::neumaier_sum(self.coeffs.iter().map(|c| c.norm_sqr()))
    }

    /// Largest `|f̂_{−k} − conj(f̂_k)|`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let n = self.spec.points() as i64;
        (0..n)
            .map(|k| (self.coeff(-k) - self.coeff(k).conj()).norm())
            .fold(0.0, f64::max)
    }
}
