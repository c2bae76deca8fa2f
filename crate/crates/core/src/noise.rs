//! Periodic Gaussian white noise sampled in Fourier space, the mollifier ρ,
//! and mollified noise ξ_ε = ρ_ε * ξ.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use ordered_float::OrderedFloat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::analysis::{self, BlockRange};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, SpectralFunction};
use crate::quad;
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MollifierShape {
    /// `c·exp(−1/(1−x²))` on (−1, 1).
    StandardBump,
}

/// A smooth, even, unit-mass bump supported in [−1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    shape: MollifierShape,
    normalization: f64,
}

impl Mollifier {
    pub fn standard() -> Self {
        static NORMALIZATION: OnceLock<f64> = OnceLock::new();
        let c = *NORMALIZATION.get_or_init(|| 1.0 / quad::integrate(bump_profile, -1.0, 1.0, 1e-14));
        Self {
            shape: MollifierShape::StandardBump,
            normalization: c,
        }
    }

    pub fn shape(&self) -> MollifierShape {
        self.shape
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn support_radius(&self) -> f64 {
        1.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.shape {
            MollifierShape::StandardBump => self.normalization * bump_profile(x),
        }
    }

    /// `ρ_ε(x) = ε⁻¹ρ(x/ε)`.
    pub fn eval_scaled(&self, x: f64, eps: f64) -> f64 {
        self.eval(x / eps) / eps
    }

    /// Periodized `ρ_ε` on the grid, rescaled to unit discrete mass.
    pub fn samples(&self, spec: GridSpec, eps: f64) -> Result<GridFunction> {
        check_eps(spec, eps)?;
        let raw = spectral::periodize(|x| self.eval_scaled(x, eps), eps * self.support_radius(), spec)?;
        let mass = raw.integral();
        Ok(raw.scale(1.0 / mass))
    }
}

impl Default for Mollifier {
    fn default() -> Self {
        Self::standard()
    }
}

fn bump_profile(x: f64) -> f64 {
    let s = 1.0 - x * x;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

pub(crate) fn check_eps(spec: GridSpec, eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::EpsilonOutOfRange {
            eps,
            reason: "must lie in (0, 1]",
        });
    }
    if eps >= spec.period() / 2.0 {
        return Err(Error::EpsilonOutOfRange {
            eps,
            reason: "mollifier support must be shorter than half a period",
        });
    }
    if eps < 4.0 * spec.dx() {
        log::warn!(
            "epsilon {eps} is below 4·dx = {}; the mollifier is under-resolved",
            4.0 * spec.dx()
        );
    }
    Ok(())
}

/// One sample of periodic white noise together with any mollifications
/// computed from it. All mollifications share the same ξ.
#[derive(Debug, Clone)]
pub struct NoiseRealization {
    seed: u64,
    spec: GridSpec,
    xi: SpectralFunction,
    mollified: BTreeMap<OrderedFloat<f64>, GridFunction>,
}

/// Draw ξ̂ with `E|ξ̂_k|² = 1/L`, `ξ̂_{−k} = conj(ξ̂_k)`, and real ξ̂_0 and
/// Nyquist coefficient. This reproduces `E ξ(x)ξ(y) = Σ_m δ(x−y+mL)` on the grid.
pub fn sample_white_noise(seed: u64, spec: GridSpec) -> NoiseRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.points();
    let sd = spec.period().sqrt().recip();
    let half = std::f64::consts::FRAC_1_SQRT_2 * sd;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    coeffs[0] = Complex64::new(sd * normal(), 0.0);
    for k in 1..n / 2 {
        let z = Complex64::new(half * normal(), half * normal());
        coeffs[k] = z;
        coeffs[n - k] = z.conj();
    }
    coeffs[n / 2] = Complex64::new(sd * normal(), 0.0);
    NoiseRealization {
        seed,
        spec,
        xi: SpectralFunction::from_vec(spec, coeffs),
        mollified: BTreeMap::new(),
    }
}

impl NoiseRealization {
    /// Rebuild a realization from stored coefficients (e.g. a binary dump).
    pub fn from_parts(seed: u64, xi: SpectralFunction) -> Self {
        Self {
            seed,
            spec: xi.spec(),
            xi,
            mollified: BTreeMap::new(),
        }
    }

    /// The identically zero field, for degenerate-case checks.
    pub fn zero(spec: GridSpec) -> Self {
        Self::from_parts(0, SpectralFunction::zeros(spec))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn xi(&self) -> &SpectralFunction {
        &self.xi
    }

    pub fn xi_values(&self) -> GridFunction {
        self.xi.to_physical()
    }

    /// Compute and cache ξ_ε.
    pub fn insert_mollified(&mut self, eps: f64, mollifier: &Mollifier) -> Result<&GridFunction> {
        if !self.mollified.contains_key(&OrderedFloat(eps)) {
            let field = mollify(self, eps, mollifier)?;
            self.mollified.insert(OrderedFloat(eps), field);
        }
        Ok(&self.mollified[&OrderedFloat(eps)])
    }

    pub fn mollified(&self, eps: f64) -> Option<&GridFunction> {
        self.mollified.get(&OrderedFloat(eps))
    }

    pub fn mollified_scales(&self) -> impl Iterator<Item = f64> + '_ {
        self.mollified.keys().map(|k| k.0)
    }
}

/// `ξ_ε = periodize(ρ_ε) ⊛ ξ`.
pub fn mollify(noise: &NoiseRealization, eps: f64, mollifier: &Mollifier) -> Result<GridFunction> {
    let rho = mollifier.samples(noise.spec, eps)?.to_spectral();
    Ok(spectral::convolve_spectral(&rho, &noise.xi)?.to_physical())
}

/// Besov regularity exponent of a noise-derived field over the given block
/// range; `f64::INFINITY` when every block in the range is empty.
pub fn regularity_exponent(f: &GridFunction, range: BlockRange) -> Result<f64> {
    analysis::regularity_exponent(&f.to_spectral(), range)
}
