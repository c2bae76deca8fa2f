//! Linear operators on periodic fields: the half-Laplacian Λ = −(−Δ)^{1/2},
//! the Cauchy semigroup it generates, continuum-normalized circular
//! convolution, and periodization of real-line kernels.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, SpectralFunction};

/// `(Λf)^_k = −|2πk/L|·f̂_k`.
pub fn half_laplacian(f: &SpectralFunction) -> SpectralFunction {
    f.apply_multiplier(|kappa| -kappa.abs())
}

/// Convolution with the periodized Cauchy kernel `P_t(x) = t/(π(t²+x²))`,
/// i.e. the multiplier `e^{−t|2πk/L|}`.
pub fn cauchy_semigroup(f: &SpectralFunction, t: f64) -> Result<SpectralFunction> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    Ok(f.apply_multiplier(|kappa| (-t * kappa.abs()).exp()))
}

/// `h(x) = ∫₀^L f(y) g(x−y) dy`, computed as `ĥ_k = L·f̂_k·ĝ_k`.
pub fn circular_convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    f.spec().ensure_same(&g.spec())?;
    Ok(convolve_spectral(&f.to_spectral(), &g.to_spectral())?.to_physical())
}

/// Spectral-side form of [`circular_convolve`].
pub fn convolve_spectral(f: &SpectralFunction, g: &SpectralFunction) -> Result<SpectralFunction> {
    f.spec().ensure_same(&g.spec())?;
    let l = f.spec().period();
    let coeffs: Vec<Complex64> = f
        .coeffs()
        .iter()
        .zip(g.coeffs())
        .map(|(a, b)| a * b * l)
        .collect();
    let mut out = SpectralFunction::from_vec(f.spec(), coeffs);
    out.enforce_real_nyquist();
    Ok(out)
}

/// Grid samples of `Σ_m k(x + mL)` for a kernel vanishing outside
/// `[−support_radius, support_radius]`.
pub fn periodize(
    kernel: impl Fn(f64) -> f64,
    support_radius: f64,
    spec: GridSpec,
) -> Result<GridFunction> {
    if !(support_radius >= 0.0) || !support_radius.is_finite() {
        return Err(crate::error::invalid(
            "support_radius",
            format!("{support_radius} is not a finite non-negative radius"),
        ));
    }
    let l = spec.period();
    let values = (0..spec.points())
        .map(|j| {
            let x = spec.node(j);
            let m_lo = ((-support_radius - x) / l).ceil() as i64;
            let m_hi = ((support_radius - x) / l).floor() as i64;
            (m_lo..=m_hi).map(|m| kernel(x + m as f64 * l)).sum()
        })
        .collect();
    GridFunction::new(spec, values)
}

/// A discrete delta: `1/dx` at node 0, so that it acts as the identity under
/// [`circular_convolve`].
pub fn discrete_delta(spec: GridSpec) -> GridFunction {
    let mut v = vec![0.0; spec.points()];
    v[0] = 1.0 / spec.dx();
    GridFunction::from_vec(spec, v)
}
