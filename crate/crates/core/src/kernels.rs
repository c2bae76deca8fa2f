//! The cut-off Green's function G of Λ, the remainder F = ΛG − δ, the
//! mollified autocorrelation H_ε = P(G_ε^{*2}) and the renormalization
//! constant C_ε.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use ordered_float::OrderedFloat;

use crate::analysis::neumaier_sum;
use crate::error::{invalid, Result};
use crate::grid::{GridFunction, GridSpec, SpectralFunction};
use crate::noise::{self, Mollifier};

/// Radius below which G is exactly `(1/π)log|x|`.
pub const CUTOFF_INNER: f64 = 0.5;
/// Support radius of G.
pub const CUTOFF_OUTER: f64 = 1.0;

/// Quintic smoothstep `6s⁵ − 15s⁴ + 10s³`, clamped to [0, 1].
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (s * (6.0 * s - 15.0) + 10.0)
}

/// χ(r): 1 on [0, 1/2], 0 on [1, ∞), C² in between.
pub fn cutoff(r: f64) -> f64 {
    1.0 - smoothstep((r.abs() - CUTOFF_INNER) / (CUTOFF_OUTER - CUTOFF_INNER))
}

/// `G(x) = χ(|x|)(1/π)log|x|`, with the singular point mapped to 0.
pub fn green(x: f64) -> f64 {
    let r = x.abs();
    if r == 0.0 || r >= CUTOFF_OUTER {
        0.0
    } else {
        cutoff(r) * r.ln() / PI
    }
}

/// Effective sample at x = 0 that makes the trapezoid rule third-order
/// accurate for `∫ (1/π)log|x|·φ(x) dx` with smooth φ.
pub fn singular_node_value(dx: f64) -> f64 {
    (dx / (2.0 * PI)).ln() / PI
}

#[derive(Debug, Clone)]
pub struct KernelSet {
    spec: GridSpec,
    g_per: GridFunction,
    g_hat: SpectralFunction,
    h_eps: BTreeMap<OrderedFloat<f64>, Autocorrelation>,
}

/// Build G on the grid. The grid itself enforces L > 4.
pub fn build_g(spec: GridSpec) -> KernelSet {
    let values: Vec<f64> = (0..spec.points()).map(|j| green(spec.centered(j))).collect();
    let g_per = GridFunction::from_vec(spec, values);
    let mut weighted = g_per.values().to_vec();
    weighted[0] = singular_node_value(spec.dx());
    let g_hat = GridFunction::from_vec(spec, weighted).to_spectral();
    KernelSet {
        spec,
        g_per,
        g_hat,
        h_eps: BTreeMap::new(),
    }
}

impl KernelSet {
    pub fn new(spec: GridSpec) -> Self {
        build_g(spec)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn cutoff_inner(&self) -> f64 {
        CUTOFF_INNER
    }

    pub fn cutoff_outer(&self) -> f64 {
        CUTOFF_OUTER
    }

    /// Periodized G, 0 at the singular node.
    pub fn g_per(&self) -> &GridFunction {
        &self.g_per
    }

    /// Fourier coefficients of G with the singular node corrected; this is
    /// what every convolution with G uses.
    pub fn g_hat(&self) -> &SpectralFunction {
        &self.g_hat
    }

    /// Periodized F, defined through its action `F*g = Λ(G*g) − g`.
    pub fn f_per(&self) -> GridFunction {
        let l = self.spec.period();
        self.g_hat
            .apply_multiplier(|k| -k.abs())
            .scale(l)
            .add(&SpectralFunction::from_vec(
                self.spec,
                vec![Complex64::new(-1.0, 0.0); self.spec.points()],
            ))
            .expect("same grid")
            .scale(1.0 / l)
            .to_physical()
    }

    /// `G*f` (continuum normalization).
    pub fn g_convolve(&self, f: &SpectralFunction) -> Result<SpectralFunction> {
        crate::spectral::convolve_spectral(&self.g_hat, f)
    }

    /// `F*g = Λ(G*g) − g`, without ever representing δ on the grid.
    pub fn f_convolve(&self, g: &GridFunction) -> Result<GridFunction> {
        self.spec.ensure_same(&g.spec())?;
        let l = self.spec.period();
        let gh = g.to_spectral();
        let coeffs = gh
            .coeffs()
            .iter()
            .zip(self.g_hat.coeffs())
            .enumerate()
            .map(|(i, (&c, &gk))| {
                let k = self.spec.wavenumber(i).abs();
                c * (-k * l * gk - 1.0)
            })
            .collect();
        let mut out = SpectralFunction::from_vec(self.spec, coeffs);
        out.enforce_real_nyquist();
        Ok(out.to_physical())
    }

    /// Build and cache H_ε.
    pub fn insert_autocorrelation(&mut self, eps: f64, mollifier: &Mollifier) -> Result<&Autocorrelation> {
        let key = OrderedFloat(eps);
        if !self.h_eps.contains_key(&key) {
            let h = build_h(self, eps, mollifier)?;
            self.h_eps.insert(key, h);
        }
        Ok(&self.h_eps[&key])
    }

    pub fn autocorrelation(&self, eps: f64) -> Option<&Autocorrelation> {
        self.h_eps.get(&OrderedFloat(eps))
    }
}

/// F*g as a free function.
pub fn f_conv_field(kernels: &KernelSet, g: &GridFunction) -> Result<GridFunction> {
    kernels.f_convolve(g)
}

/// H_ε together with the spectrum of `Gp_ε = G * P(ρ_ε)`.
#[derive(Debug, Clone)]
pub struct Autocorrelation {
    eps: f64,
    values: GridFunction,
    spectrum: SpectralFunction,
    gp_hat: SpectralFunction,
}

/// `H_ε = Gp_ε ⊛ Gp_ε` with `Gp_ε = G_per ⊛ P(ρ_ε)`.
pub fn build_h(kernels: &KernelSet, eps: f64, mollifier: &Mollifier) -> Result<Autocorrelation> {
    let spec = kernels.spec;
    let rho = mollifier.samples(spec, eps)?.to_spectral();
    let gp_hat = kernels.g_convolve(&rho)?;
    let spectrum = crate::spectral::convolve_spectral(&gp_hat, &gp_hat)?;
    Ok(Autocorrelation {
        eps,
        values: spectrum.to_physical(),
        spectrum,
        gp_hat,
    })
}

impl Autocorrelation {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn spec(&self) -> GridSpec {
        self.values.spec()
    }

    pub fn values(&self) -> &GridFunction {
        &self.values
    }

    pub fn spectrum(&self) -> &SpectralFunction {
        &self.spectrum
    }

    /// Coefficients of `Gp_ε`; `Ŝ_ε = −L·Ĝp_ε·ξ̂`.
    pub fn gp_hat(&self) -> &SpectralFunction {
        &self.gp_hat
    }

    pub fn at_zero(&self) -> f64 {
        self.values.values()[0]
    }

    /// H_ε at an arbitrary node offset, periodically wrapped.
    pub fn at_offset(&self, j: i64) -> f64 {
        let n = self.spec().points() as i64;
        self.values.values()[j.rem_euclid(n) as usize]
    }

    /// `E S_ε(y,0)² = 2(H_ε(0) − H_ε(y))` at node offset `j`.
    pub fn increment_variance(&self, j: i64) -> f64 {
        2.0 * (self.at_zero() - self.at_offset(j))
    }

    /// `□H(α; y, z) = H(α) − H(α−y) − H(α−z) + H(α−y−z)` in node offsets.
    pub fn box_difference(&self, a: i64, y: i64, z: i64) -> f64 {
        self.at_offset(a) - self.at_offset(a - y) - self.at_offset(a - z) + self.at_offset(a - y - z)
    }

    /// `H_ε''(0)` from the spectrum.
    pub fn second_derivative_at_zero(&self) -> f64 {
        let spec = self.spec();
        -neumaier_sum(
            self.spectrum
                .coeffs()
                .iter()
                .enumerate()
                .map(|(i, c)| spec.wavenumber(i).powi(2) * c.re),
        )
    }

    /// `H_ε''(0)` by a centered second difference.
    pub fn second_difference_at_zero(&self) -> f64 {
        let dx = self.spec().dx();
        (self.at_offset(1) - 2.0 * self.at_zero() + self.at_offset(-1)) / (dx * dx)
    }
}

/// `C_ε = −ΛH_ε(0) = Σ_k |2πk/L|·Ĥ_ε(k)`.
pub fn renorm_constant_spectral(h: &Autocorrelation) -> f64 {
    let spec = h.spec();
    neumaier_sum(
        h.spectrum
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| spec.wavenumber(i).abs() * c.re),
    )
}

/// Smallest accepted translate budget for [`renorm_constant_integral`].
pub const MIN_TRANSLATES: usize = 4;
pub const DEFAULT_TRANSLATES: usize = 64;

/// `C_ε = (1/2π)∫_R 2(H_ε(0) − H_ε(y))/y² dy`: trapezoid over `|y| ≤ M·L`
/// on the periodic extension of H_ε, the parabolic limit `−H_ε''(0)` at
/// `y = 0`, and the tail `2f̄/(M·L)` for the period mean f̄ of the numerator.
pub fn renorm_constant_integral(h: &Autocorrelation, translates: usize) -> Result<f64> {
    if translates < MIN_TRANSLATES {
        return Err(invalid(
            "translates",
            format!("M = {translates} < {MIN_TRANSLATES}; the tail correction would dominate"),
        ));
    }
    let spec = h.spec();
    let n = spec.points();
    let l = spec.period();
    let dx = spec.dx();
    let h0 = h.at_zero();
    let num: Vec<f64> = h.values.values().iter().map(|&v| 2.0 * (h0 - v)).collect();
    let m = translates as i64;
    // One side of the even integrand: nodes y = j·dx for 1 ≤ j ≤ M·N, the
    // last with half weight.
    let last = m * n as i64;
    let one_side = neumaier_sum((1..=last).map(|j| {
        let y = j as f64 * dx;
        let w = if j == last { 0.5 } else { 1.0 };
        w * num[(j as usize) % n] / (y * y)
    }));
    let centre = -h.second_difference_at_zero();
    let trapezoid = dx * (2.0 * one_side + centre);
    let mean = neumaier_sum(num.iter().copied()) / n as f64;
    let tail = 2.0 * mean / (translates as f64 * l);
    Ok((trapezoid + tail) / (2.0 * PI))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenormConstant {
    pub eps: f64,
    pub value_integral: f64,
    pub value_spectral: f64,
    /// `(1/π)log(1/ε)`.
    pub asymptote: f64,
}

impl RenormConstant {
    pub fn relative_gap(&self) -> f64 {
        (self.value_integral - self.value_spectral).abs() / self.value_spectral.abs()
    }

    pub fn drift(&self) -> f64 {
        self.value_spectral - self.asymptote
    }
}

pub fn renorm_constant(h: &Autocorrelation, translates: usize) -> Result<RenormConstant> {
    Ok(RenormConstant {
        eps: h.eps,
        value_integral: renorm_constant_integral(h, translates)?,
        value_spectral: renorm_constant_spectral(h),
        asymptote: (1.0 / h.eps).ln() / PI,
    })
}

/// Convenience: C_ε (spectral route) for one ε.
pub fn renorm_constant_for(spec: GridSpec, eps: f64) -> Result<f64> {
    noise::check_eps(spec, eps)?;
    let kernels = build_g(spec);
    Ok(renorm_constant_spectral(&build_h(&kernels, eps, &Mollifier::standard())?))
}
