//! Coefficients of the transformed equation: S_ε = −G*ξ_ε, the split
//! Z_ε = U_ε + V_ε, the unrenormalized Z̃, and the nonlocal operator Ξ.
//!
//! All principal-value integrals over R are discretized as trapezoid sums
//! `Σ_{j≠0} dx·K_L(r_j)·h(x, x+r_j) + dx·(diagonal limit)` with the
//! periodized kernel `K_L(r) = Σ_m (r+mL)⁻² = (π/L)²/sin²(πr/L)`. Every sum
//! expands into products of grid fields and circular correlations with the
//! weights, so each costs a few FFTs.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::analysis::neumaier_sum;
use crate::error::Result;
use crate::grid::{self, GridFunction, GridSpec};
use crate::kernels::{self, Autocorrelation, KernelSet};
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvBackend {
    Fft,
    /// O(N²) summation; reference implementation for tests.
    Direct,
}

/// Trapezoid weights of the periodized `1/r²` kernel on a grid.
#[derive(Debug, Clone)]
pub struct PvQuadrature {
    spec: GridSpec,
    backend: PvBackend,
    weights: Vec<f64>,
    total: f64,
    multiplier: Vec<f64>,
}

impl PvQuadrature {
    pub fn new(spec: GridSpec) -> Self {
        Self::with_backend(spec, PvBackend::Fft)
    }

    pub fn with_backend(spec: GridSpec, backend: PvBackend) -> Self {
        let n = spec.points();
        let dx = spec.dx();
        let a = PI / spec.period();
        let weights: Vec<f64> = (0..n)
            .map(|j| {
                if j == 0 {
                    0.0
                } else {
                    dx * a * a / (a * spec.node(j)).sin().powi(2)
                }
            })
            .collect();
        let total = neumaier_sum(weights.iter().copied());
        let multiplier = grid::forward(&weights)
            .into_iter()
            .map(|c| c.re * n as f64)
            .collect();
        Self {
            spec,
            backend,
            weights,
            total,
            multiplier,
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn backend(&self) -> PvBackend {
        self.backend
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ_j w_j`.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// `corr(f)_i = Σ_j w_j f_{i+j}`.
    pub fn correlate(&self, f: &[f64]) -> Vec<f64> {
        match self.backend {
            PvBackend::Fft => {
                let mut c = grid::forward(f);
                c.iter_mut().zip(&self.multiplier).for_each(|(z, m)| *z *= m);
                grid::inverse(&c)
            }
            PvBackend::Direct => self.correlate_direct(f),
        }
    }

    /// Two correlations for the price of one complex transform pair.
    pub fn correlate_pair(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self.backend {
            PvBackend::Fft => {
                let mut buf: Vec<Complex64> =
                    a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
                grid::forward_complex(&mut buf);
                buf.iter_mut().zip(&self.multiplier).for_each(|(z, m)| *z *= m);
                grid::inverse_complex(&mut buf);
                buf.into_iter().map(|z| (z.re, z.im)).unzip()
            }
            PvBackend::Direct => (self.correlate_direct(a), self.correlate_direct(b)),
        }
    }

    fn correlate_direct(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        (0..n)
            .map(|i| neumaier_sum((1..n).map(|j| self.weights[j] * f[(i + j) % n])))
            .collect()
    }

    /// `Σ_j w_j·h(r_j)` for a function of the offset alone.
    pub fn weighted_sum(&self, h: impl Fn(usize) -> f64) -> f64 {
        neumaier_sum((1..self.spec.points()).map(|j| self.weights[j] * h(j)))
    }
}

fn field(spec: GridSpec, v: Vec<f64>) -> GridFunction {
    GridFunction::from_vec(spec, v)
}

fn spectral_derivative(f: &GridFunction) -> GridFunction {
    f.to_spectral().derivative(1).to_physical()
}

/// `S_ε = −G*ξ_ε`.
pub fn compute_s(xi_eps: &GridFunction, kernels: &KernelSet) -> Result<GridFunction> {
    Ok(kernels.g_convolve(&xi_eps.to_spectral())?.scale(-1.0).to_physical())
}

/// `S_ε = −G*ξ_ε` directly from white noise: `Ŝ = −L·Ĝp_ε·ξ̂`.
pub fn compute_s_from_noise(
    noise: &crate::noise::NoiseRealization,
    h: &Autocorrelation,
) -> Result<GridFunction> {
    let s = spectral::convolve_spectral(h.gp_hat(), noise.xi())?.scale(-1.0);
    Ok(s.to_physical())
}

/// Shared pieces for the Taylor-remainder integrals in S.
struct Increments {
    s: Vec<f64>,
    exp_neg: Vec<f64>,
    corr_s: Vec<f64>,
    corr_s2: Vec<f64>,
    corr_exp: Vec<f64>,
}

impl Increments {
    fn new(s: &GridFunction, quad: &PvQuadrature) -> Self {
        let sv = s.values().to_vec();
        let s2: Vec<f64> = sv.iter().map(|v| v * v).collect();
        let exp: Vec<f64> = sv.iter().map(|v| v.exp()).collect();
        let (corr_s, corr_s2) = quad.correlate_pair(&sv, &s2);
        let corr_exp = quad.correlate(&exp);
        Self {
            exp_neg: sv.iter().map(|v| (-v).exp()).collect(),
            s: sv,
            corr_s,
            corr_s2,
            corr_exp,
        }
    }

    /// `Σ_j w_j (e^{ΔS} − 1 − ΔS)` at node i.
    fn first_order(&self, i: usize, total: f64) -> f64 {
        self.exp_neg[i] * self.corr_exp[i] - total - (self.corr_s[i] - self.s[i] * total)
    }

    /// `Σ_j w_j ΔS²` at node i.
    fn square(&self, i: usize, total: f64) -> f64 {
        let s = self.s[i];
        self.corr_s2[i] - 2.0 * s * self.corr_s[i] + s * s * total
    }
}

/// `Z̃(x) = (1/π) p.v.∫ (e^{S(y,x)} − 1 − S(y,x))/(y−x)² dy`, diagonal limit `S'²/2`.
pub fn compute_ztilde(s: &GridFunction, quad: &PvQuadrature) -> Result<GridFunction> {
    s.spec().ensure_same(&quad.spec)?;
    let inc = Increments::new(s, quad);
    let ds = spectral_derivative(s);
    let dx = quad.spec.dx();
    let t = quad.total;
    let v = (0..s.spec().points())
        .map(|i| (inc.first_order(i, t) + dx * 0.5 * ds.values()[i].powi(2)) / PI)
        .collect();
    Ok(field(s.spec(), v))
}

/// `V(x) = (1/π)∫ f(S(y,x))/(y−x)² dy` with `f(s) = e^s − 1 − s − s²/2`;
/// the diagonal limit is 0.
pub fn compute_v(s: &GridFunction, quad: &PvQuadrature) -> Result<GridFunction> {
    s.spec().ensure_same(&quad.spec)?;
    let inc = Increments::new(s, quad);
    let t = quad.total;
    let v = (0..s.spec().points())
        .map(|i| (inc.first_order(i, t) - 0.5 * inc.square(i, t)) / PI)
        .collect();
    Ok(field(s.spec(), v))
}

/// `U(x) = (1/2π)∫ [S(y,x)² − 2(H(0) − H(y−x))]/(y−x)² dy`, diagonal limit
/// `S'(x)² + H''(0)`.
pub fn compute_u(s: &GridFunction, h: &Autocorrelation, quad: &PvQuadrature) -> Result<GridFunction> {
    s.spec().ensure_same(&quad.spec)?;
    s.spec().ensure_same(&h.spec())?;
    let inc = Increments::new(s, quad);
    let ds = spectral_derivative(s);
    let c_h = quad.weighted_sum(|j| h.increment_variance(j as i64));
    let h2 = h.second_derivative_at_zero();
    let dx = quad.spec.dx();
    let t = quad.total;
    let v = (0..s.spec().points())
        .map(|i| {
            (inc.square(i, t) - c_h + dx * (ds.values()[i].powi(2) + h2)) / (2.0 * PI)
        })
        .collect();
    Ok(field(s.spec(), v))
}

/// `w ↦ Ξw`, with `Ξw(x) = (1/π) p.v.∫ (e^{S(y)−S(x)} − 1)(w(y) − w(x))/(y−x)² dy`.
#[derive(Debug, Clone)]
pub struct NonlocalOperator {
    eps: Option<f64>,
    spec: GridSpec,
    inner: Option<XiData>,
}

#[derive(Debug, Clone)]
struct XiData {
    quad: Arc<PvQuadrature>,
    exp_s: Vec<f64>,
    exp_neg_s: Vec<f64>,
    ds: Vec<f64>,
    /// `e^{−S}·corr(e^S)`.
    base: Vec<f64>,
}

impl NonlocalOperator {
    pub fn new(s: &GridFunction, quad: Arc<PvQuadrature>, eps: Option<f64>) -> Result<Self> {
        s.spec().ensure_same(&quad.spec)?;
        let exp_s: Vec<f64> = s.values().iter().map(|v| v.exp()).collect();
        let exp_neg_s: Vec<f64> = s.values().iter().map(|v| (-v).exp()).collect();
        let corr = quad.correlate(&exp_s);
        let base = corr.iter().zip(&exp_neg_s).map(|(c, e)| c * e).collect();
        Ok(Self {
            eps,
            spec: s.spec(),
            inner: Some(XiData {
                ds: spectral_derivative(s).into_values(),
                quad,
                exp_s,
                exp_neg_s,
                base,
            }),
        })
    }

    /// Ξ = 0.
    pub fn zero(spec: GridSpec) -> Self {
        Self {
            eps: None,
            spec,
            inner: None,
        }
    }

    pub fn eps(&self) -> Option<f64> {
        self.eps
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn is_zero(&self) -> bool {
        self.inner.is_none()
    }

    pub fn apply(&self, w: &GridFunction) -> Result<GridFunction> {
        self.spec.ensure_same(&w.spec())?;
        let Some(d) = &self.inner else {
            return Ok(GridFunction::zeros(self.spec));
        };
        let wv = w.values();
        let esw: Vec<f64> = wv.iter().zip(&d.exp_s).map(|(a, b)| a * b).collect();
        let (corr_esw, corr_w) = d.quad.correlate_pair(&esw, wv);
        let dw = spectral_derivative(w);
        let dx = self.spec.dx();
        let t = d.quad.total;
        let v = (0..self.spec.points())
            .map(|i| {
                let sum = d.exp_neg_s[i] * corr_esw[i] - wv[i] * d.base[i] - corr_w[i] + wv[i] * t;
                (sum + dx * d.ds[i] * dw.values()[i]) / PI
            })
            .collect();
        Ok(field(self.spec, v))
    }
}

pub fn apply_xi(op: &NonlocalOperator, w: &GridFunction) -> Result<GridFunction> {
    op.apply(w)
}

/// Data of the transformed equation `∂_t v = Λv + g·v + Ξv`.
#[derive(Debug, Clone)]
pub struct ChangeOfVariables {
    pub eps: f64,
    pub s: GridFunction,
    pub exp_s: GridFunction,
    pub exp_neg_s: GridFunction,
    /// `−F*ξ_ε + U_ε + V_ε`.
    pub g: GridFunction,
    pub u: GridFunction,
    pub v: GridFunction,
    pub c_eps: f64,
}

impl ChangeOfVariables {
    /// Assemble S, e^{±S}, U, V and g from ξ_ε; also returns Ξ_ε.
    pub fn assemble(
        xi_eps: &GridFunction,
        kernels: &KernelSet,
        h: &Autocorrelation,
        quad: Arc<PvQuadrature>,
    ) -> Result<(Self, NonlocalOperator)> {
        let s = compute_s(xi_eps, kernels)?;
        let u = compute_u(&s, h, &quad)?;
        let v = compute_v(&s, &quad)?;
        let f = kernels.f_convolve(xi_eps)?;
        let g = u.add(&v)?.sub(&f)?;
        let xi = NonlocalOperator::new(&s, quad, Some(h.eps()))?;
        Ok((
            Self {
                eps: h.eps(),
                exp_s: s.map(f64::exp),
                exp_neg_s: s.map(|x| (-x).exp()),
                s,
                g,
                u,
                v,
                c_eps: kernels::renorm_constant_spectral(h),
            },
            xi,
        ))
    }

    /// The trivial change of variables (S ≡ 0) for a given coefficient g.
    pub fn identity(g: GridFunction, c_eps: f64) -> Self {
        let spec = g.spec();
        Self {
            eps: f64::NAN,
            s: GridFunction::zeros(spec),
            exp_s: GridFunction::constant(spec, 1.0),
            exp_neg_s: GridFunction::constant(spec, 1.0),
            u: GridFunction::zeros(spec),
            v: GridFunction::zeros(spec),
            g,
            c_eps,
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.s.spec()
    }

    pub fn z(&self) -> Result<GridFunction> {
        self.u.add(&self.v)
    }
}
