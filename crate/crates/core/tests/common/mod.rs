//! Test-only oracles, written independently of the library's numerics.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use fpam_core::coefficients::{ChangeOfVariables, NonlocalOperator, PvQuadrature};
use fpam_core::kernels::{self, Autocorrelation, KernelSet};
use fpam_core::noise::{self, Mollifier};
use fpam_core::{GridFunction, GridSpec};

/// Double-exponential (tanh-sinh) quadrature on [a, b]. Never samples the
/// endpoints, so integrable endpoint singularities are fine.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let d = 0.5 * (b - a);
    let h = 1.0 / 64.0;
    let mut sum = 0.0;
    let kmax = (4.0 / h) as i64;
    for k in -kmax..=kmax {
        let t = k as f64 * h;
        let u = 0.5 * PI * t.sinh();
        let x = u.tanh();
        let w = 0.5 * PI * t.cosh() / u.cosh().powi(2);
        let dist = d * (1.0 - x.abs());
        if dist <= 0.0 || w == 0.0 {
            continue;
        }
        let y = if x < 0.0 { a + dist } else { b - dist };
        let v = f(y);
        if v.is_finite() {
            sum += w * v;
        }
    }
    sum * d * h
}

/// Tanh-sinh over consecutive pieces between the given breakpoints.
pub fn piecewise(f: impl Fn(f64) -> f64, breaks: &[f64]) -> f64 {
    breaks.windows(2).map(|w| tanh_sinh(&f, w[0], w[1])).sum()
}

/// Composite 5-point Gauss-Legendre with `panels` equal panels.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189,
        0.478_628_670_499_366,
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
    ];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let c = a + (p as f64 + 0.5) * h;
            X.iter().zip(W).map(|(x, w)| w * f(c + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

/// `Σ_m (y + mL)⁻²`, summed explicitly with an integral tail.
pub fn periodized_inverse_square(y: f64, l: f64) -> f64 {
    let m_max = 4000;
    let mut s = 0.0;
    for m in -m_max..=m_max {
        let z = y + m as f64 * l;
        s += 1.0 / (z * z);
    }
    // Σ_{|m|>M} 1/(mL)² ≈ 2/(L²(M + 1/2)).
    s + 2.0 / (l * l * (m_max as f64 + 0.5))
}

/// `(1/π) p.v.∫_R h(y)/y² dy` for h periodic with h(0) = 0 and even part of
/// order y² at 0; integrates one period against the periodized kernel.
pub fn pv_periodic(h: impl Fn(f64) -> f64, l: f64) -> f64 {
    let sym = |y: f64| (h(y) + h(-y)) * periodized_inverse_square(y, l);
    // Tanh-sinh would cluster nodes at y = 0, where h(y) + h(-y) is pure
    // cancellation; keep the nodes there away from the origin.
    (gauss_legendre(&sym, 0.0, 0.25, 200) + piecewise(&sym, &[0.25, 1.0, l / 2.0])) / PI
}

pub struct Setup {
    pub spec: GridSpec,
    pub kernels: KernelSet,
    pub h: Autocorrelation,
    pub quad: Arc<PvQuadrature>,
}

impl Setup {
    pub fn new(period: f64, points: usize, eps: f64) -> Self {
        let spec = GridSpec::new(period, points).unwrap();
        let kernels = kernels::build_g(spec);
        let h = kernels::build_h(&kernels, eps, &Mollifier::standard()).unwrap();
        Self {
            spec,
            kernels,
            h,
            quad: Arc::new(PvQuadrature::new(spec)),
        }
    }

    pub fn eps(&self) -> f64 {
        self.h.eps()
    }

    pub fn xi_eps(&self, seed: u64) -> GridFunction {
        let noise = noise::sample_white_noise(seed, self.spec);
        noise::mollify(&noise, self.eps(), &Mollifier::standard()).unwrap()
    }

    pub fn transformed(&self, seed: u64) -> (GridFunction, ChangeOfVariables, NonlocalOperator) {
        let xe = self.xi_eps(seed);
        let (cov, op) =
            ChangeOfVariables::assemble(&xe, &self.kernels, &self.h, self.quad.clone()).unwrap();
        (xe, cov, op)
    }
}

/// Least-squares slope of y against x.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
