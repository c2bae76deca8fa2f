//! Time integration of the mollified equation `∂_t u = Λu + (ξ_ε − C_ε)u` and
//! of the transformed equation `∂_t v = Λv + g·v + Ξv`, plus the weighted
//! norm `sup_t t^{1−κ}‖f(t)‖`.

use num_complex::Complex64;

use crate::analysis;
use crate::coefficients::{ChangeOfVariables, NonlocalOperator};
use crate::error::{invalid, Error, Result};
use crate::grid::{self, GridFunction, GridSpec};

/// Solutions above this max-norm are treated as blown up.
pub const BLOW_UP_THRESHOLD: f64 = 1e30;

/// Consecutive non-decreasing Picard residuals that trigger a subinterval split.
const STALL_LIMIT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub kappa: f64,
    pub t_final: f64,
    pub dt: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    /// Longest Picard subinterval tried before any automatic splitting.
    pub max_subinterval: f64,
    /// Store every `record_every`-th step (the final step is always stored).
    pub record_every: usize,
    /// Combine steps dt and dt/2 as `2u_{dt/2} − u_dt` in the explicit schemes.
    pub richardson: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kappa: 0.1,
            t_final: 0.5,
            dt: 1e-3,
            picard_tol: 1e-10,
            picard_max_iters: 200,
            max_subinterval: 0.025,
            record_every: 25,
            richardson: true,
        }
    }
}

impl SolverConfig {
    pub fn new(kappa: f64, t_final: f64, dt: f64) -> Result<Self> {
        let cfg = Self {
            kappa,
            t_final,
            dt,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa < 0.25) {
            return Err(invalid("kappa", format!("{} not in (0, 1/4)", self.kappa)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("{} must be positive", self.dt)));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return Err(invalid("T", format!("{} must be at least dt = {}", self.t_final, self.dt)));
        }
        let steps = self.t_final / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps {
            return Err(invalid("dt", format!("T = {} is not a multiple of dt = {}", self.t_final, self.dt)));
        }
        if !(self.picard_tol > 0.0) || self.picard_max_iters == 0 {
            return Err(invalid("picard_tol", "tolerance and iteration cap must be positive"));
        }
        if !(self.max_subinterval > 0.0) {
            return Err(invalid("max_subinterval", format!("{} must be positive", self.max_subinterval)));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be at least 1"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    Max,
    /// Block estimator of `B^α_{∞,∞}`.
    Besov(f64),
}

impl NormKind {
    pub fn eval(&self, f: &GridFunction) -> f64 {
        match *self {
            NormKind::Max => f.max_norm(),
            NormKind::Besov(alpha) => analysis::besov_norm(&f.to_spectral(), alpha).norm,
        }
    }
}

/// Stored times in (0, T] and the field at each of them.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRecord {
    times: Vec<f64>,
    fields: Vec<GridFunction>,
    /// Picard iterations used per subinterval (empty for explicit schemes).
    pub picard_iterations: Vec<usize>,
}

impl EvolutionRecord {
    pub fn new(times: Vec<f64>, fields: Vec<GridFunction>) -> Result<Self> {
        if times.len() != fields.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                got: fields.len(),
            });
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || times.first().is_some_and(|&t| !(t > 0.0)) {
            return Err(invalid("times", "must be positive and strictly increasing"));
        }
        if let Some(f) = fields.iter().find(|f| !f.all_finite()) {
            return Err(Error::NonFinite(f.values().iter().position(|v| !v.is_finite()).unwrap_or(0)));
        }
        Ok(Self {
            times,
            fields,
            picard_iterations: Vec::new(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[GridFunction] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &GridFunction)> {
        self.times.last().map(|&t| (t, self.fields.last().unwrap()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &GridFunction)> {
        self.times.iter().copied().zip(&self.fields)
    }

    pub fn map(&self, f: impl Fn(&GridFunction) -> Result<GridFunction>) -> Result<Self> {
        let fields = self.fields.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            times: self.times.clone(),
            fields,
            picard_iterations: self.picard_iterations.clone(),
        })
    }

    /// Pointwise difference of two records on the same time mesh.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.check_times(other)?;
        let fields = self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.times.clone(), fields)
    }

    /// `max_t ‖self(t) − other(t)‖_∞ / ‖self(t)‖_∞`.
    pub fn max_relative_difference(&self, other: &Self) -> Result<f64> {
        self.check_times(other)?;
        let mut worst = 0.0_f64;
        for (a, b) in self.fields.iter().zip(&other.fields) {
            let d = a.sub(b)?.max_norm();
            let scale = a.max_norm();
            worst = worst.max(if d == 0.0 { 0.0 } else { d / scale });
        }
        Ok(worst)
    }

    fn check_times(&self, other: &Self) -> Result<()> {
        let same = self.times.len() == other.times.len()
            && self
                .times
                .iter()
                .zip(&other.times)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
        if same {
            Ok(())
        } else {
            Err(invalid("times", "records use different time meshes"))
        }
    }
}

/// `sup_t t^{1−κ}‖f(t)‖` over the stored times.
pub fn xnorm(record: &EvolutionRecord, kappa: f64, kind: NormKind) -> f64 {
    record
        .iter()
        .map(|(t, f)| t.powf(1.0 - kappa) * kind.eval(f))
        .fold(0.0, f64::max)
}

/// Per-mode multipliers of one exponential step: `e^{−dt|κ|}` and
/// `dt·φ₁(−dt|κ|)` with `φ₁(z) = (e^z − 1)/z`.
fn exp_multipliers(spec: GridSpec, dt: f64) -> (Vec<f64>, Vec<f64>) {
    (0..spec.points())
        .map(|i| {
            let z = -dt * spec.wavenumber(i).abs();
            let phi = if z == 0.0 { 1.0 } else { z.exp_m1() / z };
            (z.exp(), dt * phi)
        })
        .unzip()
}

fn guard(t: f64, f: &GridFunction) -> Result<()> {
    let norm = f.max_norm();
    if !f.all_finite() || norm > BLOW_UP_THRESHOLD {
        return Err(Error::BlowUp {
            t,
            norm: if norm.is_nan() { f64::INFINITY } else { norm },
        });
    }
    Ok(())
}

/// Exponential Euler for `∂_t u = Λu + N(u)`, recording every `record_every` steps.
fn exponential_euler<F>(
    rhs: &F,
    u0: &GridFunction,
    dt: f64,
    steps: usize,
    record_every: usize,
) -> Result<EvolutionRecord>
where
    F: Fn(&GridFunction) -> Result<GridFunction>,
{
    let spec = u0.spec();
    let (e, p) = exp_multipliers(spec, dt);
    let mut u = u0.clone();
    let mut times = Vec::new();
    let mut fields = Vec::new();
    for n in 1..=steps {
        let uh = u.to_spectral();
        let fh = rhs(&u)?.to_spectral();
        let coeffs: Vec<Complex64> = uh
            .coeffs()
            .iter()
            .zip(fh.coeffs())
            .zip(e.iter().zip(&p))
            .map(|((&a, &b), (&ek, &pk))| a * ek + b * pk)
            .collect();
        u = GridFunction::from_vec(spec, grid::inverse(&coeffs));
        let t = n as f64 * dt;
        guard(t, &u)?;
        if n % record_every == 0 || n == steps {
            times.push(t);
            fields.push(u.clone());
        }
    }
    EvolutionRecord::new(times, fields)
}

fn explicit_solve<F>(rhs: &F, u0: &GridFunction, cfg: &SolverConfig) -> Result<EvolutionRecord>
where
    F: Fn(&GridFunction) -> Result<GridFunction>,
{
    cfg.validate()?;
    let steps = cfg.steps();
    if steps % cfg.record_every != 0 {
        return Err(invalid("record_every", format!("must divide the step count {steps}")));
    }
    let coarse = exponential_euler(rhs, u0, cfg.dt, steps, cfg.record_every)?;
    if !cfg.richardson {
        return Ok(coarse);
    }
    let fine = exponential_euler(rhs, u0, cfg.dt / 2.0, 2 * steps, 2 * cfg.record_every)?;
    let fields = fine
        .fields
        .iter()
        .zip(&coarse.fields)
        .map(|(f, c)| f.zip_map(c, |a, b| 2.0 * a - b))
        .collect::<Result<Vec<_>>>()?;
    EvolutionRecord::new(coarse.times.clone(), fields)
}

/// Exponential integrator for `∂_t u = Λu + (ξ_ε − C_ε)u`, with the
/// potential frozen at the left endpoint of each step and the semigroup
/// integrated exactly per mode.
pub fn solve_direct(
    xi_eps: &GridFunction,
    c_eps: f64,
    u0: &GridFunction,
    cfg: &SolverConfig,
) -> Result<EvolutionRecord> {
    xi_eps.spec().ensure_same(&u0.spec())?;
    let potential = xi_eps.map(|x| x - c_eps);
    explicit_solve(&|u: &GridFunction| potential.mul(u), u0, cfg)
}

fn transformed_rhs<'a>(
    g: &'a GridFunction,
    xi: &'a NonlocalOperator,
) -> impl Fn(&GridFunction) -> Result<GridFunction> + 'a {
    move |v: &GridFunction| {
        let gv = g.mul(v)?;
        if xi.is_zero() {
            Ok(gv)
        } else {
            gv.add(&xi.apply(v)?)
        }
    }
}

/// Exponential Euler on the transformed equation; the cross-check for the
/// Picard construction.
pub fn solve_transformed_stepper(
    cov: &ChangeOfVariables,
    xi: &NonlocalOperator,
    v0: &GridFunction,
    cfg: &SolverConfig,
) -> Result<EvolutionRecord> {
    check_transformed(cov, xi, v0)?;
    explicit_solve(&transformed_rhs(&cov.g, xi), v0, cfg)
}

fn check_transformed(cov: &ChangeOfVariables, xi: &NonlocalOperator, v0: &GridFunction) -> Result<()> {
    cov.spec().ensure_same(&v0.spec())?;
    cov.spec().ensure_same(&xi.spec())?;
    cov.g.spec().ensure_same(&v0.spec())
}

enum Block {
    Converged(Vec<GridFunction>, usize),
    Stalled,
}

/// Picard iteration of the mild map on `m` steps from `start`, with the
/// Duhamel integral discretized by the exponential trapezoid rule
/// `D_{i+1} = P_dt D_i + (dt/2)(P_dt f_i + f_{i+1})`.
fn picard_block<F>(
    rhs: &F,
    start: &GridFunction,
    m: usize,
    e: &[f64],
    cfg: &SolverConfig,
) -> Result<Block>
where
    F: Fn(&GridFunction) -> Result<GridFunction>,
{
    let spec = start.spec();
    let half = 0.5 * cfg.dt;
    let mut free = Vec::with_capacity(m + 1);
    let mut c = start.to_spectral().into_coeffs();
    free.push(c.clone());
    for _ in 0..m {
        c.iter_mut().zip(e).for_each(|(z, &ek)| *z *= ek);
        free.push(c.clone());
    }
    let free_phys: Vec<GridFunction> = free
        .iter()
        .map(|c| GridFunction::from_vec(spec, grid::inverse(c)))
        .collect();
    let f0 = rhs(start)?.to_spectral().into_coeffs();
    let mut v = free_phys.clone();
    let mut previous = f64::INFINITY;
    let mut stalls = 0;
    for iter in 1..=cfg.picard_max_iters {
        let mut next = Vec::with_capacity(m + 1);
        next.push(start.clone());
        let mut d = vec![Complex64::new(0.0, 0.0); spec.points()];
        let mut f_prev = f0.clone();
        for i in 1..=m {
            let fi = rhs(&v[i])?.to_spectral().into_coeffs();
            for k in 0..d.len() {
                d[k] = e[k] * (d[k] + half * f_prev[k]) + half * fi[k];
            }
            let di = grid::inverse(&d);
            let vi: Vec<f64> = free_phys[i].values().iter().zip(&di).map(|(a, b)| a + b).collect();
            next.push(GridFunction::from_vec(spec, vi));
            f_prev = fi;
        }
        let mut change = 0.0_f64;
        let mut scale = 0.0_f64;
        for (a, b) in next.iter().zip(&v) {
            if !a.all_finite() {
                return Ok(Block::Stalled);
            }
            change = change.max(a.sub(b)?.max_norm());
            scale = scale.max(a.max_norm());
        }
        let residual = if change == 0.0 { 0.0 } else { change / scale };
        v = next;
        if residual <= cfg.picard_tol {
            return Ok(Block::Converged(v, iter));
        }
        if residual >= previous {
            stalls += 1;
            if stalls >= STALL_LIMIT {
                return Ok(Block::Stalled);
            }
        } else {
            stalls = 0;
        }
        previous = residual;
    }
    Ok(Block::Stalled)
}

/// Fixed point of `v(t) = P_t v0 + ∫₀^t P_{t−s}(g·v(s) + Ξv(s)) ds`, built
/// subinterval by subinterval and restarted from each endpoint. A subinterval
/// whose iteration stalls or exceeds the iteration cap is halved; the solve
/// fails once it would drop below one step.
pub fn solve_transformed(
    cov: &ChangeOfVariables,
    xi: &NonlocalOperator,
    v0: &GridFunction,
    cfg: &SolverConfig,
) -> Result<EvolutionRecord> {
    check_transformed(cov, xi, v0)?;
    picard_solve(&transformed_rhs(&cov.g, xi), v0, cfg)
}

fn picard_solve<F>(rhs: &F, v0: &GridFunction, cfg: &SolverConfig) -> Result<EvolutionRecord>
where
    F: Fn(&GridFunction) -> Result<GridFunction>,
{
    cfg.validate()?;
    let steps = cfg.steps();
    let (e, _) = exp_multipliers(v0.spec(), cfg.dt);
    let mut block = ((cfg.max_subinterval / cfg.dt).floor() as usize).max(1);
    let mut done = 0;
    let mut current = v0.clone();
    let mut times = Vec::new();
    let mut fields = Vec::new();
    let mut iterations = Vec::new();
    while done < steps {
        let m = block.min(steps - done);
        match picard_block(rhs, &current, m, &e, cfg)? {
            Block::Converged(v, iters) => {
                for (i, f) in v.into_iter().enumerate().skip(1) {
                    let n = done + i;
                    let t = n as f64 * cfg.dt;
                    guard(t, &f)?;
                    if n % cfg.record_every == 0 || n == steps {
                        times.push(t);
                        fields.push(f.clone());
                    }
                    current = f;
                }
                iterations.push(iters);
                done += m;
            }
            Block::Stalled => {
                if m == 1 {
                    return Err(Error::NonContraction {
                        t: done as f64 * cfg.dt,
                        dt: cfg.dt,
                    });
                }
                block = m / 2;
                log::debug!("Picard stalled at t = {}; subinterval now {} steps", done as f64 * cfg.dt, block);
            }
        }
    }
    let mut record = EvolutionRecord::new(times, fields)?;
    record.picard_iterations = iterations;
    Ok(record)
}

/// Whether Picard converges on a single subinterval `[0, tau]` without splitting.
pub fn picard_converges(
    g: &GridFunction,
    xi: &NonlocalOperator,
    v0: &GridFunction,
    tau: f64,
    cfg: &SolverConfig,
) -> Result<bool> {
    let m = ((tau / cfg.dt).round() as usize).max(1);
    let (e, _) = exp_multipliers(v0.spec(), cfg.dt);
    Ok(matches!(
        picard_block(&transformed_rhs(g, xi), v0, m, &e, cfg)?,
        Block::Converged(..)
    ))
}

/// Largest candidate subinterval on which Picard converges in one block.
pub fn largest_convergent_subinterval(
    g: &GridFunction,
    xi: &NonlocalOperator,
    v0: &GridFunction,
    candidates: &[f64],
    cfg: &SolverConfig,
) -> Result<Option<f64>> {
    let mut best = None;
    for &tau in candidates {
        if picard_converges(g, xi, v0, tau, cfg)? {
            best = Some(best.map_or(tau, |b: f64| b.max(tau)));
        }
    }
    Ok(best)
}

/// `u(t,x) = e^{S(x)}v(t,x)` at every stored time.
pub fn reconstruct_u(cov: &ChangeOfVariables, v: &EvolutionRecord) -> Result<EvolutionRecord> {
    v.map(|f| cov.exp_s.mul(f))
}
