//! Eigenvalue estimates and the solver parameters derived from them.
//!
//! The quadratic part of the DOCH splitting is convex once
//! `alpha >= lambda_max(-J)`, so `alpha = eta * lambda_max(-J)` and
//! `beta = n sqrt(n) max_i (alpha + sum_j |J_ij|)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matvec::{self, MatvecConfig};
use crate::model::{CouplingMatrix, ProblemInstance};

/// Sizes from here on use the Wigner estimate in [`SpectralMethod::Auto`].
pub const WIGNER_THRESHOLD: usize = 10_000;

pub const DEFAULT_ETA_GRID: [f64; 7] = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0];

pub const DEFAULT_POWER_TOL: f64 = 1e-7;
pub const DEFAULT_POWER_ITERS: usize = 50_000;

/// How Hamiltonian values inside the ADOCH window test are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianMode {
    /// `J y` is formed from the cached `J x^k` and `J x^(k-1)`; one product
    /// per iteration.
    #[default]
    Economy,
    /// `J y` is computed with its own product.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub alpha: f64,
    pub beta: f64,
    /// Recorded for reporting; only [`derive_params`] checks its range.
    pub eta: f64,
    pub lookback_q: usize,
    pub max_iters: u64,
    pub time_budget: Option<f64>,
    pub seed: u64,
    /// Stop when `max_i |x^(k+1)_i - x^k_i|` drops to this value.
    pub stop_tol: f64,
    pub hamiltonian_mode: HamiltonianMode,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            alpha: 1.0,
            beta: 1.0,
            eta: 1.0,
            lookback_q: 5,
            max_iters: 1000,
            time_budget: None,
            seed: 0,
            stop_tol: 1e-10,
            hamiltonian_mode: HamiltonianMode::Economy,
        }
    }
}

impl SolverParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = SolverParams {
            alpha,
            beta,
            ..Default::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.lookback_q == 0 {
            return Err(Error::InvalidParameter("lookback_q must be at least 1".into()));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::InvalidParameter("stop_tol must be nonnegative".into()));
        }
        if let Some(t) = self.time_budget {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "time budget must be positive, got {t}"
                )));
            }
        }
        Ok(())
    }

    /// Half-width `sqrt(alpha / beta)` of the attractor wells.
    pub fn well_radius(&self) -> f64 {
        (self.alpha / self.beta).sqrt()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMethod {
    /// Power iteration below [`WIGNER_THRESHOLD`] spins, Wigner above.
    #[default]
    Auto,
    PowerIteration,
    Wigner,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub lambda_max_neg_j: f64,
    /// The method actually used; never `Auto`.
    pub method: SpectralMethod,
    pub iterations_used: usize,
    /// Off-diagonal standard deviation, for the Wigner estimate.
    pub sample_std: Option<f64>,
    /// False when power iteration stopped at its iteration cap.
    pub converged: bool,
}

/// A symmetric linear operator on `R^dim`.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// `scale * J + shift * I`.
pub struct ShiftedCoupling<'a> {
    pub coupling: &'a CouplingMatrix,
    pub scale: f64,
    pub shift: f64,
    pub matvec: MatvecConfig,
}

impl SymmetricOperator for ShiftedCoupling<'_> {
    fn dim(&self) -> usize {
        self.coupling.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        matvec::apply_into(self.coupling, &[x], &mut [&mut *y], &self.matvec).expect("operator dimensions are fixed");
        for (yi, &xi) in y.iter_mut().zip(x) {
            *yi = self.scale * *yi + self.shift * xi;
        }
    }
}

impl SymmetricOperator for CouplingMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        matvec::apply_into(self, &[x], &mut [y], &MatvecConfig::default()).expect("operator dimensions are fixed");
    }
}

/// An operator given by a closure.
pub struct FnOperator<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64])> SymmetricOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerResult {
    /// Estimate of the largest eigenvalue magnitude.
    pub magnitude: f64,
    /// Rayleigh quotient of the final vector.
    pub rayleigh: f64,
    /// `||M v - rho v|| / |rho|` at the final vector.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

const STALL_WINDOW: usize = 200;
const RESTART_SEED: u64 = 0x005e_ed0f_9011;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Power iteration from the normalized all-ones vector. If the residual
/// stops improving the iteration restarts once from a seeded random vector.
pub fn power_iteration(op: &dyn SymmetricOperator, tol: f64, max_iters: usize) -> Result<PowerResult> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::InvalidParameter("operator has dimension 0".into()));
    }
    let v = vec![1.0 / (n as f64).sqrt(); n];
    power_iteration_from(op, v, tol, max_iters).map(|(r, _)| r)
}

/// Power iteration from a unit vector `v`; also returns the final vector.
fn power_iteration_from(
    op: &dyn SymmetricOperator,
    mut v: Vec<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<(PowerResult, Vec<f64>)> {
    let n = op.dim();
    let mut w = vec![0.0; n];
    let mut restarted = false;
    let mut best = PowerResult {
        magnitude: 0.0,
        rayleigh: 0.0,
        residual: f64::INFINITY,
        iterations: 0,
        converged: false,
    };
    let mut window_best = f64::INFINITY;
    let mut window_start = 0;

    let restart = |v: &mut [f64]| {
        let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
        for x in v.iter_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        let s = norm(v);
        for x in v.iter_mut() {
            *x /= s;
        }
    };

    for it in 1..=max_iters {
        op.apply(&v, &mut w);
        let rho: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let wn = norm(&w);
        if wn == 0.0 {
            if restarted {
                return Err(Error::DegenerateMatrix);
            }
            restarted = true;
            restart(&mut v);
            continue;
        }
        let res =
            v.iter().zip(&w).map(|(a, b)| (b - rho * a).powi(2)).sum::<f64>().sqrt() / rho.abs().max(f64::MIN_POSITIVE);
        let current = PowerResult {
            magnitude: wn,
            rayleigh: rho,
            residual: res,
            iterations: it,
            converged: false,
        };
        if res <= tol {
            let r = PowerResult {
                magnitude: rho.abs(),
                converged: true,
                ..current
            };
            return Ok((r, v));
        }
        best = current;
        for (vi, &wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
        if res < 0.9 * window_best {
            window_best = res;
            window_start = it;
        } else if it - window_start >= STALL_WINDOW && !restarted {
            log::debug!("power iteration stalled at residual {res:e}; restarting");
            restarted = true;
            restart(&mut v);
            window_best = f64::INFINITY;
            window_start = it;
        }
    }
    Ok((best, v))
}

/// Largest eigenvalue magnitude of `op`, to relative residual `tol`.
pub fn power_method_lambda_max(op: &dyn SymmetricOperator, tol: f64, max_iters: usize) -> Result<f64> {
    let r = power_iteration(op, tol, max_iters)?;
    if r.converged {
        Ok(r.magnitude)
    } else {
        Err(Error::NotConverged {
            estimate: r.magnitude,
            residual: r.residual,
            iterations: r.iterations,
        })
    }
}

/// `lambda_max(-J)` by power iteration: first the dominant magnitude of
/// `-J`, then, unless that already settled on a positive eigenvalue, the
/// top of `-J + cI` with `c` the magnitude estimate. When the first pass
/// converged to a negative eigenvalue, the second starts orthogonal to its
/// eigenvector.
pub fn lambda_max_neg(j: &CouplingMatrix, cfg: &MatvecConfig, tol: f64, max_iters: usize) -> Result<SpectralEstimate> {
    if j.is_zero() {
        return Err(Error::DegenerateMatrix);
    }
    let first_cap = max_iters.clamp(1, 100);
    let neg = ShiftedCoupling {
        coupling: j,
        scale: -1.0,
        shift: 0.0,
        matvec: *cfg,
    };
    let n = j.n();
    let ones = vec![1.0 / (n as f64).sqrt(); n];
    let (first, v1) = power_iteration_from(&neg, ones.clone(), tol, first_cap)?;
    let mut used = first.iterations;
    if first.converged && first.rayleigh > 0.0 {
        return Ok(SpectralEstimate {
            lambda_max_neg_j: first.rayleigh,
            method: SpectralMethod::PowerIteration,
            iterations_used: used,
            sample_std: None,
            converged: true,
        });
    }
    let mut start = ones;
    if first.converged {
        let proj: f64 = start.iter().zip(&v1).map(|(a, b)| a * b).sum();
        for (s, &b) in start.iter_mut().zip(&v1) {
            *s -= proj * b;
        }
        let s = norm(&start);
        if s > 1e-8 {
            start.iter_mut().for_each(|x| *x /= s);
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
            start.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
            let proj: f64 = start.iter().zip(&v1).map(|(a, b)| a * b).sum();
            for (s, &b) in start.iter_mut().zip(&v1) {
                *s -= proj * b;
            }
            let s = norm(&start);
            start.iter_mut().for_each(|x| *x /= s);
        }
    }
    let mut c = first.magnitude;
    loop {
        let shifted = ShiftedCoupling {
            coupling: j,
            scale: -1.0,
            shift: c,
            matvec: *cfg,
        };
        let (r, _) = power_iteration_from(&shifted, start.clone(), tol, max_iters.saturating_sub(used).max(1))?;
        used += r.iterations;
        if r.rayleigh < 0.0 && r.converged && used < max_iters {
            // the shift undershot |lambda_min|; a larger one fixes that
            c *= 2.0;
            continue;
        }
        if !r.converged {
            log::warn!(
                "lambda_max(-J) power iteration hit its cap after {used} iterations (residual {:e})",
                r.residual
            );
        }
        return Ok(SpectralEstimate {
            lambda_max_neg_j: r.rayleigh - c,
            method: SpectralMethod::PowerIteration,
            iterations_used: used,
            sample_std: None,
            converged: r.converged,
        });
    }
}

/// Mean and standard deviation of the `n(n-1)` off-diagonal entries,
/// absent CSR entries counting as zeros.
pub fn offdiag_stats(j: &CouplingMatrix) -> Result<(f64, f64)> {
    let n = j.n();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 spins, got {n}")));
    }
    let pairs = n as f64 * (n as f64 - 1.0);
    let mut sum = 0.0;
    for i in 0..n {
        j.for_each_in_row(i, |k, v| {
            if k != i {
                sum += v;
            }
        });
    }
    let mean = sum / pairs;
    let mut visited = 0usize;
    let mut ss = 0.0;
    for i in 0..n {
        j.for_each_in_row(i, |k, v| {
            if k != i {
                visited += 1;
                ss += (v - mean) * (v - mean);
            }
        });
    }
    let missing = pairs - visited as f64;
    ss += missing * mean * mean;
    Ok((mean, (ss / pairs).sqrt()))
}

/// `2 <J> sqrt(n)`, with `<J>` the off-diagonal standard deviation.
pub fn wigner_lambda_max(j: &CouplingMatrix) -> Result<f64> {
    if j.n() >= 2 && j.is_zero() {
        return Err(Error::DegenerateMatrix);
    }
    let (_, std) = offdiag_stats(j)?;
    Ok(2.0 * std * (j.n() as f64).sqrt())
}

/// `lambda_max(-J)` by the requested method. A zero Wigner estimate falls
/// back to power iteration.
pub fn spectral_estimate(j: &CouplingMatrix, method: SpectralMethod, cfg: &MatvecConfig) -> Result<SpectralEstimate> {
    let use_wigner = match method {
        SpectralMethod::Auto => j.n() >= WIGNER_THRESHOLD,
        SpectralMethod::Wigner => true,
        SpectralMethod::PowerIteration => false,
    };
    if use_wigner {
        let (_, std) = offdiag_stats(j)?;
        let lambda = 2.0 * std * (j.n() as f64).sqrt();
        if lambda > 0.0 {
            return Ok(SpectralEstimate {
                lambda_max_neg_j: lambda,
                method: SpectralMethod::Wigner,
                iterations_used: 0,
                sample_std: Some(std),
                converged: true,
            });
        }
        log::info!("Wigner estimate is zero; falling back to power iteration");
    }
    lambda_max_neg(j, cfg, DEFAULT_POWER_TOL, DEFAULT_POWER_ITERS)
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 2.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 2], got {eta}")));
    }
    Ok(())
}

/// Parameters for a given `lambda_max(-J)` estimate.
pub fn params_from_estimate(j: &CouplingMatrix, eta: f64, est: &SpectralEstimate) -> Result<SolverParams> {
    check_eta(eta)?;
    let alpha = eta * est.lambda_max_neg_j;
    let n = j.n() as f64;
    let beta = n * n.sqrt() * (alpha + j.max_row_abs_sum());
    let p = SolverParams {
        alpha,
        beta,
        eta,
        ..Default::default()
    };
    p.validate()?;
    Ok(p)
}

pub fn derive_params(j: &CouplingMatrix, eta: f64, method: SpectralMethod) -> Result<SolverParams> {
    check_eta(eta)?;
    let est = spectral_estimate(j, method, &MatvecConfig::default())?;
    params_from_estimate(j, eta, &est)
}

/// Picks the `eta` whose short DOCH probe ends at the lowest energy. All
/// probes start from the same draw, rescaled to each candidate's wells.
/// Ties go to the smaller `eta`.
pub fn tune_eta(instance: &ProblemInstance, candidates: &[f64], probe_iters: u64, seed: u64) -> Result<f64> {
    let j = instance.working_coupling();
    if candidates.len() <= 1 || j.is_zero() {
        return tune_eta_with_estimate(instance, None, candidates, probe_iters, seed);
    }
    let est = spectral_estimate(j, SpectralMethod::Auto, &MatvecConfig::default())?;
    tune_eta_with_estimate(instance, Some(&est), candidates, probe_iters, seed)
}

/// [`tune_eta`] against a precomputed estimate for the working coupling.
/// `None` is accepted only when no probe is needed.
pub fn tune_eta_with_estimate(
    instance: &ProblemInstance,
    est: Option<&SpectralEstimate>,
    candidates: &[f64],
    probe_iters: u64,
    seed: u64,
) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no candidate eta values".into()));
    }
    if probe_iters == 0 {
        return Err(Error::InvalidParameter("probe_iters must be at least 1".into()));
    }
    for &eta in candidates {
        check_eta(eta)?;
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.len() == 1 || instance.working_coupling().is_zero() {
        return Ok(sorted[0]);
    }
    let j = instance.working_coupling();
    let est = est.ok_or_else(|| Error::InvalidParameter("a spectral estimate is required".into()))?;
    let unit = crate::doch::unit_initial_state(j.n(), seed);
    let mut best = (f64::INFINITY, sorted[0]);
    for &eta in &sorted {
        let mut params = params_from_estimate(j, eta, est)?;
        params.max_iters = probe_iters;
        params.seed = seed;
        let lambda = params.well_radius();
        let x0 = crate::model::StateVector::new(unit.iter().map(|u| u * lambda).collect())?;
        let out = crate::doch::doch_solve(instance, &params, &x0, crate::run::RunOptions::default().with_stride(0))?;
        log::debug!("eta {eta}: probe energy {}", out.final_energy);
        if out.final_energy < best.0 {
            best = (out.final_energy, eta);
        }
    }
    Ok(best.1)
}
