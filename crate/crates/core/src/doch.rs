//! The difference-of-convex Hamiltonian solvers.
//!
//! With attractor `A(x) = beta/4 sum x_i^4 - alpha/2 sum x_i^2` the relaxed
//! objective is `H(x) = A(x) - 1/2 x^T J x = f(x) - g(x)` where
//! `f(x) = beta/4 sum x_i^4` and `g(x) = 1/2 x^T (J + alpha I) x`. Minimizing
//! the convex surrogate `f - <grad g(x^k), .>` has the closed form
//!
//! ```text
//! x^(k+1) = T(x^k) = cbrt((J + alpha I) x^k / beta)
//! ```
//!
//! applied componentwise with the real cube root. DOCH iterates `T`; ADOCH
//! adds Nesterov extrapolation guarded by a non-monotone look-back test on
//! `H`.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matvec::{self, MatvecConfig};
use crate::model::{check_dim, CouplingMatrix, ProblemInstance, SpinVector, StateVector};
use crate::run::{Diagnostics, Recorder, RunOptions, SolveOutcome};
use crate::spectral::{power_iteration, FnOperator, HamiltonianMode, SolverParams};

pub const EVENT_DESCENT_VIOLATION: &str = "descent_violation";
pub const EVENT_MOMENTUM_ACCEPTED: &str = "momentum_accepted";
pub const EVENT_MOMENTUM_REJECTED: &str = "momentum_rejected";

/// Relative tolerance before a Hamiltonian increase counts as a descent
/// violation.
pub const DESCENT_TOL: f64 = 1e-9;

/// `H` for a fixed coupling and attractor shape.
#[derive(Clone, Copy, Debug)]
pub struct HamiltonianView<'a> {
    coupling: &'a CouplingMatrix,
    alpha: f64,
    beta: f64,
}

impl<'a> HamiltonianView<'a> {
    pub fn new(coupling: &'a CouplingMatrix, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha and beta must be positive, got {alpha} and {beta}"
            )));
        }
        Ok(HamiltonianView { coupling, alpha, beta })
    }

    pub fn from_params(coupling: &'a CouplingMatrix, params: &SolverParams) -> Result<Self> {
        Self::new(coupling, params.alpha, params.beta)
    }

    pub fn coupling(&self) -> &'a CouplingMatrix {
        self.coupling
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.coupling.n()
    }

    /// `f(x) = beta/4 sum x_i^4`.
    pub fn quartic_part(&self, x: &[f64]) -> f64 {
        self.beta / 4.0 * x.iter().map(|v| v.powi(4)).sum::<f64>()
    }

    /// `g(x) = 1/2 x^T (J + alpha I) x`.
    pub fn quadratic_part(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n(), x.len())?;
        let jx = matvec::matvec(self.coupling, x)?;
        Ok(0.5 * (matvec::dot(x, &jx) + self.alpha * matvec::dot(x, x)))
    }

    fn value_from(&self, x: &[f64], jx: &[f64]) -> f64 {
        attractor(x, self.alpha, self.beta) - 0.5 * matvec::dot(x, jx)
    }
}

/// `A(x) = beta/4 sum x_i^4 - alpha/2 sum x_i^2`.
pub fn attractor(x: &[f64], alpha: f64, beta: f64) -> f64 {
    x.iter()
        .map(|&v| {
            let v2 = v * v;
            0.25 * beta * v2 * v2 - 0.5 * alpha * v2
        })
        .sum()
}

/// `H(x) = A(x) - 1/2 x^T J x`.
pub fn hamiltonian(h: &HamiltonianView, x: &[f64]) -> Result<f64> {
    check_dim(h.n(), x.len())?;
    let jx = matvec::matvec(h.coupling, x)?;
    Ok(h.value_from(x, &jx))
}

/// `grad H(x)_i = beta x_i^3 - (J x)_i - alpha x_i`.
pub fn hamiltonian_gradient(h: &HamiltonianView, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(h.n(), x.len())?;
    let jx = matvec::matvec(h.coupling, x)?;
    Ok(x.iter()
        .zip(&jx)
        .map(|(&xi, &ji)| h.beta * xi * xi * xi - ji - h.alpha * xi)
        .collect())
}

fn t_from(x: &[f64], jx: &[f64], alpha: f64, beta: f64, out: &mut [f64]) {
    for ((o, &xi), &ji) in out.iter_mut().zip(x).zip(jx) {
        *o = ((ji + alpha * xi) / beta).cbrt();
    }
}

/// The fixed-point map `T(x) = cbrt((J + alpha I) x / beta)`.
pub fn apply_t(h: &HamiltonianView, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(h.n(), x.len())?;
    let jx = matvec::matvec(h.coupling, x)?;
    let mut out = vec![0.0; x.len()];
    t_from(x, &jx, h.alpha, h.beta, &mut out);
    Ok(out)
}

/// Seeded draws, uniform on `[-1, 1]` without zero.
pub fn unit_initial_state(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| loop {
            let u: f64 = rng.random_range(-1.0..=1.0);
            if u != 0.0 {
                break u;
            }
        })
        .collect()
}

/// Uniform on `[-lambda, lambda]` without zero, `lambda = sqrt(alpha / beta)`.
pub fn random_initial_state(n: usize, params: &SolverParams, seed: u64) -> StateVector {
    let lambda = params.well_radius();
    let x = unit_initial_state(n, seed).into_iter().map(|u| u * lambda).collect();
    StateVector::new(x).expect("finite draws")
}

/// `t_(k+1) = (1 + sqrt(1 + 4 t_k^2)) / 2`.
pub fn momentum_next(t: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
}

/// Products `J x` and `J sign(x)` in one sweep; returns `E(sign(x))`.
struct Sweep {
    s: Vec<f64>,
    js: Vec<f64>,
}

impl Sweep {
    fn new(n: usize) -> Self {
        Sweep {
            s: vec![0.0; n],
            js: vec![0.0; n],
        }
    }

    fn run(&mut self, j: &CouplingMatrix, x: &[f64], jx: &mut [f64], cfg: &MatvecConfig) -> Result<f64> {
        for (si, &xi) in self.s.iter_mut().zip(x) {
            *si = if xi < 0.0 { -1.0 } else { 1.0 };
        }
        matvec::apply_into(j, &[x, &self.s], &mut [jx, &mut self.js], cfg)?;
        Ok(-0.5 * matvec::dot(&self.s, &self.js))
    }
}

fn check_start(instance: &ProblemInstance, params: &SolverParams, x0: &StateVector) -> Result<()> {
    params.validate()?;
    check_dim(instance.working_dim(), x0.len())?;
    if x0.is_zero() {
        return Err(Error::ZeroInitialState);
    }
    Ok(())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn ascent_exceeds(old: f64, new: f64) -> bool {
    new - old > DESCENT_TOL * old.abs().max(1.0)
}

/// DOCH: iterate `T` from `x0` (working dimension) until the iterate
/// change drops to `params.stop_tol` or the budget runs out. The result
/// carries the best sign configuration seen, by Ising energy.
pub fn doch_solve(
    instance: &ProblemInstance,
    params: &SolverParams,
    x0: &StateVector,
    opts: RunOptions<'_>,
) -> Result<SolveOutcome> {
    check_start(instance, params, x0)?;
    let j = instance.working_coupling();
    let n = j.n();
    let cfg = opts.matvec;
    let mut rec = Recorder::new(instance, opts.trace_stride, opts.observer, params.time_budget);
    let (alpha, beta) = (params.alpha, params.beta);
    let h = HamiltonianView::from_params(j, params)?;

    let mut sweep = Sweep::new(n);
    let mut x = x0.to_vec();
    let mut jx = vec![0.0; n];
    let mut xn = vec![0.0; n];
    let e = sweep.run(j, &x, &mut jx, &cfg)?;
    let mut h_cur = h.value_from(&x, &jx);
    rec.observe(0, e, || SpinVector::from_signs(&x), None);

    let mut diag = Diagnostics::default();
    let mut converged = false;
    for k in 0..params.max_iters {
        if rec.out_of_time() {
            break;
        }
        t_from(&x, &jx, alpha, beta, &mut xn);
        let delta = max_abs_diff(&x, &xn);
        std::mem::swap(&mut x, &mut xn);
        let e = sweep.run(j, &x, &mut jx, &cfg)?;
        let h_new = h.value_from(&x, &jx);
        let mut event = None;
        if ascent_exceeds(h_cur, h_new) {
            diag.descent_violations += 1;
            log::warn!("DOCH iteration {}: H rose from {h_cur} to {h_new}", k + 1);
            event = Some(EVENT_DESCENT_VIOLATION);
        }
        h_cur = h_new;
        rec.observe(k + 1, e, || SpinVector::from_signs(&x), event);
        if delta <= params.stop_tol {
            converged = true;
            break;
        }
    }
    rec.finish(converged, x, diag)
}

/// ADOCH: DOCH with extrapolation
/// `y = x^k + (t_k - 1)/t_(k+1) (x^k - x^(k-1))` for `k >= 1`, used only
/// when `H(y)` does not exceed the largest of the last `q + 1` values
/// `H(x^j)`. Each window decision is kept in
/// [`Diagnostics::momentum_decisions`]; rejections always appear in the
/// trace.
pub fn adoch_solve(
    instance: &ProblemInstance,
    params: &SolverParams,
    x0: &StateVector,
    opts: RunOptions<'_>,
) -> Result<SolveOutcome> {
    check_start(instance, params, x0)?;
    let j = instance.working_coupling();
    let n = j.n();
    let cfg = opts.matvec;
    let mut rec = Recorder::new(instance, opts.trace_stride, opts.observer, params.time_budget);
    let (alpha, beta) = (params.alpha, params.beta);
    let h = HamiltonianView::from_params(j, params)?;
    let q = params.lookback_q;

    let mut sweep = Sweep::new(n);
    let mut x = x0.to_vec();
    let mut jx = vec![0.0; n];
    let mut x_prev = vec![0.0; n];
    let mut jx_prev = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut jy = vec![0.0; n];
    let mut xn = vec![0.0; n];

    let e = sweep.run(j, &x, &mut jx, &cfg)?;
    let mut window: VecDeque<f64> = VecDeque::with_capacity(q + 1);
    window.push_back(h.value_from(&x, &jx));
    rec.observe(0, e, || SpinVector::from_signs(&x), None);

    let mut t = 1.0;
    let mut diag = Diagnostics::default();
    let mut converged = false;
    for k in 0..params.max_iters {
        if rec.out_of_time() {
            break;
        }
        let t_next = momentum_next(t);
        let mut decision = None;
        if k >= 1 {
            let c = (t - 1.0) / t_next;
            for i in 0..n {
                y[i] = x[i] + c * (x[i] - x_prev[i]);
            }
            match params.hamiltonian_mode {
                HamiltonianMode::Economy => {
                    for i in 0..n {
                        jy[i] = (1.0 + c) * jx[i] - c * jx_prev[i];
                    }
                }
                HamiltonianMode::Exact => {
                    matvec::apply_into(j, &[&y], &mut [&mut jy], &cfg)?;
                }
            }
            let h_y = h.value_from(&y, &jy);
            let cap = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let accept = h_y <= cap;
            diag.momentum_decisions.push(accept);
            decision = Some(accept);
        }
        t = t_next;
        if decision == Some(true) {
            t_from(&y, &jy, alpha, beta, &mut xn);
        } else {
            t_from(&x, &jx, alpha, beta, &mut xn);
        }
        let delta = max_abs_diff(&x, &xn);
        // rotate: x_prev <- x, x <- xn
        std::mem::swap(&mut x_prev, &mut x);
        std::mem::swap(&mut jx_prev, &mut jx);
        std::mem::swap(&mut x, &mut xn);
        let e = sweep.run(j, &x, &mut jx, &cfg)?;
        if window.len() == q + 1 {
            window.pop_front();
        }
        window.push_back(h.value_from(&x, &jx));
        let event = match decision {
            Some(false) => Some(EVENT_MOMENTUM_REJECTED),
            _ => None,
        };
        rec.observe(k + 1, e, || SpinVector::from_signs(&x), event);
        if delta <= params.stop_tol {
            converged = true;
            break;
        }
    }
    rec.finish(converged, x, diag)
}

/// Spectral norm of the Jacobian of `T` at a fixed point,
/// `(1 / (3 beta)) diag(x*)^-2 (J + alpha I)`, by power iteration on
/// `M^T M`.
pub fn jacobian_norm_at(h: &HamiltonianView, x_star: &[f64]) -> Result<f64> {
    check_dim(h.n(), x_star.len())?;
    if let Some(i) = x_star.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroComponent(i));
    }
    let n = h.n();
    let d2: Vec<f64> = x_star
        .iter()
        .map(|&v| {
            let d = 1.0 / (3.0 * h.beta * v * v);
            d * d
        })
        .collect();
    let j = h.coupling;
    let alpha = h.alpha;
    let op = FnOperator {
        dim: n,
        f: |v: &[f64], out: &mut [f64]| {
            let mut u = matvec::matvec(j, v).expect("fixed dimensions");
            for i in 0..n {
                u[i] = (u[i] + alpha * v[i]) * d2[i];
            }
            let w = matvec::matvec(j, &u).expect("fixed dimensions");
            for i in 0..n {
                out[i] = w[i] + alpha * u[i];
            }
        },
    };
    let r = power_iteration(&op, 1e-10, 100_000)?;
    if !r.converged {
        log::warn!("Jacobian norm power iteration stopped at residual {:e}", r.residual);
    }
    Ok(r.magnitude.sqrt())
}
