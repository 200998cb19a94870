//! Classical baselines: simulated annealing, ballistic simulated
//! bifurcation, a simulated coherent Ising machine and the spring Ising
//! algorithm.
//!
//! All four share the trace and outcome types of the DOCH solvers and are
//! deterministic given their seed.

mod bsb;
mod sa;
mod sia;
mod simcim;

pub use bsb::bsb_solve;
pub use sa::sa_solve;
pub use sia::{sia_boundary, sia_solve, P_BOUND, Q_BOUND};
pub use simcim::simcim_solve;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matvec::{self, MatvecConfig};
use crate::model::CouplingMatrix;
use crate::spectral::offdiag_stats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaParams {
    pub beta0: f64,
    /// Time constant of the schedule `beta(t) = beta0 ln(1 + t / T)`.
    pub total_t: f64,
    /// Number of single-flip attempts.
    pub attempts: u64,
    pub time_budget: Option<f64>,
    /// Recompute the full energy every this many attempts and keep the
    /// largest drift from the incremental value.
    pub check_every: Option<u64>,
}

impl Default for SaParams {
    fn default() -> Self {
        SaParams {
            beta0: 1.0,
            total_t: 1000.0,
            attempts: 100_000,
            time_budget: None,
            check_every: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BsbParams {
    pub a0: f64,
    /// `None` uses [`default_c0`].
    pub c0: Option<f64>,
    pub dt: f64,
    pub steps: u64,
    pub time_budget: Option<f64>,
}

impl Default for BsbParams {
    fn default() -> Self {
        BsbParams {
            a0: 1.0,
            c0: None,
            dt: 1.0,
            steps: 1000,
            time_budget: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimCimParams {
    /// Noise amplitude `A`.
    pub noise: f64,
    pub a0: f64,
    pub c0: Option<f64>,
    pub dt: f64,
    pub steps: u64,
    pub time_budget: Option<f64>,
}

impl Default for SimCimParams {
    fn default() -> Self {
        SimCimParams {
            noise: 0.25,
            a0: 1.0,
            c0: None,
            dt: 1.0,
            steps: 1000,
            time_budget: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SiaParams {
    pub mass_m: f64,
    pub elastic_k: f64,
    /// `zeta(t)` ramps linearly from `0.8 zeta0` to `10 zeta0`.
    pub zeta0: f64,
    pub dt: f64,
    pub steps: u64,
    pub time_budget: Option<f64>,
}

impl Default for SiaParams {
    fn default() -> Self {
        SiaParams {
            mass_m: 1.0,
            elastic_k: 0.5,
            zeta0: 0.05,
            dt: 0.5,
            steps: 1000,
            time_budget: None,
        }
    }
}

impl SiaParams {
    pub fn zeta(&self, t: u64) -> f64 {
        let frac = if self.steps == 0 {
            0.0
        } else {
            t as f64 / self.steps as f64
        };
        self.zeta0 * (0.8 + (10.0 - 0.8) * frac)
    }
}

/// Parameters for all four baselines.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineParams {
    pub sa: SaParams,
    pub bsb: BsbParams,
    pub simcim: SimCimParams,
    pub sia: SiaParams,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn step_size(v: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.25) {
        return Err(Error::InvalidParameter(format!(
            "time step must lie in (0, 1.25], got {v}"
        )));
    }
    Ok(())
}

fn budget(t: Option<f64>) -> Result<()> {
    match t {
        Some(v) => positive("time budget", v),
        None => Ok(()),
    }
}

impl SaParams {
    pub fn validate(&self) -> Result<()> {
        positive("beta0", self.beta0)?;
        positive("total_t", self.total_t)?;
        if self.check_every == Some(0) {
            return Err(Error::InvalidParameter("check_every must be at least 1".into()));
        }
        budget(self.time_budget)
    }
}

impl BsbParams {
    pub fn validate(&self) -> Result<()> {
        positive("a0", self.a0)?;
        if let Some(c) = self.c0 {
            positive("c0", c)?;
        }
        step_size(self.dt)?;
        budget(self.time_budget)
    }
}

impl SimCimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise amplitude must be nonnegative, got {}",
                self.noise
            )));
        }
        positive("a0", self.a0)?;
        if let Some(c) = self.c0 {
            positive("c0", c)?;
        }
        step_size(self.dt)?;
        budget(self.time_budget)
    }
}

impl SiaParams {
    pub fn validate(&self) -> Result<()> {
        positive("mass_m", self.mass_m)?;
        positive("elastic_k", self.elastic_k)?;
        positive("zeta0", self.zeta0)?;
        step_size(self.dt)?;
        budget(self.time_budget)
    }
}

impl BaselineParams {
    pub fn validate(&self) -> Result<()> {
        self.sa.validate()?;
        self.bsb.validate()?;
        self.simcim.validate()?;
        self.sia.validate()
    }
}

/// Coupling strength `c0 = 1 / (2 <J> sqrt(n))` with `<J>` the
/// off-diagonal standard deviation. A constant nonzero off-diagonal uses
/// the root mean square instead; the zero matrix gets 0.
pub fn default_c0(j: &CouplingMatrix) -> Result<f64> {
    let (mean, std) = offdiag_stats(j)?;
    let spread = if std > 0.0 { std } else { mean.abs() };
    if spread == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (2.0 * spread * (j.n() as f64).sqrt()))
}

pub(crate) fn c0_or_default(c0: Option<f64>, j: &CouplingMatrix) -> Result<f64> {
    match c0 {
        Some(c) => Ok(c),
        None => default_c0(j),
    }
}

pub(crate) fn signs_into(x: &[f64], s: &mut [f64]) {
    for (si, &xi) in s.iter_mut().zip(x) {
        *si = if xi < 0.0 { -1.0 } else { 1.0 };
    }
}

/// Computes `J x` and `J sign(x)` together; returns `E(sign(x))`.
pub(crate) fn sweep_with_signs(
    j: &CouplingMatrix,
    x: &[f64],
    s: &mut [f64],
    jx: &mut [f64],
    js: &mut [f64],
    cfg: &MatvecConfig,
) -> Result<f64> {
    signs_into(x, s);
    matvec::apply_into(j, &[x, s], &mut [jx, js], cfg)?;
    Ok(-0.5 * matvec::dot(s, js))
}

pub(crate) fn random_pm1(n: usize, rng: &mut impl rand::Rng) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}
