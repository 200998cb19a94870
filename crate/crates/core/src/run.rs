//! Shared run plumbing: options, outcomes and trace recording.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::TraceRecord;
use crate::matvec::MatvecConfig;
use crate::model::{ProblemInstance, SpinVector};

/// Per-run options that do not change the mathematics of a solver.
pub struct RunOptions<'a> {
    /// Record every `trace_stride`-th iteration; 0 keeps only events and
    /// the final iteration.
    pub trace_stride: u64,
    pub matvec: MatvecConfig,
    /// Called with every record as it is produced.
    pub observer: Option<&'a mut dyn FnMut(&TraceRecord)>,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        RunOptions {
            trace_stride: 1,
            matvec: MatvecConfig::default(),
            observer: None,
        }
    }
}

impl<'a> RunOptions<'a> {
    pub fn with_stride(mut self, stride: u64) -> Self {
        self.trace_stride = stride;
        self
    }

    pub fn with_matvec(mut self, cfg: MatvecConfig) -> Self {
        self.matvec = cfg;
        self
    }

    pub fn with_observer(mut self, f: &'a mut dyn FnMut(&TraceRecord)) -> Self {
        self.observer = Some(f);
        self
    }
}

/// Solver-specific bookkeeping that does not fit the trace.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// DOCH iterations where the Hamiltonian went up beyond tolerance.
    pub descent_violations: u64,
    /// ADOCH window decisions for `k = 1, 2, ...`; `true` means the
    /// extrapolated point was used.
    pub momentum_decisions: Vec<bool>,
    /// Largest gap between incremental and recomputed SA energy at the
    /// spot checks, when enabled.
    pub max_energy_drift: Option<f64>,
}

impl Diagnostics {
    pub fn momentum_accepted(&self) -> usize {
        self.momentum_decisions.iter().filter(|&&d| d).count()
    }

    pub fn momentum_rejected(&self) -> usize {
        self.momentum_decisions.len() - self.momentum_accepted()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    /// Best configuration found, in the original (field) model.
    pub spins: SpinVector,
    /// Energy of `spins`.
    pub energy: f64,
    /// Energy of the sign of the last iterate.
    pub final_energy: f64,
    pub cut_value: Option<f64>,
    pub iterations: u64,
    pub elapsed_s: f64,
    /// Whether the iterate change fell below the stopping tolerance.
    pub converged: bool,
    /// Last continuous iterate, in working dimension.
    pub final_state: Vec<f64>,
    pub trace: Vec<TraceRecord>,
    pub diagnostics: Diagnostics,
}

pub(crate) struct Recorder<'o, 'i> {
    instance: &'i ProblemInstance,
    start: Instant,
    time_budget: Option<f64>,
    stride: u64,
    observer: Option<&'o mut dyn FnMut(&TraceRecord)>,
    best_energy: f64,
    best: Option<SpinVector>,
    last: Option<(u64, f64, bool)>,
    trace: Vec<TraceRecord>,
}

impl<'o, 'i> Recorder<'o, 'i> {
    pub(crate) fn new(
        instance: &'i ProblemInstance,
        stride: u64,
        observer: Option<&'o mut dyn FnMut(&TraceRecord)>,
        time_budget: Option<f64>,
    ) -> Self {
        Recorder {
            instance,
            start: Instant::now(),
            time_budget,
            stride,
            observer,
            best_energy: f64::INFINITY,
            best: None,
            last: None,
            trace: Vec::new(),
        }
    }

    pub(crate) fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    pub(crate) fn out_of_time(&self) -> bool {
        self.time_budget.is_some_and(|t| self.elapsed() >= t)
    }

    /// Registers the energy of the working configuration at `iter`.
    /// `sigma` is only called when the energy improves on the best so far.
    pub(crate) fn observe(&mut self, iter: u64, energy: f64, sigma: impl FnOnce() -> SpinVector, event: Option<&str>) {
        if energy < self.best_energy || self.best.is_none() {
            self.best_energy = energy;
            self.best = Some(sigma());
        }
        let due = self.stride > 0 && iter.is_multiple_of(self.stride);
        let recorded = due || event.is_some();
        if recorded {
            self.push(iter, energy, event);
        }
        self.last = Some((iter, energy, recorded));
    }

    /// Offers a candidate best without recording anything.
    pub(crate) fn offer(&mut self, energy: f64, sigma: impl FnOnce() -> SpinVector) {
        if energy < self.best_energy || self.best.is_none() {
            self.best_energy = energy;
            self.best = Some(sigma());
        }
    }

    fn push(&mut self, iter: u64, energy: f64, event: Option<&str>) {
        let rec = TraceRecord {
            iter,
            elapsed_s: self.elapsed(),
            energy,
            best_energy: self.best_energy,
            cut_value: self.instance.cut_from_energy(energy),
            event: event.map(str::to_owned),
        };
        if let Some(f) = self.observer.as_mut() {
            f(&rec);
        }
        self.trace.push(rec);
    }

    pub(crate) fn finish(
        mut self,
        converged: bool,
        final_state: Vec<f64>,
        diagnostics: Diagnostics,
    ) -> Result<SolveOutcome> {
        let (iterations, final_energy) = match self.last {
            Some((iter, e, recorded)) => {
                if !recorded {
                    self.push(iter, e, None);
                }
                (iter, e)
            }
            None => (0, f64::NAN),
        };
        let elapsed_s = self.elapsed();
        let sigma = self.best.take().expect("at least one observation");
        let spins = self.instance.spins_from_working(&sigma)?;
        // recomputed so that incremental bookkeeping cannot leak rounding
        let energy = self.instance.energy(&spins)?;
        Ok(SolveOutcome {
            cut_value: self.instance.cut_from_energy(energy),
            energy,
            spins,
            final_energy,
            iterations,
            elapsed_s,
            converged,
            final_state,
            trace: self.trace,
            diagnostics,
        })
    }
}
