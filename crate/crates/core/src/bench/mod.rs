//! Benchmark harness: repeated seeded runs of several solvers on one
//! instance, summarized against a reference energy.

mod oracle;
mod stats;

pub use oracle::{brute_force_ground_state, BRUTE_FORCE_CAP};
pub use stats::{avg_tts, first_hit, histogram, Histogram, TtsSummary, MIN_BINS};

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{self, BsbParams, SaParams, SiaParams, SimCimParams};
use crate::doch;
use crate::error::{Error, Result};
use crate::generate::GeneratorSpec;
use crate::io::TraceRecord;
use crate::matvec::MatvecConfig;
use crate::model::ProblemInstance;
use crate::run::{RunOptions, SolveOutcome};
use crate::spectral::{self, HamiltonianMode, SolverParams, SpectralMethod, DEFAULT_ETA_GRID};

/// Fraction of the reference quality that counts as reaching the target.
pub const DEFAULT_TTS_FRACTION: f64 = 0.99;

/// Settings shared by DOCH and ADOCH.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DochConfig {
    pub eta: f64,
    /// Pick `eta` from the default grid with short probes instead.
    pub tune_eta: bool,
    pub lookback_q: usize,
    pub max_iters: u64,
    pub stop_tol: f64,
    pub hamiltonian_mode: HamiltonianMode,
    pub spectral: SpectralMethod,
}

impl Default for DochConfig {
    fn default() -> Self {
        let p = SolverParams::default();
        DochConfig {
            eta: 1.0,
            tune_eta: false,
            lookback_q: p.lookback_q,
            max_iters: p.max_iters,
            stop_tol: p.stop_tol,
            hamiltonian_mode: p.hamiltonian_mode,
            spectral: SpectralMethod::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "snake_case")]
pub enum SolverSpec {
    Doch(DochConfig),
    Adoch(DochConfig),
    Sa(SaParams),
    Bsb(BsbParams),
    Simcim(SimCimParams),
    Sia(SiaParams),
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Doch(_) => "doch",
            SolverSpec::Adoch(_) => "adoch",
            SolverSpec::Sa(_) => "sa",
            SolverSpec::Bsb(_) => "bsb",
            SolverSpec::Simcim(_) => "simcim",
            SolverSpec::Sia(_) => "sia",
        }
    }

    /// Default settings for a solver name.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "doch" => SolverSpec::Doch(DochConfig::default()),
            "adoch" => SolverSpec::Adoch(DochConfig::default()),
            "sa" => SolverSpec::Sa(SaParams::default()),
            "bsb" => SolverSpec::Bsb(BsbParams::default()),
            "simcim" => SolverSpec::Simcim(SimCimParams::default()),
            "sia" => SolverSpec::Sia(SiaParams::default()),
            other => return Err(Error::InvalidParameter(format!("unknown solver {other:?}"))),
        })
    }

    /// Applies an iteration and wall-clock budget. For SA one iteration is
    /// a sweep of `n` flip attempts.
    pub fn with_budget(mut self, budget: &Budget, n: usize) -> Self {
        match &mut self {
            SolverSpec::Doch(c) | SolverSpec::Adoch(c) => {
                if let Some(i) = budget.iters {
                    c.max_iters = i;
                }
            }
            SolverSpec::Sa(p) => {
                if let Some(i) = budget.iters {
                    p.attempts = i.saturating_mul(n as u64);
                }
                p.time_budget = budget.seconds.or(p.time_budget);
            }
            SolverSpec::Bsb(p) => {
                if let Some(i) = budget.iters {
                    p.steps = i;
                }
                p.time_budget = budget.seconds.or(p.time_budget);
            }
            SolverSpec::Simcim(p) => {
                if let Some(i) = budget.iters {
                    p.steps = i;
                }
                p.time_budget = budget.seconds.or(p.time_budget);
            }
            SolverSpec::Sia(p) => {
                if let Some(i) = budget.iters {
                    p.steps = i;
                }
                p.time_budget = budget.seconds.or(p.time_budget);
            }
        }
        self
    }

    /// Does the per-instance setup (spectral estimate, `eta` tuning) once so
    /// that restarts only pay for the solve itself.
    pub fn prepare(&self, instance: &ProblemInstance, budget: &Budget) -> Result<PreparedSolver> {
        let kind = match self {
            SolverSpec::Doch(c) | SolverSpec::Adoch(c) => {
                let j = instance.working_coupling();
                let eta = if c.tune_eta {
                    spectral::tune_eta(instance, &DEFAULT_ETA_GRID, 50, 0)?
                } else {
                    c.eta
                };
                let est = spectral::spectral_estimate(j, c.spectral, &Default::default())?;
                let mut params = spectral::params_from_estimate(j, eta, &est)?;
                params.lookback_q = c.lookback_q;
                params.max_iters = c.max_iters;
                params.stop_tol = c.stop_tol;
                params.hamiltonian_mode = c.hamiltonian_mode;
                params.time_budget = budget.seconds;
                params.validate()?;
                Prepared::Doch {
                    accelerated: matches!(self, SolverSpec::Adoch(_)),
                    params,
                }
            }
            other => Prepared::Baseline(other.clone()),
        };
        Ok(PreparedSolver {
            name: self.name(),
            kind,
        })
    }
}

#[derive(Clone, Debug)]
enum Prepared {
    Doch { accelerated: bool, params: SolverParams },
    Baseline(SolverSpec),
}

/// A solver ready to run on the instance it was prepared for.
#[derive(Clone, Debug)]
pub struct PreparedSolver {
    name: &'static str,
    kind: Prepared,
}

impl PreparedSolver {
    pub fn name(&self) -> &'static str {
        self.name
    }

    /// Derived DOCH parameters, if this is a DOCH variant.
    pub fn solver_params(&self) -> Option<&SolverParams> {
        match &self.kind {
            Prepared::Doch { params, .. } => Some(params),
            Prepared::Baseline(_) => None,
        }
    }

    pub fn run(&self, instance: &ProblemInstance, seed: u64, opts: RunOptions<'_>) -> Result<SolveOutcome> {
        match &self.kind {
            Prepared::Doch { accelerated, params } => {
                let mut params = params.clone();
                params.seed = seed;
                let x0 = doch::random_initial_state(instance.working_dim(), &params, seed);
                if *accelerated {
                    doch::adoch_solve(instance, &params, &x0, opts)
                } else {
                    doch::doch_solve(instance, &params, &x0, opts)
                }
            }
            Prepared::Baseline(SolverSpec::Sa(p)) => baselines::sa_solve(instance, p, seed, opts),
            Prepared::Baseline(SolverSpec::Bsb(p)) => baselines::bsb_solve(instance, p, seed, opts),
            Prepared::Baseline(SolverSpec::Simcim(p)) => baselines::simcim_solve(instance, p, seed, opts),
            Prepared::Baseline(SolverSpec::Sia(p)) => baselines::sia_solve(instance, p, seed, opts),
            Prepared::Baseline(_) => unreachable!("DOCH variants are prepared separately"),
        }
    }
}

/// Where the instance comes from: a file or a generator description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    Path { path: PathBuf },
    Generated(GeneratorSpec),
}

impl InstanceSource {
    pub fn load(&self) -> Result<ProblemInstance> {
        match self {
            InstanceSource::Path { path } => crate::io::load_instance(path),
            InstanceSource::Generated(g) => Ok(ProblemInstance::new(g.label(), g.generate()?)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    /// Iterations per run (sweeps for SA).
    pub iters: Option<u64>,
    /// Wall-clock seconds per run.
    pub seconds: Option<f64>,
}

/// How the reference energy for TTS and attainment is obtained.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceSpec {
    /// Exhaustive search up to [`BRUTE_FORCE_CAP`] spins, long SA beyond.
    #[default]
    Auto,
    BruteForce,
    LongSa {
        #[serde(default = "long_sa_attempts")]
        attempts: u64,
        #[serde(default = "long_sa_restarts")]
        restarts: usize,
    },
    Fixed {
        energy: f64,
    },
    None,
}

fn long_sa_attempts() -> u64 {
    100_000
}

fn long_sa_restarts() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub instance: InstanceSource,
    pub solvers: Vec<SolverSpec>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub reference: ReferenceSpec,
    /// Defaults to [`DEFAULT_TTS_FRACTION`] when a reference exists.
    #[serde(default)]
    pub tts_fraction: Option<f64>,
    #[serde(default = "default_stride")]
    pub trace_stride: u64,
}

fn default_restarts() -> usize {
    10
}

fn default_stride() -> u64 {
    1
}

impl BenchSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: BenchSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a spec file; relative instance paths resolve against its
    /// directory.
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let mut spec = Self::from_toml_str(&std::fs::read_to_string(path)?)?;
        if let InstanceSource::Path { path: p } = &mut spec.instance {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::Config("no solvers listed".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if let Some(f) = self.tts_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("tts_fraction must lie in (0, 1], got {f}")));
            }
            if self.reference == ReferenceSpec::None {
                return Err(Error::Config("tts_fraction needs a reference".into()));
            }
        }
        if let Some(s) = self.budget.seconds {
            if !(s > 0.0) {
                return Err(Error::Config(format!("budget seconds must be positive, got {s}")));
            }
        }
        if let InstanceSource::Generated(g) = &self.instance {
            g.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub energy: f64,
    /// `brute_force`, `long_sa` or `fixed`.
    pub source: String,
}

/// Resolves the reference energy for an instance.
pub fn resolve_reference(instance: &ProblemInstance, spec: &ReferenceSpec, seed: u64) -> Result<Option<Reference>> {
    let r = |energy, source: &str| {
        Some(Reference {
            energy,
            source: source.into(),
        })
    };
    Ok(match spec {
        ReferenceSpec::None => None,
        ReferenceSpec::Fixed { energy } => r(*energy, "fixed"),
        ReferenceSpec::BruteForce => r(brute_force_ground_state(instance)?.1, "brute_force"),
        ReferenceSpec::LongSa { attempts, restarts } => r(long_sa(instance, *attempts, *restarts, seed)?, "long_sa"),
        ReferenceSpec::Auto => {
            if instance.n() <= BRUTE_FORCE_CAP {
                r(brute_force_ground_state(instance)?.1, "brute_force")
            } else {
                r(
                    long_sa(instance, long_sa_attempts(), long_sa_restarts(), seed)?,
                    "long_sa",
                )
            }
        }
    })
}

fn long_sa(instance: &ProblemInstance, attempts: u64, restarts: usize, seed: u64) -> Result<f64> {
    let p = SaParams {
        attempts,
        ..Default::default()
    };
    let mut best = f64::INFINITY;
    for r in 0..restarts.max(1) {
        let out = baselines::sa_solve(
            instance,
            &p,
            seed.wrapping_add(r as u64),
            RunOptions::default().with_stride(0),
        )?;
        best = best.min(out.energy);
    }
    Ok(best)
}

/// Host description, kept apart from the results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            crate_version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            threads: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub solver: String,
    pub runs: usize,
    pub energies: Vec<f64>,
    pub best_energy: f64,
    pub mean_energy: f64,
    pub worst_energy: f64,
    pub best_cut: Option<f64>,
    pub mean_cut: Option<f64>,
    pub histogram: Histogram,
    pub tts: Option<TtsSummary>,
    /// Fraction of runs ending at the reference energy.
    pub attainment_rate: Option<f64>,
    pub mean_iterations: f64,
    pub mean_elapsed_s: f64,
    /// `(alpha, beta, eta)` for DOCH variants.
    pub derived: Option<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub name: String,
    pub instance: String,
    pub n: usize,
    pub restarts: usize,
    pub seed: u64,
    pub reference: Option<Reference>,
    pub tts_fraction: Option<f64>,
    pub solvers: Vec<SolverReport>,
    pub environment: Environment,
}

/// One run's trace, tagged for the long-format CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub solver: String,
    pub run: usize,
    pub seed: u64,
    pub records: Vec<TraceRecord>,
}

#[derive(Clone, Debug)]
pub struct BenchResult {
    pub report: BenchReport,
    pub traces: Vec<RunTrace>,
}

fn reached(energy: f64, reference: f64) -> bool {
    energy <= reference + 1e-9 * reference.abs().max(1.0)
}

/// Runs every solver `restarts` times with seeds `seed + r`.
pub fn run_bench(spec: &BenchSpec) -> Result<BenchResult> {
    spec.validate()?;
    let instance = spec.instance.load()?;
    run_bench_on(spec, &instance, &MatvecConfig::default())
}

/// [`run_bench`] with the instance already loaded.
pub fn run_bench_on(spec: &BenchSpec, instance: &ProblemInstance, matvec: &MatvecConfig) -> Result<BenchResult> {
    spec.validate()?;
    let reference = resolve_reference(instance, &spec.reference, spec.seed)?;
    let tts_fraction = reference
        .as_ref()
        .map(|_| spec.tts_fraction.unwrap_or(DEFAULT_TTS_FRACTION));
    let n = instance.n();
    let mut reports = Vec::new();
    let mut traces = Vec::new();
    for solver in &spec.solvers {
        let solver = solver.clone().with_budget(&spec.budget, instance.working_dim());
        let prepared = solver.prepare(instance, &spec.budget)?;
        let mut outcomes = Vec::with_capacity(spec.restarts);
        for r in 0..spec.restarts {
            let seed = spec.seed.wrapping_add(r as u64);
            let opts = RunOptions::default()
                .with_stride(spec.trace_stride)
                .with_matvec(*matvec);
            let out = prepared.run(instance, seed, opts)?;
            log::info!("{} run {r}: energy {}", prepared.name(), out.energy);
            outcomes.push((seed, out));
        }
        reports.push(summarize(
            instance,
            &prepared,
            &outcomes,
            reference.as_ref(),
            tts_fraction,
        ));
        for (r, (seed, out)) in outcomes.into_iter().enumerate() {
            traces.push(RunTrace {
                solver: prepared.name().into(),
                run: r,
                seed,
                records: out.trace,
            });
        }
    }
    let report = BenchReport {
        name: spec.name.clone().unwrap_or_else(|| instance.name().to_string()),
        instance: instance.name().to_string(),
        n,
        restarts: spec.restarts,
        seed: spec.seed,
        reference,
        tts_fraction,
        solvers: reports,
        environment: Environment::current(),
    };
    Ok(BenchResult { report, traces })
}

/// Quality where larger is better: the cut for MAX-CUT instances,
/// otherwise `-energy`.
pub fn quality(instance: &ProblemInstance, energy: f64) -> f64 {
    instance.cut_from_energy(energy).unwrap_or(-energy)
}

fn summarize(
    instance: &ProblemInstance,
    prepared: &PreparedSolver,
    outcomes: &[(u64, SolveOutcome)],
    reference: Option<&Reference>,
    tts_fraction: Option<f64>,
) -> SolverReport {
    let runs = outcomes.len();
    let energies: Vec<f64> = outcomes.iter().map(|(_, o)| o.energy).collect();
    let mean = |v: &mut dyn Iterator<Item = f64>| v.sum::<f64>() / runs as f64;
    let best_energy = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let worst_energy = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cuts: Option<Vec<f64>> = outcomes.iter().map(|(_, o)| o.cut_value).collect();
    let tts = match (reference, tts_fraction) {
        (Some(r), Some(frac)) => {
            let target = frac * quality(instance, r.energy);
            Some(avg_tts(outcomes.iter().map(|(_, o)| o.trace.as_slice()), target, |e| {
                quality(instance, e)
            }))
        }
        _ => None,
    };
    SolverReport {
        solver: prepared.name().into(),
        runs,
        best_energy,
        mean_energy: mean(&mut energies.iter().copied()),
        worst_energy,
        best_cut: cuts
            .as_ref()
            .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        mean_cut: cuts.as_ref().map(|c| mean(&mut c.iter().copied())),
        histogram: histogram(&energies),
        tts,
        attainment_rate: reference
            .map(|r| energies.iter().filter(|&&e| reached(e, r.energy)).count() as f64 / runs as f64),
        mean_iterations: mean(&mut outcomes.iter().map(|(_, o)| o.iterations as f64)),
        mean_elapsed_s: mean(&mut outcomes.iter().map(|(_, o)| o.elapsed_s)),
        derived: prepared.solver_params().map(|p| [p.alpha, p.beta, p.eta]),
        energies,
    }
}

pub fn write_report_json<W: Write>(report: &BenchReport, sink: W) -> Result<()> {
    serde_json::to_writer_pretty(sink, report)?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per solver.
pub fn write_summary_csv<W: Write>(report: &BenchReport, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "solver",
        "runs",
        "best_energy",
        "mean_energy",
        "worst_energy",
        "best_cut",
        "mean_cut",
        "avg_tts_s",
        "tts_not_reached",
        "attainment_rate",
        "mean_iterations",
        "mean_elapsed_s",
    ])
    .map_err(csv_err)?;
    for s in &report.solvers {
        w.write_record([
            s.solver.clone(),
            s.runs.to_string(),
            s.best_energy.to_string(),
            s.mean_energy.to_string(),
            s.worst_energy.to_string(),
            opt(s.best_cut),
            opt(s.mean_cut),
            opt(s.tts.as_ref().and_then(|t| t.mean_s)),
            s.tts.as_ref().map(|t| t.not_reached().to_string()).unwrap_or_default(),
            opt(s.attainment_rate),
            s.mean_iterations.to_string(),
            s.mean_elapsed_s.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Every trace record of every run, tagged with solver, run and seed.
pub fn write_long_csv<W: Write>(traces: &[RunTrace], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "solver",
        "run",
        "seed",
        "iter",
        "elapsed_s",
        "energy",
        "best_energy",
        "cut_value",
        "event",
    ])
    .map_err(csv_err)?;
    for t in traces {
        for r in &t.records {
            w.write_record([
                t.solver.clone(),
                t.run.to_string(),
                t.seed.to_string(),
                r.iter.to_string(),
                r.elapsed_s.to_string(),
                r.energy.to_string(),
                r.best_energy.to_string(),
                opt(r.cut_value),
                r.event.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}
