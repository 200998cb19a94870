use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dcising::bench::{self, brute_force_ground_state, BenchSpec, Budget, SolverSpec};
use dcising::generate::{GeneratorKind, GeneratorSpec};
use dcising::io::{self, TraceFormat};
use dcising::matvec::MatvecConfig;
use dcising::model::ProblemInstance;
use dcising::run::RunOptions;

/// Difference-of-convex Ising solvers and baselines.
#[derive(Parser, Debug)]
#[command(name = "dcising", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an instance. The output extension picks the format:
    /// .toml (generator description), .icsr (binary CSR) or an edge list.
    Gen(GenArgs),
    /// Run one solver on an instance.
    Solve(SolveArgs),
    /// Run a benchmark described by a TOML file.
    Bench(BenchArgs),
    /// Convert between edge-list graphs and .icsr couplings.
    Convert { input: PathBuf, output: PathBuf },
    /// Exact ground state by exhaustive search (at most 24 spins).
    Oracle { instance: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    SkGaussian,
    DensePm1,
    Sparse9bit,
    ProceduralSin,
}

impl From<Kind> for GeneratorKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::SkGaussian => GeneratorKind::SkGaussian,
            Kind::DensePm1 => GeneratorKind::DensePm1,
            Kind::Sparse9bit => GeneratorKind::Sparse9bit,
            Kind::ProceduralSin => GeneratorKind::ProceduralSin,
        }
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Connectivity percentage for sparse-9bit.
    #[arg(long)]
    connectivity_pct: Option<f64>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Solver {
    Doch,
    Adoch,
    Sa,
    Bsb,
    Simcim,
    Sia,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Args, Debug)]
struct MatvecArgs {
    /// Threads for the matrix-vector products.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 1024)]
    block_size: usize,
}

impl MatvecArgs {
    fn config(&self) -> dcising::Result<MatvecConfig> {
        MatvecConfig::new(self.workers, self.block_size)
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "adoch")]
    solver: Solver,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// alpha = eta * lambda_max(-J), DOCH variants only.
    #[arg(long)]
    eta: Option<f64>,
    /// ADOCH look-back window.
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    budget_iters: Option<u64>,
    #[arg(long)]
    budget_seconds: Option<f64>,
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Trace format; defaults to the trace file extension, else CSV.
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, default_value_t = 1)]
    trace_stride: u64,
    /// Write the spins and energy as JSON.
    #[arg(long)]
    solution_out: Option<PathBuf>,
    #[command(flatten)]
    matvec: MatvecArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    spec: PathBuf,
    /// Directory for report.json, summary.csv and traces.csv.
    #[arg(long, short, default_value = ".")]
    out_dir: PathBuf,
    /// Overrides the base seed of the benchmark file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget_iters: Option<u64>,
    #[arg(long)]
    budget_seconds: Option<f64>,
    #[command(flatten)]
    matvec: MatvecArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> dcising::Result<()> {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Bench(a) => run_bench(a),
        Command::Convert { input, output } => convert(&input, &output),
        Command::Oracle { instance } => oracle(&instance),
    }
}

fn create(path: &Path) -> dcising::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn ext(path: &Path) -> Option<&str> {
    path.extension().and_then(|e| e.to_str())
}

fn gen(a: GenArgs) -> dcising::Result<()> {
    let spec = GeneratorSpec {
        kind: a.kind.into(),
        n: a.n,
        connectivity_pct: a.connectivity_pct,
        seed: a.seed,
    };
    spec.validate()?;
    match ext(&a.out) {
        Some("toml") => {
            let text = toml::to_string(&spec).map_err(|e| dcising::Error::Config(e.to_string()))?;
            std::fs::write(&a.out, text)?;
        }
        Some("icsr") => io::csr_save(&spec.generate()?, create(&a.out)?)?,
        _ => io::write_edgelist(&io::coupling_to_graph(&spec.generate()?), create(&a.out)?)?,
    }
    println!("wrote {} ({})", a.out.display(), spec.label());
    Ok(())
}

fn solver_name(s: Solver) -> &'static str {
    match s {
        Solver::Doch => "doch",
        Solver::Adoch => "adoch",
        Solver::Sa => "sa",
        Solver::Bsb => "bsb",
        Solver::Simcim => "simcim",
        Solver::Sia => "sia",
    }
}

fn solve(a: SolveArgs) -> dcising::Result<()> {
    let instance = io::load_instance(&a.instance)?;
    let mut spec = SolverSpec::from_name(solver_name(a.solver))?;
    match &mut spec {
        SolverSpec::Doch(c) | SolverSpec::Adoch(c) => {
            if let Some(eta) = a.eta {
                c.eta = eta;
            }
            if let Some(q) = a.q {
                c.lookback_q = q;
            }
        }
        _ if a.eta.is_some() || a.q.is_some() => {
            return Err(dcising::Error::InvalidParameter(
                "--eta and --q apply to doch and adoch only".into(),
            ));
        }
        _ => {}
    }
    let budget = Budget {
        iters: a.budget_iters,
        seconds: a.budget_seconds,
    };
    let prepared = spec
        .with_budget(&budget, instance.working_dim())
        .prepare(&instance, &budget)?;
    let opts = RunOptions::default()
        .with_stride(a.trace_stride)
        .with_matvec(a.matvec.config()?);
    let out = prepared.run(&instance, a.seed, opts)?;

    if let Some(path) = &a.trace_out {
        let format = match (a.format, ext(path)) {
            (Some(Format::Jsonl), _) | (None, Some("jsonl")) => TraceFormat::Jsonl,
            _ => TraceFormat::Csv,
        };
        io::write_trace(&out.trace, create(path)?, format)?;
    }
    if let Some(path) = &a.solution_out {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(
            &mut w,
            &serde_json::json!({
                "instance": instance.name(),
                "solver": prepared.name(),
                "seed": a.seed,
                "energy": out.energy,
                "cut_value": out.cut_value,
                "iterations": out.iterations,
                "converged": out.converged,
                "spins": out.spins,
            }),
        )?;
        w.flush()?;
    }
    println!("solver {}", prepared.name());
    println!("energy {}", out.energy);
    if let Some(c) = out.cut_value {
        println!("cut {c}");
    }
    println!("iterations {}", out.iterations);
    println!("elapsed_s {:.6}", out.elapsed_s);
    Ok(())
}

fn run_bench(a: BenchArgs) -> dcising::Result<()> {
    let mut spec = BenchSpec::from_toml_file(&a.spec)?;
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if a.budget_iters.is_some() {
        spec.budget.iters = a.budget_iters;
    }
    if a.budget_seconds.is_some() {
        spec.budget.seconds = a.budget_seconds;
    }
    let instance = spec.instance.load()?;
    let res = bench::run_bench_on(&spec, &instance, &a.matvec.config()?)?;
    std::fs::create_dir_all(&a.out_dir)?;
    bench::write_report_json(&res.report, create(&a.out_dir.join("report.json"))?)?;
    bench::write_summary_csv(&res.report, create(&a.out_dir.join("summary.csv"))?)?;
    bench::write_long_csv(&res.traces, create(&a.out_dir.join("traces.csv"))?)?;

    let rep = &res.report;
    if let Some(r) = &rep.reference {
        println!("reference {} ({})", r.energy, r.source);
    }
    println!(
        "{:<8} {:>14} {:>14} {:>10}  avg tts",
        "solver", "best", "mean", "attained"
    );
    for s in &rep.solvers {
        let tts = s.tts.as_ref().map(|t| t.to_string()).unwrap_or_else(|| "-".into());
        let att = s
            .attainment_rate
            .map(|r| format!("{r:.2}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<8} {:>14.6} {:>14.6} {:>10}  {tts}",
            s.solver, s.best_energy, s.mean_energy, att
        );
    }
    Ok(())
}

fn convert(input: &Path, output: &Path) -> dcising::Result<()> {
    let instance: ProblemInstance = io::load_instance(input)?;
    match ext(output) {
        Some("icsr") => io::csr_save(instance.coupling(), create(output)?)?,
        Some("toml") => {
            return Err(dcising::Error::InvalidParameter(
                "generator descriptions cannot be produced from a matrix".into(),
            ))
        }
        _ => {
            if instance.field().is_some() {
                return Err(dcising::Error::InvalidParameter(
                    "edge lists cannot carry an external field".into(),
                ));
            }
            io::write_edgelist(&io::coupling_to_graph(instance.coupling()), create(output)?)?
        }
    }
    println!("wrote {}", output.display());
    Ok(())
}

fn oracle(path: &Path) -> dcising::Result<()> {
    let instance = io::load_instance(path)?;
    let (spins, energy) = brute_force_ground_state(&instance)?;
    println!("energy {energy}");
    if let Some(c) = instance.cut_from_energy(energy) {
        println!("cut {c}");
    }
    let s: Vec<String> = spins.as_slice().iter().map(|v| v.to_string()).collect();
    println!("spins {}", s.join(" "));
    Ok(())
}
