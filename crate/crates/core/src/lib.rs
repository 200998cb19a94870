//! Ising solvers built on a difference-of-convex splitting of a relaxed
//! Hamiltonian, plus classical baselines, instance generators, file formats
//! and a small benchmark harness.
//!
//! ```
//! use dcising::{doch, generate, model::ProblemInstance, run::RunOptions, spectral};
//!
//! let inst = ProblemInstance::new("sk", generate::gen_sk(64, 1));
//! let mut params = spectral::derive_params(inst.coupling(), 1.0, spectral::SpectralMethod::Auto)?;
//! params.max_iters = 200;
//! let x0 = doch::random_initial_state(inst.working_dim(), &params, 7);
//! let out = doch::adoch_solve(&inst, &params, &x0, RunOptions::default())?;
//! assert_eq!(out.energy, inst.energy(&out.spins)?);
//! # Ok::<(), dcising::Error>(())
//! ```

pub mod baselines;
pub mod bench;
pub mod doch;
pub mod error;
pub mod generate;
pub mod io;
pub mod matvec;
pub mod model;
pub mod run;
pub mod spectral;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    struct Readme;
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/model.md")]
    struct Model;
    #[doc = include_str!("../../../book/src/solvers.md")]
    struct Solvers;
    #[doc = include_str!("../../../book/src/parameters.md")]
    struct Parameters;
    #[doc = include_str!("../../../book/src/baselines.md")]
    struct Baselines;
    #[doc = include_str!("../../../book/src/instances.md")]
    struct Instances;
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    struct Benchmarks;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
