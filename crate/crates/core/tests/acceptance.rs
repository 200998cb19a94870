//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints one PASS/FAIL line; any failure makes the process exit nonzero.

use std::process::ExitCode;
use std::time::Instant;

use dcising::baselines::{self, default_c0, BsbParams, SaParams, SiaParams, SimCimParams};
use dcising::bench::brute_force_ground_state;
use dcising::doch::{
    adoch_solve, apply_t, doch_solve, hamiltonian, hamiltonian_gradient, jacobian_norm_at, random_initial_state,
    unit_initial_state, HamiltonianView,
};
use dcising::generate::{self, DEFAULT_SIN_SEED};
use dcising::matvec::{self, MatvecConfig};
use dcising::model::{self, CouplingMatrix, ExternalField, ProblemInstance, StateVector};
use dcising::run::{RunOptions, SolveOutcome};
use dcising::spectral::{
    derive_params, offdiag_stats, params_from_estimate, spectral_estimate, tune_eta_with_estimate, SolverParams,
    SpectralMethod,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = (bool, String);

fn quiet() -> RunOptions<'static> {
    RunOptions::default().with_stride(0)
}

fn eigenvalues(j: &CouplingMatrix) -> Vec<f64> {
    let n = j.n();
    let mut ev: Vec<f64> = SymmetricEigen::new(DMatrix::from_row_slice(n, n, &j.to_dense()))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// 50 instances over n in {20, 100, 200}, alternating SK and sparse 9-bit.
fn instance_set() -> Vec<CouplingMatrix> {
    (0..50u64)
        .map(|k| {
            let n = [20, 100, 200][k as usize % 3];
            if k % 2 == 0 {
                generate::gen_sk(n, k)
            } else {
                generate::gen_sparse_9bit(n, 10.0, k).unwrap()
            }
        })
        .collect()
}

fn descent(set: &[CouplingMatrix]) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut iters = 0usize;
    for (k, j) in set.iter().enumerate() {
        let eta = [1.0, 1.5, 2.0][k % 3];
        let params = derive_params(j, eta, SpectralMethod::PowerIteration).unwrap();
        let h = HamiltonianView::from_params(j, &params).unwrap();
        let mu = eigenvalues(j)[0] + params.alpha;
        let mut x = random_initial_state(j.n(), &params, k as u64).into_inner();
        let mut hx = hamiltonian(&h, &x).unwrap();
        for _ in 0..300 {
            let xn = apply_t(&h, &x).unwrap();
            let hn = hamiltonian(&h, &xn).unwrap();
            let dx = norm2(&sub(&xn, &x));
            // slack of the inequality; must stay >= 0
            worst = worst.min(hx - hn - 0.5 * mu * dx * dx + 1e-9);
            iters += 1;
            x = xn;
            hx = hn;
            if dx == 0.0 {
                break;
            }
        }
        let inst = ProblemInstance::new("c1", j.clone());
        let x0 = random_initial_state(j.n(), &params, k as u64);
        let out = doch_solve(&inst, &params, &x0, quiet()).unwrap();
        if out.diagnostics.descent_violations != 0 {
            return (false, format!("instance {k}: solver flagged a descent violation"));
        }
    }
    (worst >= 0.0, format!("{iters} iterations, min slack {worst:.3e}"))
}

fn boundedness(set: &[CouplingMatrix]) -> Outcome {
    let mut checked = 0usize;
    for (k, j) in set.iter().enumerate() {
        let lam = eigenvalues(j).iter().fold(f64::NEG_INFINITY, |m, &v| m.max(-v));
        for &f in &[0.1, 1.0, 10.0] {
            let alpha = f * lam;
            let beta = j.max_row_abs_sum() + alpha;
            let h = HamiltonianView::new(j, alpha, beta).unwrap();
            for &scale in &[0.5, 2.0] {
                let mut x: Vec<f64> = unit_initial_state(j.n(), k as u64 + 77)
                    .iter()
                    .map(|u| u * scale)
                    .collect();
                let bound = max_abs(&x).max(1.0);
                for it in 0..200 {
                    x = apply_t(&h, &x).unwrap();
                    checked += 1;
                    if max_abs(&x) > bound {
                        return (
                            false,
                            format!(
                                "instance {k}, alpha {f} lambda, iteration {it}: {} > {bound}",
                                max_abs(&x)
                            ),
                        );
                    }
                }
            }
        }
    }
    (true, format!("{checked} iterates within bound"))
}

fn fixed_point() -> Outcome {
    let mut worst = (0.0f64, 0.0f64, 0usize);
    let mut failures = Vec::new();
    for seed in 0..50u64 {
        let inst = ProblemInstance::new("sk", generate::gen_sk(100, seed));
        let j = inst.coupling();
        let mut params = derive_params(j, 1.0, SpectralMethod::PowerIteration).unwrap();
        let h = HamiltonianView::from_params(j, &params).unwrap();
        let x0 = random_initial_state(100, &params, seed);
        let mut x = x0.as_slice().to_vec();
        let mut settled = None;
        for k in 1..=100 {
            let xn = apply_t(&h, &x).unwrap();
            let d = norm2(&sub(&xn, &x));
            x = xn;
            if d < 1e-6 {
                settled = Some(k);
                break;
            }
        }
        let Some(k) = settled else {
            failures.push(format!("seed {seed}: step still >= 1e-6 after 100 iterations"));
            continue;
        };
        params.max_iters = 10_000;
        params.stop_tol = 1e-14;
        let out = doch_solve(&inst, &params, &x0, quiet()).unwrap();
        if !out.converged {
            failures.push(format!("seed {seed}: did not converge"));
            continue;
        }
        let xs = &out.final_state;
        let res = max_abs(&sub(&apply_t(&h, xs).unwrap(), xs));
        let grad = max_abs(&hamiltonian_gradient(&h, xs).unwrap());
        worst = (worst.0.max(res), worst.1.max(grad), worst.2.max(k));
        if res > 1e-8 || grad > 1e-6 {
            failures.push(format!("seed {seed}: |T(x)-x| {res:.2e}, |grad| {grad:.2e}"));
        }
    }
    (
        failures.is_empty(),
        format!(
            "{}/50 runs meet all three; max |T(x)-x| {:.2e}, max |grad H| {:.2e}, latest settling iteration {}{}{}",
            50 - failures.len(),
            worst.0,
            worst.1,
            worst.2,
            if failures.is_empty() { "" } else { "; " },
            failures.join("; ")
        ),
    )
}

fn jacobian() -> Outcome {
    let mut below = 0;
    let mut norms = Vec::new();
    for seed in 0..50u64 {
        let inst = ProblemInstance::new("sk", generate::gen_sk(100, seed));
        let j = inst.coupling();
        let mut params = derive_params(j, 1.0, SpectralMethod::PowerIteration).unwrap();
        params.max_iters = 20_000;
        params.stop_tol = 1e-14;
        let x0 = random_initial_state(100, &params, seed);
        let out = doch_solve(&inst, &params, &x0, quiet()).unwrap();
        if !out.converged {
            norms.push(f64::NAN);
            continue;
        }
        let h = HamiltonianView::from_params(j, &params).unwrap();
        let r = jacobian_norm_at(&h, &out.final_state).unwrap_or(f64::INFINITY);
        norms.push(r);
        if r < 1.0 {
            below += 1;
        }
    }
    let finite: Vec<f64> = norms.iter().copied().filter(|v| v.is_finite()).collect();
    let max = finite.iter().copied().fold(0.0, f64::max);
    let median = {
        let mut s = finite.clone();
        s.sort_by(f64::total_cmp);
        s.get(s.len() / 2).copied().unwrap_or(f64::NAN)
    };
    (
        below as f64 >= 0.95 * 50.0,
        format!("{below}/50 runs with norm < 1 (median {median:.4}, max {max:.4})"),
    )
}

fn oracle_adoch() -> Outcome {
    let mut hit = 0;
    for k in 0..50u64 {
        let inst = ProblemInstance::new("sk", generate::gen_sk(12, 1000 + k));
        let (_, e0) = brute_force_ground_state(&inst).unwrap();
        let params = derive_params(inst.coupling(), 1.0, SpectralMethod::PowerIteration).unwrap();
        let best = (0..20u64)
            .map(|r| {
                let x0 = random_initial_state(12, &params, r);
                adoch_solve(&inst, &params, &x0, quiet()).unwrap().energy
            })
            .fold(f64::INFINITY, f64::min);
        if best <= e0 + 1e-9 {
            hit += 1;
        }
    }
    (hit as f64 >= 0.8 * 50.0, format!("attainment {hit}/50"))
}

fn two_spin() -> Outcome {
    let inst = ProblemInstance::new(
        "pair",
        CouplingMatrix::from_dense(2, vec![0.0, -1.0, -1.0, 0.0]).unwrap(),
    );
    let params = SolverParams::new(1.0, 2.0).unwrap();
    let mut latest = 0;
    for seed in 0..20u64 {
        let x0 = random_initial_state(2, &params, seed);
        let out = doch_solve(&inst, &params, &x0, RunOptions::default()).unwrap();
        let first = out.trace.iter().position(|r| r.energy == -1.0);
        let Some(p) = first else {
            return (false, format!("seed {seed}: never antiparallel"));
        };
        let at = out.trace[p].iter;
        let stays = out.trace[p..].iter().all(|r| r.energy == -1.0);
        let s = out.spins.as_slice();
        if at > 5 || !stays || s[0] == s[1] || !out.converged {
            return (false, format!("seed {seed}: settled at iteration {at}, final {s:?}"));
        }
        latest = latest.max(at);
    }
    (true, format!("20/20 runs antiparallel by iteration {latest}"))
}

fn homogenization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..50u64 {
        let n = 2 + (k as usize % 9);
        let j = generate::gen_sk(n, 500 + k);
        let h = ExternalField::new((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).unwrap();
        let hat = model::homogenize(&j, &h).unwrap();
        let (sigma, _) = brute_force_ground_state(&ProblemInstance::new("hat", hat)).unwrap();
        let s = model::dehomogenize(&sigma).unwrap();
        let inst = ProblemInstance::with_field("jh", j, h).unwrap();
        let (s0, e0) = brute_force_ground_state(&inst).unwrap();
        let e = inst.energy(&s).unwrap();
        if e != e0 || s != s0 {
            return (false, format!("instance {k} (n={n}): {e} vs {e0}"));
        }
    }
    (true, "50/50 ground energies and states identical".into())
}

fn generator_stats() -> Outcome {
    let n = 2000;
    let sparse = generate::gen_sparse_9bit(n, 1.0, 3).unwrap();
    let csr = sparse.to_csr();
    let pairs = (n * (n - 1) / 2) as f64;
    let q = 1022.0 / generate::sparse_draw_range(1.0) as f64;
    let count = (csr.nnz() / 2) as f64;
    let (mean, sd) = (pairs * q, (pairs * q * (1.0 - q)).sqrt());
    let z_density = (count - mean) / sd;
    let in_range = csr
        .values()
        .iter()
        .all(|&v| v.fract() == 0.0 && (-510.0..=511.0).contains(&v));

    let sk = generate::gen_sk(n, 3);
    let (_, std) = offdiag_stats(&sk).unwrap();
    let var = std * std;
    let z_var = (var - 1.0) / (2.0 / (pairs - 1.0)).sqrt();
    (
        z_density.abs() <= 3.0 && in_range && z_var.abs() <= 3.0,
        format!("density z {z_density:.2}, values in range: {in_range}, SK variance {var:.5} (z {z_var:.2})"),
    )
}

fn matvec_equivalence() -> Outcome {
    let n = 4096;
    let j = generate::gen_procedural_sin(n, DEFAULT_SIN_SEED);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let reference: Vec<f64> = (0..n).map(|i| (0..n).map(|k| j.entry(i, k) * x[k]).sum()).collect();
    let mut outs = Vec::new();
    for g in [1, 2, 4] {
        outs.push(matvec::matvec_with(&j, &x, &MatvecConfig::new(g, 512).unwrap()).unwrap());
    }
    let err = outs.iter().map(|o| max_abs(&sub(o, &reference))).fold(0.0, f64::max);
    let bitwise = outs
        .iter()
        .all(|o| o.iter().zip(&outs[0]).all(|(a, b)| a.to_bits() == b.to_bits()));
    (
        err <= 1e-9 && bitwise,
        format!("max error {err:.2e}, bitwise reproducible: {bitwise}"),
    )
}

const ETA_CANDIDATES: [f64; 6] = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0];

/// Steps that fit into `seconds`, measured on a short probe.
fn calibrate(seconds: f64, probe: impl Fn(u64) -> SolveOutcome) -> u64 {
    let out = probe(20);
    let per = out.elapsed_s / out.iterations.max(1) as f64;
    ((0.9 * seconds / per) as u64).max(20)
}

fn solver_ordering() -> Outcome {
    let n = 2000;
    let inst = ProblemInstance::new("k2000", generate::gen_dense_pm1(n, 2024));
    let per_run = 1.0;
    let restarts = 10u64;
    let j = inst.coupling();
    let mut table: Vec<(&str, f64, f64)> = Vec::new();
    let mut record = |name, energies: Vec<f64>| {
        let best = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = energies.iter().sum::<f64>() / energies.len() as f64;
        table.push((name, best, mean));
    };

    // eta is tuned by short probes; the tuning time comes out of the DOCH budget
    let t0 = Instant::now();
    let est = spectral_estimate(j, SpectralMethod::Wigner, &MatvecConfig::default()).unwrap();
    let eta = tune_eta_with_estimate(&inst, Some(&est), &ETA_CANDIDATES, 50, 0).unwrap();
    let mut params = params_from_estimate(j, eta, &est).unwrap();
    let setup = t0.elapsed().as_secs_f64();
    let remaining = restarts as f64 * per_run - setup;
    if remaining <= 0.0 {
        return (false, format!("parameter setup took {setup:.2} s, the whole budget"));
    }
    println!("    eta {eta}, setup {setup:.2} s");
    params.time_budget = Some(remaining / restarts as f64);
    params.max_iters = u64::MAX;
    let run_doch = |accel: bool, seed: u64| {
        let x0: StateVector = random_initial_state(n, &params, seed);
        if accel {
            adoch_solve(&inst, &params, &x0, quiet()).unwrap().energy
        } else {
            doch_solve(&inst, &params, &x0, quiet()).unwrap().energy
        }
    };
    record("doch", (0..restarts).map(|s| run_doch(false, s)).collect());
    record("adoch", (0..restarts).map(|s| run_doch(true, s)).collect());

    let sa = SaParams {
        attempts: u64::MAX,
        time_budget: Some(per_run),
        ..Default::default()
    };
    record(
        "sa",
        (0..restarts)
            .map(|s| baselines::sa_solve(&inst, &sa, s, quiet()).unwrap().energy)
            .collect(),
    );

    let steps = calibrate(per_run, |k| {
        baselines::bsb_solve(
            &inst,
            &BsbParams {
                steps: k,
                ..Default::default()
            },
            0,
            quiet(),
        )
        .unwrap()
    });
    let bsb = BsbParams {
        steps,
        time_budget: Some(per_run),
        ..Default::default()
    };
    record(
        "bsb",
        (0..restarts)
            .map(|s| baselines::bsb_solve(&inst, &bsb, s, quiet()).unwrap().energy)
            .collect(),
    );

    let steps = calibrate(per_run, |k| {
        baselines::simcim_solve(
            &inst,
            &SimCimParams {
                steps: k,
                ..Default::default()
            },
            0,
            quiet(),
        )
        .unwrap()
    });
    let simcim = SimCimParams {
        steps,
        time_budget: Some(per_run),
        ..Default::default()
    };
    record(
        "simcim",
        (0..restarts)
            .map(|s| baselines::simcim_solve(&inst, &simcim, s, quiet()).unwrap().energy)
            .collect(),
    );

    let steps = calibrate(per_run, |k| {
        baselines::sia_solve(
            &inst,
            &SiaParams {
                steps: k,
                ..Default::default()
            },
            0,
            quiet(),
        )
        .unwrap()
    });
    let sia = SiaParams {
        steps,
        time_budget: Some(per_run),
        ..Default::default()
    };
    record(
        "sia",
        (0..restarts)
            .map(|s| baselines::sia_solve(&inst, &sia, s, quiet()).unwrap().energy)
            .collect(),
    );

    println!("    solver        best          mean");
    for (name, best, mean) in &table {
        println!("    {name:<8} {best:>12.1} {mean:>12.1}");
    }
    let best = |name: &str| table.iter().find(|t| t.0 == name).unwrap().1;
    let doch_best = best("doch").max(best("adoch"));
    let others: Vec<String> = ["bsb", "simcim", "sia"]
        .iter()
        .map(|b| format!("{b}: {}", if doch_best <= best(b) { "ok" } else { "ahead" }))
        .collect();
    (
        best("doch") <= best("sa") && best("adoch") <= best("sa"),
        format!(
            "eta {eta} (setup {setup:.2} s); doch {:.0}, adoch {:.0} vs sa {:.0}; {}",
            best("doch"),
            best("adoch"),
            best("sa"),
            others.join(", ")
        ),
    )
}

fn baseline_fidelity() -> Outcome {
    let mut hit = 0;
    for k in 0..50u64 {
        let inst = ProblemInstance::new("sk", generate::gen_sk(12, 3000 + k));
        let (_, e0) = brute_force_ground_state(&inst).unwrap();
        let out = baselines::sa_solve(&inst, &SaParams::default(), k, quiet()).unwrap();
        if out.energy <= e0 + 1e-9 {
            hit += 1;
        }
    }
    let c0 = default_c0(&generate::gen_dense_pm1(2000, 1)).unwrap();
    let c0_ok = (c0 - 0.0112).abs() <= 0.05 * 0.0112;
    (
        hit as f64 >= 0.9 * 50.0 && c0_ok,
        format!("SA attainment {hit}/50, c0 {c0:.5}"),
    )
}

fn gradient_check() -> Outcome {
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for k in 0..20u64 {
        let n = 5 + 2 * k as usize;
        let j = generate::gen_sk(n, 700 + k);
        let params = derive_params(&j, 1.0, SpectralMethod::PowerIteration).unwrap();
        let h = HamiltonianView::from_params(&j, &params).unwrap();
        let x: Vec<f64> = unit_initial_state(n, 900 + k)
            .iter()
            .map(|u| 2.0 * u * params.well_radius())
            .collect();
        let g = hamiltonian_gradient(&h, &x).unwrap();
        let fd: Vec<f64> = (0..n)
            .map(|i| {
                let (mut p, mut m) = (x.clone(), x.clone());
                p[i] += step;
                m[i] -= step;
                (hamiltonian(&h, &p).unwrap() - hamiltonian(&h, &m).unwrap()) / (2.0 * step)
            })
            .collect();
        worst = worst.max(max_abs(&sub(&fd, &g)) / max_abs(&g));
    }
    (worst <= 1e-5, format!("max relative error {worst:.2e}"))
}

fn main() -> ExitCode {
    let set = instance_set();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("monotone descent", Box::new(|| descent(&set))),
        ("boundedness", Box::new(|| boundedness(&set))),
        ("fixed point and critical point", Box::new(fixed_point)),
        ("Jacobian norm below one", Box::new(jacobian)),
        ("ADOCH oracle optimality", Box::new(oracle_adoch)),
        ("two-spin convergence", Box::new(two_spin)),
        ("homogenization", Box::new(homogenization)),
        ("generator statistics", Box::new(generator_stats)),
        ("matvec equivalence", Box::new(matvec_equivalence)),
        ("solver ordering", Box::new(solver_ordering)),
        ("baseline fidelity", Box::new(baseline_fidelity)),
        ("gradient check", Box::new(gradient_check)),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = check();
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            k + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
