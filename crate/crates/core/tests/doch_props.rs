mod common;

use common::{brute_min, eigenvalues, max_abs, shifted_inf_norm};
use dcising::doch::{
    adoch_solve, apply_t, doch_solve, hamiltonian, hamiltonian_gradient, random_initial_state, HamiltonianView,
    EVENT_MOMENTUM_REJECTED,
};
use dcising::generate;
use dcising::model::{ProblemInstance, StateVector};
use dcising::run::RunOptions;
use dcising::spectral::{derive_params, SolverParams, SpectralMethod};
use proptest::prelude::*;

fn quiet() -> RunOptions<'static> {
    RunOptions::default().with_stride(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn descent_is_at_least_half_mu_step_squared(n in 2usize..120, seed in any::<u64>(), eta in 1.0f64..=2.0) {
        let j = generate::gen_sk(n, seed);
        let p = derive_params(&j, eta, SpectralMethod::PowerIteration).unwrap();
        let mu = eigenvalues(&j)[0] + p.alpha;
        let h = HamiltonianView::from_params(&j, &p).unwrap();
        let mut x = random_initial_state(n, &p, seed).into_inner();
        let mut hx = hamiltonian(&h, &x).unwrap();
        for _ in 0..60 {
            let xn = apply_t(&h, &x).unwrap();
            let hn = hamiltonian(&h, &xn).unwrap();
            let d2: f64 = x.iter().zip(&xn).map(|(a, b)| (a - b) * (a - b)).sum();
            prop_assert!(hx - hn >= 0.5 * mu * d2 - 1e-9, "drop {} < {}", hx - hn, 0.5 * mu * d2);
            x = xn;
            hx = hn;
        }
    }

    #[test]
    fn iterates_stay_bounded_for_any_alpha(n in 2usize..60, seed in any::<u64>(), alpha_scale in 0.01f64..10.0, x_scale in 0.1f64..3.0) {
        let j = generate::gen_sk(n, seed);
        let alpha = alpha_scale * (n as f64).sqrt();
        let beta = shifted_inf_norm(&j, alpha);
        let h = HamiltonianView::new(&j, alpha, beta).unwrap();
        let mut x: Vec<f64> = dcising::doch::unit_initial_state(n, seed).iter().map(|u| u * x_scale).collect();
        let bound = max_abs(&x).max(1.0);
        for _ in 0..100 {
            x = apply_t(&h, &x).unwrap();
            prop_assert!(max_abs(&x) <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gradient_matches_central_differences(n in 2usize..40, seed in any::<u64>()) {
        let j = generate::gen_sk(n, seed);
        let p = derive_params(&j, 1.0, SpectralMethod::PowerIteration).unwrap();
        let h = HamiltonianView::from_params(&j, &p).unwrap();
        let x: Vec<f64> = random_initial_state(n, &p, seed ^ 1).into_inner().iter().map(|v| 2.0 * v).collect();
        let g = hamiltonian_gradient(&h, &x).unwrap();
        let step = 1e-5 * p.well_radius();
        let fd: Vec<f64> = (0..n)
            .map(|i| {
                let (mut a, mut b) = (x.clone(), x.clone());
                a[i] += step;
                b[i] -= step;
                (hamiltonian(&h, &a).unwrap() - hamiltonian(&h, &b).unwrap()) / (2.0 * step)
            })
            .collect();
        let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
        prop_assert!(max_abs(&diff) <= 1e-5 * max_abs(&g).max(1e-300), "{} vs {}", max_abs(&diff), max_abs(&g));
    }

    #[test]
    fn corner_fixed_points_are_ground_states(n in 2usize..12, seed in any::<u64>(), eta in 1.0f64..=2.0) {
        let inst = ProblemInstance::new("sk", generate::gen_sk(n, seed));
        let mut p = derive_params(inst.coupling(), eta, SpectralMethod::PowerIteration).unwrap();
        p.max_iters = 20_000;
        let out = doch_solve(&inst, &p, &random_initial_state(n, &p, seed), quiet()).unwrap();
        let lambda = p.well_radius();
        let at_corner = out.final_state.iter().all(|v| (v.abs() - lambda).abs() <= 1e-6);
        if out.converged && at_corner {
            let best = brute_min(n, |s| inst.energy(s).unwrap());
            prop_assert!((out.final_energy - best).abs() <= 1e-9 * best.abs().max(1.0));
        }
    }

    #[test]
    fn best_energy_never_increases(n in 2usize..60, seed in any::<u64>(), accel in any::<bool>()) {
        let inst = ProblemInstance::new("sk", generate::gen_sk(n, seed));
        let mut p = derive_params(inst.coupling(), 1.0, SpectralMethod::Auto).unwrap();
        p.max_iters = 100;
        let x0 = random_initial_state(n, &p, seed);
        let out = if accel {
            adoch_solve(&inst, &p, &x0, RunOptions::default()).unwrap()
        } else {
            doch_solve(&inst, &p, &x0, RunOptions::default()).unwrap()
        };
        for w in out.trace.windows(2) {
            prop_assert!(w[1].best_energy <= w[0].best_energy);
        }
        prop_assert_eq!(out.energy, out.trace.last().unwrap().best_energy);
        prop_assert_eq!(out.energy, inst.energy(&out.spins).unwrap());
    }
}

#[test]
fn rejected_momentum_falls_back_to_the_plain_step() {
    let n = 24;
    let inst = ProblemInstance::new("sk", generate::gen_sk(n, 11));
    let mut p = derive_params(inst.coupling(), 1.0, SpectralMethod::PowerIteration).unwrap();
    p.lookback_q = 1;
    let x0 = random_initial_state(n, &p, 3);
    let h = HamiltonianView::from_params(inst.coupling(), &p).unwrap();
    let state_after = |k: u64| {
        let mut q = p.clone();
        q.max_iters = k;
        q.stop_tol = 0.0;
        adoch_solve(&inst, &q, &x0, quiet()).unwrap()
    };
    let full = adoch_solve(
        &inst,
        &SolverParams {
            max_iters: 40,
            stop_tol: 0.0,
            ..p.clone()
        },
        &x0,
        RunOptions::default(),
    )
    .unwrap();
    let decisions = &full.diagnostics.momentum_decisions;
    assert!(decisions.iter().any(|d| !d), "no rejection to audit");
    let rejections = full
        .trace
        .iter()
        .filter(|r| r.event.as_deref() == Some(EVENT_MOMENTUM_REJECTED))
        .count();
    assert_eq!(rejections, full.diagnostics.momentum_rejected());
    for (k, &accepted) in decisions.iter().enumerate() {
        if accepted {
            continue;
        }
        // decision k is taken in loop step k + 1
        let xk = state_after(k as u64 + 1).final_state;
        let next = state_after(k as u64 + 2).final_state;
        let plain = apply_t(&h, &xk).unwrap();
        let diff: Vec<f64> = next.iter().zip(&plain).map(|(a, b)| a - b).collect();
        assert!(
            max_abs(&diff) <= 1e-12 * p.well_radius(),
            "step {}: {}",
            k + 1,
            max_abs(&diff)
        );
    }
}

#[test]
fn runs_are_reproducible() {
    let inst = ProblemInstance::new("sk", generate::gen_sk(50, 2));
    let mut p = derive_params(inst.coupling(), 1.0, SpectralMethod::Auto).unwrap();
    p.max_iters = 200;
    let x0: StateVector = random_initial_state(50, &p, 9);
    let a = adoch_solve(&inst, &p, &x0, quiet()).unwrap();
    let b = adoch_solve(&inst, &p, &x0, quiet()).unwrap();
    assert_eq!(a.final_state, b.final_state);
    assert_eq!(a.spins, b.spins);
    assert_eq!(a.diagnostics, b.diagnostics);
}

#[test]
fn jacobian_norm_does_not_depend_on_beta() {
    let n = 40;
    let inst = ProblemInstance::new("sk", generate::gen_sk(n, 6));
    let mut p = derive_params(inst.coupling(), 1.0, SpectralMethod::PowerIteration).unwrap();
    p.max_iters = 100_000;
    p.stop_tol = 0.0;
    let norm_at = |beta: f64| {
        let q = SolverParams {
            beta,
            stop_tol: 1e-14 * (p.alpha / beta).sqrt(),
            ..p.clone()
        };
        let x0 = random_initial_state(n, &q, 2);
        let out = doch_solve(&inst, &q, &x0, quiet()).unwrap();
        assert!(out.converged);
        let h = HamiltonianView::from_params(inst.coupling(), &q).unwrap();
        dcising::doch::jacobian_norm_at(&h, &out.final_state).unwrap()
    };
    let a = norm_at(p.beta);
    let b = norm_at(100.0 * p.beta);
    assert!(a < 1.0);
    assert!((a - b).abs() <= 1e-6 * a, "{a} vs {b}");
}
