use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SaParams;
use crate::error::Result;
use crate::matvec;
use crate::model::{ProblemInstance, SpinVector};
use crate::run::{Diagnostics, Recorder, RunOptions, SolveOutcome};

const SA_TAG: u64 = 0x5341_0000_0000_0001;

/// Single-spin-flip Metropolis annealing with `beta(t) = beta0 ln(1 + t/T)`.
///
/// Iterations count flip attempts; the trace is sampled once per sweep of
/// `n` attempts (every `trace_stride` sweeps). Local fields `J s` are kept
/// up to date so each attempt costs one row of `J`. The start is a seeded
/// uniform `+-1` vector, and the returned configuration is the lowest
/// energy one visited.
pub fn sa_solve(instance: &ProblemInstance, p: &SaParams, seed: u64, opts: RunOptions<'_>) -> Result<SolveOutcome> {
    p.validate()?;
    let j = instance.working_coupling();
    let n = j.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SA_TAG);
    let stride = opts.trace_stride.saturating_mul(n as u64);
    let mut rec = Recorder::new(instance, stride, opts.observer, p.time_budget);

    let mut s: Vec<f64> = super::random_pm1(n, &mut rng);
    let mut field = matvec::matvec_with(j, &s, &opts.matvec)?;
    let mut e = -0.5 * matvec::dot(&s, &field);
    rec.observe(0, e, || SpinVector::from_signs(&s), None);

    let mut diag = Diagnostics::default();
    let mut drift: f64 = 0.0;
    let mut t = 0u64;
    while t < p.attempts {
        if t.is_multiple_of(n as u64) && rec.out_of_time() {
            break;
        }
        t += 1;
        let beta = p.beta0 * (1.0 + t as f64 / p.total_t).ln();
        let i = rng.random_range(0..n);
        let delta = 2.0 * s[i] * field[i];
        let z: f64 = rng.random();
        if accept(delta, beta, z) {
            let change = -2.0 * s[i];
            s[i] = -s[i];
            j.for_each_in_row(i, |k, v| field[k] += v * change);
            e += delta;
            rec.offer(e, || SpinVector::from_signs(&s));
        }
        if let Some(every) = p.check_every {
            if t.is_multiple_of(every) {
                let full = -0.5 * matvec::dot(&s, &matvec::matvec(j, &s)?);
                drift = drift.max((full - e).abs());
            }
        }
        if t.is_multiple_of(n as u64) {
            rec.observe(t, e, || SpinVector::from_signs(&s), None);
        }
    }
    if !t.is_multiple_of(n as u64) {
        rec.observe(t, e, || SpinVector::from_signs(&s), None);
    }
    if p.check_every.is_some() {
        diag.max_energy_drift = Some(drift);
    }
    rec.finish(false, s, diag)
}

/// Metropolis rule: downhill always, uphill with probability
/// `exp(-beta delta)`.
pub(crate) fn accept(delta: f64, beta: f64, z: f64) -> bool {
    delta < 0.0 || (-beta * delta).exp() >= z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::brute_force_ground_state;
    use crate::generate;
    use crate::model::CouplingMatrix;

    #[test]
    fn incremental_energy_tracks_full_energy() {
        let inst = ProblemInstance::new("sk", generate::gen_sk(40, 2));
        let p = SaParams {
            attempts: 20_000,
            check_every: Some(1000),
            ..Default::default()
        };
        let out = sa_solve(&inst, &p, 3, RunOptions::default()).unwrap();
        assert!(out.diagnostics.max_energy_drift.unwrap() <= 1e-9);
        assert_eq!(out.energy, inst.energy(&out.spins).unwrap());
        assert!((out.energy - out.trace.iter().map(|r| r.best_energy).fold(f64::INFINITY, f64::min)).abs() < 1e-9);
    }

    #[test]
    fn metropolis_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let z: f64 = rng.random();
            assert!(accept(-1e-3, 1e9, z));
        }
        let rate = |beta: f64, rng: &mut ChaCha8Rng| {
            (0..20_000).filter(|_| accept(1.0, beta, rng.random())).count() as f64 / 20_000.0
        };
        let warm = rate(0.5, &mut rng);
        assert!((warm - (-0.5f64).exp()).abs() < 0.02, "{warm}");
        assert!(rate(50.0, &mut rng) == 0.0);
    }

    #[test]
    fn deterministic() {
        let inst = ProblemInstance::new("sk", generate::gen_sk(30, 1));
        let p = SaParams {
            attempts: 5000,
            ..Default::default()
        };
        let a = sa_solve(&inst, &p, 7, RunOptions::default()).unwrap();
        let b = sa_solve(&inst, &p, 7, RunOptions::default()).unwrap();
        assert_eq!(a.spins, b.spins);
        let strip = |o: &SolveOutcome| {
            o.trace
                .iter()
                .map(|r| (r.iter, r.energy, r.best_energy))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn finds_ground_state_of_small_sk() {
        let inst = ProblemInstance::new("sk", generate::gen_sk(10, 4));
        let (_, e0) = brute_force_ground_state(&inst).unwrap();
        let out = sa_solve(&inst, &SaParams::default(), 1, RunOptions::default()).unwrap();
        assert!((out.energy - e0).abs() < 1e-9);
    }

    #[test]
    fn works_with_fields_and_trace_stride() {
        let j = generate::gen_sk(8, 2);
        let h = crate::model::ExternalField::new(vec![0.3; 8]).unwrap();
        let inst = ProblemInstance::with_field("f", j, h).unwrap();
        let p = SaParams {
            attempts: 900,
            ..Default::default()
        };
        let out = sa_solve(&inst, &p, 1, RunOptions::default().with_stride(10)).unwrap();
        assert_eq!(out.spins.len(), 8);
        assert_eq!(out.energy, inst.energy(&out.spins).unwrap());
        let iters: Vec<u64> = out.trace.iter().map(|r| r.iter).collect();
        // working dimension 9, so one record per 90 attempts
        assert_eq!(iters, (0..=10).map(|k| k * 90).collect::<Vec<u64>>());
        let zero = ProblemInstance::new("z", CouplingMatrix::zeros(4));
        let out = sa_solve(&zero, &p, 1, RunOptions::default()).unwrap();
        assert_eq!(out.energy, 0.0);
    }
}
