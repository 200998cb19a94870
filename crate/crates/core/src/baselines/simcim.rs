use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{c0_or_default, SimCimParams};
use crate::error::Result;
use crate::model::{ProblemInstance, SpinVector};
use crate::run::{Diagnostics, Recorder, RunOptions, SolveOutcome};

const SIMCIM_TAG: u64 = 0x4349_4d00_0000_0003;

/// Simulated coherent Ising machine:
///
/// ```text
/// x += (-(a0 - a_t) x + c0 J sign(x)) dt + A w sqrt(dt),  w ~ N(0, I)
/// x  = clip(x, -1, 1)
/// ```
///
/// The coupling acts on `sign(x)`, so the same product also gives the
/// energy of the current configuration.
pub fn simcim_solve(
    instance: &ProblemInstance,
    p: &SimCimParams,
    seed: u64,
    opts: RunOptions<'_>,
) -> Result<SolveOutcome> {
    p.validate()?;
    let j = instance.working_coupling();
    let n = j.n();
    let c0 = c0_or_default(p.c0, j)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SIMCIM_TAG);
    let mut rec = Recorder::new(instance, opts.trace_stride, opts.observer, p.time_budget);

    let mut x = super::random_pm1(n, &mut rng);
    let mut s = vec![0.0; n];
    let mut js = vec![0.0; n];
    super::signs_into(&x, &mut s);
    crate::matvec::apply_into(j, &[&s], &mut [&mut js], &opts.matvec)?;
    let e = -0.5 * crate::matvec::dot(&s, &js);
    rec.observe(0, e, || SpinVector::from_signs(&x), None);
    let sq = p.dt.sqrt();

    for t in 1..=p.steps {
        if rec.out_of_time() {
            break;
        }
        let at = p.a0 * t as f64 / p.steps as f64;
        for i in 0..n {
            let w: f64 = rng.sample(StandardNormal);
            let v = x[i] + (-(p.a0 - at) * x[i] + c0 * js[i]) * p.dt + p.noise * w * sq;
            x[i] = v.clamp(-1.0, 1.0);
        }
        super::signs_into(&x, &mut s);
        crate::matvec::apply_into(j, &[&s], &mut [&mut js], &opts.matvec)?;
        let e = -0.5 * crate::matvec::dot(&s, &js);
        rec.observe(t, e, || SpinVector::from_signs(&x), None);
    }
    rec.finish(false, x, Diagnostics::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use crate::model::CouplingMatrix;

    #[test]
    fn noiseless_decoupled_decays() {
        let inst = ProblemInstance::new("z", CouplingMatrix::zeros(5));
        let p = SimCimParams {
            noise: 0.0,
            dt: 0.5,
            steps: 20,
            ..Default::default()
        };
        let out = simcim_solve(&inst, &p, 3, RunOptions::default()).unwrap();
        // each step multiplies by 1 - (a0 - a_t) dt, which lies in [0.5, 1)
        let mut expected = 1.0f64;
        for t in 1..=20 {
            expected *= 1.0 - (1.0 - t as f64 / 20.0) * 0.5;
        }
        for v in &out.final_state {
            assert!((v.abs() - expected).abs() < 1e-12, "{v} vs {expected}");
        }
        let again = simcim_solve(&inst, &p, 3, RunOptions::default()).unwrap();
        assert_eq!(out.final_state, again.final_state);
    }

    #[test]
    fn bounded_and_reproducible() {
        let inst = ProblemInstance::new("sk", generate::gen_sk(40, 1));
        let p = SimCimParams {
            steps: 200,
            ..Default::default()
        };
        let a = simcim_solve(&inst, &p, 9, RunOptions::default()).unwrap();
        let b = simcim_solve(&inst, &p, 9, RunOptions::default()).unwrap();
        assert!(a.final_state.iter().all(|v| v.abs() <= 1.0));
        let strip = |o: &SolveOutcome| o.trace.iter().map(|r| (r.iter, r.energy.to_bits())).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        assert_ne!(
            simcim_solve(&inst, &p, 10, RunOptions::default()).unwrap().final_state,
            a.final_state
        );
    }
}
