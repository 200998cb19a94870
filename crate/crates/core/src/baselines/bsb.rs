use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{c0_or_default, sweep_with_signs, BsbParams};
use crate::error::Result;
use crate::model::{ProblemInstance, SpinVector};
use crate::run::{Diagnostics, Recorder, RunOptions, SolveOutcome};

const BSB_TAG: u64 = 0x6253_4200_0000_0002;

/// Ballistic simulated bifurcation.
///
/// Per step, with `a_t = a0 t / T`:
///
/// ```text
/// y += (-(a0 - a_t) x + c0 J x) dt
/// x += a0 y dt
/// x  = clip(x, -1, 1);  y_i = 0 where |x_i| = 1
/// ```
///
/// starting from a seeded `+-1` vector and `y = 0`.
pub fn bsb_solve(instance: &ProblemInstance, p: &BsbParams, seed: u64, opts: RunOptions<'_>) -> Result<SolveOutcome> {
    p.validate()?;
    let j = instance.working_coupling();
    let n = j.n();
    let c0 = c0_or_default(p.c0, j)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ BSB_TAG);
    let mut rec = Recorder::new(instance, opts.trace_stride, opts.observer, p.time_budget);

    let mut x = super::random_pm1(n, &mut rng);
    let mut y = vec![0.0; n];
    let (mut s, mut jx, mut js) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let e = sweep_with_signs(j, &x, &mut s, &mut jx, &mut js, &opts.matvec)?;
    rec.observe(0, e, || SpinVector::from_signs(&x), None);

    for t in 1..=p.steps {
        if rec.out_of_time() {
            break;
        }
        let at = p.a0 * t as f64 / p.steps as f64;
        for i in 0..n {
            y[i] += (-(p.a0 - at) * x[i] + c0 * jx[i]) * p.dt;
            x[i] += p.a0 * y[i] * p.dt;
            if x[i] >= 1.0 {
                x[i] = 1.0;
                y[i] = 0.0;
            } else if x[i] <= -1.0 {
                x[i] = -1.0;
                y[i] = 0.0;
            }
        }
        let e = sweep_with_signs(j, &x, &mut s, &mut jx, &mut js, &opts.matvec)?;
        rec.observe(t, e, || SpinVector::from_signs(&x), None);
    }
    rec.finish(false, x, Diagnostics::default())
}
