use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sweep_with_signs, SiaParams};
use crate::error::Result;
use crate::model::{ProblemInstance, SpinVector};
use crate::run::{Diagnostics, Recorder, RunOptions, SolveOutcome};

const SIA_TAG: u64 = 0x5349_4100_0000_0004;

pub const Q_BOUND: f64 = std::f64::consts::SQRT_2;
pub const P_BOUND: f64 = 2.0;

/// Clamps `q` to `[-sqrt 2, sqrt 2]` and `p` to `[-2, 2]` componentwise.
pub fn sia_boundary(q: &mut [f64], p: &mut [f64]) {
    for v in q.iter_mut() {
        *v = v.clamp(-Q_BOUND, Q_BOUND);
    }
    for v in p.iter_mut() {
        *v = v.clamp(-P_BOUND, P_BOUND);
    }
}

/// Spring Ising algorithm. Each step clamps `(q, p)`, then
///
/// ```text
/// q += (dt / m) p
/// p += -dt k q + zeta(t) dt J q
/// ```
///
/// from `q = 0` and `p` uniform in `(-0.0005, 0.0005)`. The returned spins
/// are `sign(q)`; the box is applied once more after the last step.
pub fn sia_solve(
    instance: &ProblemInstance,
    params: &SiaParams,
    seed: u64,
    opts: RunOptions<'_>,
) -> Result<SolveOutcome> {
    params.validate()?;
    let j = instance.working_coupling();
    let n = j.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SIA_TAG);
    let mut rec = Recorder::new(instance, opts.trace_stride, opts.observer, params.time_budget);

    let mut q = vec![0.0; n];
    let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(-0.0005..0.0005)).collect();
    let (mut s, mut jq, mut js) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let e = sweep_with_signs(j, &q, &mut s, &mut jq, &mut js, &opts.matvec)?;
    rec.observe(0, e, || SpinVector::from_signs(&q), None);
    let step = params.dt / params.mass_m;

    for t in 1..=params.steps {
        if rec.out_of_time() {
            break;
        }
        sia_boundary(&mut q, &mut p);
        for i in 0..n {
            q[i] += step * p[i];
        }
        let e = sweep_with_signs(j, &q, &mut s, &mut jq, &mut js, &opts.matvec)?;
        let zeta = params.zeta(t);
        for i in 0..n {
            p[i] += -params.dt * params.elastic_k * q[i] + zeta * params.dt * jq[i];
        }
        rec.observe(t, e, || SpinVector::from_signs(&q), None);
    }
    sia_boundary(&mut q, &mut p);
    rec.finish(false, q, Diagnostics::default())
}
