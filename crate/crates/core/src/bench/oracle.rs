use crate::error::{Error, Result};
use crate::model::{ProblemInstance, SpinVector};

/// Largest instance the exhaustive search accepts.
pub const BRUTE_FORCE_CAP: usize = 24;

/// Exact ground state by enumerating all `2^n` configurations in Gray-code
/// order, updating the energy in `O(n)` per flip.
///
/// Among configurations whose energy ties the minimum (within `1e-9`
/// relative), the lexicographically smallest is returned, with `-1`
/// ordered before `+1`. The energy is recomputed from scratch for the
/// returned state.
pub fn brute_force_ground_state(instance: &ProblemInstance) -> Result<(SpinVector, f64)> {
    let n = instance.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge {
            n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("instance has no spins".into()));
    }
    let j = instance.coupling();
    let h: Vec<f64> = match instance.field() {
        Some(f) => f.as_slice().to_vec(),
        None => vec![0.0; n],
    };
    let mut s = vec![-1.0f64; n];
    // local fields J s
    let mut local = vec![0.0; n];
    for (i, l) in local.iter_mut().enumerate() {
        j.for_each_in_row(i, |k, v| *l += v * s[k]);
    }
    let mut e: f64 = (0..n).map(|i| -0.5 * s[i] * local[i] - h[i] * s[i]).sum();
    let mut best_e = e;
    let mut best = s.clone();
    let tie = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);

    for k in 1u64..(1u64 << n) {
        let i = k.trailing_zeros() as usize;
        e += 2.0 * s[i] * local[i] + 2.0 * h[i] * s[i];
        let change = -2.0 * s[i];
        s[i] = -s[i];
        j.for_each_in_row(i, |r, v| local[r] += v * change);
        if tie(e, best_e) {
            if lex_less(&s, &best) {
                best.copy_from_slice(&s);
                best_e = best_e.min(e);
            }
        } else if e < best_e {
            best_e = e;
            best.copy_from_slice(&s);
        }
    }
    let spins = SpinVector::from_signs(&best);
    let energy = instance.energy(&spins)?;
    Ok((spins, energy))
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    false
}
