#![allow(dead_code)]

use dcising::model::{CouplingMatrix, SpinVector};
use nalgebra::{DMatrix, SymmetricEigen};

/// Eigenvalues of a coupling matrix, ascending.
pub fn eigenvalues(j: &CouplingMatrix) -> Vec<f64> {
    let n = j.n();
    let m = DMatrix::from_row_slice(n, n, &j.to_dense());
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Every configuration of `n` spins.
pub fn all_spins(n: usize) -> impl Iterator<Item = SpinVector> {
    (0..1u64 << n).map(move |m| SpinVector::from_mask(n, m))
}

/// Minimum of `f` over all configurations.
pub fn brute_min(n: usize, f: impl Fn(&SpinVector) -> f64) -> f64 {
    all_spins(n).map(|s| f(&s)).fold(f64::INFINITY, f64::min)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `max_i sum_k |J_ik + alpha delta_ik|` from the dense entries.
pub fn shifted_inf_norm(j: &CouplingMatrix, alpha: f64) -> f64 {
    let n = j.n();
    let d = j.to_dense();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|k| (d[i * n + k] + if i == k { alpha } else { 0.0 }).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
