//! Ising energies, homogenization and the MAX-CUT correspondence.
//!
//! The energy of a spin vector `s` under couplings `J` and field `h` is
//! `E(s) = -1/2 s^T J s - h^T s`. A field model on `n` spins is equivalent to
//! a zero-field model on `n + 1` spins whose extra row and column carry `h`;
//! see [`homogenize`] and [`dehomogenize`].

mod coupling;
mod instance;
mod vectors;

use std::sync::Arc;

pub use coupling::{
    BorderedMatrix, CouplingFn, CouplingMatrix, CsrMatrix, ProceduralMatrix, ProceduralRule, Storage, ValueKind,
};
pub use instance::ProblemInstance;
pub use vectors::{ExternalField, SpinVector, StateVector};

use crate::error::{Error, Result};
use crate::matvec::{self, MatvecConfig};

/// Above this size the homogenized matrix is a bordered view over the
/// original storage instead of a copy.
pub const MATERIALIZE_LIMIT: usize = 100_000;

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// `-1/2 s^T J s`, one matrix-vector product plus a dot product.
pub fn energy(j: &CouplingMatrix, s: &SpinVector) -> Result<f64> {
    energy_with(j, s, &MatvecConfig::default())
}

pub fn energy_with(j: &CouplingMatrix, s: &SpinVector, cfg: &MatvecConfig) -> Result<f64> {
    check_dim(j.n(), s.len())?;
    let x = s.to_f64();
    let (_, e) = matvec::operator_energy_with(j, &x, cfg)?;
    Ok(e)
}

/// `-1/2 s^T J s - h^T s`.
pub fn energy_with_field(j: &CouplingMatrix, h: &ExternalField, s: &SpinVector) -> Result<f64> {
    check_dim(j.n(), h.len())?;
    let e = energy(j, s)?;
    let hs: f64 = h.iter().zip(s.iter()).map(|(&hi, &si)| hi * si as f64).sum();
    Ok(e - hs)
}

/// Bordered `(n+1) x (n+1)` coupling `[[J, h], [h^T, 0]]`.
///
/// For every `s` and `t` in `{-1, 1}`, the zero-field energy of `(s, t)`
/// equals the field energy of `t * s`. Dense and CSR inputs up to
/// [`MATERIALIZE_LIMIT`] spins are copied into the same storage kind;
/// procedural and larger inputs get a bordered view.
pub fn homogenize(j: &CouplingMatrix, h: &ExternalField) -> Result<CouplingMatrix> {
    homogenize_shared(&Arc::new(j.clone()), h)
}

pub(crate) fn homogenize_shared(j: &Arc<CouplingMatrix>, h: &ExternalField) -> Result<CouplingMatrix> {
    check_dim(j.n(), h.len())?;
    let n = j.n();
    let m = n + 1;
    if m > MATERIALIZE_LIMIT {
        return Ok(CouplingMatrix::bordered(j.clone(), h.to_vec()));
    }
    match j.storage() {
        Storage::Dense(d) => {
            let mut out = vec![0.0; m * m];
            for i in 0..n {
                out[i * m..i * m + n].copy_from_slice(&d[i * n..(i + 1) * n]);
                out[i * m + n] = h[i];
                out[n * m + i] = h[i];
            }
            CouplingMatrix::from_dense(m, out)
        }
        Storage::Csr(c) => {
            let mut row_offsets = Vec::with_capacity(m + 1);
            let mut cols = Vec::with_capacity(c.nnz() + 2 * n);
            let mut vals = Vec::with_capacity(c.nnz() + 2 * n);
            row_offsets.push(0);
            for i in 0..n {
                let (rc, rv) = c.row(i);
                cols.extend_from_slice(rc);
                vals.extend_from_slice(rv);
                if h[i] != 0.0 {
                    cols.push(n);
                    vals.push(h[i]);
                }
                row_offsets.push(cols.len());
            }
            for (i, &hi) in h.iter().enumerate() {
                if hi != 0.0 {
                    cols.push(i);
                    vals.push(hi);
                }
            }
            row_offsets.push(cols.len());
            let csr = CsrMatrix::new(m, row_offsets, cols, vals)?;
            Ok(CouplingMatrix::from_csr_unchecked(csr, ValueKind::Real))
        }
        Storage::Procedural(_) | Storage::Bordered(_) => Ok(CouplingMatrix::bordered(j.clone(), h.to_vec())),
    }
}

/// Recovers the field-model spins from a homogenized configuration
/// `sigma = (s, t)`: returns `t * s`.
pub fn dehomogenize(sigma: &SpinVector) -> Result<SpinVector> {
    if sigma.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "homogenized spin vector needs length >= 2, got {}",
            sigma.len()
        )));
    }
    let (s, t) = sigma.split_at(sigma.len() - 1);
    let t = t[0];
    SpinVector::new(s.iter().map(|&v| v * t).collect())
}

/// Ising couplings for MAX-CUT on adjacency `w`: `J = -W/2`.
///
/// Symmetry and the zero diagonal are enforced when `w` is constructed, so
/// this cannot fail.
pub fn maxcut_to_ising(w: &CouplingMatrix) -> CouplingMatrix {
    w.scaled(-0.5)
}

/// Total weight of the edges whose endpoints have different spins.
pub fn cut_value(w: &CouplingMatrix, s: &SpinVector) -> Result<f64> {
    check_dim(w.n(), s.len())?;
    let mut cut = 0.0;
    for i in 0..w.n() {
        let si = s[i];
        w.for_each_in_row(i, |j, v| {
            if j > i && s[j] != si {
                cut += v;
            }
        });
    }
    Ok(cut)
}
