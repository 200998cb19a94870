use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Whether the stored couplings are known to be small integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueKind {
    Real,
    Integer,
}

/// A symmetric, zero-diagonal coupling matrix.
///
/// The matrix can live in one of several storages. All of them answer
/// [`entry`](CouplingMatrix::entry) and row iteration; products go through
/// [`crate::matvec`], which picks the storage-native kernel.
#[derive(Clone, Debug)]
pub struct CouplingMatrix {
    n: usize,
    storage: Storage,
    kind: ValueKind,
}

/// Backing storage of a [`CouplingMatrix`].
#[derive(Clone, Debug)]
pub enum Storage {
    /// Full row-major `n * n` array.
    Dense(Vec<f64>),
    Csr(CsrMatrix),
    /// Entries computed on demand; nothing is stored.
    Procedural(ProceduralMatrix),
    /// `inner` bordered by one extra row and column (the homogenized form of a
    /// field model, used when materializing would be too costly).
    Bordered(BorderedMatrix),
}

/// Compressed sparse row storage holding both triangles.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Validates CSR well-formedness: `row_offsets` has length `n + 1`, starts
    /// at 0, is nondecreasing and ends at `nnz`; columns are in range and
    /// strictly increasing within each row; values are finite.
    pub fn new(n: usize, row_offsets: Vec<usize>, col_indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if row_offsets.len() != n + 1 {
            return Err(Error::MalformedCsr(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n + 1
            )));
        }
        if row_offsets[0] != 0 {
            return Err(Error::MalformedCsr("row_offsets[0] must be 0".into()));
        }
        if col_indices.len() != values.len() {
            return Err(Error::MalformedCsr(format!(
                "{} column indices but {} values",
                col_indices.len(),
                values.len()
            )));
        }
        if row_offsets[n] != values.len() {
            return Err(Error::MalformedCsr(format!(
                "row_offsets ends at {}, but nnz is {}",
                row_offsets[n],
                values.len()
            )));
        }
        for i in 0..n {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            if hi < lo {
                return Err(Error::MalformedCsr(format!("row_offsets decreases at row {i}")));
            }
            let cols = &col_indices[lo..hi];
            for (k, &c) in cols.iter().enumerate() {
                if c >= n {
                    return Err(Error::MalformedCsr(format!("column {c} out of range in row {i}")));
                }
                if k > 0 && cols[k - 1] >= c {
                    return Err(Error::MalformedCsr(format!(
                        "column indices not strictly increasing in row {i}"
                    )));
                }
            }
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(CsrMatrix {
            n,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Builds a symmetric CSR matrix from strictly-lower-triangular rows:
    /// `lower[i]` lists `(j, v)` with `j < i` in increasing `j`.
    pub(crate) fn symmetrize_lower(
        n: usize,
        lower_offsets: &[usize],
        lower_cols: &[usize],
        lower_vals: &[f64],
    ) -> CsrMatrix {
        // row i of the full matrix = lower row i (cols < i) followed by the
        // transposed entries (cols > i), both already sorted.
        let mut counts = vec![0usize; n];
        for i in 0..n {
            counts[i] += lower_offsets[i + 1] - lower_offsets[i];
            for &j in &lower_cols[lower_offsets[i]..lower_offsets[i + 1]] {
                counts[j] += 1;
            }
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0);
        for c in &counts {
            let last = *row_offsets.last().unwrap();
            row_offsets.push(last + c);
        }
        let nnz = row_offsets[n];
        let mut col_indices = vec![0usize; nnz];
        let mut values = vec![0.0f64; nnz];
        let mut cursor: Vec<usize> = row_offsets[..n].to_vec();
        for i in 0..n {
            for k in lower_offsets[i]..lower_offsets[i + 1] {
                let p = cursor[i];
                col_indices[p] = lower_cols[k];
                values[p] = lower_vals[k];
                cursor[i] += 1;
            }
        }
        // transposed part: iterating i ascending appends columns in increasing
        // order to every row j < i.
        for i in 0..n {
            for k in lower_offsets[i]..lower_offsets[i + 1] {
                let j = lower_cols[k];
                let p = cursor[j];
                col_indices[p] = i;
                values[p] = lower_vals[k];
                cursor[j] += 1;
            }
        }
        CsrMatrix {
            n,
            row_offsets,
            col_indices,
            values,
        }
    }
}

/// Signature of a user-supplied procedural coupling. Called with `i < j` only.
pub type CouplingFn = dyn Fn(usize, usize) -> f64 + Send + Sync;

/// The function behind a procedural matrix.
#[derive(Clone)]
pub enum ProceduralRule {
    /// `J[i][j] = sin(i * j + seed)` off the diagonal.
    SinProduct {
        seed: f64,
    },
    Custom(Arc<CouplingFn>),
}

impl fmt::Debug for ProceduralRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProceduralRule::SinProduct { seed } => f.debug_struct("SinProduct").field("seed", seed).finish(),
            ProceduralRule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProceduralMatrix {
    rule: ProceduralRule,
    scale: f64,
}

impl ProceduralMatrix {
    pub fn rule(&self) -> &ProceduralRule {
        &self.rule
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let raw = match &self.rule {
            ProceduralRule::SinProduct { seed } => ((a as u64 * b as u64) as f64 + seed).sin(),
            ProceduralRule::Custom(f) => f(a, b),
        };
        self.scale * raw
    }
}

/// `[[inner, border], [border^T, 0]]`.
#[derive(Clone, Debug)]
pub struct BorderedMatrix {
    inner: Arc<CouplingMatrix>,
    border: Vec<f64>,
}

impl BorderedMatrix {
    pub fn inner(&self) -> &CouplingMatrix {
        &self.inner
    }

    pub fn border(&self) -> &[f64] {
        &self.border
    }
}

impl CouplingMatrix {
    /// Dense matrix from a row-major `n * n` array. The array must be exactly
    /// symmetric with a zero diagonal and finite entries.
    pub fn from_dense(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: data.len(),
            });
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        for i in 0..n {
            let d = data[i * n + i];
            if d != 0.0 {
                return Err(Error::NonzeroDiagonal { i, value: d });
            }
            for j in (i + 1)..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if a != b {
                    return Err(Error::Asymmetric { i, j, a, b });
                }
            }
        }
        Ok(CouplingMatrix {
            n,
            storage: Storage::Dense(data),
            kind: ValueKind::Real,
        })
    }

    /// Dense matrix whose upper triangle is `f(i, j)` for `i < j`; the lower
    /// triangle is mirrored.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self::from_dense(n, data)
    }

    /// Dense matrix from `(i, j, value)` pairs; each pair sets both
    /// `(i, j)` and `(j, i)`.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize, f64)]) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for &(i, j, v) in pairs {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: i.max(j) + 1,
                });
            }
            if i == j && v != 0.0 {
                return Err(Error::NonzeroDiagonal { i, value: v });
            }
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
        Self::from_dense(n, data)
    }

    pub fn zeros(n: usize) -> Self {
        CouplingMatrix {
            n,
            storage: Storage::Dense(vec![0.0; n * n]),
            kind: ValueKind::Integer,
        }
    }

    /// CSR matrix; checks structure, zero diagonal and exact symmetry.
    pub fn from_csr(csr: CsrMatrix) -> Result<Self> {
        let n = csr.n;
        for i in 0..n {
            let (cols, vals) = csr.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j == i {
                    if v != 0.0 {
                        return Err(Error::NonzeroDiagonal { i, value: v });
                    }
                } else {
                    let w = csr.get(j, i);
                    if w != v {
                        return Err(Error::Asymmetric { i, j, a: v, b: w });
                    }
                }
            }
        }
        Ok(CouplingMatrix {
            n,
            storage: Storage::Csr(csr),
            kind: ValueKind::Real,
        })
    }

    pub(crate) fn from_csr_unchecked(csr: CsrMatrix, kind: ValueKind) -> Self {
        CouplingMatrix {
            n: csr.n,
            storage: Storage::Csr(csr),
            kind,
        }
    }

    /// `J[i][j] = sin(i * j + seed)` for `i != j` (0-based indices), zero on
    /// the diagonal. Nothing is stored.
    pub fn procedural_sin(n: usize, seed: f64) -> Self {
        CouplingMatrix {
            n,
            storage: Storage::Procedural(ProceduralMatrix {
                rule: ProceduralRule::SinProduct { seed },
                scale: 1.0,
            }),
            kind: ValueKind::Real,
        }
    }

    /// Procedural matrix over an arbitrary function. The function is only
    /// ever called with `i < j`, so the result is symmetric with a zero
    /// diagonal whatever `f` does elsewhere.
    pub fn procedural(n: usize, f: impl Fn(usize, usize) -> f64 + Send + Sync + 'static) -> Self {
        CouplingMatrix {
            n,
            storage: Storage::Procedural(ProceduralMatrix {
                rule: ProceduralRule::Custom(Arc::new(f)),
                scale: 1.0,
            }),
            kind: ValueKind::Real,
        }
    }

    pub(crate) fn bordered(inner: Arc<CouplingMatrix>, border: Vec<f64>) -> Self {
        debug_assert_eq!(inner.n, border.len());
        CouplingMatrix {
            n: inner.n + 1,
            kind: ValueKind::Real,
            storage: Storage::Bordered(BorderedMatrix { inner, border }),
        }
    }

    pub(crate) fn with_kind(mut self, kind: ValueKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn value_kind(&self) -> ValueKind {
        self.kind
    }

    pub fn is_procedural(&self) -> bool {
        matches!(self.storage, Storage::Procedural(_))
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(d) => d[i * self.n + j],
            Storage::Csr(c) => c.get(i, j),
            Storage::Procedural(p) => p.entry(i, j),
            Storage::Bordered(b) => {
                let m = b.inner.n;
                match (i == m, j == m) {
                    (false, false) => b.inner.entry(i, j),
                    (true, false) => b.border[j],
                    (false, true) => b.border[i],
                    (true, true) => 0.0,
                }
            }
        }
    }

    /// Calls `f(j, J[i][j])` for the (structurally) nonzero entries of row
    /// `i`, in increasing `j`. Dense and procedural storage visit every
    /// off-diagonal column.
    pub fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        self.visit_row(i, &mut f)
    }

    fn visit_row(&self, i: usize, f: &mut dyn FnMut(usize, f64)) {
        match &self.storage {
            Storage::Dense(d) => {
                let row = &d[i * self.n..(i + 1) * self.n];
                for (j, &v) in row.iter().enumerate() {
                    if j != i {
                        f(j, v);
                    }
                }
            }
            Storage::Csr(c) => {
                let (cols, vals) = c.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    if j != i {
                        f(j, v);
                    }
                }
            }
            Storage::Procedural(p) => {
                for j in 0..self.n {
                    if j != i {
                        f(j, p.entry(i, j));
                    }
                }
            }
            Storage::Bordered(b) => {
                let m = b.inner.n;
                if i == m {
                    for (j, &v) in b.border.iter().enumerate() {
                        f(j, v);
                    }
                } else {
                    b.inner.visit_row(i, f);
                    f(m, b.border[i]);
                }
            }
        }
    }

    /// `sum_{j != i} |J[i][j]|`.
    pub fn row_abs_sum(&self, i: usize) -> f64 {
        let mut s = 0.0;
        self.for_each_in_row(i, |_, v| s += v.abs());
        s
    }

    /// `max_i sum_{j != i} |J[i][j]|`, the infinity norm of `J`.
    pub fn max_row_abs_sum(&self) -> f64 {
        (0..self.n).map(|i| self.row_abs_sum(i)).fold(0.0, f64::max)
    }

    /// True when every entry is zero.
    pub fn is_zero(&self) -> bool {
        match &self.storage {
            Storage::Dense(d) => d.iter().all(|&v| v == 0.0),
            Storage::Csr(c) => c.values.iter().all(|&v| v == 0.0),
            Storage::Procedural(p) => p.scale == 0.0 || (0..self.n).all(|i| self.row_abs_sum(i) == 0.0),
            Storage::Bordered(b) => b.inner.is_zero() && b.border.iter().all(|&v| v == 0.0),
        }
    }

    /// Copy of the matrix with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> CouplingMatrix {
        let storage = match &self.storage {
            Storage::Dense(d) => Storage::Dense(d.iter().map(|v| v * factor).collect()),
            Storage::Csr(c) => Storage::Csr(CsrMatrix {
                values: c.values.iter().map(|v| v * factor).collect(),
                ..c.clone()
            }),
            Storage::Procedural(p) => Storage::Procedural(ProceduralMatrix {
                rule: p.rule.clone(),
                scale: p.scale * factor,
            }),
            Storage::Bordered(b) => Storage::Bordered(BorderedMatrix {
                inner: Arc::new(b.inner.scaled(factor)),
                border: b.border.iter().map(|v| v * factor).collect(),
            }),
        };
        let kind = if factor.fract() == 0.0 {
            self.kind
        } else {
            ValueKind::Real
        };
        CouplingMatrix {
            n: self.n,
            storage,
            kind,
        }
    }

    /// Row-major dense copy of the matrix. O(n^2) memory.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            self.for_each_in_row(i, |j, v| out[i * n + j] = v);
        }
        out
    }

    /// CSR copy keeping only nonzero entries.
    pub fn to_csr(&self) -> CsrMatrix {
        if let Storage::Csr(c) = &self.storage {
            return c.clone();
        }
        let n = self.n;
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..n {
            self.for_each_in_row(i, |j, v| {
                if v != 0.0 {
                    col_indices.push(j);
                    values.push(v);
                }
            });
            row_offsets.push(values.len());
        }
        CsrMatrix {
            n,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Number of stored (or, for procedural storage, implied) off-diagonal
    /// entries.
    pub fn stored_entries(&self) -> usize {
        match &self.storage {
            Storage::Csr(c) => c.nnz(),
            Storage::Bordered(b) => b.inner.stored_entries() + 2 * b.border.len(),
            _ => self.n * self.n.saturating_sub(1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_rejects_asymmetry_and_diagonal() {
        let err = CouplingMatrix::from_dense(2, vec![0.0, 1.0, 2.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Asymmetric { .. }));
        let err = CouplingMatrix::from_dense(2, vec![1.0, 0.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonzeroDiagonal { .. }));
        let err = CouplingMatrix::from_dense(2, vec![0.0, f64::NAN, f64::NAN, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn csr_structure_checks() {
        // row_offsets length
        assert!(CsrMatrix::new(2, vec![0, 1], vec![1], vec![1.0]).is_err());
        // decreasing offsets
        assert!(CsrMatrix::new(2, vec![0, 2, 1], vec![0, 1], vec![1.0, 1.0]).is_err());
        // unsorted columns
        assert!(CsrMatrix::new(3, vec![0, 2, 2, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        // column out of range
        assert!(CsrMatrix::new(2, vec![0, 1, 1], vec![5], vec![1.0]).is_err());
        let ok = CsrMatrix::new(2, vec![0, 1, 2], vec![1, 0], vec![3.0, 3.0]).unwrap();
        let m = CouplingMatrix::from_csr(ok).unwrap();
        assert_eq!(m.entry(0, 1), 3.0);
        assert_eq!(m.entry(1, 1), 0.0);
        let asym = CsrMatrix::new(2, vec![0, 1, 1], vec![1], vec![3.0]).unwrap();
        assert!(matches!(CouplingMatrix::from_csr(asym), Err(Error::Asymmetric { .. })));
    }

    #[test]
    fn symmetrize_lower_matches_dense() {
        // lower rows: row 1 -> (0, 2), row 2 -> (0, -1), (1, 5)
        let offsets = [0, 0, 1, 3];
        let cols = [0, 0, 1];
        let vals = [2.0, -1.0, 5.0];
        let csr = CsrMatrix::symmetrize_lower(3, &offsets, &cols, &vals);
        let m = CouplingMatrix::from_csr(csr).unwrap();
        let d = CouplingMatrix::from_pairs(3, &[(0, 1, 2.0), (0, 2, -1.0), (1, 2, 5.0)]).unwrap();
        assert_eq!(m.to_dense(), d.to_dense());
    }

    #[test]
    fn procedural_is_symmetric_with_zero_diagonal() {
        let m = CouplingMatrix::procedural_sin(8, 100.0);
        assert_eq!(m.entry(1, 1), 0.0);
        assert_ne!((1.0f64 + 100.0).sin(), 0.0);
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(m.entry(i, j).to_bits(), m.entry(j, i).to_bits());
            }
        }
        let custom = CouplingMatrix::procedural(4, |i, j| (i + 10 * j) as f64);
        assert_eq!(custom.entry(3, 1), custom.entry(1, 3));
        assert_eq!(custom.entry(2, 2), 0.0);
    }

    #[test]
    fn scaled_and_norms() {
        let m = CouplingMatrix::from_pairs(3, &[(0, 1, -1.0), (1, 2, 2.0)]).unwrap();
        assert_eq!(m.max_row_abs_sum(), 3.0);
        let s = m.scaled(-0.5);
        assert_eq!(s.entry(1, 2), -1.0);
        assert_eq!(s.value_kind(), ValueKind::Real);
        assert!(CouplingMatrix::zeros(4).is_zero());
        assert!(!m.is_zero());
    }
}
