//! Benchmark instance generators.
//!
//! Randomness comes from ChaCha8 with one stream per matrix row, so any row
//! range can be regenerated independently and the output does not depend on
//! how rows are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CouplingMatrix, CsrMatrix, ValueKind};

/// Seed used by the procedural sine family unless told otherwise.
pub const DEFAULT_SIN_SEED: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Fully connected, standard normal couplings.
    SkGaussian,
    /// Fully connected, couplings uniform on `{-1, 1}`.
    DensePm1,
    /// Sparse integer couplings in CSR form.
    Sparse9bit,
    /// `sin(i * j + seed)`, generated on demand.
    ProceduralSin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    /// Connectivity percentage for [`GeneratorKind::Sparse9bit`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connectivity_pct: Option<f64>,
    /// RNG seed; for the sine family this is the phase offset.
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("n must be >= 2, got {}", self.n)));
        }
        if self.kind == GeneratorKind::Sparse9bit {
            let p = self
                .connectivity_pct
                .ok_or_else(|| Error::InvalidParameter("sparse_9bit needs connectivity_pct".into()))?;
            check_pct(p)?;
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<CouplingMatrix> {
        self.validate()?;
        Ok(match self.kind {
            GeneratorKind::SkGaussian => gen_sk(self.n, self.seed),
            GeneratorKind::DensePm1 => gen_dense_pm1(self.n, self.seed),
            GeneratorKind::Sparse9bit => gen_sparse_9bit(self.n, self.connectivity_pct.unwrap_or(1.0), self.seed)?,
            GeneratorKind::ProceduralSin => gen_procedural_sin(self.n, self.seed as f64),
        })
    }

    /// A short label such as `sk_n100_s7`.
    pub fn label(&self) -> String {
        let kind = match self.kind {
            GeneratorKind::SkGaussian => "sk",
            GeneratorKind::DensePm1 => "pm1",
            GeneratorKind::Sparse9bit => "sparse9",
            GeneratorKind::ProceduralSin => "sin",
        };
        match self.connectivity_pct {
            Some(p) if self.kind == GeneratorKind::Sparse9bit => {
                format!("{kind}_n{}_p{p}_s{}", self.n, self.seed)
            }
            _ => format!("{kind}_n{}_s{}", self.n, self.seed),
        }
    }
}

fn check_pct(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 100.0) {
        return Err(Error::InvalidParameter(format!(
            "connectivity percentage must be in (0, 100], got {p}"
        )));
    }
    Ok(())
}

const SK_TAG: u64 = 0x5348_4552_5249_4e47;
const PM1_TAG: u64 = 0x4b32_3030_3000_0001;
const SPARSE_TAG: u64 = 0x5350_4152_5345_0009;

fn row_rng(seed: u64, tag: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag);
    rng.set_stream(row as u64);
    rng
}

fn dense_from_lower(n: usize, mut row: impl FnMut(usize, &mut [f64])) -> Vec<f64> {
    let mut data = vec![0.0; n * n];
    let mut buf = vec![0.0; n];
    for i in 1..n {
        row(i, &mut buf[..i]);
        data[i * n..i * n + i].copy_from_slice(&buf[..i]);
        for (j, &v) in buf[..i].iter().enumerate() {
            data[j * n + i] = v;
        }
    }
    data
}

/// Sherrington-Kirkpatrick instance: `J[i][j] ~ N(0, 1)` for `i > j`,
/// mirrored.
pub fn gen_sk(n: usize, seed: u64) -> CouplingMatrix {
    let data = dense_from_lower(n, |i, out| {
        let mut rng = row_rng(seed, SK_TAG, i);
        for v in out {
            *v = rng.sample(StandardNormal);
        }
    });
    CouplingMatrix::from_dense(n, data).expect("symmetric by construction")
}

/// Fully connected `{-1, +1}` couplings with equal probability.
pub fn gen_dense_pm1(n: usize, seed: u64) -> CouplingMatrix {
    let data = dense_from_lower(n, |i, out| {
        let mut rng = row_rng(seed, PM1_TAG, i);
        for v in out {
            *v = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
    });
    CouplingMatrix::from_dense(n, data)
        .expect("symmetric by construction")
        .with_kind(ValueKind::Integer)
}

/// Size of the draw range for a connectivity percentage `p`:
/// `floor(102300 / p)`.
pub fn sparse_draw_range(p: f64) -> u64 {
    (102_300.0 / p).floor() as u64
}

/// Sparse integer couplings.
///
/// For every strictly-lower pair `(i, j)` draw `z` uniformly from
/// `1..=N_p`; when `z < 1023` the pair gets the value `z - 511`, which lies in
/// `-510..=511`. Accepted entries are stored even when the value is zero.
/// Rows are streamed, so memory stays proportional to the number of
/// accepted entries.
pub fn gen_sparse_9bit(n: usize, p: f64, seed: u64) -> Result<CouplingMatrix> {
    check_pct(p)?;
    let np = sparse_draw_range(p);
    let mut offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    offsets.push(0);
    for i in 0..n {
        let mut rng = row_rng(seed, SPARSE_TAG, i);
        for j in 0..i {
            let z = rng.random_range(1..=np);
            if z < 1023 {
                cols.push(j);
                vals.push(z as f64 - 511.0);
            }
        }
        offsets.push(cols.len());
    }
    let csr = CsrMatrix::symmetrize_lower(n, &offsets, &cols, &vals);
    Ok(CouplingMatrix::from_csr_unchecked(csr, ValueKind::Integer))
}

/// `J[i][j] = sin(i * j + seed)` for `i != j`, zero on the diagonal.
pub fn gen_procedural_sin(n: usize, seed: f64) -> CouplingMatrix {
    CouplingMatrix::procedural_sin(n, seed)
}
