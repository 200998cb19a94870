use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A spin configuration with entries in `{-1, +1}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinVector(Vec<i8>);

impl SpinVector {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some((index, &v)) = spins.iter().enumerate().find(|(_, &v)| v != 1 && v != -1) {
            return Err(Error::InvalidSpin { index, value: v as i64 });
        }
        Ok(SpinVector(spins))
    }

    pub fn all_up(n: usize) -> Self {
        SpinVector(vec![1; n])
    }

    pub fn all_down(n: usize) -> Self {
        SpinVector(vec![-1; n])
    }

    /// Componentwise sign; zero maps to `+1`.
    pub fn from_signs(x: &[f64]) -> Self {
        SpinVector(x.iter().map(|&v| if v < 0.0 { -1 } else { 1 }).collect())
    }

    /// Bit `i` of `mask` set means spin `i` is `+1`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        SpinVector((0..n).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&s| s as f64).collect()
    }

    /// Global spin flip `s -> -s`.
    pub fn flipped(&self) -> Self {
        SpinVector(self.0.iter().map(|&s| -s).collect())
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }
}

impl Deref for SpinVector {
    type Target = [i8];

    fn deref(&self) -> &[i8] {
        &self.0
    }
}

impl TryFrom<Vec<i8>> for SpinVector {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        SpinVector::new(v)
    }
}

impl From<SpinVector> for Vec<i8> {
    fn from(s: SpinVector) -> Vec<i8> {
        s.0
    }
}

/// Continuous relaxation of a spin vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        check_finite(&x)?;
        Ok(StateVector(x))
    }

    pub fn zeros(n: usize) -> Self {
        StateVector(vec![0.0; n])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn signs(&self) -> SpinVector {
        SpinVector::from_signs(&self.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for StateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// External field `h`, one entry per spin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalField(Vec<f64>);

impl ExternalField {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        check_finite(&h)?;
        Ok(ExternalField(h))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

impl Deref for ExternalField {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn check_finite(x: &[f64]) -> Result<()> {
    match x.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        Some((index, &value)) => Err(Error::NonFinite { index, value }),
        None => Ok(()),
    }
}
