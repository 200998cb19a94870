use std::sync::Arc;

use crate::error::{Error, Result};

use super::{dehomogenize, energy_with_field, homogenize_shared, CouplingMatrix, ExternalField, SpinVector};

/// A coupling matrix, an optional external field and some provenance.
///
/// Solvers only ever see the homogeneous *working* matrix: the coupling
/// itself when there is no field, otherwise its homogenized `(n+1)`-spin
/// form. Energies of working configurations equal the field-model energies
/// of their dehomogenized spins, so traces are comparable either way.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    name: String,
    coupling: Arc<CouplingMatrix>,
    field: Option<ExternalField>,
    working: Arc<CouplingMatrix>,
    best_known: Option<f64>,
    cut_offset: Option<f64>,
}

impl ProblemInstance {
    pub fn new(name: impl Into<String>, coupling: CouplingMatrix) -> Self {
        let coupling = Arc::new(coupling);
        ProblemInstance {
            name: name.into(),
            working: coupling.clone(),
            coupling,
            field: None,
            best_known: None,
            cut_offset: None,
        }
    }

    pub fn with_field(name: impl Into<String>, coupling: CouplingMatrix, field: ExternalField) -> Result<Self> {
        if field.len() != coupling.n() {
            return Err(Error::DimensionMismatch {
                expected: coupling.n(),
                actual: field.len(),
            });
        }
        let coupling = Arc::new(coupling);
        let working = Arc::new(homogenize_shared(&coupling, &field)?);
        Ok(ProblemInstance {
            name: name.into(),
            coupling,
            field: Some(field),
            working,
            best_known: None,
            cut_offset: None,
        })
    }

    /// Ising instance for MAX-CUT on the weighted graph `w`: `J = -W/2`.
    /// Cut values are then `total_weight / 2 - E(s)`.
    pub fn from_maxcut(name: impl Into<String>, w: &CouplingMatrix) -> Self {
        let mut total = 0.0;
        for i in 0..w.n() {
            w.for_each_in_row(i, |j, v| {
                if j > i {
                    total += v;
                }
            });
        }
        let mut inst = ProblemInstance::new(name, super::maxcut_to_ising(w));
        inst.cut_offset = Some(total / 2.0);
        inst
    }

    pub fn with_best_known(mut self, value: f64) -> Self {
        self.best_known = Some(value);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of spins of the original model.
    pub fn n(&self) -> usize {
        self.coupling.n()
    }

    pub fn coupling(&self) -> &CouplingMatrix {
        &self.coupling
    }

    pub fn field(&self) -> Option<&ExternalField> {
        self.field.as_ref()
    }

    pub fn best_known(&self) -> Option<f64> {
        self.best_known
    }

    /// The homogeneous matrix solvers iterate on.
    pub fn working_coupling(&self) -> &CouplingMatrix {
        &self.working
    }

    pub fn working_dim(&self) -> usize {
        self.working.n()
    }

    /// Maps a working configuration back to the original spins.
    pub fn spins_from_working(&self, sigma: &SpinVector) -> Result<SpinVector> {
        if sigma.len() != self.working_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.working_dim(),
                actual: sigma.len(),
            });
        }
        match self.field {
            Some(_) => dehomogenize(sigma),
            None => Ok(sigma.clone()),
        }
    }

    /// Energy of an original-size configuration, including the field.
    pub fn energy(&self, s: &SpinVector) -> Result<f64> {
        match &self.field {
            Some(h) => energy_with_field(&self.coupling, h, s),
            None => super::energy(&self.coupling, s),
        }
    }

    /// Whether the instance came from a MAX-CUT graph.
    pub fn is_maxcut(&self) -> bool {
        self.cut_offset.is_some()
    }

    pub fn cut_offset(&self) -> Option<f64> {
        self.cut_offset
    }

    /// Cut value corresponding to an Ising energy, for graph instances.
    pub fn cut_from_energy(&self, energy: f64) -> Option<f64> {
        self.cut_offset.map(|c| c - energy)
    }
}
