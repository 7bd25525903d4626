use std::sync::Arc;

use super::{FockBasis, OccupationVector, OperatorMatrix, C64};
use crate::error::{Error, Result};

/// Complex amplitudes over a [`FockBasis`].
#[derive(Clone, Debug)]
pub struct StateVector {
    basis: Arc<FockBasis>,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(basis: Arc<FockBasis>, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(Error::argument(format!(
                "amplitude vector has length {} but the basis has {} states",
                amplitudes.len(),
                basis.len()
            )));
        }
        Ok(Self { basis, amplitudes })
    }

    /// The basis state at `index` with unit amplitude.
    pub fn basis_state(basis: Arc<FockBasis>, index: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); basis.len()];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { basis, amplitudes }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, occupation: &OccupationVector) -> Option<C64> {
        self.basis
            .rank_of(occupation)
            .map(|i| self.amplitudes[i])
    }

    /// Amplitude of the ket written as a digit string, e.g. `"1010"`.
    pub fn amplitude_of(&self, ket: &str) -> Option<C64> {
        let counts: Option<Vec<u8>> = ket
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as u8))
            .collect();
        let index = self.basis.rank(&counts?)?;
        Some(self.amplitudes[index])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `<psi|A|psi>`.
    pub fn expectation(&self, operator: &OperatorMatrix) -> C64 {
        let applied = operator.apply(&self.amplitudes);
        self.amplitudes
            .iter()
            .zip(&applied)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn evolve(&self, operator: &OperatorMatrix) -> StateVector {
        StateVector {
            basis: Arc::clone(&self.basis),
            amplitudes: operator.apply(&self.amplitudes),
        }
    }
}
