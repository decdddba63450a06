//! Length-M complex vectors used for channels, estimates and steering vectors.

use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;

/// What a [`ChannelVector`] represents. Carried for diagnostics only; the
/// arithmetic does not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VectorRole {
    TrueChannel,
    Estimate,
    Steering,
    Residual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    entries: Vec<C64>,
    role: VectorRole,
}

impl ChannelVector {
    pub fn new(entries: Vec<C64>, role: VectorRole) -> Self {
        Self { entries, role }
    }

    pub fn zeros(len: usize, role: VectorRole) -> Self {
        Self::new(vec![C64::new(0.0, 0.0); len], role)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn role(&self) -> VectorRole {
        self.role
    }

    pub fn with_role(mut self, role: VectorRole) -> Self {
        self.role = role;
        self
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.entries
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.entries
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Hermitian inner product `selfᴴ other`.
    pub fn inner(&self, other: &ChannelVector) -> C64 {
        debug_assert_eq!(self.len(), other.len());
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b)
    }

    /// `self += scale * other`.
    pub fn axpy(&mut self, scale: C64, other: &ChannelVector) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += scale * b;
        }
    }

    pub fn scaled(&self, scale: C64) -> ChannelVector {
        ChannelVector::new(self.entries.iter().map(|z| z * scale).collect(), self.role)
    }

    pub fn add(&self, other: &ChannelVector) -> ChannelVector {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), other);
        out
    }

    pub fn sub(&self, other: &ChannelVector) -> ChannelVector {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other);
        out
    }

    pub(crate) fn ensure_len(&self, expected: usize) -> Result<()> {
        if self.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.len(),
            });
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for ChannelVector {
    type Output = C64;

    fn index(&self, index: usize) -> &C64 {
        &self.entries[index]
    }
}
