//! The error-free, zero-delay linear network r(t) = H s(t).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::gf::{Field, FieldElement, FieldMatrix, FieldVector};
use crate::seed;

/// Static K x L transfer matrix with i.i.d. uniform entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearNetwork {
    field: Field,
    h: FieldMatrix,
    seed: u64,
}

impl LinearNetwork {
    pub fn sample(field: Field, users: usize, transmitters: usize, seed: u64) -> LinearNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[0x6368616e]));
        let h = FieldMatrix::random(&field, users, transmitters, &mut rng);
        LinearNetwork { field, h, seed }
    }

    pub fn from_matrix(field: Field, h: FieldMatrix) -> LinearNetwork {
        LinearNetwork { field, h, seed: 0 }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn matrix(&self) -> &FieldMatrix {
        &self.h
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn users(&self) -> usize {
        self.h.rows()
    }

    pub fn transmitters(&self) -> usize {
        self.h.cols()
    }

    /// Channel row h_k of user k.
    pub fn row(&self, k: usize) -> &[FieldElement] {
        self.h.row(k)
    }

    /// Effective scalar gain h_k . v seen by user k for precoder v.
    pub fn gain(&self, k: usize, v: &[FieldElement]) -> FieldElement {
        self.field.dot(self.h.row(k), v)
    }

    /// One channel use: every user receives its row of H s.
    pub fn transmit_slot(&self, s: &[FieldElement]) -> Result<FieldVector> {
        self.h.mul_vec(&self.field, s)
    }
}
