use rand::RngCore;

use crate::error::{Error, Result};
use crate::keystream::{self, Permutation};

/// Key of the block-wise shuffling cipher.
///
/// One reversal mask and one slot permutation over the `6·M²` nibble slots of
/// a block. The same pair is applied to every block of every image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncryptionKey {
    seed: u64,
    block: usize,
    mask: Vec<bool>,
    perm: Permutation,
}

impl EncryptionKey {
    /// Derives the key from `seed`: `6·M²` mask draws first (lowest bit of each
    /// draw), then the Fisher–Yates shuffle, all from one SplitMix64 stream.
    pub fn derive(seed: u64, block: usize) -> Result<Self> {
        if block == 0 {
            return Err(Error::Config("block size must be positive".into()));
        }
        let slots = slot_count(block);
        let mut rng = keystream::stream(seed);
        let mask = (0..slots).map(|_| rng.next_u64() & 1 == 1).collect();
        let perm = Permutation::shuffled(slots, &mut rng);
        Ok(Self {
            seed,
            block,
            mask,
            perm,
        })
    }

    /// Builds a key from explicit parts. `seed` is only carried along; it is not
    /// checked against the mask or the permutation.
    pub fn from_parts(seed: u64, block: usize, mask: Vec<bool>, perm: Vec<usize>) -> Result<Self> {
        if block == 0 {
            return Err(Error::Config("block size must be positive".into()));
        }
        let slots = slot_count(block);
        if mask.len() != slots {
            return Err(Error::LengthMismatch {
                expected: slots,
                got: mask.len(),
            });
        }
        if perm.len() != slots {
            return Err(Error::LengthMismatch {
                expected: slots,
                got: perm.len(),
            });
        }
        Ok(Self {
            seed,
            block,
            mask,
            perm: Permutation::new(perm)?,
        })
    }

    /// Mask all-false, identity permutation.
    pub fn identity(block: usize) -> Result<Self> {
        let slots = slot_count(block);
        Self::from_parts(0, block, vec![false; slots], (0..slots).collect())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn perm(&self) -> &[usize] {
        self.perm.forward()
    }

    pub fn inv_perm(&self) -> &[usize] {
        self.perm.inverse()
    }

    pub(crate) fn permutation(&self) -> &Permutation {
        &self.perm
    }

    pub fn slots(&self) -> usize {
        self.mask.len()
    }
}

pub(crate) fn slot_count(block: usize) -> usize {
    6 * block * block
}
