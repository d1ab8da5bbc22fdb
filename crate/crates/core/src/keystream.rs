//! Keyed randomness shared by every scheme.
//!
//! All key material comes from one SplitMix64 stream per key. Draw order is
//! part of the key-file contract: changing it changes every ciphertext.

use rand::RngCore;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

use crate::error::{Error, Result};

/// SplitMix64 stream seeded directly with `seed` (state = seed).
pub fn stream(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// A validated permutation of `0..len`, stored together with its inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(len: usize) -> Self {
        let forward: Vec<usize> = (0..len).collect();
        Self {
            inverse: forward.clone(),
            forward,
        }
    }

    pub fn new(forward: Vec<usize>) -> Result<Self> {
        let len = forward.len();
        let mut inverse = vec![usize::MAX; len];
        for (i, &p) in forward.iter().enumerate() {
            if p >= len || inverse[p] != usize::MAX {
                return Err(Error::NotAPermutation { len });
            }
            inverse[p] = i;
        }
        Ok(Self { forward, inverse })
    }

    /// Fisher–Yates over the identity: for i = n-1 down to 1, swap(i, draw mod (i+1)).
    pub fn shuffled(len: usize, rng: &mut impl RngCore) -> Self {
        let mut forward: Vec<usize> = (0..len).collect();
        for i in (1..len).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            forward.swap(i, j);
        }
        Self::new(forward).expect("Fisher-Yates yields a permutation")
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    pub fn inverted(&self) -> Self {
        Self {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// `out[i] = input[perm[i]]`.
    pub fn gather_into<T: Copy>(&self, input: &[T], out: &mut [T]) {
        for (o, &src) in out.iter_mut().zip(&self.forward) {
            *o = input[src];
        }
    }
}
