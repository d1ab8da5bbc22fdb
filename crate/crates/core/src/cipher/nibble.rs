use crate::error::{Error, Result};
use crate::keystream::Permutation;

/// Six 4-bit planes of one M×M block.
///
/// Slot index is `c·M² + r·M + col` with channel order upper R, G, B then
/// lower R, G, B.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NibbleBlock {
    block: usize,
    values: Vec<u8>,
}

impl NibbleBlock {
    pub fn new(block: usize, values: Vec<u8>) -> Result<Self> {
        let slots = 6 * block * block;
        if values.len() != slots {
            return Err(Error::LengthMismatch {
                expected: slots,
                got: values.len(),
            });
        }
        if values.iter().any(|&v| v > 15) {
            return Err(Error::Config("nibble value out of range 0..=15".into()));
        }
        Ok(Self { block, values })
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }
}

pub(crate) fn split_into(block: usize, bytes: &[u8], out: &mut [u8]) {
    let area = block * block;
    for pos in 0..area {
        for k in 0..3 {
            let v = bytes[pos * 3 + k];
            out[k * area + pos] = v >> 4;
            out[(k + 3) * area + pos] = v & 0x0F;
        }
    }
}

pub(crate) fn merge_into(block: usize, nibbles: &[u8], out: &mut [u8]) {
    let area = block * block;
    for pos in 0..area {
        for k in 0..3 {
            out[pos * 3 + k] = (nibbles[k * area + pos] << 4) | nibbles[(k + 3) * area + pos];
        }
    }
}

/// XOR with 0xF is the 4-bit complement `15 − v`.
pub(crate) fn reverse_in_place(values: &mut [u8], mask: &[bool]) {
    for (v, &m) in values.iter_mut().zip(mask) {
        if m {
            *v ^= 0x0F;
        }
    }
}

/// Splits an M×M×3 byte block into its upper and lower nibble planes.
pub fn split_bitplanes(block: usize, bytes: &[u8]) -> Result<NibbleBlock> {
    let expected = block * block * 3;
    if bytes.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: bytes.len(),
        });
    }
    let mut values = vec![0; 6 * block * block];
    split_into(block, bytes, &mut values);
    Ok(NibbleBlock { block, values })
}

/// Recombines upper and lower planes into bytes; inverse of [`split_bitplanes`].
pub fn merge_bitplanes(nb: &NibbleBlock) -> Vec<u8> {
    let mut out = vec![0; nb.block * nb.block * 3];
    merge_into(nb.block, &nb.values, &mut out);
    out
}

/// `out[i] = mask[i] ? 15 − nb[i] : nb[i]`.
pub fn apply_reversal(nb: &NibbleBlock, mask: &[bool]) -> Result<NibbleBlock> {
    if mask.len() != nb.values.len() {
        return Err(Error::LengthMismatch {
            expected: nb.values.len(),
            got: mask.len(),
        });
    }
    let mut values = nb.values.clone();
    reverse_in_place(&mut values, mask);
    Ok(NibbleBlock {
        block: nb.block,
        values,
    })
}

/// `out[i] = nb[perm[i]]`.
pub fn apply_permutation(nb: &NibbleBlock, perm: &[usize]) -> Result<NibbleBlock> {
    if perm.len() != nb.values.len() {
        return Err(Error::LengthMismatch {
            expected: nb.values.len(),
            got: perm.len(),
        });
    }
    let perm = Permutation::new(perm.to_vec())?;
    let mut values = vec![0; nb.values.len()];
    perm.gather_into(&nb.values, &mut values);
    Ok(NibbleBlock {
        block: nb.block,
        values,
    })
}
