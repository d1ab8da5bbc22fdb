//! Block-wise pixel shuffling cipher.
//!
//! Each M×M block is split into six 4-bit planes, selected slots are
//! complemented, all `6·M²` slots are shuffled by one keyed permutation, and
//! the planes are recombined into bytes. Every block is processed with the
//! same key, so the ciphertext of a block depends only on that block.

mod blocks;
mod key;
mod nibble;

pub use blocks::{merge_blocks, split_blocks, BlockGrid};
pub use key::EncryptionKey;
pub use nibble::{
    apply_permutation, apply_reversal, merge_bitplanes, split_bitplanes, NibbleBlock,
};

use crate::error::Result;
use crate::image::ImageU8;

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Backward,
}

fn transform(img: &ImageU8, key: &EncryptionKey, dir: Direction) -> Result<ImageU8> {
    let m = key.block();
    let grid = BlockGrid::for_image(img, m)?;
    let slots = key.slots();
    let mut bytes = vec![0u8; grid.block_bytes()];
    let mut planes = vec![0u8; slots];
    let mut shuffled = vec![0u8; slots];
    let mut out = ImageU8::zeros(img.width(), img.height());
    let inverse = match dir {
        Direction::Forward => None,
        Direction::Backward => Some(key.permutation().inverted()),
    };

    for bi in 0..grid.rows {
        for bj in 0..grid.cols {
            blocks::read_block(img, m, bi, bj, &mut bytes);
            nibble::split_into(m, &bytes, &mut planes);
            match dir {
                Direction::Forward => {
                    nibble::reverse_in_place(&mut planes, key.mask());
                    key.permutation().gather_into(&planes, &mut shuffled);
                }
                Direction::Backward => {
                    let inverse = inverse.as_ref().expect("inverse computed for decryption");
                    inverse.gather_into(&planes, &mut shuffled);
                    nibble::reverse_in_place(&mut shuffled, key.mask());
                }
            }
            nibble::merge_into(m, &shuffled, &mut bytes);
            blocks::write_block(&mut out, m, bi, bj, &bytes);
        }
    }
    Ok(out)
}

/// Encrypts every block with the key's mask and permutation.
pub fn encrypt_image(img: &ImageU8, key: &EncryptionKey) -> Result<ImageU8> {
    transform(img, key, Direction::Forward)
}

/// Exact inverse of [`encrypt_image`].
pub fn decrypt_image(img: &ImageU8, key: &EncryptionKey) -> Result<ImageU8> {
    transform(img, key, Direction::Backward)
}
