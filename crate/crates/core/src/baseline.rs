//! Comparison schemes: a naive per-block pixel shuffle and a cat-map scrambler.

use rand::RngCore;

use crate::cipher::BlockGrid;
use crate::error::{Error, Result};
use crate::image::ImageU8;
use crate::keystream::{self, Permutation};

pub const DEFAULT_CATMAP_ROUNDS: u32 = 5;

/// Spatial permutation of the M² pixel positions inside a block. RGB triples
/// move together, so per-block colour content is untouched.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NaiveShuffleKey {
    seed: u64,
    block: usize,
    pos_perm: Permutation,
}

impl NaiveShuffleKey {
    pub fn derive(seed: u64, block: usize) -> Result<Self> {
        if block == 0 {
            return Err(Error::Config("block size must be positive".into()));
        }
        let pos_perm = Permutation::shuffled(block * block, &mut keystream::stream(seed));
        Ok(Self {
            seed,
            block,
            pos_perm,
        })
    }

    pub fn from_parts(seed: u64, block: usize, pos_perm: Vec<usize>) -> Result<Self> {
        if pos_perm.len() != block * block {
            return Err(Error::LengthMismatch {
                expected: block * block,
                got: pos_perm.len(),
            });
        }
        Ok(Self {
            seed,
            block,
            pos_perm: Permutation::new(pos_perm)?,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn pos_perm(&self) -> &[usize] {
        self.pos_perm.forward()
    }
}

fn shuffle_positions(img: &ImageU8, block: usize, perm: &[usize]) -> Result<ImageU8> {
    let grid = BlockGrid::for_image(img, block)?;
    let mut out = ImageU8::zeros(img.width(), img.height());
    for bi in 0..grid.rows {
        for bj in 0..grid.cols {
            let (x0, y0) = (bj * block, bi * block);
            for (s, &src) in perm.iter().enumerate() {
                let px = img.pixel(x0 + src % block, y0 + src / block);
                out.set_pixel(x0 + s % block, y0 + s / block, px);
            }
        }
    }
    Ok(out)
}

/// `out[s] = in[pos_perm[s]]` within every block.
pub fn naive_block_shuffle(img: &ImageU8, key: &NaiveShuffleKey) -> Result<ImageU8> {
    shuffle_positions(img, key.block, key.pos_perm.forward())
}

pub fn naive_block_unshuffle(img: &ImageU8, key: &NaiveShuffleKey) -> Result<ImageU8> {
    shuffle_positions(img, key.block, key.pos_perm.inverse())
}

/// Generalized cat map with unimodular matrix `[[1, p], [q, pq + 1]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatMapKey {
    seed: u64,
    size: usize,
    p: usize,
    q: usize,
    rounds: u32,
    xor_diffusion: bool,
}

impl CatMapKey {
    /// Draws `p` and `q` as `(draw mod (N − 1)) + 1` from the seed's stream.
    /// When diffusion is on, the same stream continues as the XOR keystream.
    pub fn derive(seed: u64, size: usize, rounds: u32, xor_diffusion: bool) -> Result<Self> {
        if size < 2 {
            return Err(Error::Config("cat map grid must be at least 2x2".into()));
        }
        let mut rng = keystream::stream(seed);
        let range = size as u64 - 1;
        let p = (rng.next_u64() % range + 1) as usize;
        let q = (rng.next_u64() % range + 1) as usize;
        Ok(Self {
            seed,
            size,
            p,
            q,
            rounds,
            xor_diffusion,
        })
    }

    pub fn with_params(size: usize, p: usize, q: usize, rounds: u32) -> Result<Self> {
        if size < 2 || p == 0 || q == 0 || p >= size || q >= size {
            return Err(Error::Config(format!(
                "cat map parameters p={p}, q={q} must lie in [1, {}]",
                size.saturating_sub(1)
            )));
        }
        Ok(Self {
            seed: 0,
            size,
            p,
            q,
            rounds,
            xor_diffusion: false,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn rounds(&self) -> u32 {
        self.rounds
    }

    pub fn xor_diffusion(&self) -> bool {
        self.xor_diffusion
    }

    // Continues the stream after the p, q draws; little-endian bytes of each draw.
    fn keystream(&self, len: usize) -> Vec<u8> {
        let mut rng = keystream::stream(self.seed);
        rng.next_u64();
        rng.next_u64();
        let mut bytes = vec![0; len];
        for chunk in bytes.chunks_mut(8) {
            let draw = rng.next_u64().to_le_bytes();
            chunk.copy_from_slice(&draw[..chunk.len()]);
        }
        bytes
    }

    fn check(&self, img: &ImageU8) -> Result<()> {
        if img.width() != img.height() {
            return Err(Error::NotSquare {
                width: img.width(),
                height: img.height(),
            });
        }
        if img.width() != self.size {
            return Err(Error::Config(format!(
                "cat map key is for {0}x{0} images, got {1}x{1}",
                self.size,
                img.width()
            )));
        }
        Ok(())
    }
}

/// One forward step: `x' = (x + p·y) mod N`, `y' = (q·x + (pq + 1)·y) mod N`.
pub fn catmap_step(x: usize, y: usize, p: usize, q: usize, n: usize) -> (usize, usize) {
    let (x, y, p, q, n) = (x as u64, y as u64, p as u64, q as u64, n as u64);
    let nx = (x + p * y) % n;
    let ny = (q * x + (p * q + 1) * y) % n;
    (nx as usize, ny as usize)
}

/// Inverse step: `x = ((pq + 1)·x' − p·y') mod N`, `y = (−q·x' + y') mod N`.
pub fn catmap_step_inverse(x: usize, y: usize, p: usize, q: usize, n: usize) -> (usize, usize) {
    let (x, y, p, q, n) = (x as u64, y as u64, (p % n) as u64, (q % n) as u64, n as u64);
    let a = ((p * q + 1) % n) * x % n;
    let b = p * y % n;
    let px = (a + n - b) % n;
    let py = (y + n - q * x % n) % n;
    (px as usize, py as usize)
}

/// Maps each destination index to its source index after `rounds` forward steps.
fn source_table(key: &CatMapKey) -> Vec<usize> {
    let n = key.size;
    let mut src = vec![0usize; n * n];
    for y in 0..n {
        for x in 0..n {
            let (mut cx, mut cy) = (x, y);
            for _ in 0..key.rounds {
                (cx, cy) = catmap_step(cx, cy, key.p, key.q, n);
            }
            src[cy * n + cx] = y * n + x;
        }
    }
    src
}

/// Applies the cat map `rounds` times to pixel positions (x = column, y = row),
/// then optionally XORs every byte with the keystream.
pub fn catmap_encrypt(img: &ImageU8, key: &CatMapKey) -> Result<ImageU8> {
    key.check(img)?;
    let src = source_table(key);
    let mut out = vec![0u8; img.data().len()];
    for (dst, &s) in src.iter().enumerate() {
        out[dst * 3..dst * 3 + 3].copy_from_slice(&img.data()[s * 3..s * 3 + 3]);
    }
    if key.xor_diffusion {
        for (b, k) in out.iter_mut().zip(key.keystream(img.data().len())) {
            *b ^= k;
        }
    }
    ImageU8::new(img.width(), img.height(), out)
}

/// Undoes the XOR, then walks every position back `rounds` inverse steps.
pub fn catmap_decrypt(img: &ImageU8, key: &CatMapKey) -> Result<ImageU8> {
    key.check(img)?;
    let n = key.size;
    let mut data = img.data().to_vec();
    if key.xor_diffusion {
        let stream = key.keystream(data.len());
        for (b, k) in data.iter_mut().zip(stream) {
            *b ^= k;
        }
    }
    let mut out = vec![0u8; data.len()];
    for y in 0..n {
        for x in 0..n {
            let (mut cx, mut cy) = (x, y);
            for _ in 0..key.rounds {
                (cx, cy) = catmap_step_inverse(cx, cy, key.p, key.q, n);
            }
            let (dst, s) = ((cy * n + cx) * 3, (y * n + x) * 3);
            out[dst..dst + 3].copy_from_slice(&data[s..s + 3]);
        }
    }
    ImageU8::new(n, n, out)
}
