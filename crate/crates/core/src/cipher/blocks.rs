use crate::error::{Error, Result};
use crate::image::ImageU8;

/// Grid of `rows × cols` blocks of side `block`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockGrid {
    pub rows: usize,
    pub cols: usize,
    pub block: usize,
}

impl BlockGrid {
    pub fn for_image(img: &ImageU8, block: usize) -> Result<Self> {
        img.check_divisible(block)?;
        Ok(Self {
            rows: img.height() / block,
            cols: img.width() / block,
            block,
        })
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block_bytes(&self) -> usize {
        self.block * self.block * 3
    }
}

/// Copies block `(bi, bj)` of `img` into `out` as M×M×3 row-major bytes.
pub(crate) fn read_block(img: &ImageU8, block: usize, bi: usize, bj: usize, out: &mut [u8]) {
    let row_bytes = block * 3;
    let stride = img.width() * 3;
    let data = img.data();
    for r in 0..block {
        let src = (bi * block + r) * stride + bj * row_bytes;
        out[r * row_bytes..(r + 1) * row_bytes].copy_from_slice(&data[src..src + row_bytes]);
    }
}

pub(crate) fn write_block(img: &mut ImageU8, block: usize, bi: usize, bj: usize, src: &[u8]) {
    let row_bytes = block * 3;
    let stride = img.width() * 3;
    let data = img.data_mut();
    for r in 0..block {
        let dst = (bi * block + r) * stride + bj * row_bytes;
        data[dst..dst + row_bytes].copy_from_slice(&src[r * row_bytes..(r + 1) * row_bytes]);
    }
}

/// Splits the image into M×M×3 byte blocks in row-major block order.
pub fn split_blocks(img: &ImageU8, block: usize) -> Result<(Vec<Vec<u8>>, BlockGrid)> {
    let grid = BlockGrid::for_image(img, block)?;
    let mut blocks = Vec::with_capacity(grid.len());
    for bi in 0..grid.rows {
        for bj in 0..grid.cols {
            let mut buf = vec![0; grid.block_bytes()];
            read_block(img, block, bi, bj, &mut buf);
            blocks.push(buf);
        }
    }
    Ok((blocks, grid))
}

/// Inverse of [`split_blocks`].
pub fn merge_blocks(blocks: &[Vec<u8>], grid: BlockGrid) -> Result<ImageU8> {
    if blocks.len() != grid.len() {
        return Err(Error::CountMismatch {
            expected: grid.len(),
            got: blocks.len(),
        });
    }
    if let Some(bad) = blocks.iter().find(|b| b.len() != grid.block_bytes()) {
        return Err(Error::LengthMismatch {
            expected: grid.block_bytes(),
            got: bad.len(),
        });
    }
    let mut img = ImageU8::zeros(grid.cols * grid.block, grid.rows * grid.block);
    for (idx, b) in blocks.iter().enumerate() {
        write_block(&mut img, grid.block, idx / grid.cols, idx % grid.cols, b);
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> ImageU8 {
        ImageU8::new(w, h, (0..w * h * 3).map(|i| (i % 256) as u8).collect()).unwrap()
    }

    #[test]
    fn cifar_sized_image_has_64_blocks() {
        let (blocks, grid) = split_blocks(&ramp(32, 32), 4).unwrap();
        assert_eq!(blocks.len(), 64);
        assert_eq!((grid.rows, grid.cols), (8, 8));
    }

    #[test]
    fn whole_image_block() {
        let img = ramp(4, 4);
        let (blocks, _) = split_blocks(&img, 4).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0], img.data());
    }

    #[test]
    fn non_divisible_rejected() {
        let img = ImageU8::zeros(32, 30);
        assert!(matches!(
            split_blocks(&img, 4),
            Err(Error::Dimension {
                width: 32,
                height: 30,
                block: 4
            })
        ));
    }

    #[test]
    fn round_trip_non_square() {
        let img = ramp(12, 8);
        let (blocks, grid) = split_blocks(&img, 4).unwrap();
        assert_eq!(merge_blocks(&blocks, grid).unwrap(), img);
    }

    #[test]
    fn block_order_is_row_major() {
        let img = ramp(8, 4);
        let (blocks, _) = split_blocks(&img, 4).unwrap();
        // second block starts at pixel (4, 0)
        assert_eq!(&blocks[1][..3], &img.data()[12..15]);
    }

    #[test]
    fn wrong_count_rejected() {
        let (mut blocks, grid) = split_blocks(&ramp(8, 8), 4).unwrap();
        blocks.pop();
        assert!(matches!(
            merge_blocks(&blocks, grid),
            Err(Error::CountMismatch {
                expected: 4,
                got: 3
            })
        ));
    }
}
