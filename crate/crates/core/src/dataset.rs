//! CIFAR binary batches and binary PPM export.
//!
//! CIFAR-10 records are 1 label byte followed by 1024 R, 1024 G and 1024 B
//! bytes (planar, row-major). CIFAR-100 records carry a coarse and a fine
//! label byte before the same 3072 pixel bytes.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::ImageU8;

pub const CIFAR_SIDE: usize = 32;
const PLANE: usize = CIFAR_SIDE * CIFAR_SIDE;
const PIXEL_BYTES: usize = 3 * PLANE;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CifarFormat {
    Cifar10,
    Cifar100,
}

impl CifarFormat {
    pub fn header_len(self) -> usize {
        match self {
            CifarFormat::Cifar10 => 1,
            CifarFormat::Cifar100 => 2,
        }
    }

    pub fn record_len(self) -> usize {
        self.header_len() + PIXEL_BYTES
    }

    pub fn classes(self) -> usize {
        match self {
            CifarFormat::Cifar10 => 10,
            CifarFormat::Cifar100 => 100,
        }
    }

    fn for_classes(classes: usize) -> Result<Self> {
        match classes {
            10 => Ok(CifarFormat::Cifar10),
            100 => Ok(CifarFormat::Cifar100),
            c => Err(Error::Config(format!(
                "CIFAR datasets have 10 or 100 classes, not {c}"
            ))),
        }
    }
}

/// Images with class labels. Labels are never encrypted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledDataset {
    pub images: Vec<ImageU8>,
    pub labels: Vec<u8>,
    pub num_classes: usize,
}

impl LabeledDataset {
    pub fn new(images: Vec<ImageU8>, labels: Vec<u8>, num_classes: usize) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: images.len(),
                got: labels.len(),
            });
        }
        if let Some((index, &label)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l as usize >= num_classes)
        {
            return Err(Error::BadLabel {
                index,
                label,
                classes: num_classes,
            });
        }
        Ok(Self {
            images,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Records `start..start + len`, clamped to the dataset.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        let start = start.min(self.len());
        let end = (start + len).min(self.len());
        Self {
            images: self.images[start..end].to_vec(),
            labels: self.labels[start..end].to_vec(),
            num_classes: self.num_classes,
        }
    }

    /// Applies `f` to every image, keeping labels and record order.
    pub fn map_images<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&ImageU8) -> Result<ImageU8> + Sync + Send,
    {
        let images = self.images.par_iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            images,
            labels: self.labels.clone(),
            num_classes: self.num_classes,
        })
    }
}

fn planar_to_image(pixels: &[u8]) -> ImageU8 {
    let mut data = vec![0u8; PIXEL_BYTES];
    for i in 0..PLANE {
        for c in 0..3 {
            data[i * 3 + c] = pixels[c * PLANE + i];
        }
    }
    ImageU8::new(CIFAR_SIDE, CIFAR_SIDE, data).expect("32x32x3 buffer")
}

fn image_to_planar(img: &ImageU8, out: &mut [u8]) {
    let data = img.data();
    for i in 0..PLANE {
        for c in 0..3 {
            out[c * PLANE + i] = data[i * 3 + c];
        }
    }
}

fn check_cifar_image(img: &ImageU8) -> Result<()> {
    if img.width() != CIFAR_SIDE || img.height() != CIFAR_SIDE {
        return Err(Error::BadDims {
            width: img.width(),
            height: img.height(),
        });
    }
    Ok(())
}

fn records(bytes: &[u8], format: CifarFormat) -> Result<std::slice::ChunksExact<'_, u8>> {
    if !bytes.len().is_multiple_of(format.record_len()) {
        return Err(Error::BadLength {
            len: bytes.len(),
            record: format.record_len(),
        });
    }
    Ok(bytes.chunks_exact(format.record_len()))
}

/// Parses an in-memory CIFAR batch. For CIFAR-100 the coarse label is dropped.
pub fn parse_cifar(bytes: &[u8], format: CifarFormat) -> Result<LabeledDataset> {
    let label_at = format.header_len() - 1;
    let mut images = Vec::with_capacity(bytes.len() / format.record_len());
    let mut labels = Vec::with_capacity(images.capacity());
    for (index, rec) in records(bytes, format)?.enumerate() {
        let label = rec[label_at];
        if label as usize >= format.classes() {
            return Err(Error::BadLabel {
                index,
                label,
                classes: format.classes(),
            });
        }
        labels.push(label);
        images.push(planar_to_image(&rec[format.header_len()..]));
    }
    Ok(LabeledDataset {
        images,
        labels,
        num_classes: format.classes(),
    })
}

pub fn read_cifar(path: impl AsRef<Path>, format: CifarFormat) -> Result<LabeledDataset> {
    parse_cifar(&fs::read(path)?, format)
}

pub fn read_cifar10(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    read_cifar(path, CifarFormat::Cifar10)
}

pub fn read_cifar100(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    read_cifar(path, CifarFormat::Cifar100)
}

/// Serializes in the layout matching `num_classes`. CIFAR-100 coarse labels
/// are not kept in memory and are written as 0.
pub fn encode_cifar(ds: &LabeledDataset) -> Result<Vec<u8>> {
    let format = CifarFormat::for_classes(ds.num_classes)?;
    let mut out = vec![0u8; ds.len() * format.record_len()];
    for ((img, &label), rec) in ds
        .images
        .iter()
        .zip(&ds.labels)
        .zip(out.chunks_exact_mut(format.record_len()))
    {
        check_cifar_image(img)?;
        rec[format.header_len() - 1] = label;
        image_to_planar(img, &mut rec[format.header_len()..]);
    }
    Ok(out)
}

pub fn write_cifar(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_cifar(ds)?)?;
    Ok(())
}

/// Rewrites the pixels of every record in a raw CIFAR batch through `f`,
/// copying label bytes verbatim. Output record order equals input order.
pub fn transform_cifar_bytes<F>(bytes: &[u8], format: CifarFormat, f: F) -> Result<Vec<u8>>
where
    F: Fn(&ImageU8) -> Result<ImageU8> + Sync + Send,
{
    // validates length and labels up front
    parse_cifar(bytes, format)?;
    let header = format.header_len();
    let mut out = bytes.to_vec();
    out.par_chunks_exact_mut(format.record_len())
        .try_for_each(|rec| -> Result<()> {
            let img = f(&planar_to_image(&rec[header..]))?;
            check_cifar_image(&img)?;
            image_to_planar(&img, &mut rec[header..]);
            Ok(())
        })?;
    Ok(out)
}

pub fn write_ppm<W: Write>(img: &ImageU8, mut w: W) -> io::Result<()> {
    write!(w, "P6\n{} {}\n255\n", img.width(), img.height())?;
    w.write_all(img.data())?;
    w.flush()
}

/// Writes a binary P6 file: `P6\n<w> <h>\n255\n` then interleaved RGB bytes.
pub fn export_ppm(img: &ImageU8, path: impl AsRef<Path>) -> Result<()> {
    let file = io::BufWriter::new(fs::File::create(path)?);
    write_ppm(img, file)?;
    Ok(())
}

/// Parses a binary P6 image with maxval 255. Header comments are allowed.
pub fn parse_ppm(bytes: &[u8]) -> Result<ImageU8> {
    let mut pos = 0;
    let mut token = || -> Result<&[u8]> {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(Error::Ppm("truncated header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            pos += 1;
        }
        Ok(&bytes[start..pos])
    };
    if token()? != b"P6" {
        return Err(Error::Ppm("only binary P6 is supported".into()));
    }
    let mut number = |what: &str| -> Result<usize> {
        std::str::from_utf8(token()?)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Ppm(format!("bad {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    if number("maxval")? != 255 {
        return Err(Error::Ppm("only maxval 255 is supported".into()));
    }
    // exactly one whitespace byte separates the header from the raster
    let raster = &bytes[(pos + 1).min(bytes.len())..];
    let expected = width * height * 3;
    if raster.len() < expected {
        return Err(Error::Ppm(format!(
            "raster holds {} bytes, expected {expected}",
            raster.len()
        )));
    }
    ImageU8::new(width, height, raster[..expected].to_vec())
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<ImageU8> {
    parse_ppm(&fs::read(path)?)
}

/// Tiles images row-major into `cols` columns; missing cells stay black.
pub fn tile_grid(images: &[ImageU8], cols: usize) -> Result<ImageU8> {
    let first = images
        .first()
        .ok_or_else(|| Error::Config("no images to tile".into()))?;
    if cols == 0 {
        return Err(Error::Config("column count must be positive".into()));
    }
    let (w, h) = (first.width(), first.height());
    if images.iter().any(|i| i.width() != w || i.height() != h) {
        return Err(Error::DimsMismatch);
    }
    let rows = images.len().div_ceil(cols);
    let mut sheet = ImageU8::zeros(cols * w, rows * h);
    let stride = cols * w * 3;
    for (n, img) in images.iter().enumerate() {
        let (x0, y0) = ((n % cols) * w, (n / cols) * h);
        for y in 0..h {
            let dst = (y0 + y) * stride + x0 * 3;
            sheet.data_mut()[dst..dst + w * 3]
                .copy_from_slice(&img.data()[y * w * 3..(y + 1) * w * 3]);
        }
    }
    Ok(sheet)
}

pub fn export_grid(images: &[ImageU8], cols: usize, path: impl AsRef<Path>) -> Result<()> {
    export_ppm(&tile_grid(images, cols)?, path)
}
