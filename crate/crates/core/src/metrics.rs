//! Histogram, entropy and adjacent-pixel correlation.
//!
//! Correlations are `None` when either side of the pairs has zero variance;
//! degenerate images never report a number.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::image::ImageU8;

pub type Histogram = [u64; 256];

const CHANNELS: [&str; 3] = ["r", "g", "b"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Adjacency {
    Horizontal,
    Vertical,
}

impl Adjacency {
    fn tag(self) -> &'static str {
        match self {
            Adjacency::Horizontal => "h",
            Adjacency::Vertical => "v",
        }
    }
}

pub fn histogram(img: &ImageU8) -> [Histogram; 3] {
    let mut hist = [[0u64; 256]; 3];
    for px in img.data().chunks_exact(3) {
        for (h, &v) in hist.iter_mut().zip(px) {
            h[v as usize] += 1;
        }
    }
    hist
}

/// `−Σ p log2 p` over the nonzero bins.
pub fn shannon_entropy(counts: &Histogram) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let total = total as f64;
    let h = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>();
    // a single occupied bin yields -0.0
    Ok(h.max(0.0))
}

/// Pearson correlation of every pixel with its right (or lower) neighbour,
/// per channel.
pub fn adjacent_correlation(img: &ImageU8, dir: Adjacency) -> Result<[Option<f64>; 3]> {
    let (w, h) = (img.width(), img.height());
    let (dx, dy) = match dir {
        Adjacency::Horizontal => (1, 0),
        Adjacency::Vertical => (0, 1),
    };
    if w < 1 + dx || h < 1 + dy {
        return Err(Error::TooSmall);
    }
    let mut out = [None; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        let (mut n, mut sa, mut sb, mut saa, mut sbb, mut sab) =
            (0f64, 0f64, 0f64, 0f64, 0f64, 0f64);
        for y in 0..h - dy {
            for x in 0..w - dx {
                let a = img.pixel(x, y)[c] as f64;
                let b = img.pixel(x + dx, y + dy)[c] as f64;
                n += 1.0;
                sa += a;
                sb += b;
                saa += a * a;
                sbb += b * b;
                sab += a * b;
            }
        }
        // integer-valued sums are exact in f64 at these sizes
        let cov = n * sab - sa * sb;
        let va = n * saa - sa * sa;
        let vb = n * sbb - sb * sb;
        if va > 0.0 && vb > 0.0 {
            *slot = Some((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub pixels: usize,
    pub histograms: [Histogram; 3],
    pub entropy_bits: [f64; 3],
    pub correlation_h: [Option<f64>; 3],
    pub correlation_v: [Option<f64>; 3],
}

impl MetricsReport {
    pub fn measure(img: &ImageU8) -> Result<Self> {
        let histograms = histogram(img);
        let mut entropy_bits = [0.0; 3];
        for (e, h) in entropy_bits.iter_mut().zip(&histograms) {
            *e = shannon_entropy(h)?;
        }
        Ok(Self {
            pixels: img.pixel_count(),
            histograms,
            entropy_bits,
            correlation_h: adjacent_correlation(img, Adjacency::Horizontal)?,
            correlation_v: adjacent_correlation(img, Adjacency::Vertical)?,
        })
    }

    /// Flat `key=value` lines; histogram bins are comma separated.
    pub fn to_key_values(&self) -> String {
        let mut s = format!("pixels={}\n", self.pixels);
        for (c, name) in CHANNELS.iter().enumerate() {
            let _ = writeln!(s, "entropy_{name}={:.6}", self.entropy_bits[c]);
        }
        for (dir, corr) in [
            (Adjacency::Horizontal, &self.correlation_h),
            (Adjacency::Vertical, &self.correlation_v),
        ] {
            for (c, name) in CHANNELS.iter().enumerate() {
                let _ = writeln!(s, "corr_{}_{name}={}", dir.tag(), fmt_corr(corr[c]));
            }
        }
        for (c, name) in CHANNELS.iter().enumerate() {
            let bins: Vec<String> = self.histograms[c].iter().map(u64::to_string).collect();
            let _ = writeln!(s, "hist_{name}={}", bins.join(","));
        }
        s
    }
}

fn fmt_corr(c: Option<f64>) -> String {
    c.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"))
}

/// Aggregate over many images: entropy of the pooled histogram and mean
/// correlation over the images where it is defined.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetMetrics {
    pub images: usize,
    pub entropy_bits: [f64; 3],
    pub mean_correlation_h: [Option<f64>; 3],
    pub mean_correlation_v: [Option<f64>; 3],
    pub undefined_h: usize,
    pub undefined_v: usize,
}

impl DatasetMetrics {
    pub fn measure(images: &[ImageU8]) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut pooled = [[0u64; 256]; 3];
        let mut sums = [[0f64; 3]; 2];
        let mut counts = [[0usize; 3]; 2];
        let mut undefined = [0usize; 2];
        for img in images {
            for (p, h) in pooled.iter_mut().zip(histogram(img)) {
                for (a, b) in p.iter_mut().zip(h) {
                    *a += b;
                }
            }
            for (d, dir) in [Adjacency::Horizontal, Adjacency::Vertical]
                .into_iter()
                .enumerate()
            {
                for (c, r) in adjacent_correlation(img, dir)?.into_iter().enumerate() {
                    match r {
                        Some(r) => {
                            sums[d][c] += r;
                            counts[d][c] += 1;
                        }
                        None => undefined[d] += 1,
                    }
                }
            }
        }
        let mut entropy_bits = [0.0; 3];
        for (e, h) in entropy_bits.iter_mut().zip(&pooled) {
            *e = shannon_entropy(h)?;
        }
        let mean = |d: usize| {
            let mut m = [None; 3];
            for c in 0..3 {
                if counts[d][c] > 0 {
                    m[c] = Some(sums[d][c] / counts[d][c] as f64);
                }
            }
            m
        };
        Ok(Self {
            images: images.len(),
            entropy_bits,
            mean_correlation_h: mean(0),
            mean_correlation_v: mean(1),
            undefined_h: undefined[0],
            undefined_v: undefined[1],
        })
    }

    /// Mean over channels of the per-channel means, `None` if no channel is defined.
    pub fn overall(&self, dir: Adjacency) -> Option<f64> {
        let per_channel = match dir {
            Adjacency::Horizontal => &self.mean_correlation_h,
            Adjacency::Vertical => &self.mean_correlation_v,
        };
        let defined: Vec<f64> = per_channel.iter().flatten().copied().collect();
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    }

    pub fn to_key_values(&self) -> String {
        let mut s = format!("images={}\n", self.images);
        for (c, name) in CHANNELS.iter().enumerate() {
            let _ = writeln!(s, "entropy_{name}={:.6}", self.entropy_bits[c]);
        }
        for (dir, corr, undefined) in [
            (
                Adjacency::Horizontal,
                &self.mean_correlation_h,
                self.undefined_h,
            ),
            (
                Adjacency::Vertical,
                &self.mean_correlation_v,
                self.undefined_v,
            ),
        ] {
            for (c, name) in CHANNELS.iter().enumerate() {
                let _ = writeln!(s, "mean_corr_{}_{name}={}", dir.tag(), fmt_corr(corr[c]));
            }
            let _ = writeln!(s, "mean_corr_{}={}", dir.tag(), fmt_corr(self.overall(dir)));
            let _ = writeln!(s, "undefined_corr_{}={undefined}", dir.tag());
        }
        s
    }
}
