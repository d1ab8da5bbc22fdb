//! Synthetic 10-class shape images: class is fixed by geometry, colours and
//! placement are random, so only spatial structure identifies the class.

use blockveil::dataset::LabeledDataset;
use blockveil::ImageU8;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SIDE: usize = 32;

fn inside(class: usize, dx: f64, dy: f64, r: f64) -> bool {
    let (ax, ay) = (dx.abs(), dy.abs());
    let d = (dx * dx + dy * dy).sqrt();
    let t = r * 0.28;
    match class {
        0 => d <= r,
        1 => ax <= r * 0.8 && ay <= r * 0.8,
        2 => dy <= r * 0.7 && dy >= -r * 0.9 + 2.0 * ax * 0.9,
        3 => d <= r && d >= r * 0.55,
        4 => ax <= r && (ay <= t || (ay - r * 0.7).abs() <= t),
        5 => ay <= r && (ax <= t || (ax - r * 0.7).abs() <= t),
        6 => (dx - dy).abs() <= t * 1.4 && ax <= r && ay <= r,
        7 => (ax <= t && ay <= r) || (ay <= t && ax <= r),
        8 => ((dx - dy).abs() <= t * 1.4 || (dx + dy).abs() <= t * 1.4) && d <= r,
        _ => {
            ((dx + r * 0.5).powi(2) + dy * dy).sqrt() <= r * 0.4
                || ((dx - r * 0.5).powi(2) + dy * dy).sqrt() <= r * 0.4
        }
    }
}

pub fn render(class: usize, rng: &mut ChaCha8Rng) -> ImageU8 {
    let rgb = |rng: &mut ChaCha8Rng| {
        [
            rng.random::<f64>() * 255.0,
            rng.random::<f64>() * 255.0,
            rng.random::<f64>() * 255.0,
        ]
    };
    let bg0 = rgb(rng);
    let bg1 = rgb(rng);
    let mut fg = rgb(rng);
    // keep the shape visible against the background
    while fg.iter().zip(&bg0).map(|(a, b)| (a - b).abs()).sum::<f64>() < 150.0 {
        fg = rgb(rng);
    }
    let r = rng.random_range(7.0..12.0);
    let cx = rng.random_range(r..SIDE as f64 - r);
    let cy = rng.random_range(r..SIDE as f64 - r);
    let mut img = ImageU8::zeros(SIDE, SIDE);
    for y in 0..SIDE {
        for x in 0..SIDE {
            let t = (x + y) as f64 / (2.0 * SIDE as f64);
            let base = if inside(class, x as f64 + 0.5 - cx, y as f64 + 0.5 - cy, r) {
                fg
            } else {
                [0, 1, 2].map(|c| bg0[c] * (1.0 - t) + bg1[c] * t)
            };
            let px = base.map(|v| (v + rng.random_range(-12.0..12.0)).clamp(0.0, 255.0) as u8);
            img.set_pixel(x, y, px);
        }
    }
    img
}

pub fn dataset(n: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let class = rng.random_range(0..10);
        images.push(render(class, &mut rng));
        labels.push(class as u8);
    }
    LabeledDataset::new(images, labels, 10).unwrap()
}
