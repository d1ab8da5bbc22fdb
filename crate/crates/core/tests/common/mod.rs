#![allow(dead_code)]

pub mod shapes;

use blockveil::probe::{ProbeModel, ProbeSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
/// Denominator floor for the relative error, only reached by exactly-zero
/// gradients (dead ReLU paths).
pub const FD_FLOOR: f64 = 1e-8;

/// Adds uniform noise to every parameter so no layer is trivially zero.
pub fn perturb(model: &mut ProbeModel, scale: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in model.params_mut() {
        *p += rng.random_range(-scale..scale);
    }
}

pub struct GradCheck {
    pub checked: usize,
    pub worst_relative: f64,
    pub worst_index: usize,
}

/// Central finite differences over every parameter, compared with the
/// analytic gradient.
pub fn gradient_check(model: &ProbeModel, set: &ProbeSet, batch: &[usize]) -> GradCheck {
    gradient_check_with_step(model, set, batch, FD_STEP)
}

pub fn gradient_check_with_step(
    model: &ProbeModel,
    set: &ProbeSet,
    batch: &[usize],
    step: f64,
) -> GradCheck {
    let (_, analytic) = model.loss_and_grad(set, batch).unwrap();
    let mut probe = model.clone();
    let mut worst = GradCheck {
        checked: 0,
        worst_relative: 0.0,
        worst_index: 0,
    };
    for (i, &a) in analytic.iter().enumerate() {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + step;
        let up = probe.loss(set, batch).unwrap();
        probe.params_mut()[i] = orig - step;
        let down = probe.loss(set, batch).unwrap();
        probe.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * step);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FD_FLOOR);
        if rel > worst.worst_relative {
            worst.worst_relative = rel;
            worst.worst_index = i;
        }
        worst.checked += 1;
    }
    worst
}
