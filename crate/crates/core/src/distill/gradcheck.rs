//! Finite-difference verification of the analytic joint-loss gradient.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::tags::NUM_TAGS;

use super::{joint_loss_from_logits, joint_loss_gradient, TagDistribution};

/// Step used for central differences.
pub const FD_STEP: f64 = 1e-5;

/// Denominator floor for [`relative_error`].
const REL_FLOOR: f64 = 1e-8;

/// Central-difference gradient of the joint loss total.
pub fn central_difference(
    logits: ArrayView2<f64>,
    teach: &TagDistribution,
    weak_tags: &[usize],
    h: f64,
) -> Result<Array2<f64>> {
    let mut grad = Array2::zeros(logits.dim());
    let mut probe = logits.to_owned();
    for idx in ndarray::indices(logits.dim()) {
        let orig = probe[idx];
        probe[idx] = orig + h;
        let plus = joint_loss_from_logits(probe.view(), teach, weak_tags)?.total;
        probe[idx] = orig - h;
        let minus = joint_loss_from_logits(probe.view(), teach, weak_tags)?.total;
        probe[idx] = orig;
        grad[idx] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// `|a - b| / max(|a|, |b|)`, with the denominator floored at 1e-8.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub instances: usize,
    pub entries: usize,
    pub max_relative_error: f64,
}

/// Compares analytic and numeric gradients on random instances of 3 to 10
/// tokens over the full tag set.
pub fn gradient_check(instances: usize, seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport {
        instances,
        entries: 0,
        max_relative_error: 0.0,
    };
    for _ in 0..instances {
        let tokens = rng.gen_range(3..=10);
        let logits = Array2::from_shape_fn((tokens, NUM_TAGS), |_| rng.gen_range(-3.0..3.0));
        let teacher_logits =
            Array2::from_shape_fn((tokens, NUM_TAGS), |_| rng.gen_range(-3.0..3.0));
        let teach = TagDistribution::from_logits(teacher_logits.view());
        let weak: Vec<usize> = (0..tokens).map(|_| rng.gen_range(0..NUM_TAGS)).collect();

        let analytic = joint_loss_gradient(logits.view(), &teach, &weak)?;
        let numeric = central_difference(logits.view(), &teach, &weak, FD_STEP)?;
        for (a, n) in analytic.iter().zip(numeric.iter()) {
            report.max_relative_error = report.max_relative_error.max(relative_error(*a, *n));
            report.entries += 1;
        }
    }
    Ok(report)
}
