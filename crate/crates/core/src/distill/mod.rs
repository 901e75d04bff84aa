//! Teacher-student objective for a token tagger.
//!
//! Per sentence the loss is the mean squared difference between the
//! teacher's and the student's tag distributions (averaged over tokens
//! and tags) plus the mean negative log-likelihood the student assigns to
//! the weak labels. A batch averages the per-sentence values.
//!
//! The student here is a linear-softmax tagger over fixed token features,
//! small enough to train with full-batch gradient descent and to check
//! against finite differences.

mod gradcheck;
mod student;
mod teacher;

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

pub use gradcheck::{central_difference, gradient_check, relative_error, GradCheckReport};
pub use student::{separable_fixture, train_toy_student, ToyStudent, TrainingSentence};
pub use teacher::{parse_teacher, read_teacher};

/// Student probabilities are clamped to this floor before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Per-token rows must sum to one within this tolerance.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Per-token probability distributions over the tag set (`tokens × tags`).
#[derive(Debug, Clone, PartialEq)]
pub struct TagDistribution(Array2<f64>);

impl TagDistribution {
    pub fn new(probs: Array2<f64>) -> Result<Self> {
        if probs.ncols() == 0 {
            return Err(Error::Shape("tag distribution has no tags".into()));
        }
        for (t, row) in probs.rows().into_iter().enumerate() {
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::Invalid(format!(
                    "token {t}: negative or non-finite probability"
                )));
            }
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(Error::Invalid(format!(
                    "token {t}: probabilities sum to {sum}"
                )));
            }
        }
        Ok(TagDistribution(probs))
    }

    /// Row-wise softmax of `logits`.
    pub fn from_logits(logits: ArrayView2<f64>) -> Self {
        TagDistribution(softmax_rows(logits))
    }

    /// One-hot rows at the given tag indices.
    pub fn one_hot(tags: &[usize], num_tags: usize) -> Result<Self> {
        let mut probs = Array2::zeros((tags.len(), num_tags));
        for (t, &tag) in tags.iter().enumerate() {
            if tag >= num_tags {
                return Err(Error::TagOutOfRange {
                    index: tag,
                    size: num_tags,
                });
            }
            probs[[t, tag]] = 1.0;
        }
        Ok(TagDistribution(probs))
    }

    pub fn probs(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn tokens(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_tags(&self) -> usize {
        self.0.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub mse: f64,
    pub nll: f64,
    pub total: f64,
}

impl LossBreakdown {
    fn new(mse: f64, nll: f64) -> Self {
        LossBreakdown {
            mse,
            nll,
            total: mse + nll,
        }
    }

    /// Component-wise mean, summed in slice order.
    pub fn mean(parts: &[LossBreakdown]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Shape("empty batch".into()));
        }
        let n = parts.len() as f64;
        let mse = parts.iter().map(|p| p.mse).sum::<f64>() / n;
        let nll = parts.iter().map(|p| p.nll).sum::<f64>() / n;
        Ok(LossBreakdown::new(mse, nll))
    }
}

pub fn softmax_rows(logits: ArrayView2<f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

fn check_same_shape(a: &TagDistribution, b: &TagDistribution) -> Result<()> {
    if a.0.dim() != b.0.dim() {
        return Err(Error::Shape(format!(
            "distributions have shapes {:?} and {:?}",
            a.0.dim(),
            b.0.dim()
        )));
    }
    Ok(())
}

fn check_weak_tags(stud: &TagDistribution, weak_tags: &[usize]) -> Result<()> {
    if weak_tags.len() != stud.tokens() {
        return Err(Error::Shape(format!(
            "{} weak tags for {} tokens",
            weak_tags.len(),
            stud.tokens()
        )));
    }
    if let Some(&index) = weak_tags.iter().find(|&&t| t >= stud.num_tags()) {
        return Err(Error::TagOutOfRange {
            index,
            size: stud.num_tags(),
        });
    }
    Ok(())
}

/// Mean over tokens and tags of the squared difference.
pub fn mse_loss(teach: &TagDistribution, stud: &TagDistribution) -> Result<f64> {
    check_same_shape(teach, stud)?;
    if teach.0.is_empty() {
        return Ok(0.0);
    }
    let diff = &teach.0 - &stud.0;
    Ok(diff.mapv(|d| d * d).sum() / diff.len() as f64)
}

/// Mean over tokens of `-ln p(weak tag)`.
pub fn nll_loss(stud: &TagDistribution, weak_tags: &[usize]) -> Result<f64> {
    check_weak_tags(stud, weak_tags)?;
    if weak_tags.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = weak_tags
        .iter()
        .enumerate()
        .map(|(t, &y)| -stud.0[[t, y]].max(PROB_FLOOR).ln())
        .sum();
    Ok(sum / weak_tags.len() as f64)
}

pub fn joint_loss(
    teach: &TagDistribution,
    stud: &TagDistribution,
    weak_tags: &[usize],
) -> Result<LossBreakdown> {
    Ok(LossBreakdown::new(
        mse_loss(teach, stud)?,
        nll_loss(stud, weak_tags)?,
    ))
}

/// Joint loss of the student distribution `softmax(logits)`.
pub fn joint_loss_from_logits(
    logits: ArrayView2<f64>,
    teach: &TagDistribution,
    weak_tags: &[usize],
) -> Result<LossBreakdown> {
    joint_loss(teach, &TagDistribution::from_logits(logits), weak_tags)
}

/// Gradient of the sentence's joint loss with respect to the student
/// logits (`tokens × tags`).
pub fn joint_loss_gradient(
    logits: ArrayView2<f64>,
    teach: &TagDistribution,
    weak_tags: &[usize],
) -> Result<Array2<f64>> {
    let stud = TagDistribution::from_logits(logits);
    check_same_shape(teach, &stud)?;
    check_weak_tags(&stud, weak_tags)?;
    let (tokens, tags) = stud.0.dim();
    let mut grad = Array2::zeros((tokens, tags));
    if tokens == 0 {
        return Ok(grad);
    }
    let mse_scale = 2.0 / (tokens * tags) as f64;
    let nll_scale = 1.0 / tokens as f64;
    for t in 0..tokens {
        let p = stud.0.row(t);
        let q = teach.0.row(t);
        // dMSE/dp, pushed through the softmax Jacobian p_k (δ_kc - p_c)
        let g: Vec<f64> = p
            .iter()
            .zip(q.iter())
            .map(|(p, q)| mse_scale * (p - q))
            .collect();
        let g_dot_p: f64 = g.iter().zip(p.iter()).map(|(g, p)| g * p).sum();
        let y = weak_tags[t];
        let nll_active = p[y] > PROB_FLOOR;
        for k in 0..tags {
            let mut d = p[k] * (g[k] - g_dot_p);
            if nll_active {
                let indicator = if k == y { 1.0 } else { 0.0 };
                d += nll_scale * (p[k] - indicator);
            }
            grad[[t, k]] = d;
        }
    }
    Ok(grad)
}
