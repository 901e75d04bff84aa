use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tags::{EntityType, Tag, NUM_TAGS};

use super::{joint_loss_from_logits, joint_loss_gradient, LossBreakdown, TagDistribution};

/// Linear-softmax tagger: `softmax(W x + b)` per token.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyStudent {
    /// `tags × features`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl ToyStudent {
    /// Weights drawn uniformly from `[-0.1, 0.1]`, zero bias.
    pub fn random(num_tags: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ToyStudent {
            weights: Array2::from_shape_fn((num_tags, dim), |_| rng.gen_range(-0.1..=0.1)),
            bias: Array1::zeros(num_tags),
        }
    }

    pub fn logits(&self, features: ArrayView2<f64>) -> Array2<f64> {
        features.dot(&self.weights.t()) + &self.bias
    }

    pub fn predict(&self, features: ArrayView2<f64>) -> TagDistribution {
        TagDistribution::from_logits(self.logits(features).view())
    }

    fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(self.bias.iter())
            .all(|v| v.is_finite())
    }
}

/// One sentence of student inputs: token features (`tokens × dim`), the
/// teacher's distributions and the weak tag indices.
#[derive(Debug, Clone)]
pub struct TrainingSentence {
    pub features: Array2<f64>,
    pub teacher: TagDistribution,
    pub weak_tags: Vec<usize>,
}

fn batch_loss(student: &ToyStudent, batch: &[TrainingSentence]) -> Result<LossBreakdown> {
    let parts = batch
        .iter()
        .map(|s| {
            joint_loss_from_logits(
                student.logits(s.features.view()).view(),
                &s.teacher,
                &s.weak_tags,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    LossBreakdown::mean(&parts)
}

/// Full-batch gradient descent on the mean joint loss. The trace holds the
/// loss at the start of each epoch, before that epoch's update.
pub fn train_toy_student(
    batch: &[TrainingSentence],
    lr: f64,
    epochs: usize,
    seed: u64,
) -> Result<(ToyStudent, Vec<LossBreakdown>)> {
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(Error::Invalid(format!(
            "learning rate {lr} must be finite and >= 0"
        )));
    }
    if epochs == 0 {
        return Err(Error::Invalid("epochs must be at least 1".into()));
    }
    let dim = match batch.first() {
        Some(s) => s.features.ncols(),
        None => return Err(Error::Shape("empty training batch".into())),
    };
    for (i, s) in batch.iter().enumerate() {
        if s.features.ncols() != dim || s.features.nrows() != s.teacher.tokens() {
            return Err(Error::Shape(format!(
                "sentence {i}: features do not match teacher shape"
            )));
        }
        if s.teacher.num_tags() != NUM_TAGS {
            return Err(Error::Shape(format!(
                "sentence {i}: teacher has {} tags",
                s.teacher.num_tags()
            )));
        }
    }

    let mut student = ToyStudent::random(NUM_TAGS, dim, seed);
    let mut trace = Vec::with_capacity(epochs);
    let scale = 1.0 / batch.len() as f64;
    for epoch in 1..=epochs {
        let loss = batch_loss(&student, batch)?;
        if !loss.total.is_finite() || !student.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: loss.total,
            });
        }
        trace.push(loss);

        let mut grad_w = Array2::<f64>::zeros(student.weights.dim());
        let mut grad_b = Array1::<f64>::zeros(NUM_TAGS);
        for s in batch {
            let logits = student.logits(s.features.view());
            let g = joint_loss_gradient(logits.view(), &s.teacher, &s.weak_tags)?;
            grad_w += &(g.t().dot(&s.features) * scale);
            grad_b += &(g.sum_axis(Axis(0)) * scale);
        }
        student.weights.scaled_add(-lr, &grad_w);
        student.bias.scaled_add(-lr, &grad_b);
    }
    Ok((student, trace))
}

/// Four 5-token sentences over four tags (`O`, `B-PER`, `I-PER`,
/// `B-LOC`) whose 4-d features cluster around one axis per tag, so the
/// tokens are linearly separable. The teacher agrees with the weak labels.
pub fn separable_fixture() -> Vec<TrainingSentence> {
    const SENTENCES: [[Tag; 5]; 4] = [
        [
            Tag::Begin(EntityType::Per),
            Tag::Inside(EntityType::Per),
            Tag::Outside,
            Tag::Outside,
            Tag::Begin(EntityType::Loc),
        ],
        [
            Tag::Outside,
            Tag::Begin(EntityType::Loc),
            Tag::Outside,
            Tag::Begin(EntityType::Per),
            Tag::Inside(EntityType::Per),
        ],
        [
            Tag::Begin(EntityType::Per),
            Tag::Outside,
            Tag::Outside,
            Tag::Begin(EntityType::Loc),
            Tag::Outside,
        ],
        [
            Tag::Outside,
            Tag::Begin(EntityType::Per),
            Tag::Inside(EntityType::Per),
            Tag::Inside(EntityType::Per),
            Tag::Begin(EntityType::Loc),
        ],
    ];
    let axis = |tag: Tag| match tag {
        Tag::Begin(EntityType::Per) => 1,
        Tag::Inside(EntityType::Per) => 2,
        Tag::Begin(EntityType::Loc) => 3,
        _ => 0,
    };
    SENTENCES
        .iter()
        .enumerate()
        .map(|(s, tags)| {
            let weak_tags: Vec<usize> = tags.iter().map(|t| t.index()).collect();
            let features = Array2::from_shape_fn((tags.len(), 4), |(t, d)| {
                // deterministic jitter in [-0.15, 0.15]
                let jitter = (((s * 31 + t * 17 + d * 7) % 11) as f64 - 5.0) * 0.03;
                if d == axis(tags[t]) {
                    3.0 + jitter
                } else {
                    jitter
                }
            });
            TrainingSentence {
                features,
                teacher: TagDistribution::one_hot(&weak_tags, NUM_TAGS).unwrap(),
                weak_tags,
            }
        })
        .collect()
}
