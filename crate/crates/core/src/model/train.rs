//! Seeded mini-batch SGD training with reduce-on-plateau scheduling.

use super::{
    argmax, cross_entropy_with_grad, loss_and_param_grads, sgd_step, ClassifierModel, ModelError,
    ParamSet,
};
use crate::datasets::{shuffled_indices, LabeledImage};
use crate::seeding::derive_seed;

/// Training hyperparameters. Defaults follow the SGD recipe used throughout:
/// momentum 0.9, weight decay 1e-4, batch 64, initial lr 0.01 reduced by a
/// factor of 10 when the validation loss stops decreasing for 10 epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            weight_decay: 1e-4,
            batch_size: 64,
            epochs: 30,
            plateau_patience: 10,
            plateau_factor: 10.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.learning_rate > 0.0) {
            return Err(ModelError::BadConfig("learning_rate must be > 0".into()));
        }
        if !(self.momentum > 0.0) {
            return Err(ModelError::BadConfig("momentum must be > 0".into()));
        }
        if !(self.weight_decay > 0.0) {
            return Err(ModelError::BadConfig("weight_decay must be > 0".into()));
        }
        if self.batch_size == 0 || self.epochs == 0 || self.plateau_patience == 0 {
            return Err(ModelError::BadConfig(
                "batch_size, epochs and plateau_patience must be > 0".into(),
            ));
        }
        if !(self.plateau_factor > 1.0) {
            return Err(ModelError::BadConfig("plateau_factor must be > 1".into()));
        }
        Ok(())
    }
}

/// Per-epoch record. `learning_rate` is the rate in effect during the epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

/// Produces the training images used for one epoch. Implementations must be
/// pure functions of `(base, epoch)` so training stays deterministic.
pub trait AugmentHook: Sync {
    fn epoch_images(&self, base: &[LabeledImage], epoch: usize) -> Vec<LabeledImage>;
}

/// Pass-through hook: train on the dataset as-is.
pub struct IdentityHook;

impl AugmentHook for IdentityHook {
    fn epoch_images(&self, base: &[LabeledImage], _epoch: usize) -> Vec<LabeledImage> {
        base.to_vec()
    }
}

/// Train with seeded shuffled mini-batches, reduce-on-plateau scheduling on
/// the validation loss, and best-validation-accuracy checkpointing.
///
/// Returns the parameters of the epoch with the highest validation accuracy
/// (earliest such epoch on ties) together with the full history.
pub fn train(
    model: &ClassifierModel,
    train_set: &[LabeledImage],
    val_set: &[LabeledImage],
    config: &TrainConfig,
    hook: &dyn AugmentHook,
) -> Result<(ClassifierModel, TrainHistory), ModelError> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(ModelError::EmptyDataset);
    }

    let mut current = model.clone();
    let mut velocity = ParamSet::zeros_like(current.params());
    let mut lr = config.learning_rate;
    let mut history = TrainHistory::default();

    let mut best_val_acc = f64::NEG_INFINITY;
    let mut best_model = current.clone();
    let mut best_val_loss = f64::INFINITY;
    let mut stale_epochs = 0usize;

    for epoch in 0..config.epochs {
        let images = hook.epoch_images(train_set, epoch);
        let order = shuffled_indices(images.len(), derive_seed(config.seed, "shuffle", &[epoch as u64]));

        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&crate::spectral::ImageTensor, usize)> = chunk
                .iter()
                .map(|&ix| (&images[ix].image, images[ix].class))
                .collect();
            let (loss, grads) = loss_and_param_grads(&current, &batch, config.weight_decay)?;
            sgd_step(&mut current, &grads, &mut velocity, lr, config.momentum);
            loss_sum += loss;
            batches += 1;
        }
        debug_assert!(current.params().is_finite(), "parameters diverged");

        let val_loss = mean_loss(&current, val_set)?;
        let val_accuracy = evaluate(&current, val_set);
        history.epochs.push(EpochStats {
            train_loss: loss_sum / batches as f64,
            val_loss,
            val_accuracy,
            learning_rate: lr,
        });

        if val_accuracy > best_val_acc {
            best_val_acc = val_accuracy;
            best_model = current.clone();
        }
        if val_loss < best_val_loss {
            best_val_loss = val_loss;
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.plateau_patience {
                lr /= config.plateau_factor;
                stale_epochs = 0;
            }
        }
    }

    Ok((best_model, history))
}

/// Fraction of argmax-correct predictions; ties break toward the lowest
/// class index. Empty datasets evaluate to 0.
pub fn evaluate(model: &ClassifierModel, data: &[LabeledImage]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let correct = crate::exec::count_matching(data, |li| {
        model.predict(&li.image).expect("image shape matches model") == li.class
    });
    correct as f64 / data.len() as f64
}

/// Mean cross-entropy over a dataset (no weight decay term).
pub fn mean_loss(model: &ClassifierModel, data: &[LabeledImage]) -> Result<f64, ModelError> {
    if data.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    for li in data {
        if li.class >= model.class_count() {
            return Err(ModelError::InvalidLabel {
                label: li.class,
                class_count: model.class_count(),
            });
        }
        model.check_input(&li.image)?;
    }
    let losses = crate::exec::map_collect(data, |li| {
        let logits = model.forward(&li.image).expect("shape checked above");
        cross_entropy_with_grad(&logits, li.class).0
    });
    Ok(losses.iter().sum::<f64>() / data.len() as f64)
}
