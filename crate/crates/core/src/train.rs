//! Mini-batch training with AdamW, a linear warm-up/decay schedule, global
//! gradient clipping and best-validation-loss checkpoint selection.

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::encoder::{Encoder, MeanEmbeddingEncoder};
use crate::error::{Error, Result};
use crate::head::{bce_loss, ClassifierHead};
use crate::optim::{clip_gradients, AdamW, AdamWConfig, LinearSchedule};
use crate::rng::{seeded, SeededRng};
use crate::scalar::Scalar;
use crate::thesaurus::DescriptorId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct TrainConfig<T: Scalar> {
    pub epochs: usize,
    pub batch_size: usize,
    pub peak_lr: T,
    /// `None` means one epoch worth of steps.
    pub warmup_steps: Option<usize>,
    pub clip_norm: T,
    pub adam: AdamWConfig<T>,
    pub seed: u64,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 8,
            peak_lr: T::lit(6e-5),
            warmup_steps: None,
            clip_norm: T::lit(5.0),
            adam: AdamWConfig::default(),
            seed: 0,
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    pub fn steps_per_epoch(&self, n_train: usize) -> usize {
        n_train.div_ceil(self.batch_size)
    }

    pub fn schedule(&self, n_train: usize) -> Result<LinearSchedule<T>> {
        self.validate()?;
        let per_epoch = self.steps_per_epoch(n_train);
        LinearSchedule::new(
            self.peak_lr,
            self.warmup_steps.unwrap_or(per_epoch),
            per_epoch * self.epochs,
        )
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "epochs and batch size must be positive".into(),
            ));
        }
        if self.peak_lr.is_nan()
            || self.peak_lr <= T::zero()
            || self.clip_norm.is_nan()
            || self.clip_norm <= T::zero()
        {
            return Err(Error::Config(
                "learning rate and clip norm must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A model the generic loop can optimise.
pub trait Trainable<T: Scalar>: Clone {
    type Example;

    fn parameter_shapes(&self) -> Vec<usize>;

    fn parameters_mut(&mut self) -> Vec<&mut [T]>;

    /// Training-mode loss of one example; its gradient is added into `grads`.
    fn accumulate_gradients(
        &self,
        example: &Self::Example,
        rng: &mut SeededRng,
        grads: &mut [Vec<T>],
    ) -> Result<T>;

    /// Inference-mode loss of one example.
    fn loss(&self, example: &Self::Example) -> Result<T>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LabeledFeatures<T: Scalar> {
    pub features: Vec<T>,
    pub targets: Vec<T>,
}

impl<T: Scalar> Trainable<T> for ClassifierHead<T> {
    type Example = LabeledFeatures<T>;

    fn parameter_shapes(&self) -> Vec<usize> {
        vec![self.weights().len(), self.bias().len()]
    }

    fn parameters_mut(&mut self) -> Vec<&mut [T]> {
        self.params_mut()
    }

    fn accumulate_gradients(
        &self,
        example: &Self::Example,
        rng: &mut SeededRng,
        grads: &mut [Vec<T>],
    ) -> Result<T> {
        let mask = self.dropout_mask(rng);
        let (loss, g) =
            self.loss_and_gradients(&example.features, &example.targets, Some(&mask))?;
        add_into(&mut grads[0], &g.weights);
        add_into(&mut grads[1], &g.bias);
        Ok(loss)
    }

    fn loss(&self, example: &Self::Example) -> Result<T> {
        bce_loss(&self.probabilities(&example.features)?, &example.targets)
    }
}

fn add_into<T: Scalar>(acc: &mut [T], values: &[T]) {
    for (a, v) in acc.iter_mut().zip(values) {
        *a += *v;
    }
}

/// Trainable encoder and head, optimised jointly.
#[derive(Debug, Clone)]
pub struct EncoderClassifier<T: Scalar> {
    pub encoder: MeanEmbeddingEncoder<T>,
    pub head: ClassifierHead<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenExample<T> {
    pub token_ids: Vec<u32>,
    pub targets: Vec<T>,
}

impl<T: Scalar> EncoderClassifier<T> {
    pub fn new(encoder: MeanEmbeddingEncoder<T>, head: ClassifierHead<T>) -> Result<Self> {
        if encoder.dim() != head.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: head.input_dim(),
                actual: encoder.dim(),
            });
        }
        Ok(Self { encoder, head })
    }

    pub fn example(&self, doc: &Document) -> TokenExample<T> {
        TokenExample {
            token_ids: self.encoder.token_ids(&doc.text),
            targets: self.head.target_vector(&doc.labels),
        }
    }
}

impl<T: Scalar> Trainable<T> for EncoderClassifier<T> {
    type Example = TokenExample<T>;

    fn parameter_shapes(&self) -> Vec<usize> {
        vec![
            self.encoder.table().len(),
            self.head.weights().len(),
            self.head.bias().len(),
        ]
    }

    fn parameters_mut(&mut self) -> Vec<&mut [T]> {
        let mut params = vec![self.encoder.table_mut()];
        params.extend(self.head.params_mut());
        params
    }

    fn accumulate_gradients(
        &self,
        example: &Self::Example,
        rng: &mut SeededRng,
        grads: &mut [Vec<T>],
    ) -> Result<T> {
        let features = self.encoder.encode_ids(&example.token_ids);
        let mask = self.head.dropout_mask(rng);
        let (loss, g) = self
            .head
            .loss_and_gradients(&features, &example.targets, Some(&mask))?;
        self.encoder
            .accumulate_backward(&example.token_ids, &g.input, &mut grads[0]);
        add_into(&mut grads[1], &g.weights);
        add_into(&mut grads[2], &g.bias);
        Ok(loss)
    }

    fn loss(&self, example: &Self::Example) -> Result<T> {
        let features = self.encoder.encode_ids(&example.token_ids);
        bce_loss(&self.head.probabilities(&features)?, &example.targets)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EpochLog<T: Scalar> {
    pub epoch: usize,
    pub train_loss: T,
    pub val_loss: T,
    pub lr: T,
}

/// Optimizer state and the best snapshot seen so far.
#[derive(Debug, Clone)]
pub struct TrainState<T: Scalar, M> {
    pub step: usize,
    pub optimizer: AdamW<T>,
    pub best_val_loss: T,
    pub best_epoch: usize,
    pub best_params: M,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T: Scalar, M> {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: M,
    pub log: Vec<EpochLog<T>>,
    pub state: TrainState<T, M>,
}

impl<T: Scalar, M> TrainOutcome<T, M> {
    pub fn best_val_loss(&self) -> T {
        self.state.best_val_loss
    }

    pub fn best_epoch(&self) -> usize {
        self.state.best_epoch
    }

    pub fn write_log_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for entry in &self.log {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")
                .map_err(|e| Error::io("<training log>", e))?;
        }
        Ok(())
    }
}

fn mean_loss<T: Scalar, M: Trainable<T>>(model: &M, examples: &[M::Example]) -> Result<T> {
    let mut total = T::zero();
    for ex in examples {
        total += model.loss(ex)?;
    }
    Ok(total / T::from_count(examples.len()))
}

/// Runs the full optimisation recipe and returns the best-validation snapshot.
pub fn fit<T: Scalar, M: Trainable<T>>(
    model: M,
    train: &[M::Example],
    val: &[M::Example],
    config: &TrainConfig<T>,
) -> Result<TrainOutcome<T, M>> {
    if train.is_empty() {
        return Err(Error::EmptySplit("training set".into()));
    }
    if val.is_empty() {
        return Err(Error::EmptySplit("validation set".into()));
    }
    let schedule = config.schedule(train.len())?;
    let shapes = model.parameter_shapes();
    let mut model = model;
    let mut rng = seeded(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut state = TrainState {
        step: 0,
        optimizer: AdamW::new(config.adam, &shapes),
        best_val_loss: T::infinity(),
        best_epoch: 0,
        best_params: model.clone(),
    };
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = T::zero();
        let mut lr = T::zero();
        for batch in order.chunks(config.batch_size) {
            let mut grads: Vec<Vec<T>> = shapes.iter().map(|&n| vec![T::zero(); n]).collect();
            for &i in batch {
                epoch_loss += model.accumulate_gradients(&train[i], &mut rng, &mut grads)?;
            }
            let inv = T::one() / T::from_count(batch.len());
            grads.iter_mut().flatten().for_each(|g| *g *= inv);
            if grads.iter().flatten().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch });
            }
            {
                let mut views: Vec<&mut [T]> = grads.iter_mut().map(Vec::as_mut_slice).collect();
                clip_gradients(&mut views, config.clip_norm)?;
            }
            lr = schedule.lr_at_step(state.step)?;
            let views: Vec<&[T]> = grads.iter().map(Vec::as_slice).collect();
            state
                .optimizer
                .step(&mut model.parameters_mut(), &views, lr)?;
            state.step += 1;
        }
        let train_loss = epoch_loss / T::from_count(train.len());
        let val_loss = mean_loss(&model, val)?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        if val_loss < state.best_val_loss {
            state.best_val_loss = val_loss;
            state.best_epoch = epoch;
            state.best_params = model.clone();
        }
        log.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
            lr,
        });
    }

    Ok(TrainOutcome {
        model: state.best_params.clone(),
        log,
        state,
    })
}

/// Trains a head on precomputed feature vectors.
pub fn train_head<T: Scalar>(
    head: ClassifierHead<T>,
    train: &[LabeledFeatures<T>],
    val: &[LabeledFeatures<T>],
    config: &TrainConfig<T>,
) -> Result<TrainOutcome<T, ClassifierHead<T>>> {
    for ex in train.iter().chain(val) {
        if ex.features.len() != head.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: head.input_dim(),
                actual: ex.features.len(),
            });
        }
        if ex.targets.len() != head.num_labels() {
            return Err(Error::DimensionMismatch {
                expected: head.num_labels(),
                actual: ex.targets.len(),
            });
        }
    }
    fit(head, train, val, config)
}

/// The `k` most probable descriptors for a document.
pub fn predict_topk<T: Scalar, E: Encoder<T> + ?Sized>(
    head: &ClassifierHead<T>,
    encoder: &E,
    doc: &Document,
    k: usize,
) -> Result<Vec<(DescriptorId, T)>> {
    head.predict_topk_features(&encoder.encode(doc)?, k)
}
