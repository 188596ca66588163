//! Sigmoid multi-label classification head.
//!
//! A single linear layer over a document feature vector `x` of size `E`,
//! producing `M` independent label probabilities `σ(xᵀW + b)`. During training
//! inverted dropout is applied to `x`. The loss is the binary cross-entropy
//! averaged over the `M` labels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::scalar::Scalar;
use crate::thesaurus::{sort_ranked, DescriptorId};

pub const DEFAULT_DROPOUT: f64 = 0.1;

/// Smallest probability distance from 0 and 1 used inside the loss.
pub fn loss_clamp<T: Scalar>() -> T {
    T::lit(1e-12).max(T::epsilon())
}

pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Mean binary cross-entropy over the label dimension.
pub fn bce_loss<T: Scalar>(probs: &[T], targets: &[T]) -> Result<T> {
    if probs.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: probs.len(),
            actual: targets.len(),
        });
    }
    if probs.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: 1,
            actual: 0,
        });
    }
    let eps = loss_clamp::<T>();
    let total: T = probs
        .iter()
        .zip(targets)
        .map(|(&p, &y)| {
            let p = p.max(eps).min(T::one() - eps);
            y * p.ln() + (T::one() - y) * (T::one() - p).ln()
        })
        .sum();
    Ok(-total / T::from_count(probs.len()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradients<T> {
    /// Row-major `E × M`, matching [`ClassifierHead::weights`].
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub input: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ClassifierHead<T: Scalar> {
    input_dim: usize,
    labels: Vec<DescriptorId>,
    weights: Vec<T>,
    bias: Vec<T>,
    dropout_rate: T,
}

impl<T: Scalar> ClassifierHead<T> {
    /// Fresh head with `W ~ U(−1/√E, 1/√E)` and `b = 0`. Labels are sorted so
    /// that index order equals code order.
    pub fn new(
        input_dim: usize,
        labels: impl IntoIterator<Item = DescriptorId>,
        seed: u64,
    ) -> Result<Self> {
        let labels = sorted_labels(labels)?;
        if input_dim == 0 {
            return Err(Error::Config("input dimension must be positive".into()));
        }
        let bound = 1.0 / (input_dim as f64).sqrt();
        let mut rng = seeded(seed);
        let weights = (0..input_dim * labels.len())
            .map(|_| T::lit(rng.random_range(-bound..bound)))
            .collect();
        let bias = vec![T::zero(); labels.len()];
        Ok(Self {
            input_dim,
            labels,
            weights,
            bias,
            dropout_rate: T::lit(DEFAULT_DROPOUT),
        })
    }

    pub fn from_parts(
        input_dim: usize,
        labels: Vec<DescriptorId>,
        weights: Vec<T>,
        bias: Vec<T>,
        dropout_rate: T,
    ) -> Result<Self> {
        let sorted = sorted_labels(labels.iter().cloned())?;
        if sorted != labels {
            return Err(Error::Invariant(
                "head labels must be unique and in ascending order".into(),
            ));
        }
        if weights.len() != input_dim * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: input_dim * labels.len(),
                actual: weights.len(),
            });
        }
        if bias.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                actual: bias.len(),
            });
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("head parameters"));
        }
        if !(dropout_rate >= T::zero() && dropout_rate < T::one()) {
            return Err(Error::Config(format!(
                "dropout rate {dropout_rate} outside [0, 1)"
            )));
        }
        Ok(Self {
            input_dim,
            labels,
            weights,
            bias,
            dropout_rate,
        })
    }

    pub fn with_dropout(mut self, rate: T) -> Result<Self> {
        if !(rate >= T::zero() && rate < T::one()) {
            return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
        }
        self.dropout_rate = rate;
        Ok(self)
    }

    /// `E`.
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// `M`.
    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[DescriptorId] {
        &self.labels
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn dropout_rate(&self) -> T {
        self.dropout_rate
    }

    pub fn weights_mut(&mut self) -> &mut [T] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [T] {
        &mut self.bias
    }

    /// `[W, b]`, in that order.
    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        vec![&mut self.weights, &mut self.bias]
    }

    /// Target vector with ones at the positions of `gold`. Labels outside the
    /// head's codebook are ignored.
    pub fn target_vector<'a>(&self, gold: impl IntoIterator<Item = &'a DescriptorId>) -> Vec<T> {
        let mut y = vec![T::zero(); self.labels.len()];
        for id in gold {
            if let Ok(i) = self.labels.binary_search(id) {
                y[i] = T::one();
            }
        }
        y
    }

    fn check_input(&self, input: &[T]) -> Result<()> {
        if input.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: input.len(),
            });
        }
        Ok(())
    }

    pub fn logits(&self, input: &[T]) -> Result<Vec<T>> {
        self.check_input(input)?;
        let m = self.labels.len();
        let mut out = self.bias.clone();
        for (e, &x) in input.iter().enumerate() {
            if x == T::zero() {
                continue;
            }
            let row = &self.weights[e * m..(e + 1) * m];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += x * w;
            }
        }
        Ok(out)
    }

    /// Per-coordinate input scale factors of one inverted-dropout draw:
    /// `0` for dropped coordinates, `1/(1−p)` otherwise.
    pub fn dropout_mask(&self, rng: &mut impl Rng) -> Vec<T> {
        let p = self.dropout_rate.as_f64();
        let keep_scale = T::one() / (T::one() - self.dropout_rate);
        (0..self.input_dim)
            .map(|_| {
                if p > 0.0 && rng.random::<f64>() < p {
                    T::zero()
                } else {
                    keep_scale
                }
            })
            .collect()
    }

    /// Label probabilities. Passing an RNG selects training mode, in which
    /// dropout is applied to the input.
    pub fn forward<R: Rng>(&self, input: &[T], dropout_rng: Option<&mut R>) -> Result<Vec<T>> {
        self.check_input(input)?;
        let logits = match dropout_rng {
            Some(rng) => {
                let mask = self.dropout_mask(rng);
                let dropped: Vec<T> = input.iter().zip(&mask).map(|(x, s)| *x * *s).collect();
                self.logits(&dropped)?
            }
            None => self.logits(input)?,
        };
        Ok(logits.into_iter().map(sigmoid).collect())
    }

    /// Inference-mode probabilities.
    pub fn probabilities(&self, input: &[T]) -> Result<Vec<T>> {
        self.forward::<crate::rng::SeededRng>(input, None)
    }

    /// Loss and gradients for one example, with an optional dropout mask
    /// (as produced by [`dropout_mask`](Self::dropout_mask)).
    pub fn loss_and_gradients(
        &self,
        input: &[T],
        targets: &[T],
        mask: Option<&[T]>,
    ) -> Result<(T, HeadGradients<T>)> {
        self.check_input(input)?;
        let m = self.labels.len();
        if targets.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: targets.len(),
            });
        }
        let effective: Vec<T> = match mask {
            Some(mask) => {
                if mask.len() != input.len() {
                    return Err(Error::DimensionMismatch {
                        expected: input.len(),
                        actual: mask.len(),
                    });
                }
                input.iter().zip(mask).map(|(x, s)| *x * *s).collect()
            }
            None => input.to_vec(),
        };
        let probs: Vec<T> = self.logits(&effective)?.into_iter().map(sigmoid).collect();
        let loss = bce_loss(&probs, targets)?;

        let scale = T::one() / T::from_count(m);
        let dlogits: Vec<T> = probs
            .iter()
            .zip(targets)
            .map(|(p, y)| (*p - *y) * scale)
            .collect();

        let mut weights = vec![T::zero(); self.weights.len()];
        let mut input_grad = vec![T::zero(); self.input_dim];
        for e in 0..self.input_dim {
            let row = e * m..(e + 1) * m;
            let x = effective[e];
            let mut acc = T::zero();
            for ((gw, &w), &d) in weights[row.clone()]
                .iter_mut()
                .zip(&self.weights[row])
                .zip(&dlogits)
            {
                *gw = x * d;
                acc += w * d;
            }
            input_grad[e] = match mask {
                Some(mask) => acc * mask[e],
                None => acc,
            };
        }
        Ok((
            loss,
            HeadGradients {
                weights,
                bias: dlogits,
                input: input_grad,
            },
        ))
    }

    /// Gradients of the inference-mode loss with respect to `W`, `b` and the
    /// input vector.
    pub fn gradients(&self, input: &[T], targets: &[T]) -> Result<HeadGradients<T>> {
        Ok(self.loss_and_gradients(input, targets, None)?.1)
    }

    /// The `k` most probable labels, ties broken by ascending code.
    pub fn predict_topk_features(&self, input: &[T], k: usize) -> Result<Vec<(DescriptorId, T)>> {
        let m = self.labels.len();
        if k == 0 || k > m {
            return Err(Error::KOutOfRange { k, max: m });
        }
        let probs = self.probabilities(input)?;
        let mut ranked: Vec<(DescriptorId, T)> = self.labels.iter().cloned().zip(probs).collect();
        sort_ranked(&mut ranked);
        ranked.truncate(k);
        Ok(ranked)
    }
}

fn sorted_labels(labels: impl IntoIterator<Item = DescriptorId>) -> Result<Vec<DescriptorId>> {
    let mut labels: Vec<DescriptorId> = labels.into_iter().collect();
    let before = labels.len();
    labels.sort();
    labels.dedup();
    if labels.len() != before {
        return Err(Error::Invariant("duplicate head labels".into()));
    }
    if labels.is_empty() {
        return Err(Error::Config("a head needs at least one label".into()));
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn ids(n: usize) -> Vec<DescriptorId> {
        (0..n)
            .map(|i| DescriptorId::new(format!("{:04}", i + 1)).unwrap())
            .collect()
    }

    #[test]
    fn zero_input_gives_half() {
        let head = ClassifierHead::<f64>::new(4, ids(3), 1).unwrap();
        let p = head.probabilities(&[0.0; 4]).unwrap();
        assert_eq!(p, vec![0.5; 3]);
    }

    #[test]
    fn two_by_two_example() {
        let head = ClassifierHead::<f64>::from_parts(
            2,
            ids(2),
            vec![2.0, 0.0, 0.0, 0.0],
            vec![0.0, -1.0],
            0.1,
        )
        .unwrap();
        let p = head.probabilities(&[1.0, 0.0]).unwrap();
        assert!((p[0] - 0.880_797_077_977_882_3).abs() < 1e-12);
        assert!((p[1] - 0.268_941_421_369_995_1).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let head = ClassifierHead::<f64>::new(4, ids(3), 1).unwrap();
        assert!(matches!(
            head.probabilities(&[0.0; 3]),
            Err(Error::DimensionMismatch {
                expected: 4,
                actual: 3
            })
        ));
    }

    #[test]
    fn bce_anchors() {
        assert!(
            (bce_loss(&[0.5, 0.5], &[1.0, 0.0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15
        );
        assert!(bce_loss(&[1.0, 0.0], &[1.0, 0.0]).unwrap() <= 1e-11);
        assert!(bce_loss(&[0.5], &[1.0, 0.0]).is_err());
        assert!(bce_loss::<f32>(&[1.0, 0.0], &[0.0, 1.0])
            .unwrap()
            .is_finite());
    }

    #[test]
    fn logit_gradient_single_label() {
        let head = ClassifierHead::from_parts(1, ids(1), vec![0.0], vec![0.0], 0.1).unwrap();
        let g = head.gradients(&[0.0], &[1.0]).unwrap();
        assert_eq!(g.bias, vec![-0.5]);
        assert_eq!(g.weights, vec![0.0]);
    }

    #[test]
    fn zero_input_gradients() {
        let head = ClassifierHead::<f64>::new(3, ids(2), 5).unwrap();
        let g = head.gradients(&[0.0; 3], &[1.0, 0.0]).unwrap();
        assert!(g.weights.iter().all(|w| *w == 0.0));
        assert_eq!(g.bias, vec![-0.25, 0.25]);
    }

    #[test]
    fn dropout_zeroes_or_rescales() {
        let head = ClassifierHead::<f64>::new(1000, ids(1), 1).unwrap();
        let mut rng: SeededRng = seeded(9);
        let mask = head.dropout_mask(&mut rng);
        let dropped = mask.iter().filter(|s| **s == 0.0).count();
        assert!((50..150).contains(&dropped), "{dropped}");
        assert!(mask
            .iter()
            .all(|s| *s == 0.0 || (*s - 1.0 / 0.9).abs() < 1e-15));
    }

    #[test]
    fn topk_bounds_and_order() {
        let head =
            ClassifierHead::from_parts(1, ids(3), vec![1.0, 1.0, 2.0], vec![0.0; 3], 0.1).unwrap();
        let top = head.predict_topk_features(&[1.0], 3).unwrap();
        let codes: Vec<&str> = top.iter().map(|(d, _)| d.as_str()).collect();
        assert_eq!(codes, vec!["0003", "0001", "0002"]);
        assert!(matches!(
            head.predict_topk_features(&[1.0], 4),
            Err(Error::KOutOfRange { .. })
        ));
        assert!(matches!(
            head.predict_topk_features(&[1.0], 0),
            Err(Error::KOutOfRange { .. })
        ));
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = ClassifierHead::<f64>::new(16, ids(4), 3).unwrap();
        let b = ClassifierHead::<f64>::new(16, ids(4), 3).unwrap();
        assert_eq!(a, b);
        assert!(a.weights().iter().all(|w| w.abs() <= 0.25));
        assert!(a.bias().iter().all(|b| *b == 0.0));
    }

    #[test]
    fn unsorted_parts_rejected() {
        let mut labels = ids(2);
        labels.reverse();
        assert!(ClassifierHead::from_parts(1, labels, vec![0.0; 2], vec![0.0; 2], 0.1).is_err());
    }
}
