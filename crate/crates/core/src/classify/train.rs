//! Minibatch training loop: RMSProp, triangular cyclic learning rate and
//! early stopping on validation loss.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::lstm::LstmModel;
use super::ClassifyError;
use crate::features::FeatureSequence;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    RmsProp,
    /// Plain gradient descent, mostly for tests.
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub n_layers: usize,
    pub dropout: f64,
    pub optimizer: Optimizer,
    pub rmsprop_alpha: f64,
    pub rmsprop_eps: f64,
    pub base_lr: f64,
    /// Peak of the triangular schedule as a multiple of `base_lr`; 1 disables cycling.
    pub max_lr_factor: f64,
    /// Epochs per full up-down cycle.
    pub cycle_epochs: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    /// Added to the forget-gate input bias at initialization.
    pub forget_bias: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl TrainConfig {
    pub fn desk() -> Self {
        Self {
            hidden_dim: 32,
            n_layers: 3,
            dropout: 0.5,
            optimizer: Optimizer::RmsProp,
            rmsprop_alpha: 0.99,
            rmsprop_eps: 1e-8,
            base_lr: 5e-4,
            max_lr_factor: 10.0,
            cycle_epochs: 20,
            max_epochs: 40,
            patience: 15,
            batch_size: 16,
            clip_norm: Some(5.0),
            forget_bias: 1.0,
            seed: 0,
        }
    }

    pub fn paper() -> Self {
        Self {
            hidden_dim: 256,
            cycle_epochs: 50,
            max_epochs: 650,
            patience: 200,
            ..Self::desk()
        }
    }

    pub fn for_profile(name: &str) -> Option<Self> {
        match name {
            "desk" => Some(Self::desk()),
            "paper" => Some(Self::paper()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: &str| Err(ClassifyError::Config(m.into()));
        if !(self.base_lr > 0.0) {
            return bad("base_lr must be positive");
        }
        if self.patience > self.max_epochs {
            return bad("patience must not exceed max_epochs");
        }
        if self.hidden_dim == 0 || self.n_layers == 0 || self.batch_size == 0 {
            return bad("hidden_dim, n_layers and batch_size must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(self.max_lr_factor >= 1.0) || self.cycle_epochs == 0 {
            return bad("cyclic schedule needs max_lr_factor >= 1 and cycle_epochs > 0");
        }
        Ok(())
    }

    /// Triangular cyclic learning rate at `epoch` (0-based).
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        let half = self.cycle_epochs as f64 / 2.0;
        let pos = (epoch % self.cycle_epochs) as f64;
        let x = 1.0 - (pos - half).abs() / half;
        self.base_lr * (1.0 + (self.max_lr_factor - 1.0) * x.max(0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

/// One labeled training example.
pub type Example<'a> = (&'a FeatureSequence, usize);

/// Mean cross-entropy and accuracy in inference mode.
pub fn evaluate_loss(model: &LstmModel, data: &[Example]) -> Result<(f64, f64), ClassifyError> {
    if data.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for &(s, y) in data {
        let p = model.predict_proba(s)?;
        loss -= p[y].max(1e-300).ln();
        correct += usize::from(usize::from(p[1] > p[0]) == y);
    }
    Ok((loss / data.len() as f64, correct as f64 / data.len() as f64))
}

struct RmsState {
    sq: Vec<Vec<f64>>,
}

fn step(model: &mut LstmModel, grads: &LstmModel, state: &mut RmsState, cfg: &TrainConfig, lr: f64) {
    for ((p, g), s) in model.params_mut().into_iter().zip(grads.params()).zip(state.sq.iter_mut()) {
        match cfg.optimizer {
            Optimizer::RmsProp => {
                let a = cfg.rmsprop_alpha;
                for ((pi, &gi), si) in p.iter_mut().zip(g).zip(s.iter_mut()) {
                    *si = a * *si + (1.0 - a) * gi * gi;
                    *pi -= lr * gi / (si.sqrt() + cfg.rmsprop_eps);
                }
            }
            Optimizer::Sgd => {
                for (pi, &gi) in p.iter_mut().zip(g) {
                    *pi -= lr * gi;
                }
            }
        }
    }
}

/// Train a fresh model and return the best-validation checkpoint.
///
/// Without validation data the training loss drives early stopping.
pub fn train(input_dim: usize, train: &[Example], val: &[Example], cfg: &TrainConfig) -> Result<(LstmModel, History), ClassifyError> {
    let mut init = rng::stream(cfg.seed, "train/init");
    let mut model = LstmModel::new(input_dim, cfg.hidden_dim, cfg.n_layers, cfg.dropout, &mut init);
    let h = cfg.hidden_dim;
    for layer in &mut model.layers {
        layer.b_ih[h..2 * h].iter_mut().for_each(|b| *b += cfg.forget_bias);
    }
    train_model(model, train, val, cfg)
}

/// Train starting from `model`.
pub fn train_model(mut model: LstmModel, train: &[Example], val: &[Example], cfg: &TrainConfig) -> Result<(LstmModel, History), ClassifyError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(ClassifyError::Empty("training set"));
    }
    model.dropout = cfg.dropout;
    let mut shuffle_rng = rng::stream(cfg.seed, "train/shuffle");
    let mut dropout_rng = rng::stream(cfg.seed, "train/dropout");
    let mut state = RmsState {
        sq: model.params().iter().map(|p| vec![0.0; p.len()]).collect(),
    };
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = History {
        best_val_loss: f64::INFINITY,
        ..History::default()
    };
    let mut best = model.clone();
    let mut since_best = 0usize;

    for epoch in 0..cfg.max_epochs {
        let lr = cfg.learning_rate(epoch);
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = model.zeros_like();
            for &i in batch {
                let (s, y) = train[i];
                let fwd = model.forward(s, Some(&mut dropout_rng))?;
                total += model.backward(&fwd, y, &mut grads);
            }
            let scale = 1.0 / batch.len() as f64;
            let mut norm2 = 0.0;
            for g in grads.params_mut() {
                for x in g.iter_mut() {
                    *x *= scale;
                    norm2 += *x * *x;
                }
            }
            if !norm2.is_finite() {
                return Err(ClassifyError::Diverged { epoch });
            }
            if let Some(c) = cfg.clip_norm {
                let norm = norm2.sqrt();
                if norm > c {
                    let f = c / norm;
                    grads.params_mut().into_iter().for_each(|g| g.iter_mut().for_each(|x| *x *= f));
                }
            }
            step(&mut model, &grads, &mut state, cfg, lr);
        }
        let train_loss = total / train.len() as f64;
        if !train_loss.is_finite() || !model.is_finite() {
            return Err(ClassifyError::Diverged { epoch });
        }
        let (val_loss, val_accuracy) = if val.is_empty() {
            (train_loss, f64::NAN)
        } else {
            evaluate_loss(&model, val)?
        };
        log::debug!("epoch {epoch}: lr {lr:.2e} train {train_loss:.4} val {val_loss:.4} acc {val_accuracy:.3}");
        history.epochs.push(EpochRecord {
            epoch,
            lr,
            train_loss,
            val_loss,
            val_accuracy,
        });
        if val_loss < history.best_val_loss {
            history.best_val_loss = val_loss;
            history.best_epoch = epoch;
            best = model.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                history.stopped_early = true;
                break;
            }
        }
    }
    Ok((best, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy(n: usize, seed: u64) -> Vec<(FeatureSequence, usize)> {
        let mut r = rng::stream(seed, "toy");
        (0..n)
            .map(|i| {
                let y = i % 2;
                let sign = if y == 1 { 1.0 } else { -1.0 };
                let steps = (0..5)
                    .map(|_| vec![sign * r.random_range(0.5..1.5), r.random_range(-1.0..1.0)])
                    .collect();
                (FeatureSequence { steps, valid_len: 5 }, y)
            })
            .collect()
    }

    fn small() -> TrainConfig {
        TrainConfig {
            hidden_dim: 6,
            n_layers: 2,
            dropout: 0.0,
            max_epochs: 50,
            patience: 50,
            batch_size: 8,
            cycle_epochs: 10,
            ..TrainConfig::desk()
        }
    }

    #[test]
    fn cyclic_schedule_shape() {
        let c = TrainConfig::paper();
        assert_eq!(c.learning_rate(0), 5e-4);
        assert!((c.learning_rate(25) - 5e-3).abs() < 1e-15);
        assert_eq!(c.learning_rate(50), 5e-4);
        assert!(c.learning_rate(10) < c.learning_rate(20));
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let data = toy(40, 1);
        let ex: Vec<Example> = data.iter().map(|(s, y)| (s, *y)).collect();
        let (m, h) = train(2, &ex, &ex, &small()).unwrap();
        assert!(h.epochs.len() <= 50);
        let (_, acc) = evaluate_loss(&m, &ex).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn patience_zero_stops_after_first_non_improvement() {
        let data = toy(20, 2);
        let ex: Vec<Example> = data.iter().map(|(s, y)| (s, *y)).collect();
        let vdata = toy(10, 3);
        let val: Vec<Example> = vdata.iter().map(|(s, y)| (s, *y)).collect();
        let cfg = TrainConfig {
            patience: 0,
            base_lr: 0.05,
            max_lr_factor: 1.0,
            ..small()
        };
        let (_, h) = train(2, &ex, &val, &cfg).unwrap();
        let n = h.epochs.len();
        if n < cfg.max_epochs {
            assert!(h.stopped_early);
            // the last epoch is the only one that failed to improve
            let losses: Vec<f64> = h.epochs.iter().map(|e| e.val_loss).collect();
            assert!(losses[..n - 1].windows(2).all(|w| w[1] < w[0]));
            assert!(losses[n - 1] >= losses[n - 2]);
        }
    }

    #[test]
    fn same_seed_same_history() {
        let data = toy(16, 4);
        let ex: Vec<Example> = data.iter().map(|(s, y)| (s, *y)).collect();
        let cfg = TrainConfig {
            dropout: 0.3,
            max_epochs: 5,
            patience: 5,
            ..small()
        };
        let a = train(2, &ex, &ex, &cfg).unwrap();
        let b = train(2, &ex, &ex, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_example_loss_non_increasing_with_small_lr() {
        let data = toy(1, 5);
        let ex: Vec<Example> = data.iter().map(|(s, y)| (s, *y)).collect();
        let cfg = TrainConfig {
            optimizer: Optimizer::Sgd,
            base_lr: 1e-3,
            max_lr_factor: 1.0,
            max_epochs: 30,
            patience: 30,
            ..small()
        };
        let (_, h) = train(2, &ex, &[], &cfg).unwrap();
        let losses: Vec<f64> = h.epochs.iter().map(|e| e.train_loss).collect();
        assert!(losses.windows(2).all(|w| w[1] <= w[0]), "{losses:?}");
    }

    #[test]
    fn nan_input_reports_divergence() {
        let mut data = toy(4, 6);
        data[0].0.steps[0][0] = f64::NAN;
        let ex: Vec<Example> = data.iter().map(|(s, y)| (s, *y)).collect();
        assert!(matches!(train(2, &ex, &[], &small()), Err(ClassifyError::Diverged { .. })));
    }
}
