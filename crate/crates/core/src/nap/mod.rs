//! Next-activity prediction from decay-replay state.
//!
//! Replaying a trace on the discovered net yields, before every event, a
//! timed state sample: a linearly decaying activation per place, a per-place
//! token-entry count, and the current marking. A small MLP maps the
//! normalised sample to a distribution over the activities plus END.

mod decay;
mod mlp;
mod sample;

pub use decay::{decay_value, DecayParams, DecayTracker};
pub use mlp::{train_sgd, Dense, Mlp, SgdConfig};
pub use sample::{
    estimate_decay_params, sample_log, write_samples_csv, NextLabel, SampleSet, TimedStateSample, END_LABEL,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::petri::PetriError;

#[derive(Debug, Error)]
pub enum NapError {
    #[error("no training samples")]
    NoSamples,
    #[error("feature vector has {got} entries, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("malformed model document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Replay(#[from] PetriError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Hidden layer widths; two layers of twice the input width when absent.
    pub hidden_sizes: Option<Vec<usize>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            learning_rate: 0.05,
            momentum: 0.9,
            batch_size: 8,
            seed: 0,
            hidden_sizes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrainingMeta {
    pub config: TrainConfig,
    pub samples: usize,
    pub final_loss: f64,
    pub train_accuracy: f64,
    /// Filled in by the caller once a held-out set has been scored.
    #[serde(default)]
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NapModel {
    pub layer_sizes: Vec<usize>,
    pub network: Mlp,
    /// Output index `i` predicts `activities[i]`; the last output is END.
    pub activities: Vec<String>,
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub decay: Option<DecayParams>,
    pub training: TrainingMeta,
}

impl NapModel {
    pub fn with_decay(mut self, decay: DecayParams) -> Self {
        self.decay = Some(decay);
        self
    }

    pub fn output_labels(&self) -> Vec<NextLabel> {
        self.activities
            .iter()
            .map(|a| NextLabel::Activity(a.clone()))
            .chain(std::iter::once(NextLabel::End))
            .collect()
    }

    fn label_index(&self, label: &NextLabel) -> Option<usize> {
        match label {
            NextLabel::End => Some(self.activities.len()),
            NextLabel::Activity(a) => self.activities.binary_search(a).ok(),
        }
    }

    fn normalise(&self, features: &[f64]) -> Result<Vec<f64>, NapError> {
        if features.len() != self.feature_mean.len() {
            return Err(NapError::Dimension {
                expected: self.feature_mean.len(),
                got: features.len(),
            });
        }
        Ok(features
            .iter()
            .zip(self.feature_mean.iter().zip(&self.feature_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    /// Every output label with its probability, most likely first; ties keep
    /// output order.
    pub fn predict_next(&self, sample: &TimedStateSample) -> Result<Vec<(NextLabel, f64)>, NapError> {
        let x = self.normalise(&sample.features())?;
        let probs = self.network.probabilities(&x);
        let mut ranked: Vec<(NextLabel, f64)> = self.output_labels().into_iter().zip(probs).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        Ok(ranked)
    }

    /// Share of samples whose top prediction equals their label; 1.0 when empty.
    pub fn accuracy(&self, samples: &[TimedStateSample]) -> Result<f64, NapError> {
        if samples.is_empty() {
            return Ok(1.0);
        }
        let mut hits = 0usize;
        for s in samples {
            if self.predict_next(s)?[0].0 == s.label {
                hits += 1;
            }
        }
        Ok(hits as f64 / samples.len() as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, NapError> {
        Ok(serde_json::from_str(text)?)
    }
}

fn normalisation(features: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let dim = features[0].len();
    let n = features.len() as f64;
    let mean: Vec<f64> = (0..dim).map(|j| features.iter().map(|f| f[j]).sum::<f64>() / n).collect();
    let std = (0..dim)
        .map(|j| {
            let var = features.iter().map(|f| (f[j] - mean[j]).powi(2)).sum::<f64>() / n;
            let s = var.sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (mean, std)
}

/// Fit a predictor on `samples`. Identical inputs and seed give an
/// identical model.
pub fn train(samples: &[TimedStateSample], cfg: &TrainConfig) -> Result<NapModel, NapError> {
    if samples.is_empty() {
        return Err(NapError::NoSamples);
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) || !(0.0..1.0).contains(&cfg.momentum) {
        return Err(NapError::Config(format!(
            "batch size {}, learning rate {}, momentum {}",
            cfg.batch_size, cfg.learning_rate, cfg.momentum
        )));
    }
    let features: Vec<Vec<f64>> = samples.iter().map(TimedStateSample::features).collect();
    let dim = features[0].len();
    if let Some(bad) = features.iter().find(|f| f.len() != dim) {
        return Err(NapError::Dimension {
            expected: dim,
            got: bad.len(),
        });
    }
    let mut activities: Vec<String> = samples
        .iter()
        .filter_map(|s| match &s.label {
            NextLabel::Activity(a) => Some(a.clone()),
            NextLabel::End => None,
        })
        .collect();
    activities.sort();
    activities.dedup();

    let (mean, std) = normalisation(&features);
    let hidden = cfg.hidden_sizes.clone().unwrap_or_else(|| vec![2 * dim, 2 * dim]);
    let mut sizes = vec![dim];
    sizes.extend(&hidden);
    sizes.push(activities.len() + 1);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = NapModel {
        layer_sizes: sizes.clone(),
        network: Mlp::new(&sizes, &mut rng),
        activities,
        feature_mean: mean,
        feature_std: std,
        decay: None,
        training: TrainingMeta {
            config: cfg.clone(),
            samples: samples.len(),
            final_loss: f64::NAN,
            train_accuracy: 0.0,
            test_accuracy: None,
        },
    };
    let data: Vec<(Vec<f64>, usize)> = samples
        .iter()
        .zip(&features)
        .map(|(s, f)| {
            let target = model.label_index(&s.label).expect("label collected above");
            (model.normalise(f).expect("dimension checked"), target)
        })
        .collect();
    let sgd = SgdConfig {
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        momentum: cfg.momentum,
        batch_size: cfg.batch_size,
    };
    model.training.final_loss = train_sgd(&mut model.network, &data, &sgd, &mut rng);
    model.training.train_accuracy = model.accuracy(samples)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::tests::log_of;
    use crate::discovery::{discover_net, DiscoveryConfig};

    const A: &str = "%IX0.1_false";
    const Q: &str = "%QX0.0_true";
    const B: &str = "%IX0.0_true";

    fn counted_loop() -> SampleSet {
        // after A, the output repeats three times before the case ends
        let trace: &[&str] = &[A, Q, B, Q, B, Q, B];
        let log = log_of(&[trace, trace, trace]);
        let net = discover_net(&log, &DiscoveryConfig::default()).unwrap();
        let params = estimate_decay_params(&net, &log).unwrap();
        sample_log(&net, &log, &params).unwrap()
    }

    #[test]
    fn learns_the_count_dependent_choice() {
        let set = counted_loop();
        let cfg = TrainConfig {
            epochs: 300,
            seed: 11,
            ..TrainConfig::default()
        };
        let model = train(&set.samples, &cfg).unwrap();
        assert_eq!(model.accuracy(&set.samples).unwrap(), 1.0);
        assert_eq!(model.output_labels().last(), Some(&NextLabel::End));
        assert_eq!(*model.layer_sizes.last().unwrap(), 4);
    }

    #[test]
    fn separable_toy_set_fits_within_default_epochs() {
        let samples: Vec<TimedStateSample> = (0..20)
            .map(|i| {
                let x = i as f64 / 19.0;
                TimedStateSample {
                    decay: vec![x, 1.0 - x],
                    counts: vec![0, 0],
                    marking: vec![1, 0],
                    label: if x < 0.5 {
                        NextLabel::Activity(Q.to_string())
                    } else {
                        NextLabel::End
                    },
                }
            })
            .collect();
        let cfg = TrainConfig::default();
        assert_eq!(cfg.epochs, 50);
        let model = train(&samples, &cfg).unwrap();
        assert_eq!(model.training.train_accuracy, 1.0);
    }

    #[test]
    fn training_is_deterministic_and_round_trips() {
        let set = counted_loop();
        let cfg = TrainConfig {
            epochs: 5,
            seed: 4,
            ..TrainConfig::default()
        };
        let a = train(&set.samples, &cfg).unwrap();
        let b = train(&set.samples, &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let back = NapModel::from_json(&a.to_json()).unwrap();
        assert_eq!(back.to_json(), a.to_json());
        let ranked = back.predict_next(&set.samples[0]).unwrap();
        assert_eq!(ranked.len(), 4);
        assert!(ranked.windows(2).all(|w| w[0].1 >= w[1].1));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(train(&[], &TrainConfig::default()), Err(NapError::NoSamples)));
        let set = counted_loop();
        let cfg = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&set.samples, &cfg), Err(NapError::Config(_))));
        let model = train(
            &set.samples,
            &TrainConfig {
                epochs: 1,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let mut short = set.samples[0].clone();
        short.decay.pop();
        assert!(matches!(model.predict_next(&short), Err(NapError::Dimension { .. })));
    }
}
