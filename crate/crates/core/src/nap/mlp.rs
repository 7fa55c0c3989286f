//! Fully connected tanh network with a softmax output and cross-entropy loss.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Row-major `outputs x inputs` weights plus biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    /// Xavier/Glorot uniform initialisation, zero biases.
    fn xavier(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Dense {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| rng.random_range(-limit..limit)).collect(),
            biases: vec![0.0; outputs],
        }
    }

    fn zeros_like(&self) -> Dense {
        Dense {
            inputs: self.inputs,
            outputs: self.outputs,
            weights: vec![0.0; self.weights.len()],
            biases: vec![0.0; self.biases.len()],
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                self.biases[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

impl Mlp {
    /// `sizes` lists the input width, each hidden width, and the output width.
    pub fn new(sizes: &[usize], rng: &mut ChaCha8Rng) -> Self {
        assert!(sizes.len() >= 2, "need at least an input and an output layer");
        Mlp {
            layers: sizes.windows(2).map(|w| Dense::xavier(w[0], w[1], rng)).collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    /// Activations of every layer; the first is the input, the last holds
    /// the softmax probabilities.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.apply(acts.last().expect("non-empty"));
            acts.push(if i == last {
                softmax(&z)
            } else {
                z.into_iter().map(f64::tanh).collect()
            });
        }
        acts
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        self.activations(x).pop().expect("output layer")
    }

    /// Mean cross-entropy over `batch` and its gradient for every parameter.
    pub fn loss_and_gradient(&self, batch: &[(&[f64], usize)]) -> (f64, Vec<Dense>) {
        let mut grads: Vec<Dense> = self.layers.iter().map(Dense::zeros_like).collect();
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        for &(x, target) in batch {
            let acts = self.activations(x);
            let probs = acts.last().expect("output layer");
            loss -= probs[target].max(1e-300).ln();
            let mut delta: Vec<f64> = probs.clone();
            delta[target] -= 1.0;
            for l in (0..self.layers.len()).rev() {
                let input = &acts[l];
                let layer = &self.layers[l];
                let g = &mut grads[l];
                for o in 0..layer.outputs {
                    g.biases[o] += scale * delta[o];
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (w, v) in row.iter_mut().zip(input) {
                        *w += scale * delta[o] * v;
                    }
                }
                if l > 0 {
                    delta = (0..layer.inputs)
                        .map(|i| {
                            let back: f64 = (0..layer.outputs)
                                .map(|o| layer.weights[o * layer.inputs + i] * delta[o])
                                .sum();
                            back * (1.0 - input[i] * input[i])
                        })
                        .collect();
                }
            }
        }
        (loss * scale, grads)
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }
}

fn flatten(layers: &[Dense]) -> impl Iterator<Item = f64> + '_ {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(l.biases.iter()).copied())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
}

/// Mini-batch SGD with classical momentum, reshuffling every epoch.
/// Returns the mean loss of the final epoch.
pub fn train_sgd(
    net: &mut Mlp,
    data: &[(Vec<f64>, usize)],
    cfg: &SgdConfig,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut velocity: Vec<f64> = vec![0.0; flatten(&net.layers).count()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut last_loss = f64::NAN;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let batch: Vec<(&[f64], usize)> = chunk.iter().map(|&i| (data[i].0.as_slice(), data[i].1)).collect();
            let (loss, grads) = net.loss_and_gradient(&batch);
            total += loss * chunk.len() as f64;
            for ((p, v), g) in net.params_mut().zip(velocity.iter_mut()).zip(flatten(&grads)) {
                *v = cfg.momentum * *v - cfg.learning_rate * g;
                *p += *v;
            }
        }
        last_loss = total / data.len().max(1) as f64;
    }
    last_loss
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn numeric_gradient(net: &Mlp, batch: &[(&[f64], usize)]) -> Vec<f64> {
        let eps = 1e-6;
        let n = flatten(&net.layers).count();
        (0..n)
            .map(|k| {
                let mut plus = net.clone();
                let mut minus = net.clone();
                *plus.params_mut().nth(k).unwrap() += eps;
                *minus.params_mut().nth(k).unwrap() -= eps;
                (plus.loss_and_gradient(batch).0 - minus.loss_and_gradient(batch).0) / (2.0 * eps)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = Mlp::new(&[5, 6, 6, 4], &mut rng);
        let xs: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..5).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let batch: Vec<(&[f64], usize)> = xs.iter().enumerate().map(|(i, x)| (x.as_slice(), i % 4)).collect();
        let analytic: Vec<f64> = flatten(&net.loss_and_gradient(&batch).1).collect();
        let numeric = numeric_gradient(&net, &batch);
        for (a, n) in analytic.iter().zip(&numeric) {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-7);
            assert!(rel <= 1e-4, "analytic {a} vs numeric {n}");
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::new(&[3, 4, 5], &mut rng);
        let p = net.probabilities(&[0.3, -1.0, 2.0]);
        assert_eq!(p.len(), 5);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(net.sizes(), vec![3, 4, 5]);
    }

    #[test]
    fn learns_a_separable_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Mlp::new(&[2, 8, 8, 2], &mut rng);
        let data: Vec<(Vec<f64>, usize)> = (0..40)
            .map(|i| {
                let x = i as f64 / 20.0 - 1.0;
                (vec![x, 1.0], usize::from(x > 0.0))
            })
            .collect();
        let cfg = SgdConfig {
            epochs: 200,
            learning_rate: 0.1,
            momentum: 0.9,
            batch_size: 8,
        };
        let loss = train_sgd(&mut net, &data, &cfg, &mut rng);
        assert!(loss < 0.1, "loss {loss}");
        for (x, y) in &data {
            let p = net.probabilities(x);
            assert_eq!(usize::from(p[1] > p[0]), *y);
        }
    }
}
