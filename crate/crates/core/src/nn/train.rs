//! Mini-batch training with Adam (beta1 0.9, beta2 0.999, eps 1e-8).
//!
//! First-layer rows are updated only when some input in the batch touches
//! them, so moments and weight decay of absent features are left as they were.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mlp::{sigmoid, Gradients, Mlp};
use super::{MlpConfig, NnError};
use crate::featurize::SparseVec;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;
/// Separates the shuffle/dropout stream from the initialization stream.
const TRAIN_STREAM: u64 = 0x5eed_7a11;

struct Adam {
    m_w: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    fn new(model: &Mlp) -> Adam {
        let zw: Vec<Vec<f64>> = model.layers.iter().map(|l| vec![0.0; l.w.len()]).collect();
        let zb: Vec<Vec<f64>> = model.layers.iter().map(|l| vec![0.0; l.b.len()]).collect();
        Adam {
            m_w: zw.clone(),
            v_w: zw,
            m_b: zb.clone(),
            v_b: zb,
            t: 0,
        }
    }

    fn update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], l2: f64, lr_t: f64) {
        for k in 0..p.len() {
            let gk = g[k] + l2 * p[k];
            m[k] = BETA1 * m[k] + (1.0 - BETA1) * gk;
            v[k] = BETA2 * v[k] + (1.0 - BETA2) * gk * gk;
            p[k] -= lr_t * m[k] / (v[k].sqrt() + EPS);
        }
    }

    fn step(&mut self, model: &mut Mlp, g: &Gradients) {
        self.t += 1;
        let lr = model.config.learning_rate;
        let l2 = model.config.l2;
        let lr_t = lr * (1.0 - BETA2.powi(self.t)).sqrt() / (1.0 - BETA1.powi(self.t));
        for (li, layer) in model.layers.iter_mut().enumerate() {
            if li == 0 {
                let out = layer.out_dim;
                for &r in &g.touched {
                    let s = r as usize * out..(r as usize + 1) * out;
                    Adam::update(
                        &mut layer.w[s.clone()],
                        &g.w[0][s.clone()],
                        &mut self.m_w[0][s.clone()],
                        &mut self.v_w[0][s],
                        l2,
                        lr_t,
                    );
                }
            } else {
                Adam::update(&mut layer.w, &g.w[li], &mut self.m_w[li], &mut self.v_w[li], l2, lr_t);
            }
            Adam::update(&mut layer.b, &g.b[li], &mut self.m_b[li], &mut self.v_b[li], 0.0, lr_t);
        }
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Weighted logistic loss and its derivative with respect to the logit.
pub(crate) fn bce(z: f64, label: bool, weight: f64) -> (f64, f64) {
    let y = if label { 1.0 } else { 0.0 };
    (weight * (softplus(z) - y * z), weight * (sigmoid(z) - y))
}

fn check_inputs(config: &MlpConfig, xs: impl Iterator<Item = usize>) -> Result<(), NnError> {
    for d in xs {
        if d != config.input_dim {
            return Err(NnError::Dimension {
                expected: config.input_dim,
                got: d,
            });
        }
    }
    Ok(())
}

/// Trains a binary classifier on L2-regularized logistic loss.
pub fn train_classifier(data: &[(SparseVec, bool)], config: &MlpConfig) -> Result<Mlp, NnError> {
    let weighted: Vec<(&SparseVec, bool, f64)> = data.iter().map(|(x, y)| (x, *y, 1.0)).collect();
    train_weighted(&weighted, config)
}

/// As [`train_classifier`] with a per-example weight, e.g. the multiplicity
/// of a deduplicated example. Weights are rescaled to mean 1.
pub fn train_classifier_weighted(data: &[(SparseVec, bool, f64)], config: &MlpConfig) -> Result<Mlp, NnError> {
    let weighted: Vec<(&SparseVec, bool, f64)> = data.iter().map(|(x, y, w)| (x, *y, *w)).collect();
    train_weighted(&weighted, config)
}

fn train_weighted(data: &[(&SparseVec, bool, f64)], config: &MlpConfig) -> Result<Mlp, NnError> {
    config.validate()?;
    if data.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    check_inputs(config, data.iter().map(|(x, _, _)| x.dim()))?;
    if data.iter().any(|(_, _, w)| !(*w >= 0.0) || !w.is_finite()) {
        return Err(NnError::Config("example weights must be finite and non-negative".into()));
    }
    let n = data.iter().map(|(_, _, w)| w).sum::<f64>();
    if n <= 0.0 {
        return Err(NnError::EmptyDataset);
    }
    let n_pos: f64 = data.iter().filter(|(_, y, _)| *y).map(|(_, _, w)| w).sum();
    let n_neg = n - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        log::warn!("training set holds a single class ({n_pos} positive of {n})");
    }
    let (w_pos, w_neg) = if config.class_weighting && n_pos > 0.0 && n_neg > 0.0 {
        (n / (2.0 * n_pos), n / (2.0 * n_neg))
    } else {
        (1.0, 1.0)
    };
    let mean = n / data.len() as f64;
    let mut model = Mlp::new(config.clone())?;
    let mut adam = Adam::new(&model);
    let mut grads = Gradients::zeros(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ TRAIN_STREAM);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.clear();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let (x, y, w) = data[i];
                let cache = model.forward_cache(x, Some(&mut rng));
                let cw = if y { w_pos } else { w_neg };
                let (loss, dz) = bce(cache.output(), y, cw * w / mean);
                total += loss;
                model.backward(x, &cache, dz * scale, &mut grads);
            }
            adam.step(&mut model, &grads);
        }
        let loss = total / data.len() as f64 + 0.5 * config.l2 * model.weight_norm_sq();
        log::debug!("classifier epoch {epoch}: loss {loss:.6}");
        model.meta.loss_history.push(loss);
    }
    finish(&mut model, config)
}

/// Trains a shared-weight scorer so that s(plausible) exceeds s(decoy) by the
/// margin: loss = max(0, m - s(plausible) + s(decoy)).
pub fn train_siamese(pairs: &[(SparseVec, SparseVec)], config: &MlpConfig) -> Result<Mlp, NnError> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    check_inputs(config, pairs.iter().flat_map(|(a, b)| [a.dim(), b.dim()]))?;
    let mut model = Mlp::new(config.clone())?;
    let mut adam = Adam::new(&model);
    let mut grads = Gradients::zeros(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ TRAIN_STREAM);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.clear();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let (good, bad) = &pairs[i];
                let cg = model.forward_cache(good, Some(&mut rng));
                let cb = model.forward_cache(bad, Some(&mut rng));
                let hinge = config.margin - cg.output() + cb.output();
                if hinge > 0.0 {
                    total += hinge;
                    model.backward(good, &cg, -scale, &mut grads);
                    model.backward(bad, &cb, scale, &mut grads);
                }
            }
            adam.step(&mut model, &grads);
        }
        let loss = total / pairs.len() as f64 + 0.5 * config.l2 * model.weight_norm_sq();
        log::debug!("ranker epoch {epoch}: loss {loss:.6}");
        model.meta.loss_history.push(loss);
    }
    finish(&mut model, config)
}

fn finish(model: &mut Mlp, config: &MlpConfig) -> Result<Mlp, NnError> {
    model.round_to_f32();
    model.meta.epochs = config.epochs;
    model.meta.seed = config.seed;
    model.meta.final_loss = model.meta.loss_history.last().copied().unwrap_or(f64::NAN);
    Ok(model.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use rand::Rng;

    fn toy_config(epochs: usize) -> MlpConfig {
        MlpConfig {
            input_dim: 2,
            layer_dims: vec![8, 1],
            activation: Activation::Tanh,
            dropout: 0.0,
            l2: 0.0,
            batch_size: 8,
            learning_rate: 0.05,
            epochs,
            seed: 3,
            class_weighting: false,
            margin: 1.0,
        }
    }

    fn separable(n: usize, seed: u64) -> Vec<(SparseVec, bool)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x: f32 = rng.gen_range(-1.0..1.0);
                let y: f32 = rng.gen_range(-1.0..1.0);
                // keep a gap around the separating line
                let s = x + y;
                let s = if s.abs() < 0.2 { s.signum() * 0.2 + s } else { s };
                (SparseVec::from_dense(&[x, s - x]), s > 0.0)
            })
            .collect()
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let data = separable(200, 1);
        let m = train_classifier(&data, &toy_config(200)).unwrap();
        let correct = data
            .iter()
            .filter(|(x, y)| (m.forward(x).unwrap() > 0.0) == *y)
            .count();
        assert_eq!(correct, data.len());
    }

    #[test]
    fn same_seed_same_weights() {
        let data = separable(50, 2);
        let a = train_classifier(&data, &toy_config(5)).unwrap();
        let b = train_classifier(&data, &toy_config(5)).unwrap();
        assert_eq!(a.layers, b.layers);
    }

    #[test]
    fn full_batch_loss_does_not_increase() {
        let data = separable(64, 4);
        let cfg = MlpConfig {
            batch_size: 64,
            learning_rate: 1e-3,
            ..toy_config(40)
        };
        let m = train_classifier(&data, &cfg).unwrap();
        for w in m.meta.loss_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{:?}", m.meta.loss_history);
        }
    }

    #[test]
    fn integer_weights_match_duplication() {
        // full-batch, no dropout: weight 2 equals listing the example twice
        let data = separable(12, 5);
        let cfg = MlpConfig {
            batch_size: 100,
            ..toy_config(3)
        };
        let mut dup = data.clone();
        dup.push(data[0].clone());
        let mut w: Vec<(SparseVec, bool, f64)> = data.iter().map(|(x, y)| (x.clone(), *y, 1.0)).collect();
        w[0].2 = 2.0;
        let a = train_classifier(&dup, &cfg).unwrap();
        let b = train_classifier_weighted(&w, &cfg).unwrap();
        let x = SparseVec::from_dense(&[0.3, -0.1]);
        assert!((a.forward(&x).unwrap() - b.forward(&x).unwrap()).abs() < 1e-5);
    }

    #[test]
    fn empty_inputs_are_errors() {
        assert!(matches!(train_classifier(&[], &toy_config(1)), Err(NnError::EmptyDataset)));
        assert!(matches!(train_siamese(&[], &toy_config(1)), Err(NnError::EmptyDataset)));
    }

    #[test]
    fn identical_pair_only_pushes_the_margin() {
        // s(a) - s(a) = 0, so every pair sits at hinge = margin and the two
        // branch gradients cancel exactly
        let x = SparseVec::from_dense(&[0.5, -0.5]);
        let m = Mlp::new(toy_config(1)).unwrap();
        let mut g = Gradients::zeros(&m);
        let c = m.forward_cache(&x, None);
        m.backward(&x, &c, -1.0, &mut g);
        m.backward(&x, &c, 1.0, &mut g);
        assert!(g.w.iter().chain(g.b.iter()).flatten().all(|v| v.abs() < 1e-15));
    }
}
