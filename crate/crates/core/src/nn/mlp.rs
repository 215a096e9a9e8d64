use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, MlpConfig, NnError, TrainingMeta};
use crate::featurize::SparseVec;

/// Weights are stored input-major: `w[i * out_dim + j]` connects input i to unit j.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub config: MlpConfig,
    pub layers: Vec<Layer>,
    pub meta: TrainingMeta,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-example intermediate values kept for backpropagation.
pub(crate) struct Cache {
    /// Pre-activations of every layer.
    pub z: Vec<Vec<f64>>,
    /// Post-activation (dropout applied) of every hidden layer.
    pub a: Vec<Vec<f64>>,
    /// Dropout scale per hidden unit (0 or 1/keep); empty when inactive.
    pub mask: Vec<Vec<f64>>,
}

impl Cache {
    pub fn output(&self) -> f64 {
        self.z.last().unwrap()[0]
    }
}

/// Accumulated parameter gradients. Rows of the first layer that no input
/// touched are tracked so sparse updates stay cheap.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub(crate) touched: Vec<u32>,
    touched_flag: Vec<bool>,
}

impl Gradients {
    pub fn zeros(model: &Mlp) -> Gradients {
        Gradients {
            w: model.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            b: model.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
            touched: Vec::new(),
            touched_flag: vec![false; model.config.input_dim],
        }
    }

    fn touch(&mut self, row: u32) {
        if !self.touched_flag[row as usize] {
            self.touched_flag[row as usize] = true;
            self.touched.push(row);
        }
    }

    /// Resets to zero, visiting only touched first-layer rows.
    pub fn clear(&mut self) {
        let out = self.b[0].len();
        for &r in &self.touched {
            let r = r as usize;
            self.w[0][r * out..(r + 1) * out].iter_mut().for_each(|x| *x = 0.0);
            self.touched_flag[r] = false;
        }
        self.touched.clear();
        for g in self.w.iter_mut().skip(1).chain(self.b.iter_mut()) {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    /// Flat view matching `Mlp::param`.
    pub fn get(&self, model: &Mlp, idx: usize) -> f64 {
        let (l, is_w, k) = model.locate(idx);
        if is_w {
            self.w[l][k]
        } else {
            self.b[l][k]
        }
    }
}

fn round_f32(x: f64) -> f64 {
    x as f32 as f64
}

impl Mlp {
    /// Fan-in scaled uniform initialization, zero biases. Weights are rounded
    /// to f32 precision so saved models reload bit-exactly.
    pub fn new(config: MlpConfig) -> Result<Mlp, NnError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut layers = Vec::new();
        let mut fan_in = config.input_dim;
        for &out in &config.layer_dims {
            let limit = match config.activation {
                Activation::Relu => (6.0 / fan_in as f64).sqrt(),
                Activation::Tanh => (3.0 / fan_in as f64).sqrt(),
            };
            let w = (0..fan_in * out).map(|_| round_f32(rng.gen_range(-limit..limit))).collect();
            layers.push(Layer {
                in_dim: fan_in,
                out_dim: out,
                w,
                b: vec![0.0; out],
            });
            fan_in = out;
        }
        Ok(Mlp {
            meta: TrainingMeta {
                seed: config.seed,
                ..TrainingMeta::default()
            },
            config,
            layers,
        })
    }

    pub fn zeros(config: MlpConfig) -> Result<Mlp, NnError> {
        let mut m = Mlp::new(config)?;
        for l in &mut m.layers {
            l.w.iter_mut().for_each(|x| *x = 0.0);
        }
        Ok(m)
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Maps a flat parameter index to (layer, is_weight, offset).
    pub(crate) fn locate(&self, mut idx: usize) -> (usize, bool, usize) {
        for (li, l) in self.layers.iter().enumerate() {
            if idx < l.w.len() {
                return (li, true, idx);
            }
            idx -= l.w.len();
            if idx < l.b.len() {
                return (li, false, idx);
            }
            idx -= l.b.len();
        }
        panic!("parameter index out of range");
    }

    pub fn param(&self, idx: usize) -> f64 {
        let (l, is_w, k) = self.locate(idx);
        if is_w {
            self.layers[l].w[k]
        } else {
            self.layers[l].b[k]
        }
    }

    pub fn set_param(&mut self, idx: usize, value: f64) {
        let (l, is_w, k) = self.locate(idx);
        if is_w {
            self.layers[l].w[k] = value;
        } else {
            self.layers[l].b[k] = value;
        }
    }

    pub fn round_to_f32(&mut self) {
        for l in &mut self.layers {
            l.w.iter_mut().chain(l.b.iter_mut()).for_each(|x| *x = round_f32(*x));
        }
    }

    fn check_dim(&self, x: &SparseVec) -> Result<(), NnError> {
        if x.dim() != self.config.input_dim {
            return Err(NnError::Dimension {
                expected: self.config.input_dim,
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// Raw output (pre-sigmoid score) in inference mode.
    pub fn forward(&self, x: &SparseVec) -> Result<f64, NnError> {
        self.check_dim(x)?;
        Ok(self.forward_cache(x, None).output())
    }

    pub fn forward_dense(&self, x: &[f32]) -> Result<f64, NnError> {
        self.forward(&SparseVec::from_dense(x))
    }

    pub fn probability(&self, x: &SparseVec) -> Result<f64, NnError> {
        Ok(sigmoid(self.forward(x)?))
    }

    /// Forward pass keeping intermediates; dropout masks are drawn from `rng`
    /// when given.
    pub(crate) fn forward_cache(&self, x: &SparseVec, mut rng: Option<&mut ChaCha8Rng>) -> Cache {
        let act = self.config.activation;
        let keep = 1.0 - self.config.dropout;
        let hidden = self.layers.len() - 1;
        let mut cache = Cache {
            z: Vec::with_capacity(self.layers.len()),
            a: Vec::with_capacity(hidden),
            mask: Vec::with_capacity(hidden),
        };
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = layer.b.clone();
            let out = layer.out_dim;
            if li == 0 {
                for &(i, v) in x.entries() {
                    let row = &layer.w[i as usize * out..(i as usize + 1) * out];
                    let v = v as f64;
                    z.iter_mut().zip(row).for_each(|(zj, w)| *zj += v * w);
                }
            } else {
                let prev = &cache.a[li - 1];
                for (i, &ai) in prev.iter().enumerate() {
                    if ai != 0.0 {
                        let row = &layer.w[i * out..(i + 1) * out];
                        z.iter_mut().zip(row).for_each(|(zj, w)| *zj += ai * w);
                    }
                }
            }
            if li < hidden {
                let mut a: Vec<f64> = z.iter().map(|&v| act.apply(v)).collect();
                let mask = match rng.as_deref_mut() {
                    Some(r) if self.config.dropout > 0.0 => {
                        let m: Vec<f64> = (0..out)
                            .map(|_| if r.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                            .collect();
                        a.iter_mut().zip(&m).for_each(|(x, s)| *x *= s);
                        m
                    }
                    _ => Vec::new(),
                };
                cache.a.push(a);
                cache.mask.push(mask);
            }
            cache.z.push(z);
        }
        cache
    }

    /// Adds d(output)/d(params) scaled by `dout` into `grads`.
    pub(crate) fn backward(&self, x: &SparseVec, cache: &Cache, dout: f64, grads: &mut Gradients) {
        let act = self.config.activation;
        let mut delta = vec![dout];
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let out = layer.out_dim;
            grads.b[li].iter_mut().zip(&delta).for_each(|(g, d)| *g += d);
            if li == 0 {
                for &(i, v) in x.entries() {
                    grads.touch(i);
                    let v = v as f64;
                    let row = &mut grads.w[0][i as usize * out..(i as usize + 1) * out];
                    row.iter_mut().zip(&delta).for_each(|(g, d)| *g += v * d);
                }
                break;
            }
            let prev = &cache.a[li - 1];
            let gw = &mut grads.w[li];
            let mut next = vec![0.0; layer.in_dim];
            for i in 0..layer.in_dim {
                let row = &layer.w[i * out..(i + 1) * out];
                let ai = prev[i];
                if ai != 0.0 {
                    gw[i * out..(i + 1) * out]
                        .iter_mut()
                        .zip(&delta)
                        .for_each(|(g, d)| *g += ai * d);
                }
                next[i] = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
            }
            let z_prev = &cache.z[li - 1];
            let mask = &cache.mask[li - 1];
            for i in 0..layer.in_dim {
                next[i] *= act.derivative(z_prev[i]);
                if !mask.is_empty() {
                    next[i] *= mask[i];
                }
            }
            delta = next;
        }
    }

    /// Sum over weights (not biases) of w^2.
    pub fn weight_norm_sq(&self) -> f64 {
        self.layers.iter().flat_map(|l| l.w.iter()).map(|w| w * w).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dims: Vec<usize>, act: Activation) -> MlpConfig {
        MlpConfig {
            input_dim: 3,
            layer_dims: dims,
            activation: act,
            dropout: 0.0,
            l2: 0.0,
            batch_size: 4,
            learning_rate: 0.01,
            epochs: 1,
            seed: 7,
            class_weighting: false,
            margin: 1.0,
        }
    }

    #[test]
    fn zero_weights_give_half_probability() {
        let m = Mlp::zeros(cfg(vec![4, 1], Activation::Tanh)).unwrap();
        let x = SparseVec::from_dense(&[1.0, -2.0, 0.5]);
        assert_eq!(m.forward(&x).unwrap(), 0.0);
        assert_eq!(m.probability(&x).unwrap(), 0.5);
    }

    #[test]
    fn single_linear_layer_is_a_weighted_sum() {
        let mut m = Mlp::zeros(cfg(vec![1], Activation::Relu)).unwrap();
        m.layers[0].w = vec![1.0, 2.0, 3.0];
        m.layers[0].b = vec![0.5];
        let y = m.forward_dense(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(y, 1.0 + 2.0 + 6.0 + 0.5);
    }

    #[test]
    fn forward_is_deterministic() {
        let m = Mlp::new(cfg(vec![5, 3, 1], Activation::Relu)).unwrap();
        let x = SparseVec::from_dense(&[0.3, 0.0, -1.0]);
        assert_eq!(m.forward(&x).unwrap(), m.forward(&x).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let m = Mlp::new(cfg(vec![1], Activation::Relu)).unwrap();
        assert!(matches!(m.forward_dense(&[1.0]), Err(NnError::Dimension { expected: 3, got: 1 })));
    }

    #[test]
    fn invalid_configs() {
        assert!(Mlp::new(cfg(vec![4, 2], Activation::Relu)).is_err());
        assert!(Mlp::new(MlpConfig {
            dropout: 1.0,
            ..cfg(vec![1], Activation::Relu)
        })
        .is_err());
    }

    #[test]
    fn default_profiles() {
        let c = MlpConfig::site_classifier(6487);
        assert_eq!(c.layer_dims, vec![512, 256, 128, 164, 1]);
        assert_eq!((c.batch_size, c.dropout, c.activation), (64, 0.2, Activation::Relu));
        assert_eq!(MlpConfig::site_classifier_corrected(8).layer_dims[3], 64);
        let r = MlpConfig::siamese_ranker(15022);
        assert_eq!(r.layer_dims, vec![360, 360, 1]);
        assert_eq!((r.batch_size, r.dropout, r.activation), (200, 0.5, Activation::Tanh));
    }
}
