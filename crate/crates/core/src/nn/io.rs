//! Model file: 8-byte magic, u32 version, u32 header length, a JSON header
//! (config, training metadata, layer shapes), then per layer the weights
//! (input-major) and biases as little-endian f32. All integers little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{Layer, Mlp};
use super::{MlpConfig, NnError, TrainingMeta};

pub const MODEL_MAGIC: &[u8; 8] = b"MRXNMLP1";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: MlpConfig,
    meta: TrainingMeta,
    shapes: Vec<(usize, usize)>,
}

pub fn write_model<W: Write>(mut w: W, model: &Mlp) -> Result<(), NnError> {
    let header = Header {
        config: model.config.clone(),
        meta: model.meta.clone(),
        shapes: model.layers.iter().map(|l| (l.in_dim, l.out_dim)).collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| NnError::Format(e.to_string()))?;
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    for l in &model.layers {
        let mut buf = Vec::with_capacity(4 * (l.w.len() + l.b.len()));
        for &x in l.w.iter().chain(&l.b) {
            buf.extend_from_slice(&(x as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, NnError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>, NnError> {
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

pub fn read_model<R: Read>(mut r: R) -> Result<Mlp, NnError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(NnError::Format("not a model file".into()));
    }
    let version = read_u32(&mut r)?;
    if version != MODEL_VERSION {
        return Err(NnError::Format(format!("unsupported version {version}")));
    }
    let len = read_u32(&mut r)? as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| NnError::Format(e.to_string()))?;
    header.config.validate()?;
    let mut expected = Vec::new();
    let mut fan_in = header.config.input_dim;
    for &d in &header.config.layer_dims {
        expected.push((fan_in, d));
        fan_in = d;
    }
    if expected != header.shapes {
        return Err(NnError::Format("layer shapes disagree with config".into()));
    }
    let mut layers = Vec::new();
    for &(i, o) in &header.shapes {
        let w = read_f32s(&mut r, i * o)?;
        let b = read_f32s(&mut r, o)?;
        layers.push(Layer {
            in_dim: i,
            out_dim: o,
            w,
            b,
        });
    }
    Ok(Mlp {
        config: header.config,
        layers,
        meta: header.meta,
    })
}

pub fn save_model(path: impl AsRef<Path>, model: &Mlp) -> Result<(), NnError> {
    write_model(BufWriter::new(File::create(path)?), model)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Mlp, NnError> {
    read_model(BufReader::new(File::open(path)?))
}

impl Mlp {
    /// Human-readable dump of config, metadata and all weights.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::SparseVec;
    use crate::nn::Activation;

    #[test]
    fn save_load_is_bit_exact() {
        let cfg = MlpConfig {
            input_dim: 4,
            layer_dims: vec![3, 1],
            activation: Activation::Tanh,
            dropout: 0.1,
            l2: 0.0,
            batch_size: 2,
            learning_rate: 0.01,
            epochs: 1,
            seed: 9,
            class_weighting: false,
            margin: 1.0,
        };
        let m = Mlp::new(cfg).unwrap();
        let mut buf = Vec::new();
        write_model(&mut buf, &m).unwrap();
        let back = read_model(&buf[..]).unwrap();
        assert_eq!(back, m);
        let x = SparseVec::from_dense(&[0.1, -0.7, 0.0, 2.0]);
        assert_eq!(m.forward(&x).unwrap().to_bits(), back.forward(&x).unwrap().to_bits());
        assert!(m.to_json().contains("\"activation\": \"tanh\""));
    }

    #[test]
    fn truncated_file_fails() {
        let m = Mlp::new(MlpConfig::siamese_ranker(5)).unwrap();
        let mut buf = Vec::new();
        write_model(&mut buf, &m).unwrap();
        assert!(read_model(&buf[..buf.len() - 1]).is_err());
        assert!(read_model(&b"garbage!"[..]).is_err());
    }
}
