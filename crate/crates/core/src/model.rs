//! Fully-connected tanh networks over a flat parameter vector.
//!
//! Parameters are laid out layer by layer: the `fan_out × fan_in` weight
//! matrix in row-major order, then the `fan_out` biases. Hidden layers use
//! tanh, the output layer is affine.

use std::io::{self, Read, Write};
use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::autodiff::{self, Activation, DenseLayer, Jet2, Tape, VarRange};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Layer widths `(input, hidden…, output)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MlpSpec {
    widths: Vec<usize>,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>) -> Result<Self, ModelError> {
        if widths.len() < 2 {
            return Err(ModelError::InvalidSpec(format!(
                "need at least 2 layers, got {}",
                widths.len()
            )));
        }
        if widths.contains(&0) {
            return Err(ModelError::InvalidSpec("layer widths must be >= 1".into()));
        }
        Ok(Self { widths })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// `(fan_in, fan_out, offset)` for every affine layer.
    fn shapes(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut offset = 0;
        self.widths.windows(2).map(move |w| {
            let o = offset;
            offset += w[0] * w[1] + w[1];
            (w[0], w[1], o)
        })
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.num_layers() {
            Activation::Identity
        } else {
            Activation::Tanh
        }
    }

    fn check_params(&self, theta: &[f64]) -> Result<(), ModelError> {
        if theta.len() != self.num_params() {
            return Err(ModelError::DimensionMismatch {
                expected: self.num_params(),
                found: theta.len(),
            });
        }
        Ok(())
    }

    /// Glorot-uniform weights on `±√(6/(fan_in+fan_out))`, zero biases.
    pub fn init_params(&self, seed: u64) -> FlatParams {
        self.init_params_with(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn init_params_with<R: Rng + ?Sized>(&self, rng: &mut R) -> FlatParams {
        let mut theta = vec![0.0; self.num_params()];
        for (fan_in, fan_out, off) in self.shapes() {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in &mut theta[off..off + fan_in * fan_out] {
                *w = rng.random_range(-a..=a);
            }
        }
        FlatParams(theta)
    }

    pub fn forward(&self, theta: &[f64], input: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_params(theta)?;
        if input.len() != self.input_dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.input_dim(),
                found: input.len(),
            });
        }
        let mut x = input.to_vec();
        for (l, (fan_in, fan_out, off)) in self.shapes().enumerate() {
            let w = &theta[off..off + fan_in * fan_out];
            let b = &theta[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
            let mut z: Vec<f64> = (0..fan_out)
                .map(|i| crate::linalg::dot(&w[i * fan_in..(i + 1) * fan_in], &x) + b[i])
                .collect();
            if self.activation(l) == Activation::Tanh {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            x = z;
        }
        Ok(x)
    }

    /// `(u(t), u′(t), u″(t))` for a 1 → 1 network, in plain floating point.
    pub fn eval_jet(&self, theta: &[f64], t: f64) -> Result<[f64; 3], ModelError> {
        self.check_params(theta)?;
        if self.input_dim() != 1 || self.output_dim() != 1 {
            return Err(ModelError::InvalidSpec("jets need a 1 -> 1 network".into()));
        }
        let (mut x0, mut x1, mut x2) = (vec![t], vec![1.0], vec![0.0]);
        for (l, (fan_in, fan_out, off)) in self.shapes().enumerate() {
            let w = &theta[off..off + fan_in * fan_out];
            let b = &theta[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
            let row = |i: usize| &w[i * fan_in..(i + 1) * fan_in];
            let mut z0: Vec<f64> = (0..fan_out)
                .map(|i| crate::linalg::dot(row(i), &x0) + b[i])
                .collect();
            let mut z1: Vec<f64> = (0..fan_out).map(|i| crate::linalg::dot(row(i), &x1)).collect();
            let mut z2: Vec<f64> = (0..fan_out).map(|i| crate::linalg::dot(row(i), &x2)).collect();
            if self.activation(l) == Activation::Tanh {
                for i in 0..fan_out {
                    let y = z0[i].tanh();
                    let s = 1.0 - y * y;
                    let (a1, a2) = (z1[i], z2[i]);
                    z0[i] = y;
                    z1[i] = s * a1;
                    z2[i] = s * a2 - 2.0 * y * s * a1 * a1;
                }
            }
            x0 = z0;
            x1 = z1;
            x2 = z2;
        }
        Ok([x0[0], x1[0], x2[0]])
    }

    /// Tape views of every layer given the parameter leaves.
    pub fn tape_layers(&self, params: VarRange) -> Vec<DenseLayer> {
        assert_eq!(params.len(), self.num_params(), "parameter leaf count");
        self.shapes()
            .enumerate()
            .map(|(l, (fan_in, fan_out, off))| DenseLayer {
                weights: params.slice(off, fan_in * fan_out),
                biases: params.slice(off + fan_in * fan_out, fan_out),
                fan_in,
                fan_out,
                activation: self.activation(l),
            })
            .collect()
    }

    pub fn forward_on_tape(&self, tape: &mut Tape, params: VarRange, input: &[f64]) -> VarRange {
        let layers = self.tape_layers(params);
        let x = tape.constants_from(input);
        autodiff::jet::forward(tape, &layers, x)
    }

    pub fn jet_on_tape(&self, tape: &mut Tape, params: VarRange, t: f64) -> Jet2 {
        let layers = self.tape_layers(params);
        autodiff::jet_propagate(tape, &layers, t)
    }
}

/// One affine layer split out of a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    /// `fan_out × fan_in`, row-major.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

pub fn unflatten(spec: &MlpSpec, theta: &[f64]) -> Result<Vec<Layer>, ModelError> {
    spec.check_params(theta)?;
    Ok(spec
        .shapes()
        .map(|(fan_in, fan_out, off)| {
            let nw = fan_in * fan_out;
            Layer {
                fan_in,
                fan_out,
                weights: theta[off..off + nw].to_vec(),
                biases: theta[off + nw..off + nw + fan_out].to_vec(),
            }
        })
        .collect())
}

pub fn flatten(layers: &[Layer]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend_from_slice(&l.weights);
        out.extend_from_slice(&l.biases);
    }
    out
}

/// Network parameters `θ` in the flat layout described in the module docs.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatParams(pub Vec<f64>);

impl FlatParams {
    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for FlatParams {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Writes `u32 count, count × u32 header words, f64 payload`, all
/// little-endian.
pub fn write_flat<W: Write>(mut w: W, header: &[u32], values: &[f64]) -> io::Result<()> {
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    for h in header {
        w.write_all(&h.to_le_bytes())?;
    }
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

/// Inverse of [`write_flat`]; the payload runs to end of input.
pub fn read_flat<R: Read>(mut r: R) -> Result<(Vec<u32>, Vec<f64>), ModelError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let word = |i: usize| -> Result<u32, ModelError> {
        bytes
            .get(4 * i..4 * i + 4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
            .ok_or_else(|| ModelError::Format("truncated header".into()))
    };
    let count = word(0)? as usize;
    let header = (1..=count).map(word).collect::<Result<Vec<_>, _>>()?;
    let payload = &bytes[4 * (count + 1)..];
    if payload.len() % 8 != 0 {
        return Err(ModelError::Format(format!(
            "payload of {} bytes is not a whole number of f64",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, values))
}

/// Parameter checkpoint: the header holds the layer widths.
pub fn write_params<W: Write>(w: W, spec: &MlpSpec, theta: &[f64]) -> Result<(), ModelError> {
    spec.check_params(theta)?;
    let widths: Vec<u32> = spec.widths.iter().map(|&x| x as u32).collect();
    write_flat(w, &widths, theta)?;
    Ok(())
}

pub fn read_params<R: Read>(r: R) -> Result<(MlpSpec, Vec<f64>), ModelError> {
    let (header, theta) = read_flat(r)?;
    let spec = MlpSpec::new(header.into_iter().map(|x| x as usize).collect())?;
    spec.check_params(&theta)?;
    Ok((spec, theta))
}
