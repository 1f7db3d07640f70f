//! The shared encoder of the Siamese re-ranker: `affine → ReLU → affine`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::FEATURE_DIM;
use super::RerankError;
use crate::codec::{CodecError, Decoder, Encoder};
use crate::linalg;

pub const PARAMS_MAGIC: [u8; 4] = *b"DLSN";
pub const DEFAULT_HIDDEN: usize = 256;
pub const DEFAULT_OUTPUT: usize = 128;

/// Two affine layers stored in one flat buffer:
/// `w1[input][hidden] | b1[hidden] | w2[hidden][output] | b2[output]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiameseParams {
    input: usize,
    hidden: usize,
    output: usize,
    theta: Vec<f64>,
}

/// Activations kept from a forward pass for backpropagation.
pub(crate) struct Trace {
    pub hidden_pre: Vec<f64>,
    pub output: Vec<f64>,
}

impl SiameseParams {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        let n = input * hidden + hidden + hidden * output + output;
        Self { input, hidden, output, theta: vec![0.0; n] }
    }

    /// Default widths (969 → 256 → 128), Xavier-uniform weights, zero biases.
    pub fn init(seed: u64) -> Self {
        Self::init_with_dims(FEATURE_DIM, DEFAULT_HIDDEN, DEFAULT_OUTPUT, seed)
    }

    pub fn init_with_dims(input: usize, hidden: usize, output: usize, seed: u64) -> Self {
        let mut p = Self::zeros(input, hidden, output);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b1 = libm::sqrt(6.0 / (input + hidden) as f64);
        let b2 = libm::sqrt(6.0 / (hidden + output) as f64);
        let (w1, rest) = p.theta.split_at_mut(input * hidden);
        w1.iter_mut().for_each(|w| *w = rng.random_range(-b1..b1));
        let w2 = &mut rest[hidden..hidden + hidden * output];
        w2.iter_mut().for_each(|w| *w = rng.random_range(-b2..b2));
        p
    }

    /// Build from explicit weights: `w1[i][j]` maps input `i` to hidden `j`,
    /// `w2[j][k]` maps hidden `j` to output `k`.
    pub fn from_layers(w1: &[Vec<f64>], b1: &[f64], w2: &[Vec<f64>], b2: &[f64]) -> Result<Self, RerankError> {
        let (input, hidden, output) = (w1.len(), b1.len(), b2.len());
        let mismatch = |expected, found| RerankError::DimensionMismatch { expected, found };
        if let Some(row) = w1.iter().find(|r| r.len() != hidden) {
            return Err(mismatch(hidden, row.len()));
        }
        if w2.len() != hidden {
            return Err(mismatch(hidden, w2.len()));
        }
        if let Some(row) = w2.iter().find(|r| r.len() != output) {
            return Err(mismatch(output, row.len()));
        }
        let mut theta = Vec::new();
        w1.iter().for_each(|r| theta.extend_from_slice(r));
        theta.extend_from_slice(b1);
        w2.iter().for_each(|r| theta.extend_from_slice(r));
        theta.extend_from_slice(b2);
        Self::from_flat(input, hidden, output, theta)
    }

    pub fn from_flat(input: usize, hidden: usize, output: usize, theta: Vec<f64>) -> Result<Self, RerankError> {
        let p = Self::zeros(input, hidden, output);
        if theta.len() != p.theta.len() {
            return Err(RerankError::DimensionMismatch { expected: p.theta.len(), found: theta.len() });
        }
        if !theta.iter().all(|x| x.is_finite()) {
            return Err(RerankError::NonFiniteParams);
        }
        Ok(Self { theta, ..p })
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn output_dim(&self) -> usize {
        self.output
    }

    /// All parameters in storage order.
    pub fn flat(&self) -> &[f64] {
        &self.theta
    }

    pub(crate) fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.input * self.hidden;
        let w2 = b1 + self.hidden;
        (b1, w2, w2 + self.hidden * self.output)
    }

    /// `layer2(relu(layer1(x)))`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, RerankError> {
        Ok(self.trace(x)?.output)
    }

    pub(crate) fn trace(&self, x: &[f64]) -> Result<Trace, RerankError> {
        if x.len() != self.input {
            return Err(RerankError::DimensionMismatch { expected: self.input, found: x.len() });
        }
        let (b1, w2, b2) = self.offsets();
        let h = self.hidden;
        let mut hidden_pre = self.theta[b1..b1 + h].to_vec();
        for (i, &xi) in x.iter().enumerate() {
            // feature vectors are sparse: the question KG slot is all zeros
            if xi != 0.0 {
                let row = &self.theta[i * h..(i + 1) * h];
                hidden_pre.iter_mut().zip(row).for_each(|(z, w)| *z += xi * w);
            }
        }
        let mut output = self.theta[b2..b2 + self.output].to_vec();
        for (j, &z) in hidden_pre.iter().enumerate() {
            if z > 0.0 {
                let row = &self.theta[w2 + j * self.output..w2 + (j + 1) * self.output];
                output.iter_mut().zip(row).for_each(|(y, w)| *y += z * w);
            }
        }
        if !output.iter().all(|y| y.is_finite()) {
            return Err(RerankError::NonFiniteOutput);
        }
        Ok(Trace { hidden_pre, output })
    }

    /// Add `∂(dy · f(x)) / ∂θ` into `grad`.
    pub(crate) fn backward(&self, x: &[f64], trace: &Trace, dy: &[f64], grad: &mut [f64]) {
        let (b1, w2, b2) = self.offsets();
        let (h, o) = (self.hidden, self.output);
        grad[b2..b2 + o].iter_mut().zip(dy).for_each(|(g, d)| *g += d);
        let mut dz = vec![0.0; h];
        for (j, &z) in trace.hidden_pre.iter().enumerate() {
            if z > 0.0 {
                let off = w2 + j * o;
                for k in 0..o {
                    grad[off + k] += z * dy[k];
                }
                dz[j] = linalg::dot(&self.theta[off..off + o], dy);
            }
        }
        grad[b1..b1 + h].iter_mut().zip(&dz).for_each(|(g, d)| *g += d);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                grad[i * h..(i + 1) * h].iter_mut().zip(&dz).for_each(|(g, d)| *g += xi * d);
            }
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new(PARAMS_MAGIC);
        enc.put_u32(self.input as u32);
        enc.put_u32(self.hidden as u32);
        enc.put_u32(self.output as u32);
        enc.put_f64s(&self.theta);
        enc.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut dec = Decoder::new(bytes, PARAMS_MAGIC)?;
        let (input, hidden, output) = (dec.u32()? as usize, dec.u32()? as usize, dec.u32()? as usize);
        let n = input
            .checked_mul(hidden)
            .and_then(|a| a.checked_add(hidden))
            .and_then(|a| a.checked_add(hidden.checked_mul(output)?))
            .and_then(|a| a.checked_add(output))
            .ok_or(CodecError::Invalid(alloc::string::String::from("layer sizes overflow")))?;
        let theta = dec.f64s(n)?;
        dec.finish()?;
        Self::from_flat(input, hidden, output, theta).map_err(|e| CodecError::Invalid(alloc::format!("{e}")))
    }
}
