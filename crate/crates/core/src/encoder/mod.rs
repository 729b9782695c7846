//! Token encoder: embedding lookup, one bidirectional LSTM layer and a dense
//! projection onto the label space.
//!
//! The rest of the crate only sees emissions and their gradients, so the
//! embedding table can be swapped for another token representation without
//! touching the CRF or the training loops.

mod adam;
mod lstm;

use rand::distributions::{Distribution, Uniform};

pub use adam::{adam_step, AdamConfig, OptimizerState};
pub use lstm::{encode_backward, encode_forward, DirectionCache, ForwardCache};

use crate::corpus::{stream_rng, NUM_LABELS, PAD};
use crate::tensor::Matrix;

/// Random stream reserved for parameter initialization.
pub(crate) const INIT_STREAM: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderDims {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
}

/// One LSTM direction. Gate blocks along the `4h` rows are ordered
/// input, forget, cell, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub wx: Matrix,
    pub wh: Matrix,
    pub b: Vec<f64>,
}

impl LstmParams {
    fn zeros(embed_dim: usize, hidden_dim: usize) -> Self {
        LstmParams {
            wx: Matrix::zeros(4 * hidden_dim, embed_dim),
            wh: Matrix::zeros(4 * hidden_dim, hidden_dim),
            b: vec![0.0; 4 * hidden_dim],
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.wh.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub embed: Matrix,
    pub fwd: LstmParams,
    pub bwd: LstmParams,
    pub proj_w: Matrix,
    pub proj_b: Vec<f64>,
}

impl EncoderParams {
    pub fn zeros(dims: EncoderDims) -> Self {
        EncoderParams {
            embed: Matrix::zeros(dims.vocab_size, dims.embed_dim),
            fwd: LstmParams::zeros(dims.embed_dim, dims.hidden_dim),
            bwd: LstmParams::zeros(dims.embed_dim, dims.hidden_dim),
            proj_w: Matrix::zeros(NUM_LABELS, 2 * dims.hidden_dim),
            proj_b: vec![0.0; NUM_LABELS],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.dims())
    }

    pub fn dims(&self) -> EncoderDims {
        EncoderDims {
            vocab_size: self.embed.rows(),
            embed_dim: self.embed.cols(),
            hidden_dim: self.fwd.hidden_dim(),
        }
    }
}

fn xavier(m: &mut Matrix, rng: &mut crate::corpus::Rng) {
    let bound = (6.0 / (m.rows() + m.cols()) as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound);
    for x in m.data_mut() {
        *x = dist.sample(rng);
    }
}

/// Seeded initialization: embeddings uniform in [-0.1, 0.1] with a zero
/// padding row, Xavier-uniform weights, zero biases except a forget-gate
/// bias of 1.
pub fn init_params(dims: EncoderDims, seed: u64) -> EncoderParams {
    assert!(
        dims.embed_dim >= 1 && dims.hidden_dim >= 1,
        "encoder dims must be positive"
    );
    let mut rng = stream_rng(seed, INIT_STREAM);
    let mut p = EncoderParams::zeros(dims);
    let emb = Uniform::new_inclusive(-0.1, 0.1);
    for x in p.embed.data_mut() {
        *x = emb.sample(&mut rng);
    }
    if dims.vocab_size > PAD {
        p.embed.row_mut(PAD).fill(0.0);
    }
    let h = dims.hidden_dim;
    for lstm in [&mut p.fwd, &mut p.bwd] {
        xavier(&mut lstm.wx, &mut rng);
        xavier(&mut lstm.wh, &mut rng);
        lstm.b[h..2 * h].fill(1.0);
    }
    xavier(&mut p.proj_w, &mut rng);
    p
}
