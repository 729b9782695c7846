//! The complete learnable state and its named-tensor view.
//!
//! Tensor names and order are shared by the optimizer and the checkpoint
//! format.

use crate::crf::CrfParams;
use crate::encoder::{EncoderParams, LstmParams};
use crate::error::{Error, Result};

pub const TENSOR_NAMES: [&str; 12] = [
    "embed",
    "lstm_fwd.Wx",
    "lstm_fwd.Wh",
    "lstm_fwd.b",
    "lstm_bwd.Wx",
    "lstm_bwd.Wh",
    "lstm_bwd.b",
    "proj.W",
    "proj.b",
    "crf.trans",
    "crf.start",
    "crf.end",
];

/// Encoder plus CRF. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub encoder: EncoderParams,
    pub crf: CrfParams,
}

#[derive(Debug, Clone)]
pub struct TensorView<'a> {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

impl ModelParams {
    pub fn zeros_like(&self) -> ModelParams {
        ModelParams {
            encoder: self.encoder.zeros_like(),
            crf: CrfParams::zeros(),
        }
    }

    /// Every tensor in [`TENSOR_NAMES`] order.
    pub fn tensors(&self) -> Vec<TensorView<'_>> {
        let e = &self.encoder;
        fn lstm(p: &LstmParams) -> [(Vec<usize>, &[f64]); 3] {
            [
                (p.wx.shape().to_vec(), p.wx.data()),
                (p.wh.shape().to_vec(), p.wh.data()),
                (vec![p.b.len()], p.b.as_slice()),
            ]
        }
        let mut parts = vec![(e.embed.shape().to_vec(), e.embed.data())];
        parts.extend(lstm(&e.fwd));
        parts.extend(lstm(&e.bwd));
        parts.push((e.proj_w.shape().to_vec(), e.proj_w.data()));
        parts.push((vec![e.proj_b.len()], e.proj_b.as_slice()));
        let n = self.crf.start.len();
        parts.push((vec![n, n], self.crf.trans.as_flattened()));
        parts.push((vec![n], self.crf.start.as_slice()));
        parts.push((vec![n], self.crf.end.as_slice()));
        TENSOR_NAMES
            .iter()
            .zip(parts)
            .map(|(&name, (shape, data))| TensorView { name, shape, data })
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let EncoderParams {
            embed,
            fwd,
            bwd,
            proj_w,
            proj_b,
        } = &mut self.encoder;
        let CrfParams { trans, start, end } = &mut self.crf;
        let slices: [&mut [f64]; 12] = [
            embed.data_mut(),
            fwd.wx.data_mut(),
            fwd.wh.data_mut(),
            fwd.b.as_mut_slice(),
            bwd.wx.data_mut(),
            bwd.wh.data_mut(),
            bwd.b.as_mut_slice(),
            proj_w.data_mut(),
            proj_b.as_mut_slice(),
            trans.as_flattened_mut(),
            start.as_mut_slice(),
            end.as_mut_slice(),
        ];
        TENSOR_NAMES.into_iter().zip(slices).collect()
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) -> Result<()> {
        let theirs = other.tensors();
        let mut ours = self.tensors_mut();
        if theirs.len() != ours.len() {
            return Err(Error::Shape("tensor count".into()));
        }
        for ((name, dst), src) in ours.iter_mut().zip(&theirs) {
            if dst.len() != src.data.len() {
                return Err(Error::Shape(format!(
                    "{name}: {} vs {}",
                    dst.len(),
                    src.data.len()
                )));
            }
            for (d, s) in dst.iter_mut().zip(src.data) {
                *d += scale * s;
            }
        }
        Ok(())
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    /// Name of the first tensor holding a NaN or infinity.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        self.tensors()
            .into_iter()
            .find(|t| t.data.iter().any(|x| !x.is_finite()))
            .map(|t| t.name)
    }
}
