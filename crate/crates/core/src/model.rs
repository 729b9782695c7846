use rayon::prelude::*;

use crate::corpus::{Label, Vocabulary};
use crate::crf::{self, CrfParams, EmissionMatrix, MarginalMatrix};
use crate::encoder::{encode_backward, encode_forward, init_params, EncoderDims};
use crate::error::Result;
use crate::params::ModelParams;

/// Encoder and CRF bound to the vocabulary that maps tokens to rows of the
/// embedding table. Teachers and students are both `Model`s.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: ModelParams,
    pub vocab: Vocabulary,
}

/// CRF negative log-likelihood of one document and its gradient.
pub fn loss_and_grad(
    params: &ModelParams,
    token_ids: &[usize],
    gold: &[Label],
) -> Result<(f64, ModelParams)> {
    let (em, cache) = encode_forward(&params.encoder, token_ids)?;
    let out = crf::nll_and_grad(&em, &params.crf, gold)?;
    let encoder = encode_backward(&params.encoder, &cache, &out.d_emissions)?;
    Ok((
        out.loss,
        ModelParams {
            encoder,
            crf: out.d_crf,
        },
    ))
}

/// Per-document losses and the gradient of their mean. Documents are
/// processed in parallel but reduced in input order, so the result does not
/// depend on scheduling.
pub fn batch_loss_and_grad(
    params: &ModelParams,
    batch: &[(Vec<usize>, &[Label])],
) -> Result<(Vec<f64>, ModelParams)> {
    let per_doc: Vec<(f64, ModelParams)> = batch
        .par_iter()
        .map(|(ids, gold)| loss_and_grad(params, ids, gold))
        .collect::<Result<_>>()?;
    let mut total = params.zeros_like();
    let scale = 1.0 / batch.len().max(1) as f64;
    let mut losses = Vec::with_capacity(per_doc.len());
    for (loss, g) in &per_doc {
        losses.push(*loss);
        total.add_scaled(g, scale)?;
    }
    Ok((losses, total))
}

impl Model {
    pub fn init(vocab: Vocabulary, embed_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        let dims = EncoderDims {
            vocab_size: vocab.len(),
            embed_dim,
            hidden_dim,
        };
        Model {
            params: ModelParams {
                encoder: init_params(dims, seed),
                crf: CrfParams::zeros(),
            },
            vocab,
        }
    }

    pub fn dims(&self) -> EncoderDims {
        self.params.encoder.dims()
    }

    pub fn encode_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        self.vocab.encode(tokens)
    }

    pub fn emissions<S: AsRef<str>>(&self, tokens: &[S]) -> Result<EmissionMatrix> {
        Ok(encode_forward(&self.params.encoder, &self.encode_tokens(tokens))?.0)
    }

    /// Viterbi labels.
    pub fn decode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<Label>> {
        let em = self.emissions(tokens)?;
        Ok(crf::viterbi(&em, &self.params.crf)?.0)
    }

    /// Viterbi labels together with the posterior marginals.
    pub fn decode_with_marginals<S: AsRef<str>>(
        &self,
        tokens: &[S],
    ) -> Result<(Vec<Label>, MarginalMatrix)> {
        let em = self.emissions(tokens)?;
        let (labels, _) = crf::viterbi(&em, &self.params.crf)?;
        Ok((labels, crf::marginals(&em, &self.params.crf)?))
    }

    pub fn loss<S: AsRef<str>>(&self, tokens: &[S], gold: &[Label]) -> Result<f64> {
        let em = self.emissions(tokens)?;
        Ok(crf::nll_and_grad(&em, &self.params.crf, gold)?.loss)
    }
}
