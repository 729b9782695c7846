use super::{EncoderParams, LstmParams};
use crate::corpus::{NUM_LABELS, PAD};
use crate::crf::EmissionMatrix;
use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::tensor::Matrix;

/// Activations of one direction, indexed by token position (not by
/// processing step).
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionCache {
    /// post-activation gates, `n x 4h` in (input, forget, cell, output) order
    pub gates: Vec<f64>,
    pub cells: Vec<f64>,
    pub tanh_cells: Vec<f64>,
    pub hidden: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub token_ids: Vec<usize>,
    pub fwd: DirectionCache,
    pub bwd: DirectionCache,
}

impl ForwardCache {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    /// `[h_fwd_t ; h_bwd_t]` for position `t`.
    pub fn hidden_concat(&self, t: usize) -> Vec<f64> {
        let h = self.fwd.hidden.len() / self.len();
        let mut v = Vec::with_capacity(2 * h);
        v.extend_from_slice(&self.fwd.hidden[t * h..(t + 1) * h]);
        v.extend_from_slice(&self.bwd.hidden[t * h..(t + 1) * h]);
        v
    }
}

fn run_direction(
    lstm: &LstmParams,
    embed: &Matrix,
    ids: &[usize],
    order: &[usize],
) -> DirectionCache {
    let n = ids.len();
    let h = lstm.hidden_dim();
    let mut cache = DirectionCache {
        gates: vec![0.0; n * 4 * h],
        cells: vec![0.0; n * h],
        tanh_cells: vec![0.0; n * h],
        hidden: vec![0.0; n * h],
    };
    let zeros = vec![0.0; h];
    let mut pre = vec![0.0; 4 * h];
    let mut prev: Option<usize> = None;
    for &t in order {
        pre.copy_from_slice(&lstm.b);
        lstm.wx.matvec_acc(embed.row(ids[t]), &mut pre);
        let (h_prev, c_prev) = match prev {
            Some(p) => (
                cache.hidden[p * h..(p + 1) * h].to_vec(),
                cache.cells[p * h..(p + 1) * h].to_vec(),
            ),
            None => (zeros.clone(), zeros.clone()),
        };
        lstm.wh.matvec_acc(&h_prev, &mut pre);
        let gates = &mut cache.gates[t * 4 * h..(t + 1) * 4 * h];
        for k in 0..h {
            let i = sigmoid(pre[k]);
            let f = sigmoid(pre[h + k]);
            let g = pre[2 * h + k].tanh();
            let o = sigmoid(pre[3 * h + k]);
            gates[k] = i;
            gates[h + k] = f;
            gates[2 * h + k] = g;
            gates[3 * h + k] = o;
            let c = f * c_prev[k] + i * g;
            let tc = c.tanh();
            cache.cells[t * h + k] = c;
            cache.tanh_cells[t * h + k] = tc;
            cache.hidden[t * h + k] = o * tc;
        }
        prev = Some(t);
    }
    cache
}

/// Emission scores for a token-id sequence plus the activations needed by
/// [`encode_backward`].
pub fn encode_forward(
    params: &EncoderParams,
    token_ids: &[usize],
) -> Result<(EmissionMatrix, ForwardCache)> {
    let n = token_ids.len();
    if n == 0 {
        return Err(Error::Shape("empty token sequence".into()));
    }
    let v = params.embed.rows();
    if let Some(&bad) = token_ids.iter().find(|&&id| id >= v) {
        return Err(Error::Data(format!(
            "token id {bad} out of range for vocabulary of {v}"
        )));
    }
    let forward_order: Vec<usize> = (0..n).collect();
    let backward_order: Vec<usize> = (0..n).rev().collect();
    let fwd = run_direction(&params.fwd, &params.embed, token_ids, &forward_order);
    let bwd = run_direction(&params.bwd, &params.embed, token_ids, &backward_order);
    let cache = ForwardCache {
        token_ids: token_ids.to_vec(),
        fwd,
        bwd,
    };
    let scores = (0..n)
        .map(|t| {
            let mut row = [0.0; NUM_LABELS];
            row.copy_from_slice(&params.proj_b);
            params.proj_w.matvec_acc(&cache.hidden_concat(t), &mut row);
            row
        })
        .collect();
    Ok((EmissionMatrix::new(scores), cache))
}

#[allow(clippy::too_many_arguments)]
fn backprop_direction(
    lstm: &LstmParams,
    grad: &mut LstmParams,
    embed: &Matrix,
    d_embed: &mut Matrix,
    ids: &[usize],
    cache: &DirectionCache,
    d_hidden: &[f64],
    order: &[usize],
) {
    let h = lstm.hidden_dim();
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut da = vec![0.0; 4 * h];
    for step in (0..order.len()).rev() {
        let t = order[step];
        let prev = step.checked_sub(1).map(|s| order[s]);
        let gates = &cache.gates[t * 4 * h..(t + 1) * 4 * h];
        for k in 0..h {
            let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
            let tc = cache.tanh_cells[t * h + k];
            let c_prev = prev.map_or(0.0, |p| cache.cells[p * h + k]);
            let dh = d_hidden[t * h + k] + dh_next[k];
            let d_o = dh * tc;
            let dc = dh * o * (1.0 - tc * tc) + dc_next[k];
            da[k] = dc * g * i * (1.0 - i);
            da[h + k] = dc * c_prev * f * (1.0 - f);
            da[2 * h + k] = dc * i * (1.0 - g * g);
            da[3 * h + k] = d_o * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        for (b, d) in grad.b.iter_mut().zip(&da) {
            *b += d;
        }
        grad.wx.add_outer(&da, embed.row(ids[t]));
        lstm.wx.t_matvec_acc(&da, d_embed.row_mut(ids[t]));
        dh_next.fill(0.0);
        if let Some(p) = prev {
            grad.wh.add_outer(&da, &cache.hidden[p * h..(p + 1) * h]);
            lstm.wh.t_matvec_acc(&da, &mut dh_next);
        }
    }
}

/// Exact gradients of `sum_t <d_emissions_t, emissions_t>` with respect to
/// every encoder tensor. The padding row of the embedding gradient is zero.
pub fn encode_backward(
    params: &EncoderParams,
    cache: &ForwardCache,
    d_emissions: &EmissionMatrix,
) -> Result<EncoderParams> {
    let n = cache.len();
    if d_emissions.len() != n {
        return Err(Error::Shape(format!(
            "{} emission-gradient rows for {n} tokens",
            d_emissions.len()
        )));
    }
    let h = params.fwd.hidden_dim();
    if cache.fwd.hidden.len() != n * h || cache.bwd.hidden.len() != n * h {
        return Err(Error::Shape(
            "forward cache does not match parameters".into(),
        ));
    }
    let mut grad = params.zeros_like();
    let mut d_fwd = vec![0.0; n * h];
    let mut d_bwd = vec![0.0; n * h];
    let mut d_cat = vec![0.0; 2 * h];
    for (t, de) in d_emissions.scores.iter().enumerate() {
        let cat = cache.hidden_concat(t);
        grad.proj_w.add_outer(de, &cat);
        for (b, d) in grad.proj_b.iter_mut().zip(de) {
            *b += d;
        }
        d_cat.fill(0.0);
        params.proj_w.t_matvec_acc(de, &mut d_cat);
        d_fwd[t * h..(t + 1) * h].copy_from_slice(&d_cat[..h]);
        d_bwd[t * h..(t + 1) * h].copy_from_slice(&d_cat[h..]);
    }
    let forward_order: Vec<usize> = (0..n).collect();
    let backward_order: Vec<usize> = (0..n).rev().collect();
    let ids = &cache.token_ids;
    backprop_direction(
        &params.fwd,
        &mut grad.fwd,
        &params.embed,
        &mut grad.embed,
        ids,
        &cache.fwd,
        &d_fwd,
        &forward_order,
    );
    backprop_direction(
        &params.bwd,
        &mut grad.bwd,
        &params.embed,
        &mut grad.embed,
        ids,
        &cache.bwd,
        &d_bwd,
        &backward_order,
    );
    if grad.embed.rows() > PAD {
        grad.embed.row_mut(PAD).fill(0.0);
    }
    Ok(grad)
}
