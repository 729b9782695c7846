use rand::seq::index;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Entry};
use crate::error::{Error, Result};

/// Generator used for every stochastic choice in the crate.
pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream derived from one seed, so separate consumers (model
/// init, batch sampling, pool construction) never share draws.
pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Indices of one batch: distinct when `size <= len`, with replacement otherwise.
pub fn sample_indices(len: usize, size: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if len == 0 {
        return Err(Error::Data("cannot sample from an empty dataset".into()));
    }
    if size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    if size <= len {
        Ok(index::sample(rng, len, size).into_vec())
    } else {
        Ok((0..size).map(|_| rng.gen_range(0..len)).collect())
    }
}

pub fn sample_batch<'a>(
    dataset: &'a Dataset,
    size: usize,
    rng: &mut Rng,
) -> Result<Vec<&'a Entry>> {
    let idx = sample_indices(dataset.len(), size, rng)?;
    Ok(idx.into_iter().map(|i| &dataset.entries()[i]).collect())
}
