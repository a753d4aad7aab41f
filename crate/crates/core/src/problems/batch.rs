use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::ProblemError;

/// Which sampled objective terms enter one evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Batch {
    Full,
    Indices(Vec<usize>),
}

/// Mini-batch stream over `n` sampled terms.
///
/// Batches are drawn without replacement within an epoch; the order is
/// reshuffled at the start of every epoch. Terms left over when
/// `batch_size` does not divide `n` are dropped for that epoch.
#[derive(Clone, Debug)]
pub struct BatchSampler {
    n: usize,
    batch_size: usize,
    perm: Vec<usize>,
    cursor: usize,
    epoch: u64,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    /// `fraction` in `(0, 1]`; the batch holds `round(fraction · n)` terms and
    /// must hold at least one.
    pub fn new(n: usize, fraction: f64, rng: ChaCha8Rng) -> Result<Self, ProblemError> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(ProblemError::InvalidBatch(format!(
                "fraction {fraction} outside (0, 1]"
            )));
        }
        let batch_size = (fraction * n as f64).round() as usize;
        if batch_size < 1 {
            return Err(ProblemError::InvalidBatch(format!(
                "fraction {fraction} of {n} samples is empty"
            )));
        }
        Ok(Self {
            n,
            batch_size: batch_size.min(n),
            perm: (0..n).collect(),
            cursor: n,
            epoch: 0,
            rng,
        })
    }

    pub fn is_full(&self) -> bool {
        self.batch_size == self.n
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.n / self.batch_size
    }

    /// Completed epochs.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn next_batch(&mut self) -> Batch {
        if self.is_full() {
            self.epoch += 1;
            return Batch::Full;
        }
        if self.cursor + self.batch_size > self.n {
            self.perm.shuffle(&mut self.rng);
            self.cursor = 0;
        }
        let mut idx = self.perm[self.cursor..self.cursor + self.batch_size].to_vec();
        idx.sort_unstable();
        self.cursor += self.batch_size;
        if self.cursor + self.batch_size > self.n {
            self.epoch += 1;
        }
        Batch::Indices(idx)
    }
}
