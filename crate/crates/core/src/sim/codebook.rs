use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::probability::{Distribution, Dmc};

/// Draws symbols from a fixed probability vector.
#[derive(Clone, Debug)]
pub(crate) struct SymbolSampler {
    index: WeightedIndex<f64>,
}

impl SymbolSampler {
    pub(crate) fn new(probs: &[f64]) -> Result<Self> {
        WeightedIndex::new(probs)
            .map(|index| Self { index })
            .map_err(|e| Error::InvalidSimulation(format!("cannot sample from {probs:?}: {e}")))
    }

    pub(crate) fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }
}

/// One sampler per channel row.
#[derive(Clone, Debug)]
pub(crate) struct ChannelSampler {
    rows: Vec<SymbolSampler>,
}

impl ChannelSampler {
    pub(crate) fn new(channel: &Dmc<f64>) -> Result<Self> {
        let rows = (0..channel.inputs()).map(|a| SymbolSampler::new(channel.row(a))).collect::<Result<_>>()?;
        Ok(Self { rows })
    }

    pub(crate) fn transmit<R: Rng>(&self, word: &[usize], rng: &mut R) -> Vec<usize> {
        word.iter().map(|&a| self.rows[a].sample(rng)).collect()
    }
}

/// `M` codewords of length `n`, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codebook {
    n: usize,
    symbols: Vec<usize>,
    alphabet: usize,
}

impl Codebook {
    pub fn from_words(words: Vec<Vec<usize>>, alphabet: usize) -> Result<Self> {
        let n = words.first().map_or(0, Vec::len);
        if n == 0 || words.iter().any(|w| w.len() != n) {
            return Err(Error::InvalidSimulation("codewords must be nonempty and of equal length".into()));
        }
        if words.iter().flatten().any(|&s| s >= alphabet) {
            return Err(Error::InvalidSimulation(format!("symbol outside alphabet of size {alphabet}")));
        }
        Ok(Self { n, symbols: words.concat(), alphabet })
    }

    pub(crate) fn sample<R: Rng>(sampler: &SymbolSampler, alphabet: usize, n: usize, m: usize, rng: &mut R) -> Self {
        let symbols = (0..n * m).map(|_| sampler.sample(rng)).collect();
        Self { n, symbols, alphabet }
    }

    pub fn len(&self) -> usize {
        self.symbols.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn word(&self, m: usize) -> &[usize] {
        &self.symbols[m * self.n..(m + 1) * self.n]
    }

    pub fn words(&self) -> impl Iterator<Item = &[usize]> {
        self.symbols.chunks(self.n)
    }
}

/// I.i.d. codebook with symbols drawn from `input`; identical for identical seeds.
pub fn generate_codebook(input: &Distribution<f64>, n: usize, m: usize, seed: u64) -> Result<Codebook> {
    if n == 0 || m < 2 {
        return Err(Error::InvalidSimulation(format!("need n >= 1 and M >= 2, got n = {n}, M = {m}")));
    }
    let sampler = SymbolSampler::new(input.probs())?;
    Ok(Codebook::sample(&sampler, input.len(), n, m, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Passes `word` through the memoryless channel.
pub fn transmit(channel: &Dmc<f64>, word: &[usize], seed: u64) -> Result<Vec<usize>> {
    if let Some(&a) = word.iter().find(|&&a| a >= channel.inputs()) {
        return Err(Error::InvalidSimulation(format!("symbol {a} outside the channel input alphabet")));
    }
    Ok(ChannelSampler::new(channel)?.transmit(word, &mut ChaCha8Rng::seed_from_u64(seed)))
}
