use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::probability::type_mutual_information;
use crate::probability::Distribution;
use crate::rate::{CompoundSet, DecoderKind, Metric};

use super::Codebook;

#[derive(Clone, Debug, PartialEq)]
pub enum DecoderVariant {
    /// Maximize `E_type[d]`.
    Linear(Metric<f64>),
    /// Maximize `max_k E_type[d_k]`.
    Generalized(Vec<Metric<f64>>),
    /// Maximize the empirical mutual information of the joint type.
    Mmi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TiePolicy {
    /// A decision counts as correct only if the transmitted word is the unique maximizer.
    Pessimistic,
    /// The lowest-index maximizer is taken as the decision.
    LowestIndex,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderSpec {
    pub variant: DecoderVariant,
    pub tie_policy: TiePolicy,
}

impl DecoderSpec {
    pub fn new(variant: DecoderVariant) -> Result<Self> {
        if let DecoderVariant::Generalized(ms) = &variant {
            if ms.is_empty() {
                return Err(Error::EmptyMetrics);
            }
            if ms.iter().any(|m| m.shape() != ms[0].shape()) {
                return Err(Error::Dimension("generalized decoder metrics differ in shape".into()));
            }
        }
        Ok(Self { variant, tie_policy: TiePolicy::Pessimistic })
    }

    pub fn linear(metric: Metric<f64>) -> Self {
        Self { variant: DecoderVariant::Linear(metric), tie_policy: TiePolicy::Pessimistic }
    }

    pub fn generalized(metrics: Vec<Metric<f64>>) -> Result<Self> {
        Self::new(DecoderVariant::Generalized(metrics))
    }

    pub fn mmi() -> Self {
        Self { variant: DecoderVariant::Mmi, tie_policy: TiePolicy::Pessimistic }
    }

    /// The decoder of a named family built from `set` at `input`.
    pub fn for_kind(kind: DecoderKind, set: &CompoundSet<f64>, input: &Distribution<f64>) -> Result<Self> {
        match set.decoder_metrics(kind, input)? {
            None => Ok(Self::mmi()),
            Some(ms) if matches!(kind, DecoderKind::Ml | DecoderKind::Map) => {
                Ok(Self::linear(ms.into_iter().next().expect("one metric")))
            }
            Some(ms) => Self::generalized(ms),
        }
    }

    pub fn with_tie_policy(mut self, policy: TiePolicy) -> Self {
        self.tie_policy = policy;
        self
    }

    /// Score of a joint type given as counts over `n` positions.
    pub fn score(&self, counts: &Matrix<f64>, n: usize) -> f64 {
        let linear = |m: &Metric<f64>| {
            counts.as_slice().iter().zip(m.values().as_slice()).map(|(&c, &d)| c * d).sum::<f64>() / n as f64
        };
        match &self.variant {
            DecoderVariant::Linear(m) => linear(m),
            DecoderVariant::Generalized(ms) => ms.iter().map(linear).fold(f64::NEG_INFINITY, f64::max),
            DecoderVariant::Mmi => type_mutual_information(counts),
        }
    }

    pub(crate) fn check_alphabets(&self, inputs: usize, outputs: usize) -> Result<()> {
        let shapes: Vec<(usize, usize)> = match &self.variant {
            DecoderVariant::Linear(m) => vec![m.shape()],
            DecoderVariant::Generalized(ms) => ms.iter().map(Metric::shape).collect(),
            DecoderVariant::Mmi => vec![],
        };
        if let Some(s) = shapes.into_iter().find(|&s| s != (inputs, outputs)) {
            return Err(Error::Dimension(format!("metric of shape {s:?} for a {inputs}x{outputs} channel")));
        }
        Ok(())
    }
}

/// Counts of each `(x(i), y(i))` pair.
pub fn joint_type(x: &[usize], y: &[usize], inputs: usize, outputs: usize) -> Matrix<f64> {
    let mut m = Matrix::zeros(inputs, outputs);
    for (&a, &b) in x.iter().zip(y) {
        m[(a, b)] += 1.0;
    }
    m
}

/// Two scores closer than this count as tied.
pub(crate) fn tie_tolerance(s: f64) -> f64 {
    1e-10 * (1.0 + s.abs())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    /// Lowest-index maximizer.
    pub index: usize,
    /// Every codeword within the tie tolerance of the best score.
    pub argmax: Vec<usize>,
}

impl Decoded {
    pub fn tied(&self) -> bool {
        self.argmax.len() > 1
    }

    /// Whether the decision counts as correct for transmitted message `m`.
    pub fn correct(&self, m: usize, policy: TiePolicy) -> bool {
        match policy {
            TiePolicy::Pessimistic => self.argmax == [m],
            TiePolicy::LowestIndex => self.index == m,
        }
    }
}

pub fn decode(y: &[usize], codebook: &Codebook, spec: &DecoderSpec) -> Result<Decoded> {
    if y.len() != codebook.block_length() {
        return Err(Error::Dimension(format!(
            "received word of length {} for block length {}",
            y.len(),
            codebook.block_length()
        )));
    }
    let outputs = match &spec.variant {
        DecoderVariant::Linear(m) => m.shape().1,
        DecoderVariant::Generalized(ms) => ms[0].shape().1,
        DecoderVariant::Mmi => y.iter().max().map_or(1, |&b| b + 1),
    };
    if let Some(&b) = y.iter().find(|&&b| b >= outputs) {
        return Err(Error::InvalidSimulation(format!("output symbol {b} outside the metric alphabet")));
    }
    spec.check_alphabets(codebook.alphabet(), outputs)?;
    let n = y.len();
    let scores: Vec<f64> =
        codebook.words().map(|x| spec.score(&joint_type(x, y, codebook.alphabet(), outputs), n)).collect();
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = tie_tolerance(best);
    let argmax: Vec<usize> = (0..scores.len()).filter(|&m| scores[m] >= best - tol).collect();
    Ok(Decoded { index: argmax[0], argmax })
}
