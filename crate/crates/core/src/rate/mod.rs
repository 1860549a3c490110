//! Achievable rates of linear and generalized linear decoders over compound sets.
//!
//! Everything here reduces to one primitive, [`kl_projection`]: the smallest
//! divergence from a product joint to the joints with the same marginals whose
//! expected metric clears a threshold.

mod capacity;
mod onesided;
mod projection;
mod rates;
mod transport;

pub use capacity::{compound_capacity, CapacityConfig, CapacityResult};
pub use onesided::{
    convex_hull_worst, is_one_sided, one_sided_cover, pythagorean_gap, worst_channel, HullWorst, OneSidedCheck,
    OneSidedWitness, WorstChannel,
};
pub use projection::{kl_projection, Projection, ProjectionConfig, ProjectionDiagnostics, ProjectionOutcome};
pub use rates::{
    generalized_projection, generalized_rate, mismatched_projection, mismatched_rate, rate_report,
    GeneralizedRate, RateReport,
};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::probability::{joint_of, Distribution, Dmc};
use crate::scalar::Real;

/// Single-letter decoding metric `d(a, b)` in nats per symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric<T> {
    values: Matrix<T>,
}

impl<T: Real> Metric<T> {
    pub fn new(values: Matrix<T>) -> Result<Self> {
        if values.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMetric("metric entries must be finite".into()));
        }
        Ok(Self { values })
    }

    pub fn from_f64_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(Matrix::from_f64_rows(rows)?)
    }

    pub fn constant(rows: usize, cols: usize, c: T) -> Self {
        Self { values: Matrix::from_fn(rows, cols, |_, _| c) }
    }

    /// ML metric `log W`.
    pub fn log_likelihood(channel: &Dmc<T>) -> Result<Self> {
        Self::check_positive(channel, 0)?;
        Ok(Self { values: channel.matrix().map(|w| w.ln()) })
    }

    /// MAP metric `log(W(b|a) / (P∘W)_Y(b))`.
    pub fn map(channel: &Dmc<T>, input: &Distribution<T>) -> Result<Self> {
        Self::check_positive(channel, 0)?;
        let out = joint_of(input, channel)?.y_marginal();
        Ok(Self { values: Matrix::from_fn(channel.inputs(), channel.outputs(), |a, b| (channel.get(a, b) / out[b]).ln()) })
    }

    fn check_positive(channel: &Dmc<T>, index: usize) -> Result<()> {
        for a in 0..channel.inputs() {
            for b in 0..channel.outputs() {
                if channel.get(a, b) <= T::zero() {
                    return Err(Error::NonPositiveChannel { channel: index, input: a, output: b });
                }
            }
        }
        Ok(())
    }

    /// `d(a, b) + shift(b)`; the decoder it induces is unchanged.
    pub fn shifted(&self, shift: &[T]) -> Result<Self> {
        if shift.len() != self.values.cols() {
            return Err(Error::Dimension(format!("shift of length {} for {} outputs", shift.len(), self.values.cols())));
        }
        Self::new(Matrix::from_fn(self.values.rows(), self.values.cols(), |a, b| self.values[(a, b)] + shift[b]))
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn get(&self, a: usize, b: usize) -> T {
        self.values[(a, b)]
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricKind {
    Ml,
    Map,
}

/// ML metrics `log W_k` or MAP metrics `log(W_k / (μ_k)_Y)` for each channel.
pub fn build_metrics<T: Real>(kind: MetricKind, channels: &[Dmc<T>], input: &Distribution<T>) -> Result<Vec<Metric<T>>> {
    channels
        .iter()
        .enumerate()
        .map(|(k, ch)| {
            Metric::check_positive(ch, k)?;
            match kind {
                MetricKind::Ml => Metric::log_likelihood(ch),
                MetricKind::Map => Metric::map(ch, input),
            }
        })
        .collect()
}

/// Decoder families analyzed and simulated over a compound set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DecoderKind {
    /// Single ML metric of the worst channel of the whole set.
    Ml,
    /// Single MAP metric of the worst channel of the whole set.
    Map,
    /// Generalized decoder with the ML metrics of each component's worst channel.
    Glrt,
    /// Generalized decoder with the MAP metrics of each component's worst channel.
    Gmap,
    /// Empirical mutual information; not a finite family of metrics.
    Mmi,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 5] = [Self::Ml, Self::Map, Self::Glrt, Self::Gmap, Self::Mmi];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ml => "ml",
            Self::Map => "map",
            Self::Glrt => "glrt",
            Self::Gmap => "gmap",
            Self::Mmi => "mmi",
        }
    }
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidMetric(format!("unknown decoder '{s}' (expected ml, map, glrt, gmap or mmi)")))
    }
}

impl std::fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A finite compound set with a partition into candidate one-sided components.
#[derive(Clone, Debug, PartialEq)]
pub struct CompoundSet<T> {
    channels: Vec<Dmc<T>>,
    components: Vec<Vec<usize>>,
}

impl<T: Real> CompoundSet<T> {
    /// Single-block partition.
    pub fn new(channels: Vec<Dmc<T>>) -> Result<Self> {
        let all = (0..channels.len()).collect();
        Self::with_components(channels, vec![all])
    }

    pub fn with_components(channels: Vec<Dmc<T>>, components: Vec<Vec<usize>>) -> Result<Self> {
        let first = channels.first().ok_or_else(|| Error::InvalidCompoundSet("no channels".into()))?;
        let shape = first.matrix().shape();
        if let Some(i) = channels.iter().position(|c| c.matrix().shape() != shape) {
            return Err(Error::InvalidCompoundSet(format!("channel {i} has a different alphabet shape")));
        }
        let mut seen = vec![false; channels.len()];
        for block in &components {
            if block.is_empty() {
                return Err(Error::InvalidCompoundSet("empty component".into()));
            }
            for &i in block {
                if i >= channels.len() {
                    return Err(Error::InvalidCompoundSet(format!("component index {i} out of range")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidCompoundSet(format!("channel {i} appears in two components")));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidCompoundSet(format!("channel {i} is not covered by any component")));
        }
        Ok(Self { channels, components })
    }

    pub fn channels(&self) -> &[Dmc<T>] {
        &self.channels
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn inputs(&self) -> usize {
        self.channels[0].inputs()
    }

    pub fn outputs(&self) -> usize {
        self.channels[0].outputs()
    }

    /// Index of the worst channel of every component at `input`.
    pub fn component_worsts(&self, input: &Distribution<T>) -> Result<Vec<usize>> {
        self.components
            .iter()
            .map(|block| {
                let members: Vec<Dmc<T>> = block.iter().map(|&i| self.channels[i].clone()).collect();
                Ok(block[worst_channel(&members, input)?.index])
            })
            .collect()
    }

    /// Metrics of the given kind built from each component's worst channel.
    pub fn component_metrics(&self, kind: MetricKind, input: &Distribution<T>) -> Result<Vec<Metric<T>>> {
        let worsts: Vec<Dmc<T>> =
            self.component_worsts(input)?.into_iter().map(|i| self.channels[i].clone()).collect();
        build_metrics(kind, &worsts, input)
    }

    /// Metrics of a decoder family at `input`; `None` for MMI.
    pub fn decoder_metrics(&self, kind: DecoderKind, input: &Distribution<T>) -> Result<Option<Vec<Metric<T>>>> {
        let global = || -> Result<Vec<Dmc<T>>> { Ok(vec![self.channels[worst_channel(&self.channels, input)?.index].clone()]) };
        Ok(Some(match kind {
            DecoderKind::Ml => build_metrics(MetricKind::Ml, &global()?, input)?,
            DecoderKind::Map => build_metrics(MetricKind::Map, &global()?, input)?,
            DecoderKind::Glrt => self.component_metrics(MetricKind::Ml, input)?,
            DecoderKind::Gmap => self.component_metrics(MetricKind::Map, input)?,
            DecoderKind::Mmi => return Ok(None),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::mismatched_rate;

    #[test]
    fn map_metric_of_pure_noise_is_zero() {
        let noise = Distribution::from_f64(&[0.3, 0.7]).unwrap();
        let w = Dmc::<f64>::pure_noise(2, &noise);
        let m = build_metrics(MetricKind::Map, &[w], &Distribution::uniform(2)).unwrap();
        assert!(m[0].values().as_slice().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn map_metrics_of_bsc_pair() {
        let chans = vec![Dmc::<f64>::bsc(0.25).unwrap(), Dmc::<f64>::bsc(0.75).unwrap()];
        let m = build_metrics(MetricKind::Map, &chans, &Distribution::uniform(2)).unwrap();
        for (k, ch) in chans.iter().enumerate() {
            for a in 0..2 {
                for b in 0..2 {
                    assert!((m[k].get(a, b) - (2.0 * ch.get(a, b)).ln()).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn ml_and_map_give_same_single_metric_rate() {
        let w0 = Dmc::<f64>::from_f64_rows(&[&[0.7, 0.2, 0.1], &[0.2, 0.5, 0.3]]).unwrap();
        let w1 = Dmc::<f64>::from_f64_rows(&[&[0.6, 0.3, 0.1], &[0.1, 0.6, 0.3]]).unwrap();
        let p = Distribution::from_f64(&[0.4, 0.6]).unwrap();
        let ml = build_metrics(MetricKind::Ml, std::slice::from_ref(&w1), &p).unwrap();
        let map = build_metrics(MetricKind::Map, std::slice::from_ref(&w1), &p).unwrap();
        let a = mismatched_rate(&p, &w0, &ml[0]).unwrap();
        let b = mismatched_rate(&p, &w0, &map[0]).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn zero_entries_rejected() {
        let err = build_metrics(MetricKind::Ml, &[Dmc::<f64>::bsc(0.1).unwrap(), Dmc::<f64>::identity(2)], &Distribution::uniform(2))
            .unwrap_err();
        assert_eq!(err, Error::NonPositiveChannel { channel: 1, input: 0, output: 1 });
    }

    #[test]
    fn non_finite_metric_rejected() {
        assert!(Metric::<f64>::from_f64_rows(&[&[0.0, f64::NEG_INFINITY]]).is_err());
    }

    #[test]
    fn compound_set_validation() {
        let a = Dmc::<f64>::bsc(0.1).unwrap();
        let b = Dmc::<f64>::from_f64_rows(&[&[0.5, 0.25, 0.25], &[0.2, 0.3, 0.5]]).unwrap();
        assert!(CompoundSet::<f64>::new(vec![]).is_err());
        assert!(CompoundSet::new(vec![a.clone(), b]).is_err());
        assert!(CompoundSet::with_components(vec![a.clone(), a.clone()], vec![vec![0]]).is_err());
        assert!(CompoundSet::with_components(vec![a.clone(), a.clone()], vec![vec![0, 1], vec![1]]).is_err());
        assert!(CompoundSet::with_components(vec![a.clone(), a.clone()], vec![vec![0], vec![2]]).is_err());
        assert!(CompoundSet::with_components(vec![a.clone(), a], vec![vec![1], vec![0]]).is_ok());
    }
}
