use rayon::prelude::*;

use super::projection::{kl_projection, Projection, ProjectionConfig};
use super::Metric;
use crate::error::{Error, Result};
use crate::probability::{joint_of, Distribution, Dmc, JointDist};
use crate::scalar::Real;

/// Projection behind the random-coding rate of a single-metric decoder on `W0`.
pub fn mismatched_projection<T: Real>(
    input: &Distribution<T>,
    channel: &Dmc<T>,
    metric: &Metric<T>,
    config: &ProjectionConfig,
) -> Result<Projection<T>> {
    let mu0 = joint_of(input, channel)?;
    let threshold = mu0.expect(metric.values())?;
    let (_, col, base) = mu0.decompose();
    kl_projection(&base, input, &col, metric, threshold, config)
}

/// Achievable rate (nats) of the linear decoder with metric `d` when the true channel is `W0`.
pub fn mismatched_rate<T: Real>(input: &Distribution<T>, channel: &Dmc<T>, metric: &Metric<T>) -> Result<T> {
    Ok(mismatched_projection(input, channel, metric, &ProjectionConfig::default())?.value)
}

#[derive(Clone, Debug)]
pub struct GeneralizedRate<T> {
    /// Rate in nats; `+∞` only if every branch is infeasible.
    pub value: T,
    /// `max_k E_μ0[d_k]`.
    pub threshold: T,
    /// Branch attaining the minimum.
    pub binding: usize,
    pub branches: Vec<Projection<T>>,
}

/// Rate of the decoder maximizing `max_k d_k` with every branch solved in full.
pub fn generalized_projection<T: Real>(
    input: &Distribution<T>,
    channel: &Dmc<T>,
    metrics: &[Metric<T>],
    config: &ProjectionConfig,
) -> Result<GeneralizedRate<T>> {
    if metrics.is_empty() {
        return Err(Error::EmptyMetrics);
    }
    let mu0 = joint_of(input, channel)?;
    let mut threshold = T::neg_infinity();
    for m in metrics {
        threshold = threshold.max(mu0.expect(m.values())?);
    }
    let (_, col, base) = mu0.decompose();
    let branches = metrics
        .par_iter()
        .map(|m| kl_projection(&base, input, &col, m, threshold, config))
        .collect::<Result<Vec<_>>>()?;
    let mut binding = 0;
    for (k, b) in branches.iter().enumerate() {
        if b.value < branches[binding].value {
            binding = k;
        }
    }
    Ok(GeneralizedRate { value: branches[binding].value, threshold, binding, branches })
}

pub fn generalized_rate<T: Real>(input: &Distribution<T>, channel: &Dmc<T>, metrics: &[Metric<T>]) -> Result<T> {
    Ok(generalized_projection(input, channel, metrics, &ProjectionConfig::default())?.value)
}

/// Per-channel rates of one decoder over a compound set.
#[derive(Clone, Debug)]
pub struct RateReport<T> {
    pub rates: Vec<T>,
    /// Minimum over the set and the channel attaining it.
    pub min_rate: T,
    pub min_channel: usize,
    pub argmins: Vec<Option<JointDist<T>>>,
    pub sinkhorn_iterations: Vec<usize>,
    pub marginal_residuals: Vec<f64>,
    pub constraint_residuals: Vec<f64>,
}

/// Evaluates the generalized decoder built from `metrics` on every channel in `channels`.
pub fn rate_report<T: Real>(
    input: &Distribution<T>,
    channels: &[Dmc<T>],
    metrics: &[Metric<T>],
    config: &ProjectionConfig,
) -> Result<RateReport<T>> {
    if channels.is_empty() {
        return Err(Error::InvalidCompoundSet("no channels".into()));
    }
    let results = channels
        .par_iter()
        .map(|w| generalized_projection(input, w, metrics, config))
        .collect::<Result<Vec<_>>>()?;
    let rates: Vec<T> = results.iter().map(|r| r.value).collect();
    let mut min_channel = 0;
    for (k, &r) in rates.iter().enumerate() {
        if r < rates[min_channel] {
            min_channel = k;
        }
    }
    let binding: Vec<&Projection<T>> = results.iter().map(|r| &r.branches[r.binding]).collect();
    Ok(RateReport {
        min_rate: rates[min_channel],
        min_channel,
        argmins: binding.iter().map(|p| p.argmin.clone()).collect(),
        sinkhorn_iterations: results
            .iter()
            .map(|r| r.branches.iter().map(|b| b.diagnostics.sinkhorn_iterations).sum())
            .collect(),
        marginal_residuals: binding.iter().map(|p| p.diagnostics.marginal_residual).collect(),
        constraint_residuals: binding.iter().map(|p| p.diagnostics.constraint_residual).collect(),
        rates,
    })
}
