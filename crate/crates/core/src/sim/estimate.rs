//! Error-rate estimation over the random-coding ensemble.
//!
//! `Sampled` draws every codeword. `Analytic` draws only the transmitted word
//! and the channel output, then averages over the `M − 1` independent
//! competitors exactly: given `y`, a competitor's joint type with `y` is a
//! product of multinomials, so the probability that it scores at least as high
//! as the transmitted word is a finite sum over type classes.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::codebook::{ChannelSampler, Codebook, SymbolSampler};
use super::decoder::{decode, joint_type, tie_tolerance, DecoderSpec, TiePolicy};
use crate::error::{Error, Result};
use crate::probability::{Distribution, Dmc};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodebookMode {
    /// A new codebook for every trial.
    Fresh,
    /// One codebook drawn from the master seed and reused by every trial.
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Evaluation {
    /// `Sampled` when the codebook fits under the cap, `Analytic` otherwise.
    Auto,
    Sampled,
    Analytic,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    /// Largest codebook materialized in sampled mode.
    pub max_codewords: u64,
    pub codebook: CodebookMode,
    pub evaluation: Evaluation,
    /// Largest number of competitor type classes enumerated per received type.
    pub max_type_classes: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { max_codewords: 1 << 14, codebook: CodebookMode::Fresh, evaluation: Evaluation::Auto, max_type_classes: 5_000_000 }
    }
}

#[derive(Clone, Debug)]
pub struct SimParams {
    pub n: usize,
    pub rate_bits: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialStats {
    pub channel: usize,
    pub trials: usize,
    pub codewords: f64,
    /// Error count; fractional in analytic mode, where each trial contributes a probability.
    pub errors: f64,
    /// Part of `errors` caused only by ties with the transmitted word.
    pub tie_errors: f64,
    pub error_rate: f64,
    /// 95% Wilson score interval.
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub std_err: f64,
    pub evaluation: Evaluation,
    pub tie_policy: TiePolicy,
}

/// `⌈2^{nR}⌉` as a float, since it can exceed every integer type.
pub fn codebook_size(n: usize, rate_bits: f64) -> f64 {
    // guard against 2^{integer} landing one ulp above an integer
    let m = (n as f64 * rate_bits).exp2();
    let r = m.round();
    if (m - r).abs() <= 1e-9 * r { r } else { m.ceil() }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn trial_seed(master: u64, channel: usize, trial: usize) -> u64 {
    splitmix(splitmix(splitmix(master) ^ channel as u64) ^ trial as u64)
}

fn wilson(successes: f64, trials: f64) -> (f64, f64) {
    let z = 1.96f64;
    let p = successes / trials;
    let denom = 1.0 + z * z / trials;
    let center = (p + z * z / (2.0 * trials)) / denom;
    let half = z * (p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Per-trial outcome: error probability and the portion due to ties.
type Outcome = (f64, f64);

fn summarize(channel: usize, outcomes: &[Outcome], codewords: f64, evaluation: Evaluation, policy: TiePolicy) -> TrialStats {
    let trials = outcomes.len();
    let t = trials as f64;
    // sequential sums keep the result independent of thread scheduling
    let errors: f64 = outcomes.iter().map(|o| o.0).sum();
    let tie_errors: f64 = outcomes.iter().map(|o| o.1).sum();
    let rate = errors / t;
    let var = if trials > 1 { outcomes.iter().map(|o| (o.0 - rate).powi(2)).sum::<f64>() / (t - 1.0) } else { 0.0 };
    let (wilson_low, wilson_high) = wilson(errors, t);
    TrialStats {
        channel,
        trials,
        codewords,
        errors,
        tie_errors,
        error_rate: rate,
        wilson_low,
        wilson_high,
        std_err: (var / t).sqrt(),
        evaluation,
        tie_policy: policy,
    }
}

/// Error rate of `spec` on every channel of the set.
pub fn estimate_error(
    channels: &[Dmc<f64>],
    spec: &DecoderSpec,
    input: &Distribution<f64>,
    params: &SimParams,
    config: &SimConfig,
) -> Result<Vec<TrialStats>> {
    let first = channels.first().ok_or_else(|| Error::InvalidCompoundSet("no channels".into()))?;
    if params.n == 0 || params.trials == 0 {
        return Err(Error::InvalidSimulation("block length and trial count must be positive".into()));
    }
    if !(params.rate_bits >= 0.0 && params.rate_bits.is_finite()) {
        return Err(Error::InvalidSimulation(format!("rate {} is not a nonnegative number", params.rate_bits)));
    }
    if input.len() != first.inputs() {
        return Err(Error::Dimension(format!("input law over {} symbols, channels take {}", input.len(), first.inputs())));
    }
    for w in channels {
        if w.inputs() != first.inputs() || w.outputs() != first.outputs() {
            return Err(Error::InvalidCompoundSet("channels have different alphabet shapes".into()));
        }
    }
    spec.check_alphabets(first.inputs(), first.outputs())?;
    let m = codebook_size(params.n, params.rate_bits).max(2.0);
    let fits = m <= config.max_codewords as f64;
    let evaluation = match config.evaluation {
        Evaluation::Auto if fits || config.codebook == CodebookMode::Fixed => Evaluation::Sampled,
        Evaluation::Auto => Evaluation::Analytic,
        e => e,
    };
    if evaluation == Evaluation::Sampled && !fits {
        return Err(Error::CodebookTooLarge { requested: m, cap: config.max_codewords });
    }
    if evaluation == Evaluation::Analytic && config.codebook == CodebookMode::Fixed {
        return Err(Error::InvalidSimulation("analytic evaluation averages over codebooks; use a fresh codebook".into()));
    }
    let symbols = SymbolSampler::new(input.probs())?;
    channels
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let sampler = ChannelSampler::new(w)?;
            let outcomes = match evaluation {
                Evaluation::Analytic => analytic(k, &sampler, &symbols, spec, input, w.outputs(), params, m, config)?,
                _ => sampled(k, &sampler, &symbols, spec, input.len(), params, m as usize, config.codebook)?,
            };
            Ok(summarize(k, &outcomes, m, evaluation, spec.tie_policy))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn sampled(
    channel: usize,
    sampler: &ChannelSampler,
    symbols: &SymbolSampler,
    spec: &DecoderSpec,
    alphabet: usize,
    params: &SimParams,
    m: usize,
    mode: CodebookMode,
) -> Result<Vec<Outcome>> {
    let fixed = (mode == CodebookMode::Fixed).then(|| {
        Codebook::sample(symbols, alphabet, params.n, m, &mut ChaCha8Rng::seed_from_u64(splitmix(params.seed)))
    });
    (0..params.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(params.seed, channel, t));
            let fresh;
            let cb = match &fixed {
                Some(cb) => cb,
                None => {
                    fresh = Codebook::sample(symbols, alphabet, params.n, m, &mut rng);
                    &fresh
                }
            };
            let msg = rand::Rng::random_range(&mut rng, 0..m);
            let y = sampler.transmit(cb.word(msg), &mut rng);
            let d = decode(&y, cb, spec)?;
            let err = !d.correct(msg, spec.tie_policy);
            // would the decision have been right had ties gone our way?
            let tie_only = err && d.argmax.contains(&msg);
            Ok((f64::from(u8::from(err)), f64::from(u8::from(tie_only))))
        })
        .collect()
}

/// Competitor score law for one received type: scores ascending with tail masses.
struct ScoreLaw {
    scores: Vec<f64>,
    /// `tail[i] = P(score ≥ scores[i])`.
    tail: Vec<f64>,
}

impl ScoreLaw {
    fn at_least(&self, s: f64) -> f64 {
        let i = self.scores.partition_point(|&x| x < s);
        self.tail.get(i).copied().unwrap_or(0.0)
    }

    fn greater_than(&self, s: f64) -> f64 {
        let i = self.scores.partition_point(|&x| x <= s);
        self.tail.get(i).copied().unwrap_or(0.0)
    }
}

/// Weak compositions of `total` into `parts` parts.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn binomial_count(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn score_law(
    spec: &DecoderSpec,
    input: &Distribution<f64>,
    y_counts: &[usize],
    n: usize,
    ln_fact: &[f64],
    max_classes: usize,
) -> Result<ScoreLaw> {
    let nx = input.len();
    let classes: f64 = y_counts.iter().map(|&c| binomial_count(c + nx - 1, nx - 1)).product();
    if classes > max_classes as f64 {
        return Err(Error::InvalidSimulation(format!(
            "{classes} competitor type classes exceed the limit of {max_classes}"
        )));
    }
    let ln_p: Vec<f64> = input.probs().iter().map(|&p| p.ln()).collect();
    // per output symbol: (column of counts, log-probability of that column)
    let columns: Vec<Vec<(Vec<usize>, f64)>> = y_counts
        .iter()
        .map(|&nb| {
            compositions(nb, nx)
                .into_iter()
                .filter_map(|c| {
                    let mut lp = ln_fact[nb];
                    for (a, &k) in c.iter().enumerate() {
                        if k > 0 {
                            if input[a] <= 0.0 {
                                return None;
                            }
                            lp += k as f64 * ln_p[a] - ln_fact[k];
                        }
                    }
                    Some((c, lp))
                })
                .collect()
        })
        .collect();
    let ny = y_counts.len();
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let mut idx = vec![0usize; ny];
    let mut counts = crate::matrix::Matrix::zeros(nx, ny);
    'outer: loop {
        let mut lp = 0.0;
        for b in 0..ny {
            let (col, l) = &columns[b][idx[b]];
            lp += l;
            for a in 0..nx {
                counts[(a, b)] = col[a] as f64;
            }
        }
        pairs.push((spec.score(&counts, n), lp.exp()));
        for b in 0..ny {
            idx[b] += 1;
            if idx[b] < columns[b].len() {
                continue 'outer;
            }
            idx[b] = 0;
        }
        break;
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut tail = vec![0.0; pairs.len()];
    let mut acc = 0.0;
    for i in (0..pairs.len()).rev() {
        acc += pairs[i].1;
        tail[i] = acc.min(1.0);
    }
    Ok(ScoreLaw { scores: pairs.into_iter().map(|p| p.0).collect(), tail })
}

#[allow(clippy::too_many_arguments)]
fn analytic(
    channel: usize,
    sampler: &ChannelSampler,
    symbols: &SymbolSampler,
    spec: &DecoderSpec,
    input: &Distribution<f64>,
    outputs: usize,
    params: &SimParams,
    m: f64,
    config: &SimConfig,
) -> Result<Vec<Outcome>> {
    let n = params.n;
    let nx = input.len();
    let draws: Vec<(Vec<usize>, f64)> = (0..params.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(params.seed, channel, t));
            let x: Vec<usize> = (0..n).map(|_| symbols.sample(&mut rng)).collect();
            let y = sampler.transmit(&x, &mut rng);
            let mut y_counts = vec![0usize; outputs];
            y.iter().for_each(|&b| y_counts[b] += 1);
            (y_counts, spec.score(&joint_type(&x, &y, nx, outputs), n))
        })
        .collect();

    let mut ln_fact = vec![0.0; n + 1];
    for k in 1..=n {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let mut distinct: Vec<Vec<usize>> = draws.iter().map(|d| d.0.clone()).collect();
    distinct.sort();
    distinct.dedup();
    let laws: HashMap<Vec<usize>, ScoreLaw> = distinct
        .into_par_iter()
        .map(|yc| {
            let law = score_law(spec, input, &yc, n, &ln_fact, config.max_type_classes)?;
            Ok((yc, law))
        })
        .collect::<Result<_>>()?;

    let competitors = m - 1.0;
    Ok(draws
        .iter()
        .map(|(yc, s)| {
            let law = &laws[yc];
            let tol = tie_tolerance(*s);
            let miss = |p: f64| -(competitors * (-p.min(1.0)).ln_1p()).exp_m1();
            let strict = miss(law.greater_than(s + tol));
            match spec.tie_policy {
                TiePolicy::Pessimistic => {
                    let err = miss(law.at_least(s - tol));
                    (err, (err - strict).max(0.0))
                }
                // ties resolved uniformly at random behave like a fair lottery among
                // the tied words; lowest-index resolution has the same ensemble average
                TiePolicy::LowestIndex => {
                    let p_tie = (law.at_least(s - tol) - law.greater_than(s + tol)).max(0.0);
                    let p_gt = law.greater_than(s + tol);
                    (lottery_error(competitors, p_gt, p_tie), 0.0)
                }
            }
        })
        .collect())
}

/// Error probability when `K` competitors each beat the true word with
/// probability `g`, tie it with probability `t`, and ties are broken uniformly.
fn lottery_error(k: f64, g: f64, t: f64) -> f64 {
    // P(correct) = E[1{no winner} / (1 + #ties)] = ∫_0^1 (1 − g − t + t·u)^K du
    if t <= 0.0 {
        return -(k * (-g).ln_1p()).exp_m1();
    }
    let free = 1.0 - g;
    if free <= 0.0 {
        return 1.0;
    }
    // (free^{K+1} − (free − t)^{K+1}) / (t (K+1)), arranged to avoid cancellation
    let r = (t / free).min(1.0);
    let shrink = -((k + 1.0) * (-r).ln_1p()).exp_m1();
    let correct = (k * (-g).ln_1p()).exp() * shrink / (r * (k + 1.0));
    1.0 - correct.min(1.0)
}
