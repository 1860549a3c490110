//! Exact global quantities on embedded channels against their VN limits.

use super::{VnDirection, VnGeometry};
use crate::error::{Error, Result};
use crate::probability::{joint_of, kl_divergence, Distribution};
use crate::rate::{mismatched_rate, Metric};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitKind {
    Divergence,
    ExpectedLog,
    MismatchedRate,
}

#[derive(Clone, Debug)]
pub enum LimitInstance<T> {
    /// `D(p(1 + εv) ‖ p)` against `‖v‖²_p = Σ p v²`; needs `Σ p v = 0`.
    Divergence { p: Distribution<T>, v: Vec<T> },
    /// `E_{μi} log W_j − E_{μk} log W_l` against
    /// `(⟨L_i, L_j⟩ − ½‖L_j‖²) − (⟨L_k, L_l⟩ − ½‖L_l‖²)`; needs `L̄_i = L̄_k`.
    /// The difference is `ε²` times the bracket to leading order, so it is scaled by `1/ε²`.
    ExpectedLog {
        geometry: VnGeometry<T>,
        i: VnDirection<T>,
        j: VnDirection<T>,
        k: VnDirection<T>,
        l: VnDirection<T>,
    },
    /// Mismatched rate of the ML metric of `l1` on channel `l0`.
    MismatchedRate { geometry: VnGeometry<T>, l0: VnDirection<T>, l1: VnDirection<T> },
}

impl<T> LimitInstance<T> {
    pub fn kind(&self) -> LimitKind {
        match self {
            Self::Divergence { .. } => LimitKind::Divergence,
            Self::ExpectedLog { .. } => LimitKind::ExpectedLog,
            Self::MismatchedRate { .. } => LimitKind::MismatchedRate,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitRow<T> {
    pub eps: T,
    /// The exact quantity over its leading power of `ε`: `2/ε²` for divergences
    /// and rates, `1/ε²` for expected-log differences.
    pub scaled: T,
    pub limit: T,
    /// `|scaled − limit|`.
    pub gap: T,
}

/// One row per `ε`, in the order given.
pub fn limit_gap<T: Real>(instance: &LimitInstance<T>, eps: &[T]) -> Result<Vec<LimitRow<T>>> {
    let two = T::lit(2.0);
    let limit = match instance {
        LimitInstance::Divergence { p, v } => {
            if p.len() != v.len() {
                return Err(Error::Dimension(format!("{} probabilities, {} direction entries", p.len(), v.len())));
            }
            let mean: T = p.probs().iter().zip(v).map(|(&a, &b)| a * b).sum();
            if mean.abs() > T::validation_tol() {
                return Err(Error::InvalidDirection(format!("direction has mean {mean}, expected 0")));
            }
            p.probs().iter().zip(v).map(|(&a, &b)| a * b * b).sum()
        }
        LimitInstance::ExpectedLog { geometry: g, i, j, k, l } => {
            let (ci, ck) = (g.center(i)?, g.center(k)?);
            let max_diff = ci.bar.iter().zip(&ck.bar).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
            if max_diff > T::validation_tol() {
                return Err(Error::InvalidDirection("the two reference channels need equal output marginals".into()));
            }
            let half = T::lit(0.5);
            (g.inner(i.matrix(), j.matrix())? - half * g.norm_sq(j.matrix())?)
                - (g.inner(k.matrix(), l.matrix())? - half * g.norm_sq(l.matrix())?)
        }
        LimitInstance::MismatchedRate { geometry, l0, l1 } => geometry.mismatched_rate(l0, l1)?,
    };
    eps.iter()
        .map(|&e| {
            if e <= T::zero() {
                return Err(Error::InadmissibleEpsilon { eps: e.to_f64_lossy(), min_factor: f64::NAN });
            }
            let exact = match instance {
                LimitInstance::Divergence { p, v } => {
                    let factors: Vec<T> = v.iter().map(|&x| T::one() + e * x).collect();
                    let min_factor = factors.iter().copied().fold(T::infinity(), T::min);
                    if min_factor < T::lit(1e-6) {
                        return Err(Error::InadmissibleEpsilon {
                            eps: e.to_f64_lossy(),
                            min_factor: min_factor.to_f64_lossy(),
                        });
                    }
                    let q: Vec<T> = p.probs().iter().zip(&factors).map(|(&a, &f)| a * f).collect();
                    kl_divergence(&q, p.probs())?
                }
                LimitInstance::ExpectedLog { geometry: g, i, j, k, l } => {
                    expected_log(&g.input, i, j, e)? - expected_log(&g.input, k, l, e)?
                }
                LimitInstance::MismatchedRate { geometry: g, l0, l1 } => {
                    let w1 = l1.embed(e)?;
                    mismatched_rate(&g.input, &l0.embed(e)?, &Metric::log_likelihood(&w1)?)?
                }
            };
            let scale = if instance.kind() == LimitKind::ExpectedLog { T::one() } else { two };
            let scaled = scale * exact / (e * e);
            Ok(LimitRow { eps: e, scaled, limit, gap: (scaled - limit).abs() })
        })
        .collect()
}

/// `E_{P ∘ W_i,ε}[log W_j,ε]`.
fn expected_log<T: Real>(input: &Distribution<T>, i: &VnDirection<T>, j: &VnDirection<T>, eps: T) -> Result<T> {
    let mu = joint_of(input, &i.embed(eps)?)?;
    let log_w = j.embed(eps)?.matrix().map(|x| x.ln());
    mu.expect(&log_w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vn::Counterexample;

    #[test]
    fn binary_divergence_closed_form() {
        let inst = LimitInstance::Divergence { p: Distribution::<f64>::uniform(2), v: vec![1.0, -1.0] };
        let rows = limit_gap(&inst, &[0.1, 0.05, 0.025]).unwrap();
        for r in &rows {
            // ½[(1+ε)ln(1+ε) + (1−ε)ln(1−ε)] by direct evaluation
            let e = r.eps;
            let d = 0.5 * ((1.0 + e) * (1.0 + e).ln() + (1.0 - e) * (1.0 - e).ln());
            assert!((r.scaled - 2.0 * d / (e * e)).abs() < 1e-12);
            assert_eq!(r.limit, 1.0);
        }
        assert!(rows[0].gap <= 0.01);
        assert!(rows[1].gap < rows[0].gap && rows[2].gap < rows[1].gap);
        assert!(rows[2].gap / rows[1].gap <= 0.75);
    }

    #[test]
    fn mismatched_rate_gap_shrinks() {
        let ce = Counterexample::<f64>::new();
        let inst = LimitInstance::MismatchedRate { geometry: ce.geometry.clone(), l0: ce.l0.clone(), l1: ce.l1.clone() };
        let rows = limit_gap(&inst, &[0.05, 0.025]).unwrap();
        assert_eq!(rows[0].limit, 6.25);
        assert!(rows[1].gap < rows[0].gap, "{rows:?}");
    }

    #[test]
    fn expected_log_needs_matching_marginals() {
        let ce = Counterexample::<f64>::new();
        let g = ce.geometry.clone();
        let bad = LimitInstance::ExpectedLog { geometry: g, i: ce.l0.clone(), j: ce.l1.clone(), k: ce.l1.clone(), l: ce.l2.clone() };
        assert!(limit_gap(&bad, &[0.05]).is_err());
    }

    #[test]
    fn inadmissible_eps() {
        let inst = LimitInstance::Divergence { p: Distribution::<f64>::uniform(2), v: vec![1.0, -1.0] };
        assert!(matches!(limit_gap(&inst, &[1.5]), Err(Error::InadmissibleEpsilon { .. })));
        assert!(limit_gap(&inst, &[0.0]).is_err());
    }
}
