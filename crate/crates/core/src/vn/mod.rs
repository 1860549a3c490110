//! Very-noisy geometry: channels `W_ε(b|a) = P_N(b)(1 + ε L(a,b))` seen through
//! the weighted inner product `⟨u, v⟩ = Σ P_X(a) P_N(b) u(a,b) v(a,b)`.
//!
//! All rates here are the `ε → 0` limits of `2/ε²` times the global quantities,
//! and every routine works over any [`Scalar`], so exact rationals reproduce the
//! closed forms without rounding.

mod blind;
mod limit;

pub use blind::{blind_polytope_rate, BlindRate};
pub use limit::{limit_gap, LimitInstance, LimitKind, LimitRow};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::probability::{Distribution, Dmc};
use crate::rate::CompoundSet;
use crate::scalar::Scalar;

/// Perturbation direction around the pure-noise law `P_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct VnDirection<T> {
    l: Matrix<T>,
    noise: Distribution<T>,
}

impl<T: Scalar> VnDirection<T> {
    /// Requires `Σ_b P_N(b) L(a,b) = 0` for every row so that `W_ε` stays stochastic.
    pub fn new(l: Matrix<T>, noise: Distribution<T>) -> Result<Self> {
        if l.cols() != noise.len() {
            return Err(Error::Dimension(format!("direction has {} outputs, noise has {}", l.cols(), noise.len())));
        }
        for (a, row) in l.iter_rows().enumerate() {
            let s = row.iter().zip(noise.probs()).fold(T::zero(), |acc, (&x, &p)| acc + x * p);
            if s.abs_val() > T::validation_tol() {
                return Err(Error::InvalidDirection(format!("row {a} has noise-weighted sum {s}, expected 0")));
            }
        }
        Ok(Self { l, noise })
    }

    pub fn from_f64_rows(rows: &[&[f64]], noise: &Distribution<T>) -> Result<Self> {
        Self::new(Matrix::from_f64_rows(rows)?, noise.clone())
    }

    pub fn zero(inputs: usize, noise: &Distribution<T>) -> Self {
        Self { l: Matrix::zeros(inputs, noise.len()), noise: noise.clone() }
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.l
    }

    pub fn noise(&self) -> &Distribution<T> {
        &self.noise
    }

    pub fn shape(&self) -> (usize, usize) {
        self.l.shape()
    }

    /// `P_N(b)(1 + ε L(a,b))`; every factor `1 + ε L` must be at least `1e-6`.
    pub fn embed(&self, eps: T) -> Result<Dmc<T>> {
        let min_factor = self.l.as_slice().iter().fold(T::one(), |m, &x| m.min_of(T::one() + eps * x));
        if min_factor < T::lit(1e-6) {
            return Err(Error::InadmissibleEpsilon { eps: eps.to_f64_lossy(), min_factor: min_factor.to_f64_lossy() });
        }
        Dmc::new(Matrix::from_fn(self.l.rows(), self.l.cols(), |a, b| {
            self.noise[b] * (T::one() + eps * self.l[(a, b)])
        }))
    }

    /// Largest `ε` for which [`Self::embed`] succeeds, `None` if every `ε` works.
    pub fn max_admissible_eps(&self) -> Option<f64> {
        let lo = self.l.as_slice().iter().fold(T::zero(), |m, &x| m.min_of(x)).to_f64_lossy();
        (lo < 0.0).then(|| (1.0 - 1e-6) / -lo)
    }
}

/// `L̃ = L − L̄` with `L̄(b) = Σ_a P_X(a) L(a,b)`, plus the norms of all three parts.
#[derive(Clone, Debug, PartialEq)]
pub struct CenteredDirection<T> {
    pub tilde: Matrix<T>,
    pub bar: Vec<T>,
    pub norm_sq: T,
    pub bar_norm_sq: T,
    pub tilde_norm_sq: T,
}

/// The pair `(P_X, P_N)` fixing the weighted inner product.
#[derive(Clone, Debug, PartialEq)]
pub struct VnGeometry<T> {
    pub input: Distribution<T>,
    pub noise: Distribution<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VnCapacity<T> {
    pub value: T,
    pub index: usize,
    pub tie: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VnOneSided<T> {
    pub one_sided: bool,
    pub worst: VnCapacity<T>,
    /// `‖L̃0‖² − ‖L̃S‖² − ‖L̃0 − L̃S‖²` per member.
    pub gaps: Vec<T>,
    /// First member with a negative gap.
    pub violation: Option<usize>,
    /// Whether the inner-product form `⟨L̃0, L̃S⟩ ≥ ‖L̃S‖²` gives the same verdict.
    pub forms_agree: bool,
}

/// Decoder family whose VN rate is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VnDecoder {
    /// ML metrics `log W_k`.
    Glrt,
    /// MAP metrics `log(W_k / (μ_k)_Y)`.
    Gmap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VnRateAnalysis<T> {
    pub decoder: VnDecoder,
    /// Limit of `2/ε²` times each metric's expected value under `μ0`, up to a common constant.
    pub scores: Vec<T>,
    pub theta: T,
    /// Metrics whose score is within the tie tolerance of `θ`.
    pub winners: Vec<usize>,
    /// Per-branch thresholds `t_k` on `⟨V, L̃_k⟩`.
    pub thresholds: Vec<T>,
    /// Per-branch rates, `None` when the branch constraint cannot be met.
    pub branch_rates: Vec<Option<T>>,
    pub rate: T,
}

impl<T: Scalar> VnGeometry<T> {
    pub fn new(input: Distribution<T>, noise: Distribution<T>) -> Self {
        Self { input, noise }
    }

    fn check(&self, m: &Matrix<T>) -> Result<()> {
        if m.shape() != (self.input.len(), self.noise.len()) {
            return Err(Error::Dimension(format!(
                "direction of shape {:?} in a {}x{} geometry",
                m.shape(),
                self.input.len(),
                self.noise.len()
            )));
        }
        Ok(())
    }

    pub fn inner(&self, u: &Matrix<T>, v: &Matrix<T>) -> Result<T> {
        self.check(u)?;
        self.check(v)?;
        let mut s = T::zero();
        for a in 0..u.rows() {
            for b in 0..u.cols() {
                s = s + self.input[a] * self.noise[b] * u[(a, b)] * v[(a, b)];
            }
        }
        Ok(s)
    }

    pub fn norm_sq(&self, u: &Matrix<T>) -> Result<T> {
        self.inner(u, u)
    }

    /// `Σ_b P_N(b) u(b) v(b)` for functions of the output only.
    pub fn bar_inner(&self, u: &[T], v: &[T]) -> T {
        u.iter().zip(v).zip(self.noise.probs()).fold(T::zero(), |s, ((&x, &y), &p)| s + p * x * y)
    }

    pub fn center(&self, dir: &VnDirection<T>) -> Result<CenteredDirection<T>> {
        if dir.noise != self.noise {
            return Err(Error::InvalidDirection("direction built on a different noise law".into()));
        }
        let l = &dir.l;
        self.check(l)?;
        let bar: Vec<T> =
            (0..l.cols()).map(|b| (0..l.rows()).fold(T::zero(), |s, a| s + self.input[a] * l[(a, b)])).collect();
        let tilde = Matrix::from_fn(l.rows(), l.cols(), |a, b| l[(a, b)] - bar[b]);
        Ok(CenteredDirection {
            norm_sq: self.norm_sq(l)?,
            bar_norm_sq: self.bar_inner(&bar, &bar),
            tilde_norm_sq: self.norm_sq(&tilde)?,
            tilde,
            bar,
        })
    }

    fn center_all(&self, dirs: &[VnDirection<T>]) -> Result<Vec<CenteredDirection<T>>> {
        dirs.iter().map(|d| self.center(d)).collect()
    }

    /// Single-metric VN rate `⟨L̃0, L̃1⟩₊² / ‖L̃1‖²` (zero when `L̃1 = 0`).
    pub fn mismatched_rate(&self, l0: &VnDirection<T>, l1: &VnDirection<T>) -> Result<T> {
        let (c0, c1) = (self.center(l0)?, self.center(l1)?);
        let ip = self.inner(&c0.tilde, &c1.tilde)?;
        if ip <= T::zero() || c1.tilde_norm_sq <= T::zero() {
            return Ok(T::zero());
        }
        Ok(ip * ip / c1.tilde_norm_sq)
    }

    /// `min_k ‖L̃_k‖²` with its argmin; the lowest index wins ties.
    pub fn compound_capacity(&self, dirs: &[VnDirection<T>]) -> Result<VnCapacity<T>> {
        if dirs.is_empty() {
            return Err(Error::InvalidCompoundSet("no directions".into()));
        }
        let norms: Vec<T> = self.center_all(dirs)?.into_iter().map(|c| c.tilde_norm_sq).collect();
        Ok(capacity_of(&norms))
    }

    pub fn is_one_sided(&self, dirs: &[VnDirection<T>]) -> Result<VnOneSided<T>> {
        let cs = self.center_all(dirs)?;
        let worst = capacity_of(&cs.iter().map(|c| c.tilde_norm_sq).collect::<Vec<_>>());
        let tol = T::tie_tol();
        if worst.tie.is_some() {
            return Ok(VnOneSided { one_sided: false, worst, gaps: Vec::new(), violation: None, forms_agree: true });
        }
        let s = &cs[worst.index];
        let mut gaps = Vec::with_capacity(cs.len());
        let mut forms_agree = true;
        for c in &cs {
            let diff = c.tilde.zip_map(&s.tilde, |x, y| x - y)?;
            let gap = c.tilde_norm_sq - s.tilde_norm_sq - self.norm_sq(&diff)?;
            // the same condition written as ⟨L̃0, L̃S⟩ ≥ ‖L̃S‖²
            let alt = self.inner(&c.tilde, &s.tilde)? - s.tilde_norm_sq;
            forms_agree &= (gap >= -tol) == (alt >= -tol);
            gaps.push(gap);
        }
        let violation = gaps.iter().position(|&g| g < -tol);
        Ok(VnOneSided { one_sided: violation.is_none(), worst, gaps, violation, forms_agree })
    }

    /// VN rate of the generalized decoder built from `metrics` when the channel is `l0`.
    pub fn generalized_analysis(
        &self,
        decoder: VnDecoder,
        l0: &VnDirection<T>,
        metrics: &[VnDirection<T>],
    ) -> Result<VnRateAnalysis<T>> {
        if metrics.is_empty() {
            return Err(Error::EmptyMetrics);
        }
        let c0 = self.center(l0)?;
        let cs = self.center_all(metrics)?;
        let half = T::one() / (T::one() + T::one());
        let scores = metrics
            .iter()
            .zip(&cs)
            .map(|(m, c)| {
                Ok(match decoder {
                    // ⟨L0, L_l⟩ − ½‖L_l‖² = ½(‖L0‖² − ‖L0 − L_l‖²)
                    VnDecoder::Glrt => self.inner(&l0.l, &m.l)? - half * c.norm_sq,
                    VnDecoder::Gmap => self.inner(&c0.tilde, &c.tilde)? - half * c.tilde_norm_sq,
                })
            })
            .collect::<Result<Vec<T>>>()?;
        let theta = scores.iter().copied().fold(scores[0], |m, s| m.max_of(s));
        let tol = T::tie_tol();
        let winners: Vec<usize> = (0..scores.len()).filter(|&k| theta - scores[k] <= tol).collect();

        // each near-maximal winner sets its own threshold; keep the smallest rate
        let mut best: Option<(T, Vec<T>, Vec<Option<T>>)> = None;
        for &w in &winners {
            let th = scores[w];
            let thresholds: Vec<T> = cs
                .iter()
                .map(|c| match decoder {
                    VnDecoder::Glrt => th + half * c.norm_sq - self.bar_inner(&c0.bar, &c.bar),
                    VnDecoder::Gmap => th + half * c.tilde_norm_sq,
                })
                .collect();
            let branch_rates: Vec<Option<T>> =
                thresholds.iter().zip(&cs).map(|(&t, c)| branch_rate(t, c.tilde_norm_sq)).collect();
            let rate = branch_rates.iter().flatten().copied().reduce(|a, b| a.min_of(b));
            let Some(rate) = rate else { continue };
            if best.as_ref().is_none_or(|(r, _, _)| rate < *r) {
                best = Some((rate, thresholds, branch_rates));
            }
        }
        let (rate, thresholds, branch_rates) = best
            .ok_or_else(|| Error::InvalidDirection("every metric branch is infeasible (vanishing centered metric)".into()))?;
        Ok(VnRateAnalysis { decoder, scores, theta, winners, thresholds, branch_rates, rate })
    }

    pub fn glrt_rate(&self, l0: &VnDirection<T>, worsts: &[VnDirection<T>]) -> Result<T> {
        Ok(self.generalized_analysis(VnDecoder::Glrt, l0, worsts)?.rate)
    }

    pub fn gmap_rate(&self, l0: &VnDirection<T>, worsts: &[VnDirection<T>]) -> Result<T> {
        Ok(self.generalized_analysis(VnDecoder::Gmap, l0, worsts)?.rate)
    }
}

/// `min ‖V‖²` subject to `⟨V, u⟩ ≥ t`.
fn branch_rate<T: Scalar>(t: T, u_norm_sq: T) -> Option<T> {
    if t <= T::zero() {
        Some(T::zero())
    } else if u_norm_sq <= T::zero() {
        None
    } else {
        Some(t * t / u_norm_sq)
    }
}

fn capacity_of<T: Scalar>(norms: &[T]) -> VnCapacity<T> {
    let min = norms.iter().copied().fold(norms[0], |m, x| m.min_of(x));
    let tol = T::tie_tol();
    let index = norms.iter().position(|&x| x - min <= tol).unwrap_or(0);
    let tie = (index + 1..norms.len()).find(|&k| norms[k] - min <= tol);
    VnCapacity { value: norms[index], index, tie }
}

/// VN directions sharing one noise law, partitioned into candidate one-sided blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct VnCompoundSet<T> {
    directions: Vec<VnDirection<T>>,
    components: Vec<Vec<usize>>,
}

impl<T: Scalar> VnCompoundSet<T> {
    pub fn new(directions: Vec<VnDirection<T>>, components: Vec<Vec<usize>>) -> Result<Self> {
        let first = directions.first().ok_or_else(|| Error::InvalidCompoundSet("no directions".into()))?;
        if directions.iter().any(|d| d.noise != first.noise || d.shape() != first.shape()) {
            return Err(Error::InvalidCompoundSet("directions must share shape and noise law".into()));
        }
        let mut seen = vec![false; directions.len()];
        for &i in components.iter().flatten() {
            if i >= directions.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidCompoundSet(format!("component index {i} out of range or repeated")));
            }
        }
        if components.iter().any(Vec::is_empty) || seen.iter().any(|s| !s) {
            return Err(Error::InvalidCompoundSet("components must be nonempty and cover every direction".into()));
        }
        Ok(Self { directions, components })
    }

    pub fn directions(&self) -> &[VnDirection<T>] {
        &self.directions
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    /// Worst direction of each component.
    pub fn component_worsts(&self, geometry: &VnGeometry<T>) -> Result<Vec<usize>> {
        self.components
            .iter()
            .map(|block| {
                let members: Vec<VnDirection<T>> = block.iter().map(|&i| self.directions[i].clone()).collect();
                Ok(block[geometry.compound_capacity(&members)?.index])
            })
            .collect()
    }

    /// Global compound set of the embedded channels, keeping the partition.
    pub fn embed(&self, eps: T) -> Result<CompoundSet<T>>
    where
        T: crate::scalar::Real,
    {
        let channels = self.directions.iter().map(|d| d.embed(eps)).collect::<Result<Vec<_>>>()?;
        CompoundSet::with_components(channels, self.components.clone())
    }
}

/// The two-input, two-output instance on which GLRT falls short of capacity.
#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample<T> {
    pub geometry: VnGeometry<T>,
    pub l0: VnDirection<T>,
    pub l1: VnDirection<T>,
    pub l2: VnDirection<T>,
}

impl<T: Scalar> Counterexample<T> {
    pub fn new() -> Self {
        let half = Distribution::from_f64(&[0.5, 0.5]).expect("uniform binary law");
        let dir = |rows: &[&[f64]]| VnDirection::from_f64_rows(rows, &half).expect("rows are balanced");
        Self {
            geometry: VnGeometry::new(half.clone(), half.clone()),
            l0: dir(&[&[-2.0, 2.0], &[-7.0, 7.0]]),
            l1: dir(&[&[2.0, -2.0], &[0.0, 0.0]]),
            l2: dir(&[&[-1.0, 1.0], &[1.0, -1.0]]),
        }
    }

    pub fn directions(&self) -> Vec<VnDirection<T>> {
        vec![self.l0.clone(), self.l1.clone(), self.l2.clone()]
    }

    /// `{L0, L1}` and `{L2}`, each one-sided.
    pub fn compound_set(&self) -> VnCompoundSet<T> {
        VnCompoundSet::new(self.directions(), vec![vec![0, 1], vec![2]]).expect("valid partition")
    }

    /// The component worsts `L1`, `L2` used as decoder metrics.
    pub fn worsts(&self) -> Vec<VnDirection<T>> {
        vec![self.l1.clone(), self.l2.clone()]
    }
}

impl<T: Scalar> Default for Counterexample<T> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    type Q = Rational64;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n, d)
    }

    #[test]
    fn counterexample_norms_exact() {
        let ce = Counterexample::<Q>::new();
        let g = &ce.geometry;
        let c0 = g.center(&ce.l0).unwrap();
        assert_eq!(c0.bar, vec![q(-9, 2), q(9, 2)]);
        assert_eq!(c0.tilde_norm_sq, q(25, 4));
        assert_eq!(c0.norm_sq, q(53, 2));
        assert_eq!(c0.tilde_norm_sq, c0.norm_sq - c0.bar_norm_sq);
        let c1 = g.center(&ce.l1).unwrap();
        let c2 = g.center(&ce.l2).unwrap();
        assert_eq!(c1.bar, vec![q(1, 1), q(-1, 1)]);
        assert_eq!(c2.bar, vec![q(0, 1), q(0, 1)]);
        assert_eq!(c1.tilde_norm_sq, q(1, 1));
        assert_eq!(c2.tilde_norm_sq, q(1, 1));
        assert_eq!(g.inner(&c0.tilde, &c1.tilde).unwrap(), q(5, 2));
        assert_eq!(g.inner(&c0.tilde, &c2.tilde).unwrap(), q(-5, 2));
        assert_eq!(g.bar_inner(&c0.bar, &c1.bar), q(-9, 2));
    }

    #[test]
    fn counterexample_rates_exact() {
        let ce = Counterexample::<Q>::new();
        let g = &ce.geometry;
        assert_eq!(g.mismatched_rate(&ce.l0, &ce.l1).unwrap(), q(25, 4));
        assert_eq!(g.mismatched_rate(&ce.l0, &ce.l2).unwrap(), q(0, 1));
        assert_eq!(g.mismatched_rate(&ce.l0, &ce.l0).unwrap(), q(25, 4));

        let glrt = g.generalized_analysis(VnDecoder::Glrt, &ce.l0, &ce.worsts()).unwrap();
        assert_eq!(glrt.scores, vec![q(-3, 1), q(-3, 1)]);
        assert_eq!(glrt.winners, vec![0, 1]);
        assert_eq!(glrt.thresholds, vec![q(5, 2), q(-5, 2)]);
        assert_eq!(glrt.rate, q(0, 1));

        let gmap = g.generalized_analysis(VnDecoder::Gmap, &ce.l0, &ce.worsts()).unwrap();
        assert_eq!(gmap.scores, vec![q(2, 1), q(-3, 1)]);
        assert_eq!(gmap.thresholds, vec![q(5, 2), q(5, 2)]);
        assert_eq!(gmap.rate, q(25, 4));

        let cap = g.compound_capacity(&ce.worsts()).unwrap();
        assert_eq!(cap.value, q(1, 1));
        assert_eq!(cap.tie, Some(1));
        let cap01 = g.compound_capacity(&[ce.l0.clone(), ce.l1.clone()]).unwrap();
        assert_eq!((cap01.value, cap01.index), (q(1, 1), 1));
    }

    #[test]
    fn counterexample_one_sidedness() {
        let ce = Counterexample::<Q>::new();
        let g = &ce.geometry;
        let a = g.is_one_sided(&[ce.l0.clone(), ce.l1.clone()]).unwrap();
        assert!(a.one_sided && a.forms_agree);
        assert_eq!(a.gaps[0], q(3, 1));
        let b = g.is_one_sided(&[ce.l0.clone(), ce.l2.clone()]).unwrap();
        assert!(!b.one_sided && b.forms_agree);
        assert_eq!(b.violation, Some(0));
        assert!(g.is_one_sided(std::slice::from_ref(&ce.l0)).unwrap().one_sided);
    }

    #[test]
    fn matched_generalized_rates() {
        let ce = Counterexample::<Q>::new();
        let g = &ce.geometry;
        let norm = q(25, 4);
        assert_eq!(g.glrt_rate(&ce.l0, std::slice::from_ref(&ce.l0)).unwrap(), norm);
        assert_eq!(g.gmap_rate(&ce.l0, std::slice::from_ref(&ce.l0)).unwrap(), norm);
        assert_eq!(g.glrt_rate(&ce.l0, &[ce.l0.clone(), ce.l0.clone()]).unwrap(), norm);
    }

    #[test]
    fn constant_column_direction_centers_to_zero() {
        let noise = Distribution::<Q>::new(vec![q(1, 3), q(2, 3)]).unwrap();
        let g = VnGeometry::new(Distribution::new(vec![q(1, 4), q(3, 4)]).unwrap(), noise.clone());
        let l = VnDirection::new(Matrix::from_rows(vec![vec![q(2, 1), q(-1, 1)]; 2]).unwrap(), noise).unwrap();
        let c = g.center(&l).unwrap();
        assert!(c.tilde.as_slice().iter().all(|&x| x == q(0, 1)));
        assert_eq!(c.tilde_norm_sq, q(0, 1));
    }

    #[test]
    fn embedding() {
        let ce = Counterexample::<f64>::new();
        let w0 = ce.l0.embed(0.05).unwrap();
        let expect = [[0.45, 0.55], [0.325, 0.675]];
        for a in 0..2 {
            for b in 0..2 {
                assert!((w0.get(a, b) - expect[a][b]).abs() < 1e-15);
            }
        }
        let w = ce.l1.embed(0.0).unwrap();
        assert!(w.matrix().as_slice().iter().all(|&x| x == 0.5));
        let z = VnDirection::zero(2, &ce.geometry.noise).embed(0.3).unwrap();
        assert!(z.matrix().as_slice().iter().all(|&x| x == 0.5));
        assert!(matches!(ce.l0.embed(0.2), Err(Error::InadmissibleEpsilon { .. })));
        assert!((ce.l0.max_admissible_eps().unwrap() - (1.0 - 1e-6) / 7.0).abs() < 1e-15);
    }

    #[test]
    fn exact_embedding_over_rationals() {
        let ce = Counterexample::<Q>::new();
        let w = ce.l0.embed(q(1, 20)).unwrap();
        assert_eq!(w.matrix().to_rows(), vec![vec![q(9, 20), q(11, 20)], vec![q(13, 40), q(27, 40)]]);
    }

    #[test]
    fn unbalanced_direction_rejected() {
        let noise = Distribution::<f64>::uniform(2);
        assert!(VnDirection::from_f64_rows(&[&[1.0, 0.0]], &noise).is_err());
    }

    #[test]
    fn compound_set_components() {
        let ce = Counterexample::<Q>::new();
        let set = ce.compound_set();
        assert_eq!(set.component_worsts(&ce.geometry).unwrap(), vec![1, 2]);
        assert!(VnCompoundSet::new(ce.directions(), vec![vec![0, 1]]).is_err());
    }
}
