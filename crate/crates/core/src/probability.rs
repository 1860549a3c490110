//! Finite-alphabet probability primitives: distributions, channels, joints,
//! KL divergence and mutual information. All information quantities are in nats.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{total, Real, Scalar};

/// Probabilities at or below this are treated as exact zeros in support checks.
pub const SUPPORT_FLOOR: f64 = 1e-15;

/// A probability vector over a finite alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<T> {
    probs: Vec<T>,
}

impl<T: Scalar> Distribution<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        if let Some(i) = probs.iter().position(|&p| p < T::zero()) {
            return Err(Error::InvalidDistribution(format!("entry {i} is negative ({})", probs[i])));
        }
        let s = total(&probs);
        if (s - T::one()).abs_val() > T::validation_tol() {
            return Err(Error::InvalidDistribution(format!("entries sum to {s}, expected 1")));
        }
        Ok(Self { probs })
    }

    pub fn from_f64(probs: &[f64]) -> Result<Self> {
        Self::new(probs.iter().map(|&p| T::lit(p)).collect())
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over an empty alphabet");
        let p = T::one() / T::from_usize(n).expect("alphabet size fits the scalar type");
        Self { probs: vec![p; n] }
    }

    /// Point mass on `index`.
    pub fn point(n: usize, index: usize) -> Self {
        assert!(index < n);
        let mut probs = vec![T::zero(); n];
        probs[index] = T::one();
        Self { probs }
    }

    pub(crate) fn from_raw(probs: Vec<T>) -> Self {
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.probs
            .iter()
            .zip(&other.probs)
            .fold(T::zero(), |m, (&a, &b)| m.max_of((a - b).abs_val()))
    }
}

impl<T> std::ops::Index<usize> for Distribution<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.probs[i]
    }
}

/// Row-stochastic transition matrix `W(b|a)`, rows indexed by input symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct Dmc<T> {
    matrix: Matrix<T>,
}

impl<T: Scalar> Dmc<T> {
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        for (a, row) in matrix.iter_rows().enumerate() {
            if let Some(b) = row.iter().position(|&w| w < T::zero()) {
                return Err(Error::InvalidChannel(format!("entry ({a},{b}) is negative")));
            }
            let s = total(row);
            if (s - T::one()).abs_val() > T::validation_tol() {
                return Err(Error::InvalidChannel(format!("row {a} sums to {s}, expected 1")));
            }
        }
        Ok(Self { matrix })
    }

    pub fn from_f64_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(Matrix::from_f64_rows(rows)?)
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: T) -> Result<Self> {
        let q = T::one() - p;
        Self::new(Matrix::from_rows(vec![vec![q, p], vec![p, q]])?)
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: Matrix::from_fn(n, n, |a, b| if a == b { T::one() } else { T::zero() }) }
    }

    /// Channel whose output law is `noise` regardless of the input.
    pub fn pure_noise(inputs: usize, noise: &Distribution<T>) -> Self {
        Self { matrix: Matrix::from_fn(inputs, noise.len(), |_, b| noise[b]) }
    }

    pub fn inputs(&self) -> usize {
        self.matrix.rows()
    }

    pub fn outputs(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn row(&self, a: usize) -> &[T] {
        self.matrix.row(a)
    }

    pub fn get(&self, a: usize, b: usize) -> T {
        self.matrix[(a, b)]
    }

    /// Mixture `sum_i w_i V_i` of channels with identical shapes.
    pub fn mixture(channels: &[Dmc<T>], weights: &[T]) -> Result<Self> {
        let first = channels.first().ok_or_else(|| Error::InvalidChannel("empty mixture".into()))?;
        if weights.len() != channels.len() {
            return Err(Error::Dimension(format!("{} weights for {} channels", weights.len(), channels.len())));
        }
        let mut m = Matrix::zeros(first.inputs(), first.outputs());
        for (ch, &w) in channels.iter().zip(weights) {
            if ch.matrix.shape() != m.shape() {
                return Err(Error::Dimension("mixture of channels with different shapes".into()));
            }
            m = m.zip_map(&ch.matrix, |acc, x| acc + w * x)?;
        }
        Ok(Self { matrix: m })
    }
}

/// Joint distribution on `X x Y`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDist<T> {
    matrix: Matrix<T>,
}

impl<T: Scalar> JointDist<T> {
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        if let Some(&x) = matrix.as_slice().iter().find(|&&x| x < T::zero()) {
            return Err(Error::InvalidDistribution(format!("negative joint entry {x}")));
        }
        let s = matrix.sum();
        if (s - T::one()).abs_val() > T::validation_tol() {
            return Err(Error::InvalidDistribution(format!("joint sums to {s}, expected 1")));
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_raw(matrix: Matrix<T>) -> Self {
        Self { matrix }
    }

    /// Product distribution `row ⊗ col`.
    pub fn product(row: &Distribution<T>, col: &Distribution<T>) -> Self {
        Self { matrix: Matrix::from_fn(row.len(), col.len(), |a, b| row[a] * col[b]) }
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn get(&self, a: usize, b: usize) -> T {
        self.matrix[(a, b)]
    }

    pub fn shape(&self) -> (usize, usize) {
        self.matrix.shape()
    }

    pub fn x_marginal(&self) -> Distribution<T> {
        Distribution::from_raw(self.matrix.row_sums())
    }

    pub fn y_marginal(&self) -> Distribution<T> {
        Distribution::from_raw(self.matrix.col_sums())
    }

    /// Marginals and the induced product distribution `μ^p`.
    pub fn decompose(&self) -> (Distribution<T>, Distribution<T>, JointDist<T>) {
        let x = self.x_marginal();
        let y = self.y_marginal();
        let p = Self::product(&x, &y);
        (x, y, p)
    }

    /// `E_μ[f]` for a function on `X x Y`.
    pub fn expect(&self, f: &Matrix<T>) -> Result<T> {
        self.matrix.check_same_shape(f)?;
        Ok(crate::scalar::dot(self.matrix.as_slice(), f.as_slice()))
    }
}

/// `μ(a,b) = P(a) W(b|a)`.
pub fn joint_of<T: Scalar>(input: &Distribution<T>, channel: &Dmc<T>) -> Result<JointDist<T>> {
    if input.len() != channel.inputs() {
        return Err(Error::Dimension(format!(
            "input distribution has {} symbols, channel has {} inputs",
            input.len(),
            channel.inputs()
        )));
    }
    Ok(JointDist::from_raw(Matrix::from_fn(channel.inputs(), channel.outputs(), |a, b| {
        input[a] * channel.get(a, b)
    })))
}

/// Free-function form of [`JointDist::decompose`].
pub fn decompose<T: Scalar>(joint: &JointDist<T>) -> (Distribution<T>, Distribution<T>, JointDist<T>) {
    joint.decompose()
}

/// `D(p‖q)` in nats over equal-length probability vectors.
///
/// Returns `+∞` when `p` puts mass where `q` has none; `0 log 0` counts as zero.
pub fn kl_divergence<T: Real>(p: &[T], q: &[T]) -> Result<T> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!("KL arguments of length {} and {}", p.len(), q.len())));
    }
    let floor = T::lit(SUPPORT_FLOOR);
    let mut d = T::zero();
    for (&pi, &qi) in p.iter().zip(q) {
        if pi <= floor {
            continue;
        }
        if qi <= floor {
            return Ok(T::infinity());
        }
        d = d + pi * (pi / qi).ln();
    }
    Ok(d.max(T::zero()))
}

pub fn kl_joint<T: Real>(mu: &JointDist<T>, nu: &JointDist<T>) -> Result<T> {
    mu.matrix.check_same_shape(&nu.matrix)?;
    kl_divergence(mu.matrix.as_slice(), nu.matrix.as_slice())
}

pub fn kl_dist<T: Real>(p: &Distribution<T>, q: &Distribution<T>) -> Result<T> {
    kl_divergence(p.probs(), q.probs())
}

/// `I(P, W) = D(P∘W ‖ (P∘W)^p)` in nats.
pub fn mutual_information<T: Real>(input: &Distribution<T>, channel: &Dmc<T>) -> Result<T> {
    let joint = joint_of(input, channel)?;
    let (_, _, product) = joint.decompose();
    kl_joint(&joint, &product)
}

/// Empirical-type mutual information of a nonnegative count (or weight) matrix.
pub fn type_mutual_information<T: Real>(counts: &Matrix<T>) -> T {
    let n = counts.sum();
    if n <= T::zero() {
        return T::zero();
    }
    let rows = counts.row_sums();
    let cols = counts.col_sums();
    let mut i = T::zero();
    for a in 0..counts.rows() {
        for b in 0..counts.cols() {
            let c = counts[(a, b)];
            if c > T::zero() {
                i = i + c * (c * n / (rows[a] * cols[b])).ln();
            }
        }
    }
    (i / n).max(T::zero())
}

/// Binary entropy in nats.
pub fn binary_entropy<T: Real>(p: T) -> T {
    let term = |x: T| if x > T::zero() { -x * x.ln() } else { T::zero() };
    term(p) + term(T::one() - p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;
    use proptest::prelude::*;

    fn h2_nats(p: f64) -> f64 {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::<f64>::from_f64(&[0.5, 0.6]).is_err());
        assert!(Distribution::<f64>::from_f64(&[1.2, -0.2]).is_err());
        assert!(Distribution::<f64>::new(vec![]).is_err());
        assert!(Distribution::<f64>::from_f64(&[0.25, 0.75]).is_ok());
    }

    #[test]
    fn channel_validation() {
        assert!(Dmc::<f64>::from_f64_rows(&[&[0.5, 0.4], &[0.5, 0.5]]).is_err());
        assert!(Dmc::<f64>::from_f64_rows(&[&[1.1, -0.1]]).is_err());
    }

    #[test]
    fn joint_of_degenerate_input() {
        let w = Dmc::<f64>::from_f64_rows(&[&[0.3, 0.7], &[0.6, 0.4]]).unwrap();
        let j = joint_of(&Distribution::<f64>::point(2, 0), &w).unwrap();
        assert_eq!(j.matrix().to_rows(), vec![vec![0.3, 0.7], vec![0.0, 0.0]]);
    }

    #[test]
    fn joint_of_identity_channel() {
        let j = joint_of(&Distribution::<f64>::uniform(2), &Dmc::<f64>::identity(2)).unwrap();
        assert_eq!(j.matrix().to_rows(), vec![vec![0.5, 0.0], vec![0.0, 0.5]]);
    }

    #[test]
    fn joint_of_bsc_quarter_exact() {
        // direct multiplication: ½·¾ = 3/8, ½·¼ = 1/8
        let half = Rational64::new(1, 2);
        let w = Dmc::bsc(Rational64::new(1, 4)).unwrap();
        let j = joint_of(&Distribution::new(vec![half, half]).unwrap(), &w).unwrap();
        let e = |n, d| Rational64::new(n, d);
        assert_eq!(j.matrix().to_rows(), vec![vec![e(3, 8), e(1, 8)], vec![e(1, 8), e(3, 8)]]);
        let (_, y, _) = j.decompose();
        assert_eq!(y.probs(), &[half, half]);
    }

    #[test]
    fn joint_of_dimension_mismatch() {
        let err = joint_of(&Distribution::<f64>::uniform(3), &Dmc::<f64>::identity(2)).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn decompose_product_is_idempotent() {
        let p = Distribution::<f64>::from_f64(&[0.2, 0.8]).unwrap();
        let q = Distribution::<f64>::from_f64(&[0.1, 0.3, 0.6]).unwrap();
        let prod = JointDist::product(&p, &q);
        let (x, y, pp) = prod.decompose();
        assert!(x.max_abs_diff(&p) < 1e-15);
        assert!(y.max_abs_diff(&q) < 1e-15);
        for (u, v) in pp.matrix().as_slice().iter().zip(prod.matrix().as_slice()) {
            assert!((u - v).abs() < 1e-15);
        }
    }

    #[test]
    fn decompose_diagonal() {
        let j = JointDist::new(Matrix::<f64>::from_f64_rows(&[&[0.5, 0.0], &[0.0, 0.5]]).unwrap()).unwrap();
        let (x, y, p) = decompose(&j);
        assert_eq!(x.probs(), &[0.5, 0.5]);
        assert_eq!(y.probs(), &[0.5, 0.5]);
        assert!(p.matrix().as_slice().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence::<f64>(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let d = kl_divergence::<f64>(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((d - 2f64.ln()).abs() < 1e-15);
        // direct-sum oracle: 0.6 ln 1.2 + 0.4 ln 0.8
        let oracle = 0.6 * (1.2f64).ln() + 0.4 * (0.8f64).ln();
        let d = kl_divergence::<f64>(&[0.6, 0.4], &[0.5, 0.5]).unwrap();
        assert!((d - oracle).abs() < 1e-15);
        assert!((d - 0.020136).abs() < 1e-6);
    }

    #[test]
    fn kl_support_violation_is_infinite() {
        assert!(kl_divergence::<f64>(&[0.5, 0.5], &[1.0, 0.0]).unwrap().is_infinite());
        assert!(kl_divergence::<f64>(&[0.5, 0.5], &[1.0]).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let noise = Distribution::<f64>::from_f64(&[0.3, 0.7]).unwrap();
        let i = mutual_information(&Distribution::uniform(3), &Dmc::<f64>::pure_noise(3, &noise)).unwrap();
        assert!(i.abs() < 1e-15);
        let i = mutual_information(&Distribution::<f64>::uniform(2), &Dmc::<f64>::identity(2)).unwrap();
        assert!((i - 2f64.ln()).abs() < 1e-15);
        let i = mutual_information(&Distribution::<f64>::uniform(2), &Dmc::<f64>::bsc(0.25).unwrap()).unwrap();
        let oracle = 2f64.ln() - h2_nats(0.25);
        assert!((i - oracle).abs() < 1e-14);
        assert!((i - 0.130812).abs() < 1e-6);
        assert!((binary_entropy(0.25) - h2_nats(0.25)).abs() < 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let i = mutual_information(&Distribution::<f32>::uniform(2), &Dmc::bsc(0.25f32).unwrap()).unwrap();
        assert!((i - 0.130812).abs() < 1e-5);
    }

    #[test]
    fn type_mi_matches_distribution_mi() {
        let w = Dmc::<f64>::from_f64_rows(&[&[0.2, 0.8], &[0.7, 0.3]]).unwrap();
        let p = Distribution::from_f64(&[0.4, 0.6]).unwrap();
        let j = joint_of(&p, &w).unwrap();
        let scaled = j.matrix().map(|x| 50.0 * x);
        let a = type_mutual_information(&scaled);
        let b = mutual_information(&p, &w).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
    }

    fn channel(rows: usize, cols: usize) -> impl Strategy<Value = Dmc<f64>> {
        prop::collection::vec(simplex(cols), rows)
            .prop_map(|r| Dmc::new(Matrix::from_rows(r).unwrap()).unwrap())
    }

    proptest! {
        #[test]
        fn kl_nonnegative_zero_iff_equal(p in simplex(4), q in simplex(4)) {
            let d = kl_divergence(&p, &q).unwrap();
            prop_assert!(d >= 0.0);
            let max_diff = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if max_diff > 1e-9 {
                prop_assert!(d > 0.0);
            }
            prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        }

        #[test]
        fn mi_matches_sum_form(p in simplex(3), w in channel(3, 4)) {
            let input = Distribution::new(p).unwrap();
            let i = mutual_information(&input, &w).unwrap();
            let joint = joint_of(&input, &w).unwrap();
            let y = joint.y_marginal();
            let mut sum_form = 0.0;
            for a in 0..3 {
                for b in 0..4 {
                    let m = joint.get(a, b);
                    if m > 0.0 {
                        sum_form += m * (w.get(a, b) / y[b]).ln();
                    }
                }
            }
            prop_assert!((i - sum_form).abs() <= 1e-12);
            prop_assert!(i >= 0.0);
        }

        #[test]
        fn x_marginal_recovers_input(p in simplex(3), w in channel(3, 2)) {
            let input = Distribution::new(p).unwrap();
            let (x, _, _) = joint_of(&input, &w).unwrap().decompose();
            prop_assert!(x.max_abs_diff(&input) <= 1e-12);
        }
    }
}
