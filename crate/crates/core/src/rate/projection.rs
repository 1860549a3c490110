//! KL projection onto a half-space of the transportation polytope.
//!
//! The minimizer of `D(μ‖base)` over `{μ_X = row, μ_Y = col, E_μ[d] ≥ t}` is an
//! exponential tilt `μ ∝ u(a) v(b) base(a,b) exp(λ d(a,b))`. For fixed `λ` the
//! scalings `u, v` come from log-domain Sinkhorn iterations; `λ` is found by
//! bisection because the fitted `E_μ[d]` is nondecreasing in `λ`.

use super::transport::transport_max;
use super::Metric;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::probability::{Distribution, JointDist, SUPPORT_FLOOR};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct ProjectionConfig {
    /// L1 residual of the row marginal after each Sinkhorn sweep.
    pub marginal_tol: f64,
    /// Stop bisecting once `|E_μ[d] - threshold|` is this small.
    pub constraint_tol: f64,
    pub lambda_cap: f64,
    /// Shortfall at the cap beyond which the constraint set counts as empty.
    pub infeasible_slack: f64,
    pub max_sinkhorn_iterations: usize,
    pub max_bisection_steps: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            marginal_tol: 1e-10,
            constraint_tol: 1e-8,
            lambda_cap: 1e4,
            infeasible_slack: 1e-6,
            max_sinkhorn_iterations: 200_000,
            max_bisection_steps: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionOutcome {
    /// The base distribution already satisfies the constraint.
    Inactive,
    /// Constraint active and met by the tilted minimizer.
    Active,
    /// `λ` hit the cap with the constraint met only within the infeasibility slack.
    Capped,
    /// No joint with these marginals reaches the threshold.
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionDiagnostics {
    pub outcome: ProjectionOutcome,
    pub lambda: f64,
    pub sinkhorn_iterations: usize,
    pub bisection_steps: usize,
    pub marginal_residual: f64,
    pub constraint_residual: f64,
    /// Largest `E_μ[d]` over the transportation polytope.
    pub max_expectation: f64,
}

#[derive(Clone, Debug)]
pub struct Projection<T> {
    /// Divergence in nats; `+∞` when the constraint set is empty.
    pub value: T,
    pub argmin: Option<JointDist<T>>,
    pub diagnostics: ProjectionDiagnostics,
}

struct Tilt<'a, T> {
    log_row: Vec<T>,
    log_col: Vec<T>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    metric: &'a Matrix<T>,
    f: Vec<T>,
    g: Vec<T>,
    row: Vec<T>,
    iterations: usize,
}

fn log_sum_exp<T: Real>(xs: impl Iterator<Item = T> + Clone) -> T {
    let m = xs.clone().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<T>().ln()
}

impl<'a, T: Real> Tilt<'a, T> {
    fn new(row: &Distribution<T>, col: &Distribution<T>, metric: &'a Matrix<T>) -> Self {
        let floor = T::lit(SUPPORT_FLOOR);
        let rows: Vec<usize> = (0..row.len()).filter(|&a| row[a] > floor).collect();
        let cols: Vec<usize> = (0..col.len()).filter(|&b| col[b] > floor).collect();
        Self {
            log_row: rows.iter().map(|&a| row[a].ln()).collect(),
            log_col: cols.iter().map(|&b| col[b].ln()).collect(),
            f: vec![T::zero(); rows.len()],
            g: cols.iter().map(|&b| col[b].ln()).collect(),
            row: rows.iter().map(|&a| row[a]).collect(),
            rows,
            cols,
            metric,
            iterations: 0,
        }
    }

    fn log_mu(&self, i: usize, j: usize, lambda: T) -> T {
        self.f[i] + self.g[j] + lambda * self.metric[(self.rows[i], self.cols[j])]
    }

    /// Fits the marginals at this `λ`; returns the final row residual.
    fn fit(&mut self, lambda: T, tol: T, max_iter: usize) -> T {
        let (nr, nc) = (self.rows.len(), self.cols.len());
        let mut residual = T::infinity();
        for _ in 0..max_iter {
            self.iterations += 1;
            for i in 0..nr {
                let lse = log_sum_exp((0..nc).map(|j| self.g[j] + lambda * self.metric[(self.rows[i], self.cols[j])]));
                self.f[i] = self.log_row[i] - lse;
            }
            for j in 0..nc {
                let lse = log_sum_exp((0..nr).map(|i| self.f[i] + lambda * self.metric[(self.rows[i], self.cols[j])]));
                self.g[j] = self.log_col[j] - lse;
            }
            residual = (0..nr)
                .map(|i| ((0..nc).map(|j| self.log_mu(i, j, lambda).exp()).sum::<T>() - self.row[i]).abs())
                .sum();
            if residual <= tol {
                break;
            }
        }
        residual
    }

    fn joint(&self, lambda: T, shape: (usize, usize)) -> Matrix<T> {
        let mut m = Matrix::zeros(shape.0, shape.1);
        for (i, &a) in self.rows.iter().enumerate() {
            for (j, &b) in self.cols.iter().enumerate() {
                m[(a, b)] = self.log_mu(i, j, lambda).exp();
            }
        }
        m
    }

    fn expectation(&self, lambda: T) -> T {
        let mut e = T::zero();
        for (i, &a) in self.rows.iter().enumerate() {
            for (j, &b) in self.cols.iter().enumerate() {
                e = e + self.log_mu(i, j, lambda).exp() * self.metric[(a, b)];
            }
        }
        e
    }

    /// `D(μ_λ ‖ row ⊗ col)`.
    fn divergence(&self, lambda: T) -> T {
        let mut d = T::zero();
        for i in 0..self.rows.len() {
            for j in 0..self.cols.len() {
                let lm = self.log_mu(i, j, lambda);
                d = d + lm.exp() * (lm - self.log_row[i] - self.log_col[j]);
            }
        }
        d.max(T::zero())
    }
}

/// `inf { D(μ‖base) : μ_X = row, μ_Y = col, E_μ[d] ≥ threshold }`.
///
/// `base` must be the product `row ⊗ col`. An empty constraint set yields a
/// value of `+∞` and no minimizer rather than an error.
pub fn kl_projection<T: Real>(
    base: &JointDist<T>,
    row: &Distribution<T>,
    col: &Distribution<T>,
    metric: &Metric<T>,
    threshold: T,
    config: &ProjectionConfig,
) -> Result<Projection<T>> {
    let shape = (row.len(), col.len());
    if base.shape() != shape || metric.shape() != shape {
        return Err(Error::Dimension(format!(
            "base {:?}, metric {:?}, marginals {:?}",
            base.shape(),
            metric.shape(),
            shape
        )));
    }
    if !threshold.is_finite() {
        return Err(Error::InvalidMetric("projection threshold must be finite".into()));
    }
    let d = metric.values();
    let e_base = base.expect(d)?;
    let mut diag = ProjectionDiagnostics {
        outcome: ProjectionOutcome::Inactive,
        lambda: 0.0,
        sinkhorn_iterations: 0,
        bisection_steps: 0,
        marginal_residual: 0.0,
        constraint_residual: 0.0,
        max_expectation: f64::NAN,
    };
    let slack = T::lit(1e-12) * (T::one() + threshold.abs());
    if e_base >= threshold - slack {
        return Ok(Projection { value: T::zero(), argmin: Some(base.clone()), diagnostics: diag });
    }

    let weights: Vec<Vec<f64>> = d.iter_rows().map(|r| r.iter().map(|x| x.to_f64_lossy()).collect()).collect();
    let to64 = |p: &Distribution<T>| p.probs().iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>();
    let lp = transport_max(&to64(row), &to64(col), &weights, SUPPORT_FLOOR);
    diag.max_expectation = lp.value;
    let t64 = threshold.to_f64_lossy();
    if t64 > lp.value + 1e-9 * (1.0 + lp.value.abs()) {
        diag.outcome = ProjectionOutcome::Infeasible;
        diag.constraint_residual = t64 - lp.value;
        return Ok(Projection { value: T::infinity(), argmin: None, diagnostics: diag });
    }

    let marginal_tol = T::resolvable(config.marginal_tol);
    let constraint_tol = T::resolvable(config.constraint_tol);
    let cap = T::lit(config.lambda_cap);
    let mut tilt = Tilt::new(row, col, d);

    let mut lo = T::zero();
    let mut hi = T::one();
    let mut residual = tilt.fit(hi, marginal_tol, config.max_sinkhorn_iterations);
    let mut e_hi = tilt.expectation(hi);
    while e_hi < threshold {
        if hi >= cap {
            diag.lambda = hi.to_f64_lossy();
            diag.sinkhorn_iterations = tilt.iterations;
            diag.marginal_residual = residual.to_f64_lossy();
            diag.constraint_residual = (threshold - e_hi).to_f64_lossy();
            if e_hi < threshold - T::lit(config.infeasible_slack) {
                diag.outcome = ProjectionOutcome::Infeasible;
                return Ok(Projection { value: T::infinity(), argmin: None, diagnostics: diag });
            }
            diag.outcome = ProjectionOutcome::Capped;
            let value = tilt.divergence(hi);
            let argmin = Some(JointDist::from_raw(tilt.joint(hi, shape)));
            return Ok(Projection { value, argmin, diagnostics: diag });
        }
        lo = hi;
        hi = (hi + hi).min(cap);
        residual = tilt.fit(hi, marginal_tol, config.max_sinkhorn_iterations);
        e_hi = tilt.expectation(hi);
    }

    // keep the tilt of the upper end; its constraint is satisfied
    let mut best_f = tilt.f.clone();
    let mut best_g = tilt.g.clone();
    let mut best_residual = residual;
    let mut steps = 0;
    while steps < config.max_bisection_steps && e_hi - threshold > constraint_tol && hi - lo > hi * T::lit(1e-15) {
        steps += 1;
        let mid = (lo + hi) / T::lit(2.0);
        let r = tilt.fit(mid, marginal_tol, config.max_sinkhorn_iterations);
        let e_mid = tilt.expectation(mid);
        if e_mid >= threshold {
            hi = mid;
            e_hi = e_mid;
            best_f.clone_from(&tilt.f);
            best_g.clone_from(&tilt.g);
            best_residual = r;
        } else {
            lo = mid;
        }
    }
    tilt.f = best_f;
    tilt.g = best_g;

    diag.outcome = ProjectionOutcome::Active;
    diag.lambda = hi.to_f64_lossy();
    diag.sinkhorn_iterations = tilt.iterations;
    diag.bisection_steps = steps;
    diag.marginal_residual = best_residual.to_f64_lossy();
    diag.constraint_residual = (e_hi - threshold).to_f64_lossy();
    let value = tilt.divergence(hi);
    Ok(Projection { value, argmin: Some(JointDist::from_raw(tilt.joint(hi, shape))), diagnostics: diag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::{joint_of, kl_joint, Dmc};

    fn h2(p: f64) -> f64 {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }

    /// Grid search over 2x2 joints with fixed marginals: μ(0,0) = t is the only freedom.
    fn grid_oracle(row: [f64; 2], col: [f64; 2], d: [[f64; 2]; 2], threshold: f64, step: f64) -> f64 {
        let lo = (row[0] + col[0] - 1.0).max(0.0);
        let hi = row[0].min(col[0]);
        let mut best = f64::INFINITY;
        let mut t = lo;
        while t <= hi + 1e-15 {
            let m = [[t, row[0] - t], [col[0] - t, 1.0 - row[0] - col[0] + t]];
            let e: f64 = (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).map(|(a, b)| m[a][b] * d[a][b]).sum();
            if e >= threshold {
                let mut kl = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        if m[a][b] > 0.0 {
                            kl += m[a][b] * (m[a][b] / (row[a] * col[b])).ln();
                        }
                    }
                }
                best = best.min(kl);
            }
            t += step;
        }
        best
    }

    fn setup(p: &[f64], w: &Dmc<f64>) -> (JointDist<f64>, Distribution<f64>, Distribution<f64>, JointDist<f64>) {
        let input = Distribution::from_f64(p).unwrap();
        let mu0 = joint_of(&input, w).unwrap();
        let (_, y, base) = mu0.decompose();
        (mu0, input, y, base)
    }

    #[test]
    fn inactive_constraint_returns_base() {
        let w = Dmc::<f64>::bsc(0.1).unwrap();
        let (mu0, x, y, base) = setup(&[0.5, 0.5], &w);
        let d = Metric::log_likelihood(&w).unwrap();
        let e_base = base.expect(d.values()).unwrap();
        let p = kl_projection(&base, &x, &y, &d, e_base - 0.1, &ProjectionConfig::default()).unwrap();
        assert_eq!(p.value, 0.0);
        assert_eq!(p.argmin.unwrap(), base);
        assert_eq!(p.diagnostics.outcome, ProjectionOutcome::Inactive);
        let _ = mu0;
    }

    #[test]
    fn matched_bsc_gives_mutual_information() {
        let w = Dmc::<f64>::bsc(0.1).unwrap();
        let (mu0, x, y, base) = setup(&[0.5, 0.5], &w);
        let d = Metric::log_likelihood(&w).unwrap();
        let t = mu0.expect(d.values()).unwrap();
        let p = kl_projection(&base, &x, &y, &d, t, &ProjectionConfig::default()).unwrap();
        let closed_form = 2f64.ln() - h2(0.1);
        assert!((p.value - closed_form).abs() < 1e-7, "{} vs {}", p.value, closed_form);
        assert!((p.value - 0.368064).abs() < 1e-6);
        let dm = [[0.9f64.ln(), 0.1f64.ln()], [0.1f64.ln(), 0.9f64.ln()]];
        let grid = grid_oracle([0.5, 0.5], [0.5, 0.5], dm, t, 1e-4);
        assert!((p.value - grid).abs() < 1e-3);
        // the minimizer is μ0 itself
        let argmin = p.argmin.unwrap();
        assert!(kl_joint(&argmin, &mu0).unwrap() < 1e-8);
    }

    #[test]
    fn infeasible_threshold_gives_infinity() {
        let w = Dmc::<f64>::bsc(0.2).unwrap();
        let (_, x, y, base) = setup(&[0.5, 0.5], &w);
        let d = Metric::constant(2, 2, 1.5);
        let p = kl_projection(&base, &x, &y, &d, 2.0, &ProjectionConfig::default()).unwrap();
        assert!(p.value.is_infinite());
        assert!(p.argmin.is_none());
        assert_eq!(p.diagnostics.outcome, ProjectionOutcome::Infeasible);
    }

    #[test]
    fn asymmetric_instances_match_grid_search() {
        let cases = [
            ([0.3, 0.7], [0.6, 0.4], [[0.2, -1.0], [0.5, 0.9]], 0.5),
            ([0.5, 0.5], [0.25, 0.75], [[1.0, 0.0], [0.0, 1.0]], 0.7),
            ([0.8, 0.2], [0.5, 0.5], [[-0.3, 0.4], [1.2, -2.0]], 0.1),
        ];
        for (row, col, d, t) in cases {
            let x = Distribution::from_f64(&row).unwrap();
            let y = Distribution::from_f64(&col).unwrap();
            let base = JointDist::product(&x, &y);
            let m = Metric::from_f64_rows(&[&d[0], &d[1]]).unwrap();
            let p = kl_projection(&base, &x, &y, &m, t, &ProjectionConfig::default()).unwrap();
            let grid = grid_oracle(row, col, d, t, 1e-6);
            assert!((p.value - grid).abs() < 1e-5, "{} vs grid {}", p.value, grid);
        }
    }

    #[test]
    fn threshold_at_polytope_maximum_is_finite() {
        // diag metric, uniform marginals: max E[d] = 1 at the diagonal coupling
        let x = Distribution::<f64>::uniform(2);
        let base = JointDist::product(&x, &x);
        let m = Metric::from_f64_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let p = kl_projection(&base, &x, &x, &m, 1.0 - 1e-7, &ProjectionConfig::default()).unwrap();
        assert!(p.value.is_finite());
        assert!((p.value - 2f64.ln()).abs() < 1e-4);
    }

    #[test]
    fn monotone_in_threshold() {
        let w = Dmc::<f64>::from_f64_rows(&[&[0.6, 0.3, 0.1], &[0.2, 0.2, 0.6]]).unwrap();
        let (mu0, x, y, base) = setup(&[0.45, 0.55], &w);
        let d = Metric::log_likelihood(&w).unwrap();
        let t0 = mu0.expect(d.values()).unwrap();
        let mut prev = -1.0;
        for k in 0..12 {
            let t = t0 - 0.3 + 0.05 * k as f64;
            let v = kl_projection(&base, &x, &y, &d, t, &ProjectionConfig::default()).unwrap().value;
            assert!(v >= prev - 1e-9, "threshold {t}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let x = Distribution::<f64>::uniform(2);
        let base = JointDist::product(&x, &x);
        let m = Metric::constant(2, 3, 0.0);
        assert!(kl_projection(&base, &x, &x, &m, 0.0, &ProjectionConfig::default()).is_err());
    }
}
