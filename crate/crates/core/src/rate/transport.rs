//! Maximum of a linear functional over the transportation polytope
//! `{μ ≥ 0 : μ_X = row, μ_Y = col}`, solved exactly with a dense two-phase
//! simplex (Bland's rule). Alphabets here are tiny, so the dense tableau is fine.

const PIVOT_TOL: f64 = 1e-12;

/// Optimal plan and value of `max Σ μ(a,b) w(a,b)`.
#[derive(Clone, Debug)]
pub(crate) struct TransportMax {
    pub value: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub plan: Vec<Vec<f64>>,
}

pub(crate) fn transport_max(row: &[f64], col: &[f64], weight: &[Vec<f64>], floor: f64) -> TransportMax {
    let rs: Vec<usize> = (0..row.len()).filter(|&a| row[a] > floor).collect();
    let cs: Vec<usize> = (0..col.len()).filter(|&b| col[b] > floor).collect();
    let mut plan = vec![vec![0.0; col.len()]; row.len()];
    if rs.is_empty() || cs.is_empty() {
        return TransportMax { value: 0.0, plan };
    }
    let n_vars = rs.len() * cs.len();
    let var = |i: usize, j: usize| i * cs.len() + j;

    // row constraints, then all but the last column constraint (redundant)
    let mut a_rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for (i, &a) in rs.iter().enumerate() {
        let mut r = vec![0.0; n_vars];
        for j in 0..cs.len() {
            r[var(i, j)] = 1.0;
        }
        a_rows.push(r);
        rhs.push(row[a]);
    }
    for (j, &b) in cs.iter().enumerate().take(cs.len() - 1) {
        let mut r = vec![0.0; n_vars];
        for i in 0..rs.len() {
            r[var(i, j)] = 1.0;
        }
        a_rows.push(r);
        rhs.push(col[b]);
    }
    let mut cost = vec![0.0; n_vars];
    for (i, &a) in rs.iter().enumerate() {
        for (j, &b) in cs.iter().enumerate() {
            cost[var(i, j)] = weight[a][b];
        }
    }

    let x = Simplex::new(a_rows, rhs).maximize(&cost);
    let mut value = 0.0;
    for (i, &a) in rs.iter().enumerate() {
        for (j, &b) in cs.iter().enumerate() {
            let v = x[var(i, j)].max(0.0);
            plan[a][b] = v;
            value += v * weight[a][b];
        }
    }
    TransportMax { value, plan }
}

struct Simplex {
    /// constraint rows followed by the rhs column
    tab: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_vars: usize,
}

impl Simplex {
    fn new(a_rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Self {
        let m = a_rows.len();
        let n_vars = a_rows.first().map_or(0, Vec::len);
        let mut tab = Vec::with_capacity(m);
        for (i, (mut r, b)) in a_rows.into_iter().zip(rhs).enumerate() {
            if b < 0.0 {
                r.iter_mut().for_each(|x| *x = -*x);
            }
            let mut art = vec![0.0; m];
            art[i] = 1.0;
            r.extend(art);
            r.push(b.abs());
            tab.push(r);
        }
        Self { tab, basis: (n_vars..n_vars + m).collect(), n_vars }
    }

    fn width(&self) -> usize {
        self.n_vars + self.tab.len()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.tab[r][c];
        self.tab[r].iter_mut().for_each(|x| *x /= p);
        let pivot_row = self.tab[r].clone();
        for (i, row) in self.tab.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(x, &y)| *x -= f * y);
                }
            }
        }
        self.basis[r] = c;
    }

    /// Reduced-cost simplex on columns `< allowed`, maximizing `cost`.
    fn optimize(&mut self, cost: &[f64], allowed: usize) {
        let rhs = self.width();
        for _ in 0..10_000 {
            let reduced = |j: usize| {
                cost[j] - self.tab.iter().zip(&self.basis).map(|(row, &bi)| cost[bi] * row[j]).sum::<f64>()
            };
            let Some(enter) = (0..allowed).find(|&j| !self.basis.contains(&j) && reduced(j) > 1e-11) else {
                return;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.tab.iter().enumerate() {
                if row[enter] > PIVOT_TOL {
                    let ratio = row[rhs] / row[enter];
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - 1e-15 || ((ratio - lr).abs() <= 1e-15 && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                // bounded polytope; cannot happen for transportation constraints
                None => return,
            }
        }
    }

    fn maximize(mut self, cost: &[f64]) -> Vec<f64> {
        let width = self.width();
        // phase 1: maximize minus the sum of artificials
        let mut phase1 = vec![0.0; width];
        phase1[self.n_vars..].iter_mut().for_each(|c| *c = -1.0);
        self.optimize(&phase1, width);
        // drive remaining artificials out of the basis where possible
        for r in 0..self.tab.len() {
            if self.basis[r] >= self.n_vars {
                if let Some(c) = (0..self.n_vars).find(|&c| self.tab[r][c].abs() > 1e-9 && !self.basis.contains(&c)) {
                    self.pivot(r, c);
                }
            }
        }
        let mut full_cost = cost.to_vec();
        full_cost.resize(width, 0.0);
        self.optimize(&full_cost, self.n_vars);
        let mut x = vec![0.0; self.n_vars];
        for (row, &bi) in self.tab.iter().zip(&self.basis) {
            if bi < self.n_vars {
                x[bi] = row[width];
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    }

    #[test]
    fn two_by_two_matches_endpoint_formula() {
        // one free parameter t = μ(0,0); the objective is linear in t so the max is at an endpoint
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let r = random_simplex(&mut rng, 2);
            let c = random_simplex(&mut rng, 2);
            let w: Vec<Vec<f64>> = (0..2).map(|_| (0..2).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
            let obj = |t: f64| {
                t * w[0][0] + (r[0] - t) * w[0][1] + (c[0] - t) * w[1][0] + (1.0 - r[0] - c[0] + t) * w[1][1]
            };
            let lo = (r[0] + c[0] - 1.0).max(0.0);
            let hi = r[0].min(c[0]);
            let oracle = obj(lo).max(obj(hi));
            let got = transport_max(&r, &c, &w, 1e-15);
            assert!((got.value - oracle).abs() < 1e-12, "{} vs {}", got.value, oracle);
        }
    }

    #[test]
    fn plan_is_feasible_and_dominates_random_plans() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let r = random_simplex(&mut rng, 3);
            let c = random_simplex(&mut rng, 4);
            let w: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let got = transport_max(&r, &c, &w, 1e-15);
            for a in 0..3 {
                assert!((got.plan[a].iter().sum::<f64>() - r[a]).abs() < 1e-12);
            }
            for b in 0..4 {
                assert!(((0..3).map(|a| got.plan[a][b]).sum::<f64>() - c[b]).abs() < 1e-12);
            }
            // random feasible plans via iterative proportional fitting of random positive matrices
            for _ in 0..200 {
                let mut m: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
                for _ in 0..500 {
                    for a in 0..3 {
                        let s: f64 = m[a].iter().sum();
                        m[a].iter_mut().for_each(|x| *x *= r[a] / s);
                    }
                    for b in 0..4 {
                        let s: f64 = (0..3).map(|a| m[a][b]).sum();
                        (0..3).for_each(|a| m[a][b] *= c[b] / s);
                    }
                }
                let v: f64 = (0..3).flat_map(|a| (0..4).map(move |b| (a, b))).map(|(a, b)| m[a][b] * w[a][b]).sum();
                assert!(v <= got.value + 1e-9);
            }
        }
    }

    #[test]
    fn zero_mass_rows_are_skipped() {
        let got = transport_max(&[1.0, 0.0], &[0.5, 0.5], &[vec![1.0, 2.0], vec![100.0, 100.0]], 1e-15);
        assert!((got.value - 1.5).abs() < 1e-12);
    }
}
