//! Compound capacity `max_P min_k I(P, W_k)`.
//!
//! Solved as `max t` subject to `I(P, W_k) ≥ t` with a log barrier and
//! equality-constrained Newton steps. Any `P` certifies `min_k I(P, W_k) ≤ C`.
//! The barrier also yields channel weights `q_k ∝ 1/(I_k − t)`, and for any
//! weights the Blahut–Arimoto bound `max_x Σ_k q_k D(W_k(·|x) ‖ P W_k)` is at
//! least `C`, so the returned gap is a true optimality bound.

use crate::error::{Error, Result};
use crate::matrix::solve_dense;
use crate::probability::{kl_divergence, Distribution, Dmc};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct CapacityConfig {
    /// Target gap between the certified lower and upper bounds, in nats.
    pub tol: f64,
    /// Cap on the total number of Newton steps.
    pub max_iterations: usize,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self { tol: 1e-7, max_iterations: 100_000 }
    }
}

#[derive(Clone, Debug)]
pub struct CapacityResult<T> {
    /// `min_k I(P*, W_k)` in nats.
    pub value: T,
    pub input: Distribution<T>,
    /// Smallest certified upper bound seen.
    pub upper_bound: T,
    /// Channel weights attaining the upper bound.
    pub weights: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> CapacityResult<T> {
    pub fn gap(&self) -> T {
        self.upper_bound - self.value
    }
}

const MAX_CENTERING_STEPS: usize = 100;

/// Informations and their first and second derivatives at one input law.
struct Local<T> {
    infos: Vec<T>,
    /// `D(W_k(·|x) ‖ P W_k)`; the gradient of `I_k` is this minus one.
    divs: Vec<Vec<T>>,
    /// `Σ_y W_k(y|a) W_k(y|b) / (P W_k)(y)`, the negated Hessian of `I_k`.
    curv: Vec<Vec<Vec<T>>>,
}

fn local<T: Real>(channels: &[Dmc<T>], p: &[T]) -> Local<T> {
    let nx = p.len();
    let mut l = Local { infos: Vec::new(), divs: Vec::new(), curv: Vec::new() };
    for w in channels {
        let out: Vec<T> = (0..w.outputs()).map(|b| (0..nx).map(|a| p[a] * w.get(a, b)).sum()).collect();
        // P is strictly positive inside the solver, so every divergence is finite
        let d: Vec<T> = (0..nx).map(|a| kl_divergence(w.row(a), &out).unwrap_or_else(|_| T::infinity())).collect();
        let mut c = vec![vec![T::zero(); nx]; nx];
        for (b, &ob) in out.iter().enumerate() {
            if ob <= T::zero() {
                continue;
            }
            for a in 0..nx {
                let wa = w.get(a, b) / ob;
                for a2 in 0..nx {
                    c[a][a2] = c[a][a2] + wa * w.get(a2, b);
                }
            }
        }
        l.infos.push(p.iter().zip(&d).map(|(&pa, &da)| pa * da).sum());
        l.divs.push(d);
        l.curv.push(c);
    }
    l
}

/// `−s t − Σ_k ln(I_k − t) − Σ_x ln P(x)`, infinite outside the domain.
fn barrier<T: Real>(s: T, p: &[T], t: T, infos: &[T]) -> T {
    if p.iter().any(|&x| x <= T::zero()) || infos.iter().any(|&i| i - t <= T::zero() || !i.is_finite()) {
        return T::infinity();
    }
    -s * t - infos.iter().map(|&i| (i - t).ln()).sum::<T>() - p.iter().map(|&x| x.ln()).sum::<T>()
}

/// Newton direction `(ΔP, Δt)` keeping `Σ P = 1`, and the directional derivative.
///
/// The step is parametrized on `Σ ΔP = 0` with the largest coordinate of `P` as
/// the dependent one, and the reduced system is equilibrated before solving: the
/// Hessian spans many orders of magnitude once the barrier weight is large.
fn newton_step<T: Real>(s: T, p: &[T], t: T, l: &Local<T>) -> Option<(Vec<T>, T)> {
    let nx = p.len();
    // free coordinates: every input but `dep` (moving against it), then t
    let dep = (0..nx).fold(0, |m, i| if p[i] > p[m] { i } else { m });
    let free: Vec<usize> = (0..nx).filter(|&i| i != dep).collect();
    let m = free.len() + 1;
    // the constraint gradients dominate near the boundary; reduce them before
    // squaring so nearly equal rank-one terms do not cancel
    let mut red = vec![vec![T::zero(); m]; m];
    let mut rg = vec![T::zero(); m];
    rg[m - 1] = -s;
    for k in 0..l.infos.len() {
        let r = l.infos[k] - t;
        let (r1, r2) = (T::one() / r, T::one() / (r * r));
        let d = &l.divs[k];
        let c = &l.curv[k];
        let mut u: Vec<T> = free.iter().map(|&i| d[i] - d[dep]).collect();
        u.push(-T::one());
        for a in 0..m {
            rg[a] = rg[a] - u[a] * r1;
            for b in 0..m {
                red[a][b] = red[a][b] + u[a] * u[b] * r2;
            }
        }
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate() {
                red[a][b] = red[a][b] + (c[i][j] - c[i][dep] - c[dep][j] + c[dep][dep]) * r1;
            }
        }
    }
    let inv_dep = T::one() / p[dep];
    for (a, &i) in free.iter().enumerate() {
        rg[a] = rg[a] - T::one() / p[i] + inv_dep;
        for b in 0..free.len() {
            red[a][b] = red[a][b] + inv_dep * inv_dep;
        }
        red[a][a] = red[a][a] + T::one() / (p[i] * p[i]);
    }
    let scale: Vec<T> = (0..m).map(|a| red[a][a].abs().sqrt().max(T::min_positive_value())).collect();
    for a in 0..m {
        for b in 0..m {
            red[a][b] = red[a][b] / (scale[a] * scale[b]);
        }
    }
    let y = solve_dense(red, (0..m).map(|a| -rg[a] / scale[a]).collect())?;
    let y: Vec<T> = y.iter().zip(&scale).map(|(&v, &sc)| v / sc).collect();
    let slope = y.iter().zip(&rg).map(|(&v, &g)| v * g).sum();
    let mut x = vec![T::zero(); nx + 1];
    for (a, &i) in free.iter().enumerate() {
        x[i] = y[a];
        x[dep] = x[dep] - y[a];
    }
    x[nx] = y[m - 1];
    Some((x, slope))
}

/// Certified bounds at `p` with weights read off the barrier.
fn certificate<T: Real>(l: &Local<T>, t: T) -> (T, T, Vec<T>) {
    let lower = l.infos.iter().copied().fold(T::infinity(), T::min);
    let inv: Vec<T> = l.infos.iter().map(|&i| T::one() / (i - t)).collect();
    let z: T = inv.iter().copied().sum();
    let q: Vec<T> = inv.iter().map(|&x| x / z).collect();
    let nx = l.divs[0].len();
    let upper = (0..nx)
        .map(|a| q.iter().zip(&l.divs).map(|(&qk, d)| qk * d[a]).sum::<T>())
        .fold(T::neg_infinity(), T::max);
    (lower, upper, q)
}

/// Compound capacity of a finite set of channels sharing one alphabet pair.
pub fn compound_capacity<T: Real>(channels: &[Dmc<T>], config: &CapacityConfig) -> Result<CapacityResult<T>> {
    let first = channels.first().ok_or_else(|| Error::InvalidCompoundSet("no channels".into()))?;
    let nx = first.inputs();
    if channels.iter().any(|w| w.inputs() != nx || w.outputs() != first.outputs()) {
        return Err(Error::InvalidCompoundSet("channels have different alphabet shapes".into()));
    }
    let tol = T::resolvable(config.tol);
    // loose centering is enough: the certificate is evaluated at every iterate
    let center_tol = T::resolvable(1e-9);
    let terms = T::from_usize(channels.len() + nx).unwrap();

    let mut p = Distribution::<T>::uniform(nx).probs().to_vec();
    let mut l = local(channels, &p);
    let mut t = l.infos.iter().copied().fold(T::infinity(), T::min) - T::one();
    let (mut best_lower, mut best_upper, mut best_q) = certificate(&l, t);
    let mut best_p = p.clone();
    let mut s = T::one();
    let mut iterations = 0;
    let mut converged = best_upper - best_lower <= tol;

    'outer: while !converged {
        // center for the current barrier weight
        for _ in 0..MAX_CENTERING_STEPS {
            if iterations >= config.max_iterations {
                break 'outer;
            }
            let Some((d, slope)) = newton_step(s, &p, t, &l) else { break };
            if -slope * T::lit(0.5) <= center_tol {
                break;
            }
            iterations += 1;
            let phi = barrier(s, &p, t, &l.infos);
            let mut step = T::one();
            let accepted = loop {
                let mut np: Vec<T> = p.iter().zip(&d).map(|(&x, &dx)| x + step * dx).collect();
                let sum: T = np.iter().copied().sum();
                np.iter_mut().for_each(|x| *x = *x / sum);
                let nt = t + step * d[nx];
                if np.iter().all(|&x| x > T::zero()) {
                    let nl = local(channels, &np);
                    if barrier(s, &np, nt, &nl.infos) <= phi + T::lit(0.25) * step * slope {
                        break Some((np, nt, nl));
                    }
                }
                step = step * T::lit(0.5);
                if step < T::lit(1e-20) {
                    break None;
                }
            };
            let Some((np, nt, nl)) = accepted else { break };
            let moved = np != p || nt != t;
            (p, t, l) = (np, nt, nl);
            let (lo, up, q) = certificate(&l, t);
            if lo > best_lower {
                best_lower = lo;
                best_p = p.clone();
            }
            if up < best_upper {
                best_upper = up;
                best_q = q;
            }
            converged = best_upper - best_lower <= tol;
            if converged {
                break 'outer;
            }
            if !moved {
                break;
            }
        }
        if terms / s < T::epsilon() {
            break;
        }
        s = s * T::lit(10.0);
    }
    let sum: T = best_p.iter().copied().sum();
    Ok(CapacityResult {
        value: best_lower,
        input: Distribution::from_raw(best_p.into_iter().map(|x| x / sum).collect()),
        upper_bound: best_upper.max(best_lower),
        weights: best_q,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::{binary_entropy, mutual_information};
    use std::f64::consts::LN_2;

    #[test]
    fn single_bsc() {
        let r = compound_capacity(&[Dmc::<f64>::bsc(0.1).unwrap()], &CapacityConfig::default()).unwrap();
        assert!(r.converged);
        assert!((r.value - (LN_2 - binary_entropy(0.1))).abs() < 1e-7);
        assert!((r.value - 0.368064).abs() < 1e-6);
        assert!((r.input[0] - 0.5).abs() < 1e-4);
    }

    #[test]
    fn reversed_bsc_pair() {
        let set = [Dmc::<f64>::bsc(0.25).unwrap(), Dmc::<f64>::bsc(0.75).unwrap()];
        let r = compound_capacity(&set, &CapacityConfig::default()).unwrap();
        assert!(r.converged);
        assert!((r.value - 0.130812).abs() < 1e-6);
        assert!((r.value - (LN_2 - binary_entropy(0.25))).abs() < 1e-7);
    }

    #[test]
    fn pure_noise_member_gives_zero() {
        let noise = Distribution::from_f64(&[0.3, 0.7]).unwrap();
        let set = [Dmc::<f64>::bsc(0.1).unwrap(), Dmc::<f64>::pure_noise(2, &noise)];
        let r = compound_capacity(&set, &CapacityConfig::default()).unwrap();
        assert!(r.value.abs() < 1e-7);
        assert!(r.converged);
    }

    #[test]
    fn asymmetric_pair_matches_grid() {
        // Z-channel and a skewed channel: grid search over P(0) as the oracle
        let set = [
            Dmc::<f64>::from_f64_rows(&[&[1.0, 0.0], &[0.3, 0.7]]).unwrap(),
            Dmc::<f64>::from_f64_rows(&[&[0.6, 0.4], &[0.05, 0.95]]).unwrap(),
        ];
        let r = compound_capacity(&set, &CapacityConfig::default()).unwrap();
        assert!(r.converged, "gap {}", r.gap());
        let mut best = 0.0f64;
        for i in 1..200_000 {
            let p = Distribution::from_raw(vec![i as f64 / 200_000.0, 1.0 - i as f64 / 200_000.0]);
            let m = set.iter().map(|w| mutual_information(&p, w).unwrap()).fold(f64::INFINITY, f64::min);
            best = best.max(m);
        }
        assert!((r.value - best).abs() < 1e-7, "{} vs {}", r.value, best);
    }

    #[test]
    fn works_in_f32() {
        let r = compound_capacity(&[Dmc::<f32>::bsc(0.1).unwrap()], &CapacityConfig { tol: 1e-5, ..Default::default() })
            .unwrap();
        assert!((r.value - 0.368064).abs() < 1e-4);
    }
}
