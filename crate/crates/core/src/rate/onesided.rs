//! Worst channels, the one-sidedness test and a greedy one-sided cover.

use crate::error::{Error, Result};
use crate::matrix::solve_dense;
use crate::probability::{joint_of, kl_joint, mutual_information, Distribution, Dmc};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct WorstChannel<T> {
    pub index: usize,
    pub information: T,
    /// `I(P, W_k)` for every channel, nats.
    pub informations: Vec<T>,
    /// Another channel within the tie tolerance of the minimum, if any.
    pub tie: Option<usize>,
}

impl<T> WorstChannel<T> {
    pub fn is_unique(&self) -> bool {
        self.tie.is_none()
    }
}

/// Channel with the smallest mutual information at `input`; the lowest index wins ties.
pub fn worst_channel<T: Real>(channels: &[Dmc<T>], input: &Distribution<T>) -> Result<WorstChannel<T>> {
    if channels.is_empty() {
        return Err(Error::InvalidCompoundSet("no channels".into()));
    }
    let informations = channels.iter().map(|w| mutual_information(input, w)).collect::<Result<Vec<T>>>()?;
    let min = informations.iter().copied().fold(T::infinity(), T::min);
    let tol = T::tie_tol();
    let index = informations.iter().position(|&i| i - min <= tol).unwrap_or(0);
    let information = informations[index];
    let tie = (index + 1..channels.len()).find(|&k| informations[k] - min <= tol);
    Ok(WorstChannel { index, information, informations, tie })
}

/// `D(μ0‖μ_S^p) − D(μ0‖μ_S) − D(μ_S‖μ_S^p)`; nonnegative when the inequality holds.
///
/// Undefined differences of infinite divergences are reported as `−∞`.
pub fn pythagorean_gap<T: Real>(input: &Distribution<T>, channel: &Dmc<T>, worst: &Dmc<T>) -> Result<T> {
    let mu0 = joint_of(input, channel)?;
    let mus = joint_of(input, worst)?;
    let (_, _, mus_p) = mus.decompose();
    let lhs = kl_joint(&mu0, &mus_p)?;
    let rhs = kl_joint(&mu0, &mus)? + kl_joint(&mus, &mus_p)?;
    let gap = lhs - rhs;
    Ok(if gap.is_nan() { T::neg_infinity() } else { gap })
}

#[derive(Clone, Debug, PartialEq)]
pub enum OneSidedWitness<T> {
    Holds { worst: usize },
    /// The worst channel is not unique, so the test does not apply.
    Tie { first: usize, second: usize },
    /// First member whose Pythagorean gap falls below `−tolerance`.
    Violation { worst: usize, channel: usize, deficit: T },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OneSidedCheck<T> {
    pub one_sided: bool,
    pub witness: OneSidedWitness<T>,
    pub worst: WorstChannel<T>,
    /// Pythagorean gap for each member (empty on a tie).
    pub gaps: Vec<T>,
}

pub fn is_one_sided<T: Real>(channels: &[Dmc<T>], input: &Distribution<T>) -> Result<OneSidedCheck<T>> {
    let worst = worst_channel(channels, input)?;
    if let Some(second) = worst.tie {
        return Ok(OneSidedCheck {
            one_sided: false,
            witness: OneSidedWitness::Tie { first: worst.index, second },
            worst,
            gaps: Vec::new(),
        });
    }
    let ws = &channels[worst.index];
    let gaps = channels.iter().map(|w| pythagorean_gap(input, w, ws)).collect::<Result<Vec<T>>>()?;
    let tol = T::tie_tol();
    let witness = match gaps.iter().position(|&g| g < -tol) {
        Some(channel) => OneSidedWitness::Violation { worst: worst.index, channel, deficit: -gaps[channel] },
        None => OneSidedWitness::Holds { worst: worst.index },
    };
    Ok(OneSidedCheck { one_sided: matches!(witness, OneSidedWitness::Holds { .. }), witness, worst, gaps })
}

/// Greedy partition into blocks that each pass [`is_one_sided`]. Not minimal.
pub fn one_sided_cover<T: Real>(channels: &[Dmc<T>], input: &Distribution<T>) -> Result<Vec<Vec<usize>>> {
    let all = worst_channel(channels, input)?;
    let mut order: Vec<usize> = (0..channels.len()).collect();
    order.sort_by(|&a, &b| all.informations[a].partial_cmp(&all.informations[b]).unwrap().then(a.cmp(&b)));
    let mut covered = vec![false; channels.len()];
    let mut blocks = Vec::new();
    for (pos, &seed) in order.iter().enumerate() {
        if covered[seed] {
            continue;
        }
        covered[seed] = true;
        let mut block = vec![seed];
        for &cand in &order[pos + 1..] {
            if covered[cand] {
                continue;
            }
            let mut trial = block.clone();
            trial.push(cand);
            let members: Vec<Dmc<T>> = trial.iter().map(|&i| channels[i].clone()).collect();
            if is_one_sided(&members, input)?.one_sided {
                covered[cand] = true;
                block = trial;
            }
        }
        block.sort_unstable();
        blocks.push(block);
    }
    blocks.sort();
    Ok(blocks)
}

#[derive(Clone, Debug)]
pub struct HullWorst<T> {
    pub weights: Vec<T>,
    pub channel: Dmc<T>,
    pub information: T,
    /// Frank–Wolfe duality gap, an upper bound on the suboptimality.
    pub gap: T,
    pub iterations: usize,
}

struct HullPoint<T> {
    mix: Dmc<T>,
    info: T,
    grad: Vec<T>,
    /// `r_i(b) = Σ_a P(a) V_i(b|a)`.
    out_parts: Vec<Vec<T>>,
    out: Vec<T>,
}

struct HullProblem<'a, T> {
    vertices: &'a [Dmc<T>],
    input: &'a Distribution<T>,
}

impl<T: Real> HullProblem<'_, T> {
    fn eval(&self, w: &[T]) -> Result<HullPoint<T>> {
        let (nx, ny) = (self.vertices[0].inputs(), self.vertices[0].outputs());
        let p = self.input;
        let mix = Dmc::mixture(self.vertices, w)?;
        let info = mutual_information(p, &mix)?;
        let out: Vec<T> = (0..ny).map(|b| (0..nx).map(|a| p[a] * mix.get(a, b)).sum()).collect();
        let mut grad = Vec::with_capacity(self.vertices.len());
        let mut out_parts = Vec::with_capacity(self.vertices.len());
        for v in self.vertices {
            let mut g = T::zero();
            for a in 0..nx {
                for b in 0..ny {
                    let x = v.get(a, b);
                    if x > T::zero() && p[a] > T::zero() {
                        g = g + p[a] * x * (mix.get(a, b) / out[b]).ln();
                    }
                }
            }
            grad.push(g);
            out_parts.push((0..ny).map(|b| (0..nx).map(|a| p[a] * v.get(a, b)).sum()).collect());
        }
        Ok(HullPoint { mix, info, grad, out_parts, out })
    }

    /// `H_ij = Σ P(a) V_i V_j / W − Σ_b r_i r_j / q` restricted to `active`.
    fn hessian(&self, pt: &HullPoint<T>, active: &[usize]) -> Vec<Vec<T>> {
        let (nx, ny) = (self.vertices[0].inputs(), self.vertices[0].outputs());
        let p = self.input;
        let mut h = vec![vec![T::zero(); active.len()]; active.len()];
        for (r, &i) in active.iter().enumerate() {
            for (c, &j) in active.iter().enumerate().skip(r) {
                let mut s = T::zero();
                for a in 0..nx {
                    for b in 0..ny {
                        let m = pt.mix.get(a, b);
                        if m > T::zero() {
                            s = s + p[a] * self.vertices[i].get(a, b) * self.vertices[j].get(a, b) / m;
                        }
                    }
                }
                for b in 0..ny {
                    if pt.out[b] > T::zero() {
                        s = s - pt.out_parts[i][b] * pt.out_parts[j][b] / pt.out[b];
                    }
                }
                h[r][c] = s;
                h[c][r] = s;
            }
        }
        h
    }
}

fn fw_gap<T: Real>(w: &[T], grad: &[T]) -> T {
    let gmin = grad.iter().copied().fold(T::infinity(), T::min);
    (w.iter().zip(grad).map(|(&wi, &gi)| wi * gi).sum::<T>() - gmin).max(T::zero())
}

/// Minimizes `I(P, Σ w_i V_i)` over the mixture weights.
///
/// Mirror descent gets close, then Newton steps on the support (with vertices
/// added or dropped as the optimality conditions require) finish the job.
pub fn convex_hull_worst<T: Real>(vertices: &[Dmc<T>], input: &Distribution<T>) -> Result<HullWorst<T>> {
    let first = vertices.first().ok_or_else(|| Error::InvalidCompoundSet("no hull vertices".into()))?;
    if input.len() != first.inputs() {
        return Err(Error::Dimension(format!("input has {} symbols, channels have {} inputs", input.len(), first.inputs())));
    }
    let prob = HullProblem { vertices, input };
    let k = vertices.len();
    let target = T::resolvable(1e-13);
    let mut w = vec![T::one() / T::from_usize(k).unwrap(); k];
    let mut pt = prob.eval(&w)?;
    let mut iterations = 0;

    // warm start
    let mut eta = T::one();
    while iterations < 5_000 && fw_gap(&w, &pt.grad) > T::resolvable(1e-7) {
        iterations += 1;
        let gmin = pt.grad.iter().copied().fold(T::infinity(), T::min);
        let mut trial: Vec<T> = w.iter().zip(&pt.grad).map(|(&wi, &gi)| wi * (-eta * (gi - gmin)).exp()).collect();
        let z: T = trial.iter().copied().sum();
        trial.iter_mut().for_each(|x| *x = *x / z);
        let next = prob.eval(&trial)?;
        if next.info <= pt.info {
            w = trial;
            pt = next;
            eta = (eta * T::lit(1.5)).min(T::lit(1e8));
        } else {
            eta = eta * T::lit(0.5);
            if eta < T::lit(1e-14) {
                break;
            }
        }
    }

    // active-set Newton
    let support_floor = T::lit(1e-10);
    let mut active: Vec<usize> = (0..k).filter(|&i| w[i] > support_floor).collect();
    for i in 0..k {
        if !active.contains(&i) {
            w[i] = T::zero();
        }
    }
    let z: T = w.iter().copied().sum();
    w.iter_mut().for_each(|x| *x = *x / z);
    pt = prob.eval(&w)?;
    for _ in 0..200 {
        if fw_gap(&w, &pt.grad) <= target {
            break;
        }
        iterations += 1;
        let m = active.len();
        // KKT system [H 1; 1ᵀ 0][d; ν] = [−g; 0], lightly regularized
        let h = prob.hessian(&pt, &active);
        let trace: T = (0..m).map(|r| h[r][r]).sum();
        let reg = trace * T::lit(1e-12) + T::epsilon();
        let mut a = vec![vec![T::zero(); m + 1]; m + 1];
        let mut rhs = vec![T::zero(); m + 1];
        for r in 0..m {
            for c in 0..m {
                a[r][c] = h[r][c] + if r == c { reg } else { T::zero() };
            }
            a[r][m] = T::one();
            a[m][r] = T::one();
            rhs[r] = -pt.grad[active[r]];
        }
        let d = solve_dense(a, rhs).map(|mut x| {
            x.truncate(m);
            x
        });
        let slope = d.as_ref().map(|d| (0..m).map(|r| pt.grad[active[r]] * d[r]).sum::<T>());
        let on_support: Vec<T> = active.iter().map(|&i| pt.grad[i]).collect();
        let support_gap = fw_gap(&active.iter().map(|&i| w[i]).collect::<Vec<_>>(), &on_support);
        let newton_done = d.is_none() || support_gap <= target || slope.is_some_and(|s| s >= T::zero());
        if newton_done {
            // optimal on the support: bring in the most violating outside vertex
            let lambda: T = active.iter().map(|&i| w[i] * pt.grad[i]).sum();
            let entering = (0..k)
                .filter(|i| !active.contains(i))
                .min_by(|&x, &y| pt.grad[x].partial_cmp(&pt.grad[y]).unwrap())
                .filter(|&j| pt.grad[j] < lambda);
            let Some(j) = entering else { break };
            // Frank–Wolfe step toward vertex j with backtracking
            let mut gamma = T::one();
            let mut moved = false;
            while gamma > T::lit(1e-16) {
                let trial: Vec<T> = (0..k)
                    .map(|i| (T::one() - gamma) * w[i] + if i == j { gamma } else { T::zero() })
                    .collect();
                let next = prob.eval(&trial)?;
                if next.info < pt.info {
                    w = trial;
                    pt = next;
                    moved = true;
                    break;
                }
                gamma = gamma * T::lit(0.5);
            }
            if !moved {
                break;
            }
            active.push(j);
            active.sort_unstable();
            continue;
        }
        let (d, slope) = (d.unwrap(), slope.unwrap());
        // largest step keeping the weights nonnegative
        let mut alpha_max = T::infinity();
        let mut blocking = None;
        for r in 0..m {
            if d[r] < T::zero() {
                let a = -w[active[r]] / d[r];
                if a < alpha_max {
                    alpha_max = a;
                    blocking = Some(r);
                }
            }
        }
        let mut alpha = T::one().min(alpha_max);
        let mut accepted = None;
        while alpha > T::lit(1e-20) {
            let mut trial = w.clone();
            for r in 0..m {
                trial[active[r]] = (w[active[r]] + alpha * d[r]).max(T::zero());
            }
            let hit = alpha >= alpha_max;
            if hit {
                trial[active[blocking.unwrap()]] = T::zero();
            }
            let z: T = trial.iter().copied().sum();
            trial.iter_mut().for_each(|x| *x = *x / z);
            let next = prob.eval(&trial)?;
            // once the predicted decrease is below roundoff in I, judge by the gap
            let flat = -slope <= T::epsilon() * T::lit(64.0) * (T::one() + pt.info.abs());
            let improves = if flat {
                fw_gap(&trial, &next.grad) < fw_gap(&w, &pt.grad)
            } else {
                next.info <= pt.info + T::lit(1e-4) * alpha * slope
            };
            if improves {
                accepted = Some((trial, next, hit));
                break;
            }
            alpha = alpha * T::lit(0.5);
        }
        let Some((trial, next, hit)) = accepted else { break };
        w = trial;
        pt = next;
        if hit {
            active.remove(blocking.unwrap());
        }
    }
    let gap = fw_gap(&w, &pt.grad);
    Ok(HullWorst { weights: w, channel: pt.mix, information: pt.info, gap, iterations })
}
