//! Brute-force reference solutions on small instances.
//!
//! These never call into the closed-form solvers: they enumerate candidate
//! payments (and traffic) on log-spaced grids, filter by the constraints and
//! keep the best objective, refining the grid around the incumbent.

use rayon::prelude::*;

use crate::economy::{ContractBundle, ContractMenu, EconomyConfig, Mechanism};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solvers::demand;

/// Largest type count the exhaustive screening oracle accepts.
pub const MAX_ORACLE_TYPES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<S> {
    pub t_min: S,
    pub t_max: S,
    pub points_per_axis: usize,
    pub refinement_rounds: usize,
}

impl<S: Scalar> GridSpec<S> {
    pub fn new(t_min: S, t_max: S, points_per_axis: usize, refinement_rounds: usize) -> Result<Self> {
        let spec = GridSpec { t_min, t_max, points_per_axis, refinement_rounds };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > S::zero() && self.t_min < self.t_max && self.t_max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "grid needs 0 < t_min < t_max (got {} .. {})",
                self.t_min, self.t_max
            )));
        }
        if self.points_per_axis < 16 {
            return Err(Error::InvalidConfig("grid needs at least 16 points per axis".into()));
        }
        if self.refinement_rounds == 0 {
            return Err(Error::InvalidConfig("grid needs at least one refinement round".into()));
        }
        Ok(())
    }
}

/// `n` log-spaced points from `lo` to `hi`, endpoints exact.
pub fn log_grid<S: Scalar>(lo: S, hi: S, n: usize) -> Vec<S> {
    let (a, b) = (lo.ln(), hi.ln());
    let steps = S::lit((n - 1) as f64);
    let mut pts: Vec<S> = (0..n).map(|i| (a + (b - a) * S::lit(i as f64) / steps).exp()).collect();
    pts[0] = lo;
    pts[n - 1] = hi;
    pts
}

/// Neighbouring points around index `i`, used as the next round's range.
fn neighbourhood<S: Copy>(pts: &[S], i: usize) -> (S, S) {
    (pts[i.saturating_sub(1)], pts[(i + 1).min(pts.len() - 1)])
}

/// Deterministic argmax: highest objective, ties to the lowest index.
fn better<S: Scalar>(a: (S, usize), b: (S, usize)) -> (S, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn argmax_par<S, F>(count: usize, eval: F) -> Option<(S, usize)>
where
    S: Scalar,
    F: Fn(usize) -> Option<S> + Sync + Send,
{
    (0..count).into_par_iter().filter_map(|i| eval(i).filter(|v| v.is_finite()).map(|v| (v, i))).reduce_with(better)
}

/// Per-type payment scan with full surplus extraction, `q = θ_k v(T)`, on an
/// explicit list of points, no refinement.
pub fn oracle_perfect_discrimination_on_points<S: Scalar>(
    config: &EconomyConfig<S>,
    points: &[S],
) -> Result<ContractMenu<S>> {
    let mut bundles = Vec::with_capacity(config.num_types());
    for &theta in config.theta() {
        let (bundle, _) = scan_first_best(config, theta, points)?;
        bundles.push(bundle);
    }
    Ok(ContractMenu::new(Mechanism::PerfectDiscrimination, bundles))
}

fn scan_first_best<S: Scalar>(config: &EconomyConfig<S>, theta: S, points: &[S]) -> Result<(ContractBundle<S>, usize)> {
    let kind = config.valuation();
    let c = config.unit_cost();
    let objective = |t: S| kind.value(t).ok().map(|v| theta * v - c * t);
    let (_, i) = argmax_par(points.len(), |i| objective(points[i])).ok_or(Error::Infeasible)?;
    let t = points[i];
    Ok((ContractBundle { payment: t, traffic: theta * kind.value(t)? }, i))
}

/// Per-type log-grid search of the full-information program.
pub fn oracle_perfect_discrimination<S: Scalar>(
    config: &EconomyConfig<S>,
    grid: &GridSpec<S>,
) -> Result<ContractMenu<S>> {
    grid.validate()?;
    let c = config.unit_cost();
    let mut bundles = Vec::with_capacity(config.num_types());
    for &theta in config.theta() {
        let mut pts = log_grid(grid.t_min, grid.t_max, grid.points_per_axis);
        let (mut best, i) = scan_first_best(config, theta, &pts)?;
        if i == 0 || i == pts.len() - 1 {
            return Err(Error::GridBoundary { at: pts[i].as_f64() });
        }
        let mut idx = i;
        for _ in 0..grid.refinement_rounds {
            let (lo, hi) = neighbourhood(&pts, idx);
            pts = log_grid(lo, hi, grid.points_per_axis);
            let (cand, j) = scan_first_best(config, theta, &pts)?;
            idx = j;
            if cand.traffic - c * cand.payment > best.traffic - c * best.payment {
                best = cand;
            }
        }
        bundles.push(best);
    }
    Ok(ContractMenu::new(Mechanism::PerfectDiscrimination, bundles))
}

/// Linear price grid over `(c, p_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceGrid<S> {
    pub p_max: S,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceOptimum<S> {
    pub price: S,
    pub profit: S,
}

/// BS profit `(P − c) D(P)` with types priced out contributing zero demand.
pub fn linear_pricing_profit<S: Scalar>(config: &EconomyConfig<S>, price: S) -> S {
    let kind = config.valuation();
    let d: S = config
        .theta()
        .iter()
        .zip(config.beta())
        .map(|(&th, &b)| b * demand(th, price, kind).unwrap_or(S::zero()))
        .sum();
    (price - config.unit_cost()) * d
}

/// Scans the profit on a price grid with two refinement rounds.
pub fn oracle_linear_pricing<S: Scalar>(config: &EconomyConfig<S>, grid: &PriceGrid<S>) -> Result<PriceOptimum<S>> {
    let c = config.unit_cost();
    if !(grid.p_max > c) || grid.points < 3 {
        return Err(Error::InvalidConfig("price grid needs p_max > c and at least 3 points".into()));
    }
    let linear = |lo: S, hi: S, n: usize| -> Vec<S> {
        (1..=n).map(|i| lo + (hi - lo) * S::lit(i as f64) / S::lit(n as f64)).collect()
    };
    let mut pts = linear(c, grid.p_max, grid.points);
    let profit = |p: S| linear_pricing_profit(config, p);
    let (mut best_profit, i) = argmax_par(pts.len(), |i| Some(profit(pts[i]))).ok_or(Error::Infeasible)?;
    if i == pts.len() - 1 || i == 0 {
        return Err(Error::GridBoundary { at: pts[i].as_f64() });
    }
    let mut best_price = pts[i];
    let mut idx = i;
    for _ in 0..2 {
        let (lo, hi) = neighbourhood(&pts, idx);
        let mut next = vec![lo];
        next.extend(linear(lo, hi, grid.points - 1));
        pts = next;
        let (p, j) = argmax_par(pts.len(), |i| Some(profit(pts[i]))).ok_or(Error::Infeasible)?;
        idx = j;
        if p > best_profit {
            best_profit = p;
            best_price = pts[j];
        }
    }
    if !(best_profit > S::zero()) {
        return Err(Error::DegenerateMarket);
    }
    Ok(PriceOptimum { price: best_price, profit: best_profit })
}

/// How the screening oracle sets traffic for a candidate payment vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    /// Traffic pinned by the lowest type's binding participation constraint
    /// and binding downward-adjacent incentive constraints; the candidate is
    /// then checked against all constraints.
    BindingStructure,
    /// Traffic set to the largest vector satisfying all `K` participation
    /// and `K(K−1)` incentive constraints (shortest paths on the difference
    /// constraint graph). No binding pattern is assumed.
    FullConstraint,
    /// Payments and traffic both gridded (`2K` axes), filtered by all
    /// constraints.
    JointGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution<S> {
    pub menu: ContractMenu<S>,
    pub objective: S,
    /// Log-spacing of each payment axis in the round that produced the
    /// returned menu.
    pub final_log_spacing: Vec<S>,
}

impl<S: Scalar> OracleSolution<S> {
    /// Whether `t` lies within one final grid cell of the oracle payment of type `k` (0-based).
    pub fn payment_within_final_cell(&self, k: usize, t: S) -> bool {
        (self.menu.bundles[k].payment.ln() - t.ln()).abs() <= self.final_log_spacing[k]
    }
}

fn fully_feasible<S: Scalar>(theta: &[S], values: &[S], traffic: &[S], tol: S) -> bool {
    let k = theta.len();
    for i in 0..k {
        if traffic[i] < S::zero() {
            return false;
        }
        let own = theta[i] * values[i] - traffic[i];
        if own < -tol {
            return false;
        }
        for j in 0..k {
            if j != i && own - (theta[i] * values[j] - traffic[j]) < -tol {
                return false;
            }
        }
    }
    true
}

/// Pointwise-largest traffic satisfying every IR and IC constraint, or `None`
/// if the payments admit no feasible traffic.
///
/// Constraints are differences `q_k − q_l ≤ θ_k (v_k − v_l)` with the null
/// contract as node 0 (`q_0 = 0`, `v_0 = 0`), so the answer is the vector of
/// shortest-path distances from node 0.
pub fn max_feasible_traffic<S: Scalar>(theta: &[S], values: &[S]) -> Option<Vec<S>> {
    let k = theta.len();
    let weight = |from: usize, to: usize| -> S {
        let v_from = if from == 0 { S::zero() } else { values[from - 1] };
        theta[to - 1] * (values[to - 1] - v_from)
    };
    let mut dist = vec![S::infinity(); k + 1];
    dist[0] = S::zero();
    for _ in 0..=k {
        let mut changed = false;
        for to in 1..=k {
            for from in 0..=k {
                if from != to && dist[from].is_finite() {
                    let cand = dist[from] + weight(from, to);
                    if cand < dist[to] {
                        dist[to] = cand;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            let q = dist[1..].to_vec();
            return q.iter().all(|&x| x >= S::zero()).then_some(q);
        }
    }
    None
}

struct Axis<S> {
    lo: S,
    hi: S,
}

/// Exhaustive screening oracle for `K ≤ 3`.
pub fn oracle_anti_adverse_selection<S: Scalar>(
    config: &EconomyConfig<S>,
    grid: &GridSpec<S>,
    mode: OracleMode,
) -> Result<OracleSolution<S>> {
    grid.validate()?;
    let k_types = config.num_types();
    if k_types > MAX_ORACLE_TYPES {
        return Err(Error::InvalidConfig(format!(
            "screening oracle supports at most {MAX_ORACLE_TYPES} types (got {k_types})"
        )));
    }
    let kind = config.valuation();
    let c = config.unit_cost();
    let theta = config.theta();
    let beta = config.beta();
    let tol = S::feasibility_tol();
    let n = grid.points_per_axis;

    let mut axes: Vec<Axis<S>> = (0..k_types).map(|_| Axis { lo: grid.t_min, hi: grid.t_max }).collect();
    if mode == OracleMode::JointGrid {
        let (v_lo, v_hi) = (kind.value(grid.t_min)?, kind.value(grid.t_max)?);
        for &th in theta {
            axes.push(Axis { lo: th * v_lo, hi: th * v_hi });
        }
    }
    let dims = axes.len();
    let total = n.checked_pow(dims as u32).ok_or_else(|| Error::InvalidConfig("grid too large".into()))?;

    let evaluate = |points: &[Vec<S>], flat: usize| -> Option<(S, Vec<S>, Vec<S>)> {
        let mut rest = flat;
        let mut coords = Vec::with_capacity(dims);
        for axis in points {
            coords.push(axis[rest % n]);
            rest /= n;
        }
        let payment = &coords[..k_types];
        let values: Vec<S> = payment.iter().map(|&t| kind.value(t).ok()).collect::<Option<_>>()?;
        let traffic = match mode {
            OracleMode::BindingStructure => {
                let mut q = vec![theta[0] * values[0]; k_types];
                for i in 1..k_types {
                    q[i] = q[i - 1] + theta[i] * (values[i] - values[i - 1]);
                }
                fully_feasible(theta, &values, &q, tol).then_some(q)?
            }
            OracleMode::FullConstraint => max_feasible_traffic(theta, &values)?,
            OracleMode::JointGrid => {
                let q = coords[k_types..].to_vec();
                fully_feasible(theta, &values, &q, tol).then_some(q)?
            }
        };
        let objective = (0..k_types).map(|i| beta[i] * (traffic[i] - c * payment[i])).sum::<S>();
        Some((objective, payment.to_vec(), traffic))
    };

    // below this log-spacing the objective differences drown in rounding
    let floor = S::epsilon().sqrt() * S::lit(100.0);
    let mut best: Option<(S, Vec<S>, Vec<S>)> = None;
    let mut spacing = vec![S::zero(); k_types];
    for round in 0..=grid.refinement_rounds {
        let points: Vec<Vec<S>> = axes.iter().map(|a| log_grid(a.lo, a.hi, n)).collect();
        let round_spacing: Vec<S> = points[..k_types].iter().map(|pts| pts[1].ln() - pts[0].ln()).collect();
        if round > 0 && round_spacing.iter().any(|&s| s < floor) {
            break;
        }
        let Some((_, flat)) = argmax_par(total, |i| evaluate(&points, i).map(|r| r.0)) else {
            break;
        };
        let cand = evaluate(&points, flat).expect("argmax candidate re-evaluates");
        // a payment pinned at the top of the initial range means the range is too narrow;
        // the bottom is fine, a vanishing payment approximates exclusion
        if round == 0 {
            if let Some(&t) = cand.1.iter().find(|&&t| t >= grid.t_max) {
                return Err(Error::GridBoundary { at: t.as_f64() });
            }
        }
        if best.as_ref().is_none_or(|b| cand.0 > b.0) {
            best = Some(cand);
            spacing = round_spacing;
        }
        // recentre every axis on the round's argmax; the joint grid only
        // halves its boxes since feasible points thin out near the optimum
        let width = if mode == OracleMode::JointGrid { n / 4 } else { 1 };
        let mut rest = flat;
        for (axis, pts) in axes.iter_mut().zip(&points) {
            let i = rest % n;
            let (lo, hi) = (pts[i.saturating_sub(width)], pts[(i + width).min(n - 1)]);
            rest /= n;
            *axis = Axis { lo, hi };
        }
    }
    let (objective, payment, traffic) = best.ok_or(Error::Infeasible)?;
    let bundles =
        payment.into_iter().zip(traffic).map(|(payment, traffic)| ContractBundle { payment, traffic }).collect();
    Ok(OracleSolution {
        menu: ContractMenu::new(Mechanism::AntiAdverseSelection, bundles),
        objective,
        final_log_spacing: spacing,
    })
}
