//! Solver-independent checks of any contract menu: participation (IR),
//! truth-telling (IC), monotonicity of the menu, and self-revelation.
//!
//! Everything here is computed from the payoff formulas in [`crate::economy`]
//! alone, so menus from any source (solvers, oracles, CSV files) can be checked.

use std::fmt::Write as _;

use crate::economy::{ap_payoff, bs_payoff, type_welfare, ContractBundle, ContractMenu, EconomyConfig, Mechanism};
use crate::error::Result;
use crate::harness::csv::format_float;
use crate::scalar::Scalar;

/// Strict-increase threshold for monotonicity checks.
pub const MONOTONE_TOL: f64 = 1e-12;

/// `θ_k v(T_k) − q_k` for every type.
pub fn check_ir<S: Scalar>(menu: &ContractMenu<S>, config: &EconomyConfig<S>) -> Result<Vec<S>> {
    menu.check_len(config.num_types())?;
    menu.bundles.iter().zip(config.theta()).map(|(b, &theta)| ap_payoff(theta, b, config.valuation())).collect()
}

/// Payoff of each type (rows) when picking each bundle (columns).
pub fn selection_payoffs<S: Scalar>(menu: &ContractMenu<S>, config: &EconomyConfig<S>) -> Result<Vec<Vec<S>>> {
    menu.check_len(config.num_types())?;
    let kind = config.valuation();
    let values = menu.bundles.iter().map(|b| kind.value(b.payment)).collect::<Result<Vec<_>>>()?;
    Ok(config
        .theta()
        .iter()
        .map(|&theta| values.iter().zip(&menu.bundles).map(|(&v, b)| theta * v - b.traffic).collect())
        .collect())
}

/// Entry `(k, l)` is type `k`'s payoff from its own bundle minus its payoff
/// from bundle `l`. The diagonal is zero.
pub fn check_ic<S: Scalar>(menu: &ContractMenu<S>, config: &EconomyConfig<S>) -> Result<Vec<Vec<S>>> {
    let table = selection_payoffs(menu, config)?;
    Ok(table.iter().enumerate().map(|(k, row)| row.iter().map(|&p| row[k] - p).collect()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monotonicity {
    pub payment: bool,
    pub traffic: bool,
    pub ap_payoff: bool,
}

fn strictly_increasing<S: Scalar>(values: impl IntoIterator<Item = S>) -> bool {
    let tol = S::lit(MONOTONE_TOL);
    let v: Vec<S> = values.into_iter().collect();
    v.windows(2).all(|w| w[1] - w[0] > tol)
}

/// Strict increase of `T`, `q` and `V` along the type order. Vacuously true
/// for a single type.
pub fn check_monotonicity<S: Scalar>(menu: &ContractMenu<S>, config: &EconomyConfig<S>) -> Result<Monotonicity> {
    let ap = check_ir(menu, config)?;
    Ok(Monotonicity {
        payment: strictly_increasing(menu.payments()),
        traffic: strictly_increasing(menu.traffic()),
        ap_payoff: strictly_increasing(ap),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelfRevelation {
    pub self_revealing: bool,
    /// Bundle chosen by each type (0-based), ties resolved toward the own index.
    pub selected: Vec<usize>,
    /// Every bundle within tolerance of each type's best payoff.
    pub argmax_sets: Vec<Vec<usize>>,
    /// All bundles identical, so every type is indifferent between all of them.
    pub degenerate: bool,
}

/// Exhaustive best-response of every type over the whole menu.
pub fn check_self_revealing<S: Scalar>(menu: &ContractMenu<S>, config: &EconomyConfig<S>) -> Result<SelfRevelation> {
    let table = selection_payoffs(menu, config)?;
    let tol = S::feasibility_tol();
    let mut selected = Vec::with_capacity(table.len());
    let mut argmax_sets = Vec::with_capacity(table.len());
    for (k, row) in table.iter().enumerate() {
        let best = row.iter().copied().fold(S::neg_infinity(), S::max);
        let set: Vec<usize> = (0..row.len()).filter(|&l| row[l] >= best - tol).collect();
        selected.push(if set.contains(&k) { k } else { set[0] });
        argmax_sets.push(set);
    }
    let self_revealing = selected.iter().enumerate().all(|(k, &l)| k == l);
    let degenerate = menu.bundles.windows(2).all(|w| w[0] == w[1]);
    Ok(SelfRevelation { self_revealing, selected, argmax_sets, degenerate })
}

/// True when the sequence rises to its maximum and falls afterwards, allowing
/// `tol` of noise in each step.
pub fn is_unimodal<S: Scalar>(seq: &[S], tol: S) -> bool {
    let Some(peak) = (0..seq.len()).max_by(|&a, &b| seq[a].partial_cmp(&seq[b]).unwrap_or(std::cmp::Ordering::Equal))
    else {
        return true;
    };
    seq[..=peak].windows(2).all(|w| w[1] >= w[0] - tol) && seq[peak..].windows(2).all(|w| w[1] <= w[0] + tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport<S> {
    pub ir_slacks: Vec<S>,
    pub ic_slack_matrix: Vec<Vec<S>>,
    pub monotone_payment: bool,
    pub monotone_traffic: bool,
    pub monotone_ap_payoff: bool,
    /// Every AP is left with zero payoff (the full-extraction pattern).
    pub all_zero_ap_payoffs: bool,
    pub self_revealing: bool,
    pub selected: Vec<usize>,
    pub degenerate: bool,
    /// Largest constraint violation (0 when every slack is nonnegative).
    pub worst_violation: S,
}

impl<S: Scalar> FeasibilityReport<S> {
    pub fn num_types(&self) -> usize {
        self.ir_slacks.len()
    }

    pub fn min_ir_slack(&self) -> S {
        self.ir_slacks.iter().copied().fold(S::infinity(), S::min)
    }

    /// Smallest off-diagonal IC slack (`+∞` for a single type).
    pub fn min_ic_slack(&self) -> S {
        self.ic_row_minima().into_iter().fold(S::infinity(), S::min)
    }

    fn ic_row_minima(&self) -> Vec<S> {
        self.ic_slack_matrix
            .iter()
            .enumerate()
            .map(|(k, row)| {
                row.iter().enumerate().filter(|&(l, _)| l != k).map(|(_, &s)| s).fold(S::infinity(), S::min)
            })
            .collect()
    }

    /// Slack of each type against mimicking the next-lower type, `(k, k−1)`
    /// for `k = 2..K`.
    pub fn adjacent_downward_ic_slacks(&self) -> Vec<S> {
        (1..self.num_types()).map(|k| self.ic_slack_matrix[k][k - 1]).collect()
    }

    pub fn is_ir_feasible(&self) -> bool {
        self.min_ir_slack() >= -S::feasibility_tol()
    }

    pub fn is_ic_feasible(&self) -> bool {
        self.min_ic_slack() >= -S::feasibility_tol()
    }

    /// IR and IC both hold.
    pub fn is_feasible(&self) -> bool {
        self.is_ir_feasible() && self.is_ic_feasible()
    }

    /// Feasibility under the constraint set the mechanism is bound by.
    pub fn is_feasible_for(&self, mechanism: Mechanism) -> bool {
        if mechanism.requires_incentive_compatibility() {
            self.is_feasible()
        } else {
            self.is_ir_feasible()
        }
    }

    /// Most violated constraint as `(description, slack)`, if any is violated.
    pub fn first_violation(&self, require_ic: bool) -> Option<(String, S)> {
        let tol = -S::feasibility_tol();
        if let Some((k, &s)) = self.ir_slacks.iter().enumerate().find(|(_, s)| **s < tol) {
            return Some((format!("IR of type {}", k + 1), s));
        }
        if !require_ic {
            return None;
        }
        let mut worst: Option<(usize, usize, S)> = None;
        for (k, row) in self.ic_slack_matrix.iter().enumerate() {
            for (l, &s) in row.iter().enumerate() {
                if k != l && s < tol && worst.is_none_or(|(_, _, w)| s < w) {
                    worst = Some((k, l, s));
                }
            }
        }
        worst.map(|(k, l, s)| (format!("IC of type {} against bundle {}", k + 1, l + 1), s))
    }

    /// Flat CSV with one row per type.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,ir_slack,min_ic_slack,selected_bundle,self_selects\n");
        for (k, min_ic) in self.ic_row_minima().into_iter().enumerate() {
            let min_ic = if min_ic.is_finite() { format_float(min_ic.as_f64()) } else { String::new() };
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                k + 1,
                format_float(self.ir_slacks[k].as_f64()),
                min_ic,
                self.selected[k] + 1,
                self.selected[k] == k
            );
        }
        out
    }

    /// Human-readable summary.
    pub fn summary(&self, mechanism: Option<Mechanism>) -> String {
        let mut s = String::new();
        let verdict = |ok: bool| if ok { "ok" } else { "VIOLATED" };
        let _ = writeln!(s, "types:            {}", self.num_types());
        let _ = writeln!(
            s,
            "IR (participation): {} (min slack {:.3e})",
            verdict(self.is_ir_feasible()),
            self.min_ir_slack().as_f64()
        );
        let min_ic = self.min_ic_slack();
        if min_ic.is_finite() {
            let _ = writeln!(
                s,
                "IC (truth-telling): {} (min slack {:.3e})",
                verdict(self.is_ic_feasible()),
                min_ic.as_f64()
            );
        } else {
            let _ = writeln!(s, "IC (truth-telling): vacuous");
        }
        let _ = writeln!(
            s,
            "monotone T/q/V:   {}/{}/{}{}",
            self.monotone_payment,
            self.monotone_traffic,
            self.monotone_ap_payoff,
            if self.all_zero_ap_payoffs { " (all AP payoffs zero)" } else { "" }
        );
        let _ = writeln!(
            s,
            "self-revealing:   {}{}",
            self.self_revealing,
            if self.degenerate { " (degenerate: identical bundles)" } else { "" }
        );
        let _ = writeln!(s, "worst violation:  {:.3e}", self.worst_violation.as_f64());
        if let Some(m) = mechanism {
            let _ = writeln!(s, "feasible for {m}:  {}", self.is_feasible_for(m));
        }
        s
    }
}

/// Runs every check on a menu.
pub fn verify<S: Scalar>(menu: &ContractMenu<S>, config: &EconomyConfig<S>) -> Result<FeasibilityReport<S>> {
    let ir_slacks = check_ir(menu, config)?;
    let ic_slack_matrix = check_ic(menu, config)?;
    let mono = check_monotonicity(menu, config)?;
    let reveal = check_self_revealing(menu, config)?;
    let tol = S::feasibility_tol();
    let all_zero_ap_payoffs = ir_slacks.iter().all(|s| s.abs() <= tol);

    let mut report = FeasibilityReport {
        ir_slacks,
        ic_slack_matrix,
        monotone_payment: mono.payment,
        monotone_traffic: mono.traffic,
        monotone_ap_payoff: mono.ap_payoff,
        all_zero_ap_payoffs,
        self_revealing: reveal.self_revealing,
        selected: reveal.selected,
        degenerate: reveal.degenerate,
        worst_violation: S::zero(),
    };
    let min_slack = report.min_ir_slack().min(report.min_ic_slack());
    report.worst_violation = (-min_slack).max(S::zero());
    Ok(report)
}

/// Per-type payoffs of one mechanism's menu.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismColumn<S> {
    pub mechanism: Mechanism,
    pub bundles: Vec<ContractBundle<S>>,
    pub price_per_unit: Option<S>,
    /// `U(k)`
    pub bs_payoff: Vec<S>,
    /// `V(k)`
    pub ap_payoff: Vec<S>,
    pub welfare: Vec<S>,
    pub expected_bs_payoff: S,
    pub expected_ap_payoff: S,
    pub expected_welfare: S,
}

/// Per-type BS payoff, AP payoff and welfare for a set of menus on one economy.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTable<S> {
    pub theta: Vec<S>,
    pub beta: Vec<S>,
    pub columns: Vec<MechanismColumn<S>>,
}

impl<S: Scalar> PayoffTable<S> {
    pub fn column(&self, mechanism: Mechanism) -> Option<&MechanismColumn<S>> {
        self.columns.iter().find(|c| c.mechanism == mechanism)
    }

    pub fn num_types(&self) -> usize {
        self.theta.len()
    }
}

/// Assembles the payoff table, ordering columns canonically (PD, AAS, LP).
pub fn payoff_table<S: Scalar>(menus: &[ContractMenu<S>], config: &EconomyConfig<S>) -> Result<PayoffTable<S>> {
    let c = config.unit_cost();
    let kind = config.valuation();
    let mut columns = Vec::with_capacity(menus.len());
    for menu in menus {
        menu.check_len(config.num_types())?;
        let bs: Vec<S> = menu.bundles.iter().map(|b| bs_payoff(b, c)).collect();
        let ap = check_ir(menu, config)?;
        let welfare = menu
            .bundles
            .iter()
            .zip(config.theta())
            .map(|(b, &theta)| type_welfare(theta, b, c, kind))
            .collect::<Result<Vec<_>>>()?;
        let expect = |xs: &[S]| xs.iter().zip(config.beta()).map(|(&x, &b)| b * x).sum::<S>();
        columns.push(MechanismColumn {
            mechanism: menu.mechanism,
            bundles: menu.bundles.clone(),
            price_per_unit: menu.price_per_unit,
            expected_bs_payoff: expect(&bs),
            expected_ap_payoff: expect(&ap),
            expected_welfare: expect(&welfare),
            bs_payoff: bs,
            ap_payoff: ap,
            welfare,
        });
    }
    columns.sort_by_key(|c| c.mechanism);
    Ok(PayoffTable { theta: config.theta().to_vec(), beta: config.beta().to_vec(), columns })
}
