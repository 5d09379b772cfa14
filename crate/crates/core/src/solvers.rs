//! Optimal menus under the three mechanisms: full-information perfect
//! discrimination, a posted per-unit price, and the incentive-compatible
//! screening menu for the asymmetric-information case.

use crate::economy::{ContractBundle, ContractMenu, EconomyConfig, Mechanism, ValuationKind};
use crate::error::{Error, Result};
use crate::root;
use crate::scalar::Scalar;

/// Perfect discrimination: each type is paid where `θ_k v'(T_k) = c` and
/// asked for all of its surplus, `q_k = θ_k v(T_k)`.
pub fn solve_perfect_discrimination<S: Scalar>(config: &EconomyConfig<S>) -> Result<ContractMenu<S>> {
    let kind = config.valuation();
    let c = config.unit_cost();
    let bundles = config.theta().iter().map(|&theta| first_best_bundle(theta, c, kind)).collect::<Result<Vec<_>>>()?;
    Ok(ContractMenu::new(Mechanism::PerfectDiscrimination, bundles))
}

fn first_best_bundle<S: Scalar>(theta: S, c: S, kind: ValuationKind<S>) -> Result<ContractBundle<S>> {
    let payment = kind.inverse_marginal(c / theta)?;
    Ok(ContractBundle { payment, traffic: theta * kind.value(payment)? })
}

/// Payment requested by type `θ` at per-unit price `P`: the `T` with
/// `θ v'(T) = P`.
pub fn demand<S: Scalar>(theta_k: S, price: S, kind: ValuationKind<S>) -> Result<S> {
    if !(price > S::zero()) {
        return Err(Error::Domain { what: "per-unit price", value: price.as_f64() });
    }
    kind.inverse_marginal(price / theta_k)
}

/// `D(P) = Σ β_k d_k(P)`.
pub fn aggregate_demand<S: Scalar>(config: &EconomyConfig<S>, price: S) -> Result<S> {
    let kind = config.valuation();
    let mut total = S::zero();
    for (&theta, &beta) in config.theta().iter().zip(config.beta()) {
        total = total + beta * demand(theta, price, kind)?;
    }
    Ok(total)
}

/// Demand and its slope in `P`, with demand cut to zero once the price
/// exceeds what the type's marginal valuation can match.
fn demand_with_slope<S: Scalar>(theta: S, price: S, kind: ValuationKind<S>) -> (S, S) {
    if price / theta >= kind.marginal_supremum() {
        return (S::zero(), S::zero());
    }
    match kind.inverse_marginal(price / theta) {
        Ok(t) if t > S::zero() => {
            // d'(P) = 1 / (θ v''(d(P)))
            let slope = kind.second_derivative(t).map(|v2| S::one() / (theta * v2)).unwrap_or(S::zero());
            (t, slope)
        }
        _ => (S::zero(), S::zero()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPricingSolution<S> {
    /// Monopoly price `P_m`.
    pub price_per_unit: S,
    /// `d_k(P_m)` per type.
    pub per_type_payment: Vec<S>,
    pub menu: ContractMenu<S>,
}

/// Linear pricing: the BS posts the price maximizing `(P − c) D(P)` and each
/// type picks its own payment.
pub fn solve_linear_pricing<S: Scalar>(config: &EconomyConfig<S>) -> Result<LinearPricingSolution<S>> {
    let kind = config.valuation();
    let c = config.unit_cost();
    let theta = config.theta();
    let beta = config.beta();

    let demand_and_slope = |p: S| {
        theta.iter().zip(beta).fold((S::zero(), S::zero()), |(d, ds), (&th, &b)| {
            let (dk, sk) = demand_with_slope(th, p, kind);
            (d + b * dk, ds + b * sk)
        })
    };
    // π'(P) = D(P) + (P − c) D'(P); its root is the fixed point P = c − D/D'.
    let profit_slope = |p: S| {
        let (d, ds) = demand_and_slope(p);
        d + (p - c) * ds
    };

    if !(demand_and_slope(c).0 > S::zero()) {
        return Err(Error::DegenerateMarket);
    }
    let two = S::lit(2.0);
    let mut hi = c * two;
    let ceiling = S::max_value().sqrt();
    while profit_slope(hi) > S::zero() {
        hi = hi * two;
        if hi > ceiling {
            return Err(Error::NoSolution("profit keeps increasing in the per-unit price".into()));
        }
    }
    let price = root::brent(profit_slope, c, hi, S::root_rtol() * S::lit(1e-3))?;

    let (agg, _) = demand_and_slope(price);
    if !(price > c) || !((price - c) * agg > S::zero()) {
        return Err(Error::DegenerateMarket);
    }

    let per_type_payment: Vec<S> = theta.iter().map(|&th| demand_with_slope(th, price, kind).0).collect();
    let bundles = per_type_payment.iter().map(|&t| ContractBundle { payment: t, traffic: price * t }).collect();
    let mut menu = ContractMenu::new(Mechanism::LinearPricing, bundles);
    menu.price_per_unit = Some(price);
    Ok(LinearPricingSolution { price_per_unit: price, per_type_payment, menu })
}

/// Lagrange multipliers of the reduced screening program.
#[derive(Debug, Clone, PartialEq)]
pub struct KktMultipliers<S> {
    /// `μ_k = Σ_{j ≥ k} β_j`; `μ_1` doubles as the multiplier of the
    /// lowest type's participation constraint.
    pub mu: Vec<S>,
    /// Multiplier of the participation constraint, `ν = β_1 + μ_2 = μ_1`.
    pub nu: S,
}

/// Backward recursion `μ_K = β_K`, `μ_k = β_k + μ_{k+1}`.
pub fn kkt_multipliers<S: Scalar>(config: &EconomyConfig<S>) -> KktMultipliers<S> {
    let beta = config.beta();
    let mut mu = vec![S::zero(); beta.len()];
    let mut acc = S::zero();
    for k in (0..beta.len()).rev() {
        acc = acc + beta[k];
        mu[k] = acc;
    }
    let nu = mu[0];
    KktMultipliers { mu, nu }
}

/// `μ_k θ_k − μ_{k+1} θ_{k+1}` for `k = 1..K−1`; all must be positive.
pub fn regularity_margins<S: Scalar>(config: &EconomyConfig<S>, multipliers: &KktMultipliers<S>) -> Vec<S> {
    let theta = config.theta();
    let mu = &multipliers.mu;
    (0..theta.len().saturating_sub(1)).map(|k| mu[k] * theta[k] - mu[k + 1] * theta[k + 1]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntiAdverseSelectionSolution<S> {
    pub menu: ContractMenu<S>,
    pub multipliers: KktMultipliers<S>,
}

/// The screening menu, returned without diagnostics.
pub fn solve_anti_adverse_selection<S: Scalar>(config: &EconomyConfig<S>) -> Result<ContractMenu<S>> {
    solve_anti_adverse_selection_detailed(config).map(|s| s.menu)
}

/// Solves the reduced program (lowest-type participation plus downward
/// adjacent incentive constraints) from its stationarity conditions.
///
/// Payments: `θ_K v'(T_K) = c` at the top and
/// `v'(T_k) = β_k c / (μ_k θ_k − μ_{k+1} θ_{k+1})` below it. Traffic is then
/// pinned by the binding constraints, `q_1 = θ_1 v(T_1)` and
/// `q_k = q_{k−1} + θ_k (v(T_k) − v(T_{k−1}))`.
pub fn solve_anti_adverse_selection_detailed<S: Scalar>(
    config: &EconomyConfig<S>,
) -> Result<AntiAdverseSelectionSolution<S>> {
    let kind = config.valuation();
    let c = config.unit_cost();
    let theta = config.theta();
    let beta = config.beta();
    let k_types = theta.len();

    let multipliers = kkt_multipliers(config);
    let margins = regularity_margins(config, &multipliers);
    if let Some((k, &margin)) = margins.iter().enumerate().find(|(_, m)| !(**m > S::zero())) {
        return Err(Error::NonRegular { index: k + 1, margin: margin.as_f64() });
    }

    let mut payment = vec![S::zero(); k_types];
    payment[k_types - 1] = kind.inverse_marginal(c / theta[k_types - 1])?;
    for k in 0..k_types - 1 {
        payment[k] = kind.inverse_marginal(beta[k] * c / margins[k])?;
    }
    if let Some(k) = payment.windows(2).position(|w| !(w[0] < w[1])) {
        return Err(Error::NonMonotoneAllocation { index: k + 1 });
    }

    let values = payment.iter().map(|&t| kind.value(t)).collect::<Result<Vec<_>>>()?;
    let mut traffic = vec![S::zero(); k_types];
    traffic[0] = theta[0] * values[0];
    for k in 1..k_types {
        traffic[k] = traffic[k - 1] + theta[k] * (values[k] - values[k - 1]);
    }

    let bundles =
        payment.into_iter().zip(traffic).map(|(payment, traffic)| ContractBundle { payment, traffic }).collect();
    Ok(AntiAdverseSelectionSolution { menu: ContractMenu::new(Mechanism::AntiAdverseSelection, bundles), multipliers })
}

/// Solves one mechanism by tag.
pub fn solve<S: Scalar>(config: &EconomyConfig<S>, mechanism: Mechanism) -> Result<ContractMenu<S>> {
    match mechanism {
        Mechanism::PerfectDiscrimination => solve_perfect_discrimination(config),
        Mechanism::AntiAdverseSelection => solve_anti_adverse_selection(config),
        Mechanism::LinearPricing => solve_linear_pricing(config).map(|s| s.menu),
    }
}
