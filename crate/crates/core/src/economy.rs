//! Problem instance, valuation functions and the payoff/welfare formulas.
//!
//! The BS gains one unit per unit of offloaded traffic and the AP bears one
//! unit of cost per unit of traffic; the reservation payoff of every AP is 0.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::root;
use crate::scalar::Scalar;

/// Tolerance on `Σ β_k = 1`.
pub const PROBABILITY_SUM_TOL: f64 = 1e-12;

/// The AP's valuation `v(T)` of a payment `T`: strictly increasing,
/// strictly concave, `v(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ValuationKind<S> {
    /// `v(T) = √T`
    #[default]
    SquareRoot,
    /// `v(T) = ln(1 + T)`
    LogOnePlus,
    /// `v(T) = T^α` with `α ∈ (0, 1)`
    PowerAlpha(S),
}

impl<S: Scalar> ValuationKind<S> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ValuationKind::PowerAlpha(alpha) if !(alpha > S::zero() && alpha < S::one()) => {
                Err(Error::Domain { what: "power valuation exponent", value: alpha.as_f64() })
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, t: S) -> Result<S> {
        if !(t >= S::zero()) {
            return Err(Error::Domain { what: "payment", value: t.as_f64() });
        }
        Ok(match *self {
            ValuationKind::SquareRoot => t.sqrt(),
            ValuationKind::LogOnePlus => t.ln_1p(),
            ValuationKind::PowerAlpha(alpha) => t.powf(alpha),
        })
    }

    pub fn derivative(&self, t: S) -> Result<S> {
        if !(t > S::zero()) {
            return Err(Error::Domain { what: "payment for marginal valuation", value: t.as_f64() });
        }
        Ok(match *self {
            ValuationKind::SquareRoot => S::one() / (S::lit(2.0) * t.sqrt()),
            ValuationKind::LogOnePlus => S::one() / (S::one() + t),
            ValuationKind::PowerAlpha(alpha) => alpha * t.powf(alpha - S::one()),
        })
    }

    pub fn second_derivative(&self, t: S) -> Result<S> {
        if !(t > S::zero()) {
            return Err(Error::Domain { what: "payment for curvature", value: t.as_f64() });
        }
        Ok(match *self {
            ValuationKind::SquareRoot => -S::one() / (S::lit(4.0) * t * t.sqrt()),
            ValuationKind::LogOnePlus => -S::one() / ((S::one() + t) * (S::one() + t)),
            ValuationKind::PowerAlpha(alpha) => alpha * (alpha - S::one()) * t.powf(alpha - S::lit(2.0)),
        })
    }

    /// Supremum of `v'` on `T > 0`, i.e. `lim v'(T)` as `T → 0+`.
    pub fn marginal_supremum(&self) -> S {
        match self {
            ValuationKind::LogOnePlus => S::one(),
            _ => S::infinity(),
        }
    }

    /// Solves `v'(T) = m` in closed form.
    pub fn inverse_marginal(&self, m: S) -> Result<S> {
        self.check_marginal(m)?;
        Ok(match *self {
            ValuationKind::SquareRoot => S::one() / (S::lit(4.0) * m * m),
            ValuationKind::LogOnePlus => S::one() / m - S::one(),
            ValuationKind::PowerAlpha(alpha) => (m / alpha).powf(S::one() / (alpha - S::one())),
        })
    }

    /// Solves `v'(T) = m` by bracketed root finding on `v'(T) − m`.
    pub fn inverse_marginal_by_root(&self, m: S) -> Result<S> {
        self.check_marginal(m)?;
        let kind = *self;
        root::find_positive_root(|t| kind.derivative(t).map(|d| d - m).unwrap_or(S::nan()))
    }

    fn check_marginal(&self, m: S) -> Result<()> {
        if !(m > S::zero()) || !m.is_finite() {
            return Err(Error::Domain { what: "marginal valuation target", value: m.as_f64() });
        }
        if m >= self.marginal_supremum() {
            return Err(Error::NoSolution(format!(
                "marginal valuation {m} is not attained on T > 0 (sup v' = {})",
                self.marginal_supremum()
            )));
        }
        Ok(())
    }
}

impl<S: Scalar> fmt::Display for ValuationKind<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValuationKind::SquareRoot => write!(f, "sqrt"),
            ValuationKind::LogOnePlus => write!(f, "log1p"),
            ValuationKind::PowerAlpha(alpha) => write!(f, "power:{alpha}"),
        }
    }
}

impl<S: Scalar> FromStr for ValuationKind<S> {
    type Err = Error;

    /// Accepts `sqrt`, `log1p` and `power:<alpha>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let kind = match s.to_ascii_lowercase().as_str() {
            "sqrt" | "squareroot" | "square-root" => ValuationKind::SquareRoot,
            "log1p" | "log" | "logoneplus" => ValuationKind::LogOnePlus,
            other => {
                let alpha = other
                    .strip_prefix("power:")
                    .and_then(|a| a.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown valuation '{s}'")))?;
                ValuationKind::PowerAlpha(S::lit(alpha))
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// `v(T)`.
pub fn valuation<S: Scalar>(kind: ValuationKind<S>, t: S) -> Result<S> {
    kind.value(t)
}

/// `v'(T)` for `T > 0`.
pub fn valuation_derivative<S: Scalar>(kind: ValuationKind<S>, t: S) -> Result<S> {
    kind.derivative(t)
}

/// The payment `T` at which `v'(T) = m`.
pub fn inverse_marginal_valuation<S: Scalar>(kind: ValuationKind<S>, m: S) -> Result<S> {
    kind.inverse_marginal(m)
}

/// One traffic-payment pair offered to a type.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ContractBundle<S> {
    /// Payment `T` from the BS to the AP.
    pub payment: S,
    /// Traffic `q` the AP offloads for the BS.
    pub traffic: S,
}

impl<S: Scalar> ContractBundle<S> {
    pub fn new(payment: S, traffic: S) -> Result<Self> {
        if !(payment >= S::zero()) {
            return Err(Error::Domain { what: "bundle payment", value: payment.as_f64() });
        }
        if !(traffic >= S::zero()) {
            return Err(Error::Domain { what: "bundle traffic", value: traffic.as_f64() });
        }
        Ok(ContractBundle { payment, traffic })
    }

    /// The bundle an AP signs when it declines.
    pub fn null() -> Self {
        ContractBundle { payment: S::zero(), traffic: S::zero() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mechanism {
    PerfectDiscrimination,
    AntiAdverseSelection,
    LinearPricing,
}

impl Mechanism {
    /// Canonical column order used in every output table.
    pub const ALL: [Mechanism; 3] =
        [Mechanism::PerfectDiscrimination, Mechanism::AntiAdverseSelection, Mechanism::LinearPricing];

    pub fn code(self) -> &'static str {
        match self {
            Mechanism::PerfectDiscrimination => "pd",
            Mechanism::AntiAdverseSelection => "aas",
            Mechanism::LinearPricing => "lp",
        }
    }

    /// Whether truthful self-selection is part of the mechanism's
    /// feasibility requirement. Under perfect discrimination the BS observes
    /// types, so only participation matters.
    pub fn requires_incentive_compatibility(self) -> bool {
        !matches!(self, Mechanism::PerfectDiscrimination)
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pd" | "perfect-discrimination" | "perfectdiscrimination" => Ok(Mechanism::PerfectDiscrimination),
            "aas" | "anti-adverse-selection" | "antiadverseselection" => Ok(Mechanism::AntiAdverseSelection),
            "lp" | "linear-pricing" | "linearpricing" => Ok(Mechanism::LinearPricing),
            other => Err(Error::InvalidConfig(format!("unknown mechanism '{other}'"))),
        }
    }
}

/// A menu of `K` bundles, index-aligned with the type values.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractMenu<S> {
    pub mechanism: Mechanism,
    pub bundles: Vec<ContractBundle<S>>,
    /// Monopoly price `P_m`; only set for linear pricing.
    pub price_per_unit: Option<S>,
}

impl<S: Scalar> ContractMenu<S> {
    pub fn new(mechanism: Mechanism, bundles: Vec<ContractBundle<S>>) -> Self {
        ContractMenu { mechanism, bundles, price_per_unit: None }
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }

    pub fn payments(&self) -> impl Iterator<Item = S> + '_ {
        self.bundles.iter().map(|b| b.payment)
    }

    pub fn traffic(&self) -> impl Iterator<Item = S> + '_ {
        self.bundles.iter().map(|b| b.traffic)
    }

    pub fn check_len(&self, k: usize) -> Result<()> {
        if self.bundles.len() != k {
            return Err(Error::LengthMismatch { expected: k, got: self.bundles.len() });
        }
        Ok(())
    }
}

/// A complete problem instance.
///
/// Fields are private so that every instance in circulation satisfies the
/// ordering and probability invariants checked in [`EconomyConfig::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct EconomyConfig<S> {
    theta: Vec<S>,
    beta: Vec<S>,
    c: S,
    valuation: ValuationKind<S>,
}

impl<S: Scalar> EconomyConfig<S> {
    pub fn new(theta: Vec<S>, beta: Vec<S>, c: S, valuation: ValuationKind<S>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidConfig("at least one type is required".into()));
        }
        if beta.len() != theta.len() {
            return Err(Error::LengthMismatch { expected: theta.len(), got: beta.len() });
        }
        if let Some((k, t)) = theta.iter().enumerate().find(|(_, t)| !(**t > S::zero()) || !t.is_finite()) {
            return Err(Error::InvalidConfig(format!("theta_{} = {t} must be positive", k + 1)));
        }
        if let Some(k) = theta.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig(format!(
                "theta must be strictly increasing (theta_{} = {} >= theta_{} = {})",
                k + 1,
                theta[k],
                k + 2,
                theta[k + 1]
            )));
        }
        if let Some((k, b)) = beta.iter().enumerate().find(|(_, b)| !(**b > S::zero()) || !b.is_finite()) {
            return Err(Error::InvalidConfig(format!("beta_{} = {b} must be positive", k + 1)));
        }
        let total: f64 = beta.iter().map(|b| b.as_f64()).sum();
        if (total - 1.0).abs() > PROBABILITY_SUM_TOL.max(S::epsilon().as_f64() * beta.len() as f64) {
            return Err(Error::InvalidConfig(format!("beta must sum to 1 (sum = {total})")));
        }
        if !(c > S::zero()) || !c.is_finite() {
            return Err(Error::InvalidConfig(format!("unit payment cost c = {c} must be positive")));
        }
        valuation.validate()?;
        Ok(EconomyConfig { theta, beta, c, valuation })
    }

    /// Equiprobable types.
    pub fn uniform(theta: Vec<S>, c: S, valuation: ValuationKind<S>) -> Result<Self> {
        let k = S::from_usize(theta.len()).unwrap_or_else(S::one);
        let beta = vec![S::one() / k; theta.len()];
        Self::new(theta, beta, c, valuation)
    }

    /// `K` equiprobable types on the default grid `θ_k = 1 + (k − 1)/(2K)`.
    ///
    /// The grid keeps `μ_k θ_k > μ_{k+1} θ_{k+1}` for every `K` under
    /// uniform probabilities, which the unit grid `θ_k = k` does not.
    pub fn default_grid(k: usize, c: S, valuation: ValuationKind<S>) -> Result<Self> {
        Self::uniform(default_theta(k), c, valuation)
    }

    /// `K = 20`, uniform types, `c = 0.01`, square-root valuation.
    pub fn default_study() -> Self {
        Self::default_grid(20, S::lit(0.01), ValuationKind::SquareRoot).expect("default configuration is valid")
    }

    pub fn num_types(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[S] {
        &self.theta
    }

    pub fn beta(&self) -> &[S] {
        &self.beta
    }

    pub fn unit_cost(&self) -> S {
        self.c
    }

    pub fn valuation(&self) -> ValuationKind<S> {
        self.valuation
    }

    pub fn with_unit_cost(&self, c: S) -> Result<Self> {
        Self::new(self.theta.clone(), self.beta.clone(), c, self.valuation)
    }

    pub fn with_valuation(&self, valuation: ValuationKind<S>) -> Result<Self> {
        Self::new(self.theta.clone(), self.beta.clone(), self.c, valuation)
    }
}

/// `θ_k = 1 + (k − 1)/(2K)` for `k = 1..=K`.
pub fn default_theta<S: Scalar>(k: usize) -> Vec<S> {
    let denom = S::lit(2.0 * k as f64);
    (0..k).map(|i| S::one() + S::lit(i as f64) / denom).collect()
}

/// `V(k) = θ_k v(T_k) − q_k`.
pub fn ap_payoff<S: Scalar>(theta_k: S, bundle: &ContractBundle<S>, kind: ValuationKind<S>) -> Result<S> {
    Ok(theta_k * kind.value(bundle.payment)? - bundle.traffic)
}

/// `U(k) = q_k − c T_k`.
pub fn bs_payoff<S: Scalar>(bundle: &ContractBundle<S>, c: S) -> S {
    bundle.traffic - c * bundle.payment
}

/// Per-type surplus `θ_k v(T_k) − c T_k`; the traffic is an internal transfer.
pub fn type_welfare<S: Scalar>(theta_k: S, bundle: &ContractBundle<S>, c: S, kind: ValuationKind<S>) -> Result<S> {
    Ok(theta_k * kind.value(bundle.payment)? - c * bundle.payment)
}

/// Expected social welfare `Σ β_k (θ_k v(T_k) − c T_k)`.
pub fn social_welfare<S: Scalar>(menu: &ContractMenu<S>, config: &EconomyConfig<S>) -> Result<S> {
    menu.check_len(config.num_types())?;
    let mut total = S::zero();
    for ((b, &theta), &beta) in menu.bundles.iter().zip(config.theta()).zip(config.beta()) {
        total = total + beta * type_welfare(theta, b, config.unit_cost(), config.valuation())?;
    }
    Ok(total)
}

/// `Σ β_k U(k)`.
pub fn expected_bs_payoff<S: Scalar>(menu: &ContractMenu<S>, config: &EconomyConfig<S>) -> Result<S> {
    menu.check_len(config.num_types())?;
    Ok(menu.bundles.iter().zip(config.beta()).map(|(b, &beta)| beta * bs_payoff(b, config.unit_cost())).sum())
}

/// `Σ β_k V(k)`.
pub fn expected_ap_payoff<S: Scalar>(menu: &ContractMenu<S>, config: &EconomyConfig<S>) -> Result<S> {
    menu.check_len(config.num_types())?;
    let mut total = S::zero();
    for ((b, &theta), &beta) in menu.bundles.iter().zip(config.theta()).zip(config.beta()) {
        total = total + beta * ap_payoff(theta, b, config.valuation())?;
    }
    Ok(total)
}
