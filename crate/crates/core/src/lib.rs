//! Contract menus that incentivize access points (APs) to offload traffic for
//! a base station (BS) when each AP's idle capacity is private information.
//!
//! The numerical core ([`economy`], [`solvers`], [`verifier`], [`oracle`]) is
//! generic over [`Scalar`] (`f32` or `f64`); the [`harness`] and CLI run on
//! `f64` through the aliases below.

// `!(x > y)` is used on purpose so that NaN fails the test
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod economy;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod root;
pub mod scalar;
pub mod solvers;
pub mod verifier;

pub use economy::{ContractBundle, ContractMenu, EconomyConfig, Mechanism, ValuationKind};
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type EconomyConfigF64 = EconomyConfig<f64>;
pub type EconomyConfigF32 = EconomyConfig<f32>;
pub type ContractBundleF64 = ContractBundle<f64>;
pub type ContractMenuF64 = ContractMenu<f64>;
pub type ContractMenuF32 = ContractMenu<f32>;
pub type ValuationF64 = ValuationKind<f64>;
pub type FeasibilityReportF64 = verifier::FeasibilityReport<f64>;
pub type PayoffTableF64 = verifier::PayoffTable<f64>;
