//! Online makespan minimization with selfish agents and posted prices.
//!
//! The crate provides exact-rational machine models ([`model`]), agents that
//! pick the cheapest machine under posted prices ([`agents`]), online
//! schedulers including Flex-Fit ([`schedulers`]), the Dynamic-Related
//! pricing scheme ([`pricing`]), lower-bound adversaries ([`adversaries`]),
//! an exact offline optimum ([`opt`]) and the experiment harness
//! ([`harness`]). Every online rule implements [`strategy::Strategy`] and is
//! constructed by name through [`strategy::strategy_registry`].

pub mod adversaries;
pub mod agents;
pub mod consistency;
pub mod error;
pub mod experiments;
pub mod generators;
pub mod harness;
pub mod io;
pub mod model;
pub mod opt;
pub mod pricing;
pub mod scalar;
pub mod schedulers;
pub mod strategy;
pub mod trace;

pub use error::{Error, Result};
pub use scalar::Scalar;
