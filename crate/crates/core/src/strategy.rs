//! The common interface behind every online rule, and a name-keyed registry.
//!
//! A [`Strategy`] consumes one job at a time and reports which machine took
//! it. Schedulers (greedy, Flex-Fit, Slow-Fit) see the job before deciding;
//! pricing schemes are wrapped in a [`Market`](crate::pricing::Market) that
//! posts prices first and lets the agent decide.

use std::collections::BTreeMap;
use std::fs;
use std::sync::Arc;

use crate::agents::{CostVector, PriceVector, TiePolicy};
use crate::error::{Error, Result};
use crate::model::{JobProfile, LoadState, MachineModel, ModelKind};
use crate::pricing::{DynamicRelated, Market, PricingScheme, RandomStaticPrices, StaticPrices};
use crate::scalar::Scalar;
use crate::schedulers::{FlexFit, Greedy, SlowFit};

/// Outcome of one arrival.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub machine: usize,
    pub prices: Option<PriceVector>,
    pub costs: Option<CostVector>,
    /// A phase began (or the first estimate was fixed) on this arrival.
    pub new_phase: bool,
}

pub trait Strategy: Send {
    fn name(&self) -> String;

    fn supports(&self, kind: ModelKind) -> bool;

    fn step(
        &mut self,
        model: &MachineModel,
        job: usize,
        profile: &JobProfile,
        ties: &mut TiePolicy,
    ) -> Result<Decision>;

    /// Real loads and the assignment map after the last step.
    fn state(&self) -> &LoadState;

    /// Current phase estimate, for phase-based rules.
    fn lambda(&self) -> Option<Scalar> {
        None
    }

    /// Current virtual loads, for phase-based rules.
    fn virtual_loads(&self) -> Option<Vec<Scalar>> {
        None
    }
}

/// Construction parameters shared by every factory.
#[derive(Debug, Clone)]
pub struct StrategyParams {
    pub m: usize,
    pub epsilon: Scalar,
    pub seed: u64,
}

pub type Factory<T> = Arc<dyn Fn(Option<&str>, &StrategyParams) -> Result<Box<T>> + Send + Sync>;

/// Factories keyed by name. A spec string `name:arg` passes `arg` to the factory.
pub struct Registry<T: ?Sized> {
    entries: BTreeMap<String, (String, Factory<T>)>,
}

impl<T: ?Sized> Default for Registry<T> {
    fn default() -> Self {
        Registry { entries: BTreeMap::new() }
    }
}

impl<T: ?Sized> Clone for Registry<T> {
    fn clone(&self) -> Self {
        Registry { entries: self.entries.clone() }
    }
}

impl<T: ?Sized> Registry<T> {
    pub fn register<F>(&mut self, name: &str, help: &str, factory: F)
    where
        F: Fn(Option<&str>, &StrategyParams) -> Result<Box<T>> + Send + Sync + 'static,
    {
        self.entries
            .insert(name.to_string(), (help.to_string(), Arc::new(factory)));
    }

    pub fn build(&self, spec: &str, params: &StrategyParams) -> Result<Box<T>> {
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (spec, None),
        };
        let (_, factory) = self
            .entries
            .get(name)
            .ok_or_else(|| Error::UnknownStrategy(spec.to_string()))?;
        factory(arg, params)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    /// `(name, help)` pairs in name order.
    pub fn describe(&self) -> Vec<(&str, &str)> {
        self.entries
            .iter()
            .map(|(k, (h, _))| (k.as_str(), h.as_str()))
            .collect()
    }
}

fn require_arg<'a>(name: &str, arg: Option<&'a str>) -> Result<&'a str> {
    arg.filter(|a| !a.is_empty())
        .ok_or_else(|| Error::Parse(format!("{name} needs an argument ({name}:<value>)")))
}

/// Reads a static price file: a JSON array of `"num/den"` or `"inf"` strings.
pub fn read_price_file(path: &str) -> Result<PriceVector> {
    let text = fs::read_to_string(path)?;
    let prices: Vec<Scalar> = serde_json::from_str(&text)?;
    Ok(PriceVector(prices))
}

/// Pricing schemes available to markets and adversaries.
pub fn scheme_registry() -> Registry<dyn PricingScheme> {
    let mut r: Registry<dyn PricingScheme> = Registry::default();
    r.register("zero", "static all-zero prices (mimics greedy)", |_, p| {
        Ok(Box::new(StaticPrices::zero(p.m)))
    });
    r.register("static", "static prices from a JSON file: static:<file>", |arg, p| {
        let prices = read_price_file(require_arg("static", arg)?)?;
        if prices.len() != p.m {
            return Err(Error::Parse(format!(
                "price file has {} entries for {} machines",
                prices.len(),
                p.m
            )));
        }
        Ok(Box::new(StaticPrices::new(prices)))
    });
    r.register(
        "randstatic",
        "random static prices drawn from the seed: randstatic[:<max>]",
        |arg, p| {
            let max = match arg {
                Some(a) => a.parse()?,
                None => Scalar::one(),
            };
            Ok(Box::new(RandomStaticPrices::new(p.m, &max, p.seed)))
        },
    );
    r.register("dynrel", "Dynamic-Related dynamic pricing (related machines)", |_, p| {
        Ok(Box::new(DynamicRelated::new(p.epsilon.clone())))
    });
    r.register(
        "dynrel-known",
        "Dynamic-Related with a preset estimate and threshold 2+eps/2: dynrel-known:<lambda>",
        |arg, p| {
            let lambda: Scalar = require_arg("dynrel-known", arg)?.parse()?;
            let half = &p.epsilon / &Scalar::from_int(2);
            Ok(Box::new(DynamicRelated::with_known_lambda(lambda, half)))
        },
    );
    r
}

/// Every runnable strategy: the schedulers plus each pricing scheme behind a market.
pub fn strategy_registry() -> Registry<dyn Strategy> {
    let mut r: Registry<dyn Strategy> = Registry::default();
    r.register("greedy", "assign to the machine minimizing load plus processing time", |_, p| {
        Ok(Box::new(Greedy::new(p.m)))
    });
    r.register("flexfit", "Flex-Fit, new phase only when T is empty", |_, p| {
        Ok(Box::new(FlexFit::new(p.m, p.epsilon.clone(), false)))
    });
    r.register(
        "flexfit-eager",
        "Flex-Fit, restarting a phase whenever S is empty",
        |_, p| Ok(Box::new(FlexFit::new(p.m, p.epsilon.clone(), true))),
    );
    r.register("slowfit", "Slow-Fit reference (doubling estimate)", |_, p| {
        Ok(Box::new(SlowFit::new(p.m)))
    });
    let schemes = scheme_registry();
    for (name, help) in schemes.describe() {
        let schemes = schemes.clone();
        let owned = name.to_string();
        r.register(name, help, move |arg, p| {
            let spec = match arg {
                Some(a) => format!("{owned}:{a}"),
                None => owned.clone(),
            };
            let scheme = schemes.build(&spec, p)?;
            Ok(Box::new(Market::new(scheme, p.m)))
        });
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> StrategyParams {
        StrategyParams { m: 3, epsilon: Scalar::ratio(1, 10), seed: 1 }
    }

    #[test]
    fn registry_lookup() {
        let reg = strategy_registry();
        for name in ["greedy", "flexfit", "flexfit-eager", "slowfit", "zero", "dynrel", "randstatic"] {
            let s = reg.build(name, &params()).unwrap();
            assert!(!s.name().is_empty());
        }
        assert!(reg.build("dynrel-known:1", &params()).is_ok());
        assert!(matches!(reg.build("nope", &params()), Err(Error::UnknownStrategy(_))));
        assert!(reg.build("static", &params()).is_err());
        assert!(reg.build("dynrel-known", &params()).is_err());
    }

    #[test]
    fn static_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        fs::write(&path, r#"["3/1", "1", "inf"]"#).unwrap();
        let spec = format!("static:{}", path.display());
        assert!(strategy_registry().build(&spec, &params()).is_ok());
        let mut short = params();
        short.m = 2;
        assert!(strategy_registry().build(&spec, &short).is_err());
    }

    #[test]
    fn model_support() {
        let reg = strategy_registry();
        let dr = reg.build("dynrel", &params()).unwrap();
        assert!(dr.supports(ModelKind::Related));
        assert!(!dr.supports(ModelKind::Unrelated));
        let z = reg.build("zero", &params()).unwrap();
        assert!(ModelKind::ALL.iter().all(|&k| z.supports(k)));
    }
}
