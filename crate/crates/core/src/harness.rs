//! Drives a strategy over an instance, records the trace, and reports the
//! makespan against the offline optimum.

use std::fmt;
use std::path::PathBuf;

use crate::agents::TiePolicy;
use crate::error::{Error, Result};
use crate::model::Instance;
use crate::opt::{opt_or_bound, OptMethod, OptResult, DEFAULT_BUDGET};
use crate::scalar::Scalar;
use crate::strategy::Strategy;
use crate::trace::{Trace, TraceStep};

/// Online makespan over the optimum. When only a lower bound on the optimum
/// is known, the quotient is an upper bound on the true ratio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ratio {
    Exact(Scalar),
    AtMost(Scalar),
}

impl Ratio {
    pub fn value(&self) -> &Scalar {
        match self {
            Ratio::Exact(r) | Ratio::AtMost(r) => r,
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Exact(r) => write!(f, "{r}"),
            Ratio::AtMost(r) => write!(f, "<={r}"),
        }
    }
}

/// `makespan / opt`, with `0/0` read as 1.
pub fn ratio_of(makespan: &Scalar, opt: &Scalar) -> Scalar {
    if opt.is_zero() {
        if makespan.is_zero() { Scalar::one() } else { Scalar::Infinity }
    } else {
        makespan / opt
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub scheme: String,
    pub instance: String,
    pub ties: String,
    pub makespan: Scalar,
    pub opt: OptResult,
    pub ratio: Ratio,
    pub phases: usize,
    pub trace_path: Option<PathBuf>,
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt_label = match self.opt.method {
            OptMethod::BruteForce => "opt",
            OptMethod::BoundOnly => "opt_lower_bound",
        };
        writeln!(f, "scheme: {}", self.scheme)?;
        writeln!(f, "instance: {}", self.instance)?;
        writeln!(f, "ties: {}", self.ties)?;
        writeln!(f, "makespan: {}", self.makespan)?;
        writeln!(f, "{opt_label}: {}", self.opt.makespan)?;
        writeln!(f, "ratio: {}", self.ratio)?;
        write!(f, "phases: {}", self.phases)?;
        if let Some(p) = &self.trace_path {
            write!(f, "\ntrace: {}", p.display())?;
        }
        Ok(())
    }
}

/// Runs `strategy` on every job of `inst` and returns the trace. Fails if the
/// strategy does not support the model or if its loads stop matching its
/// assignment.
pub fn simulate(strategy: &mut dyn Strategy, inst: &Instance, ties: &mut TiePolicy) -> Result<Trace> {
    let kind = inst.model.kind();
    if !strategy.supports(kind) {
        return Err(Error::Unsupported { scheme: strategy.name(), model: kind.to_string() });
    }
    let mut trace = Trace::new(kind);
    for (j, profile) in inst.jobs.iter().enumerate() {
        let d = strategy.step(&inst.model, j, profile, ties)?;
        trace.steps.push(TraceStep {
            step: j + 1,
            job: j,
            prices: d.prices.map(|p| p.0),
            costs: d.costs.map(|c| c.0),
            chosen: d.machine,
            new_phase: d.new_phase,
            lambda: strategy.lambda(),
            loads_after: strategy.state().loads.clone(),
            virtual_after: strategy.virtual_loads(),
        });
    }
    let state = strategy.state();
    if state.recomputed_loads(inst) != state.loads {
        return Err(Error::Protocol(format!("{}: loads disagree with the assignment", strategy.name())));
    }
    Ok(trace)
}

/// [`simulate`] plus the optimum (exact within the default budget, otherwise
/// a lower bound) and the resulting ratio.
pub fn run(
    strategy: &mut dyn Strategy,
    inst: &Instance,
    instance_id: &str,
    ties: &mut TiePolicy,
) -> Result<(RunReport, Trace)> {
    let ties_label = format!("{ties:?}");
    let trace = simulate(strategy, inst, ties)?;
    let opt = opt_or_bound(inst, DEFAULT_BUDGET);
    let makespan = strategy.state().makespan();
    let r = ratio_of(&makespan, &opt.makespan);
    let ratio = match opt.method {
        OptMethod::BruteForce => Ratio::Exact(r),
        OptMethod::BoundOnly => Ratio::AtMost(r),
    };
    let report = RunReport {
        scheme: strategy.name(),
        instance: instance_id.to_string(),
        ties: ties_label,
        makespan,
        opt,
        ratio,
        phases: trace.phase_count(),
        trace_path: None,
    };
    Ok((report, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{JobProfile, MachineModel};
    use crate::strategy::{strategy_registry, StrategyParams};

    fn build(spec: &str, inst: &Instance) -> Box<dyn Strategy> {
        let params = StrategyParams { m: inst.m(), epsilon: inst.epsilon.clone(), seed: 1 };
        strategy_registry().build(spec, &params).unwrap()
    }

    #[test]
    fn empty_instance_has_zero_makespan() {
        let inst = Instance::new(MachineModel::identical(3), vec![], Scalar::ratio(1, 10)).unwrap();
        for spec in ["greedy", "flexfit", "slowfit", "zero", "dynrel"] {
            let (report, trace) = run(build(spec, &inst).as_mut(), &inst, "empty", &mut TiePolicy::LowestIndex).unwrap();
            assert_eq!(report.makespan, Scalar::zero());
            assert_eq!(report.ratio, Ratio::Exact(Scalar::one()));
            assert!(trace.steps.is_empty());
        }
    }

    #[test]
    fn unsupported_model_is_rejected() {
        let inst = Instance::new(
            MachineModel::Unrelated { m: 2 },
            vec![JobProfile::Times(vec![Scalar::one(), Scalar::one()])],
            Scalar::ratio(1, 10),
        )
        .unwrap();
        let err = simulate(build("flexfit", &inst).as_mut(), &inst, &mut TiePolicy::LowestIndex).unwrap_err();
        assert!(matches!(err, Error::Unsupported { .. }));
    }

    #[test]
    fn report_lists_fields() {
        let inst = Instance::new(
            MachineModel::identical(2),
            vec![JobProfile::Size(Scalar::one()), JobProfile::Size(Scalar::one()), JobProfile::Size(Scalar::from_int(2))],
            Scalar::ratio(1, 10),
        )
        .unwrap();
        let (report, _) = run(build("greedy", &inst).as_mut(), &inst, "x", &mut TiePolicy::LowestIndex).unwrap();
        assert_eq!(report.makespan, Scalar::from_int(3));
        assert_eq!(report.ratio, Ratio::Exact(Scalar::ratio(3, 2)));
        let text = report.to_string();
        assert!(text.contains("makespan: 3/1") && text.contains("opt: 2/1") && text.contains("ratio: 3/2"));
    }
}
