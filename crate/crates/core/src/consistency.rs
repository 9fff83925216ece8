//! Replays a trace from a related-machines run and checks that every choice is
//! one Flex-Fit could have made in the same state.
//!
//! The checker keeps its own real loads, virtual loads and estimate, rebuilds
//! `T`, `S` and `k` before each arrival, classifies the recorded choice, and
//! then confirms the recorded post-state (loads, estimate, virtual loads).
//! After a violation the replay resynchronizes from the trace so later steps
//! are still judged on their own.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Instance, JobProfile, MachineModel};
use crate::scalar::Scalar;
use crate::schedulers::{compute_sets, next_lambda};
use crate::trace::{Trace, TraceStep};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Placed on a fastest machine before any estimate existed.
    OkInitial,
    OkTEmpty,
    OkSEmptyPhase,
    OkSEmptyInT,
    OkSNonEmpty,
    Violation(String),
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        !matches!(self, Verdict::Violation(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::OkInitial => "OK-initial",
            Verdict::OkTEmpty => "OK-T-empty",
            Verdict::OkSEmptyPhase => "OK-S-empty-phase",
            Verdict::OkSEmptyInT => "OK-S-empty-inT",
            Verdict::OkSNonEmpty => "OK-S-nonempty",
            Verdict::Violation(_) => "VIOLATION",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Violation(d) => write!(f, "VIOLATION: {d}"),
            v => f.write_str(v.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepVerdict {
    pub step: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConsistencyReport {
    pub steps: Vec<StepVerdict>,
}

impl ConsistencyReport {
    pub fn is_ok(&self) -> bool {
        self.steps.iter().all(|s| s.verdict.is_ok())
    }

    pub fn violations(&self) -> impl Iterator<Item = &StepVerdict> {
        self.steps.iter().filter(|s| !s.verdict.is_ok())
    }

    pub fn count(&self, label: &str) -> usize {
        self.steps.iter().filter(|s| s.verdict.label() == label).count()
    }

    /// One line with per-verdict counts, e.g. `steps=3 OK-initial=1 OK-S-nonempty=2 VIOLATION=0`.
    pub fn summary(&self) -> String {
        let labels = [
            "OK-initial",
            "OK-T-empty",
            "OK-S-empty-phase",
            "OK-S-empty-inT",
            "OK-S-nonempty",
            "VIOLATION",
        ];
        let mut out = format!("steps={}", self.steps.len());
        for l in labels {
            out.push_str(&format!(" {l}={}", self.count(l)));
        }
        out
    }
}

/// Settings for [`check_flexfit_consistency_with`].
#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Relaxation used for `T`; the instance's epsilon by default.
    pub epsilon: Scalar,
    /// Estimate in force before the first arrival (known-estimate runs).
    pub initial_lambda: Option<Scalar>,
}

impl CheckOptions {
    pub fn for_instance(inst: &Instance) -> Self {
        CheckOptions { epsilon: inst.epsilon.clone(), initial_lambda: None }
    }
}

/// Checks `trace` against `inst` with the instance's epsilon and no preset estimate.
pub fn check_flexfit_consistency(trace: &Trace, inst: &Instance) -> Result<ConsistencyReport> {
    check_flexfit_consistency_with(trace, inst, &CheckOptions::for_instance(inst))
}

struct Replay {
    loads: Vec<Scalar>,
    virt: Vec<Scalar>,
    lambda: Option<Scalar>,
}

fn fmt_vec(v: &[Scalar]) -> String {
    crate::scalar::join(v)
}

pub fn check_flexfit_consistency_with(
    trace: &Trace,
    inst: &Instance,
    opts: &CheckOptions,
) -> Result<ConsistencyReport> {
    let model = &inst.model;
    if !model.has_speeds() {
        return Err(Error::TraceMismatch(format!("{} model has no speeds to check against", model.kind())));
    }
    if let Some(kind) = trace.model {
        if kind != model.kind() {
            return Err(Error::TraceMismatch(format!("trace is for {kind}, instance is {}", model.kind())));
        }
    }
    if trace.steps.len() != inst.n() {
        return Err(Error::TraceMismatch(format!(
            "trace has {} steps, instance has {} jobs",
            trace.steps.len(),
            inst.n()
        )));
    }
    let m = model.m();
    let mut replay = Replay {
        loads: vec![Scalar::zero(); m],
        virt: vec![Scalar::zero(); m],
        lambda: opts.initial_lambda.clone(),
    };
    let mut report = ConsistencyReport::default();
    for (idx, step) in trace.steps.iter().enumerate() {
        if step.step != idx + 1 || step.job != idx {
            return Err(Error::TraceMismatch(format!("row {} is out of order", idx + 1)));
        }
        if step.chosen >= m || step.loads_after.len() != m {
            return Err(Error::TraceMismatch(format!("row {} does not fit {m} machines", idx + 1)));
        }
        let p = match &inst.jobs[idx] {
            JobProfile::Size(p) => p.clone(),
            _ => return Err(Error::TraceMismatch(format!("job {} has no plain size", idx + 1))),
        };
        let verdict = judge(&mut replay, step, &p, model, &opts.epsilon);
        report.steps.push(StepVerdict { step: step.step, verdict });
    }
    Ok(report)
}

fn judge(replay: &mut Replay, step: &TraceStep, p: &Scalar, model: &MachineModel, eps: &Scalar) -> Verdict {
    let q = step.chosen;
    let s_q = model.speed(q);
    let fastest = model.fastest_speed();
    let time = p / &s_q;
    let state = || {
        format!(
            "step {} job size {p} chosen m{} loads [{}] virtual [{}] lambda {}",
            step.step,
            q + 1,
            fmt_vec(&replay.loads),
            fmt_vec(&replay.virt),
            replay.lambda.as_ref().map_or("none".to_string(), Scalar::to_string)
        )
    };

    let mut problems = Vec::new();
    if let Some(d) = market_problem(step, replay, model, p) {
        problems.push(d);
    }

    // Classify the choice and derive the state Flex-Fit would be in afterwards.
    let (verdict, next_lambda_value, restart, count_virtual) = match replay.lambda.clone() {
        None => {
            if s_q != fastest {
                problems.push("first placement is not on a fastest machine".into());
            }
            let fixed = p.is_positive().then(|| p / &fastest);
            (Verdict::OkInitial, fixed.clone(), false, false)
        }
        Some(lambda) => {
            let profile = JobProfile::Size(p.clone());
            let sets = compute_sets(&replay.virt, &lambda, eps, &profile, model);
            let reach = &replay.virt[q] + &time;
            let is_rep = (0..model.m())
                .filter(|&k| model.speed(k) == s_q)
                .all(|k| replay.virt[q] <= replay.virt[k]);
            let phase_lambda = next_lambda(&lambda, p, &fastest).ok();
            if sets.t.is_empty() {
                if s_q != fastest {
                    problems.push("T is empty but the job did not go to a fastest machine".into());
                }
                if !step.new_phase {
                    problems.push("T is empty but no phase began".into());
                }
                (Verdict::OkTEmpty, phase_lambda, true, false)
            } else if sets.s.is_empty() {
                if step.new_phase {
                    if s_q != fastest {
                        problems.push("phase restart on a machine slower than s_m".into());
                    }
                    (Verdict::OkSEmptyPhase, phase_lambda, true, false)
                } else {
                    if !sets.in_t(q) {
                        problems.push(format!("S is empty and m{} is outside T", q + 1));
                    }
                    if !is_rep {
                        problems.push(format!("m{} is not a representative of its speed", q + 1));
                    }
                    (Verdict::OkSEmptyInT, Some(lambda), false, true)
                }
            } else {
                let cap = model.speed(sets.k);
                if !sets.in_t(q) {
                    problems.push(format!("m{} is outside T ({} > (2+eps) lambda)", q + 1, reach));
                }
                if s_q > cap {
                    problems.push(format!("m{} is faster than k = m{}", q + 1, sets.k + 1));
                }
                if !is_rep {
                    problems.push(format!("m{} is not a representative of its speed", q + 1));
                }
                (Verdict::OkSNonEmpty, Some(lambda), false, true)
            }
        }
    };

    // Expected post-state.
    let mut loads = replay.loads.clone();
    loads[q] += &time;
    let mut virt = replay.virt.clone();
    if restart {
        virt.iter_mut().for_each(|v| *v = Scalar::zero());
    } else if count_virtual {
        virt[q] += &time;
    }
    let began = restart || (replay.lambda.is_none() && next_lambda_value.is_some());
    if step.new_phase != began && verdict != Verdict::OkTEmpty && verdict != Verdict::OkSEmptyPhase {
        problems.push(format!("new_phase flag is {} but expected {}", u8::from(step.new_phase), u8::from(began)));
    }
    if step.loads_after != loads {
        problems.push(format!("loads after are [{}], expected [{}]", fmt_vec(&step.loads_after), fmt_vec(&loads)));
    }
    if step.lambda.is_some() && step.lambda != next_lambda_value {
        problems.push(format!(
            "estimate after is {}, expected {}",
            step.lambda.as_ref().map_or("none".into(), Scalar::to_string),
            next_lambda_value.as_ref().map_or("none".into(), Scalar::to_string)
        ));
    }
    if let Some(va) = &step.virtual_after {
        if *va != virt {
            problems.push(format!("virtual loads after are [{}], expected [{}]", fmt_vec(va), fmt_vec(&virt)));
        }
    }

    let verdict = if problems.is_empty() {
        verdict
    } else {
        Verdict::Violation(format!("{}; {}", problems.join("; "), state()))
    };

    // Advance, trusting the trace where it carries the state.
    replay.loads = step.loads_after.clone();
    replay.virt = step.virtual_after.clone().unwrap_or(virt);
    replay.lambda = match (&step.lambda, next_lambda_value) {
        (Some(l), _) => Some(l.clone()),
        (None, l) => l,
    };
    verdict
}

/// For market traces: prices and costs agree with the pre-state and the choice
/// minimizes cost.
fn market_problem(step: &TraceStep, replay: &Replay, model: &MachineModel, p: &Scalar) -> Option<String> {
    let prices = step.prices.as_ref()?;
    if prices.len() != model.m() {
        return Some("price vector has the wrong length".into());
    }
    if prices[step.chosen].is_infinite() {
        return Some(format!("m{} was chosen at an infinite price", step.chosen + 1));
    }
    let costs: Vec<Scalar> = (0..model.m())
        .map(|i| &(&replay.loads[i] + &(p / &model.speed(i))) + &prices[i])
        .collect();
    if let Some(recorded) = &step.costs {
        if *recorded != costs {
            return Some(format!("recorded costs [{}] differ from [{}]", fmt_vec(recorded), fmt_vec(&costs)));
        }
    }
    let best = costs.iter().min().expect("m >= 1");
    if &costs[step.chosen] != best {
        return Some(format!("m{} does not minimize the agent's cost", step.chosen + 1));
    }
    None
}
