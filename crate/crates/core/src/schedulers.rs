//! Online schedulers that see each job before placing it: greedy, Flex-Fit
//! (with its New-Phase routine) and the Slow-Fit reference.

use crate::agents::{agent_choose, agent_costs, PriceVector, TiePolicy};
use crate::error::{Error, Result};
use crate::model::{processing_time, representative_of, JobProfile, LoadState, MachineModel, ModelKind};
use crate::scalar::Scalar;
use crate::strategy::{Decision, Strategy};

/// Phase bookkeeping: the current estimate and how it evolved.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhaseState {
    /// `None` until the first job with positive size arrives.
    pub lambda: Option<Scalar>,
    /// Number of phases started so far.
    pub phase_index: usize,
    /// `(phase_index, lambda, triggering job)` per phase.
    pub history: Vec<(usize, Scalar, usize)>,
}

impl PhaseState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_lambda(lambda: Scalar) -> Self {
        PhaseState { lambda: Some(lambda.clone()), phase_index: 1, history: vec![(1, lambda, 0)] }
    }

    pub fn start(&mut self, lambda: Scalar, job: usize) {
        self.phase_index += 1;
        self.history.push((self.phase_index, lambda.clone(), job));
        self.lambda = Some(lambda);
    }

    pub fn phases(&self) -> usize {
        self.phase_index
    }
}

/// The New-Phase update `max{2, 2^ceil(log2(p / (s_m lambda)))} * lambda`,
/// computed exactly.
pub fn next_lambda(lambda: &Scalar, p: &Scalar, fastest: &Scalar) -> Result<Scalar> {
    if !lambda.is_positive() || lambda.is_infinite() {
        return Err(Error::Protocol(format!("phase estimate {lambda} must be positive and finite")));
    }
    if p.is_infinite() {
        return Err(Error::Protocol("new phase triggered by an infinite job".into()));
    }
    let ratio = p.try_div(&fastest.try_mul(lambda)?)?;
    let exponent = ratio.ceil_log2().map_or(1, |e| e.max(1));
    Ok(&Scalar::pow2(exponent) * lambda)
}

/// Applies New-Phase for `profile` to `phase`, returning the new phase state.
/// The caller zeroes virtual loads.
pub fn new_phase(
    phase: &PhaseState,
    profile: &JobProfile,
    model: &MachineModel,
    job: usize,
) -> Result<PhaseState> {
    let lambda = phase
        .lambda
        .as_ref()
        .ok_or_else(|| Error::Protocol("new phase before the first estimate".into()))?;
    let p = speed_size(profile, model)?;
    let mut next = phase.clone();
    next.start(next_lambda(lambda, p, &model.fastest_speed())?, job);
    Ok(next)
}

fn speed_size<'a>(profile: &'a JobProfile, model: &MachineModel) -> Result<&'a Scalar> {
    match (model.has_speeds(), profile) {
        (true, JobProfile::Size(p)) => Ok(p),
        _ => Err(Error::Unsupported { scheme: "phase-based rule".into(), model: model.kind().to_string() }),
    }
}

/// The relaxed set `T`, the strict set `S`, and `k = min S` (`m - 1` when `S` is empty).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilitySets {
    pub t: Vec<usize>,
    pub s: Vec<usize>,
    pub k: usize,
}

impl FeasibilitySets {
    pub fn in_t(&self, i: usize) -> bool {
        self.t.contains(&i)
    }
}

/// `T = {i : v_i + p/s_i <= (2+eps) lambda}`, `S = {i : v_i + p/s_i <= 2 lambda}`.
pub fn compute_sets(
    virtual_loads: &[Scalar],
    lambda: &Scalar,
    epsilon: &Scalar,
    profile: &JobProfile,
    model: &MachineModel,
) -> FeasibilitySets {
    let two = Scalar::from_int(2);
    let strict = &two * lambda;
    let relaxed = &(&two + epsilon) * lambda;
    let mut t = Vec::new();
    let mut s = Vec::new();
    for i in 0..model.m() {
        let reach = &virtual_loads[i] + &processing_time(model, profile, i);
        if reach <= relaxed {
            t.push(i);
        }
        if reach <= strict {
            s.push(i);
        }
    }
    let k = s.first().copied().unwrap_or(model.m() - 1);
    FeasibilitySets { t, s, k }
}

/// What Flex-Fit did with a job.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlexFitAction {
    /// Placed before any estimate existed (on a fastest machine).
    Initial(usize),
    AssignTo(usize),
    NewPhaseAssignFastest(usize),
}

impl FlexFitAction {
    pub fn machine(self) -> usize {
        match self {
            FlexFitAction::Initial(i)
            | FlexFitAction::AssignTo(i)
            | FlexFitAction::NewPhaseAssignFastest(i) => i,
        }
    }
}

/// Options for [`flexfit_step`].
#[derive(Debug, Clone)]
pub struct FlexFitOptions {
    pub epsilon: Scalar,
    /// Take the optional New-Phase when `T` is nonempty but `S` is empty.
    pub eager_phase: bool,
}

/// One Flex-Fit arrival. Updates `state` (real and virtual loads) and `phase`.
pub fn flexfit_step(
    state: &mut LoadState,
    phase: &mut PhaseState,
    job: usize,
    profile: &JobProfile,
    model: &MachineModel,
    options: &FlexFitOptions,
) -> Result<FlexFitAction> {
    let p = speed_size(profile, model)?.clone();
    let m = model.m();
    let fastest = representative_of(&state.virtual_loads, model, m - 1);

    let Some(lambda) = phase.lambda.clone() else {
        state.apply_assignment(job, fastest, &processing_time(model, profile, fastest), false)?;
        if p.is_positive() {
            phase.start(&p / &model.fastest_speed(), job);
        }
        return Ok(FlexFitAction::Initial(fastest));
    };

    let sets = compute_sets(&state.virtual_loads, &lambda, &options.epsilon, profile, model);
    let restart = sets.t.is_empty() || (sets.s.is_empty() && options.eager_phase);
    if restart {
        state.apply_assignment(job, fastest, &processing_time(model, profile, fastest), false)?;
        phase.start(next_lambda(&lambda, &p, &model.fastest_speed())?, job);
        state.reset_virtual();
        return Ok(FlexFitAction::NewPhaseAssignFastest(fastest));
    }

    // Slowest permissible machine of T with speed at most s_k, lowest index first.
    let cap = model.speed(sets.k);
    let target = sets
        .t
        .iter()
        .copied()
        .filter(|&i| model.speed(i) <= cap)
        .min_by(|&a, &b| model.speed(a).cmp(&model.speed(b)).then(a.cmp(&b)))
        .expect("T is nonempty and holds a machine no faster than s_k");
    let rep = representative_of(&state.virtual_loads, model, target);
    let time = processing_time(model, profile, rep);
    state.apply_assignment(job, rep, &time, true)?;
    Ok(FlexFitAction::AssignTo(rep))
}

/// Greedy list scheduling: minimize current load plus processing time.
#[derive(Debug, Clone)]
pub struct Greedy {
    state: LoadState,
}

impl Greedy {
    pub fn new(m: usize) -> Self {
        Greedy { state: LoadState::new(m) }
    }
}

/// The greedy choice, identical to an agent facing all-zero prices.
pub fn greedy_step(
    state: &LoadState,
    profile: &JobProfile,
    model: &MachineModel,
    policy: &mut TiePolicy,
) -> Result<usize> {
    let costs = agent_costs(state, &PriceVector::zeros(model.m()), profile, model);
    agent_choose(&costs, policy)
}

impl Strategy for Greedy {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn supports(&self, _kind: ModelKind) -> bool {
        true
    }

    fn step(
        &mut self,
        model: &MachineModel,
        job: usize,
        profile: &JobProfile,
        ties: &mut TiePolicy,
    ) -> Result<Decision> {
        let costs = agent_costs(&self.state, &PriceVector::zeros(model.m()), profile, model);
        let machine = agent_choose(&costs, ties)?;
        self.state
            .apply_assignment(job, machine, &processing_time(model, profile, machine), false)?;
        Ok(Decision { machine, prices: None, costs: Some(costs), new_phase: false })
    }

    fn state(&self) -> &LoadState {
        &self.state
    }
}

/// Flex-Fit as a runnable strategy.
#[derive(Debug, Clone)]
pub struct FlexFit {
    options: FlexFitOptions,
    state: LoadState,
    phase: PhaseState,
    actions: Vec<FlexFitAction>,
}

impl FlexFit {
    pub fn new(m: usize, epsilon: Scalar, eager_phase: bool) -> Self {
        FlexFit {
            options: FlexFitOptions { epsilon, eager_phase },
            state: LoadState::new(m),
            phase: PhaseState::new(),
            actions: Vec::new(),
        }
    }

    pub fn phase(&self) -> &PhaseState {
        &self.phase
    }

    pub fn actions(&self) -> &[FlexFitAction] {
        &self.actions
    }
}

impl Strategy for FlexFit {
    fn name(&self) -> String {
        if self.options.eager_phase { "flexfit-eager" } else { "flexfit" }.into()
    }

    fn supports(&self, kind: ModelKind) -> bool {
        matches!(kind, ModelKind::Identical | ModelKind::Related)
    }

    fn step(
        &mut self,
        model: &MachineModel,
        job: usize,
        profile: &JobProfile,
        _ties: &mut TiePolicy,
    ) -> Result<Decision> {
        let before = self.phase.phases();
        let action = flexfit_step(&mut self.state, &mut self.phase, job, profile, model, &self.options)?;
        self.actions.push(action);
        Ok(Decision {
            machine: action.machine(),
            prices: None,
            costs: None,
            new_phase: self.phase.phases() != before,
        })
    }

    fn state(&self) -> &LoadState {
        &self.state
    }

    fn lambda(&self) -> Option<Scalar> {
        self.phase.lambda.clone()
    }

    fn virtual_loads(&self) -> Option<Vec<Scalar>> {
        Some(self.state.virtual_loads.clone())
    }
}

/// Slow-Fit: the slowest machine with `l_i + p/s_i <= 2 lambda`, doubling
/// `lambda` until one exists.
#[derive(Debug, Clone)]
pub struct SlowFit {
    state: LoadState,
    lambda: Option<Scalar>,
}

impl SlowFit {
    pub fn new(m: usize) -> Self {
        SlowFit { state: LoadState::new(m), lambda: None }
    }
}

/// One Slow-Fit arrival; returns the machine and whether the estimate moved.
pub fn slowfit_step(
    state: &mut LoadState,
    lambda: &mut Option<Scalar>,
    job: usize,
    profile: &JobProfile,
    model: &MachineModel,
) -> Result<(usize, bool)> {
    let p = speed_size(profile, model)?;
    let mut moved = false;
    if lambda.is_none() && p.is_positive() {
        *lambda = Some(p / &model.fastest_speed());
        moved = true;
    }
    let bound = lambda.clone().unwrap_or_default();
    let two = Scalar::from_int(2);
    let mut doubled = bound;
    loop {
        let limit = &two * &doubled;
        let feasible = (0..model.m())
            .find(|&i| &state.loads[i] + &processing_time(model, profile, i) <= limit);
        if let Some(i) = feasible {
            state.apply_assignment(job, i, &processing_time(model, profile, i), false)?;
            if lambda.as_ref() != Some(&doubled) && lambda.is_some() {
                *lambda = Some(doubled);
                moved = true;
            }
            return Ok((i, moved));
        }
        doubled = &two * &doubled;
    }
}

impl Strategy for SlowFit {
    fn name(&self) -> String {
        "slowfit".into()
    }

    fn supports(&self, kind: ModelKind) -> bool {
        matches!(kind, ModelKind::Identical | ModelKind::Related)
    }

    fn step(
        &mut self,
        model: &MachineModel,
        job: usize,
        profile: &JobProfile,
        _ties: &mut TiePolicy,
    ) -> Result<Decision> {
        let (machine, new_phase) = slowfit_step(&mut self.state, &mut self.lambda, job, profile, model)?;
        Ok(Decision { machine, prices: None, costs: None, new_phase })
    }

    fn state(&self) -> &LoadState {
        &self.state
    }

    fn lambda(&self) -> Option<Scalar> {
        self.lambda.clone()
    }
}
