//! Posted-price schemes: Dynamic-Related for related machines, static price
//! vectors, and the [`Market`] that runs a scheme against selfish agents.
//!
//! A scheme only ever sees its own state when posting prices; the arriving
//! job is revealed to it afterwards, through the load increase on the chosen
//! machine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::{agent_choose, agent_costs, PriceVector, TiePolicy};
use crate::error::{Error, Result};
use crate::model::{processing_time, representative_of, JobProfile, LoadState, MachineModel, ModelKind};
use crate::scalar::Scalar;
use crate::schedulers::{next_lambda, PhaseState};
use crate::strategy::{Decision, Strategy};

pub trait PricingScheme: Send {
    fn name(&self) -> String;

    fn supports(&self, kind: ModelKind) -> bool;

    /// Prices for the next arrival. Takes no job argument.
    fn post_prices(&mut self, model: &MachineModel) -> Result<PriceVector>;

    /// Reports that the agent for job `job` chose `chosen`, raising its load by
    /// `load_increase`. Returns whether a phase began.
    fn observe_choice(
        &mut self,
        model: &MachineModel,
        job: usize,
        chosen: usize,
        load_increase: &Scalar,
    ) -> Result<bool>;

    /// The scheme's own view of real loads, if it keeps one.
    fn observed_loads(&self) -> Option<&[Scalar]> {
        None
    }

    fn lambda(&self) -> Option<Scalar> {
        None
    }

    fn virtual_loads(&self) -> Option<Vec<Scalar>> {
        None
    }
}

/// A single price vector fixed before any arrival.
#[derive(Debug, Clone)]
pub struct StaticPrices {
    prices: PriceVector,
}

impl StaticPrices {
    pub fn new(prices: PriceVector) -> Self {
        StaticPrices { prices }
    }

    pub fn zero(m: usize) -> Self {
        StaticPrices::new(PriceVector::zeros(m))
    }

    pub fn prices(&self) -> &PriceVector {
        &self.prices
    }
}

/// Returns the constant scheme for `prices`.
pub fn static_prices(prices: PriceVector) -> StaticPrices {
    StaticPrices::new(prices)
}

impl PricingScheme for StaticPrices {
    fn name(&self) -> String {
        if self.prices.0.iter().all(Scalar::is_zero) { "zero" } else { "static" }.into()
    }

    fn supports(&self, _kind: ModelKind) -> bool {
        true
    }

    fn post_prices(&mut self, model: &MachineModel) -> Result<PriceVector> {
        if self.prices.len() != model.m() {
            return Err(Error::Protocol(format!(
                "static price vector has {} entries for {} machines",
                self.prices.len(),
                model.m()
            )));
        }
        Ok(self.prices.clone())
    }

    fn observe_choice(&mut self, _: &MachineModel, _: usize, _: usize, _: &Scalar) -> Result<bool> {
        Ok(false)
    }
}

/// Static prices drawn once from a seed: each `max * k/16` for uniform `k` in `0..=16`.
#[derive(Debug, Clone)]
pub struct RandomStaticPrices {
    inner: StaticPrices,
}

impl RandomStaticPrices {
    pub fn new(m: usize, max: &Scalar, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prices = (0..m)
            .map(|_| max * &Scalar::ratio(rng.gen_range(0..=16), 16))
            .collect();
        RandomStaticPrices { inner: StaticPrices::new(PriceVector(prices)) }
    }

    pub fn prices(&self) -> &PriceVector {
        self.inner.prices()
    }
}

impl PricingScheme for RandomStaticPrices {
    fn name(&self) -> String {
        "randstatic".into()
    }

    fn supports(&self, _kind: ModelKind) -> bool {
        true
    }

    fn post_prices(&mut self, model: &MachineModel) -> Result<PriceVector> {
        self.inner.post_prices(model)
    }

    fn observe_choice(&mut self, m: &MachineModel, j: usize, q: usize, inc: &Scalar) -> Result<bool> {
        self.inner.observe_choice(m, j, q, inc)
    }
}

/// Loads and phase as observed by Dynamic-Related.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeState {
    pub loads: LoadState,
    pub phase: PhaseState,
}

impl SchemeState {
    pub fn new(m: usize) -> Self {
        SchemeState { loads: LoadState::new(m), phase: PhaseState::new() }
    }
}

/// `mu_i = s_i (2 lambda - v_i)`, the sorted order, and the chain `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PricingWorkspace {
    pub mu: Vec<Scalar>,
    /// Machines by ascending `mu`, ties by ascending index.
    pub order: Vec<usize>,
    /// `t_1 < t_2 < ... < t_|B|`.
    pub chain: Vec<usize>,
}

/// Builds `B` with the inner loop: repeatedly take the slowest speed left in
/// `A`, add the last machine of that speed in sorted order, and drop that
/// machine and everything before it from `A`.
pub fn build_workspace(virtual_loads: &[Scalar], lambda: &Scalar, model: &MachineModel) -> PricingWorkspace {
    let m = model.m();
    let twice = &Scalar::from_int(2) * lambda;
    let mu: Vec<Scalar> = (0..m)
        .map(|i| &model.speed(i) * &(&twice - &virtual_loads[i]))
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| mu[a].cmp(&mu[b]).then(a.cmp(&b)));

    let mut remaining = vec![true; m];
    let mut chain = Vec::new();
    while let Some(slowest) = (0..m).filter(|&i| remaining[i]).map(|i| model.speed(i)).min() {
        let w = order
            .iter()
            .rposition(|&i| model.speed(i) == slowest)
            .expect("slowest speed present");
        chain.push(order[w]);
        for &i in &order[..=w] {
            remaining[i] = false;
        }
    }
    chain.sort_unstable();
    PricingWorkspace { mu, order, chain }
}

/// Dynamic-Related prices for the next arrival.
///
/// Before the first estimate, only machine `m` is open, at price zero.
/// Otherwise `r_{t_1}` gets price zero, each next chain representative adds the
/// real-load difference plus `(1 - s_prev/s_cur)((2+eps) lambda - v_prev)`, and
/// a fastest representative is appended when the chain stops short of speed
/// `s_m`. Everything else is closed.
pub fn dynamic_related_prices(state: &SchemeState, model: &MachineModel, epsilon: &Scalar) -> PriceVector {
    let m = model.m();
    let mut prices = vec![Scalar::Infinity; m];
    let Some(lambda) = &state.phase.lambda else {
        prices[m - 1] = Scalar::zero();
        return PriceVector(prices);
    };
    let virt = &state.loads.virtual_loads;
    let real = &state.loads.loads;
    let ws = build_workspace(virt, lambda, model);
    let relaxed = &(&Scalar::from_int(2) + epsilon) * lambda;

    let mut links: Vec<usize> = ws.chain.clone();
    let last = *links.last().expect("chain is never empty");
    if model.speed(last) != model.fastest_speed() {
        links.push(m - 1);
    }

    let rep = |i: usize| representative_of(virt, model, i);
    prices[rep(links[0])] = Scalar::zero();
    for pair in links.windows(2) {
        let (prev, cur) = (pair[0], pair[1]);
        let (r_prev, r_cur) = (rep(prev), rep(cur));
        let slope = &Scalar::one() - &(&model.speed(prev) / &model.speed(cur));
        let gap = &relaxed - &virt[prev];
        let price = &(&(&real[r_prev] - &real[r_cur]) + &(&slope * &gap)) + &prices[r_prev];
        prices[r_cur] = price;
    }
    PriceVector(prices)
}

/// Post-choice update: fixes the first estimate, restarts a phase when a
/// fastest machine was chosen and `S` was empty, otherwise adds the job to the
/// chosen machine's virtual load. Returns whether a phase began.
pub fn scheme_observe_choice(
    state: &mut SchemeState,
    job: usize,
    chosen: usize,
    p: &Scalar,
    model: &MachineModel,
) -> Result<bool> {
    let speed = model.speed(chosen);
    let time = p / &speed;
    let Some(lambda) = state.phase.lambda.clone() else {
        state.loads.apply_assignment(job, chosen, &time, false)?;
        if p.is_positive() {
            state.phase.start(time, job);
            return Ok(true);
        }
        return Ok(false);
    };
    let fastest = model.fastest_speed();
    let strict = &Scalar::from_int(2) * &lambda;
    let s_empty = (0..model.m())
        .all(|i| &state.loads.virtual_loads[i] + &(p / &model.speed(i)) > strict);
    if speed == fastest && s_empty {
        state.loads.apply_assignment(job, chosen, &time, false)?;
        state.phase.start(next_lambda(&lambda, p, &fastest)?, job);
        state.loads.reset_virtual();
        Ok(true)
    } else {
        state.loads.apply_assignment(job, chosen, &time, true)?;
        Ok(false)
    }
}

/// The Dynamic-Related scheme.
#[derive(Debug, Clone)]
pub struct DynamicRelated {
    epsilon: Scalar,
    state: SchemeState,
    posted: Option<PriceVector>,
}

impl DynamicRelated {
    pub fn new(epsilon: Scalar) -> Self {
        DynamicRelated { epsilon, state: SchemeState::new(0), posted: None }
    }

    /// Starts from a known estimate; `epsilon` sets the price threshold `(2+epsilon) lambda`.
    pub fn with_known_lambda(lambda: Scalar, epsilon: Scalar) -> Self {
        let mut dr = DynamicRelated::new(epsilon);
        dr.state.phase = PhaseState::with_lambda(lambda);
        dr
    }

    pub fn epsilon(&self) -> &Scalar {
        &self.epsilon
    }

    pub fn state(&self) -> &SchemeState {
        &self.state
    }

    fn ensure_sized(&mut self, m: usize) {
        if self.state.loads.m() != m {
            self.state.loads = LoadState::new(m);
        }
    }
}

impl PricingScheme for DynamicRelated {
    fn name(&self) -> String {
        "dynrel".into()
    }

    fn supports(&self, kind: ModelKind) -> bool {
        matches!(kind, ModelKind::Identical | ModelKind::Related)
    }

    fn post_prices(&mut self, model: &MachineModel) -> Result<PriceVector> {
        if !model.has_speeds() {
            return Err(Error::Unsupported { scheme: self.name(), model: model.kind().to_string() });
        }
        self.ensure_sized(model.m());
        let prices = dynamic_related_prices(&self.state, model, &self.epsilon);
        self.posted = Some(prices.clone());
        Ok(prices)
    }

    fn observe_choice(
        &mut self,
        model: &MachineModel,
        job: usize,
        chosen: usize,
        load_increase: &Scalar,
    ) -> Result<bool> {
        let posted = self
            .posted
            .take()
            .ok_or_else(|| Error::Protocol("choice observed before prices were posted".into()))?;
        if posted[chosen].is_infinite() {
            return Err(Error::Protocol(format!(
                "job {} chose machine {} whose price is infinite",
                job + 1,
                chosen + 1
            )));
        }
        let p = load_increase * &model.speed(chosen);
        scheme_observe_choice(&mut self.state, job, chosen, &p, model)
    }

    fn observed_loads(&self) -> Option<&[Scalar]> {
        Some(&self.state.loads.loads)
    }

    fn lambda(&self) -> Option<Scalar> {
        self.state.phase.lambda.clone()
    }

    fn virtual_loads(&self) -> Option<Vec<Scalar>> {
        Some(self.state.loads.virtual_loads.clone())
    }
}

/// Runs a pricing scheme against arriving agents and keeps the public loads.
pub struct Market {
    scheme: Box<dyn PricingScheme>,
    state: LoadState,
    posted: Option<PriceVector>,
}

impl Market {
    pub fn new(scheme: Box<dyn PricingScheme>, m: usize) -> Self {
        Market { scheme, state: LoadState::new(m), posted: None }
    }

    pub fn scheme(&self) -> &dyn PricingScheme {
        self.scheme.as_ref()
    }

    /// Posts (or returns the already posted) prices for the next arrival.
    pub fn post(&mut self, model: &MachineModel) -> Result<PriceVector> {
        if let Some(p) = &self.posted {
            return Ok(p.clone());
        }
        let prices = self.scheme.post_prices(model)?;
        if prices.len() != model.m() {
            return Err(Error::Protocol(format!(
                "scheme posted {} prices for {} machines",
                prices.len(),
                model.m()
            )));
        }
        self.posted = Some(prices.clone());
        Ok(prices)
    }

    /// Reveals job `job` to the agent, who picks a machine under the posted prices.
    pub fn arrive(
        &mut self,
        model: &MachineModel,
        job: usize,
        profile: &JobProfile,
        ties: &mut TiePolicy,
    ) -> Result<Decision> {
        let prices = self.post(model)?;
        self.posted = None;
        let costs = agent_costs(&self.state, &prices, profile, model);
        let machine = agent_choose(&costs, ties)?;
        let time = processing_time(model, profile, machine);
        self.state.apply_assignment(job, machine, &time, false)?;
        let new_phase = self.scheme.observe_choice(model, job, machine, &time)?;
        if let Some(seen) = self.scheme.observed_loads() {
            if seen != self.state.loads.as_slice() {
                return Err(Error::Protocol(format!(
                    "scheme state diverged from public loads after job {}",
                    job + 1
                )));
            }
        }
        Ok(Decision { machine, prices: Some(prices), costs: Some(costs), new_phase })
    }
}

impl Strategy for Market {
    fn name(&self) -> String {
        self.scheme.name()
    }

    fn supports(&self, kind: ModelKind) -> bool {
        self.scheme.supports(kind)
    }

    fn step(
        &mut self,
        model: &MachineModel,
        job: usize,
        profile: &JobProfile,
        ties: &mut TiePolicy,
    ) -> Result<Decision> {
        self.arrive(model, job, profile, ties)
    }

    fn state(&self) -> &LoadState {
        &self.state
    }

    fn lambda(&self) -> Option<Scalar> {
        self.scheme.lambda()
    }

    fn virtual_loads(&self) -> Option<Vec<Scalar>> {
        self.scheme.virtual_loads()
    }
}
