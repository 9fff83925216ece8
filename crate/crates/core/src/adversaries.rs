//! Lower-bound constructions: the adaptive and oblivious adversaries against
//! pricing schemes on unrelated machines, and the flattening prefix and
//! scaling used to reduce static prices to greedy.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::agents::{agent_choose, agent_costs, PriceVector, TiePolicy};
use crate::error::{Error, Result};
use crate::io::CertifiedInstance;
use crate::model::{processing_row, processing_time, Instance, JobProfile, LoadState, MachineModel};
use crate::pricing::{Market, PricingScheme};
use crate::scalar::Scalar;
use crate::strategy::Strategy;

#[derive(Debug, Clone)]
pub struct AdversaryConfig {
    pub m: usize,
    pub epsilon: Scalar,
    /// Phases `k` for the adaptive adversary.
    pub phases: usize,
    /// Monte-Carlo samples per decision for the oblivious adversary.
    pub samples: usize,
    pub seed: u64,
    /// Adaptive runs give up after this many jobs.
    pub max_jobs: usize,
}

impl AdversaryConfig {
    pub fn new(m: usize, epsilon: Scalar, phases: usize) -> Self {
        AdversaryConfig { m, epsilon, phases, samples: 200, seed: 0, max_jobs: 200_000 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.phases == 0 || self.samples == 0 {
            return Err(Error::InvalidInstance("adversary needs m, phases and samples >= 1".into()));
        }
        if !self.epsilon.is_positive() || self.epsilon.is_infinite() {
            return Err(Error::InvalidInstance("adversary epsilon must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Which branch produced a job.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetCase {
    /// `l_i + pi_i + eps < l_i' + pi_i'`: `eps` on `i`, zero on `i'`.
    Pair { i: usize, zero: usize },
    /// Time 1 on the first machine, `1 + 2 eps` elsewhere.
    Spread,
}

/// All ordered pairs `(i, i')` with `l_i + pi_i + eps < l_i' + pi_i'`, lexicographic.
pub fn case_one_pairs(loads: &[Scalar], prices: &PriceVector, epsilon: &Scalar) -> Vec<(usize, usize)> {
    let m = loads.len();
    let level: Vec<Scalar> = (0..m).map(|i| &loads[i] + &prices[i]).collect();
    let mut out = Vec::new();
    for i in 0..m {
        let lifted = &level[i] + epsilon;
        for k in 0..m {
            if k != i && lifted < level[k] {
                out.push((i, k));
            }
        }
    }
    out
}

pub fn job_for(case: DetCase, m: usize, epsilon: &Scalar) -> JobProfile {
    match case {
        DetCase::Pair { i, zero } => {
            let mut times = vec![Scalar::Infinity; m];
            times[i] = epsilon.clone();
            times[zero] = Scalar::zero();
            JobProfile::Times(times)
        }
        DetCase::Spread => {
            let wide = &Scalar::one() + &(&Scalar::from_int(2) * epsilon);
            let mut times = vec![wide; m];
            times[0] = Scalar::one();
            JobProfile::Times(times)
        }
    }
}

/// The adaptive adversary's next job given public loads and posted prices.
pub fn det_unrelated_next(loads: &[Scalar], prices: &PriceVector, epsilon: &Scalar) -> (JobProfile, DetCase) {
    let case = match case_one_pairs(loads, prices, epsilon).first() {
        Some(&(i, zero)) => DetCase::Pair { i, zero },
        None => DetCase::Spread,
    };
    (job_for(case, loads.len(), epsilon), case)
}

/// Witness: pair jobs on their zero machine, spread jobs round-robin starting
/// at the second machine. Returns the assignment and the bound it certifies.
fn witness_for(cases: &[DetCase], m: usize, epsilon: &Scalar) -> (Vec<usize>, Scalar) {
    let mut spread = 0usize;
    let assignment = cases
        .iter()
        .map(|c| match *c {
            DetCase::Pair { zero, .. } => zero,
            DetCase::Spread => {
                spread += 1;
                spread % m
            }
        })
        .collect();
    let rounds = Scalar::from_int(spread.div_ceil(m) as i64);
    let bound = if m == 1 {
        rounds
    } else {
        &(&Scalar::one() + &(&Scalar::from_int(2) * epsilon)) * &rounds
    };
    (assignment, bound)
}

#[derive(Debug, Clone)]
pub struct LowerBoundReport {
    pub certified: CertifiedInstance,
    pub scheme_makespan: Scalar,
    pub witness_makespan: Scalar,
    /// Scheme makespan over witness makespan.
    pub ratio: Scalar,
    pub cases: Vec<DetCase>,
    /// Machine the agent chose for each job.
    pub choices: Vec<usize>,
}

impl LowerBoundReport {
    pub fn spread_jobs(&self) -> usize {
        self.cases.iter().filter(|c| **c == DetCase::Spread).count()
    }
}

/// Drives `scheme` with the adaptive adversary until `phases * m` spread jobs
/// have arrived. Agents break ties toward the first machine.
pub fn run_det_lower_bound(scheme: Box<dyn PricingScheme>, config: &AdversaryConfig) -> Result<LowerBoundReport> {
    config.validate()?;
    let m = config.m;
    let model = MachineModel::Unrelated { m };
    let mut market = Market::new(scheme, m);
    let mut ties = TiePolicy::PreferMachineOne;
    let target = config.phases * m;
    let mut jobs = Vec::new();
    let mut cases = Vec::new();
    let mut choices = Vec::new();
    let mut spread = 0;
    while spread < target {
        if jobs.len() >= config.max_jobs {
            return Err(Error::AdversaryStalled(jobs.len()));
        }
        let prices = market.post(&model)?;
        let (job, case) = det_unrelated_next(&market.state().loads, &prices, &config.epsilon);
        let d = market.arrive(&model, jobs.len(), &job, &mut ties)?;
        if case == DetCase::Spread {
            spread += 1;
        }
        jobs.push(job);
        cases.push(case);
        choices.push(d.machine);
    }
    let scheme_makespan = market.state().makespan();
    let (witness, bound) = witness_for(&cases, m, &config.epsilon);
    let instance = Instance::new(model, jobs, config.epsilon.clone())?;
    let certified = CertifiedInstance { instance, witness, claimed_opt_bound: bound };
    let witness_makespan = certified.verify()?;
    let ratio = &scheme_makespan / &witness_makespan;
    Ok(LowerBoundReport { certified, scheme_makespan, witness_makespan, ratio, cases, choices })
}

#[derive(Debug, Clone)]
pub struct ObliviousReport {
    pub certified: CertifiedInstance,
    pub cases: Vec<DetCase>,
    /// Samples (out of `samples`) that satisfied the pair condition, per job.
    pub pair_votes: Vec<usize>,
    /// Average makespan over the sampled runs.
    pub mean_scheme_makespan: Scalar,
}

impl ObliviousReport {
    pub fn spread_jobs(&self) -> usize {
        self.cases.iter().filter(|c| **c == DetCase::Spread).count()
    }
}

/// Builds an `n`-job oblivious sequence against a randomized scheme. Sample
/// `s` runs the scheme built by `factory(seed + s)`; a pair job is emitted when
/// more than half the samples satisfy some pair condition, using the pair that
/// holds in the most samples (lowest pair on ties). The sequence is fixed job
/// by job before any evaluation run.
pub fn randomized_oblivious_instance<F>(factory: F, config: &AdversaryConfig, n: usize) -> Result<ObliviousReport>
where
    F: Fn(u64) -> Box<dyn PricingScheme> + Sync,
{
    config.validate()?;
    let m = config.m;
    let model = MachineModel::Unrelated { m };
    let mut markets: Vec<Market> = (0..config.samples)
        .map(|s| Market::new(factory(config.seed.wrapping_add(s as u64)), m))
        .collect();
    let mut jobs = Vec::with_capacity(n);
    let mut cases = Vec::with_capacity(n);
    let mut votes = Vec::with_capacity(n);
    for j in 0..n {
        let pairs: Vec<Vec<(usize, usize)>> = markets
            .par_iter_mut()
            .map(|mk| {
                let prices = mk.post(&model)?;
                Ok(case_one_pairs(&mk.state().loads, &prices, &config.epsilon))
            })
            .collect::<Result<_>>()?;
        let holding = pairs.iter().filter(|p| !p.is_empty()).count();
        let case = if 2 * holding > config.samples {
            let mut tally: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            for p in pairs.iter().flatten() {
                *tally.entry(*p).or_default() += 1;
            }
            let best = tally.values().copied().max().expect("some pair holds");
            let (&(i, zero), _) = tally.iter().find(|(_, &c)| c == best).expect("max is attained");
            DetCase::Pair { i, zero }
        } else {
            DetCase::Spread
        };
        let job = job_for(case, m, &config.epsilon);
        markets
            .par_iter_mut()
            .try_for_each(|mk| mk.arrive(&model, j, &job, &mut TiePolicy::PreferMachineOne).map(|_| ()))?;
        jobs.push(job);
        cases.push(case);
        votes.push(holding);
    }
    let total: Scalar = markets.iter().map(|mk| mk.state().makespan()).sum();
    let mean = &total / &Scalar::from_int(config.samples as i64);
    let (witness, bound) = witness_for(&cases, m, &config.epsilon);
    let instance = Instance::new(model, jobs, config.epsilon.clone())?;
    let certified = CertifiedInstance { instance, witness, claimed_opt_bound: bound };
    certified.verify()?;
    Ok(ObliviousReport { certified, cases, pair_votes: votes, mean_scheme_makespan: mean })
}

/// `m` jobs after which static prices `prices` leave every machine at
/// `l_i + pi_i = pi_max`.
pub fn flatten_prefix(prices: &PriceVector, model: &MachineModel) -> Result<Vec<JobProfile>> {
    let m = model.m();
    if prices.len() != m {
        return Err(Error::Flatten(format!("{} prices for {m} machines", prices.len())));
    }
    if let Some(i) = prices.0.iter().position(Scalar::is_infinite) {
        return Err(Error::Flatten(format!("price of m{} is infinite", i + 1)));
    }
    let top = Scalar::max_of(prices.0.iter()).expect("m >= 1");
    let gap = |i: usize| &top - &prices[i];
    Ok(match model {
        MachineModel::Identical { .. } => {
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| prices[a].cmp(&prices[b]));
            order.into_iter().map(|i| JobProfile::Size(gap(i))).collect()
        }
        MachineModel::Unrelated { .. } => (0..m)
            .map(|i| {
                let mut times = vec![Scalar::Infinity; m];
                times[i] = gap(i);
                JobProfile::Times(times)
            })
            .collect(),
        MachineModel::Restricted { .. } => (0..m)
            .map(|i| JobProfile::Restricted { size: gap(i), allowed: vec![i] })
            .collect(),
        MachineModel::Related { .. } => {
            // Each size is the smallest that lifts some machine to pi_max; the
            // agent then takes a machine that lands exactly there.
            let mut state = LoadState::new(m);
            let mut jobs = Vec::with_capacity(m);
            for j in 0..m {
                let size = (0..m)
                    .map(|i| &model.speed(i) * &(&gap(i) - &state.loads[i]))
                    .chain(std::iter::once(Scalar::zero()))
                    .max()
                    .expect("nonempty");
                let profile = JobProfile::Size(size);
                let costs = agent_costs(&state, prices, &profile, model);
                let q = agent_choose(&costs, &mut TiePolicy::LowestIndex)?;
                state.apply_assignment(j, q, &processing_time(model, &profile, q), false)?;
                jobs.push(profile);
            }
            jobs
        }
    })
}

#[derive(Debug, Clone)]
pub struct ScaledInstance {
    pub instance: Instance,
    pub factor: Scalar,
    /// Smallest nonzero cost gap seen by the canonical greedy run.
    pub delta: Option<Scalar>,
    /// Zero-based steps where the canonical run met an exact tie.
    pub tie_steps: Vec<usize>,
}

/// Smallest nonzero gap between finite greedy costs over the lowest-index
/// greedy run, and the steps with tied minima.
pub fn greedy_gap(inst: &Instance) -> Result<(Option<Scalar>, Vec<usize>)> {
    let model = &inst.model;
    let mut state = LoadState::new(inst.m());
    let mut delta: Option<Scalar> = None;
    let mut ties = Vec::new();
    for (j, profile) in inst.jobs.iter().enumerate() {
        let costs: Vec<Scalar> = processing_row(model, profile)
            .iter()
            .zip(&state.loads)
            .map(|(p, l)| l + p)
            .collect();
        let finite: Vec<&Scalar> = costs.iter().filter(|c| c.is_finite()).collect();
        for a in 0..finite.len() {
            for b in a + 1..finite.len() {
                let d = if finite[a] > finite[b] { finite[a] - finite[b] } else { finite[b] - finite[a] };
                if d.is_positive() && delta.as_ref().is_none_or(|cur| d < *cur) {
                    delta = Some(d);
                }
            }
        }
        let best = costs.iter().min().expect("m >= 1");
        if costs.iter().filter(|c| *c == best).count() > 1 {
            ties.push(j);
        }
        let q = costs.iter().position(|c| c == best).expect("min is attained");
        state.apply_assignment(j, q, &processing_time(model, profile, q), false)?;
    }
    Ok((delta, ties))
}

/// Multiplies every processing time by the least power of two `2^a`, `a >= 0`,
/// with `2^a delta > 2 m pi_bound`, so that prices below `pi_bound` cannot
/// overturn a strict greedy preference.
pub fn scale_instance(inst: &Instance, pi_bound: &Scalar) -> Result<ScaledInstance> {
    if pi_bound.is_negative() || pi_bound.is_infinite() {
        return Err(Error::DegenerateScaling(format!("price bound {pi_bound} must be finite and nonnegative")));
    }
    let (delta, tie_steps) = greedy_gap(inst)?;
    let need = &Scalar::from_int(2 * inst.m() as i64) * pi_bound;
    let factor = match &delta {
        _ if pi_bound.is_zero() => Scalar::one(),
        None => {
            return Err(Error::DegenerateScaling(format!(
                "every greedy step has equal finite costs ({} jobs); no gap to scale",
                inst.n()
            )))
        }
        Some(d) => {
            let mut factor = Scalar::one();
            while &factor * d <= need {
                factor = &factor * &Scalar::from_int(2);
            }
            factor
        }
    };
    let jobs = inst.jobs.iter().map(|p| p.scaled(&factor)).collect();
    let instance = Instance::new(inst.model.clone(), jobs, inst.epsilon.clone())?;
    Ok(ScaledInstance { instance, factor, delta, tie_steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::StaticPrices;

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    fn v(xs: &[&str]) -> Vec<Scalar> {
        xs.iter().map(|x| s(x)).collect()
    }

    #[test]
    fn next_job_cases() {
        let eps = s("1/10");
        let (job, case) = det_unrelated_next(&v(&["0", "0", "0"]), &PriceVector::zeros(3), &eps);
        assert_eq!(case, DetCase::Spread);
        assert_eq!(job, JobProfile::Times(v(&["1", "6/5", "6/5"])));

        let (job, case) = det_unrelated_next(&v(&["1", "0", "0"]), &PriceVector::zeros(3), &eps);
        assert_eq!(case, DetCase::Pair { i: 1, zero: 0 });
        assert_eq!(job, JobProfile::Times(v(&["0", "1/10", "inf"])));

        let closed = PriceVector(vec![Scalar::Infinity; 3]);
        assert_eq!(det_unrelated_next(&v(&["0", "5", "0"]), &closed, &eps).1, DetCase::Spread);
    }

    #[test]
    fn zero_prices_small_runs() {
        let zero = |m| Box::new(StaticPrices::zero(m)) as Box<dyn PricingScheme>;
        let r = run_det_lower_bound(zero(2), &AdversaryConfig::new(2, s("1/10"), 1)).unwrap();
        assert!(r.scheme_makespan >= s("2"));
        assert!(r.witness_makespan <= s("6/5"));

        let r = run_det_lower_bound(zero(1), &AdversaryConfig::new(1, s("1/10"), 4)).unwrap();
        assert_eq!(r.ratio, Scalar::one());
        assert_eq!(r.witness_makespan, r.certified.claimed_opt_bound);
    }

    #[test]
    fn stalls_are_reported() {
        let mut cfg = AdversaryConfig::new(3, s("1/10"), 10);
        cfg.max_jobs = 5;
        let err = run_det_lower_bound(Box::new(StaticPrices::zero(3)), &cfg).unwrap_err();
        assert!(matches!(err, Error::AdversaryStalled(5)));
    }

    #[test]
    fn oblivious_matches_adaptive_for_deterministic_schemes() {
        let cfg = AdversaryConfig { samples: 7, ..AdversaryConfig::new(3, s("1/10"), 2) };
        let det = run_det_lower_bound(Box::new(StaticPrices::zero(3)), &cfg).unwrap();
        let n = det.cases.len();
        let rand = randomized_oblivious_instance(|_| Box::new(StaticPrices::zero(3)), &cfg, n).unwrap();
        assert_eq!(rand.certified.instance, det.certified.instance);
        assert_eq!(rand.mean_scheme_makespan, det.scheme_makespan);
    }

    #[test]
    fn flatten_examples() {
        let pi = PriceVector(v(&["3", "1", "2"]));
        let jobs = flatten_prefix(&pi, &MachineModel::identical(3)).unwrap();
        assert_eq!(jobs, v(&["2", "1", "0"]).into_iter().map(JobProfile::Size).collect::<Vec<_>>());

        let jobs = flatten_prefix(&pi, &MachineModel::Unrelated { m: 3 }).unwrap();
        assert_eq!(jobs[0], JobProfile::Times(v(&["0", "inf", "inf"])));
        assert_eq!(jobs[1], JobProfile::Times(v(&["inf", "2", "inf"])));
        assert_eq!(jobs[2], JobProfile::Times(v(&["inf", "inf", "1"])));

        let flat = PriceVector(v(&["5", "5"]));
        let jobs = flatten_prefix(&flat, &MachineModel::related(v(&["1", "3"]))).unwrap();
        assert!(jobs.iter().all(|j| j.size().unwrap().is_zero()));

        let bad = PriceVector(vec![Scalar::zero(), Scalar::Infinity]);
        assert!(flatten_prefix(&bad, &MachineModel::identical(2)).is_err());
    }

    #[test]
    fn scaling_examples() {
        // Costs (1/4, 1/2) then (1/4+1/4, 1/2): smallest gap 1/4.
        let inst = Instance::new(
            MachineModel::Unrelated { m: 2 },
            vec![JobProfile::Times(v(&["1/4", "1/2"])), JobProfile::Times(v(&["1/4", "1/2"]))],
            s("1/10"),
        )
        .unwrap();
        let scaled = scale_instance(&inst, &s("10")).unwrap();
        assert_eq!(scaled.delta, Some(s("1/4")));
        assert_eq!(scaled.factor, s("256"));
        assert_eq!(scaled.instance.time(0, 1), s("128"));
        assert_eq!(scale_instance(&inst, &Scalar::zero()).unwrap().factor, Scalar::one());
        assert_eq!(scale_instance(&inst, &s("1/100")).unwrap().factor, Scalar::one());

        let flat = Instance::new(MachineModel::identical(2), vec![JobProfile::Size(s("1"))], s("1/10")).unwrap();
        assert!(matches!(scale_instance(&flat, &s("1")), Err(Error::DegenerateScaling(_))));
    }
}
