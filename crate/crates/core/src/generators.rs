//! Seeded random instances with small exact rationals.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::agents::{PriceVector, TiePolicy};
use crate::model::{Instance, JobProfile, MachineModel, ModelKind};
use crate::pricing::{build_workspace, DynamicRelated, Market};
use crate::scalar::Scalar;
use crate::strategy::Strategy;

/// Bounds for generated values. Numerators and denominators are drawn from
/// `1..=max_term`.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_m: usize,
    pub max_n: usize,
    pub max_term: i64,
    /// Candidate epsilons; one is drawn per instance.
    pub epsilons: Vec<Scalar>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_m: 4,
            max_n: 10,
            max_term: 64,
            epsilons: vec![Scalar::ratio(1, 100), Scalar::ratio(1, 10), Scalar::ratio(1, 2), Scalar::one()],
        }
    }
}

pub fn rational<R: Rng>(rng: &mut R, max_term: i64) -> Scalar {
    Scalar::ratio(rng.gen_range(1..=max_term), rng.gen_range(1..=max_term))
}

/// A job size: mostly positive, occasionally zero.
fn size<R: Rng>(rng: &mut R, max_term: i64) -> Scalar {
    if rng.gen_ratio(1, 20) { Scalar::zero() } else { rational(rng, max_term) }
}

/// Nondecreasing speeds, with repeats drawn often enough to exercise
/// representatives.
pub fn speeds<R: Rng>(rng: &mut R, m: usize, max_term: i64) -> Vec<Scalar> {
    let pool_len = rng.gen_range(1..=m);
    let pool: Vec<Scalar> = (0..pool_len).map(|_| rational(rng, max_term)).collect();
    let mut out: Vec<Scalar> = (0..m).map(|_| pool.choose(rng).expect("pool is nonempty").clone()).collect();
    out.sort();
    out
}

fn epsilon<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Scalar {
    cfg.epsilons.choose(rng).cloned().unwrap_or_else(Instance::default_epsilon)
}

pub fn random_model<R: Rng>(rng: &mut R, kind: ModelKind, m: usize, max_term: i64) -> MachineModel {
    match kind {
        ModelKind::Identical => MachineModel::identical(m),
        ModelKind::Related => MachineModel::related(speeds(rng, m, max_term)),
        ModelKind::Restricted => MachineModel::Restricted { m },
        ModelKind::Unrelated => MachineModel::Unrelated { m },
    }
}

pub fn random_job<R: Rng>(rng: &mut R, model: &MachineModel, max_term: i64) -> JobProfile {
    let m = model.m();
    match model {
        MachineModel::Identical { .. } | MachineModel::Related { .. } => JobProfile::Size(size(rng, max_term)),
        MachineModel::Restricted { .. } => {
            let mut allowed: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.5)).collect();
            if allowed.is_empty() {
                allowed.push(rng.gen_range(0..m));
            }
            JobProfile::Restricted { size: size(rng, max_term), allowed }
        }
        MachineModel::Unrelated { .. } => {
            let mut times: Vec<Scalar> = (0..m)
                .map(|_| if rng.gen_ratio(1, 4) { Scalar::Infinity } else { size(rng, max_term) })
                .collect();
            if times.iter().all(Scalar::is_infinite) {
                let i = rng.gen_range(0..m);
                times[i] = size(rng, max_term);
            }
            JobProfile::Times(times)
        }
    }
}

/// `m` in `1..=max_m`, `n` in `0..=max_n`.
pub fn random_instance<R: Rng>(rng: &mut R, kind: ModelKind, cfg: &GenConfig) -> Instance {
    let m = rng.gen_range(1..=cfg.max_m);
    let n = rng.gen_range(0..=cfg.max_n);
    let model = random_model(rng, kind, m, cfg.max_term);
    let jobs = (0..n).map(|_| random_job(rng, &model, cfg.max_term)).collect();
    Instance::new(model, jobs, epsilon(rng, cfg)).expect("generated instances are valid")
}

/// Related instance built against a running Dynamic-Related market: about a
/// third of the jobs land exactly on a threshold of the current state, either
/// `s_t((2+eps) lambda - v_t)` for a chain machine `t` or `s_i(2 lambda - v_i)`.
pub fn boundary_related_instance<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Instance {
    let m = rng.gen_range(1..=cfg.max_m);
    let n = rng.gen_range(0..=cfg.max_n);
    let eps = epsilon(rng, cfg);
    let model = MachineModel::related(speeds(rng, m, cfg.max_term));
    let mut market = Market::new(Box::new(DynamicRelated::new(eps.clone())), m);
    let mut jobs = Vec::with_capacity(n);
    for j in 0..n {
        let mut p = size(rng, cfg.max_term);
        if let (Some(lambda), Some(virt)) = (market.lambda(), market.virtual_loads()) {
            if rng.gen_ratio(1, 3) {
                let two = Scalar::from_int(2);
                let edge = if rng.gen_bool(0.5) {
                    let chain = build_workspace(&virt, &lambda, &model).chain;
                    let t = *chain.choose(rng).expect("chain is nonempty");
                    &model.speed(t) * &(&(&(&two + &eps) * &lambda) - &virt[t])
                } else {
                    let i = rng.gen_range(0..m);
                    &model.speed(i) * &(&(&two * &lambda) - &virt[i])
                };
                if !edge.is_negative() {
                    p = edge;
                }
            }
        }
        let job = JobProfile::Size(p);
        market
            .arrive(&model, j, &job, &mut TiePolicy::LowestIndex)
            .expect("dynamic-related accepts related jobs");
        jobs.push(job);
    }
    Instance::new(model, jobs, eps).expect("generated instances are valid")
}

/// Finite static prices `max_term`-bounded rationals, zero with some probability.
pub fn random_prices<R: Rng>(rng: &mut R, m: usize, max_term: i64) -> PriceVector {
    PriceVector(
        (0..m)
            .map(|_| if rng.gen_ratio(1, 5) { Scalar::zero() } else { rational(rng, max_term) })
            .collect(),
    )
}
