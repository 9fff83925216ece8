use posted_makespan::agents::{agent_costs, PriceVector, TiePolicy};
use posted_makespan::generators::{random_instance, GenConfig};
use posted_makespan::harness::simulate;
use posted_makespan::model::{processing_time, ModelKind};
use posted_makespan::opt::{opt_bruteforce, opt_lower_bound};
use posted_makespan::schedulers::compute_sets;
use posted_makespan::strategy::{strategy_registry, StrategyParams};
use posted_makespan::Scalar;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kinds() -> impl Strategy<Value = ModelKind> {
    prop::sample::select(ModelKind::ALL.to_vec())
}

fn small() -> GenConfig {
    GenConfig { max_m: 3, max_n: 7, max_term: 12, ..GenConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lower_bound_never_exceeds_optimum(kind in kinds(), seed in any::<u64>()) {
        let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), kind, &small());
        let opt = opt_bruteforce(&inst).unwrap();
        prop_assert!(opt_lower_bound(&inst) <= opt.makespan);
        let witness = opt.witness.unwrap();
        prop_assert_eq!(inst.makespan_of(&witness).unwrap(), opt.makespan);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Every strategy keeps loads equal to its assignment, and market agents
    /// always take a cheapest machine.
    #[test]
    fn traces_are_self_consistent(kind in kinds(), seed in any::<u64>(), policy in 0u8..3) {
        let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), kind, &small());
        let params = StrategyParams { m: inst.m(), epsilon: inst.epsilon.clone(), seed };
        let registry = strategy_registry();
        for spec in ["greedy", "zero", "flexfit", "flexfit-eager", "slowfit", "dynrel", "randstatic:3"] {
            let mut strat = registry.build(spec, &params).unwrap();
            if !strat.supports(kind) {
                continue;
            }
            let mut ties = match policy {
                0 => TiePolicy::LowestIndex,
                1 => TiePolicy::HighestIndex,
                _ => TiePolicy::random(seed),
            };
            let trace = simulate(strat.as_mut(), &inst, &mut ties).unwrap();
            let state = strat.state();
            prop_assert_eq!(state.recomputed_loads(&inst), state.loads.clone());
            prop_assert_eq!(state.assignment.len(), inst.n());
            for (k, v) in state.virtual_loads.iter().enumerate() {
                prop_assert!(!v.is_negative() && *v <= state.loads[k]);
            }
            let mut loads = vec![Scalar::zero(); inst.m()];
            for st in &trace.steps {
                if let Some(costs) = &st.costs {
                    let best = costs.iter().min().unwrap();
                    prop_assert_eq!(&costs[st.chosen], best);
                }
                if let Some(prices) = &st.prices {
                    let pre = posted_makespan::model::LoadState { loads: loads.clone(), ..posted_makespan::model::LoadState::new(inst.m()) };
                    let expect = agent_costs(&pre, &PriceVector(prices.clone()), &inst.jobs[st.job], &inst.model);
                    prop_assert_eq!(Some(&expect.0), st.costs.as_ref());
                }
                loads[st.chosen] += &processing_time(&inst.model, &inst.jobs[st.job], st.chosen);
                prop_assert_eq!(&loads, &st.loads_after);
            }
        }
    }

    /// Estimates only grow, by powers of two of at least 2, and S is inside T.
    #[test]
    fn phases_double(seed in any::<u64>()) {
        let cfg = GenConfig { max_n: 20, ..small() };
        let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), ModelKind::Related, &cfg);
        let params = StrategyParams { m: inst.m(), epsilon: inst.epsilon.clone(), seed };
        for spec in ["flexfit", "flexfit-eager", "dynrel"] {
            let mut strat = strategy_registry().build(spec, &params).unwrap();
            let trace = simulate(strat.as_mut(), &inst, &mut TiePolicy::LowestIndex).unwrap();
            let mut prev: Option<Scalar> = None;
            let mut virt = vec![Scalar::zero(); inst.m()];
            for st in &trace.steps {
                if let Some(l) = &prev {
                    let sets = compute_sets(&virt, l, &inst.epsilon, &inst.jobs[st.job], &inst.model);
                    prop_assert!(sets.s.iter().all(|i| sets.t.contains(i)));
                    let now = st.lambda.clone().unwrap();
                    if st.new_phase {
                        let factor = &now / l;
                        let e = factor.ceil_log2().unwrap();
                        prop_assert!(e >= 1 && factor == Scalar::pow2(e));
                    } else {
                        prop_assert_eq!(&now, l);
                    }
                }
                prev = st.lambda.clone();
                virt = st.virtual_after.clone().unwrap();
            }
        }
    }
}
