use posted_makespan::agents::TiePolicy;
use posted_makespan::consistency::{check_flexfit_consistency, check_flexfit_consistency_with, CheckOptions};
use posted_makespan::harness::{run, simulate, Ratio};
use posted_makespan::io::{parse_instance, read_instance};
use posted_makespan::model::Instance;
use posted_makespan::opt::opt_bruteforce;
use posted_makespan::strategy::{strategy_registry, StrategyParams};
use posted_makespan::trace::Trace;
use posted_makespan::Scalar;

const INSTANCE: &str = include_str!("fixtures/worked_example.json");
const GREEDY: &str = include_str!("fixtures/worked_example_greedy.csv");
const DYNREL_KNOWN: &str = include_str!("fixtures/worked_example_dynrel_known.csv");

fn s(x: &str) -> Scalar {
    x.parse().unwrap()
}

fn instance() -> Instance {
    parse_instance(INSTANCE).unwrap()
}

fn trace_of(spec: &str, inst: &Instance) -> Trace {
    let params = StrategyParams { m: inst.m(), epsilon: inst.epsilon.clone(), seed: 0 };
    let mut strat = strategy_registry().build(spec, &params).unwrap();
    simulate(strat.as_mut(), inst, &mut TiePolicy::LowestIndex).unwrap()
}

#[test]
fn greedy_trace_is_golden() {
    let inst = instance();
    assert_eq!(trace_of("greedy", &inst).to_csv_string(), GREEDY);
}

#[test]
fn zero_prices_follow_greedy() {
    let inst = instance();
    let zero = trace_of("zero", &inst);
    let greedy = Trace::read_csv(GREEDY.as_bytes()).unwrap();
    assert_eq!(zero.choices(), greedy.choices());
    for (a, b) in zero.steps.iter().zip(&greedy.steps) {
        assert_eq!(a.costs, b.costs);
        assert_eq!(a.loads_after, b.loads_after);
    }
    assert_eq!(zero.makespan(), s("135/68"));
}

#[test]
fn known_estimate_trace_is_golden() {
    let inst = instance();
    let trace = trace_of("dynrel-known:1", &inst);
    assert_eq!(trace.to_csv_string(), DYNREL_KNOWN);
    assert_eq!(trace.choices(), vec![0, 1, 2]);
    assert_eq!(trace.makespan(), s("101/100"));
    let prices = trace.steps[0].prices.as_ref().unwrap();
    assert_eq!(prices[1], s("401/20200"));
    assert!(prices[1] > inst.epsilon);
}

#[test]
fn optimum_is_one() {
    let opt = opt_bruteforce(&instance()).unwrap();
    assert_eq!(opt.makespan, Scalar::one());
    assert_eq!(opt.witness, Some(vec![1, 0, 2]));
}

#[test]
fn reports_and_replays() {
    let inst = read_instance(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/worked_example.json")).unwrap();
    let params = StrategyParams { m: 3, epsilon: inst.epsilon.clone(), seed: 0 };
    let mut strat = strategy_registry().build("dynrel-known:1", &params).unwrap();
    let (report, trace) = run(strat.as_mut(), &inst, "worked_example", &mut TiePolicy::LowestIndex).unwrap();
    assert_eq!(report.ratio, Ratio::Exact(s("101/100")));
    assert_eq!(report.phases, 0);

    let golden = Trace::read_csv(DYNREL_KNOWN.as_bytes()).unwrap();
    assert_eq!(golden, trace);
    let opts = CheckOptions { epsilon: &inst.epsilon / &Scalar::from_int(2), initial_lambda: Some(Scalar::one()) };
    let verdicts = check_flexfit_consistency_with(&golden, &inst, &opts).unwrap();
    assert!(verdicts.is_ok(), "{}", verdicts.summary());
    assert_eq!(verdicts, check_flexfit_consistency_with(&trace, &inst, &opts).unwrap());

    let standard = trace_of("dynrel", &inst);
    assert!(check_flexfit_consistency(&standard, &inst).unwrap().is_ok());
}
