//! Exact offline optimum by branch and bound, plus cheap lower bounds.
//!
//! Processing times are brought to a common denominator and searched as
//! integers (`i128` when everything fits, big integers otherwise); the optimum
//! is converted back to an exact rational.

use std::ops::Add;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::{Instance, JobProfile, MachineModel};
use crate::scalar::Scalar;

pub const DEFAULT_BUDGET: u64 = 16_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptMethod {
    BruteForce,
    BoundOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptResult {
    pub makespan: Scalar,
    /// Zero-based machine per job; present for [`OptMethod::BruteForce`].
    pub witness: Option<Vec<usize>>,
    pub method: OptMethod,
}

/// `max(max_j min_i p_ij, sum_j p_j / sum_i s_i)`, the second term only for
/// identical and related machines.
pub fn opt_lower_bound(inst: &Instance) -> Scalar {
    let biggest = (0..inst.n())
        .map(|j| (0..inst.m()).map(|i| inst.time(j, i)).min().unwrap_or_default())
        .max()
        .unwrap_or_default();
    if !inst.model.has_speeds() {
        return biggest;
    }
    let volume: Scalar = inst.jobs.iter().filter_map(JobProfile::size).sum();
    let capacity: Scalar = inst.model.speeds().unwrap_or_default().iter().sum();
    biggest.max(&volume / &capacity)
}

/// The exact optimum with the default search budget.
pub fn opt_bruteforce(inst: &Instance) -> Result<OptResult> {
    opt_bruteforce_with_budget(inst, DEFAULT_BUDGET)
}

/// The exact optimum when the nominal state space `m^n` fits in `budget`, and
/// the lexicographically smallest optimal assignment.
pub fn opt_bruteforce_with_budget(inst: &Instance, budget: u64) -> Result<OptResult> {
    let states = (inst.m() as f64).powi(inst.n() as i32);
    if states > budget as f64 {
        return Err(Error::BudgetExceeded { states, budget });
    }
    let (times, scale) = integer_times(inst);
    let (best, witness) = match to_i128(&times) {
        Some(small) => {
            let (b, w) = solve(&small, inst);
            (BigInt::from(b), w)
        }
        None => solve(&times, inst),
    };
    let makespan = Scalar::Finite(BigRational::new(best, scale));
    Ok(OptResult { makespan, witness: Some(witness), method: OptMethod::BruteForce })
}

/// Exact optimum if within budget, otherwise the lower bound.
pub fn opt_or_bound(inst: &Instance, budget: u64) -> OptResult {
    match opt_bruteforce_with_budget(inst, budget) {
        Ok(r) => r,
        Err(_) => OptResult { makespan: opt_lower_bound(inst), witness: None, method: OptMethod::BoundOnly },
    }
}

type Matrix<T> = Vec<Vec<Option<T>>>;

/// `times[j][i]` scaled by the common denominator, which is returned too.
fn integer_times(inst: &Instance) -> (Matrix<BigInt>, BigInt) {
    let raw: Vec<Vec<Option<BigRational>>> = (0..inst.n())
        .map(|j| (0..inst.m()).map(|i| inst.time(j, i).as_rational().cloned()).collect())
        .collect();
    let scale = raw
        .iter()
        .flatten()
        .flatten()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    let times = raw
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|t| t.map(|r| r.numer() * (&scale / r.denom())))
                .collect()
        })
        .collect();
    (times, scale)
}

fn to_i128(times: &Matrix<BigInt>) -> Option<Matrix<i128>> {
    // Any single machine load is bounded by the sum of each job's largest finite time.
    let total: BigInt = times
        .iter()
        .map(|row| row.iter().flatten().max().cloned().unwrap_or_default())
        .sum();
    if total > BigInt::from(i128::MAX / 4) {
        return None;
    }
    Some(
        times
            .iter()
            .map(|row| row.iter().map(|t| t.as_ref().and_then(ToPrimitive::to_i128)).collect())
            .collect(),
    )
}

trait Time: Clone + Ord + Zero + for<'a> Add<&'a Self, Output = Self> {}
impl<T: Clone + Ord + Zero + for<'a> Add<&'a T, Output = T>> Time for T {}

struct Search<'a, T> {
    times: &'a Matrix<T>,
    order: Vec<usize>,
    /// Largest remaining per-job minimum time from each depth on.
    tail_min: Vec<T>,
    /// Machines with identical processing columns share a class.
    class: Vec<usize>,
    best: Option<T>,
    best_assign: Vec<usize>,
    current: Vec<usize>,
}

impl<'a, T: Time> Search<'a, T> {
    fn dfs(&mut self, depth: usize, loads: &mut Vec<T>, current_max: &T) {
        if let Some(best) = &self.best {
            let bound = if depth < self.order.len() {
                current_max.clone().max(self.tail_min[depth].clone())
            } else {
                current_max.clone()
            };
            if bound >= *best {
                return;
            }
        }
        if depth == self.order.len() {
            self.best = Some(current_max.clone());
            self.best_assign = self.current.clone();
            return;
        }
        let job = self.order[depth];
        for i in 0..loads.len() {
            let Some(t) = &self.times[job][i] else { continue };
            // Interchangeable machine with the same load already explored.
            if (0..i).any(|k| self.class[k] == self.class[i] && loads[k] == loads[i]) {
                continue;
            }
            let old = loads[i].clone();
            let new = old.clone() + t;
            let next_max = if new > *current_max { new.clone() } else { current_max.clone() };
            loads[i] = new;
            self.current[job] = i;
            self.dfs(depth + 1, loads, &next_max);
            loads[i] = old;
        }
    }
}

/// Smallest assignment in job order whose makespan is at most `target`.
fn lexicographic_witness<T: Time>(times: &Matrix<T>, m: usize, target: &T) -> Option<Vec<usize>> {
    fn go<T: Time>(times: &Matrix<T>, j: usize, loads: &mut Vec<T>, target: &T, out: &mut Vec<usize>) -> bool {
        if j == times.len() {
            return true;
        }
        for i in 0..loads.len() {
            let Some(t) = &times[j][i] else { continue };
            let new = loads[i].clone() + t;
            if new > *target {
                continue;
            }
            let old = std::mem::replace(&mut loads[i], new);
            out.push(i);
            if go(times, j + 1, loads, target, out) {
                return true;
            }
            out.pop();
            loads[i] = old;
        }
        false
    }
    let mut loads = vec![T::zero(); m];
    let mut out = Vec::with_capacity(times.len());
    go(times, 0, &mut loads, target, &mut out).then_some(out)
}

fn solve<T: Time>(times: &Matrix<T>, inst: &Instance) -> (T, Vec<usize>) {
    let n = times.len();
    let m = inst.m();
    if n == 0 {
        return (T::zero(), Vec::new());
    }
    let min_time = |j: usize| times[j].iter().flatten().min().cloned().expect("finite somewhere");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| min_time(b).cmp(&min_time(a)).then(a.cmp(&b)));
    let mut tail_min = vec![T::zero(); n];
    for d in (0..n).rev() {
        let here = min_time(order[d]);
        tail_min[d] = if d + 1 < n { here.max(tail_min[d + 1].clone()) } else { here };
    }
    let class = machine_classes(times, &inst.model);

    // Seed the incumbent with list scheduling in search order.
    let mut greedy_loads = vec![T::zero(); m];
    let mut greedy_assign = vec![0; n];
    for &j in &order {
        let i = (0..m)
            .filter(|&i| times[j][i].is_some())
            .min_by_key(|&i| greedy_loads[i].clone() + times[j][i].as_ref().unwrap())
            .expect("finite somewhere");
        greedy_loads[i] = greedy_loads[i].clone() + times[j][i].as_ref().unwrap();
        greedy_assign[j] = i;
    }
    let greedy_max = greedy_loads.into_iter().max().expect("m >= 1");

    let mut search = Search {
        times,
        order,
        tail_min,
        class,
        best: Some(greedy_max),
        best_assign: greedy_assign,
        current: vec![0; n],
    };
    let mut loads = vec![T::zero(); m];
    search.dfs(0, &mut loads, &T::zero());
    let best = search.best.expect("every job has a finite machine");
    let witness = lexicographic_witness(times, m, &best).unwrap_or(search.best_assign);
    (best, witness)
}

fn machine_classes<T: Time>(times: &Matrix<T>, model: &MachineModel) -> Vec<usize> {
    let m = model.m();
    let mut class: Vec<usize> = (0..m).collect();
    for i in 0..m {
        if let Some(k) = (0..i).find(|&k| times.iter().all(|row| row[k] == row[i])) {
            class[i] = class[k];
        }
    }
    class
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MachineModel;

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    /// Plain enumeration of all `m^n` assignments.
    fn enumerate(inst: &Instance) -> Scalar {
        let (n, m) = (inst.n(), inst.m());
        let mut best = Scalar::Infinity;
        let mut a = vec![0usize; n];
        loop {
            if let Ok(ms) = inst.makespan_of(&a) {
                best = best.min(ms);
            }
            let mut d = 0;
            loop {
                if d == n {
                    return if n == 0 { Scalar::zero() } else { best };
                }
                a[d] += 1;
                if a[d] < m {
                    break;
                }
                a[d] = 0;
                d += 1;
            }
        }
    }

    #[test]
    fn small_cases() {
        let un = Instance::new(
            MachineModel::Unrelated { m: 3 },
            vec![JobProfile::Times(vec![s("5"), s("2"), Scalar::Infinity])],
            s("1/10"),
        )
        .unwrap();
        let r = opt_bruteforce(&un).unwrap();
        assert_eq!(r.makespan, s("2"));
        assert_eq!(r.witness, Some(vec![1]));

        let id = Instance::new(
            MachineModel::identical(2),
            ["1", "1", "2"].iter().map(|x| JobProfile::Size(s(x))).collect(),
            s("1/10"),
        )
        .unwrap();
        let r = opt_bruteforce(&id).unwrap();
        assert_eq!(r.makespan, s("2"));
        assert_eq!(r.makespan, enumerate(&id));
        assert_eq!(r.witness, Some(vec![0, 0, 1]));

        let empty = Instance::new(MachineModel::identical(2), vec![], s("1/10")).unwrap();
        assert_eq!(opt_bruteforce(&empty).unwrap().makespan, Scalar::zero());
    }

    #[test]
    fn lower_bounds() {
        let one = Instance::new(
            MachineModel::identical(1),
            ["1/2", "3", "1/3"].iter().map(|x| JobProfile::Size(s(x))).collect(),
            s("1/10"),
        )
        .unwrap();
        assert_eq!(opt_lower_bound(&one), s("23/6"));
    }

    #[test]
    fn budget_is_enforced() {
        let big = Instance::new(
            MachineModel::identical(4),
            (0..20).map(|_| JobProfile::Size(s("1"))).collect(),
            s("1/10"),
        )
        .unwrap();
        assert!(matches!(opt_bruteforce(&big), Err(Error::BudgetExceeded { .. })));
        let r = opt_or_bound(&big, DEFAULT_BUDGET);
        assert_eq!(r.method, OptMethod::BoundOnly);
        assert_eq!(r.makespan, s("5"));
    }

    #[test]
    fn big_denominators_fall_back_to_bigint() {
        let speeds = vec![s("1/1000000000000000000007"), s("1/3")];
        let inst = Instance::new(
            MachineModel::related(speeds),
            ["1/1000000000000000000009", "1/1000000000000000000013", "5"]
                .iter()
                .map(|x| JobProfile::Size(s(x)))
                .collect(),
            s("1/10"),
        )
        .unwrap();
        assert_eq!(opt_bruteforce(&inst).unwrap().makespan, enumerate(&inst));
    }

    use proptest::prelude::*;

    fn arb_instance() -> impl Strategy<Value = Instance> {
        (1usize..4, 0usize..7).prop_flat_map(|(m, n)| {
            prop_oneof![
                proptest::collection::vec((1i64..9, 1i64..5), n).prop_map(move |v| {
                    Instance::new(
                        MachineModel::identical(m),
                        v.into_iter().map(|(a, b)| JobProfile::Size(Scalar::ratio(a, b))).collect(),
                        Scalar::ratio(1, 10),
                    )
                    .unwrap()
                }),
                proptest::collection::vec(proptest::collection::vec(prop_oneof![
                    (0i64..9).prop_map(Scalar::from_int),
                    Just(Scalar::Infinity)
                ], m), n)
                .prop_map(move |rows| {
                    let jobs = rows
                        .into_iter()
                        .map(|mut r| {
                            if r.iter().all(Scalar::is_infinite) {
                                r[0] = Scalar::one();
                            }
                            JobProfile::Times(r)
                        })
                        .collect();
                    Instance::new(MachineModel::Unrelated { m }, jobs, Scalar::ratio(1, 10)).unwrap()
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn matches_enumeration(inst in arb_instance()) {
            let r = opt_bruteforce(&inst).unwrap();
            prop_assert_eq!(&r.makespan, &enumerate(&inst));
            prop_assert_eq!(inst.makespan_of(r.witness.as_ref().unwrap()).unwrap(), r.makespan.clone());
            prop_assert!(opt_lower_bound(&inst) <= r.makespan);
        }
    }
}
