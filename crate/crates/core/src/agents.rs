//! Selfish agents: cost evaluation under posted prices and machine choice.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{processing_time, JobProfile, LoadState, MachineModel};
use crate::scalar::Scalar;

/// One posted price per machine. `inf` closes a machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceVector(pub Vec<Scalar>);

impl PriceVector {
    pub fn zeros(m: usize) -> Self {
        PriceVector(vec![Scalar::zero(); m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Scalar] {
        &self.0
    }
}

impl std::ops::Index<usize> for PriceVector {
    type Output = Scalar;
    fn index(&self, i: usize) -> &Scalar {
        &self.0[i]
    }
}

/// `c_i = l_i + p_ij + pi_i` for every machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostVector(pub Vec<Scalar>);

impl CostVector {
    pub fn as_slice(&self) -> &[Scalar] {
        &self.0
    }

    /// Machines attaining the minimum cost. When every cost is infinite, all machines.
    pub fn argmin_set(&self) -> Vec<usize> {
        let Some(min) = self.0.iter().min() else {
            return Vec::new();
        };
        self.0
            .iter()
            .enumerate()
            .filter(|(_, c)| *c == min)
            .map(|(i, _)| i)
            .collect()
    }
}

impl std::ops::Index<usize> for CostVector {
    type Output = Scalar;
    fn index(&self, i: usize) -> &Scalar {
        &self.0[i]
    }
}

/// What an adversarial tie-breaker sees.
pub struct TieContext<'a> {
    pub costs: &'a CostVector,
    pub tied: &'a [usize],
}

pub type TieCallback = Box<dyn FnMut(&TieContext<'_>) -> usize + Send>;

/// How an agent resolves exact ties between minimum-cost machines.
pub enum TiePolicy {
    LowestIndex,
    HighestIndex,
    /// Machine 1 whenever it is tied (in particular when every cost is infinite).
    PreferMachineOne,
    Adversarial(TieCallback),
    /// Explicit choices, one consumed per tie.
    Scripted(VecDeque<usize>),
}

impl TiePolicy {
    pub fn scripted(choices: impl IntoIterator<Item = usize>) -> Self {
        TiePolicy::Scripted(choices.into_iter().collect())
    }

    /// Uniformly random member of the tie set, reproducible from `seed`.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TiePolicy::Adversarial(Box::new(move |ctx| ctx.tied[rng.gen_range(0..ctx.tied.len())]))
    }

    /// Parses a script file: one-based machine numbers separated by whitespace or commas.
    pub fn parse_script(text: &str) -> Result<Self> {
        let choices = text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| match t.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(k - 1),
                _ => Err(Error::Parse(format!("bad machine number {t:?} in tie script"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TiePolicy::scripted(choices))
    }

    /// `lowest`, `highest`, `prefer1` or `random:<seed>`. Scripted policies need a file
    /// and are built by the caller through [`TiePolicy::parse_script`].
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "lowest" => Ok(TiePolicy::LowestIndex),
            "highest" => Ok(TiePolicy::HighestIndex),
            "prefer1" => Ok(TiePolicy::PreferMachineOne),
            _ => match name.strip_prefix("random:") {
                Some(seed) => seed
                    .parse()
                    .map(TiePolicy::random)
                    .map_err(|_| Error::Parse(format!("bad seed in {name:?}"))),
                None => Err(Error::Parse(format!("unknown tie policy {name:?}"))),
            },
        }
    }
}

impl fmt::Debug for TiePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TiePolicy::LowestIndex => f.write_str("LowestIndex"),
            TiePolicy::HighestIndex => f.write_str("HighestIndex"),
            TiePolicy::PreferMachineOne => f.write_str("PreferMachineOne"),
            TiePolicy::Adversarial(_) => f.write_str("Adversarial(..)"),
            TiePolicy::Scripted(q) => f.debug_tuple("Scripted").field(q).finish(),
        }
    }
}

/// Each agent's cost on every machine given the loads before its arrival.
pub fn agent_costs(
    state: &LoadState,
    prices: &PriceVector,
    profile: &JobProfile,
    model: &MachineModel,
) -> CostVector {
    assert_eq!(prices.len(), model.m(), "price vector length");
    CostVector(
        (0..model.m())
            .map(|i| {
                let p = processing_time(model, profile, i);
                &(&state.loads[i] + &p) + &prices[i]
            })
            .collect(),
    )
}

/// A cost-minimizing machine, with exact ties resolved by `policy`.
pub fn agent_choose(costs: &CostVector, policy: &mut TiePolicy) -> Result<usize> {
    let tied = costs.argmin_set();
    match tied.as_slice() {
        [] => Err(Error::InvalidInstance("no machines".into())),
        [only] => Ok(*only),
        _ => {
            let pick = match policy {
                TiePolicy::LowestIndex => tied[0],
                TiePolicy::HighestIndex => tied[tied.len() - 1],
                TiePolicy::PreferMachineOne => tied[0],
                TiePolicy::Adversarial(cb) => cb(&TieContext { costs, tied: &tied }),
                TiePolicy::Scripted(queue) => queue.pop_front().ok_or(Error::ScriptExhausted)?,
            };
            if tied.contains(&pick) {
                Ok(pick)
            } else {
                Err(Error::BadTieChoice { chosen: pick, tied })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    fn costs(v: &[&str]) -> CostVector {
        CostVector(v.iter().map(|x| s(x)).collect())
    }

    #[test]
    fn unrelated_costs() {
        let model = MachineModel::Unrelated { m: 3 };
        let mut st = LoadState::new(3);
        st.loads = vec![s("9"), s("1"), s("9")];
        let job = JobProfile::Times(vec![Scalar::Infinity, s("2"), Scalar::Infinity]);
        let c = agent_costs(&st, &PriceVector::zeros(3), &job, &model);
        assert_eq!(c, costs(&["inf", "3", "inf"]));
    }

    #[test]
    fn infinite_prices_give_infinite_costs() {
        let model = MachineModel::identical(2);
        let prices = PriceVector(vec![Scalar::Infinity; 2]);
        let c = agent_costs(&LoadState::new(2), &prices, &JobProfile::Size(s("1")), &model);
        assert_eq!(c, costs(&["inf", "inf"]));
    }

    #[test]
    fn tie_policies() {
        let c = costs(&["5", "5", "7"]);
        assert_eq!(agent_choose(&c, &mut TiePolicy::LowestIndex).unwrap(), 0);
        assert_eq!(agent_choose(&c, &mut TiePolicy::HighestIndex).unwrap(), 1);
        assert_eq!(agent_choose(&c, &mut TiePolicy::PreferMachineOne).unwrap(), 0);

        let all_inf = costs(&["inf", "inf", "inf"]);
        assert_eq!(agent_choose(&all_inf, &mut TiePolicy::PreferMachineOne).unwrap(), 0);
        assert_eq!(agent_choose(&all_inf, &mut TiePolicy::HighestIndex).unwrap(), 2);

        let c = costs(&["3", "1", "1"]);
        assert_eq!(agent_choose(&c, &mut TiePolicy::PreferMachineOne).unwrap(), 1);
    }

    #[test]
    fn scripted_and_adversarial() {
        let c = costs(&["1", "1", "1"]);
        let mut p = TiePolicy::scripted([2, 1]);
        assert_eq!(agent_choose(&c, &mut p).unwrap(), 2);
        // A unique minimum does not consume the script.
        assert_eq!(agent_choose(&costs(&["0", "1", "1"]), &mut p).unwrap(), 0);
        assert_eq!(agent_choose(&c, &mut p).unwrap(), 1);
        assert!(matches!(agent_choose(&c, &mut p), Err(Error::ScriptExhausted)));

        let mut bad = TiePolicy::Adversarial(Box::new(|_| 7));
        assert!(matches!(agent_choose(&c, &mut bad), Err(Error::BadTieChoice { .. })));

        let mut last = TiePolicy::Adversarial(Box::new(|ctx| *ctx.tied.last().unwrap()));
        assert_eq!(agent_choose(&c, &mut last).unwrap(), 2);
    }

    #[test]
    fn script_parsing() {
        let TiePolicy::Scripted(q) = TiePolicy::parse_script("1, 3\n2").unwrap() else {
            panic!()
        };
        assert_eq!(q, VecDeque::from(vec![0, 2, 1]));
        assert!(TiePolicy::parse_script("0").is_err());
        assert!(TiePolicy::from_name("random:7").is_ok());
        assert!(TiePolicy::from_name("nope").is_err());
    }
}
