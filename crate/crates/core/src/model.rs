//! Machine models, job profiles, instances and load bookkeeping.
//!
//! Machines and jobs are indexed from zero inside the library. Files and the
//! CLI use one-based machine numbers; conversion happens at the I/O boundary.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The four machine environments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MachineModel {
    Identical { m: usize },
    /// Speeds sorted slowest first.
    Related { speeds: Vec<Scalar> },
    Restricted { m: usize },
    Unrelated { m: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Identical,
    Related,
    Restricted,
    Unrelated,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Identical,
        ModelKind::Related,
        ModelKind::Restricted,
        ModelKind::Unrelated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Identical => "identical",
            ModelKind::Related => "related",
            ModelKind::Restricted => "restricted",
            ModelKind::Unrelated => "unrelated",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown machine model {s:?}")))
    }
}

impl MachineModel {
    pub fn identical(m: usize) -> Self {
        MachineModel::Identical { m }
    }

    pub fn related(speeds: Vec<Scalar>) -> Self {
        MachineModel::Related { speeds }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            MachineModel::Identical { .. } => ModelKind::Identical,
            MachineModel::Related { .. } => ModelKind::Related,
            MachineModel::Restricted { .. } => ModelKind::Restricted,
            MachineModel::Unrelated { .. } => ModelKind::Unrelated,
        }
    }

    pub fn m(&self) -> usize {
        match self {
            MachineModel::Identical { m }
            | MachineModel::Restricted { m }
            | MachineModel::Unrelated { m } => *m,
            MachineModel::Related { speeds } => speeds.len(),
        }
    }

    /// Identical and related machines have speeds; identical ones run at unit speed.
    pub fn has_speeds(&self) -> bool {
        matches!(self, MachineModel::Identical { .. } | MachineModel::Related { .. })
    }

    /// Speed of machine `i`. Panics for restricted/unrelated models.
    pub fn speed(&self, i: usize) -> Scalar {
        match self {
            MachineModel::Identical { .. } => Scalar::one(),
            MachineModel::Related { speeds } => speeds[i].clone(),
            _ => panic!("{} machines have no speeds", self.kind()),
        }
    }

    pub fn speeds(&self) -> Option<Vec<Scalar>> {
        self.has_speeds()
            .then(|| (0..self.m()).map(|i| self.speed(i)).collect())
    }

    /// Speed of the fastest machine, `s_m`.
    pub fn fastest_speed(&self) -> Scalar {
        self.speed(self.m() - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m() == 0 {
            return Err(Error::InvalidInstance("at least one machine is required".into()));
        }
        if let MachineModel::Related { speeds } = self {
            if let Some(bad) = speeds.iter().find(|s| !s.is_positive() || s.is_infinite()) {
                return Err(Error::InvalidInstance(format!("speed {bad} is not a positive finite value")));
            }
            if speeds.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::InvalidInstance("speeds must be sorted slowest first".into()));
            }
        }
        Ok(())
    }
}

/// What an arriving job looks like, per model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JobProfile {
    /// Identical or related: a size `p_j`, run in `p_j / s_i`.
    Size(Scalar),
    /// Restricted assignment: a size and the machines it may run on.
    Restricted { size: Scalar, allowed: Vec<usize> },
    /// Unrelated: the full processing-time row.
    Times(Vec<Scalar>),
}

impl JobProfile {
    pub fn size(&self) -> Option<&Scalar> {
        match self {
            JobProfile::Size(p) | JobProfile::Restricted { size: p, .. } => Some(p),
            JobProfile::Times(_) => None,
        }
    }

    /// Multiply every processing time by `factor`.
    pub fn scaled(&self, factor: &Scalar) -> JobProfile {
        match self {
            JobProfile::Size(p) => JobProfile::Size(p * factor),
            JobProfile::Restricted { size, allowed } => JobProfile::Restricted {
                size: size * factor,
                allowed: allowed.clone(),
            },
            JobProfile::Times(t) => JobProfile::Times(
                t.iter()
                    .map(|x| if x.is_finite() { x * factor } else { Scalar::Infinity })
                    .collect(),
            ),
        }
    }

    fn check(&self, model: &MachineModel) -> Result<()> {
        let m = model.m();
        let nonneg = |p: &Scalar| {
            if p.is_negative() {
                Err(Error::InvalidInstance(format!("negative processing time {p}")))
            } else {
                Ok(())
            }
        };
        match (model, self) {
            (MachineModel::Identical { .. } | MachineModel::Related { .. }, JobProfile::Size(p)) => {
                nonneg(p)?;
                if p.is_infinite() {
                    return Err(Error::InvalidInstance("job size must be finite".into()));
                }
            }
            (MachineModel::Restricted { .. }, JobProfile::Restricted { size, allowed }) => {
                nonneg(size)?;
                if size.is_infinite() || allowed.is_empty() {
                    return Err(Error::InvalidInstance(
                        "restricted job needs a finite size and a nonempty allowed set".into(),
                    ));
                }
                if let Some(&i) = allowed.iter().find(|&&i| i >= m) {
                    return Err(Error::MachineOutOfRange { index: i, m });
                }
            }
            (MachineModel::Unrelated { .. }, JobProfile::Times(t)) => {
                if t.len() != m {
                    return Err(Error::InvalidInstance(format!(
                        "processing row has {} entries, expected {m}",
                        t.len()
                    )));
                }
                t.iter().try_for_each(nonneg)?;
                if t.iter().all(Scalar::is_infinite) {
                    return Err(Error::InvalidInstance("job is infinite on every machine".into()));
                }
            }
            _ => {
                return Err(Error::InvalidInstance(format!(
                    "job profile {self:?} does not fit the {} model",
                    model.kind()
                )))
            }
        }
        Ok(())
    }
}

/// `p_ij`: the time job `profile` takes on machine `machine`.
pub fn processing_time(model: &MachineModel, profile: &JobProfile, machine: usize) -> Scalar {
    match profile {
        JobProfile::Size(p) => p / &model.speed(machine),
        JobProfile::Restricted { size, allowed } => {
            if allowed.contains(&machine) {
                size.clone()
            } else {
                Scalar::Infinity
            }
        }
        JobProfile::Times(t) => t[machine].clone(),
    }
}

/// All `p_ij` for one job.
pub fn processing_row(model: &MachineModel, profile: &JobProfile) -> Vec<Scalar> {
    (0..model.m()).map(|i| processing_time(model, profile, i)).collect()
}

/// A machine model, an arrival sequence and the accuracy parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub model: MachineModel,
    pub jobs: Vec<JobProfile>,
    pub epsilon: Scalar,
}

impl Instance {
    pub fn default_epsilon() -> Scalar {
        Scalar::ratio(1, 10)
    }

    pub fn new(model: MachineModel, jobs: Vec<JobProfile>, epsilon: Scalar) -> Result<Self> {
        let inst = Instance { model, jobs, epsilon };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !self.epsilon.is_positive() || self.epsilon.is_infinite() {
            return Err(Error::InvalidInstance(format!("epsilon {} must be positive", self.epsilon)));
        }
        for (j, job) in self.jobs.iter().enumerate() {
            job.check(&self.model)
                .map_err(|e| Error::InvalidInstance(format!("job {}: {e}", j + 1)))?;
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.model.m()
    }

    pub fn n(&self) -> usize {
        self.jobs.len()
    }

    pub fn time(&self, job: usize, machine: usize) -> Scalar {
        processing_time(&self.model, &self.jobs[job], machine)
    }

    /// Makespan of a complete assignment (`assignment[j]` is job `j`'s machine).
    pub fn makespan_of(&self, assignment: &[usize]) -> Result<Scalar> {
        if assignment.len() != self.n() {
            return Err(Error::InvalidInstance(format!(
                "assignment covers {} jobs, instance has {}",
                assignment.len(),
                self.n()
            )));
        }
        let mut loads = vec![Scalar::zero(); self.m()];
        for (j, &i) in assignment.iter().enumerate() {
            if i >= self.m() {
                return Err(Error::MachineOutOfRange { index: i, m: self.m() });
            }
            let p = self.time(j, i);
            if p.is_infinite() {
                return Err(Error::InfiniteAssignment { job: j, machine: i });
            }
            loads[i] += &p;
        }
        Ok(loads.into_iter().max().unwrap_or_default())
    }
}

/// Real loads, virtual (per-phase) loads and the job to machine map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadState {
    pub loads: Vec<Scalar>,
    pub virtual_loads: Vec<Scalar>,
    pub assignment: BTreeMap<usize, usize>,
}

impl LoadState {
    pub fn new(m: usize) -> Self {
        LoadState {
            loads: vec![Scalar::zero(); m],
            virtual_loads: vec![Scalar::zero(); m],
            assignment: BTreeMap::new(),
        }
    }

    pub fn m(&self) -> usize {
        self.loads.len()
    }

    /// Adds `p` to machine `machine`; also to its virtual load when `count_virtual`.
    pub fn apply_assignment(
        &mut self,
        job: usize,
        machine: usize,
        p: &Scalar,
        count_virtual: bool,
    ) -> Result<()> {
        if machine >= self.m() {
            return Err(Error::MachineOutOfRange { index: machine, m: self.m() });
        }
        if p.is_infinite() {
            return Err(Error::InfiniteAssignment { job, machine });
        }
        self.loads[machine] += p;
        if count_virtual {
            self.virtual_loads[machine] += p;
        }
        self.assignment.insert(job, machine);
        Ok(())
    }

    pub fn reset_virtual(&mut self) {
        self.virtual_loads.iter_mut().for_each(|v| *v = Scalar::zero());
    }

    pub fn makespan(&self) -> Scalar {
        self.loads.iter().max().cloned().unwrap_or_default()
    }

    /// Recomputes real loads from the assignment map.
    pub fn recomputed_loads(&self, instance: &Instance) -> Vec<Scalar> {
        let mut loads = vec![Scalar::zero(); self.m()];
        for (&j, &i) in &self.assignment {
            loads[i] += &instance.time(j, i);
        }
        loads
    }
}

/// `r_i`: among machines with the speed of `machine`, the one with least
/// virtual load, lowest index on ties.
pub fn representative(state: &LoadState, model: &MachineModel, machine: usize) -> usize {
    representative_of(&state.virtual_loads, model, machine)
}

pub(crate) fn representative_of(virtual_loads: &[Scalar], model: &MachineModel, machine: usize) -> usize {
    let speed = model.speed(machine);
    (0..model.m())
        .filter(|&k| model.speed(k) == speed)
        .min_by(|&a, &b| virtual_loads[a].cmp(&virtual_loads[b]).then(a.cmp(&b)))
        .expect("machine is its own speed class")
}
