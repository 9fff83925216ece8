//! JSON instance files and certified-instance files.
//!
//! Rationals are always written as `"num/den"` strings and machines as
//! one-based numbers.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, JobProfile, MachineModel, ModelKind};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speeds: Option<Vec<Scalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Scalar>,
    pub jobs: Vec<JobEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JobEntry {
    Size(Scalar),
    Restricted { size: Scalar, allowed: Vec<usize> },
    Times { times: Vec<Scalar> },
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        let speeds = match &inst.model {
            MachineModel::Related { speeds } => Some(speeds.clone()),
            _ => None,
        };
        let jobs = inst
            .jobs
            .iter()
            .map(|j| match j {
                JobProfile::Size(p) => JobEntry::Size(p.clone()),
                JobProfile::Restricted { size, allowed } => JobEntry::Restricted {
                    size: size.clone(),
                    allowed: allowed.iter().map(|i| i + 1).collect(),
                },
                JobProfile::Times(t) => JobEntry::Times { times: t.clone() },
            })
            .collect();
        InstanceFile {
            model: inst.model.kind().to_string(),
            m: Some(inst.m()),
            speeds,
            epsilon: Some(inst.epsilon.clone()),
            jobs,
        }
    }

    pub fn to_instance(&self) -> Result<Instance> {
        let kind: ModelKind = self.model.parse()?;
        let need_m = || {
            self.m
                .ok_or_else(|| Error::InvalidInstance(format!("{} model needs \"m\"", kind)))
        };
        let model = match kind {
            ModelKind::Related => {
                let speeds = self
                    .speeds
                    .clone()
                    .ok_or_else(|| Error::InvalidInstance("related model needs \"speeds\"".into()))?;
                if let Some(m) = self.m {
                    if m != speeds.len() {
                        return Err(Error::InvalidInstance(format!(
                            "m = {m} but {} speeds given",
                            speeds.len()
                        )));
                    }
                }
                MachineModel::Related { speeds }
            }
            ModelKind::Identical => MachineModel::Identical { m: need_m()? },
            ModelKind::Restricted => MachineModel::Restricted { m: need_m()? },
            ModelKind::Unrelated => MachineModel::Unrelated { m: need_m()? },
        };
        let jobs = self
            .jobs
            .iter()
            .map(|e| match e {
                JobEntry::Size(p) => Ok(JobProfile::Size(p.clone())),
                JobEntry::Restricted { size, allowed } => {
                    let allowed = allowed
                        .iter()
                        .map(|&i| {
                            i.checked_sub(1)
                                .ok_or_else(|| Error::InvalidInstance("machine numbers start at 1".into()))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(JobProfile::Restricted { size: size.clone(), allowed })
                }
                JobEntry::Times { times } => Ok(JobProfile::Times(times.clone())),
            })
            .collect::<Result<Vec<_>>>()?;
        let epsilon = self.epsilon.clone().unwrap_or_else(Instance::default_epsilon);
        Instance::new(model, jobs, epsilon)
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text)?;
    file.to_instance()
}

pub fn instance_to_json(inst: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_instance(inst)).expect("instance serializes")
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    parse_instance(&fs::read_to_string(path)?)
}

pub fn write_instance(path: impl AsRef<Path>, inst: &Instance) -> Result<()> {
    fs::write(path, instance_to_json(inst) + "\n")?;
    Ok(())
}

/// An instance bundled with an assignment that certifies an upper bound on OPT.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertifiedInstance {
    pub instance: Instance,
    /// Zero-based machine per job.
    pub witness: Vec<usize>,
    pub claimed_opt_bound: Scalar,
}

impl CertifiedInstance {
    pub fn witness_makespan(&self) -> Result<Scalar> {
        self.instance.makespan_of(&self.witness)
    }

    /// The witness is feasible and its makespan does not exceed the claimed bound.
    pub fn verify(&self) -> Result<Scalar> {
        let ms = self.witness_makespan()?;
        if ms > self.claimed_opt_bound {
            return Err(Error::InvalidInstance(format!(
                "witness makespan {ms} exceeds claimed bound {}",
                self.claimed_opt_bound
            )));
        }
        Ok(ms)
    }
}

#[derive(Serialize, Deserialize)]
struct CertifiedFile {
    #[serde(flatten)]
    instance: InstanceFile,
    witness: Vec<usize>,
    claimed_opt_bound: Scalar,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    witness_makespan: Option<Scalar>,
}

pub fn certified_to_json(c: &CertifiedInstance) -> Result<String> {
    let file = CertifiedFile {
        instance: InstanceFile::from_instance(&c.instance),
        witness: c.witness.iter().map(|i| i + 1).collect(),
        claimed_opt_bound: c.claimed_opt_bound.clone(),
        witness_makespan: Some(c.witness_makespan()?),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn parse_certified(text: &str) -> Result<CertifiedInstance> {
    let file: CertifiedFile = serde_json::from_str(text)?;
    let witness = file
        .witness
        .iter()
        .map(|&i| i.checked_sub(1).ok_or_else(|| Error::Parse("witness machines start at 1".into())))
        .collect::<Result<Vec<_>>>()?;
    Ok(CertifiedInstance {
        instance: file.instance.to_instance()?,
        witness,
        claimed_opt_bound: file.claimed_opt_bound,
    })
}
