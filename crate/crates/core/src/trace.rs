//! Per-arrival trace records and their CSV form.
//!
//! Columns: `step,job,model,prices,costs,chosen,new_phase,lambda,loads_after,virtual_after`.
//! Vectors are `;`-joined `num/den`/`inf` values; fields a strategy does not
//! produce (prices for a scheduler, lambda before the first estimate) are empty.
//! `job` and `chosen` are one-based.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::scalar::{self, Scalar};

pub const TRACE_HEADER: [&str; 10] = [
    "step",
    "job",
    "model",
    "prices",
    "costs",
    "chosen",
    "new_phase",
    "lambda",
    "loads_after",
    "virtual_after",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    /// One-based step counter.
    pub step: usize,
    /// Zero-based job index.
    pub job: usize,
    pub prices: Option<Vec<Scalar>>,
    pub costs: Option<Vec<Scalar>>,
    /// Zero-based machine.
    pub chosen: usize,
    pub new_phase: bool,
    pub lambda: Option<Scalar>,
    pub loads_after: Vec<Scalar>,
    pub virtual_after: Option<Vec<Scalar>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub model: Option<ModelKind>,
    pub steps: Vec<TraceStep>,
}

fn opt_vec(v: &Option<Vec<Scalar>>) -> String {
    v.as_deref().map(scalar::join).unwrap_or_default()
}

fn parse_opt_vec(field: &str) -> Result<Option<Vec<Scalar>>> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        Ok(Some(scalar::split(field)?))
    }
}

impl Trace {
    pub fn new(model: ModelKind) -> Self {
        Trace { model: Some(model), steps: Vec::new() }
    }

    pub fn choices(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.chosen).collect()
    }

    pub fn makespan(&self) -> Scalar {
        self.steps
            .last()
            .and_then(|s| s.loads_after.iter().max().cloned())
            .unwrap_or_default()
    }

    pub fn phase_count(&self) -> usize {
        self.steps.iter().filter(|s| s.new_phase).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_HEADER)?;
        let model = self.model.map(|m| m.as_str()).unwrap_or("");
        for s in &self.steps {
            w.write_record([
                s.step.to_string(),
                (s.job + 1).to_string(),
                model.to_string(),
                opt_vec(&s.prices),
                opt_vec(&s.costs),
                (s.chosen + 1).to_string(),
                u8::from(s.new_phase).to_string(),
                s.lambda.as_ref().map(Scalar::to_string).unwrap_or_default(),
                scalar::join(&s.loads_after),
                opt_vec(&s.virtual_after),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Trace> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header != TRACE_HEADER {
            return Err(Error::Parse(format!("unexpected trace header {header:?}")));
        }
        let mut trace = Trace::default();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| Error::Parse(format!("trace row {}: bad {what}", line + 1));
            let index = |k: usize, what: &str| -> Result<usize> {
                rec[k].parse::<usize>().ok().filter(|&x| x >= 1).ok_or_else(|| bad(what))
            };
            let model: ModelKind = rec[2].parse()?;
            match trace.model {
                None => trace.model = Some(model),
                Some(prev) if prev != model => return Err(bad("model (changes mid-trace)")),
                _ => {}
            }
            let new_phase = match &rec[6] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("new_phase")),
            };
            let lambda = if rec[7].is_empty() { None } else { Some(rec[7].parse()?) };
            trace.steps.push(TraceStep {
                step: index(0, "step")?,
                job: index(1, "job")? - 1,
                prices: parse_opt_vec(&rec[3])?,
                costs: parse_opt_vec(&rec[4])?,
                chosen: index(5, "chosen")? - 1,
                new_phase,
                lambda,
                loads_after: scalar::split(&rec[8])?,
                virtual_after: parse_opt_vec(&rec[9])?,
            });
        }
        Ok(trace)
    }

    pub fn write_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Trace> {
        Trace::read_csv(std::fs::File::open(path)?)
    }

    /// Prices-only audit log: `step,m1,...,mM`, one row per step that posted prices.
    pub fn write_price_log<W: Write>(&self, out: W, m: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string()];
        header.extend((1..=m).map(|i| format!("m{i}")));
        w.write_record(&header)?;
        for s in &self.steps {
            if let Some(p) = &s.prices {
                let mut row = vec![s.step.to_string()];
                row.extend(p.iter().map(Scalar::to_string));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
