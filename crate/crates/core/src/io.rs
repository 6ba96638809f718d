//! JSON file formats for instances, schedules and sweep specs. Every file
//! carries a `format` tag and a `format_version`.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::SweepSpec;
use crate::instance::{Coflow, Device, FlowId, GeneratorConfig, Link, LinkId, NetworkGraph, ProblemInstance};
use crate::schedule::{EvaluatedSchedule, LinkOrders, PriorityOrder, Schedule, SourceSelection};

pub const FORMAT_VERSION: u32 = 1;
pub const INSTANCE_FORMAT: &str = "coflow-instance";
pub const SCHEDULE_FORMAT: &str = "coflow-schedule";
pub const SWEEP_FORMAT: &str = "coflow-sweep";

#[derive(Deserialize)]
struct Header {
    format: String,
    format_version: u32,
}

fn check_header(text: &str, expected: &'static str) -> Result<()> {
    let header: Header = serde_json::from_str(text)?;
    if header.format != expected {
        return Err(Error::FileKind {
            expected,
            found: header.format,
        });
    }
    if header.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion {
            kind: expected,
            found: header.format_version,
            expected: FORMAT_VERSION,
        });
    }
    Ok(())
}

fn parse<T: DeserializeOwned>(text: &str, expected: &'static str) -> Result<T> {
    check_header(text, expected)?;
    Ok(serde_json::from_str(text)?)
}

fn render<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Instance document: the network, the coflows with their source options
/// and routed paths, and the generator config when there is one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub format: String,
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<GeneratorConfig>,
    pub devices: Vec<Device>,
    pub links: Vec<Link>,
    pub coflows: Vec<Coflow>,
}

impl InstanceFile {
    pub fn from_instance(instance: &ProblemInstance) -> Self {
        Self {
            format: INSTANCE_FORMAT.into(),
            format_version: FORMAT_VERSION,
            config: instance.config().cloned(),
            devices: instance.network().devices().to_vec(),
            links: instance.network().links().to_vec(),
            coflows: instance.coflows().to_vec(),
        }
    }

    pub fn into_instance(self) -> Result<ProblemInstance> {
        let network = NetworkGraph::new(self.devices, self.links)?;
        ProblemInstance::new(network, self.coflows, self.config)
    }
}

pub fn instance_to_json(instance: &ProblemInstance) -> Result<String> {
    render(&InstanceFile::from_instance(instance))
}

pub fn instance_from_json(text: &str) -> Result<ProblemInstance> {
    parse::<InstanceFile>(text, INSTANCE_FORMAT)?.into_instance()
}

pub fn write_instance(path: impl AsRef<Path>, instance: &ProblemInstance) -> Result<()> {
    Ok(fs::write(path, instance_to_json(instance)?)?)
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    instance_from_json(&fs::read_to_string(path)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkOverride {
    pub link: LinkId,
    pub order: Vec<FlowId>,
}

/// Schedule document. `link_overrides` lists links whose sequence differs
/// from the one the priority induces; `timing` is the evaluated schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub format: String,
    pub format_version: u32,
    pub sum_cct: f64,
    pub sources: Vec<usize>,
    pub priority: Vec<FlowId>,
    #[serde(default)]
    pub link_overrides: Vec<LinkOverride>,
    pub timing: EvaluatedSchedule,
}

impl ScheduleFile {
    pub fn from_schedule(instance: &ProblemInstance, schedule: &Schedule) -> Self {
        let ids = instance.flow_ids();
        Self {
            format: SCHEDULE_FORMAT.into(),
            format_version: FORMAT_VERSION,
            sum_cct: schedule.sum_cct(),
            sources: schedule.sources.as_slice().to_vec(),
            priority: schedule.priority.as_slice().to_vec(),
            link_overrides: schedule
                .link_overrides(instance)
                .into_iter()
                .map(|(link, seq)| LinkOverride {
                    link,
                    order: seq.into_iter().map(|f| ids[f]).collect(),
                })
                .collect(),
            timing: schedule.evaluated.clone(),
        }
    }

    pub fn selection(&self, instance: &ProblemInstance) -> Result<SourceSelection> {
        SourceSelection::new(instance, self.sources.clone())
    }

    /// Rebuilds the schedule and re-evaluates it; the stored timing is not
    /// trusted.
    pub fn to_schedule(&self, instance: &ProblemInstance) -> Result<Schedule> {
        let sources = self.selection(instance)?;
        let priority = PriorityOrder::new(instance, self.priority.clone())?;
        let induced = LinkOrders::from_priority(instance, &sources, &priority);
        let mut seqs: Vec<Vec<usize>> = induced.iter().map(|(_, s)| s.to_vec()).collect();
        for o in &self.link_overrides {
            if o.link.0 >= seqs.len() {
                return Err(Error::InvalidSchedule(format!("override for unknown link {}", o.link.0)));
            }
            if let Some(bad) = o.order.iter().find(|id| !instance.contains(**id)) {
                return Err(Error::InvalidSchedule(format!("override lists unknown flow {bad}")));
            }
            seqs[o.link.0] = o.order.iter().map(|&id| instance.flat_index(id)).collect();
        }
        let orders = LinkOrders::new(instance, &sources, seqs)?;
        Schedule::with_link_orders(instance, sources, priority, orders)
    }
}

pub fn schedule_to_json(instance: &ProblemInstance, schedule: &Schedule) -> Result<String> {
    render(&ScheduleFile::from_schedule(instance, schedule))
}

pub fn schedule_file_from_json(text: &str) -> Result<ScheduleFile> {
    parse(text, SCHEDULE_FORMAT)
}

pub fn write_schedule(path: impl AsRef<Path>, instance: &ProblemInstance, schedule: &Schedule) -> Result<()> {
    Ok(fs::write(path, schedule_to_json(instance, schedule)?)?)
}

pub fn read_schedule_file(path: impl AsRef<Path>) -> Result<ScheduleFile> {
    schedule_file_from_json(&fs::read_to_string(path)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFile {
    pub format: String,
    pub format_version: u32,
    #[serde(flatten)]
    pub spec: SweepSpec,
}

pub fn sweep_to_json(spec: &SweepSpec) -> Result<String> {
    render(&SweepFile {
        format: SWEEP_FORMAT.into(),
        format_version: FORMAT_VERSION,
        spec: spec.clone(),
    })
}

pub fn sweep_from_json(text: &str) -> Result<SweepSpec> {
    let spec = parse::<SweepFile>(text, SWEEP_FORMAT)?.spec;
    spec.validate()?;
    Ok(spec)
}

pub fn read_sweep(path: impl AsRef<Path>) -> Result<SweepSpec> {
    sweep_from_json(&fs::read_to_string(path)?)
}
