//! Parameter sweeps: many seeded instances per axis value, every scheduler on
//! the same instance, aggregated into means with 95% confidence intervals.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{solve, SchedulerId};
use crate::error::{Error, Result};
use crate::instance::{generate_instance, GeneratorConfig};

pub const RESULTS_HEADER: [&str; 7] = ["axis", "value", "scheduler", "mean_sum_cct_s", "ci95_s", "mean_runtime_s", "n"];
pub const RAW_HEADER: [&str; 7] = ["axis", "value", "iteration", "seed", "scheduler", "sum_cct_s", "runtime_s"];
pub const COMPARE_HEADER: [&str; 6] = [
    "axis",
    "value",
    "scheduler",
    "mean_sum_cct_s",
    "scasa_mean_sum_cct_s",
    "reduction_pct",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "sources")]
    Sources,
    #[serde(rename = "flows")]
    Flows,
    #[serde(rename = "coflows")]
    Coflows,
    #[serde(rename = "release_scale")]
    ReleaseScale,
    /// Device count with the coflow count held at the base value.
    #[serde(rename = "devices")]
    Devices,
    /// Device count with half as many coflows.
    #[serde(rename = "devices_and_coflows_2to1")]
    DevicesAndCoflows2to1,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 6] = [
        SweepAxis::Sources,
        SweepAxis::Flows,
        SweepAxis::Coflows,
        SweepAxis::ReleaseScale,
        SweepAxis::Devices,
        SweepAxis::DevicesAndCoflows2to1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Sources => "sources",
            SweepAxis::Flows => "flows",
            SweepAxis::Coflows => "coflows",
            SweepAxis::ReleaseScale => "release_scale",
            SweepAxis::Devices => "devices",
            SweepAxis::DevicesAndCoflows2to1 => "devices_and_coflows_2to1",
        }
    }

    /// The value grid used by the standard experiments.
    pub fn default_values(self) -> Vec<f64> {
        let v: &[f64] = match self {
            SweepAxis::Sources | SweepAxis::Flows => &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            SweepAxis::Coflows => &[10.0, 15.0, 20.0, 25.0, 30.0],
            SweepAxis::ReleaseScale => &[1.0, 2.0, 3.0, 4.0, 5.0],
            SweepAxis::Devices => &[30.0, 60.0, 90.0, 120.0, 150.0],
            SweepAxis::DevicesAndCoflows2to1 => &[20.0, 40.0, 60.0, 80.0, 100.0],
        };
        v.to_vec()
    }

    /// Base config with this axis set to `value`.
    pub fn apply(self, base: &GeneratorConfig, value: f64) -> Result<GeneratorConfig> {
        let count = || -> Result<usize> {
            if value.fract() == 0.0 && value >= 1.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(Error::InvalidSweep(format!("{} needs positive integer values, got {value}", self.name())))
            }
        };
        let mut config = base.clone();
        match self {
            SweepAxis::Sources => config.sources_per_flow = count()?,
            SweepAxis::Flows => config.flows_per_coflow = count()?,
            SweepAxis::Coflows => config.num_coflows = count()?,
            SweepAxis::ReleaseScale => {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(Error::InvalidSweep(format!("release_scale must be finite and >= 0, got {value}")));
                }
                config.release_scale = value;
            }
            SweepAxis::Devices => config.num_devices = count()?,
            SweepAxis::DevicesAndCoflows2to1 => {
                let devices = count()?;
                if devices % 2 != 0 {
                    return Err(Error::InvalidSweep(format!("2:1 axis needs even device counts, got {devices}")));
                }
                config.num_devices = devices;
                config.num_coflows = devices / 2;
            }
        }
        config.validate().map_err(|e| Error::InvalidSweep(format!("{}={value}: {e}", self.name())))?;
        Ok(config)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| Error::InvalidSweep(format!("unknown axis `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub base: GeneratorConfig,
    pub iterations: usize,
    pub schedulers: Vec<SchedulerId>,
}

impl SweepSpec {
    /// Spec over the axis' default grid with all schedulers.
    pub fn standard(axis: SweepAxis, base: GeneratorConfig, iterations: usize) -> Self {
        Self {
            axis,
            values: axis.default_values(),
            base,
            iterations,
            schedulers: SchedulerId::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidSweep("no axis values".into()));
        }
        if self.values.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::InvalidSweep("axis values must be strictly increasing".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidSweep("iterations must be at least 1".into()));
        }
        if self.schedulers.is_empty() {
            return Err(Error::InvalidSweep("no schedulers".into()));
        }
        for (k, a) in self.schedulers.iter().enumerate() {
            if self.schedulers[..k].contains(a) {
                return Err(Error::InvalidSweep(format!("scheduler {a} listed twice")));
            }
        }
        for &v in &self.values {
            self.axis.apply(&self.base, v)?;
        }
        Ok(())
    }

    pub fn cell_seed(&self, value_index: usize, iteration: usize) -> u64 {
        derive_seed(self.base.seed, value_index as u64, iteration as u64)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Instance seed for one (axis value, iteration) cell.
pub fn derive_seed(base: u64, value_index: u64, iteration: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ value_index) ^ iteration)
}

/// Seed handed to randomized schedulers, kept apart from the instance seed.
pub fn scheduler_seed(cell_seed: u64) -> u64 {
    splitmix64(cell_seed ^ 0x5343_4845_4455_4C45)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub scheduler: SchedulerId,
    pub mean_sum_cct: f64,
    pub ci95: f64,
    /// Seconds of wall time per scheduler call; `None` when read from a
    /// results file written without timings.
    pub mean_runtime: Option<f64>,
    pub n: usize,
    /// Per-iteration sum of CCT, in iteration order. Empty when read back.
    pub raw: Vec<f64>,
    pub runtimes: Vec<f64>,
}

/// Mean and 95% half-width under the normal approximation.
pub fn mean_ci95(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * var.sqrt() / n.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepOptions {
    /// Worker threads; 1 runs inline.
    pub jobs: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { jobs: 1 }
    }
}

// per scheduler: (sum of CCT, runtime)
type CellResult = Result<Vec<(f64, f64)>>;

fn run_cell(spec: &SweepSpec, vi: usize, iteration: usize) -> CellResult {
    let value = spec.values[vi];
    let wrap = |e: Error| Error::Sweep {
        axis: spec.axis.name().to_string(),
        value,
        iteration,
        source: Box::new(e),
    };
    let seed = spec.cell_seed(vi, iteration);
    let config = spec.axis.apply(&spec.base, value).map_err(wrap)?.with_seed(seed);
    let instance = generate_instance(&config).map_err(wrap)?;
    Ok(spec
        .schedulers
        .iter()
        .map(|&id| {
            let t = Instant::now();
            let schedule = solve(&instance, id, scheduler_seed(seed));
            (schedule.sum_cct(), t.elapsed().as_secs_f64())
        })
        .collect())
}

/// Runs every cell and aggregates one row per (value, scheduler), ordered by
/// value then by the spec's scheduler list. The result does not depend on
/// `options.jobs`.
pub fn run_sweep(spec: &SweepSpec, options: SweepOptions) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let cells: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|vi| (0..spec.iterations).map(move |it| (vi, it)))
        .collect();
    let results: Vec<CellResult> = if options.jobs <= 1 {
        cells.iter().map(|&(vi, it)| run_cell(spec, vi, it)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .map_err(|e| Error::InvalidSweep(format!("cannot start {} workers: {e}", options.jobs)))?;
        pool.install(|| cells.par_iter().map(|&(vi, it)| run_cell(spec, vi, it)).collect())
    };
    let results: Vec<Vec<(f64, f64)>> = results.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(spec.values.len() * spec.schedulers.len());
    for (vi, &value) in spec.values.iter().enumerate() {
        let block = &results[vi * spec.iterations..(vi + 1) * spec.iterations];
        for (k, &scheduler) in spec.schedulers.iter().enumerate() {
            let raw: Vec<f64> = block.iter().map(|cell| cell[k].0).collect();
            let runtimes: Vec<f64> = block.iter().map(|cell| cell[k].1).collect();
            let (mean_sum_cct, ci95) = mean_ci95(&raw);
            rows.push(ResultRow {
                axis: spec.axis,
                value,
                scheduler,
                mean_sum_cct,
                ci95,
                mean_runtime: Some(runtimes.iter().sum::<f64>() / runtimes.len() as f64),
                n: raw.len(),
                raw,
                runtimes,
            });
        }
    }
    Ok(rows)
}

/// Writes the results table. Runtimes are wall-clock and so vary between
/// runs; they are left blank unless `timing` is set.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], timing: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        let runtime = match (timing, r.mean_runtime) {
            (true, Some(t)) => t.to_string(),
            _ => String::new(),
        };
        w.write_record([
            r.axis.name().to_string(),
            r.value.to_string(),
            r.scheduler.name().to_string(),
            r.mean_sum_cct.to_string(),
            r.ci95.to_string(),
            runtime,
            r.n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-seed values, one line per (value, iteration, scheduler).
pub fn write_raw_csv<W: Write>(spec: &SweepSpec, rows: &[ResultRow], timing: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RAW_HEADER)?;
    for r in rows {
        let vi = spec.values.iter().position(|&v| v == r.value).expect("row value comes from the spec");
        for (it, &sum) in r.raw.iter().enumerate() {
            let runtime = if timing { r.runtimes[it].to_string() } else { String::new() };
            w.write_record([
                r.axis.name().to_string(),
                r.value.to_string(),
                it.to_string(),
                spec.cell_seed(vi, it).to_string(),
                r.scheduler.name().to_string(),
                sum.to_string(),
                runtime,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct ResultRecord {
    axis: String,
    value: f64,
    scheduler: String,
    mean_sum_cct_s: f64,
    ci95_s: f64,
    mean_runtime_s: Option<f64>,
    n: usize,
}

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(RESULTS_HEADER) {
        return Err(Error::Compare(format!(
            "unexpected results header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader
        .deserialize::<ResultRecord>()
        .map(|rec| {
            let rec = rec?;
            Ok(ResultRow {
                axis: rec.axis.parse()?,
                value: rec.value,
                scheduler: rec.scheduler.parse()?,
                mean_sum_cct: rec.mean_sum_cct_s,
                ci95: rec.ci95_s,
                mean_runtime: rec.mean_runtime_s,
                n: rec.n,
                raw: Vec::new(),
                runtimes: Vec::new(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub axis: SweepAxis,
    pub value: f64,
    pub scheduler: SchedulerId,
    pub mean_other: f64,
    pub mean_scasa: f64,
    /// `(other - scasa) / other * 100`.
    pub reduction_pct: f64,
}

pub fn reduction_pct(mean_other: f64, mean_scasa: f64) -> f64 {
    (mean_other - mean_scasa) / mean_other * 100.0
}

/// Percentage reduction of SCASA's mean against every other scheduler at
/// each axis value. Every scheduler must cover exactly SCASA's axis values.
pub fn compare(rows: &[ResultRow]) -> Result<Vec<Reduction>> {
    let key = |r: &ResultRow| (r.axis, r.value.to_bits());
    let scasa: Vec<&ResultRow> = rows.iter().filter(|r| r.scheduler == SchedulerId::Scasa).collect();
    if scasa.is_empty() {
        return Err(Error::Compare("no SCASA rows".into()));
    }
    let mut scasa_mean = HashMap::new();
    for r in &scasa {
        if scasa_mean.insert(key(r), r.mean_sum_cct).is_some() {
            return Err(Error::Compare(format!("duplicate SCASA row at {}={}", r.axis, r.value)));
        }
    }
    let mut others: Vec<SchedulerId> = Vec::new();
    for r in rows {
        if r.scheduler != SchedulerId::Scasa && !others.contains(&r.scheduler) {
            others.push(r.scheduler);
        }
    }
    if others.is_empty() {
        return Err(Error::Compare("no scheduler to compare SCASA against".into()));
    }
    let mut by_key: HashMap<(SchedulerId, (SweepAxis, u64)), f64> = HashMap::new();
    for &id in &others {
        let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.scheduler == id).collect();
        for r in &mine {
            if !scasa_mean.contains_key(&key(r)) {
                return Err(Error::Compare(format!("{id} has {}={} but SCASA does not", r.axis, r.value)));
            }
            if by_key.insert((id, key(r)), r.mean_sum_cct).is_some() {
                return Err(Error::Compare(format!("duplicate {id} row at {}={}", r.axis, r.value)));
            }
        }
        if mine.len() != scasa.len() {
            return Err(Error::Compare(format!(
                "{id} covers {} axis values, SCASA covers {}",
                mine.len(),
                scasa.len()
            )));
        }
    }
    let mut out = Vec::new();
    for s in &scasa {
        for &id in &others {
            let other = by_key[&(id, key(s))];
            out.push(Reduction {
                axis: s.axis,
                value: s.value,
                scheduler: id,
                mean_other: other,
                mean_scasa: s.mean_sum_cct,
                reduction_pct: reduction_pct(other, s.mean_sum_cct),
            });
        }
    }
    Ok(out)
}

pub fn write_comparison_csv<W: Write>(reductions: &[Reduction], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COMPARE_HEADER)?;
    for r in reductions {
        w.write_record([
            r.axis.name().to_string(),
            r.value.to_string(),
            r.scheduler.name().to_string(),
            r.mean_other.to_string(),
            r.mean_scasa.to_string(),
            r.reduction_pct.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
