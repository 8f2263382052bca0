//! CSV outputs. Every file starts with `# ` lines carrying the run
//! configuration and input digests.

use std::io::Write;

use crux_core::sim::{BucketStats, WorkloadOutcome};
use crux_core::{InteractionRecord, NetworkMap};

use crate::config::RunConfig;
use crate::Result;

pub const RESULTS_HEADER: [&str; 9] = [
    "writer",
    "reader",
    "key",
    "direct_ms",
    "crux_ms",
    "baseline_ms",
    "meet_landmark",
    "meet_ring",
    "stretch",
];

/// Provenance written at the top of each output.
#[derive(Clone, Debug)]
pub struct Preamble<'a> {
    pub config: &'a RunConfig,
    pub digests: Vec<(&'static str, String)>,
}

impl Preamble<'_> {
    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "# config: {}", self.config.to_json_line())?;
        for (name, digest) in &self.digests {
            writeln!(out, "# {name}: {digest}")?;
        }
        Ok(())
    }
}

fn body<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(out)
}

pub fn write_results<W: Write>(
    mut out: W,
    pre: &Preamble<'_>,
    map: &NetworkMap,
    records: &[InteractionRecord],
) -> Result<()> {
    pre.write(&mut out)?;
    let mut w = body(out);
    w.write_record(RESULTS_HEADER)?;
    for r in records {
        w.write_record([
            map.id(r.writer),
            map.id(r.reader),
            r.key.as_str(),
            &r.direct_ms.to_string(),
            &r.crux_ms.to_string(),
            &r.baseline_ms.to_string(),
            map.id(r.meet_instance.landmark),
            &r.meet_instance.ring.0.to_string(),
            &r.stretch.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ops<W: Write>(
    mut out: W,
    pre: &Preamble<'_>,
    map: &NetworkMap,
    outcome: &WorkloadOutcome,
) -> Result<()> {
    pre.write(&mut out)?;
    let mut w = body(out);
    w.write_record(["node", "crux_ops", "baseline_ops"])?;
    for u in map.nodes() {
        w.write_record([
            map.id(u),
            &outcome.crux_ops[u.index()].to_string(),
            &outcome.baseline_ops[u.index()].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_stats<W: Write>(
    mut out: W,
    pre: &Preamble<'_>,
    buckets: &[BucketStats],
) -> Result<()> {
    pre.write(&mut out)?;
    let mut w = body(out);
    w.write_record([
        "bucket",
        "lo_ms",
        "hi_ms",
        "count",
        "crux_median_ms",
        "crux_p90_ms",
        "baseline_median_ms",
        "baseline_p90_ms",
    ])?;
    for b in buckets {
        w.write_record([
            b.index.to_string(),
            b.lo_ms.to_string(),
            b.hi_ms.to_string(),
            b.count.to_string(),
            b.crux_median.to_string(),
            b.crux_p90.to_string(),
            b.baseline_median.to_string(),
            b.baseline_p90.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub k: u32,
    pub seed: u64,
    pub n: usize,
    pub expected_bunch_size: f64,
    pub mean_bunch_size: f64,
    pub max_bunch_size: usize,
    pub mean_memberships: f64,
    pub max_memberships: usize,
    pub instances: usize,
}

pub fn write_sweep<W: Write>(mut out: W, pre: &Preamble<'_>, rows: &[SweepRow]) -> Result<()> {
    pre.write(&mut out)?;
    let mut w = body(out);
    w.write_record([
        "k",
        "seed",
        "n",
        "expected_bunch_size",
        "mean_bunch_size",
        "max_bunch_size",
        "mean_memberships",
        "max_memberships",
        "instances",
    ])?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            r.seed.to_string(),
            r.n.to_string(),
            r.expected_bunch_size.to_string(),
            r.mean_bunch_size.to_string(),
            r.max_bunch_size.to_string(),
            r.mean_memberships.to_string(),
            r.max_memberships.to_string(),
            r.instances.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
