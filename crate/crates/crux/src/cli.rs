use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use crux_core::sim::{self, run_workload, Workload};
use crux_core::{
    synth_map, validate_with, Deployment, NetworkMap, Plugin, PluginKind, ReplicationPolicy,
    RingMode, SynthModel,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::mapio::{bytes_digest, load_map_file, map_digest, save_map_file, MapFormat};
use crate::planfile::{self, CheckSummary, OracleReportJson, PlanFile};
use crate::report::{self, Preamble, SweepRow};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "crux",
    version,
    about = "Plan and simulate locality-preserving deployments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a latency map and print a JSON report.
    Validate {
        #[command(flatten)]
        input: MapInput,
        #[arg(long = "rmin-ms", default_value_t = crux_core::DEFAULT_R_MIN_MS)]
        r_min_ms: f64,
    },
    /// Write a synthetic latency map.
    Synth {
        #[arg(long, default_value = "euclidean")]
        model: SynthModel,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        format: Option<MapFormat>,
    },
    /// Build a deployment plan.
    Plan {
        #[command(flatten)]
        input: MapInput,
        #[command(flatten)]
        planner: PlannerArgs,
        /// Plan JSON destination; stdout if omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Skip the brute-force checks.
        #[arg(long)]
        no_verify: bool,
        /// Full verification report with violation witnesses.
        #[arg(long)]
        oracle_out: Option<PathBuf>,
    },
    /// Run a workload through a plan and record interaction latencies.
    Simulate {
        #[command(flatten)]
        input: MapInput,
        #[arg(long)]
        plan: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        /// Results CSV destination; stdout if omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Per-node served operation counts.
        #[arg(long)]
        ops_out: Option<PathBuf>,
        /// Bucketed latency summary.
        #[arg(long)]
        stats_out: Option<PathBuf>,
    },
    /// Bunch and membership statistics across k values and seeds.
    Sweep {
        #[command(flatten)]
        input: MapInput,
        #[arg(long = "k", value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8")]
        k: Vec<u32>,
        /// `a..b` (exclusive) or a comma-separated list.
        #[arg(long, default_value = "0..10", value_parser = parse_seeds)]
        seeds: SeedList,
        #[arg(long = "rmin-ms", default_value_t = crux_core::DEFAULT_R_MIN_MS)]
        r_min_ms: f64,
        #[arg(long, default_value = "inclusive")]
        mode: RingMode,
        #[arg(long, default_value = "symmetric")]
        policy: ReplicationPolicy,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print one node's read and write targets as JSON.
    Targets {
        #[command(flatten)]
        input: MapInput,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        node: String,
    },
}

#[derive(Debug, Args)]
pub struct MapInput {
    #[arg(long)]
    pub map: PathBuf,
    /// Map file format; guessed from the extension if omitted.
    #[arg(long)]
    pub format: Option<MapFormat>,
}

impl MapInput {
    fn load(&self) -> Result<(NetworkMap, String)> {
        let map = load_map_file(&self.map, self.format)?;
        let digest = map_digest(&map);
        Ok((map, digest))
    }
}

#[derive(Debug, Args)]
pub struct PlannerArgs {
    #[arg(long, default_value_t = 5)]
    pub k: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "rmin-ms", default_value_t = crux_core::DEFAULT_R_MIN_MS)]
    pub r_min_ms: f64,
    #[arg(long, default_value = "inclusive")]
    pub mode: RingMode,
    #[arg(long, default_value = "symmetric")]
    pub policy: ReplicationPolicy,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value = "kv")]
    pub plugin: PluginKind,
    #[arg(long = "oa-ms", default_value_t = 0.0)]
    pub o_a_ms: f64,
    #[arg(long)]
    pub paced: bool,
    #[arg(long, default_value_t = 10)]
    pub ops_per_node: usize,
    #[arg(long, default_value_t = sim::DEFAULT_BUCKETS)]
    pub buckets: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

pub fn parse_seeds(s: &str) -> Result<SeedList, String> {
    let bad = |_| format!("invalid seed list `{s}`");
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(bad)?;
        let b: u64 = b.trim().parse().map_err(bad)?;
        if a >= b {
            return Err(format!("empty seed range `{s}`"));
        }
        return Ok(SeedList((a..b).collect()));
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(bad))
        .collect::<Result<_, _>>()
        .map(SeedList)
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Error::io(p, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn json_line<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializes");
    v.push(b'\n');
    v
}

#[derive(Serialize)]
struct ValidationJson {
    n: usize,
    symmetric: bool,
    zero_diagonal: bool,
    triangle_violations: u64,
    worst_violation_ratio: Option<f64>,
    /// `[u, v, w]` with `d(u,v) > d(u,w) + d(w,v)`.
    worst_violation: Option<[String; 3]>,
    diameter_ms: f64,
    r_min_ms: f64,
    radius_spread: f64,
    ring_count: u32,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { input, r_min_ms } => cmd_validate(&input, r_min_ms),
        Command::Synth {
            model,
            n,
            seed,
            out,
            format,
        } => {
            let map = synth_map(seed, n, model)?;
            save_map_file(&map, &out, format)
        }
        Command::Plan {
            input,
            planner,
            out,
            no_verify,
            oracle_out,
        } => cmd_plan(
            &input,
            &planner,
            out.as_deref(),
            !no_verify,
            oracle_out.as_deref(),
        ),
        Command::Simulate {
            input,
            plan,
            sim,
            out,
            ops_out,
            stats_out,
        } => cmd_simulate(
            &input,
            &plan,
            &sim,
            out.as_deref(),
            ops_out.as_deref(),
            stats_out.as_deref(),
        ),
        Command::Sweep {
            input,
            k,
            seeds,
            r_min_ms,
            mode,
            policy,
            out,
        } => {
            let base = RunConfig {
                r_min_ms,
                mode,
                policy,
                ..RunConfig::default()
            };
            cmd_sweep(&input, &k, &seeds.0, &base, out.as_deref())
        }
        Command::Targets { input, plan, node } => cmd_targets(&input, &plan, &node),
    }
}

pub fn cmd_validate(input: &MapInput, r_min_ms: f64) -> Result<()> {
    let (map, _) = input.load()?;
    let r = validate_with(&map, r_min_ms)?;
    let report = ValidationJson {
        n: r.n,
        symmetric: r.symmetric,
        zero_diagonal: r.zero_diagonal,
        triangle_violations: r.triangle_violations,
        worst_violation_ratio: r.worst_violation_ratio,
        worst_violation: r
            .worst_violation
            .map(|(u, v, w)| [map.id(u).into(), map.id(v).into(), map.id(w).into()]),
        diameter_ms: r.diameter_ms,
        r_min_ms: r.r_min_ms,
        radius_spread: r.radius_spread,
        ring_count: crux_core::radius_spread(&map, r_min_ms)?.ring_count(),
    };
    emit(None, &json_line(&report))
}

pub fn cmd_plan(
    input: &MapInput,
    planner: &PlannerArgs,
    out: Option<&Path>,
    verify: bool,
    oracle_out: Option<&Path>,
) -> Result<()> {
    let config = RunConfig {
        k: planner.k,
        seed: planner.seed,
        r_min_ms: planner.r_min_ms,
        mode: planner.mode,
        policy: planner.policy,
        ..RunConfig::default()
    };
    config.check()?;
    let (map, digest) = input.load()?;
    let dep = Deployment::plan(
        &map,
        config.k,
        config.seed,
        config.r_min_ms,
        config.mode,
        config.policy,
    )?;
    let mut plan = PlanFile::build(&dep, &config, &digest)?;

    let mut failed = Vec::new();
    if verify {
        let reports = planfile::verify(&dep)?;
        if !reports.is_empty() {
            plan.verification = Some(
                reports
                    .iter()
                    .map(|(name, r)| (name.clone(), CheckSummary::from(r)))
                    .collect(),
            );
        }
        for (name, r) in &reports {
            if !r.passed() {
                failed.push(format!("{name}: {} violations", r.violations.len()));
            }
        }
        if let Some(path) = oracle_out {
            let full: std::collections::BTreeMap<_, _> = reports
                .iter()
                .map(|(name, r)| (name.clone(), OracleReportJson::new(&map, r)))
                .collect();
            emit(Some(path), &json_line(&full))?;
        }
    }

    emit(out, plan.to_json().as_bytes())?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Invariant(failed.join("; ")))
    }
}

fn load_plan(path: &Path) -> Result<(PlanFile, String)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let plan: PlanFile = serde_json::from_slice(&bytes)?;
    Ok((plan, bytes_digest(&bytes)))
}

pub fn cmd_simulate(
    input: &MapInput,
    plan_path: &Path,
    args: &SimArgs,
    out: Option<&Path>,
    ops_out: Option<&Path>,
    stats_out: Option<&Path>,
) -> Result<()> {
    let (map, digest) = input.load()?;
    let (plan, plan_digest) = load_plan(plan_path)?;
    let config = RunConfig {
        plugin: args.plugin,
        o_a_ms: args.o_a_ms,
        paced: args.paced,
        ops_per_node: args.ops_per_node,
        bucket_count: args.buckets,
        ..plan.config.clone()
    };
    config.check()?;
    let dep = plan.deployment(&map, &digest)?;
    let plugin = Plugin::new(config.plugin, config.o_a_ms);
    let workload = Workload::generate(&map, config.seed, config.ops_per_node);
    let outcome = run_workload(&dep, &plugin, &workload, config.paced)?;

    let pre = Preamble {
        config: &config,
        digests: vec![("map_sha256", digest), ("plan_sha256", plan_digest)],
    };
    let mut buf = Vec::new();
    report::write_results(&mut buf, &pre, &map, &outcome.records)?;
    emit(out, &buf)?;
    if let Some(path) = ops_out {
        let mut buf = Vec::new();
        report::write_ops(&mut buf, &pre, &map, &outcome)?;
        emit(Some(path), &buf)?;
    }
    if let Some(path) = stats_out {
        let buckets = if outcome.records.is_empty() {
            Vec::new()
        } else {
            sim::stats(&outcome.records, config.bucket_count)?
        };
        let mut buf = Vec::new();
        report::write_stats(&mut buf, &pre, &buckets)?;
        emit(Some(path), &buf)?;
    }

    if config.plugin == PluginKind::Kv && !config.paced {
        check_kv_bound(&dep, &config, &outcome.records)?;
    }
    Ok(())
}

/// Eager kv interactions never exceed `16 s max(d, r_min) + 4 o_A`, where
/// `s` is the policy's stretch bound.
fn check_kv_bound(
    dep: &Deployment<'_>,
    config: &RunConfig,
    records: &[crux_core::InteractionRecord],
) -> Result<()> {
    let s = dep.policy.stretch_bound(dep.levels.k());
    let bad = records
        .iter()
        .filter(|r| {
            let bound = 16.0 * s * r.direct_ms.max(config.r_min_ms) + 4.0 * config.o_a_ms;
            r.crux_ms > bound * (1.0 + 1e-9)
        })
        .count();
    if bad == 0 {
        Ok(())
    } else {
        Err(Error::Invariant(format!(
            "{bad} interactions exceed the kv latency bound"
        )))
    }
}

pub fn cmd_sweep(
    input: &MapInput,
    ks: &[u32],
    seeds: &[u64],
    base: &RunConfig,
    out: Option<&Path>,
) -> Result<()> {
    let (map, digest) = input.load()?;
    let mut rows = Vec::with_capacity(ks.len() * seeds.len());
    for &k in ks {
        for &seed in seeds {
            let config = RunConfig {
                k,
                seed,
                ..base.clone()
            };
            config.check()?;
            let dep = Deployment::plan(&map, k, seed, config.r_min_ms, config.mode, config.policy)?;
            let s = planfile::summarize(&dep)?;
            rows.push(SweepRow {
                k,
                seed,
                n: s.n,
                expected_bunch_size: s.expected_bunch_size,
                mean_bunch_size: s.mean_bunch_size,
                max_bunch_size: s.max_bunch_size,
                mean_memberships: s.mean_memberships,
                max_memberships: s.max_memberships,
                instances: s.instances,
            });
        }
    }
    let pre = Preamble {
        config: base,
        digests: vec![("map_sha256", digest)],
    };
    let mut buf = Vec::new();
    report::write_sweep(&mut buf, &pre, &rows)?;
    emit(out, &buf)
}

#[derive(Serialize)]
struct NodeTargets {
    node: String,
    read: Vec<planfile::TargetJson>,
    write: Vec<planfile::TargetJson>,
}

pub fn cmd_targets(input: &MapInput, plan_path: &Path, node: &str) -> Result<()> {
    let (map, digest) = input.load()?;
    let (plan, _) = load_plan(plan_path)?;
    let dep = plan.deployment(&map, &digest)?;
    let u = map
        .node(node)
        .ok_or_else(|| Error::Usage(format!("unknown node `{node}`")))?;
    let report = NodeTargets {
        node: node.to_string(),
        read: planfile::targets_json(&map, &dep.read_targets(u)?),
        write: planfile::targets_json(&map, &dep.write_targets(u)?),
    };
    emit(None, &json_line(&report))
}
