//! Latency simulation of a deployment.
//!
//! Each instance of the underlying service is modeled by a plugin that turns
//! `(origin, member list, key)` into a latency over the map. Interactions are
//! a write by one node followed by a read of the same key by another; the
//! interaction latency through a deployment is that of the fastest write and
//! read replicas that meet at a common instance. The baseline is the same
//! interaction against a single instance spanning every node.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hierarchy::{
    assign_levels, compute_bunches, compute_clusters, Bunch, Cluster, LevelAssignment,
};
use crate::netmap::{NetworkMap, NodeId};
use crate::replication::{
    meet_instances, read_targets, write_targets, ReplicationPolicy, TargetSet,
};
use crate::ringplan::{build_instances, InstanceId, InstancePlan, RingMode};
use crate::{Error, Result};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Consistent-hash home of `key` in a canonically sorted member list.
pub fn home_index(key: &str, members: usize) -> usize {
    (fnv1a64(key.as_bytes()) % members as u64) as usize
}

/// Member visited at `hop` of a multi-hop route: FNV-1a over the key bytes,
/// a `#` separator and the decimal hop index.
fn hop_index(key: &str, hop: usize, members: usize) -> usize {
    let tagged = format!("{key}#{hop}");
    (fnv1a64(tagged.as_bytes()) % members as u64) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KvOp {
    Put,
    Get,
}

fn nonempty(members: &[NodeId]) -> Result<()> {
    if members.is_empty() {
        Err(Error::EmptyMembers)
    } else {
        Ok(())
    }
}

/// Single round trip to the key's home server.
pub fn kv_serve(
    _op: KvOp,
    key: &str,
    origin: NodeId,
    members: &[NodeId],
    map: &NetworkMap,
    o_a: f64,
) -> Result<f64> {
    nonempty(members)?;
    let server = members[home_index(key, members.len())];
    Ok(2.0 * map.dist(origin, server) + o_a)
}

/// One-way delivery from publisher through the channel server.
pub fn pubsub_serve(
    channel: &str,
    publisher: NodeId,
    subscriber: NodeId,
    members: &[NodeId],
    map: &NetworkMap,
    o_a: f64,
) -> Result<f64> {
    nonempty(members)?;
    let server = members[home_index(channel, members.len())];
    Ok(map.dist(publisher, server) + map.dist(server, subscriber) + o_a)
}

/// Number of routing hops for an instance of `members` nodes.
pub fn hop_count(members: usize) -> usize {
    let mut h = 0;
    while (1usize << h) < members {
        h += 1;
    }
    h.max(1)
}

/// Multi-hop lookup: `h = ceil(log2 m)` hops ending at the home server,
/// then a direct reply to the origin. Every hop pays `o_a`, as does the
/// reply.
pub fn multihop_serve(
    _op: KvOp,
    key: &str,
    origin: NodeId,
    members: &[NodeId],
    map: &NetworkMap,
    o_a: f64,
) -> Result<f64> {
    nonempty(members)?;
    let m = members.len();
    let h = hop_count(m);
    let home = members[home_index(key, m)];
    let mut at = origin;
    let mut total = 0.0;
    for hop in 1..h {
        let next = members[hop_index(key, hop, m)];
        total += map.dist(at, next);
        at = next;
    }
    total += map.dist(at, home) + map.dist(home, origin);
    Ok(total + (h as f64 + 1.0) * o_a)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum PluginKind {
    #[default]
    Kv,
    PubSub,
    MultihopKv,
}

impl PluginKind {
    pub fn name(self) -> &'static str {
        match self {
            PluginKind::Kv => "kv",
            PluginKind::PubSub => "pubsub",
            PluginKind::MultihopKv => "multihop-kv",
        }
    }
}

impl fmt::Display for PluginKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PluginKind {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s {
            "kv" => Ok(PluginKind::Kv),
            "pubsub" => Ok(PluginKind::PubSub),
            "multihop-kv" | "multihop" => Ok(PluginKind::MultihopKv),
            other => Err(format!("unknown plugin `{other}`")),
        }
    }
}

/// Model of the underlying service run inside each instance.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Plugin {
    pub kind: PluginKind,
    /// Fixed service overhead per operation, in ms.
    pub op_overhead_ms: f64,
}

impl Plugin {
    pub fn new(kind: PluginKind, op_overhead_ms: f64) -> Self {
        Plugin {
            kind,
            op_overhead_ms,
        }
    }

    /// Latency of one write-then-read interaction through `members`.
    pub fn interaction(
        &self,
        key: &str,
        writer: NodeId,
        reader: NodeId,
        members: &[NodeId],
        map: &NetworkMap,
    ) -> Result<f64> {
        let o = self.op_overhead_ms;
        match self.kind {
            PluginKind::Kv => Ok(kv_serve(KvOp::Put, key, writer, members, map, o)?
                + kv_serve(KvOp::Get, key, reader, members, map, o)?),
            PluginKind::MultihopKv => Ok(multihop_serve(KvOp::Put, key, writer, members, map, o)?
                + multihop_serve(KvOp::Get, key, reader, members, map, o)?),
            PluginKind::PubSub => pubsub_serve(key, writer, reader, members, map, o),
        }
    }

    /// Time for `reader` to hear back from one instance that does not hold
    /// the key.
    pub fn miss(
        &self,
        key: &str,
        reader: NodeId,
        members: &[NodeId],
        map: &NetworkMap,
    ) -> Result<f64> {
        let o = self.op_overhead_ms;
        match self.kind {
            PluginKind::Kv | PluginKind::PubSub => {
                kv_serve(KvOp::Get, key, reader, members, map, o)
            }
            PluginKind::MultihopKv => multihop_serve(KvOp::Get, key, reader, members, map, o),
        }
    }

    /// The member charged with serving `key` in an instance.
    pub fn server(&self, key: &str, members: &[NodeId]) -> Result<NodeId> {
        nonempty(members)?;
        Ok(members[home_index(key, members.len())])
    }
}

/// A complete plan for one map: levels, bunches, clusters and instances.
#[derive(Clone, Debug)]
pub struct Deployment<'m> {
    pub map: &'m NetworkMap,
    pub levels: LevelAssignment,
    pub bunches: Vec<Bunch>,
    pub clusters: Vec<Cluster>,
    pub plan: InstancePlan,
    pub policy: ReplicationPolicy,
    global: Vec<NodeId>,
}

impl<'m> Deployment<'m> {
    /// Runs the whole planning pipeline.
    pub fn plan(
        map: &'m NetworkMap,
        k: u32,
        seed: u64,
        r_min: f64,
        mode: RingMode,
        policy: ReplicationPolicy,
    ) -> Result<Self> {
        let levels = assign_levels(map, k, seed)?;
        Self::from_levels(map, levels, r_min, mode, policy)
    }

    pub fn from_levels(
        map: &'m NetworkMap,
        levels: LevelAssignment,
        r_min: f64,
        mode: RingMode,
        policy: ReplicationPolicy,
    ) -> Result<Self> {
        let bunches = compute_bunches(map, &levels)?;
        let clusters = compute_clusters(map, &bunches);
        let plan = build_instances(map, &clusters, r_min, mode)?;
        let mut global: Vec<NodeId> = map.nodes().collect();
        global.sort_by_key(|&u| map.canonical_rank(u));
        Ok(Deployment {
            map,
            levels,
            bunches,
            clusters,
            plan,
            policy,
            global,
        })
    }

    /// All nodes in canonical order: the single network-wide instance.
    pub fn global_members(&self) -> &[NodeId] {
        &self.global
    }

    pub fn write_targets(&self, u: NodeId) -> Result<TargetSet> {
        write_targets(u, &self.plan, &self.bunches, &self.levels, self.policy)
    }

    pub fn read_targets(&self, u: NodeId) -> Result<TargetSet> {
        read_targets(u, &self.plan, &self.bunches)
    }

    fn members(&self, id: InstanceId) -> Result<&[NodeId]> {
        Ok(&self.plan.instance(id)?.members)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interaction {
    pub writer: NodeId,
    pub reader: NodeId,
    pub key: String,
}

/// A batch of write/read interactions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Workload {
    pub seed: u64,
    pub ops_per_node: usize,
    pub interactions: Vec<Interaction>,
}

impl Workload {
    /// Every node writes `ops_per_node` keys `writer:reader:w` with a random
    /// reader other than itself and `w` in `0..10`; the named reader then
    /// reads the key back.
    pub fn generate(map: &NetworkMap, seed: u64, ops_per_node: usize) -> Workload {
        let n = map.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut interactions = Vec::new();
        if n > 1 {
            for writer in map.nodes() {
                for _ in 0..ops_per_node {
                    let mut r = rng.random_range(0..n - 1);
                    if r >= writer.index() {
                        r += 1;
                    }
                    let reader = NodeId::from(r);
                    let w: u32 = rng.random_range(0..10);
                    let key = format!("{}:{}:{}", map.id(writer), map.id(reader), w);
                    interactions.push(Interaction {
                        writer,
                        reader,
                        key,
                    });
                }
            }
        }
        Workload {
            seed,
            ops_per_node,
            interactions,
        }
    }

    /// One interaction for every ordered pair of distinct nodes.
    pub fn all_pairs(map: &NetworkMap) -> Workload {
        let mut interactions = Vec::new();
        for writer in map.nodes() {
            for reader in map.nodes().filter(|&r| r != writer) {
                let key = format!("{}:{}:0", map.id(writer), map.id(reader));
                interactions.push(Interaction {
                    writer,
                    reader,
                    key,
                });
            }
        }
        Workload {
            seed: 0,
            ops_per_node: map.len().saturating_sub(1),
            interactions,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }
}

/// Keeps the stretch denominator away from zero.
const STRETCH_EPSILON_MS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct InteractionRecord {
    pub writer: NodeId,
    pub reader: NodeId,
    pub key: String,
    pub direct_ms: f64,
    pub crux_ms: f64,
    pub baseline_ms: f64,
    pub meet_instance: InstanceId,
    /// `crux_ms / max(2 * direct_ms, eps)`.
    pub stretch: f64,
}

/// Simulates one interaction.
///
/// Eager mode charges the cheapest shared instance. Paced mode walks the
/// ring radii in ascending order: a stage with no shared instance costs the
/// slowest miss reply among the reader's requests at that radius, and the
/// first stage with a shared instance ends the search at its cheapest one.
pub fn run_interaction(
    dep: &Deployment<'_>,
    plugin: &Plugin,
    writer: NodeId,
    reader: NodeId,
    key: &str,
    paced: bool,
) -> Result<InteractionRecord> {
    Ok(evaluate(dep, plugin, writer, reader, key, paced)?.record)
}

struct Evaluation {
    record: InteractionRecord,
    writes: TargetSet,
    reads_attempted: Vec<InstanceId>,
}

fn evaluate(
    dep: &Deployment<'_>,
    plugin: &Plugin,
    writer: NodeId,
    reader: NodeId,
    key: &str,
    paced: bool,
) -> Result<Evaluation> {
    let map = dep.map;
    let writes = dep.write_targets(writer)?;
    let reads = dep.read_targets(reader)?;
    let shared = meet_instances(&dep.plan, &writes, &reads)?;

    let cheapest = |candidates: &[InstanceId]| -> Result<Option<(InstanceId, f64)>> {
        let mut best: Option<(InstanceId, f64)> = None;
        for &id in candidates {
            let cost = plugin.interaction(key, writer, reader, dep.members(id)?, map)?;
            if best.is_none_or(|(_, c)| cost < c) {
                best = Some((id, cost));
            }
        }
        Ok(best)
    };

    let (meet_instance, crux_ms, reads_attempted) = if paced {
        let mut rings: Vec<_> = writes
            .targets
            .iter()
            .chain(&reads.targets)
            .map(|t| t.ring)
            .collect();
        rings.sort_unstable();
        rings.dedup();
        let mut spent = 0.0;
        let mut attempted = Vec::new();
        let mut found = None;
        for ring in rings {
            let stage: Vec<InstanceId> =
                shared.iter().copied().filter(|t| t.ring == ring).collect();
            attempted.extend(reads.targets.iter().copied().filter(|t| t.ring == ring));
            if let Some((id, cost)) = cheapest(&stage)? {
                found = Some((id, spent + cost));
                break;
            }
            let mut slowest = 0.0f64;
            for t in reads.targets.iter().filter(|t| t.ring == ring) {
                slowest = slowest.max(plugin.miss(key, reader, dep.members(*t)?, map)?);
            }
            spent += slowest;
        }
        let (id, cost) = found.ok_or(Error::EmptyIntersection(writer.index(), reader.index()))?;
        (id, cost, attempted)
    } else {
        let (id, cost) =
            cheapest(&shared)?.ok_or(Error::EmptyIntersection(writer.index(), reader.index()))?;
        (id, cost, reads.targets.clone())
    };

    let baseline_ms = plugin.interaction(key, writer, reader, dep.global_members(), map)?;
    let direct_ms = map.dist(writer, reader);
    Ok(Evaluation {
        record: InteractionRecord {
            writer,
            reader,
            key: String::from(key),
            direct_ms,
            crux_ms,
            baseline_ms,
            meet_instance,
            stretch: crux_ms / (2.0 * direct_ms).max(STRETCH_EPSILON_MS),
        },
        writes,
        reads_attempted,
    })
}

/// Records plus per-node served-operation tallies.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadOutcome {
    pub records: Vec<InteractionRecord>,
    /// Operations served by each node across all deployment instances.
    pub crux_ops: Vec<u64>,
    /// Operations served by each node in the single global instance.
    pub baseline_ops: Vec<u64>,
}

impl WorkloadOutcome {
    pub fn total_crux_ops(&self) -> u64 {
        self.crux_ops.iter().sum()
    }

    pub fn total_baseline_ops(&self) -> u64 {
        self.baseline_ops.iter().sum()
    }
}

/// Runs every interaction in input order. Each write or read replica counts
/// one operation against the hash-selected server of its instance.
pub fn run_workload(
    dep: &Deployment<'_>,
    plugin: &Plugin,
    workload: &Workload,
    paced: bool,
) -> Result<WorkloadOutcome> {
    let n = dep.map.len();
    let mut crux_ops = alloc::vec![0u64; n];
    let mut baseline_ops = alloc::vec![0u64; n];
    let mut records = Vec::with_capacity(workload.interactions.len());
    for it in &workload.interactions {
        let ev = evaluate(dep, plugin, it.writer, it.reader, &it.key, paced)?;
        for &id in ev.writes.targets.iter().chain(&ev.reads_attempted) {
            let server = plugin.server(&it.key, dep.members(id)?)?;
            crux_ops[server.index()] += 1;
        }
        let home = plugin.server(&it.key, dep.global_members())?;
        baseline_ops[home.index()] += 2;
        records.push(ev.record);
    }
    Ok(WorkloadOutcome {
        records,
        crux_ops,
        baseline_ops,
    })
}

/// Default bucket count for latency summaries.
pub const DEFAULT_BUCKETS: usize = 13;

/// Latency summary of the records whose direct distance falls in one bucket.
#[derive(Clone, Debug, PartialEq)]
pub struct BucketStats {
    pub index: usize,
    pub lo_ms: f64,
    pub hi_ms: f64,
    pub count: usize,
    pub crux_median: f64,
    pub crux_p90: f64,
    pub baseline_median: f64,
    pub baseline_p90: f64,
}

/// Linear-interpolated percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q * (n - 1) as f64;
            let lo = libm::floor(pos) as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = pos - lo as f64;
            sorted[lo] + (sorted[hi] - sorted[lo]) * frac
        }
    }
}

/// Groups records into `buckets` log-spaced direct-distance buckets and
/// reports median and 90th percentile for both systems. Empty buckets are
/// omitted; zero-distance records fall in the first bucket.
pub fn stats(records: &[InteractionRecord], buckets: usize) -> Result<Vec<BucketStats>> {
    if records.is_empty() {
        return Err(Error::EmptySubset);
    }
    let buckets = buckets.max(1);
    let positive = records.iter().map(|r| r.direct_ms).filter(|&d| d > 0.0);
    let lo = positive.clone().fold(f64::INFINITY, f64::min);
    let hi = positive.fold(0.0, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
    let span = if hi > lo { libm::log(hi / lo) } else { 0.0 };
    let edge = |i: usize| {
        if span == 0.0 {
            if i == 0 {
                lo
            } else {
                hi
            }
        } else {
            lo * libm::exp(span * i as f64 / buckets as f64)
        }
    };
    let bucket_of = |d: f64| -> usize {
        if span == 0.0 || d <= lo {
            0
        } else {
            ((libm::log(d / lo) / span * buckets as f64) as usize).min(buckets - 1)
        }
    };

    let mut groups: Vec<(Vec<f64>, Vec<f64>)> = alloc::vec![(Vec::new(), Vec::new()); buckets];
    for r in records {
        let g = &mut groups[bucket_of(r.direct_ms)];
        g.0.push(r.crux_ms);
        g.1.push(r.baseline_ms);
    }
    let mut out = Vec::new();
    for (index, (mut crux, mut base)) in groups.into_iter().enumerate() {
        if crux.is_empty() {
            continue;
        }
        crux.sort_by(f64::total_cmp);
        base.sort_by(f64::total_cmp);
        let (lo_ms, hi_ms) = if span == 0.0 {
            (lo, hi)
        } else {
            (edge(index), edge(index + 1))
        };
        out.push(BucketStats {
            index,
            lo_ms,
            hi_ms,
            count: crux.len(),
            crux_median: percentile(&crux, 0.5),
            crux_p90: percentile(&crux, 0.9),
            baseline_median: percentile(&base, 0.5),
            baseline_p90: percentile(&base, 0.9),
        });
    }
    Ok(out)
}
