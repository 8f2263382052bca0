//! Plan files: everything a node needs to know about the deployment.

use std::collections::BTreeMap;

use crux_core::hierarchy::expected_bunch_size;
use crux_core::oracle::{self, OracleReport, ORACLE_SIZE_LIMIT};
use crux_core::{
    bunch_stats, compute_bunches, memberships, radius_spread, Deployment, InstanceId,
    LevelAssignment, NetworkMap, NodeId, ReplicationPolicy, TargetSet,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::{Error, Result};

/// `[landmark, dist_ms, level]`.
pub type BunchRow = (String, f64, u32);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceEntry {
    pub landmark: String,
    pub ring: u32,
    pub radius_ms: f64,
    pub members: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub n: usize,
    pub expected_bunch_size: f64,
    pub mean_bunch_size: f64,
    pub max_bunch_size: usize,
    pub mean_memberships: f64,
    pub max_memberships: usize,
    pub instances: usize,
    pub radius_spread: f64,
    pub ring_count: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub config: RunConfig,
    pub map_sha256: String,
    pub k: u32,
    pub seed: u64,
    pub levels: BTreeMap<String, u32>,
    pub bunches: BTreeMap<String, Vec<BunchRow>>,
    pub clusters: BTreeMap<String, Vec<String>>,
    pub mode: String,
    pub r_min_ms: f64,
    pub instances: Vec<InstanceEntry>,
    pub summary: PlanSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<BTreeMap<String, CheckSummary>>,
}

/// Condensed [`OracleReport`] for embedding in plan files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub checked: usize,
    pub violations: usize,
    pub worst_ratio: f64,
}

impl From<&OracleReport> for CheckSummary {
    fn from(r: &OracleReport) -> Self {
        CheckSummary {
            checked: r.checked,
            violations: r.violations.len(),
            worst_ratio: r.worst_ratio,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationJson {
    pub check: String,
    pub witness: Vec<String>,
    pub expected: f64,
    pub actual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReportJson {
    pub checked: usize,
    pub worst_ratio: f64,
    pub violations: Vec<ViolationJson>,
}

impl OracleReportJson {
    pub fn new(map: &NetworkMap, r: &OracleReport) -> Self {
        OracleReportJson {
            checked: r.checked,
            worst_ratio: r.worst_ratio,
            violations: r
                .violations
                .iter()
                .map(|v| ViolationJson {
                    check: v.check.to_string(),
                    witness: v.witness.iter().map(|&u| map.id(u).to_string()).collect(),
                    expected: v.expected,
                    actual: v.actual,
                })
                .collect(),
        }
    }
}

pub fn summarize(dep: &Deployment<'_>) -> Result<PlanSummary> {
    let map = dep.map;
    let n = map.len();
    let bs = bunch_stats(&dep.bunches);
    let mut total = 0usize;
    let mut max = 0usize;
    for u in map.nodes() {
        let m = memberships(&dep.plan, u)?.len();
        total += m;
        max = max.max(m);
    }
    let spread = radius_spread(map, dep.plan.r_min_ms())?;
    Ok(PlanSummary {
        n,
        expected_bunch_size: expected_bunch_size(n, dep.levels.k()),
        mean_bunch_size: bs.mean,
        max_bunch_size: bs.max,
        mean_memberships: total as f64 / n as f64,
        max_memberships: max,
        instances: dep.plan.instances().len(),
        radius_spread: spread.ratio,
        ring_count: spread.ring_count(),
    })
}

impl PlanFile {
    pub fn build(dep: &Deployment<'_>, config: &RunConfig, map_sha256: &str) -> Result<Self> {
        let map = dep.map;
        let name = |u: NodeId| map.id(u).to_string();
        let levels = map
            .nodes()
            .map(|u| (name(u), dep.levels.level(u)))
            .collect();
        let bunches = dep
            .bunches
            .iter()
            .map(|b| {
                let rows = b
                    .entries()
                    .iter()
                    .map(|e| (name(e.landmark), e.dist_ms, e.level))
                    .collect();
                (name(b.owner()), rows)
            })
            .collect();
        let clusters = dep
            .clusters
            .iter()
            .map(|c| {
                (
                    name(c.landmark),
                    c.members.iter().map(|&u| name(u)).collect(),
                )
            })
            .collect();
        let instances = dep
            .plan
            .instances()
            .iter()
            .map(|inst| InstanceEntry {
                landmark: name(inst.id.landmark),
                ring: inst.id.ring.0,
                radius_ms: inst.radius_ms,
                members: inst.members.iter().map(|&u| name(u)).collect(),
            })
            .collect();
        Ok(PlanFile {
            config: config.clone(),
            map_sha256: map_sha256.to_string(),
            k: dep.levels.k(),
            seed: dep.levels.seed(),
            levels,
            bunches,
            clusters,
            mode: dep.plan.mode().to_string(),
            r_min_ms: dep.plan.r_min_ms(),
            instances,
            summary: summarize(dep)?,
            verification: None,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }

    /// Rebuilds the deployment from the stored levels and checks that it
    /// reproduces the stored instances.
    pub fn deployment<'m>(&self, map: &'m NetworkMap, map_sha256: &str) -> Result<Deployment<'m>> {
        if self.map_sha256 != map_sha256 {
            return Err(Error::Usage(format!(
                "plan was built for map {} but this map is {map_sha256}",
                self.map_sha256
            )));
        }
        if self.levels.len() != map.len() {
            return Err(Error::Usage(format!(
                "plan has levels for {} nodes, map has {}",
                self.levels.len(),
                map.len()
            )));
        }
        let mut levels = Vec::with_capacity(map.len());
        for id in map.ids() {
            let l = self
                .levels
                .get(id)
                .ok_or_else(|| Error::Usage(format!("plan has no level for node `{id}`")))?;
            levels.push(*l);
        }
        let la = LevelAssignment::from_levels(self.k, self.seed, levels)?;
        let mode = self.mode.parse().map_err(Error::Usage)?;
        let dep = Deployment::from_levels(map, la, self.r_min_ms, mode, self.config.policy)?;
        let rebuilt = PlanFile::build(&dep, &self.config, map_sha256)?;
        if rebuilt.instances != self.instances || rebuilt.bunches != self.bunches {
            return Err(Error::Usage(
                "plan instances do not match the ones derived from its levels".into(),
            ));
        }
        Ok(dep)
    }
}

/// Runs the brute-force checks that fit under the oracle size limit.
/// Returns an empty map for larger inputs.
pub fn verify(dep: &Deployment<'_>) -> Result<BTreeMap<String, OracleReport>> {
    let map = dep.map;
    let mut out = BTreeMap::new();
    if map.len() > ORACLE_SIZE_LIMIT {
        return Ok(out);
    }

    let mut bunch = OracleReport::default();
    let fresh = compute_bunches(map, &dep.levels)?;
    for u in map.nodes() {
        bunch.checked += 1;
        let expect = oracle::oracle_bunch(map, dep.levels.levels(), u)?;
        let mut got: Vec<NodeId> = fresh[u.index()].landmarks().collect();
        got.sort_unstable();
        let mut stored: Vec<NodeId> = dep.bunches[u.index()].landmarks().collect();
        stored.sort_unstable();
        if got != expect || stored != expect {
            bunch.violations.push(oracle::Violation {
                check: "bunch",
                witness: vec![u],
                expected: expect.len() as f64,
                actual: stored.len() as f64,
            });
        }
    }
    out.insert("bunch".to_string(), bunch);

    let k = dep.levels.k();
    let stretch = match dep.policy {
        ReplicationPolicy::Symmetric => oracle::oracle_stretch(map, &dep.bunches, k)?,
        ReplicationPolicy::Asymmetric => {
            oracle::oracle_stretch_asymmetric(map, &dep.bunches, dep.levels.levels(), k)?
        }
    };
    out.insert("stretch".to_string(), stretch);

    let writes = map
        .nodes()
        .map(|u| dep.write_targets(u))
        .collect::<Result<Vec<TargetSet>, _>>()?;
    let reads = map
        .nodes()
        .map(|u| dep.read_targets(u))
        .collect::<Result<Vec<TargetSet>, _>>()?;
    out.insert(
        "meet".to_string(),
        oracle::oracle_meet(&dep.plan, &writes, &reads),
    );
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetJson {
    pub landmark: String,
    pub ring: u32,
}

pub fn targets_json(map: &NetworkMap, set: &TargetSet) -> Vec<TargetJson> {
    set.targets
        .iter()
        .map(|&InstanceId { landmark, ring }| TargetJson {
            landmark: map.id(landmark).to_string(),
            ring: ring.0,
        })
        .collect()
}
