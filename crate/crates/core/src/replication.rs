//! Request fan-out: which instances each request is copied to.
//!
//! A request from `u` goes to `u`'s own ring and every larger ring around
//! each landmark in `u`'s bunch. Under the asymmetric policy, writes only go
//! to the landmark nearest `u` at each level, while reads still cover the
//! whole bunch.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::hierarchy::{closest_landmark_per_level, Bunch, LevelAssignment};
use crate::netmap::NodeId;
use crate::ringplan::{ring_index, InstanceId, InstancePlan};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RequestClass {
    Read,
    Write,
    /// Routed exactly like a write.
    ReadWrite,
}

impl RequestClass {
    pub fn is_write(self) -> bool {
        !matches!(self, RequestClass::Read)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ReplicationPolicy {
    /// Reads and writes fan out identically.
    #[default]
    Symmetric,
    /// Writes go only to the closest landmark per level.
    Asymmetric,
}

impl ReplicationPolicy {
    pub fn name(self) -> &'static str {
        match self {
            ReplicationPolicy::Symmetric => "symmetric",
            ReplicationPolicy::Asymmetric => "asymmetric",
        }
    }

    /// Worst-case detour stretch for a `k`-level hierarchy.
    pub fn stretch_bound(self, k: u32) -> f64 {
        match self {
            ReplicationPolicy::Symmetric => (2 * k - 1) as f64,
            ReplicationPolicy::Asymmetric => (4 * k - 3) as f64,
        }
    }
}

impl fmt::Display for ReplicationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReplicationPolicy {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s {
            "symmetric" => Ok(ReplicationPolicy::Symmetric),
            "asymmetric" => Ok(ReplicationPolicy::Asymmetric),
            other => Err(format!("unknown replication policy `{other}`")),
        }
    }
}

/// The instances one request from `origin` is replicated to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetSet {
    pub origin: NodeId,
    pub class: RequestClass,
    /// Sorted by `(landmark, ring)`.
    pub targets: Vec<InstanceId>,
}

impl TargetSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn contains(&self, id: InstanceId) -> bool {
        self.targets.binary_search(&id).is_ok()
    }
}

fn bunch_of(bunches: &[Bunch], u: NodeId) -> Result<&Bunch> {
    bunches.get(u.index()).ok_or(Error::UnknownNode(u.index()))
}

/// Own ring and larger around each of `landmarks`.
fn fan_out(
    u: NodeId,
    plan: &InstancePlan,
    bunch: &Bunch,
    landmarks: impl Iterator<Item = NodeId>,
) -> Result<Vec<InstanceId>> {
    let mut out = Vec::new();
    for landmark in landmarks {
        let entry = bunch
            .get(landmark)
            .ok_or(Error::UnknownNode(landmark.index()))?;
        let own = ring_index(entry.dist_ms, plan.r_min_ms())?;
        out.extend(
            plan.rings_of(landmark)
                .iter()
                .filter(|inst| inst.id.ring >= own)
                .map(|inst| inst.id),
        );
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err(Error::UnknownNode(u.index()));
    }
    Ok(out)
}

pub fn read_targets(u: NodeId, plan: &InstancePlan, bunches: &[Bunch]) -> Result<TargetSet> {
    if u.index() >= plan.node_count() {
        return Err(Error::UnknownNode(u.index()));
    }
    let bunch = bunch_of(bunches, u)?;
    Ok(TargetSet {
        origin: u,
        class: RequestClass::Read,
        targets: fan_out(u, plan, bunch, bunch.landmarks())?,
    })
}

pub fn write_targets(
    u: NodeId,
    plan: &InstancePlan,
    bunches: &[Bunch],
    la: &LevelAssignment,
    policy: ReplicationPolicy,
) -> Result<TargetSet> {
    if u.index() >= plan.node_count() {
        return Err(Error::UnknownNode(u.index()));
    }
    let bunch = bunch_of(bunches, u)?;
    let targets = match policy {
        ReplicationPolicy::Symmetric => fan_out(u, plan, bunch, bunch.landmarks())?,
        ReplicationPolicy::Asymmetric => {
            let mut nearest = closest_landmark_per_level(bunch, la);
            nearest.dedup();
            fan_out(u, plan, bunch, nearest.into_iter())?
        }
    };
    Ok(TargetSet {
        origin: u,
        class: RequestClass::Write,
        targets,
    })
}

/// Targets for a request of the given class.
pub fn targets_for(
    u: NodeId,
    class: RequestClass,
    plan: &InstancePlan,
    bunches: &[Bunch],
    la: &LevelAssignment,
    policy: ReplicationPolicy,
) -> Result<TargetSet> {
    if class.is_write() {
        let mut t = write_targets(u, plan, bunches, la, policy)?;
        t.class = class;
        Ok(t)
    } else {
        read_targets(u, plan, bunches)
    }
}

/// Instances both target sets reach, smallest radius first, then by
/// landmark id.
pub fn meet_instances(
    plan: &InstancePlan,
    a: &TargetSet,
    b: &TargetSet,
) -> Result<Vec<InstanceId>> {
    let (mut i, mut j) = (0, 0);
    let mut shared = Vec::new();
    while i < a.targets.len() && j < b.targets.len() {
        match a.targets[i].cmp(&b.targets[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                shared.push(a.targets[i]);
                i += 1;
                j += 1;
            }
        }
    }
    if shared.is_empty() {
        return Err(Error::EmptyIntersection(a.origin.index(), b.origin.index()));
    }
    shared.sort_by(|x, y| plan.radius_order(x, y));
    Ok(shared)
}

/// Cheapest common landmark of two bunches and its detour `d(u,L) + d(v,L)`.
///
/// Ties go to the landmark with the smaller canonical id. Returns `None`
/// only if the bunches share nothing, which cannot happen for bunches built
/// from one level assignment.
pub fn best_detour(bu: &Bunch, bv: &Bunch, rank: impl Fn(NodeId) -> u32) -> Option<(NodeId, f64)> {
    let mut best: Option<(NodeId, f64)> = None;
    for e in bu.entries() {
        let Some(f) = bv.get(e.landmark) else {
            continue;
        };
        let detour = e.dist_ms + f.dist_ms;
        let better = match best {
            None => true,
            Some((l, d)) => detour < d || (detour == d && rank(e.landmark) < rank(l)),
        };
        if better {
            best = Some((e.landmark, detour));
        }
    }
    best
}

/// Detour through the cheapest landmark a writer at `bw` writes to under the
/// asymmetric policy and that the reader at `br` also knows.
pub fn asymmetric_detour(bw: &Bunch, br: &Bunch, la: &LevelAssignment) -> Option<(NodeId, f64)> {
    closest_landmark_per_level(bw, la)
        .into_iter()
        .filter_map(|l| {
            let dw = bw.get(l)?.dist_ms;
            let dr = br.get(l)?.dist_ms;
            Some((l, dw + dr))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
}
