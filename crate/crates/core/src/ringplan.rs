//! Concentric rings around each landmark and the global instance plan.
//!
//! Ring `i` of a landmark holds the cluster members within `r_min * 2^i`;
//! anything closer than `r_min` falls in ring 0. Each non-empty ring is one
//! instance of the underlying service.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use core::str::FromStr;

use crate::hierarchy::Cluster;
use crate::netmap::{NetworkMap, NodeId};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RingIndex(pub u32);

impl RingIndex {
    pub fn radius(self, r_min: f64) -> f64 {
        libm::ldexp(r_min, self.0 as i32)
    }
}

impl fmt::Display for RingIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Smallest `i` with `d <= r_min * 2^i`.
pub fn ring_index(d: f64, r_min: f64) -> Result<RingIndex> {
    if !(r_min.is_finite() && r_min > 0.0) {
        return Err(Error::NonPositiveRMin(r_min));
    }
    if d <= r_min {
        return Ok(RingIndex(0));
    }
    // Start from the floating-point estimate, then settle on the exact
    // boundary using exact power-of-two scaling.
    let mut i = libm::ceil(libm::log2(d / r_min)).max(0.0) as i32;
    while i > 0 && libm::ldexp(r_min, i - 1) >= d {
        i -= 1;
    }
    while libm::ldexp(r_min, i) < d {
        i += 1;
    }
    Ok(RingIndex(i as u32))
}

/// One service instance: a ring around a landmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceId {
    pub landmark: NodeId,
    pub ring: RingIndex,
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, ring {})", self.landmark, self.ring)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum RingMode {
    /// Outer rings also contain all inner-ring members.
    #[default]
    Inclusive,
    /// Each cluster member sits in exactly one ring per landmark.
    Exclusive,
}

impl RingMode {
    pub fn name(self) -> &'static str {
        match self {
            RingMode::Inclusive => "inclusive",
            RingMode::Exclusive => "exclusive",
        }
    }
}

impl fmt::Display for RingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RingMode {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s {
            "inclusive" => Ok(RingMode::Inclusive),
            "exclusive" => Ok(RingMode::Exclusive),
            other => Err(format!("unknown ring mode `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub id: InstanceId,
    pub radius_ms: f64,
    /// Members in canonical id order; consistent hashing indexes this list.
    pub members: Vec<NodeId>,
}

/// All instances of a deployment plus the node -> instance relation.
#[derive(Clone, Debug, PartialEq)]
pub struct InstancePlan {
    mode: RingMode,
    r_min_ms: f64,
    // Sorted by (landmark, ring).
    instances: Vec<Instance>,
    by_landmark: Vec<Range<u32>>,
    memberships: Vec<Vec<InstanceId>>,
    ranks: Vec<u32>,
}

impl InstancePlan {
    pub fn mode(&self) -> RingMode {
        self.mode
    }

    pub fn r_min_ms(&self) -> f64 {
        self.r_min_ms
    }

    pub fn node_count(&self) -> usize {
        self.memberships.len()
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    /// Instances around `landmark`, ascending by ring.
    pub fn rings_of(&self, landmark: NodeId) -> &[Instance] {
        match self.by_landmark.get(landmark.index()) {
            Some(r) => &self.instances[r.start as usize..r.end as usize],
            None => &[],
        }
    }

    pub fn get(&self, id: InstanceId) -> Option<&Instance> {
        let rings = self.rings_of(id.landmark);
        rings
            .binary_search_by_key(&id.ring, |i| i.id.ring)
            .ok()
            .map(|i| &rings[i])
    }

    pub fn instance(&self, id: InstanceId) -> Result<&Instance> {
        self.get(id).ok_or(Error::UnknownInstance {
            landmark: id.landmark.index(),
            ring: id.ring.0,
        })
    }

    pub fn contains(&self, id: InstanceId) -> bool {
        self.get(id).is_some()
    }

    /// Canonical rank of a node, copied from the map the plan was built on.
    pub fn canonical_rank(&self, node: NodeId) -> u32 {
        self.ranks[node.index()]
    }

    /// Orders instances by radius, then by landmark id.
    pub fn radius_order(&self, a: &InstanceId, b: &InstanceId) -> core::cmp::Ordering {
        a.ring.cmp(&b.ring).then(
            self.canonical_rank(a.landmark)
                .cmp(&self.canonical_rank(b.landmark)),
        )
    }
}

/// Materializes every non-empty ring around every landmark.
pub fn build_instances(
    map: &NetworkMap,
    clusters: &[Cluster],
    r_min: f64,
    mode: RingMode,
) -> Result<InstancePlan> {
    if !(r_min.is_finite() && r_min > 0.0) {
        return Err(Error::NonPositiveRMin(r_min));
    }
    let n = map.len();
    let mut instances = Vec::new();
    let mut by_landmark = alloc::vec![0..0; n];
    let mut memberships: Vec<Vec<InstanceId>> = alloc::vec![Vec::new(); n];

    for cluster in clusters {
        let landmark = cluster.landmark;
        if landmark.index() >= n {
            return Err(Error::UnknownNode(landmark.index()));
        }
        let mut rings: BTreeMap<RingIndex, Vec<NodeId>> = BTreeMap::new();
        for &u in &cluster.members {
            if u.index() >= n {
                return Err(Error::UnknownNode(u.index()));
            }
            let ring = ring_index(map.dist(landmark, u), r_min)?;
            rings.entry(ring).or_default().push(u);
        }
        let start = instances.len() as u32;
        let mut inner: Vec<NodeId> = Vec::new();
        for (ring, exact) in rings {
            let mut members = match mode {
                RingMode::Exclusive => exact,
                RingMode::Inclusive => {
                    inner.extend_from_slice(&exact);
                    inner.clone()
                }
            };
            members.sort_by_key(|&u| map.canonical_rank(u));
            let id = InstanceId { landmark, ring };
            for &u in &members {
                memberships[u.index()].push(id);
            }
            instances.push(Instance {
                id,
                radius_ms: ring.radius(r_min),
                members,
            });
        }
        by_landmark[landmark.index()] = start..instances.len() as u32;
    }

    // Clusters may arrive in any order; keep instances sorted by landmark.
    if instances.windows(2).any(|w| w[0].id >= w[1].id) {
        instances.sort_by_key(|i| i.id);
        let mut start = 0;
        for (l, range) in by_landmark.iter_mut().enumerate() {
            let count = instances[start as usize..]
                .iter()
                .take_while(|i| i.id.landmark.index() == l)
                .count() as u32;
            *range = start..start + count;
            start += count;
        }
    }
    for m in &mut memberships {
        m.sort_unstable();
    }

    Ok(InstancePlan {
        mode,
        r_min_ms: r_min,
        instances,
        by_landmark,
        memberships,
        ranks: map.canonical_ranks().to_vec(),
    })
}

/// Instances that contain `u`, sorted by `(landmark, ring)`.
pub fn memberships(plan: &InstancePlan, u: NodeId) -> Result<&[InstanceId]> {
    plan.memberships
        .get(u.index())
        .map(|v| v.as_slice())
        .ok_or(Error::UnknownNode(u.index()))
}

/// Largest pairwise distance among an instance's members.
pub fn instance_diameter(plan: &InstancePlan, id: InstanceId, map: &NetworkMap) -> Result<f64> {
    let inst = plan.instance(id)?;
    crate::netmap::diameter(map, &inst.members)
}
