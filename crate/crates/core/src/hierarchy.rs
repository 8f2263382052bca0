//! Landmark levels, bunches and clusters.
//!
//! Every node is a landmark at some level. Levels come from geometric
//! thinning: a node at level `i` is promoted to `i + 1` with probability
//! `n^(-1/k)`, capped at `k - 1`. A node's bunch is the set of landmarks it
//! knows about: scanning outward by distance, a node is kept when its level
//! is at least the level of every strictly closer node. Clusters are the
//! inverse relation.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::netmap::{NetworkMap, NodeId};
use crate::{Error, Result};

/// Landmark level for every node of a map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelAssignment {
    k: u32,
    seed: u64,
    levels: Vec<u32>,
}

impl LevelAssignment {
    /// Wraps externally supplied levels (e.g. read back from a plan file).
    pub fn from_levels(k: u32, seed: u64, levels: Vec<u32>) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidK(k));
        }
        if levels.is_empty() {
            return Err(Error::EmptyMap);
        }
        if let Some(&bad) = levels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidK(bad + 1));
        }
        Ok(LevelAssignment { k, seed, levels })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    #[inline]
    pub fn level(&self, node: NodeId) -> u32 {
        self.levels[node.index()]
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    /// Highest level held by at least one node.
    pub fn top_level(&self) -> u32 {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    /// Per-round promotion probability `n^(-1/k)`.
    pub fn promotion_probability(n: usize, k: u32) -> f64 {
        libm::pow(n as f64, -1.0 / k as f64)
    }
}

/// Draws a level for every node of `map`.
pub fn assign_levels(map: &NetworkMap, k: u32, seed: u64) -> Result<LevelAssignment> {
    if k < 1 {
        return Err(Error::InvalidK(k));
    }
    let n = map.len();
    if n == 0 {
        return Err(Error::EmptyMap);
    }
    let p = LevelAssignment::promotion_probability(n, k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = (0..n)
        .map(|_| {
            let mut level = 0;
            while level + 1 < k && rng.random::<f64>() < p {
                level += 1;
            }
            level
        })
        .collect();
    Ok(LevelAssignment { k, seed, levels })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BunchEntry {
    pub landmark: NodeId,
    pub dist_ms: f64,
    pub level: u32,
}

/// Landmarks a node is aware of, nearest first.
#[derive(Clone, Debug, PartialEq)]
pub struct Bunch {
    owner: NodeId,
    entries: Vec<BunchEntry>,
    // (landmark, position in `entries`), sorted by landmark.
    lookup: Vec<(NodeId, u32)>,
}

impl Bunch {
    fn new(owner: NodeId, entries: Vec<BunchEntry>) -> Self {
        let mut lookup: Vec<(NodeId, u32)> = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.landmark, i as u32))
            .collect();
        lookup.sort_unstable();
        Bunch {
            owner,
            entries,
            lookup,
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    /// Entries by ascending distance; equal distances in canonical id order.
    pub fn entries(&self) -> &[BunchEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, landmark: NodeId) -> Option<&BunchEntry> {
        self.lookup
            .binary_search_by_key(&landmark, |&(l, _)| l)
            .ok()
            .map(|i| &self.entries[self.lookup[i].1 as usize])
    }

    pub fn contains(&self, landmark: NodeId) -> bool {
        self.get(landmark).is_some()
    }

    pub fn landmarks(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.iter().map(|e| e.landmark)
    }
}

/// Computes every node's bunch.
pub fn compute_bunches(map: &NetworkMap, la: &LevelAssignment) -> Result<Vec<Bunch>> {
    if la.len() != map.len() {
        return Err(Error::LevelsMismatch {
            levels: la.len(),
            nodes: map.len(),
        });
    }
    let n = map.len();
    let mut order: Vec<NodeId> = map.nodes().collect();
    let bunches = map
        .nodes()
        .map(|u| {
            let row = map.row(u);
            order.sort_by(|&a, &b| {
                row[a.index()]
                    .total_cmp(&row[b.index()])
                    .then(map.canonical_rank(a).cmp(&map.canonical_rank(b)))
            });
            let mut entries = Vec::new();
            // Highest level among nodes strictly closer than the current group.
            let mut blocking: Option<u32> = None;
            let mut i = 0;
            while i < n {
                let d = row[order[i].index()];
                let mut j = i;
                let mut group_max = 0;
                while j < n && row[order[j].index()] == d {
                    let v = order[j];
                    let level = la.level(v);
                    group_max = group_max.max(level);
                    if blocking.is_none_or(|b| level >= b) {
                        entries.push(BunchEntry {
                            landmark: v,
                            dist_ms: d,
                            level,
                        });
                    }
                    j += 1;
                }
                blocking = Some(blocking.map_or(group_max, |b| b.max(group_max)));
                i = j;
            }
            Bunch::new(u, entries)
        })
        .collect();
    Ok(bunches)
}

/// Nodes that hold a given landmark in their bunch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    pub landmark: NodeId,
    /// Members in canonical id order.
    pub members: Vec<NodeId>,
}

/// Inverts the bunch relation. `clusters[v]` is the cluster of landmark `v`.
pub fn compute_clusters(map: &NetworkMap, bunches: &[Bunch]) -> Vec<Cluster> {
    let mut members: Vec<Vec<NodeId>> = alloc::vec![Vec::new(); map.len()];
    for b in bunches {
        for l in b.landmarks() {
            members[l.index()].push(b.owner());
        }
    }
    members
        .into_iter()
        .enumerate()
        .map(|(v, mut m)| {
            m.sort_by_key(|&u| map.canonical_rank(u));
            Cluster {
                landmark: NodeId::from(v),
                members: m,
            }
        })
        .collect()
}

/// For each occupied level `i` (0 through the top occupied level), the
/// nearest node in `bunch` whose level is at least `i`.
///
/// Levels above the top occupied level have no candidate and are omitted.
/// The nearest node of level at least `i` is always in the bunch: nothing
/// closer can outrank it without itself qualifying.
pub fn closest_landmark_per_level(bunch: &Bunch, la: &LevelAssignment) -> Vec<NodeId> {
    let top = la.top_level();
    (0..=top)
        .filter_map(|i| {
            bunch
                .entries()
                .iter()
                .find(|e| e.level >= i)
                .map(|e| e.landmark)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BunchStats {
    pub mean: f64,
    pub max: usize,
    /// Bunch size -> number of nodes with that size.
    pub histogram: BTreeMap<usize, usize>,
}

pub fn bunch_stats(bunches: &[Bunch]) -> BunchStats {
    let mut histogram = BTreeMap::new();
    let mut total = 0usize;
    let mut max = 0;
    for b in bunches {
        *histogram.entry(b.len()).or_insert(0) += 1;
        total += b.len();
        max = max.max(b.len());
    }
    let mean = if bunches.is_empty() {
        0.0
    } else {
        total as f64 / bunches.len() as f64
    };
    BunchStats {
        mean,
        max,
        histogram,
    }
}

/// Expected bunch size `k * n^(1/k)`.
pub fn expected_bunch_size(n: usize, k: u32) -> f64 {
    k as f64 * libm::pow(n as f64, 1.0 / k as f64)
}
