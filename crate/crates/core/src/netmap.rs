//! Latency matrices: construction, validation and synthesis.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Minimum ring radius used when none is configured.
pub const DEFAULT_R_MIN_MS: f64 = 1.0;

/// Relative slack applied to triangle-inequality checks so that rounding in
/// computed metrics (e.g. `sqrt`) is not reported as a violation.
const TRIANGLE_SLACK: f64 = 1e-9;

/// Index of a node within a [`NetworkMap`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Symmetric round-trip latency matrix over a set of named nodes.
///
/// Construction symmetrizes the input by taking the larger of the two
/// directions and forces the diagonal to zero. Off-diagonal entries are
/// strictly positive.
#[derive(Clone, Debug)]
pub struct NetworkMap {
    ids: Vec<String>,
    dist: Vec<f64>,
    rank: Vec<u32>,
    input_symmetric: bool,
    input_zero_diagonal: bool,
}

impl PartialEq for NetworkMap {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids
            && self.dist.len() == other.dist.len()
            && self
                .dist
                .iter()
                .zip(&other.dist)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl NetworkMap {
    /// Builds a map from node ids and a row-major square matrix.
    pub fn from_rows(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::EmptyMap);
        }
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare {
                ids: n,
                rows: rows.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }

        let mut input_symmetric = true;
        let mut input_zero_diagonal = true;
        let mut dist = alloc::vec![0.0; n * n];
        for u in 0..n {
            for v in 0..n {
                let x = rows[u][v];
                if !x.is_finite() {
                    return Err(Error::NonFinite {
                        from: ids[u].clone(),
                        to: ids[v].clone(),
                    });
                }
                if x < 0.0 {
                    return Err(Error::NegativeEntry {
                        from: ids[u].clone(),
                        to: ids[v].clone(),
                        value: x,
                    });
                }
                if u == v {
                    if x != 0.0 {
                        input_zero_diagonal = false;
                    }
                    continue;
                }
                let y = rows[v][u];
                if x.to_bits() != y.to_bits() {
                    input_symmetric = false;
                }
                let d = if x >= y { x } else { y };
                if d == 0.0 {
                    return Err(Error::ZeroDistance {
                        from: ids[u].clone(),
                        to: ids[v].clone(),
                    });
                }
                dist[u * n + v] = d;
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
        let mut rank = alloc::vec![0u32; n];
        for (pos, &node) in order.iter().enumerate() {
            rank[node] = pos as u32;
        }

        Ok(NetworkMap {
            ids,
            dist,
            rank,
            input_symmetric,
            input_zero_diagonal,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, node: NodeId) -> &str {
        &self.ids[node.index()]
    }

    pub fn node(&self, id: &str) -> Option<NodeId> {
        self.ids.iter().position(|x| x == id).map(NodeId::from)
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> + Clone {
        (0..self.len() as u32).map(NodeId)
    }

    #[inline]
    pub fn dist(&self, u: NodeId, v: NodeId) -> f64 {
        self.dist[u.index() * self.len() + v.index()]
    }

    pub fn row(&self, u: NodeId) -> &[f64] {
        let n = self.len();
        &self.dist[u.index() * n..(u.index() + 1) * n]
    }

    /// Position of `node` in lexicographic node-id order. Used as the
    /// canonical ordering for member lists and tie-breaking.
    #[inline]
    pub fn canonical_rank(&self, node: NodeId) -> u32 {
        self.rank[node.index()]
    }

    pub fn canonical_ranks(&self) -> &[u32] {
        &self.rank
    }

    /// Whether the matrix this map was built from was already symmetric.
    pub fn input_was_symmetric(&self) -> bool {
        self.input_symmetric
    }

    /// Whether the matrix this map was built from had an all-zero diagonal.
    pub fn input_had_zero_diagonal(&self) -> bool {
        self.input_zero_diagonal
    }

    pub fn max_entry(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }
}

/// Summary of a map's metric health.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub n: usize,
    pub symmetric: bool,
    pub zero_diagonal: bool,
    /// Number of `(pair, witness)` triples with `d(u,v) > d(u,w) + d(w,v)`.
    pub triangle_violations: u64,
    /// Smallest `(d(u,w) + d(w,v)) / d(u,v)` over violating triples.
    pub worst_violation_ratio: Option<f64>,
    /// Witness `(u, v, w)` of the worst violation.
    pub worst_violation: Option<(NodeId, NodeId, NodeId)>,
    pub diameter_ms: f64,
    pub r_min_ms: f64,
    pub radius_spread: f64,
}

/// Validates with the default `r_min`.
pub fn validate(map: &NetworkMap) -> ValidationReport {
    report(map, radius_spread_unchecked(map, DEFAULT_R_MIN_MS))
}

/// Exhaustively checks every triple and summarizes the map.
pub fn validate_with(map: &NetworkMap, r_min: f64) -> Result<ValidationReport> {
    let spread = radius_spread(map, r_min)?;
    Ok(report(map, spread))
}

fn report(map: &NetworkMap, spread: RadiusSpread) -> ValidationReport {
    let n = map.len();
    let mut violations = 0u64;
    let mut worst: Option<(f64, (NodeId, NodeId, NodeId))> = None;
    for u in 0..n {
        for v in (u + 1)..n {
            let (u, v) = (NodeId::from(u), NodeId::from(v));
            let direct = map.dist(u, v);
            for w in map.nodes() {
                if w == u || w == v {
                    continue;
                }
                let via = map.dist(u, w) + map.dist(w, v);
                if direct > via * (1.0 + TRIANGLE_SLACK) {
                    violations += 1;
                    let ratio = via / direct;
                    if worst.is_none_or(|(r, _)| ratio < r) {
                        worst = Some((ratio, (u, v, w)));
                    }
                }
            }
        }
    }
    ValidationReport {
        n,
        symmetric: map.input_was_symmetric(),
        zero_diagonal: map.input_had_zero_diagonal(),
        triangle_violations: violations,
        worst_violation_ratio: worst.map(|(r, _)| r),
        worst_violation: worst.map(|(_, t)| t),
        diameter_ms: map.max_entry(),
        r_min_ms: spread.r_min_ms,
        radius_spread: spread.ratio,
    }
}

/// Largest pairwise distance within `subset`.
pub fn diameter(map: &NetworkMap, subset: &[NodeId]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut best = 0.0f64;
    for (i, &u) in subset.iter().enumerate() {
        if u.index() >= map.len() {
            return Err(Error::UnknownNode(u.index()));
        }
        for &v in &subset[i + 1..] {
            if v.index() >= map.len() {
                return Err(Error::UnknownNode(v.index()));
            }
            best = best.max(map.dist(u, v));
        }
    }
    Ok(best)
}

/// Ratio between the outermost and innermost ring radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiusSpread {
    pub r_min_ms: f64,
    pub r_max_ms: f64,
    /// `r_max / r_min`, always an exact power of two.
    pub ratio: f64,
    /// `log2(ratio)`; rings per landmark are bounded by `log2 + 1`.
    pub log2: u32,
}

impl RadiusSpread {
    pub fn ring_count(&self) -> u32 {
        self.log2 + 1
    }
}

/// Rounds the map diameter up to a power-of-two multiple of `r_min`.
pub fn radius_spread(map: &NetworkMap, r_min: f64) -> Result<RadiusSpread> {
    if !(r_min.is_finite() && r_min > 0.0) {
        return Err(Error::NonPositiveRMin(r_min));
    }
    Ok(radius_spread_unchecked(map, r_min))
}

fn radius_spread_unchecked(map: &NetworkMap, r_min: f64) -> RadiusSpread {
    let diameter = map.max_entry();
    let mut log2 = 0u32;
    let mut r_max = r_min;
    while r_max < diameter {
        r_max *= 2.0;
        log2 += 1;
    }
    RadiusSpread {
        r_min_ms: r_min,
        r_max_ms: r_max,
        ratio: libm::ldexp(1.0, log2 as i32),
        log2,
    }
}

/// Generators for synthetic latency matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SynthModel {
    /// Points uniform in a square; latency is their Euclidean distance.
    Euclidean { side_ms: f64 },
    /// Cluster centers uniform in a square, points uniform in a small disk
    /// around a randomly chosen center. `clusters == 0` picks `ceil(n / 8)`.
    ClusteredEuclidean {
        clusters: usize,
        side_ms: f64,
        spread_ms: f64,
    },
    /// I.i.d. uniform edge weights closed under shortest paths.
    Uniform { min_ms: f64, max_ms: f64 },
}

impl SynthModel {
    pub const EUCLIDEAN: SynthModel = SynthModel::Euclidean { side_ms: 100.0 };
    pub const CLUSTERED: SynthModel = SynthModel::ClusteredEuclidean {
        clusters: 0,
        side_ms: 320.0,
        spread_ms: 0.1,
    };
    pub const UNIFORM: SynthModel = SynthModel::Uniform {
        min_ms: 1.0,
        max_ms: 100.0,
    };

    pub fn name(&self) -> &'static str {
        match self {
            SynthModel::Euclidean { .. } => "euclidean",
            SynthModel::ClusteredEuclidean { .. } => "clustered-euclidean",
            SynthModel::Uniform { .. } => "uniform",
        }
    }
}

impl fmt::Display for SynthModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthModel {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s {
            "euclidean" => Ok(SynthModel::EUCLIDEAN),
            "clustered-euclidean" | "clustered" => Ok(SynthModel::CLUSTERED),
            "uniform" => Ok(SynthModel::UNIFORM),
            other => Err(format!("unknown synthetic model `{other}`")),
        }
    }
}

/// Smallest latency a synthetic generator emits between distinct nodes.
const SYNTH_FLOOR_MS: f64 = 1e-6;

/// Deterministically synthesizes an `n`-node map.
pub fn synth_map(seed: u64, n: usize, model: SynthModel) -> Result<NetworkMap> {
    if n == 0 {
        return Err(Error::EmptyMap);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = match model {
        SynthModel::Euclidean { side_ms } => {
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.random::<f64>() * side_ms, rng.random::<f64>() * side_ms))
                .collect();
            euclidean_rows(&pts)
        }
        SynthModel::ClusteredEuclidean {
            clusters,
            side_ms,
            spread_ms,
        } => {
            let c = if clusters == 0 {
                n.div_ceil(8)
            } else {
                clusters
            };
            let centers: Vec<(f64, f64)> = (0..c)
                .map(|_| (rng.random::<f64>() * side_ms, rng.random::<f64>() * side_ms))
                .collect();
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|i| {
                    // Every cluster gets at least one point before random fill.
                    let (cx, cy) = if i < c {
                        centers[i]
                    } else {
                        centers[rng.random_range(0..c)]
                    };
                    let r = spread_ms * libm::sqrt(rng.random::<f64>());
                    let theta = rng.random::<f64>() * core::f64::consts::TAU;
                    (cx + r * libm::cos(theta), cy + r * libm::sin(theta))
                })
                .collect();
            euclidean_rows(&pts)
        }
        SynthModel::Uniform { min_ms, max_ms } => {
            let mut rows = alloc::vec![alloc::vec![0.0; n]; n];
            #[allow(clippy::needless_range_loop)]
            for u in 0..n {
                for v in (u + 1)..n {
                    let d = min_ms + rng.random::<f64>() * (max_ms - min_ms);
                    rows[u][v] = d.max(SYNTH_FLOOR_MS);
                    rows[v][u] = rows[u][v];
                }
            }
            // Floyd-Warshall closure turns the random weights into a metric.
            for w in 0..n {
                for u in 0..n {
                    for v in 0..n {
                        let via = rows[u][w] + rows[w][v];
                        if via < rows[u][v] {
                            rows[u][v] = via;
                        }
                    }
                }
            }
            rows
        }
    };
    let width = (n.max(2) - 1).to_string().len();
    let ids = (0..n).map(|i| format!("n{i:0width$}")).collect();
    NetworkMap::from_rows(ids, rows)
}

fn euclidean_rows(pts: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let n = pts.len();
    let mut rows = alloc::vec![alloc::vec![0.0; n]; n];
    for u in 0..n {
        for v in (u + 1)..n {
            let (dx, dy) = (pts[u].0 - pts[v].0, pts[u].1 - pts[v].1);
            let d = libm::sqrt(dx * dx + dy * dy).max(SYNTH_FLOOR_MS);
            rows[u][v] = d;
            rows[v][u] = d;
        }
    }
    rows
}
