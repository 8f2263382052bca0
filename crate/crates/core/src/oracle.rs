//! Brute-force reference checks.
//!
//! Everything here is written directly from the defining predicates and only
//! reads plan data through public fields and [`NetworkMap`] accessors. None
//! of it calls back into the planner it checks.

use alloc::vec::Vec;

use crate::hierarchy::Bunch;
use crate::netmap::{NetworkMap, NodeId};
use crate::replication::TargetSet;
use crate::ringplan::{InstancePlan, RingMode};
use crate::{Error, Result};

/// Largest map the quadratic and cubic scans accept.
pub const ORACLE_SIZE_LIMIT: usize = 512;

/// Floating-point slack on bound comparisons.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub check: &'static str,
    pub witness: Vec<NodeId>,
    pub expected: f64,
    pub actual: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OracleReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
    /// Largest observed ratio for ratio-style checks (0 otherwise).
    pub worst_ratio: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: OracleReport) {
        self.checked += other.checked;
        self.violations.extend(other.violations);
        self.worst_ratio = self.worst_ratio.max(other.worst_ratio);
    }
}

fn guard(map: &NetworkMap) -> Result<()> {
    if map.len() > ORACLE_SIZE_LIMIT {
        Err(Error::SizeGuard {
            n: map.len(),
            limit: ORACLE_SIZE_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// `{ v : every w strictly closer to u than v has level(w) <= level(v) }`,
/// in node-index order.
pub fn oracle_bunch(map: &NetworkMap, levels: &[u32], u: NodeId) -> Result<Vec<NodeId>> {
    guard(map)?;
    let n = map.len();
    let mut out = Vec::new();
    for v in 0..n {
        let dv = map.dist(u, NodeId::from(v));
        let mut ok = true;
        for w in 0..n {
            if map.dist(u, NodeId::from(w)) < dv && levels[w] > levels[v] {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(NodeId::from(v));
        }
    }
    Ok(out)
}

fn in_bunch(bunch: &Bunch, l: NodeId) -> bool {
    bunch.entries().iter().any(|e| e.landmark == l)
}

/// Checks that every unordered pair has a common bunch landmark with
/// `d(u,L) + d(v,L) <= (2k-1) d(u,v)`.
pub fn oracle_stretch(map: &NetworkMap, bunches: &[Bunch], k: u32) -> Result<OracleReport> {
    guard(map)?;
    let bound = (2 * k - 1) as f64;
    let n = map.len();
    let mut report = OracleReport::default();
    for u in 0..n {
        for v in (u + 1)..n {
            let (u, v) = (NodeId::from(u), NodeId::from(v));
            let mut best = f64::INFINITY;
            for e in bunches[u.index()].entries() {
                if in_bunch(&bunches[v.index()], e.landmark) {
                    let detour = map.dist(u, e.landmark) + map.dist(v, e.landmark);
                    best = best.min(detour);
                }
            }
            check_ratio(&mut report, "stretch", [u, v], best, map.dist(u, v), bound);
        }
    }
    Ok(report)
}

/// Asymmetric counterpart of [`oracle_stretch`] over ordered (writer,
/// reader) pairs: the writer's nearest landmark at each level, restricted to
/// those the reader knows, must give a detour within `(4k-3) d(u,v)`.
pub fn oracle_stretch_asymmetric(
    map: &NetworkMap,
    bunches: &[Bunch],
    levels: &[u32],
    k: u32,
) -> Result<OracleReport> {
    guard(map)?;
    let bound = (4 * k - 3) as f64;
    let n = map.len();
    let top = levels.iter().copied().max().unwrap_or(0);
    let mut report = OracleReport::default();
    for u in 0..n {
        let u = NodeId::from(u);
        // Nearest node with level >= i, by direct row scan.
        let mut nearest = Vec::new();
        for i in 0..=top {
            let mut pick: Option<NodeId> = None;
            for w in map.nodes() {
                if levels[w.index()] < i {
                    continue;
                }
                let closer = match pick {
                    None => true,
                    Some(p) => {
                        let (dw, dp) = (map.dist(u, w), map.dist(u, p));
                        dw < dp || (dw == dp && map.id(w) < map.id(p))
                    }
                };
                if closer {
                    pick = Some(w);
                }
            }
            nearest.extend(pick);
        }
        for v in map.nodes().filter(|&v| v != u) {
            let mut best = f64::INFINITY;
            for &l in &nearest {
                if in_bunch(&bunches[v.index()], l) {
                    best = best.min(map.dist(u, l) + map.dist(v, l));
                }
            }
            check_ratio(
                &mut report,
                "asymmetric-stretch",
                [u, v],
                best,
                map.dist(u, v),
                bound,
            );
        }
    }
    Ok(report)
}

fn check_ratio(
    report: &mut OracleReport,
    check: &'static str,
    pair: [NodeId; 2],
    detour: f64,
    direct: f64,
    bound: f64,
) {
    report.checked += 1;
    let ratio = detour / direct;
    if ratio.is_finite() {
        report.worst_ratio = report.worst_ratio.max(ratio);
    }
    if detour.is_nan() || detour > bound * direct * (1.0 + BOUND_SLACK) {
        report.violations.push(Violation {
            check,
            witness: pair.to_vec(),
            expected: bound * direct,
            actual: detour,
        });
    }
}

/// Exhaustively checks that every writer's targets meet every other node's
/// read targets, that every target exists in `plan`, and (inclusive mode)
/// that every target contains its origin.
///
/// `writes[u]` and `reads[u]` are node `u`'s target sets.
pub fn oracle_meet(plan: &InstancePlan, writes: &[TargetSet], reads: &[TargetSet]) -> OracleReport {
    let mut report = OracleReport::default();
    for set in writes.iter().chain(reads) {
        for t in &set.targets {
            report.checked += 1;
            let inst = plan.instances().iter().find(|i| i.id == *t);
            match inst {
                None => report.violations.push(Violation {
                    check: "target-exists",
                    witness: alloc::vec![set.origin, t.landmark],
                    expected: 1.0,
                    actual: 0.0,
                }),
                Some(inst) if plan.mode() == RingMode::Inclusive => {
                    if !inst.members.contains(&set.origin) {
                        report.violations.push(Violation {
                            check: "self-containment",
                            witness: alloc::vec![set.origin, t.landmark],
                            expected: 1.0,
                            actual: 0.0,
                        });
                    }
                }
                Some(_) => {}
            }
        }
    }
    for w in writes {
        for r in reads {
            report.checked += 1;
            let shared = w
                .targets
                .iter()
                .filter(|t| r.targets.iter().any(|s| s == *t))
                .count();
            if shared == 0 {
                report.violations.push(Violation {
                    check: "meet",
                    witness: alloc::vec![w.origin, r.origin],
                    expected: 1.0,
                    actual: 0.0,
                });
            }
        }
    }
    report
}
