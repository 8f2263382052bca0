//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use crux_core::hierarchy::expected_bunch_size;
use crux_core::oracle::{oracle_bunch, oracle_meet, oracle_stretch, OracleReport};
use crux_core::sim::{self, run_workload, Workload};
use crux_core::*;
use statrs::distribution::{Binomial, DiscreteCDF};

const MODELS: [SynthModel; 3] = [
    SynthModel::EUCLIDEAN,
    SynthModel::CLUSTERED,
    SynthModel::UNIFORM,
];
const MODES: [RingMode; 2] = [RingMode::Inclusive, RingMode::Exclusive];
const POLICIES: [ReplicationPolicy; 2] =
    [ReplicationPolicy::Symmetric, ReplicationPolicy::Asymmetric];

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn model_for(seed: u64) -> SynthModel {
    MODELS[seed as usize % MODELS.len()]
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    sim::percentile(&v, 0.5)
}

fn stretch_bound() -> Outcome {
    let mut report = OracleReport::default();
    for seed in 0..20 {
        let map = synth_map(seed, 64, SynthModel::EUCLIDEAN).unwrap();
        for k in [2, 3, 5] {
            let la = assign_levels(&map, k, seed).unwrap();
            let bunches = compute_bunches(&map, &la).unwrap();
            report.merge(oracle_stretch(&map, &bunches, k).unwrap());
        }
    }
    outcome(
        report.passed(),
        format!(
            "{} violations over {} pairs (worst stretch {:.3})",
            report.violations.len(),
            report.checked,
            report.worst_ratio
        ),
    )
}

fn bunch_size() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for k in [2, 5] {
        let mut total = 0.0;
        for seed in 0..20 {
            let map = synth_map(seed, 96, SynthModel::EUCLIDEAN).unwrap();
            let la = assign_levels(&map, k, seed).unwrap();
            total += bunch_stats(&compute_bunches(&map, &la).unwrap()).mean;
        }
        let mean = total / 20.0;
        let e = expected_bunch_size(96, k);
        let (lo, hi) = (0.3 * e, 1.5 * e);
        pass &= mean >= lo && mean <= hi;
        if k == 2 {
            pass &= lo <= 17.0 && hi >= 20.0;
        }
        parts.push(format!("k={k}: mean {mean:.2} in [{lo:.2}, {hi:.2}]"));
    }
    outcome(pass, parts.join("; "))
}

fn membership() -> Outcome {
    let mut over = 0usize;
    let mut nodes = 0usize;
    for (seed, model) in (0..10).flat_map(|s| MODELS.iter().map(move |m| (s, *m))) {
        let map = synth_map(seed, 64, model).unwrap();
        let rings = radius_spread(&map, 1.0).unwrap().ring_count() as usize;
        for k in 1..=5 {
            for mode in MODES {
                let dep = Deployment::plan(&map, k, seed, 1.0, mode, ReplicationPolicy::Symmetric)
                    .unwrap();
                for u in map.nodes() {
                    nodes += 1;
                    let b = dep.bunches[u.index()].len();
                    if memberships(&dep.plan, u).unwrap().len() > b * rings {
                        over += 1;
                    }
                }
            }
        }
    }
    let mut pass = over == 0;
    let mut parts = vec![format!("{over}/{nodes} nodes over |B_u|(log2 R + 1)")];
    for model in MODELS {
        let (mut sum, mut count, mut max) = (0usize, 0usize, 0usize);
        for seed in 0..20 {
            let map = synth_map(seed, 96, model).unwrap();
            let dep = Deployment::plan(
                &map,
                5,
                seed,
                1.0,
                RingMode::Inclusive,
                ReplicationPolicy::Symmetric,
            )
            .unwrap();
            for u in map.nodes() {
                let m = memberships(&dep.plan, u).unwrap().len();
                sum += m;
                count += 1;
                max = max.max(m);
            }
        }
        let mean = sum as f64 / count as f64;
        pass &= (10.0..=35.0).contains(&mean);
        parts.push(format!("{model} n=96 k=5 mean {mean:.2} (max {max})"));
    }
    outcome(pass, parts.join("; "))
}

fn target_sets(dep: &Deployment<'_>) -> (Vec<TargetSet>, Vec<TargetSet>) {
    let map = dep.map;
    let w = map.nodes().map(|u| dep.write_targets(u).unwrap()).collect();
    let r = map.nodes().map(|u| dep.read_targets(u).unwrap()).collect();
    (w, r)
}

fn meet() -> Outcome {
    let mut report = OracleReport::default();
    let mut configs = 0;
    for seed in 0..10 {
        for n in [16, 64] {
            let map = synth_map(seed, n, model_for(seed)).unwrap();
            for k in [2, 3, 5] {
                for mode in MODES {
                    for policy in POLICIES {
                        let dep = Deployment::plan(&map, k, seed, 1.0, mode, policy).unwrap();
                        let (w, r) = target_sets(&dep);
                        report.merge(oracle_meet(&dep.plan, &w, &r));
                        configs += 1;
                    }
                }
            }
        }
    }
    outcome(
        report.passed(),
        format!(
            "{} violations over {} checks in {configs} deployments",
            report.violations.len(),
            report.checked
        ),
    )
}

fn self_containment() -> Outcome {
    let (mut total, mut held) = (0usize, 0usize);
    for seed in 0..10 {
        let map = synth_map(seed, 64, model_for(seed)).unwrap();
        for k in [1, 2, 3, 5] {
            for policy in POLICIES {
                let dep =
                    Deployment::plan(&map, k, seed, 1.0, RingMode::Inclusive, policy).unwrap();
                let (w, r) = target_sets(&dep);
                for set in w.iter().chain(&r) {
                    for t in &set.targets {
                        total += 1;
                        if dep.plan.instance(*t).unwrap().members.contains(&set.origin) {
                            held += 1;
                        }
                    }
                }
            }
        }
    }
    outcome(
        held == total,
        format!(
            "{held}/{total} targets contain their origin ({:.3}%)",
            100.0 * held as f64 / total as f64
        ),
    )
}

fn kv_bound() -> Outcome {
    let (mut checked, mut over) = (0usize, 0usize);
    let mut worst = 0.0f64;
    let mut asym_over = 0usize;
    for seed in 0..6 {
        let map = synth_map(seed, 64, model_for(seed)).unwrap();
        let all = Workload::all_pairs(&map);
        for k in [2, 3, 5] {
            for mode in MODES {
                for policy in POLICIES {
                    let dep = Deployment::plan(&map, k, seed, 1.0, mode, policy).unwrap();
                    for o in [0.0, 1.0] {
                        let p = Plugin::new(PluginKind::Kv, o);
                        for r in run_workload(&dep, &p, &all, false).unwrap().records {
                            let s = policy.stretch_bound(k);
                            let bound = 16.0 * s * r.direct_ms.max(1.0) + 4.0 * o;
                            let bad = r.crux_ms > bound * (1.0 + 1e-9);
                            if policy == ReplicationPolicy::Symmetric {
                                checked += 1;
                                worst = worst.max(r.crux_ms / bound);
                                over += bad as usize;
                            } else {
                                asym_over += bad as usize;
                            }
                        }
                    }
                }
            }
        }
    }
    outcome(
        over == 0,
        format!(
            "{over}/{checked} interactions over 16(2k-1)max(d, r_min) + 4 o_A \
             (largest fraction of bound {worst:.3}); asymmetric with 4k-3: {asym_over} over"
        ),
    )
}

fn locality() -> Outcome {
    let spread = 0.1;
    let model = SynthModel::ClusteredEuclidean {
        clusters: 12,
        side_ms: 320.0,
        spread_ms: spread,
    };
    let map = synth_map(0, 96, model).unwrap();
    let all: Vec<NodeId> = map.nodes().collect();
    let diam = diameter(&map, &all).unwrap();
    // Points lie within `spread` of their center, so intra-cluster pairs are
    // at most 2 * spread apart.
    let intra = 2.0 * spread;
    let shape_ok = diam >= 1000.0 * intra;

    let dep = Deployment::plan(
        &map,
        5,
        0,
        1.0,
        RingMode::Inclusive,
        ReplicationPolicy::Symmetric,
    )
    .unwrap();
    let p = Plugin::new(PluginKind::Kv, 0.0);
    let recs = run_workload(&dep, &p, &Workload::generate(&map, 0, 1000), false)
        .unwrap()
        .records;
    let buckets = sim::stats(&recs, sim::DEFAULT_BUCKETS).unwrap();
    let near = &buckets[0];
    let gain = near.baseline_median / near.crux_median.max(1e-12);
    let base: Vec<f64> = buckets.iter().map(|b| b.baseline_median).collect();
    let flat = base.iter().cloned().fold(0.0, f64::max)
        / base.iter().cloned().fold(f64::INFINITY, f64::min);
    let crux_far = median(
        recs.iter()
            .filter(|r| r.direct_ms > diam / 2.0)
            .map(|r| r.crux_ms)
            .collect(),
    );
    outcome(
        shape_ok && gain >= 100.0 && flat <= 2.0,
        format!(
            "diameter {diam:.1} ms vs intra <= {intra} ms; near bucket ({} records) \
             baseline/crux median {gain:.0}x; baseline max/min bucket median {flat:.2} \
             over {} buckets; far-pair crux median {crux_far:.1} ms",
            near.count,
            buckets.len()
        ),
    )
}

fn level_distribution() -> Outcome {
    let (n, k, seeds) = (96usize, 5u32, 200u64);
    let trials = n as u64 * seeds;
    let mut at_least = vec![0u64; k as usize];
    for seed in 0..seeds {
        let map = synth_map(seed, n, SynthModel::EUCLIDEAN).unwrap();
        let la = assign_levels(&map, k, seed).unwrap();
        for &l in la.levels() {
            for c in at_least.iter_mut().take(l as usize + 1) {
                *c += 1;
            }
        }
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for i in 1..k {
        let p = (n as f64).powf(-(i as f64) / k as f64);
        let b = Binomial::new(p, trials).unwrap();
        let (lo, hi) = (b.inverse_cdf(0.0005), b.inverse_cdf(0.9995));
        let got = at_least[i as usize];
        pass &= got >= lo && got <= hi;
        parts.push(format!("i={i}: {got} in [{lo}, {hi}]"));
    }
    outcome(pass, format!("{trials} node draws; {}", parts.join(", ")))
}

fn oracle_equivalence() -> Outcome {
    let (mut same, mut total) = (0usize, 0usize);
    for i in 0..100u64 {
        let map = synth_map(i, 32, model_for(i)).unwrap();
        let k = 1 + (i % 5) as u32;
        let la = assign_levels(&map, k, 1000 + i).unwrap();
        let bunches = compute_bunches(&map, &la).unwrap();
        let ok = map.nodes().all(|u| {
            let mut got: Vec<NodeId> = bunches[u.index()].landmarks().collect();
            got.sort_unstable();
            got == oracle_bunch(&map, la.levels(), u).unwrap()
        });
        total += 1;
        same += ok as usize;
    }
    outcome(
        same == total,
        format!("{same}/{total} (map, seed) pairs identical"),
    )
}

fn paced() -> Outcome {
    let (mut records, mut below, mut above) = (0usize, 0usize, 0usize);
    let mut worst = 1.0f64;
    for seed in 0..10 {
        let map = synth_map(seed, 64, model_for(seed)).unwrap();
        let all = Workload::all_pairs(&map);
        for k in [2, 3, 5] {
            let dep = Deployment::plan(
                &map,
                k,
                seed,
                1.0,
                RingMode::Inclusive,
                ReplicationPolicy::Symmetric,
            )
            .unwrap();
            let p = Plugin::new(PluginKind::Kv, 0.0);
            let eager = run_workload(&dep, &p, &all, false).unwrap().records;
            let paced = run_workload(&dep, &p, &all, true).unwrap().records;
            for (e, q) in eager.iter().zip(&paced) {
                records += 1;
                below += (q.crux_ms < e.crux_ms) as usize;
                above += (q.crux_ms > 4.0 * e.crux_ms * (1.0 + 1e-9)) as usize;
                if e.crux_ms > 0.0 {
                    worst = worst.max(q.crux_ms / e.crux_ms);
                }
            }
        }
    }
    outcome(
        below == 0 && above == 0,
        format!(
            "{records} interactions: {below} paced < eager, {above} paced > 4x eager \
             (largest paced/eager {worst:.2})"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("stretch bound", stretch_bound),
        ("bunch-size expectation", bunch_size),
        ("membership bound", membership),
        ("meet guarantee", meet),
        ("inclusive self-containment", self_containment),
        ("kv latency bound", kv_bound),
        ("locality ratio", locality),
        ("level distribution", level_distribution),
        ("oracle equivalence", oracle_equivalence),
        ("paced-mode property", paced),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name} [{secs:.1}s]: {}", i + 1, o.detail);
        failed += !o.pass as usize;
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
