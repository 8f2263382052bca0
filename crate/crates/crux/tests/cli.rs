use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crux::planfile::PlanFile;
use crux::{load_map_file, save_map_file};
use crux_core::{synth_map, SynthModel};
use tempfile::TempDir;

fn crux(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crux"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_map(dir: &TempDir, name: &str, n: usize, seed: u64, model: SynthModel) -> PathBuf {
    let path = dir.path().join(name);
    save_map_file(&synth_map(seed, n, model).unwrap(), &path, None).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn validate_clean_map() {
    let dir = TempDir::new().unwrap();
    let map = write_map(&dir, "m.csv", 30, 1, SynthModel::EUCLIDEAN);
    let o = crux(&["validate", "--map", path_str(&map)]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["triangle_violations"], 0);
    assert_eq!(report["n"], 30);
}

#[test]
fn validate_reports_violation_but_succeeds() {
    let dir = TempDir::new().unwrap();
    let map = dir.path().join("tri.csv");
    std::fs::write(&map, "a,b,c\na,0,1,10\nb,1,0,1\nc,10,1,0\n").unwrap();
    let o = crux(&["validate", "--map", path_str(&map)]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["triangle_violations"], 1);
    assert_eq!(
        report["worst_violation"],
        serde_json::json!(["a", "c", "b"])
    );
    assert_eq!(report["worst_violation_ratio"], 0.2);
}

#[test]
fn malformed_csv_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let map = dir.path().join("bad.csv");
    std::fs::write(&map, "a,b\na,0,x\nb,1,0\n").unwrap();
    let o = crux(&["validate", "--map", path_str(&map)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    std::fs::write(&map, "a,b\na,0,1\n").unwrap();
    assert_eq!(
        crux(&["plan", "--map", path_str(&map)]).status.code(),
        Some(1)
    );
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(crux(&["plan", "--bogus"]).status.code(), Some(1));
    assert_eq!(crux(&[]).status.code(), Some(1));
    assert_eq!(crux(&["--help"]).status.code(), Some(0));
    let dir = TempDir::new().unwrap();
    let map = write_map(&dir, "m.csv", 8, 0, SynthModel::EUCLIDEAN);
    assert_eq!(
        crux(&["plan", "--map", path_str(&map), "--k", "0"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn plan_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let map = write_map(&dir, "m.json", 40, 3, SynthModel::CLUSTERED);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = crux(&[
            "plan",
            "--map",
            path_str(&map),
            "--k",
            "3",
            "--seed",
            "9",
            "-o",
            path_str(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let plan: PlanFile = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!((plan.k, plan.seed), (3, 9));
    assert_eq!(plan.levels.len(), 40);
    assert_eq!(plan.config.k, 3);
    let checks = plan.verification.unwrap();
    assert!(checks.values().all(|c| c.violations == 0));
    assert_eq!(checks.len(), 3);
}

#[test]
fn single_node_plan_has_one_instance() {
    let dir = TempDir::new().unwrap();
    let map = dir.path().join("one.csv");
    std::fs::write(&map, "solo\nsolo,0\n").unwrap();
    let o = crux(&["plan", "--map", path_str(&map)]);
    assert!(o.status.success());
    let plan: PlanFile = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(plan.instances.len(), 1);
    assert_eq!(plan.instances[0].members, vec!["solo".to_string()]);
}

#[test]
fn plan_summary_matches_expected_scale() {
    let dir = TempDir::new().unwrap();
    let map = write_map(&dir, "m.csv", 96, 0, SynthModel::CLUSTERED);
    let o = crux(&["plan", "--map", path_str(&map), "--k", "5", "--no-verify"]);
    let plan: PlanFile = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(plan.verification.is_none());
    let s = plan.summary;
    assert!((10.0..35.0).contains(&s.mean_memberships), "{s:?}");
    assert!(s.max_memberships < 60);
}

#[test]
fn simulate_round_trip() {
    let dir = TempDir::new().unwrap();
    let map = write_map(&dir, "m.csv", 24, 5, SynthModel::EUCLIDEAN);
    let plan = dir.path().join("p.json");
    assert!(crux(&[
        "plan",
        "--map",
        path_str(&map),
        "--k",
        "3",
        "-o",
        path_str(&plan)
    ])
    .status
    .success());

    let run = |tag: &str, extra: &[&str]| {
        let res = dir.path().join(format!("{tag}-r.csv"));
        let ops = dir.path().join(format!("{tag}-o.csv"));
        let st = dir.path().join(format!("{tag}-s.csv"));
        let mut args = vec![
            "simulate",
            "--map",
            path_str(&map),
            "--plan",
            path_str(&plan),
            "-o",
            path_str(&res),
            "--ops-out",
            path_str(&ops),
            "--stats-out",
            path_str(&st),
        ];
        args.extend_from_slice(extra);
        let o = crux(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            std::fs::read_to_string(res).unwrap(),
            std::fs::read_to_string(ops).unwrap(),
            std::fs::read_to_string(st).unwrap(),
        )
    };

    let (res, ops, st) = run("a", &["--ops-per-node", "4"]);
    assert_eq!(
        run("b", &["--ops-per-node", "4"]),
        (res.clone(), ops.clone(), st.clone())
    );

    let mut lines = res.lines();
    assert!(lines.next().unwrap().starts_with("# config: {\"k\":3,"));
    assert!(lines.next().unwrap().starts_with("# map_sha256: "));
    assert!(lines.next().unwrap().starts_with("# plan_sha256: "));
    assert_eq!(
        lines.next().unwrap(),
        "writer,reader,key,direct_ms,crux_ms,baseline_ms,meet_landmark,meet_ring,stretch"
    );
    assert_eq!(lines.count(), 24 * 4);
    assert_eq!(ops.lines().filter(|l| !l.starts_with('#')).count(), 25);
    assert!(st.lines().any(|l| l.starts_with("bucket,")));

    // Paced records are never faster than eager ones.
    let (paced, _, _) = run("c", &["--ops-per-node", "4", "--paced"]);
    let col = |text: &str| -> Vec<f64> {
        text.lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
            .collect()
    };
    for (e, p) in col(&res).iter().zip(col(&paced)) {
        assert!(p >= *e);
    }
}

#[test]
fn empty_workload_gives_header_only() {
    let dir = TempDir::new().unwrap();
    let map = write_map(&dir, "m.csv", 10, 2, SynthModel::UNIFORM);
    let plan = dir.path().join("p.json");
    assert!(
        crux(&["plan", "--map", path_str(&map), "-o", path_str(&plan)])
            .status
            .success()
    );
    let o = crux(&[
        "simulate",
        "--map",
        path_str(&map),
        "--plan",
        path_str(&plan),
        "--ops-per-node",
        "0",
    ]);
    assert!(o.status.success());
    let body: Vec<String> = stdout(&o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect();
    assert_eq!(
        body,
        vec!["writer,reader,key,direct_ms,crux_ms,baseline_ms,meet_landmark,meet_ring,stretch"]
    );
}

#[test]
fn plan_for_other_map_is_rejected() {
    let dir = TempDir::new().unwrap();
    let a = write_map(&dir, "a.csv", 10, 1, SynthModel::EUCLIDEAN);
    let b = write_map(&dir, "b.csv", 10, 2, SynthModel::EUCLIDEAN);
    let plan = dir.path().join("p.json");
    assert!(
        crux(&["plan", "--map", path_str(&a), "-o", path_str(&plan)])
            .status
            .success()
    );
    let o = crux(&["simulate", "--map", path_str(&b), "--plan", path_str(&plan)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn tampered_plan_is_rejected() {
    let dir = TempDir::new().unwrap();
    let map = write_map(&dir, "m.csv", 12, 1, SynthModel::EUCLIDEAN);
    let plan = dir.path().join("p.json");
    assert!(
        crux(&["plan", "--map", path_str(&map), "-o", path_str(&plan)])
            .status
            .success()
    );
    let mut doc: PlanFile = serde_json::from_slice(&std::fs::read(&plan).unwrap()).unwrap();
    doc.instances.pop();
    std::fs::write(&plan, doc.to_json()).unwrap();
    let o = crux(&[
        "targets",
        "--map",
        path_str(&map),
        "--plan",
        path_str(&plan),
        "--node",
        "n00",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn targets_lists_reads_and_writes() {
    let dir = TempDir::new().unwrap();
    let map = write_map(&dir, "m.csv", 12, 1, SynthModel::EUCLIDEAN);
    let plan = dir.path().join("p.json");
    let o = crux(&[
        "plan",
        "--map",
        path_str(&map),
        "--policy",
        "asymmetric",
        "-o",
        path_str(&plan),
    ]);
    assert!(o.status.success());
    let o = crux(&[
        "targets",
        "--map",
        path_str(&map),
        "--plan",
        path_str(&plan),
        "--node",
        "n03",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["node"], "n03");
    let reads = v["read"].as_array().unwrap();
    let writes = v["write"].as_array().unwrap();
    assert!(!reads.is_empty() && !writes.is_empty());
    assert!(writes.len() <= reads.len());
    assert!(reads[0]["landmark"].is_string() && reads[0]["ring"].is_u64());
}

#[test]
fn sweep_reports_expected_column() {
    let dir = TempDir::new().unwrap();
    let map = write_map(&dir, "m.csv", 96, 0, SynthModel::EUCLIDEAN);
    let o = crux(&[
        "sweep",
        "--map",
        path_str(&map),
        "--k",
        "1,2,5,8",
        "--seeds",
        "0,1",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<Vec<String>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 8);
    let field = |r: &Vec<String>, i: usize| r[i].parse::<f64>().unwrap();
    // k = 1: everyone knows everyone.
    assert_eq!(field(&rows[0], 4), 96.0);
    assert_eq!(field(&rows[0], 5), 96.0);
    assert!((field(&rows[2], 3) - 19.6).abs() < 0.05);
    // Expected size dips and rises again in k.
    let e: Vec<f64> = [0, 2, 4, 6].iter().map(|&i| field(&rows[i], 3)).collect();
    assert!(e[2] < e[1] && e[3] > e[2]);
}

#[test]
fn synth_writes_loadable_maps() {
    let dir = TempDir::new().unwrap();
    for (name, fmt) in [("s.csv", None), ("s.json", None), ("s.txt", Some("json"))] {
        let path = dir.path().join(name);
        let mut args = vec![
            "synth",
            "--model",
            "uniform",
            "--n",
            "9",
            "--seed",
            "4",
            "-o",
            path_str(&path),
        ];
        if let Some(f) = fmt {
            args.extend_from_slice(&["--format", f]);
        }
        assert!(crux(&args).status.success());
        let fmt = fmt.map(|f| f.parse().unwrap());
        let map = load_map_file(&path, fmt).unwrap();
        assert_eq!(map, synth_map(4, 9, SynthModel::UNIFORM).unwrap());
    }
}

#[test]
fn oracle_report_file() {
    let dir = TempDir::new().unwrap();
    let map = write_map(&dir, "m.csv", 20, 0, SynthModel::EUCLIDEAN);
    let rep = dir.path().join("oracle.json");
    let o = crux(&[
        "plan",
        "--map",
        path_str(&map),
        "--oracle-out",
        path_str(&rep),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(rep).unwrap()).unwrap();
    for name in ["bunch", "meet", "stretch"] {
        assert_eq!(v[name]["violations"], serde_json::json!([]));
        assert!(v[name]["checked"].as_u64().unwrap() > 0);
    }
}
