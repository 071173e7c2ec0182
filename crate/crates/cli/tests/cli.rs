//! End-to-end runs of the `mediasched` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mediasched"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(value).unwrap()).unwrap();
    path
}

/// `(arrival, deadline, parents)` per packet, unit size.
fn trace(packets: &[(usize, usize, &[u32])]) -> Value {
    let packets: Vec<Value> = packets
        .iter()
        .enumerate()
        .map(|(i, (a, d, parents))| {
            json!({
                "id": i,
                "size_bits": 1.0,
                "distortion": 3.0 - 0.4 * i as f64,
                "arrival": a,
                "deadline": d,
                "parents": parents,
            })
        })
        .collect();
    json!({ "packets": packets })
}

fn two_state_channel() -> Value {
    json!({
        "states": [
            { "id": 0, "gain": 0.5, "rate": 1.0, "loss_prob": 0.1 },
            { "id": 1, "gain": 2.0, "rate": 2.0, "loss_prob": 0.0 },
        ],
        "transition": [[0.7, 0.3], [0.4, 0.6]],
        "initial": [0.5, 0.5],
    })
}

fn constant_channel() -> Value {
    json!({
        "states": [{ "id": 0, "gain": 1.0, "rate": 1.0, "loss_prob": 0.0 }],
        "transition": [[1.0]],
        "initial": [1.0],
    })
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap())
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn single_packet_visits_one_state_per_channel_while_carried() {
    let dir = TempDir::new().unwrap();
    let t = write(dir.path(), "t.json", &trace(&[(0, 3, &[])]));
    let c = write(dir.path(), "c.json", &two_state_channel());
    let csv_path = dir.path().join("cx.csv");
    let out = run(&[
        "solve",
        "--trace",
        s(&t),
        "--channel",
        s(&c),
        "--cost",
        "convex",
        "--complexity-out",
        s(&csv_path),
        "--out",
        s(&dir.path().join("p.json")),
    ]);
    stdout(&out);
    let rows = csv_rows(&std::fs::read_to_string(&csv_path).unwrap());
    assert_eq!(rows.len(), 4);
    for row in &rows {
        let slot: usize = row[0].parse().unwrap();
        let visited: u64 = row[1].parse().unwrap();
        // the packet only counts as carried traffic after its arrival slot
        assert_eq!(visited, if slot == 0 { 0 } else { 2 }, "slot {slot}");
    }
}

fn post_counts(dump: &str) -> Vec<usize> {
    let v: Value = serde_json::from_str(dump).unwrap();
    v["slots"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            s["post_values"]
                .as_array()
                .unwrap()
                .iter()
                .filter(|e| !e["traffic"].as_array().unwrap().is_empty())
                .count()
        })
        .collect()
}

#[test]
fn chain_stores_no_more_post_states_than_the_oracle() {
    let dir = TempDir::new().unwrap();
    let t = write(
        dir.path(),
        "t.json",
        &trace(&[
            (0, 4, &[]),
            (0, 4, &[0]),
            (0, 5, &[1]),
            (1, 5, &[2]),
            (1, 6, &[3]),
        ]),
    );
    let c = write(dir.path(), "c.json", &two_state_channel());
    let base = [
        "solve",
        "--trace",
        s(&t),
        "--channel",
        s(&c),
        "--cost",
        "convex",
    ];
    let proposed = stdout(&run(&base));
    let oracle = stdout(&run(&[&base[..], &["--engine", "oracle"]].concat()));
    let (p, o) = (post_counts(&proposed), post_counts(&oracle));
    assert_eq!(p.len(), o.len());
    for (t, (a, b)) in p.iter().zip(&o).enumerate() {
        assert!(a <= b, "slot {t}: proposed {a} > oracle {b}");
    }
}

#[test]
fn bad_alpha_is_a_usage_error_naming_the_flag() {
    let out = run(&["solve", "--scenario", "volatile", "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--alpha"));
}

#[test]
fn missing_file_and_malformed_json_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "solve",
        "--trace",
        "/nonexistent.json",
        "--channel",
        "/nonexistent.json",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let t = dir.path().join("t.json");
    std::fs::write(&t, "{\n  \"packets\": [\n    {\"id\": 0,,}\n  ]\n}").unwrap();
    let c = write(dir.path(), "c.json", &two_state_channel());
    let out = run(&["solve", "--trace", s(&t), "--channel", s(&c)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn oracle_engine_refuses_large_traces() {
    let dir = TempDir::new().unwrap();
    let packets: Vec<(usize, usize, &[u32])> = (0..15).map(|_| (0, 2, &[][..])).collect();
    let t = write(dir.path(), "t.json", &trace(&packets));
    let c = write(dir.path(), "c.json", &constant_channel());
    let out = run(&[
        "solve",
        "--trace",
        s(&t),
        "--channel",
        s(&c),
        "--engine",
        "oracle",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constant_channel_makes_proposed_and_constant_rows_identical() {
    let dir = TempDir::new().unwrap();
    let t = write(
        dir.path(),
        "t.json",
        &trace(&[(0, 2, &[]), (0, 3, &[]), (1, 3, &[])]),
    );
    let c = write(dir.path(), "c.json", &constant_channel());
    let text = stdout(&run(&[
        "compare",
        "--trace",
        s(&t),
        "--channel",
        s(&c),
        "--cost",
        "convex",
        "--episodes",
        "50",
        "--seed",
        "4",
    ]));
    let rows = csv_rows(&text);
    let row = |name: &str| rows.iter().find(|r| &r[0] == name).unwrap().clone();
    let (p, k) = (row("proposed"), row("constant"));
    assert_eq!(
        p.iter().skip(1).take(9).collect::<Vec<_>>(),
        k.iter().skip(1).take(9).collect::<Vec<_>>()
    );
}

#[test]
fn compare_mean_is_near_the_oracle_value() {
    let dir = TempDir::new().unwrap();
    let t = write(
        dir.path(),
        "t.json",
        &trace(&[(0, 2, &[]), (0, 3, &[]), (1, 3, &[]), (2, 4, &[])]),
    );
    let c = write(dir.path(), "c.json", &two_state_channel());
    let text = stdout(&run(&[
        "compare",
        "--trace",
        s(&t),
        "--channel",
        s(&c),
        "--cost",
        "convex",
        "--episodes",
        "4000",
        "--seed",
        "8",
    ]));
    let rows = csv_rows(&text);
    let proposed = rows.iter().find(|r| &r[0] == "proposed").unwrap();
    let oracle = rows.iter().find(|r| &r[0] == "oracle").unwrap();
    let mean: f64 = proposed[4].parse().unwrap();
    let se: f64 = proposed[6].parse().unwrap();
    let target: f64 = oracle[11].parse().unwrap();
    assert!(
        (mean - target).abs() <= 3.0 * se,
        "{mean} vs {target} (se {se})"
    );
}

#[test]
fn commands_are_deterministic_given_the_seed() {
    let args = [
        "simulate",
        "--scenario",
        "standard",
        "--episodes",
        "40",
        "--loss-rate",
        "0.1",
        "--seed",
        "5",
    ];
    let a = stdout(&run(&args));
    let b = stdout(&run(&args));
    assert_eq!(a, b);
    let rows = csv_rows(&a);
    assert_eq!(rows.len(), 40);
    let header = a.lines().next().unwrap();
    assert_eq!(
        header,
        "episode,policy,utility,cost,distortion_gain,delivered_count"
    );
}

#[test]
fn simulate_writes_a_summary() {
    let dir = TempDir::new().unwrap();
    let summary = dir.path().join("sum.csv");
    stdout(&run(&[
        "simulate",
        "--scenario",
        "volatile",
        "--policy",
        "myopic",
        "--episodes",
        "10",
        "--summary-out",
        s(&summary),
    ]));
    let rows = csv_rows(&std::fs::read_to_string(summary).unwrap());
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "myopic");
    assert_eq!(&rows[0][1], "10");
}

fn inspect(packets: &[(usize, usize, &[u32])], slot: Option<&str>) -> (String, TempDir) {
    let dir = TempDir::new().unwrap();
    let t = write(dir.path(), "t.json", &trace(packets));
    let out_dir = dir.path().join("dot");
    let mut args = vec!["inspect-graph", "--trace", s(&t), "--out-dir", s(&out_dir)];
    if let Some(slot) = slot {
        args.extend(["--slot", slot]);
    }
    let text = stdout(&run(&args));
    (text, dir)
}

fn field(text: &str, key: &str) -> usize {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn inspect_chain_has_no_disconnected_pairs() {
    let (text, dir) = inspect(
        &[
            (0, 5, &[]),
            (0, 5, &[0]),
            (0, 5, &[1]),
            (0, 5, &[2]),
            (0, 5, &[3]),
        ],
        None,
    );
    assert_eq!(field(&text, "disconnection degree"), 0);
    assert_eq!(field(&text, "state tree non-empty nodes"), 5);
    let dot = std::fs::read_to_string(dir.path().join("dot/state_tree.dot")).unwrap();
    assert!(dot.starts_with("digraph state_tree {"));
    assert!(dot.contains("label=\"{0,1,2,3,4}\""));
}

#[test]
fn inspect_edgeless_five() {
    // equal attributes tie-break to a total order; distinct deadlines and
    // distortions that pull in opposite directions leave every pair unordered
    let dir = TempDir::new().unwrap();
    let packets: Vec<Value> = (0..5)
        .map(|i| {
            json!({
                "id": i, "size_bits": 1.0, "distortion": 1.0 + i as f64,
                "arrival": 0, "deadline": 1 + i, "parents": [],
            })
        })
        .collect();
    let t = write(dir.path(), "t.json", &json!({ "packets": packets }));
    let text = stdout(&run(&[
        "inspect-graph",
        "--trace",
        s(&t),
        "--out-dir",
        s(dir.path()),
    ]));
    assert_eq!(field(&text, "disconnection degree"), 10);
    assert_eq!(field(&text, "nodes + disconnection degree"), 15);
    // every non-empty subset of an antichain is reachable
    assert_eq!(field(&text, "state tree non-empty nodes"), 31);
}

#[test]
fn inspect_empty_trace_and_bad_slot() {
    let (text, _dir) = inspect(&[], None);
    assert_eq!(field(&text, "nodes"), 0);
    assert_eq!(field(&text, "disconnection degree"), 0);

    let dir = TempDir::new().unwrap();
    let t = write(dir.path(), "t.json", &trace(&[(0, 2, &[])]));
    let out = run(&[
        "inspect-graph",
        "--trace",
        s(&t),
        "--slot",
        "9",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_mode_dumps_thresholds_per_packet() {
    let text = stdout(&run(&[
        "solve",
        "--scenario",
        "standard",
        "--mode",
        "single",
    ]));
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["packets"].as_array().unwrap().len(), 8);
    assert!(v["packets"][0]["thresholds"].is_array());
}
