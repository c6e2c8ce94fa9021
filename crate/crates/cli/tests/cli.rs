//! End-to-end runs of the `rcp` binary and the library entry points.

use std::path::Path;
use std::process::Command;

use rcp_cli::output::verify_checksum;
use rcp_cli::replay::{replay_bytes, write_sample};
use rcp_cli::{run_experiment, ExperimentConfig, ReplayCommand, RunOptions};
use rcp_core::{build_sample, InterarrivalLaw, SeedSpec, SpaceTimeBox};

fn rcp(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rcp")).args(args).current_dir(dir).env_remove("RCP_SEED").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SURVIVAL: &str = r#"{"kind":"survival-curve","law":{"family":"exponential","rate":1.0},
  "lambdas":[0.3,3],"d":1,"horizon":10,"radius":10,"trials":100,"seed":3}"#;

#[test]
fn survival_curve_has_documented_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SURVIVAL);
    let out = rcp(&["run", "--config", &cfg, "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = std::fs::read(dir.path().join("o/survival-curve.csv")).unwrap();
    assert!(verify_checksum(&bytes));
    let text = String::from_utf8(bytes).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,estimate,ci_lo,ci_hi,boundary_hits,trials");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0.3,") && lines[2].starts_with("3,"));
    let side: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("o/survival-curve.json")).unwrap()).unwrap();
    assert_eq!(side["config"]["seed"], 3);
    assert!(side["provenance"].as_str().unwrap().starts_with("rcp-cli "));
}

#[test]
fn lambda0_reports_positive_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"kind":"lambda0","d":1,"theta":2.5,"c_moment":1}"#);
    let out = rcp(&["run", "--config", &cfg, "--out", "."], dir.path());
    assert!(out.status.success());
    let side: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("lambda0.json")).unwrap()).unwrap();
    let r = &side["result"];
    assert!(r["n0"].as_u64().unwrap() > 0);
    assert!(r["b_n0"].is_string() && r["N"].is_string());
    let ln = r["ln_lambda0"].as_f64().unwrap();
    assert!(ln.is_finite());
    let l0 = rcp_core::renorm::lambda0_bound(
        &rcp_core::renorm::ScaleSchedule::new(rcp_core::renorm::derive_constants(1, 2.5).unwrap()),
        r["n0"].as_u64().unwrap() as u32,
    )
    .unwrap();
    assert_eq!(ln, l0.ln_lambda0);
}

#[test]
fn bad_configs_exit_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    for (i, text) in [
        r#"{"kind":"survival-curve","law":{"family":"exponential","rate":1.0},"lambda":1,"trials":-3}"#,
        r#"{"kind":"survival-curve","lambda":1,"bogus":true}"#,
        r#"{"kind":"survival-curve","law":{"family":"exponential","rate":-1.0},"lambda":1}"#,
        r#"{"kind":"survival-curve""#,
    ]
    .iter()
    .enumerate()
    {
        let cfg = write(dir.path(), &format!("c{i}.json"), text);
        let out = rcp(&["run", "--config", &cfg, "--out", "o"], dir.path());
        assert_eq!(out.status.code(), Some(2), "config {i}");
        assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    }
    assert!(!dir.path().join("o").exists());
}

#[test]
fn precondition_and_capacity_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.json", r#"{"kind":"recurrence","d":1,"theta":1.0,"c_moment":1}"#);
    assert_eq!(rcp(&["run", "--config", &cfg], dir.path()).status.code(), Some(4));
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"kind":"crossing","law":{"family":"exponential","rate":1.0},"theta":2.5,"lambda":1,"n":30,"trials":1}"#,
    );
    assert_eq!(rcp(&["run", "--config", &cfg], dir.path()).status.code(), Some(3));
}

#[test]
fn seed_flag_beats_environment_beats_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SURVIVAL);
    let run = |extra: &[&str], env: Option<&str>, out: &str| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_rcp"));
        c.args(["run", "--config", &cfg, "--out", out]).args(extra).current_dir(dir.path()).env_remove("RCP_SEED");
        if let Some(e) = env {
            c.env("RCP_SEED", e);
        }
        assert!(c.output().unwrap().status.success());
        let side: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join(out).join("survival-curve.json")).unwrap()).unwrap();
        side["seed"].as_u64().unwrap()
    };
    assert_eq!(run(&[], None, "a"), 3);
    assert_eq!(run(&[], Some("11"), "b"), 11);
    assert_eq!(run(&["--seed", "12"], Some("11"), "c"), 12);
}

#[test]
fn worker_count_does_not_change_bytes() {
    let config = ExperimentConfig::from_json(SURVIVAL).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for w in [1, 3] {
        let opts = RunOptions { workers: Some(w), out: Some(dir.path().join(w.to_string())), ..RunOptions::default() };
        csvs.push(std::fs::read(run_experiment(&config, &opts).unwrap().csv).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn replay_reproduces_baselines_for_random_samples() {
    let law = InterarrivalLaw::pareto_tail(0.7, 1.0).unwrap();
    let config = ExperimentConfig::from_json(r#"{"kind":"crossing"}"#).unwrap();
    for seed in 0..10u64 {
        let dir = tempfile::tempdir().unwrap();
        let d = 1 + (seed as usize % 2);
        let b = SpaceTimeBox::centered(d, 3, 0.0, 4.0).unwrap();
        let sample = build_sample(&b, 0.5 + seed as f64 * 0.2, &law, SeedSpec::new(seed)).unwrap();
        let paths = write_sample(&sample, dir.path(), &config, seed).unwrap();
        for cmd in [ReplayCommand::Evolve, ReplayCommand::Crossings] {
            let out = dir.path().join("replay");
            let p = rcp_cli::replay(&paths.dump, cmd, &out).unwrap();
            let baseline = std::fs::read(dir.path().join(cmd.file_name())).unwrap();
            assert_eq!(std::fs::read(p).unwrap(), baseline, "seed {seed} {cmd:?}");
            assert_eq!(replay_bytes(&sample, cmd).unwrap(), baseline);
        }
    }
}

#[test]
fn corrupt_dumps_exit_five() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"kind":"density","law":{"family":"exponential","rate":1.0},"lambda":1,"radius":2,"horizon":3}"#,
    );
    assert!(rcp(&["sample", "--config", &cfg, "--out", "s"], dir.path()).status.success());
    let good = std::fs::read(dir.path().join("s/sample.rcpg")).unwrap();
    let mut bad = good.clone();
    bad[0] = b'X';
    std::fs::write(dir.path().join("magic.rcpg"), &bad).unwrap();
    std::fs::write(dir.path().join("empty.rcpg"), b"").unwrap();
    let mut version = good.clone();
    version[4] = 99;
    std::fs::write(dir.path().join("version.rcpg"), &version).unwrap();
    std::fs::write(dir.path().join("short.rcpg"), &good[..good.len() - 3]).unwrap();
    for f in ["magic.rcpg", "empty.rcpg", "version.rcpg", "short.rcpg"] {
        let out = rcp(&["replay", "--dump", f, "--command", "evolve", "--out", "r"], dir.path());
        assert_eq!(out.status.code(), Some(5), "{f}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = rcp(&["replay", "--dump", "s/sample.rcpg", "--command", "evolve", "--out", "r"], dir.path());
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(dir.path().join("r/evolve.csv")).unwrap(),
        std::fs::read(dir.path().join("s/evolve.csv")).unwrap()
    );
}

#[test]
fn every_kind_runs_on_a_small_config() {
    let configs = [
        r#"{"kind":"crossing","law":{"family":"pareto-tail","alpha":0.7,"scale":1.0},"theta":2.5,"lambda":0.05,"ns":[1,2],"trials":50}"#,
        r#"{"kind":"recurrence","d":1,"theta":8,"c_moment":1,"rule":"corrected","steps":5}"#,
        r#"{"kind":"recurrence","d":1,"theta":2.5,"law":{"family":"pareto-tail","alpha":0.7,"scale":1.0},"trials":200,"steps":3}"#,
        r#"{"kind":"tunnel-bound","lambdas":[0.5,1],"depth":50}"#,
        r#"{"kind":"tunnel-bound","lambda":1,"depth":20,"ln_r0":120}"#,
        r#"{"kind":"tunnel-trial","law":{"family":"example-log-sv","t0":20},"lambda":1,"depth":30,"trials":5}"#,
        r#"{"kind":"determinism","law":{"family":"exponential","rate":1.0},"lambda":1,"t":2,"radius":3,"fields":3,"replicates":10}"#,
        r#"{"kind":"density","law":{"family":"pareto-tail","alpha":0.5,"scale":1.0},"lambda":0.5,"radius":20,"window":2,"times":[5,10],"trials":20}"#,
        r#"{"kind":"renewal-diagnostics","law":{"family":"pareto-tail","alpha":0.7,"scale":1.0},"theta":2.5,"times":[1,10],"us":[3,30],"trials":100}"#,
        r#"{"kind":"renewal-diagnostics","diagnostic":"renewal-measure","law":{"family":"exponential","rate":2.0},"xs":[5,10],"h":1,"trials":100}"#,
        r#"{"kind":"renewal-diagnostics","diagnostic":"erickson","law":{"family":"example-log-sv","t0":20},"t":1000,"thetas":[0.5],"trials":100}"#,
        r#"{"kind":"renewal-diagnostics","diagnostic":"tail-ratio","law":{"family":"example-log-sv","t0":20},"times":[1e8],"exponents":[0.5,1]}"#,
        r#"{"kind":"event-prob","law":{"family":"pareto-tail","alpha":0.3,"scale":1.0},"d":1,"trials":20,
            "events":[{"event":"j","n":2,"t":3,"s":2,"theta":2.5},{"event":"b","n":3,"eps":0.1}]}"#,
    ];
    for text in configs {
        let config = ExperimentConfig::from_json(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions { out: Some(dir.path().to_path_buf()), ..RunOptions::default() };
        let paths = run_experiment(&config, &opts).unwrap_or_else(|e| panic!("{text}: {e}"));
        let bytes = std::fs::read(&paths.csv).unwrap();
        assert!(verify_checksum(&bytes), "{text}");
        assert!(String::from_utf8(bytes).unwrap().lines().count() >= 3, "{text}");
    }
}
