use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("zhang-cli-{}", std::process::id())).join(name);
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn zhang(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_zhang"));
    cmd.args(args).env_remove("ZHANG_OUTPUT_DIR").env_remove("ZHANG_THREADS");
    if let Some(out) = out {
        cmd.arg("--out").arg(out);
    }
    cmd.output().expect("spawn zhang")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&zhang(&["--help"], None)), 0);
    assert_eq!(code(&zhang(&["--version"], None)), 0);
    assert_eq!(code(&zhang(&["coding", "--help"], None)), 0);
}

#[test]
fn usage_errors_exit_one() {
    let dir = scratch("usage");
    assert_eq!(code(&zhang(&["simulate", "--bogus"], Some(&dir))), 1);
    assert_eq!(code(&zhang(&["frobnicate"], None)), 1);
    // flags that belong to another command are rejected, not ignored
    let o = zhang(&["atlas", "--events", "5"], Some(&dir));
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--events"));
    assert_eq!(code(&zhang(&["simulate", "--Ec", "0"], Some(&dir))), 1);
    assert_eq!(code(&zhang(&["simulate", "--eps", "3/2"], Some(&dir))), 1);
}

#[test]
fn zero_events_still_write_headers() {
    let dir = scratch("zero");
    let o = zhang(&["simulate", "--d", "1", "--L", "2", "--Ec", "7/2", "--eps", "1/2", "--events", "0"], Some(&dir));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let events = fs::read_to_string(dir.join("events.csv")).unwrap();
    assert_eq!(events, "event_index,start_site,duration,size,waiting_time\n");
    let manifest = fs::read_to_string(dir.join("manifest.toml")).unwrap();
    assert!(manifest.contains("status = \"ok\""));
}

#[test]
fn coding_of_the_two_site_chain() {
    let dir = scratch("coding");
    let o = zhang(&["coding", "--d", "1", "--L", "2", "--Ec", "7/2", "--eps", "1/2"], Some(&dir));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.join("coding.json"));
    let dense = v["dense"].as_array().unwrap();
    assert_eq!(dense.len(), 6);
    for row in dense {
        let ones = row.as_array().unwrap().iter().filter(|x| x.as_u64() == Some(1)).count();
        assert_eq!(ones, 2);
    }
    assert_eq!(v["clean"], true);
}

#[test]
fn removability_verdicts() {
    let dir = scratch("removable");
    let o = zhang(&["removability", "--d", "1", "--L", "2", "--Ec", "1/3", "--eps", "1/3"], Some(&dir));
    assert_eq!(code(&o), 0);
    let v = json(&dir.join("certificate.json"));
    assert_eq!(v["certificate"]["verdict"]["kind"], "removable");
    assert_eq!(v["certificate"]["verdict"]["m"], 1);

    let dir = scratch("nonremovable");
    let o = zhang(&["removability", "--d", "1", "--L", "2", "--Ec", "7", "--eps", "1/2"], Some(&dir));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.join("certificate.json"));
    assert_eq!(v["certificate"]["verdict"]["kind"], "non_removable");
}

#[test]
fn budget_cut_exits_two_with_partial_manifest() {
    let dir = scratch("budget");
    let o = zhang(&["atlas", "--d", "1", "--L", "2", "--Ec", "1/3", "--eps", "1/2", "--piece-budget", "1"], Some(&dir));
    assert_eq!(code(&o), 2);
    let manifest = fs::read_to_string(dir.join("manifest.toml")).unwrap();
    assert!(manifest.contains("status = \"partial\""));
}

#[test]
fn manifest_replays_to_identical_bytes() {
    let first = scratch("replay-first");
    let again = scratch("replay-again");
    let args = ["simulate", "--d", "2", "--L", "4", "--Ec", "2", "--eps", "1/4", "--events", "500", "--seed", "9"];
    assert_eq!(code(&zhang(&args, Some(&first))), 0);
    let cfg = first.join("manifest.toml");
    assert_eq!(code(&zhang(&["simulate", "--config", cfg.to_str().unwrap()], Some(&again))), 0);
    for name in ["events.csv", "histograms.csv", "summary.json", "final_state.bin"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(again.join(name)).unwrap(), "{name} differs");
    }
    // only the output directory may differ
    let strip = |dir: &Path| -> String {
        let text = fs::read_to_string(dir.join("manifest.toml")).unwrap();
        text.lines().filter(|l| !l.starts_with("directory = ")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&first), strip(&again));
}

#[test]
fn seeds_change_the_event_stream() {
    let a = scratch("seed-a");
    let b = scratch("seed-b");
    let base = ["simulate", "--d", "1", "--L", "8", "--Ec", "2", "--eps", "1/4", "--events", "200"];
    assert_eq!(code(&zhang(&[&base[..], &["--seed", "1"]].concat(), Some(&a))), 0);
    assert_eq!(code(&zhang(&[&base[..], &["--seed", "2"]].concat(), Some(&b))), 0);
    assert_ne!(fs::read(a.join("events.csv")).unwrap(), fs::read(b.join("events.csv")).unwrap());
}
