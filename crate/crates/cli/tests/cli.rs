use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn jcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jcl")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn bench_csv(dir: &Path, name: &str, extra: &[&str]) -> String {
    let out = dir.join(name);
    let mut args = vec!["bench", "--problem", "mm-cb", "--methods", "jcl", "--reps", "1", "--seed", "7", "--no-timing", "--out"];
    args.push(out.to_str().unwrap());
    args.extend_from_slice(extra);
    let o = jcl(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    fs::read_to_string(out).unwrap()
}

#[test]
fn bench_writes_initial_block_then_acquisitions() {
    let dir = tempfile::tempdir().unwrap();
    let text = bench_csv(dir.path(), "a.csv", &[]);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 9 + 2 + 2);
    let modes: Vec<String> = lines.map(|l| l.split(',').nth(4).unwrap().to_string()).collect();
    assert!(modes[..5].iter().all(|m| m == "initial"));
    assert!(modes.len() > 5 && modes.len() <= 25);
    assert!(modes[5..].iter().all(|m| m == "exploit" || m == "explore"));
}

#[test]
fn bench_is_byte_identical_and_defaults_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let a = bench_csv(dir.path(), "a.csv", &[]);
    let b = bench_csv(dir.path(), "b.csv", &[]);
    assert_eq!(a, b);
    let c = bench_csv(dir.path(), "c.csv", &["--epsilon", "0.001"]);
    assert_eq!(a, c);
    let d = bench_csv(dir.path(), "d.csv", &["--epsilon", "0.5"]);
    assert_ne!(a, d);
}

#[test]
fn bad_input_exits_two_and_run_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = out.to_str().unwrap();
    assert_eq!(code(&jcl(&["bench", "--problem", "nope", "--out", out])), 2);
    assert_eq!(code(&jcl(&["bench", "--problem", "mm-cb", "--frobnicate", "--out", out])), 2);
    assert_eq!(code(&jcl(&["bench", "--problem", "mm-cb", "--methods", "magic", "--out", out])), 2);
    let missing = dir.path().join("no/such/dir.csv");
    let o = jcl(&["bench", "--problem", "mm-cb", "--methods", "lhs", "--out", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

fn synthetic_csv(values: &[f64]) -> String {
    let mut s = String::from("method,seed,rep,n,mode,x1,y1,t_n,jmax,d_n,wall_ms\n");
    for (rep, v) in values.iter().enumerate() {
        s.push_str(&format!("lhs,{rep},{rep},1,initial,0.5,1,,,{v},\n"));
    }
    s
}

#[test]
fn summary_uses_linear_interpolation() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    let vals: Vec<f64> = (1..=10).map(f64::from).collect();
    fs::write(&input, synthetic_csv(&vals)).unwrap();
    let o = jcl(&["summary", "--input", input.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "method,n,p10,p50,p90");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[..2], ["lhs", "1"]);
    assert_eq!(row[3].parse::<f64>().unwrap(), 5.5);
}

#[test]
fn summary_of_one_run_collapses_percentiles() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a.csv");
    fs::write(&csv, bench_csv(dir.path(), "run.csv", &[])).unwrap();
    let o = jcl(&["summary", "--input", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    for line in String::from_utf8(o.stdout).unwrap().lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert!(f[2] == f[3] && f[3] == f[4], "{line}");
    }
}

#[test]
fn summary_rejects_malformed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "method,seed\nlhs,1,2,3\n").unwrap();
    assert_eq!(code(&jcl(&["summary", "--input", input.to_str().unwrap()])), 2);
    fs::write(&input, synthetic_csv(&[1.0]).replace(",1,,,1,", ",1,,,oops,")).unwrap();
    assert_eq!(code(&jcl(&["summary", "--input", input.to_str().unwrap()])), 2);
}

fn json_line(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|_| panic!("not JSON: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn ask_tell_initial_block_then_epsilon_stop() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    let st = state.to_str().unwrap();
    let o = jcl(&["init", "--state", st, "--dim", "2", "--targets", "0,0", "--n0", "5", "--budget", "25", "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for i in 0..5 {
        let s = json_line(&jcl(&["suggest", "--state", st]));
        assert_eq!(s["mode"], "initial");
        let x = serde_json::to_string(&s["x"]).unwrap();
        let y = format!("{},{}", 1.0 + i as f64, -2.0);
        assert_eq!(code(&jcl(&["tell", "--state", st, "--x", &x, "--y", &y])), 0);
    }
    let s = json_line(&jcl(&["suggest", "--state", st]));
    assert!(s["mode"] == "exploit" || s["mode"] == "explore");
    let keys: Vec<&String> = s.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 4);
    let x = serde_json::to_string(&s["x"]).unwrap();
    assert_eq!(code(&jcl(&["tell", "--state", st, "--x", &x, "--y", "[0.0, 0.0]"])), 0);
    let o = jcl(&["suggest", "--state", st]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), r#"{"done":true,"reason":"epsilon"}"#);
}

#[test]
fn repeated_suggest_returns_the_pending_point() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    let st = state.to_str().unwrap();
    assert_eq!(code(&jcl(&["init", "--state", st, "--problem", "mm-cb", "--seed", "1"])), 0);
    let a = jcl(&["suggest", "--state", st]).stdout;
    let b = jcl(&["suggest", "--state", st]).stdout;
    assert_eq!(a, b);
}

#[test]
fn ask_tell_errors_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    let st = state.to_str().unwrap();
    assert_eq!(code(&jcl(&["init", "--state", st, "--problem", "mm-cb"])), 0);
    // re-init without --force refuses
    assert_eq!(code(&jcl(&["init", "--state", st, "--problem", "mm-cb"])), 2);

    let o = jcl(&["tell", "--state", st, "--x", "0.5,0.5,0.5", "--y", "1,1"]);
    assert_eq!(code(&o), 2);
    let e = json_line(&o);
    assert_eq!(e["code"], 2);
    assert!(e["error"].as_str().is_some());

    let o = jcl(&["tell", "--state", st, "--x", "[0.5, 0.5", "--y", "1,1"]);
    assert_eq!(code(&o), 2);
    assert_eq!(json_line(&o)["code"], 2);

    let text = fs::read_to_string(&state).unwrap();
    let stale = text.replacen("\"version\": \"1\"", "\"version\": \"0\"", 1);
    assert_ne!(text, stale);
    fs::write(&state, stale).unwrap();
    let o = jcl(&["suggest", "--state", st]);
    assert_eq!(code(&o), 2);
    assert_eq!(json_line(&o)["code"], 2);
}

#[test]
fn locked_state_is_refused_and_left_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    let st = state.to_str().unwrap();
    assert_eq!(code(&jcl(&["init", "--state", st, "--problem", "mm-cb"])), 0);
    let before = fs::read(&state).unwrap();
    let lock = dir.path().join("s.json.lock");
    fs::write(&lock, "").unwrap();
    let o = jcl(&["suggest", "--state", st]);
    assert_eq!(code(&o), 2);
    assert_eq!(fs::read(&state).unwrap(), before);
    fs::remove_file(&lock).unwrap();
    assert_eq!(code(&jcl(&["suggest", "--state", st])), 0);
    assert!(!lock.exists());
}
