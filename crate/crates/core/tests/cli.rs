use std::process::{Command, Output};

fn hecogrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hecogrid")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

#[test]
fn validate_passes_for_a_feasible_config() {
    let out = hecogrid(&["validate", "--task", "team_together", "--coord", "2", "--hetero", "3", "--states", "50"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}

#[test]
fn coordination_above_team_size_exits_three() {
    let out = hecogrid(&["validate", "--coord", "5", "--agents", "4"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn crowded_grid_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("x.log");
    let out = hecogrid(&[
        "rollout", "--width", "4", "--height", "4", "--treasures", "9", "--log", log.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn too_many_zones_exits_three() {
    let out = hecogrid(&["validate", "--hetero", "7"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn bad_flags_exit_two() {
    assert_eq!(code(&hecogrid(&["rollout", "--agents", "many"])), 2);
    assert_eq!(code(&hecogrid(&["frobnicate"])), 2);
    assert_eq!(code(&hecogrid(&["validate", "--task", "team_alone"])), 2);
}

#[test]
fn rollout_then_replay_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("run.log");
    let log = log.to_str().unwrap();
    let out = hecogrid(&[
        "rollout", "--task", "key_for_treasure", "--coord", "2", "--hetero", "2", "--batch", "3",
        "--steps", "300", "--seed", "5", "--log", log,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = hecogrid(&["replay", "--log", log]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn scripted_rollout_replays() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("scripted.log");
    let log = log.to_str().unwrap();
    let out = hecogrid(&["rollout", "--policy", "scripted", "--coord", "2", "--steps", "100", "--log", log]);
    assert_eq!(code(&out), 0);
    assert_eq!(code(&hecogrid(&["replay", "--log", log])), 0);
}

#[test]
fn tampered_digest_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.log");
    let log = path.to_str().unwrap();
    assert_eq!(code(&hecogrid(&["rollout", "--steps", "20", "--log", log])), 0);
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x01;
    std::fs::write(&path, &bytes).unwrap();
    assert_eq!(code(&hecogrid(&["replay", "--log", log])), 4);
}

#[test]
fn truncated_or_missing_log_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.log");
    let log = path.to_str().unwrap();
    assert_eq!(code(&hecogrid(&["rollout", "--steps", "20", "--log", log])), 0);
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert_eq!(code(&hecogrid(&["replay", "--log", log])), 1);
    let missing = dir.path().join("missing.log");
    assert_eq!(code(&hecogrid(&["replay", "--log", missing.to_str().unwrap()])), 1);
}

#[test]
fn render_ascii_prints_the_board() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("a.log");
    let out = hecogrid(&["rollout", "--steps", "2", "--render-ascii", "--log", log.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("t=0"));
    assert!(stdout.contains("t=1"));
}

#[test]
fn bench_reports_throughput() {
    let out = hecogrid(&["bench", "--batch", "4", "--steps", "10", "--threads", "1"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("agent-steps/s"));
}
