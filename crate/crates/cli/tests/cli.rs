use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_track-enrich"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// A short synthetic match to evaluate and another to train on.
fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synthesize", "--output-dir", "data", "--half-duration", "300", "--seed", "21"]);
    ok(dir.path(), &["synthesize", "--output-dir", "train", "--half-duration", "300", "--seed", "22"]);
    fs::write(
        dir.path().join("run.toml"),
        "tracking_home = \"data/tracking_home.csv\"\n\
         tracking_away = \"data/tracking_away.csv\"\n\
         events = \"data/events.csv\"\n\
         output_dir = \"out\"\n",
    )
    .unwrap();
    dir
}

const TRAIN_ON: [&str; 6] = [
    "--tracking-home",
    "train/tracking_home.csv",
    "--tracking-away",
    "train/tracking_away.csv",
    "--events",
    "train/events.csv",
];

fn train(dir: &Path) {
    let mut args = vec!["train", "--config", "run.toml"];
    args.extend(TRAIN_ON);
    ok(dir, &args);
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_input_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["train", "--tracking-home", "nowhere.csv", "--tracking-away", "also.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.csv"));
}

#[test]
fn out_of_range_settings_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["train", "--alpha", "1.5"][..],
        &["simulate-broadcast", "--sample-period", "0"],
        &["evaluate", "--percentiles", "50,120"],
        &["enrich", "--config", "missing.toml"],
    ] {
        assert_eq!(run(dir.path(), args).status.code(), Some(2), "{args:?}");
    }
    fs::write(dir.path().join("bad.toml"), "no_such_key = 1\n").unwrap();
    assert_eq!(run(dir.path(), &["train", "--config", "bad.toml"]).status.code(), Some(2));
}

#[test]
fn corrupt_input_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("h.csv"), "not,a,tracking,file\n").unwrap();
    fs::write(dir.path().join("a.csv"), "not,a,tracking,file\n").unwrap();
    let out = run(dir.path(), &["train", "--tracking-home", "h.csv", "--tracking-away", "a.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn flags_override_the_config_file() {
    let dir = workspace();
    let out = ok(
        dir.path(),
        &["simulate-broadcast", "--config", "run.toml", "--trim-frames", "100", "--discrete", "d.json"],
    );
    assert!(out.contains("half 1: 101 frames"), "{out}");
    assert!(dir.path().join("d.json").exists());
}

#[test]
fn pipeline_runs_end_to_end_and_repeats_byte_for_byte() {
    let dir = workspace();
    let d = dir.path();
    train(d);
    let model = fs::read(d.join("out/model.json")).unwrap();
    train(d);
    assert_eq!(fs::read(d.join("out/model.json")).unwrap(), model);
    let m = read_json(d.join("out/model.json"));
    let resid = m["resid_std"].as_f64().unwrap();
    assert!(resid.is_finite() && resid > 0.0);

    ok(d, &["simulate-broadcast", "--config", "run.toml"]);
    let out = ok(d, &["enrich", "--config", "run.toml"]);
    assert!(out.contains("s per frame"), "{out}");
    for half in [1, 2] {
        let frames = read_json(d.join(format!("out/enriched_half{half}.json")));
        let frames = frames.as_array().unwrap();
        assert_eq!(frames.len(), 241);
        for f in frames {
            assert_eq!(f["players"].as_array().unwrap().len(), 22);
        }
    }

    ok(d, &["evaluate", "--config", "run.toml"]);
    let report = fs::read(d.join("out/report.json")).unwrap();
    let svg = fs::read(d.join("out/percentile_50.svg")).unwrap();
    ok(d, &["evaluate", "--config", "run.toml"]);
    assert_eq!(fs::read(d.join("out/report.json")).unwrap(), report);
    assert_eq!(fs::read(d.join("out/percentile_50.svg")).unwrap(), svg);

    let r = read_json(d.join("out/report.json"));
    for key in [
        "mean_all_in_phase",
        "mean_offcam_in_phase",
        "median_offcam_in_phase",
        "mean_all_out_of_phase",
        "mean_prev_frame_observed",
        "mean_offcam_event_frames",
    ] {
        assert!(r["pooled"][key].as_f64().is_some(), "{key} missing");
    }
    for p in ["25", "75", "95"] {
        assert!(d.join(format!("out/percentile_{p}.svg")).exists());
    }
    let curve = fs::read_to_string(d.join("out/curve.csv")).unwrap();
    assert!(curve.lines().count() > 2);
}

#[test]
fn fully_visible_frames_evaluate_to_zero() {
    let dir = workspace();
    let d = dir.path();
    train(d);
    ok(d, &["simulate-broadcast", "--config", "run.toml", "--visibility-radius", "1000"]);
    ok(d, &["evaluate", "--config", "run.toml", "--visibility-radius", "1000"]);
    let r = read_json(d.join("out/report.json"));
    assert_eq!(r["pooled"]["mean_all_in_phase"].as_f64(), Some(0.0));
    assert_eq!(r["pooled"]["predictions"].as_u64(), Some(0));
}

#[test]
fn orphan_360_frame_lands_in_the_errors_file() {
    let dir = workspace();
    let d = dir.path();
    train(d);
    let events: Vec<Value> = (0..40)
        .map(|i| {
            json!({"id": format!("e{i}"), "timestamp": format!("00:00:{:02}.000", i + 1), "period": 1,
                   "team": {"id": 1, "name": "Reds"}, "location": [60.0 + i as f64 * 0.5, 40.0]})
        })
        .collect();
    let mut frames: Vec<Value> = (0..40)
        .map(|i| {
            let x = 60.0 + i as f64 * 0.5;
            json!({"event_uuid": format!("e{i}"), "visible_area": [], "freeze_frame": [
                {"location": [x, 40.0], "teammate": true, "actor": true, "keeper": false},
                {"location": [x - 10.0, 30.0], "teammate": true, "actor": false, "keeper": false},
                {"location": [x + 8.0, 45.0], "teammate": false, "actor": false, "keeper": false}
            ]})
        })
        .collect();
    frames.push(json!({"event_uuid": "nobody", "visible_area": [], "freeze_frame": []}));
    fs::write(d.join("events360.json"), serde_json::to_string(&events).unwrap()).unwrap();
    fs::write(d.join("frames360.json"), serde_json::to_string(&frames).unwrap()).unwrap();

    ok(d, &["enrich", "--config", "run.toml", "--frames-360", "frames360.json", "--events-360", "events360.json"]);
    let errors = read_json(d.join("out/axis_errors.json"));
    let errors = errors.as_array().unwrap();
    assert_eq!(errors.len(), 1);
    assert!(errors[0]["reason"].as_str().unwrap().contains("orphan"));
    let enriched = read_json(d.join("out/enriched_half1.json"));
    for f in enriched.as_array().unwrap() {
        let players = f["players"].as_array().unwrap();
        assert_eq!(players.len(), 22);
        let visible = players.iter().filter(|p| p["visible"] == json!(true)).count();
        assert!(visible <= 3);
    }
}
