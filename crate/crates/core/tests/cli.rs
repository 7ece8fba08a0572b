use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spikedecode::io::{load_spikes, load_trajectory};
use spikedecode::model::WeightFile;
use spikedecode::synth::{gen_synth, SynthSpec};
use spikedecode::{NetworkConfig, NetworkModel};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spikedecode"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn analyze_prints_plan_and_verdict() {
    let text = stdout(&run(bin()
        .args(["analyze", "--config"])
        .arg(config("rtnet.toml"))));
    assert!(text.contains("receptive field R   46"), "{text}");
    assert!(text.contains("24 steps = 96 ms"));
    assert!(text.contains("62.5 Hz"));
    assert!(text.contains("verdict             capable"));

    let text = stdout(&run(bin()
        .args(["analyze", "--sweep", "10", "--config"])
        .arg(config("bmnet.toml"))));
    assert!(text.contains("receptive field R   652"));
    assert!(text.contains("1308 ms"));
    assert!(text.contains("31.25 Hz"));
    assert!(text.contains("not capable"));
    assert_eq!(
        text.lines()
            .filter(|l| l.trim_end().ends_with("true") || l.trim_end().ends_with("false"))
            .count(),
        10
    );
}

#[test]
fn shipped_configs_load() {
    for (name, preset) in [
        ("rtnet.toml", NetworkConfig::rtnet(96)),
        ("srtnet.toml", NetworkConfig::srtnet(96)),
        ("bmnet.toml", NetworkConfig::bmnet(96)),
    ] {
        assert_eq!(NetworkConfig::load(config(name)).unwrap(), preset, "{name}");
    }
}

#[test]
fn synth_quantize_stream_offline_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);

    run(bin()
        .args(["gen-synth", "--steps", "400", "--seed", "5", "--spikes"])
        .arg(p("s.snns"))
        .arg("--truth")
        .arg(p("t.csv")));
    let spikes = load_spikes(p("s.snns")).unwrap();
    let truth = load_trajectory(p("t.csv")).unwrap();
    let spec = SynthSpec {
        duration_steps: 400,
        seed: 5,
        ..SynthSpec::default()
    };
    let (expected_spikes, expected_truth) = gen_synth(&spec).unwrap();
    assert_eq!(spikes, expected_spikes);
    assert_eq!(truth, expected_truth);

    run(bin()
        .args(["init-weights", "--seed", "2", "--gain", "3", "--config"])
        .arg(config("rtnet.toml"))
        .arg("--output")
        .arg(p("w.snnw")));
    let text = stdout(&run(bin()
        .args(["quantize", "--config"])
        .arg(config("srtnet.toml"))
        .arg("--weights")
        .arg(p("w.snnw"))
        .arg("--output")
        .arg(p("q.snnw"))));
    assert!(text.contains("float32 -> 1-1-7"), "{text}");
    let q = WeightFile::load(p("q.snnw")).unwrap();
    assert!(!q.is_float());
    NetworkModel::<f64>::from_weight_file(NetworkConfig::srtnet(96), &q).unwrap();

    for (mode, output) in [("run-stream", "stream.csv"), ("run-offline", "offline.csv")] {
        let out = run(bin()
            .args([mode, "--report-equivalence", "--config"])
            .arg(config("srtnet.toml"))
            .arg("--weights")
            .arg(p("q.snnw"))
            .arg("--input")
            .arg(p("s.snns"))
            .arg("--output")
            .arg(p(output)));
        let text = stdout(&out);
        assert!(text.contains("max abs diff 0e0"), "{mode}: {text}");
        assert!(text.contains("bit exact true"));
        if mode == "run-stream" {
            assert!(String::from_utf8_lossy(&out.stderr).contains("p99"));
        }
    }
    assert_eq!(
        fs::read(p("stream.csv")).unwrap(),
        fs::read(p("offline.csv")).unwrap()
    );
    let traj = load_trajectory(p("stream.csv")).unwrap();
    assert_eq!(traj.start_ms, 76.0);
    assert_eq!(traj.len(), 4 * (1 + (400 - 46) / 4));

    let text = stdout(&run(bin()
        .args(["bench", "--config"])
        .arg(config("srtnet.toml"))
        .arg("--weights")
        .arg(p("q.snnw"))
        .arg("--input")
        .arg(p("s.snns"))
        .arg("--truth")
        .arg(p("t.csv"))
        .arg("--json")));
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let file = &json["files"][0];
    assert!(file["r2"].as_f64().unwrap().is_finite());
    assert!(
        file["report"]["footprint_nonzero_bytes"].as_u64()
            <= file["report"]["footprint_bytes"].as_u64()
    );
}

#[test]
fn csv_input_matches_binary_input() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let (spikes, _) = gen_synth(&SynthSpec {
        channels: 96,
        duration_steps: 80,
        seed: 1,
        ..SynthSpec::default()
    })
    .unwrap();
    spikedecode::io::save_spikes(p("s.snns"), &spikes).unwrap();
    let csv: String = spikes
        .counts()
        .columns()
        .map(|c| c.iter().map(u8::to_string).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    fs::write(p("s.csv"), csv).unwrap();
    run(bin()
        .args(["init-weights", "--config"])
        .arg(config("rtnet.toml"))
        .arg("--output")
        .arg(p("w.snnw")));
    let outputs: Vec<String> = ["s.snns", "s.csv"]
        .iter()
        .map(|input| {
            stdout(&run(bin()
                .args(["run-offline", "--config"])
                .arg(config("rtnet.toml"))
                .arg("--weights")
                .arg(p("w.snnw"))
                .arg("--input")
                .arg(p(input))))
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    assert!(outputs[0].starts_with("t_ms,vx,vy\n"));
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let bad_csv = dir.path().join("bad.csv");
    fs::write(&bad_csv, "0,1\n2,-1\n").unwrap();

    let cases: Vec<(Vec<std::ffi::OsString>, &str)> = vec![
        (
            vec![
                "analyze".into(),
                "--config".into(),
                dir.path().join("missing.toml").into(),
            ],
            "loading config",
        ),
        (
            vec![
                "analyze".into(),
                "--config".into(),
                config("rtnet.toml").into(),
                "--bogus".into(),
            ],
            "unexpected argument",
        ),
        (vec!["frobnicate".into()], "unrecognized subcommand"),
        (
            vec![
                "run-offline".into(),
                "--config".into(),
                config("srtnet.toml").into(),
                "--weights".into(),
                dir.path().join("none.snnw").into(),
                "--input".into(),
                bad_csv.clone().into(),
            ],
            "loading weights",
        ),
    ];
    for (args, needle) in cases {
        let out = bin().args(&args).output().unwrap();
        assert!(!out.status.success(), "{args:?} succeeded");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{args:?}: {err}");
    }

    // A float weight file against a fixed-point config.
    let w = dir.path().join("w.snnw");
    run(bin()
        .args(["init-weights", "--config"])
        .arg(config("rtnet.toml"))
        .arg("--output")
        .arg(&w));
    let out = bin()
        .args(["run-offline", "--config"])
        .arg(config("srtnet.toml"))
        .arg("--weights")
        .arg(&w)
        .arg("--input")
        .arg(&bad_csv)
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("quantize the file first"));

    // Negative spike count in CSV input.
    let out = bin()
        .args(["run-offline", "--config"])
        .arg(config("rtnet.toml"))
        .arg("--weights")
        .arg(&w)
        .arg("--input")
        .arg(&bad_csv)
        .output()
        .unwrap();
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(!out.status.success());
    assert!(
        err.contains("row 2, column 2") && err.contains("negative"),
        "{err}"
    );
}

#[test]
fn gen_synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let s = dir.path().join(format!("s{i}.snns"));
            let t = dir.path().join(format!("t{i}.csv"));
            run(bin()
                .args(["gen-synth", "--steps", "300", "--seed", "9", "--spikes"])
                .arg(&s)
                .arg("--truth")
                .arg(&t));
            [fs::read(s).unwrap(), fs::read(t).unwrap()].concat()
        })
        .collect();
    assert_eq!(files[0], files[1]);
}
