//! End-to-end checks of the CLI surface: flag handling, exit codes, file
//! formats, and run-to-run determinism.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use songkit::midi::write_melody_midi;
use songkit::song::MelodyTriplet;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_songkit")
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawning songkit")
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(bin())
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawning songkit");
    child.stdin.as_mut().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn encode_and_decode_print_expected_values() {
    let out = run(&["encode-duration", "0.5"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "169");

    let out = run(&["encode-duration", "9.0"]);
    assert_eq!(stdout(&out).trim(), "511", "values clip to x_max");

    let out = run(&["decode-duration", "169"]);
    let val: f64 = stdout(&out).trim().parse().unwrap();
    assert!((val - 0.4990706817).abs() < 1e-9);

    let out = run(&["decode-duration", "512"]);
    assert_eq!(out.status.code(), Some(1));

    // Negative durations are inside the codec domain.
    let out = run(&["encode-duration", "-0.3"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "0");
}

#[test]
fn usage_errors_exit_2() {
    let out = run(&["encode-duration"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn parse_reports_position_and_exits_1() {
    let doc = "The following is the melody:\nThe first line: \u{27E8}C4\u{27E9},\u{27E8}d_169\u{27E9}\n";
    let out = run_stdin(&["parse"], doc);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2, column 17"), "stderr: {err}");
}

#[test]
fn serialize_parse_round_trip_through_the_cli() {
    let entry = r#"{"kind":"paired","language":"english","lines":[[{"word":"my","notes":[{"pitch":"C4","duration_bin":169,"rest_bin":0}]}]]}"#;
    let doc = run_stdin(&["serialize"], entry);
    assert!(doc.status.success());
    let text = stdout(&doc);
    assert!(text.starts_with("The following is a song with both lyrics and melody:\n"));
    let back = run_stdin(&["parse"], &text);
    assert!(back.status.success());
    let reserialized = run_stdin(&["serialize"], &stdout(&back));
    assert_eq!(stdout(&reserialized), text);
}

#[test]
fn vocab_export_is_deterministic_and_pinned() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.tsv");
    let b = dir.path().join("b.tsv");
    assert!(run(&["vocab", "export", "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["vocab", "export", "--out", b.to_str().unwrap()]).status.success());
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());
    let text = String::from_utf8(bytes_a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 632);
    assert_eq!(lines[0], "\u{27E8}d_000\u{27E9}\t0");
    assert_eq!(lines[512], "\u{27E8}C-1\u{27E9}\t512");
}

#[test]
fn extract_midi_skips_bad_files_but_keeps_going() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.mid");
    let bad = dir.path().join("bad.mid");
    let triplets = vec![
        MelodyTriplet { pitch: 60, note_duration: 1.0, rest_duration: 0.5 },
        MelodyTriplet { pitch: 62, note_duration: 0.5, rest_duration: 0.0 },
    ];
    std::fs::write(&good, write_melody_midi(&triplets, "melody").unwrap()).unwrap();
    std::fs::write(&bad, b"not midi at all").unwrap();
    let out_path = dir.path().join("triplets.jsonl");

    let out = run(&[
        "extract-midi",
        good.to_str().unwrap(),
        bad.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "bad record must surface in the exit code");
    let body = std::fs::read_to_string(&out_path).unwrap();
    let records: Vec<&str> = body.lines().collect();
    assert_eq!(records.len(), 1, "good file still processed");
    let record: serde_json::Value = serde_json::from_str(records[0]).unwrap();
    assert_eq!(record["triplets"][0][0], 60);
    assert!(String::from_utf8(out.stderr).unwrap().contains("bad.mid"));
}

#[test]
fn jobs_flag_does_not_change_output_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for i in 0..6u8 {
        let p = dir.path().join(format!("m{i}.mid"));
        let t = vec![MelodyTriplet {
            pitch: 50 + i,
            note_duration: 0.5,
            rest_duration: 0.0,
        }];
        std::fs::write(&p, write_melody_midi(&t, "melody").unwrap()).unwrap();
        paths.push(p);
    }
    let out1 = dir.path().join("a.jsonl");
    let out4 = dir.path().join("b.jsonl");
    let mut args1: Vec<String> =
        paths.iter().map(|p| p.to_str().unwrap().to_string()).collect();
    let mut args4 = args1.clone();
    args1.extend(["--out".into(), out1.to_str().unwrap().into(), "--jobs".into(), "1".into()]);
    args4.extend(["--out".into(), out4.to_str().unwrap().into(), "--jobs".into(), "4".into()]);
    let refs1: Vec<&str> = args1.iter().map(String::as_str).collect();
    let refs4: Vec<&str> = args4.iter().map(String::as_str).collect();
    assert!(Command::new(bin()).arg("extract-midi").args(&refs1).status().unwrap().success());
    assert!(Command::new(bin()).arg("extract-midi").args(&refs4).status().unwrap().success());
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out4).unwrap());
}

#[test]
fn build_pretrain_is_seed_deterministic() {
    let toy = fixtures();
    let dir = tempfile::tempdir().unwrap();
    let paired = toy.join("melody.jsonl"); // melody entries are valid paired-mix input
    let mk = |name: &str, seed: &str| -> Vec<u8> {
        let out = dir.path().join(name);
        let status = Command::new(bin())
            .args([
                "build-pretrain",
                "--lyrics",
                toy.join("lyric.jsonl").to_str().unwrap(),
                "--melody",
                toy.join("melody.jsonl").to_str().unwrap(),
                "--paired",
                paired.to_str().unwrap(),
                "--seed",
                seed,
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(&out).unwrap()
    };
    let a = mk("a.txt", "7");
    let b = mk("b.txt", "7");
    let c = mk("c.txt", "8");
    assert_eq!(a, b, "same seed, same bytes");
    assert_ne!(a, c, "different seed shuffles differently");
    // Shard shape: documents separated by blank lines, headers intact.
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("\n\nThe following is "));
}

#[test]
fn build_pretrain_rejects_other_ratios() {
    let toy = fixtures();
    let out = run(&[
        "build-pretrain",
        "--lyrics",
        toy.join("lyric.jsonl").to_str().unwrap(),
        "--melody",
        toy.join("melody.jsonl").to_str().unwrap(),
        "--paired",
        toy.join("melody.jsonl").to_str().unwrap(),
        "--ratio",
        "2:1:1",
        "--out",
        "/dev/null",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_self_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let songs = dir.path().join("songs.jsonl");
    let mut body = String::new();
    for i in 0..3 {
        body.push_str(&format!(
            r#"{{"triplets":[[{},0.5,0.0],[{},0.25,0.1]],"lyrics":"my heart will go on"}}"#,
            60 + i,
            62 + i
        ));
        body.push('\n');
    }
    std::fs::write(&songs, body).unwrap();
    let report_path = dir.path().join("report.json");
    let toy = fixtures();
    let out = run(&[
        "evaluate",
        "--gen",
        songs.to_str().unwrap(),
        "--ref",
        songs.to_str().unwrap(),
        "--gen-emb",
        toy.join("gen_emb.txt").to_str().unwrap(),
        "--ref-emb",
        toy.join("ref_emb.txt").to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    // Embedding files have 10 lines vs 3 songs: that is a structural error.
    assert_eq!(out.status.code(), Some(1));

    let out = run(&[
        "evaluate",
        "--gen",
        songs.to_str().unwrap(),
        "--ref",
        songs.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["pd"], 100.0);
    assert_eq!(report["dd"], 100.0);
    assert_eq!(report["md"], 0.0);
    assert_eq!(report["rouge2"], 1.0);
    assert!(report["cosine"].is_null());
    assert_eq!(report["songs"].as_array().unwrap().len(), 3);
}

#[test]
fn clean_lyrics_handles_chinese() {
    let out = run_stdin(&["clean-lyrics", "--lang", "zh"], "我 爱 你！\nonly english\n");
    assert!(out.status.success());
    assert_eq!(stdout(&out), "我爱你\n");
}

#[test]
fn stats_and_histograms_emit_json() {
    let toy = fixtures();
    let out = run(&["stats", toy.join("lyric.jsonl").to_str().unwrap()]);
    assert!(out.status.success());
    let stats: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(stats["total"]["songs"], 10);
    assert!(stats["per_language"]["english"]["unique_words"].as_u64().unwrap() > 0);

    let out = run(&["histograms", toy.join("melody.jsonl").to_str().unwrap()]);
    assert!(out.status.success());
    let hist: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(hist["pitch"].as_array().unwrap().len(), 120);
    assert_eq!(hist["note_duration"]["counts"].as_array().unwrap().len(), 63);
}

#[test]
fn align_emits_document_and_sidecar() {
    let toy = fixtures();
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("doc.txt");
    let sidecar = dir.path().join("align.json");
    let out = run(&[
        "align",
        "--words",
        toy.join("words_00.jsonl").to_str().unwrap(),
        "--notes",
        toy.join("notes_00.jsonl").to_str().unwrap(),
        "--out",
        doc.to_str().unwrap(),
        "--sidecar",
        sidecar.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&doc).unwrap();
    assert!(text.starts_with("The following is a song with both lyrics and melody:\n"));
    let mapping: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sidecar).unwrap()).unwrap();
    assert_eq!(mapping["0"][0], 0);
    // The document parses back through the CLI.
    let parsed = run_stdin(&["parse"], &text);
    assert!(parsed.status.success());
}
