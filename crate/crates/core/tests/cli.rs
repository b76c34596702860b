use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_threadscope");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn synth(dir: &Path) {
    let spec = dir.join("spec.txt");
    fs::write(&spec, "n_posts = 300\npopular_posts = 3\nn_authors = 50\n# comment line\n").unwrap();
    let out = run(&["synth", "--spec", spec.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--seed", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn analysis(cmd: &str, dir: &Path, out: &Path, extra: &[&str]) -> Output {
    let posts = dir.join("posts.ndjson");
    let comments = dir.join("comments.ndjson");
    let mut args = vec![
        cmd,
        "--posts",
        posts.to_str().unwrap(),
        "--comments",
        comments.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn full_report_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let out = dir.path().join("report");
    let o = analysis("report", dir.path(), &out, &["--emit-post-metrics", "--emit-author-metrics"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let names = files(&out);
    for f in ["manifest.csv", "ingest_summary.csv", "tail_fits.csv", "cyborg_table.csv", "author_summary.csv"] {
        assert!(names.iter().any(|n| n == f), "missing {f}");
    }
    // one row per kept post
    let summary = fs::read_to_string(out.join("ingest_summary.csv")).unwrap();
    let kept: usize = summary
        .lines()
        .find_map(|l| l.strip_prefix("posts,"))
        .expect("posts row")
        .parse()
        .unwrap();
    let rows = fs::read_to_string(out.join("post_metrics.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, kept);
}

#[test]
fn single_section_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let out = dir.path().join("d");
    let o = analysis("distributions", dir.path(), &out, &["--threads", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let manifest = fs::read_to_string(out.join("manifest.csv")).unwrap();
    for line in manifest.lines().skip(1) {
        assert!(line.contains(",distributions,"), "unexpected entry {line}");
    }
}

#[test]
fn sections_flag_and_ndjson() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let out = dir.path().join("n");
    let o = analysis("report", dir.path(), &out, &["--sections", "lifetimes,cyborg", "--format", "ndjson"]);
    assert_eq!(o.status.code(), Some(0));
    let names = files(&out);
    assert!(names.iter().any(|n| n == "mayfly_summary.ndjson"));
    assert!(names.iter().any(|n| n == "cyborg_table.ndjson"));
    assert!(!names.iter().any(|n| n.starts_with("tail_fits")));
    let text = fs::read_to_string(out.join("cyborg_table.ndjson")).unwrap();
    for line in text.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
}

#[test]
fn missing_input_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let o = analysis("report", dir.path(), &dir.path().join("x"), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_period_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let o = analysis("lifetimes", dir.path(), &dir.path().join("x"), &["--period-start", "20", "--period-end", "10"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn failed_section_is_partial() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let out = dir.path().join("p");
    // a directory where a file must go makes that section fail
    fs::create_dir_all(out.join("tail_fits.csv")).unwrap();
    let o = analysis("report", dir.path(), &out, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("cyborg_table.csv").is_file());
    let manifest = fs::read_to_string(out.join("manifest.csv")).unwrap();
    assert!(manifest.contains("distributions"));
}
