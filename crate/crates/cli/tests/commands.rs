use std::path::Path;
use std::process::{Command, Output};

const HOME: &str = include_str!("../../core/tests/fixtures/home_feed.xml");

fn tvcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvcast"))
        .args(args)
        .env_remove("TVCAST_CONFIG")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn convert_home(dir: &Path) -> std::path::PathBuf {
    let input = dir.join("home.xml");
    std::fs::write(&input, HOME).unwrap();
    let out = dir.join("out");
    assert!(tvcast(&["convert", s(&input), "--out", s(&out)]).status.success());
    out
}

#[test]
fn render_reproduces_convert_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = convert_home(tmp.path());
    let again = tmp.path().join("again");
    let o = tvcast(&["render", s(&out.join("home.page.json")), "--out", s(&again)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["home.wf", "home.svg"] {
        assert_eq!(
            std::fs::read(out.join(f)).unwrap(),
            std::fs::read(again.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn eval_scores_wireframes_and_judgments() {
    let tmp = tempfile::tempdir().unwrap();
    let out = convert_home(tmp.path());
    let csv = tmp.path().join("judgments.csv");
    std::fs::write(&csv, "page_id,group_id,match\nhome,0,1\nhome,1,1\nhome,2,1\nhome,3,0\n").unwrap();
    let json = tmp.path().join("eval.json");
    let wf = out.join("home.wf");
    let o = tvcast(&[
        "eval",
        "--generated",
        s(&wf),
        "--truth",
        s(&wf),
        "--judgments",
        s(&csv),
        "--json",
        s(&json),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(json).unwrap()).unwrap();
    assert_eq!(report["mean_miou"], 1.0);
    assert_eq!(report["exact_match"], 0.75);

    std::fs::write(&csv, "page_id,group_id,match\nhome,0,yes\n").unwrap();
    let o = tvcast(&["eval", "--generated", s(&wf), "--truth", s(&wf), "--judgments", s(&csv)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dsl_fmt_and_check() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("page.tvdsl");
    std::fs::write(&file, "Row( Tab(\"A\",selected) ,Tab(\"B\") )").unwrap();
    assert!(tvcast(&["dsl", "fmt", s(&file), "--write"]).status.success());
    assert_eq!(
        std::fs::read_to_string(&file).unwrap(),
        "Row(Tab(\"A\", selected), Tab(\"B\"))\n"
    );

    let bad = tmp.path().join("bad.tvdsl");
    std::fs::write(&bad, "Row(Blob(\"x\"))\n").unwrap();
    let o = tvcast(&["dsl", "check", s(&file), s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(
        stdout.contains("ok     ") && stdout.contains("bad.tvdsl:1:5"),
        "{stdout}"
    );
}

#[test]
fn group_and_classify_print_json() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("home.xml");
    std::fs::write(&input, HOME).unwrap();
    let o = tvcast(&["classify", s(&input)]);
    assert!(o.status.success());
    let groups: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(groups.as_array().unwrap().len(), 5);
    let o = tvcast(&["group", s(&input)]);
    let grouping: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(grouping["original_leaf_count"], 25);
    assert_eq!(grouping["final_unit_count"], 5);
}

#[test]
fn config_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("home.xml");
    std::fs::write(&input, HOME).unwrap();
    let cfg = tmp.path().join("tvcast.toml");
    std::fs::write(&cfg, "[tv]\nwidth = 1080\nheight = 1920\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_tvcast"))
        .args(["layout", s(&input)])
        .env("TVCAST_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1), "a portrait TV screen is a config error");

    std::fs::write(&cfg, "[tv]\nwidth = 3840\nheight = 2160\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_tvcast"))
        .args(["layout", s(&input)])
        .env("TVCAST_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["page"]["screen"]["width_px"], 3840);
}
