mod common;

use std::fs;
use std::path::PathBuf;

use common::{assert_schema, corpus, navslice};
use navslice::corpus::ADMIN_EXCLUSION;
use navslice::rewrite::Trace;
use navslice::term::{Position, SlicedTerm};
use navslice::webapp::{parse_webapp, resolve_builtins};
use navslice_cli::docs::{GraphDoc, SliceDoc, VerdictDoc};
use serde_json::Value;
use tempfile::TempDir;

fn path(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

/// Checks the buggy forum in `dir` and returns the trace file.
fn refute(dir: &TempDir) -> PathBuf {
    let r = navslice(dir.path(), &["check", path(&corpus("forum-buggy.nav")), "--prop", ADMIN_EXCLUSION]);
    assert_eq!(r.code, 1, "{}{}", r.stdout, r.stderr);
    let line = r.stdout.lines().find_map(|l| l.trim().strip_prefix("trace written to ")).expect("trace path printed");
    dir.path().join(line)
}

#[test]
fn check_exit_statuses() {
    let dir = TempDir::new().unwrap();
    let trace = refute(&dir);
    let t = Trace::from_json(&fs::read_to_string(&trace).unwrap(), resolve_builtins).unwrap();
    t.verify().unwrap();
    assert_eq!(t.lasso_start, Some(t.states.len() - 1));

    let fixed = corpus("forum-fixed.nav");
    let r = navslice(dir.path(), &["check", path(&fixed), "--prop", ADMIN_EXCLUSION]);
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    assert!(r.stdout.starts_with("fulfilled"));

    let r = navslice(dir.path(), &["check", path(&fixed), "--prop", ADMIN_EXCLUSION, "--budget-states", "300"]);
    assert_eq!(r.code, 2);
    assert!(r.stdout.contains("more than 300 states"));
    let r = navslice(dir.path(), &["--format", "json", "check", path(&fixed), "--prop", ADMIN_EXCLUSION, "--budget-depth", "10"]);
    assert_eq!(r.code, 2);
    let v: VerdictDoc = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!((v.verdict.as_str(), v.trace_id), ("exhausted", None));
}

#[test]
fn load_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.nav"), "page A {\n  scrpt { skip }\n}\n").unwrap();
    let r = navslice(dir.path(), &["check", "bad.nav", "--prop", "[] true"]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("bad.nav:2:11: unknown page section `scrpt`"), "{}", r.stderr);

    let r = navslice(dir.path(), &["check", "missing.nav", "--prop", "[] true"]);
    assert_eq!(r.code, 3);
    let shop = corpus("shop.nav");
    let r = navslice(dir.path(), &["check", path(&shop), "--prop", "[] ("]);
    assert_eq!(r.code, 3);
    let r = navslice(dir.path(), &["--format", "json", "check", path(&shop), "--prop", "[] nosuch(u1)"]);
    assert_eq!(r.code, 3);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_schema("error", &v);
    assert_eq!(v["error"]["code"], "load_error");
}

#[test]
fn identical_checks_give_identical_documents() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let (ta, tb) = (refute(&a), refute(&b));
    assert_eq!(ta.file_name(), tb.file_name());
    assert_eq!(fs::read(&ta).unwrap(), fs::read(&tb).unwrap());
    // the store is append-only and reuses the trace
    refute(&a);
    let index = fs::read_to_string(a.path().join(".navslice/index.jsonl")).unwrap();
    assert_eq!(index.lines().count(), 1);
}

#[test]
fn slice_reports_metrics_and_writes_document() {
    let dir = TempDir::new().unwrap();
    let trace = refute(&dir);
    let r = navslice(dir.path(), &["slice", path(&trace), "last", "B(?,_,?,_,_,_,_,_,_)", "--out", "s.json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("|T| = ") && r.stdout.contains("|T•| = ") && r.stdout.contains("ratio = "));
    let doc: SliceDoc = serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(doc.window, 7);
    assert!(doc.window_metrics.reduction >= 85.0, "{:?}", doc.window_metrics);
    assert!(r.stdout.contains(&format!("reduction = {:.1}%", doc.window_metrics.reduction)));
    assert_schema("slice", &serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap());

    // everything relevant: nothing removed at the selected state
    let r = navslice(dir.path(), &["--format", "json", "slice", path(&trace), "40", "?", "--window", "1", "--out", "all.json"]);
    assert_eq!(r.code, 0);
    let doc: SliceDoc = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(doc.window_metrics.reduction, 0.0);
    assert_eq!(doc.sliced.state_index, 40);

    for (args, what) in [
        (vec!["slice", "nope.json", "last", "?"], "missing trace"),
        (vec!["slice", path(&trace), "9999", "?"], "index out of range"),
        (vec!["slice", path(&trace), "first", "?"], "bad selector"),
        (vec!["slice", path(&trace), "last", "B(?,"], "pattern syntax"),
    ] {
        assert_eq!(navslice(dir.path(), &args).code, 3, "{what}");
    }
}

#[test]
fn render_graph_counts_edges() {
    let dir = TempDir::new().unwrap();
    let forum = corpus("forum-buggy.nav");
    let r = navslice(dir.path(), &["render-graph", path(&forum)]);
    assert_eq!(r.code, 0);
    let dashed: Vec<&str> =
        r.stdout.lines().filter(|l| l.contains("style=dashed") && l.trim_start().starts_with("\"Access\"")).collect();
    assert_eq!(dashed.len(), 2, "{dashed:?}");
    assert!(dashed.iter().any(|l| l.contains("reg=yes")) && dashed.iter().any(|l| l.contains("reg=no")));

    let app = parse_webapp(&fs::read_to_string(&forum).unwrap()).unwrap();
    let expected: usize = app.pages.iter().map(|p| p.links.len() + p.continuations.len()).sum();
    assert_eq!(r.stdout.matches("->").count(), expected);

    fs::write(dir.path().join("one.nav"), "page A { script { skip } } scenario { browser a tab t entry A; }").unwrap();
    let r = navslice(dir.path(), &["--format", "json", "render-graph", "one.nav"]);
    let g: GraphDoc = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!((g.nodes.len(), g.solid_edges + g.dashed_edges), (1, 0));
    assert_schema("graph", &serde_json::from_str(&r.stdout).unwrap());

    fs::write(dir.path().join("broken.nav"), "page A { script { skip } }").unwrap();
    assert_eq!(navslice(dir.path(), &["render-graph", "broken.nav"]).code, 3);
}

#[test]
fn replay_verify_accepts_slices_and_catches_a_mutation() {
    let dir = TempDir::new().unwrap();
    let trace = refute(&dir);
    let r = navslice(dir.path(), &["slice", path(&trace), "last", "B(?,_,?,_,_,_,_,_,_)", "--out", "s.json"]);
    assert_eq!(r.code, 0);
    let r = navslice(dir.path(), &["--format", "json", "replay-verify", "s.json"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_schema("replay", &v);
    assert_eq!(v["agreed"], 100);

    // drop alfred's browser id from the sliced initial state
    let mut doc: SliceDoc = serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    let t = Trace::from_doc(&doc.sliced.trace, resolve_builtins).unwrap();
    let gone: Position = "Λ.1.1.1".parse().unwrap();
    assert_eq!(t.states[0].subterm_at(&gone).unwrap().head().as_ref() as &str, "bidAlfred");
    let first = &mut doc.sliced.slices[0];
    first.kept_positions.retain(|p| *p != gone);
    first.slice = SlicedTerm::new(t.states[0].clone(), first.kept_positions.iter().cloned()).render_with(Some(&t.theory.sig), '*');
    fs::write(dir.path().join("m.json"), serde_json::to_string(&doc).unwrap()).unwrap();
    let r = navslice(dir.path(), &["replay-verify", "m.json"]);
    assert_eq!(r.code, 1, "{}", r.stdout);

    fs::write(dir.path().join("junk.json"), "{}").unwrap();
    assert_eq!(navslice(dir.path(), &["replay-verify", "junk.json"]).code, 3);
}
