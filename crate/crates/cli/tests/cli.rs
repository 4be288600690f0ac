//! The binary's exit codes and output, and round trips through the file
//! formats.

use std::path::PathBuf;
use std::process::{Command, Output};

use dwc_polytope::{rat, DwcPolytope, Region};
use mosg::corpus::{self, random_acyclic_game, random_game, NAMES};
use mosg::io;
use mosg_cli::args::InputArgs;
use mosg_cli::parse_inputs;
use proptest::prelude::*;

fn mosg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mosg")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn path_arg(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

fn files(game: PathBuf, query: Option<PathBuf>) -> InputArgs {
    InputArgs { game: Some(game), query, builtin: None, n: None, from: None, thresholds: None }
}

#[test]
fn unreachable_thresholds_from_the_first_root_are_a_negative_answer() {
    let args = ["dq", "--builtin", "no-analog-left", "--thresholds", "3/4,3/4"];
    let s0 = mosg(&args);
    assert_eq!(code(&s0), 1, "{}", String::from_utf8_lossy(&s0.stderr));
    assert!(String::from_utf8_lossy(&s0.stdout).contains("\"no\""));
    let t0 = mosg(&[&args[..], &["--from", "t0"]].concat());
    assert_eq!(code(&t0), 0);
}

#[test]
fn iteration_cap_breach_is_unknown() {
    let out = mosg(&["determinacy", "decide", "--builtin", "flower", "--fixpoint-cap", "1"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"unknown\""));
}

#[test]
fn horizon_two_forall_exists_run_succeeds() {
    let out = mosg(&["solve", "--builtin", "no-analog-right", "--semantics", "forall-exists", "--k", "2"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"]["status"], "completed");
    assert_eq!(v["stats"].as_array().unwrap().len(), 3 * v["states"].as_array().unwrap().len());
}

#[test]
fn input_errors_exit_two_with_context() {
    let dir = scratch("bad-owner");
    let game = dir.join("g.json");
    std::fs::write(&game, r#"{"states":[{"id":7,"owner":"nobody"}],"initial":7,"edges":[]}"#).unwrap();
    let out = mosg(&["validate", "--game", path_arg(&game)]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("state 7") && err.contains("nobody"), "{err}");

    let missing = mosg(&["solve", "--game", "/nonexistent/game.json", "--query", "/nonexistent/q.json"]);
    assert_eq!(code(&missing), 2);
    let syntax = dir.join("broken.json");
    std::fs::write(&syntax, "{\n  \"states\": [\n    oops\n").unwrap();
    let out = mosg(&["validate", "--game", path_arg(&syntax)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    assert_eq!(code(&mosg(&["dq", "--builtin", "intro", "--thresholds", "3/2,0"])), 2);
    assert_eq!(code(&mosg(&["dq", "--builtin", "flower"])), 2, "conjunctive query given to dq");
}

#[test]
fn invalid_games_are_a_negative_validation() {
    let dir = scratch("invalid");
    let game = dir.join("g.json");
    let text = r#"{"states":[{"id":0,"owner":"random"},{"id":1,"owner":"eve"}],"initial":0,
        "edges":[{"from":0,"to":1,"prob":"1/3"},{"from":1,"to":1}]}"#;
    std::fs::write(&game, text).unwrap();
    let out = mosg(&["validate", "--game", path_arg(&game)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"valid\": false"));
}

#[test]
fn decimal_probabilities_are_exact() {
    let dir = scratch("decimal");
    let game = dir.join("g.json");
    let query = dir.join("q.json");
    std::fs::write(
        &game,
        r#"{"states":[{"id":0,"owner":"random"},{"id":1,"label":"A","owner":"eve"},{"id":2,"label":"B","owner":"eve"}],
           "initial":0,
           "edges":[{"from":0,"to":1,"prob":"0.5"},{"from":0,"to":2,"prob":"1/2"},{"from":1,"to":1},{"from":2,"to":2}]}"#,
    )
    .unwrap();
    std::fs::write(&query, r#"{"connective":"and","objectives":[{"kind":"reach","set":[1]}],"thresholds":["0.5"]}"#)
        .unwrap();
    let inp = parse_inputs(&files(game.clone(), Some(query.clone()))).unwrap();
    assert_eq!(inp.game.distribution(0)[0].1, rat(1, 2));
    assert_eq!(inp.thresholds.unwrap().thresholds, vec![rat(1, 2)]);
    let out = mosg(&["solve", "--game", path_arg(&game), "--query", path_arg(&query)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["value"], serde_json::json!([["1/2"]]));
    assert_eq!(v["achievable"], true);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let runs: [&[&str]; 5] = [
        &["dq", "--builtin", "intro", "--format", "svg"],
        &["dq", "--builtin", "intro"],
        &["solve", "--builtin", "flower", "--semantics", "forall-exists", "--format", "csv"],
        &["si", "--builtin", "intro", "--mode", "dq-standard", "--trace"],
        &["determinacy", "certify", "--builtin", "det-strat-mem", "--family", "limit"],
    ];
    for args in runs {
        let (a, b) = (mosg(args), mosg(args));
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn svg_shows_each_part_of_the_region() {
    let out = mosg(&["dq", "--builtin", "intro", "--format", "svg"]);
    let svg = String::from_utf8(out.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&mosg(&["dq", "--builtin", "intro"]).stdout).unwrap();
    let parts = v["region"].as_array().unwrap().len();
    assert!(parts >= 1);
    assert_eq!(svg.matches("<polygon").count(), parts);
    assert!(svg.contains("objective 1") && svg.contains("objective 2"));
    let three = mosg(&["solve", "--builtin", "three-stage", "--n", "3", "--k", "1", "--format", "svg"]);
    assert_eq!(code(&three), 2);
}

#[test]
fn render_accepts_results_polytopes_and_regions() {
    let dir = scratch("render");
    let result = dir.join("result.json");
    std::fs::write(&result, mosg(&["dq", "--builtin", "intro"]).stdout).unwrap();
    let direct = mosg(&["dq", "--builtin", "intro", "--format", "svg"]).stdout;
    assert_eq!(mosg(&["render", path_arg(&result)]).stdout, direct);
    let poly = dir.join("poly.json");
    std::fs::write(&poly, r#"[["1/2","1"],["1","0.25"]]"#).unwrap();
    let out = mosg(&["render", path_arg(&poly)]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout).matches("<polygon").count(), 1);
}

#[test]
fn zoo_files_load_back_to_the_constructions() {
    let dir = scratch("zoo");
    for name in NAMES {
        let out = mosg(&["zoo", name, "--out", path_arg(&dir)]);
        assert_eq!(code(&out), 0, "{name}");
        let (g, q) = corpus::build_named(name, None).unwrap();
        let inp =
            parse_inputs(&files(dir.join(format!("{name}.game.json")), Some(dir.join(format!("{name}.query.json")))))
                .unwrap();
        assert_eq!(inp.game, g, "{name}");
        assert_eq!(inp.template, q, "{name}");
        let checked = mosg(&[
            "validate",
            "--game",
            path_arg(&dir.join(format!("{name}.game.json"))),
            "--query",
            path_arg(&dir.join(format!("{name}.query.json"))),
        ]);
        assert_eq!(code(&checked), 0, "{name}");
    }
}

#[test]
fn certificate_files_round_trip() {
    let dir = scratch("certificate");
    let fam = dir.join("flower.json");
    let first = mosg(&["determinacy", "certify", "--builtin", "flower", "--dump-family", path_arg(&fam)]);
    assert_eq!(code(&first), 0);
    let again =
        mosg(&["determinacy", "certify", "--builtin", "flower", "--family", "file", "--family-file", path_arg(&fam)]);
    assert_eq!(code(&again), 0);
    assert_eq!(first.stdout, again.stdout);
}

#[test]
fn bench_csv_uses_the_experiment_columns() {
    let out = mosg(&["bench", "--instances", "1", "--m", "6", "--k", "2", "--all"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "instance_id,seed,k,state,count_pruned,count_unpruned,timeout_pruned,timeout_unpruned,wall_ms"
    );
    assert_eq!(text.lines().count(), 1 + 2 * 6);
}

fn polytope() -> impl Strategy<Value = DwcPolytope> {
    let point = proptest::collection::vec((0i64..=12).prop_map(|n| rat(n, 12)), 2);
    proptest::collection::vec(point, 1..5).prop_map(|pts| DwcPolytope::from_points(pts).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn games_and_queries_round_trip(seed in any::<u64>(), m in 3usize..=9, acyclic in any::<bool>()) {
        let (g, q) = if acyclic { random_acyclic_game(m.max(5), seed) } else { random_game(m, 1, seed) }.unwrap();
        let loaded = io::parse_game(&io::write_game(&g)).unwrap();
        prop_assert_eq!(&loaded.game, &g);
        let back = io::parse_query(&io::write_query(&io::template_to_file(&q)), &loaded).unwrap();
        prop_assert_eq!(&back.template, &q);
        prop_assert!(back.thresholds.is_none());
        let tq = q.with_thresholds(vec![rat((seed % 8) as i64, 7).min(rat(1, 1)), rat(1, 3)]);
        let back = io::parse_query(&io::write_query(&io::threshold_query_to_file(&tq)), &loaded).unwrap();
        prop_assert_eq!(back.thresholds, Some(tq));
    }

    #[test]
    fn polytopes_and_regions_round_trip(parts in proptest::collection::vec(polytope(), 1..4)) {
        for p in &parts {
            let text = mosg_cli::run::to_json(p);
            prop_assert_eq!(&serde_json::from_str::<DwcPolytope>(&text).unwrap(), p);
        }
        let region = Region::new(parts).unwrap();
        let text = mosg_cli::run::to_json(&region);
        prop_assert_eq!(serde_json::from_str::<Region>(&text).unwrap(), region);
    }
}
