use std::path::PathBuf;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use trinion::double::random_normalized_triple;
use trinion::volumes::hg;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trinion")).args(args).output().expect("binary runs")
}

fn input_file(name: &str, contents: &str) -> String {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn poisson_check_passes() {
    let out = run(&["poisson-check", "--n", "2", "--samples", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r["checks"]["bracket"]["max_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(r["pass"], json!(true));
}

#[test]
fn reports_are_reproducible() {
    let args = ["poisson-check", "--n", "3", "--samples", "8", "--seed", "42"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["poisson-check", "--n", "3", "--samples", "8", "--seed", "43"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn okounkov_blow_up() {
    let system = r#"{"d": 2, "generators": [[[1, 0], "1"], [[0, 1], "1"], [[2, 0], "1"], [[1, 1], "1"], [[0, 2], "1"]]}"#;
    let path = input_file("blowup.json", system);
    let out = run(&["okounkov", "--input", &path]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["vertices"], json!([["0", "1"], ["0", "2"], ["1", "0"], ["2", "0"]]));
    assert_eq!(r["lattice_points"], json!(5));
}

#[test]
fn malformed_input_is_a_schema_error() {
    let path = input_file("broken.json", "{\"d\": 2, \"generators\": [");
    assert_eq!(run(&["okounkov", "--input", &path]).status.code(), Some(2));
    assert_eq!(run(&["decompose", "--input", &path]).status.code(), Some(2));
    assert_eq!(run(&["recover", "--tolerance", "nonsense=1"]).status.code(), Some(2));
    assert_eq!(run(&["recover", "--tolerance", "recovery"]).status.code(), Some(2));
    assert_eq!(run(&["recover", "--samples", "0"]).status.code(), Some(2));
    assert_eq!(run(&["poisson-check", "--n", "1"]).status.code(), Some(2));
    assert_eq!(run(&["validate-sheaf"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn decompose_input_matrix() {
    let path = input_file("g.json", r#"{"matrix": [[[2, 0], [1, 0]], [[1, 0], [1, 0]]], "order": "lower-diag-upper"}"#);
    let out = run(&["decompose", "--input", &path]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["diagonal"], json!([[2.0, 0.0], [0.5, 0.0]]));
    let singular = input_file("s.json", r#"{"matrix": [[[0, 0], [1, 0]], [[-1, 0], [0, 0]]], "order": "lower-diag-upper"}"#);
    let out = run(&["decompose", "--input", &singular]);
    assert_eq!(out.status.code(), Some(1));
    assert!(report(&out)["error"].as_str().unwrap().contains("minor"));
}

#[test]
fn tolerance_override_can_fail_a_campaign() {
    assert_eq!(run(&["decompose", "--n", "3", "--samples", "5"]).status.code(), Some(0));
    let out = run(&["decompose", "--n", "3", "--samples", "5", "--tolerance", "reconstruction=0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["checks"]["reconstruction"]["tolerance"], json!(0.0));
}

#[test]
fn hamiltonians_round_trip_through_json() {
    let first = run(&["hamiltonians", "--n", "3", "--seed", "5"]);
    assert_eq!(first.status.code(), Some(0));
    let r = report(&first);
    assert_eq!(r["values"].as_object().unwrap().len(), 3 + 2 + 3 + 7);
    let path = input_file("triple.json", &r["triple"].to_string());
    let second = report(&run(&["hamiltonians", "--input", &path]));
    for (k, v) in r["values"].as_object().unwrap() {
        let (a, b) = (v.as_array().unwrap(), second["values"][k].as_array().unwrap());
        for (x, y) in a.iter().zip(b) {
            assert!((x.as_f64().unwrap() - y.as_f64().unwrap()).abs() < 1e-9, "{k}");
        }
    }
}

#[test]
fn recover_from_table() {
    let t = random_normalized_triple(3, &mut ChaCha8Rng::seed_from_u64(3));
    let pair = |z: &[trinion::matgroup::C64]| z.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>();
    let input = json!({"table": hg(&t), "d1": pair(&t.d1()), "d3": pair(&t.d3())});
    let path = input_file("table.json", &input.to_string());
    let out = run(&["recover", "--input", &path]);
    assert_eq!(out.status.code(), Some(0));
    let n3 = &report(&out)["n3_plus"];
    let expected = t.n3_plus();
    for i in 0..3 {
        for j in 0..3 {
            let re = n3[i][j][0].as_f64().unwrap();
            assert!((re - expected[(i, j)].re).abs() < 1e-9);
        }
    }
    assert_eq!(run(&["recover", "--n", "4", "--samples", "10"]).status.code(), Some(0));
}

#[test]
fn glue_graphs() {
    let r = report(&run(&["glue", "--genus", "3", "--samples", "10"]));
    assert_eq!(r["graph"]["trinions"], json!(4));
    assert_eq!(r["graph"]["edges"].as_array().unwrap().len(), 6);
    assert_eq!(r["euler_count"], json!(true));
    let out = run(&["glue"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["glued_dimension"], json!(3));
    assert_eq!(run(&["glue", "--n", "3"]).status.code(), Some(2));
}

#[test]
fn sheaf_validation() {
    let ok = input_file("sheaf_ok.json", r#"{"n": 3, "punctures": [{"torsion_rank": 2, "beta_nonzero": [2]}]}"#);
    assert_eq!(run(&["validate-sheaf", "--input", &ok]).status.code(), Some(0));
    let bad = input_file("sheaf_bad.json", r#"{"n": 3, "punctures": [{"torsion_rank": 2, "beta_nonzero": [1, 2]}]}"#);
    let out = run(&["validate-sheaf", "--input", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(report(&out)["error"].as_str().unwrap().contains("beta^1"));
}

#[test]
fn output_file() {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("report.json");
    let out = run(&["okounkov", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains("stabilized"));
}
