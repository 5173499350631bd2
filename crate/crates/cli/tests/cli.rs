use std::path::PathBuf;
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scenario(name: &str) -> String {
    root().join("scenarios").join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deformq")).args(args).output().expect("binary runs")
}

fn write_temp(name: &str, text: &str) -> String {
    let dir = std::env::temp_dir().join(format!("deformq-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn flagship_passes_every_check() {
    let out = run(&["verify", &scenario("flagship.scn")]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    for check in ["assoc", "lift", "fibred_bracket", "connection", "curvature_theorem"] {
        assert!(text.contains(&format!("CHECK {check} [flagship] PASS")), "{text}");
    }
    assert!(!text.contains("FAIL"));
}

#[test]
fn reports_are_reproducible() {
    let path = scenario("flagship.scn");
    let a = run(&["report", &path, "--seed", "17"]);
    let b = run(&["report", &path, "--seed", "17"]);
    assert_eq!(a.stdout, b.stdout);
    let json: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(json["scenario"], "flagship");
    assert_eq!(json["seed"], 17);
    let checks = json["checks"].as_array().unwrap();
    let names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    for c in checks {
        assert_eq!(c.as_object().unwrap().len(), 3);
        assert_eq!(c["status"], "PASS");
    }
}

#[test]
fn timings_are_opt_in() {
    let path = scenario("torus.scn");
    let plain = String::from_utf8(run(&["verify", &path]).stdout).unwrap();
    assert!(!plain.contains(" ms)"));
    let timed = String::from_utf8(run(&["verify", &path, "--timings"]).stdout).unwrap();
    assert!(timed.contains(" ms)"));
}

#[test]
fn empty_check_list() {
    let path = write_temp("empty.scn", "vars = x, y\npi = dx^dy\n");
    let out = run(&["verify", &path, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(json["checks"].as_array().unwrap().is_empty());
}

#[test]
fn parse_errors_exit_with_two() {
    let path = write_temp("bad.scn", "vars = x, y\npi = dx^dy\nP0 = [[x, x], [1-x, 1-*x]]\n");
    let out = run(&["verify", &path]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("3:"), "{err}");
    let path = write_temp("nonpoisson.scn", "vars = x, y, z\npi = x*dx^dy + y^2*dy^dz + z*dz^dx + x*y*dx^dz\nstar = kontsevich2\n");
    let out = run(&["verify", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("not Poisson"));
    assert_eq!(run(&["verify", "/nonexistent/file.scn"]).status.code(), Some(2));
}

#[test]
fn failing_check_exits_with_one() {
    let path = write_temp(
        "broken.scn",
        "vars = x, y\npi = dx^dy\nstar = explicit\nC1 = [ (1/2, (1,0), (0,1)), (-1/2, (0,1), (1,0)) ]\nC2 = [ (1, (1,0), (1,0)) ]\nchecks = assoc\n",
    );
    let out = run(&["verify", &path]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("CHECK assoc [scenario] FAIL"), "{text}");
}

#[test]
fn star_mul_prints_coefficients() {
    let out = run(&["star-mul", &scenario("flagship.scn"), "x", "y"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "lambda^0: x*y\nlambda^1: 1/2\nlambda^2: 0\n");
}

#[test]
fn lift_prints_the_idempotent() {
    let out = run(&["lift", &scenario("mixed.scn")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("lambda^0: [[-x*y + 1, x], "), "{text}");
    assert!(text.contains("idempotent mod lambda^3: yes"));
    assert!(text.contains("full: yes"));
}

#[test]
fn orbit_queries() {
    let model = scenario("circle.model");
    let out = run(&["orbit", &model, "(1/2)u"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["orbit", &model, "-2u"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "t0 = [-2u]: integral\n");
    assert_eq!(run(&["orbit", &model, "[u, u]"]).status.code(), Some(2));
}
