use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pseudorot"));
    c.env_remove("PSEUDOROT_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pseudorot-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_translation(dir: &Path, name: &str, x: &str, y: &str) -> String {
    let p = dir.join(name);
    std::fs::write(
        &p,
        format!(r#"{{"schema_version": 1, "generators": [{{"type": "translation", "v": [{x}, {y}]}}]}}"#),
    )
    .unwrap();
    p.to_string_lossy().into_owned()
}

fn value_after(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no `{key}` in\n{text}"));
    line[key.len()..].split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn classify_examples() {
    let o = run(&["classify", "--omega", "rat:1/3,2/5"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("class: rational vector"));

    let o = run(&["classify", "--omega", "surd:sqrt2-1,1/2", "--relation", "0,1,-1,2"]);
    let s = stdout(&o);
    assert!(o.status.success(), "{s}");
    assert!(s.contains("character number: 2"));
    assert!(s.contains("character vectors: (1, 0), (-1, 0)"));

    let o = run(&["classify", "--liouville", "growth=q^q,stages=2"]);
    let s = stdout(&o);
    assert!(o.status.success(), "{s}");
    let scores: Vec<f64> = s
        .lines()
        .skip_while(|l| !l.starts_with("j,"))
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(scores.len(), 2);
    assert!(scores[1] < scores[0] && scores[1] < -2.0, "{scores:?}");

    assert_eq!(run(&["classify", "--omega", "1/0,1"]).status.code(), Some(2));
}

#[test]
fn build_first_stage_is_the_base_translation() {
    let dir = scratch("ak1");
    let out = dir.join("f1.json");
    let o = run(&["build-ak", "--stages", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let gens = doc["generators"].as_array().unwrap();
    assert_eq!(gens.len(), 1);
    assert_eq!(gens[0]["type"], "translation");
    assert_eq!(gens[0]["v"], serde_json::json!(["1/100", "1/10"]));
    assert_eq!(doc["metadata"]["q"], "100");
    assert!(dir.join("f1.report.txt").exists());
}

#[test]
fn budget_refusal() {
    let o = run(&["build-ak", "--stages", "99"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget refusal"));
}

#[test]
fn second_stage_pipeline() {
    let dir = scratch("ak2");
    let map = dir.join("f2.json");
    let map_s = map.to_str().unwrap();
    let o = run(&["build-ak", "--stages", "2", "--out", map_s]);
    let s = stdout(&o);
    assert!(o.status.success(), "{s}");
    let sep: f64 = s
        .split("separation = ")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(sep > 1e-3);

    let o = run(&["measure", "--map", map_s, "--what", "deviation", "--csv", dir.join("dev.csv").to_str().unwrap()]);
    let s = stdout(&o);
    assert!(o.status.success(), "{s}");
    assert!(value_after(&s, "kappa_hat: ") < 10.0);

    let o = run(&["verify", "--map", map_s, "--prop", "displacement", "--power", "100", "--discs", "30"]);
    let s = stdout(&o);
    assert!(o.status.success(), "{s}");
    assert!(s.contains("alarms: 0"));

    // the first power violates the area hypothesis for every simple disc
    let o = run(&["verify", "--map", map_s, "--prop", "displacement", "--discs", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn measure_and_verify_translations() {
    let dir = scratch("tr");
    let t = write_translation(&dir, "t.json", "\"3/10\"", "\"7/10\"");
    let o = run(&["measure", "--map", &t, "--what", "rotation"]);
    assert!(stdout(&o).contains("exact: (3/10, 7/10)"));
    let sheared = dir.join("sheared.json");
    std::fs::write(
        &sheared,
        r#"{"schema_version": 1, "generators": [{"type": "shear_y", "profile": {"period": "1/1",
            "bumps": [{"center": 0.5, "half_width": 0.2, "amplitude": 0.1}]}},
            {"type": "translation", "v": ["3/10", "7/10"]}]}"#,
    )
    .unwrap();
    let o = run(&["measure", "--map", sheared.to_str().unwrap(), "--what", "rotation"]);
    assert!(o.status.success());
    assert!(!stdout(&o).contains("exact:"));

    let tiny = write_translation(&dir, "tiny.json", "\"1/1000000\"", "0");
    let o = run(&["verify", "--map", &tiny, "--prop", "c0bound"]);
    assert!(o.status.success(), "{}", stdout(&o));

    let half = write_translation(&dir, "half.json", "0.5", "0");
    let o = run(&["verify", "--map", &half, "--prop", "kac", "--disc", "rect:0.25,0.5,0.2,0.3"]);
    let s = stdout(&o);
    assert!(o.status.success(), "{s}");
    assert!((value_after(&s, "kac estimate: ") - 2.0 * 0.24).abs() < 1e-12);

    let g = write_translation(&dir, "g.json", "\"1/7\"", "\"1/3\"");
    let o = run(&["verify", "--map", &t, "--prop", "centralizer", "--g", &g, "--iterations", "50"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let shear = dir.join("shear.json");
    std::fs::write(
        &shear,
        r#"{"schema_version": 1, "generators": [{"type": "shear_x", "profile": {"period": "1/1",
            "bumps": [{"center": 0.5, "half_width": 0.2, "amplitude": 0.1}]}}]}"#,
    )
    .unwrap();
    let o = run(&["verify", "--map", &t, "--prop", "centralizer", "--g", shear.to_str().unwrap(), "--iterations", "50"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn rigidity_on_golden_translation_finds_fibonacci_minimum() {
    let dir = scratch("gold");
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let t = write_translation(&dir, "g.json", &format!("{g:?}"), &format!("{:?}", g * g));
    let o = run(&["measure", "--map", &t, "--what", "rigidity", "--n-max", "1000", "--grid", "8"]);
    let s = stdout(&o);
    assert!(o.status.success(), "{s}");
    let oracle = (1..=1000u64)
        .min_by(|a, b| {
            let d = |n: u64| {
                let f = |x: f64| (x * n as f64 - (x * n as f64).round()).abs();
                f(g).hypot(f(g * g))
            };
            d(*a).total_cmp(&d(*b))
        })
        .unwrap();
    assert!(s.contains(&format!("best n: {oracle} ")), "{oracle}\n{s}");
    assert!([1u64, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987].contains(&oracle));
}

#[test]
fn deterministic_outputs_and_seed_sources() {
    let dir = scratch("det");
    let t = write_translation(&dir, "t.json", "\"1/1000\"", "\"1/1300\"");
    let go = |extra: &[&str], env: Option<&str>| {
        let mut c = bin();
        c.args(["verify", "--map", &t, "--prop", "displacement", "--discs", "9"]).args(extra);
        if let Some(s) = env {
            c.env("PSEUDOROT_SEED", s);
        }
        let o = c.output().unwrap();
        assert!(o.status.success(), "{}", stdout(&o));
        o.stdout
    };
    let a = go(&["--seed", "11"], None);
    assert_eq!(a, go(&["--seed", "11"], None));
    assert_eq!(a, go(&[], Some("11")));
    let cfg = dir.join("c.json");
    std::fs::write(&cfg, r#"{"seed": 11}"#).unwrap();
    assert_eq!(a, go(&["--config", cfg.to_str().unwrap()], Some("3")));
    assert_ne!(a, go(&["--seed", "12"], None));
}

#[test]
fn config_errors_and_help() {
    let dir = scratch("cfg");
    let cfg = dir.join("bad.json");
    std::fs::write(&cfg, r#"{"tolerance": 2.0}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "classify", "--omega", "golden"]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&cfg, r#"{"grdi": 8}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "classify", "--omega", "golden"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["measure", "--map", "/nonexistent.json", "--what", "rotation"]).status.code(), Some(2));
    let o = run(&["measure", "--help"]);
    assert!(stdout(&o).contains("n,dev_x,dev_y,norm,proj_v"));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["--grid", "1", "classify", "--omega", "golden"]).status.code(), Some(2));
}
