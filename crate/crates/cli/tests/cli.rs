use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperklein")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn roundtrip_reports_all_equivalent() {
    let o = run(&["roundtrip", "etale_klein", "--g", "2", "--count", "100", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("100/100 equivalent"));
}

#[test]
fn fiber_prints_the_count() {
    let o = run(&["fiber", "b4", "--g", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("15"));
    let o = run(&["fiber", "b4", "--g", "3"]);
    assert_eq!(stdout(&o).lines().next(), Some("28"));
}

#[test]
fn degenerate_config_exits_2() {
    let cfg = r#"{"case":"etale_klein","points":["0","1","1","3","4","5"],
        "roles":{"0":["W1"],"1":["W2"],"2":["W3"],"3":["W4","X"],"4":["W5","Y"],"5":["W6","Z"]}}"#;
    let o = run(&["tower", "build", "--input", cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("degenerate configuration"), "{}", stderr(&o));
}

#[test]
fn malformed_json_has_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"case\": \"mixed4\",\n \"points\": [\"1\", }").unwrap();
    let o = run(&["tower", "build", "--input", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2 column"), "{}", stderr(&o));
}

#[test]
fn datum_inverts_and_tampering_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("datum.json");
    let o = run(&["prym", "datum", "--case", "branched12", "--g", "2", "--seed", "4", "-o", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["invert", "branched12", "--input", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["case"], "branched12");

    let mut d: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    d["gluing"].as_array_mut().unwrap().remove(0);
    std::fs::write(&path, d.to_string()).unwrap();
    let o = run(&["invert", "branched12", "--input", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not in the image"), "{}", stderr(&o));
}

#[test]
fn outputs_are_byte_reproducible() {
    for args in [
        &["prym", "datum", "--case", "mixed8", "--g", "3", "--seed", "9"][..],
        &["tower", "build", "--case", "mixed4", "--g", "2", "-f", "dot"],
        &["witness", "b2", "--g", "2", "--seed", "5"],
        &["roundtrip", "mixed4", "--g", "2", "--count", "10", "--seed", "3", "-f", "json"],
    ] {
        assert_eq!(run(args).stdout, run(args).stdout, "{args:?}");
    }
}

#[test]
fn emitted_json_reparses() {
    let o = run(&["tower", "build", "--case", "etale_klein", "--g", "2"]);
    let text = stdout(&o);
    let v = run(&["tower", "validate", "--input", &text]);
    assert_eq!(v.status.code(), Some(0), "{}", stderr(&v));
    let tower = hyperklein::Tower::from_json(&text).unwrap();
    let reparsed: serde_json::Value = serde_json::from_str(&tower.to_json()).unwrap();
    assert_eq!(reparsed, serde_json::from_str::<serde_json::Value>(&text).unwrap());

    let o = run(&["prym", "datum", "--case", "mixed4", "--g", "2", "--seed", "2"]);
    let d = hyperklein::PrymDatum::from_json(&stdout(&o)).unwrap();
    assert_eq!(d.to_json() + "\n", stdout(&o));
}

#[test]
fn table_and_dot_formats() {
    let o = run(&["prym", "orders", "--case", "branched12", "--g", "1", "-f", "table"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("|E[2]|"));
    let o = run(&["tower", "build", "--case", "etale_klein", "--g", "2", "-f", "dot"]);
    assert!(stdout(&o).starts_with("digraph"));
    let o = run(&["prym", "delta", "--case", "mixed4", "--g", "1", "-f", "table"]);
    assert_eq!(stdout(&o).trim(), "1 1 1 2 4");
    let o = run(&["torsion", "span", "--labels", "x", "--gen", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn torsion_verbs() {
    let o = run(&["torsion", "pair", "--labels", "1,2,3,x,y,z", "--a", "x y", "--b", "y z"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["weil_pairing"], -1);
    assert_eq!(v["klein_type"], "NonIsotropicKlein");
    let o = run(&["torsion", "intersect", "--labels", "1,2,3,4,5,6,7,8", "--left", "1 2;3 4", "--right", "1 2;5 6"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["order"], "2");
    let o = run(&["torsion", "pair", "--labels", "1,2,3,x,y,z", "--a", "x", "--b", "y z"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verification_verbs() {
    assert_eq!(run(&["idempotents", "verify"]).status.code(), Some(0));
    let o = run(&["family", "verify", "--a", "3,5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["family"]["genus"], 3);
    assert_eq!(run(&["family", "verify", "--a", "2"]).status.code(), Some(2));
    assert_eq!(run(&["fiber", "b4", "--g", "1"]).status.code(), Some(2));
}
